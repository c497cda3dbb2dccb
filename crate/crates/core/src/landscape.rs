//! NK rugged landscapes.
//!
//! Each locus `i` owns a payoff table with `2^(k+1)` entries. The table index
//! is the binary number whose most significant bit is `S_i`, followed by the
//! bits of `neighbors[i]` in stored order. The global value of a string is the
//! mean of the locus payoffs, summed in locus order.

use std::fmt;
use std::path::Path;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::{rng_for, Stream};

/// A binary string of fixed length.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Solution(Vec<bool>);

impl Solution {
    pub fn new(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn random<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        Self((0..n).map(|_| rng.random::<bool>()).collect())
    }

    /// Parses a string of `0`/`1` characters.
    pub fn from_bit_str(s: &str) -> Option<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Some(false),
                '1' => Some(true),
                _ => None,
            })
            .collect::<Option<Vec<_>>>()
            .map(Self)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn bits(&self) -> &[bool] {
        &self.0
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, bit: bool) {
        self.0[i] = bit;
    }

    pub fn flip(&mut self, i: usize) {
        self.0[i] = !self.0[i];
    }

    pub fn flipped(&self, i: usize) -> Self {
        let mut s = self.clone();
        s.flip(i);
        s
    }

    pub fn hamming(&self, other: &Self) -> usize {
        self.0.iter().zip(&other.0).filter(|(a, b)| a != b).count()
    }
}

impl fmt::Display for Solution {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

/// Serialized form; the reverse dependency index is rebuilt on load.
#[derive(Serialize, Deserialize)]
struct NkModelFile {
    n: usize,
    k: usize,
    seed: u64,
    neighbors: Vec<Vec<usize>>,
    payoff_tables: Vec<Vec<f64>>,
}

/// Largest supported k. Each locus stores 2^(k+1) payoffs.
pub const MAX_K: usize = 24;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "NkModelFile", into = "NkModelFile")]
pub struct NkModel {
    n: usize,
    k: usize,
    seed: u64,
    neighbors: Vec<Vec<usize>>,
    payoff_tables: Vec<Vec<f64>>,
    /// For each locus `j`: every `(locus, mask)` whose table index contains `j`
    /// at bit `mask`. Locus `j` itself comes first.
    dependents: Vec<Vec<(usize, usize)>>,
}

impl NkModel {
    /// Draws a model from `seed`: for each locus, `k` neighbors uniformly
    /// without replacement from the other `n - 1` loci, then its payoff table.
    pub fn generate(n: usize, k: usize, seed: u64) -> Result<Self> {
        if n == 0 || k >= n || k > MAX_K {
            return Err(Error::InvalidNk { n, k });
        }
        let mut rng = rng_for(seed, Stream::Landscape);
        let mut neighbors = Vec::with_capacity(n);
        let mut payoff_tables = Vec::with_capacity(n);
        for i in 0..n {
            let nb: Vec<usize> = index::sample(&mut rng, n - 1, k)
                .into_iter()
                .map(|j| if j >= i { j + 1 } else { j })
                .collect();
            let table: Vec<f64> = (0..1usize << (k + 1)).map(|_| rng.random::<f64>()).collect();
            neighbors.push(nb);
            payoff_tables.push(table);
        }
        Self::from_parts(n, k, seed, neighbors, payoff_tables)
    }

    /// Builds a model from explicit tables, validating every invariant.
    pub fn from_parts(
        n: usize,
        k: usize,
        seed: u64,
        neighbors: Vec<Vec<usize>>,
        payoff_tables: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if n == 0 || k >= n || k > MAX_K {
            return Err(Error::InvalidNk { n, k });
        }
        if neighbors.len() != n || payoff_tables.len() != n {
            return Err(Error::InvalidConfig(format!(
                "expected {n} neighbor lists and payoff tables, got {} and {}",
                neighbors.len(),
                payoff_tables.len()
            )));
        }
        for (i, nb) in neighbors.iter().enumerate() {
            if nb.len() != k {
                return Err(Error::InvalidConfig(format!(
                    "locus {i} has {} neighbors, expected {k}",
                    nb.len()
                )));
            }
            for (a, &j) in nb.iter().enumerate() {
                if j >= n {
                    return Err(Error::LocusOutOfRange { index: j, n });
                }
                if j == i || nb[..a].contains(&j) {
                    return Err(Error::InvalidConfig(format!(
                        "locus {i} has an invalid neighbor list {nb:?}"
                    )));
                }
            }
        }
        for (i, table) in payoff_tables.iter().enumerate() {
            if table.len() != 1 << (k + 1) {
                return Err(Error::InvalidConfig(format!(
                    "payoff table {i} has {} entries, expected {}",
                    table.len(),
                    1usize << (k + 1)
                )));
            }
            if table.iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::InvalidConfig(format!(
                    "payoff table {i} has a value outside [0, 1]"
                )));
            }
        }

        let mut dependents = vec![Vec::with_capacity(k + 1); n];
        for i in 0..n {
            dependents[i].push((i, 1usize << k));
        }
        for (i, nb) in neighbors.iter().enumerate() {
            for (pos, &j) in nb.iter().enumerate() {
                dependents[j].push((i, 1usize << (k - 1 - pos)));
            }
        }

        Ok(Self {
            n,
            k,
            seed,
            neighbors,
            payoff_tables,
            dependents,
        })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn payoff_table(&self, i: usize) -> &[f64] {
        &self.payoff_tables[i]
    }

    fn check_len(&self, s: &Solution) -> Result<()> {
        if s.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: s.len(),
            });
        }
        Ok(())
    }

    #[inline]
    fn table_index(&self, bits: &[bool], i: usize) -> usize {
        self.neighbors[i]
            .iter()
            .fold(bits[i] as usize, |acc, &j| (acc << 1) | bits[j] as usize)
    }

    #[inline]
    fn value_unchecked(&self, bits: &[bool], i: usize) -> f64 {
        #[cfg(test)]
        eval_counter::bump();
        self.payoff_tables[i][self.table_index(bits, i)]
    }

    /// Payoff of locus `i` under `s`.
    pub fn locus_value(&self, s: &Solution, i: usize) -> Result<f64> {
        self.check_len(s)?;
        if i >= self.n {
            return Err(Error::LocusOutOfRange { index: i, n: self.n });
        }
        Ok(self.value_unchecked(s.bits(), i))
    }

    /// Mean payoff over all loci.
    pub fn fitness(&self, s: &Solution) -> Result<f64> {
        self.check_len(s)?;
        Ok(self.fitness_unchecked(s.bits()))
    }

    pub(crate) fn fitness_unchecked(&self, bits: &[bool]) -> f64 {
        let sum: f64 = (0..self.n).map(|i| self.value_unchecked(bits, i)).sum();
        sum / self.n as f64
    }

    /// Mean payoff over the given loci.
    pub fn local_score(&self, s: &Solution, loci: &[usize]) -> Result<f64> {
        self.check_len(s)?;
        self.check_loci(loci)?;
        Ok(self.local_score_unchecked(s.bits(), loci))
    }

    pub(crate) fn check_loci(&self, loci: &[usize]) -> Result<()> {
        if loci.is_empty() {
            return Err(Error::EmptyLoci);
        }
        if let Some(&bad) = loci.iter().find(|&&i| i >= self.n) {
            return Err(Error::LocusOutOfRange { index: bad, n: self.n });
        }
        Ok(())
    }

    pub(crate) fn local_score_unchecked(&self, bits: &[bool], loci: &[usize]) -> f64 {
        let sum: f64 = loci.iter().map(|&i| self.value_unchecked(bits, i)).sum();
        sum / loci.len() as f64
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

impl TryFrom<NkModelFile> for NkModel {
    type Error = Error;

    fn try_from(f: NkModelFile) -> Result<Self> {
        Self::from_parts(f.n, f.k, f.seed, f.neighbors, f.payoff_tables)
    }
}

impl From<NkModel> for NkModelFile {
    fn from(m: NkModel) -> Self {
        Self {
            n: m.n,
            k: m.k,
            seed: m.seed,
            neighbors: m.neighbors,
            payoff_tables: m.payoff_tables,
        }
    }
}

/// Cached per-locus table indices and values for one solution, supporting
/// single-flip gains in `O(k)` per candidate.
#[derive(Clone, Debug)]
pub struct IncrementalEval<'m> {
    model: &'m NkModel,
    bits: Vec<bool>,
    index: Vec<usize>,
    values: Vec<f64>,
}

impl<'m> IncrementalEval<'m> {
    pub fn new(model: &'m NkModel, s: &Solution) -> Result<Self> {
        model.check_len(s)?;
        #[cfg(test)]
        eval_counter::bump();
        let bits = s.bits().to_vec();
        let index: Vec<usize> = (0..model.n).map(|i| model.table_index(&bits, i)).collect();
        let values = index
            .iter()
            .enumerate()
            .map(|(i, &ix)| model.payoff_tables[i][ix])
            .collect();
        Ok(Self {
            model,
            bits,
            index,
            values,
        })
    }

    /// Change in the summed locus payoffs if bit `j` were flipped.
    #[inline]
    pub fn flip_gain(&self, j: usize) -> f64 {
        #[cfg(test)]
        eval_counter::bump();
        self.model.dependents[j]
            .iter()
            .map(|&(l, mask)| self.model.payoff_tables[l][self.index[l] ^ mask] - self.values[l])
            .sum()
    }

    pub fn apply_flip(&mut self, j: usize) {
        self.bits[j] = !self.bits[j];
        for &(l, mask) in &self.model.dependents[j] {
            self.index[l] ^= mask;
            self.values[l] = self.model.payoff_tables[l][self.index[l]];
        }
    }

    pub fn fitness(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.model.n as f64
    }

    pub fn solution(&self) -> Solution {
        Solution(self.bits.clone())
    }
}

/// Counts objective lookups on the current thread (test builds only).
#[cfg(test)]
pub(crate) mod eval_counter {
    use std::cell::Cell;

    thread_local!(static COUNT: Cell<u64> = const { Cell::new(0) });

    pub fn bump() {
        COUNT.with(|c| c.set(c.get() + 1));
    }

    pub fn take() -> u64 {
        COUNT.with(|c| c.replace(0))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::Rng;

    /// Independent recomputation straight from the stored tables.
    fn oracle_locus(model: &NkModel, bits: &[bool], i: usize) -> f64 {
        let mut idx = 0usize;
        let k = model.k();
        if bits[i] {
            idx += 1 << k;
        }
        for (pos, &j) in model.neighbors(i).iter().enumerate() {
            if bits[j] {
                idx += 1 << (k - 1 - pos);
            }
        }
        model.payoff_table(i)[idx]
    }

    fn oracle_fitness(model: &NkModel, bits: &[bool]) -> f64 {
        let mut total = 0.0;
        for i in 0..model.n() {
            total += oracle_locus(model, bits, i);
        }
        total / model.n() as f64
    }

    fn all_strings(n: usize) -> impl Iterator<Item = Solution> {
        (0..1u32 << n).map(move |x| Solution((0..n).map(|b| (x >> b) & 1 == 1).collect()))
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(matches!(NkModel::generate(0, 0, 1), Err(Error::InvalidNk { .. })));
        assert!(matches!(NkModel::generate(4, 4, 1), Err(Error::InvalidNk { .. })));
        assert!(matches!(NkModel::generate(4, 7, 1), Err(Error::InvalidNk { .. })));
        assert!(matches!(NkModel::generate(64, 40, 1), Err(Error::InvalidNk { .. })));
    }

    #[test]
    fn paper_scale_shapes() {
        let m = NkModel::generate(250, 7, 3).unwrap();
        assert_eq!(m.n(), 250);
        for i in 0..250 {
            assert_eq!(m.payoff_table(i).len(), 256);
            let nb = m.neighbors(i);
            assert_eq!(nb.len(), 7);
            assert!(!nb.contains(&i));
            let mut sorted = nb.to_vec();
            sorted.sort_unstable();
            sorted.dedup();
            assert_eq!(sorted.len(), 7);
            assert!(m.payoff_table(i).iter().all(|v| (0.0..=1.0).contains(v)));
        }
    }

    #[test]
    fn single_locus_model() {
        let m = NkModel::generate(1, 0, 9).unwrap();
        assert_eq!(m.payoff_table(0).len(), 2);
        for bit in [false, true] {
            let s = Solution::new(vec![bit]);
            assert_eq!(m.fitness(&s).unwrap(), m.payoff_table(0)[bit as usize]);
        }
    }

    #[test]
    fn exhaustive_small_instance_matches_oracle() {
        let m = NkModel::generate(4, 1, 42).unwrap();
        for s in all_strings(4) {
            let f = m.fitness(&s).unwrap();
            assert!((f - oracle_fitness(&m, s.bits())).abs() < 1e-15);
            let mean_locus: f64 =
                (0..4).map(|i| m.locus_value(&s, i).unwrap()).sum::<f64>() / 4.0;
            assert!((f - mean_locus).abs() < 1e-15);
        }
        let zero = Solution::zeros(4);
        let direct: f64 = (0..4).map(|i| m.payoff_table(i)[0]).sum::<f64>() / 4.0;
        assert!((m.fitness(&zero).unwrap() - direct).abs() < 1e-15);
    }

    #[test]
    fn exhaustive_n12_matches_oracle() {
        for k in [0, 3, 11] {
            let m = NkModel::generate(12, k, 100 + k as u64).unwrap();
            for s in all_strings(12) {
                assert_eq!(m.fitness(&s).unwrap(), oracle_fitness(&m, s.bits()));
            }
        }
    }

    #[test]
    fn constant_tables_give_constant_fitness() {
        let m = NkModel::from_parts(
            3,
            1,
            0,
            vec![vec![1], vec![2], vec![0]],
            vec![vec![0.5; 4]; 3],
        )
        .unwrap();
        for s in all_strings(3) {
            assert_eq!(m.fitness(&s).unwrap(), 0.5);
        }
    }

    #[test]
    fn k0_locus_depends_only_on_own_bit() {
        let m = NkModel::generate(5, 0, 2).unwrap();
        let s = Solution::from_bit_str("01101").unwrap();
        for i in 0..5 {
            assert_eq!(m.locus_value(&s, i).unwrap(), m.payoff_table(i)[s.get(i) as usize]);
        }
    }

    #[test]
    fn locality_of_locus_values() {
        let m = NkModel::generate(10, 2, 5).unwrap();
        let s = Solution::from_bit_str("0110100101").unwrap();
        for i in 0..10 {
            let v = m.locus_value(&s, i).unwrap();
            for j in 0..10 {
                if j != i && !m.neighbors(i).contains(&j) {
                    assert_eq!(m.locus_value(&s.flipped(j), i).unwrap(), v);
                }
            }
        }
    }

    #[test]
    fn local_score_cases() {
        let m = NkModel::generate(4, 1, 42).unwrap();
        let s = Solution::from_bit_str("1010").unwrap();
        let all: Vec<usize> = (0..4).collect();
        assert_eq!(m.local_score(&s, &all).unwrap(), m.fitness(&s).unwrap());
        assert_eq!(m.local_score(&s, &[2]).unwrap(), m.locus_value(&s, 2).unwrap());
        let expected = (oracle_locus(&m, s.bits(), 0) + oracle_locus(&m, s.bits(), 2)) / 2.0;
        assert!((m.local_score(&s, &[0, 2]).unwrap() - expected).abs() < 1e-15);
        assert!(matches!(m.local_score(&s, &[]), Err(Error::EmptyLoci)));
        assert!(matches!(m.local_score(&s, &[4]), Err(Error::LocusOutOfRange { .. })));
    }

    #[test]
    fn error_paths() {
        let m = NkModel::generate(4, 1, 42).unwrap();
        let short = Solution::zeros(3);
        assert!(matches!(m.fitness(&short), Err(Error::LengthMismatch { .. })));
        assert!(matches!(
            m.locus_value(&Solution::zeros(4), 4),
            Err(Error::LocusOutOfRange { .. })
        ));
    }

    #[test]
    fn same_seed_same_model() {
        let a = NkModel::generate(50, 5, 77).unwrap();
        let b = NkModel::generate(50, 5, 77).unwrap();
        let c = NkModel::generate(50, 5, 78).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn file_round_trip_is_exact() {
        let m = NkModel::generate(20, 4, 11).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("model.json");
        m.save(&path).unwrap();
        let back = NkModel::load(&path).unwrap();
        assert_eq!(m, back);
        for (a, b) in m.payoff_tables.iter().flatten().zip(back.payoff_tables.iter().flatten()) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn corrupt_model_file_is_rejected() {
        let bad = r#"{"n":2,"k":1,"seed":0,"neighbors":[[0],[0]],"payoff_tables":[[0,0,0,0],[0,0,0,0]]}"#;
        assert!(serde_json::from_str::<NkModel>(bad).is_err());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn incremental_matches_full_recomputation(seed in any::<u64>(), n in 2usize..=64, kf in 0.0f64..1.0) {
            let k = ((n - 1).min(12) as f64 * kf) as usize;
            let m = NkModel::generate(n, k, seed).unwrap();
            let mut rng = rng_for(seed, Stream::Init);
            let s = Solution::random(n, &mut rng);
            let mut inc = IncrementalEval::new(&m, &s).unwrap();
            let mut reference = s.clone();
            for _ in 0..1000 {
                let j = rng.random_range(0..n);
                let before = m.fitness(&reference).unwrap();
                let predicted = before + inc.flip_gain(j) / n as f64;
                inc.apply_flip(j);
                reference.flip(j);
                let full = m.fitness(&reference).unwrap();
                prop_assert!((predicted - full).abs() < 1e-12);
                prop_assert!((inc.fitness() - full).abs() < 1e-12);
            }
            prop_assert_eq!(inc.solution(), reference);
        }

        #[test]
        fn fitness_in_unit_interval(seed in any::<u64>(), n in 1usize..40) {
            let m = NkModel::generate(n, n / 3, seed).unwrap();
            let s = Solution::random(n, &mut rng_for(seed, Stream::Init));
            let f = m.fitness(&s).unwrap();
            prop_assert!((0.0..=1.0).contains(&f));
            prop_assert_eq!(f, m.fitness(&s).unwrap());
        }
    }
}
