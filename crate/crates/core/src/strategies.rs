//! Individual and social learning rules.
//!
//! Individual learning is single-flip hill climbing, either over the whole
//! string (global) or restricted to an agent's concern and scored by the mean
//! payoff of the concern loci (local). Social rules are best-neighbor,
//! conformity, and local majority.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::{IncrementalEval, NkModel, Solution};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum StrategyKind {
    #[serde(rename = "Best+I")]
    BestI,
    #[serde(rename = "Conf+I")]
    ConfI,
    #[serde(rename = "Best+LI")]
    BestLI,
    #[serde(rename = "Conf+LI")]
    ConfLI,
    #[serde(rename = "LMaj+LI")]
    LMajLI,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SocialRule {
    BestNeighbor,
    Conformity,
    LocalMajority,
}

impl StrategyKind {
    pub const ALL: [StrategyKind; 5] = [
        StrategyKind::BestI,
        StrategyKind::ConfI,
        StrategyKind::BestLI,
        StrategyKind::ConfLI,
        StrategyKind::LMajLI,
    ];

    pub fn name(self) -> &'static str {
        match self {
            StrategyKind::BestI => "Best+I",
            StrategyKind::ConfI => "Conf+I",
            StrategyKind::BestLI => "Best+LI",
            StrategyKind::ConfLI => "Conf+LI",
            StrategyKind::LMajLI => "LMaj+LI",
        }
    }

    pub fn social(self) -> SocialRule {
        match self {
            StrategyKind::BestI | StrategyKind::BestLI => SocialRule::BestNeighbor,
            StrategyKind::ConfI | StrategyKind::ConfLI => SocialRule::Conformity,
            StrategyKind::LMajLI => SocialRule::LocalMajority,
        }
    }

    /// Whether the individual stage is restricted to the agent's concern.
    pub fn local_individual(self) -> bool {
        !matches!(self, StrategyKind::BestI | StrategyKind::ConfI)
    }
}

impl fmt::Display for StrategyKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for StrategyKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        StrategyKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s.trim()))
            .ok_or_else(|| Error::UnknownStrategy(s.to_string()))
    }
}

/// How a local-majority vote resolves an exact tie.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TieRule {
    #[default]
    KeepIncumbent,
    Coin,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StrategyConfig {
    pub kind: StrategyKind,
    pub neighbor_sample_size: usize,
    pub majority_tie: TieRule,
}

impl StrategyConfig {
    pub fn new(kind: StrategyKind) -> Self {
        Self {
            kind,
            neighbor_sample_size: 3,
            majority_tie: TieRule::KeepIncumbent,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.neighbor_sample_size == 0 {
            return Err(Error::InvalidConfig("neighbor sample size must be >= 1".into()));
        }
        Ok(())
    }
}

/// Index of the single flip with the largest fitness gain, if that gain is
/// positive. Ties go to the lowest index.
pub fn best_global_flip(model: &NkModel, s: &Solution) -> Result<Option<usize>> {
    let eval = IncrementalEval::new(model, s)?;
    let mut best: Option<(usize, f64)> = None;
    for j in 0..model.n() {
        let gain = eval.flip_gain(j);
        if gain > 0.0 && best.is_none_or(|(_, g)| gain > g) {
            best = Some((j, gain));
        }
    }
    Ok(best.map(|(j, _)| j))
}

/// One step of global hill climbing. Returns `s` unchanged at a local optimum.
pub fn individual_step_global(model: &NkModel, s: &Solution) -> Result<Solution> {
    Ok(match best_global_flip(model, s)? {
        Some(j) => s.flipped(j),
        None => s.clone(),
    })
}

/// Concern locus whose flip most improves the concern's mean payoff, if any
/// flip strictly improves it. Ties go to the earliest concern slot.
pub(crate) fn best_local_flip_unchecked(
    model: &NkModel,
    bits: &mut [bool],
    concern: &[usize],
) -> Option<usize> {
    let current = model.local_score_unchecked(bits, concern);
    let mut best: Option<(usize, f64)> = None;
    for &j in concern {
        bits[j] = !bits[j];
        let score = model.local_score_unchecked(bits, concern);
        bits[j] = !bits[j];
        if score > current && best.is_none_or(|(_, b)| score > b) {
            best = Some((j, score));
        }
    }
    best.map(|(j, _)| j)
}

pub fn best_local_flip(model: &NkModel, s: &Solution, concern: &[usize]) -> Result<Option<usize>> {
    if s.len() != model.n() {
        return Err(Error::LengthMismatch {
            expected: model.n(),
            got: s.len(),
        });
    }
    model.check_loci(concern)?;
    let mut bits = s.bits().to_vec();
    Ok(best_local_flip_unchecked(model, &mut bits, concern))
}

/// One step of hill climbing restricted to `concern`.
pub fn individual_step_local(model: &NkModel, s: &Solution, concern: &[usize]) -> Result<Solution> {
    Ok(match best_local_flip(model, s, concern)? {
        Some(j) => s.flipped(j),
        None => s.clone(),
    })
}

fn sample_neighbors<R: Rng + ?Sized>(neighbors: &[usize], sample_size: usize, rng: &mut R) -> Vec<usize> {
    let m = sample_size.min(neighbors.len());
    index::sample(rng, neighbors.len(), m)
        .into_iter()
        .map(|i| neighbors[i])
        .collect()
}

/// Best-neighbor rule. Samples up to `sample_size` neighbors without
/// replacement and returns the one whose solution to adopt: the sampled
/// neighbor with the highest fitness, if that fitness strictly exceeds the
/// agent's own. Equal-best neighbors are chosen between uniformly.
pub fn social_step_best_neighbor<R: Rng + ?Sized>(
    agent: usize,
    fitness: &[f64],
    neighbors: &[usize],
    sample_size: usize,
    rng: &mut R,
) -> Option<usize> {
    if neighbors.is_empty() {
        return None;
    }
    let sampled = sample_neighbors(neighbors, sample_size, rng);
    let top = sampled.iter().map(|&b| fitness[b]).fold(f64::NEG_INFINITY, f64::max);
    if top <= fitness[agent] {
        return None;
    }
    let tied: Vec<usize> = sampled.into_iter().filter(|&b| fitness[b] == top).collect();
    Some(match tied.len() {
        1 => tied[0],
        len => tied[rng.random_range(0..len)],
    })
}

/// Conformity rule. Samples up to `sample_size` neighbors without
/// replacement and returns a neighbor holding the most common sampled
/// solution; ties between distinct solutions are broken uniformly. Never
/// looks at fitness.
pub fn social_step_conformity<R: Rng + ?Sized>(
    solutions: &[Solution],
    neighbors: &[usize],
    sample_size: usize,
    rng: &mut R,
) -> Option<usize> {
    if neighbors.is_empty() {
        return None;
    }
    let sampled = sample_neighbors(neighbors, sample_size, rng);
    // (representative agent, count) per distinct solution, in sample order
    let mut groups: Vec<(usize, usize)> = Vec::with_capacity(sampled.len());
    for &b in &sampled {
        match groups.iter_mut().find(|(rep, _)| solutions[*rep] == solutions[b]) {
            Some(g) => g.1 += 1,
            None => groups.push((b, 1)),
        }
    }
    let top = groups.iter().map(|g| g.1).max().unwrap_or(0);
    let tied: Vec<usize> = groups.into_iter().filter(|g| g.1 == top).map(|g| g.0).collect();
    Some(match tied.len() {
        1 => tied[0],
        len => tied[rng.random_range(0..len)],
    })
}

/// One local-majority round. Every agent proposes the result of one local
/// hill-climbing step on the shared solution over its concern; each locus
/// then takes the majority of the proposed bits of the agents concerned with
/// it. Loci nobody is concerned with keep their bit.
///
/// Because a proposal differs from the shared solution in at most one bit,
/// the tally per locus reduces to counting proposed flips of that locus.
pub fn local_majority_round<R: Rng + ?Sized>(
    model: &NkModel,
    shared: &Solution,
    concerns: &[&[usize]],
    locus_agents: &[Vec<usize>],
    tie: TieRule,
    rng: &mut R,
) -> Result<Solution> {
    if shared.len() != model.n() {
        return Err(Error::LengthMismatch {
            expected: model.n(),
            got: shared.len(),
        });
    }
    let mut flip_votes = vec![0usize; model.n()];
    let mut scratch = shared.bits().to_vec();
    for concern in concerns {
        model.check_loci(concern)?;
        if let Some(j) = best_local_flip_unchecked(model, &mut scratch, concern) {
            flip_votes[j] += 1;
        }
    }
    let mut next = shared.clone();
    for (locus, &flips) in flip_votes.iter().enumerate() {
        let voters = locus_agents.get(locus).map_or(0, Vec::len);
        let stays = voters - flips;
        let flip = match flips.cmp(&stays) {
            std::cmp::Ordering::Greater => true,
            std::cmp::Ordering::Less => false,
            std::cmp::Ordering::Equal => match tie {
                _ if voters == 0 => false,
                TieRule::KeepIncumbent => false,
                TieRule::Coin => rng.random_bool(0.5),
            },
        };
        if flip {
            next.flip(locus);
        }
    }
    Ok(next)
}
