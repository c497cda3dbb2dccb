//! Structural measures on directed graphs: mean degree, degree skewness,
//! characteristic path length with connected fraction, and mean min-cut.
//!
//! Path length and min-cut have exact all-pairs forms and stratified sampling
//! estimators. Strata are equal-count groups of nodes ranked by total degree
//! (ties by node id).

use std::collections::VecDeque;

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::UnitFlow;
use crate::graph::DirectedGraph;
use crate::seed::{rng_for, SimRng, Stream};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Direction {
    In,
    Out,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SamplingPlan {
    pub strata: usize,
    pub samples_per_stratum: usize,
    pub seed: u64,
}

impl Default for SamplingPlan {
    fn default() -> Self {
        Self {
            strata: 12,
            samples_per_stratum: 4,
            seed: 0,
        }
    }
}

impl SamplingPlan {
    pub fn new(samples_per_stratum: usize, seed: u64) -> Self {
        Self {
            samples_per_stratum,
            seed,
            ..Self::default()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.strata == 0 || self.samples_per_stratum == 0 {
            return Err(Error::InvalidConfig(
                "sampling plan needs at least one stratum and one sample per stratum".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Estimation {
    Exact,
    Sampled(SamplingPlan),
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathStats {
    /// `None` when no ordered pair is connected.
    pub mean_path_length: Option<f64>,
    pub connected_fraction: f64,
    pub sources: usize,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MinCutStats {
    pub mean_min_cut: f64,
    pub pairs: usize,
    /// Pair slots whose sampled source reaches no node of the slot's target
    /// stratum. They contribute no pair.
    pub unreachable_slots: usize,
}

pub fn mean_degree(g: &DirectedGraph) -> Result<f64> {
    if g.node_count() == 0 {
        return Err(Error::EmptyGraph);
    }
    Ok(g.edge_count() as f64 / g.node_count() as f64)
}

pub fn degrees(g: &DirectedGraph, dir: Direction) -> Vec<usize> {
    (0..g.node_count())
        .map(|v| match dir {
            Direction::In => g.in_degree(v),
            Direction::Out => g.out_degree(v),
        })
        .collect()
}

/// Adjusted Fisher-Pearson sample skewness `G1` of a sample.
pub fn sample_skewness(xs: &[f64]) -> Result<f64> {
    let n = xs.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("skewness needs >= 3 values, got {n}")));
    }
    let nf = n as f64;
    let mean = xs.iter().sum::<f64>() / nf;
    let (m2, m3) = xs.iter().fold((0.0, 0.0), |(m2, m3), &x| {
        let d = x - mean;
        (m2 + d * d, m3 + d * d * d)
    });
    let (m2, m3) = (m2 / nf, m3 / nf);
    if m2 <= 1e-12 * mean.abs().max(1.0).powi(2) {
        return Err(Error::ZeroVariance);
    }
    let g1 = m3 / m2.powf(1.5);
    Ok(g1 * (nf * (nf - 1.0)).sqrt() / (nf - 2.0))
}

pub fn degree_skewness(g: &DirectedGraph, dir: Direction) -> Result<f64> {
    let xs: Vec<f64> = degrees(g, dir).into_iter().map(|d| d as f64).collect();
    sample_skewness(&xs)
}

/// Node ids grouped into `strata` equal-count degree quantiles, lowest degree
/// first. Group sizes differ by at most one.
pub fn degree_strata(g: &DirectedGraph, strata: usize) -> Vec<Vec<usize>> {
    let n = g.node_count();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by_key(|&v| (g.in_degree(v) + g.out_degree(v), v));
    let groups = strata.min(n).max(1);
    let (base, extra) = (n / groups, n % groups);
    let mut out = Vec::with_capacity(groups);
    let mut start = 0;
    for h in 0..groups {
        let len = base + usize::from(h < extra);
        out.push(order[start..start + len].to_vec());
        start += len;
    }
    out
}

/// BFS distances from `s`; returns (sum of distances, reachable nodes other
/// than `s`). `dist` is scratch space of length `node_count`.
fn bfs_sums(g: &DirectedGraph, s: usize, dist: &mut [u32], queue: &mut VecDeque<usize>) -> (u64, u64) {
    dist.fill(u32::MAX);
    dist[s] = 0;
    queue.clear();
    queue.push_back(s);
    let (mut total, mut reached) = (0u64, 0u64);
    while let Some(v) = queue.pop_front() {
        let d = dist[v] + 1;
        for &w in g.out_neighbors(v) {
            if dist[w] == u32::MAX {
                dist[w] = d;
                total += d as u64;
                reached += 1;
                queue.push_back(w);
            }
        }
    }
    (total, reached)
}

fn reachable_from(g: &DirectedGraph, s: usize, dist: &mut [u32], queue: &mut VecDeque<usize>) {
    bfs_sums(g, s, dist, queue);
}

/// Characteristic path length over connected ordered pairs, and the fraction
/// of ordered pairs that are connected.
pub fn path_length(g: &DirectedGraph, mode: Estimation) -> Result<PathStats> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut dist = vec![0u32; n];
    let mut queue = VecDeque::new();
    let all_pairs = (n as f64) * (n as f64 - 1.0);

    let (dist_total, conn_total, sources) = match mode {
        Estimation::Exact => {
            let (mut d, mut c) = (0u64, 0u64);
            for s in 0..n {
                let (ds, cs) = bfs_sums(g, s, &mut dist, &mut queue);
                d += ds;
                c += cs;
            }
            (d as f64, c as f64, n)
        }
        Estimation::Sampled(plan) => {
            plan.validate()?;
            let mut rng = rng_for(plan.seed, Stream::Sampling);
            let (mut d, mut c, mut used) = (0.0, 0.0, 0);
            for stratum in degree_strata(g, plan.strata) {
                let take = plan.samples_per_stratum.min(stratum.len());
                let weight = stratum.len() as f64 / take as f64;
                for ix in index::sample(&mut rng, stratum.len(), take) {
                    let (ds, cs) = bfs_sums(g, stratum[ix], &mut dist, &mut queue);
                    d += weight * ds as f64;
                    c += weight * cs as f64;
                    used += 1;
                }
            }
            (d, c, used)
        }
    };

    let connected_fraction = if n > 1 { conn_total / all_pairs } else { 0.0 };
    Ok(PathStats {
        mean_path_length: (conn_total > 0.0).then(|| dist_total / conn_total),
        connected_fraction,
        sources,
    })
}

/// Mean size of the minimum st-cut over ordered pairs with an `s -> t` path.
pub fn mean_min_cut(g: &DirectedGraph, mode: Estimation) -> Result<MinCutStats> {
    let n = g.node_count();
    if n == 0 {
        return Err(Error::EmptyGraph);
    }
    let mut flow = UnitFlow::new(g);
    let mut dist = vec![0u32; n];
    let mut queue = VecDeque::new();

    match mode {
        Estimation::Exact => {
            let (mut total, mut pairs) = (0u64, 0usize);
            for s in 0..n {
                reachable_from(g, s, &mut dist, &mut queue);
                for t in 0..n {
                    if t != s && dist[t] != u32::MAX {
                        total += flow.max_flow(s, t);
                        pairs += 1;
                    }
                }
            }
            if pairs == 0 {
                return Err(Error::NoConnectedPairs);
            }
            Ok(MinCutStats {
                mean_min_cut: total as f64 / pairs as f64,
                pairs,
                unreachable_slots: 0,
            })
        }
        Estimation::Sampled(plan) => {
            plan.validate()?;
            sampled_min_cut(g, &plan, &mut flow, &mut dist, &mut queue)
        }
    }
}

/// Each stratum is the source of `samples_per_stratum` pair slots, and the
/// target strata of all slots are a shuffled list holding every stratum
/// `samples_per_stratum` times. A slot draws its source uniformly from the
/// source stratum and its target uniformly from the nodes of the target
/// stratum that the source reaches. The slot is weighted by the number of
/// such reachable targets, which makes both the weighted cut total and the
/// weight total unbiased for their all-pairs counterparts; the estimate is
/// their ratio.
fn sampled_min_cut(
    g: &DirectedGraph,
    plan: &SamplingPlan,
    flow: &mut UnitFlow,
    dist: &mut [u32],
    queue: &mut VecDeque<usize>,
) -> Result<MinCutStats> {
    let strata = degree_strata(g, plan.strata);
    let h = strata.len();
    let m = plan.samples_per_stratum;
    let mut rng: SimRng = rng_for(plan.seed, Stream::Sampling);

    let mut targets: Vec<usize> = (0..h * m).map(|q| q % h).collect();
    targets.shuffle(&mut rng);

    let (mut weighted, mut weight) = (0.0, 0.0);
    let (mut pairs, mut unreachable) = (0usize, 0usize);
    let mut reachable = Vec::new();
    for (q, &ht) in targets.iter().enumerate() {
        let src = &strata[q / m];
        let s = src[rng.random_range(0..src.len())];
        reachable_from(g, s, dist, queue);
        reachable.clear();
        reachable.extend(strata[ht].iter().copied().filter(|&t| t != s && dist[t] != u32::MAX));
        if reachable.is_empty() {
            unreachable += 1;
            continue;
        }
        let t = reachable[rng.random_range(0..reachable.len())];
        let w = src.len() as f64 * reachable.len() as f64;
        weighted += w * flow.max_flow(s, t) as f64;
        weight += w;
        pairs += 1;
    }
    if pairs == 0 {
        return Err(Error::NoConnectedPairs);
    }
    Ok(MinCutStats {
        mean_min_cut: weighted / weight,
        pairs,
        unreachable_slots: unreachable,
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum CalibratedMetric {
    PathLength,
    MinCut,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct CalibrationPoint {
    pub samples_per_stratum: usize,
    pub mean_relative_error: f64,
    pub max_relative_error: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Calibration {
    pub exact: f64,
    pub curve: Vec<CalibrationPoint>,
    /// Smallest candidate whose worst-case relative error stayed below the
    /// target.
    pub recommended: Option<usize>,
}

/// Relative error of the sampled estimator against the exact value for each
/// candidate sample size, over `repeats` independent seeds.
pub fn calibrate_sample_size(
    g: &DirectedGraph,
    metric: CalibratedMetric,
    candidates: &[usize],
    repeats: usize,
    target_error: f64,
    seed: u64,
) -> Result<Calibration> {
    if repeats == 0 || candidates.is_empty() {
        return Err(Error::InvalidConfig("calibration needs candidates and repeats".into()));
    }
    let estimate = |mode| -> Result<f64> {
        match metric {
            CalibratedMetric::PathLength => path_length(g, mode)?
                .mean_path_length
                .ok_or(Error::NoConnectedPairs),
            CalibratedMetric::MinCut => Ok(mean_min_cut(g, mode)?.mean_min_cut),
        }
    };
    let exact = estimate(Estimation::Exact)?;
    let mut curve = Vec::with_capacity(candidates.len());
    for &m in candidates {
        let mut errs = Vec::with_capacity(repeats);
        for r in 0..repeats {
            let plan = SamplingPlan::new(m, crate::seed::derive_seed(seed, &[m as u64, r as u64]));
            let est = estimate(Estimation::Sampled(plan))?;
            errs.push((est - exact).abs() / exact.abs());
        }
        curve.push(CalibrationPoint {
            samples_per_stratum: m,
            mean_relative_error: errs.iter().sum::<f64>() / repeats as f64,
            max_relative_error: errs.iter().cloned().fold(0.0, f64::max),
        });
    }
    let recommended = curve
        .iter()
        .filter(|p| p.max_relative_error < target_error)
        .map(|p| p.samples_per_stratum)
        .min();
    Ok(Calibration {
        exact,
        curve,
        recommended,
    })
}

/// One row of the metrics report.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GraphReport {
    pub nodes: usize,
    pub edges: usize,
    pub mean_degree: f64,
    pub in_degree_skewness: Option<f64>,
    pub out_degree_skewness: Option<f64>,
    pub mean_path_length: Option<f64>,
    pub connected_fraction: f64,
    pub mean_min_cut: Option<f64>,
}

/// Computes every measure, using `path_mode` and `cut_mode` for the two
/// expensive ones. Degenerate skewness and empty pair sets become `None`.
pub fn graph_report(g: &DirectedGraph, path_mode: Estimation, cut_mode: Estimation) -> Result<GraphReport> {
    let path = path_length(g, path_mode)?;
    let cut = match mean_min_cut(g, cut_mode) {
        Ok(c) => Some(c.mean_min_cut),
        Err(Error::NoConnectedPairs) => None,
        Err(e) => return Err(e),
    };
    Ok(GraphReport {
        nodes: g.node_count(),
        edges: g.edge_count(),
        mean_degree: mean_degree(g)?,
        in_degree_skewness: degree_skewness(g, Direction::In).ok(),
        out_degree_skewness: degree_skewness(g, Direction::Out).ok(),
        mean_path_length: path.mean_path_length,
        connected_fraction: path.connected_fraction,
        mean_min_cut: cut,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle3() -> DirectedGraph {
        DirectedGraph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap()
    }

    fn complete(m: usize) -> DirectedGraph {
        let edges: Vec<_> = (0..m)
            .flat_map(|a| (0..m).filter(move |&b| b != a).map(move |b| (a, b)))
            .collect();
        DirectedGraph::from_edges(m, &edges).unwrap()
    }

    #[test]
    fn mean_degree_cases() {
        assert_eq!(mean_degree(&cycle3()).unwrap(), 1.0);
        assert_eq!(mean_degree(&complete(6)).unwrap(), 5.0);
        assert!(matches!(
            mean_degree(&DirectedGraph::from_edges(0, &[]).unwrap()),
            Err(Error::EmptyGraph)
        ));
    }

    #[test]
    fn skewness_cases() {
        // in-degrees 1, 2, 3, 2 are symmetric around their mean of 2
        let sym = DirectedGraph::from_edges(
            4,
            &[(1, 0), (0, 1), (2, 1), (0, 2), (1, 2), (3, 2), (0, 3), (2, 3)],
        )
        .unwrap();
        assert_eq!(degrees(&sym, Direction::In), vec![1, 2, 3, 2]);
        assert!(degree_skewness(&sym, Direction::In).unwrap().abs() < 1e-12);

        let star_edges: Vec<_> = (1..=20).map(|l| (0, l)).collect();
        let star = DirectedGraph::from_edges(21, &star_edges).unwrap();
        assert!(degree_skewness(&star, Direction::Out).unwrap() > 4.0);

        assert!(matches!(degree_skewness(&cycle3(), Direction::Out), Err(Error::ZeroVariance)));
        let two = DirectedGraph::from_edges(2, &[(0, 1)]).unwrap();
        assert!(degree_skewness(&two, Direction::Out).is_err());
    }

    #[test]
    fn cycle_path_length() {
        let p = path_length(&cycle3(), Estimation::Exact).unwrap();
        assert_eq!(p.mean_path_length, Some(1.5));
        assert_eq!(p.connected_fraction, 1.0);
    }

    #[test]
    fn isolated_nodes() {
        let g = DirectedGraph::from_edges(2, &[]).unwrap();
        let p = path_length(&g, Estimation::Exact).unwrap();
        assert_eq!(p.mean_path_length, None);
        assert_eq!(p.connected_fraction, 0.0);
        assert!(matches!(mean_min_cut(&g, Estimation::Exact), Err(Error::NoConnectedPairs)));
    }

    #[test]
    fn cycle_min_cut() {
        let c = mean_min_cut(&cycle3(), Estimation::Exact).unwrap();
        assert_eq!(c.mean_min_cut, 1.0);
        assert_eq!(c.pairs, 6);
    }

    #[test]
    fn strata_are_balanced_and_ordered() {
        let edges: Vec<_> = (1..30).map(|l| (0, l)).chain((1..29).map(|l| (l, l + 1))).collect();
        let g = DirectedGraph::from_edges(30, &edges).unwrap();
        let s = degree_strata(&g, 12);
        assert_eq!(s.len(), 12);
        let sizes: Vec<usize> = s.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        assert_eq!(sizes.iter().sum::<usize>(), 30);
        assert_eq!(s.last().unwrap().last(), Some(&0));
        // fewer nodes than strata
        assert_eq!(degree_strata(&cycle3(), 12).len(), 3);
    }

    #[test]
    fn sampling_all_nodes_is_exact() {
        let g = complete(7);
        let exact = path_length(&g, Estimation::Exact).unwrap();
        let sampled = path_length(&g, Estimation::Sampled(SamplingPlan::new(10, 1))).unwrap();
        assert_eq!(exact.mean_path_length, sampled.mean_path_length);
        assert!((exact.connected_fraction - sampled.connected_fraction).abs() < 1e-12);
    }

    #[test]
    fn invalid_plan_rejected() {
        let plan = SamplingPlan {
            strata: 0,
            samples_per_stratum: 1,
            seed: 0,
        };
        assert!(path_length(&cycle3(), Estimation::Sampled(plan)).is_err());
    }

    #[test]
    fn calibration_recommends_a_size() {
        let g = complete(12);
        let cal = calibrate_sample_size(&g, CalibratedMetric::MinCut, &[1, 2], 3, 0.1, 5).unwrap();
        assert_eq!(cal.exact, 11.0);
        assert_eq!(cal.recommended, Some(1));
    }
}
