#![allow(dead_code)]

use collab_core::seed::{rng_for, Stream};
use collab_core::DirectedGraph;
use rand::Rng;

/// Directed graph with heterogeneous degrees: node `v` gets an out-degree
/// scaled by a per-node activity level, targets chosen with a bias toward
/// low-index nodes.
pub fn random_graph(n: usize, mean_out: f64, seed: u64) -> DirectedGraph {
    let mut rng = rng_for(seed, Stream::Landscape);
    let mut edges = Vec::new();
    for s in 0..n {
        let activity: f64 = 0.3 + 1.7 * rng.random::<f64>();
        let m = ((mean_out * activity).round() as usize).min(n - 1);
        for _ in 0..m {
            let u: f64 = rng.random();
            let t = ((u * u) * n as f64) as usize % n;
            if t != s {
                edges.push((s, t));
            }
        }
    }
    DirectedGraph::from_edges(n, &edges).unwrap()
}

/// Textbook Ford-Fulkerson with DFS augmenting paths on an adjacency matrix.
pub fn dfs_max_flow(g: &DirectedGraph, s: usize, t: usize) -> u64 {
    let n = g.node_count();
    let mut cap = vec![vec![0i64; n]; n];
    for (a, b) in g.edges() {
        cap[a][b] += 1;
    }
    fn augment(cap: &mut [Vec<i64>], v: usize, t: usize, seen: &mut [bool]) -> bool {
        if v == t {
            return true;
        }
        seen[v] = true;
        for w in 0..cap.len() {
            if cap[v][w] > 0 && !seen[w] && augment(cap, w, t, seen) {
                cap[v][w] -= 1;
                cap[w][v] += 1;
                return true;
            }
        }
        false
    }
    let mut flow = 0;
    while augment(&mut cap, s, t, &mut vec![false; n]) {
        flow += 1;
    }
    flow
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

pub fn mean_sd(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    (m, (xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt())
}
