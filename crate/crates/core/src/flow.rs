//! Unit-capacity max-flow (Dinic) for minimum st-cuts.

use std::collections::VecDeque;

use crate::graph::DirectedGraph;

/// Residual network over a fixed graph; reusable across many `(s, t)` queries.
#[derive(Clone, Debug)]
pub struct UnitFlow {
    head: Vec<usize>,
    // Edge arrays; edge `e ^ 1` is the reverse of `e`.
    to: Vec<usize>,
    next: Vec<usize>,
    cap: Vec<u32>,
    init_cap: Vec<u32>,
    level: Vec<i32>,
    iter: Vec<usize>,
}

const NIL: usize = usize::MAX;

impl UnitFlow {
    pub fn new(g: &DirectedGraph) -> Self {
        let n = g.node_count();
        let m = g.edge_count();
        let mut f = Self {
            head: vec![NIL; n],
            to: Vec::with_capacity(2 * m),
            next: Vec::with_capacity(2 * m),
            cap: Vec::with_capacity(2 * m),
            init_cap: Vec::with_capacity(2 * m),
            level: vec![-1; n],
            iter: vec![NIL; n],
        };
        // Insert in reverse so that adjacency iterates in ascending order.
        let edges: Vec<(usize, usize)> = g.edges().collect();
        for &(s, t) in edges.iter().rev() {
            f.push_arc(s, t, 1);
            f.push_arc(t, s, 0);
        }
        f.cap.clone_from(&f.init_cap);
        f
    }

    fn push_arc(&mut self, from: usize, to: usize, cap: u32) {
        self.to.push(to);
        self.next.push(self.head[from]);
        self.init_cap.push(cap);
        self.head[from] = self.to.len() - 1;
    }

    fn bfs(&mut self, s: usize, t: usize) -> bool {
        self.level.fill(-1);
        self.level[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(v) = q.pop_front() {
            let mut e = self.head[v];
            while e != NIL {
                let w = self.to[e];
                if self.cap[e] > 0 && self.level[w] < 0 {
                    self.level[w] = self.level[v] + 1;
                    q.push_back(w);
                }
                e = self.next[e];
            }
        }
        self.level[t] >= 0
    }

    /// Blocking-flow augmentation, iterative to avoid deep recursion.
    fn augment(&mut self, s: usize, t: usize) -> u64 {
        let mut pushed = 0u64;
        let mut path: Vec<usize> = Vec::new();
        let mut v = s;
        loop {
            if v == t {
                // Unit capacities: every path carries exactly one unit.
                for &e in &path {
                    self.cap[e] -= 1;
                    self.cap[e ^ 1] += 1;
                }
                pushed += 1;
                path.clear();
                v = s;
                continue;
            }
            let mut advanced = false;
            while self.iter[v] != NIL {
                let e = self.iter[v];
                let w = self.to[e];
                if self.cap[e] > 0 && self.level[w] == self.level[v] + 1 {
                    path.push(e);
                    v = w;
                    advanced = true;
                    break;
                }
                self.iter[v] = self.next[e];
            }
            if advanced {
                continue;
            }
            // Dead end: retreat.
            self.level[v] = -1;
            match path.pop() {
                Some(e) => {
                    v = self.to[e ^ 1];
                    self.iter[v] = self.next[self.iter[v]];
                }
                None => return pushed,
            }
        }
    }

    /// Maximum number of edge-disjoint `s -> t` paths, which equals the size
    /// of a minimum st-cut under unit capacities.
    pub fn max_flow(&mut self, s: usize, t: usize) -> u64 {
        if s == t {
            return 0;
        }
        self.cap.clone_from(&self.init_cap);
        let mut flow = 0;
        while self.bfs(s, t) {
            self.iter.clone_from(&self.head);
            flow += self.augment(s, t);
        }
        flow
    }

    /// Nodes reachable from `s` in the residual graph of the last query;
    /// the edges leaving this set form a minimum cut.
    pub fn source_side(&self, s: usize) -> Vec<bool> {
        let mut seen = vec![false; self.head.len()];
        seen[s] = true;
        let mut stack = vec![s];
        while let Some(v) = stack.pop() {
            let mut e = self.head[v];
            while e != NIL {
                let w = self.to[e];
                if self.cap[e] > 0 && !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
                e = self.next[e];
            }
        }
        seen
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_cycle_cuts_are_one() {
        let g = DirectedGraph::from_edges(3, &[(0, 1), (1, 2), (2, 0)]).unwrap();
        let mut f = UnitFlow::new(&g);
        for s in 0..3 {
            for t in 0..3 {
                if s != t {
                    assert_eq!(f.max_flow(s, t), 1);
                }
            }
        }
    }

    #[test]
    fn two_disjoint_paths() {
        // s=0 -> 1 -> 3 and 0 -> 2 -> 3
        let g = DirectedGraph::from_edges(4, &[(0, 1), (1, 3), (0, 2), (2, 3)]).unwrap();
        let mut f = UnitFlow::new(&g);
        assert_eq!(f.max_flow(0, 3), 2);
        assert_eq!(f.max_flow(3, 0), 0);
    }

    #[test]
    fn cut_from_source_side_matches_flow() {
        let g = DirectedGraph::from_edges(
            6,
            &[(0, 1), (0, 2), (1, 2), (1, 3), (2, 4), (3, 5), (4, 5), (4, 3), (3, 2)],
        )
        .unwrap();
        let mut f = UnitFlow::new(&g);
        let flow = f.max_flow(0, 5);
        let side = f.source_side(0);
        assert!(!side[5]);
        let cut = g.edges().filter(|&(a, b)| side[a] && !side[b]).count() as u64;
        assert_eq!(flow, cut);
        assert_eq!(flow, 2);
    }

    #[test]
    fn repeated_queries_reset_state() {
        let g = DirectedGraph::from_edges(4, &[(0, 1), (1, 2), (2, 3), (0, 3)]).unwrap();
        let mut f = UnitFlow::new(&g);
        assert_eq!(f.max_flow(0, 3), 2);
        assert_eq!(f.max_flow(0, 3), 2);
        assert_eq!(f.max_flow(1, 3), 1);
    }
}
