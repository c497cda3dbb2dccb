use std::collections::HashMap;
use std::io::BufRead;

use crate::error::{Error, Result};

/// Unit-weight directed graph without self-loops or parallel edges.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DirectedGraph {
    out_adj: Vec<Vec<usize>>,
    in_adj: Vec<Vec<usize>>,
}

/// Counts of lines the edge-list reader dropped.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct EdgeListStats {
    pub edges: usize,
    pub self_loops_dropped: usize,
    pub duplicates_dropped: usize,
}

#[derive(Clone, Debug)]
pub struct LabeledGraph {
    pub graph: DirectedGraph,
    /// Original node id for each node index, in first-seen order.
    pub labels: Vec<String>,
    pub stats: EdgeListStats,
}

impl DirectedGraph {
    /// Builds from `(src, dst)` pairs. Self-loops are an error; repeated edges
    /// are collapsed.
    pub fn from_edges(nodes: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut out_adj = vec![Vec::new(); nodes];
        for &(s, t) in edges {
            if s >= nodes || t >= nodes {
                return Err(Error::InvalidConfig(format!(
                    "edge ({s}, {t}) references a node outside 0..{nodes}"
                )));
            }
            if s == t {
                return Err(Error::InvalidConfig(format!("self-loop on node {s}")));
            }
            out_adj[s].push(t);
        }
        for list in &mut out_adj {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Self::with_out_adjacency(out_adj))
    }

    /// Builds from out-neighbor lists. Lists must be free of self-loops and
    /// duplicates.
    pub fn from_adjacency(mut out_adj: Vec<Vec<usize>>) -> Result<Self> {
        let n = out_adj.len();
        for (s, list) in out_adj.iter_mut().enumerate() {
            list.sort_unstable();
            if list.windows(2).any(|w| w[0] == w[1]) {
                return Err(Error::InvalidConfig(format!("parallel edges from node {s}")));
            }
            if list.iter().any(|&t| t == s || t >= n) {
                return Err(Error::InvalidConfig(format!("invalid edge from node {s}")));
            }
        }
        Ok(Self::with_out_adjacency(out_adj))
    }

    fn with_out_adjacency(out_adj: Vec<Vec<usize>>) -> Self {
        let mut in_adj = vec![Vec::new(); out_adj.len()];
        for (s, list) in out_adj.iter().enumerate() {
            for &t in list {
                in_adj[t].push(s);
            }
        }
        Self { out_adj, in_adj }
    }

    /// Reads `src dst` lines separated by whitespace or commas. Node ids are
    /// arbitrary tokens. Blank lines and `#` comments are skipped, as is a
    /// leading `src,dst`-style header whose tokens are non-numeric when every
    /// later id is numeric.
    pub fn read_edge_list<R: BufRead>(reader: R) -> Result<LabeledGraph> {
        let mut ids: HashMap<String, usize> = HashMap::new();
        let mut labels: Vec<String> = Vec::new();
        let mut raw: Vec<(usize, usize)> = Vec::new();
        let mut stats = EdgeListStats::default();
        let mut header: Option<(String, String)> = None;
        let intern = |tok: &str, ids: &mut HashMap<String, usize>, labels: &mut Vec<String>| {
            *ids.entry(tok.to_string()).or_insert_with(|| {
                labels.push(tok.to_string());
                labels.len() - 1
            })
        };

        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let toks: Vec<&str> = line
                .split(|c: char| c == ',' || c.is_whitespace())
                .filter(|t| !t.is_empty())
                .collect();
            if toks.len() < 2 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("expected `src dst`, got {line:?}"),
                });
            }
            if lineno == 0 && raw.is_empty() && header.is_none() && toks.iter().take(2).all(|t| t.parse::<i64>().is_err()) {
                header = Some((toks[0].to_string(), toks[1].to_string()));
                continue;
            }
            let s = intern(toks[0], &mut ids, &mut labels);
            let t = intern(toks[1], &mut ids, &mut labels);
            raw.push((s, t));
        }

        // A non-numeric first line is only a header if the rest is numeric.
        if let Some((a, b)) = header {
            if !labels.iter().all(|l| l.parse::<i64>().is_ok()) {
                let mut relabeled_ids = HashMap::new();
                let mut relabeled = Vec::new();
                let s = intern(&a, &mut relabeled_ids, &mut relabeled);
                let t = intern(&b, &mut relabeled_ids, &mut relabeled);
                let mut edges = vec![(s, t)];
                for &(s, t) in &raw {
                    edges.push((
                        intern(&labels[s], &mut relabeled_ids, &mut relabeled),
                        intern(&labels[t], &mut relabeled_ids, &mut relabeled),
                    ));
                }
                labels = relabeled;
                raw = edges;
            }
        }

        let mut out_adj = vec![Vec::new(); labels.len()];
        for (s, t) in raw {
            if s == t {
                stats.self_loops_dropped += 1;
            } else {
                out_adj[s].push(t);
            }
        }
        for list in &mut out_adj {
            let before = list.len();
            list.sort_unstable();
            list.dedup();
            stats.duplicates_dropped += before - list.len();
            stats.edges += list.len();
        }
        Ok(LabeledGraph {
            graph: Self::with_out_adjacency(out_adj),
            labels,
            stats,
        })
    }

    pub fn node_count(&self) -> usize {
        self.out_adj.len()
    }

    pub fn edge_count(&self) -> usize {
        self.out_adj.iter().map(Vec::len).sum()
    }

    pub fn out_neighbors(&self, v: usize) -> &[usize] {
        &self.out_adj[v]
    }

    pub fn in_neighbors(&self, v: usize) -> &[usize] {
        &self.in_adj[v]
    }

    pub fn out_degree(&self, v: usize) -> usize {
        self.out_adj[v].len()
    }

    pub fn in_degree(&self, v: usize) -> usize {
        self.in_adj[v].len()
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.out_adj
            .iter()
            .enumerate()
            .flat_map(|(s, l)| l.iter().map(move |&t| (s, t)))
    }
}
