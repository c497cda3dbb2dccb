//! Concern-based agent networks.
//!
//! Every locus yields two agents whose concern is the locus plus its NK
//! neighbors. Concern slots are then rewired at random and agents sharing at
//! least one concern locus are linked.

use std::io::Write;
use std::path::Path;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::DirectedGraph;
use crate::landscape::NkModel;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Agent {
    pub id: usize,
    pub home_locus: usize,
    /// Home locus first, then the remaining slots in order.
    pub concern: Vec<usize>,
}

impl Agent {
    pub fn shares_concern(&self, other: &Agent) -> bool {
        self.concern.iter().any(|l| other.concern.contains(l))
    }
}

/// Options for concern rewiring.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RewireOptions {
    pub p: f64,
    /// Allow the home slot to be rewired as well.
    pub include_home: bool,
}

impl RewireOptions {
    pub fn new(p: f64) -> Self {
        Self {
            p,
            include_home: false,
        }
    }
}

/// Two agents per locus; agents `2i` and `2i + 1` start from locus `i`.
pub fn build_concerns(model: &NkModel) -> Vec<Agent> {
    (0..model.n())
        .flat_map(|i| {
            let concern: Vec<usize> = std::iter::once(i)
                .chain(model.neighbors(i).iter().copied())
                .collect();
            [2 * i, 2 * i + 1].map(|id| Agent {
                id,
                home_locus: i,
                concern: concern.clone(),
            })
        })
        .collect()
}

/// Resamples each eligible concern slot independently with probability `p`,
/// drawing a replacement uniformly from loci not already in the concern.
pub fn rewire<R: Rng + ?Sized>(
    agents: &[Agent],
    n_loci: usize,
    opts: RewireOptions,
    rng: &mut R,
) -> Result<Vec<Agent>> {
    if !(0.0..=1.0).contains(&opts.p) {
        return Err(Error::InvalidProbability(opts.p));
    }
    let mut out = agents.to_vec();
    if opts.p == 0.0 {
        return Ok(out);
    }
    for agent in &mut out {
        if agent.concern.len() >= n_loci {
            // nothing left to swap in
            continue;
        }
        let start = if opts.include_home { 0 } else { 1 };
        for slot in start..agent.concern.len() {
            if !rng.random_bool(opts.p) {
                continue;
            }
            let replacement = loop {
                let cand = rng.random_range(0..n_loci);
                if !agent.concern.contains(&cand) {
                    break cand;
                }
            };
            agent.concern[slot] = replacement;
        }
    }
    Ok(out)
}

/// Agents, their co-affiliation graph, and the locus-to-agent index.
#[derive(Clone, Debug, PartialEq)]
pub struct ConcernNetwork {
    agents: Vec<Agent>,
    adjacency: Vec<Vec<usize>>,
    locus_agents: Vec<Vec<usize>>,
    rewire_p: f64,
}

impl ConcernNetwork {
    /// Links every pair of distinct agents whose concerns intersect.
    pub fn build(agents: Vec<Agent>, n_loci: usize, rewire_p: f64) -> Result<Self> {
        let mut locus_agents = vec![Vec::new(); n_loci];
        for (a, agent) in agents.iter().enumerate() {
            if agent.concern.is_empty() {
                return Err(Error::EmptyLoci);
            }
            for &l in &agent.concern {
                if l >= n_loci {
                    return Err(Error::LocusOutOfRange { index: l, n: n_loci });
                }
                if locus_agents[l].last() != Some(&a) {
                    locus_agents[l].push(a);
                }
            }
        }

        let mut seen = vec![usize::MAX; agents.len()];
        let adjacency = agents
            .iter()
            .enumerate()
            .map(|(a, agent)| {
                seen[a] = a;
                let mut nbrs = Vec::new();
                for &l in &agent.concern {
                    for &b in &locus_agents[l] {
                        if seen[b] != a {
                            seen[b] = a;
                            nbrs.push(b);
                        }
                    }
                }
                nbrs.sort_unstable();
                nbrs
            })
            .collect();

        Ok(Self {
            agents,
            adjacency,
            locus_agents,
            rewire_p,
        })
    }

    /// Builds the concerns for `model`, rewires them, and links the agents.
    pub fn generate<R: Rng + ?Sized>(
        model: &NkModel,
        opts: RewireOptions,
        rng: &mut R,
    ) -> Result<Self> {
        let agents = rewire(&build_concerns(model), model.n(), opts, rng)?;
        Self::build(agents, model.n(), opts.p)
    }

    pub fn agents(&self) -> &[Agent] {
        &self.agents
    }

    pub fn len(&self) -> usize {
        self.agents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.agents.is_empty()
    }

    pub fn neighbors(&self, agent: usize) -> &[usize] {
        &self.adjacency[agent]
    }

    pub fn degree(&self, agent: usize) -> usize {
        self.adjacency[agent].len()
    }

    /// Agents whose concern contains `locus`, in agent order.
    pub fn agents_concerned_with(&self, locus: usize) -> &[usize] {
        &self.locus_agents[locus]
    }

    pub fn locus_index(&self) -> &[Vec<usize>] {
        &self.locus_agents
    }

    pub fn rewire_p(&self) -> f64 {
        self.rewire_p
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn mean_degree(&self) -> f64 {
        if self.agents.is_empty() {
            return 0.0;
        }
        self.adjacency.iter().map(Vec::len).sum::<usize>() as f64 / self.agents.len() as f64
    }

    /// Each undirected edge in both directions.
    pub fn to_directed(&self) -> DirectedGraph {
        DirectedGraph::from_adjacency(self.adjacency.clone())
            .expect("co-affiliation adjacency has no self-loops")
    }

    /// Writes `src dst` lines, each undirected edge in both directions.
    pub fn write_edge_list<W: Write>(&self, mut w: W) -> Result<()> {
        for (a, nbrs) in self.adjacency.iter().enumerate() {
            for &b in nbrs {
                writeln!(w, "{a} {b}")?;
            }
        }
        Ok(())
    }

    pub fn save_edge_list(&self, path: &Path) -> Result<()> {
        let f = std::io::BufWriter::new(std::fs::File::create(path)?);
        self.write_edge_list(f)
    }

    /// JSON dump of every agent and its concern.
    pub fn agents_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(&self.agents)?)
    }
}
