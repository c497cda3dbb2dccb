//! Seeded trials: one NK model, one concern network, one strategy.
//!
//! Updates are synchronous. Within an iteration every agent reads the
//! population state left by the previous iteration; the social stage runs for
//! all agents before the individual stage.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::landscape::{NkModel, Solution};
use crate::metrics::{path_length, Estimation};
use crate::network::{ConcernNetwork, RewireOptions};
use crate::seed::{rng_for, SimRng, Stream};
use crate::strategies::{
    best_global_flip, best_local_flip_unchecked, local_majority_round, social_step_best_neighbor,
    social_step_conformity, SocialRule, StrategyConfig, StrategyKind,
};

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialSpec {
    pub n: usize,
    pub k: usize,
    pub rewire: RewireOptions,
    pub strategy: StrategyConfig,
    pub iterations: usize,
    pub seed: u64,
}

impl TrialSpec {
    pub fn new(kind: StrategyKind, rewire_p: f64, seed: u64) -> Self {
        Self {
            n: 250,
            k: 7,
            rewire: RewireOptions::new(rewire_p),
            strategy: StrategyConfig::new(kind),
            iterations: 300,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::InvalidConfig("iterations must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.rewire.p) {
            return Err(Error::InvalidProbability(self.rewire.p));
        }
        self.strategy.validate()
    }
}

/// Population mean fitness per iteration; entry 0 is the initial state.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Trajectory(Vec<f64>);

impl Trajectory {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InsufficientData("empty trajectory".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// First iteration whose value reaches 99% of the trajectory maximum.
    pub fn convergence_step(&self) -> usize {
        let max = self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        self.0
            .iter()
            .position(|&v| v >= 0.99 * max)
            .expect("the maximum itself qualifies")
    }

    /// Value after the final iteration.
    pub fn performance(&self) -> f64 {
        *self.0.last().expect("trajectory is non-empty")
    }

    /// Reciprocal of the convergence step, with convergence at step 0 counted
    /// as 1.
    pub fn efficiency(&self) -> f64 {
        match self.convergence_step() {
            0 => 1.0,
            t => 1.0 / t as f64,
        }
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["iteration", "mean_value"])?;
        for (t, v) in self.0.iter().enumerate() {
            out.write_record([t.to_string(), v.to_string()])?;
        }
        out.flush()?;
        Ok(())
    }
}

pub fn convergence_step(t: &Trajectory) -> usize {
    t.convergence_step()
}

pub fn performance_of(t: &Trajectory) -> f64 {
    t.performance()
}

pub fn efficiency_of(t: &Trajectory) -> f64 {
    t.efficiency()
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NetworkStats {
    pub mean_degree: f64,
    pub path_length: f64,
}

impl NetworkStats {
    /// Mean degree and exact characteristic path length of `net`.
    pub fn of(net: &ConcernNetwork) -> Result<Self> {
        let path = path_length(&net.to_directed(), Estimation::Exact)?;
        Ok(Self {
            mean_degree: net.mean_degree(),
            path_length: path.mean_path_length.unwrap_or(f64::NAN),
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    pub spec: TrialSpec,
    pub trajectory: Trajectory,
    pub performance: f64,
    pub efficiency: f64,
    pub converged_at: usize,
    pub network: NetworkStats,
}

/// Current population: one solution per agent, or a single shared one.
#[derive(Clone, Debug, PartialEq)]
pub enum PopulationState {
    PerAgent(Vec<Solution>),
    Shared(Solution),
}

/// Steps a population under one strategy. Keeps per-agent fitness and a flag
/// marking agents whose solution is known to admit no improving flip, so that
/// settled agents skip the individual stage.
pub struct Population<'a> {
    model: &'a NkModel,
    network: &'a ConcernNetwork,
    config: StrategyConfig,
    state: PopulationState,
    fitness: Vec<f64>,
    settled: Vec<bool>,
    rng: SimRng,
}

impl<'a> Population<'a> {
    /// Random initial state: independent strings per agent, or one shared
    /// string for local majority.
    pub fn new(
        model: &'a NkModel,
        network: &'a ConcernNetwork,
        config: StrategyConfig,
        init_rng: &mut SimRng,
        rng: SimRng,
    ) -> Result<Self> {
        config.validate()?;
        let state = match config.kind.social() {
            SocialRule::LocalMajority => PopulationState::Shared(Solution::random(model.n(), init_rng)),
            _ => PopulationState::PerAgent(
                (0..network.len()).map(|_| Solution::random(model.n(), init_rng)).collect(),
            ),
        };
        Self::with_state(model, network, config, state, rng)
    }

    pub fn with_state(
        model: &'a NkModel,
        network: &'a ConcernNetwork,
        config: StrategyConfig,
        state: PopulationState,
        rng: SimRng,
    ) -> Result<Self> {
        let fitness = match &state {
            PopulationState::PerAgent(sols) => {
                if sols.len() != network.len() {
                    return Err(Error::InvalidConfig(format!(
                        "{} solutions for {} agents",
                        sols.len(),
                        network.len()
                    )));
                }
                sols.iter().map(|s| model.fitness(s)).collect::<Result<_>>()?
            }
            PopulationState::Shared(s) => vec![model.fitness(s)?],
        };
        let settled = vec![false; fitness.len()];
        Ok(Self {
            model,
            network,
            config,
            state,
            fitness,
            settled,
            rng,
        })
    }

    pub fn state(&self) -> &PopulationState {
        &self.state
    }

    /// Mean fitness over agents, or the shared solution's fitness.
    pub fn mean_value(&self) -> f64 {
        self.fitness.iter().sum::<f64>() / self.fitness.len() as f64
    }

    /// Advances one iteration. Returns whether any solution changed.
    pub fn step(&mut self) -> Result<bool> {
        match self.config.kind.social() {
            SocialRule::LocalMajority => self.step_majority(),
            rule => Ok(self.step_per_agent(rule)),
        }
    }

    fn step_majority(&mut self) -> Result<bool> {
        let PopulationState::Shared(shared) = &self.state else {
            unreachable!("local majority keeps a shared solution");
        };
        let concerns: Vec<&[usize]> = self.network.agents().iter().map(|a| a.concern.as_slice()).collect();
        let next = local_majority_round(
            self.model,
            shared,
            &concerns,
            self.network.locus_index(),
            self.config.majority_tie,
            &mut self.rng,
        )?;
        let changed = next != *shared;
        if changed {
            self.fitness[0] = self.model.fitness_unchecked(next.bits());
            self.state = PopulationState::Shared(next);
        }
        Ok(changed)
    }

    fn step_per_agent(&mut self, rule: SocialRule) -> bool {
        let PopulationState::PerAgent(old) = &self.state else {
            unreachable!("per-agent strategies keep one solution per agent");
        };
        let m = self.config.neighbor_sample_size;
        let local = self.config.kind.local_individual();

        // Social stage, reading only the previous state.
        let mut next: Vec<Solution> = Vec::with_capacity(old.len());
        let mut next_fit = Vec::with_capacity(old.len());
        let mut next_settled = Vec::with_capacity(old.len());
        for a in 0..old.len() {
            let nbrs = self.network.neighbors(a);
            let pick = match rule {
                SocialRule::BestNeighbor => social_step_best_neighbor(a, &self.fitness, nbrs, m, &mut self.rng),
                SocialRule::Conformity => social_step_conformity(old, nbrs, m, &mut self.rng),
                SocialRule::LocalMajority => unreachable!(),
            };
            match pick {
                Some(b) if old[b] != old[a] => {
                    next.push(old[b].clone());
                    next_fit.push(self.fitness[b]);
                    // settledness is concern-specific under local search
                    next_settled.push(!local && self.settled[b]);
                }
                _ => {
                    next.push(old[a].clone());
                    next_fit.push(self.fitness[a]);
                    next_settled.push(self.settled[a]);
                }
            }
        }

        // Individual stage.
        let mut changed = false;
        for a in 0..next.len() {
            if next[a] != old[a] {
                changed = true;
            }
            if next_settled[a] {
                continue;
            }
            let flip = if local {
                let concern = &self.network.agents()[a].concern;
                let mut bits = next[a].bits().to_vec();
                best_local_flip_unchecked(self.model, &mut bits, concern)
            } else {
                best_global_flip(self.model, &next[a]).expect("population strings have length n")
            };
            match flip {
                Some(j) => {
                    next[a].flip(j);
                    next_fit[a] = self.model.fitness_unchecked(next[a].bits());
                    changed = true;
                }
                None => next_settled[a] = true,
            }
        }

        self.state = PopulationState::PerAgent(next);
        self.fitness = next_fit;
        self.settled = next_settled;
        changed
    }
}

/// Runs one trial. Landscape, rewiring, initial state, and dynamics each draw
/// from their own stream of `spec.seed`.
pub fn run_trial(spec: &TrialSpec) -> Result<TrialResult> {
    spec.validate()?;
    let model = NkModel::generate(spec.n, spec.k, spec.seed)?;
    let network = ConcernNetwork::generate(&model, spec.rewire, &mut rng_for(spec.seed, Stream::Rewire))?;
    run_trial_on(spec, &model, &network)
}

/// Runs the dynamics of `spec` on an existing model and network.
pub fn run_trial_on(spec: &TrialSpec, model: &NkModel, network: &ConcernNetwork) -> Result<TrialResult> {
    spec.validate()?;
    let mut init = rng_for(spec.seed, Stream::Init);
    let mut pop = Population::new(model, network, spec.strategy, &mut init, rng_for(spec.seed, Stream::Dynamics))?;

    let mut values = Vec::with_capacity(spec.iterations + 1);
    values.push(pop.mean_value());
    // Local majority with incumbent tie-breaking is deterministic, so an
    // unchanged round is a fixed point.
    let deterministic = spec.strategy.kind.social() == SocialRule::LocalMajority
        && spec.strategy.majority_tie == crate::strategies::TieRule::KeepIncumbent;
    while values.len() <= spec.iterations {
        let changed = pop.step()?;
        values.push(pop.mean_value());
        if deterministic && !changed {
            let v = pop.mean_value();
            values.resize(spec.iterations + 1, v);
        }
    }

    let trajectory = Trajectory::new(values)?;
    Ok(TrialResult {
        spec: *spec,
        performance: trajectory.performance(),
        efficiency: trajectory.efficiency(),
        converged_at: trajectory.convergence_step(),
        network: NetworkStats::of(network)?,
        trajectory,
    })
}
