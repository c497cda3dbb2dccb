//! Agent-based simulation of networked collaboration on NK landscapes,
//! together with the graph and project measures used to analyse it.

pub mod error;
pub mod experiment;
pub mod flow;
pub mod graph;
pub mod landscape;
pub mod metrics;
pub mod network;
pub mod project;
pub mod regression;
pub mod seed;
pub mod simulation;
pub mod strategies;

pub use error::{Error, Result};
pub use graph::DirectedGraph;
pub use landscape::{NkModel, Solution};
pub use network::{Agent, ConcernNetwork, RewireOptions};
pub use simulation::{run_trial, TrialResult, TrialSpec, Trajectory};
pub use strategies::{StrategyConfig, StrategyKind, TieRule};
