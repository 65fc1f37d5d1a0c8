//! Deterministic kinematic micro-simulator with a rule-based ego agent, and the
//! batch testing loop that monitors traces against a weighted law corpus.

pub mod adversarial;
pub mod batch;
pub mod config;
pub mod route;
pub mod sim;

use lawgen_core::reward::RewardError;
use lawgen_core::scenario::ScenarioError;
use lawgen_core::trace::TraceError;
use thiserror::Error;

pub use adversarial::adversarial_scenarios;
pub use batch::{simulate_and_score, test_batch, BatchOptions, BatchReport, Mode, ScenarioResult, Violation};
pub use config::{EgoPolicy, SimConfig};
pub use sim::{run_scenario, Termination};

#[derive(Debug, Error)]
pub enum SimError {
    #[error("invalid scenario: {0}")]
    Scenario(#[from] ScenarioError),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("trace assembly failed: {0}")]
    Trace(#[from] TraceError),
    #[error("scoring failed: {0}")]
    Reward(#[from] RewardError),
    #[error("laws reference signals the simulator does not record: {0:?}")]
    MissingSignals(Vec<String>),
}
