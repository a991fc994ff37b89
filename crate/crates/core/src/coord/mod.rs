//! Message-level simulation of the semi-distributed protocol with a fronthaul ledger.

mod agents;
mod ledger;
mod message;

pub use agents::{run_distributed, run_with_corruption, BsAgent, Corruption, CpuAgent, DistributedSolution};
pub use ledger::{centralized_overhead, expected_solve_complex, FronthaulLedger, MessageRecord};
pub use message::{AgentId, Direction, Message, MessageKind, Payload};

use crate::error::Result;
use crate::network::{ChannelSet, NetworkConfig};
use crate::solver::{solve, SolverSettings};

/// Monolithic versus distributed run on the same inputs.
#[derive(Clone, Debug)]
pub struct CompareReport {
    /// Largest absolute entry-wise beamformer difference.
    pub max_abs_diff: f64,
    pub ledger: FronthaulLedger,
    pub monolithic_margin: f64,
    pub distributed_margin: f64,
}

/// Runs both pipelines; `corruption` perturbs one message of the distributed run.
pub fn compare_runs(
    channels: &ChannelSet,
    config: &NetworkConfig,
    settings: &SolverSettings,
    corruption: Option<Corruption>,
) -> Result<CompareReport> {
    let mono = solve(channels, config, settings)?;
    let (ledger, dist) = run_with_corruption(channels, config, settings, corruption);
    let dist = dist?;
    Ok(CompareReport {
        max_abs_diff: mono.beamformers.max_abs_diff(&dist.beamformers),
        ledger,
        monolithic_margin: mono.max_power_margin,
        distributed_margin: dist.max_power_margin,
    })
}
