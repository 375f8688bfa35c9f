//! Configuration, single runs, sweeps and report output.

pub mod config;
pub mod sweep;

use std::fmt::Write as _;

pub use config::{ConfigError, SimConfig, TopologySource};
pub use sweep::{derive_seed, emit_report, parse_rates, run_sweep, ReportRow, SweepError, SweepSpec, TopologyChoice};

use crate::engine::{self, EngineError, SimResult};
use crate::routing::{RoutingError, RoutingTable};
use crate::topology::Topology;

#[derive(Debug, thiserror::Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("routing: {0}")]
    Routing(#[from] RoutingError),
    #[error("traffic.rate is required for a single run")]
    MissingRate,
    #[error(transparent)]
    Engine(#[from] EngineError),
}

/// Everything produced by a single configured run.
pub struct RunOutput {
    pub topology: Topology,
    pub routing: RoutingTable,
    pub result: SimResult,
}

/// Builds the configured network and simulates it once.
pub fn run_config(config: &SimConfig, seed: Option<u64>) -> Result<RunOutput, RunError> {
    let topology = config.build_topology()?;
    let routing = RoutingTable::compute(&topology)?;
    let rate = config.rate.ok_or(RunError::MissingRate)?;
    let process = config.process(rate).map_err(EngineError::from)?;
    let result = engine::run_simulation(
        &topology,
        &routing,
        config.traffic,
        process,
        &config.params(),
        seed.unwrap_or(config.seed),
    )?;
    Ok(RunOutput { topology, routing, result })
}

/// Edge list plus a commented degree census; the output parses back as an
/// edge-list file.
pub fn topology_report(topology: &Topology) -> String {
    let mut out = String::new();
    let kind = topology.kind();
    match kind.grid() {
        Some((w, h)) => {
            let _ = writeln!(out, "# {} {w}x{h}", kind.name());
        }
        None => {
            let _ = writeln!(out, "# custom");
        }
    }
    let _ = writeln!(out, "# nodes {} links {}", topology.node_count(), topology.links().len());
    for (degree, count) in topology.degree_census() {
        let _ = writeln!(out, "# degree {degree}: {count} nodes");
    }
    out.push_str(&topology.to_edge_list());
    out
}
