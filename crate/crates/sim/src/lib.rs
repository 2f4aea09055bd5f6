//! Batch experiments on top of `whisper-core`: scenario and topology
//! files, bundled testbed-like graphs, CSV outputs and the acceptance
//! checks.

pub mod check;
pub mod error;
pub mod graphs;
pub mod output;
pub mod runner;
pub mod scenario;
pub mod topology_file;

use std::path::Path;

pub use error::SimError;

use crate::graphs::FLOCKLAB_IDS;
use crate::output::RunRecord;
use crate::scenario::ScenarioSpec;

/// Seed used when neither the command line, the scenario file nor the
/// environment provides one.
pub const DEFAULT_SEED: u64 = 1;

/// Runs a parsed scenario. `base_dir` resolves relative topology paths.
pub fn run_spec(spec: &ScenarioSpec, seed: u64, base_dir: Option<&Path>) -> Result<RunRecord, SimError> {
    let links = spec.load_links(base_dir)?;
    let scenario = spec.to_scenario(seed)?;
    scenario.validate(links.n_nodes())?;
    let report = runner::run_parallel(&scenario, &links)?;
    Ok(RunRecord {
        scenario: spec.name,
        protocol: spec.protocol,
        tx_power: spec.tx_power,
        flocklab_ids: spec.topology.is_none().then(|| FLOCKLAB_IDS.to_vec()),
        report,
    })
}
