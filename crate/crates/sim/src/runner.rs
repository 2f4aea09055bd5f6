//! Runs repetitions in parallel and merges them in repetition order.

use rayon::prelude::*;
use whisper_core::radio::LinkModel;
use whisper_core::sim::experiment::{run_repetition, Scenario};
use whisper_core::sim::metrics::MetricsReport;

use crate::error::SimError;

pub fn run_parallel(scenario: &Scenario, links: &LinkModel) -> Result<MetricsReport, SimError> {
    let reps = (0..scenario.n_repetitions.max(1))
        .into_par_iter()
        .map(|r| run_repetition(scenario, links, r))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(MetricsReport::from_repetitions(reps))
}
