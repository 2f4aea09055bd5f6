//! CSV and column-file outputs. Milliseconds and percentages are written
//! with three decimals; rows are sorted by scenario, protocol and node.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use whisper_core::sim::experiment::Protocol;
use whisper_core::sim::metrics::MetricsReport;

use crate::graphs::TxPower;
use crate::scenario::ScenarioName;

#[derive(Debug, Clone)]
pub struct RunRecord {
    pub scenario: ScenarioName,
    pub protocol: Protocol,
    pub tx_power: TxPower,
    /// FlockLab ids when the bundled graph was used.
    pub flocklab_ids: Option<Vec<u16>>,
    pub report: MetricsReport,
}

fn f3(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.3}")).unwrap_or_default()
}

fn pct(v: Option<f64>) -> Option<f64> {
    v.map(|x| x * 100.0)
}

fn sorted(records: &[RunRecord]) -> Vec<&RunRecord> {
    let mut refs: Vec<&RunRecord> = records.iter().collect();
    refs.sort_by(|a, b| {
        (a.scenario.as_str(), a.protocol.name(), a.tx_power.label()).cmp(&(
            b.scenario.as_str(),
            b.protocol.name(),
            b.tx_power.label(),
        ))
    });
    refs
}

pub const SUMMARY_HEADER: &str = "protocol,scenario,tx_power_dbm,reliability_pct,radio_on_signal_ms,radio_on_idle_ms,reliability_std_pct,radio_on_signal_std_ms,dropped_pct";

pub fn summary_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(SUMMARY_HEADER);
    out.push('\n');
    for r in sorted(records) {
        let rep = &r.report;
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            r.protocol.name(),
            r.scenario,
            r.tx_power.label(),
            f3(pct(rep.network_reliability.map(|s| s.mean))),
            f3(rep.radio_on_signal_ms.map(|s| s.mean)),
            f3(rep.radio_on_idle_ms.map(|s| s.mean)),
            f3(pct(rep.network_reliability.map(|s| s.std))),
            f3(rep.radio_on_signal_ms.map(|s| s.std)),
            f3(pct(rep.dropped_fraction.map(|s| s.mean))),
        );
    }
    out
}

pub const NODES_HEADER: &str = "scenario,protocol,node,flocklab_id,hop,reliability_pct,radio_on_signal_ms,radio_on_idle_ms,dropped_pct,mean_first_counter";

pub fn nodes_csv(records: &[RunRecord]) -> String {
    let mut out = String::from(NODES_HEADER);
    out.push('\n');
    for r in sorted(records) {
        for n in &r.report.nodes {
            let id = r
                .flocklab_ids
                .as_ref()
                .and_then(|ids| ids.get(n.node))
                .map(|i| i.to_string());
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                r.scenario,
                r.protocol.name(),
                n.node,
                id.unwrap_or_default(),
                n.hop.map(|h| h.to_string()).unwrap_or_default(),
                f3(pct(n.reliability)),
                f3(n.radio_on_signal_ms),
                f3(n.radio_on_idle_ms),
                f3(pct(n.dropped_fraction)),
                f3(n.mean_first_counter),
            );
        }
    }
    out
}

/// Whitespace-separated per-node columns for plotting.
pub fn node_columns(r: &RunRecord) -> String {
    let mut out = String::from("# node reliability_pct radio_on_signal_ms radio_on_idle_ms dropped_pct\n");
    for n in &r.report.nodes {
        let cell = |v: Option<f64>| v.map(|x| format!("{x:.3}")).unwrap_or_else(|| "nan".into());
        let _ = writeln!(
            out,
            "{} {} {} {} {}",
            n.node,
            cell(pct(n.reliability)),
            cell(n.radio_on_signal_ms),
            cell(n.radio_on_idle_ms),
            cell(pct(n.dropped_fraction)),
        );
    }
    out
}

/// Mean first received counter per hop.
pub fn hop_columns(r: &RunRecord) -> String {
    let mut out = String::from("# hop mean_first_counter\n");
    for (hop, c) in r.report.hop_mean_counter() {
        let _ = writeln!(out, "{hop} {c:.3}");
    }
    out
}

/// Writes `summary.csv`, `nodes.csv` and per-run column files.
pub fn write_outputs(dir: &Path, records: &[RunRecord]) -> std::io::Result<Vec<PathBuf>> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    let mut put = |name: String, body: String| -> std::io::Result<()> {
        let path = dir.join(name);
        std::fs::write(&path, body)?;
        written.push(path);
        Ok(())
    };
    put("summary.csv".into(), summary_csv(records))?;
    put("nodes.csv".into(), nodes_csv(records))?;
    for r in sorted(records) {
        let stem = format!("{}_{}_{}dbm", r.scenario, r.protocol.name(), r.tx_power.label());
        put(format!("{stem}_nodes.dat"), node_columns(r))?;
        put(format!("{stem}_hops.dat"), hop_columns(r))?;
    }
    Ok(written)
}
