//! Scenario files: flat `key=value` lines, `#` comments.
//!
//! ```text
//! name=diss.fixed
//! protocol=whisper
//! tx_power=0
//! floods=10000
//! reps=3
//! idle_slots=5000
//! ```

use std::fmt::{self, Write as _};
use std::path::{Path, PathBuf};

use whisper_core::radio::{CombiningRule, LinkModel};
use whisper_core::sim::experiment::{Protocol, ProtocolConfig, Scenario, SenderPlan, DEFAULT_SENDER_SKEW};
use whisper_core::Nanos;

use crate::error::SimError;
use crate::graphs::{self, node_of_flocklab_id, TxPower};
use crate::topology_file::read_topology;

/// Floods each sender initiates before handing over in `diss.diff`.
pub const ROTATION_PERIOD: u64 = 1_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ScenarioName {
    DissFixed,
    DissDiff,
    DissClose,
    DissFar,
    CollClose,
    CollFar,
    Custom,
}

impl ScenarioName {
    pub const ALL: [ScenarioName; 7] = [
        ScenarioName::DissFixed,
        ScenarioName::DissDiff,
        ScenarioName::DissClose,
        ScenarioName::DissFar,
        ScenarioName::CollClose,
        ScenarioName::CollFar,
        ScenarioName::Custom,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ScenarioName::DissFixed => "diss.fixed",
            ScenarioName::DissDiff => "diss.diff",
            ScenarioName::DissClose => "diss.close",
            ScenarioName::DissFar => "diss.far",
            ScenarioName::CollClose => "coll.close",
            ScenarioName::CollFar => "coll.far",
            ScenarioName::Custom => "custom",
        }
    }

    pub fn parse(s: &str) -> Result<Self, SimError> {
        ScenarioName::ALL
            .into_iter()
            .find(|n| n.as_str() == s)
            .ok_or_else(|| SimError::UnknownScenario(s.to_string()))
    }

    /// Sender FlockLab ids from the scenario table.
    pub fn default_sender_ids(self) -> &'static [u16] {
        match self {
            ScenarioName::DissFixed => &[1],
            ScenarioName::DissDiff => &[10, 22, 11, 16, 23, 19, 20, 31, 26, 7],
            ScenarioName::DissClose => &[4, 2, 8, 1],
            ScenarioName::DissFar => &[16, 19, 7, 1],
            ScenarioName::CollClose => &[18, 27, 24, 23],
            ScenarioName::CollFar => &[16, 19, 7, 4],
            ScenarioName::Custom => &[],
        }
    }

    pub fn is_collection(self) -> bool {
        matches!(self, ScenarioName::CollClose | ScenarioName::CollFar)
    }
}

impl fmt::Display for ScenarioName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Sink of the collection scenarios (FlockLab id 1).
pub const SINK_ID: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: ScenarioName,
    pub protocol: Protocol,
    /// Topology file; the bundled graph for `tx_power` when absent.
    pub topology: Option<PathBuf>,
    /// Node indices; the scenario table's senders when absent.
    pub senders: Option<Vec<usize>>,
    pub tx_power: TxPower,
    pub floods: u64,
    pub reps: u64,
    pub idle_slots: u64,
    pub n_tx: Option<u32>,
    pub t_slot_us: Option<i64>,
    pub t_guard_us: Option<i64>,
    pub preamble: Option<u8>,
    pub sender_skew_ns: Option<i64>,
    pub seed: Option<u64>,
}

impl ScenarioSpec {
    pub fn new(name: ScenarioName, protocol: Protocol) -> Self {
        ScenarioSpec {
            name,
            protocol,
            topology: None,
            senders: None,
            tx_power: TxPower::ZeroDbm,
            floods: 10_000,
            reps: 3,
            idle_slots: 0,
            n_tx: None,
            t_slot_us: None,
            t_guard_us: None,
            preamble: None,
            sender_skew_ns: None,
            seed: None,
        }
    }

    pub fn parse(text: &str) -> Result<Self, SimError> {
        let mut name = None;
        let mut protocol = None;
        let mut spec = ScenarioSpec::new(ScenarioName::Custom, Protocol::Whisper);
        for (idx, raw) in text.lines().enumerate() {
            let line_no = idx + 1;
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let bad = |msg: String| SimError::ScenarioParse { line: line_no, msg };
            let (key, value) = line.split_once('=').ok_or_else(|| bad("expected key=value".into()))?;
            let (key, value) = (key.trim(), value.trim());
            let num = |v: &str| {
                v.parse::<u64>()
                    .map_err(|_| bad(format!("invalid number `{v}` for {key}")))
            };
            let int = |v: &str| {
                v.parse::<i64>()
                    .map_err(|_| bad(format!("invalid number `{v}` for {key}")))
            };
            match key {
                "name" => name = Some(ScenarioName::parse(value)?),
                "protocol" => {
                    protocol =
                        Some(Protocol::from_name(value).ok_or_else(|| SimError::UnknownProtocol(value.to_string()))?)
                }
                "topology" => spec.topology = Some(PathBuf::from(value)),
                "senders" => {
                    let ids = value
                        .split(',')
                        .map(|s| {
                            s.trim()
                                .parse::<usize>()
                                .map_err(|_| bad(format!("invalid node `{s}`")))
                        })
                        .collect::<Result<Vec<_>, _>>()?;
                    spec.senders = Some(ids);
                }
                "tx_power" => {
                    spec.tx_power = TxPower::from_label(value)
                        .ok_or_else(|| bad(format!("unsupported tx_power `{value}` (0 or -10)")))?
                }
                "floods" => spec.floods = num(value)?,
                "reps" => spec.reps = num(value)?,
                "idle_slots" => spec.idle_slots = num(value)?,
                "n_tx" => spec.n_tx = Some(num(value)? as u32),
                "t_slot_us" => spec.t_slot_us = Some(int(value)?),
                "t_guard_us" => spec.t_guard_us = Some(int(value)?),
                "preamble" => spec.preamble = Some(num(value)? as u8),
                "sender_skew_ns" => spec.sender_skew_ns = Some(int(value)?),
                "seed" => spec.seed = Some(num(value)?),
                other => return Err(bad(format!("unknown key `{other}`"))),
            }
        }
        spec.name = name.ok_or(SimError::ScenarioParse {
            line: 0,
            msg: "missing `name`".into(),
        })?;
        spec.protocol = protocol.ok_or(SimError::ScenarioParse {
            line: 0,
            msg: "missing `protocol`".into(),
        })?;
        Ok(spec)
    }

    /// Canonical text form; parsing it yields `self` again.
    pub fn serialize(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "name={}", self.name);
        let _ = writeln!(out, "protocol={}", self.protocol.name());
        if let Some(t) = &self.topology {
            let _ = writeln!(out, "topology={}", t.display());
        }
        if let Some(s) = &self.senders {
            let list: Vec<String> = s.iter().map(|n| n.to_string()).collect();
            let _ = writeln!(out, "senders={}", list.join(","));
        }
        let _ = writeln!(out, "tx_power={}", self.tx_power.label());
        let _ = writeln!(out, "floods={}", self.floods);
        let _ = writeln!(out, "reps={}", self.reps);
        let _ = writeln!(out, "idle_slots={}", self.idle_slots);
        let optional = [
            ("n_tx", self.n_tx.map(|v| v.to_string())),
            ("t_slot_us", self.t_slot_us.map(|v| v.to_string())),
            ("t_guard_us", self.t_guard_us.map(|v| v.to_string())),
            ("preamble", self.preamble.map(|v| v.to_string())),
            ("sender_skew_ns", self.sender_skew_ns.map(|v| v.to_string())),
            ("seed", self.seed.map(|v| v.to_string())),
        ];
        for (key, value) in optional {
            if let Some(v) = value {
                let _ = writeln!(out, "{key}={v}");
            }
        }
        out
    }

    /// Loads the link graph; relative topology paths resolve against
    /// `base_dir`.
    pub fn load_links(&self, base_dir: Option<&Path>) -> Result<LinkModel, SimError> {
        match &self.topology {
            Some(path) => {
                let path = match base_dir {
                    Some(dir) if path.is_relative() => dir.join(path),
                    _ => path.clone(),
                };
                read_topology(&path)
            }
            None => Ok(graphs::flocklab_like(self.tx_power)),
        }
    }

    fn sender_nodes(&self) -> Result<Vec<usize>, SimError> {
        if let Some(s) = &self.senders {
            return Ok(s.clone());
        }
        if self.name == ScenarioName::Custom {
            return Err(SimError::Invalid("custom scenarios need `senders`".into()));
        }
        self.name
            .default_sender_ids()
            .iter()
            .map(|&id| {
                node_of_flocklab_id(id).ok_or_else(|| SimError::Invalid(format!("no node for FlockLab id {id}")))
            })
            .collect()
    }

    pub fn protocol_config(&self) -> Result<ProtocolConfig, SimError> {
        let mut cfg = self.protocol.config();
        match &mut cfg {
            ProtocolConfig::Whisper(w) => {
                if let Some(n) = self.n_tx {
                    w.n_tx = n;
                }
                if let Some(t) = self.t_slot_us {
                    w.t_slot = Nanos::from_us(t);
                }
                if let Some(t) = self.t_guard_us {
                    w.t_guard = Nanos::from_us(t);
                }
                if let Some(p) = self.preamble {
                    w.packlet = w.packlet.with_preamble(p);
                }
            }
            ProtocolConfig::Glossy(g) => {
                if let Some(n) = self.n_tx {
                    g.n_tx = n;
                }
                if let Some(t) = self.t_guard_us {
                    g.t_guard = Nanos::from_us(t);
                }
                if let Some(p) = self.preamble {
                    g.packlet = g.packlet.with_preamble(p);
                }
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    /// The core scenario, with `seed` as the run seed.
    pub fn to_scenario(&self, seed: u64) -> Result<Scenario, SimError> {
        let senders = self.sender_nodes()?;
        let plan = match self.name {
            ScenarioName::DissDiff => SenderPlan::Rotate {
                senders,
                period: ROTATION_PERIOD,
            },
            name if name.is_collection() => SenderPlan::Collection {
                senders,
                sink: node_of_flocklab_id(SINK_ID).expect("sink id is mapped"),
            },
            _ => SenderPlan::Fixed(senders),
        };
        Ok(Scenario {
            protocol: self.protocol_config()?,
            plan,
            n_floods: self.floods,
            idle_slots: self.idle_slots,
            n_repetitions: self.reps,
            seed,
            rule: CombiningRule::default(),
            sender_skew: self.sender_skew_ns.map(Nanos).unwrap_or(DEFAULT_SENDER_SKEW),
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_round_trip() {
        let text = "# demo\nname=diss.far\nprotocol=glossy-2b\ntx_power=-10\nfloods=20\nreps=2\nn_tx=4\nseed=9\n";
        let spec = ScenarioSpec::parse(text).unwrap();
        assert_eq!(spec.name, ScenarioName::DissFar);
        assert_eq!(spec.protocol, Protocol::Glossy2b);
        assert_eq!(spec.tx_power, TxPower::MinusTenDbm);
        assert_eq!(spec.n_tx, Some(4));
        assert_eq!(ScenarioSpec::parse(&spec.serialize()).unwrap(), spec);
    }

    #[test]
    fn unknown_name_is_distinct_error() {
        let err = ScenarioSpec::parse("name=diss.nowhere\nprotocol=whisper\n").unwrap_err();
        assert_eq!(err.exit_code(), 2);
        assert!(ScenarioSpec::parse("name=diss.fixed\nprotocol=zigbee\n").is_err());
        assert!(ScenarioSpec::parse("name=diss.fixed\n").is_err());
        assert!(ScenarioSpec::parse("name=diss.fixed\nprotocol=whisper\ncolour=red\n").is_err());
    }

    #[test]
    fn table_senders_map_to_nodes() {
        let spec = ScenarioSpec::new(ScenarioName::DissFar, Protocol::WhisperLazy);
        let s = spec.to_scenario(0).unwrap();
        assert_eq!(s.plan, SenderPlan::Fixed(vec![25, 8, 17, 0]));
        let coll = ScenarioSpec::new(ScenarioName::CollClose, Protocol::Whisper)
            .to_scenario(0)
            .unwrap();
        assert!(matches!(coll.plan, SenderPlan::Collection { sink: 0, .. }));
        assert!(ScenarioSpec::new(ScenarioName::Custom, Protocol::Whisper)
            .to_scenario(0)
            .is_err());
    }
}
