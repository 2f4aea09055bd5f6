//! Bundled testbed-like graphs and the FlockLab node-id mapping.
//!
//! The 27 nodes sit on an elongated office floor (about 74 m x 20 m) with
//! node index 0 at the west edge. Two nodes are linked when closer than a
//! power-dependent range; link PRR falls linearly with distance from 0.99
//! down to 0.85 at the edge of the range.

use whisper_core::radio::LinkModel;

use crate::error::SimError;

/// Node positions in metres.
pub const POSITIONS: [(f64, f64); 27] = [
    (0.0, 10.0),
    (6.8, 3.3),
    (9.1, 9.8),
    (7.0, 17.4),
    (13.4, 3.1),
    (15.6, 11.5),
    (13.0, 16.0),
    (21.0, 4.5),
    (24.0, 7.7),
    (25.4, 19.3),
    (31.8, 3.6),
    (29.3, 7.6),
    (31.1, 14.8),
    (37.5, 1.7),
    (36.7, 9.8),
    (38.7, 18.7),
    (47.1, 3.7),
    (47.0, 10.8),
    (46.8, 15.9),
    (57.5, 5.5),
    (56.7, 11.0),
    (54.1, 15.6),
    (61.9, 0.9),
    (64.3, 9.5),
    (64.7, 16.4),
    (73.3, 4.7),
    (68.5, 8.5),
];

/// FlockLab identifier of every node index. Ids from the scenario table
/// keep their relative geometry: 1 at the west edge, 2/4/8 next to it,
/// 19/7/16 spread eastwards and 18/23/24/27 clustered at the east end.
pub const FLOCKLAB_IDS: [u16; 27] = [
    1, 2, 4, 8, 3, 10, 6, 13, 19, 15, 17, 22, 11, 25, 14, 31, 28, 7, 32, 26, 20, 33, 18, 23, 24, 16, 27,
];

/// Maps a FlockLab id to its node index.
pub fn node_of_flocklab_id(id: u16) -> Option<usize> {
    FLOCKLAB_IDS.iter().position(|&x| x == id)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum TxPower {
    /// 0 dBm: 5 to 6 hops from node 1.
    ZeroDbm,
    /// -10 dBm: 3 to 4 hops from node 1.
    MinusTenDbm,
}

impl TxPower {
    pub fn label(self) -> &'static str {
        match self {
            TxPower::ZeroDbm => "0",
            TxPower::MinusTenDbm => "-10",
        }
    }

    pub fn from_label(label: &str) -> Option<Self> {
        match label.trim_end_matches("dBm").trim() {
            "0" => Some(TxPower::ZeroDbm),
            "-10" => Some(TxPower::MinusTenDbm),
            _ => None,
        }
    }

    fn range_m(self) -> f64 {
        match self {
            TxPower::ZeroDbm => 17.0,
            TxPower::MinusTenDbm => 25.0,
        }
    }
}

fn round3(x: f64) -> f64 {
    (x * 1000.0).round() / 1000.0
}

/// Links between all node pairs closer than `range`, with PRR
/// `best - (best - worst) * d / range` rounded to three decimals.
pub fn distance_graph(range: f64, best: f64, worst: f64) -> LinkModel {
    let mut links = LinkModel::new(POSITIONS.len());
    for (a, pa) in POSITIONS.iter().enumerate() {
        for (b, pb) in POSITIONS.iter().enumerate() {
            if a == b {
                continue;
            }
            let d = ((pa.0 - pb.0).powi(2) + (pa.1 - pb.1).powi(2)).sqrt();
            if d < range {
                let prr = round3(best - (best - worst) * d / range);
                links.add_link(a, b, prr).expect("generated link is valid");
            }
        }
    }
    links
}

/// The bundled lossy graph for a transmit power, PRR in `[0.85, 0.99]`.
pub fn flocklab_like(power: TxPower) -> LinkModel {
    distance_graph(power.range_m(), 0.99, 0.85)
}

/// The -10 dBm structure with almost perfect links, PRR in `[0.99, 1]`.
pub fn near_ideal() -> LinkModel {
    distance_graph(TxPower::MinusTenDbm.range_m(), 1.0, 0.99)
}

/// Bundled graph by name: `flocklab-0dbm`, `flocklab-m10dbm`, `near-ideal`.
pub fn bundled(name: &str) -> Result<LinkModel, SimError> {
    match name {
        "flocklab-0dbm" => Ok(flocklab_like(TxPower::ZeroDbm)),
        "flocklab-m10dbm" => Ok(flocklab_like(TxPower::MinusTenDbm)),
        "near-ideal" => Ok(near_ideal()),
        other => Err(SimError::Invalid(format!("unknown bundled graph `{other}`"))),
    }
}

pub const BUNDLED_NAMES: [&str; 3] = ["flocklab-0dbm", "flocklab-m10dbm", "near-ideal"];

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ids_are_unique() {
        let mut ids = FLOCKLAB_IDS.to_vec();
        ids.sort_unstable();
        ids.dedup();
        assert_eq!(ids.len(), 27);
        assert_eq!(node_of_flocklab_id(1), Some(0));
    }

    #[test]
    fn prr_bands() {
        for power in [TxPower::ZeroDbm, TxPower::MinusTenDbm] {
            assert!(flocklab_like(power).links().all(|l| (0.85..=0.99).contains(&l.prr)));
        }
        assert!(near_ideal().links().all(|l| (0.99..=1.0).contains(&l.prr)));
    }
}
