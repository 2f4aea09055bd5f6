//! Network graphs and hop structure.

use alloc::collections::VecDeque;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::radio::LinkModel;

/// Links with a PRR at or below this do not count as hops.
pub const DEFAULT_HOP_THRESHOLD: f64 = 0.5;

#[derive(Debug, Clone, PartialEq)]
pub struct Topology {
    pub links: LinkModel,
    pub source: usize,
    /// Hop distance of every node from `source`; `None` if unreachable.
    pub hops: Vec<Option<u32>>,
    pub d_net: u32,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diameter {
    pub d_net: u32,
    pub hops: Vec<Option<u32>>,
    pub disconnected: Vec<usize>,
}

/// BFS eccentricity of `source` over links with `prr > threshold`.
/// Unreachable nodes are reported and left out of the diameter.
pub fn compute_diameter(links: &LinkModel, source: usize, threshold: f64) -> Result<Diameter> {
    let hops = hop_distances(links, source, threshold)?;
    let d_net = hops.iter().flatten().copied().max().unwrap_or(0);
    let disconnected = (0..hops.len()).filter(|&n| hops[n].is_none()).collect();
    Ok(Diameter {
        d_net,
        hops,
        disconnected,
    })
}

pub fn hop_distances(links: &LinkModel, source: usize, threshold: f64) -> Result<Vec<Option<u32>>> {
    if source >= links.n_nodes() {
        return Err(Error::UnknownNode(source));
    }
    let mut hops = vec![None; links.n_nodes()];
    hops[source] = Some(0);
    let mut queue = VecDeque::from([source]);
    while let Some(n) = queue.pop_front() {
        let d = hops[n].unwrap_or(0);
        for &m in links.outbound(n) {
            if hops[m].is_none() && links.prr(n, m) > threshold {
                hops[m] = Some(d + 1);
                queue.push_back(m);
            }
        }
    }
    Ok(hops)
}

impl Topology {
    pub fn new(links: LinkModel, source: usize) -> Result<Self> {
        let d = compute_diameter(&links, source, DEFAULT_HOP_THRESHOLD)?;
        Ok(Topology {
            links,
            source,
            hops: d.hops,
            d_net: d.d_net,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.links.n_nodes()
    }

    /// Same graph, hop structure measured from another node.
    pub fn with_source(&self, source: usize) -> Result<Self> {
        Topology::new(self.links.clone(), source)
    }

    /// Nodes `0 - 1 - ... - n-1` with symmetric links of equal PRR.
    pub fn line(n: usize, prr: f64) -> Result<Self> {
        let mut links = LinkModel::new(n);
        for i in 1..n {
            links.add_symmetric(i - 1, i, prr)?;
        }
        Topology::new(links, 0)
    }

    pub fn complete(n: usize, prr: f64) -> Result<Self> {
        let mut links = LinkModel::new(n);
        for a in 0..n {
            for b in a + 1..n {
                links.add_symmetric(a, b, prr)?;
            }
        }
        Topology::new(links, 0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diameters() {
        assert_eq!(Topology::line(7, 1.0).unwrap().d_net, 6);
        assert_eq!(Topology::complete(5, 0.9).unwrap().d_net, 1);
        let weak = Topology::line(4, 0.4).unwrap();
        assert_eq!(weak.d_net, 0);
        let d = compute_diameter(&weak.links, 0, DEFAULT_HOP_THRESHOLD).unwrap();
        assert_eq!(d.disconnected, [1, 2, 3]);
        assert!(compute_diameter(&weak.links, 9, 0.5).is_err());
    }
}
