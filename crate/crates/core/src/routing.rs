//! Static all-pairs minimal-hop routing.
//!
//! Among equal-cost next hops the lowest node id wins, which makes every
//! table a pure function of the link set.

use std::collections::hash_map::DefaultHasher;
use std::collections::VecDeque;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};

use crate::topology::{NodeId, Topology};

const UNREACHABLE: u32 = u32::MAX;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RoutingError {
    #[error("topology is disconnected: node {to} is unreachable from node {from}")]
    Disconnected { from: NodeId, to: NodeId },
    #[error("node {node} is not in 0..{node_count}")]
    UnknownNode { node: NodeId, node_count: usize },
    #[error("next hop requested for a packet already at its destination {node}")]
    AtDestination { node: NodeId },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RoutingTable {
    node_count: usize,
    fingerprint: u64,
    // Both indexed by current * node_count + destination.
    next_hop: Vec<u32>,
    distance: Vec<u32>,
}

/// Hash of the node count and undirected link set, used to detect a table
/// being paired with a different topology.
pub(crate) fn topology_fingerprint(topology: &Topology) -> u64 {
    let mut hasher = DefaultHasher::new();
    topology.node_count().hash(&mut hasher);
    for (a, b) in topology.link_pairs() {
        (a.index(), b.index()).hash(&mut hasher);
    }
    hasher.finish()
}

impl RoutingTable {
    /// Builds the table with one breadth-first search per destination.
    pub fn compute(topology: &Topology) -> Result<Self, RoutingError> {
        let n = topology.node_count();
        let mut distance = vec![UNREACHABLE; n * n];
        let mut next_hop = vec![UNREACHABLE; n * n];
        let mut queue = VecDeque::with_capacity(n);

        for dest in 0..n {
            // Links are undirected, so distances *to* dest equal distances from it.
            let dist_to = |node: usize, distance: &[u32]| distance[node * n + dest];
            distance[dest * n + dest] = 0;
            next_hop[dest * n + dest] = dest as u32;
            queue.clear();
            queue.push_back(dest);
            while let Some(u) = queue.pop_front() {
                let du = dist_to(u, &distance);
                for &(v, _) in topology.neighbor_slice(NodeId(u)) {
                    let v = v.index();
                    if dist_to(v, &distance) == UNREACHABLE {
                        distance[v * n + dest] = du + 1;
                        queue.push_back(v);
                    }
                }
            }
            for u in 0..n {
                if u == dest {
                    continue;
                }
                let du = dist_to(u, &distance);
                if du == UNREACHABLE {
                    return Err(RoutingError::Disconnected { from: NodeId(u), to: NodeId(dest) });
                }
                // neighbor_slice is ascending, so the first match is the lowest id.
                let hop = topology
                    .neighbor_slice(NodeId(u))
                    .iter()
                    .map(|&(v, _)| v.index())
                    .find(|&v| dist_to(v, &distance) + 1 == du)
                    .expect("BFS predecessor exists for every reachable node");
                next_hop[u * n + dest] = hop as u32;
            }
        }

        Ok(RoutingTable { node_count: n, fingerprint: topology_fingerprint(topology), next_hop, distance })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    /// True when this table was computed from a topology with the same nodes
    /// and links as `topology`.
    pub fn matches(&self, topology: &Topology) -> bool {
        self.node_count == topology.node_count() && self.fingerprint == topology_fingerprint(topology)
    }

    fn check(&self, node: NodeId) -> Result<(), RoutingError> {
        if node.index() < self.node_count {
            Ok(())
        } else {
            Err(RoutingError::UnknownNode { node, node_count: self.node_count })
        }
    }

    pub fn distance(&self, source: NodeId, destination: NodeId) -> Result<usize, RoutingError> {
        self.check(source)?;
        self.check(destination)?;
        Ok(self.distance[source.index() * self.node_count + destination.index()] as usize)
    }

    pub fn next_hop(&self, current: NodeId, destination: NodeId) -> Result<NodeId, RoutingError> {
        self.check(current)?;
        self.check(destination)?;
        if current == destination {
            return Err(RoutingError::AtDestination { node: current });
        }
        Ok(self.next_hop_unchecked(current, destination))
    }

    pub(crate) fn next_hop_unchecked(&self, current: NodeId, destination: NodeId) -> NodeId {
        NodeId(self.next_hop[current.index() * self.node_count + destination.index()] as usize)
    }

    /// Node sequence from `source` to `destination`, both inclusive.
    pub fn path(&self, source: NodeId, destination: NodeId) -> Result<Vec<NodeId>, RoutingError> {
        self.check(source)?;
        self.check(destination)?;
        let mut path = Vec::with_capacity(self.distance(source, destination)? + 1);
        let mut current = source;
        path.push(current);
        while current != destination {
            current = self.next_hop_unchecked(current, destination);
            path.push(current);
        }
        Ok(path)
    }

    /// One `route <src> <dst> <hop1> <hop2> ...` line per ordered pair of
    /// distinct nodes; hops run from the first node after `src` up to `dst`.
    pub fn dump(&self) -> String {
        let mut out = String::new();
        for s in 0..self.node_count {
            for d in 0..self.node_count {
                if s == d {
                    continue;
                }
                let path = self.path(NodeId(s), NodeId(d)).expect("valid nodes");
                let _ = write!(out, "route {s} {d}");
                for hop in &path[1..] {
                    let _ = write!(out, " {hop}");
                }
                out.push('\n');
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::topology::{LinkParams, LinkSpec};

    fn ids(v: &[usize]) -> Vec<NodeId> {
        v.iter().copied().map(NodeId).collect()
    }

    fn mesh() -> Topology {
        Topology::mesh2d(4, 4, LinkParams::default()).unwrap()
    }

    fn king() -> Topology {
        Topology::diagonal_mesh2d(4, 4, LinkParams::default()).unwrap()
    }

    #[test]
    fn corner_to_corner_distances() {
        let m = RoutingTable::compute(&mesh()).unwrap();
        let k = RoutingTable::compute(&king()).unwrap();
        assert_eq!(m.distance(NodeId(0), NodeId(15)).unwrap(), 6);
        assert_eq!(k.distance(NodeId(0), NodeId(15)).unwrap(), 3);
        assert_eq!(m.distance(NodeId(7), NodeId(7)).unwrap(), 0);
        assert_eq!(m.path(NodeId(7), NodeId(7)).unwrap(), ids(&[7]));
    }

    #[test]
    fn tie_break_prefers_lowest_id() {
        let m = RoutingTable::compute(&mesh()).unwrap();
        assert_eq!(m.next_hop(NodeId(0), NodeId(15)).unwrap(), NodeId(1));
        assert_eq!(m.path(NodeId(0), NodeId(15)).unwrap(), ids(&[0, 1, 2, 3, 7, 11, 15]));

        let k = RoutingTable::compute(&king()).unwrap();
        assert_eq!(k.next_hop(NodeId(0), NodeId(15)).unwrap(), NodeId(5));
        assert_eq!(k.path(NodeId(0), NodeId(15)).unwrap(), ids(&[0, 5, 10, 15]));
    }

    #[test]
    fn path_graph_only_route() {
        let p = LinkParams::default();
        let t = Topology::custom(3, vec![LinkSpec::new(0, 1, p), LinkSpec::new(1, 2, p)]).unwrap();
        let r = RoutingTable::compute(&t).unwrap();
        assert_eq!(r.next_hop(NodeId(0), NodeId(2)).unwrap(), NodeId(1));
    }

    #[test]
    fn next_hop_at_destination_is_error() {
        let r = RoutingTable::compute(&mesh()).unwrap();
        assert_eq!(r.next_hop(NodeId(3), NodeId(3)), Err(RoutingError::AtDestination { node: NodeId(3) }));
        assert!(matches!(r.next_hop(NodeId(16), NodeId(3)), Err(RoutingError::UnknownNode { .. })));
    }

    #[test]
    fn disconnected_names_pair() {
        let p = LinkParams::default();
        let t = Topology::custom(4, vec![LinkSpec::new(0, 1, p), LinkSpec::new(2, 3, p)]).unwrap();
        let e = RoutingTable::compute(&t).unwrap_err();
        assert!(matches!(e, RoutingError::Disconnected { .. }));
    }

    #[test]
    fn fingerprint_detects_other_topology() {
        let r = RoutingTable::compute(&mesh()).unwrap();
        assert!(r.matches(&mesh()));
        assert!(!r.matches(&king()));
    }

    #[test]
    fn dump_format() {
        let p = LinkParams::default();
        let t = Topology::custom(3, vec![LinkSpec::new(0, 1, p), LinkSpec::new(1, 2, p)]).unwrap();
        let dump = RoutingTable::compute(&t).unwrap().dump();
        let lines: Vec<&str> = dump.lines().collect();
        assert_eq!(lines.len(), 6);
        assert_eq!(lines[0], "route 0 1 1");
        assert_eq!(lines[1], "route 0 2 1 2");
    }
}
