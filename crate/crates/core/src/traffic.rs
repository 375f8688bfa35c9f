//! Destination-selection models and the packet injection process.

use rand::Rng;
use rand_distr::{Distribution, Exp};

use crate::time::SimTime;
use crate::topology::{NodeId, Topology};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TrafficModel {
    /// With probability `range1` a uniformly random neighbor of the source,
    /// otherwise a uniformly random node that is neither the source nor one of
    /// its neighbors. Neighbor sets come from the active topology.
    LocalityRandom { range1: f64 },
    /// `destination = (N - 1) - source`.
    FixedComplement,
    /// Uniform over every node except the source.
    UniformRandom,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TrafficError {
    #[error("range1 must lie in [0, 1], got {0}")]
    Range1OutOfRange(f64),
    #[error("{model} traffic needs at least 2 nodes, topology has {node_count}")]
    TooFewNodes { model: &'static str, node_count: usize },
    #[error("node {node} has no non-neighbors, so range1 = {range1} < 1 cannot be honored")]
    EmptyNonNeighborPool { node: NodeId, range1: f64 },
    #[error("node {node} has no neighbors, so range1 = {range1} > 0 cannot be honored")]
    EmptyNeighborPool { node: NodeId, range1: f64 },
    #[error("injection rate must be positive and finite, got {0}")]
    InvalidRate(f64),
    #[error("packet size must be positive")]
    ZeroPacketSize,
    #[error("source {node} is not in 0..{node_count}")]
    UnknownSource { node: NodeId, node_count: usize },
}

impl TrafficModel {
    pub fn name(&self) -> &'static str {
        match self {
            TrafficModel::LocalityRandom { .. } => "locality",
            TrafficModel::FixedComplement => "fixed",
            TrafficModel::UniformRandom => "uniform",
        }
    }

    /// Checks the model against a topology before any packet is drawn.
    pub fn validate(&self, topology: &Topology) -> Result<(), TrafficError> {
        let n = topology.node_count();
        match *self {
            TrafficModel::LocalityRandom { range1 } => {
                if !(0.0..=1.0).contains(&range1) {
                    return Err(TrafficError::Range1OutOfRange(range1));
                }
                if n < 2 {
                    return Err(TrafficError::TooFewNodes { model: self.name(), node_count: n });
                }
                for node in topology.nodes() {
                    let degree = topology.neighbor_slice(node).len();
                    if range1 < 1.0 && degree + 1 == n {
                        return Err(TrafficError::EmptyNonNeighborPool { node, range1 });
                    }
                    if range1 > 0.0 && degree == 0 {
                        return Err(TrafficError::EmptyNeighborPool { node, range1 });
                    }
                }
                Ok(())
            }
            TrafficModel::UniformRandom if n < 2 => {
                Err(TrafficError::TooFewNodes { model: self.name(), node_count: n })
            }
            TrafficModel::UniformRandom | TrafficModel::FixedComplement => Ok(()),
        }
    }

    /// Picks a destination for a packet generated at `source`.
    ///
    /// Returns `None` only for [`TrafficModel::FixedComplement`] when the source
    /// is its own complement (the middle node of an odd-sized network), which
    /// then generates no traffic. A source whose chosen pool is empty is an
    /// error; [`TrafficModel::validate`] rules that out up front.
    pub fn select_destination<R: Rng + ?Sized>(
        &self,
        topology: &Topology,
        source: NodeId,
        rng: &mut R,
    ) -> Result<Option<NodeId>, TrafficError> {
        let n = topology.node_count();
        if source.index() >= n {
            return Err(TrafficError::UnknownSource { node: source, node_count: n });
        }
        let pick = match *self {
            TrafficModel::LocalityRandom { range1 } => {
                let neighbors = topology.neighbor_slice(source);
                if rng.random::<f64>() < range1 {
                    if neighbors.is_empty() {
                        return Err(TrafficError::EmptyNeighborPool { node: source, range1 });
                    }
                    neighbors[rng.random_range(0..neighbors.len())].0
                } else {
                    let pool = n - 1 - neighbors.len();
                    if pool == 0 {
                        return Err(TrafficError::EmptyNonNeighborPool { node: source, range1 });
                    }
                    let k = rng.random_range(0..pool);
                    nth_excluding(k, source, neighbors.iter().map(|&(v, _)| v))
                }
            }
            TrafficModel::FixedComplement => {
                let dest = NodeId(n - 1 - source.index());
                if dest == source {
                    return Ok(None);
                }
                dest
            }
            TrafficModel::UniformRandom => nth_excluding(rng.random_range(0..n - 1), source, std::iter::empty()),
        };
        Ok(Some(pick))
    }
}

/// The `k`-th node id (0-based, ascending) that is neither `source` nor in
/// `excluded`, which must be ascending.
fn nth_excluding(k: usize, source: NodeId, excluded: impl Iterator<Item = NodeId>) -> NodeId {
    let mut skip: Vec<usize> = excluded.map(NodeId::index).collect();
    let pos = skip.partition_point(|&v| v < source.index());
    skip.insert(pos, source.index());
    let mut candidate = k;
    for s in skip {
        if s <= candidate {
            candidate += 1;
        } else {
            break;
        }
    }
    NodeId(candidate)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InjectionDiscipline {
    /// Fixed gap of exactly `1 / rate`.
    Deterministic,
    /// Exponential gaps with mean `1 / rate`.
    Poisson,
}

impl InjectionDiscipline {
    pub fn name(&self) -> &'static str {
        match self {
            InjectionDiscipline::Deterministic => "deterministic",
            InjectionDiscipline::Poisson => "poisson",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InjectionProcess {
    /// Packets per node per time-unit.
    pub rate: f64,
    pub discipline: InjectionDiscipline,
    /// Data-units per packet.
    pub packet_size: u64,
}

impl InjectionProcess {
    pub fn new(rate: f64, discipline: InjectionDiscipline, packet_size: u64) -> Result<Self, TrafficError> {
        let p = InjectionProcess { rate, discipline, packet_size };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), TrafficError> {
        if !(self.rate > 0.0 && self.rate.is_finite()) {
            return Err(TrafficError::InvalidRate(self.rate));
        }
        if self.packet_size == 0 {
            return Err(TrafficError::ZeroPacketSize);
        }
        Ok(())
    }

    /// Time of a node's first injection. Deterministic sources start at a
    /// uniformly random phase in `(0, 1/rate]` so nodes do not inject in
    /// lockstep; Poisson sources draw an ordinary gap from time zero.
    pub fn first_injection_time<R: Rng + ?Sized>(&self, node: NodeId, rng: &mut R) -> SimTime {
        match self.discipline {
            InjectionDiscipline::Deterministic => {
                // random::<f64>() is in [0, 1); flip it to (0, 1].
                let phase = (1.0 - rng.random::<f64>()) / self.rate;
                SimTime::from_units(phase).unwrap_or(SimTime::MAX).max(SimTime::from_ticks(1))
            }
            InjectionDiscipline::Poisson => self.next_injection_time(node, SimTime::ZERO, rng),
        }
    }

    /// Time of the next injection at a node whose previous injection (or the
    /// start of the run) was at `now`. Always strictly later than `now`; gaps
    /// are rounded to the clock resolution with a floor of one tick.
    pub fn next_injection_time<R: Rng + ?Sized>(&self, _node: NodeId, now: SimTime, rng: &mut R) -> SimTime {
        let gap = match self.discipline {
            InjectionDiscipline::Deterministic => 1.0 / self.rate,
            InjectionDiscipline::Poisson => Exp::new(self.rate).expect("validated rate").sample(rng),
        };
        let gap = SimTime::from_units(gap).unwrap_or(SimTime::MAX);
        now.saturating_add(gap.max(SimTime::from_ticks(1)))
    }
}
