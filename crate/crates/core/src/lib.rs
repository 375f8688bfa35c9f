//! Packet-level discrete-event simulator for on-chip interconnection
//! networks.
//!
//! A run wires together a [`topology::Topology`] (2D mesh, 2D diagonal mesh
//! or an edge-list graph), a static minimal-hop [`routing::RoutingTable`], a
//! destination-selection [`traffic::TrafficModel`] with an
//! [`traffic::InjectionProcess`], and the store-and-forward [`engine`]. The
//! [`metrics`] module turns the resulting trace into average packet delay,
//! throughput and queue statistics, and [`experiment`] drives configured
//! runs and rate sweeps.

pub mod engine;
pub mod experiment;
pub mod metrics;
pub mod routing;
pub mod time;
pub mod topology;
pub mod traffic;

pub use engine::{run_simulation, run_workload, Packet, ScheduledPacket, SimParams, SimResult, Workload};
pub use metrics::trace::{QueueSample, TraceEvent, TraceRecord};
pub use metrics::Metrics;
pub use routing::RoutingTable;
pub use time::SimTime;
pub use topology::{LinkParams, LinkSpec, NodeId, Topology, TopologyKind};
pub use traffic::{InjectionDiscipline, InjectionProcess, TrafficModel};
