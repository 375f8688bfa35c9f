//! Discrete-event store-and-forward packet engine.
//!
//! Every node owns one drop-tail FIFO output port per neighbor. A port
//! serializes one packet at a time; a packet starts serializing at
//! `max(arrival, port free)` and reaches the next node after serialization,
//! propagation and the receiving switch's processing delay. Events run in
//! `(time, sequence)` order, and each node draws inter-arrival gaps and
//! destinations from its own seeded streams, so a run is a pure function of
//! its inputs and seed.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::metrics::trace::{QueueSample, TraceEvent, TraceRecord};
use crate::metrics::{Metrics, MetricsError};
use crate::routing::RoutingTable;
use crate::time::SimTime;
use crate::topology::{NodeId, Topology};
use crate::traffic::{InjectionProcess, TrafficError, TrafficModel};

pub type PacketId = u64;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EngineError {
    #[error("routing table was not computed from this topology")]
    TopologyMismatch,
    #[error("bandwidth must be positive and finite, got {0}")]
    InvalidBandwidth(f64),
    #[error("invalid simulation parameter {name} = {value}")]
    InvalidParam { name: &'static str, value: f64 },
    #[error("scheduled packet #{index}: {message}")]
    InvalidPacket { index: usize, message: String },
    #[error(transparent)]
    Traffic(#[from] TrafficError),
}

/// Serialization plus propagation time of one packet over one link.
pub fn transmit_time(packet_size: u64, bandwidth: f64, propagation_delay: f64) -> Result<SimTime, EngineError> {
    if !(bandwidth > 0.0 && bandwidth.is_finite()) {
        return Err(EngineError::InvalidBandwidth(bandwidth));
    }
    let prop = SimTime::from_units(propagation_delay)
        .ok_or(EngineError::InvalidParam { name: "propagation_delay", value: propagation_delay })?;
    Ok(serialization_time(packet_size, bandwidth) + prop)
}

fn serialization_time(packet_size: u64, bandwidth: f64) -> SimTime {
    SimTime::from_units(packet_size as f64 / bandwidth).unwrap_or(SimTime::MAX)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub id: PacketId,
    pub source: NodeId,
    pub destination: NodeId,
    pub size: u64,
    pub created_at: SimTime,
    pub delivered_at: Option<SimTime>,
    pub dropped_at: Option<SimTime>,
}

impl Packet {
    pub fn delay(&self) -> Option<SimTime> {
        self.delivered_at.map(|d| d - self.created_at)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnqueueOutcome {
    Accepted,
    Dropped,
}

/// Drop-tail FIFO in front of one directed link. Capacity 0 means unbounded.
/// The packet being serialized is not counted against capacity.
#[derive(Debug, Clone)]
pub struct OutputPort {
    pub owner: NodeId,
    pub toward: NodeId,
    capacity: usize,
    queue: VecDeque<PacketId>,
    busy_until: SimTime,
    transmitting: bool,
}

impl OutputPort {
    pub fn new(owner: NodeId, toward: NodeId, capacity: usize) -> Self {
        OutputPort { owner, toward, capacity, queue: VecDeque::new(), busy_until: SimTime::ZERO, transmitting: false }
    }

    pub fn enqueue(&mut self, packet: PacketId, _now: SimTime) -> EnqueueOutcome {
        if self.capacity != 0 && self.queue.len() >= self.capacity {
            return EnqueueOutcome::Dropped;
        }
        self.queue.push_back(packet);
        EnqueueOutcome::Accepted
    }

    pub fn dequeue(&mut self) -> Option<PacketId> {
        self.queue.pop_front()
    }

    pub fn len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_empty(&self) -> bool {
        self.queue.is_empty()
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn is_transmitting(&self) -> bool {
        self.transmitting
    }

    pub fn busy_until(&self) -> SimTime {
        self.busy_until
    }
}

/// Run-wide knobs, in time-units.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimParams {
    pub duration: f64,
    pub warmup: f64,
    /// Per-hop processing latency of a switch.
    pub switch_delay: f64,
    /// Latency between a resource generating a packet and the packet reaching
    /// its router's output queue.
    pub injection_latency: f64,
    /// Output queue capacity in packets; 0 means unbounded.
    pub queue_capacity: usize,
    /// Queue-monitor period; 0 disables sampling.
    pub monitor_interval: f64,
    /// Keep the full event trace in the result.
    pub record_trace: bool,
}

impl Default for SimParams {
    fn default() -> Self {
        SimParams {
            duration: 10_000.0,
            warmup: 0.0,
            switch_delay: 0.0,
            injection_latency: 0.0,
            queue_capacity: 1000,
            monitor_interval: 100.0,
            record_trace: true,
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct ClockParams {
    duration: SimTime,
    warmup: SimTime,
    switch_delay: SimTime,
    injection_latency: SimTime,
    monitor_interval: Option<SimTime>,
}

impl SimParams {
    fn clock(&self) -> Result<ClockParams, EngineError> {
        let t = |name, value: f64| SimTime::from_units(value).ok_or(EngineError::InvalidParam { name, value });
        let duration = t("duration", self.duration)?;
        if duration == SimTime::ZERO {
            return Err(EngineError::InvalidParam { name: "duration", value: self.duration });
        }
        let warmup = t("warmup", self.warmup)?;
        if warmup >= duration {
            return Err(EngineError::InvalidParam { name: "warmup", value: self.warmup });
        }
        let monitor = t("monitor_interval", self.monitor_interval)?;
        Ok(ClockParams {
            duration,
            warmup,
            switch_delay: t("switch_delay", self.switch_delay)?,
            injection_latency: t("injection_latency", self.injection_latency)?,
            monitor_interval: (monitor > SimTime::ZERO).then_some(monitor),
        })
    }
}

/// A packet injected at a fixed time, for hand-built workloads.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScheduledPacket {
    pub at: f64,
    pub source: NodeId,
    pub destination: NodeId,
    pub size: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Workload {
    Synthetic { model: TrafficModel, process: InjectionProcess },
    Explicit(Vec<ScheduledPacket>),
}

#[derive(Debug, Clone)]
pub struct SimResult {
    pub trace: Vec<TraceRecord>,
    /// Every generated packet, indexed by id.
    pub packets: Vec<Packet>,
    pub injected: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub queue_samples: Vec<QueueSample>,
    pub duration: SimTime,
    pub warmup: SimTime,
    pub events_processed: u64,
}

impl SimResult {
    /// Packets neither delivered nor dropped, counted from packet state
    /// rather than from the event counters.
    pub fn in_flight(&self) -> u64 {
        self.packets.iter().filter(|p| p.delivered_at.is_none() && p.dropped_at.is_none()).count() as u64
    }

    /// `injected = delivered + dropped + in-flight`, with the left side and
    /// the first two terms taken from event counters.
    pub fn is_conserved(&self) -> bool {
        self.packets.len() as u64 == self.injected && self.injected == self.delivered + self.dropped + self.in_flight()
    }

    pub fn metrics(&self) -> Result<Metrics, MetricsError> {
        Metrics::from_packets(&self.packets, self.duration, self.warmup, &self.queue_samples)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    Inject(NodeId),
    InjectScheduled(usize),
    LinkArrival { packet: PacketId, node: NodeId },
    PortFree { port: usize },
    MonitorSample,
}

#[derive(Debug, PartialEq, Eq, PartialOrd, Ord)]
struct Event {
    time: SimTime,
    sequence: u64,
    kind: EventKind,
}

/// Per-node random streams: one for inter-arrival gaps, one for destinations.
struct NodeStreams {
    arrivals: ChaCha8Rng,
    destinations: ChaCha8Rng,
}

impl NodeStreams {
    fn new(seed: u64, node: NodeId) -> Self {
        let stream = |k: u64| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(2 * node.index() as u64 + k);
            rng
        };
        NodeStreams { arrivals: stream(0), destinations: stream(1) }
    }
}

/// Mutable state of one run.
pub struct Simulation<'a> {
    topology: &'a Topology,
    routing: &'a RoutingTable,
    clock: ClockParams,
    record_trace: bool,
    ports: Vec<OutputPort>,
    // First port index of each node; ports of a node are ordered like its neighbors.
    port_base: Vec<usize>,
    // Serialization bandwidth and propagation + switch latency per port.
    port_bandwidth: Vec<f64>,
    port_latency: Vec<SimTime>,
    events: BinaryHeap<Reverse<Event>>,
    next_sequence: u64,
    now: SimTime,
    packets: Vec<Packet>,
    trace: Vec<TraceRecord>,
    queue_samples: Vec<QueueSample>,
    injected: u64,
    delivered: u64,
    dropped: u64,
    events_processed: u64,
}

impl<'a> Simulation<'a> {
    pub fn new(topology: &'a Topology, routing: &'a RoutingTable, params: &SimParams) -> Result<Self, EngineError> {
        if !routing.matches(topology) {
            return Err(EngineError::TopologyMismatch);
        }
        let clock = params.clock()?;
        let mut ports = Vec::new();
        let mut port_base = Vec::with_capacity(topology.node_count());
        let mut port_bandwidth = Vec::new();
        let mut port_latency = Vec::new();
        for node in topology.nodes() {
            port_base.push(ports.len());
            for &(toward, link) in topology.neighbor_slice(node) {
                let link = &topology.links()[link];
                ports.push(OutputPort::new(node, toward, params.queue_capacity));
                port_bandwidth.push(link.bandwidth);
                let prop = SimTime::from_units(link.propagation_delay).expect("validated by topology");
                port_latency.push(prop + clock.switch_delay);
            }
        }
        Ok(Simulation {
            topology,
            routing,
            clock,
            record_trace: params.record_trace,
            ports,
            port_base,
            port_bandwidth,
            port_latency,
            events: BinaryHeap::new(),
            next_sequence: 0,
            now: SimTime::ZERO,
            packets: Vec::new(),
            trace: Vec::new(),
            queue_samples: Vec::new(),
            injected: 0,
            delivered: 0,
            dropped: 0,
            events_processed: 0,
        })
    }

    pub fn now(&self) -> SimTime {
        self.now
    }

    pub fn ports(&self) -> &[OutputPort] {
        &self.ports
    }

    pub fn trace(&self) -> &[TraceRecord] {
        &self.trace
    }

    fn port_index(&self, node: NodeId, toward: NodeId) -> usize {
        let offset = self
            .topology
            .neighbor_slice(node)
            .binary_search_by_key(&toward, |&(n, _)| n)
            .expect("next hop is a neighbor");
        self.port_base[node.index()] + offset
    }

    fn schedule(&mut self, time: SimTime, kind: EventKind) {
        let sequence = self.next_sequence;
        self.next_sequence += 1;
        self.events.push(Reverse(Event { time, sequence, kind }));
    }

    fn record(&mut self, event: TraceEvent, node: NodeId, packet: PacketId) {
        if !self.record_trace {
            return;
        }
        let p = &self.packets[packet as usize];
        self.trace.push(TraceRecord {
            event,
            time: self.now,
            node,
            packet_id: p.id,
            src: p.source,
            dst: p.destination,
            size: p.size,
        });
    }

    /// Instantaneous queue length of every output port, ordered by
    /// `(node, toward)`.
    pub fn sample_queues(&self, now: SimTime) -> Vec<QueueSample> {
        self.ports.iter().map(|p| QueueSample { time: now, node: p.owner, toward: p.toward, length: p.len() }).collect()
    }

    /// Creates a packet at `source` now, writing its GEN record.
    fn generate(&mut self, source: NodeId, destination: NodeId, size: u64) -> PacketId {
        let id = self.packets.len() as PacketId;
        self.packets.push(Packet {
            id,
            source,
            destination,
            size,
            created_at: self.now,
            delivered_at: None,
            dropped_at: None,
        });
        self.injected += 1;
        self.record(TraceEvent::Gen, source, id);
        if self.clock.injection_latency == SimTime::ZERO {
            self.arrive(id, source);
        } else {
            self.schedule(self.now + self.clock.injection_latency, EventKind::LinkArrival { packet: id, node: source });
        }
        id
    }

    /// Packet `id` is fully present at `node`: deliver it or queue it toward
    /// the next hop.
    fn arrive(&mut self, id: PacketId, node: NodeId) {
        let destination = self.packets[id as usize].destination;
        if node == destination {
            self.packets[id as usize].delivered_at = Some(self.now);
            self.delivered += 1;
            self.record(TraceEvent::Rcv, node, id);
            return;
        }
        let next = self.routing.next_hop_unchecked(node, destination);
        let port = self.port_index(node, next);
        self.enqueue(port, id);
    }

    /// Offers a packet to a port, writing ENQ or DRP, and starts
    /// transmission if the port is idle.
    pub fn enqueue(&mut self, port: usize, id: PacketId) -> EnqueueOutcome {
        let node = self.ports[port].owner;
        let outcome = self.ports[port].enqueue(id, self.now);
        match outcome {
            EnqueueOutcome::Accepted => {
                self.record(TraceEvent::Enq, node, id);
                if !self.ports[port].transmitting {
                    self.start_transmission(port);
                }
            }
            EnqueueOutcome::Dropped => {
                self.packets[id as usize].dropped_at = Some(self.now);
                self.dropped += 1;
                self.record(TraceEvent::Drp, node, id);
            }
        }
        outcome
    }

    fn start_transmission(&mut self, port: usize) {
        let Some(id) = self.ports[port].dequeue() else {
            self.ports[port].transmitting = false;
            return;
        };
        let node = self.ports[port].owner;
        let toward = self.ports[port].toward;
        self.record(TraceEvent::Deq, node, id);
        let done = self.now + serialization_time(self.packets[id as usize].size, self.port_bandwidth[port]);
        let p = &mut self.ports[port];
        p.transmitting = true;
        p.busy_until = done;
        self.schedule(done, EventKind::PortFree { port });
        self.schedule(done + self.port_latency[port], EventKind::LinkArrival { packet: id, node: toward });
    }

    fn run_loop(&mut self, mut on_inject: impl FnMut(&mut Self, EventKind)) {
        while let Some(Reverse(top)) = self.events.peek() {
            if top.time > self.clock.duration {
                break;
            }
            let Reverse(event) = self.events.pop().expect("peeked");
            debug_assert!(event.time >= self.now, "event causality");
            self.now = event.time;
            self.events_processed += 1;
            match event.kind {
                EventKind::LinkArrival { packet, node } => self.arrive(packet, node),
                EventKind::PortFree { port } => {
                    self.ports[port].transmitting = false;
                    self.start_transmission(port);
                }
                EventKind::MonitorSample => {
                    let samples = self.sample_queues(self.now);
                    self.queue_samples.extend(samples);
                    if let Some(interval) = self.clock.monitor_interval {
                        self.schedule(self.now + interval, EventKind::MonitorSample);
                    }
                }
                kind @ (EventKind::Inject(_) | EventKind::InjectScheduled(_)) => on_inject(self, kind),
            }
        }
    }

    fn start_monitor(&mut self) {
        if let Some(interval) = self.clock.monitor_interval {
            self.schedule(interval, EventKind::MonitorSample);
        }
    }

    /// Runs a workload to completion and returns the outcome.
    pub fn run(mut self, workload: &Workload, seed: u64) -> Result<SimResult, EngineError> {
        match workload {
            Workload::Synthetic { model, process } => {
                model.validate(self.topology)?;
                process.validate()?;
                let mut streams: Vec<NodeStreams> = self.topology.nodes().map(|n| NodeStreams::new(seed, n)).collect();
                let n = self.topology.node_count();
                self.start_monitor();
                for node in self.topology.nodes() {
                    // A fixed-point node under the complement pattern never sends.
                    if *model == TrafficModel::FixedComplement && n - 1 - node.index() == node.index() {
                        continue;
                    }
                    let first = process.first_injection_time(node, &mut streams[node.index()].arrivals);
                    if first <= self.clock.duration {
                        self.schedule(first, EventKind::Inject(node));
                    }
                }
                let topology = self.topology;
                self.run_loop(|sim, kind| {
                    let EventKind::Inject(node) = kind else { return };
                    let s = &mut streams[node.index()];
                    let destination = model
                        .select_destination(topology, node, &mut s.destinations)
                        .expect("validated model and node")
                        .expect("fixed-point nodes are never scheduled");
                    sim.generate(node, destination, process.packet_size);
                    let next = process.next_injection_time(node, sim.now, &mut s.arrivals);
                    if next <= sim.clock.duration {
                        sim.schedule(next, EventKind::Inject(node));
                    }
                });
            }
            Workload::Explicit(list) => {
                let n = self.topology.node_count();
                let mut times = Vec::with_capacity(list.len());
                for (index, p) in list.iter().enumerate() {
                    let bad = |message: String| EngineError::InvalidPacket { index, message };
                    if p.source.index() >= n || p.destination.index() >= n {
                        return Err(bad(format!("endpoint outside 0..{n}")));
                    }
                    if p.source == p.destination {
                        return Err(bad("source equals destination".into()));
                    }
                    if p.size == 0 {
                        return Err(bad("zero size".into()));
                    }
                    times.push(SimTime::from_units(p.at).ok_or_else(|| bad(format!("invalid time {}", p.at)))?);
                }
                self.start_monitor();
                for (index, &at) in times.iter().enumerate() {
                    if at <= self.clock.duration {
                        self.schedule(at, EventKind::InjectScheduled(index));
                    }
                }
                self.run_loop(|sim, kind| {
                    let EventKind::InjectScheduled(index) = kind else { return };
                    let p = list[index];
                    sim.generate(p.source, p.destination, p.size);
                });
            }
        }
        Ok(SimResult {
            injected: self.injected,
            delivered: self.delivered,
            dropped: self.dropped,
            trace: self.trace,
            packets: self.packets,
            queue_samples: self.queue_samples,
            duration: self.clock.duration,
            warmup: self.clock.warmup,
            events_processed: self.events_processed,
        })
    }
}

/// Simulates synthetic traffic over `topology` with the given routing table.
pub fn run_simulation(
    topology: &Topology,
    routing: &RoutingTable,
    model: TrafficModel,
    process: InjectionProcess,
    params: &SimParams,
    seed: u64,
) -> Result<SimResult, EngineError> {
    run_workload(topology, routing, &Workload::Synthetic { model, process }, params, seed)
}

pub fn run_workload(
    topology: &Topology,
    routing: &RoutingTable,
    workload: &Workload,
    params: &SimParams,
    seed: u64,
) -> Result<SimResult, EngineError> {
    Simulation::new(topology, routing, params)?.run(workload, seed)
}
