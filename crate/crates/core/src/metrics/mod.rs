//! Delay, throughput and queue statistics, computed either live from the
//! engine's packet records or from a written trace. Both routes visit
//! packets in id order and sum in double precision, so they agree exactly.

pub mod trace;

use std::collections::BTreeMap;
use std::io::{self, Write};

use crate::engine::Packet;
use crate::time::SimTime;
use crate::topology::NodeId;
use trace::{QueueSample, TraceEvent, TraceRecord};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricsError {
    #[error("no delivered packets in the measurement window")]
    NoSamples,
    #[error("duration {duration} must exceed warmup {warmup}")]
    EmptyWindow { duration: SimTime, warmup: SimTime },
}

/// Per-port summary of queue-monitor samples.
#[derive(Debug, Clone, PartialEq)]
pub struct PortQueueStats {
    pub node: NodeId,
    pub toward: NodeId,
    pub mean: f64,
    pub max: usize,
    pub samples: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Metrics {
    /// Mean end-to-end delay over delivered packets, `None` when none were.
    pub average_delay: Option<f64>,
    pub min_delay: Option<f64>,
    pub max_delay: Option<f64>,
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    /// Delivered packets per time-unit over the measurement window.
    pub throughput: f64,
    pub queues: Vec<PortQueueStats>,
}

/// Per-packet outcome extracted from either source.
#[derive(Debug, Clone, Copy, Default)]
struct Fate {
    created: SimTime,
    delivered: Option<SimTime>,
    dropped: bool,
}

#[derive(Default)]
struct DelayAccumulator {
    sum: f64,
    count: u64,
    min: Option<f64>,
    max: Option<f64>,
}

impl DelayAccumulator {
    fn push(&mut self, delay: f64) {
        self.sum += delay;
        self.count += 1;
        self.min = Some(self.min.map_or(delay, |m| m.min(delay)));
        self.max = Some(self.max.map_or(delay, |m| m.max(delay)));
    }

    fn mean(&self) -> Option<f64> {
        (self.count > 0).then(|| self.sum / self.count as f64)
    }
}

/// Packets generated at or after `warmup`, keyed by id.
fn fates_from_trace(trace: &[TraceRecord], warmup: SimTime) -> BTreeMap<u64, Fate> {
    let mut fates = BTreeMap::new();
    for r in trace {
        match r.event {
            TraceEvent::Gen if r.time >= warmup => {
                fates.insert(r.packet_id, Fate { created: r.time, ..Fate::default() });
            }
            TraceEvent::Rcv => {
                if let Some(f) = fates.get_mut(&r.packet_id) {
                    f.delivered = Some(r.time);
                }
            }
            TraceEvent::Drp => {
                if let Some(f) = fates.get_mut(&r.packet_id) {
                    f.dropped = true;
                }
            }
            _ => {}
        }
    }
    fates
}

fn delays<'a>(fates: impl Iterator<Item = &'a Fate>) -> DelayAccumulator {
    let mut acc = DelayAccumulator::default();
    for f in fates {
        if let Some(d) = f.delivered {
            acc.push((d - f.created).as_units());
        }
    }
    acc
}

/// Mean of `RCV.time - GEN.time` over packets generated at or after `warmup`
/// that were delivered within the trace.
pub fn average_packet_delay(trace: &[TraceRecord], warmup: SimTime) -> Result<f64, MetricsError> {
    delays(fates_from_trace(trace, warmup).values()).mean().ok_or(MetricsError::NoSamples)
}

/// Delivered packets (generated at or after `warmup`) per time-unit of the
/// window `[warmup, duration]`.
pub fn throughput(trace: &[TraceRecord], duration: SimTime, warmup: SimTime) -> Result<f64, MetricsError> {
    let span = window(duration, warmup)?;
    let delivered = fates_from_trace(trace, warmup).values().filter(|f| f.delivered.is_some()).count();
    Ok(delivered as f64 / span)
}

fn window(duration: SimTime, warmup: SimTime) -> Result<f64, MetricsError> {
    if duration <= warmup {
        return Err(MetricsError::EmptyWindow { duration, warmup });
    }
    Ok((duration - warmup).as_units())
}

/// Unweighted mean and maximum queue length per `(node, toward)` port,
/// ordered by port.
pub fn queue_statistics(samples: &[QueueSample]) -> Vec<PortQueueStats> {
    let mut by_port: BTreeMap<(NodeId, NodeId), (u64, usize, usize)> = BTreeMap::new();
    for s in samples {
        let e = by_port.entry((s.node, s.toward)).or_insert((0, 0, 0));
        e.0 += s.length as u64;
        e.1 = e.1.max(s.length);
        e.2 += 1;
    }
    by_port
        .into_iter()
        .map(|((node, toward), (sum, max, n))| PortQueueStats {
            node,
            toward,
            mean: sum as f64 / n as f64,
            max,
            samples: n,
        })
        .collect()
}

impl Metrics {
    fn assemble<'a>(
        fates: impl Iterator<Item = &'a Fate> + Clone,
        duration: SimTime,
        warmup: SimTime,
        samples: &[QueueSample],
    ) -> Result<Self, MetricsError> {
        let span = window(duration, warmup)?;
        let acc = delays(fates.clone());
        let (generated, dropped) = fates.fold((0u64, 0u64), |(g, d), f| (g + 1, d + f.dropped as u64));
        Ok(Metrics {
            average_delay: acc.mean(),
            min_delay: acc.min,
            max_delay: acc.max,
            generated,
            delivered: acc.count,
            dropped,
            throughput: acc.count as f64 / span,
            queues: queue_statistics(samples),
        })
    }

    /// Metrics recomputed from a trace.
    pub fn from_trace(
        trace: &[TraceRecord],
        duration: SimTime,
        warmup: SimTime,
        samples: &[QueueSample],
    ) -> Result<Self, MetricsError> {
        let fates = fates_from_trace(trace, warmup);
        Self::assemble(fates.values(), duration, warmup, samples)
    }

    /// Metrics from the engine's packet records, which are in id order.
    pub fn from_packets(
        packets: &[Packet],
        duration: SimTime,
        warmup: SimTime,
        samples: &[QueueSample],
    ) -> Result<Self, MetricsError> {
        let fates: Vec<Fate> = packets
            .iter()
            .filter(|p| p.created_at >= warmup)
            .map(|p| Fate { created: p.created_at, delivered: p.delivered_at, dropped: p.dropped_at.is_some() })
            .collect();
        Self::assemble(fates.iter(), duration, warmup, samples)
    }

    /// Mean over ports of each port's mean sampled queue length.
    pub fn mean_queue_length(&self) -> Option<f64> {
        (!self.queues.is_empty()).then(|| self.queues.iter().map(|q| q.mean).sum::<f64>() / self.queues.len() as f64)
    }

    /// Writes `key = value` lines.
    pub fn write_summary<W: Write>(&self, mut out: W) -> io::Result<()> {
        let opt = |v: Option<f64>| v.map_or_else(|| "none".to_string(), |v| format!("{v:.6}"));
        writeln!(out, "avg_delay = {}", opt(self.average_delay))?;
        writeln!(out, "generated = {}", self.generated)?;
        writeln!(out, "delivered = {}", self.delivered)?;
        writeln!(out, "dropped = {}", self.dropped)?;
        writeln!(out, "throughput = {:.6}", self.throughput)?;
        writeln!(out, "max_delay = {}", opt(self.max_delay))?;
        out.flush()
    }
}
