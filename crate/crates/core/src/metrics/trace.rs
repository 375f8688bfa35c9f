//! Line-oriented trace and queue-sample file formats.
//!
//! Trace lines are `<EVT> <time> <node> <pkt_id> <src> <dst> <size>` and queue
//! samples are `Q <time> <node> <toward> <length>`. Times always carry six
//! decimals, so writing a parsed file reproduces it byte for byte.

use std::collections::HashSet;
use std::fmt;
use std::io::{self, BufRead, Write};
use std::str::FromStr;

use crate::time::SimTime;
use crate::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum TraceEvent {
    /// Packet generated at its source.
    Gen,
    /// Packet appended to an output queue.
    Enq,
    /// Packet left an output queue and began serialization.
    Deq,
    /// Packet delivered at its destination.
    Rcv,
    /// Packet discarded by a full output queue.
    Drp,
}

impl TraceEvent {
    pub fn as_str(&self) -> &'static str {
        match self {
            TraceEvent::Gen => "GEN",
            TraceEvent::Enq => "ENQ",
            TraceEvent::Deq => "DEQ",
            TraceEvent::Rcv => "RCV",
            TraceEvent::Drp => "DRP",
        }
    }
}

impl FromStr for TraceEvent {
    type Err = ();
    fn from_str(s: &str) -> Result<Self, ()> {
        Ok(match s {
            "GEN" => TraceEvent::Gen,
            "ENQ" => TraceEvent::Enq,
            "DEQ" => TraceEvent::Deq,
            "RCV" => TraceEvent::Rcv,
            "DRP" => TraceEvent::Drp,
            _ => return Err(()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TraceRecord {
    pub event: TraceEvent,
    pub time: SimTime,
    pub node: NodeId,
    pub packet_id: u64,
    pub src: NodeId,
    pub dst: NodeId,
    pub size: u64,
}

impl fmt::Display for TraceRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {} {} {} {} {} {}",
            self.event.as_str(),
            self.time,
            self.node,
            self.packet_id,
            self.src,
            self.dst,
            self.size
        )
    }
}

/// One queue-monitor observation of an output port.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueueSample {
    pub time: SimTime,
    pub node: NodeId,
    pub toward: NodeId,
    pub length: usize,
}

impl fmt::Display for QueueSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Q {} {} {} {}", self.time, self.node, self.toward, self.length)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: RCV for packet {packet_id} without a preceding GEN")]
    ReceiveWithoutGen { line: usize, packet_id: u64 },
    #[error("line {line}: packet {packet_id} generated twice")]
    DuplicateGen { line: usize, packet_id: u64 },
    #[error("line {line}: time goes backwards")]
    TimeReversal { line: usize },
    #[error(transparent)]
    Io(#[from] io::Error),
}

fn field<T: FromStr>(fields: &[&str], i: usize, what: &str, line: usize) -> Result<T, TraceError> {
    fields[i].parse().map_err(|_| TraceError::Malformed { line, message: format!("invalid {what} `{}`", fields[i]) })
}

/// Reads a trace, checking syntax, time ordering and GEN/RCV pairing.
pub fn parse_trace<R: BufRead>(reader: R) -> Result<Vec<TraceRecord>, TraceError> {
    let mut records = Vec::new();
    let mut generated = HashSet::new();
    let mut last_time = SimTime::ZERO;
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        if fields.len() != 7 {
            return Err(TraceError::Malformed {
                line: line_no,
                message: format!("expected 7 fields, found {}", fields.len()),
            });
        }
        let event: TraceEvent = fields[0]
            .parse()
            .map_err(|_| TraceError::Malformed { line: line_no, message: format!("unknown event `{}`", fields[0]) })?;
        let record = TraceRecord {
            event,
            time: field(&fields, 1, "time", line_no)?,
            node: NodeId(field(&fields, 2, "node", line_no)?),
            packet_id: field(&fields, 3, "packet id", line_no)?,
            src: NodeId(field(&fields, 4, "source", line_no)?),
            dst: NodeId(field(&fields, 5, "destination", line_no)?),
            size: field(&fields, 6, "size", line_no)?,
        };
        if record.time < last_time {
            return Err(TraceError::TimeReversal { line: line_no });
        }
        last_time = record.time;
        match event {
            TraceEvent::Gen => {
                if !generated.insert(record.packet_id) {
                    return Err(TraceError::DuplicateGen { line: line_no, packet_id: record.packet_id });
                }
            }
            TraceEvent::Rcv if !generated.contains(&record.packet_id) => {
                return Err(TraceError::ReceiveWithoutGen { line: line_no, packet_id: record.packet_id });
            }
            _ => {}
        }
        records.push(record);
    }
    Ok(records)
}

pub fn write_trace<W: Write>(records: &[TraceRecord], mut out: W) -> io::Result<()> {
    for r in records {
        writeln!(out, "{r}")?;
    }
    out.flush()
}

pub fn write_queue_samples<W: Write>(samples: &[QueueSample], mut out: W) -> io::Result<()> {
    for s in samples {
        writeln!(out, "{s}")?;
    }
    out.flush()
}

pub fn parse_queue_samples<R: BufRead>(reader: R) -> Result<Vec<QueueSample>, TraceError> {
    let mut samples = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(' ').collect();
        if fields.len() != 5 || fields[0] != "Q" {
            return Err(TraceError::Malformed {
                line: line_no,
                message: "expected `Q <time> <node> <toward> <length>`".into(),
            });
        }
        samples.push(QueueSample {
            time: field(&fields, 1, "time", line_no)?,
            node: NodeId(field(&fields, 2, "node", line_no)?),
            toward: NodeId(field(&fields, 3, "toward", line_no)?),
            length: field(&fields, 4, "length", line_no)?,
        });
    }
    Ok(samples)
}
