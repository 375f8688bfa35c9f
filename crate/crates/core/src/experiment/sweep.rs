//! Rate sweeps across topologies with paired, derived seeds.

use std::io::{self, Write};

use rayon::prelude::*;

use super::config::{ConfigError, SimConfig, TopologySource};
use crate::engine::{self, EngineError};
use crate::routing::{RoutingError, RoutingTable};
use crate::topology::{Topology, TopologyKind};

#[derive(Debug, thiserror::Error)]
pub enum SweepError {
    #[error("invalid rate list `{spec}`: {message}")]
    Rates { spec: String, message: String },
    #[error("unknown topology `{0}` (expected mesh, diagonal_mesh or custom)")]
    UnknownTopology(String),
    #[error("sweep needs at least one {0}")]
    Empty(&'static str),
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{topology}: {source}")]
    Routing { topology: String, source: RoutingError },
    #[error("{topology} at rate {rate} rep {rep}: {source}")]
    Run { topology: String, rate: f64, rep: usize, source: EngineError },
    #[error("cannot start worker pool: {0}")]
    Pool(String),
}

/// Which network a sweep leg runs on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TopologyChoice {
    Mesh,
    DiagonalMesh,
    /// The config's own topology (grid or edge-list file).
    Configured,
}

impl TopologyChoice {
    pub fn parse(name: &str) -> Result<Self, SweepError> {
        match name.trim() {
            "mesh" => Ok(TopologyChoice::Mesh),
            "diagonal_mesh" => Ok(TopologyChoice::DiagonalMesh),
            "custom" => Ok(TopologyChoice::Configured),
            other => Err(SweepError::UnknownTopology(other.to_string())),
        }
    }

    fn build(&self, config: &SimConfig) -> Result<(String, Topology), ConfigError> {
        let (w, h) = (config.width, config.height);
        let kind = match self {
            TopologyChoice::Mesh => TopologyKind::Mesh2D { width: w, height: h },
            TopologyChoice::DiagonalMesh => TopologyKind::DiagonalMesh2D { width: w, height: h },
            TopologyChoice::Configured => {
                let t = config.build_topology()?;
                let name = match config.topology {
                    TopologySource::Grid(k) => k.name(),
                    TopologySource::File(_) => "custom",
                };
                return Ok((name.to_string(), t));
            }
        };
        Ok((kind.name().to_string(), Topology::from_kind(kind, config.link)?))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    /// Strictly increasing, all positive.
    pub rates: Vec<f64>,
    pub topologies: Vec<TopologyChoice>,
    pub repetitions: usize,
}

impl SweepSpec {
    pub fn new(rates: Vec<f64>, topologies: Vec<TopologyChoice>, repetitions: usize) -> Result<Self, SweepError> {
        if rates.is_empty() {
            return Err(SweepError::Empty("rate"));
        }
        if topologies.is_empty() {
            return Err(SweepError::Empty("topology"));
        }
        if repetitions == 0 {
            return Err(SweepError::Empty("repetition"));
        }
        let spec = format!("{rates:?}");
        if rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(SweepError::Rates { spec, message: "rates must be positive".into() });
        }
        if rates.windows(2).any(|w| w[0] >= w[1]) {
            return Err(SweepError::Rates { spec, message: "rates must be strictly increasing".into() });
        }
        Ok(SweepSpec { rates, topologies, repetitions })
    }
}

/// Parses `start:stop:step` (inclusive of `stop`) or a comma-separated list.
pub fn parse_rates(spec: &str) -> Result<Vec<f64>, SweepError> {
    let err = |message: &str| SweepError::Rates { spec: spec.to_string(), message: message.to_string() };
    let num = |s: &str| s.trim().parse::<f64>().map_err(|_| err(&format!("`{}` is not a number", s.trim())));
    let rates = if spec.contains(':') {
        let parts: Vec<&str> = spec.split(':').collect();
        if parts.len() != 3 {
            return Err(err("expected start:stop:step"));
        }
        let (start, stop, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if !(step > 0.0 && step.is_finite()) {
            return Err(err("step must be positive"));
        }
        if stop < start {
            return Err(err("stop is below start"));
        }
        let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
        if count > 1_000_000 {
            return Err(err("too many rate points"));
        }
        (0..count).map(|i| start + i as f64 * step).collect()
    } else {
        spec.split(',').map(num).collect::<Result<Vec<_>, _>>()?
    };
    if rates.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
        return Err(err("rates must be positive"));
    }
    if rates.windows(2).any(|w| w[0] >= w[1]) {
        return Err(err("rates must be strictly increasing"));
    }
    Ok(rates)
}

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    x = (x ^ (x >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    x ^ (x >> 31)
}

/// Seed for repetition `rep` at rate index `rate_index`. Independent of the
/// topology so both networks see the same traffic realization.
pub fn derive_seed(seed: u64, rate_index: usize, rep: usize) -> u64 {
    splitmix64(splitmix64(splitmix64(seed) ^ rate_index as u64) ^ rep as u64)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub rate: f64,
    pub topology: String,
    pub rep: usize,
    pub avg_delay: Option<f64>,
    pub generated: u64,
    pub delivered: u64,
    pub dropped: u64,
    pub throughput: f64,
    /// Run-wide totals, independent of the warmup window.
    pub injected: u64,
    pub in_flight: u64,
    pub conserved: bool,
}

/// Runs every (topology, rate, repetition) point, at most `jobs` at a time.
/// Rows come back ordered by topology (in sweep order), rate, then
/// repetition.
pub fn run_sweep(config: &SimConfig, sweep: &SweepSpec, jobs: usize) -> Result<Vec<ReportRow>, SweepError> {
    let mut networks = Vec::with_capacity(sweep.topologies.len());
    for choice in &sweep.topologies {
        let (name, topology) = choice.build(config)?;
        let routing = RoutingTable::compute(&topology)
            .map_err(|source| SweepError::Routing { topology: name.clone(), source })?;
        config.traffic.validate(&topology).map_err(|e| SweepError::Run {
            topology: name.clone(),
            rate: sweep.rates[0],
            rep: 0,
            source: e.into(),
        })?;
        networks.push((name, topology, routing));
    }

    let mut points = Vec::new();
    for t in 0..networks.len() {
        for j in 0..sweep.rates.len() {
            for k in 0..sweep.repetitions {
                points.push((t, j, k));
            }
        }
    }

    let mut params = config.params();
    params.record_trace = false;

    let run_point = |&(t, j, k): &(usize, usize, usize)| -> Result<ReportRow, SweepError> {
        let (name, topology, routing) = &networks[t];
        let rate = sweep.rates[j];
        let wrap = |source: EngineError| SweepError::Run { topology: name.clone(), rate, rep: k, source };
        let process = config.process(rate).map_err(|e| wrap(e.into()))?;
        let result =
            engine::run_simulation(topology, routing, config.traffic, process, &params, derive_seed(config.seed, j, k))
                .map_err(wrap)?;
        let metrics = result.metrics().expect("window validated by engine");
        Ok(ReportRow {
            rate,
            topology: name.clone(),
            rep: k,
            avg_delay: metrics.average_delay,
            generated: metrics.generated,
            delivered: metrics.delivered,
            dropped: metrics.dropped,
            throughput: metrics.throughput,
            injected: result.injected,
            in_flight: result.in_flight(),
            conserved: result.is_conserved(),
        })
    };

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.max(1))
        .build()
        .map_err(|e| SweepError::Pool(e.to_string()))?;
    pool.install(|| points.par_iter().map(run_point).collect())
}

pub const CSV_HEADER: &str = "rate,topology,rep,avg_delay,generated,delivered,dropped,throughput";

/// Writes rows as CSV. Rates, delays and throughputs carry six decimals; a
/// point with no delivered packets leaves `avg_delay` empty.
pub fn emit_report<W: Write>(rows: &[ReportRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        let delay = r.avg_delay.map_or_else(String::new, |d| format!("{d:.6}"));
        writeln!(
            out,
            "{:.6},{},{},{},{},{},{},{:.6}",
            r.rate, r.topology, r.rep, delay, r.generated, r.delivered, r.dropped, r.throughput
        )?;
    }
    out.flush()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::traffic::TrafficModel;

    #[test]
    fn rate_ranges() {
        assert_eq!(parse_rates("0.1:0.3:0.1").unwrap().len(), 3);
        assert_eq!(parse_rates("0.05,0.1,0.2").unwrap(), vec![0.05, 0.1, 0.2]);
        assert_eq!(parse_rates("1:1:0.5").unwrap(), vec![1.0]);
        assert!(parse_rates("0.2,0.1").is_err());
        assert!(parse_rates("0,0.1").is_err());
        assert!(parse_rates("0.1:0.3").is_err());
        assert!(parse_rates("0.1:0.3:0").is_err());
        assert!(parse_rates("a,b").is_err());
    }

    #[test]
    fn seeds_are_pure_and_distinct() {
        assert_eq!(derive_seed(7, 2, 1), derive_seed(7, 2, 1));
        let mut seen = std::collections::HashSet::new();
        for j in 0..20 {
            for k in 0..20 {
                assert!(seen.insert(derive_seed(7, j, k)));
            }
        }
    }

    #[test]
    fn spec_validation() {
        assert!(SweepSpec::new(vec![], vec![TopologyChoice::Mesh], 1).is_err());
        assert!(SweepSpec::new(vec![0.1], vec![], 1).is_err());
        assert!(SweepSpec::new(vec![0.1], vec![TopologyChoice::Mesh], 0).is_err());
        assert!(SweepSpec::new(vec![0.2, 0.1], vec![TopologyChoice::Mesh], 1).is_err());
        assert!(TopologyChoice::parse("torus").is_err());
    }

    #[test]
    fn row_cardinality_and_order() {
        let mut config = SimConfig::with_traffic(TrafficModel::UniformRandom);
        config.duration = 200.0;
        let sweep = SweepSpec::new(vec![0.01, 0.02, 0.03], vec![TopologyChoice::Mesh, TopologyChoice::DiagonalMesh], 2)
            .unwrap();
        let rows = run_sweep(&config, &sweep, 4).unwrap();
        assert_eq!(rows.len(), 12);
        let keys: Vec<(String, u64, usize)> =
            rows.iter().map(|r| (r.topology.clone(), (r.rate * 1000.0) as u64, r.rep)).collect();
        let mut sorted = keys.clone();
        sorted.sort_by_key(|(t, r, k)| (t != "mesh", *r, *k));
        assert_eq!(keys, sorted);
    }

    #[test]
    fn csv_shapes() {
        let mut out = Vec::new();
        emit_report(&[], &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), format!("{CSV_HEADER}\n"));

        let row = ReportRow {
            rate: 0.1,
            topology: "mesh".into(),
            rep: 0,
            avg_delay: Some(12.0),
            generated: 10,
            delivered: 9,
            dropped: 0,
            throughput: 0.0009,
            injected: 10,
            in_flight: 1,
            conserved: true,
        };
        let mut out = Vec::new();
        emit_report(&[row.clone(), ReportRow { avg_delay: None, ..row }], &mut out).unwrap();
        let text = String::from_utf8(out).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[1], "0.100000,mesh,0,12.000000,10,9,0,0.000900");
        assert_eq!(lines[2], "0.100000,mesh,0,,10,9,0,0.000900");
    }
}
