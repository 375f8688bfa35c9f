//! Flat `key = value` configuration with `#` comments.

use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use crate::engine::SimParams;
use crate::topology::{LinkParams, Topology, TopologyError, TopologyKind};
use crate::traffic::{InjectionDiscipline, InjectionProcess, TrafficError, TrafficModel};

const KEYS: &[&str] = &[
    "topology.kind",
    "topology.width",
    "topology.height",
    "topology.file",
    "link.bandwidth",
    "link.propagation_delay",
    "switch.delay",
    "resource.injection_latency",
    "queue.capacity",
    "traffic.model",
    "traffic.range1",
    "traffic.rate",
    "traffic.discipline",
    "packet.size",
    "sim.duration",
    "sim.warmup",
    "sim.seed",
    "monitor.interval",
];

#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error("line {line}: expected `key = value`")]
    Syntax { line: usize },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` set twice")]
    DuplicateKey { line: usize, key: String },
    #[error("line {line}: {key}: {message}")]
    InvalidValue { line: usize, key: &'static str, message: String },
    #[error("missing required key `{0}`")]
    Missing(&'static str),
    #[error("topology file {path}: {source}")]
    TopologyFile { path: PathBuf, source: TopologyError },
    #[error("topology: {0}")]
    Topology(#[from] TopologyError),
}

/// Where the switching network comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum TopologySource {
    Grid(TopologyKind),
    File(PathBuf),
}

/// A fully validated run description.
#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub topology: TopologySource,
    /// Grid dimensions, kept even for file topologies so sweeps over grid
    /// kinds can reuse them.
    pub width: usize,
    pub height: usize,
    pub link: LinkParams,
    pub switch_delay: f64,
    pub injection_latency: f64,
    pub queue_capacity: usize,
    pub traffic: TrafficModel,
    /// Absent unless set; sweeps supply their own rates.
    pub rate: Option<f64>,
    pub discipline: InjectionDiscipline,
    pub packet_size: u64,
    pub duration: f64,
    pub warmup: f64,
    pub seed: u64,
    pub monitor_interval: f64,
}

impl SimConfig {
    /// Defaults for everything except the traffic model.
    pub fn with_traffic(traffic: TrafficModel) -> Self {
        SimConfig {
            topology: TopologySource::Grid(TopologyKind::Mesh2D { width: 4, height: 4 }),
            width: 4,
            height: 4,
            link: LinkParams::new(1.0, 1.0),
            switch_delay: 0.0,
            injection_latency: 0.0,
            queue_capacity: 1000,
            traffic,
            rate: None,
            discipline: InjectionDiscipline::Poisson,
            packet_size: 1,
            duration: 10_000.0,
            warmup: 0.0,
            seed: 0,
            monitor_interval: 100.0,
        }
    }

    pub fn params(&self) -> SimParams {
        SimParams {
            duration: self.duration,
            warmup: self.warmup,
            switch_delay: self.switch_delay,
            injection_latency: self.injection_latency,
            queue_capacity: self.queue_capacity,
            monitor_interval: self.monitor_interval,
            record_trace: true,
        }
    }

    pub fn process(&self, rate: f64) -> Result<InjectionProcess, TrafficError> {
        InjectionProcess::new(rate, self.discipline, self.packet_size)
    }

    pub fn build_topology(&self) -> Result<Topology, ConfigError> {
        match &self.topology {
            TopologySource::Grid(kind) => Ok(Topology::from_kind(*kind, self.link)?),
            TopologySource::File(path) => {
                let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.clone(), source })?;
                Topology::parse_edge_list(&text)
                    .map_err(|source| ConfigError::TopologyFile { path: path.clone(), source })
            }
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, ConfigError> {
        let text = fs::read_to_string(path).map_err(|source| ConfigError::Io { path: path.to_path_buf(), source })?;
        Self::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Parses config text; relative `topology.file` paths resolve against
    /// `base_dir`.
    pub fn parse(text: &str, base_dir: &Path) -> Result<Self, ConfigError> {
        let mut entries: HashMap<&'static str, (usize, String)> = HashMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if key.is_empty() || value.is_empty() {
                return Err(ConfigError::Syntax { line });
            }
            let known = KEYS
                .iter()
                .copied()
                .find(|k| *k == key)
                .ok_or_else(|| ConfigError::UnknownKey { line, key: key.to_string() })?;
            if entries.insert(known, (line, value.to_string())).is_some() {
                return Err(ConfigError::DuplicateKey { line, key: key.to_string() });
            }
        }
        Reader { entries, base_dir }.build()
    }
}

struct Reader<'a> {
    entries: HashMap<&'static str, (usize, String)>,
    base_dir: &'a Path,
}

impl Reader<'_> {
    fn line(&self, key: &'static str) -> usize {
        self.entries.get(key).map_or(0, |(l, _)| *l)
    }

    fn invalid(&self, key: &'static str, message: impl Into<String>) -> ConfigError {
        ConfigError::InvalidValue { line: self.line(key), key, message: message.into() }
    }

    fn raw(&self, key: &'static str) -> Option<&str> {
        self.entries.get(key).map(|(_, v)| v.as_str())
    }

    fn get<T: std::str::FromStr>(&self, key: &'static str) -> Result<Option<T>, ConfigError> {
        self.raw(key).map(|v| v.parse::<T>().map_err(|_| self.invalid(key, format!("cannot parse `{v}`")))).transpose()
    }

    fn float(&self, key: &'static str, default: f64, positive: bool) -> Result<f64, ConfigError> {
        let v = self.get::<f64>(key)?.unwrap_or(default);
        let ok = v.is_finite() && if positive { v > 0.0 } else { v >= 0.0 };
        if !ok {
            let want = if positive { "positive" } else { "non-negative" };
            return Err(self.invalid(key, format!("must be {want} and finite, got {v}")));
        }
        Ok(v)
    }

    fn build(&self) -> Result<SimConfig, ConfigError> {
        let width = self.get::<usize>("topology.width")?.unwrap_or(4);
        let height = self.get::<usize>("topology.height")?.unwrap_or(4);
        if width == 0 {
            return Err(self.invalid("topology.width", "must be at least 1"));
        }
        if height == 0 {
            return Err(self.invalid("topology.height", "must be at least 1"));
        }
        let topology = match self.raw("topology.kind").unwrap_or("mesh") {
            "mesh" => TopologySource::Grid(TopologyKind::Mesh2D { width, height }),
            "diagonal_mesh" => TopologySource::Grid(TopologyKind::DiagonalMesh2D { width, height }),
            "custom" => {
                let file = self.raw("topology.file").ok_or(ConfigError::Missing("topology.file"))?;
                TopologySource::File(self.base_dir.join(file))
            }
            other => {
                return Err(
                    self.invalid("topology.kind", format!("expected mesh, diagonal_mesh or custom, got `{other}`"))
                )
            }
        };
        if matches!(topology, TopologySource::Grid(_)) && self.raw("topology.file").is_some() {
            return Err(self.invalid("topology.file", "only valid with topology.kind = custom"));
        }

        let traffic = match self.raw("traffic.model").ok_or(ConfigError::Missing("traffic.model"))? {
            "locality" => {
                let range1 = self.get::<f64>("traffic.range1")?.ok_or(ConfigError::Missing("traffic.range1"))?;
                if !(0.0..=1.0).contains(&range1) {
                    return Err(self.invalid("traffic.range1", format!("must lie in [0, 1], got {range1}")));
                }
                TrafficModel::LocalityRandom { range1 }
            }
            "fixed" => TrafficModel::FixedComplement,
            "uniform" => TrafficModel::UniformRandom,
            other => {
                return Err(self.invalid("traffic.model", format!("expected locality, fixed or uniform, got `{other}`")))
            }
        };
        if !matches!(traffic, TrafficModel::LocalityRandom { .. }) && self.raw("traffic.range1").is_some() {
            return Err(self.invalid("traffic.range1", "only valid with traffic.model = locality"));
        }
        let rate = match self.raw("traffic.rate") {
            Some(_) => Some(self.float("traffic.rate", 0.0, true)?),
            None => None,
        };
        let discipline = match self.raw("traffic.discipline").unwrap_or("poisson") {
            "poisson" => InjectionDiscipline::Poisson,
            "deterministic" => InjectionDiscipline::Deterministic,
            other => {
                return Err(
                    self.invalid("traffic.discipline", format!("expected poisson or deterministic, got `{other}`"))
                )
            }
        };
        let packet_size = self.get::<u64>("packet.size")?.unwrap_or(1);
        if packet_size == 0 {
            return Err(self.invalid("packet.size", "must be positive"));
        }
        let duration = self.float("sim.duration", 10_000.0, true)?;
        let warmup = self.float("sim.warmup", 0.0, false)?;
        if warmup >= duration {
            return Err(self.invalid("sim.warmup", format!("must be less than sim.duration ({duration})")));
        }

        Ok(SimConfig {
            topology,
            width,
            height,
            link: LinkParams::new(
                self.float("link.bandwidth", 1.0, true)?,
                self.float("link.propagation_delay", 1.0, false)?,
            ),
            switch_delay: self.float("switch.delay", 0.0, false)?,
            injection_latency: self.float("resource.injection_latency", 0.0, false)?,
            queue_capacity: self.get::<usize>("queue.capacity")?.unwrap_or(1000),
            traffic,
            rate,
            discipline,
            packet_size,
            duration,
            warmup,
            seed: self.get::<u64>("sim.seed")?.unwrap_or(0),
            monitor_interval: self.float("monitor.interval", 100.0, false)?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<SimConfig, ConfigError> {
        SimConfig::parse(text, Path::new("/cfg"))
    }

    #[test]
    fn traffic_model_is_required() {
        assert!(matches!(parse(""), Err(ConfigError::Missing("traffic.model"))));
    }

    #[test]
    fn defaults_apply() {
        let c = parse("traffic.model = fixed\n").unwrap();
        assert_eq!(c, SimConfig::with_traffic(TrafficModel::FixedComplement));
    }

    #[test]
    fn range1_out_of_range() {
        let e = parse("traffic.model = locality\n# comment\ntraffic.range1 = 1.5\n").unwrap_err();
        match e {
            ConfigError::InvalidValue { line: 3, key: "traffic.range1", .. } => {}
            other => panic!("{other}"),
        }
    }

    #[test]
    fn diagonal_mesh_kind() {
        let c = parse("topology.kind = diagonal_mesh\ntraffic.model = uniform\n").unwrap();
        let t = c.build_topology().unwrap();
        assert_eq!(t.node_count(), 16);
        assert_eq!(t.links().len(), 42);
    }

    #[test]
    fn unknown_and_duplicate_keys() {
        match parse("traffic.model = fixed\nlink.width = 3\n").unwrap_err() {
            ConfigError::UnknownKey { line: 2, key } => assert_eq!(key, "link.width"),
            other => panic!("{other}"),
        }
        match parse("traffic.model = fixed\ntraffic.model = uniform\n").unwrap_err() {
            ConfigError::DuplicateKey { line: 2, .. } => {}
            other => panic!("{other}"),
        }
        assert!(matches!(parse("traffic.model fixed\n"), Err(ConfigError::Syntax { line: 1 })));
    }

    #[test]
    fn value_errors_name_key_and_line() {
        let cases = [
            ("traffic.model = fixed\nlink.bandwidth = 0\n", "link.bandwidth", 2),
            ("traffic.model = fixed\nsim.duration = -5\n", "sim.duration", 2),
            ("traffic.model = fixed\nsim.warmup = 20000\n", "sim.warmup", 2),
            ("traffic.model = fixed\ntopology.width = 0\n", "topology.width", 2),
            ("traffic.model = fixed\ntraffic.discipline = bursty\n", "traffic.discipline", 2),
            ("traffic.model = hotspot\n", "traffic.model", 1),
            ("traffic.model = fixed\ntraffic.range1 = 0.5\n", "traffic.range1", 2),
            ("traffic.model = fixed\nqueue.capacity = many\n", "queue.capacity", 2),
            ("traffic.model = fixed\ntraffic.rate = 0\n", "traffic.rate", 2),
        ];
        for (text, want_key, want_line) in cases {
            match parse(text).unwrap_err() {
                ConfigError::InvalidValue { line, key, .. } => assert_eq!((key, line), (want_key, want_line), "{text}"),
                other => panic!("{text}: {other}"),
            }
        }
    }

    #[test]
    fn custom_topology_resolves_relative_path() {
        let c = parse("topology.kind = custom\ntopology.file = net.txt\ntraffic.model = uniform\n").unwrap();
        assert_eq!(c.topology, TopologySource::File(PathBuf::from("/cfg/net.txt")));
        assert!(matches!(
            parse("topology.kind = custom\ntraffic.model = uniform\n"),
            Err(ConfigError::Missing("topology.file"))
        ));
    }
}
