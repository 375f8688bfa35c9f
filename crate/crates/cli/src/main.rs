use std::fs::File;
use std::io::{self, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};

use nocsim::experiment::{self, SimConfig, SweepSpec, TopologyChoice};
use nocsim::metrics::trace::{parse_queue_samples, parse_trace, write_queue_samples, write_trace};
use nocsim::{Metrics, SimTime};

#[derive(Parser)]
#[command(name = "nocsim", version, about = "Packet-level network-on-chip simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one simulation and write its trace and metrics.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides sim.seed.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Metrics summary destination; stdout when omitted.
        #[arg(long)]
        metrics: Option<PathBuf>,
        /// Queue-monitor samples destination.
        #[arg(long)]
        queues: Option<PathBuf>,
        /// Dump the routing table as `route <src> <dst> <hops...>` lines.
        #[arg(long)]
        routes: Option<PathBuf>,
    },
    /// Sweep injection rates across topologies and write a CSV report.
    Sweep {
        #[arg(long)]
        config: PathBuf,
        /// `start:stop:step` or a comma-separated list.
        #[arg(long)]
        rates: String,
        /// Comma-separated: mesh, diagonal_mesh, custom.
        #[arg(long, default_value = "mesh,diagonal_mesh")]
        topologies: String,
        #[arg(long, default_value_t = 1)]
        reps: usize,
        /// Concurrent simulations; defaults to the number of CPUs.
        #[arg(long)]
        jobs: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Recompute metrics from an existing trace file.
    Report {
        #[arg(long)]
        trace: PathBuf,
        /// End of the measurement window; defaults to the last trace time.
        #[arg(long)]
        duration: Option<f64>,
        #[arg(long, default_value_t = 0.0)]
        warmup: f64,
        /// Queue samples file to summarize alongside.
        #[arg(long)]
        queues: Option<PathBuf>,
    },
    /// Print a topology's edge list and degree census.
    Topo {
        #[arg(long)]
        config: PathBuf,
    },
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    let f = File::open(path).with_context(|| format!("cannot open {}", path.display()))?;
    Ok(BufReader::new(f))
}

fn time_arg(name: &str, value: f64) -> Result<SimTime> {
    SimTime::from_units(value).with_context(|| format!("--{name} must be a non-negative number, got {value}"))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run { config, seed, trace, metrics, queues, routes } => {
            let cfg = SimConfig::from_file(&config)?;
            let out = experiment::run_config(&cfg, seed)?;
            if let Some(path) = routes {
                let mut w = create(&path)?;
                w.write_all(out.routing.dump().as_bytes())?;
                w.flush()?;
            }
            if let Some(path) = trace {
                write_trace(&out.result.trace, create(&path)?)?;
            }
            if let Some(path) = queues {
                write_queue_samples(&out.result.queue_samples, create(&path)?)?;
            }
            let summary = out.result.metrics()?;
            match metrics {
                Some(path) => summary.write_summary(create(&path)?)?,
                None => summary.write_summary(io::stdout().lock())?,
            }
            let r = &out.result;
            eprintln!(
                "injected {} delivered {} dropped {} in-flight {}",
                r.injected,
                r.delivered,
                r.dropped,
                r.in_flight()
            );
        }
        Command::Sweep { config, rates, topologies, reps, jobs, out } => {
            let cfg = SimConfig::from_file(&config)?;
            let rates = experiment::parse_rates(&rates)?;
            let topologies = topologies.split(',').map(TopologyChoice::parse).collect::<Result<Vec<_>, _>>()?;
            let spec = SweepSpec::new(rates, topologies, reps)?;
            let jobs = jobs.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
            let rows = experiment::run_sweep(&cfg, &spec, jobs)?;
            experiment::emit_report(&rows, create(&out)?).with_context(|| format!("cannot write {}", out.display()))?;
        }
        Command::Report { trace, duration, warmup, queues } => {
            let records = parse_trace(open(&trace)?).with_context(|| format!("invalid trace {}", trace.display()))?;
            let samples = match queues {
                Some(path) => parse_queue_samples(open(&path)?)
                    .with_context(|| format!("invalid queue samples {}", path.display()))?,
                None => Vec::new(),
            };
            let warmup = time_arg("warmup", warmup)?;
            let duration = match duration {
                Some(d) => time_arg("duration", d)?,
                None => records.last().map_or(SimTime::ZERO, |r| r.time),
            };
            if duration <= warmup {
                bail!("measurement window is empty: duration {duration} <= warmup {warmup}");
            }
            let metrics = Metrics::from_trace(&records, duration, warmup, &samples)?;
            let mut stdout = io::stdout().lock();
            metrics.write_summary(&mut stdout)?;
            if let Some(mean) = metrics.mean_queue_length() {
                writeln!(stdout, "mean_queue_length = {mean:.6}")?;
            }
        }
        Command::Topo { config } => {
            let cfg = SimConfig::from_file(&config)?;
            let topology = cfg.build_topology()?;
            io::stdout().lock().write_all(experiment::topology_report(&topology).as_bytes())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
