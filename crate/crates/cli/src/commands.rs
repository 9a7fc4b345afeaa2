//! Subcommand implementations. Each returns the text to print on stdout.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use gridattack::attacks::{default_schedule, parse_schedule, AttackSchedule, ScheduleError};
use gridattack::caseio::{builtin_case14, parse_matpower_case, CaseError, NetworkCase};
use gridattack::simulator::{
    compare_runs, compute_metrics, detect_anomalies, run, MetricsError, MetricsSummary, SimConfig,
    SimError, SimulationLog, Side, DEFAULT_ANOMALY_THRESHOLD,
};
use thiserror::Error;

use crate::csvlog::{read_csv, write_csv, write_delta_csv, SchemaMismatch};
use crate::plot::{render, PlotError, PlotKind, PlotOptions};
use crate::sidecar::{sidecar, to_pretty};

#[derive(Debug, Parser)]
#[command(name = "gridattack", version, about = "Cyber-attack scenarios on AC power-flow telemetry")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a scenario and write `<out>.csv` plus `<out>.json`.
    Run(RunArgs),
    /// Summarize a run CSV.
    Metrics(MetricsArgs),
    /// Write per-step deltas between two run CSVs.
    Compare(CompareArgs),
    /// Render an SVG chart from one or two run CSVs.
    Plot(PlotArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    /// `builtin:case14` or a MATPOWER case file.
    #[arg(long, default_value = "builtin:case14")]
    pub case: String,
    /// `default`, `none`, or a schedule JSON file.
    #[arg(long, default_value = "default")]
    pub schedule: String,
    #[arg(long, default_value_t = 144)]
    pub steps: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Half-range of the uniform load noise.
    #[arg(long, default_value_t = 0.0)]
    pub sigma: f64,
    /// Output path prefix.
    #[arg(long)]
    pub out: PathBuf,
    /// Also run the unattacked scenario into `<out>_baseline.*`.
    #[arg(long)]
    pub with_baseline: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SideArg {
    True,
    Meas,
}

impl From<SideArg> for Side {
    fn from(s: SideArg) -> Self {
        match s {
            SideArg::True => Side::True,
            SideArg::Meas => Side::Measured,
        }
    }
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    pub csv: PathBuf,
    #[arg(long, value_enum, default_value = "true")]
    pub side: SideArg,
    /// Baseline CSV; fills in anomaly steps.
    #[arg(long)]
    pub baseline: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_ANOMALY_THRESHOLD)]
    pub threshold: f64,
    /// Print JSON instead of text.
    #[arg(long)]
    pub json: bool,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    pub a: PathBuf,
    pub b: PathBuf,
    /// Output path prefix; writes `<out>.csv`.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    /// Run CSV, optionally followed by a baseline CSV.
    #[arg(required = true, num_args = 1..=2)]
    pub csv: Vec<PathBuf>,
    /// voltages, heatmap, rms, timeline, balance, genpq or switching.
    #[arg(long)]
    pub kind: String,
    /// Comma-separated bus ids (voltages plot).
    #[arg(long, value_delimiter = ',')]
    pub buses: Option<Vec<u32>>,
    /// Plot measured rather than true voltages.
    #[arg(long)]
    pub measured: bool,
    #[arg(long, default_value_t = DEFAULT_ANOMALY_THRESHOLD)]
    pub threshold: f64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error("cannot read {what} `{path}`: {source}")]
    Read {
        what: &'static str,
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot write `{path}`: {source}")]
    Write {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("case `{path}`: {source}")]
    Case { path: String, source: CaseError },
    #[error("schedule `{path}`: {source}")]
    Schedule {
        path: PathBuf,
        source: ScheduleError,
    },
    #[error("`{path}`: {source}")]
    Schema {
        path: PathBuf,
        source: SchemaMismatch,
    },
    #[error("{0}")]
    Shape(#[from] MetricsError),
    #[error("{0}")]
    Plot(#[from] PlotError),
    #[error("{0}")]
    Usage(String),
    #[error("simulation failed: {0}")]
    Simulation(SimError),
    #[error("{count} of {total} steps did not converge (first at t = {first}); outputs written")]
    NotConverged {
        count: usize,
        total: usize,
        first: usize,
    },
}

impl CliError {
    /// 1 for runtime and convergence failures, 2 for usage and input errors.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Simulation(_) | CliError::NotConverged { .. } | CliError::Write { .. } => 1,
            _ => 2,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::InvalidCase(_) | SimError::InvalidConfig(_) | SimError::Attack(_) => {
                CliError::Usage(e.to_string())
            }
            SimError::PowerFlow { .. } => CliError::Simulation(e),
        }
    }
}

pub fn dispatch(cli: Cli) -> Result<String, CliError> {
    match cli.command {
        Command::Run(a) => cmd_run(&a),
        Command::Metrics(a) => cmd_metrics(&a),
        Command::Compare(a) => cmd_compare(&a),
        Command::Plot(a) => cmd_plot(&a),
    }
}

fn read(what: &'static str, path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Read {
        what,
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, contents: &str) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|source| CliError::Write {
        path: path.to_path_buf(),
        source,
    })
}

fn with_suffix(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_os_string();
    s.push(suffix);
    PathBuf::from(s)
}

pub fn load_case(arg: &str) -> Result<NetworkCase, CliError> {
    match arg.strip_prefix("builtin:") {
        Some("case14") => Ok(builtin_case14()),
        Some(other) => Err(CliError::Usage(format!(
            "unknown builtin case `{other}` (available: case14)"
        ))),
        None => {
            let text = read("case file", Path::new(arg))?;
            parse_matpower_case(&text).map_err(|source| CliError::Case {
                path: arg.to_string(),
                source,
            })
        }
    }
}

pub fn load_schedule(arg: &str) -> Result<AttackSchedule, CliError> {
    match arg {
        "default" => Ok(default_schedule()),
        "none" => Ok(AttackSchedule::empty()),
        path => {
            let path = Path::new(path);
            let text = read("schedule file", path)?;
            parse_schedule(&text).map_err(|source| CliError::Schedule {
                path: path.to_path_buf(),
                source,
            })
        }
    }
}

pub fn load_log(path: &Path) -> Result<SimulationLog, CliError> {
    let text = read("CSV", path)?;
    read_csv(&text).map_err(|source| CliError::Schema {
        path: path.to_path_buf(),
        source,
    })
}

pub fn cmd_run(args: &RunArgs) -> Result<String, CliError> {
    let case = load_case(&args.case)?;
    let schedule = load_schedule(&args.schedule)?;
    let config = SimConfig {
        n_steps: args.steps,
        seed: args.seed,
        noise_amplitude: args.sigma,
        ..SimConfig::with_schedule(schedule)
    };
    config.validate()?;
    let base_config = SimConfig {
        schedule: AttackSchedule::empty(),
        ..config.clone()
    };

    let (attacked, baseline) = if args.with_baseline {
        let (a, b) = std::thread::scope(|s| {
            let h = s.spawn(|| run(&case, &base_config));
            let a = run(&case, &config);
            (a, h.join().expect("baseline run panicked"))
        });
        (a?, Some(b?))
    } else {
        (run(&case, &config)?, None)
    };

    let anomalies = match &baseline {
        Some(b) => Some(detect_anomalies(&attacked, b, DEFAULT_ANOMALY_THRESHOLD)?),
        None => None,
    };

    let mut report = String::new();
    let mut emit = |suffix: &str, log: &SimulationLog, cfg: &SimConfig, an: Option<&[usize]>| {
        let csv = with_suffix(&args.out, &format!("{suffix}.csv"));
        let json = with_suffix(&args.out, &format!("{suffix}.json"));
        write(&csv, &write_csv(log))?;
        write(&json, &to_pretty(&sidecar(&args.case, cfg, log, an)))?;
        report.push_str(&format!(
            "wrote {} and {} ({} steps)\n",
            csv.display(),
            json.display(),
            log.frames.len()
        ));
        Ok::<(), CliError>(())
    };
    emit("", &attacked, &config, anomalies.as_deref())?;
    if let Some(b) = &baseline {
        emit("_baseline", b, &base_config, None)?;
    }

    let failed: Vec<usize> = attacked
        .frames
        .iter()
        .chain(baseline.iter().flat_map(|b| &b.frames))
        .filter(|f| !f.converged)
        .map(|f| f.t)
        .collect();
    if let Some(&first) = failed.iter().min() {
        return Err(CliError::NotConverged {
            count: failed.len(),
            total: attacked.frames.len() * if baseline.is_some() { 2 } else { 1 },
            first,
        });
    }
    Ok(report)
}

pub fn format_summary(m: &MetricsSummary) -> String {
    let side = match m.side {
        Side::True => "true",
        Side::Measured => "meas",
    };
    let mut s = format!(
        "side                 {side}\n\
         mean_rms_dev         {:.6}\n\
         max_dev              {:.6}\n\
         violation_count_true {}\n\
         violation_count_meas {}\n\
         avg_losses_mw        {:.6}\n\
         switch_event_total   {}\n",
        m.mean_rms_dev,
        m.max_dev,
        m.violation_count_true,
        m.violation_count_meas,
        m.avg_losses_mw,
        m.switch_event_total
    );
    if !m.anomaly_steps.is_empty() {
        let steps: Vec<String> = m.anomaly_steps.iter().map(ToString::to_string).collect();
        s.push_str(&format!("anomaly_steps        {}\n", steps.join(",")));
    }
    s
}

pub fn cmd_metrics(args: &MetricsArgs) -> Result<String, CliError> {
    let log = load_log(&args.csv)?;
    let mut summary = compute_metrics(&log, args.side.into());
    if let Some(path) = &args.baseline {
        let base = load_log(path)?;
        summary.anomaly_steps = detect_anomalies(&log, &base, args.threshold)?;
    }
    if args.json {
        let mut s = serde_json::to_string_pretty(&summary).expect("metrics serialize");
        s.push('\n');
        Ok(s)
    } else {
        Ok(format_summary(&summary))
    }
}

pub fn cmd_compare(args: &CompareArgs) -> Result<String, CliError> {
    let a = load_log(&args.a)?;
    let b = load_log(&args.b)?;
    let deltas = compare_runs(&a, &b)?;
    let path = with_suffix(&args.out, ".csv");
    write(&path, &write_delta_csv(&a.bus_ids, &deltas))?;

    let max_abs = |pick: fn(&gridattack::simulator::FrameDelta) -> &Vec<f64>| {
        deltas
            .iter()
            .flat_map(|d| pick(d).iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    };
    let differing = deltas
        .iter()
        .filter(|d| d.dvm_true.iter().any(|v| *v != 0.0))
        .count();
    let mean_dloss =
        deltas.iter().map(|d| d.dlosses_mw).sum::<f64>() / deltas.len().max(1) as f64;
    Ok(format!(
        "wrote {}\n\
         steps                    {}\n\
         steps_with_true_delta    {differing}\n\
         max_abs_dvm_true         {:.6}\n\
         max_abs_dvm_meas         {:.6}\n\
         mean_dlosses_mw          {mean_dloss:.6}\n",
        path.display(),
        deltas.len(),
        max_abs(|d| &d.dvm_true),
        max_abs(|d| &d.dvm_meas),
    ))
}

pub fn cmd_plot(args: &PlotArgs) -> Result<String, CliError> {
    let kind: PlotKind = args.kind.parse()?;
    let attacked = load_log(&args.csv[0])?;
    let baseline = match args.csv.get(1) {
        Some(p) => Some(load_log(p)?),
        None => None,
    };
    let opts = PlotOptions {
        buses: args.buses.clone(),
        measured: args.measured,
        anomaly_threshold: args.threshold,
        ..PlotOptions::default()
    };
    let svg = render(kind, &attacked, baseline.as_ref(), &opts)?;
    write(&args.out, &svg)?;
    Ok(format!("wrote {}\n", args.out.display()))
}
