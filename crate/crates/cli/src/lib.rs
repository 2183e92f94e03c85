//! Command-line front end for the voltsec pipeline.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::Context;
use clap::{Parser, Subcommand, ValueEnum};

use voltsec::dataset::{build_dataset, write_dataset, DatasetConfig};
use voltsec::grid::{cases, parse_branch_list, parse_case, BranchRef, NetworkCase};
use voltsec::powerflow::{trace_pv_curve, GenerationPolicy, PvOptions, SolveOptions};
use voltsec::security::{assess_configurations, parse_configurations, write_assessments, Label, PivConfig};
use voltsec::trainer::{read_logs, run_experiment, Metric, SummaryTable};

pub const DATA_DIR_ENV: &str = "VOLTSEC_DATA_DIR";

#[derive(Debug, Parser)]
#[command(name = "voltsec", version, about = "Power-flow screening, security datasets and online classifier training")]
pub struct Cli {
    /// Directory used to resolve relative input paths that do not exist in
    /// the working directory.
    #[arg(long, global = true, env = DATA_DIR_ENV, value_name = "DIR")]
    pub data_dir: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse and validate a case file, printing a one-line summary.
    CaseValidate {
        /// Case file, or a bundled case name (two_bus, nine_bus, nets_nyps_68).
        #[arg(long)]
        case: String,
    },
    /// Trace bus voltage against uniform load scaling up to the nose point.
    PvCurve {
        /// Case file or bundled case name.
        #[arg(long)]
        case: String,
        /// Monitored bus id.
        #[arg(long)]
        bus: u32,
        /// Load-multiplier increment.
        #[arg(long, default_value_t = 0.01)]
        step: f64,
        /// Also trace the curve with this branch out of service (`from-to[:circuit]`).
        #[arg(long)]
        outage: Option<String>,
        /// How generation follows the load.
        #[arg(long, value_enum, default_value_t = Policy::Proportional)]
        policy: Policy,
        /// Output CSV (`curve,load_scale,v_mag`).
        #[arg(long)]
        out: PathBuf,
    },
    /// Rank branch-outage configurations by voltage performance index.
    Screen {
        /// Case file or bundled case name.
        #[arg(long)]
        case: String,
        /// Configuration list: one `from-to[:circuit]` or `base` per line.
        #[arg(long)]
        configs: PathBuf,
        /// Output CSV of ranked assessments.
        #[arg(long)]
        out: PathBuf,
    },
    /// Generate a labeled operating-condition dataset.
    GenDataset {
        /// Case file or bundled case name.
        #[arg(long)]
        case: String,
        /// Number of samples.
        #[arg(long)]
        n: usize,
        /// Base seed; sample i uses seed + i.
        #[arg(long)]
        seed: u64,
        /// Fraction of samples carrying a topology change.
        #[arg(long, default_value_t = 0.0)]
        tc_fraction: f64,
        /// Comma-separated topology-change branches (default: bundled list for the 68-bus case).
        #[arg(long)]
        tc: Option<String>,
        /// Comma-separated screening contingencies (default: bundled list for the 68-bus case).
        #[arg(long)]
        csc: Option<String>,
        /// Lower per-load scale bound.
        #[arg(long, default_value_t = 0.8)]
        scale_min: f64,
        /// Upper per-load scale bound.
        #[arg(long, default_value_t = 1.05)]
        scale_max: f64,
        /// Output CSV; metadata goes to `<out>.meta`.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a two-phase training experiment from a TOML config.
    Train {
        /// Experiment config file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory for logs and summary tables.
        #[arg(long)]
        out: PathBuf,
    },
    /// Build the checkpoint summary table from a directory of training logs.
    Report {
        /// Directory holding `<algorithm>.log.csv` files.
        #[arg(long)]
        logs: PathBuf,
        /// Which accuracy to tabulate.
        #[arg(long, value_enum, default_value_t = MetricArg::Train)]
        metric: MetricArg,
        /// Output CSV (stdout when omitted).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Policy {
    Proportional,
    SlackOnly,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum MetricArg {
    Train,
    Test,
}

/// Failure classes mapped to exit codes.
#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Domain(anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Domain(_) => 1,
        }
    }
}

impl From<anyhow::Error> for CliError {
    fn from(e: anyhow::Error) -> Self {
        CliError::Domain(e)
    }
}

impl From<voltsec::Error> for CliError {
    fn from(e: voltsec::Error) -> Self {
        CliError::Domain(e.into())
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Domain(e) => write!(f, "error: {e:#}"),
        }
    }
}

struct Ctx {
    data_dir: Option<PathBuf>,
}

impl Ctx {
    fn resolve(&self, p: &Path) -> PathBuf {
        match &self.data_dir {
            Some(dir) if p.is_relative() && !p.exists() => dir.join(p),
            _ => p.to_path_buf(),
        }
    }

    fn load_case(&self, name: &str) -> anyhow::Result<NetworkCase> {
        let path = self.resolve(Path::new(name));
        if !path.exists() {
            if let Some(case) = cases::by_name(name) {
                return Ok(case);
            }
        }
        let text = fs::read_to_string(&path).with_context(|| format!("cannot read case {}", path.display()))?;
        parse_case(&text).with_context(|| format!("invalid case {}", path.display()))
    }
}

fn refs(text: &str) -> anyhow::Result<Vec<BranchRef>> {
    Ok(parse_branch_list(&text.replace(',', "\n"))?)
}

fn write_out(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display()))
}

pub fn run(cli: Cli, stdout: &mut dyn Write) -> Result<(), CliError> {
    let ctx = Ctx { data_dir: cli.data_dir };
    match cli.command {
        Command::CaseValidate { case } => {
            let c = ctx.load_case(&case)?;
            writeln!(
                stdout,
                "ok: {} buses, {} branches, {} generators, {} loads, {:.2} MW / {:.2} MVar load",
                c.buses.len(),
                c.branches.len(),
                c.generators.len(),
                c.loads.len(),
                c.total_load_mw(),
                c.total_load_mvar()
            )
            .map_err(anyhow::Error::from)?;
        }
        Command::PvCurve {
            case,
            bus,
            step,
            outage,
            policy,
            out,
        } => {
            let c = ctx.load_case(&case)?;
            let opts = PvOptions {
                policy: match policy {
                    Policy::Proportional => GenerationPolicy::Proportional,
                    Policy::SlackOnly => GenerationPolicy::SlackOnly,
                },
                ..PvOptions::default()
            };
            let mut curves = vec![("base".to_string(), trace_pv_curve(&c, bus, step, &opts)?)];
            if let Some(o) = outage {
                let r: BranchRef = o.parse().map_err(|e| CliError::Usage(format!("--outage: {e}")))?;
                let outaged = c.apply_outage(c.find_branch(&r)?)?;
                curves.push((r.to_string(), trace_pv_curve(&outaged, bus, step, &opts)?));
            }
            let mut text = String::from("curve,load_scale,v_mag\n");
            for (name, curve) in &curves {
                for p in &curve.points {
                    text.push_str(&format!("{name},{},{}\n", p.load_scale, p.v_mag));
                }
                writeln!(stdout, "{name}: nose_scale={}", curve.nose_scale).map_err(anyhow::Error::from)?;
            }
            write_out(&out, text.as_bytes())?;
        }
        Command::Screen { case, configs, out } => {
            let c = ctx.load_case(&case)?;
            let path = ctx.resolve(&configs);
            let text = fs::read_to_string(&path)
                .with_context(|| format!("cannot read configuration list {}", path.display()))?;
            let list = parse_configurations(&text)?;
            if list.is_empty() {
                return Err(CliError::Usage(format!("configuration list {} is empty", path.display())));
            }
            let rows = assess_configurations(&c, &list, &PivConfig::default(), &SolveOptions::default())?;
            let mut buf = Vec::new();
            write_assessments(&rows, &mut buf).map_err(anyhow::Error::from)?;
            write_out(&out, &buf)?;
            writeln!(stdout, "assessed {} configurations", rows.len()).map_err(anyhow::Error::from)?;
        }
        Command::GenDataset {
            case,
            n,
            seed,
            tc_fraction,
            tc,
            csc,
            scale_min,
            scale_max,
            out,
        } => {
            let c = ctx.load_case(&case)?;
            let is_68 = c == cases::nets_nyps_68();
            let default_list = |names: &[&str]| names.iter().map(|s| s.parse()).collect::<voltsec::Result<Vec<_>>>();
            let csc_list = match csc {
                Some(t) => refs(&t)?,
                None if is_68 => default_list(&cases::CRITICAL_CONTINGENCIES_68)?,
                None => return Err(CliError::Usage("--csc is required for this case".into())),
            };
            let tc_list = match tc {
                Some(t) => refs(&t)?,
                None if is_68 => default_list(&cases::TOPOLOGY_CHANGES_68)?,
                None => Vec::new(),
            };
            let mut cfg = DatasetConfig::new(n, seed, csc_list);
            cfg.tc_fraction = tc_fraction;
            cfg.tc_list = tc_list;
            cfg.scale_range = (scale_min, scale_max);
            let report = build_dataset(&c, &cfg)?;
            write_dataset(&out, &report.dataset, Some(&report), Some(&cfg))
                .with_context(|| format!("cannot write {}", out.display()))?;
            writeln!(
                stdout,
                "{} samples ({} insecure), {} rejected draws",
                report.dataset.len(),
                report.dataset.count(Label::Insecure),
                report.rejections
            )
            .map_err(anyhow::Error::from)?;
        }
        Command::Train { config, out } => {
            let path = ctx.resolve(&config);
            let result = run_experiment(&path, &out)?;
            write!(stdout, "{}", result.train_summary.render_csv()).map_err(anyhow::Error::from)?;
        }
        Command::Report { logs, metric, out } => {
            let dir = ctx.resolve(&logs);
            let loaded = read_logs(&dir)?;
            let view: Vec<_> = loaded.iter().map(|(a, l)| (*a, l)).collect();
            let metric = match metric {
                MetricArg::Train => Metric::Train,
                MetricArg::Test => Metric::Test,
            };
            let table = SummaryTable::from_logs_default(&view, metric)?.render_csv();
            match out {
                Some(p) => write_out(&p, table.as_bytes())?,
                None => write!(stdout, "{table}").map_err(anyhow::Error::from)?,
            }
        }
    }
    Ok(())
}

/// Parses `args` and runs; returns the process exit code. Diagnostics go to
/// `stderr`.
pub fn main_with(args: impl IntoIterator<Item = String>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = if code == 0 {
                write!(stdout, "{}", e.render())
            } else {
                write!(stderr, "{}", e.render())
            };
            return code;
        }
    };
    match run(cli, stdout) {
        Ok(()) => 0,
        Err(e) => {
            let _ = writeln!(stderr, "{e}");
            e.exit_code()
        }
    }
}
