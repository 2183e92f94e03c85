//! Two-phase online training: fit on an initialization dataset, then keep
//! training the same model and optimizer on an update dataset.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::{Array2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::{read_dataset, split_dataset, Dataset};
use crate::error::{Error, Result};
use crate::mlp::{evaluate, init_params, loss_and_gradient, Activation, MlpArchitecture, StandardizationStats};
use crate::optim::{Algorithm, Optimizer, OptimizerConfig};

pub const CHECKPOINT_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Phase {
    Initialization,
    Update,
}

impl Phase {
    pub fn name(self) -> &'static str {
        match self {
            Phase::Initialization => "init",
            Phase::Update => "update",
        }
    }
}

impl std::str::FromStr for Phase {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "init" => Ok(Phase::Initialization),
            "update" => Ok(Phase::Update),
            other => Err(Error::invalid(format!("unknown phase `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PhasePlan {
    pub phase: Phase,
    pub epochs: usize,
    pub eval_every: usize,
    /// Epochs that must appear in the log besides the regular cadence.
    pub checkpoints: Vec<usize>,
}

impl PhasePlan {
    pub fn new(phase: Phase, epochs: usize, eval_every: usize) -> Self {
        PhasePlan {
            phase,
            epochs,
            eval_every,
            checkpoints: Vec::new(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::Config(format!("{} phase needs at least one epoch", self.phase.name())));
        }
        if self.eval_every == 0 {
            return Err(Error::Config("eval_every must be at least 1".into()));
        }
        if let Some(&c) = self.checkpoints.iter().find(|&&c| c == 0 || c > self.epochs) {
            return Err(Error::Config(format!(
                "checkpoint epoch {c} outside 1..={} of the {} phase",
                self.epochs,
                self.phase.name()
            )));
        }
        Ok(())
    }

    /// First epoch, every `eval_every`-th epoch, checkpoints and the last epoch.
    pub fn logged_epochs(&self) -> BTreeSet<usize> {
        let mut set: BTreeSet<usize> = (self.eval_every..=self.epochs).step_by(self.eval_every).collect();
        set.insert(1);
        set.insert(self.epochs);
        set.extend(self.checkpoints.iter().copied());
        set
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct LogRow {
    pub phase: Phase,
    /// Epoch within the phase, starting at 1.
    pub epoch: usize,
    pub loss: f64,
    pub train_accuracy: f64,
    pub test_accuracy: f64,
    pub wall_ms: Option<u64>,
    pub diverged: bool,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrainingLog {
    pub rows: Vec<LogRow>,
}

const LOG_HEADER: &str = "phase,epoch,loss,train_accuracy,test_accuracy,diverged";

impl TrainingLog {
    pub fn phase_rows(&self, phase: Phase) -> impl Iterator<Item = &LogRow> {
        self.rows.iter().filter(move |r| r.phase == phase)
    }

    pub fn row(&self, phase: Phase, epoch: usize) -> Option<&LogRow> {
        self.phase_rows(phase).find(|r| r.epoch == epoch)
    }

    pub fn last(&self, phase: Phase) -> Option<&LogRow> {
        self.phase_rows(phase).last()
    }

    /// CSV text. The wall-clock column is written only when every row has one.
    pub fn render_csv(&self) -> String {
        let with_wall = !self.rows.is_empty() && self.rows.iter().all(|r| r.wall_ms.is_some());
        let mut out = String::from(LOG_HEADER);
        if with_wall {
            out.push_str(",wall_ms");
        }
        out.push('\n');
        for r in &self.rows {
            let _ = write!(
                out,
                "{},{},{},{},{},{}",
                r.phase.name(),
                r.epoch,
                r.loss,
                r.train_accuracy,
                r.test_accuracy,
                u8::from(r.diverged)
            );
            if let (true, Some(ms)) = (with_wall, r.wall_ms) {
                let _ = write!(out, ",{ms}");
            }
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or_else(|| Error::syntax(1, "empty log"))?;
        let with_wall = match header.trim() {
            h if h == LOG_HEADER => false,
            h if h == format!("{LOG_HEADER},wall_ms") => true,
            _ => return Err(Error::syntax(1, "unexpected log header")),
        };
        let mut rows = Vec::new();
        for (i, line) in lines {
            let line_no = i + 1;
            if line.trim().is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 6 + usize::from(with_wall) {
                return Err(Error::syntax(line_no, "wrong number of fields"));
            }
            let num = |s: &str| s.parse::<f64>().map_err(|_| Error::syntax(line_no, format!("bad number `{s}`")));
            rows.push(LogRow {
                phase: f[0].parse().map_err(|_| Error::syntax(line_no, format!("bad phase `{}`", f[0])))?,
                epoch: f[1].parse().map_err(|_| Error::syntax(line_no, "bad epoch"))?,
                loss: num(f[2])?,
                train_accuracy: num(f[3])?,
                test_accuracy: num(f[4])?,
                diverged: match f[5] {
                    "0" => false,
                    "1" => true,
                    _ => return Err(Error::syntax(line_no, "bad divergence flag")),
                },
                wall_ms: if with_wall {
                    Some(f[6].parse().map_err(|_| Error::syntax(line_no, "bad wall_ms"))?)
                } else {
                    None
                },
            });
        }
        Ok(TrainingLog { rows })
    }
}

/// Standardized train and test matrices for one phase.
#[derive(Clone, Debug)]
pub struct PhaseData {
    pub train_x: Array2<f64>,
    pub train_y: Vec<usize>,
    pub test_x: Array2<f64>,
    pub test_y: Vec<usize>,
}

impl PhaseData {
    pub fn new(stats: &StandardizationStats, train: &Dataset, test: &Dataset) -> Result<Self> {
        if train.is_empty() {
            return Err(Error::invalid("training split is empty"));
        }
        let (train_x, train_y) = stats.apply(train)?;
        let (test_x, test_y) = stats.apply(test)?;
        Ok(PhaseData {
            train_x,
            train_y,
            test_x,
            test_y,
        })
    }
}

/// A model together with its optimizer and everything needed to resume it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Learner {
    pub arch: MlpArchitecture,
    pub theta: Vec<f64>,
    pub optimizer: Optimizer,
    pub stats: StandardizationStats,
    /// Epochs completed over all phases.
    pub epochs_done: u64,
    pub diverged: bool,
    /// Mini-batch size; 0 means one full-batch step per epoch.
    pub batch_size: usize,
    pub shuffle_seed: u64,
}

impl Learner {
    pub fn new(
        arch: MlpArchitecture,
        seed: u64,
        config: OptimizerConfig,
        stats: StandardizationStats,
    ) -> Result<Self> {
        arch.validate()?;
        if stats.mean.len() != arch.inputs() {
            return Err(Error::Dimension {
                expected: arch.inputs(),
                got: stats.mean.len(),
            });
        }
        let theta = init_params(&arch, seed);
        let optimizer = Optimizer::new(config, theta.len())?;
        Ok(Learner {
            arch,
            theta,
            optimizer,
            stats,
            epochs_done: 0,
            diverged: false,
            batch_size: 0,
            shuffle_seed: seed,
        })
    }

    fn batches(&self, n: usize) -> Vec<Vec<usize>> {
        if self.batch_size == 0 || self.batch_size >= n {
            return vec![(0..n).collect()];
        }
        let mut order: Vec<usize> = (0..n).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(self.shuffle_seed);
        rng.set_stream(self.epochs_done);
        order.shuffle(&mut rng);
        order.chunks(self.batch_size).map(<[usize]>::to_vec).collect()
    }

    fn train_epoch(&mut self, data: &PhaseData) -> Result<()> {
        let n = data.train_y.len();
        for idx in self.batches(n) {
            let full = idx.len() == n;
            let (bx, by);
            let (x, y) = if full {
                (data.train_x.view(), &data.train_y[..])
            } else {
                bx = data.train_x.select(Axis(0), &idx);
                by = idx.iter().map(|&i| data.train_y[i]).collect::<Vec<_>>();
                (bx.view(), &by[..])
            };
            let arch = &self.arch;
            self.optimizer
                .step(&mut self.theta, |p| loss_and_gradient(p, arch, x, y).map(|(_, g)| g))?;
        }
        Ok(())
    }

    pub fn save_checkpoint(&self, path: &Path) -> Result<()> {
        fs::write(path, self.checkpoint_json()?)?;
        Ok(())
    }

    pub fn checkpoint_json(&self) -> Result<String> {
        if self.theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("cannot checkpoint non-finite parameters"));
        }
        let doc = CheckpointRef {
            format_version: CHECKPOINT_FORMAT_VERSION,
            learner: self,
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::invalid(e.to_string()))
    }

    pub fn load_checkpoint(path: &Path) -> Result<Self> {
        Self::from_checkpoint_json(&fs::read_to_string(path)?)
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self> {
        let doc: Checkpoint =
            serde_json::from_str(text).map_err(|e| Error::invalid(format!("bad checkpoint: {e}")))?;
        if doc.format_version != CHECKPOINT_FORMAT_VERSION {
            return Err(Error::invalid(format!(
                "unsupported checkpoint format_version {}",
                doc.format_version
            )));
        }
        let l = doc.learner;
        l.arch.validate()?;
        if l.theta.len() != l.arch.param_count() || l.optimizer.n_params() != l.theta.len() {
            return Err(Error::invalid("checkpoint parameter count does not match its architecture"));
        }
        Ok(l)
    }
}

#[derive(Serialize)]
struct CheckpointRef<'a> {
    format_version: u32,
    learner: &'a Learner,
}

#[derive(Deserialize)]
struct Checkpoint {
    format_version: u32,
    learner: Learner,
}

#[derive(Clone, Debug)]
pub struct PhaseOutcome {
    pub rows: Vec<LogRow>,
    /// Optimizer state checksum before the first step of the phase.
    pub start_checksum: String,
    pub end_checksum: String,
}

/// Runs `plan.epochs` epochs. A non-finite gradient or loss marks the learner
/// diverged; the rest of the phase is logged with the divergence flag set and
/// no further steps are taken.
pub fn run_phase(
    learner: &mut Learner,
    plan: &PhasePlan,
    data: &PhaseData,
    record_wall_time: bool,
) -> Result<PhaseOutcome> {
    plan.validate()?;
    if data.train_x.ncols() != learner.arch.inputs() {
        return Err(Error::Dimension {
            expected: learner.arch.inputs(),
            got: data.train_x.ncols(),
        });
    }
    let start_checksum = learner.optimizer.state.checksum();
    let logged = plan.logged_epochs();
    let started = Instant::now();
    let mut rows = Vec::with_capacity(logged.len());
    for epoch in 1..=plan.epochs {
        if !learner.diverged {
            match learner.train_epoch(data) {
                Ok(()) => {}
                Err(Error::NonFiniteGradient { .. }) => learner.diverged = true,
                Err(e) => return Err(e),
            }
        }
        learner.epochs_done += 1;
        if !logged.contains(&epoch) {
            continue;
        }
        let train = evaluate(&learner.theta, &learner.arch, data.train_x.view(), &data.train_y)?;
        let test = evaluate(&learner.theta, &learner.arch, data.test_x.view(), &data.test_y)?;
        if !train.loss.is_finite() {
            learner.diverged = true;
        }
        rows.push(LogRow {
            phase: plan.phase,
            epoch,
            loss: if learner.diverged { f64::NAN } else { train.loss },
            train_accuracy: train.accuracy,
            test_accuracy: test.accuracy,
            wall_ms: record_wall_time.then(|| started.elapsed().as_millis() as u64),
            diverged: learner.diverged,
        });
    }
    Ok(PhaseOutcome {
        rows,
        start_checksum,
        end_checksum: learner.optimizer.state.checksum(),
    })
}

/// Optional per-algorithm hyperparameter overrides.
#[derive(Clone, Copy, Debug, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperOverride {
    pub learning_rate: Option<f64>,
    pub momentum: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    pub epsilon: Option<f64>,
}

impl HyperOverride {
    fn apply(&self, mut c: OptimizerConfig) -> OptimizerConfig {
        c.learning_rate = self.learning_rate.unwrap_or(c.learning_rate);
        c.momentum = self.momentum.unwrap_or(c.momentum);
        c.beta1 = self.beta1.unwrap_or(c.beta1);
        c.beta2 = self.beta2.unwrap_or(c.beta2);
        c.epsilon = self.epsilon.unwrap_or(c.epsilon);
        c
    }
}

fn all_algorithm_names() -> Vec<String> {
    Algorithm::ALL.iter().map(|a| a.name().to_string()).collect()
}

/// Experiment file contents (TOML).
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    /// Dataset paths, relative to the config file.
    pub init_dataset: PathBuf,
    pub update_dataset: PathBuf,
    #[serde(default = "all_algorithm_names")]
    pub algorithms: Vec<String>,
    /// Seeds the initial parameters and mini-batch order.
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub split_seed: u64,
    #[serde(default = "defaults::train_fraction")]
    pub train_fraction: f64,
    #[serde(default = "defaults::init_epochs")]
    pub init_epochs: usize,
    #[serde(default = "defaults::update_epochs")]
    pub update_epochs: usize,
    #[serde(default = "defaults::eval_every")]
    pub eval_every: usize,
    #[serde(default = "defaults::hidden")]
    pub hidden: Vec<usize>,
    #[serde(default = "defaults::activation")]
    pub activation: Activation,
    #[serde(default)]
    pub batch_size: usize,
    /// Summary columns; default `E/2, E` for initialization.
    pub init_checkpoints: Option<Vec<usize>>,
    /// Summary columns; default `E/4, E/2, 3E/4, E` for update.
    pub update_checkpoints: Option<Vec<usize>>,
    #[serde(default)]
    pub record_wall_time: bool,
    #[serde(default)]
    pub hyper: BTreeMap<String, HyperOverride>,
}

mod defaults {
    use crate::mlp::Activation;

    pub fn train_fraction() -> f64 {
        0.6
    }
    pub fn init_epochs() -> usize {
        2000
    }
    pub fn update_epochs() -> usize {
        4000
    }
    pub fn eval_every() -> usize {
        50
    }
    pub fn hidden() -> Vec<usize> {
        vec![64, 32]
    }
    pub fn activation() -> Activation {
        Activation::Relu
    }
}

pub fn default_checkpoints(phase: Phase, epochs: usize) -> Vec<usize> {
    let parts: &[usize] = match phase {
        Phase::Initialization => &[1, 2],
        Phase::Update => &[1, 2, 3, 4],
    };
    let whole = parts.len();
    let mut cps: Vec<usize> = parts.iter().map(|p| (epochs * p / whole).max(1)).collect();
    cps.dedup();
    cps
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.algorithms()?;
        cfg.optimizer_configs()?;
        cfg.plan(Phase::Initialization).validate()?;
        cfg.plan(Phase::Update).validate()?;
        if !(cfg.train_fraction > 0.0 && cfg.train_fraction < 1.0) {
            return Err(Error::Config("train_fraction must lie in (0, 1)".into()));
        }
        if cfg.hidden.is_empty() || cfg.hidden.contains(&0) {
            return Err(Error::Config("hidden layer sizes must be non-empty and at least 1".into()));
        }
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut cfg = Self::parse(&text)?;
        let dir = path.parent().unwrap_or(Path::new(""));
        cfg.init_dataset = dir.join(&cfg.init_dataset);
        cfg.update_dataset = dir.join(&cfg.update_dataset);
        Ok(cfg)
    }

    pub fn algorithms(&self) -> Result<Vec<Algorithm>> {
        if self.algorithms.is_empty() {
            return Err(Error::Config("no algorithms listed".into()));
        }
        self.algorithms.iter().map(|a| a.parse()).collect()
    }

    pub fn optimizer_configs(&self) -> Result<Vec<OptimizerConfig>> {
        for key in self.hyper.keys() {
            key.parse::<Algorithm>()?;
        }
        self.algorithms()?
            .into_iter()
            .map(|alg| {
                let base = OptimizerConfig::defaults(alg);
                let over = self
                    .hyper
                    .iter()
                    .find(|(k, _)| k.parse::<Algorithm>().ok() == Some(alg))
                    .map(|(_, o)| *o)
                    .unwrap_or_default();
                let c = over.apply(base);
                c.validate()?;
                Ok(c)
            })
            .collect()
    }

    pub fn plan(&self, phase: Phase) -> PhasePlan {
        let (epochs, cps) = match phase {
            Phase::Initialization => (self.init_epochs, &self.init_checkpoints),
            Phase::Update => (self.update_epochs, &self.update_checkpoints),
        };
        PhasePlan {
            phase,
            epochs,
            eval_every: self.eval_every,
            checkpoints: cps.clone().unwrap_or_else(|| default_checkpoints(phase, epochs)),
        }
    }

    pub fn architecture(&self, inputs: usize) -> Result<MlpArchitecture> {
        let mut sizes = vec![inputs];
        sizes.extend(&self.hidden);
        sizes.push(2);
        MlpArchitecture::new(sizes, self.activation)
    }
}

#[derive(Clone, Debug)]
pub struct AlgorithmRun {
    pub algorithm: Algorithm,
    pub log: TrainingLog,
    /// Optimizer checksum after the initialization phase.
    pub init_end_checksum: String,
    /// Optimizer checksum before the first update-phase step.
    pub update_start_checksum: String,
    pub learner_after_init: Learner,
    pub learner: Learner,
}

#[derive(Clone, Debug)]
pub struct ExperimentResult {
    pub runs: Vec<AlgorithmRun>,
    pub train_summary: SummaryTable,
    pub test_summary: SummaryTable,
}

/// Prepared phase data shared by every algorithm of an experiment.
#[derive(Clone, Debug)]
pub struct ExperimentData {
    pub stats: StandardizationStats,
    pub init: PhaseData,
    pub update: PhaseData,
}

impl ExperimentData {
    /// Splits both datasets and standardizes them with statistics of the
    /// initialization training split.
    pub fn prepare(cfg: &ExperimentConfig, init: &Dataset, update: &Dataset) -> Result<Self> {
        if init.feature_names != update.feature_names {
            return Err(Error::invalid("initialization and update datasets have different feature layouts"));
        }
        let (init_train, init_test) = split_dataset(init, cfg.train_fraction, cfg.split_seed)?;
        let (upd_train, upd_test) = split_dataset(update, cfg.train_fraction, cfg.split_seed)?;
        let stats = StandardizationStats::fit(&init_train)?;
        Ok(ExperimentData {
            init: PhaseData::new(&stats, &init_train, &init_test)?,
            update: PhaseData::new(&stats, &upd_train, &upd_test)?,
            stats,
        })
    }
}

/// Trains one algorithm through both phases.
pub fn run_algorithm(cfg: &ExperimentConfig, data: &ExperimentData, opt: OptimizerConfig) -> Result<AlgorithmRun> {
    let arch = cfg.architecture(data.stats.mean.len())?;
    let mut learner = Learner::new(arch, cfg.seed, opt, data.stats.clone())?;
    learner.batch_size = cfg.batch_size;
    let init = run_phase(&mut learner, &cfg.plan(Phase::Initialization), &data.init, cfg.record_wall_time)?;
    let learner_after_init = learner.clone();
    let update = run_phase(&mut learner, &cfg.plan(Phase::Update), &data.update, cfg.record_wall_time)?;
    if init.end_checksum != update.start_checksum {
        return Err(Error::invalid(format!(
            "{}: optimizer state changed across the phase boundary",
            opt.algorithm
        )));
    }
    let mut rows = init.rows;
    rows.extend(update.rows);
    Ok(AlgorithmRun {
        algorithm: opt.algorithm,
        log: TrainingLog { rows },
        init_end_checksum: init.end_checksum,
        update_start_checksum: update.start_checksum,
        learner_after_init,
        learner,
    })
}

pub fn run_experiment_with(cfg: &ExperimentConfig, init: &Dataset, update: &Dataset) -> Result<ExperimentResult> {
    let data = ExperimentData::prepare(cfg, init, update)?;
    let runs = cfg
        .optimizer_configs()?
        .into_iter()
        .map(|opt| run_algorithm(cfg, &data, opt))
        .collect::<Result<Vec<_>>>()?;
    let init_cps = cfg.plan(Phase::Initialization).checkpoints;
    let update_cps = cfg.plan(Phase::Update).checkpoints;
    let logs: Vec<(Algorithm, &TrainingLog)> = runs.iter().map(|r| (r.algorithm, &r.log)).collect();
    let train_summary = SummaryTable::from_logs(&logs, &init_cps, &update_cps, Metric::Train)?;
    let test_summary = SummaryTable::from_logs(&logs, &init_cps, &update_cps, Metric::Test)?;
    Ok(ExperimentResult {
        runs,
        train_summary,
        test_summary,
    })
}

pub fn log_file_name(alg: Algorithm) -> String {
    format!("{}.log.csv", alg.name().to_ascii_lowercase())
}

pub const TRAIN_SUMMARY_FILE: &str = "summary_train.csv";
pub const TEST_SUMMARY_FILE: &str = "summary_test.csv";

/// Loads the config and its datasets, trains every listed algorithm and
/// writes one log per algorithm plus the two summary tables into `out_dir`.
pub fn run_experiment(config_path: &Path, out_dir: &Path) -> Result<ExperimentResult> {
    let cfg = ExperimentConfig::load(config_path)?;
    let load = |p: &Path| {
        read_dataset(p).map_err(|e| match e {
            Error::Io(io) => Error::Config(format!("cannot read dataset {}: {io}", p.display())),
            other => other,
        })
    };
    let init = load(&cfg.init_dataset)?;
    let update = load(&cfg.update_dataset)?;
    let result = run_experiment_with(&cfg, &init, &update)?;
    fs::create_dir_all(out_dir)?;
    for run in &result.runs {
        fs::write(out_dir.join(log_file_name(run.algorithm)), run.log.render_csv())?;
    }
    fs::write(out_dir.join(TRAIN_SUMMARY_FILE), result.train_summary.render_csv())?;
    fs::write(out_dir.join(TEST_SUMMARY_FILE), result.test_summary.render_csv())?;
    Ok(result)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Metric {
    Train,
    Test,
}

/// Accuracy per algorithm at fixed epochs of each phase.
#[derive(Clone, Debug, PartialEq)]
pub struct SummaryTable {
    pub columns: Vec<(Phase, usize)>,
    pub rows: Vec<(Algorithm, Vec<f64>)>,
}

impl SummaryTable {
    pub fn from_logs(
        logs: &[(Algorithm, &TrainingLog)],
        init_checkpoints: &[usize],
        update_checkpoints: &[usize],
        metric: Metric,
    ) -> Result<Self> {
        let columns: Vec<(Phase, usize)> = init_checkpoints
            .iter()
            .map(|&e| (Phase::Initialization, e))
            .chain(update_checkpoints.iter().map(|&e| (Phase::Update, e)))
            .collect();
        let rows = logs
            .iter()
            .map(|(alg, log)| {
                let values = columns
                    .iter()
                    .map(|&(phase, epoch)| {
                        let row = log.row(phase, epoch).ok_or_else(|| {
                            Error::invalid(format!("{alg} log has no {} epoch {epoch}", phase.name()))
                        })?;
                        Ok(match metric {
                            Metric::Train => row.train_accuracy,
                            Metric::Test => row.test_accuracy,
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok((*alg, values))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SummaryTable { columns, rows })
    }

    /// Summary using each phase's default checkpoints, taking the phase
    /// length from the last logged epoch.
    pub fn from_logs_default(logs: &[(Algorithm, &TrainingLog)], metric: Metric) -> Result<Self> {
        let (_, first) = logs.first().ok_or_else(|| Error::invalid("no training logs"))?;
        let length = |phase| {
            first
                .last(phase)
                .map(|r| r.epoch)
                .ok_or_else(|| Error::invalid(format!("log has no {} rows", Phase::name(phase))))
        };
        let init = default_checkpoints(Phase::Initialization, length(Phase::Initialization)?);
        let update = default_checkpoints(Phase::Update, length(Phase::Update)?);
        Self::from_logs(logs, &init, &update, metric)
    }

    pub fn column(&self, phase: Phase, epoch: usize) -> Option<usize> {
        self.columns.iter().position(|&c| c == (phase, epoch))
    }

    pub fn value(&self, alg: Algorithm, phase: Phase, epoch: usize) -> Option<f64> {
        let col = self.column(phase, epoch)?;
        self.rows.iter().find(|(a, _)| *a == alg).map(|(_, v)| v[col])
    }

    pub fn render_csv(&self) -> String {
        let mut out = String::from("algorithm");
        for (phase, epoch) in &self.columns {
            let _ = write!(out, ",{}@{epoch}", phase.name());
        }
        out.push('\n');
        for (alg, values) in &self.rows {
            out.push_str(alg.name());
            for v in values {
                let _ = write!(out, ",{v:.4}");
            }
            out.push('\n');
        }
        out
    }
}

/// Reads every `<algorithm>.log.csv` in `dir`, in the canonical algorithm order.
pub fn read_logs(dir: &Path) -> Result<Vec<(Algorithm, TrainingLog)>> {
    let mut logs = Vec::new();
    for alg in Algorithm::ALL {
        let path = dir.join(log_file_name(alg));
        if path.exists() {
            logs.push((alg, TrainingLog::parse_csv(&fs::read_to_string(&path)?)?));
        }
    }
    if logs.is_empty() {
        return Err(Error::Config(format!("no training logs found in {}", dir.display())));
    }
    Ok(logs)
}
