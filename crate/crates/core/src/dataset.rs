//! Operating-condition generation, feature extraction, contingency labeling,
//! train/test splitting and dataset files.
//!
//! Dataset files are comma-delimited text. The header row holds the feature
//! names followed by `label`; each following row is one sample with label
//! `1` = Secure and `0` = Insecure. A companion `<file>.meta` holds
//! `key = value` lines with the generation digest, seed, rejection count and
//! per-sample provenance.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::grid::{BranchRef, NetworkCase};
use crate::powerflow::{solve_powerflow, PowerFlowSolution, SolveOptions};
use crate::security::{screen_from_solution, Label, OperatingLimits};

/// Slack of the capacity check in [`reschedule_generation`], in MW.
const HEADROOM_SLACK_MW: f64 = 1e-9;

/// Adjusts non-slack generation by `delta_p` MW in proportion to capacity,
/// clamping at `[0, p_max]` and spreading the clamped residual over the
/// remaining units. Returns the rescheduled case and the part of `delta_p`
/// that could not be placed.
pub fn reschedule_generation_clamped(case: &NetworkCase, delta_p: f64) -> (NetworkCase, f64) {
    let slack_bus = case.slack_index().map(|i| case.buses[i].id);
    let mut out = case.clone();
    let mut active: Vec<usize> = out
        .generators
        .iter()
        .enumerate()
        .filter(|(_, g)| g.in_service && Some(g.bus) != slack_bus && g.p_max > 0.0)
        .map(|(i, _)| i)
        .collect();
    let mut remaining = delta_p;
    while remaining != 0.0 && !active.is_empty() {
        let cap: f64 = active.iter().map(|&i| out.generators[i].p_max).sum();
        let mut free = Vec::with_capacity(active.len());
        let mut placed = 0.0;
        for &i in &active {
            let g = &mut out.generators[i];
            let target = g.p_mw + remaining * g.p_max / cap;
            if target > g.p_max {
                placed += g.p_max - g.p_mw;
                g.p_mw = g.p_max;
            } else if target < 0.0 {
                placed -= g.p_mw;
                g.p_mw = 0.0;
            } else {
                free.push(i);
            }
        }
        if free.len() == active.len() {
            for &i in &free {
                let g = &mut out.generators[i];
                g.p_mw += remaining * g.p_max / cap;
            }
            remaining = 0.0;
            break;
        }
        remaining -= placed;
        active = free;
    }
    (out, remaining)
}

/// Capacity-proportional rescheduling of non-slack units; errors when the
/// change exceeds their aggregate headroom. A case whose only unit is the
/// slack is returned unchanged (the slack absorbs the change).
pub fn reschedule_generation(case: &NetworkCase, delta_p: f64) -> Result<NetworkCase> {
    let slack_bus = case.slack_index().map(|i| case.buses[i].id);
    let units = case
        .generators
        .iter()
        .filter(|g| g.in_service && Some(g.bus) != slack_bus);
    if units.clone().next().is_none() {
        return Ok(case.clone());
    }
    let (up, down) = units.fold((0.0, 0.0), |(u, d), g| (u + (g.p_max - g.p_mw), d + g.p_mw));
    if delta_p > up + HEADROOM_SLACK_MW || -delta_p > down + HEADROOM_SLACK_MW {
        return Err(Error::invalid(format!(
            "generation change {delta_p:.3} MW exceeds aggregate headroom (+{up:.3} / -{down:.3} MW)"
        )));
    }
    Ok(reschedule_generation_clamped(case, delta_p).0)
}

/// An accepted operating condition.
#[derive(Clone, Debug)]
pub struct GeneratedOc {
    pub case: NetworkCase,
    pub solution: PowerFlowSolution,
    /// Per-load multipliers in load order.
    pub load_scales: Vec<f64>,
    /// Number of rejected draws before this one.
    pub attempt: u32,
}

/// Draws per-load multipliers for one attempt and builds the scaled,
/// rescheduled and (optionally) outaged case.
pub fn draw_oc(
    case: &NetworkCase,
    seed: u64,
    attempt: u32,
    scale_range: (f64, f64),
    tc: Option<BranchRef>,
) -> Result<(NetworkCase, Vec<f64>)> {
    let (lo, hi) = scale_range;
    if !(lo <= hi) {
        return Err(Error::invalid("scale range must satisfy lo <= hi"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(attempt as u64);
    let scales: Vec<f64> = case
        .loads
        .iter()
        .map(|_| if lo == hi { lo } else { rng.gen_range(lo..=hi) })
        .collect();
    let mut scaled = case.clone();
    for (l, s) in scaled.loads.iter_mut().zip(&scales) {
        l.p_mw *= s;
        l.q_mvar *= s;
    }
    let delta = scaled.total_load_mw() - case.total_load_mw();
    let mut scaled = reschedule_generation(&scaled, delta)?;
    if let Some(r) = tc {
        let idx = scaled.find_branch(&r)?;
        scaled = scaled.apply_outage(idx)?;
    }
    Ok((scaled, scales))
}

/// Draws operating conditions from `seed` until one converges. Draw `k`
/// uses stream `k` of the seeded generator.
pub fn generate_oc(
    case: &NetworkCase,
    seed: u64,
    scale_range: (f64, f64),
    tc: Option<BranchRef>,
    opts: &SolveOptions,
    max_rejections: u32,
) -> Result<GeneratedOc> {
    for attempt in 0..=max_rejections {
        let (scaled, load_scales) = draw_oc(case, seed, attempt, scale_range, tc)?;
        let solution = solve_powerflow(&scaled, opts);
        if solution.converged {
            return Ok(GeneratedOc {
                case: scaled,
                solution,
                load_scales,
                attempt,
            });
        }
    }
    Err(Error::Config(format!(
        "infeasible generation config: {} consecutive rejections",
        max_rejections + 1
    )))
}

/// Fixed feature layout derived from the base topology.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureLayout {
    load_buses: Vec<usize>,
    branches: Vec<usize>,
    pub names: Vec<String>,
}

impl FeatureLayout {
    /// `[|V| per PQ bus] ++ [angle per PQ bus] ++ [from-end |I|] ++ [P_from]
    /// ++ [Q_from]`, buses ascending by id, branches in case order over those
    /// in service in `base`.
    pub fn new(base: &NetworkCase) -> Self {
        let index = base.bus_index();
        let ids = base.load_bus_ids();
        let load_buses: Vec<usize> = ids.iter().map(|id| index[id]).collect();
        let branches: Vec<usize> = (0..base.branches.len())
            .filter(|&k| base.branches[k].in_service)
            .collect();
        let mut names = Vec::with_capacity(2 * ids.len() + 3 * branches.len());
        names.extend(ids.iter().map(|id| format!("vm_{id}")));
        names.extend(ids.iter().map(|id| format!("va_{id}")));
        for prefix in ["i", "p", "q"] {
            names.extend(branches.iter().map(|&k| format!("{prefix}_{}", base.branch_ref(k))));
        }
        FeatureLayout {
            load_buses,
            branches,
            names,
        }
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    /// Measurement vector of a converged solution. Branches switched out in
    /// the solved topology read 0.0.
    pub fn extract(&self, sol: &PowerFlowSolution) -> Result<Vec<f64>> {
        if !sol.converged {
            return Err(Error::invalid("features need a converged solution"));
        }
        let mut x = Vec::with_capacity(self.len());
        x.extend(self.load_buses.iter().map(|&i| sol.v_mag[i]));
        x.extend(self.load_buses.iter().map(|&i| sol.v_ang[i]));
        for column in [&sol.i_from, &sol.p_from, &sol.q_from] {
            x.extend(
                self.branches
                    .iter()
                    .map(|&k| if sol.in_service[k] { column[k] } else { 0.0 }),
            );
        }
        Ok(x)
    }
}

pub fn extract_features(solution: &PowerFlowSolution, base: &NetworkCase) -> Result<Vec<f64>> {
    FeatureLayout::new(base).extract(solution)
}

#[derive(Clone, Debug, PartialEq)]
pub struct SampleMeta {
    pub seed: u64,
    pub attempt: u32,
    pub tc: Option<BranchRef>,
    pub load_scales: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct LabeledSample {
    pub features: Vec<f64>,
    pub label: Label,
    pub meta: SampleMeta,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub samples: Vec<LabeledSample>,
    pub feature_names: Vec<String>,
    /// Digest of the generation config, or a note for derived datasets.
    pub provenance: String,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.samples.iter().filter(|s| s.label == label).count()
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.feature_names.len();
        let unique: HashSet<&String> = self.feature_names.iter().collect();
        if unique.len() != m {
            return Err(Error::invalid("feature names are not unique"));
        }
        for (i, s) in self.samples.iter().enumerate() {
            if s.features.len() != m {
                return Err(Error::invalid(format!(
                    "sample {i} has {} features, expected {m}",
                    s.features.len()
                )));
            }
            if s.features.iter().any(|x| !x.is_finite()) {
                return Err(Error::invalid(format!("sample {i} has non-finite features")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DatasetConfig {
    pub n_samples: usize,
    pub scale_range: (f64, f64),
    /// Fraction of samples carrying a topology change.
    pub tc_fraction: f64,
    pub tc_list: Vec<BranchRef>,
    pub csc_list: Vec<BranchRef>,
    pub seed: u64,
    pub limits: OperatingLimits,
    pub solve: SolveOptions,
    pub max_rejections: u32,
    /// How many times the upper scale bound may be raised by 0.05 when a
    /// generated dataset holds only Secure samples.
    pub max_widenings: u32,
}

impl DatasetConfig {
    pub fn new(n_samples: usize, seed: u64, csc_list: Vec<BranchRef>) -> Self {
        DatasetConfig {
            n_samples,
            scale_range: (0.8, 1.05),
            tc_fraction: 0.0,
            tc_list: Vec::new(),
            csc_list,
            seed,
            limits: OperatingLimits::default(),
            solve: SolveOptions::default(),
            max_rejections: 50,
            max_widenings: 4,
        }
    }

    /// Number of samples carrying a topology change.
    pub fn tc_count(&self) -> usize {
        (self.tc_fraction * self.n_samples as f64).round() as usize
    }

    fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.tc_fraction) {
            return Err(Error::Config("tc fraction must lie in [0, 1]".into()));
        }
        if self.tc_count() > 0 && self.tc_list.is_empty() {
            return Err(Error::Config("tc fraction > 0 needs a TC list".into()));
        }
        if !(self.scale_range.0 <= self.scale_range.1) {
            return Err(Error::Config("scale range must satisfy lo <= hi".into()));
        }
        if self.csc_list.is_empty() {
            return Err(Error::Config("no contingencies configured".into()));
        }
        Ok(())
    }

    /// SHA-256 over the case and every generation parameter.
    pub fn digest(&self, case: &NetworkCase) -> String {
        let mut canon = case.render();
        let refs = |v: &[BranchRef]| v.iter().map(|r| r.to_string()).collect::<Vec<_>>().join(" ");
        let _ = write!(
            canon,
            "n={} scale={:?} tc_fraction={} tc=[{}] csc=[{}] seed={} limits={:?} solve={:?} rej={} widen={}",
            self.n_samples,
            self.scale_range,
            self.tc_fraction,
            refs(&self.tc_list),
            refs(&self.csc_list),
            self.seed,
            self.limits,
            self.solve,
            self.max_rejections,
            self.max_widenings
        );
        Sha256::digest(canon.as_bytes())
            .iter()
            .map(|b| format!("{b:02x}"))
            .collect()
    }
}

#[derive(Clone, Debug)]
pub struct BuildReport {
    pub dataset: Dataset,
    /// Total rejected draws across samples.
    pub rejections: u64,
    /// Scale range actually used (differs from the config after widening).
    pub scale_range: (f64, f64),
    pub widened: bool,
}

/// Which samples carry which topology change.
fn assign_topology_changes(cfg: &DatasetConfig) -> Vec<Option<BranchRef>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(u64::MAX);
    let mut order: Vec<usize> = (0..cfg.n_samples).collect();
    order.shuffle(&mut rng);
    let mut out = vec![None; cfg.n_samples];
    for &i in order.iter().take(cfg.tc_count()) {
        out[i] = Some(cfg.tc_list[rng.gen_range(0..cfg.tc_list.len())]);
    }
    out
}

/// Generates and labels `n_samples` operating conditions. Sample `i` is
/// drawn from seed `seed + i`, so the result depends only on the config.
pub fn build_dataset(case: &NetworkCase, cfg: &DatasetConfig) -> Result<BuildReport> {
    cfg.validate()?;
    let layout = FeatureLayout::new(case);
    let tcs = assign_topology_changes(cfg);
    let mut range = cfg.scale_range;
    let mut widenings = 0;
    loop {
        let mut samples = Vec::with_capacity(cfg.n_samples);
        let mut rejections = 0u64;
        for (i, tc) in tcs.iter().enumerate() {
            let seed = cfg.seed.wrapping_add(i as u64);
            let oc = generate_oc(case, seed, range, *tc, &cfg.solve, cfg.max_rejections)?;
            rejections += oc.attempt as u64;
            let screen =
                screen_from_solution(&oc.case, &oc.solution, &cfg.csc_list, &cfg.limits, &cfg.solve)?;
            samples.push(LabeledSample {
                features: layout.extract(&oc.solution)?,
                label: screen.label,
                meta: SampleMeta {
                    seed,
                    attempt: oc.attempt,
                    tc: *tc,
                    load_scales: oc.load_scales,
                },
            });
        }
        let all_secure = samples.iter().all(|s| s.label == Label::Secure);
        if all_secure && !samples.is_empty() && widenings < cfg.max_widenings {
            widenings += 1;
            range.1 += 0.05;
            continue;
        }
        let dataset = Dataset {
            samples,
            feature_names: layout.names.clone(),
            provenance: cfg.digest(case),
        };
        return Ok(BuildReport {
            dataset,
            rejections,
            scale_range: range,
            widened: widenings > 0,
        });
    }
}

/// Regenerates a stored sample from its metadata and re-runs the screen.
pub fn relabel(case: &NetworkCase, cfg: &DatasetConfig, range: (f64, f64), meta: &SampleMeta) -> Result<Label> {
    let (scaled, _) = draw_oc(case, meta.seed, meta.attempt, range, meta.tc)?;
    let sol = solve_powerflow(&scaled, &cfg.solve);
    if !sol.converged {
        return Err(Error::invalid("stored sample no longer converges"));
    }
    Ok(screen_from_solution(&scaled, &sol, &cfg.csc_list, &cfg.limits, &cfg.solve)?.label)
}

/// Seeded shuffle, then the first `floor(f * N)` samples form the training set.
pub fn split_dataset(ds: &Dataset, train_fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if ds.is_empty() {
        return Err(Error::invalid("cannot split an empty dataset"));
    }
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::invalid("train fraction must lie in (0, 1)"));
    }
    let mut order: Vec<usize> = (0..ds.len()).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let n_train = (train_fraction * ds.len() as f64).floor() as usize;
    let pick = |idx: &[usize], part: &str| Dataset {
        samples: idx.iter().map(|&i| ds.samples[i].clone()).collect(),
        feature_names: ds.feature_names.clone(),
        provenance: format!("{} [{part} split f={train_fraction} seed={seed}]", ds.provenance),
    };
    Ok((pick(&order[..n_train], "train"), pick(&order[n_train..], "test")))
}

pub fn meta_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_owned();
    s.push(".meta");
    PathBuf::from(s)
}

pub fn render_dataset_csv(ds: &Dataset) -> String {
    let mut s = String::new();
    s.push_str(&ds.feature_names.join(","));
    s.push_str(",label\n");
    for sample in &ds.samples {
        for x in &sample.features {
            let _ = write!(s, "{x},");
        }
        let _ = writeln!(s, "{}", sample.label.file_code());
    }
    s
}

pub fn render_meta(ds: &Dataset, report: Option<&BuildReport>, cfg: Option<&DatasetConfig>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "format_version = 1");
    let _ = writeln!(s, "config_digest = {}", ds.provenance);
    if let Some(cfg) = cfg {
        let _ = writeln!(s, "seed = {}", cfg.seed);
        let _ = writeln!(s, "tc_fraction = {}", cfg.tc_fraction);
        let tcs: Vec<String> = cfg.tc_list.iter().map(|r| r.to_string()).collect();
        let cscs: Vec<String> = cfg.csc_list.iter().map(|r| r.to_string()).collect();
        let _ = writeln!(s, "tc_list = {}", tcs.join(" "));
        let _ = writeln!(s, "csc_list = {}", cscs.join(" "));
    }
    if let Some(r) = report {
        let _ = writeln!(s, "rejections = {}", r.rejections);
        let _ = writeln!(s, "scale_range = {},{}", r.scale_range.0, r.scale_range.1);
        let _ = writeln!(s, "widened = {}", r.widened);
    }
    let _ = writeln!(s, "n_samples = {}", ds.len());
    let _ = writeln!(s, "n_features = {}", ds.feature_names.len());
    let _ = writeln!(s, "secure = {}", ds.count(Label::Secure));
    let _ = writeln!(s, "insecure = {}", ds.count(Label::Insecure));
    for (i, sample) in ds.samples.iter().enumerate() {
        let tc = sample.meta.tc.map(|r| r.to_string()).unwrap_or_else(|| "none".into());
        let _ = writeln!(
            s,
            "sample.{i} = seed:{} attempt:{} tc:{}",
            sample.meta.seed, sample.meta.attempt, tc
        );
    }
    s
}

/// Writes the dataset file and its `.meta` companion.
pub fn write_dataset(
    path: &Path,
    ds: &Dataset,
    report: Option<&BuildReport>,
    cfg: Option<&DatasetConfig>,
) -> Result<()> {
    fs::write(path, render_dataset_csv(ds))?;
    fs::write(meta_path(path), render_meta(ds, report, cfg))?;
    Ok(())
}

/// Reads a dataset file. Per-sample metadata is restored from the `.meta`
/// companion when present.
pub fn read_dataset(path: &Path) -> Result<Dataset> {
    let text = fs::read_to_string(path)?;
    let mut ds = parse_dataset_csv(&text)?;
    if let Ok(meta) = fs::read_to_string(meta_path(path)) {
        apply_meta(&mut ds, &meta)?;
    }
    Ok(ds)
}

pub fn parse_dataset_csv(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| Error::syntax(1, "empty dataset file"))?;
    let mut names: Vec<String> = header.split(',').map(str::to_string).collect();
    if names.pop().as_deref() != Some("label") {
        return Err(Error::syntax(1, "last header column must be `label`"));
    }
    let mut samples = Vec::new();
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let cols: Vec<&str> = line.split(',').collect();
        if cols.len() != names.len() + 1 {
            return Err(Error::syntax(
                i + 1,
                format!("expected {} columns, found {}", names.len() + 1, cols.len()),
            ));
        }
        let features = cols[..names.len()]
            .iter()
            .map(|c| c.parse::<f64>())
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(|e| Error::syntax(i + 1, e.to_string()))?;
        let label = Label::from_file_code(cols[names.len()])
            .ok_or_else(|| Error::syntax(i + 1, "label must be 0 or 1"))?;
        samples.push(LabeledSample {
            features,
            label,
            meta: SampleMeta {
                seed: 0,
                attempt: 0,
                tc: None,
                load_scales: Vec::new(),
            },
        });
    }
    let ds = Dataset {
        samples,
        feature_names: names,
        provenance: String::new(),
    };
    ds.validate()?;
    Ok(ds)
}

fn apply_meta(ds: &mut Dataset, meta: &str) -> Result<()> {
    for (lineno, line) in meta.lines().enumerate() {
        let Some((key, value)) = line.split_once('=') else {
            continue;
        };
        let (key, value) = (key.trim(), value.trim());
        if key == "config_digest" {
            ds.provenance = value.to_string();
        } else if let Some(idx) = key.strip_prefix("sample.") {
            let bad = || Error::syntax(lineno + 1, format!("bad sample metadata `{line}`"));
            let idx: usize = idx.parse().map_err(|_| bad())?;
            let sample = ds.samples.get_mut(idx).ok_or_else(bad)?;
            for part in value.split_whitespace() {
                match part.split_once(':') {
                    Some(("seed", v)) => sample.meta.seed = v.parse().map_err(|_| bad())?,
                    Some(("attempt", v)) => sample.meta.attempt = v.parse().map_err(|_| bad())?,
                    Some(("tc", "none")) => sample.meta.tc = None,
                    Some(("tc", v)) => sample.meta.tc = Some(v.parse()?),
                    _ => return Err(bad()),
                }
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::cases;

    fn three_gen_case() -> NetworkCase {
        let mut c = cases::nine_bus();
        c.generators[1].p_max = 100.0;
        c.generators[1].p_mw = 50.0;
        c.generators[2].p_max = 300.0;
        c.generators[2].p_mw = 50.0;
        c
    }

    #[test]
    fn reschedule_zero_is_identity() {
        let c = cases::nine_bus();
        assert_eq!(reschedule_generation(&c, 0.0).unwrap(), c);
    }

    #[test]
    fn reschedule_proportional() {
        let c = three_gen_case();
        let out = reschedule_generation(&c, 40.0).unwrap();
        assert!((out.generators[1].p_mw - 60.0).abs() < 1e-12);
        assert!((out.generators[2].p_mw - 80.0).abs() < 1e-12);
        assert_eq!(out.generators[0], c.generators[0]);
    }

    #[test]
    fn reschedule_clamps_and_redistributes() {
        // Unit 1 has 50 MW headroom; a 300 MW increase would give it 75.
        let c = three_gen_case();
        let out = reschedule_generation(&c, 300.0).unwrap();
        assert!((out.generators[1].p_mw - 100.0).abs() < 1e-12);
        assert!((out.generators[2].p_mw - 300.0).abs() < 1e-12);

        let out = reschedule_generation(&c, 200.0).unwrap();
        assert!((out.generators[1].p_mw - 100.0).abs() < 1e-12);
        assert!((out.generators[2].p_mw - 200.0).abs() < 1e-12);
    }

    #[test]
    fn reschedule_beyond_capacity_errors() {
        let c = three_gen_case();
        assert!(reschedule_generation(&c, 300.1).is_err());
        assert!(reschedule_generation(&c, -100.1).is_err());
        let (_, left) = reschedule_generation_clamped(&c, 310.0);
        assert!((left - 10.0).abs() < 1e-9);
    }

    #[test]
    fn two_bus_layout() {
        let case = cases::two_bus();
        let sol = solve_powerflow(&case, &SolveOptions::default());
        let x = extract_features(&sol, &case).unwrap();
        assert_eq!(x.len(), 5);
        assert_eq!(
            FeatureLayout::new(&case).names,
            vec!["vm_2", "va_2", "i_1-2", "p_1-2", "q_1-2"]
        );
        assert!((x[3] - sol.p_from[0]).abs() == 0.0);
    }

    #[test]
    fn flat_case_features() {
        let mut case = cases::two_bus();
        case.loads[0].p_mw = 0.0;
        let sol = solve_powerflow(&case, &SolveOptions::default());
        let x = extract_features(&sol, &case).unwrap();
        assert_eq!(x[1], 0.0);
        assert!(x[2..].iter().all(|v| *v == 0.0));
    }

    #[test]
    fn outaged_branch_reads_zero() {
        let case = cases::nine_bus();
        let layout = FeatureLayout::new(&case);
        let k = case.find_branch(&BranchRef::new(5, 6)).unwrap();
        let out = case.apply_outage(k).unwrap();
        let sol = solve_powerflow(&out, &SolveOptions::default());
        let x = layout.extract(&sol).unwrap();
        assert_eq!(x.len(), 2 * 6 + 3 * 9);
        let nb = 12;
        assert_eq!(x[nb + k], 0.0);
        assert_eq!(x[nb + 9 + k], 0.0);
        assert_eq!(x[nb + 18 + k], 0.0);
    }

    #[test]
    fn degenerate_range_matches_base() {
        let case = cases::nine_bus();
        let oc = generate_oc(&case, 3, (1.0, 1.0), None, &SolveOptions::default(), 5).unwrap();
        let base = solve_powerflow(&case, &SolveOptions::default());
        assert_eq!(oc.solution.v_mag, base.v_mag);
        assert_eq!(oc.solution.p_from, base.p_from);
    }

    #[test]
    fn rejections_are_bounded() {
        let mut case = cases::two_bus();
        case.generators[0].p_max = 100_000.0;
        let err = generate_oc(&case, 1, (12.0, 13.0), None, &SolveOptions::default(), 3).unwrap_err();
        assert!(err.to_string().contains("infeasible generation config"), "{err}");
    }

    #[test]
    fn split_sizes() {
        let ds = Dataset {
            samples: (0..2)
                .map(|i| LabeledSample {
                    features: vec![i as f64],
                    label: Label::Secure,
                    meta: SampleMeta {
                        seed: i,
                        attempt: 0,
                        tc: None,
                        load_scales: vec![],
                    },
                })
                .collect(),
            feature_names: vec!["a".into()],
            provenance: String::new(),
        };
        let (a, b) = split_dataset(&ds, 0.5, 1).unwrap();
        assert_eq!((a.len(), b.len()), (1, 1));
        assert!(split_dataset(&ds, 1.0, 1).is_err());
        let empty = Dataset {
            samples: vec![],
            ..ds
        };
        assert!(split_dataset(&empty, 0.5, 1).is_err());
    }

    #[test]
    fn csv_parse_errors() {
        assert!(parse_dataset_csv("a,b\n1,2\n").is_err());
        assert!(parse_dataset_csv("a,label\n1,2\n").is_err());
        assert!(parse_dataset_csv("a,label\n1,1,1\n").is_err());
        let ds = parse_dataset_csv("a,b,label\n1,2,1\n3,4,0\n").unwrap();
        assert_eq!(ds.count(Label::Insecure), 1);
    }
}
