//! Voltage performance index, configuration categories, operating-limit
//! checks and N-1 contingency screening.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::grid::{BranchRef, NetworkCase};
use crate::powerflow::{solve_powerflow, solve_powerflow_from, PowerFlowSolution, SolveOptions};

/// PI_V above this value marks a configuration as significant.
pub const PIV_THRESHOLD: f64 = 0.1;
/// Flow difference (MW) at or above which a significant configuration is a CSC.
pub const FLOW_DELTA_THRESHOLD_MW: f64 = 200.0;

/// A per-bus parameter that is either shared by all buses or given per bus.
#[derive(Clone, Debug, PartialEq)]
pub enum PerBus {
    Uniform(f64),
    Each(Vec<f64>),
}

impl PerBus {
    pub fn get(&self, i: usize) -> f64 {
        match self {
            PerBus::Uniform(v) => *v,
            PerBus::Each(v) => v[i],
        }
    }

    fn check_len(&self, n: usize, name: &str) -> Result<()> {
        match self {
            PerBus::Each(v) if v.len() != n => Err(Error::Dimension {
                expected: n,
                got: v.len(),
            })
            .map_err(|e| Error::invalid(format!("{name}: {e}"))),
            _ => Ok(()),
        }
    }

    fn all(&self, pred: impl Fn(f64) -> bool) -> bool {
        match self {
            PerBus::Uniform(v) => pred(*v),
            PerBus::Each(v) => v.iter().all(|x| pred(*x)),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PivConfig {
    pub weights: PerBus,
    /// Half the even power applied to each normalized deviation.
    pub exponent: u32,
    /// Acceptable voltage deviation per bus (pu).
    pub dv_limit: PerBus,
}

impl Default for PivConfig {
    fn default() -> Self {
        PivConfig {
            weights: PerBus::Uniform(1.0),
            exponent: 1,
            dv_limit: PerBus::Uniform(0.05),
        }
    }
}

impl PivConfig {
    fn validate(&self, n: usize) -> Result<()> {
        self.weights.check_len(n, "weights")?;
        self.dv_limit.check_len(n, "dv_limit")?;
        if self.exponent < 1 {
            return Err(Error::invalid("PI_V exponent must be at least 1"));
        }
        if !self.weights.all(|w| w >= 0.0) {
            return Err(Error::invalid("PI_V weights must be non-negative"));
        }
        if !self.dv_limit.all(|d| d > 0.0) {
            return Err(Error::invalid("PI_V deviation limits must be positive"));
        }
        Ok(())
    }
}

/// Voltage performance index of a configuration relative to the
/// pre-configuration operating point:
/// `sum_i w_i / (2n) * ((|V_i post| - |V_i pre|) / dV_i)^(2n)`.
pub fn compute_piv(pre: &PowerFlowSolution, post: &PowerFlowSolution, cfg: &PivConfig) -> Result<f64> {
    if !pre.converged || !post.converged {
        return Err(Error::invalid("PI_V needs converged solutions"));
    }
    piv_from_magnitudes(&pre.v_mag, &post.v_mag, cfg)
}

pub fn piv_from_magnitudes(pre: &[f64], post: &[f64], cfg: &PivConfig) -> Result<f64> {
    if pre.len() != post.len() {
        return Err(Error::Dimension {
            expected: pre.len(),
            got: post.len(),
        });
    }
    cfg.validate(pre.len())?;
    let two_n = 2 * cfg.exponent;
    Ok(pre
        .iter()
        .zip(post)
        .enumerate()
        .map(|(i, (a, b))| {
            let dev = (b - a) / cfg.dv_limit.get(i);
            cfg.weights.get(i) / two_n as f64 * dev.powi(two_n as i32)
        })
        .sum())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Category {
    /// Topology change: significant voltage impact, modest flow change.
    Tc,
    /// Critical system contingency.
    Csc,
    Negligible,
}

impl fmt::Display for Category {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Category::Tc => "TC",
            Category::Csc => "CSC",
            Category::Negligible => "Negligible",
        })
    }
}

/// The three-region decision table. Ties: `pi_v == 0.1` is negligible and a
/// flow delta of exactly 200 MW is a CSC.
pub fn categorize(pi_v: f64, max_flow_delta_mw: f64) -> Category {
    if !(pi_v > PIV_THRESHOLD) {
        Category::Negligible
    } else if max_flow_delta_mw < FLOW_DELTA_THRESHOLD_MW {
        Category::Tc
    } else {
        Category::Csc
    }
}

/// A system configuration relative to the base topology.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Configuration {
    Base,
    Outage(BranchRef),
}

impl fmt::Display for Configuration {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Configuration::Base => f.write_str("base"),
            Configuration::Outage(r) => r.fmt(f),
        }
    }
}

impl FromStr for Configuration {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "base" => Ok(Configuration::Base),
            other => other.parse().map(Configuration::Outage),
        }
    }
}

/// Parses a configuration list: one `from-to[:circuit]` or `base` per line.
pub fn parse_configurations(text: &str) -> Result<Vec<Configuration>> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        out.push(
            line.parse()
                .map_err(|e: Error| Error::syntax(lineno + 1, e.to_string()))?,
        );
    }
    Ok(out)
}

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigurationAssessment {
    pub configuration: Configuration,
    pub pi_v: f64,
    pub max_flow_delta_mw: f64,
    pub category: Category,
}

/// Largest absolute change in from-end active flow over branches in service
/// in both solutions.
pub fn max_flow_delta_mw(pre: &PowerFlowSolution, post: &PowerFlowSolution) -> f64 {
    (0..pre.p_from.len())
        .filter(|&k| pre.in_service[k] && post.in_service[k])
        .map(|k| (post.p_from[k] - pre.p_from[k]).abs())
        .fold(0.0, f64::max)
}

pub fn classify_configuration(
    configuration: Configuration,
    pre: &PowerFlowSolution,
    post: &PowerFlowSolution,
    cfg: &PivConfig,
) -> Result<ConfigurationAssessment> {
    let pi_v = compute_piv(pre, post, cfg)?;
    let delta = max_flow_delta_mw(pre, post);
    Ok(ConfigurationAssessment {
        configuration,
        pi_v,
        max_flow_delta_mw: delta,
        category: categorize(pi_v, delta),
    })
}

/// Assesses each configuration against the base case solution and returns
/// them ranked by descending PI_V. Configurations that island the network
/// or fail to converge get infinite PI_V and flow delta, which ranks them
/// first as CSCs.
pub fn assess_configurations(
    case: &NetworkCase,
    configurations: &[Configuration],
    cfg: &PivConfig,
    opts: &SolveOptions,
) -> Result<Vec<ConfigurationAssessment>> {
    let pre = solve_powerflow(case, opts);
    if !pre.converged {
        return Err(Error::Infeasible(
            pre.diagnostic.unwrap_or_else(|| "no convergence".into()),
        ));
    }
    let mut out = Vec::with_capacity(configurations.len());
    for &c in configurations {
        let post = match c {
            Configuration::Base => Some(pre.clone()),
            Configuration::Outage(r) => {
                let idx = case.find_branch(&r)?;
                match case.apply_outage(idx) {
                    Ok(outaged) => Some(solve_powerflow_from(&outaged, opts, Some(&pre)))
                        .filter(|s| s.converged),
                    Err(Error::Islanding(_)) => None,
                    Err(e) => return Err(e),
                }
            }
        };
        out.push(match post {
            Some(post) => classify_configuration(c, &pre, &post, cfg)?,
            None => ConfigurationAssessment {
                configuration: c,
                pi_v: f64::INFINITY,
                max_flow_delta_mw: f64::INFINITY,
                category: Category::Csc,
            },
        });
    }
    out.sort_by(|a, b| b.pi_v.total_cmp(&a.pi_v));
    Ok(out)
}

pub fn write_assessments<W: Write>(rows: &[ConfigurationAssessment], mut out: W) -> std::io::Result<()> {
    writeln!(out, "rank,configuration,pi_v,max_flow_delta_mw,category")?;
    for (i, r) in rows.iter().enumerate() {
        writeln!(
            out,
            "{},{},{:.6},{:.3},{}",
            i + 1,
            r.configuration,
            r.pi_v,
            r.max_flow_delta_mw,
            r.category
        )?;
    }
    Ok(())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct OperatingLimits {
    pub v_min: f64,
    pub v_max: f64,
    /// Allowed apparent power as a fraction of branch rating.
    pub loading_limit: f64,
}

impl Default for OperatingLimits {
    fn default() -> Self {
        OperatingLimits {
            v_min: 0.90,
            v_max: 1.10,
            loading_limit: 1.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum ViolationKind {
    LowVoltage { bus: u32 },
    HighVoltage { bus: u32 },
    Overload { branch: BranchRef },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    /// Voltage magnitude (pu) or loading as a fraction of rating.
    pub value: f64,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ViolationKind::LowVoltage { bus } => write!(f, "bus {bus} low-voltage {:.4}", self.value),
            ViolationKind::HighVoltage { bus } => write!(f, "bus {bus} high-voltage {:.4}", self.value),
            ViolationKind::Overload { branch } => write!(f, "branch {branch} overload {:.4}", self.value),
        }
    }
}

/// Lists every bus outside the voltage band and every branch loaded beyond
/// its rating. Branch loading uses the larger end apparent power.
pub fn check_limits(
    solution: &PowerFlowSolution,
    case: &NetworkCase,
    limits: &OperatingLimits,
) -> Vec<Violation> {
    let mut out = Vec::new();
    for (i, &v) in solution.v_mag.iter().enumerate() {
        let bus = solution.bus_ids[i];
        if v < limits.v_min {
            out.push(Violation {
                kind: ViolationKind::LowVoltage { bus },
                value: v,
            });
        } else if v > limits.v_max {
            out.push(Violation {
                kind: ViolationKind::HighVoltage { bus },
                value: v,
            });
        }
    }
    for (k, br) in case.branches.iter().enumerate() {
        if !br.in_service {
            continue;
        }
        let s_from = solution.p_from[k].hypot(solution.q_from[k]);
        let s_to = solution.p_to[k].hypot(solution.q_to[k]);
        let loading = s_from.max(s_to) / br.mva_rating;
        if loading > limits.loading_limit {
            out.push(Violation {
                kind: ViolationKind::Overload {
                    branch: case.branch_ref(k),
                },
                value: loading,
            });
        }
    }
    out
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Label {
    Secure,
    Insecure,
}

impl Label {
    /// Classifier output index (Secure = 0).
    pub fn class_index(self) -> usize {
        match self {
            Label::Secure => 0,
            Label::Insecure => 1,
        }
    }

    pub fn from_class_index(i: usize) -> Label {
        if i == 0 {
            Label::Secure
        } else {
            Label::Insecure
        }
    }

    /// Encoding used in dataset files (`1` = Secure).
    pub fn file_code(self) -> u8 {
        match self {
            Label::Secure => 1,
            Label::Insecure => 0,
        }
    }

    pub fn from_file_code(code: &str) -> Option<Label> {
        match code {
            "1" => Some(Label::Secure),
            "0" => Some(Label::Insecure),
            _ => None,
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Label::Secure => "Secure",
            Label::Insecure => "Insecure",
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ContingencyOutcome {
    pub contingency: BranchRef,
    pub islanded: bool,
    pub converged: bool,
    pub violations: Vec<Violation>,
    /// PI_V against the pre-contingency state, when the outage solved.
    pub pi_v: Option<f64>,
}

impl ContingencyOutcome {
    pub fn is_secure(&self) -> bool {
        !self.islanded && self.converged && self.violations.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScreenResult {
    pub label: Label,
    /// Index into `outcomes` of the first failing contingency.
    pub first_failure: Option<usize>,
    pub outcomes: Vec<ContingencyOutcome>,
}

/// Solves the operating condition, then each contingency in turn, and
/// labels the condition Secure only if every contingency converges without
/// limit violations. Islanding outages count as insecure without a solve.
pub fn run_contingency_screen(
    case: &NetworkCase,
    contingencies: &[BranchRef],
    limits: &OperatingLimits,
    opts: &SolveOptions,
) -> Result<ScreenResult> {
    let pre = solve_powerflow(case, opts);
    if !pre.converged {
        return Err(Error::Infeasible(
            pre.diagnostic.unwrap_or_else(|| "no convergence".into()),
        ));
    }
    screen_from_solution(case, &pre, contingencies, limits, opts)
}

/// As [`run_contingency_screen`] with an already solved operating condition.
pub fn screen_from_solution(
    case: &NetworkCase,
    pre: &PowerFlowSolution,
    contingencies: &[BranchRef],
    limits: &OperatingLimits,
    opts: &SolveOptions,
) -> Result<ScreenResult> {
    if contingencies.is_empty() {
        return Err(Error::Config("no contingencies configured".into()));
    }
    let piv_cfg = PivConfig::default();
    let mut outcomes = Vec::with_capacity(contingencies.len());
    for &c in contingencies {
        let idx = case.find_branch(&c)?;
        // Already switched out by a topology change: the contingency is a no-op.
        let outcome = if !case.branches[idx].in_service {
            ContingencyOutcome {
                contingency: c,
                islanded: false,
                converged: true,
                violations: check_limits(pre, case, limits),
                pi_v: Some(0.0),
            }
        } else {
            match case.apply_outage(idx) {
                Err(Error::Islanding(_)) => ContingencyOutcome {
                    contingency: c,
                    islanded: true,
                    converged: false,
                    violations: Vec::new(),
                    pi_v: None,
                },
                Err(e) => return Err(e),
                Ok(post_case) => {
                    let post = solve_powerflow_from(&post_case, opts, Some(pre));
                    if post.converged {
                        ContingencyOutcome {
                            contingency: c,
                            islanded: false,
                            converged: true,
                            violations: check_limits(&post, &post_case, limits),
                            pi_v: compute_piv(pre, &post, &piv_cfg).ok(),
                        }
                    } else {
                        ContingencyOutcome {
                            contingency: c,
                            islanded: false,
                            converged: false,
                            violations: Vec::new(),
                            pi_v: None,
                        }
                    }
                }
            }
        };
        outcomes.push(outcome);
    }
    let first_failure = outcomes.iter().position(|o| !o.is_secure());
    Ok(ScreenResult {
        label: if first_failure.is_none() {
            Label::Secure
        } else {
            Label::Insecure
        },
        first_failure,
        outcomes,
    })
}

/// Screening report: `contingency,converged,violations,pi_v`.
pub fn write_screen_report<W: Write>(result: &ScreenResult, mut out: W) -> std::io::Result<()> {
    writeln!(out, "contingency,converged,violations,pi_v")?;
    for o in &result.outcomes {
        let viol = if o.islanded {
            "islanded".to_string()
        } else {
            o.violations
                .iter()
                .map(|v| v.to_string())
                .collect::<Vec<_>>()
                .join(";")
        };
        let piv = o.pi_v.map(|p| format!("{p:.6}")).unwrap_or_default();
        writeln!(out, "{},{},{},{}", o.contingency, o.converged, viol, piv)?;
    }
    writeln!(out, "# label,{}", result.label)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::cases;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12
    }

    #[test]
    fn piv_closed_forms() {
        let cfg = PivConfig::default();
        assert_eq!(piv_from_magnitudes(&[1.0, 0.98], &[1.0, 0.98], &cfg).unwrap(), 0.0);
        assert!(close(piv_from_magnitudes(&[1.0], &[0.95], &cfg).unwrap(), 0.5));
        assert!(close(
            piv_from_magnitudes(&[1.0, 1.0], &[0.95, 0.90], &cfg).unwrap(),
            2.5
        ));
    }

    #[test]
    fn piv_rejects_bad_input() {
        let cfg = PivConfig::default();
        assert!(piv_from_magnitudes(&[1.0], &[1.0, 1.0], &cfg).is_err());
        let bad = PivConfig {
            exponent: 0,
            ..Default::default()
        };
        assert!(piv_from_magnitudes(&[1.0], &[1.0], &bad).is_err());
        let bad = PivConfig {
            dv_limit: PerBus::Uniform(0.0),
            ..Default::default()
        };
        assert!(piv_from_magnitudes(&[1.0], &[1.0], &bad).is_err());
        let bad = PivConfig {
            weights: PerBus::Each(vec![1.0, 1.0]),
            ..Default::default()
        };
        assert!(piv_from_magnitudes(&[1.0], &[1.0], &bad).is_err());
    }

    #[test]
    fn decision_table() {
        assert_eq!(categorize(0.0, 0.0), Category::Negligible);
        assert_eq!(categorize(0.1, 1e9), Category::Negligible);
        assert_eq!(categorize(0.5, 150.0), Category::Tc);
        assert_eq!(categorize(0.5, 450.0), Category::Csc);
        assert_eq!(categorize(0.5, 200.0), Category::Csc);
        assert_eq!(categorize(0.5, 199.999), Category::Tc);
        assert_eq!(categorize(f64::from_bits(0.1f64.to_bits() + 1), 0.0), Category::Tc);
    }

    #[test]
    fn limit_checks() {
        let case = cases::nine_bus();
        let mut sol = solve_powerflow(&case, &SolveOptions::default());
        assert!(check_limits(&sol, &case, &OperatingLimits::default()).is_empty());
        sol.v_mag[6] = 0.85;
        let v = check_limits(&sol, &case, &OperatingLimits::default());
        assert_eq!(
            v,
            vec![Violation {
                kind: ViolationKind::LowVoltage { bus: 7 },
                value: 0.85
            }]
        );

        let mut tight = case.clone();
        let k = 0;
        let s = sol.p_from[k].hypot(sol.q_from[k]).max(sol.p_to[k].hypot(sol.q_to[k]));
        tight.branches[k].mva_rating = s / 1.10;
        sol.v_mag[6] = 1.0;
        let v = check_limits(&sol, &tight, &OperatingLimits::default());
        assert_eq!(v.len(), 1);
        assert!(matches!(v[0].kind, ViolationKind::Overload { .. }));
        assert!((v[0].value - 1.10).abs() < 1e-12);
    }

    #[test]
    fn two_bus_outage_is_insecure() {
        let case = cases::two_bus();
        let r = run_contingency_screen(
            &case,
            &[BranchRef::new(1, 2)],
            &OperatingLimits::default(),
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(r.label, Label::Insecure);
        assert_eq!(r.first_failure, Some(0));
        assert!(r.outcomes[0].islanded);
    }

    #[test]
    fn nine_bus_mild_outage_is_secure() {
        let case = cases::nine_bus();
        let r = run_contingency_screen(
            &case,
            &[BranchRef::new(6, 7)],
            &OperatingLimits::default(),
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(r.label, Label::Secure, "{:?}", r.outcomes);
        assert!(r.outcomes[0].pi_v.unwrap() > 0.0);
        let r = run_contingency_screen(
            &case,
            &[BranchRef::new(6, 7), BranchRef::new(9, 4)],
            &OperatingLimits::default(),
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(r.label, Label::Insecure);
        assert_eq!(r.first_failure, Some(1));
    }

    #[test]
    fn empty_contingency_list_rejected() {
        let err = run_contingency_screen(
            &cases::nine_bus(),
            &[],
            &OperatingLimits::default(),
            &SolveOptions::default(),
        )
        .unwrap_err();
        assert_eq!(err.to_string(), "no contingencies configured");
    }

    #[test]
    fn base_configuration_is_negligible() {
        let case = cases::nine_bus();
        let rows = assess_configurations(
            &case,
            &[Configuration::Base, "5-6".parse().unwrap(), "1-4".parse().unwrap()],
            &PivConfig::default(),
            &SolveOptions::default(),
        )
        .unwrap();
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[0].configuration.to_string(), "1-4");
        assert_eq!(rows[0].category, Category::Csc);
        let base = rows.iter().find(|r| r.configuration == Configuration::Base).unwrap();
        assert_eq!(base.pi_v, 0.0);
        assert_eq!(base.category, Category::Negligible);
    }

    #[test]
    fn label_encodings() {
        assert_eq!(Label::Secure.file_code(), 1);
        assert_eq!(Label::from_file_code("0"), Some(Label::Insecure));
        assert_eq!(Label::from_class_index(Label::Insecure.class_index()), Label::Insecure);
    }
}
