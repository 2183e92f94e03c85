//! Newton-Raphson AC power flow in polar coordinates and a stepwise
//! load-scaling PV-curve tracer.

use std::collections::HashMap;
use std::io::Write;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::dataset::reschedule_generation_clamped;
use crate::error::{Error, Result};
use crate::grid::{BusKind, NetworkCase};

/// Mismatch below which PV buses are checked against their reactive limits.
const Q_CHECK_MISMATCH: f64 = 1e-3;
/// Mismatch above which an iteration is treated as diverged.
const DIVERGED_MISMATCH: f64 = 1e6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolveOptions {
    /// Largest acceptable per-unit power mismatch.
    pub tolerance: f64,
    pub max_iter: usize,
    /// Switch PV buses to PQ at a binding reactive limit.
    pub enforce_q_limits: bool,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tolerance: 1e-8,
            max_iter: 20,
            enforce_q_limits: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PowerFlowSolution {
    /// Bus ids in case order; all per-bus vectors follow this order.
    pub bus_ids: Vec<u32>,
    pub v_mag: Vec<f64>,
    /// Radians; the slack angle is 0.
    pub v_ang: Vec<f64>,
    /// Bus kinds after reactive-limit switching.
    pub kinds: Vec<BusKind>,
    /// Net generation per bus in MW / MVar.
    pub p_gen: Vec<f64>,
    pub q_gen: Vec<f64>,
    /// Branch flows in MW / MVar, zero for out-of-service branches.
    pub p_from: Vec<f64>,
    pub q_from: Vec<f64>,
    pub p_to: Vec<f64>,
    pub q_to: Vec<f64>,
    /// Branch current magnitudes (pu) at each end.
    pub i_from: Vec<f64>,
    pub i_to: Vec<f64>,
    pub in_service: Vec<bool>,
    pub converged: bool,
    pub iterations: usize,
    /// Largest mismatch (pu) evaluated at the returned voltages.
    pub max_mismatch: f64,
    /// `(iteration, max_mismatch)` per Newton iteration.
    pub trace: Vec<(usize, f64)>,
    pub diagnostic: Option<String>,
}

impl PowerFlowSolution {
    pub fn voltages(&self) -> Vec<Complex64> {
        self.v_mag
            .iter()
            .zip(&self.v_ang)
            .map(|(&m, &a)| Complex64::from_polar(m, a))
            .collect()
    }

    /// Active power losses in MW.
    pub fn losses_mw(&self) -> f64 {
        self.p_from.iter().zip(&self.p_to).map(|(a, b)| a + b).sum()
    }

    /// Writes the per-iteration mismatch trace as delimited text.
    pub fn write_trace<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "iteration,max_mismatch")?;
        for (it, mis) in &self.trace {
            writeln!(out, "{it},{mis:e}")?;
        }
        Ok(())
    }
}

/// Dense bus admittance matrix in case bus order.
pub fn build_ybus(case: &NetworkCase) -> DMatrix<Complex64> {
    let n = case.buses.len();
    let index = case.bus_index();
    let mut y = DMatrix::from_element(n, n, Complex64::new(0.0, 0.0));
    for br in case.branches.iter().filter(|b| b.in_service) {
        let (f, t) = (index[&br.from_bus], index[&br.to_bus]);
        let p = branch_two_port(br.r, br.x, br.b_shunt, br.tap);
        y[(f, f)] += p.ff;
        y[(t, t)] += p.tt;
        y[(f, t)] += p.ft;
        y[(t, f)] += p.tf;
    }
    y
}

struct TwoPort {
    ff: Complex64,
    ft: Complex64,
    tf: Complex64,
    tt: Complex64,
}

/// Pi model with the off-nominal ratio on the from side.
fn branch_two_port(r: f64, x: f64, b: f64, tap: f64) -> TwoPort {
    let ys = Complex64::new(1.0, 0.0) / Complex64::new(r, x);
    let half_b = Complex64::new(0.0, b / 2.0);
    let tt = ys + half_b;
    TwoPort {
        ff: tt / (tap * tap),
        ft: -ys / tap,
        tf: -ys / tap,
        tt,
    }
}

/// Per-bus quantities derived from a case once per solve.
struct BusSchedule {
    kinds: Vec<BusKind>,
    v_set: Vec<f64>,
    /// Scheduled net injection (pu). For PV/slack the imaginary part is unused.
    s_sched: Vec<Complex64>,
    load: Vec<Complex64>,
    q_min: Vec<f64>,
    q_max: Vec<f64>,
    slack: usize,
}

impl BusSchedule {
    fn new(case: &NetworkCase, index: &HashMap<u32, usize>) -> Self {
        let n = case.buses.len();
        let base = case.base_mva;
        let mut gen = vec![Complex64::new(0.0, 0.0); n];
        let mut q_min = vec![0.0; n];
        let mut q_max = vec![0.0; n];
        for g in case.generators.iter().filter(|g| g.in_service) {
            let i = index[&g.bus];
            gen[i].re += g.p_mw / base;
            q_min[i] += g.q_min / base;
            q_max[i] += g.q_max / base;
        }
        let mut load = vec![Complex64::new(0.0, 0.0); n];
        for l in &case.loads {
            let i = index[&l.bus];
            load[i] += Complex64::new(l.p_pu(base), l.q_pu(base));
        }
        let kinds: Vec<BusKind> = case.buses.iter().map(|b| b.kind).collect();
        BusSchedule {
            slack: kinds.iter().position(|k| *k == BusKind::Slack).unwrap_or(0),
            v_set: case.buses.iter().map(|b| b.v_setpoint).collect(),
            s_sched: gen.iter().zip(&load).map(|(g, l)| g - l).collect(),
            kinds,
            load,
            q_min,
            q_max,
        }
    }
}

fn injections(y: &DMatrix<Complex64>, v: &[Complex64]) -> Vec<Complex64> {
    let n = v.len();
    (0..n)
        .map(|i| {
            let mut cur = Complex64::new(0.0, 0.0);
            for k in 0..n {
                cur += y[(i, k)] * v[k];
            }
            v[i] * cur.conj()
        })
        .collect()
}

/// Unknown ordering: angles of all non-slack buses, then magnitudes of PQ buses.
struct Unknowns {
    ang: Vec<usize>,
    mag: Vec<usize>,
}

impl Unknowns {
    fn new(kinds: &[BusKind]) -> Self {
        Unknowns {
            ang: (0..kinds.len()).filter(|&i| kinds[i] != BusKind::Slack).collect(),
            mag: (0..kinds.len()).filter(|&i| kinds[i] == BusKind::Pq).collect(),
        }
    }

    fn len(&self) -> usize {
        self.ang.len() + self.mag.len()
    }
}

/// Mismatch vector `S_calc - S_sched` stacked as [dP(non-slack); dQ(PQ)].
fn mismatch(s_calc: &[Complex64], s_sched: &[Complex64], u: &Unknowns) -> DVector<f64> {
    let mut f = DVector::zeros(u.len());
    for (r, &i) in u.ang.iter().enumerate() {
        f[r] = s_calc[i].re - s_sched[i].re;
    }
    for (r, &i) in u.mag.iter().enumerate() {
        f[u.ang.len() + r] = s_calc[i].im - s_sched[i].im;
    }
    f
}

/// Jacobian of the mismatch with respect to [angles; magnitudes].
fn jacobian(y: &DMatrix<Complex64>, v: &[Complex64], u: &Unknowns) -> DMatrix<f64> {
    let n = v.len();
    let i_bus: Vec<Complex64> = (0..n)
        .map(|i| (0..n).map(|k| y[(i, k)] * v[k]).sum())
        .collect();
    let v_norm: Vec<Complex64> = v.iter().map(|vi| vi / vi.norm()).collect();
    let j = Complex64::new(0.0, 1.0);

    // dS_i/dtheta_k = j V_i conj(I_i delta_ik - Y_ik V_k)
    // dS_i/d|V_k|   = V_i conj(Y_ik Vn_k) + conj(I_i) Vn_i delta_ik
    let ds_da = |i: usize, k: usize| {
        let mut t = -y[(i, k)] * v[k];
        if i == k {
            t += i_bus[i];
        }
        j * v[i] * t.conj()
    };
    let ds_dm = |i: usize, k: usize| {
        let mut t = v[i] * (y[(i, k)] * v_norm[k]).conj();
        if i == k {
            t += i_bus[i].conj() * v_norm[i];
        }
        t
    };

    let na = u.ang.len();
    let dim = u.len();
    let mut jac = DMatrix::zeros(dim, dim);
    for (r, &i) in u.ang.iter().enumerate() {
        for (c, &k) in u.ang.iter().enumerate() {
            jac[(r, c)] = ds_da(i, k).re;
        }
        for (c, &k) in u.mag.iter().enumerate() {
            jac[(r, na + c)] = ds_dm(i, k).re;
        }
    }
    for (r, &i) in u.mag.iter().enumerate() {
        for (c, &k) in u.ang.iter().enumerate() {
            jac[(na + r, c)] = ds_da(i, k).im;
        }
        for (c, &k) in u.mag.iter().enumerate() {
            jac[(na + r, na + c)] = ds_dm(i, k).im;
        }
    }
    jac
}

fn max_abs(f: &DVector<f64>) -> f64 {
    f.iter().fold(0.0_f64, |m, x| {
        if x.is_nan() {
            f64::NAN
        } else {
            m.max(x.abs())
        }
    })
}

/// Solves the power flow from a flat start.
pub fn solve_powerflow(case: &NetworkCase, opts: &SolveOptions) -> PowerFlowSolution {
    solve_powerflow_from(case, opts, None)
}

/// Solves the power flow, optionally warm-starting PQ magnitudes and all
/// angles from a previous solution of a case with the same buses.
pub fn solve_powerflow_from(
    case: &NetworkCase,
    opts: &SolveOptions,
    start: Option<&PowerFlowSolution>,
) -> PowerFlowSolution {
    let index = case.bus_index();
    let y = build_ybus(case);
    let mut sched = BusSchedule::new(case, &index);
    let n = case.buses.len();

    let mut vm: Vec<f64> = (0..n)
        .map(|i| match sched.kinds[i] {
            BusKind::Pq => 1.0,
            _ => sched.v_set[i],
        })
        .collect();
    let mut va = vec![0.0; n];
    if let Some(prev) = start.filter(|p| p.v_mag.len() == n && p.converged) {
        for i in 0..n {
            if sched.kinds[i] == BusKind::Pq {
                vm[i] = prev.v_mag[i];
            }
            if i != sched.slack {
                va[i] = prev.v_ang[i];
            }
        }
    }

    let mut v: Vec<Complex64> = (0..n).map(|i| Complex64::from_polar(vm[i], va[i])).collect();
    let mut unknowns = Unknowns::new(&sched.kinds);
    let mut trace = Vec::new();
    let mut converged = false;
    let mut diagnostic = None;
    let mut iterations = 0;
    let mut max_mis;

    loop {
        let s_calc = injections(&y, &v);
        let f = mismatch(&s_calc, &sched.s_sched, &unknowns);
        max_mis = max_abs(&f);
        trace.push((iterations, max_mis));

        if !max_mis.is_finite() || max_mis > DIVERGED_MISMATCH {
            diagnostic = Some(format!("diverged at iteration {iterations}"));
            break;
        }
        if opts.enforce_q_limits && max_mis < Q_CHECK_MISMATCH {
            let switched = switch_q_limited(&mut sched, &s_calc);
            if switched > 0 {
                unknowns = Unknowns::new(&sched.kinds);
                let f = mismatch(&s_calc, &sched.s_sched, &unknowns);
                max_mis = max_abs(&f);
                trace.last_mut().expect("trace row").1 = max_mis;
            }
        }
        if max_mis <= opts.tolerance {
            converged = true;
            break;
        }
        if iterations >= opts.max_iter {
            diagnostic = Some(format!("no convergence in {} iterations", opts.max_iter));
            break;
        }
        iterations += 1;

        let f = mismatch(&s_calc, &sched.s_sched, &unknowns);
        let jac = jacobian(&y, &v, &unknowns);
        let Some(dx) = jac.lu().solve(&f) else {
            diagnostic = Some(format!("singular Jacobian at iteration {iterations}"));
            break;
        };
        let na = unknowns.ang.len();
        for (r, &i) in unknowns.ang.iter().enumerate() {
            va[i] -= dx[r];
        }
        for (r, &i) in unknowns.mag.iter().enumerate() {
            vm[i] -= dx[na + r];
        }
        for i in 0..n {
            v[i] = Complex64::from_polar(vm[i], va[i]);
        }
    }

    finish(case, &index, &y, &sched, &v, converged, iterations, max_mis, trace, diagnostic)
}

/// Moves PV buses whose reactive output is outside limits to PQ at the
/// binding limit. Returns the number of switched buses.
fn switch_q_limited(sched: &mut BusSchedule, s_calc: &[Complex64]) -> usize {
    let mut switched = 0;
    for i in 0..sched.kinds.len() {
        if sched.kinds[i] != BusKind::Pv {
            continue;
        }
        let q_gen = s_calc[i].im + sched.load[i].im;
        let bound = if q_gen > sched.q_max[i] {
            sched.q_max[i]
        } else if q_gen < sched.q_min[i] {
            sched.q_min[i]
        } else {
            continue;
        };
        sched.kinds[i] = BusKind::Pq;
        sched.s_sched[i].im = bound - sched.load[i].im;
        switched += 1;
    }
    switched
}

#[allow(clippy::too_many_arguments)]
fn finish(
    case: &NetworkCase,
    index: &HashMap<u32, usize>,
    y: &DMatrix<Complex64>,
    sched: &BusSchedule,
    v: &[Complex64],
    converged: bool,
    iterations: usize,
    max_mismatch: f64,
    trace: Vec<(usize, f64)>,
    diagnostic: Option<String>,
) -> PowerFlowSolution {
    let base = case.base_mva;
    let s_calc = injections(y, v);
    let n = v.len();
    let mut p_gen = vec![0.0; n];
    let mut q_gen = vec![0.0; n];
    for i in 0..n {
        let sched_gen = sched.s_sched[i] + sched.load[i];
        let calc_gen = s_calc[i] + sched.load[i];
        (p_gen[i], q_gen[i]) = match sched.kinds[i] {
            BusKind::Slack => (calc_gen.re, calc_gen.im),
            BusKind::Pv => (sched_gen.re, calc_gen.im),
            BusKind::Pq => (sched_gen.re, sched_gen.im),
        };
        p_gen[i] *= base;
        q_gen[i] *= base;
    }

    let m = case.branches.len();
    let mut sol_flows = [
        vec![0.0; m],
        vec![0.0; m],
        vec![0.0; m],
        vec![0.0; m],
        vec![0.0; m],
        vec![0.0; m],
    ];
    for (k, br) in case.branches.iter().enumerate() {
        if !br.in_service {
            continue;
        }
        let (f, t) = (index[&br.from_bus], index[&br.to_bus]);
        let p = branch_two_port(br.r, br.x, br.b_shunt, br.tap);
        let i_f = p.ff * v[f] + p.ft * v[t];
        let i_t = p.tf * v[f] + p.tt * v[t];
        let s_f = v[f] * i_f.conj() * base;
        let s_t = v[t] * i_t.conj() * base;
        sol_flows[0][k] = s_f.re;
        sol_flows[1][k] = s_f.im;
        sol_flows[2][k] = s_t.re;
        sol_flows[3][k] = s_t.im;
        sol_flows[4][k] = i_f.norm();
        sol_flows[5][k] = i_t.norm();
    }
    let [p_from, q_from, p_to, q_to, i_from, i_to] = sol_flows;

    let slack_ang = v[sched.slack].arg();
    PowerFlowSolution {
        bus_ids: case.buses.iter().map(|b| b.id).collect(),
        v_mag: v.iter().map(|x| x.norm()).collect(),
        v_ang: v.iter().map(|x| x.arg() - slack_ang).collect(),
        kinds: sched.kinds.clone(),
        p_gen,
        q_gen,
        p_from,
        q_from,
        p_to,
        q_to,
        i_from,
        i_to,
        in_service: case.branches.iter().map(|b| b.in_service).collect(),
        converged,
        iterations,
        max_mismatch,
        trace,
        diagnostic,
    }
}

/// How generation follows the load along a PV curve.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum GenerationPolicy {
    /// Non-slack units share the increase in proportion to capacity; any
    /// amount beyond their headroom falls to the slack.
    #[default]
    Proportional,
    /// The slack bus picks up the entire increase.
    SlackOnly,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PvOptions {
    pub solve: SolveOptions,
    pub policy: GenerationPolicy,
    /// Tracing stops after this multiplier even if the solver still converges.
    pub max_scale: f64,
}

impl Default for PvOptions {
    fn default() -> Self {
        PvOptions {
            solve: SolveOptions::default(),
            policy: GenerationPolicy::Proportional,
            max_scale: 50.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PvPoint {
    pub load_scale: f64,
    pub v_mag: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct PvCurve {
    pub monitored_bus: u32,
    pub points: Vec<PvPoint>,
    /// Last multiplier with a converged solution.
    pub nose_scale: f64,
}

impl PvCurve {
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        writeln!(out, "load_scale,v_mag")?;
        for p in &self.points {
            writeln!(out, "{},{}", p.load_scale, p.v_mag)?;
        }
        Ok(())
    }
}

/// Scales every load in `base` by `scale` and redistributes the change in
/// total demand according to `policy`.
pub fn scale_case(base: &NetworkCase, scale: f64, policy: GenerationPolicy) -> NetworkCase {
    let mut case = base.clone();
    for l in &mut case.loads {
        l.p_mw *= scale;
        l.q_mvar *= scale;
    }
    let delta = case.total_load_mw() - base.total_load_mw();
    match policy {
        GenerationPolicy::Proportional => reschedule_generation_clamped(&case, delta).0,
        GenerationPolicy::SlackOnly => case,
    }
}

/// Traces bus voltage against uniform load scaling 1.0, 1.0 + step, ...
/// until the first non-convergent multiplier.
pub fn trace_pv_curve(
    case: &NetworkCase,
    monitored_bus: u32,
    step: f64,
    opts: &PvOptions,
) -> Result<PvCurve> {
    if !(step > 0.0) {
        return Err(Error::invalid("step must be positive"));
    }
    let index = case.bus_index();
    let Some(&mon) = index.get(&monitored_bus) else {
        return Err(Error::invalid(format!("unknown bus {monitored_bus}")));
    };
    let base = solve_powerflow(case, &opts.solve);
    if !base.converged {
        return Err(Error::Infeasible(
            base.diagnostic.unwrap_or_else(|| "no convergence".into()),
        ));
    }
    let mut points = vec![PvPoint {
        load_scale: 1.0,
        v_mag: base.v_mag[mon],
    }];
    let mut prev = base;
    for k in 1.. {
        let scale = 1.0 + k as f64 * step;
        if scale > opts.max_scale {
            break;
        }
        let scaled = scale_case(case, scale, opts.policy);
        let sol = solve_powerflow_from(&scaled, &opts.solve, Some(&prev));
        if !sol.converged {
            break;
        }
        points.push(PvPoint {
            load_scale: scale,
            v_mag: sol.v_mag[mon],
        });
        prev = sol;
    }
    Ok(PvCurve {
        monitored_bus,
        nose_scale: points.last().map(|p| p.load_scale).unwrap_or(1.0),
        points,
    })
}
