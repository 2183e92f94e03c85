use num_complex::Complex64;
use proptest::prelude::*;

use voltsec::grid::{cases, NetworkCase};
use voltsec::powerflow::{solve_powerflow, trace_pv_curve, PowerFlowSolution, PvOptions, SolveOptions};

fn two_bus(p_mw: f64, x: f64) -> NetworkCase {
    let mut c = cases::two_bus();
    c.loads[0].p_mw = p_mw;
    c.branches[0].x = x;
    c
}

/// Receiving-end voltage of a lossless line with unit sending voltage:
/// the high root of u^2 - u + (PX)^2 = 0 with u = V^2, and sin(d) = -PX/V.
fn two_bus_closed_form(p: f64, x: f64) -> (f64, f64) {
    let px = p * x;
    let u = (1.0 + (1.0 - 4.0 * px * px).sqrt()) / 2.0;
    let v = u.sqrt();
    (v, (-px / v).asin())
}

/// Bus injections recomputed from scratch: S_i = V_i conj(sum_j Y_ij V_j),
/// with the admittance matrix assembled here from the branch data.
fn injections(case: &NetworkCase, sol: &PowerFlowSolution) -> Vec<Complex64> {
    let n = case.buses.len();
    let pos = |id: u32| case.buses.iter().position(|b| b.id == id).unwrap();
    let mut y = vec![vec![Complex64::new(0.0, 0.0); n]; n];
    for br in case.branches.iter().filter(|b| b.in_service) {
        let (f, t) = (pos(br.from_bus), pos(br.to_bus));
        let ys = Complex64::new(1.0, 0.0) / Complex64::new(br.r, br.x);
        let half = Complex64::new(0.0, br.b_shunt / 2.0);
        let a = br.tap;
        y[f][f] += (ys + half) / (a * a);
        y[t][t] += ys + half;
        y[f][t] -= ys / a;
        y[t][f] -= ys / a;
    }
    let v: Vec<Complex64> = sol
        .v_mag
        .iter()
        .zip(&sol.v_ang)
        .map(|(m, a)| Complex64::from_polar(*m, *a))
        .collect();
    (0..n)
        .map(|i| {
            let current: Complex64 = (0..n).map(|j| y[i][j] * v[j]).sum();
            v[i] * current.conj()
        })
        .collect()
}

/// Largest mismatch over the equations the solver enforces: P at every
/// non-slack bus, Q at PQ buses.
fn oracle_mismatch(case: &NetworkCase, sol: &PowerFlowSolution) -> f64 {
    use voltsec::grid::BusKind;
    let s = injections(case, sol);
    let base = case.base_mva;
    let mut worst: f64 = 0.0;
    for (i, bus) in case.buses.iter().enumerate() {
        let load_p: f64 = case.loads.iter().filter(|l| l.bus == bus.id).map(|l| l.p_mw).sum();
        let load_q: f64 = case.loads.iter().filter(|l| l.bus == bus.id).map(|l| l.q_mvar).sum();
        let gen_p: f64 = case
            .generators
            .iter()
            .filter(|g| g.in_service && g.bus == bus.id)
            .map(|g| g.p_mw)
            .sum();
        match sol.kinds[i] {
            BusKind::Slack => {}
            BusKind::Pv => worst = worst.max((s[i].re - (gen_p - load_p) / base).abs()),
            BusKind::Pq => {
                worst = worst.max((s[i].re - (gen_p - load_p) / base).abs());
                // a switched PV bus holds its generator at the violated limit
                let q_sched = (sol.q_gen[i] - load_q) / base;
                worst = worst.max((s[i].im - q_sched).abs());
            }
        }
    }
    worst
}

#[test]
fn two_bus_matches_closed_form() {
    let sol = solve_powerflow(&two_bus(50.0, 0.1), &SolveOptions::default());
    assert!(sol.converged);
    let (v, d) = two_bus_closed_form(0.5, 0.1);
    assert!((sol.v_mag[1] - v).abs() < 1e-6, "{} vs {v}", sol.v_mag[1]);
    assert!((sol.v_ang[1].to_degrees() - d.to_degrees()).abs() < 1e-4);
    assert!((v - 0.99875).abs() < 5e-6);
    assert!((d.to_degrees() + 2.869).abs() < 1e-3);
}

#[test]
fn beyond_loadability_does_not_converge() {
    let sol = solve_powerflow(&two_bus(600.0, 0.1), &SolveOptions::default());
    assert!(!sol.converged);
    assert!(sol.diagnostic.is_some());
}

#[test]
fn mismatch_recomputation_on_bundled_cases() {
    for case in [cases::two_bus(), cases::nine_bus(), cases::nets_nyps_68()] {
        let sol = solve_powerflow(&case, &SolveOptions::default());
        assert!(sol.converged);
        let m = oracle_mismatch(&case, &sol);
        assert!((m - sol.max_mismatch).abs() <= 1e-12, "{m} vs {}", sol.max_mismatch);
        assert!(m <= 1e-8);
    }
}

#[test]
fn nose_points_match_analytic_loadability() {
    let opts = PvOptions::default();
    let c = trace_pv_curve(&two_bus(100.0, 0.1), 2, 0.05, &opts).unwrap();
    assert!((c.nose_scale - 5.0).abs() <= 0.05 + 1e-9, "{}", c.nose_scale);
    let c = trace_pv_curve(&two_bus(100.0, 0.2), 2, 0.05, &opts).unwrap();
    assert!((c.nose_scale - 2.5).abs() <= 0.05 + 1e-9, "{}", c.nose_scale);
    // radial case: voltage falls monotonically with load
    assert!(c.points.windows(2).all(|w| w[1].v_mag <= w[0].v_mag));
}

#[test]
fn infeasible_base_case_is_reported() {
    let err = trace_pv_curve(&two_bus(600.0, 0.1), 2, 0.05, &PvOptions::default()).unwrap_err();
    assert!(err.to_string().contains("base case infeasible"), "{err}");
}

#[test]
fn nine_bus_outages_reduce_loadability() {
    let case = cases::nine_bus();
    let opts = PvOptions::default();
    let base = trace_pv_curve(&case, 5, 0.01, &opts).unwrap().nose_scale;
    let mut reduced = false;
    for i in 0..case.branches.len() {
        let Ok(out) = case.apply_outage(i) else { continue };
        let nose = match trace_pv_curve(&out, 5, 0.01, &opts) {
            Ok(c) => c.nose_scale,
            Err(_) => 1.0,
        };
        assert!(nose <= base, "{}: {nose} > {base}", case.branch_ref(i));
        reduced |= nose < 0.95 * base;
    }
    assert!(reduced);
}

fn balance_holds(case: &NetworkCase) {
    let opts = SolveOptions::default();
    let sol = solve_powerflow(case, &opts);
    if !sol.converged {
        return;
    }
    let gen: f64 = sol.p_gen.iter().sum();
    let balance = gen - case.total_load_mw() - sol.losses_mw();
    assert!(balance.abs() / case.base_mva <= 10.0 * opts.tolerance * case.buses.len() as f64);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn power_balance_on_scaled_nine_bus(scales in proptest::collection::vec(0.5f64..1.3, 3)) {
        let mut case = cases::nine_bus();
        for (l, s) in case.loads.iter_mut().zip(&scales) {
            l.p_mw *= s;
            l.q_mvar *= s;
        }
        balance_holds(&case);
        let sol = solve_powerflow(&case, &SolveOptions::default());
        if sol.converged {
            prop_assert!((oracle_mismatch(&case, &sol) - sol.max_mismatch).abs() <= 1e-12);
        }
    }

    #[test]
    fn two_bus_tracks_closed_form(p in 0.0f64..4.5, x in 0.05f64..0.11) {
        prop_assume!(p * x < 0.45);
        let sol = solve_powerflow(&two_bus(p * 100.0, x), &SolveOptions::default());
        prop_assert!(sol.converged);
        let (v, d) = two_bus_closed_form(p, x);
        prop_assert!((sol.v_mag[1] - v).abs() < 1e-6);
        prop_assert!((sol.v_ang[1] - d).abs() < 1e-6);
    }
}
