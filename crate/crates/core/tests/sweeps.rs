use cavsqueeze::bloch_oracle::{free_space_variance, BlochParams};
use cavsqueeze::steady_state::SteadyStateSolver;
use cavsqueeze::sweep_opt::{
    dephasing_threshold, linspace_step, optimize_axis, run_sweep, scout_n_max, Axis, DetuningMode, PointEvaluator,
    SteadyStateEvaluator, SweepSpec, Truncation,
};
use cavsqueeze::SystemParams;

fn fixed_detuning_base() -> SystemParams {
    SystemParams { delta_a: -19.0, ..SystemParams::reference_point() }
}

#[test]
fn single_point_sweep_matches_direct_solve() {
    let eval = SteadyStateEvaluator::default();
    let base = SystemParams::reference_point();
    let r = run_sweep(&eval, &SweepSpec::new(base, Axis::DeltaA, vec![-19.29])).unwrap();
    let direct = eval.evaluate(&base).unwrap();
    assert_eq!(r.rows.len(), 1);
    assert_eq!(r.rows[0].outcome.as_ref().unwrap(), &direct);
}

#[test]
fn sweeps_are_bit_reproducible() {
    let eval = SteadyStateEvaluator::default();
    let mut spec = SweepSpec::range(SystemParams::reference_point(), Axis::DeltaA, -21.0, -17.0, 0.25);
    spec.include_free_space = true;
    let a = run_sweep(&eval, &spec).unwrap();
    let b = run_sweep(&eval, &spec).unwrap();
    for (x, y) in a.rows.iter().zip(&b.rows) {
        let (p, q) = (x.outcome.as_ref().unwrap(), y.outcome.as_ref().unwrap());
        let bits = |s: [f64; 9]| s.map(f64::to_bits);
        assert_eq!(bits(p.observables.scalars()), bits(q.observables.scalars()));
        assert_eq!(p.residual.to_bits(), q.residual.to_bits());
        assert_eq!(x.free_space_variance.map(f64::to_bits), y.free_space_variance.map(f64::to_bits));
    }
}

#[test]
fn zero_dephasing_reproduces_detuning_curve() {
    let eval = SteadyStateEvaluator::default();
    let values = linspace_step(-20.0, -18.0, 0.5);
    let plain =
        run_sweep(&eval, &SweepSpec::new(SystemParams::reference_point(), Axis::DeltaA, values.clone())).unwrap();
    let with_gd = SystemParams { gamma_d: 0.0, ..fixed_detuning_base() };
    let again = run_sweep(&eval, &SweepSpec::new(with_gd, Axis::DeltaA, values)).unwrap();
    assert_eq!(plain.rows, again.rows);
}

#[test]
fn cavity_beats_free_space_near_resonance() {
    let eval = SteadyStateEvaluator::default();
    let mut spec = SweepSpec::range(SystemParams::reference_point(), Axis::DeltaA, -22.0, -17.0, 0.1);
    spec.include_free_space = true;
    let r = run_sweep(&eval, &spec).unwrap();
    assert_eq!(r.failures(), 0);
    for row in &r.rows {
        let p = row.outcome.as_ref().unwrap();
        let free = row.free_space_variance.unwrap();
        assert!(p.observables.variance < free, "δ_a = {}: {} vs {}", row.axis_value, p.observables.variance, free);
    }
}

#[test]
fn variance_grows_with_dephasing() {
    let eval = SteadyStateEvaluator::default();
    let gamma = SystemParams::REFERENCE_GAMMA;
    let values: Vec<f64> = (0..=40).map(|k| 0.25 * k as f64 * gamma).collect();
    let r = run_sweep(&eval, &SweepSpec::new(fixed_detuning_base(), Axis::GammaD, values)).unwrap();
    let v: Vec<f64> = r.successes().map(|(_, p)| p.observables.variance).collect();
    assert_eq!(v.len(), 41);
    for w in v.windows(2) {
        assert!(w[1] >= w[0], "{} then {}", w[0], w[1]);
    }
}

#[test]
fn pinned_truncation_matches_converged_sweep() {
    let solver = SteadyStateSolver::default();
    let spec = SweepSpec::range(SystemParams::reference_point(), Axis::DeltaA, -20.0, -18.5, 0.5);
    let n = scout_n_max(&solver, &spec).unwrap();
    let pinned = SweepSpec { base: spec.base.with_n_max(n), ..spec.clone() };
    let fixed = SteadyStateEvaluator { truncation: Truncation::Fixed, ..SteadyStateEvaluator::default() };
    let a = run_sweep(&SteadyStateEvaluator::default(), &spec).unwrap();
    let b = run_sweep(&fixed, &pinned).unwrap();
    for ((_, p), (_, q)) in a.successes().zip(b.successes()) {
        assert!(p.observables.max_change(&q.observables) < 1e-8);
    }
}

#[test]
fn optimum_in_detuning() {
    let eval = SteadyStateEvaluator::default();
    let r = optimize_axis(&eval, &SystemParams::reference_point(), Axis::DeltaA, (-25.0, -15.0), 21, 1e-4).unwrap();
    assert!(!r.at_boundary);
    assert!((r.point.observables.variance + 0.236).abs() < 3e-3, "{:?}", r.point.observables);
    assert!((r.x + 19.3).abs() < 0.3, "{}", r.x);
}

#[test]
fn free_space_optimum_over_drive() {
    let eval = SteadyStateEvaluator::default();
    let base = SystemParams { coupling: 0.0, kappa: 1.0, gamma: 1.0, n_max: 1, ..SystemParams::default() };
    let r = optimize_axis(&eval, &base, Axis::Rabi, (0.0, 2.0), 41, 1e-8).unwrap();
    assert!((r.point.observables.variance + 0.125).abs() < 1e-4);
    let oracle = free_space_variance(&BlochParams::from_system(&Axis::Rabi.set(&base, r.x))).unwrap();
    assert!((oracle - r.point.observables.variance).abs() < 1e-10);
}

#[test]
fn fixed_detuning_thresholds() {
    let eval = SteadyStateEvaluator::default();
    let gamma = SystemParams::REFERENCE_GAMMA;
    let bracket = (0.0, 12.0 * gamma);
    let eighth =
        dephasing_threshold(&eval, &fixed_detuning_base(), -0.125, bracket, DetuningMode::Fixed, 1e-3).unwrap();
    let zero = dephasing_threshold(&eval, &fixed_detuning_base(), 0.0, bracket, DetuningMode::Fixed, 1e-3).unwrap();
    assert!((eighth.ratio / 3.24 - 1.0).abs() < 0.05, "{}", eighth.ratio);
    assert!((zero.ratio / 7.47 - 1.0).abs() < 0.05, "{}", zero.ratio);
}

#[test]
fn free_space_threshold_at_weak_drive() {
    let eval = SteadyStateEvaluator::default();
    let base = SystemParams { rabi: 0.01, coupling: 0.0, kappa: 1.0, gamma: 1.0, n_max: 1, ..SystemParams::default() };
    let mode = DetuningMode::Reoptimize { bracket: (-3.0, 3.0), grid: 31, tol: 1e-6 };
    let t = dephasing_threshold(&eval, &base, 0.0, (0.5, 1.5), mode, 1e-4).unwrap();
    assert!((t.ratio - 1.0).abs() < 0.02, "{}", t.ratio);
}

#[test]
fn threshold_bracket_must_straddle() {
    let eval = SteadyStateEvaluator::default();
    let gamma = SystemParams::REFERENCE_GAMMA;
    let r = dephasing_threshold(&eval, &fixed_detuning_base(), 0.0, (0.0, gamma), DetuningMode::Fixed, 1e-3);
    assert!(r.is_err());
}
