//! Parameter sweeps, one-dimensional minimization of the fluorescence
//! variance and dephasing thresholds.
//!
//! Every routine takes a [`PointEvaluator`], which maps a parameter set to
//! its steady-state observables. [`SteadyStateEvaluator`] is the production
//! implementation; tests substitute analytic stand-ins.

use std::fmt;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bloch_oracle::{free_space_variance, BlochParams};
use crate::hilbert::SystemParams;
use crate::observables::{compute_observables, Observables};
use crate::search::grid_then_golden;
use crate::steady_state::{SolveError, SolverConfig, SteadyStateSolver};

/// Parameter varied by a sweep or search.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    DeltaA,
    GammaD,
    DeltaC,
    Rabi,
    Kappa,
}

impl Axis {
    pub const ALL: [Axis; 5] = [Axis::DeltaA, Axis::GammaD, Axis::DeltaC, Axis::Rabi, Axis::Kappa];

    pub fn name(self) -> &'static str {
        match self {
            Axis::DeltaA => "delta_a",
            Axis::GammaD => "gamma_d",
            Axis::DeltaC => "delta_c",
            Axis::Rabi => "rabi",
            Axis::Kappa => "kappa",
        }
    }

    pub fn get(self, p: &SystemParams) -> f64 {
        match self {
            Axis::DeltaA => p.delta_a,
            Axis::GammaD => p.gamma_d,
            Axis::DeltaC => p.delta_c,
            Axis::Rabi => p.rabi,
            Axis::Kappa => p.kappa,
        }
    }

    pub fn set(self, p: &SystemParams, value: f64) -> SystemParams {
        let mut q = *p;
        match self {
            Axis::DeltaA => q.delta_a = value,
            Axis::GammaD => q.gamma_d = value,
            Axis::DeltaC => q.delta_c = value,
            Axis::Rabi => q.rabi = value,
            Axis::Kappa => q.kappa = value,
        }
        q
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Axis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| format!("unknown axis `{s}` (expected one of delta_a, gamma_d, delta_c, rabi, kappa)"))
    }
}

/// Observables at one parameter point plus solver diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub observables: Observables,
    pub n_max_used: usize,
    pub residual: f64,
    /// Residual and truncation checks both passed.
    pub converged: bool,
}

/// Maps a parameter set to its steady-state observables.
pub trait PointEvaluator: Sync {
    fn evaluate(&self, params: &SystemParams) -> Result<PointResult, SolveError>;
}

/// How the photon-number truncation is chosen per point.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Truncation {
    /// Double from `n_max` until observables settle.
    #[default]
    Converge,
    /// Use `n_max` as given.
    Fixed,
}

/// Steady-state solver wrapped as a [`PointEvaluator`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SteadyStateEvaluator {
    pub solver: SteadyStateSolver,
    pub chi_sq: f64,
    pub truncation: Truncation,
}

impl Default for SteadyStateEvaluator {
    fn default() -> Self {
        Self { solver: SteadyStateSolver::default(), chi_sq: 1.0, truncation: Truncation::Converge }
    }
}

impl SteadyStateEvaluator {
    pub fn new(config: SolverConfig, chi_sq: f64, truncation: Truncation) -> Self {
        Self { solver: SteadyStateSolver::new(config), chi_sq, truncation }
    }
}

impl PointEvaluator for SteadyStateEvaluator {
    fn evaluate(&self, params: &SystemParams) -> Result<PointResult, SolveError> {
        let r = match self.truncation {
            Truncation::Converge => self.solver.converge(params)?,
            Truncation::Fixed => self.solver.solve(params)?,
        };
        Ok(PointResult {
            observables: compute_observables(&r.rho, self.chi_sq)?,
            n_max_used: r.n_max_used,
            residual: r.residual,
            converged: r.converged,
        })
    }
}

/// Truncation level that converges at the middle value of `spec`, for
/// pinning a sweep to [`Truncation::Fixed`].
pub fn scout_n_max(solver: &SteadyStateSolver, spec: &SweepSpec) -> Result<usize, SolveError> {
    let x = spec.values.get(spec.values.len() / 2).copied().unwrap_or(spec.axis.get(&spec.base));
    Ok(solver.converge(&spec.axis.set(&spec.base, x))?.n_max_used)
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SweepError {
    #[error("sweep has no values")]
    Empty,
    #[error("sweep values must be finite and strictly monotone (violated at index {0})")]
    NotMonotone(usize),
    #[error("all {count} sweep points failed; first error: {first}")]
    AllFailed { count: usize, first: SolveError },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub base: SystemParams,
    pub axis: Axis,
    pub values: Vec<f64>,
    /// Adds the free-space variance (same atomic parameters, no cavity) to
    /// every row.
    pub include_free_space: bool,
}

impl SweepSpec {
    pub fn new(base: SystemParams, axis: Axis, values: Vec<f64>) -> Self {
        Self { base, axis, values, include_free_space: false }
    }

    /// `lo, lo + step, …` up to `hi` inclusive (within a tenth of a step).
    pub fn range(base: SystemParams, axis: Axis, lo: f64, hi: f64, step: f64) -> Self {
        Self::new(base, axis, linspace_step(lo, hi, step))
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        let v = &self.values;
        if v.is_empty() {
            return Err(SweepError::Empty);
        }
        if let Some(i) = v.iter().position(|x| !x.is_finite()) {
            return Err(SweepError::NotMonotone(i));
        }
        if v.len() > 1 {
            let up = v[1] > v[0];
            for i in 1..v.len() {
                let ok = if up { v[i] > v[i - 1] } else { v[i] < v[i - 1] };
                if !ok {
                    return Err(SweepError::NotMonotone(i));
                }
            }
        }
        Ok(())
    }
}

/// Grid `lo + k·step` for `k = 0, 1, …` while not past `hi`. Values are
/// computed by multiplication, so no rounding drift accumulates.
pub fn linspace_step(lo: f64, hi: f64, step: f64) -> Vec<f64> {
    if !(step > 0.0) || !(hi >= lo) {
        return Vec::new();
    }
    let n = ((hi - lo) / step + 0.1).floor() as usize;
    (0..=n).map(|k| lo + step * k as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub axis_value: f64,
    pub outcome: Result<PointResult, SolveError>,
    pub free_space_variance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub spec: SweepSpec,
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    /// Successful rows as `(axis value, point)`.
    pub fn successes(&self) -> impl Iterator<Item = (f64, &PointResult)> {
        self.rows.iter().filter_map(|r| r.outcome.as_ref().ok().map(|p| (r.axis_value, p)))
    }

    /// Successful row with the lowest variance.
    pub fn min_variance(&self) -> Option<(f64, &PointResult)> {
        self.successes().fold(None, |best, (x, p)| match best {
            Some((_, b)) if b.observables.variance <= p.observables.variance => best,
            _ => Some((x, p)),
        })
    }

    pub fn failures(&self) -> usize {
        self.rows.iter().filter(|r| r.outcome.is_err()).count()
    }

    pub fn all_converged(&self) -> bool {
        self.successes().all(|(_, p)| p.converged)
    }
}

/// Evaluates every sweep value in parallel and returns rows in input order.
/// Individual failures are kept in their row.
pub fn run_sweep<E: PointEvaluator>(eval: &E, spec: &SweepSpec) -> Result<SweepResult, SweepError> {
    spec.validate()?;
    let rows: Vec<SweepRow> = spec
        .values
        .par_iter()
        .map(|&x| {
            let params = spec.axis.set(&spec.base, x);
            let free_space_variance =
                spec.include_free_space.then(|| free_space_variance(&BlochParams::from_system(&params)).ok()).flatten();
            SweepRow { axis_value: x, outcome: eval.evaluate(&params), free_space_variance }
        })
        .collect();
    if rows.iter().all(|r| r.outcome.is_err()) {
        let first = rows[0].outcome.clone().unwrap_err();
        return Err(SweepError::AllFailed { count: rows.len(), first });
    }
    Ok(SweepResult { spec: spec.clone(), rows })
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum OptimizeError {
    #[error("invalid bracket [{0}, {1}]")]
    BadBracket(f64, f64),
    #[error("grid needs at least three points, got {0}")]
    BadGrid(usize),
    #[error("tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error("no point in the bracket could be evaluated")]
    NoValidPoint,
    #[error("solve at the optimum failed: {0}")]
    Solve(#[from] SolveError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AxisOptimum {
    pub x: f64,
    pub point: PointResult,
    /// The minimum sits on an end of the bracket.
    pub at_boundary: bool,
    /// Every `(axis value, variance)` evaluated, in order. Failed
    /// evaluations appear as `NaN`.
    pub trace: Vec<(f64, f64)>,
}

/// Default number of grid points scanned before golden-section refinement.
pub const DEFAULT_GRID: usize = 21;

/// Minimizes the variance along `axis` over `bracket`: a `grid`-point scan
/// followed by golden-section refinement to width `tol`.
pub fn optimize_axis<E: PointEvaluator>(
    eval: &E,
    base: &SystemParams,
    axis: Axis,
    bracket: (f64, f64),
    grid: usize,
    tol: f64,
) -> Result<AxisOptimum, OptimizeError> {
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite() && hi > lo) {
        return Err(OptimizeError::BadBracket(lo, hi));
    }
    if grid < 3 {
        return Err(OptimizeError::BadGrid(grid));
    }
    if !(tol > 0.0) {
        return Err(OptimizeError::BadTolerance(tol));
    }
    let m = grid_then_golden(
        |x| eval.evaluate(&axis.set(base, x)).map(|p| p.observables.variance).unwrap_or(f64::NAN),
        lo,
        hi,
        grid,
        tol,
    );
    if !m.value.is_finite() {
        return Err(OptimizeError::NoValidPoint);
    }
    let point = eval.evaluate(&axis.set(base, m.x))?;
    Ok(AxisOptimum { x: m.x, point, at_boundary: m.at_boundary, trace: m.trace })
}

/// How the atomic detuning is handled while the dephasing rate varies.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum DetuningMode {
    /// Keep `base.delta_a`.
    #[default]
    Fixed,
    /// Minimize over `delta_a` in `bracket` at every dephasing rate.
    Reoptimize { bracket: (f64, f64), grid: usize, tol: f64 },
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ThresholdError {
    #[error("invalid dephasing bracket [{0}, {1}]")]
    BadBracket(f64, f64),
    #[error("relative tolerance must be positive, got {0}")]
    BadTolerance(f64),
    #[error(
        "bracket does not straddle the target: variance − target is {f_lo:.6e} at gamma_d = {lo} and {f_hi:.6e} at gamma_d = {hi}"
    )]
    NotStraddled { lo: f64, hi: f64, f_lo: f64, f_hi: f64 },
    #[error(transparent)]
    Optimize(#[from] OptimizeError),
    #[error(transparent)]
    Solve(#[from] SolveError),
}

/// One bisection evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdStep {
    pub gamma_d: f64,
    pub delta_a: f64,
    pub variance: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Threshold {
    pub gamma_d: f64,
    /// `gamma_d / gamma`.
    pub ratio: f64,
    pub target: f64,
    pub trace: Vec<ThresholdStep>,
}

/// Dephasing rate at which the (possibly detuning-minimized) variance
/// crosses `target`, by bisection on `bracket` until its width is at most
/// `rel_tol` times its midpoint.
pub fn dephasing_threshold<E: PointEvaluator>(
    eval: &E,
    base: &SystemParams,
    target: f64,
    bracket: (f64, f64),
    mode: DetuningMode,
    rel_tol: f64,
) -> Result<Threshold, ThresholdError> {
    let (mut lo, mut hi) = bracket;
    if !(lo >= 0.0 && hi.is_finite() && hi > lo) {
        return Err(ThresholdError::BadBracket(lo, hi));
    }
    if !(rel_tol > 0.0) {
        return Err(ThresholdError::BadTolerance(rel_tol));
    }
    let mut trace = Vec::new();
    let mut f = |gamma_d: f64| -> Result<f64, ThresholdError> {
        let p = Axis::GammaD.set(base, gamma_d);
        let (delta_a, variance) = match mode {
            DetuningMode::Fixed => (p.delta_a, eval.evaluate(&p)?.observables.variance),
            DetuningMode::Reoptimize { bracket, grid, tol } => {
                let m = optimize_axis(eval, &p, Axis::DeltaA, bracket, grid, tol)?;
                (m.x, m.point.observables.variance)
            }
        };
        trace.push(ThresholdStep { gamma_d, delta_a, variance });
        Ok(variance - target)
    };
    let f_lo = f(lo)?;
    let f_hi = f(hi)?;
    if !(f_lo < 0.0 && f_hi > 0.0) {
        return Err(ThresholdError::NotStraddled { lo, hi, f_lo, f_hi });
    }
    while hi - lo > rel_tol * 0.5 * (lo + hi) {
        let mid = 0.5 * (lo + hi);
        if f(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let gamma_d = 0.5 * (lo + hi);
    Ok(Threshold { gamma_d, ratio: gamma_d / base.gamma, target, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hilbert::AtomicState;
    use crate::observables::atomic_observables;
    use num_complex::Complex64 as C64;

    /// Returns a fixed atomic state whose variance is a chosen function of
    /// the parameters.
    struct Stub<F: Fn(&SystemParams) -> Option<f64> + Sync>(F);

    impl<F: Fn(&SystemParams) -> Option<f64> + Sync> PointEvaluator for Stub<F> {
        fn evaluate(&self, params: &SystemParams) -> Result<PointResult, SolveError> {
            let v = (self.0)(params).ok_or(SolveError::Singular)?;
            let sigma = AtomicState::from_excitation(0.1, C64::new(0.1, 0.0)).unwrap();
            let mut observables = atomic_observables(&sigma, 0.0, 1.0).unwrap();
            observables.variance = v;
            Ok(PointResult { observables, n_max_used: params.n_max, residual: 0.0, converged: true })
        }
    }

    #[test]
    fn axis_names_round_trip() {
        for a in Axis::ALL {
            assert_eq!(a.name().parse::<Axis>().unwrap(), a);
            let p = a.set(&SystemParams::default(), 2.5);
            assert_eq!(a.get(&p), 2.5);
        }
        assert!("detuning".parse::<Axis>().is_err());
    }

    #[test]
    fn spec_validation() {
        let base = SystemParams::default();
        assert_eq!(SweepSpec::new(base, Axis::Rabi, vec![]).validate(), Err(SweepError::Empty));
        assert_eq!(SweepSpec::new(base, Axis::Rabi, vec![1.0, 2.0, 2.0]).validate(), Err(SweepError::NotMonotone(2)));
        assert_eq!(SweepSpec::new(base, Axis::Rabi, vec![3.0, 2.0, 2.5]).validate(), Err(SweepError::NotMonotone(2)));
        assert!(SweepSpec::new(base, Axis::Rabi, vec![3.0, 2.0, -1.0]).validate().is_ok());
        assert!(SweepSpec::new(base, Axis::Rabi, vec![f64::NAN]).validate().is_err());
    }

    #[test]
    fn step_grid_is_inclusive() {
        let v = linspace_step(-30.0, -10.0, 0.1);
        assert_eq!(v.len(), 201);
        assert_eq!(v[0], -30.0);
        assert!((v[200] + 10.0).abs() < 1e-12);
    }

    #[test]
    fn rows_keep_order_and_failures() {
        let stub = Stub(|p: &SystemParams| (p.rabi != 3.0).then_some(p.rabi * p.rabi));
        let values: Vec<f64> = (0..50).map(|k| k as f64 * 0.5 - 10.0).collect();
        let spec = SweepSpec::new(SystemParams::default(), Axis::Rabi, values.clone());
        let r = run_sweep(&stub, &spec).unwrap();
        assert_eq!(r.rows.iter().map(|r| r.axis_value).collect::<Vec<_>>(), values);
        assert_eq!(r.failures(), 1);
        let (x, p) = r.min_variance().unwrap();
        assert_eq!((x, p.observables.variance), (0.0, 0.0));
    }

    #[test]
    fn all_failed_is_an_error() {
        let stub = Stub(|_: &SystemParams| None);
        let spec = SweepSpec::new(SystemParams::default(), Axis::Rabi, vec![1.0, 2.0]);
        assert!(matches!(run_sweep(&stub, &spec), Err(SweepError::AllFailed { count: 2, .. })));
    }

    #[test]
    fn optimizer_finds_stub_quadratic() {
        let stub = Stub(|p: &SystemParams| Some(2.0 * (p.delta_a + 19.3).powi(2) - 0.236));
        let r = optimize_axis(&stub, &SystemParams::default(), Axis::DeltaA, (-25.0, -15.0), 21, 1e-6).unwrap();
        assert!(!r.at_boundary);
        assert!((r.x + 19.3).abs() < 1e-6, "{}", r.x);
        assert!((r.point.observables.variance + 0.236).abs() < 1e-11);
        assert!(r.trace.len() > 21);
    }

    #[test]
    fn optimizer_flags_monotone_objective() {
        let stub = Stub(|p: &SystemParams| Some(p.kappa));
        let r = optimize_axis(&stub, &SystemParams::default(), Axis::Kappa, (1.0, 2.0), 5, 1e-6).unwrap();
        assert!(r.at_boundary);
        assert_eq!(r.x, 1.0);
    }

    #[test]
    fn optimizer_rejects_bad_input() {
        let stub = Stub(|_: &SystemParams| Some(0.0));
        let base = SystemParams::default();
        assert!(matches!(
            optimize_axis(&stub, &base, Axis::Rabi, (1.0, 1.0), 5, 1e-6),
            Err(OptimizeError::BadBracket(..))
        ));
        assert!(matches!(optimize_axis(&stub, &base, Axis::Rabi, (0.0, 1.0), 2, 1e-6), Err(OptimizeError::BadGrid(2))));
    }

    #[test]
    fn bisection_finds_linear_root() {
        let stub = Stub(|p: &SystemParams| Some(0.1 * p.gamma_d - 0.3));
        let base = SystemParams { gamma: 0.5, ..SystemParams::default() };
        let t = dephasing_threshold(&stub, &base, 0.0, (0.0, 10.0), DetuningMode::Fixed, 1e-6).unwrap();
        assert!((t.gamma_d - 3.0).abs() < 3e-6);
        assert!((t.ratio - 6.0).abs() < 1e-5);
    }

    #[test]
    fn bisection_reoptimizes_detuning() {
        // min over δ_a of (δ_a − 1)² + Γ_D − 2 crosses zero at Γ_D = 2
        let stub = Stub(|p: &SystemParams| Some((p.delta_a - 1.0).powi(2) + p.gamma_d - 2.0));
        let mode = DetuningMode::Reoptimize { bracket: (-3.0, 3.0), grid: 13, tol: 1e-8 };
        let base = SystemParams { gamma: 1.0, ..SystemParams::default() };
        let t = dephasing_threshold(&stub, &base, 0.0, (0.5, 5.0), mode, 1e-6).unwrap();
        assert!((t.gamma_d - 2.0).abs() < 1e-5);
        assert!(t.trace.iter().all(|s| (s.delta_a - 1.0).abs() < 1e-6));
    }

    #[test]
    fn bisection_requires_straddle() {
        let stub = Stub(|p: &SystemParams| Some(p.gamma_d + 1.0));
        let r = dephasing_threshold(&stub, &SystemParams::default(), 0.0, (0.0, 1.0), DetuningMode::Fixed, 1e-3);
        assert!(matches!(r, Err(ThresholdError::NotStraddled { .. })));
    }
}
