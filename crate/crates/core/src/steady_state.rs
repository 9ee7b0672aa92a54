//! Stationary solution of the master equation.
//!
//! `L·vec(ρ) = 0` is singular on its own, since trace preservation makes
//! one equation redundant. One diagonal element (by default `ρ_{0,1;0,1}`) is
//! replaced through `Tr ρ = 1`, its equation dropped, and the resulting
//! inhomogeneous system `A x = −b` is solved by direct LU factorization.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::hilbert::{self, composite_index, CMatrix, DensityMatrix, HilbertError, ParamError, SystemParams};
use crate::linalg::{self, Factorization, LinalgError};
use crate::liouvillian::{build_liouvillian_explicit, Liouvillian};
use crate::observables::{compute_observables, ObservableError};
use crate::sparse::SparseMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolveError {
    #[error(transparent)]
    Params(#[from] ParamError),
    #[error("n_max = {n_max} exceeds the hard cap {cap}")]
    TruncationOverflow { n_max: usize, cap: usize },
    #[error("steady state is not unique (singular coefficient matrix)")]
    Singular,
    #[error("linear solve failed: {0}")]
    Linalg(String),
    #[error("post-processing correction {0:.3e} is too large; the generator is not trace and Hermiticity preserving")]
    AssemblyDefect(f64),
    #[error("solution is not a valid density matrix: {0}")]
    InvalidState(#[from] HilbertError),
    #[error(transparent)]
    Observable(#[from] ObservableError),
    #[error("solver tolerance must be positive, got {0}")]
    BadTolerance(f64),
}

impl From<LinalgError> for SolveError {
    fn from(e: LinalgError) -> Self {
        match e {
            LinalgError::Singular => SolveError::Singular,
            other => SolveError::Linalg(other.to_string()),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    /// Bound on `max |L·vec(ρ)|` for a solve to count as converged.
    pub tol: f64,
    /// Bound on the change of every observable between truncation levels.
    pub obs_tol: f64,
    /// Largest photon number the truncation loop may reach.
    pub hard_cap: usize,
    /// Reduced systems smaller than this use dense LU, larger ones sparse LU.
    pub dense_limit: usize,
    /// Abort when Hermitizing or renormalizing moves ρ by more than this.
    pub max_correction: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self { tol: 1e-10, obs_tol: 1e-8, hard_cap: 64, dense_limit: 128, max_correction: 1e-6 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<(), SolveError> {
        for t in [self.tol, self.obs_tol, self.max_correction] {
            if !(t > 0.0 && t.is_finite()) {
                return Err(SolveError::BadTolerance(t));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyStateResult {
    pub rho: DensityMatrix,
    /// `max |L·vec(ρ)|` after post-processing.
    pub residual: f64,
    pub n_max_used: usize,
    pub converged: bool,
    /// `max |ρ − (ρ + ρ†)/2|` removed by Hermitization.
    pub hermitian_correction: f64,
    /// `|Tr ρ − 1|` removed by renormalization.
    pub trace_correction: f64,
    /// Largest observable change against the doubled truncation, when the
    /// truncation loop ran.
    pub truncation_change: Option<f64>,
    pub factorization: Factorization,
}

/// Inhomogeneous system left after eliminating one diagonal element.
#[derive(Debug, Clone, PartialEq)]
pub struct ReducedSystem {
    pub matrix: SparseMatrix,
    /// Constant terms `b`; the system to solve is `matrix · x = −b`.
    pub inhomogeneity: Vec<C64>,
    /// Vector index of the eliminated element.
    pub eliminated: usize,
    n_max: usize,
}

impl ReducedSystem {
    /// Solves the reduced system and restores the eliminated element,
    /// returning the full vectorized ρ.
    pub fn solve(&self, dense_limit: usize) -> Result<(Vec<C64>, Factorization), SolveError> {
        let n = self.matrix.nrows();
        let rhs: Vec<C64> = self.inhomogeneity.iter().map(|b| -b).collect();
        let (x, how) = linalg::solve_triplets(n, self.matrix.entries(), &rhs, dense_limit)?;
        let d = hilbert::hilbert_dim(self.n_max);
        let mut full = Vec::with_capacity(n + 1);
        full.extend_from_slice(&x[..self.eliminated]);
        full.push(C64::new(0.0, 0.0));
        full.extend_from_slice(&x[self.eliminated..]);
        let others: C64 = (0..d).map(|k| k * d + k).filter(|&k| k != self.eliminated).map(|k| full[k]).sum();
        full[self.eliminated] = C64::new(1.0, 0.0) - others;
        Ok((full, how))
    }
}

/// Eliminates `ρ_{0,1;0,1}` through the trace condition.
pub fn eliminate_trace(l: &Liouvillian) -> ReducedSystem {
    eliminate_trace_at(l, 0, 1).expect("ground-vacuum element always exists")
}

/// Eliminates the diagonal element `ρ_{n,i;n,i}` through the trace
/// condition: every equation gets `ρ_{n,i;n,i} = 1 − Σ_{other diag} ρ`
/// substituted, and the equation for the eliminated element is dropped.
pub fn eliminate_trace_at(l: &Liouvillian, n: usize, level: u8) -> Result<ReducedSystem, HilbertError> {
    let n_max = l.n_max();
    let d = hilbert::hilbert_dim(n_max);
    let k = composite_index(n, level, n_max)?;
    let e = k * d + k;
    let dim = l.dim();
    let index = |k: usize| if k < e { k } else { k - 1 };
    let diagonal: Vec<usize> = (0..d).map(|k| k * d + k).filter(|&k| k != e).collect();

    let mut triplets = Vec::with_capacity(l.matrix().nnz() + diagonal.len() * 8);
    let mut inhomogeneity = vec![C64::new(0.0, 0.0); dim - 1];
    for &(r, c, v) in l.matrix().entries() {
        if r == e {
            continue;
        }
        let r = index(r);
        if c == e {
            inhomogeneity[r] += v;
            triplets.extend(diagonal.iter().map(|&dk| (r, index(dk), -v)));
        } else {
            triplets.push((r, index(c), v));
        }
    }
    Ok(ReducedSystem {
        matrix: SparseMatrix::from_triplets(dim - 1, dim - 1, triplets),
        inhomogeneity,
        eliminated: e,
        n_max,
    })
}

/// Steady-state solver with a fixed configuration.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct SteadyStateSolver {
    pub config: SolverConfig,
}

impl SteadyStateSolver {
    pub fn new(config: SolverConfig) -> Self {
        Self { config }
    }

    /// Solves at the truncation `params.n_max`.
    pub fn solve(&self, params: &SystemParams) -> Result<SteadyStateResult, SolveError> {
        self.solve_eliminating(params, 0, 1)
    }

    /// Solves with `ρ_{n,level;n,level}` as the eliminated element.
    pub fn solve_eliminating(
        &self,
        params: &SystemParams,
        n: usize,
        level: u8,
    ) -> Result<SteadyStateResult, SolveError> {
        self.config.validate()?;
        params.validate()?;
        if params.n_max > self.config.hard_cap {
            return Err(SolveError::TruncationOverflow { n_max: params.n_max, cap: self.config.hard_cap });
        }
        let l = build_liouvillian_explicit(params);
        let system = eliminate_trace_at(&l, n, level)?;
        let (v, factorization) = system.solve(self.config.dense_limit)?;
        let raw = hilbert::devectorize(params.n_max, &v)?;
        let (elements, hermitian_correction, trace_correction) = hermitize_and_normalize(&raw);
        let correction = hermitian_correction.max(trace_correction);
        if correction > self.config.max_correction || !correction.is_finite() {
            return Err(SolveError::AssemblyDefect(correction));
        }
        let residual = l.residual(elements.as_slice().expect("standard layout"));
        let rho = DensityMatrix::new(params.n_max, elements)?;
        Ok(SteadyStateResult {
            rho,
            residual,
            n_max_used: params.n_max,
            converged: residual <= self.config.tol,
            hermitian_correction,
            trace_correction,
            truncation_change: None,
            factorization,
        })
    }

    /// Doubles the truncation, starting at `params.n_max`, until every
    /// observable changes by less than `obs_tol` between successive levels.
    ///
    /// The returned state is the one at the smaller of the two agreeing
    /// levels. When the hard cap is hit first, the highest-level result is
    /// returned with `converged = false`.
    pub fn converge(&self, params: &SystemParams) -> Result<SteadyStateResult, SolveError> {
        let cap = self.config.hard_cap;
        let mut level = params.n_max;
        let mut current = self.solve(&params.with_n_max(level))?;
        let mut obs = compute_observables(&current.rho, 1.0)?;
        loop {
            let next = (2 * level).max(1).min(cap);
            if next <= level {
                current.converged = false;
                return Ok(current);
            }
            let refined = self.solve(&params.with_n_max(next))?;
            let refined_obs = compute_observables(&refined.rho, 1.0)?;
            let change = obs.max_change(&refined_obs);
            if change < self.config.obs_tol {
                current.truncation_change = Some(change);
                current.converged = current.residual <= self.config.tol;
                return Ok(current);
            }
            level = next;
            current = refined;
            current.truncation_change = Some(change);
            obs = refined_obs;
        }
    }
}

/// Solves at `params.n_max` with default settings and residual bound `tol`.
pub fn solve_steady(params: &SystemParams, tol: f64) -> Result<SteadyStateResult, SolveError> {
    SteadyStateSolver::new(SolverConfig { tol, ..SolverConfig::default() }).solve(params)
}

/// Truncation-converged solve with default settings and observable bound
/// `obs_tol`.
pub fn converge_truncation(params: &SystemParams, obs_tol: f64) -> Result<SteadyStateResult, SolveError> {
    SteadyStateSolver::new(SolverConfig { obs_tol, ..SolverConfig::default() }).converge(params)
}

/// Returns `(ρ + ρ†)/(2 Tr ρ)` with the Hermitian and trace corrections.
fn hermitize_and_normalize(raw: &CMatrix) -> (CMatrix, f64, f64) {
    let adjoint = raw.t().mapv(|z| z.conj());
    let herm = (raw + &adjoint).mapv(|z| z * 0.5);
    let hermitian_correction = (raw - &herm).iter().map(|z| z.norm()).fold(0.0, f64::max);
    let tr = hilbert::trace(&herm).re;
    let trace_correction = (tr - 1.0).abs();
    (herm.mapv(|z| z / tr), hermitian_correction, trace_correction)
}
