//! Free-space steady state of the driven, damped, dephased two-level atom.
//!
//! With the cavity removed the master equation closes on three real
//! variables, `u = Re⟨Â₁₂⟩`, `v = Im⟨Â₁₂⟩` and `w = ⟨Â₂₂⟩`:
//!
//! ```text
//! u̇ = −γ⊥ u + δ_a v
//! v̇ = −δ_a u − γ⊥ v + 2Ω_R w − Ω_R
//! ẇ = −2Ω_R v − Γ w                  with γ⊥ = (Γ + Γ_D)/2
//! ```
//!
//! The stationary point is solved directly. This serves as the oracle for
//! the full solver's `g = 0` limit and as the free-space baseline.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::hilbert::{AtomicState, HilbertError, SystemParams};
use crate::observables::normally_ordered_variance;
use crate::search::golden_section;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BlochError {
    #[error("free-space oracle needs gamma > 0, got {0}")]
    NoDecay(f64),
    #[error("parameter `{0}` is not finite or is negative")]
    BadParam(&'static str),
    #[error("singular Bloch system")]
    Singular,
    #[error(transparent)]
    State(#[from] HilbertError),
    #[error("invalid search range for `{0}`")]
    BadRange(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlochParams {
    pub rabi: f64,
    pub delta_a: f64,
    pub gamma: f64,
    pub gamma_d: f64,
}

impl BlochParams {
    /// Atomic part of the full parameter set.
    pub fn from_system(p: &SystemParams) -> Self {
        Self { rabi: p.rabi, delta_a: p.delta_a, gamma: p.gamma, gamma_d: p.gamma_d }
    }

    fn validate(&self) -> Result<(), BlochError> {
        if !self.rabi.is_finite() {
            return Err(BlochError::BadParam("rabi"));
        }
        if !self.delta_a.is_finite() {
            return Err(BlochError::BadParam("delta_a"));
        }
        if !(self.gamma_d >= 0.0 && self.gamma_d.is_finite()) {
            return Err(BlochError::BadParam("gamma_d"));
        }
        if !(self.gamma > 0.0 && self.gamma.is_finite()) {
            return Err(BlochError::NoDecay(self.gamma));
        }
        Ok(())
    }
}

fn det3(m: &[[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Stationary atomic state in free space.
pub fn bloch_steady(p: &BlochParams) -> Result<AtomicState, BlochError> {
    p.validate()?;
    let gp = 0.5 * (p.gamma + p.gamma_d);
    let (om, d) = (p.rabi, p.delta_a);
    let m = [[-gp, d, 0.0], [-d, -gp, 2.0 * om], [0.0, -2.0 * om, -p.gamma]];
    let rhs = [0.0, om, 0.0];
    let det = det3(&m);
    if det == 0.0 || !det.is_finite() {
        return Err(BlochError::Singular);
    }
    // Cramer's rule
    let mut x = [0.0; 3];
    for (k, xk) in x.iter_mut().enumerate() {
        let mut mk = m;
        for row in 0..3 {
            mk[row][k] = rhs[row];
        }
        *xk = det3(&mk) / det;
    }
    let [u, v, w] = x;
    Ok(AtomicState::from_excitation(w, C64::new(u, v))?)
}

/// Normally ordered variance of the free-space fluorescence.
pub fn free_space_variance(p: &BlochParams) -> Result<f64, BlochError> {
    Ok(normally_ordered_variance(&bloch_steady(p)?))
}

/// Search box for the free-space optimum, in units of Γ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeSpaceSearch {
    /// Largest Rabi frequency; the grid runs over `(0, rabi_max]`.
    pub rabi_max: f64,
    pub delta_range: (f64, f64),
    pub rabi_points: usize,
    pub delta_points: usize,
    pub tol: f64,
}

impl Default for FreeSpaceSearch {
    fn default() -> Self {
        Self { rabi_max: 2.0, delta_range: (-3.0, 3.0), rabi_points: 40, delta_points: 61, tol: 1e-10 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FreeSpaceOptimum {
    pub rabi: f64,
    pub delta_a: f64,
    pub variance: f64,
}

/// Minimum of the free-space variance over drive strength and detuning at
/// fixed `gamma`, `gamma_d`: grid scan, then alternating golden-section
/// refinement along each axis with shrinking windows.
pub fn free_space_optimum(gamma: f64, gamma_d: f64, search: &FreeSpaceSearch) -> Result<FreeSpaceOptimum, BlochError> {
    BlochParams { rabi: 0.0, delta_a: 0.0, gamma, gamma_d }.validate()?;
    if !(search.rabi_max > 0.0) || search.rabi_points < 2 {
        return Err(BlochError::BadRange("rabi"));
    }
    let (d_lo, d_hi) = search.delta_range;
    if !(d_hi > d_lo) || search.delta_points < 2 {
        return Err(BlochError::BadRange("delta_a"));
    }
    let eval = |rabi: f64, delta_a: f64| {
        free_space_variance(&BlochParams { rabi: rabi * gamma, delta_a: delta_a * gamma, gamma, gamma_d })
            .unwrap_or(f64::INFINITY)
    };

    let r_step = search.rabi_max / search.rabi_points as f64;
    let d_step = (d_hi - d_lo) / (search.delta_points - 1) as f64;
    let mut best = (r_step, d_lo, f64::INFINITY);
    for i in 1..=search.rabi_points {
        let r = r_step * i as f64;
        for j in 0..search.delta_points {
            let d = d_lo + d_step * j as f64;
            let v = eval(r, d);
            if v < best.2 {
                best = (r, d, v);
            }
        }
    }

    let (mut hr, mut hd) = (r_step, d_step);
    let r_floor = r_step * 1e-6;
    for _ in 0..200 {
        let before = best.2;
        let (r, d, _) = best;
        let m = golden_section(|x| eval(x, d), (r - hr).max(r_floor), (r + hr).min(search.rabi_max), search.tol);
        if m.value < best.2 {
            best = (m.x, d, m.value);
        }
        let r = best.0;
        let m = golden_section(|x| eval(r, x), (d - hd).max(d_lo), (d + hd).min(d_hi), search.tol);
        if m.value < best.2 {
            best = (r, m.x, m.value);
        }
        if before - best.2 <= 1e-16 {
            hr *= 0.5;
            hd *= 0.5;
            if hr.max(hd) < search.tol {
                break;
            }
        }
    }
    Ok(FreeSpaceOptimum { rabi: best.0 * gamma, delta_a: best.1 * gamma, variance: best.2 })
}
