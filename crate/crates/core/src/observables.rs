//! Scalar observables of the atomic state and the tuning relations.
//!
//! Variances are those of the atomic source field
//! `Ê_s = |χ|(Â₁₂ e^{iφ} + Â₂₁ e^{−iφ})`, normally ordered and divided by
//! `|χ|²` unless stated otherwise.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::hilbert::{cavity_excitation, reduce_atom, AtomicState, DensityMatrix, SystemParams};

/// Slack allowed on `0 ≤ ⟨Â₂₂⟩ ≤ 1` for numerically computed excitations.
const EXCITATION_SLACK: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ObservableError {
    #[error("atomic excitation {0} outside [0, 1]")]
    ExcitationOutOfRange(f64),
    #[error("no real cavity resonance: δ_c² = {delta_c_sq} < (2Ω_R)² = {drive_sq}")]
    NoResonance { delta_c_sq: f64, drive_sq: f64 },
    #[error("chi_sq must be positive and finite, got {0}")]
    BadChiSq(f64),
}

/// Everything derived from one steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Observables {
    /// `⟨Â₂₂⟩`
    pub a22: f64,
    /// `⟨Â₁₂⟩`
    pub coherence: C64,
    /// Coherent part of the atomic excitation, `|⟨Â₁₂⟩|²`.
    pub cpae: f64,
    /// Upper bound `⟨Â₁₁⟩⟨Â₂₂⟩` on the CPAE.
    pub cpae_max: f64,
    /// `Tr σ²`
    pub purity: f64,
    /// Phase-optimized normally ordered variance, times `chi_sq`.
    pub variance: f64,
    /// Variance at maximal coherence for this excitation, times `chi_sq`.
    pub variance_min: f64,
    /// `⟨â†â⟩`
    pub cavity_n: f64,
    /// Defect of the squeezing/purity decomposition (dimensionless).
    pub identity_residual: f64,
    pub chi_sq: f64,
}

impl Observables {
    /// Scalars compared between truncation levels.
    pub fn scalars(&self) -> [f64; 9] {
        [
            self.a22,
            self.coherence.re,
            self.coherence.im,
            self.cpae,
            self.cpae_max,
            self.purity,
            self.variance,
            self.variance_min,
            self.cavity_n,
        ]
    }

    /// Largest absolute change of any scalar.
    pub fn max_change(&self, other: &Self) -> f64 {
        self.scalars().iter().zip(other.scalars()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }
}

/// Normally ordered variance at field phase `φ`:
/// `2⟨Â₂₂⟩ − 2|⟨Â₁₂⟩|² − 2 Re(e^{2iφ}⟨Â₁₂⟩²)`.
pub fn variance_at_phase(sigma: &AtomicState, phi: f64) -> f64 {
    let c = sigma.coherence();
    let rotated = C64::from_polar(1.0, 2.0 * phi) * c * c;
    2.0 * sigma.a22() - 2.0 * c.norm_sqr() - 2.0 * rotated.re
}

/// Phase that minimizes [`variance_at_phase`].
pub fn optimal_phase(sigma: &AtomicState) -> f64 {
    // e^{2iφ}c² real and positive
    -sigma.coherence().arg()
}

/// `2(⟨Â₂₂⟩ − 2|⟨Â₁₂⟩|²)`; negative means squeezing.
pub fn normally_ordered_variance(sigma: &AtomicState) -> f64 {
    2.0 * (sigma.a22() - 2.0 * sigma.coherence().norm_sqr())
}

fn check_excitation(a22: f64) -> Result<(), ObservableError> {
    if !(-EXCITATION_SLACK..=1.0 + EXCITATION_SLACK).contains(&a22) {
        return Err(ObservableError::ExcitationOutOfRange(a22));
    }
    Ok(())
}

/// Largest allowed `|⟨Â₁₂⟩|²` at excitation `a22`: `a22 − a22²`.
pub fn max_coherence_sq(a22: f64) -> Result<f64, ObservableError> {
    check_excitation(a22)?;
    Ok(a22 - a22 * a22)
}

/// Variance at maximal coherence: `2 a22 (2 a22 − 1)`.
pub fn min_variance(a22: f64) -> Result<f64, ObservableError> {
    check_excitation(a22)?;
    Ok(2.0 * a22 * (2.0 * a22 - 1.0))
}

/// `Tr σ² = 1 − 2(⟨Â₂₂⟩ − ⟨Â₂₂⟩² − |⟨Â₁₂⟩|²)`.
pub fn purity(sigma: &AtomicState) -> f64 {
    let a22 = sigma.a22();
    1.0 - 2.0 * (a22 - a22 * a22 - sigma.coherence().norm_sqr())
}

/// `Tr(σ·σ)` by matrix multiplication.
pub fn purity_direct(sigma: &AtomicState) -> f64 {
    let s = sigma.matrix();
    let tr: C64 = (0..2).flat_map(|i| (0..2).map(move |k| (i, k))).map(|(i, k)| s[i][k] * s[k][i]).sum();
    tr.re
}

/// `|variance − variance_min − 2(1 − purity)|`, zero up to rounding for any
/// valid state.
pub fn identity_residual(sigma: &AtomicState) -> Result<f64, ObservableError> {
    let v = normally_ordered_variance(sigma);
    let vmin = min_variance(sigma.a22())?;
    Ok((v - vmin - 2.0 * (1.0 - purity(sigma))).abs())
}

/// Mollow sidebands relative to the laser: `(−W, 0, +W)` with
/// `W = √((2Ω_R)² + δ_a²)`.
pub fn sideband_frequencies(params: &SystemParams) -> (f64, f64, f64) {
    let w = (2.0 * params.rabi).hypot(params.delta_a);
    (-w, 0.0, w)
}

/// `|δ_a|` that puts a Mollow sideband on the cavity: `√(δ_c² − 4Ω_R²)`.
pub fn resonant_atom_detuning(rabi: f64, delta_c: f64) -> Result<f64, ObservableError> {
    let delta_c_sq = delta_c * delta_c;
    let drive_sq = 4.0 * rabi * rabi;
    if delta_c_sq < drive_sq {
        return Err(ObservableError::NoResonance { delta_c_sq, drive_sq });
    }
    Ok((delta_c_sq - drive_sq).sqrt())
}

/// Observables of an atomic state with a given cavity occupation.
pub fn atomic_observables(sigma: &AtomicState, cavity_n: f64, chi_sq: f64) -> Result<Observables, ObservableError> {
    if !(chi_sq > 0.0 && chi_sq.is_finite()) {
        return Err(ObservableError::BadChiSq(chi_sq));
    }
    let a22 = sigma.a22();
    let coherence = sigma.coherence();
    Ok(Observables {
        a22,
        coherence,
        cpae: coherence.norm_sqr(),
        cpae_max: max_coherence_sq(a22)?,
        purity: purity(sigma),
        variance: chi_sq * normally_ordered_variance(sigma),
        variance_min: chi_sq * min_variance(a22)?,
        cavity_n,
        identity_residual: identity_residual(sigma)?,
        chi_sq,
    })
}

pub fn compute_observables(rho: &DensityMatrix, chi_sq: f64) -> Result<Observables, ObservableError> {
    atomic_observables(&reduce_atom(rho), cavity_excitation(rho), chi_sq)
}
