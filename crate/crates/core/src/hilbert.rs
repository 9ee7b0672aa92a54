//! The composite cavity ⊗ atom Hilbert space.
//!
//! Basis states are labelled `|n, i⟩` with `n` the cavity photon number
//! (`0..=n_max`) and `i ∈ {1, 2}` the atomic level (1 = ground, 2 = excited).
//! They are flattened with the atomic index running fastest, so the 2×2
//! atomic block belonging to each photon number is contiguous:
//!
//! ```text
//! |0,1⟩ |0,2⟩ |1,1⟩ |1,2⟩ ... |n_max,1⟩ |n_max,2⟩
//!   0     1     2     3          2n_max   2n_max+1
//! ```
//!
//! Density matrices are vectorized row-major: element `(row, col)` lives at
//! position `row * D_h + col` where `D_h = 2 (n_max + 1)`.

use std::fmt;

use ndarray::Array2;
use num_complex::Complex64 as C64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::linalg;

/// Dense complex matrix used for operators and density matrices.
pub type CMatrix = Array2<C64>;

pub const HERMITIAN_TOL: f64 = 1e-10;
pub const TRACE_TOL: f64 = 1e-10;
/// Looser than the Hermiticity tolerance: Fock truncation perturbs the
/// extreme eigenvalues of an otherwise valid state.
pub const POSITIVITY_TOL: f64 = 1e-8;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum HilbertError {
    #[error("photon number {n} outside 0..={n_max}")]
    PhotonOutOfRange { n: usize, n_max: usize },
    #[error("atomic level {0} is not 1 or 2")]
    LevelOutOfRange(u8),
    #[error("expected a {expected}x{expected} matrix, got {rows}x{cols}")]
    Dimension { expected: usize, rows: usize, cols: usize },
    #[error("vector of length {len} cannot hold a {dim_h}x{dim_h} matrix")]
    VectorLength { len: usize, dim_h: usize },
    #[error("matrix is not Hermitian (max deviation {0:.3e})")]
    NotHermitian(f64),
    #[error("trace deviates from one by {0:.3e}")]
    Trace(f64),
    #[error("matrix is not positive semidefinite (smallest eigenvalue {0:.3e})")]
    NotPositive(f64),
    #[error("atomic state violates det σ ≥ 0 (det = {0:.3e})")]
    NegativeDeterminant(f64),
    #[error("non-finite matrix entry")]
    NonFinite,
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid parameter `{field}`: {reason}")]
pub struct ParamError {
    pub field: &'static str,
    pub reason: String,
}

/// Physical parameters of the driven atom-cavity system.
///
/// All rates and detunings share one unit. The natural choice is the
/// atom-cavity coupling (`coupling = 1`); without a cavity coupling the
/// atomic decay rate serves as the unit instead (see [`SystemParams::rate_unit`]).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SystemParams {
    /// Rabi frequency Ω_R of the coherent drive.
    pub rabi: f64,
    /// Atomic detuning δ_a = ω₂₁ − ω_L.
    pub delta_a: f64,
    /// Cavity detuning δ_c = ω_c − ω_L.
    pub delta_c: f64,
    /// Atom-cavity coupling g.
    pub coupling: f64,
    /// Cavity loss rate κ.
    pub kappa: f64,
    /// Atomic energy relaxation rate Γ.
    pub gamma: f64,
    /// Pure dephasing rate Γ_D.
    pub gamma_d: f64,
    /// Highest retained cavity photon number.
    pub n_max: usize,
}

impl Default for SystemParams {
    fn default() -> Self {
        Self { rabi: 0.0, delta_a: 0.0, delta_c: 0.0, coupling: 1.0, kappa: 0.0, gamma: 0.0, gamma_d: 0.0, n_max: 6 }
    }
}

impl SystemParams {
    /// Γ/g = 13/300, i.e. g/Γ ≈ 23.
    pub const REFERENCE_GAMMA: f64 = 13.0 / 300.0;

    /// Strongly driven, strongly coupled operating point with δ_a on the
    /// cavity resonance of the upper Mollow sideband.
    pub fn reference_point() -> Self {
        Self {
            rabi: 14.0,
            delta_a: -19.29,
            delta_c: -34.0,
            coupling: 1.0,
            kappa: 1.58,
            gamma: Self::REFERENCE_GAMMA,
            gamma_d: 0.0,
            n_max: 6,
        }
    }

    /// Hilbert-space dimension `2 (n_max + 1)`.
    pub fn dim_h(&self) -> usize {
        hilbert_dim(self.n_max)
    }

    /// Label of the common rate unit.
    pub fn rate_unit(&self) -> &'static str {
        if self.coupling > 0.0 {
            "g"
        } else {
            "Gamma"
        }
    }

    pub fn with_n_max(self, n_max: usize) -> Self {
        Self { n_max, ..self }
    }

    pub fn validate(&self) -> Result<(), ParamError> {
        let finite = [
            ("rabi", self.rabi),
            ("delta_a", self.delta_a),
            ("delta_c", self.delta_c),
            ("coupling", self.coupling),
            ("kappa", self.kappa),
            ("gamma", self.gamma),
            ("gamma_d", self.gamma_d),
        ];
        for (field, v) in finite {
            if !v.is_finite() {
                return Err(ParamError { field, reason: format!("{v} is not finite") });
            }
        }
        for (field, v) in
            [("coupling", self.coupling), ("kappa", self.kappa), ("gamma", self.gamma), ("gamma_d", self.gamma_d)]
        {
            if v < 0.0 {
                return Err(ParamError { field, reason: format!("rate must be nonnegative, got {v}") });
            }
        }
        if self.gamma <= 0.0 && self.kappa <= 0.0 {
            return Err(ParamError {
                field: "gamma",
                reason: "gamma and kappa are both zero; the steady state is not unique".into(),
            });
        }
        Ok(())
    }
}

pub fn hilbert_dim(n_max: usize) -> usize {
    2 * (n_max + 1)
}

/// Flat index of the basis state `|n, level⟩`.
pub fn composite_index(n: usize, level: u8, n_max: usize) -> Result<usize, HilbertError> {
    if n > n_max {
        return Err(HilbertError::PhotonOutOfRange { n, n_max });
    }
    match level {
        1 | 2 => Ok(2 * n + usize::from(level - 1)),
        other => Err(HilbertError::LevelOutOfRange(other)),
    }
}

/// Inverse of [`composite_index`].
pub fn split_index(index: usize) -> (usize, u8) {
    (index / 2, (index % 2) as u8 + 1)
}

/// Density matrix of the full atom-cavity system.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    n_max: usize,
    elements: CMatrix,
}

impl DensityMatrix {
    /// Wraps `elements` after checking Hermiticity, unit trace and
    /// positivity.
    pub fn new(n_max: usize, elements: CMatrix) -> Result<Self, HilbertError> {
        let dim_h = hilbert_dim(n_max);
        check_square(&elements, dim_h)?;
        if elements.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(HilbertError::NonFinite);
        }
        let herm = hermiticity_defect(&elements);
        if herm > HERMITIAN_TOL {
            return Err(HilbertError::NotHermitian(herm));
        }
        let tr = trace(&elements);
        if (tr.re - 1.0).abs() > TRACE_TOL || tr.im.abs() > TRACE_TOL {
            return Err(HilbertError::Trace((tr - 1.0).norm()));
        }
        let min_eig = linalg::min_hermitian_eigenvalue(&elements);
        if min_eig < -POSITIVITY_TOL {
            return Err(HilbertError::NotPositive(min_eig));
        }
        Ok(Self { n_max, elements })
    }

    /// Pure basis-state projector `|n, level⟩⟨n, level|`.
    pub fn projector(n: usize, level: u8, n_max: usize) -> Result<Self, HilbertError> {
        let k = composite_index(n, level, n_max)?;
        let dim_h = hilbert_dim(n_max);
        let mut elements = CMatrix::zeros((dim_h, dim_h));
        elements[[k, k]] = C64::new(1.0, 0.0);
        Ok(Self { n_max, elements })
    }

    /// Product state `ρ_cav ⊗ σ`. `cavity` must be an `(n_max+1)`-square
    /// density matrix.
    pub fn product(cavity: &CMatrix, atom: &AtomicState) -> Result<Self, HilbertError> {
        let n_cav = cavity.nrows();
        if n_cav == 0 {
            return Err(HilbertError::Dimension { expected: 1, rows: 0, cols: cavity.ncols() });
        }
        check_square(cavity, n_cav)?;
        let n_max = n_cav - 1;
        let dim_h = hilbert_dim(n_max);
        let elements =
            CMatrix::from_shape_fn((dim_h, dim_h), |(r, c)| cavity[[r / 2, c / 2]] * atom.sigma[r % 2][c % 2]);
        Self::new(n_max, elements)
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    pub fn dim_h(&self) -> usize {
        hilbert_dim(self.n_max)
    }

    pub fn elements(&self) -> &CMatrix {
        &self.elements
    }

    /// `ρ_{n,i;m,j}`.
    pub fn element(&self, n: usize, i: u8, m: usize, j: u8) -> Result<C64, HilbertError> {
        let r = composite_index(n, i, self.n_max)?;
        let c = composite_index(m, j, self.n_max)?;
        Ok(self.elements[[r, c]])
    }

    pub fn trace(&self) -> C64 {
        trace(&self.elements)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        linalg::min_hermitian_eigenvalue(&self.elements)
    }
}

/// Reduced 2×2 density matrix of the atom, laid out as
///
/// ```text
/// σ = ( ⟨Â₁₁⟩  ⟨Â₂₁⟩ )
///     ( ⟨Â₁₂⟩  ⟨Â₂₂⟩ )
/// ```
///
/// i.e. `sigma[i-1][j-1] = ⟨i|σ̂|j⟩`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AtomicState {
    sigma: [[C64; 2]; 2],
}

impl AtomicState {
    pub fn new(sigma: [[C64; 2]; 2]) -> Result<Self, HilbertError> {
        if sigma.iter().flatten().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(HilbertError::NonFinite);
        }
        let herm = (sigma[0][1] - sigma[1][0].conj()).norm().max(sigma[0][0].im.abs()).max(sigma[1][1].im.abs());
        if herm > HERMITIAN_TOL {
            return Err(HilbertError::NotHermitian(herm));
        }
        let tr = sigma[0][0] + sigma[1][1];
        if (tr - 1.0).norm() > TRACE_TOL {
            return Err(HilbertError::Trace((tr - 1.0).norm()));
        }
        let state = Self { sigma };
        let det = state.determinant();
        if det < -HERMITIAN_TOL {
            return Err(HilbertError::NegativeDeterminant(det));
        }
        Ok(state)
    }

    /// Builds σ from the excitation `⟨Â₂₂⟩` and the coherence `⟨Â₁₂⟩`.
    pub fn from_excitation(a22: f64, coherence: C64) -> Result<Self, HilbertError> {
        Self::new([[C64::new(1.0 - a22, 0.0), coherence.conj()], [coherence, C64::new(a22, 0.0)]])
    }

    pub fn ground() -> Self {
        Self { sigma: [[C64::new(1.0, 0.0), C64::new(0.0, 0.0)], [C64::new(0.0, 0.0), C64::new(0.0, 0.0)]] }
    }

    pub fn matrix(&self) -> [[C64; 2]; 2] {
        self.sigma
    }

    /// `⟨Â₁₁⟩`, the ground-state population.
    pub fn a11(&self) -> f64 {
        self.sigma[0][0].re
    }

    /// `⟨Â₂₂⟩`, the atomic excitation.
    pub fn a22(&self) -> f64 {
        self.sigma[1][1].re
    }

    /// `⟨Â₁₂⟩ = ⟨2|σ̂|1⟩`, the atomic coherence.
    pub fn coherence(&self) -> C64 {
        self.sigma[1][0]
    }

    pub fn determinant(&self) -> f64 {
        (self.sigma[0][0] * self.sigma[1][1] - self.sigma[0][1] * self.sigma[1][0]).re
    }

    pub fn trace(&self) -> C64 {
        self.sigma[0][0] + self.sigma[1][1]
    }
}

impl fmt::Display for AtomicState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "σ(a22 = {:.6}, ⟨A12⟩ = {:.6})", self.a22(), self.coherence())
    }
}

/// Flattens ρ row-major into a vector of length `D_h²`.
pub fn vectorize(rho: &DensityMatrix) -> Vec<C64> {
    rho.elements.iter().copied().collect()
}

/// Inverse of [`vectorize`]. The result is not validated as a state.
pub fn devectorize(n_max: usize, v: &[C64]) -> Result<CMatrix, HilbertError> {
    let dim_h = hilbert_dim(n_max);
    if v.len() != dim_h * dim_h {
        return Err(HilbertError::VectorLength { len: v.len(), dim_h });
    }
    Ok(CMatrix::from_shape_vec((dim_h, dim_h), v.to_vec()).expect("length checked"))
}

/// Partial trace over the cavity: `σ_{ij} = Σ_n ρ_{n,i;n,j}`.
pub fn reduce_atom(rho: &DensityMatrix) -> AtomicState {
    let mut sigma = [[C64::new(0.0, 0.0); 2]; 2];
    for n in 0..=rho.n_max {
        for (i, row) in sigma.iter_mut().enumerate() {
            for (j, s) in row.iter_mut().enumerate() {
                *s += rho.elements[[2 * n + i, 2 * n + j]];
            }
        }
    }
    AtomicState { sigma }
}

/// Partial trace over the atom, an `(n_max+1)`-square matrix.
pub fn reduce_cavity(rho: &DensityMatrix) -> CMatrix {
    let n_cav = rho.n_max + 1;
    CMatrix::from_shape_fn((n_cav, n_cav), |(n, m)| rho.elements[[2 * n, 2 * m]] + rho.elements[[2 * n + 1, 2 * m + 1]])
}

/// Mean photon number `⟨â†â⟩ = Σ_{n,i} n ρ_{n,i;n,i}`.
pub fn cavity_excitation(rho: &DensityMatrix) -> f64 {
    (0..rho.dim_h()).map(|k| (k / 2) as f64 * rho.elements[[k, k]].re).sum()
}

pub(crate) fn trace(m: &CMatrix) -> C64 {
    m.diag().iter().sum()
}

/// Largest `|m_rc − conj(m_cr)|`.
pub fn hermiticity_defect(m: &CMatrix) -> f64 {
    let n = m.nrows();
    let mut worst = 0.0_f64;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((m[[r, c]] - m[[c, r]].conj()).norm());
        }
    }
    worst
}

fn check_square(m: &CMatrix, expected: usize) -> Result<(), HilbertError> {
    if m.nrows() != expected || m.ncols() != expected {
        return Err(HilbertError::Dimension { expected, rows: m.nrows(), cols: m.ncols() });
    }
    Ok(())
}
