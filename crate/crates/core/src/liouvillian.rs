//! Generator of the master equation
//!
//! ```text
//! dρ/dt = −i[H, ρ] + (Γ/2) L_{Â₁₂}[ρ] + (Γ_D/2) L_{Â₂₂}[ρ] + (κ/2) L_{â}[ρ]
//! L_X[ρ] = 2XρX† − X†Xρ − ρX†X
//! H = δ_a Â₂₂ + δ_c â†â + g(â†Â₁₂ + Â₂₁â) + Ω_R(Â₁₂ + Â₂₁)
//! ```
//!
//! as a sparse matrix acting on row-major vectorized density matrices.
//!
//! Two independent assemblies exist. [`build_liouvillian_explicit`] writes
//! out the four coupled equations for `ρ̇_{n,i;m,j}` coefficient by
//! coefficient. [`build_liouvillian_generic`] builds the same operator from
//! left/right multiplication superoperators of `H` and the jump operators.
//! They must agree entrywise; the second one exists to catch index slips in
//! the first.
//!
//! The Fock space is hard-truncated at `n_max`: any element with a photon
//! index outside `0..=n_max` is zero.

use num_complex::Complex64 as C64;
use thiserror::Error;

use crate::hilbert::{hilbert_dim, CMatrix, DensityMatrix, SystemParams};
use crate::sparse::SparseMatrix;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LiouvillianError {
    #[error("dimension mismatch: Liouvillian is built for n_max = {expected}, state has n_max = {actual}")]
    Dimension { expected: usize, actual: usize },
}

const ZERO: C64 = C64::new(0.0, 0.0);
const I: C64 = C64::new(0.0, 1.0);

fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Liouvillian {
    n_max: usize,
    params: SystemParams,
    matrix: SparseMatrix,
}

impl Liouvillian {
    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `D_h²`, the length of a vectorized density matrix.
    pub fn dim(&self) -> usize {
        let d = hilbert_dim(self.n_max);
        d * d
    }

    pub fn params(&self) -> &SystemParams {
        &self.params
    }

    pub fn matrix(&self) -> &SparseMatrix {
        &self.matrix
    }

    /// Vector index of `ρ_{n,i;m,j}`.
    pub fn vec_index(&self, n: usize, i: u8, m: usize, j: u8) -> usize {
        vec_index(self.n_max, n, i, m, j)
    }

    /// `dρ/dt` for a density matrix.
    pub fn apply(&self, rho: &DensityMatrix) -> Result<CMatrix, LiouvillianError> {
        if rho.n_max() != self.n_max {
            return Err(LiouvillianError::Dimension { expected: self.n_max, actual: rho.n_max() });
        }
        self.apply_matrix(rho.elements())
    }

    /// `dρ/dt` for an arbitrary square matrix of the right size.
    pub fn apply_matrix(&self, m: &CMatrix) -> Result<CMatrix, LiouvillianError> {
        let d = hilbert_dim(self.n_max);
        if m.nrows() != d || m.ncols() != d {
            return Err(LiouvillianError::Dimension {
                expected: self.n_max,
                actual: (m.nrows() / 2).saturating_sub(1),
            });
        }
        let v: Vec<C64> = m.iter().copied().collect();
        let out = self.matrix.matvec(&v);
        Ok(CMatrix::from_shape_vec((d, d), out).expect("square"))
    }

    /// `max |L·v|` for a vectorized state.
    pub fn residual(&self, v: &[C64]) -> f64 {
        self.matrix.matvec(v).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    /// Coordinate-format dump: `row col re im`, sorted by `(row, col)`.
    pub fn to_coo_text(&self) -> String {
        self.matrix.to_coo_text()
    }
}

fn vec_index(n_max: usize, n: usize, i: u8, m: usize, j: u8) -> usize {
    let d = hilbert_dim(n_max);
    let row = 2 * n + usize::from(i - 1);
    let col = 2 * m + usize::from(j - 1);
    row * d + col
}

/// `H` (with ħ = 1) in the composite basis.
pub fn build_hamiltonian(params: &SystemParams) -> CMatrix {
    let d = params.dim_h();
    let mut h = CMatrix::zeros((d, d));
    for n in 0..=params.n_max {
        let g1 = 2 * n;
        let e = 2 * n + 1;
        h[[g1, g1]] = re(n as f64 * params.delta_c);
        h[[e, e]] = re(params.delta_a + n as f64 * params.delta_c);
        h[[g1, e]] = re(params.rabi);
        h[[e, g1]] = re(params.rabi);
        if n > 0 {
            // ⟨n,1| g â†Â₁₂ |n−1,2⟩ = g√n
            let coupling = params.coupling * (n as f64).sqrt();
            let e_prev = 2 * (n - 1) + 1;
            h[[g1, e_prev]] = re(coupling);
            h[[e_prev, g1]] = re(coupling);
        }
    }
    h
}

/// Collects the coefficients of one row `ρ̇_{n,i;m,j} = Σ c ρ_{n',i';m',j'}`,
/// dropping references outside the truncated Fock space.
struct RowWriter<'a> {
    n_max: usize,
    row: usize,
    out: &'a mut Vec<(usize, usize, C64)>,
}

impl RowWriter<'_> {
    fn add(&mut self, n: isize, i: u8, m: isize, j: u8, coef: C64) {
        let top = self.n_max as isize;
        if n < 0 || m < 0 || n > top || m > top || coef == ZERO {
            return;
        }
        let col = vec_index(self.n_max, n as usize, i, m as usize, j);
        self.out.push((self.row, col, coef));
    }
}

/// Assembles the Liouvillian directly from the element-wise equations of
/// motion for `ρ_{n,1;m,1}`, `ρ_{n,1;m,2}`, `ρ_{n,2;m,1}` and `ρ_{n,2;m,2}`.
pub fn build_liouvillian_explicit(params: &SystemParams) -> Liouvillian {
    let p = params;
    let n_max = p.n_max;
    let d = hilbert_dim(n_max);
    let mut triplets = Vec::new();

    for n in 0..=n_max {
        for i in 1..=2u8 {
            for m in 0..=n_max {
                for j in 1..=2u8 {
                    let row = vec_index(n_max, n, i, m, j);
                    let mut w = RowWriter { n_max, row, out: &mut triplets };
                    let (nf, mf) = (n as f64, m as f64);
                    let (ni, mi) = (n as isize, m as isize);
                    let g = p.coupling;
                    let om = p.rabi;
                    let feed = re(p.kappa * ((nf + 1.0) * (mf + 1.0)).sqrt());
                    match (i, j) {
                        (1, 1) => {
                            let diag = -(I * p.delta_c * (nf - mf) + re(p.kappa / 2.0 * (nf + mf)));
                            w.add(ni, 1, mi, 1, diag);
                            w.add(ni - 1, 2, mi, 1, -I * g * nf.sqrt());
                            w.add(ni, 1, mi - 1, 2, I * g * mf.sqrt());
                            w.add(ni, 2, mi, 1, -I * om);
                            w.add(ni, 1, mi, 2, I * om);
                            w.add(ni, 2, mi, 2, re(p.gamma));
                            w.add(ni + 1, 1, mi + 1, 1, feed);
                        }
                        (1, 2) => {
                            let diag = I * (p.delta_a - (nf - mf) * p.delta_c)
                                - re((p.gamma + p.kappa * (nf + mf)) / 2.0)
                                - re(p.gamma_d / 2.0);
                            w.add(ni, 1, mi, 2, diag);
                            w.add(ni - 1, 2, mi, 2, -I * g * nf.sqrt());
                            w.add(ni, 1, mi + 1, 1, I * g * (mf + 1.0).sqrt());
                            w.add(ni, 2, mi, 2, -I * om);
                            w.add(ni, 1, mi, 1, I * om);
                            w.add(ni + 1, 1, mi + 1, 2, feed);
                        }
                        (2, 1) => {
                            let diag = -(I * (p.delta_a + (nf - mf) * p.delta_c)
                                + re((p.gamma + p.kappa * (nf + mf)) / 2.0))
                                - re(p.gamma_d / 2.0);
                            w.add(ni, 2, mi, 1, diag);
                            w.add(ni + 1, 1, mi, 1, -I * g * (nf + 1.0).sqrt());
                            w.add(ni, 2, mi - 1, 2, I * g * mf.sqrt());
                            w.add(ni, 1, mi, 1, -I * om);
                            w.add(ni, 2, mi, 2, I * om);
                            w.add(ni + 1, 2, mi + 1, 1, feed);
                        }
                        _ => {
                            let diag = -(I * p.delta_c * (nf - mf) + re(p.gamma + p.kappa / 2.0 * (nf + mf)));
                            w.add(ni, 2, mi, 2, diag);
                            w.add(ni + 1, 1, mi, 2, -I * g * (nf + 1.0).sqrt());
                            w.add(ni, 2, mi + 1, 1, I * g * (mf + 1.0).sqrt());
                            w.add(ni, 1, mi, 2, -I * om);
                            w.add(ni, 2, mi, 1, I * om);
                            w.add(ni + 1, 2, mi + 1, 2, feed);
                        }
                    }
                }
            }
        }
    }

    Liouvillian { n_max, params: *params, matrix: SparseMatrix::from_triplets(d * d, d * d, triplets) }
}

/// Operators of the composite space, built by tensoring cavity and atom
/// factors (cavity first, atom fastest).
struct Operators {
    identity: SparseMatrix,
    a: SparseMatrix,
    a12: SparseMatrix,
    a22: SparseMatrix,
}

impl Operators {
    fn new(n_max: usize) -> Self {
        let n_cav = n_max + 1;
        let cav_id = SparseMatrix::identity(n_cav);
        let atom_id = SparseMatrix::identity(2);
        let annihilate =
            SparseMatrix::from_triplets(n_cav, n_cav, (1..n_cav).map(|n| (n - 1, n, re((n as f64).sqrt()))));
        // Â_ij = |i⟩⟨j| with |1⟩ at atomic index 0.
        let flip = |i: usize, j: usize| SparseMatrix::from_triplets(2, 2, [(i - 1, j - 1, re(1.0))]);
        Self {
            identity: cav_id.kron(&atom_id),
            a: annihilate.kron(&atom_id),
            a12: cav_id.kron(&flip(1, 2)),
            a22: cav_id.kron(&flip(2, 2)),
        }
    }

    fn hamiltonian(&self, p: &SystemParams) -> SparseMatrix {
        let a_dag = self.a.adjoint();
        let a21 = self.a12.adjoint();
        let jc = a_dag.matmul(&self.a12).add(&a21.matmul(&self.a));
        self.a22
            .scale(re(p.delta_a))
            .add(&a_dag.matmul(&self.a).scale(re(p.delta_c)))
            .add(&jc.scale(re(p.coupling)))
            .add(&self.a12.add(&a21).scale(re(p.rabi)))
    }
}

/// `X ρ` as a superoperator on row-major vectors.
fn left(x: &SparseMatrix, id: &SparseMatrix) -> SparseMatrix {
    x.kron(id)
}

/// `ρ X` as a superoperator on row-major vectors.
fn right(x: &SparseMatrix, id: &SparseMatrix) -> SparseMatrix {
    id.kron(&x.transpose())
}

/// `(rate/2) L_X`.
fn dissipator(x: &SparseMatrix, rate: f64, id: &SparseMatrix) -> SparseMatrix {
    let xdx = x.adjoint().matmul(x);
    let jump = x.kron(&x.conj()).scale(re(2.0));
    jump.sub(&left(&xdx, id)).sub(&right(&xdx, id)).scale(re(rate / 2.0))
}

/// Assembles the Liouvillian from the commutator and Lindblad dissipators of
/// generic operators. Independent of [`build_liouvillian_explicit`].
pub fn build_liouvillian_generic(params: &SystemParams) -> Liouvillian {
    let ops = Operators::new(params.n_max);
    let id = &ops.identity;
    let h = ops.hamiltonian(params);
    let commutator = left(&h, id).sub(&right(&h, id)).scale(-I);
    let matrix = commutator
        .add(&dissipator(&ops.a12, params.gamma, id))
        .add(&dissipator(&ops.a22, params.gamma_d, id))
        .add(&dissipator(&ops.a, params.kappa, id));
    Liouvillian { n_max: params.n_max, params: *params, matrix }
}

/// Hamiltonian from the operator algebra, exposed for cross-checking
/// [`build_hamiltonian`].
pub fn hamiltonian_from_operators(params: &SystemParams) -> CMatrix {
    let h = Operators::new(params.n_max).hamiltonian(params);
    let d = params.dim_h();
    let mut out = CMatrix::zeros((d, d));
    for &(r, c, v) in h.entries() {
        out[[r, c]] = v;
    }
    out
}
