//! Steady states and squeezing analysis for a coherently driven two-level
//! atom inside a lossy single-mode cavity.
//!
//! The full atom-cavity density matrix is found from the stationary master
//! equation on a truncated Fock space. From its atomic reduction follow the
//! normally ordered variance of the resonance fluorescence, the atomic
//! purity and related quantities. Parameter sweeps, one-dimensional
//! minimization and dephasing-threshold root finding sit on top, together
//! with an independent free-space (optical Bloch) oracle and the
//! weak-local-oscillator homodyne correlation signal.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bloch_oracle;
pub mod hilbert;
pub mod homodyne;
pub mod linalg;
pub mod liouvillian;
pub mod observables;
pub mod search;
pub mod sparse;
pub mod steady_state;
pub mod sweep_opt;

pub use hilbert::{AtomicState, CMatrix, DensityMatrix, SystemParams};
pub use liouvillian::Liouvillian;
pub use observables::Observables;
pub use steady_state::{SolverConfig, SteadyStateResult, SteadyStateSolver};
