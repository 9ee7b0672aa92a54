use cavsqueeze::bloch_oracle::{bloch_steady, BlochParams};
use cavsqueeze::hilbert::{cavity_excitation, reduce_atom};
use cavsqueeze::steady_state::SteadyStateSolver;
use cavsqueeze::SystemParams;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn uncoupled_solver_matches_bloch_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let solver = SteadyStateSolver::default();
    for _ in 0..50 {
        let p = SystemParams {
            rabi: rng.random_range(-2.0..2.0),
            delta_a: rng.random_range(-3.0..3.0),
            delta_c: rng.random_range(-5.0..5.0),
            coupling: 0.0,
            kappa: rng.random_range(0.1..3.0),
            gamma: rng.random_range(0.2..2.0),
            gamma_d: rng.random_range(0.0..2.0),
            n_max: rng.random_range(1..4),
        };
        let r = solver.solve(&p).unwrap();
        let full = reduce_atom(&r.rho);
        let oracle = bloch_steady(&BlochParams::from_system(&p)).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                assert!((full.matrix()[i][j] - oracle.matrix()[i][j]).norm() <= 1e-10, "{p:?}");
            }
        }
        assert!(cavity_excitation(&r.rho).abs() <= 1e-10);
    }
}
