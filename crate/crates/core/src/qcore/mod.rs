//! State and operator algebra for n-qubit registers.

mod mixed;
mod pauli;
mod state;

pub use mixed::{eigh, hadamard_transform, hermiticity_deviation, rotate_operator, trace, MixedState, SpectralBlock, Spectrum};
pub use pauli::{site_bit, Letter, PauliOperator, PauliString};
pub use state::{centered_norm_sqr, inner, norm, permute_amplitudes, LinearOp, PureState};

/// Deterministic pseudo-random state used for seeding iterative solvers and tests.
pub fn seeded_vector(dim: usize, seed: u64) -> Vec<crate::C64> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| crate::C64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)).collect()
}
