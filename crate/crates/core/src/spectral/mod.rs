//! Frequency grids, wavevectors, transforms, and the coefficient-space field.
//!
//! Conventions: samples are produced from coefficients by an unnormalized
//! inverse transform, `φ(x_j) = Σ_h φ̂(h) e^{i k·x_j}`, and the forward
//! transform carries the `1/N`, so `φ̂(0)` is the field mean and
//! `Σ_h |φ̂(h)|²` is the mean square of the samples.

mod fft;
mod field;
mod grid;
pub mod snapshot;
mod waves;

use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use fft::NdFft;
pub use field::{inner, norm, norm_sqr, symmetrize, to_physical, to_spectral, Domain, SpectralField};
pub(crate) use field::{chunked_mean, chunked_sum};
pub use grid::{GridShape, LatticeSpec};
pub use waves::{build_wavevectors, WavevectorTable};

/// Random Hermitian field with independent uniform coefficients in
/// `[-scale, scale]` (real and imaginary parts), symmetrized.
pub fn random_hermitian(domain: &Arc<Domain>, seed: u64, scale: f64) -> SpectralField {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let coeffs = (0..domain.len())
        .map(|_| Complex64::new(rng.gen_range(-scale..=scale), rng.gen_range(-scale..=scale)))
        .collect();
    let field = SpectralField::from_coeffs(domain, coeffs).expect("length matches domain");
    field.symmetrize()
}
