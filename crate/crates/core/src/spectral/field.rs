use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::spectral::fft::NdFft;
use crate::spectral::grid::LatticeSpec;
use crate::spectral::waves::{build_wavevectors, WavevectorTable};

const CHUNK: usize = 1 << 14;

/// A lattice together with everything derived from it: wavevectors, the
/// conjugate-index table, and transform plans. Shared read-only by fields,
/// models, and solvers.
#[derive(Debug)]
pub struct Domain {
    lattice: LatticeSpec,
    waves: WavevectorTable,
    mirror: Vec<u32>,
    fft: NdFft,
}

impl Domain {
    pub fn new(lattice: LatticeSpec) -> Result<Arc<Self>> {
        let waves = build_wavevectors(&lattice)?;
        let mirror = lattice.grid().mirror_table();
        let fft = NdFft::new(lattice.grid().dims());
        Ok(Arc::new(Self { lattice, waves, mirror, fft }))
    }

    pub fn lattice(&self) -> &LatticeSpec {
        &self.lattice
    }

    pub fn waves(&self) -> &WavevectorTable {
        &self.waves
    }

    pub fn len(&self) -> usize {
        self.lattice.grid().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of `-h`, or `None` on a Nyquist row.
    #[inline]
    pub fn mirror(&self, flat: usize) -> Option<usize> {
        match self.mirror[flat] {
            u32::MAX => None,
            m => Some(m as usize),
        }
    }

    /// Collocation samples `φ(x_j) = Σ_h φ̂(h) e^{i k·x_j}` (real part only).
    pub fn synthesize(&self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut buf = coeffs.to_vec();
        self.fft.inverse(&mut buf);
        buf.par_iter().map(|c| c.re).collect()
    }

    /// Same as [`Domain::synthesize`] but keeps the imaginary residue.
    pub(crate) fn synthesize_complex(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut buf = coeffs.to_vec();
        self.fft.inverse(&mut buf);
        buf
    }

    /// Coefficients `φ̂(h) = (1/N) Σ_j φ(x_j) e^{-i k·x_j}`, symmetrized.
    pub fn analyze(&self, samples: &[f64]) -> Vec<Complex64> {
        let mut buf: Vec<Complex64> = samples.par_iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.fft.forward(&mut buf);
        let scale = 1.0 / self.len() as f64;
        buf.par_iter_mut().for_each(|c| *c *= scale);
        self.symmetrize_in_place(&mut buf);
        buf
    }

    /// Enforces `c(-h) = conj(c(h))` by averaging and zeroes Nyquist rows.
    pub fn symmetrize_in_place(&self, coeffs: &mut [Complex64]) {
        let src = coeffs.to_vec();
        coeffs.par_chunks_mut(CHUNK).enumerate().for_each(|(ci, chunk)| {
            let offset = ci * CHUNK;
            for (i, c) in chunk.iter_mut().enumerate() {
                *c = match self.mirror[offset + i] {
                    u32::MAX => Complex64::new(0.0, 0.0),
                    m => (src[offset + i] + src[m as usize].conj()) * 0.5,
                };
            }
        });
    }

    /// Largest deviation from Hermitian symmetry (including Nyquist content).
    pub fn hermitian_defect(&self, coeffs: &[Complex64]) -> f64 {
        coeffs
            .par_iter()
            .enumerate()
            .map(|(i, c)| match self.mirror[i] {
                u32::MAX => c.norm(),
                m => (c - coeffs[m as usize].conj()).norm(),
            })
            .reduce(|| 0.0, f64::max)
    }
}

/// Fourier coefficients of a real field on a [`Domain`].
#[derive(Debug, Clone)]
pub struct SpectralField {
    coeffs: Vec<Complex64>,
    domain: Arc<Domain>,
}

impl PartialEq for SpectralField {
    fn eq(&self, other: &Self) -> bool {
        self.coeffs == other.coeffs && self.domain.lattice() == other.domain.lattice()
    }
}

impl SpectralField {
    pub fn zeros(domain: &Arc<Domain>) -> Self {
        Self { coeffs: vec![Complex64::new(0.0, 0.0); domain.len()], domain: domain.clone() }
    }

    /// Wraps raw coefficients without symmetrizing them.
    pub fn from_coeffs(domain: &Arc<Domain>, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != domain.len() {
            return Err(Error::SizeMismatch { expected: domain.len(), got: coeffs.len() });
        }
        Ok(Self { coeffs, domain: domain.clone() })
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [Complex64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn coeff(&self, h: &[i64]) -> Option<Complex64> {
        let flat = self.domain.lattice().grid().flat_index(h)?;
        Some(self.coeffs[flat])
    }

    /// Coefficient ℓ² norm, equal to the root-mean-square of the field.
    pub fn norm(&self) -> f64 {
        norm(&self.coeffs)
    }

    pub fn is_hermitian(&self) -> bool {
        self.domain.hermitian_defect(&self.coeffs) == 0.0
    }

    /// Real collocation samples. Fails when the imaginary residue exceeds
    /// `1e-12 * ||coeffs||`.
    pub fn to_physical(&self) -> Result<Vec<f64>> {
        let full = self.domain.synthesize_complex(&self.coeffs);
        let limit = 1e-12 * self.norm();
        let residue = full.par_iter().map(|c| c.im.abs()).reduce(|| 0.0, f64::max);
        if residue > limit {
            return Err(Error::Symmetry { residue, limit });
        }
        Ok(full.into_iter().map(|c| c.re).collect())
    }

    pub fn to_spectral(domain: &Arc<Domain>, samples: &[f64]) -> Result<Self> {
        if samples.len() != domain.len() {
            return Err(Error::SizeMismatch { expected: domain.len(), got: samples.len() });
        }
        Ok(Self { coeffs: domain.analyze(samples), domain: domain.clone() })
    }

    pub fn symmetrize(&self) -> Self {
        let mut out = self.clone();
        self.domain.symmetrize_in_place(&mut out.coeffs);
        out
    }
}

pub fn to_physical(field: &SpectralField) -> Result<Vec<f64>> {
    field.to_physical()
}

pub fn to_spectral(samples: &[f64], domain: &Arc<Domain>) -> Result<SpectralField> {
    SpectralField::to_spectral(domain, samples)
}

pub fn symmetrize(field: &SpectralField) -> SpectralField {
    field.symmetrize()
}

/// Real inner product `Re Σ conj(a)·b`.
pub fn inner(a: &[Complex64], b: &[Complex64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    let partial: Vec<f64> = a
        .par_chunks(CHUNK)
        .zip(b.par_chunks(CHUNK))
        .map(|(x, y)| x.iter().zip(y).map(|(p, q)| p.re * q.re + p.im * q.im).sum())
        .collect();
    partial.iter().sum()
}

pub fn norm_sqr(a: &[Complex64]) -> f64 {
    inner(a, a)
}

pub fn norm(a: &[Complex64]) -> f64 {
    norm_sqr(a).sqrt()
}

/// Deterministic chunked sum: fixed chunk boundaries, sequential combine.
pub(crate) fn chunked_sum(values: &[f64]) -> f64 {
    let partial: Vec<f64> = values.par_chunks(CHUNK).map(|c| c.iter().sum::<f64>()).collect();
    partial.iter().sum()
}

/// Deterministic chunked mean of `f(i)` over `0..len`.
pub(crate) fn chunked_mean<F>(len: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync,
{
    let chunks = len.div_ceil(CHUNK);
    let partial: Vec<f64> = (0..chunks)
        .into_par_iter()
        .map(|c| (c * CHUNK..((c + 1) * CHUNK).min(len)).map(&f).sum::<f64>())
        .collect();
    partial.iter().sum::<f64>() / len as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::GridShape;
    use crate::spectral::random_hermitian;

    fn domain(dims: Vec<usize>) -> Arc<Domain> {
        let g = GridShape::new(dims).unwrap();
        Domain::new(LatticeSpec::cubic(1.0, g).unwrap()).unwrap()
    }

    #[test]
    fn two_mode_cosine() {
        let d = domain(vec![8, 8]);
        let mut f = SpectralField::zeros(&d);
        let g = d.lattice().grid().clone();
        f.coeffs_mut()[g.flat_index(&[1, 2]).unwrap()] = Complex64::new(0.5, 0.0);
        f.coeffs_mut()[g.flat_index(&[-1, -2]).unwrap()] = Complex64::new(0.5, 0.0);
        let s = f.to_physical().unwrap();
        for flat in 0..g.len() {
            let j = [flat / 8, flat % 8];
            let phase = std::f64::consts::TAU * (j[0] as f64 / 8.0 + 2.0 * j[1] as f64 / 8.0);
            assert!((s[flat] - phase.cos()).abs() < 1e-14);
        }
        let back = SpectralField::to_spectral(&d, &s).unwrap();
        for (flat, c) in back.coeffs().iter().enumerate() {
            let want = if f.coeffs()[flat].re != 0.0 { 0.5 } else { 0.0 };
            assert!((c - Complex64::new(want, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn zero_and_constant_fields() {
        let d = domain(vec![4, 6]);
        let zero = SpectralField::zeros(&d);
        assert!(zero.to_physical().unwrap().iter().all(|&v| v == 0.0));
        let c = SpectralField::to_spectral(&d, &vec![1.75; d.len()]).unwrap();
        assert!((c.coeffs()[0].re - 1.75).abs() < 1e-15);
        assert!(c.coeffs()[1..].iter().all(|v| v.norm() < 1e-15));
    }

    #[test]
    fn asymmetric_field_fails_physical_check() {
        let d = domain(vec![4, 4]);
        let mut f = SpectralField::zeros(&d);
        f.coeffs_mut()[1] = Complex64::new(1.0, 0.0);
        assert!(matches!(f.to_physical(), Err(Error::Symmetry { .. })));
    }

    #[test]
    fn size_mismatch_is_reported() {
        let d = domain(vec![4, 4]);
        assert!(matches!(
            SpectralField::to_spectral(&d, &[0.0; 15]),
            Err(Error::SizeMismatch { expected: 16, got: 15 })
        ));
    }

    #[test]
    fn symmetrize_single_mode_splits_into_pair() {
        let d = domain(vec![6, 6]);
        let g = d.lattice().grid().clone();
        let mut f = SpectralField::zeros(&d);
        let h0 = g.flat_index(&[1, -2]).unwrap();
        f.coeffs_mut()[h0] = Complex64::new(1.0, 0.0);
        let s = f.symmetrize();
        assert_eq!(s.coeffs()[h0], Complex64::new(0.5, 0.0));
        assert_eq!(s.coeffs()[g.flat_index(&[-1, 2]).unwrap()], Complex64::new(0.5, 0.0));
        assert!(s.is_hermitian());
    }

    #[test]
    fn symmetrize_fixes_hermitian_fields() {
        let d = domain(vec![8, 8, 8]);
        let f = random_hermitian(&d, 3, 1.0);
        assert_eq!(f.symmetrize(), f);
    }

    #[test]
    fn roundtrip_and_parseval_on_4d() {
        let d = domain(vec![6, 4, 6, 4]);
        let f = random_hermitian(&d, 11, 1.0);
        let s = f.to_physical().unwrap();
        let back = SpectralField::to_spectral(&d, &s).unwrap();
        let err: f64 = back.coeffs().iter().zip(f.coeffs()).map(|(a, b)| (a - b).norm_sqr()).sum();
        assert!(err.sqrt() <= 1e-12 * f.norm());
        let ms = s.iter().map(|v| v * v).sum::<f64>() / s.len() as f64;
        assert!((ms - norm_sqr(f.coeffs())).abs() <= 1e-12 * ms);
    }
}
