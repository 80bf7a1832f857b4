//! Gradient-flow time discretizations and the generalized proximal operator,
//! specialized to operators that are diagonal in coefficient space.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::models::Model;
use crate::spectral::{norm, SpectralField};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowKind {
    AllenCahn,
    ShiftedLaplacian,
}

/// Mobility operator `L_h`, stored by its eigenvalue on every mode.
#[derive(Debug, Clone)]
pub struct FlowOperator {
    kind: FlowKind,
    sigma_shift: f64,
    diag: Vec<f64>,
}

impl FlowOperator {
    /// `L = -I`.
    pub fn allen_cahn(model: &Model) -> Self {
        Self { kind: FlowKind::AllenCahn, sigma_shift: 0.0, diag: vec![-1.0; model.domain().len()] }
    }

    /// `L = Δ - σ I`, eigenvalue `-|k|² - σ`.
    pub fn shifted_laplacian(model: &Model, sigma_shift: f64) -> Result<Self> {
        if !(sigma_shift >= 0.0) || !sigma_shift.is_finite() {
            return Err(Error::InvalidArgument(format!("shift must be non-negative, got {sigma_shift}")));
        }
        let diag = model.domain().waves().ksq().iter().map(|k| -k - sigma_shift).collect();
        Ok(Self { kind: FlowKind::ShiftedLaplacian, sigma_shift, diag })
    }

    pub fn kind(&self) -> FlowKind {
        self.kind
    }

    pub fn sigma_shift(&self) -> f64 {
        self.sigma_shift
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    pub fn is_invertible(&self) -> bool {
        self.diag.iter().all(|&l| l < 0.0)
    }
}

fn check_len(model: &Model, len: usize) -> Result<()> {
    let expected = model.domain().len();
    if len != expected {
        return Err(Error::SizeMismatch { expected, got: len });
    }
    Ok(())
}

/// Minimizer of `G(x) + ½‖x − y‖²_S` for diagonal positive `S`.
pub fn gprox_quadratic(model: &Model, s_diag: &[f64], y: &SpectralField) -> Result<SpectralField> {
    check_len(model, s_diag.len())?;
    check_len(model, y.coeffs().len())?;
    if let Some(bad) = s_diag.iter().find(|&&s| !(s > 0.0)) {
        return Err(Error::InvalidArgument(format!("metric entries must be positive, found {bad}")));
    }
    let q = model.quad_coeff();
    let out = y
        .coeffs()
        .par_iter()
        .zip(s_diag.par_iter().zip(model.lambda().values().par_iter()))
        .map(|(c, (s, l))| c * (s / (s + q * l)))
        .collect();
    SpectralField::from_coeffs(y.domain(), out)
}

/// `Φ + α L (∇F + ∇G)`.
pub fn explicit_step(model: &Model, op: &FlowOperator, phi: &SpectralField, alpha: f64) -> Result<SpectralField> {
    check_len(model, op.diag.len())?;
    let grad = model.grad_energy(phi)?;
    let out = phi
        .coeffs()
        .par_iter()
        .zip(grad.coeffs().par_iter().zip(op.diag.par_iter()))
        .map(|(p, (g, l))| p + g * (alpha * l))
        .collect();
    SpectralField::from_coeffs(phi.domain(), out)
}

/// Solves `(I − α L q Λ) Φ⁺ = Φ + α L ∇F(Φ)` mode by mode.
pub fn semi_implicit_step(
    model: &Model,
    op: &FlowOperator,
    phi: &SpectralField,
    alpha: f64,
) -> Result<SpectralField> {
    stabilized_step(model, op, phi, alpha, 0.0)
}

/// Solves `(I − σαL)(Φ⁺ − Φ) = α L (∇G(Φ⁺) + ∇F(Φ))` mode by mode.
pub fn stabilized_step(
    model: &Model,
    op: &FlowOperator,
    phi: &SpectralField,
    alpha: f64,
    sigma: f64,
) -> Result<SpectralField> {
    check_len(model, op.diag.len())?;
    if !(alpha > 0.0) {
        return Err(Error::InvalidArgument(format!("time step must be positive, got {alpha}")));
    }
    if !(sigma >= 0.0) {
        return Err(Error::InvalidArgument(format!("stabilization must be non-negative, got {sigma}")));
    }
    if sigma > 0.0 && !op.is_invertible() {
        return Err(Error::InvalidArgument("stabilized step needs a strictly negative operator".into()));
    }
    let grad_f = model.grad_bulk(phi)?;
    let q = model.quad_coeff();
    let out = phi
        .coeffs()
        .par_iter()
        .zip(grad_f.coeffs().par_iter())
        .zip(op.diag.par_iter().zip(model.lambda().values().par_iter()))
        .map(|((p, g), (l, lam))| {
            let stab = 1.0 - sigma * alpha * l;
            let pivot = stab - alpha * l * q * lam;
            debug_assert!(pivot > 0.0);
            (p * stab + g * (alpha * l)) / pivot
        })
        .collect();
    SpectralField::from_coeffs(phi.domain(), out)
}

/// Metric `S = (1 − σαL) / (−αL)` of the stabilized scheme in GProx form;
/// the matching input is `Φ − S⁻¹∇F(Φ)`.
pub fn stabilized_metric(op: &FlowOperator, alpha: f64, sigma: f64) -> Result<Vec<f64>> {
    let s: Vec<f64> = op.diag.iter().map(|l| (1.0 - sigma * alpha * l) / (-alpha * l)).collect();
    if s.iter().any(|&v| !(v > 0.0)) {
        return Err(Error::InvalidArgument("induced metric is not positive".into()));
    }
    Ok(s)
}

/// Power-iteration estimate of the spectral radius of the bulk Hessian at
/// `phi`.
pub fn bulk_hessian_radius(model: &Model, phi: &SpectralField, iters: usize, seed: u64) -> Result<f64> {
    let samples = phi.to_physical()?;
    let mut v = crate::spectral::random_hermitian(phi.domain(), seed, 1.0).into_coeffs();
    let mut radius = 0.0;
    for _ in 0..iters {
        let n = norm(&v);
        if n == 0.0 {
            return Ok(0.0);
        }
        v.iter_mut().for_each(|c| *c /= n);
        let w: Vec<Complex64> = model.bulk_hessian_apply(&samples, &v);
        radius = norm(&w);
        v = w;
    }
    Ok(radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;
    use crate::phases::{dg_lattice, double_gyroid_seeds, init_from_modes};
    use crate::spectral::{random_hermitian, Domain};

    fn model(n: usize) -> Model {
        let d = Domain::new(dg_lattice(n).unwrap()).unwrap();
        Model::new(ModelSpec::LandauBrazovskii { xi: 0.1, tau: -2.0, gamma: 2.0 }, &d).unwrap()
    }

    fn residual(model: &Model, s: &[f64], y: &SpectralField, out: &SpectralField) -> f64 {
        let g = model.interaction_gradient(out.coeffs());
        let r: Vec<Complex64> = g
            .iter()
            .zip(s)
            .zip(out.coeffs().iter().zip(y.coeffs()))
            .map(|((g, s), (o, y))| g + (o - y) * *s)
            .collect();
        norm(&r)
    }

    #[test]
    fn gprox_residual_and_prox_match() {
        let m = model(8);
        let y = random_hermitian(m.domain(), 3, 1.0);
        let s: Vec<f64> = random_hermitian(m.domain(), 4, 1.0).coeffs().iter().map(|c| 0.1 + c.norm()).collect();
        let out = gprox_quadratic(&m, &s, &y).unwrap();
        let scale = y.norm() * s.iter().cloned().fold(0.0, f64::max);
        assert!(residual(&m, &s, &y, &out) <= 1e-12 * scale);
        for alpha in [1e-3, 0.1, 10.0] {
            let inv = vec![1.0 / alpha; s.len()];
            let a = gprox_quadratic(&m, &inv, &y).unwrap();
            let b = m.prox_interaction(&y, alpha).unwrap();
            let diff: Vec<Complex64> = a.coeffs().iter().zip(b.coeffs()).map(|(x, y)| x - y).collect();
            assert!(norm(&diff) <= 1e-14 * y.norm());
        }
        let mut bad = s.clone();
        bad[5] = 0.0;
        assert!(gprox_quadratic(&m, &bad, &y).is_err());
    }

    #[test]
    fn explicit_step_is_gradient_descent_for_allen_cahn() {
        let m = model(8);
        let op = FlowOperator::allen_cahn(&m);
        let phi = random_hermitian(m.domain(), 5, 0.1);
        assert_eq!(explicit_step(&m, &op, &phi, 0.0).unwrap(), phi);
        let step = explicit_step(&m, &op, &phi, 0.05).unwrap();
        let g = m.grad_energy(&phi).unwrap();
        for ((s, p), g) in step.coeffs().iter().zip(phi.coeffs()).zip(g.coeffs()) {
            assert!((s - (p - g * 0.05)).norm() < 1e-15);
        }
        assert_eq!(explicit_step(&m, &op, &SpectralField::zeros(m.domain()), 0.3).unwrap().norm(), 0.0);
    }

    #[test]
    fn semi_implicit_equals_prox_of_gradient_step() {
        let m = model(8);
        let op = FlowOperator::allen_cahn(&m);
        for seed in 0..4 {
            let phi = random_hermitian(m.domain(), seed, 0.2);
            for alpha in [1e-3, 0.1, 10.0] {
                let si = semi_implicit_step(&m, &op, &phi, alpha).unwrap();
                let gf = m.grad_bulk(&phi).unwrap();
                let y: Vec<Complex64> = phi.coeffs().iter().zip(gf.coeffs()).map(|(p, g)| p - g * alpha).collect();
                let pg = m.prox_coeffs(&y, alpha);
                let diff: Vec<Complex64> = si.coeffs().iter().zip(&pg).map(|(a, b)| a - b).collect();
                assert!(norm(&diff) <= 1e-12 * si.norm().max(1.0));
                assert!(si.is_hermitian());
            }
        }
    }

    #[test]
    fn scalar_semi_implicit_example() {
        // one mode with Λ = 1, q = 1, L = -1, α = 1, Φ = 1, ∇F = 0
        let (l, q, lam, alpha, phi) = (-1.0f64, 1.0, 1.0, 1.0, 1.0);
        let out = (phi * 1.0 + 0.0 * alpha * l) / (1.0 - alpha * l * q * lam);
        assert_eq!(out, 0.5);
    }

    #[test]
    fn stabilized_reduces_and_matches_gprox() {
        let m = model(8);
        let op = FlowOperator::allen_cahn(&m);
        let phi = random_hermitian(m.domain(), 11, 0.2);
        let a = semi_implicit_step(&m, &op, &phi, 0.3).unwrap();
        let b = stabilized_step(&m, &op, &phi, 0.3, 0.0).unwrap();
        assert!(a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| x.re.to_bits() == y.re.to_bits()
            && x.im.to_bits() == y.im.to_bits()));

        let (alpha, sigma) = (0.3, 1.0);
        let st = stabilized_step(&m, &op, &phi, alpha, sigma).unwrap();
        let s = stabilized_metric(&op, alpha, sigma).unwrap();
        assert!((s[0] - (1.0 + sigma * alpha) / alpha).abs() < 1e-15);
        let gf = m.grad_bulk(&phi).unwrap();
        let shift = alpha / (1.0 + sigma * alpha);
        let y: Vec<Complex64> = phi.coeffs().iter().zip(gf.coeffs()).map(|(p, g)| p - g * shift).collect();
        let y = SpectralField::from_coeffs(m.domain(), y).unwrap();
        let gp = gprox_quadratic(&m, &s, &y).unwrap();
        let diff: Vec<Complex64> = st.coeffs().iter().zip(gp.coeffs()).map(|(a, b)| a - b).collect();
        assert!(norm(&diff) <= 1e-12 * st.norm());
        assert!(residual(&m, &s, &y, &st) <= 1e-12 * y.norm() * s[0]);
    }

    #[test]
    fn shifted_laplacian_requirements() {
        let m = model(8);
        assert!(FlowOperator::shifted_laplacian(&m, -1.0).is_err());
        let op0 = FlowOperator::shifted_laplacian(&m, 0.0).unwrap();
        assert!(!op0.is_invertible());
        let phi = random_hermitian(m.domain(), 1, 0.1);
        assert!(stabilized_step(&m, &op0, &phi, 0.1, 1.0).is_err());
        let op = FlowOperator::shifted_laplacian(&m, 0.5).unwrap();
        assert!(op.is_invertible());
        let out = stabilized_step(&m, &op, &phi, 0.1, 1.0).unwrap();
        assert!(out.is_hermitian());
        // the zero mode of the shifted operator has eigenvalue -σ
        assert_eq!(op.diag()[0], -0.5);
    }

    #[test]
    fn stationary_input_is_fixed() {
        let m = model(8);
        let op = FlowOperator::allen_cahn(&m);
        let z = SpectralField::zeros(m.domain());
        assert_eq!(stabilized_step(&m, &op, &z, 0.2, 2.0).unwrap(), z);
        assert_eq!(semi_implicit_step(&m, &op, &z, 0.2).unwrap(), z);
    }

    #[test]
    fn semi_implicit_dissipates_below_hessian_bound() {
        let m = model(16);
        let op = FlowOperator::allen_cahn(&m);
        let init = init_from_modes(&double_gyroid_seeds(), m.domain(), 0.3).unwrap();
        let run = |alpha: f64| {
            let mut phi = init.clone();
            let mut trajectory = vec![phi.clone()];
            for _ in 0..200 {
                phi = semi_implicit_step(&m, &op, &phi, alpha).unwrap();
                trajectory.push(phi.clone());
            }
            trajectory
        };
        let mut bound = bulk_hessian_radius(&m, &init, 40, 1).unwrap();
        for s in run(1.0 / bound).iter().step_by(10) {
            bound = bound.max(bulk_hessian_radius(&m, s, 40, 2).unwrap());
        }
        let trajectory = run(1.0 / bound);
        let evals: Vec<_> = trajectory.iter().map(|f| m.evaluate(f.coeffs())).collect();
        for (f, e) in trajectory.windows(2).zip(evals.windows(2)) {
            let dec = m.energy_decrease(f[0].coeffs(), &e[0], f[1].coeffs(), &e[1]);
            assert!(dec >= -1e-15 * e[0].total().abs(), "energy rose by {}", -dec);
        }
        assert!(evals[200].total() < evals[0].total());
    }
}
