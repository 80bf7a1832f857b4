//! Discretized Landau–Brazovskii and Lifshitz–Petrich energies.
//!
//! Both energies split as `E = G + F`. The interaction part
//! `G = (q/2) Σ_h Λ_h |φ̂(h)|²` is diagonal in coefficient space; the bulk
//! part `F = mean_j f(φ(x_j))` is a quartic polynomial evaluated on the
//! collocation grid. Gradients are taken with respect to the real inner
//! product `Re Σ conj(a)·b` on coefficient vectors.

use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{chunked_mean, chunked_sum, Domain, SpectralField, WavevectorTable};

/// Model family and its physical parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum ModelSpec {
    /// One length scale: `ξ²/2 [(Δ+1)φ]² + τ/2! φ² − γ/3! φ³ + 1/4! φ⁴`.
    #[serde(rename = "lb")]
    LandauBrazovskii { xi: f64, tau: f64, gamma: f64 },
    /// Two length scales: `c/2 [(Δ+q1²)(Δ+q2²)φ]² + ε/2 φ² − κ/3 φ³ + 1/4 φ⁴`.
    #[serde(rename = "lp")]
    LifshitzPetrich { c: f64, eps: f64, kappa: f64, q1: f64, q2: f64 },
}

impl ModelSpec {
    pub fn validate(&self) -> Result<()> {
        let finite = match *self {
            ModelSpec::LandauBrazovskii { xi, tau, gamma } => [xi, tau, gamma, 0.0, 0.0],
            ModelSpec::LifshitzPetrich { c, eps, kappa, q1, q2 } => [c, eps, kappa, q1, q2],
        };
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("model parameters must be finite".into()));
        }
        if !(self.quad_coeff() > 0.0) {
            return Err(Error::Config("interaction coefficient must be positive".into()));
        }
        if let ModelSpec::LifshitzPetrich { q1, q2, .. } = *self {
            if !(0.0 < q1 && q1 < q2) {
                return Err(Error::Config(format!("need 0 < q1 < q2, got q1={q1}, q2={q2}")));
            }
        }
        Ok(())
    }

    /// Coefficient multiplying Λ in G: ξ² (LB) or c (LP).
    pub fn quad_coeff(&self) -> f64 {
        match *self {
            ModelSpec::LandauBrazovskii { xi, .. } => xi * xi,
            ModelSpec::LifshitzPetrich { c, .. } => c,
        }
    }

    /// Bulk density `f(φ) = c2 φ² + c3 φ³ + c4 φ⁴`.
    pub fn bulk_poly(&self) -> BulkPoly {
        match *self {
            ModelSpec::LandauBrazovskii { tau, gamma, .. } => {
                BulkPoly { c2: tau / 2.0, c3: -gamma / 6.0, c4: 1.0 / 24.0 }
            }
            ModelSpec::LifshitzPetrich { eps, kappa, .. } => {
                BulkPoly { c2: eps / 2.0, c3: -kappa / 3.0, c4: 0.25 }
            }
        }
    }

    fn lambda_entry(&self, ksq: f64) -> f64 {
        match *self {
            ModelSpec::LandauBrazovskii { .. } => {
                let a = 1.0 - ksq;
                a * a
            }
            ModelSpec::LifshitzPetrich { q1, q2, .. } => {
                let a = q1 * q1 - ksq;
                let b = q2 * q2 - ksq;
                (a * a) * (b * b)
            }
        }
    }
}

/// Quartic bulk polynomial with no constant or linear term.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BulkPoly {
    pub c2: f64,
    pub c3: f64,
    pub c4: f64,
}

impl BulkPoly {
    #[inline]
    pub fn value(&self, p: f64) -> f64 {
        let p2 = p * p;
        p2 * (self.c2 + p * self.c3 + p2 * self.c4)
    }

    #[inline]
    pub fn derivative(&self, p: f64) -> f64 {
        p * (2.0 * self.c2 + p * (3.0 * self.c3 + 4.0 * self.c4 * p))
    }

    #[inline]
    pub fn second_derivative(&self, p: f64) -> f64 {
        2.0 * self.c2 + p * (6.0 * self.c3 + 12.0 * self.c4 * p)
    }

    /// `f(a) − f(b)` in factored form, accurate relative to `|a − b|`.
    #[inline]
    pub fn difference(&self, a: f64, b: f64) -> f64 {
        self.difference_with(a - b, a, b)
    }

    /// As [`BulkPoly::difference`] with `a − b` supplied by the caller.
    #[inline]
    pub fn difference_with(&self, d: f64, a: f64, b: f64) -> f64 {
        let s = a + b;
        let q = a * a + b * b;
        d * (self.c2 * s + self.c3 * (q + a * b) + self.c4 * s * q)
    }
}

/// Diagonal of the interaction operator, aligned with the wavevector table.
#[derive(Debug, Clone, PartialEq)]
pub struct LambdaTable {
    values: Vec<f64>,
}

impl LambdaTable {
    pub fn values(&self) -> &[f64] {
        &self.values
    }
}

pub fn build_lambda(model: &ModelSpec, waves: &WavevectorTable) -> LambdaTable {
    LambdaTable { values: waves.ksq().iter().map(|&k| model.lambda_entry(k)).collect() }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBreakdown {
    pub interaction: f64,
    pub bulk: f64,
    pub total: f64,
}

/// Treatment of the zero mode `φ̂(0)` (the field mean) during minimization.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MeanMode {
    /// The mean keeps its initial value.
    #[default]
    Conserved,
    /// The mean is a free variable.
    Free,
}

/// A model bound to a domain, with its Λ table precomputed.
#[derive(Debug, Clone)]
pub struct Model {
    spec: ModelSpec,
    domain: Arc<Domain>,
    lambda: Arc<LambdaTable>,
    poly: BulkPoly,
    mean: MeanMode,
}

/// Samples and energy parts of one coefficient vector.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub samples: Vec<f64>,
    pub interaction: f64,
    pub bulk: f64,
}

impl Evaluation {
    pub fn total(&self) -> f64 {
        self.interaction + self.bulk
    }
}

impl Model {
    pub fn new(spec: ModelSpec, domain: &Arc<Domain>) -> Result<Self> {
        spec.validate()?;
        let lambda = Arc::new(build_lambda(&spec, domain.waves()));
        Ok(Self { spec, domain: domain.clone(), lambda, poly: spec.bulk_poly(), mean: MeanMode::default() })
    }

    pub fn with_mean(mut self, mean: MeanMode) -> Self {
        self.mean = mean;
        self
    }

    pub fn mean_mode(&self) -> MeanMode {
        self.mean
    }

    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn domain(&self) -> &Arc<Domain> {
        &self.domain
    }

    pub fn lambda(&self) -> &LambdaTable {
        &self.lambda
    }

    pub fn quad_coeff(&self) -> f64 {
        self.spec.quad_coeff()
    }

    pub fn poly(&self) -> &BulkPoly {
        &self.poly
    }

    fn check_domain(&self, field: &SpectralField) -> Result<()> {
        if !Arc::ptr_eq(field.domain(), &self.domain)
            && field.domain().lattice() != self.domain.lattice()
        {
            return Err(Error::DimensionMismatch("field lives on a different lattice".into()));
        }
        Ok(())
    }

    pub fn interaction_energy(&self, coeffs: &[Complex64]) -> f64 {
        let lam = &self.lambda.values;
        let terms: Vec<f64> = coeffs.par_iter().zip(lam.par_iter()).map(|(c, l)| l * c.norm_sqr()).collect();
        0.5 * self.quad_coeff() * chunked_sum(&terms)
    }

    pub fn bulk_energy(&self, samples: &[f64]) -> f64 {
        chunked_mean(samples.len(), |j| self.poly.value(samples[j]))
    }

    pub fn evaluate(&self, coeffs: &[Complex64]) -> Evaluation {
        let samples = self.domain.synthesize(coeffs);
        let bulk = self.bulk_energy(&samples);
        Evaluation { samples, interaction: self.interaction_energy(coeffs), bulk }
    }

    pub fn energy(&self, field: &SpectralField) -> Result<EnergyBreakdown> {
        self.check_domain(field)?;
        if field.coeffs().iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Numeric("non-finite coefficients".into()));
        }
        let samples = field.to_physical()?;
        let interaction = self.interaction_energy(field.coeffs());
        let bulk = self.bulk_energy(&samples);
        Ok(EnergyBreakdown { interaction, bulk, total: interaction + bulk })
    }

    /// `q Λ_h c(h)`.
    pub fn interaction_gradient(&self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let q = self.quad_coeff();
        coeffs.par_iter().zip(self.lambda.values.par_iter()).map(|(c, l)| c * (q * l)).collect()
    }

    /// Coefficient-space gradient of the bulk energy from collocation samples.
    pub fn bulk_gradient_from_samples(&self, samples: &[f64]) -> Vec<Complex64> {
        let deriv: Vec<f64> = samples.par_iter().map(|&p| self.poly.derivative(p)).collect();
        self.domain.analyze(&deriv)
    }

    /// Applies the bulk Hessian at the state with `samples` to direction `v`.
    pub fn bulk_hessian_apply(&self, samples: &[f64], v: &[Complex64]) -> Vec<Complex64> {
        let vs = self.domain.synthesize(v);
        let prod: Vec<f64> =
            samples.par_iter().zip(vs.par_iter()).map(|(&p, &w)| self.poly.second_derivative(p) * w).collect();
        self.domain.analyze(&prod)
    }

    pub fn grad_interaction(&self, field: &SpectralField) -> Result<SpectralField> {
        self.check_domain(field)?;
        SpectralField::from_coeffs(&self.domain, self.interaction_gradient(field.coeffs()))
    }

    pub fn grad_bulk(&self, field: &SpectralField) -> Result<SpectralField> {
        self.check_domain(field)?;
        let samples = field.to_physical()?;
        let grad = self.bulk_gradient_from_samples(&samples);
        if grad.iter().any(|c| !c.re.is_finite() || !c.im.is_finite()) {
            return Err(Error::Numeric("non-finite bulk gradient".into()));
        }
        SpectralField::from_coeffs(&self.domain, grad)
    }

    pub fn grad_energy(&self, field: &SpectralField) -> Result<SpectralField> {
        let mut g = self.grad_bulk(field)?;
        let q = self.quad_coeff();
        g.coeffs_mut()
            .par_iter_mut()
            .zip(field.coeffs().par_iter().zip(self.lambda.values.par_iter()))
            .for_each(|(g, (c, l))| *g += c * (q * l));
        Ok(g)
    }

    /// `y(h) / (1 + α q Λ_h)`: the exact minimizer of `G(ψ) + ||ψ − y||²/(2α)`.
    pub fn prox_coeffs(&self, y: &[Complex64], alpha: f64) -> Vec<Complex64> {
        let q = self.quad_coeff();
        y.par_iter().zip(self.lambda.values.par_iter()).map(|(c, l)| c / (1.0 + alpha * q * l)).collect()
    }

    pub fn prox_interaction(&self, y: &SpectralField, alpha: f64) -> Result<SpectralField> {
        self.check_domain(y)?;
        if !(alpha >= 0.0) {
            return Err(Error::InvalidArgument(format!("prox step must be non-negative, got {alpha}")));
        }
        SpectralField::from_coeffs(&self.domain, self.prox_coeffs(y.coeffs(), alpha))
    }

    /// `E(a) − E(b)` evaluated term by term in factored form, so the result
    /// stays accurate when `a` and `b` are close and the energies themselves
    /// are large.
    ///
    /// The sample difference is synthesized from the coefficient difference
    /// rather than taken between the two sample sets, at the cost of one
    /// extra transform.
    pub fn energy_decrease(&self, a: &[Complex64], ea: &Evaluation, b: &[Complex64], eb: &Evaluation) -> f64 {
        let q = self.quad_coeff();
        let lam = &self.lambda.values;
        let diff: Vec<Complex64> = a.par_iter().zip(b.par_iter()).map(|(x, y)| x - y).collect();
        let terms: Vec<f64> = diff
            .par_iter()
            .zip(a.par_iter().zip(b.par_iter()))
            .zip(lam.par_iter())
            .map(|((d, (x, y)), l)| {
                let s = x + y;
                l * (d.re * s.re + d.im * s.im)
            })
            .collect();
        let interaction = 0.5 * q * chunked_sum(&terms);
        let ds = self.domain.synthesize(&diff);
        let (sa, sb) = (&ea.samples, &eb.samples);
        let bulk = chunked_mean(sa.len(), |j| self.poly.difference_with(ds[j], sa[j], sb[j]));
        interaction + bulk
    }
}

pub fn build_model(spec: ModelSpec, domain: &Arc<Domain>) -> Result<Model> {
    Model::new(spec, domain)
}
