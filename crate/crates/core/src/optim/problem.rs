use num_complex::Complex64;
use rayon::prelude::*;

use crate::models::{Evaluation, MeanMode, Model};
use crate::spectral::chunked_sum;

/// `E = F + G` over coefficient vectors, with `G` handled through its
/// proximal map.
pub trait Composite: Sync {
    /// Whatever one evaluation of `E` produces that gradients can reuse.
    type Eval: Clone + Send;

    fn dim(&self) -> usize;
    fn evaluate(&self, x: &[Complex64]) -> Self::Eval;
    fn energy(&self, e: &Self::Eval) -> f64;
    /// `∇F(x)`, given the evaluation of `x`.
    fn smooth_gradient(&self, x: &[Complex64], e: &Self::Eval) -> Vec<Complex64>;
    fn quadratic_gradient(&self, x: &[Complex64]) -> Vec<Complex64>;
    /// `argmin_z G(z) + ‖z − y‖²/(2α)`.
    fn prox(&self, y: &[Complex64], alpha: f64) -> Vec<Complex64>;

    /// `E(a) − E(b)`.
    fn decrease(&self, _a: &[Complex64], ea: &Self::Eval, _b: &[Complex64], eb: &Self::Eval) -> f64 {
        self.energy(ea) - self.energy(eb)
    }
}

/// With a conserved mean the zero mode is frozen: its gradient components
/// are dropped and the prox leaves it untouched.
impl Composite for Model {
    type Eval = Evaluation;

    fn dim(&self) -> usize {
        self.domain().len()
    }

    fn evaluate(&self, x: &[Complex64]) -> Evaluation {
        Model::evaluate(self, x)
    }

    fn energy(&self, e: &Evaluation) -> f64 {
        e.total()
    }

    fn smooth_gradient(&self, _x: &[Complex64], e: &Evaluation) -> Vec<Complex64> {
        let mut g = self.bulk_gradient_from_samples(&e.samples);
        if self.mean_mode() == MeanMode::Conserved {
            g[0] = Complex64::new(0.0, 0.0);
        }
        g
    }

    fn quadratic_gradient(&self, x: &[Complex64]) -> Vec<Complex64> {
        let mut g = self.interaction_gradient(x);
        if self.mean_mode() == MeanMode::Conserved {
            g[0] = Complex64::new(0.0, 0.0);
        }
        g
    }

    fn prox(&self, y: &[Complex64], alpha: f64) -> Vec<Complex64> {
        let mut out = self.prox_coeffs(y, alpha);
        if self.mean_mode() == MeanMode::Conserved {
            out[0] = y[0];
        }
        out
    }

    fn decrease(&self, a: &[Complex64], ea: &Evaluation, b: &[Complex64], eb: &Evaluation) -> f64 {
        self.energy_decrease(a, ea, b, eb)
    }
}

/// `F(x) = ½ Σ d_i |x_i − c_i|²`, `G(x) = ½ Σ g_i |x_i|²` with `d_i > 0`,
/// `g_i ≥ 0`. Convex, with minimizer `d c / (d + g)`.
#[derive(Debug, Clone)]
pub struct DiagonalQuadratic {
    pub curvature: Vec<f64>,
    pub center: Vec<Complex64>,
    pub penalty: Vec<f64>,
}

impl DiagonalQuadratic {
    pub fn new(curvature: Vec<f64>, center: Vec<Complex64>, penalty: Vec<f64>) -> Self {
        assert_eq!(curvature.len(), center.len());
        assert_eq!(curvature.len(), penalty.len());
        Self { curvature, center, penalty }
    }

    pub fn minimizer(&self) -> Vec<Complex64> {
        self.center
            .iter()
            .zip(self.curvature.iter().zip(&self.penalty))
            .map(|(c, (d, g))| c * (d / (d + g)))
            .collect()
    }

    pub fn min_energy(&self) -> f64 {
        self.energy(&self.evaluate(&self.minimizer()))
    }

    /// Largest curvature of the smooth part.
    pub fn lipschitz(&self) -> f64 {
        self.curvature.iter().cloned().fold(0.0, f64::max)
    }
}

impl Composite for DiagonalQuadratic {
    type Eval = f64;

    fn dim(&self) -> usize {
        self.center.len()
    }

    fn evaluate(&self, x: &[Complex64]) -> f64 {
        let terms: Vec<f64> = x
            .par_iter()
            .zip(self.center.par_iter())
            .zip(self.curvature.par_iter().zip(self.penalty.par_iter()))
            .map(|((x, c), (d, g))| 0.5 * (d * (x - c).norm_sqr() + g * x.norm_sqr()))
            .collect();
        chunked_sum(&terms)
    }

    fn energy(&self, e: &f64) -> f64 {
        *e
    }

    fn smooth_gradient(&self, x: &[Complex64], _e: &f64) -> Vec<Complex64> {
        x.iter().zip(&self.center).zip(&self.curvature).map(|((x, c), d)| (x - c) * *d).collect()
    }

    fn quadratic_gradient(&self, x: &[Complex64]) -> Vec<Complex64> {
        x.iter().zip(&self.penalty).map(|(x, g)| x * *g).collect()
    }

    fn decrease(&self, a: &[Complex64], _ea: &f64, b: &[Complex64], _eb: &f64) -> f64 {
        let terms: Vec<f64> = a
            .par_iter()
            .zip(b.par_iter())
            .zip(self.center.par_iter())
            .zip(self.curvature.par_iter().zip(self.penalty.par_iter()))
            .map(|(((a, b), c), (d, g))| {
                let diff = a - b;
                let sum = a + b;
                let shifted = sum - c * 2.0;
                0.5 * (d * (diff.re * shifted.re + diff.im * shifted.im) + g * (diff.re * sum.re + diff.im * sum.im))
            })
            .collect();
        chunked_sum(&terms)
    }

    fn prox(&self, y: &[Complex64], alpha: f64) -> Vec<Complex64> {
        y.iter().zip(&self.penalty).map(|(y, g)| y / (1.0 + alpha * g)).collect()
    }
}
