//! Minimization drivers for composite energies `E = F + G` with smooth `F`
//! and a quadratic `G` whose proximal map is cheap: the fixed-step
//! semi-implicit scheme, classical APG, and adaptive restart APG with a
//! Barzilai-Borwein backtracking line search.

mod problem;
mod solvers;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::inner;

pub use problem::{Composite, DiagonalQuadratic};
pub use solvers::{
    adaptive_apg, adaptive_apg_solve, apg, apg_solve, estimate_step, sis, sis_solve, OptimizerState, RawSolution,
    Solution, StepEstimate, StepRecord,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BbVariant {
    Bb1,
    Bb2,
    Auto,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SolverConfig {
    pub alpha_init: f64,
    pub alpha_min: f64,
    pub alpha_max: f64,
    pub rho: f64,
    pub eta: f64,
    pub delta: f64,
    pub n_max: u64,
    pub grad_tol: f64,
    pub max_iter: u64,
    pub bb_variant: BbVariant,
}

impl Default for SolverConfig {
    fn default() -> Self {
        Self {
            alpha_init: 0.1,
            alpha_min: 1e-8,
            alpha_max: 1e3,
            rho: 0.5,
            eta: 1e-10,
            delta: 1e-10,
            n_max: 50,
            grad_tol: 1e-9,
            max_iter: 5000,
            bb_variant: BbVariant::Auto,
        }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if !(self.alpha_min > 0.0 && self.alpha_min <= self.alpha_init && self.alpha_init <= self.alpha_max) {
            return fail("need 0 < alpha_min <= alpha_init <= alpha_max");
        }
        if !self.alpha_max.is_finite() {
            return fail("alpha_max must be finite");
        }
        if !(self.rho > 0.0 && self.rho < 1.0) {
            return fail("rho must lie in (0, 1)");
        }
        if !(self.delta > 0.0 && self.eta >= self.delta && self.eta.is_finite()) {
            return fail("need eta >= delta > 0");
        }
        if !(self.grad_tol >= 0.0) {
            return fail("grad_tol must be non-negative");
        }
        Ok(())
    }
}

/// One line of a convergence trace, describing iterate `Φ_iter`.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRecord {
    pub iter: u64,
    pub wall_seconds: f64,
    pub energy: f64,
    /// Energy above the lowest energy of the run.
    pub energy_gap: f64,
    /// `‖∇E‖₂` at this iterate.
    pub grad_norm: f64,
    /// Step that produced this iterate (`0` for the initial state).
    pub alpha: f64,
    pub restarted: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Status {
    Converged,
    MaxIter,
    /// No step length down to `alpha_min` gives sufficient decrease.
    Stalled,
}

/// First index whose energy gap is at or below `gap`.
pub fn iterations_to_gap(trace: &[TraceRecord], gap: f64) -> Option<u64> {
    trace.iter().find(|r| r.energy_gap <= gap).map(|r| r.iter)
}

/// Recomputes every gap against `best`, clamping rounding noise at zero.
pub fn regap(trace: &mut [TraceRecord], best: f64) {
    for r in trace {
        r.energy_gap = (r.energy - best).max(0.0);
    }
}

/// Momentum recursion: returns `(t, w)` with `t = (√(4t_prev²+1)+1)/2` and
/// `w = (t_prev − 1)/t`.
pub fn momentum_update(t_prev: f64) -> (f64, f64) {
    let t = ((4.0 * t_prev * t_prev + 1.0).sqrt() + 1.0) / 2.0;
    (t, (t_prev - 1.0) / t)
}

/// Barzilai-Borwein step from `s = x_k − x_{k−1}` and `g = ∇F(x_k) − ∇F(x_{k−1})`.
/// `None` when the curvature estimate is non-positive or not finite.
pub fn bb_step(s: &[num_complex::Complex64], g: &[num_complex::Complex64], variant: BbVariant) -> Option<f64> {
    let sg = inner(s, g);
    if !(sg > 0.0) {
        return None;
    }
    let valid = |v: f64| (v.is_finite() && v > 0.0).then_some(v);
    let bb1 = || valid(inner(s, s) / sg);
    let bb2 = || valid(sg / inner(g, g));
    match variant {
        BbVariant::Bb1 => bb1(),
        BbVariant::Bb2 => bb2(),
        BbVariant::Auto => bb1().or_else(bb2),
    }
}
