use std::time::Instant;

use num_complex::Complex64;
use rayon::prelude::*;

use super::{bb_step, momentum_update, Composite, SolverConfig, Status, TraceRecord};
use crate::error::{Error, Result};
use crate::models::Model;
use crate::spectral::{norm, norm_sqr, SpectralField};

/// One accepted transition `Φ_k → Φ_{k+1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    /// `E(Φ_k) − E(Φ_{k+1})`, evaluated in factored form.
    pub decrease: f64,
    /// `‖Φ_{k+1} − Φ_k‖²`.
    pub step_sqr: f64,
}

/// Driver output on raw coefficient vectors.
#[derive(Debug, Clone)]
pub struct RawSolution {
    pub x: Vec<Complex64>,
    pub energy: f64,
    pub grad_norm: f64,
    pub status: Status,
    pub iterations: u64,
    pub restarts: u64,
    pub trace: Vec<TraceRecord>,
    pub steps: Vec<StepRecord>,
}

#[derive(Debug, Clone)]
pub struct Solution {
    pub field: SpectralField,
    pub energy: f64,
    pub grad_norm: f64,
    pub status: Status,
    pub iterations: u64,
    pub restarts: u64,
    pub trace: Vec<TraceRecord>,
    pub steps: Vec<StepRecord>,
}

/// Iteration state of the adaptive method.
#[derive(Debug, Clone)]
pub struct OptimizerState {
    pub phi_curr: Vec<Complex64>,
    pub phi_prev: Vec<Complex64>,
    pub t: f64,
    pub alpha: f64,
    pub k_ada: u64,
    pub best_energy: f64,
    pub iter: u64,
}

/// Accepted line-search step.
#[derive(Debug, Clone)]
pub struct StepEstimate<E> {
    pub alpha: f64,
    pub next: Vec<Complex64>,
    pub eval: E,
    /// `E(Ψ) − E(next)`.
    pub decrease: f64,
}

/// Records iterates and turns accumulated decreases into energy gaps.
struct Tracer {
    start: Instant,
    records: Vec<TraceRecord>,
    cumulative: Vec<f64>,
    steps: Vec<StepRecord>,
}

impl Tracer {
    fn new() -> Self {
        Self { start: Instant::now(), records: Vec::new(), cumulative: Vec::new(), steps: Vec::new() }
    }

    fn initial(&mut self, energy: f64, grad_norm: f64) {
        self.push(0, energy, 0.0, grad_norm, 0.0, false);
        self.steps.clear();
    }

    fn step(&mut self, iter: u64, energy: f64, step: StepRecord, grad_norm: f64, alpha: f64, restarted: bool) {
        self.push(iter, energy, step.decrease, grad_norm, alpha, restarted);
        self.steps.push(step);
    }

    fn push(&mut self, iter: u64, energy: f64, decrease: f64, grad_norm: f64, alpha: f64, restarted: bool) {
        let prev = self.cumulative.last().copied().unwrap_or(0.0);
        self.cumulative.push(prev + decrease);
        self.records.push(TraceRecord {
            iter,
            wall_seconds: self.start.elapsed().as_secs_f64(),
            energy,
            energy_gap: 0.0,
            grad_norm,
            alpha,
            restarted,
        });
    }

    /// Gaps are taken from summed per-step decreases rather than from
    /// differences of absolute energies, which lose all digits near the end.
    fn finish(mut self) -> (Vec<TraceRecord>, Vec<StepRecord>) {
        let best = self.cumulative.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        for (r, c) in self.records.iter_mut().zip(&self.cumulative) {
            r.energy_gap = (best - c).max(0.0);
        }
        (self.records, self.steps)
    }
}

fn gradient_step(x: &[Complex64], g: &[Complex64], alpha: f64) -> Vec<Complex64> {
    x.par_iter().zip(g.par_iter()).map(|(x, g)| x - g * alpha).collect()
}

fn difference(a: &[Complex64], b: &[Complex64]) -> Vec<Complex64> {
    a.par_iter().zip(b.par_iter()).map(|(a, b)| a - b).collect()
}

fn distance_sqr(a: &[Complex64], b: &[Complex64]) -> f64 {
    norm_sqr(&difference(a, b))
}

fn extrapolate(x: &[Complex64], x_prev: &[Complex64], w: f64) -> Vec<Complex64> {
    x.par_iter().zip(x_prev.par_iter()).map(|(a, b)| a * (1.0 + w) - b * w).collect()
}

fn full_grad_norm<P: Composite>(p: &P, x: &[Complex64], smooth: &[Complex64]) -> f64 {
    let quad = p.quadratic_gradient(x);
    let total: Vec<Complex64> = smooth.par_iter().zip(quad.par_iter()).map(|(a, b)| a + b).collect();
    norm(&total)
}

fn check_inputs<P: Composite>(p: &P, x0: &[Complex64], cfg: &SolverConfig) -> Result<()> {
    cfg.validate()?;
    if x0.len() != p.dim() {
        return Err(Error::SizeMismatch { expected: p.dim(), got: x0.len() });
    }
    Ok(())
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::InvalidArgument(format!("step size must be positive, got {alpha}")));
    }
    Ok(())
}

fn diverged(iter: u64, tracer: Tracer) -> Error {
    Error::Diverged { iter, trace: tracer.finish().0 }
}

/// Backtracking from `beta0` (clamped to `[alpha_min, alpha_max]`) until the
/// prox-gradient step from `psi` decreases the energy by at least
/// `η‖Ψ − Ψ⁺‖²`. `None` once the step would drop below `alpha_min`.
pub fn estimate_step<P: Composite>(
    p: &P,
    psi: &[Complex64],
    psi_eval: &P::Eval,
    psi_grad: &[Complex64],
    beta0: f64,
    cfg: &SolverConfig,
) -> Option<StepEstimate<P::Eval>> {
    let mut beta = if beta0.is_finite() { beta0.clamp(cfg.alpha_min, cfg.alpha_max) } else { cfg.alpha_init };
    loop {
        let next = p.prox(&gradient_step(psi, psi_grad, beta), beta);
        let eval = p.evaluate(&next);
        if p.energy(&eval).is_finite() {
            let decrease = p.decrease(psi, psi_eval, &next, &eval);
            if decrease >= cfg.eta * distance_sqr(psi, &next) {
                return Some(StepEstimate { alpha: beta, next, eval, decrease });
            }
        }
        beta *= cfg.rho;
        if beta < cfg.alpha_min {
            return None;
        }
    }
}

/// Fixed-step semi-implicit iteration `x⁺ = prox_α(x − α∇F(x))`.
pub fn sis<P: Composite>(p: &P, x0: Vec<Complex64>, alpha: f64, cfg: &SolverConfig) -> Result<RawSolution> {
    check_inputs(p, &x0, cfg)?;
    check_alpha(alpha)?;
    let mut tracer = Tracer::new();
    let mut x = x0;
    let mut ex = p.evaluate(&x);
    if !p.energy(&ex).is_finite() {
        return Err(diverged(0, tracer));
    }
    let mut gx = p.smooth_gradient(&x, &ex);
    let mut gn = full_grad_norm(p, &x, &gx);
    tracer.initial(p.energy(&ex), gn);
    let mut iter = 0;
    let status = loop {
        if gn <= cfg.grad_tol {
            break Status::Converged;
        }
        if iter >= cfg.max_iter {
            break Status::MaxIter;
        }
        let y = p.prox(&gradient_step(&x, &gx, alpha), alpha);
        let ey = p.evaluate(&y);
        iter += 1;
        if !p.energy(&ey).is_finite() {
            tracer.push(iter, p.energy(&ey), f64::NAN, f64::NAN, alpha, false);
            return Err(diverged(iter, tracer));
        }
        let step = StepRecord { decrease: p.decrease(&x, &ex, &y, &ey), step_sqr: distance_sqr(&x, &y) };
        x = y;
        ex = ey;
        gx = p.smooth_gradient(&x, &ex);
        gn = full_grad_norm(p, &x, &gx);
        tracer.step(iter, p.energy(&ex), step, gn, alpha, false);
    };
    let (trace, steps) = tracer.finish();
    Ok(RawSolution {
        energy: p.energy(&ex),
        x,
        grad_norm: gn,
        status,
        iterations: iter,
        restarts: 0,
        trace,
        steps,
    })
}

/// Classical accelerated proximal gradient with a fixed step and no restart.
pub fn apg<P: Composite>(p: &P, x0: Vec<Complex64>, alpha: f64, cfg: &SolverConfig) -> Result<RawSolution> {
    check_inputs(p, &x0, cfg)?;
    check_alpha(alpha)?;
    let mut tracer = Tracer::new();
    let mut x_prev = x0.clone();
    let mut x = x0;
    let mut ex = p.evaluate(&x);
    if !p.energy(&ex).is_finite() {
        return Err(diverged(0, tracer));
    }
    let mut gx = p.smooth_gradient(&x, &ex);
    let mut gn = full_grad_norm(p, &x, &gx);
    tracer.initial(p.energy(&ex), gn);
    let mut t = 1.0;
    let mut iter = 0;
    let status = loop {
        if gn <= cfg.grad_tol {
            break Status::Converged;
        }
        if iter >= cfg.max_iter {
            break Status::MaxIter;
        }
        let (t_next, w) = momentum_update(t);
        t = t_next;
        let y = if w == 0.0 {
            p.prox(&gradient_step(&x, &gx, alpha), alpha)
        } else {
            let psi = extrapolate(&x, &x_prev, w);
            let epsi = p.evaluate(&psi);
            let gpsi = p.smooth_gradient(&psi, &epsi);
            p.prox(&gradient_step(&psi, &gpsi, alpha), alpha)
        };
        let ey = p.evaluate(&y);
        iter += 1;
        if !p.energy(&ey).is_finite() {
            tracer.push(iter, p.energy(&ey), f64::NAN, f64::NAN, alpha, false);
            return Err(diverged(iter, tracer));
        }
        let step = StepRecord { decrease: p.decrease(&x, &ex, &y, &ey), step_sqr: distance_sqr(&x, &y) };
        x_prev = std::mem::replace(&mut x, y);
        ex = ey;
        gx = p.smooth_gradient(&x, &ex);
        gn = full_grad_norm(p, &x, &gx);
        tracer.step(iter, p.energy(&ex), step, gn, alpha, false);
    };
    let (trace, steps) = tracer.finish();
    Ok(RawSolution {
        energy: p.energy(&ex),
        x,
        grad_norm: gn,
        status,
        iterations: iter,
        restarts: 0,
        trace,
        steps,
    })
}

/// Adaptive restart APG with a Barzilai-Borwein backtracking line search.
///
/// A momentum step is accepted only if it decreases the energy from the
/// current iterate by `δ‖Φ_k − Ψ_{k+1}‖²` and fewer than `n_max` iterations
/// have passed since the last restart. Otherwise the momentum is reset and a
/// plain prox-gradient step with its own line search is taken from `Φ_k`.
pub fn adaptive_apg<P: Composite>(p: &P, x0: Vec<Complex64>, cfg: &SolverConfig) -> Result<RawSolution> {
    check_inputs(p, &x0, cfg)?;
    let mut tracer = Tracer::new();
    let mut ex = p.evaluate(&x0);
    if !p.energy(&ex).is_finite() {
        return Err(diverged(0, tracer));
    }
    let mut state = OptimizerState {
        phi_prev: x0.clone(),
        phi_curr: x0,
        t: 1.0,
        alpha: cfg.alpha_init,
        k_ada: 0,
        best_energy: p.energy(&ex),
        iter: 0,
    };
    let mut gx = p.smooth_gradient(&state.phi_curr, &ex);
    let mut gx_prev: Option<Vec<Complex64>> = None;
    let mut gn = full_grad_norm(p, &state.phi_curr, &gx);
    tracer.initial(state.best_energy, gn);
    let mut restarts = 0;

    let status = loop {
        if gn <= cfg.grad_tol {
            break Status::Converged;
        }
        if state.iter >= cfg.max_iter {
            break Status::MaxIter;
        }
        let k = state.iter;
        let x = &state.phi_curr;

        // BB estimate along the last iterate pair, then the last accepted step.
        let fallback_beta = gx_prev
            .as_ref()
            .and_then(|gp| bb_step(&difference(x, &state.phi_prev), &difference(&gx, gp), cfg.bb_variant))
            .unwrap_or(state.alpha);

        let (t_next, w) = momentum_update(state.t);
        state.t = t_next;
        let trial = if w == 0.0 {
            estimate_step(p, x, &ex, &gx, fallback_beta, cfg)
        } else {
            let psi = extrapolate(x, &state.phi_prev, w);
            let epsi = p.evaluate(&psi);
            let gpsi = p.smooth_gradient(&psi, &epsi);
            let beta0 = bb_step(&difference(&psi, x), &difference(&gpsi, &gx), cfg.bb_variant).unwrap_or(fallback_beta);
            estimate_step(p, &psi, &epsi, &gpsi, beta0, cfg)
        };

        let within_window = k - state.k_ada <= cfg.n_max;
        let accepted = trial.and_then(|s| {
            let dec = if w == 0.0 { s.decrease } else { p.decrease(x, &ex, &s.next, &s.eval) };
            (dec >= cfg.delta * distance_sqr(x, &s.next)).then_some((s, dec))
        });
        let (step, dec, restarted) = match accepted {
            Some((s, dec)) if within_window => (s, dec, false),
            Some((s, dec)) if w == 0.0 => (s, dec, true),
            _ => match estimate_step(p, x, &ex, &gx, fallback_beta, cfg) {
                Some(s) => {
                    let dec = s.decrease;
                    (s, dec, true)
                }
                None => break Status::Stalled,
            },
        };
        if restarted {
            state.k_ada = k;
            state.t = 1.0;
            restarts += 1;
        }
        let record = StepRecord { decrease: dec, step_sqr: distance_sqr(x, &step.next) };
        debug_assert!(record.decrease >= cfg.delta.min(cfg.eta) * record.step_sqr);

        state.phi_prev = std::mem::replace(&mut state.phi_curr, step.next);
        gx_prev = Some(std::mem::replace(&mut gx, Vec::new()));
        ex = step.eval;
        gx = p.smooth_gradient(&state.phi_curr, &ex);
        gn = full_grad_norm(p, &state.phi_curr, &gx);
        state.alpha = step.alpha;
        state.iter += 1;
        let energy = p.energy(&ex);
        state.best_energy = state.best_energy.min(energy);
        tracer.step(state.iter, energy, record, gn, step.alpha, restarted);
    };
    let (trace, steps) = tracer.finish();
    Ok(RawSolution {
        energy: p.energy(&ex),
        x: state.phi_curr,
        grad_norm: gn,
        status,
        iterations: state.iter,
        restarts,
        trace,
        steps,
    })
}

fn check_field(model: &Model, phi0: &SpectralField) -> Result<()> {
    if phi0.domain().lattice() != model.domain().lattice() {
        return Err(Error::DimensionMismatch("initial field lives on a different lattice".into()));
    }
    Ok(())
}

fn wrap(model: &Model, raw: RawSolution) -> Result<Solution> {
    Ok(Solution {
        field: SpectralField::from_coeffs(model.domain(), raw.x)?,
        energy: raw.energy,
        grad_norm: raw.grad_norm,
        status: raw.status,
        iterations: raw.iterations,
        restarts: raw.restarts,
        trace: raw.trace,
        steps: raw.steps,
    })
}

pub fn sis_solve(model: &Model, phi0: &SpectralField, alpha: f64, cfg: &SolverConfig) -> Result<Solution> {
    check_field(model, phi0)?;
    wrap(model, sis(model, phi0.coeffs().to_vec(), alpha, cfg)?)
}

pub fn apg_solve(model: &Model, phi0: &SpectralField, alpha: f64, cfg: &SolverConfig) -> Result<Solution> {
    check_field(model, phi0)?;
    wrap(model, apg(model, phi0.coeffs().to_vec(), alpha, cfg)?)
}

pub fn adaptive_apg_solve(model: &Model, phi0: &SpectralField, cfg: &SolverConfig) -> Result<Solution> {
    check_field(model, phi0)?;
    wrap(model, adaptive_apg(model, phi0.coeffs().to_vec(), cfg)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ModelSpec;
    use crate::optim::DiagonalQuadratic;
    use crate::phases::{dg_lattice, double_gyroid_seeds, init_from_modes};
    use crate::spectral::Domain;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn toy(n: usize, seed: u64, with_penalty: bool) -> DiagonalQuadratic {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let curvature = (0..n).map(|_| rng.gen_range(0.01..1.0)).collect();
        let center = (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
        let penalty = (0..n).map(|_| if with_penalty { rng.gen_range(0.0..50.0) } else { 0.0 }).collect();
        DiagonalQuadratic::new(curvature, center, penalty)
    }

    fn cfg() -> SolverConfig {
        SolverConfig { grad_tol: 1e-12, max_iter: 20000, ..Default::default() }
    }

    #[test]
    fn unit_curvature_step_hits_minimizer() {
        let n = 16;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let center: Vec<Complex64> = (0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), 0.0)).collect();
        let p = DiagonalQuadratic::new(vec![1.0; n], center.clone(), vec![0.0; n]);
        let phi = vec![Complex64::new(0.0, 0.0); n];
        let psi: Vec<Complex64> = center.iter().map(|c| c * 0.5).collect();
        let (ephi, epsi) = (p.evaluate(&phi), p.evaluate(&psi));
        let (gphi, gpsi) = (p.smooth_gradient(&phi, &ephi), p.smooth_gradient(&psi, &epsi));
        let beta0 = bb_step(&difference(&psi, &phi), &difference(&gpsi, &gphi), crate::optim::BbVariant::Auto).unwrap();
        assert!((beta0 - 1.0).abs() < 1e-15);
        let s = estimate_step(&p, &psi, &epsi, &gpsi, beta0, &cfg()).unwrap();
        assert_eq!(s.alpha, beta0);
        assert!(distance_sqr(&s.next, &center).sqrt() < 1e-15);

        let strict = SolverConfig { eta: 1e12, delta: 1e-10, ..cfg() };
        assert!(estimate_step(&p, &psi, &epsi, &gpsi, beta0, &strict).is_none());
    }

    #[test]
    fn apg_convex_rate_bound() {
        let p = toy(64, 1, false);
        let alpha = 1.0 / p.lipschitz();
        let x0 = vec![Complex64::new(0.0, 0.0); 64];
        let run = apg(&p, x0.clone(), alpha, &SolverConfig { max_iter: 200, grad_tol: 0.0, ..cfg() }).unwrap();
        let star = p.min_energy();
        let r0 = distance_sqr(&x0, &p.minimizer());
        assert_eq!(run.trace.len(), 201);
        for r in &run.trace[1..] {
            let k = r.iter as f64;
            assert!(r.energy - star <= 2.0 * r0 / (alpha * (k + 1.0).powi(2)));
        }
    }

    #[test]
    fn first_apg_step_is_sis_step() {
        let p = toy(32, 2, true);
        let x0 = vec![Complex64::new(0.3, 0.1); 32];
        let one = SolverConfig { max_iter: 1, grad_tol: 0.0, ..cfg() };
        let a = apg(&p, x0.clone(), 0.5, &one).unwrap();
        let s = sis(&p, x0, 0.5, &one).unwrap();
        assert_eq!(a.x, s.x);
    }

    #[test]
    fn stationary_start_terminates_immediately() {
        let p = toy(8, 4, true);
        let x = p.minimizer();
        for run in [
            sis(&p, x.clone(), 0.5, &cfg()).unwrap(),
            apg(&p, x.clone(), 0.5, &cfg()).unwrap(),
            adaptive_apg(&p, x.clone(), &cfg()).unwrap(),
        ] {
            assert_eq!(run.status, Status::Converged);
            assert!(run.iterations <= 1);
            assert!(distance_sqr(&run.x, &x).sqrt() < 1e-12);
        }
    }

    #[test]
    fn oversized_fixed_step_diverges() {
        let p = toy(8, 5, false);
        let x0 = vec![Complex64::new(1.0, 0.0); 8];
        match sis(&p, x0, 1e3, &cfg()) {
            Err(Error::Diverged { iter, trace }) => {
                assert!(iter > 0);
                assert_eq!(trace.last().unwrap().iter, iter);
            }
            other => panic!("expected divergence, got {other:?}"),
        }
        assert!(sis(&p, vec![Complex64::new(0.0, 0.0); 8], -1.0, &cfg()).is_err());
        assert!(sis(&p, vec![Complex64::new(0.0, 0.0); 3], 0.1, &cfg()).is_err());
    }

    fn assert_monotone(trace: &[TraceRecord]) {
        for w in trace.windows(2) {
            assert!(w[1].energy <= w[0].energy + 1e-12 * w[0].energy.abs().max(1.0));
            assert!(w[1].energy_gap <= w[0].energy_gap);
        }
    }

    /// The first step carries no momentum, like the step after a restart.
    fn assert_restart_window(trace: &[TraceRecord], n_max: u64) {
        let mut since = 0;
        for r in trace.iter().skip(2) {
            if r.restarted {
                since = 0;
            } else {
                since += 1;
                assert!(since <= n_max);
            }
        }
    }

    #[test]
    fn adaptive_converges_monotonically_on_toy() {
        let p = toy(200, 6, true);
        let x0 = vec![Complex64::new(0.0, 0.0); 200];
        let c = SolverConfig { n_max: 10, ..cfg() };
        let run = adaptive_apg(&p, x0, &c).unwrap();
        assert_eq!(run.status, Status::Converged);
        assert!(distance_sqr(&run.x, &p.minimizer()).sqrt() < 1e-9);
        assert_monotone(&run.trace);
        assert_restart_window(&run.trace, c.n_max);
        assert!(run.restarts >= 1);
    }

    #[test]
    fn adaptive_beats_fixed_step_on_ill_conditioned_toy() {
        let p = toy(100, 7, false);
        let x0 = vec![Complex64::new(0.0, 0.0); 100];
        let c = SolverConfig { grad_tol: 1e-8, ..cfg() };
        let fixed = sis(&p, x0.clone(), 1.0 / p.lipschitz(), &c).unwrap();
        let ada = adaptive_apg(&p, x0, &c).unwrap();
        assert_eq!(ada.status, Status::Converged);
        assert!(ada.iterations < fixed.iterations);
    }

    #[test]
    fn adaptive_on_small_gyroid_is_monotone_and_deterministic() {
        let d = Domain::new(dg_lattice(16).unwrap()).unwrap();
        let m = Model::new(ModelSpec::LandauBrazovskii { xi: 0.1, tau: -2.0, gamma: 2.0 }, &d).unwrap();
        let phi0 = init_from_modes(&double_gyroid_seeds(), &d, 0.3).unwrap();
        let c = SolverConfig { max_iter: 400, ..Default::default() };
        let a = adaptive_apg_solve(&m, &phi0, &c).unwrap();
        assert_monotone(&a.trace);
        assert_restart_window(&a.trace, c.n_max);
        assert!(a.energy < m.energy(&phi0).unwrap().total);
        assert!(a.field.is_hermitian());
        let b = adaptive_apg_solve(&m, &phi0, &c).unwrap();
        assert_eq!(a.field, b.field);
        let strip = |t: &[TraceRecord]| t.iter().map(|r| TraceRecord { wall_seconds: 0.0, ..r.clone() }).collect::<Vec<_>>();
        assert_eq!(strip(&a.trace), strip(&b.trace));
    }
}
