use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use super::config::{InitPreset, InitSource, Method, RunConfig};
use super::export::{export_grid, ExportOptions};
use super::trace::{fmt17, write_trace};
use crate::error::{Error, Result};
use crate::models::Model;
use crate::optim::{adaptive_apg_solve, apg_solve, sis_solve, Solution, SolverConfig, Status, TraceRecord};
use crate::phases::{
    dodecagonal_seeds, double_gyroid_seeds, init_from_modes, load_initial_into, load_modes, save_field,
};
use crate::spectral::{norm, Domain, GridShape, SpectralField};

pub fn build_domain(cfg: &RunConfig) -> Result<Arc<Domain>> {
    Domain::new(cfg.lattice.build()?)
}

pub fn build_model(cfg: &RunConfig, domain: &Arc<Domain>) -> Result<Model> {
    Ok(Model::new(cfg.model.spec, domain)?.with_mean(cfg.model.mean))
}

pub fn initial_field(cfg: &RunConfig, domain: &Arc<Domain>) -> Result<SpectralField> {
    match cfg.init.source()? {
        InitSource::Preset(InitPreset::DoubleGyroid) => {
            init_from_modes(&double_gyroid_seeds(), domain, cfg.init.amplitude)
        }
        InitSource::Preset(InitPreset::Dodecagonal) => init_from_modes(&dodecagonal_seeds(), domain, cfg.init.amplitude),
        InitSource::Preset(InitPreset::Zero) => Ok(SpectralField::zeros(domain)),
        InitSource::Modes(path) => load_modes(path, domain),
        InitSource::Snapshot(path) => load_initial_into(path, domain),
    }
}

/// Runs the configured method from `init`.
pub fn solve(cfg: &RunConfig, model: &Model, init: &SpectralField) -> Result<Solution> {
    solve_with(cfg.solver.method, cfg.solver.alpha, &cfg.solver.config, model, init)
}

fn solve_with(
    method: Method,
    alpha: Option<f64>,
    config: &SolverConfig,
    model: &Model,
    init: &SpectralField,
) -> Result<Solution> {
    let fixed = || alpha.ok_or_else(|| Error::Config(format!("method {} needs a fixed alpha", method.name())));
    match method {
        Method::Sis => sis_solve(model, init, fixed()?, config),
        Method::Apg => apg_solve(model, init, fixed()?, config),
        Method::AdaptiveApg => adaptive_apg_solve(model, init, config),
    }
}

fn trace_comments(cfg: &RunConfig, method: &str, alpha: Option<f64>) -> Vec<String> {
    let mut c = vec![
        format!("config = {}", cfg.name),
        format!("method = {method}"),
        format!("dims = {:?}", cfg.lattice.dims),
        format!("model = {:?}", cfg.model.spec),
        format!("mean = {:?}", cfg.model.mean),
        format!("init_amplitude = {}", fmt17(cfg.init.amplitude)),
    ];
    if let Some(a) = alpha {
        c.push(format!("alpha = {}", fmt17(a)));
    }
    c
}

fn save_trace(path: &Path, records: &[TraceRecord], comments: &[String]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    write_trace(BufWriter::new(File::create(path)?), records, comments)
}

#[derive(Debug, Clone)]
pub struct RunReport {
    pub solution: Solution,
    pub trace_path: PathBuf,
    pub snapshot_path: PathBuf,
    pub export_path: Option<PathBuf>,
}

/// Executes a configured run and writes its trace, final snapshot and
/// optional export. A diverged run still leaves its trace on disk.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    cfg.validate()?;
    let domain = build_domain(cfg)?;
    let model = build_model(cfg, &domain)?;
    let init = initial_field(cfg, &domain)?;
    let comments = trace_comments(cfg, cfg.solver.method.name(), cfg.solver.alpha);
    let solution = match solve(cfg, &model, &init) {
        Ok(s) => s,
        Err(Error::Diverged { iter, trace }) => {
            save_trace(&cfg.output.trace, &trace, &comments)?;
            return Err(Error::Diverged { iter, trace });
        }
        Err(e) => return Err(e),
    };
    save_trace(&cfg.output.trace, &solution.trace, &comments)?;
    save_field(&solution.field, &cfg.output.snapshot)?;
    if let Some(path) = &cfg.output.export {
        let opts = ExportOptions { stride: cfg.output.export_stride, ..Default::default() };
        export_grid(&solution.field, path, &opts)?;
    }
    Ok(RunReport {
        solution,
        trace_path: cfg.output.trace.clone(),
        snapshot_path: cfg.output.snapshot.clone(),
        export_path: cfg.output.export.clone(),
    })
}

/// The configured grid rescaled so the first axis has `dof` points; other
/// axes keep their proportion, rounded to an even count.
pub fn scaled_dims(dims: &[usize], dof: usize) -> Result<Vec<usize>> {
    let first = dims[0] as f64;
    let out: Vec<usize> = dims
        .iter()
        .map(|&d| {
            let v = (d as f64 * dof as f64 / first / 2.0).round() as usize * 2;
            v.max(4)
        })
        .collect();
    GridShape::new(out.clone())?;
    Ok(out)
}

fn with_dims(cfg: &RunConfig, dims: Vec<usize>) -> RunConfig {
    let mut c = cfg.clone();
    c.lattice.dims = dims;
    c
}

#[derive(Debug, Clone, PartialEq)]
pub struct AccuracyRow {
    pub dims: Vec<usize>,
    pub energy: f64,
    pub coeff_error: f64,
    pub energy_error: f64,
    pub iterations: u64,
    pub status: Status,
}

#[derive(Debug, Clone)]
pub struct AccuracyReport {
    pub reference_dims: Vec<usize>,
    pub reference_energy: f64,
    pub rows: Vec<AccuracyRow>,
}

impl AccuracyReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("dims,energy,coeff_error,energy_error,iterations,status\n");
        for r in &self.rows {
            let dims: Vec<String> = r.dims.iter().map(|d| d.to_string()).collect();
            s.push_str(&format!(
                "{},{},{},{},{},{:?}\n",
                dims.join("x"),
                fmt17(r.energy),
                fmt17(r.coeff_error),
                fmt17(r.energy_error),
                r.iterations,
                r.status
            ));
        }
        s
    }
}

fn solve_on(cfg: &RunConfig) -> Result<Solution> {
    let domain = build_domain(cfg)?;
    let model = build_model(cfg, &domain)?;
    let init = initial_field(cfg, &domain)?;
    solve(cfg, &model, &init)
}

/// Solves on each grid and compares with the solution on the reference grid
/// (the largest in `dofs` unless given). Coarse coefficients are zero padded
/// into the reference index set before differencing.
pub fn accuracy_study(cfg: &RunConfig, dofs: &[usize], reference: Option<usize>) -> Result<AccuracyReport> {
    if dofs.is_empty() {
        return Err(Error::Config("accuracy study needs at least one grid size".into()));
    }
    let ref_dof = reference.unwrap_or_else(|| *dofs.iter().max().expect("non-empty"));
    let ref_cfg = with_dims(cfg, scaled_dims(&cfg.lattice.dims, ref_dof)?);
    let reference = solve_on(&ref_cfg)?;
    let mut rows = Vec::new();
    for &dof in dofs {
        let dims = scaled_dims(&cfg.lattice.dims, dof)?;
        let sol = if dims == ref_cfg.lattice.dims { reference.clone() } else { solve_on(&with_dims(cfg, dims.clone()))? };
        let padded = crate::phases::resample(&sol.field, reference.field.domain())?;
        let diff: Vec<_> = reference.field.coeffs().iter().zip(padded.coeffs()).map(|(a, b)| a - b).collect();
        rows.push(AccuracyRow {
            dims,
            energy: sol.energy,
            coeff_error: norm(&diff),
            energy_error: (reference.energy - sol.energy).abs(),
            iterations: sol.iterations,
            status: sol.status,
        });
    }
    Ok(AccuracyReport { reference_dims: ref_cfg.lattice.dims, reference_energy: reference.energy, rows })
}

pub const GAP_DECADES: [f64; 13] = [1e-1, 1e-2, 1e-3, 1e-4, 1e-5, 1e-6, 1e-7, 1e-8, 1e-9, 1e-10, 1e-11, 1e-12, 1e-13];

#[derive(Debug, Clone)]
pub struct SchemeRun {
    pub method: Method,
    pub alpha: Option<f64>,
    pub status: String,
    pub iterations: u64,
    pub restarts: u64,
    pub final_energy: f64,
    pub wall_seconds: f64,
    /// Gaps measured against the lowest energy over all runs.
    pub trace: Vec<TraceRecord>,
    pub trace_path: PathBuf,
}

impl SchemeRun {
    pub fn label(&self) -> String {
        match self.alpha {
            Some(a) => format!("{}-{a}", self.method.name()),
            None => self.method.name().to_string(),
        }
    }

    /// First iteration, and its wall time, at which the gap is at or below `gap`.
    pub fn reach(&self, gap: f64) -> Option<(u64, f64)> {
        self.trace.iter().find(|r| r.energy_gap <= gap).map(|r| (r.iter, r.wall_seconds))
    }
}

#[derive(Debug, Clone)]
pub struct CompareReport {
    pub best_energy: f64,
    pub runs: Vec<SchemeRun>,
}

impl CompareReport {
    /// Two CSV tables: one line per run, then iterations and wall time to
    /// reach each decade of energy gap.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("scheme,alpha,status,iterations,restarts,final_energy,wall_seconds\n");
        for r in &self.runs {
            s.push_str(&format!(
                "{},{},{},{},{},{},{}\n",
                r.method.name(),
                r.alpha.map(fmt17).unwrap_or_default(),
                r.status,
                r.iterations,
                r.restarts,
                fmt17(r.final_energy),
                fmt17(r.wall_seconds)
            ));
        }
        s.push_str("\nscheme,alpha,target_gap,iterations,wall_seconds\n");
        for r in &self.runs {
            for g in GAP_DECADES {
                let (it, t) = match r.reach(g) {
                    Some((i, t)) => (i.to_string(), fmt17(t)),
                    None => (String::new(), String::new()),
                };
                s.push_str(&format!(
                    "{},{},{:e},{},{}\n",
                    r.method.name(),
                    r.alpha.map(fmt17).unwrap_or_default(),
                    g,
                    it,
                    t
                ));
            }
        }
        s
    }
}

fn suffixed(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "trace".into());
    let ext = path.extension().map(|e| format!(".{}", e.to_string_lossy())).unwrap_or_default();
    path.with_file_name(format!("{stem}-{suffix}{ext}"))
}

/// Runs SIS at each `alpha` and adaptive APG from the same initial field,
/// one worker thread per run, and writes one trace per run.
pub fn compare_schemes(cfg: &RunConfig, alphas: &[f64]) -> Result<CompareReport> {
    cfg.validate()?;
    if let Some(a) = alphas.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(Error::Config(format!("alphas must be positive, got {a}")));
    }
    let domain = build_domain(cfg)?;
    let model = build_model(cfg, &domain)?;
    let init = initial_field(cfg, &domain)?;
    let mut jobs: Vec<(Method, Option<f64>)> = alphas.iter().map(|&a| (Method::Sis, Some(a))).collect();
    jobs.push((Method::AdaptiveApg, None));

    let results: Vec<Result<Solution>> = std::thread::scope(|scope| {
        let handles: Vec<_> = jobs
            .iter()
            .map(|&(method, alpha)| {
                let (model, init, config) = (&model, &init, &cfg.solver.config);
                scope.spawn(move || solve_with(method, alpha, config, model, init))
            })
            .collect();
        handles.into_iter().map(|h| h.join().expect("solver thread panicked")).collect()
    });

    let mut runs = Vec::new();
    for ((method, alpha), res) in jobs.iter().zip(results) {
        let (status, iterations, restarts, trace) = match res {
            Ok(s) => (format!("{:?}", s.status).to_lowercase(), s.iterations, s.restarts, s.trace),
            Err(Error::Diverged { iter, trace }) => ("diverged".to_string(), iter, 0, trace),
            Err(e) => return Err(e),
        };
        let last = trace.last().cloned();
        runs.push(SchemeRun {
            method: *method,
            alpha: *alpha,
            status,
            iterations,
            restarts,
            final_energy: last.as_ref().map(|r| r.energy).unwrap_or(f64::NAN),
            wall_seconds: last.map(|r| r.wall_seconds).unwrap_or(0.0),
            trace,
            trace_path: PathBuf::new(),
        });
    }

    // Each run's gaps are accurate against its own best; shift them onto the
    // lowest best over all runs.
    let run_best = |t: &[TraceRecord]| {
        t.iter().find(|r| r.energy_gap == 0.0).map(|r| r.energy).unwrap_or(f64::INFINITY)
    };
    let best = runs.iter().map(|r| run_best(&r.trace)).fold(f64::INFINITY, f64::min);
    for r in &mut runs {
        let offset = (run_best(&r.trace) - best).max(0.0);
        for rec in &mut r.trace {
            rec.energy_gap += offset;
        }
        let suffix = r.label();
        r.trace_path = suffixed(&cfg.output.trace, &suffix);
        let mut comments = trace_comments(cfg, r.method.name(), r.alpha);
        comments.push("energy_gap measured against the lowest energy over all compared runs".into());
        save_trace(&r.trace_path, &r.trace, &comments)?;
    }
    Ok(CompareReport { best_energy: best, runs })
}
