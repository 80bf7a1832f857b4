//! Command-line front end.

mod commands;
mod config;
mod export;
mod trace;

use std::path::PathBuf;

use clap::{Parser, Subcommand};

pub use commands::{
    accuracy_study, build_domain, build_model, compare_schemes, initial_field, run, scaled_dims, solve,
    AccuracyReport, AccuracyRow, CompareReport, RunReport, SchemeRun, GAP_DECADES,
};
pub use config::{
    preset, InitBlock, InitPreset, InitSource, LatticeBlock, Method, ModelBlock, OutputBlock, RunConfig, SolverBlock,
    PRESETS,
};
pub use export::{export_grid, sample_window, significant_modes, ExportOptions, DEFAULT_WINDOW};
pub use trace::{fmt17, fmt_sig, read_trace, write_trace, HEADER as TRACE_HEADER};

use crate::error::{Error, Result};
use crate::phases::load_initial;


#[derive(Debug, Parser)]
#[command(name = "pfc", version, about = "Stationary states of phase-field-crystal models")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Minimize the energy for a config file or preset name.
    Run {
        config: String,
        /// Initial snapshot, replacing the config's init table.
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Discretization error against a reference grid.
    AccuracyStudy {
        config: String,
        /// Points along the first axis, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        dofs: Vec<usize>,
        /// Reference grid size (defaults to the largest of `--dofs`).
        #[arg(long)]
        reference: Option<usize>,
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Fixed-step SIS at each alpha against adaptive APG.
    CompareSchemes {
        config: String,
        #[arg(long, value_delimiter = ',', required = true)]
        alphas: Vec<f64>,
        #[arg(long)]
        init: Option<PathBuf>,
    },
    /// Write real-space samples of a snapshot as CSV.
    Export {
        snapshot: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1)]
        stride: usize,
        /// `x0,x1,y0,y1` for two-dimensional fields.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        window: Option<Vec<f64>>,
        #[arg(long, default_value_t = 256)]
        res: usize,
        /// Relative magnitude below which modes are skipped in window export.
        #[arg(long, default_value_t = 1e-10)]
        cutoff: f64,
    },
}

fn load_config(arg: &str, init: Option<PathBuf>) -> Result<RunConfig> {
    RunConfig::load_with_init(arg, init)
}

fn configure_threads() -> Result<()> {
    if let Ok(v) = std::env::var("PFC_THREADS") {
        let n: usize = v.parse().map_err(|_| Error::Config(format!("PFC_THREADS must be an integer, got '{v}'")))?;
        if n == 0 {
            return Err(Error::Config("PFC_THREADS must be positive".into()));
        }
        // a second initialization in the same process keeps the first pool
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    Ok(())
}

pub fn execute(cli: Cli) -> Result<()> {
    configure_threads()?;
    match cli.command {
        Command::Run { config, init } => {
            let cfg = load_config(&config, init)?;
            let report = run(&cfg)?;
            let s = &report.solution;
            println!("energy = {}", fmt_sig(s.energy, 15));
            println!(
                "status = {:?}, iterations = {}, restarts = {}, grad_norm = {:e}",
                s.status, s.iterations, s.restarts, s.grad_norm
            );
            println!("trace = {}", report.trace_path.display());
            println!("snapshot = {}", report.snapshot_path.display());
            if let Some(p) = &report.export_path {
                println!("export = {}", p.display());
            }
        }
        Command::AccuracyStudy { config, dofs, reference, init } => {
            let cfg = load_config(&config, init)?;
            let report = accuracy_study(&cfg, &dofs, reference)?;
            println!("# reference dims = {:?}, energy = {}", report.reference_dims, fmt_sig(report.reference_energy, 15));
            print!("{}", report.to_csv());
        }
        Command::CompareSchemes { config, alphas, init } => {
            let cfg = load_config(&config, init)?;
            let report = compare_schemes(&cfg, &alphas)?;
            println!("# lowest energy = {}", fmt_sig(report.best_energy, 15));
            for r in &report.runs {
                println!("# trace {} = {}", r.label(), r.trace_path.display());
            }
            print!("{}", report.to_csv());
        }
        Command::Export { snapshot, out, stride, window, res, cutoff } => {
            let field = load_initial(&snapshot)?;
            let window = match window.as_deref() {
                None => None,
                Some(&[x0, x1, y0, y1]) => Some([x0, x1, y0, y1]),
                Some(w) => return Err(Error::InvalidArgument(format!("--window takes 4 values, got {}", w.len()))),
            };
            export_grid(&field, &out, &ExportOptions { stride, window, res, cutoff })?;
            println!("wrote {}", out.display());
        }
    }
    Ok(())
}

/// Parses arguments, runs, and returns the process exit status.
pub fn main() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
