//! Run configuration: a TOML file of `[model]`, `[lattice]`, `[init]`,
//! `[solver]` and `[output]` tables, optionally layered over a named preset.
//!
//! ```toml
//! preset = "dg-64"          # optional; tables below replace the preset's
//!
//! [model]
//! kind = "lb"               # or "lp" with c, eps, kappa, q1, q2
//! xi = 0.1
//! tau = -2.0
//! gamma = 2.0
//! mean = "conserved"        # or "free"
//!
//! [lattice]
//! basis = [0.408, 0, 0, 0, 0.408, 0, 0, 0, 0.408]   # B, row-major, columns are b_j
//! projection = [...]        # optional d×n, row-major
//! dims = [64, 64, 64]
//!
//! [init]                    # exactly one of preset / modes / snapshot
//! preset = "double-gyroid"  # "dodecagonal", "zero"
//! amplitude = 0.3
//!
//! [solver]
//! method = "adaptive_apg"   # "sis", "apg" (these need alpha)
//! grad_tol = 1e-9           # any SolverConfig field
//!
//! [output]
//! trace = "trace.csv"
//! snapshot = "final.pfcf"
//! export = "field.csv"      # optional real-space samples
//! export_stride = 1
//! ```

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::models::{MeanMode, ModelSpec};
use crate::optim::SolverConfig;
use crate::phases::{ddqc_projection, DEFAULT_AMPLITUDE};
use crate::spectral::{GridShape, LatticeSpec};

pub const PRESETS: [&str; 5] = ["dg-128", "dg-64", "sigma-256", "ddqc-38", "ddqc-24"];

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct ModelBlock {
    #[serde(flatten)]
    pub spec: ModelSpec,
    #[serde(default)]
    pub mean: MeanMode,
    #[serde(flatten)]
    unknown: BTreeMap<String, toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LatticeBlock {
    pub basis: Vec<f64>,
    #[serde(default)]
    pub projection: Option<Vec<f64>>,
    pub dims: Vec<usize>,
}

impl LatticeBlock {
    pub fn build(&self) -> Result<LatticeSpec> {
        LatticeSpec::new(self.basis.clone(), self.projection.clone(), GridShape::new(self.dims.clone())?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitPreset {
    DoubleGyroid,
    Dodecagonal,
    Zero,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitBlock {
    pub preset: Option<InitPreset>,
    pub modes: Option<PathBuf>,
    pub snapshot: Option<PathBuf>,
    #[serde(default = "default_amplitude")]
    pub amplitude: f64,
}

fn default_amplitude() -> f64 {
    DEFAULT_AMPLITUDE
}

/// Where the initial field comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum InitSource {
    Preset(InitPreset),
    Modes(PathBuf),
    Snapshot(PathBuf),
}

impl InitBlock {
    pub fn source(&self) -> Result<InitSource> {
        match (&self.preset, &self.modes, &self.snapshot) {
            (Some(p), None, None) => Ok(InitSource::Preset(*p)),
            (None, Some(m), None) => Ok(InitSource::Modes(m.clone())),
            (None, None, Some(s)) => Ok(InitSource::Snapshot(s.clone())),
            (None, None, None) => Err(Error::Config("init needs one of preset, modes or snapshot".into())),
            _ => Err(Error::Config("init takes exactly one of preset, modes or snapshot".into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Sis,
    Apg,
    AdaptiveApg,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Sis => "sis",
            Method::Apg => "apg",
            Method::AdaptiveApg => "adaptive_apg",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
pub struct SolverBlock {
    pub method: Method,
    #[serde(default)]
    pub alpha: Option<f64>,
    #[serde(flatten)]
    pub config: SolverConfig,
    #[serde(flatten)]
    unknown: BTreeMap<String, toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputBlock {
    #[serde(default = "default_trace")]
    pub trace: PathBuf,
    #[serde(default = "default_snapshot")]
    pub snapshot: PathBuf,
    #[serde(default)]
    pub export: Option<PathBuf>,
    #[serde(default = "default_stride")]
    pub export_stride: usize,
}

fn default_trace() -> PathBuf {
    PathBuf::from("trace.csv")
}

fn default_snapshot() -> PathBuf {
    PathBuf::from("final.pfcf")
}

fn default_stride() -> usize {
    1
}

impl Default for OutputBlock {
    fn default() -> Self {
        Self { trace: default_trace(), snapshot: default_snapshot(), export: None, export_stride: 1 }
    }
}

/// A fully resolved run description.
#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub name: String,
    pub model: ModelBlock,
    pub lattice: LatticeBlock,
    pub init: InitBlock,
    pub solver: SolverBlock,
    pub output: OutputBlock,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    preset: Option<String>,
    model: Option<ModelBlock>,
    lattice: Option<LatticeBlock>,
    init: Option<InitBlock>,
    solver: Option<SolverBlock>,
    output: Option<OutputBlock>,
}

fn lb(xi: f64, tau: f64, gamma: f64) -> ModelBlock {
    ModelBlock {
        spec: ModelSpec::LandauBrazovskii { xi, tau, gamma },
        mean: MeanMode::Conserved,
        unknown: BTreeMap::new(),
    }
}

fn diagonal(values: &[f64]) -> Vec<f64> {
    let n = values.len();
    let mut b = vec![0.0; n * n];
    for (i, v) in values.iter().enumerate() {
        b[i * n + i] = *v;
    }
    b
}

fn adaptive() -> SolverBlock {
    SolverBlock { method: Method::AdaptiveApg, alpha: None, config: SolverConfig::default(), unknown: BTreeMap::new() }
}

fn preset_init(preset: Option<InitPreset>) -> InitBlock {
    InitBlock { preset, modes: None, snapshot: None, amplitude: DEFAULT_AMPLITUDE }
}

fn output_for(name: &str) -> OutputBlock {
    OutputBlock {
        trace: PathBuf::from(format!("{name}-trace.csv")),
        snapshot: PathBuf::from(format!("{name}.pfcf")),
        export: None,
        export_stride: 1,
    }
}

/// Built-in configuration by name. `sigma-256` has no initial field; one must
/// be supplied as a snapshot.
pub fn preset(name: &str) -> Result<RunConfig> {
    let dg = |n: usize| RunConfig {
        name: name.to_string(),
        model: lb(0.1, -2.0, 2.0),
        lattice: LatticeBlock { basis: diagonal(&[1.0 / 6f64.sqrt(); 3]), projection: None, dims: vec![n; 3] },
        init: preset_init(Some(InitPreset::DoubleGyroid)),
        solver: adaptive(),
        output: output_for(name),
    };
    let ddqc = |n: usize| RunConfig {
        name: name.to_string(),
        model: ModelBlock {
            spec: ModelSpec::LifshitzPetrich {
                c: 1.5,
                eps: -6.0,
                kappa: 0.3,
                q1: 1.0,
                q2: 2.0 * (std::f64::consts::PI / 12.0).cos(),
            },
            mean: MeanMode::Conserved,
            unknown: BTreeMap::new(),
        },
        lattice: LatticeBlock { basis: diagonal(&[1.0; 4]), projection: Some(ddqc_projection()), dims: vec![n; 4] },
        init: preset_init(Some(InitPreset::Dodecagonal)),
        solver: adaptive(),
        output: output_for(name),
    };
    let tau = std::f64::consts::TAU;
    match name {
        "dg-128" => Ok(dg(128)),
        "dg-64" => Ok(dg(64)),
        "ddqc-38" => Ok(ddqc(38)),
        "ddqc-24" => Ok(ddqc(24)),
        "sigma-256" => Ok(RunConfig {
            name: name.to_string(),
            model: lb(1.0, 0.01, 2.0),
            lattice: LatticeBlock {
                basis: diagonal(&[tau / 27.7884, tau / 27.7884, tau / 14.1514]),
                projection: None,
                dims: vec![256, 256, 128],
            },
            init: preset_init(None),
            solver: adaptive(),
            output: output_for(name),
        }),
        other => Err(Error::Config(format!("unknown preset '{other}' (known: {})", PRESETS.join(", ")))),
    }
}

fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}

impl RunConfig {
    /// Parses and validates TOML text; relative paths are taken relative to
    /// `base_dir`.
    pub fn from_toml(text: &str, base_dir: &Path, name: &str) -> Result<Self> {
        let cfg = Self::parse_toml(text, base_dir, name)?;
        cfg.validate()?;
        Ok(cfg)
    }

    fn parse_toml(text: &str, base_dir: &Path, name: &str) -> Result<Self> {
        let raw: RawConfig = toml::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        let base = raw.preset.as_deref().map(preset).transpose()?;
        let missing = |block: &str| Error::Config(format!("missing [{block}] table and no preset given"));
        let mut cfg = RunConfig {
            name: name.to_string(),
            model: raw.model.or_else(|| base.as_ref().map(|b| b.model.clone())).ok_or_else(|| missing("model"))?,
            lattice: raw
                .lattice
                .or_else(|| base.as_ref().map(|b| b.lattice.clone()))
                .ok_or_else(|| missing("lattice"))?,
            init: raw.init.or_else(|| base.as_ref().map(|b| b.init.clone())).unwrap_or_else(|| preset_init(None)),
            solver: raw.solver.or_else(|| base.as_ref().map(|b| b.solver.clone())).unwrap_or_else(adaptive),
            output: raw.output.unwrap_or_default(),
        };
        cfg.init.modes = cfg.init.modes.map(|p| resolve(base_dir, &p));
        cfg.init.snapshot = cfg.init.snapshot.map(|p| resolve(base_dir, &p));
        cfg.output.trace = resolve(base_dir, &cfg.output.trace);
        cfg.output.snapshot = resolve(base_dir, &cfg.output.snapshot);
        cfg.output.export = cfg.output.export.map(|p| resolve(base_dir, &p));
        Ok(cfg)
    }

    /// Reads a config file, or a built-in preset when `arg` names one and no
    /// such file exists.
    pub fn load(arg: &str) -> Result<Self> {
        Self::load_with_init(arg, None)
    }

    /// As [`RunConfig::load`], with the init table replaced by a snapshot
    /// when one is given.
    pub fn load_with_init(arg: &str, snapshot: Option<PathBuf>) -> Result<Self> {
        let path = Path::new(arg);
        let mut cfg = if !path.exists() && PRESETS.contains(&arg) {
            preset(arg)?
        } else {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Error::Config(format!("cannot read config '{}': {e}", path.display())))?;
            let dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
            let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "run".into());
            Self::parse_toml(&text, &dir, &name)?
        };
        if let Some(snap) = snapshot {
            cfg.init = InitBlock { preset: None, modes: None, snapshot: Some(snap), amplitude: cfg.init.amplitude };
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        // flattened enums leave their own keys in the catch-all map
        let model_keys: &[&str] = match self.model.spec {
            ModelSpec::LandauBrazovskii { .. } => &["kind", "xi", "tau", "gamma"],
            ModelSpec::LifshitzPetrich { .. } => &["kind", "c", "eps", "kappa", "q1", "q2"],
        };
        let stray_model = self.model.unknown.keys().find(|k| !model_keys.contains(&k.as_str()));
        for (table, key) in [("model", stray_model), ("solver", self.solver.unknown.keys().next())] {
            if let Some(key) = key {
                return Err(Error::Config(format!("unknown key '{key}' in [{table}]")));
            }
        }
        self.model.spec.validate()?;
        let lattice = self.lattice.build()?;
        self.solver.config.validate()?;
        match self.solver.method {
            Method::Sis | Method::Apg => match self.solver.alpha {
                Some(a) if a > 0.0 && a.is_finite() => {}
                Some(a) => return Err(Error::Config(format!("alpha must be positive, got {a}"))),
                None => {
                    return Err(Error::Config(format!("method {} needs a fixed alpha", self.solver.method.name())))
                }
            },
            Method::AdaptiveApg => {}
        }
        if !(self.init.amplitude.is_finite()) {
            return Err(Error::Config("init amplitude must be finite".into()));
        }
        match self.init.source()? {
            InitSource::Preset(InitPreset::DoubleGyroid) if lattice.lattice_dim() != 3 => {
                return Err(Error::Config("double-gyroid preset needs a 3-D lattice".into()))
            }
            InitSource::Preset(InitPreset::Dodecagonal) if lattice.lattice_dim() != 4 => {
                return Err(Error::Config("dodecagonal preset needs a 4-D lattice".into()))
            }
            InitSource::Modes(p) | InitSource::Snapshot(p) if !p.is_file() => {
                return Err(Error::Config(format!("initial field file '{}' not found", p.display())))
            }
            _ => {}
        }
        if self.output.export_stride == 0 {
            return Err(Error::Config("export_stride must be at least 1".into()));
        }
        Ok(())
    }
}
