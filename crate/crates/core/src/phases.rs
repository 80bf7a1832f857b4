//! Initial fields: sparse-mode presets, user mode lists, snapshots, and
//! random perturbations.

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{random_hermitian, snapshot, Domain, GridShape, LatticeSpec, SpectralField};

pub const DEFAULT_AMPLITUDE: f64 = 0.3;

/// One seeded Fourier mode. The conjugate index receives the conjugate value.
#[derive(Debug, Clone, PartialEq)]
pub struct ModeSeed {
    pub index: Vec<i64>,
    /// `+1.0` or `-1.0`.
    pub sign: f64,
    pub amplitude: Option<f64>,
}

impl ModeSeed {
    pub fn new(index: &[i64], sign: f64) -> Self {
        Self { index: index.to_vec(), sign, amplitude: None }
    }
}

/// Double gyroid: the {211} family, `true` marking an opposite sign.
const DG_MODES: [([i64; 3], bool); 12] = [
    ([-2, 1, 1], false),
    ([2, 1, 1], true),
    ([2, 1, -1], true),
    ([2, -1, 1], false),
    ([1, -2, 1], false),
    ([1, 2, -1], false),
    ([1, 2, 1], true),
    ([-1, 2, 1], true),
    ([1, 1, -2], false),
    ([1, -1, 2], true),
    ([-1, 1, 2], false),
    ([1, 1, 2], true),
];

/// Dodecagonal quasicrystal: both 12-point rings in the 4-D index lattice.
const QC_MODES: [[i64; 4]; 24] = [
    [0, 1, 0, -1],
    [0, -1, 0, 1],
    [1, 0, 0, 0],
    [-1, 0, 0, 0],
    [0, 1, 0, 0],
    [0, -1, 0, 0],
    [0, 0, 1, 0],
    [0, 0, -1, 0],
    [0, 0, 0, 1],
    [0, 0, 0, -1],
    [-1, 0, 1, 0],
    [1, 0, -1, 0],
    [1, 1, 0, -1],
    [-1, -1, 0, 1],
    [1, 1, 0, 0],
    [-1, -1, 0, 0],
    [0, 1, 1, 0],
    [0, -1, -1, 0],
    [0, 0, 1, 1],
    [0, 0, -1, -1],
    [-1, 0, 1, 1],
    [1, 0, -1, -1],
    [-1, -1, 1, 1],
    [1, 1, -1, -1],
];

pub fn double_gyroid_seeds() -> Vec<ModeSeed> {
    DG_MODES
        .iter()
        .map(|(h, opposite)| ModeSeed::new(h, if *opposite { -1.0 } else { 1.0 }))
        .collect()
}

pub fn dodecagonal_seeds() -> Vec<ModeSeed> {
    QC_MODES.iter().map(|h| ModeSeed::new(h, 1.0)).collect()
}

/// Projection of the 4-D lattice onto the dodecagonal plane.
pub fn ddqc_projection() -> Vec<f64> {
    let (c6, s6) = ((PI / 6.0).cos(), (PI / 6.0).sin());
    let (c3, s3) = ((PI / 3.0).cos(), (PI / 3.0).sin());
    vec![1.0, c6, c3, 0.0, 0.0, s6, s3, 1.0]
}

/// Cubic lattice `B = I/√6` on an `n³` grid.
pub fn dg_lattice(n: usize) -> Result<LatticeSpec> {
    LatticeSpec::cubic(1.0 / 6f64.sqrt(), GridShape::new(vec![n; 3])?)
}

/// `B = I₄` with the dodecagonal projection on an `n⁴` grid.
pub fn ddqc_lattice(n: usize) -> Result<LatticeSpec> {
    let grid = GridShape::new(vec![n; 4])?;
    let basis = LatticeSpec::cubic(1.0, grid.clone())?.basis().to_vec();
    LatticeSpec::new(basis, Some(ddqc_projection()), grid)
}

/// Sigma-phase box `[0, 27.7884) × [0, 27.7884) × [0, 14.1514)`.
pub fn sigma_lattice(dims: [usize; 3]) -> Result<LatticeSpec> {
    let tau = std::f64::consts::TAU;
    let (a, c) = (tau / 27.7884, tau / 14.1514);
    LatticeSpec::new(vec![a, 0.0, 0.0, 0.0, a, 0.0, 0.0, 0.0, c], None, GridShape::new(dims.to_vec())?)
}

/// Places `value` at `h` and its conjugate at `-h`, checking consistency with
/// what is already there.
fn place(domain: &Domain, coeffs: &mut [Complex64], filled: &mut [bool], h: &[i64], value: Complex64) -> Result<()> {
    let grid = domain.lattice().grid();
    let flat = grid
        .flat_index(h)
        .ok_or_else(|| Error::InvalidArgument(format!("mode {h:?} is outside grid {:?}", grid.dims())))?;
    let mirror = domain
        .mirror(flat)
        .ok_or_else(|| Error::InvalidArgument(format!("mode {h:?} lies on a Nyquist row")))?;
    if mirror == flat && value.im != 0.0 {
        return Err(Error::InvalidArgument("zero-frequency coefficient must be real".into()));
    }
    for (idx, v) in [(flat, value), (mirror, value.conj())] {
        if filled[idx] && coeffs[idx] != v {
            return Err(Error::InvalidArgument(format!(
                "mode {:?} seeded with conflicting values",
                grid.frequencies(idx)
            )));
        }
        coeffs[idx] = v;
        filled[idx] = true;
    }
    Ok(())
}

pub fn init_from_modes(seeds: &[ModeSeed], domain: &Arc<Domain>, amplitude_default: f64) -> Result<SpectralField> {
    let values: Vec<(Vec<i64>, Complex64)> = seeds
        .iter()
        .map(|s| (s.index.clone(), Complex64::new(s.sign * s.amplitude.unwrap_or(amplitude_default), 0.0)))
        .collect();
    init_from_values(&values, domain)
}

/// Field with the given complex values at the listed frequencies (and their
/// conjugates), zero elsewhere.
pub fn init_from_values(values: &[(Vec<i64>, Complex64)], domain: &Arc<Domain>) -> Result<SpectralField> {
    let mut coeffs = vec![Complex64::new(0.0, 0.0); domain.len()];
    let mut filled = vec![false; domain.len()];
    for (h, v) in values {
        if h.len() != domain.lattice().lattice_dim() {
            return Err(Error::DimensionMismatch(format!(
                "mode {h:?} has {} components, lattice has {}",
                h.len(),
                domain.lattice().lattice_dim()
            )));
        }
        place(domain, &mut coeffs, &mut filled, h, *v)?;
    }
    SpectralField::from_coeffs(domain, coeffs)
}

/// Parses the sparse-mode text format: `h1 … hn re im` per line, `#` comments.
pub fn parse_modes(text: &str, ndim: usize) -> Result<Vec<(Vec<i64>, Complex64)>> {
    let mut out = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.len() != ndim + 2 {
            return Err(Error::Config(format!(
                "modes line {}: expected {} fields, found {}",
                lineno + 1,
                ndim + 2,
                tokens.len()
            )));
        }
        let bad = |t: &str| Error::Config(format!("modes line {}: cannot parse '{t}'", lineno + 1));
        let h = tokens[..ndim].iter().map(|t| t.parse::<i64>().map_err(|_| bad(t))).collect::<Result<Vec<_>>>()?;
        let re = tokens[ndim].parse::<f64>().map_err(|_| bad(tokens[ndim]))?;
        let im = tokens[ndim + 1].parse::<f64>().map_err(|_| bad(tokens[ndim + 1]))?;
        out.push((h, Complex64::new(re, im)));
    }
    Ok(out)
}

pub fn load_modes(path: impl AsRef<Path>, domain: &Arc<Domain>) -> Result<SpectralField> {
    let text = std::fs::read_to_string(path)?;
    let values = parse_modes(&text, domain.lattice().lattice_dim())?;
    init_from_values(&values, domain)
}

/// Loads a snapshot as-is, with its own lattice.
pub fn load_initial(path: impl AsRef<Path>) -> Result<SpectralField> {
    snapshot::load_field(path)
}

/// Loads a snapshot onto `domain`, resampling spectrally when only the grid
/// differs. Lattice dimension and geometry must agree.
pub fn load_initial_into(path: impl AsRef<Path>, domain: &Arc<Domain>) -> Result<SpectralField> {
    let field = snapshot::load_field(path)?;
    let (got, want) = (field.domain().lattice(), domain.lattice());
    if got.lattice_dim() != want.lattice_dim() || got.physical_dim() != want.physical_dim() {
        return Err(Error::DimensionMismatch(format!(
            "snapshot is {}-D (physical {}-D), run is {}-D (physical {}-D)",
            got.lattice_dim(),
            got.physical_dim(),
            want.lattice_dim(),
            want.physical_dim()
        )));
    }
    let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (x - y).abs() <= 1e-12 * (1.0 + y.abs()));
    if !close(got.basis(), want.basis()) || !close(&got.projection_or_identity(), &want.projection_or_identity()) {
        return Err(Error::DimensionMismatch("snapshot lattice geometry differs from the run".into()));
    }
    resample(&field, domain)
}

pub fn save_field(field: &SpectralField, path: impl AsRef<Path>) -> Result<()> {
    snapshot::save_field(field, path)
}

/// Copies every coefficient representable on both grids (zero padding or
/// truncation in coefficient space), then re-imposes Hermitian symmetry.
pub fn resample(field: &SpectralField, target: &Arc<Domain>) -> Result<SpectralField> {
    let src_grid = field.domain().lattice().grid();
    let dst_grid = target.lattice().grid();
    if src_grid.ndim() != dst_grid.ndim() {
        return Err(Error::DimensionMismatch(format!(
            "cannot resample {}-D field onto {}-D grid",
            src_grid.ndim(),
            dst_grid.ndim()
        )));
    }
    let mut out = SpectralField::zeros(target);
    for (flat, c) in field.coeffs().iter().enumerate() {
        if *c == Complex64::new(0.0, 0.0) {
            continue;
        }
        let h = src_grid.frequencies(flat);
        if let Some(dst) = dst_grid.flat_index(&h) {
            out.coeffs_mut()[dst] = *c;
        }
    }
    Ok(out.symmetrize())
}

/// Adds a random Hermitian perturbation with coefficients in `[-scale, scale]`
/// on every non-zero mode with `|k|² ≤ ksq_max`.
pub fn perturb(field: &SpectralField, scale: f64, ksq_max: f64, seed: u64) -> SpectralField {
    let domain = field.domain();
    let noise = random_hermitian(domain, seed, scale);
    let ksq = domain.waves().ksq();
    let coeffs = field
        .coeffs()
        .iter()
        .zip(noise.coeffs())
        .zip(ksq)
        .enumerate()
        .map(|(i, ((c, n), &k))| if i != 0 && k <= ksq_max { c + n } else { *c })
        .collect();
    SpectralField::from_coeffs(domain, coeffs).expect("same domain")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_seed_list_gives_zero_field() {
        let d = Domain::new(dg_lattice(8).unwrap()).unwrap();
        let f = init_from_modes(&[], &d, 0.3).unwrap();
        assert!(f.coeffs().iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn gyroid_preset_matches_table() {
        let d = Domain::new(dg_lattice(16).unwrap()).unwrap();
        let f = init_from_modes(&double_gyroid_seeds(), &d, 0.3).unwrap();
        assert!(f.is_hermitian());
        let nonzero = f.coeffs().iter().filter(|c| c.norm() > 0.0).count();
        assert_eq!(nonzero, 24);
        assert_eq!(f.coeff(&[-2, 1, 1]).unwrap(), Complex64::new(0.3, 0.0));
        assert_eq!(f.coeff(&[2, 1, 1]).unwrap(), Complex64::new(-0.3, 0.0));
        assert_eq!(f.coeff(&[-2, -1, -1]).unwrap(), Complex64::new(-0.3, 0.0));
        let table: [([i64; 3], f64); 12] = [
            ([-2, 1, 1], 1.0),
            ([2, 1, 1], -1.0),
            ([2, 1, -1], -1.0),
            ([2, -1, 1], 1.0),
            ([1, -2, 1], 1.0),
            ([1, 2, -1], 1.0),
            ([1, 2, 1], -1.0),
            ([-1, 2, 1], -1.0),
            ([1, 1, -2], 1.0),
            ([1, -1, 2], -1.0),
            ([-1, 1, 2], 1.0),
            ([1, 1, 2], -1.0),
        ];
        for (h, s) in table {
            assert_eq!(f.coeff(&h).unwrap().re, 0.3 * s);
            let neg = [-h[0], -h[1], -h[2]];
            assert_eq!(f.coeff(&neg).unwrap().re, 0.3 * s);
        }
        // all seeds sit on the resonant shell |Bh| = 1
        for (flat, c) in f.coeffs().iter().enumerate() {
            if c.norm() > 0.0 {
                assert!((d.waves().ksq()[flat] - 1.0).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn quasicrystal_preset_matches_table() {
        let d = Domain::new(ddqc_lattice(8).unwrap()).unwrap();
        let f = init_from_modes(&dodecagonal_seeds(), &d, 0.3).unwrap();
        assert!(f.is_hermitian());
        assert_eq!(f.coeffs().iter().filter(|c| c.norm() > 0.0).count(), 24);
        assert_eq!(f.coeff(&[0, 1, 0, -1]).unwrap().re, 0.3);
        assert_eq!(f.coeff(&[0, -1, 0, 1]).unwrap().re, 0.3);
        let q2sq = 2.0 + 3f64.sqrt();
        let mut rings = (0, 0);
        for (flat, c) in f.coeffs().iter().enumerate() {
            if c.norm() > 0.0 {
                let k = d.waves().ksq()[flat];
                if (k - 1.0).abs() < 1e-12 {
                    rings.0 += 1;
                } else if (k - q2sq).abs() < 1e-12 {
                    rings.1 += 1;
                }
            }
        }
        assert_eq!(rings, (12, 12));
    }

    #[test]
    fn out_of_range_and_nyquist_seeds_rejected() {
        let d = Domain::new(dg_lattice(4).unwrap()).unwrap();
        assert!(init_from_modes(&[ModeSeed::new(&[3, 0, 0], 1.0)], &d, 1.0).is_err());
        assert!(init_from_modes(&[ModeSeed::new(&[-2, 0, 0], 1.0)], &d, 1.0).is_err());
        assert!(init_from_modes(&[ModeSeed::new(&[1, 0], 1.0)], &d, 1.0).is_err());
    }

    #[test]
    fn conflicting_conjugate_seeds_rejected() {
        let d = Domain::new(dg_lattice(8).unwrap()).unwrap();
        let seeds = [ModeSeed::new(&[1, 0, 0], 1.0), ModeSeed::new(&[-1, 0, 0], -1.0)];
        assert!(init_from_modes(&seeds, &d, 1.0).is_err());
    }

    #[test]
    fn modes_text_format() {
        let text = "# gyroid fragment\n-2 1 1 0.3 0\n\n1 1 2 -0.3 0.1\n";
        let values = parse_modes(text, 3).unwrap();
        assert_eq!(values.len(), 2);
        assert_eq!(values[1].0, vec![1, 1, 2]);
        assert_eq!(values[1].1, Complex64::new(-0.3, 0.1));
        let d = Domain::new(dg_lattice(8).unwrap()).unwrap();
        let f = init_from_values(&values, &d).unwrap();
        assert_eq!(f.coeff(&[-1, -1, -2]).unwrap(), Complex64::new(-0.3, -0.1));
        assert!(parse_modes("1 2 0.5\n", 3).is_err());
        assert!(parse_modes("1 x 2 0.5 0\n", 3).is_err());
    }

    #[test]
    fn resample_pads_and_truncates() {
        let coarse = Domain::new(dg_lattice(8).unwrap()).unwrap();
        let fine = Domain::new(dg_lattice(16).unwrap()).unwrap();
        let f = random_hermitian(&coarse, 1, 0.2);
        let up = resample(&f, &fine).unwrap();
        let down = resample(&up, &coarse).unwrap();
        assert_eq!(down, f);
        assert!((up.norm() - f.norm()).abs() < 1e-14);
    }

    #[test]
    fn perturbation_stays_hermitian() {
        let d = Domain::new(dg_lattice(8).unwrap()).unwrap();
        let f = init_from_modes(&double_gyroid_seeds(), &d, 0.3).unwrap();
        let p = perturb(&f, 0.01, 1.5, 7);
        assert!(p.is_hermitian());
        assert_eq!(p.coeffs()[0], f.coeffs()[0]);
        assert_ne!(p, f);
    }
}
