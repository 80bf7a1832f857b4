//! Real-space sampling of a field for external plotting.

use std::io::{BufWriter, Write};
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use super::trace::fmt17;
use crate::error::{Error, Result};
use crate::spectral::SpectralField;

#[derive(Debug, Clone, PartialEq)]
pub struct ExportOptions {
    /// Keep every `stride`-th grid point along each axis (grid export).
    pub stride: usize,
    /// `[x0, x1, y0, y1]` for window export of a two-dimensional field.
    pub window: Option<[f64; 4]>,
    pub res: usize,
    /// Coefficients below `cutoff · max|φ̂|` are dropped in window export.
    pub cutoff: f64,
}

impl Default for ExportOptions {
    fn default() -> Self {
        Self { stride: 1, window: None, res: 256, cutoff: 1e-10 }
    }
}

pub const DEFAULT_WINDOW: [f64; 4] = [0.0, 20.0 * std::f64::consts::PI, 0.0, 20.0 * std::f64::consts::PI];

/// Physical wavevectors `P B h` and coefficients of all modes with
/// `|φ̂(h)| ≥ cutoff · max|φ̂|`, in index order.
pub fn significant_modes(field: &SpectralField, cutoff: f64) -> Vec<(Vec<f64>, Complex64)> {
    let waves = field.domain().waves();
    let max = field.coeffs().iter().map(|c| c.norm()).fold(0.0, f64::max);
    if max == 0.0 {
        return Vec::new();
    }
    field
        .coeffs()
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() >= cutoff * max)
        .map(|(i, c)| (waves.kvec(i).to_vec(), *c))
        .collect()
}

/// Samples a field with two physical dimensions on a `res × res` window.
/// Row-major with `y` outer: entry `iy * res + ix` is at
/// `(x0 + ix·Δx, y0 + iy·Δy)`.
pub fn sample_window(field: &SpectralField, window: [f64; 4], res: usize, cutoff: f64) -> Result<Vec<f64>> {
    if field.domain().lattice().physical_dim() != 2 {
        return Err(Error::InvalidArgument(format!(
            "window export needs a two-dimensional field, this one is {}-D",
            field.domain().lattice().physical_dim()
        )));
    }
    if res == 0 || !(window[1] > window[0] && window[3] > window[2]) {
        return Err(Error::InvalidArgument("window must be non-empty with res > 0".into()));
    }
    let modes = significant_modes(field, cutoff);
    let (dx, dy) = ((window[1] - window[0]) / res as f64, (window[3] - window[2]) / res as f64);
    let xs: Vec<f64> = (0..res).map(|i| window[0] + i as f64 * dx).collect();
    let ys: Vec<f64> = (0..res).map(|i| window[2] + i as f64 * dy).collect();
    // per-mode phase tables along x; y phases are formed row by row
    let phase_x: Vec<Vec<Complex64>> =
        modes.iter().map(|(k, c)| xs.iter().map(|x| c * Complex64::from_polar(1.0, k[0] * x)).collect()).collect();
    let rows: Vec<Vec<f64>> = ys
        .par_iter()
        .map(|&y| {
            let mut row = vec![0.0; res];
            for ((k, _), px) in modes.iter().zip(&phase_x) {
                let py = Complex64::from_polar(1.0, k[1] * y);
                for (v, p) in row.iter_mut().zip(px) {
                    *v += (p * py).re;
                }
            }
            row
        })
        .collect();
    Ok(rows.concat())
}

fn write_window(field: &SpectralField, out: &Path, window: [f64; 4], opts: &ExportOptions) -> Result<()> {
    let values = sample_window(field, window, opts.res, opts.cutoff)?;
    let mut w = BufWriter::new(std::fs::File::create(out)?);
    writeln!(w, "x,y,value")?;
    let (dx, dy) = ((window[1] - window[0]) / opts.res as f64, (window[3] - window[2]) / opts.res as f64);
    for iy in 0..opts.res {
        for ix in 0..opts.res {
            let (x, y) = (window[0] + ix as f64 * dx, window[2] + iy as f64 * dy);
            writeln!(w, "{},{},{}", fmt17(x), fmt17(y), fmt17(values[iy * opts.res + ix]))?;
        }
    }
    w.flush()?;
    Ok(())
}

fn write_grid(field: &SpectralField, out: &Path, stride: usize) -> Result<()> {
    let lattice = field.domain().lattice();
    let grid = lattice.grid();
    let n = grid.ndim();
    if n > 3 {
        return Err(Error::InvalidArgument(format!("grid export supports up to 3 axes, field has {n}")));
    }
    let values = field.to_physical()?;
    let cell = lattice.cell_vectors();
    let dims = grid.dims();
    let mut w = BufWriter::new(std::fs::File::create(out)?);
    let names = ["x", "y", "z"];
    writeln!(w, "{},value", names[..n].join(","))?;
    for (flat, v) in values.iter().enumerate() {
        let mut rem = flat;
        let mut idx = vec![0; n];
        for axis in (0..n).rev() {
            idx[axis] = rem % dims[axis];
            rem /= dims[axis];
        }
        if idx.iter().any(|i| i % stride != 0) {
            continue;
        }
        let mut line = String::new();
        for row in 0..n {
            let pos: f64 = (0..n).map(|j| idx[j] as f64 / dims[j] as f64 * cell[j * n + row]).sum();
            line.push_str(&fmt17(pos));
            line.push(',');
        }
        line.push_str(&fmt17(*v));
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

/// Grid samples for periodic fields of up to three dimensions; window
/// samples for two-dimensional projected fields.
pub fn export_grid(field: &SpectralField, out: &Path, opts: &ExportOptions) -> Result<()> {
    if opts.stride == 0 {
        return Err(Error::InvalidArgument("stride must be at least 1".into()));
    }
    let lattice = field.domain().lattice();
    match (lattice.projection(), opts.window) {
        (_, Some(window)) => write_window(field, out, window, opts),
        (Some(_), None) => write_window(field, out, DEFAULT_WINDOW, opts),
        (None, None) => write_grid(field, out, opts.stride),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phases::{ddqc_lattice, dg_lattice, dodecagonal_seeds, init_from_modes, init_from_values};
    use crate::spectral::Domain;

    fn read_csv(path: &Path) -> Vec<Vec<f64>> {
        std::fs::read_to_string(path)
            .unwrap()
            .lines()
            .skip(1)
            .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
            .collect()
    }

    #[test]
    fn zero_field_exports_zeros() {
        let dir = tempfile::tempdir().unwrap();
        let d = Domain::new(dg_lattice(4).unwrap()).unwrap();
        let out = dir.path().join("z.csv");
        export_grid(&SpectralField::zeros(&d), &out, &ExportOptions::default()).unwrap();
        let rows = read_csv(&out);
        assert_eq!(rows.len(), 64);
        assert!(rows.iter().all(|r| r.len() == 4 && r[3] == 0.0));
    }

    #[test]
    fn cosine_matches_pointwise() {
        let dir = tempfile::tempdir().unwrap();
        let d = Domain::new(dg_lattice(8).unwrap()).unwrap();
        let h = [2i64, -1, 1];
        let f = init_from_values(&[(h.to_vec(), Complex64::new(0.5, 0.0))], &d).unwrap();
        let out = dir.path().join("c.csv");
        export_grid(&f, &out, &ExportOptions { stride: 2, ..Default::default() }).unwrap();
        let rows = read_csv(&out);
        assert_eq!(rows.len(), 64);
        let s = 1.0 / 6f64.sqrt();
        for r in rows {
            let phase = s * (h[0] as f64 * r[0] + h[1] as f64 * r[1] + h[2] as f64 * r[2]);
            assert!((r[3] - phase.cos()).abs() < 1e-12);
        }
    }

    #[test]
    fn window_samples_projected_field() {
        let d = Domain::new(ddqc_lattice(8).unwrap()).unwrap();
        let f = init_from_values(&[(vec![0, 1, 0, 0], Complex64::new(0.5, 0.0))], &d).unwrap();
        let vals = sample_window(&f, [0.0, 10.0, -5.0, 5.0], 16, 0.0).unwrap();
        let k = [(std::f64::consts::PI / 6.0).cos(), 0.5];
        for iy in 0..16 {
            for ix in 0..16 {
                let (x, y) = (ix as f64 * 10.0 / 16.0, -5.0 + iy as f64 * 10.0 / 16.0);
                assert!((vals[iy * 16 + ix] - (k[0] * x + k[1] * y).cos()).abs() < 1e-12);
            }
        }
        let qc = init_from_modes(&dodecagonal_seeds(), &d, 0.3).unwrap();
        assert_eq!(significant_modes(&qc, 0.5).len(), 24);
        let dg = Domain::new(dg_lattice(4).unwrap()).unwrap();
        assert!(sample_window(&SpectralField::zeros(&dg), DEFAULT_WINDOW, 4, 0.0).is_err());
    }
}
