//! Grid shapes and lattice descriptions.

use crate::error::{Error, Result};

/// Number of collocation points along each periodic direction.
///
/// Every extent is even and at least 4. Frequencies along axis `j` run over
/// `-N_j/2 ..= N_j/2 - 1` in FFT order; the unmatched `-N_j/2` row is the
/// Nyquist row and is pinned to zero in every field.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GridShape {
    dims: Vec<usize>,
    len: usize,
}

impl GridShape {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::Config("grid must have at least one dimension".into()));
        }
        let mut len: usize = 1;
        for &n in &dims {
            if n < 4 || n % 2 != 0 {
                return Err(Error::Config(format!(
                    "grid extent {n} must be even and at least 4"
                )));
            }
            len = len
                .checked_mul(n)
                .filter(|&l| l <= u32::MAX as usize)
                .ok_or_else(|| Error::Config(format!("grid {dims:?} is too large")))?;
        }
        Ok(Self { dims, len })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    /// Total number of modes (and of collocation points).
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Signed frequency stored at position `i` along `axis`.
    #[inline]
    pub fn frequency(&self, axis: usize, i: usize) -> i64 {
        let n = self.dims[axis];
        if i < n / 2 {
            i as i64
        } else {
            i as i64 - n as i64
        }
    }

    /// Storage position of the signed frequency `h` along `axis`, if it is on the grid.
    #[inline]
    pub fn position(&self, axis: usize, h: i64) -> Option<usize> {
        let n = self.dims[axis] as i64;
        if h < -n / 2 || h >= n / 2 {
            return None;
        }
        Some(if h < 0 { (h + n) as usize } else { h as usize })
    }

    /// Flat row-major index of a frequency vector.
    pub fn flat_index(&self, h: &[i64]) -> Option<usize> {
        if h.len() != self.ndim() {
            return None;
        }
        let mut flat = 0;
        for (axis, &hj) in h.iter().enumerate() {
            flat = flat * self.dims[axis] + self.position(axis, hj)?;
        }
        Some(flat)
    }

    /// Frequency vector stored at a flat index.
    pub fn frequencies(&self, mut flat: usize) -> Vec<i64> {
        let mut h = vec![0; self.ndim()];
        for axis in (0..self.ndim()).rev() {
            let n = self.dims[axis];
            h[axis] = self.frequency(axis, flat % n);
            flat /= n;
        }
        h
    }

    /// For every flat index, the flat index of the negated frequency, or
    /// `u32::MAX` when the index lies on a Nyquist row.
    pub(crate) fn mirror_table(&self) -> Vec<u32> {
        let mut table = vec![0u32; self.len];
        let mut pos = vec![0usize; self.ndim()];
        for slot in table.iter_mut() {
            let mut nyquist = false;
            let mut flat = 0usize;
            for (axis, &p) in pos.iter().enumerate() {
                let n = self.dims[axis];
                if p == n / 2 {
                    nyquist = true;
                }
                flat = flat * n + (n - p) % n;
            }
            *slot = if nyquist { u32::MAX } else { flat as u32 };
            for axis in (0..self.ndim()).rev() {
                pos[axis] += 1;
                if pos[axis] < self.dims[axis] {
                    break;
                }
                pos[axis] = 0;
            }
        }
        table
    }
}

/// Reciprocal basis, optional projection, and grid.
///
/// `basis` is the n×n matrix whose columns are the primitive reciprocal
/// vectors, stored row-major. `projection` is a d×n row-major matrix mapping
/// the n-dimensional reciprocal lattice onto the physical d-dimensional
/// space; when absent d = n and the projection is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    basis: Vec<f64>,
    projection: Option<Vec<f64>>,
    grid: GridShape,
}

impl LatticeSpec {
    pub fn new(basis: Vec<f64>, projection: Option<Vec<f64>>, grid: GridShape) -> Result<Self> {
        let n = grid.ndim();
        if basis.len() != n * n {
            return Err(Error::Config(format!(
                "basis has {} entries, expected {n}x{n}",
                basis.len()
            )));
        }
        if basis.iter().any(|v| !v.is_finite()) {
            return Err(Error::Config("basis has non-finite entries".into()));
        }
        let norm = basis.iter().map(|v| v * v).sum::<f64>().sqrt();
        let det = determinant(&basis, n);
        if !(det.abs() > 1e-12 * norm.powi(n as i32)) {
            return Err(Error::Config(format!("basis matrix is singular (det = {det:e})")));
        }
        if let Some(p) = &projection {
            if p.is_empty() || p.len() % n != 0 {
                return Err(Error::Config(format!(
                    "projection has {} entries, not a multiple of {n}",
                    p.len()
                )));
            }
            if p.len() / n > n {
                return Err(Error::Config("projection has more rows than columns".into()));
            }
            if p.iter().any(|v| !v.is_finite()) {
                return Err(Error::Config("projection has non-finite entries".into()));
            }
        }
        Ok(Self { basis, projection, grid })
    }

    /// Diagonal basis `scale * I_n`.
    pub fn cubic(scale: f64, grid: GridShape) -> Result<Self> {
        let n = grid.ndim();
        let mut basis = vec![0.0; n * n];
        for i in 0..n {
            basis[i * n + i] = scale;
        }
        Self::new(basis, None, grid)
    }

    pub fn basis(&self) -> &[f64] {
        &self.basis
    }

    pub fn projection(&self) -> Option<&[f64]> {
        self.projection.as_deref()
    }

    pub fn grid(&self) -> &GridShape {
        &self.grid
    }

    /// Lattice (index) dimension n.
    pub fn lattice_dim(&self) -> usize {
        self.grid.ndim()
    }

    /// Physical dimension d.
    pub fn physical_dim(&self) -> usize {
        match &self.projection {
            Some(p) => p.len() / self.lattice_dim(),
            None => self.lattice_dim(),
        }
    }

    /// The d×n matrix P·B, row-major.
    pub fn projected_basis(&self) -> Vec<f64> {
        let n = self.lattice_dim();
        match &self.projection {
            None => self.basis.clone(),
            Some(p) => {
                let d = p.len() / n;
                let mut out = vec![0.0; d * n];
                for i in 0..d {
                    for j in 0..n {
                        out[i * n + j] = (0..n).map(|l| p[i * n + l] * self.basis[l * n + j]).sum();
                    }
                }
                out
            }
        }
    }

    /// Projection matrix with the identity filled in when absent.
    pub fn projection_or_identity(&self) -> Vec<f64> {
        let n = self.lattice_dim();
        match &self.projection {
            Some(p) => p.clone(),
            None => {
                let mut id = vec![0.0; n * n];
                for i in 0..n {
                    id[i * n + i] = 1.0;
                }
                id
            }
        }
    }

    /// Same reciprocal geometry on a different grid.
    pub fn with_grid(&self, grid: GridShape) -> Result<Self> {
        if grid.ndim() != self.lattice_dim() {
            return Err(Error::DimensionMismatch(format!(
                "grid has {} axes, lattice has {}",
                grid.ndim(),
                self.lattice_dim()
            )));
        }
        Ok(Self { basis: self.basis.clone(), projection: self.projection.clone(), grid })
    }

    /// Real-space edge vectors of the unit cell, `2π B^{-T}`, row-major with
    /// row `j` the cell vector paired with axis `j`.
    pub fn cell_vectors(&self) -> Vec<f64> {
        let n = self.lattice_dim();
        let inv = invert(&self.basis, n).expect("basis validated as invertible");
        // (B^{-T})^T = B^{-1}; row j of the cell matrix is column j of B^{-T}, i.e. row j of B^{-1}.
        inv.iter().map(|v| v * std::f64::consts::TAU).collect()
    }
}

fn lu_decompose(m: &[f64], n: usize) -> Option<(Vec<f64>, Vec<usize>, f64)> {
    let mut a = m.to_vec();
    let mut perm: Vec<usize> = (0..n).collect();
    let mut sign = 1.0;
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&x, &y| a[x * n + col].abs().total_cmp(&a[y * n + col].abs()))?;
        if a[pivot * n + col] == 0.0 {
            return None;
        }
        if pivot != col {
            for j in 0..n {
                a.swap(pivot * n + j, col * n + j);
            }
            perm.swap(pivot, col);
            sign = -sign;
        }
        for row in col + 1..n {
            let f = a[row * n + col] / a[col * n + col];
            a[row * n + col] = f;
            for j in col + 1..n {
                a[row * n + j] -= f * a[col * n + j];
            }
        }
    }
    Some((a, perm, sign))
}

pub(crate) fn determinant(m: &[f64], n: usize) -> f64 {
    match lu_decompose(m, n) {
        None => 0.0,
        Some((lu, _, sign)) => (0..n).map(|i| lu[i * n + i]).product::<f64>() * sign,
    }
}

pub(crate) fn invert(m: &[f64], n: usize) -> Option<Vec<f64>> {
    let (lu, perm, _) = lu_decompose(m, n)?;
    let mut inv = vec![0.0; n * n];
    for col in 0..n {
        let mut x: Vec<f64> = (0..n).map(|i| if perm[i] == col { 1.0 } else { 0.0 }).collect();
        for i in 0..n {
            for j in 0..i {
                x[i] -= lu[i * n + j] * x[j];
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                x[i] -= lu[i * n + j] * x[j];
            }
            x[i] /= lu[i * n + i];
        }
        for i in 0..n {
            inv[i * n + col] = x[i];
        }
    }
    Some(inv)
}
