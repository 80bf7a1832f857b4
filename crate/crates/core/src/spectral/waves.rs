use crate::error::Result;
use crate::spectral::grid::LatticeSpec;

/// Projected wavevectors `k(h) = P·B·h` for every grid index, in FFT order.
#[derive(Debug, Clone, PartialEq)]
pub struct WavevectorTable {
    dim: usize,
    kvecs: Vec<f64>,
    ksq: Vec<f64>,
}

impl WavevectorTable {
    /// Physical dimension d of each wavevector.
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.ksq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ksq.is_empty()
    }

    pub fn kvec(&self, flat: usize) -> &[f64] {
        &self.kvecs[flat * self.dim..(flat + 1) * self.dim]
    }

    /// `|k|²` per mode.
    pub fn ksq(&self) -> &[f64] {
        &self.ksq
    }
}

pub fn build_wavevectors(lattice: &LatticeSpec) -> Result<WavevectorTable> {
    let grid = lattice.grid();
    let n = grid.ndim();
    let d = lattice.physical_dim();
    let pb = lattice.projected_basis();
    let len = grid.len();
    let mut kvecs = vec![0.0; len * d];
    let mut ksq = vec![0.0; len];
    let mut pos = vec![0usize; n];
    let mut h = vec![0.0f64; n];
    for flat in 0..len {
        for axis in 0..n {
            h[axis] = grid.frequency(axis, pos[axis]) as f64;
        }
        let k = &mut kvecs[flat * d..(flat + 1) * d];
        for (i, ki) in k.iter_mut().enumerate() {
            *ki = (0..n).map(|j| pb[i * n + j] * h[j]).sum();
        }
        ksq[flat] = k.iter().map(|v| v * v).sum();
        for axis in (0..n).rev() {
            pos[axis] += 1;
            if pos[axis] < grid.dims()[axis] {
                break;
            }
            pos[axis] = 0;
        }
    }
    Ok(WavevectorTable { dim: d, kvecs, ksq })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::grid::GridShape;
    use crate::phases::ddqc_projection;

    #[test]
    fn cubic_gyroid_basis() {
        let g = GridShape::new(vec![8, 8, 8]).unwrap();
        let lat = LatticeSpec::cubic(1.0 / 6f64.sqrt(), g.clone()).unwrap();
        let t = build_wavevectors(&lat).unwrap();
        let flat = g.flat_index(&[1, 1, 1]).unwrap();
        let s = 1.0 / 6f64.sqrt();
        for &k in t.kvec(flat) {
            assert!((k - s).abs() < 1e-15);
        }
        assert!((t.ksq()[flat] - 0.5).abs() < 1e-15);
        assert_eq!(t.ksq()[0], 0.0);
        assert!(t.kvec(0).iter().all(|&k| k == 0.0));
    }

    #[test]
    fn dodecagonal_projection_unit_ring() {
        let g = GridShape::new(vec![4, 4, 4, 4]).unwrap();
        let lat = LatticeSpec::cubic(1.0, g.clone()).unwrap();
        let lat = LatticeSpec::new(lat.basis().to_vec(), Some(ddqc_projection()), g.clone()).unwrap();
        let t = build_wavevectors(&lat).unwrap();
        let flat = g.flat_index(&[0, 1, 0, 0]).unwrap();
        let k = t.kvec(flat);
        assert!((k[0] - (std::f64::consts::PI / 6.0).cos()).abs() < 1e-15);
        assert!((k[1] - (std::f64::consts::PI / 6.0).sin()).abs() < 1e-15);
        assert!((t.ksq()[flat] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn negating_h_negates_k() {
        let g = GridShape::new(vec![6, 4, 8]).unwrap();
        let basis = vec![0.9, 0.1, 0.0, -0.2, 1.1, 0.3, 0.0, 0.4, 0.7];
        let lat = LatticeSpec::new(basis, None, g.clone()).unwrap();
        let t = build_wavevectors(&lat).unwrap();
        let mirror = g.mirror_table();
        for flat in 0..g.len() {
            if mirror[flat] == u32::MAX {
                continue;
            }
            let a = t.kvec(flat);
            let b = t.kvec(mirror[flat] as usize);
            for (x, y) in a.iter().zip(b) {
                assert_eq!(*x, -*y);
            }
        }
    }
}
