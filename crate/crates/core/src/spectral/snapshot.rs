//! Binary field snapshots.
//!
//! Layout (little-endian): magic `PFCF`, version `u32`, `n: u32`, `d: u32`,
//! `dims: n × u32`, basis `n×n f64` row-major, projection `d×n f64`
//! row-major (identity when the lattice has none), then `N` coefficients as
//! `(re: f64, im: f64)` in row-major grid order with FFT frequency layout.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::spectral::{Domain, GridShape, LatticeSpec, SpectralField};

pub const MAGIC: &[u8; 4] = b"PFCF";
pub const VERSION: u32 = 1;

pub fn write_field<W: Write>(field: &SpectralField, mut w: W) -> Result<()> {
    let lattice = field.domain().lattice();
    let n = lattice.lattice_dim();
    let d = lattice.physical_dim();
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(n as u32).to_le_bytes())?;
    w.write_all(&(d as u32).to_le_bytes())?;
    for &dim in lattice.grid().dims() {
        w.write_all(&(dim as u32).to_le_bytes())?;
    }
    for v in lattice.basis() {
        w.write_all(&v.to_le_bytes())?;
    }
    for v in lattice.projection_or_identity() {
        w.write_all(&v.to_le_bytes())?;
    }
    for c in field.coeffs() {
        w.write_all(&c.re.to_le_bytes())?;
        w.write_all(&c.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

fn read_u32<R: Read>(r: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(u32::from_le_bytes(b))
}

fn read_f64<R: Read>(r: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    r.read_exact(&mut b).map_err(truncated)?;
    Ok(f64::from_le_bytes(b))
}

fn truncated(e: std::io::Error) -> Error {
    if e.kind() == std::io::ErrorKind::UnexpectedEof {
        Error::Format("unexpected end of file".into())
    } else {
        Error::Io(e)
    }
}

pub fn read_field<R: Read>(mut r: R) -> Result<SpectralField> {
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic).map_err(truncated)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let version = read_u32(&mut r)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n = read_u32(&mut r)? as usize;
    let d = read_u32(&mut r)? as usize;
    if n == 0 || n > 16 || d == 0 || d > n {
        return Err(Error::Format(format!("implausible dimensions n={n}, d={d}")));
    }
    let dims = (0..n).map(|_| read_u32(&mut r).map(|v| v as usize)).collect::<Result<Vec<_>>>()?;
    let basis = (0..n * n).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    let proj = (0..d * n).map(|_| read_f64(&mut r)).collect::<Result<Vec<_>>>()?;
    let identity = d == n && (0..n * n).all(|i| proj[i] == if i / n == i % n { 1.0 } else { 0.0 });
    let grid = GridShape::new(dims).map_err(|e| Error::Format(e.to_string()))?;
    let lattice = LatticeSpec::new(basis, if identity { None } else { Some(proj) }, grid)
        .map_err(|e| Error::Format(e.to_string()))?;
    let domain = Domain::new(lattice)?;
    let mut coeffs = Vec::with_capacity(domain.len());
    for _ in 0..domain.len() {
        let re = read_f64(&mut r)?;
        let im = read_f64(&mut r)?;
        coeffs.push(Complex64::new(re, im));
    }
    let mut extra = [0u8; 1];
    if r.read(&mut extra)? != 0 {
        return Err(Error::Format("trailing bytes after coefficients".into()));
    }
    SpectralField::from_coeffs(&domain, coeffs)
}

pub fn save_field(field: &SpectralField, path: impl AsRef<Path>) -> Result<()> {
    write_field(field, BufWriter::new(File::create(path)?))
}

pub fn load_field(path: impl AsRef<Path>) -> Result<SpectralField> {
    read_field(BufReader::new(File::open(path)?))
}

/// Loads a snapshot and checks that its lattice and grid match `domain`;
/// the returned field shares `domain`.
pub fn load_field_into(path: impl AsRef<Path>, domain: &Arc<Domain>) -> Result<SpectralField> {
    let field = load_field(path)?;
    let got = field.domain().lattice();
    let want = domain.lattice();
    if got.lattice_dim() != want.lattice_dim() || got.physical_dim() != want.physical_dim() {
        return Err(Error::DimensionMismatch(format!(
            "snapshot is {}-D (physical {}-D), run is {}-D (physical {}-D)",
            got.lattice_dim(),
            got.physical_dim(),
            want.lattice_dim(),
            want.physical_dim()
        )));
    }
    if got.grid() != want.grid() {
        return Err(Error::DimensionMismatch(format!(
            "snapshot grid {:?} differs from run grid {:?}",
            got.grid().dims(),
            want.grid().dims()
        )));
    }
    SpectralField::from_coeffs(domain, field.into_coeffs())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::random_hermitian;

    #[test]
    fn roundtrip_is_bitwise() {
        let g = GridShape::new(vec![4, 6, 4]).unwrap();
        let lat = LatticeSpec::new(
            vec![0.5, 0.1, 0.0, 0.0, 0.7, 0.0, 0.2, 0.0, 1.3],
            None,
            g,
        )
        .unwrap();
        let d = Domain::new(lat).unwrap();
        let f = random_hermitian(&d, 5, 0.3);
        let mut buf = Vec::new();
        write_field(&f, &mut buf).unwrap();
        let back = read_field(buf.as_slice()).unwrap();
        assert_eq!(back, f);
    }

    #[test]
    fn header_is_little_endian_with_magic() {
        let g = GridShape::new(vec![4, 4]).unwrap();
        let d = Domain::new(LatticeSpec::cubic(1.0, g).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_field(&SpectralField::zeros(&d), &mut buf).unwrap();
        assert_eq!(&buf[..4], b"PFCF");
        assert_eq!(&buf[4..8], &1u32.to_le_bytes());
        assert_eq!(&buf[8..12], &2u32.to_le_bytes());
        assert_eq!(&buf[12..16], &2u32.to_le_bytes());
        assert_eq!(buf.len(), 16 + 2 * 4 + 4 * 8 + 4 * 8 + 16 * 16);
    }

    #[test]
    fn rejects_bad_magic_and_truncation() {
        assert!(matches!(read_field(&b"XXXX"[..]), Err(Error::Format(_))));
        let g = GridShape::new(vec![4, 4]).unwrap();
        let d = Domain::new(LatticeSpec::cubic(1.0, g).unwrap()).unwrap();
        let mut buf = Vec::new();
        write_field(&SpectralField::zeros(&d), &mut buf).unwrap();
        buf.truncate(buf.len() - 3);
        assert!(matches!(read_field(buf.as_slice()), Err(Error::Format(_))));
    }
}
