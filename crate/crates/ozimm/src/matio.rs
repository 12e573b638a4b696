//! OZMM binary matrix files.
//!
//! Layout: magic `OZMM`, version u32, rows u64, cols u64, flag u8
//! (0 real / 1 complex), then little-endian FP64 row-major payload,
//! interleaved (re, im) when complex.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::matrix::{CpxMatrix, Fp64Matrix};

const MAGIC: &[u8; 4] = b"OZMM";
const VERSION: u32 = 1;

/// Either kind of dense matrix, as stored on disk.
#[derive(Debug, Clone, PartialEq)]
pub enum MatData {
    Real(Fp64Matrix),
    Complex(CpxMatrix),
}

fn write_header(w: &mut impl Write, rows: u64, cols: u64, flag: u8) -> Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&rows.to_le_bytes())?;
    w.write_all(&cols.to_le_bytes())?;
    w.write_all(&[flag])?;
    Ok(())
}

pub fn write_real(path: &Path, m: &Fp64Matrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, m.rows as u64, m.cols as u64, 0)?;
    for v in &m.data {
        w.write_all(&v.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_complex(path: &Path, m: &CpxMatrix) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    write_header(&mut w, m.rows as u64, m.cols as u64, 1)?;
    for v in &m.data {
        w.write_all(&v.re.to_le_bytes())?;
        w.write_all(&v.im.to_le_bytes())?;
    }
    w.flush()?;
    Ok(())
}

pub fn write_matrix(path: &Path, m: &MatData) -> Result<()> {
    match m {
        MatData::Real(r) => write_real(path, r),
        MatData::Complex(c) => write_complex(path, c),
    }
}

fn read_f64(r: &mut impl Read) -> Result<f64> {
    let mut buf = [0u8; 8];
    r.read_exact(&mut buf)?;
    Ok(f64::from_le_bytes(buf))
}

pub fn read_matrix(path: &Path) -> Result<MatData> {
    let mut r = BufReader::new(File::open(path)?);
    let mut magic = [0u8; 4];
    r.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format(format!("bad magic {magic:?}")));
    }
    let mut v4 = [0u8; 4];
    r.read_exact(&mut v4)?;
    let version = u32::from_le_bytes(v4);
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let mut v8 = [0u8; 8];
    r.read_exact(&mut v8)?;
    let rows = u64::from_le_bytes(v8) as usize;
    r.read_exact(&mut v8)?;
    let cols = u64::from_le_bytes(v8) as usize;
    let mut flag = [0u8; 1];
    r.read_exact(&mut flag)?;
    let count = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::Format("dimension overflow".into()))?;
    match flag[0] {
        0 => {
            let mut data = Vec::with_capacity(count);
            for _ in 0..count {
                data.push(read_f64(&mut r)?);
            }
            Ok(MatData::Real(Fp64Matrix { rows, cols, data }))
        }
        1 => {
            let mut data = Vec::with_capacity(count);
            for _ in 0..count {
                let re = read_f64(&mut r)?;
                let im = read_f64(&mut r)?;
                data.push(Complex64::new(re, im));
            }
            Ok(MatData::Complex(CpxMatrix { rows, cols, data }))
        }
        f => Err(Error::Format(format!("unknown flag {f}"))),
    }
}

/// Read a file that must contain a real matrix.
pub fn read_real(path: &Path) -> Result<Fp64Matrix> {
    match read_matrix(path)? {
        MatData::Real(m) => Ok(m),
        MatData::Complex(_) => Err(Error::Format("expected a real matrix".into())),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn real_roundtrip() {
        let dir = std::env::temp_dir().join("ozimm_matio_test_real");
        let m = Fp64Matrix::from_fn(3, 5, |i, j| (i as f64 - 1.5) * (j as f64 + 0.25));
        write_real(&dir, &m).unwrap();
        assert_eq!(read_real(&dir).unwrap(), m);
        std::fs::remove_file(&dir).ok();
    }

    #[test]
    fn complex_roundtrip() {
        let dir = std::env::temp_dir().join("ozimm_matio_test_cpx");
        let m = CpxMatrix::from_vec(
            1,
            2,
            vec![Complex64::new(1.5, -2.5), Complex64::new(0.0, 3.25)],
        )
        .unwrap();
        write_complex(&dir, &m).unwrap();
        match read_matrix(&dir).unwrap() {
            MatData::Complex(c) => assert_eq!(c, m),
            _ => panic!("wrong kind"),
        }
        std::fs::remove_file(&dir).ok();
    }

    #[test]
    fn rejects_garbage() {
        let path = std::env::temp_dir().join("ozimm_matio_test_bad");
        std::fs::write(&path, b"NOPE").unwrap();
        assert!(read_matrix(&path).is_err());
        std::fs::remove_file(&path).ok();
    }
}
