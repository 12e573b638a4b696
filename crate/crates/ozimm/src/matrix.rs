//! Dense row-major matrices over f64 and Complex64, plus the plain FP64
//! reference products the emulated paths are compared against.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};

/// Dense row-major FP64 matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Fp64Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Fp64Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { 1.0 } else { 0.0 })
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn scale(&self, s: f64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&v| v * s).collect(),
        }
    }

    /// Index of the first non-finite entry, if any.
    pub fn find_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.is_finite())
            .map(|p| (p / self.cols, p % self.cols))
    }
}

/// Dense row-major complex double matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct CpxMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<Complex64>,
}

impl CpxMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn from_vec(rows: usize, cols: usize, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch(format!(
                "{rows}x{cols} matrix needs {} entries, got {}",
                rows * cols,
                data.len()
            )));
        }
        Ok(Self { rows, cols, data })
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = Complex64::new(1.0, 0.0);
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn transpose(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        t
    }

    /// Conjugate transpose.
    pub fn dagger(&self) -> Self {
        let mut t = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.data[j * self.rows + i] = self.data[i * self.cols + j].conj();
            }
        }
        t
    }

    /// Real and imaginary parts as separate real matrices.
    pub fn split_re_im(&self) -> (Fp64Matrix, Fp64Matrix) {
        let re = Fp64Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.re).collect(),
        };
        let im = Fp64Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z.im).collect(),
        };
        (re, im)
    }

    pub fn from_re_im(re: &Fp64Matrix, im: &Fp64Matrix) -> Result<Self> {
        if re.rows != im.rows || re.cols != im.cols {
            return Err(Error::DimensionMismatch("re/im shapes differ".into()));
        }
        Ok(Self {
            rows: re.rows,
            cols: re.cols,
            data: re
                .data
                .iter()
                .zip(&im.data)
                .map(|(&r, &i)| Complex64::new(r, i))
                .collect(),
        })
    }

    pub fn find_non_finite(&self) -> Option<(usize, usize)> {
        self.data
            .iter()
            .position(|v| !v.re.is_finite() || !v.im.is_finite())
            .map(|p| (p / self.cols, p % self.cols))
    }
}

fn check_conformable(ar: usize, ac: usize, br: usize, bc: usize) -> Result<()> {
    let _ = (ar, bc);
    if ac != br {
        return Err(Error::DimensionMismatch(format!(
            "inner dimensions {ac} and {br} differ"
        )));
    }
    Ok(())
}

/// Plain FP64 GEMM, ascending inner index. Rows are computed independently,
/// so the result is bitwise identical for any thread count.
pub fn dgemm_f64(a: &Fp64Matrix, b: &Fp64Matrix) -> Result<Fp64Matrix> {
    check_conformable(a.rows, a.cols, b.rows, b.cols)?;
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut c = Fp64Matrix::zeros(m, n);
    c.data.par_chunks_mut(n).enumerate().for_each(|(i, crow)| {
        for l in 0..k {
            let ail = a.data[i * k + l];
            let brow = &b.data[l * n..(l + 1) * n];
            for (cv, &bv) in crow.iter_mut().zip(brow) {
                *cv += ail * bv;
            }
        }
    });
    Ok(c)
}

/// Plain complex FP64 GEMM with the 4-multiplication product.
pub fn zgemm_f64(a: &CpxMatrix, b: &CpxMatrix) -> Result<CpxMatrix> {
    check_conformable(a.rows, a.cols, b.rows, b.cols)?;
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut c = CpxMatrix::zeros(m, n);
    c.data.par_chunks_mut(n).enumerate().for_each(|(i, crow)| {
        for l in 0..k {
            let ail = a.data[i * k + l];
            let brow = &b.data[l * n..(l + 1) * n];
            for (cv, &bv) in crow.iter_mut().zip(brow) {
                cv.re += ail.re * bv.re - ail.im * bv.im;
                cv.im += ail.re * bv.im + ail.im * bv.re;
            }
        }
    });
    Ok(c)
}
