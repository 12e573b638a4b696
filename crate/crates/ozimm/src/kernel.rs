//! Exact low-precision GEMM kernels emulating the matrix-multiplication
//! units: signed 8-bit slices with 32-bit accumulation, and the FP32
//! working-precision kernel for the floating-point path.
//!
//! Both kernels carry overflow / exactness guards: results are only
//! returned when the configured budgets prove no rounding or wraparound
//! occurred. Integer accumulation is order-independent, so any blocking
//! or parallel schedule is bit-identical.

use rayon::prelude::*;

use crate::bits::valid_mantissa_length;
use crate::error::{Error, Result};
use crate::matrix::Fp64Matrix;

/// Dense row-major matrix of 8-bit signed slice entries.
#[derive(Debug, Clone, PartialEq)]
pub struct IntSliceMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i8>,
}

impl IntSliceMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i8 {
        self.data[i * self.cols + j]
    }

    pub fn max_abs(&self) -> u32 {
        self.data
            .iter()
            .map(|&v| (v as i32).unsigned_abs())
            .max()
            .unwrap_or(0)
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

    /// Identity pattern scaled by `v`.
    pub fn identity(n: usize, v: i8) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = v;
        }
        m
    }
}

/// Dense row-major matrix of 32-bit accumulator values.
#[derive(Debug, Clone, PartialEq)]
pub struct AccMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<i32>,
}

impl AccMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0; rows * cols],
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> i32 {
        self.data[i * self.cols + j]
    }
}

/// Worst-case accumulator magnitude for slice width `w` and length `k`,
/// and whether it fits a 31-bit accumulator: k * (2^w - 1)^2 <= 2^31 - 1.
pub fn overflow_budget(w: u32, k: u64) -> (u128, bool) {
    assert!(w >= 1);
    let max_entry = (1u128 << w) - 1;
    let bound = k as u128 * max_entry * max_entry;
    (bound, bound <= (i32::MAX as u128))
}

fn check_int_budget(a: &IntSliceMatrix, b: &IntSliceMatrix) -> Result<()> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "inner dimensions {} and {} differ",
            a.cols, b.rows
        )));
    }
    let bound = a.cols as u128 * a.max_abs() as u128 * b.max_abs() as u128;
    if bound > i32::MAX as u128 {
        return Err(Error::OverflowBudget(format!(
            "k = {} with |A| <= {}, |B| <= {} may exceed 2^31 - 1",
            a.cols,
            a.max_abs(),
            b.max_abs()
        )));
    }
    Ok(())
}

/// Exact integer GEMM with 32-bit accumulation, parallel over row blocks.
///
/// The no-overflow precondition is checked before computing; debug builds
/// additionally shadow-accumulate in 64 bits to catch mis-sized slices.
pub fn int_gemm(a: &IntSliceMatrix, b: &IntSliceMatrix) -> Result<AccMatrix> {
    check_int_budget(a, b)?;
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut c = AccMatrix::zeros(m, n);
    c.data.par_chunks_mut(n).enumerate().for_each(|(i, crow)| {
        let arow = &a.data[i * k..(i + 1) * k];
        // Accumulate a whole output row at a time so the inner loop
        // runs down contiguous rows of B.
        for (l, &av) in arow.iter().enumerate() {
            if av == 0 {
                continue;
            }
            let av = av as i32;
            let brow = &b.data[l * n..(l + 1) * n];
            for (cv, &bv) in crow.iter_mut().zip(brow) {
                *cv += av * bv as i32;
            }
        }
        #[cfg(debug_assertions)]
        {
            for (j, &cv) in crow.iter().enumerate() {
                let mut wide: i64 = 0;
                for (l, &av) in arow.iter().enumerate() {
                    wide += av as i64 * b.data[l * n + j] as i64;
                }
                debug_assert_eq!(wide, cv as i64, "32-bit accumulator overflow at ({i}, {j})");
            }
        }
    });
    Ok(c)
}

/// Reference schedule: plain triple loop, no blocking, no parallelism.
/// Exists so tests can show any schedule is bit-identical.
pub fn int_gemm_naive(a: &IntSliceMatrix, b: &IntSliceMatrix) -> Result<AccMatrix> {
    check_int_budget(a, b)?;
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut c = AccMatrix::zeros(m, n);
    for i in 0..m {
        for j in 0..n {
            let mut acc: i32 = 0;
            for l in 0..k {
                acc += a.data[i * k + l] as i32 * b.data[l * n + j] as i32;
            }
            c.data[i * n + j] = acc;
        }
    }
    Ok(c)
}

/// Widen an 8-bit slice matrix to the accumulator type.
pub fn widen(a: &IntSliceMatrix) -> AccMatrix {
    AccMatrix {
        rows: a.rows,
        cols: a.cols,
        data: a.data.iter().map(|&v| v as i32).collect(),
    }
}

fn check_fp32_exact(m: &Fp64Matrix, what: &str) -> Result<()> {
    let _ = what;
    for (p, &v) in m.data.iter().enumerate() {
        if !v.is_finite() {
            return Err(Error::NonFinite {
                row: p / m.cols,
                col: p % m.cols,
            });
        }
        if valid_mantissa_length(v) > 24 {
            return Err(Error::NotRepresentable {
                bits: 24,
                row: p / m.cols,
                col: p % m.cols,
            });
        }
    }
    Ok(())
}

/// GEMM over FP32-exact operands, emulating a working-precision unit.
///
/// Operands must be exactly representable in a 24-bit significand; when
/// they come from the floating split with matching `k`, every partial sum
/// of the dot product is also 24-bit representable, so the FP64 loop below
/// performs the identical (rounding-free) computation the FP32 unit would.
/// Debug builds verify the output against the double-double reference.
pub fn fp32_gemm(a: &Fp64Matrix, b: &Fp64Matrix) -> Result<Fp64Matrix> {
    check_fp32_exact(a, "a")?;
    check_fp32_exact(b, "b")?;
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "inner dimensions {} and {} differ",
            a.cols, b.rows
        )));
    }
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut c = Fp64Matrix::zeros(m, n);
    c.data.par_chunks_mut(n).enumerate().for_each(|(i, crow)| {
        let arow = &a.data[i * k..(i + 1) * k];
        for (l, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let brow = &b.data[l * n..(l + 1) * n];
            for (cv, &bv) in crow.iter_mut().zip(brow) {
                *cv += av * bv;
            }
        }
    });
    #[cfg(debug_assertions)]
    {
        let dd_ref = crate::dd::dd_gemm(a, b).expect("shapes already checked");
        for (p, (&cv, rv)) in c.data.iter().zip(&dd_ref.data).enumerate() {
            debug_assert_eq!(
                cv,
                rv.to_f64(),
                "fp32_gemm rounded at ({}, {})",
                p / n,
                p % n
            );
            debug_assert_eq!(rv.lo, 0.0, "inexact dot product at ({}, {})", p / n, p % n);
        }
    }
    Ok(c)
}

/// GEMM executed in genuine FP32 arithmetic: operands convert to f32
/// (rounding if they are not exactly representable), products and the
/// ascending-index accumulation run in f32, and the result widens back.
///
/// This is what the emulated unit computes for arbitrary inputs. On
/// operands from the floating split it agrees bitwise with [`fp32_gemm`]
/// for the rounding-free slice pairs and models the hardware rounding for
/// pairs touching the residual slice.
pub fn fp32_gemm_device(a: &Fp64Matrix, b: &Fp64Matrix) -> Result<Fp64Matrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "inner dimensions {} and {} differ",
            a.cols, b.rows
        )));
    }
    if let Some((row, col)) = a.find_non_finite() {
        return Err(Error::NonFinite { row, col });
    }
    if let Some((row, col)) = b.find_non_finite() {
        return Err(Error::NonFinite { row, col });
    }
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let a32: Vec<f32> = a.data.iter().map(|&v| v as f32).collect();
    let b32: Vec<f32> = b.data.iter().map(|&v| v as f32).collect();
    let mut c = Fp64Matrix::zeros(m, n);
    c.data.par_chunks_mut(n).enumerate().for_each(|(i, crow)| {
        let arow = &a32[i * k..(i + 1) * k];
        let mut acc = vec![0.0f32; n];
        for (l, &av) in arow.iter().enumerate() {
            if av == 0.0 {
                continue;
            }
            let brow = &b32[l * n..(l + 1) * n];
            for (cv, &bv) in acc.iter_mut().zip(brow) {
                *cv += av * bv;
            }
        }
        for (cv, &v) in crow.iter_mut().zip(&acc) {
            *cv = v as f64;
        }
    });
    Ok(c)
}
