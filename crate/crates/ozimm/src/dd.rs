//! Double-double arithmetic and the reference GEMM used as ground truth
//! for every error measurement.
//!
//! A value is stored as the unevaluated sum `hi + lo` of two FP64 numbers
//! with `hi = fl(hi + lo)`, giving roughly a 106-bit significand. The
//! accumulation order in the reference GEMM is fixed (ascending inner
//! index) so results are bitwise reproducible across runs and thread
//! counts.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::matrix::{CpxMatrix, Fp64Matrix};

/// Unevaluated sum of two FP64 values, `hi + lo`, renormalized.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DdValue {
    pub hi: f64,
    pub lo: f64,
}

impl DdValue {
    pub const ZERO: DdValue = DdValue { hi: 0.0, lo: 0.0 };

    #[inline]
    pub fn from_f64(x: f64) -> Self {
        DdValue { hi: x, lo: 0.0 }
    }

    #[inline]
    pub fn to_f64(self) -> f64 {
        self.hi + self.lo
    }

    #[inline]
    pub fn abs(self) -> Self {
        if self.hi < 0.0 || (self.hi == 0.0 && self.lo < 0.0) {
            -self
        } else {
            self
        }
    }

    pub fn is_finite(self) -> bool {
        self.hi.is_finite() && self.lo.is_finite()
    }
}

/// Error-free sum: `hi = fl(a + b)`, `hi + lo = a + b` exactly (Knuth).
#[inline]
pub fn two_sum(a: f64, b: f64) -> DdValue {
    let s = a + b;
    let bb = s - a;
    let err = (a - (s - bb)) + (b - bb);
    DdValue { hi: s, lo: err }
}

/// Fast variant, valid when |a| >= |b|.
#[inline]
pub fn quick_two_sum(a: f64, b: f64) -> DdValue {
    let s = a + b;
    let err = b - (s - a);
    DdValue { hi: s, lo: err }
}

/// Error-free product: `hi = fl(a * b)`, `hi + lo = a * b` exactly.
/// Overflow propagates as non-finite; if the exact product underflows
/// below the subnormal range the error term is itself rounded.
#[inline]
pub fn two_prod(a: f64, b: f64) -> DdValue {
    let p = a * b;
    let e = f64::mul_add(a, b, -p);
    DdValue { hi: p, lo: e }
}

impl std::ops::Neg for DdValue {
    type Output = DdValue;

    #[inline]
    fn neg(self) -> DdValue {
        DdValue {
            hi: -self.hi,
            lo: -self.lo,
        }
    }
}

/// Full double-double addition (Hida-style accurate variant).
#[inline]
pub fn dd_add(a: DdValue, b: DdValue) -> DdValue {
    let s = two_sum(a.hi, b.hi);
    let t = two_sum(a.lo, b.lo);
    let mut lo = s.lo + t.hi;
    let r = quick_two_sum(s.hi, lo);
    lo = t.lo + r.lo;
    quick_two_sum(r.hi, lo)
}

#[inline]
pub fn dd_sub(a: DdValue, b: DdValue) -> DdValue {
    dd_add(a, -b)
}

/// Double-double multiplication.
#[inline]
pub fn dd_mul(a: DdValue, b: DdValue) -> DdValue {
    let p = two_prod(a.hi, b.hi);
    let e = a.hi * b.lo + a.lo * b.hi + p.lo;
    quick_two_sum(p.hi, e)
}

/// `a * b` with an FP64 right factor.
#[inline]
pub fn dd_mul_f64(a: DdValue, b: f64) -> DdValue {
    let p = two_prod(a.hi, b);
    let e = a.lo * b + p.lo;
    quick_two_sum(p.hi, e)
}

/// Accumulate the exact product `x * y` into `acc`.
#[inline]
pub fn dd_fma_acc(acc: DdValue, x: f64, y: f64) -> DdValue {
    dd_add(acc, two_prod(x, y))
}

/// Dense matrix of double-double entries.
#[derive(Debug, Clone, PartialEq)]
pub struct DdMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<DdValue>,
}

impl DdMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![DdValue::ZERO; rows * cols],
        }
    }

    pub fn from_f64(m: &Fp64Matrix) -> Self {
        Self {
            rows: m.rows,
            cols: m.cols,
            data: m.data.iter().map(|&v| DdValue::from_f64(v)).collect(),
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> DdValue {
        self.data[i * self.cols + j]
    }

    pub fn to_f64(&self) -> Fp64Matrix {
        Fp64Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|v| v.to_f64()).collect(),
        }
    }
}

/// Complex double-double matrix stored as (re, im) pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct DdCpxMatrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<(DdValue, DdValue)>,
}

impl DdCpxMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![(DdValue::ZERO, DdValue::ZERO); rows * cols],
        }
    }

    pub fn from_cpx(m: &CpxMatrix) -> Self {
        Self {
            rows: m.rows,
            cols: m.cols,
            data: m
                .data
                .iter()
                .map(|z| (DdValue::from_f64(z.re), DdValue::from_f64(z.im)))
                .collect(),
        }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> (DdValue, DdValue) {
        self.data[i * self.cols + j]
    }

    pub fn to_cpx(&self) -> CpxMatrix {
        CpxMatrix {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .map(|(re, im)| Complex64::new(re.to_f64(), im.to_f64()))
                .collect(),
        }
    }
}

/// Reference GEMM: every entry is the dot product accumulated in
/// double-double arithmetic with ascending inner index.
pub fn dd_gemm(a: &Fp64Matrix, b: &Fp64Matrix) -> Result<DdMatrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "inner dimensions {} and {} differ",
            a.cols, b.rows
        )));
    }
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut c = DdMatrix::zeros(m, n);
    c.data.par_chunks_mut(n).enumerate().for_each(|(i, crow)| {
        let arow = &a.data[i * k..(i + 1) * k];
        for (j, cv) in crow.iter_mut().enumerate() {
            let mut acc = DdValue::ZERO;
            for (l, &av) in arow.iter().enumerate() {
                acc = dd_fma_acc(acc, av, b.data[l * n + j]);
            }
            *cv = acc;
        }
    });
    Ok(c)
}

/// Complex reference GEMM. Per entry the four real accumulations run in a
/// fixed interleaved order over the inner index.
pub fn dd_zgemm(a: &CpxMatrix, b: &CpxMatrix) -> Result<DdCpxMatrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "inner dimensions {} and {} differ",
            a.cols, b.rows
        )));
    }
    let (m, k, n) = (a.rows, a.cols, b.cols);
    let mut c = DdCpxMatrix::zeros(m, n);
    c.data.par_chunks_mut(n).enumerate().for_each(|(i, crow)| {
        let arow = &a.data[i * k..(i + 1) * k];
        for (j, cv) in crow.iter_mut().enumerate() {
            let mut re = DdValue::ZERO;
            let mut im = DdValue::ZERO;
            for (l, &av) in arow.iter().enumerate() {
                let bv = b.data[l * n + j];
                re = dd_fma_acc(re, av.re, bv.re);
                re = dd_sub(re, two_prod(av.im, bv.im));
                im = dd_fma_acc(im, av.re, bv.im);
                im = dd_fma_acc(im, av.im, bv.re);
            }
            *cv = (re, im);
        }
    });
    Ok(c)
}

/// Elementwise relative-error statistics of a computed matrix against the
/// double-double reference.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub mean: f64,
    pub max: f64,
    /// Entries where the reference is exactly zero; they are excluded from
    /// the statistics and reported here.
    pub zero_refs: usize,
    /// Entries included in the mean.
    pub count: usize,
}

fn finalize_stats(errs: Vec<Option<f64>>) -> ErrorStats {
    let mut sum = 0.0;
    let mut max = 0.0f64;
    let mut zero_refs = 0usize;
    let mut count = 0usize;
    for e in errs {
        match e {
            Some(v) => {
                sum += v;
                max = max.max(v);
                count += 1;
            }
            None => zero_refs += 1,
        }
    }
    let mean = if count > 0 { sum / count as f64 } else { 0.0 };
    ErrorStats {
        mean,
        max,
        zero_refs,
        count,
    }
}

/// |C - C_ref| / |C_ref| per element; differences evaluated in
/// double-double, the final quotient in FP64.
pub fn relative_error_stats(c: &Fp64Matrix, c_ref: &DdMatrix) -> Result<ErrorStats> {
    if c.rows != c_ref.rows || c.cols != c_ref.cols {
        return Err(Error::DimensionMismatch("stats shapes differ".into()));
    }
    let errs: Vec<Option<f64>> = c
        .data
        .par_iter()
        .zip(&c_ref.data)
        .map(|(&v, &r)| {
            if r.hi == 0.0 && r.lo == 0.0 {
                None
            } else {
                let diff = dd_sub(DdValue::from_f64(v), r).abs().to_f64();
                Some(diff / r.abs().to_f64())
            }
        })
        .collect();
    Ok(finalize_stats(errs))
}

/// Complex variant: modulus of the difference over modulus of the
/// reference, with the squared moduli accumulated in double-double.
pub fn relative_error_stats_cpx(c: &CpxMatrix, c_ref: &DdCpxMatrix) -> Result<ErrorStats> {
    if c.rows != c_ref.rows || c.cols != c_ref.cols {
        return Err(Error::DimensionMismatch("stats shapes differ".into()));
    }
    let errs: Vec<Option<f64>> = c
        .data
        .par_iter()
        .zip(&c_ref.data)
        .map(|(&v, &(rre, rim))| {
            let ref_sq = dd_add(dd_mul(rre, rre), dd_mul(rim, rim));
            if ref_sq.hi == 0.0 && ref_sq.lo == 0.0 {
                None
            } else {
                let dre = dd_sub(DdValue::from_f64(v.re), rre);
                let dim = dd_sub(DdValue::from_f64(v.im), rim);
                let diff_sq = dd_add(dd_mul(dre, dre), dd_mul(dim, dim));
                Some((diff_sq.to_f64() / ref_sq.to_f64()).sqrt())
            }
        })
        .collect();
    Ok(finalize_stats(errs))
}
