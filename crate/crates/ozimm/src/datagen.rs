//! Deterministic, seeded generators for every experimental input:
//! exponent-spread random matrices, approximate-inverse pairs and Haar
//! random unitaries, plus the dense solver behind the inverse pairs.
//!
//! Randomness comes from ChaCha8 keyed by a 64-bit seed with a 64-bit
//! stream id, and every integer-to-float conversion is spelled out here,
//! so a (seed, stream) pair reproduces the same matrix bit for bit.
//! Normal variates use the AS241 inverse-CDF rational approximation on
//! open-interval uniforms; the few `ln`/`exp`/`sqrt` calls are the only
//! libm dependence.

use num_complex::Complex64;
use rand_chacha::ChaCha8Rng;
use rand_core::{RngCore, SeedableRng};

use crate::error::{Error, Result};
use crate::matrix::{dgemm_f64, CpxMatrix, Fp64Matrix};

/// Seed plus stream id; the same pair yields the same sequence on every
/// platform.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RngSeed {
    pub seed: u64,
    pub stream: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream: u64) -> Self {
        Self { seed, stream }
    }

    pub fn with_stream(self, stream: u64) -> Self {
        Self {
            seed: self.seed,
            stream,
        }
    }

    fn rng(self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream);
        rng
    }
}

/// Uniform in [0, 1): the top 53 bits of one u64 draw.
#[inline]
fn unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    (rng.next_u64() >> 11) as f64 * 2f64.powi(-53)
}

/// Uniform in (0, 1), endpoints excluded, for inverse-CDF use.
#[inline]
fn open_unit_f64(rng: &mut ChaCha8Rng) -> f64 {
    ((rng.next_u64() >> 11) as f64 + 0.5) * 2f64.powi(-53)
}

/// Standard normal via the AS241 (PPND16) inverse normal CDF.
#[inline]
fn normal_f64(rng: &mut ChaCha8Rng) -> f64 {
    inverse_normal_cdf(open_unit_f64(rng))
}

/// AS241 rational approximation of the inverse standard normal CDF,
/// accurate to about 1e-16 over (0, 1). Coefficients are the published
/// values, kept digit for digit.
#[allow(clippy::excessive_precision)]
pub fn inverse_normal_cdf(p: f64) -> f64 {
    debug_assert!(p > 0.0 && p < 1.0);
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        let num = ((((((2.5090809287301226727e3 * r + 3.3430575583588128105e4) * r
            + 6.7265770927008700853e4)
            * r
            + 4.5921953931549871457e4)
            * r
            + 1.3731693765509461125e4)
            * r
            + 1.9715909503065514427e3)
            * r
            + 1.3314166789178437745e2)
            * r
            + 3.3871328727963666080e0;
        let den = ((((((5.2264952788528545610e3 * r + 2.8729085735721942674e4) * r
            + 3.9307895800092710610e4)
            * r
            + 2.1213794301586595867e4)
            * r
            + 5.3941960214247511077e3)
            * r
            + 6.8718700749205790830e2)
            * r
            + 4.2313330701600911252e1)
            * r
            + 1.0;
        return q * num / den;
    }
    let r = if q < 0.0 { p } else { 1.0 - p };
    let mut r = (-r.ln()).sqrt();
    let x = if r <= 5.0 {
        r -= 1.6;
        let num = ((((((7.74545014278341407640e-4 * r + 2.27238449892691845833e-2) * r
            + 2.41780725177450611770e-1)
            * r
            + 1.27045825245236838258e0)
            * r
            + 3.64784832476320460504e0)
            * r
            + 5.76949722146069140550e0)
            * r
            + 4.63033784615654529590e0)
            * r
            + 1.42343711074968357734e0;
        let den = ((((((1.05075007164441684324e-9 * r + 5.47593808499534494600e-4) * r
            + 1.51986665636164571966e-2)
            * r
            + 1.48103976427480074590e-1)
            * r
            + 6.89767334985100004550e-1)
            * r
            + 1.67638483018380384940e0)
            * r
            + 2.05319162663775882187e0)
            * r
            + 1.0;
        num / den
    } else {
        r -= 5.0;
        let num = ((((((2.01033439929228813265e-7 * r + 2.71155556874348757815e-5) * r
            + 1.24266094738807843860e-3)
            * r
            + 2.65321895265761230930e-2)
            * r
            + 2.96560571828504891230e-1)
            * r
            + 1.78482653991729133580e0)
            * r
            + 5.46378491116411436990e0)
            * r
            + 6.65790464350110377720e0;
        let den = ((((((2.04426310338993978564e-15 * r + 1.42151175831644588870e-7) * r
            + 1.84631831751005468180e-5)
            * r
            + 7.86869131145613259100e-4)
            * r
            + 1.48753612908506148525e-2)
            * r
            + 1.36929880922735805310e-1)
            * r
            + 5.99832206555887937690e-1)
            * r
            + 1.0;
        num / den
    };
    if q < 0.0 {
        -x
    } else {
        x
    }
}

/// Matrix with entries `uniform(-0.5, 0.5) * e^(phi * normal(0, 1))`;
/// `phi` widens the exponent distribution. Entries are drawn row-major,
/// uniform before normal.
pub fn gen_phi_matrix(rows: usize, cols: usize, phi: f64, seed: RngSeed) -> Fp64Matrix {
    assert!(phi.is_finite(), "phi must be finite");
    let mut rng = seed.rng();
    Fp64Matrix::from_fn(rows, cols, |_, _| {
        let u = unit_f64(&mut rng) - 0.5;
        let g = normal_f64(&mut rng);
        u * (phi * g).exp()
    })
}

/// Standard-normal matrix, row-major draw order.
pub fn gen_normal_matrix(rows: usize, cols: usize, seed: RngSeed) -> Fp64Matrix {
    let mut rng = seed.rng();
    Fp64Matrix::from_fn(rows, cols, |_, _| normal_f64(&mut rng))
}

/// Solution of a dense system with its residual.
#[derive(Debug, Clone)]
pub struct LuSolution {
    pub x: Fp64Matrix,
    /// max |A x - b| over all entries, from a plain FP64 residual pass.
    pub residual_inf: f64,
}

/// Solve A X = B by LU decomposition with partial pivoting.
pub fn lu_solve(a: &Fp64Matrix, b: &Fp64Matrix) -> Result<LuSolution> {
    if a.rows != a.cols {
        return Err(Error::DimensionMismatch("LU needs a square matrix".into()));
    }
    if b.rows != a.rows {
        return Err(Error::DimensionMismatch(format!(
            "rhs has {} rows, matrix is {}x{}",
            b.rows, a.rows, a.cols
        )));
    }
    let n = a.rows;
    let nrhs = b.cols;
    let mut lu = a.data.clone();
    let mut perm: Vec<usize> = (0..n).collect();

    for col in 0..n {
        let mut pivot_row = col;
        let mut pivot_val = lu[col * n + col].abs();
        for r in col + 1..n {
            let v = lu[r * n + col].abs();
            if v > pivot_val {
                pivot_val = v;
                pivot_row = r;
            }
        }
        if pivot_val < 1e-300 {
            return Err(Error::Singular(format!(
                "pivot {pivot_val:e} at column {col}"
            )));
        }
        if pivot_row != col {
            for j in 0..n {
                lu.swap(col * n + j, pivot_row * n + j);
            }
            perm.swap(col, pivot_row);
        }
        let inv_p = 1.0 / lu[col * n + col];
        for r in col + 1..n {
            let f = lu[r * n + col] * inv_p;
            lu[r * n + col] = f;
            for j in col + 1..n {
                lu[r * n + j] -= f * lu[col * n + j];
            }
        }
    }

    // permute rhs, forward substitution (unit lower), back substitution
    let mut x = Fp64Matrix::zeros(n, nrhs);
    for (i, &pi) in perm.iter().enumerate() {
        for j in 0..nrhs {
            x.data[i * nrhs + j] = b.data[pi * nrhs + j];
        }
    }
    for i in 0..n {
        for l in 0..i {
            let f = lu[i * n + l];
            if f != 0.0 {
                for j in 0..nrhs {
                    x.data[i * nrhs + j] -= f * x.data[l * nrhs + j];
                }
            }
        }
    }
    for i in (0..n).rev() {
        for l in i + 1..n {
            let f = lu[i * n + l];
            if f != 0.0 {
                for j in 0..nrhs {
                    x.data[i * nrhs + j] -= f * x.data[l * nrhs + j];
                }
            }
        }
        let inv_p = 1.0 / lu[i * n + i];
        for j in 0..nrhs {
            x.data[i * nrhs + j] *= inv_p;
        }
    }

    let ax = dgemm_f64(a, &x)?;
    let residual_inf = ax
        .data
        .iter()
        .zip(&b.data)
        .fold(0.0f64, |m, (&l, &r)| m.max((l - r).abs()));
    Ok(LuSolution { x, residual_inf })
}

/// A standard-normal matrix and its numerically solved right inverse
/// (A X = I). A singular draw is regenerated from the next stream.
pub fn gen_inverse_pair(n: usize, seed: RngSeed) -> Result<(Fp64Matrix, Fp64Matrix)> {
    assert!(n >= 1);
    let mut attempt = seed;
    for _ in 0..8 {
        let a = gen_normal_matrix(n, n, attempt);
        match lu_solve(&a, &Fp64Matrix::identity(n)) {
            Ok(sol) => return Ok((a, sol.x)),
            Err(Error::Singular(_)) => {
                eprintln!(
                    "gen_inverse_pair: singular draw at stream {}, regenerating",
                    attempt.stream
                );
                attempt = attempt.with_stream(attempt.stream + 1);
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::Singular("eight singular draws in a row".into()))
}

/// Haar-random unitary: QR of a complex Ginibre matrix with the diagonal
/// phase correction R_ii / |R_ii| applied to the columns of Q.
/// Ginibre entries are drawn row-major, real part before imaginary.
pub fn haar_unitary(dim: usize, seed: RngSeed) -> CpxMatrix {
    assert!(dim >= 1);
    let mut rng = seed.rng();
    let inv_sqrt2 = 0.5f64.sqrt();
    let mut g = CpxMatrix::zeros(dim, dim);
    for v in g.data.iter_mut() {
        let re = normal_f64(&mut rng) * inv_sqrt2;
        let im = normal_f64(&mut rng) * inv_sqrt2;
        *v = Complex64::new(re, im);
    }
    let (q, r_diag) = householder_qr(&mut g);
    let mut u = q;
    let dim_n = u.rows;
    for (j, d) in r_diag.iter().enumerate() {
        let phase = if d.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            d / d.norm()
        };
        for i in 0..dim_n {
            let idx = i * dim_n + j;
            u.data[idx] *= phase;
        }
    }
    u
}

/// In-place Householder QR of a square complex matrix; returns Q and the
/// diagonal of R.
#[allow(clippy::needless_range_loop)]
fn householder_qr(a: &mut CpxMatrix) -> (CpxMatrix, Vec<Complex64>) {
    let n = a.rows;
    let mut q = CpxMatrix::identity(n);
    let mut v = vec![Complex64::new(0.0, 0.0); n];

    for col in 0..n {
        let mut norm_sq = 0.0f64;
        for i in col..n {
            norm_sq += a.get(i, col).norm_sqr();
        }
        let norm = norm_sq.sqrt();
        if norm == 0.0 {
            continue;
        }
        let x0 = a.get(col, col);
        let phase = if x0.norm() == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            x0 / x0.norm()
        };
        let alpha = -phase * norm;

        let mut vnorm_sq = 0.0f64;
        for i in col..n {
            let vi = if i == col {
                a.get(i, col) - alpha
            } else {
                a.get(i, col)
            };
            v[i] = vi;
            vnorm_sq += vi.norm_sqr();
        }
        if vnorm_sq == 0.0 {
            continue;
        }
        let scale = 2.0 / vnorm_sq;

        // A[col.., col..] -= scale * v (v^H A)
        for j in col..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for i in col..n {
                dot += v[i].conj() * a.get(i, j);
            }
            dot *= scale;
            for i in col..n {
                let upd = a.get(i, j) - v[i] * dot;
                a.set(i, j, upd);
            }
        }
        // Q[.., col..] -= scale * (Q v) v^H
        for i in 0..n {
            let mut dot = Complex64::new(0.0, 0.0);
            for l in col..n {
                dot += q.get(i, l) * v[l];
            }
            dot *= scale;
            for l in col..n {
                let upd = q.get(i, l) - dot * v[l].conj();
                q.set(i, l, upd);
            }
        }
    }
    let r_diag = (0..n).map(|i| a.get(i, i)).collect();
    (q, r_diag)
}

/// max |U U^H - I|, the unitarity defect.
pub fn unitarity_defect(u: &CpxMatrix) -> f64 {
    let n = u.rows;
    let mut worst = 0.0f64;
    for i in 0..n {
        for j in 0..n {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..n {
                acc += u.get(i, l) * u.get(j, l).conj();
            }
            let expect = if i == j { 1.0 } else { 0.0 };
            worst = worst.max((acc - Complex64::new(expect, 0.0)).norm());
        }
    }
    worst
}
