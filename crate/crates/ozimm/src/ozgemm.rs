//! The Ozaki-scheme orchestrator: FP64 (and complex FP64) matrix products
//! assembled from exact low-precision slice products.
//!
//! The integer path splits both operands into block-float slices, runs
//! every slice pair with i + j <= s + 1 through the exact integer kernel
//! and accumulates the scaled products into FP64 in a fixed double-loop
//! order. Scale factors are powers of two applied by exponent arithmetic,
//! so the only roundings in the whole pipeline are the FP64 additions of
//! the accumulation step.
//!
//! The floating path is the working-precision comparator built on the
//! sigma-split and the FP32 kernel. AUTO split selection scans operand
//! elements and picks the smallest split count whose mean mantissa loss
//! stays within a threshold.

use std::time::Instant;

use rayon::prelude::*;

use crate::bits::ldexp;
use crate::dd::{dd_gemm, dd_zgemm};
use crate::error::{Error, Result};
use crate::kernel::{fp32_gemm_device, int_gemm, AccMatrix, IntSliceMatrix};
use crate::matrix::{dgemm_f64, zgemm_f64, CpxMatrix, Fp64Matrix};
use crate::mmu::MmuSpec;
use crate::split::{
    int_slice_width, loss_from_needs, mantissa_needs, split_fp, split_int, SliceSet, FP32_ACC_BITS,
    ZERO_ROW,
};

/// Default cap on automatically selected split counts.
pub const DEFAULT_S_MAX: u32 = 18;

/// How the split count is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SplitSel {
    Fixed(u32),
    /// Smallest split count whose mean mantissa loss is at most the
    /// threshold (in bits), capped at `s_max`.
    Auto {
        threshold: f64,
    },
}

/// Which arithmetic executes the slice products.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OzPath {
    Integer,
    Floating,
}

/// Configuration of one Ozaki-scheme product.
#[derive(Debug, Clone)]
pub struct OzConfig {
    pub splits: SplitSel,
    pub mmu: MmuSpec,
    pub path: OzPath,
    /// Cap for AUTO selection.
    pub s_max: u32,
    /// Compute all s x s slice pairs instead of the i + j <= s + 1
    /// triangle; used for truncation-error analysis.
    pub keep_all_pairs: bool,
}

impl OzConfig {
    pub fn int8_fixed(s: u32) -> Self {
        OzConfig {
            splits: SplitSel::Fixed(s),
            mmu: MmuSpec::int8_int32(),
            path: OzPath::Integer,
            s_max: DEFAULT_S_MAX,
            keep_all_pairs: false,
        }
    }

    pub fn int8_auto(threshold: f64) -> Self {
        OzConfig {
            splits: SplitSel::Auto { threshold },
            mmu: MmuSpec::int8_int32(),
            path: OzPath::Integer,
            s_max: DEFAULT_S_MAX,
            keep_all_pairs: false,
        }
    }

    fn validate(&self) -> Result<()> {
        match self.splits {
            SplitSel::Fixed(s) if s >= 1 => Ok(()),
            SplitSel::Fixed(s) => Err(Error::InvalidArgument(format!("split count {s} < 1"))),
            SplitSel::Auto { threshold } => {
                if threshold < 0.0 || !threshold.is_finite() {
                    return Err(Error::InvalidArgument(format!(
                        "loss threshold {threshold} must be finite and >= 0"
                    )));
                }
                if self.path != OzPath::Integer {
                    return Err(Error::InvalidArgument(
                        "AUTO split selection is only valid on the integer path".into(),
                    ));
                }
                Ok(())
            }
        }
    }
}

/// Wall-clock phase breakdown of one product, in seconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PhaseTimings {
    pub split: f64,
    pub slice_gemm: f64,
    pub accumulate: f64,
}

/// What one Ozaki-scheme product did.
#[derive(Debug, Clone, PartialEq)]
pub struct GemmReport {
    pub splits_used: u32,
    /// Low-precision GEMM calls per real product: s(s+1)/2.
    pub gemm_calls: u64,
    /// Real slice-product sums behind the output: 1 for real, 4 for
    /// complex.
    pub real_products: u32,
    /// Working memory of all concurrent slice sets, in bytes.
    pub slice_bytes: u64,
    /// AUTO hit the cap without reaching the loss threshold.
    pub splits_capped: bool,
    pub timing: PhaseTimings,
}

/// AUTO split decision.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AutoChoice {
    pub splits: u32,
    pub capped: bool,
}

fn auto_from_needs(need_sets: &[&[u32]], w: u32, threshold: f64, s_max: u32) -> AutoChoice {
    for s in 1..=s_max {
        let worst = need_sets
            .iter()
            .map(|needs| loss_from_needs(needs, s * w).mean_bits)
            .fold(0.0f64, f64::max);
        if worst <= threshold {
            return AutoChoice {
                splits: s,
                capped: false,
            };
        }
    }
    AutoChoice {
        splits: s_max,
        capped: true,
    }
}

/// Smallest split count keeping the mean mantissa loss of both operands
/// within `threshold` bits; A is scanned by rows, B by columns.
pub fn auto_splits(
    a: &Fp64Matrix,
    b: &Fp64Matrix,
    mmu: &MmuSpec,
    threshold: f64,
) -> Result<AutoChoice> {
    auto_splits_with_max(a, b, mmu, threshold, DEFAULT_S_MAX)
}

pub fn auto_splits_with_max(
    a: &Fp64Matrix,
    b: &Fp64Matrix,
    mmu: &MmuSpec,
    threshold: f64,
    s_max: u32,
) -> Result<AutoChoice> {
    if threshold < 0.0 || !threshold.is_finite() {
        return Err(Error::InvalidArgument(
            "threshold must be finite and >= 0".into(),
        ));
    }
    let w = int_slice_width(mmu, a.cols as u64)?;
    let needs_a = mantissa_needs(a)?;
    let needs_b = mantissa_needs(&b.transpose())?;
    Ok(auto_from_needs(&[&needs_a, &needs_b], w, threshold, s_max))
}

/// Accumulate one integer slice product into C with the power-of-two pair
/// scale applied by exponent addition:
/// `C_rc += P_rc * 2^(ea_r + eb_c + shift)`.
fn accumulate_scaled(
    c: &mut Fp64Matrix,
    p: &AccMatrix,
    row_exp_a: &[i32],
    row_exp_b: &[i32],
    shift: i32,
) {
    let n = c.cols;
    c.data
        .par_chunks_mut(n)
        .zip(p.data.par_chunks(n))
        .enumerate()
        .for_each(|(r, (crow, prow))| {
            let ea = row_exp_a[r];
            if ea == ZERO_ROW {
                return;
            }
            for ((cv, &pv), &eb) in crow.iter_mut().zip(prow).zip(row_exp_b) {
                if pv != 0 && eb != ZERO_ROW {
                    *cv += ldexp(pv as f64, ea + eb + shift);
                }
            }
        });
}

/// One operand pair split and laid out for the integer kernel.
struct IntOperands {
    sa: SliceSet,
    /// Column-scaled slices of B, transposed to k x n for the kernel.
    sb_kxn: Vec<IntSliceMatrix>,
    sb_row_exp: Vec<i32>,
    sb_bytes: u64,
}

fn split_int_operands(
    a: &Fp64Matrix,
    b: &Fp64Matrix,
    s: u32,
    mmu: &MmuSpec,
) -> Result<IntOperands> {
    let k = a.cols as u64;
    let sa = split_int(a, s, mmu, k)?;
    let sbt = split_int(&b.transpose(), s, mmu, k)?;
    let sb_kxn = sbt.slices.iter().map(|sl| sl.transpose()).collect();
    let sb_bytes = sbt.storage_bytes(mmu.input_bytes);
    Ok(IntOperands {
        sa,
        sb_kxn,
        sb_row_exp: sbt.row_exp2,
        sb_bytes,
    })
}

/// Scaled sum of slice products in the fixed Algorithm order: i outer
/// ascending, j inner ascending, j bounded by the triangle unless
/// `keep_all_pairs`.
fn pair_sum_int(
    sa: &SliceSet,
    sb_kxn: &[IntSliceMatrix],
    sb_row_exp: &[i32],
    rows: usize,
    cols: usize,
    keep_all_pairs: bool,
    timing: &mut PhaseTimings,
) -> Result<(Fp64Matrix, u64)> {
    let s = sa.splits;
    let w = sa.width;
    let mut c = Fp64Matrix::zeros(rows, cols);
    let mut calls = 0u64;
    for i in 1..=s {
        let j_hi = if keep_all_pairs { s } else { s + 1 - i };
        for j in 1..=j_hi {
            let t0 = Instant::now();
            let p = int_gemm(&sa.slices[(i - 1) as usize], &sb_kxn[(j - 1) as usize])?;
            timing.slice_gemm += t0.elapsed().as_secs_f64();
            let t1 = Instant::now();
            let shift = -((i + j) as i32) * w as i32;
            accumulate_scaled(&mut c, &p, &sa.row_exp2, sb_row_exp, shift);
            timing.accumulate += t1.elapsed().as_secs_f64();
            calls += 1;
        }
    }
    Ok((c, calls))
}

/// FP64 matrix product emulated on the integer unit: split, exact slice
/// products over the i + j <= s + 1 triangle, scaled FP64 accumulation.
pub fn oz_dgemm(
    a: &Fp64Matrix,
    b: &Fp64Matrix,
    cfg: &OzConfig,
) -> Result<(Fp64Matrix, GemmReport)> {
    cfg.validate()?;
    if cfg.path != OzPath::Integer {
        return Err(Error::InvalidArgument(
            "oz_dgemm runs the integer path; use oz_dgemm_fp for the floating path".into(),
        ));
    }
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "inner dimensions {} and {} differ",
            a.cols, b.rows
        )));
    }
    let k = a.cols as u64;
    let w = int_slice_width(&cfg.mmu, k)?;
    let mut timing = PhaseTimings::default();

    let t0 = Instant::now();
    let (s, capped) = match cfg.splits {
        SplitSel::Fixed(s) => (s, false),
        SplitSel::Auto { threshold } => {
            let needs_a = mantissa_needs(a)?;
            let needs_b = mantissa_needs(&b.transpose())?;
            let choice = auto_from_needs(&[&needs_a, &needs_b], w, threshold, cfg.s_max);
            (choice.splits, choice.capped)
        }
    };
    let ops = split_int_operands(a, b, s, &cfg.mmu)?;
    timing.split = t0.elapsed().as_secs_f64();

    let slice_bytes = ops.sa.storage_bytes(cfg.mmu.input_bytes) + ops.sb_bytes;
    let (c, calls) = pair_sum_int(
        &ops.sa,
        &ops.sb_kxn,
        &ops.sb_row_exp,
        a.rows,
        b.cols,
        cfg.keep_all_pairs,
        &mut timing,
    )?;
    Ok((
        c,
        GemmReport {
            splits_used: s,
            gemm_calls: calls,
            real_products: 1,
            slice_bytes,
            splits_capped: capped,
            timing,
        },
    ))
}

/// Complex product via four real slice-product sums
/// (ReA ReB - ImA ImB, ReA ImB + ImA ReB); real and imaginary parts are
/// separated once, while splitting, and the four slice sets are reused.
pub fn oz_zgemm(a: &CpxMatrix, b: &CpxMatrix, cfg: &OzConfig) -> Result<(CpxMatrix, GemmReport)> {
    cfg.validate()?;
    if cfg.path != OzPath::Integer {
        return Err(Error::InvalidArgument(
            "oz_zgemm runs the integer path".into(),
        ));
    }
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "inner dimensions {} and {} differ",
            a.cols, b.rows
        )));
    }
    let k = a.cols as u64;
    let w = int_slice_width(&cfg.mmu, k)?;
    let (are, aim) = a.split_re_im();
    let (bre, bim) = b.split_re_im();
    let mut timing = PhaseTimings::default();

    let t0 = Instant::now();
    let (s, capped) = match cfg.splits {
        SplitSel::Fixed(s) => (s, false),
        SplitSel::Auto { threshold } => {
            let na_re = mantissa_needs(&are)?;
            let na_im = mantissa_needs(&aim)?;
            let nb_re = mantissa_needs(&bre.transpose())?;
            let nb_im = mantissa_needs(&bim.transpose())?;
            let choice =
                auto_from_needs(&[&na_re, &na_im, &nb_re, &nb_im], w, threshold, cfg.s_max);
            (choice.splits, choice.capped)
        }
    };
    let o_re = split_int_operands(&are, &bre, s, &cfg.mmu)?;
    let o_im = split_int_operands(&aim, &bim, s, &cfg.mmu)?;
    timing.split = t0.elapsed().as_secs_f64();

    let (m, n) = (a.rows, b.cols);
    let kap = cfg.keep_all_pairs;
    let (p_rr, calls) = pair_sum_int(
        &o_re.sa,
        &o_re.sb_kxn,
        &o_re.sb_row_exp,
        m,
        n,
        kap,
        &mut timing,
    )?;
    let (p_ii, _) = pair_sum_int(
        &o_im.sa,
        &o_im.sb_kxn,
        &o_im.sb_row_exp,
        m,
        n,
        kap,
        &mut timing,
    )?;
    let (p_ri, _) = pair_sum_int(
        &o_re.sa,
        &o_im.sb_kxn,
        &o_im.sb_row_exp,
        m,
        n,
        kap,
        &mut timing,
    )?;
    let (p_ir, _) = pair_sum_int(
        &o_im.sa,
        &o_re.sb_kxn,
        &o_re.sb_row_exp,
        m,
        n,
        kap,
        &mut timing,
    )?;

    let mut c = CpxMatrix::zeros(m, n);
    for (idx, cv) in c.data.iter_mut().enumerate() {
        cv.re = p_rr.data[idx] - p_ii.data[idx];
        cv.im = p_ri.data[idx] + p_ir.data[idx];
    }

    let slice_bytes = o_re.sa.storage_bytes(cfg.mmu.input_bytes)
        + o_re.sb_bytes
        + o_im.sa.storage_bytes(cfg.mmu.input_bytes)
        + o_im.sb_bytes;
    Ok((
        c,
        GemmReport {
            splits_used: s,
            gemm_calls: calls,
            real_products: 4,
            slice_bytes,
            splits_capped: capped,
            timing,
        },
    ))
}

/// Floating-path comparator: sigma-split both operands at FP32 working
/// precision and sum the slice products over the triangle in FP64.
///
/// Slice pairs execute in genuine FP32 arithmetic. Extraction slices are
/// exact there by construction; products touching the final residual
/// slice may round inside the unit, exactly as the modeled hardware does.
pub fn oz_dgemm_fp(a: &Fp64Matrix, b: &Fp64Matrix, s: u32) -> Result<Fp64Matrix> {
    if a.cols != b.rows {
        return Err(Error::DimensionMismatch(format!(
            "inner dimensions {} and {} differ",
            a.cols, b.rows
        )));
    }
    let k = a.cols as u64;
    let fa = split_fp(a, s, k, FP32_ACC_BITS)?;
    let fbt = split_fp(&b.transpose(), s, k, FP32_ACC_BITS)?;
    let fb_kxn: Vec<Fp64Matrix> = fbt.slices.iter().map(|sl| sl.transpose()).collect();

    let mut c = Fp64Matrix::zeros(a.rows, b.cols);
    for i in 1..=s {
        for j in 1..=(s + 1 - i) {
            let p = fp32_gemm_device(&fa.slices[(i - 1) as usize], &fb_kxn[(j - 1) as usize])?;
            for (cv, &pv) in c.data.iter_mut().zip(&p.data) {
                *cv += pv;
            }
        }
    }
    Ok(c)
}

/// Which arithmetic a pluggable GEMM backend runs.
#[derive(Debug, Clone)]
pub enum BackendCfg {
    /// Plain FP64 arithmetic.
    Fp64,
    /// Double-double arithmetic, rounded to FP64 on output.
    Dd,
    /// Integer-path Ozaki scheme.
    OzInt { mmu: MmuSpec, splits: SplitSel },
}

/// A callable DGEMM/ZGEMM handle with the signature of the plain FP64
/// versions; the circuit simulator is parameterized over this.
#[derive(Debug, Clone)]
pub struct GemmBackend {
    cfg: BackendCfg,
}

/// Build a backend handle from its configuration.
pub fn gemm_backend(cfg: BackendCfg) -> GemmBackend {
    GemmBackend { cfg }
}

impl GemmBackend {
    pub fn cfg(&self) -> &BackendCfg {
        &self.cfg
    }

    pub fn label(&self) -> String {
        match &self.cfg {
            BackendCfg::Fp64 => "fp64".into(),
            BackendCfg::Dd => "dd".into(),
            BackendCfg::OzInt {
                splits: SplitSel::Fixed(s),
                ..
            } => format!("ozaki:{s}"),
            BackendCfg::OzInt {
                splits: SplitSel::Auto { threshold },
                ..
            } => {
                format!("auto:{threshold}")
            }
        }
    }

    fn oz_config(mmu: &MmuSpec, splits: SplitSel) -> OzConfig {
        OzConfig {
            splits,
            mmu: mmu.clone(),
            path: OzPath::Integer,
            s_max: DEFAULT_S_MAX,
            keep_all_pairs: false,
        }
    }

    pub fn dgemm(
        &self,
        a: &Fp64Matrix,
        b: &Fp64Matrix,
    ) -> Result<(Fp64Matrix, Option<GemmReport>)> {
        match &self.cfg {
            BackendCfg::Fp64 => Ok((dgemm_f64(a, b)?, None)),
            BackendCfg::Dd => Ok((dd_gemm(a, b)?.to_f64(), None)),
            BackendCfg::OzInt { mmu, splits } => {
                let (c, rep) = oz_dgemm(a, b, &Self::oz_config(mmu, *splits))?;
                Ok((c, Some(rep)))
            }
        }
    }

    pub fn zgemm(&self, a: &CpxMatrix, b: &CpxMatrix) -> Result<(CpxMatrix, Option<GemmReport>)> {
        match &self.cfg {
            BackendCfg::Fp64 => Ok((zgemm_f64(a, b)?, None)),
            BackendCfg::Dd => Ok((dd_zgemm(a, b)?.to_cpx(), None)),
            BackendCfg::OzInt { mmu, splits } => {
                let (c, rep) = oz_zgemm(a, b, &Self::oz_config(mmu, *splits))?;
                Ok((c, Some(rep)))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::pow2;
    use num_complex::Complex64;

    fn lcg_matrix(rows: usize, cols: usize, seed: u64, spread: i32) -> Fp64Matrix {
        let mut state = seed | 1;
        Fp64Matrix::from_fn(rows, cols, |_, _| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let frac = (state >> 11) as f64 / pow2(53);
            let e = ((state >> 7) % (2 * spread as u64 + 1)) as i32 - spread;
            (frac - 0.5) * pow2(e)
        })
    }

    #[test]
    fn one_by_one_exact() {
        let a = Fp64Matrix::from_vec(1, 1, vec![1.5]).unwrap();
        let b = Fp64Matrix::from_vec(1, 1, vec![2.5]).unwrap();
        let (c, rep) = oz_dgemm(&a, &b, &OzConfig::int8_fixed(2)).unwrap();
        assert_eq!(c.data, vec![3.75]);
        assert_eq!(rep.gemm_calls, 3);
        assert_eq!(rep.splits_used, 2);
    }

    #[test]
    fn identity_times_narrow_is_exact() {
        let n = 24;
        let mut state = 77u64;
        let b = Fp64Matrix::from_fn(n, n, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            0.5 + (state >> 12) as f64 / pow2(53)
        });
        let (c, rep) = oz_dgemm(&Fp64Matrix::identity(n), &b, &OzConfig::int8_fixed(9)).unwrap();
        assert_eq!(c, b);
        assert_eq!(rep.gemm_calls, 45);
    }

    #[test]
    fn report_counts_match_plan() {
        let a = lcg_matrix(8, 16, 3, 2);
        let b = lcg_matrix(16, 8, 5, 2);
        for s in [1u32, 2, 5, 9] {
            let (_, rep) = oz_dgemm(&a, &b, &OzConfig::int8_fixed(s)).unwrap();
            assert_eq!(rep.gemm_calls, crate::mmu::gemm_count(s));
            assert_eq!(rep.splits_used, s);
            // two slice sets of s slices each, one byte per entry
            assert_eq!(rep.slice_bytes, (s as u64) * (8 * 16 + 16 * 8));
        }
    }

    #[test]
    fn power_of_two_scaling_equivariance() {
        let a = lcg_matrix(6, 10, 11, 3);
        let b = lcg_matrix(10, 7, 13, 3);
        let cfg = OzConfig::int8_fixed(8);
        let (c, _) = oz_dgemm(&a, &b, &cfg).unwrap();
        let (c_scaled, _) = oz_dgemm(&a.scale(pow2(12)), &b, &cfg).unwrap();
        for (x, y) in c.data.iter().zip(&c_scaled.data) {
            assert_eq!(x.to_bits(), (y * pow2(-12)).to_bits());
        }
    }

    #[test]
    fn triangle_close_to_full_pairs() {
        let a = lcg_matrix(20, 32, 17, 1);
        let b = lcg_matrix(32, 20, 19, 1);
        let mut cfg = OzConfig::int8_fixed(9); // s*w = 63 >= 60
        let (tri, _) = oz_dgemm(&a, &b, &cfg).unwrap();
        cfg.keep_all_pairs = true;
        let (full, _) = oz_dgemm(&a, &b, &cfg).unwrap();
        // The dropped tail is small against the no-cancellation magnitude
        // sum |A||B|; entries that cancel can still see it, so that sum is
        // the right yardstick.
        let abs_a = Fp64Matrix {
            rows: a.rows,
            cols: a.cols,
            data: a.data.iter().map(|v| v.abs()).collect(),
        };
        let abs_b = Fp64Matrix {
            rows: b.rows,
            cols: b.cols,
            data: b.data.iter().map(|v| v.abs()).collect(),
        };
        let scale = dgemm_f64(&abs_a, &abs_b).unwrap();
        for ((t, f), d) in tri.data.iter().zip(&full.data).zip(&scale.data) {
            assert!((t - f).abs() <= pow2(-52) * d, "t={t:e} f={f:e} d={d:e}");
        }
    }

    #[test]
    fn auto_shared_exponent_needs_eight() {
        // every element in [0.5, 1) with a full mantissa: offset 1,
        // length 53 -> s = ceil(54 / 7) = 8 at T = 0
        let mut state = 33u64;
        let m = Fp64Matrix::from_fn(8, 8, |_, _| {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1);
            0.5 + ((state >> 12) | 1) as f64 / pow2(53)
        });
        let choice = auto_splits(&m, &m, &MmuSpec::int8_int32(), 0.0).unwrap();
        assert_eq!(choice.splits, 8);
        assert!(!choice.capped);
    }

    #[test]
    fn auto_zero_matrix_single_split() {
        let z = Fp64Matrix::zeros(4, 4);
        let choice = auto_splits(&z, &z, &MmuSpec::int8_int32(), 0.0).unwrap();
        assert_eq!(choice.splits, 1);
        assert!(!choice.capped);
    }

    #[test]
    fn auto_threshold_monotone() {
        let a = lcg_matrix(16, 16, 23, 6);
        let b = lcg_matrix(16, 16, 29, 6);
        let s0 = auto_splits(&a, &b, &MmuSpec::int8_int32(), 0.0)
            .unwrap()
            .splits;
        let s1 = auto_splits(&a, &b, &MmuSpec::int8_int32(), 1.0)
            .unwrap()
            .splits;
        assert!(s1 <= s0);
    }

    #[test]
    fn zgemm_identity_and_small() {
        let a = CpxMatrix::from_vec(1, 1, vec![Complex64::new(1.0, 2.0)]).unwrap();
        let b = CpxMatrix::from_vec(1, 1, vec![Complex64::new(3.0, 4.0)]).unwrap();
        let (c, rep) = oz_zgemm(&a, &b, &OzConfig::int8_fixed(2)).unwrap();
        assert_eq!(c.data[0], Complex64::new(-5.0, 10.0));
        assert_eq!(rep.real_products, 4);

        let u = CpxMatrix::from_vec(
            2,
            2,
            vec![
                Complex64::new(0.5, -0.25),
                Complex64::new(-0.75, 0.125),
                Complex64::new(0.375, 0.625),
                Complex64::new(0.25, -0.5),
            ],
        )
        .unwrap();
        let (c, _) = oz_zgemm(&u, &CpxMatrix::identity(2), &OzConfig::int8_fixed(9)).unwrap();
        assert_eq!(c, u);
    }

    #[test]
    fn fp_path_small_and_identity() {
        let a = Fp64Matrix::from_vec(1, 1, vec![3.0]).unwrap();
        let b = Fp64Matrix::from_vec(1, 1, vec![5.0]).unwrap();
        assert_eq!(oz_dgemm_fp(&a, &b, 1).unwrap().data, vec![15.0]);

        let n = 16;
        let b = lcg_matrix(n, n, 41, 0);
        let c = oz_dgemm_fp(&Fp64Matrix::identity(n), &b, 10).unwrap();
        for (x, y) in c.data.iter().zip(&b.data) {
            assert!(
                (x - y).abs() <= pow2(-50) * y.abs().max(1e-300),
                "{x:e} vs {y:e}"
            );
        }
    }

    #[test]
    fn backends_route() {
        let a = lcg_matrix(5, 5, 51, 1);
        let b = lcg_matrix(5, 5, 53, 1);
        let plain = gemm_backend(BackendCfg::Fp64);
        let (c0, rep) = plain.dgemm(&a, &b).unwrap();
        assert!(rep.is_none());
        assert_eq!(c0, dgemm_f64(&a, &b).unwrap());

        let ddb = gemm_backend(BackendCfg::Dd);
        let (c1, _) = ddb.dgemm(&a, &b).unwrap();
        assert_eq!(c1, dd_gemm(&a, &b).unwrap().to_f64());

        let oz = gemm_backend(BackendCfg::OzInt {
            mmu: MmuSpec::int8_int32(),
            splits: SplitSel::Auto { threshold: 0.0 },
        });
        let (_, rep) = oz.dgemm(&a, &b).unwrap();
        assert!(rep.is_some());
        assert_eq!(oz.label(), "auto:0");
    }

    #[test]
    fn determinism_across_thread_counts() {
        let a = lcg_matrix(32, 48, 61, 4);
        let b = lcg_matrix(48, 24, 67, 4);
        let cfg = OzConfig::int8_fixed(11);
        let run = |threads: usize| {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap();
            pool.install(|| oz_dgemm(&a, &b, &cfg).unwrap().0)
        };
        let c1 = run(1);
        let c8 = run(8);
        assert_eq!(c1, c8);
    }

    #[test]
    fn auto_rejected_off_integer_path() {
        let mut cfg = OzConfig::int8_auto(0.0);
        cfg.path = OzPath::Floating;
        let a = Fp64Matrix::zeros(2, 2);
        assert!(oz_dgemm(&a, &a, &cfg).is_err());
    }
}
