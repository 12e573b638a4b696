//! Mantissa-space splitting of FP64 matrices into exact low-precision
//! slices.
//!
//! The integer path produces block-float slices: per row, a power-of-two
//! scale anchors a fixed-point mantissa space and each slice holds a
//! contiguous `w`-bit band of it, stored sign-magnitude. Truncation toward
//! zero makes slice `p` independent of the slices below it.
//!
//! The floating path extracts working-precision-exact FP64 slices with the
//! add-subtract sigma trick and keeps the final residual, so the slices
//! always sum back to the input bitwise.

use rayon::prelude::*;

pub use crate::bits::valid_mantissa_length;
use crate::bits::{ceil_log2, ceil_log2_abs, floor_log2_abs, ldexp, pow2, shift_extract, sig_pow};
use crate::dd::{dd_add, DdValue};
use crate::error::{Error, Result};
use crate::kernel::IntSliceMatrix;
use crate::matrix::Fp64Matrix;
use crate::mmu::{slice_bits, MmuSpec};

/// Row-scale exponent marking an all-zero row.
pub const ZERO_ROW: i32 = i32::MIN;

/// Block-float decomposition of an FP64 matrix: `s` integer slice matrices
/// plus a per-row power-of-two scale.
///
/// Entry `(i, j)` of slice `p` (1-based) holds bits `(p-1)w .. pw-1` of
/// `|M_ij| / e_i` in sign-magnitude form, where `e_i = 2^row_exp2[i]`
/// strictly exceeds the row maximum.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceSet {
    pub splits: u32,
    /// Bits carried per slice: min(alpha, l_in).
    pub width: u32,
    /// The exact-accumulation budget alpha the width was clamped from.
    pub alpha: i32,
    pub rows: usize,
    pub cols: usize,
    /// Per-row scale exponent; `ZERO_ROW` for all-zero rows.
    pub row_exp2: Vec<i32>,
    pub slices: Vec<IntSliceMatrix>,
}

impl SliceSet {
    /// Row scale as an FP64 power of two (0.0 for zero rows).
    pub fn row_scale(&self, i: usize) -> f64 {
        match self.row_exp2[i] {
            ZERO_ROW => 0.0,
            e => pow2(e),
        }
    }

    /// Bytes needed to store the slices at `input_bytes` per entry.
    pub fn storage_bytes(&self, input_bytes: f64) -> u64 {
        (self.splits as f64 * (self.rows * self.cols) as f64 * input_bytes).ceil() as u64
    }
}

fn reject_non_finite(m: &Fp64Matrix) -> Result<()> {
    if let Some((row, col)) = m.find_non_finite() {
        return Err(Error::NonFinite { row, col });
    }
    Ok(())
}

/// Width of the integer slices for a unit / accumulation-length pair.
/// Errors when exact accumulation is impossible or the width exceeds the
/// 8-bit slice storage.
pub fn int_slice_width(mmu: &MmuSpec, k_eff: u64) -> Result<u32> {
    let alpha = slice_bits(mmu, k_eff);
    if alpha <= 0 {
        return Err(Error::Infeasible(format!(
            "{} cannot accumulate k = {k_eff} exactly (alpha = {alpha})",
            mmu.name
        )));
    }
    let w = (alpha as u32).min(mmu.l_in);
    if w > 7 {
        return Err(Error::Infeasible(format!(
            "slice width {w} exceeds the signed 8-bit slice storage; \
             only units with l_in <= 7 have an execution path"
        )));
    }
    Ok(w)
}

/// Split `m` into `s` integer slices along rows of length `k_eff`
/// (`m` is the left operand A or the transposed right operand B^T).
pub fn split_int(m: &Fp64Matrix, s: u32, mmu: &MmuSpec, k_eff: u64) -> Result<SliceSet> {
    if s < 1 {
        return Err(Error::InvalidArgument("split count must be >= 1".into()));
    }
    reject_non_finite(m)?;
    let w = int_slice_width(mmu, k_eff)?;
    let alpha = slice_bits(mmu, k_eff);
    let (rows, cols) = (m.rows, m.cols);

    let mut row_exp2 = vec![ZERO_ROW; rows];
    for (i, e) in row_exp2.iter_mut().enumerate() {
        let mx = m.row(i).iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
        if mx > 0.0 {
            let exp = floor_log2_abs(mx) + 1;
            if exp > 1023 {
                return Err(Error::InvalidArgument(format!(
                    "row {i} maximum {mx:e} too large for power-of-two row scaling"
                )));
            }
            *e = exp;
        }
    }

    let mut slices = vec![IntSliceMatrix::zeros(rows, cols); s as usize];
    for (p, sl) in slices.iter_mut().enumerate() {
        sl.data
            .par_chunks_mut(cols)
            .enumerate()
            .for_each(|(i, buf)| {
                let e = row_exp2[i];
                if e == ZERO_ROW {
                    return;
                }
                for (j, &x) in m.row(i).iter().enumerate() {
                    if x == 0.0 {
                        continue;
                    }
                    let (sig, xpow) = sig_pow(x);
                    let sh = xpow as i64 - e as i64 + (p as i64 + 1) * w as i64;
                    let v = shift_extract(sig, sh, w) as i8;
                    buf[j] = if x < 0.0 { -v } else { v };
                }
            });
    }

    Ok(SliceSet {
        splits: s,
        width: w,
        alpha,
        rows,
        cols,
        row_exp2,
        slices,
    })
}

/// Invert the block-float decomposition: entry = sum over slices of
/// `slice_p * e_i * 2^(-p w)`, accumulated in double-double and rounded
/// once to FP64.
pub fn reconstruct(ss: &SliceSet) -> Fp64Matrix {
    let (rows, cols) = (ss.rows, ss.cols);
    let mut out = Fp64Matrix::zeros(rows, cols);
    out.data
        .par_chunks_mut(cols)
        .enumerate()
        .for_each(|(i, orow)| {
            let e = ss.row_exp2[i];
            if e == ZERO_ROW {
                return;
            }
            for (j, ov) in orow.iter_mut().enumerate() {
                let mut acc = DdValue::ZERO;
                for (p, sl) in ss.slices.iter().enumerate() {
                    let v = sl.data[i * cols + j];
                    if v != 0 {
                        let scale = e - (p as i32 + 1) * ss.width as i32;
                        acc = dd_add(acc, DdValue::from_f64(ldexp(v as f64, scale)));
                    }
                }
                *ov = acc.to_f64();
            }
        });
    out
}

/// Mantissa-loss statistics of splitting `m` into `s` slices.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossStats {
    /// Mean lost bits over nonzero elements (0 when none).
    pub mean_bits: f64,
    /// Worst per-element loss.
    pub max_bits: u32,
}

/// Bits each nonzero element needs to survive splitting unharmed:
/// `offset + valid_mantissa_length`, where offset is the distance from the
/// row-scale exponent down to the element's leading bit.
pub(crate) fn mantissa_needs(m: &Fp64Matrix) -> Result<Vec<u32>> {
    reject_non_finite(m)?;
    let mut needs = Vec::new();
    for i in 0..m.rows {
        let row = m.row(i);
        let mx = row.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
        if mx == 0.0 {
            continue;
        }
        let e = floor_log2_abs(mx) + 1;
        for &x in row {
            if x != 0.0 {
                let offset = (e - floor_log2_abs(x)) as u32;
                needs.push(offset + valid_mantissa_length(x));
            }
        }
    }
    Ok(needs)
}

pub(crate) fn loss_from_needs(needs: &[u32], kept_bits: u32) -> LossStats {
    if needs.is_empty() {
        return LossStats {
            mean_bits: 0.0,
            max_bits: 0,
        };
    }
    let mut sum: u64 = 0;
    let mut max: u32 = 0;
    for &need in needs {
        let loss = need.saturating_sub(kept_bits);
        sum += loss as u64;
        max = max.max(loss);
    }
    LossStats {
        mean_bits: sum as f64 / needs.len() as f64,
        max_bits: max,
    }
}

/// Per-element mantissa bits lost when keeping `s * w` bits of row-anchored
/// mantissa space: max(0, offset + valid_length - s*w). Zero elements do
/// not contribute; statistics are over nonzero elements.
pub fn mantissa_loss(m: &Fp64Matrix, s: u32, mmu: &MmuSpec, k_eff: u64) -> Result<LossStats> {
    let w = int_slice_width(mmu, k_eff)?;
    let needs = mantissa_needs(m)?;
    Ok(loss_from_needs(&needs, s * w))
}

/// Decomposition of an FP64 matrix into FP64-stored slices whose entries
/// are exact in the working precision; the last slice is the raw residual,
/// so the slices always sum to the input bitwise.
#[derive(Debug, Clone, PartialEq)]
pub struct FpSliceSet {
    pub splits: u32,
    /// Sigma-shift parameter: ceil((acc_bits + log2 k) / 2).
    pub beta: u32,
    /// Working-precision accumulator mantissa bits (24 for FP32).
    pub acc_bits: u32,
    pub rows: usize,
    pub cols: usize,
    pub slices: Vec<Fp64Matrix>,
}

/// Working-precision unit roundoff exponent for the FP32 path: u = 2^-24.
pub const FP32_ACC_BITS: u32 = 24;

/// Split `m` into `s` floating slices for a working precision with
/// `acc_bits` mantissa bits (24 for the FP32 path) and accumulation
/// length `k_eff`.
///
/// Each of the first `s - 1` slices is extracted with the row-anchored
/// add-subtract trick on the working-precision rounding grid, so its
/// entries carry at most `acc_bits - beta` significant bits and convert
/// to the working precision without rounding. The final slice is the
/// remaining residual.
pub fn split_fp(m: &Fp64Matrix, s: u32, k_eff: u64, acc_bits: u32) -> Result<FpSliceSet> {
    if s < 1 {
        return Err(Error::InvalidArgument("split count must be >= 1".into()));
    }
    if !(2..=53).contains(&acc_bits) {
        return Err(Error::InvalidArgument(format!(
            "accumulator mantissa bits {acc_bits} out of range"
        )));
    }
    let alpha = (acc_bits as i32 - ceil_log2(k_eff) as i32).div_euclid(2);
    if alpha < 1 {
        return Err(Error::Infeasible(format!(
            "floating path cannot accumulate k = {k_eff} at {acc_bits} mantissa bits"
        )));
    }
    reject_non_finite(m)?;
    let beta = (acc_bits + ceil_log2(k_eff)).div_ceil(2);
    let (rows, cols) = (m.rows, m.cols);

    // The sigma constants must stay finite: row maxima are bounded by
    // 2^(995 - beta).
    for i in 0..rows {
        let mx = m.row(i).iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
        if mx > 0.0 && ceil_log2_abs(mx) + beta as i32 > 995 {
            return Err(Error::InvalidArgument(format!(
                "row {i} maximum {mx:e} too large for the floating split path"
            )));
        }
    }

    let mut residual = m.clone();
    let mut slices = Vec::with_capacity(s as usize);
    for _ in 0..s.saturating_sub(1) {
        let mut slice = Fp64Matrix::zeros(rows, cols);
        slice
            .data
            .par_chunks_mut(cols)
            .zip(residual.data.par_chunks_mut(cols))
            .for_each(|(srow, rrow)| {
                let mx = rrow.iter().fold(0.0f64, |acc, &v| acc.max(v.abs()));
                if mx == 0.0 {
                    return;
                }
                // Round the residual onto the working-precision grid
                // 2^(E + beta - acc_bits); performing the add-subtract in
                // FP64 needs the sigma exponent widened by 53 - acc_bits.
                let grid_exp = ceil_log2_abs(mx) + beta as i32 - acc_bits as i32;
                let sigma = 0.75 * pow2(grid_exp + 53);
                debug_assert!(sigma.is_finite());
                for (sv, rv) in srow.iter_mut().zip(rrow.iter_mut()) {
                    let q = (*rv + sigma) - sigma;
                    *sv = q;
                    *rv -= q;
                }
            });
        slices.push(slice);
    }
    slices.push(residual);
    Ok(FpSliceSet {
        splits: s,
        beta,
        acc_bits,
        rows,
        cols,
        slices,
    })
}
