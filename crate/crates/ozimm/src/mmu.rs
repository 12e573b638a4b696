//! Design-space analysis of matrix multiplication units: bits per slice,
//! split counts, working memory and GEMM-operation counts for a given
//! input/accumulator configuration.

use crate::bits::ceil_log2;
use crate::error::{Error, Result};

/// Abstract matrix-multiply-unit description.
#[derive(Debug, Clone, PartialEq)]
pub struct MmuSpec {
    /// Short identifier, e.g. "INT8-INT32".
    pub name: String,
    /// Input mantissa bit length.
    pub l_in: u32,
    /// Accumulator mantissa bit length.
    pub l_acc: u32,
    /// Storage size of one input element in bytes (0.5 for 4-bit).
    pub input_bytes: f64,
}

impl MmuSpec {
    pub fn new(name: &str, l_in: u32, l_acc: u32, input_bytes: f64) -> Result<Self> {
        if l_in == 0 || l_acc == 0 {
            return Err(Error::InvalidArgument(
                "mantissa lengths must be positive".into(),
            ));
        }
        if l_in > l_acc {
            return Err(Error::InvalidArgument(format!(
                "l_in {l_in} exceeds l_acc {l_acc}"
            )));
        }
        if input_bytes * 8.0 < l_in as f64 {
            return Err(Error::InvalidArgument(format!(
                "{input_bytes} input bytes cannot store {l_in} mantissa bits"
            )));
        }
        Ok(Self {
            name: name.to_string(),
            l_in,
            l_acc,
            input_bytes,
        })
    }

    /// FP16 inputs, FP32 accumulation (half-precision tensor units).
    pub fn fp16_fp32() -> Self {
        Self::new("FP16-FP32", 11, 24, 2.0).unwrap()
    }

    /// 4-bit integer inputs, 32-bit accumulation.
    pub fn int4_int32() -> Self {
        Self::new("INT4-INT32", 3, 31, 0.5).unwrap()
    }

    /// 8-bit integer inputs, 32-bit accumulation.
    pub fn int8_int32() -> Self {
        Self::new("INT8-INT32", 7, 31, 1.0).unwrap()
    }

    /// 12-bit integer inputs, 32-bit accumulation.
    pub fn int12_int32() -> Self {
        Self::new("INT12-INT32", 11, 31, 1.5).unwrap()
    }

    pub fn presets() -> Vec<Self> {
        vec![
            Self::fp16_fp32(),
            Self::int4_int32(),
            Self::int8_int32(),
            Self::int12_int32(),
        ]
    }

    /// Look up a preset by a forgiving name ("int8", "INT8-INT32", ...).
    pub fn preset(name: &str) -> Option<Self> {
        match name.to_ascii_lowercase().as_str() {
            "fp16" | "fp16-fp32" => Some(Self::fp16_fp32()),
            "int4" | "int4-int32" => Some(Self::int4_int32()),
            "int8" | "int8-int32" => Some(Self::int8_int32()),
            "int12" | "int12-int32" => Some(Self::int12_int32()),
            _ => None,
        }
    }
}

/// Per-slice mantissa bit budget for exact accumulation of length `k`:
/// floor((l_acc - ceil(log2 k)) / 2).
///
/// May be zero or negative, which signals that exact accumulation at this
/// `k` is impossible for this unit; callers must check. `log2 k` is taken
/// as a ceiling so non-power-of-two lengths stay inside the overflow
/// budget.
///
/// ```
/// use ozimm::mmu::{slice_bits, MmuSpec};
/// assert_eq!(slice_bits(&MmuSpec::fp16_fp32(), 4096), 6);
/// assert_eq!(slice_bits(&MmuSpec::int8_int32(), 1 << 12), 9);
/// ```
pub fn slice_bits(mmu: &MmuSpec, k: u64) -> i32 {
    assert!(k >= 1, "accumulation length must be positive");
    (mmu.l_acc as i32 - ceil_log2(k) as i32).div_euclid(2)
}

/// Usable mantissa bits per slice: min(alpha, l_in). Errors when the pair
/// is unusable (non-positive alpha).
pub fn bits_per_slice(mmu: &MmuSpec, k: u64) -> Result<u32> {
    let alpha = slice_bits(mmu, k);
    if alpha <= 0 {
        return Err(Error::Infeasible(format!(
            "{} cannot accumulate k = {k} exactly (alpha = {alpha})",
            mmu.name
        )));
    }
    Ok((alpha as u32).min(mmu.l_in))
}

/// Number of splits needed to keep `target_bits` of mantissa space:
/// ceil(target_bits / BPS).
pub fn splits_for_space(mmu: &MmuSpec, k: u64, target_bits: u32) -> Result<u32> {
    assert!(target_bits >= 1);
    let bps = bits_per_slice(mmu, k)?;
    Ok(target_bits.div_ceil(bps))
}

/// Working-memory bytes per input element: splits x storage size.
pub fn memory_per_element(mmu: &MmuSpec, k: u64, target_bits: u32) -> Result<f64> {
    Ok(splits_for_space(mmu, k, target_bits)? as f64 * mmu.input_bytes)
}

/// Number of slice-pair multiplications with i + j <= s + 1: s(s+1)/2.
pub fn gemm_count(s: u32) -> u64 {
    assert!(s >= 1);
    (s as u64) * (s as u64 + 1) / 2
}

/// One planner row for a (unit, accumulation length) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanRow {
    pub mmu: String,
    pub k: u64,
    pub alpha: i32,
    /// Zero when the pair is infeasible.
    pub bps: u32,
    pub splits: u32,
    pub bytes_per_element: f64,
    pub gemm_ops: u64,
    pub feasible: bool,
}

/// Evaluate every (unit, k) pair. Infeasible pairs are emitted with
/// `feasible: false` rather than dropped. Rows are sorted by unit name,
/// then k.
pub fn sweep(mmus: &[MmuSpec], k_values: &[u64], target_bits: u32) -> Vec<PlanRow> {
    let mut sorted: Vec<&MmuSpec> = mmus.iter().collect();
    sorted.sort_by(|a, b| a.name.cmp(&b.name));
    let mut ks = k_values.to_vec();
    ks.sort_unstable();
    let mut rows = Vec::with_capacity(sorted.len() * ks.len());
    for mmu in sorted {
        for &k in &ks {
            let alpha = slice_bits(mmu, k);
            let row = if alpha > 0 {
                let bps = (alpha as u32).min(mmu.l_in);
                let splits = target_bits.div_ceil(bps);
                PlanRow {
                    mmu: mmu.name.clone(),
                    k,
                    alpha,
                    bps,
                    splits,
                    bytes_per_element: splits as f64 * mmu.input_bytes,
                    gemm_ops: gemm_count(splits),
                    feasible: true,
                }
            } else {
                PlanRow {
                    mmu: mmu.name.clone(),
                    k,
                    alpha,
                    bps: 0,
                    splits: 0,
                    bytes_per_element: 0.0,
                    gemm_ops: 0,
                    feasible: false,
                }
            };
            rows.push(row);
        }
    }
    rows
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn alpha_examples() {
        assert_eq!(slice_bits(&MmuSpec::fp16_fp32(), 4096), 6);
        assert_eq!(slice_bits(&MmuSpec::fp16_fp32(), 1), 12);
        assert_eq!(slice_bits(&MmuSpec::int8_int32(), 1), 15);
        assert_eq!(slice_bits(&MmuSpec::int8_int32(), 1 << 12), 9);
    }

    #[test]
    fn alpha_can_go_nonpositive() {
        // l_acc = 24, k = 2^24 -> alpha = 0; k = 2^26 -> alpha = -1
        assert_eq!(slice_bits(&MmuSpec::fp16_fp32(), 1 << 24), 0);
        assert_eq!(slice_bits(&MmuSpec::fp16_fp32(), 1 << 26), -1);
        assert!(bits_per_slice(&MmuSpec::fp16_fp32(), 1 << 24).is_err());
    }

    #[test]
    fn bps_examples() {
        assert_eq!(bits_per_slice(&MmuSpec::int8_int32(), 1 << 12).unwrap(), 7);
        assert_eq!(bits_per_slice(&MmuSpec::fp16_fp32(), 4096).unwrap(), 6);
        for e in 1..=20 {
            assert_eq!(bits_per_slice(&MmuSpec::int4_int32(), 1 << e).unwrap(), 3);
        }
    }

    #[test]
    fn splits_examples() {
        assert_eq!(
            splits_for_space(&MmuSpec::int8_int32(), 1 << 12, 70).unwrap(),
            10
        );
        assert_eq!(
            splits_for_space(&MmuSpec::fp16_fp32(), 1 << 12, 70).unwrap(),
            12
        );
        // target equal to BPS -> one split
        let bps = bits_per_slice(&MmuSpec::int8_int32(), 1 << 12).unwrap();
        assert_eq!(
            splits_for_space(&MmuSpec::int8_int32(), 1 << 12, bps).unwrap(),
            1
        );
        // s * BPS >= target > (s-1) * BPS
        for target in [1u32, 7, 8, 53, 70, 106] {
            let s = splits_for_space(&MmuSpec::int8_int32(), 1 << 12, target).unwrap();
            assert!(s * bps >= target && target > (s - 1) * bps);
        }
    }

    #[test]
    fn memory_examples() {
        assert_eq!(
            memory_per_element(&MmuSpec::int8_int32(), 1 << 12, 70).unwrap(),
            10.0
        );
        assert_eq!(
            memory_per_element(&MmuSpec::fp16_fp32(), 1 << 12, 70).unwrap(),
            24.0
        );
        assert_eq!(
            memory_per_element(&MmuSpec::int4_int32(), 1 << 12, 3).unwrap(),
            0.5
        );
    }

    #[test]
    fn gemm_count_examples() {
        assert_eq!(gemm_count(9), 45);
        assert_eq!(gemm_count(1), 1);
        assert_eq!(gemm_count(13), 91);
        for s in 2..32 {
            assert_eq!(gemm_count(s) - gemm_count(s - 1), s as u64);
        }
    }

    #[test]
    fn monotonicity() {
        let mmus = MmuSpec::presets();
        for mmu in &mmus {
            let mut prev_alpha = i32::MAX;
            let mut prev_splits = 0u32;
            for e in 11..=20 {
                let k = 1u64 << e;
                let alpha = slice_bits(mmu, k);
                assert!(alpha <= prev_alpha);
                prev_alpha = alpha;
                if alpha > 0 {
                    let s = splits_for_space(mmu, k, 70).unwrap();
                    assert!(s >= prev_splits);
                    prev_splits = s;
                }
                let bps = (alpha.max(0) as u32).min(mmu.l_in);
                assert!(bps <= mmu.l_in);
                assert!(alpha <= 0 || bps <= alpha as u32);
            }
        }
    }

    #[test]
    fn no_overflow_budget_over_presets() {
        // k * (2^BPS - 1)^2 <= 2^l_acc - 1 justifies exact accumulation
        for mmu in MmuSpec::presets() {
            for e in 11..=20 {
                let k = 1u64 << e;
                let alpha = slice_bits(&mmu, k);
                if alpha <= 0 {
                    continue;
                }
                let bps = (alpha as u32).min(mmu.l_in);
                let max_entry = (1u128 << bps) - 1;
                let budget = k as u128 * max_entry * max_entry;
                assert!(
                    budget < (1u128 << mmu.l_acc),
                    "{} k=2^{e} bps={bps}",
                    mmu.name
                );
            }
        }
    }

    #[test]
    fn sweep_rows() {
        let rows = sweep(&[MmuSpec::int8_int32()], &[1 << 12], 70);
        assert_eq!(rows.len(), 1);
        let r = &rows[0];
        assert_eq!((r.alpha, r.bps, r.splits), (9, 7, 10));
        assert_eq!(r.bytes_per_element, 10.0);
        assert_eq!(r.gemm_ops, 55);
        assert!(r.feasible);

        assert!(sweep(&[MmuSpec::int8_int32()], &[], 70).is_empty());

        // INT8 needs no more splits than FP16 at any target-range k
        for e in 11..=20 {
            let rows = sweep(
                &[MmuSpec::int8_int32(), MmuSpec::fp16_fp32()],
                &[1 << e],
                70,
            );
            let fp16 = rows.iter().find(|r| r.mmu == "FP16-FP32").unwrap();
            let int8 = rows.iter().find(|r| r.mmu == "INT8-INT32").unwrap();
            assert!(int8.splits <= fp16.splits);
        }
    }

    #[test]
    fn infeasible_rows_flagged() {
        let rows = sweep(&[MmuSpec::fp16_fp32()], &[1 << 24], 70);
        assert_eq!(rows.len(), 1);
        assert!(!rows[0].feasible);
        assert_eq!(rows[0].alpha, 0);
    }

    #[test]
    fn preset_lookup() {
        assert_eq!(MmuSpec::preset("int8").unwrap().name, "INT8-INT32");
        assert_eq!(MmuSpec::preset("FP16-FP32").unwrap().l_acc, 24);
        assert!(MmuSpec::preset("int16").is_none());
    }
}
