//! State-vector simulator for brickwork random-unitary circuits.
//!
//! Applying a d-qubit gate is a matmul-(2^(N-d), 2^d, 2^d): the amplitudes
//! are permuted so the window qubits become the fastest-varying indices,
//! the vector is reshaped to a (2^(N-d)) x (2^d) matrix, right-multiplied
//! by the gate transpose through the configured GEMM backend, and permuted
//! back. The DD backend carries double-double amplitudes through the whole
//! circuit and rounds only on output, providing the in-process reference
//! all other backends are measured against.

use num_complex::Complex64;
use rayon::prelude::*;

use crate::datagen::{haar_unitary, unitarity_defect, RngSeed};
use crate::dd::{dd_add, dd_mul_f64, dd_sub, DdValue};
use crate::error::{Error, Result};
use crate::matrix::CpxMatrix;
use crate::ozgemm::{BackendCfg, GemmBackend, GemmReport};

/// Desk-scale cap: 2^26 amplitudes = 1 GiB of complex doubles.
pub const MAX_QUBITS: u32 = 26;

/// 2^N complex amplitudes, qubit q mapped to bit q of the index.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    pub n_qubits: u32,
    pub amps: Vec<Complex64>,
}

impl StateVector {
    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }
}

/// All-zeros computational basis state |00...0>.
pub fn init_state(n_qubits: u32) -> Result<StateVector> {
    if !(1..=MAX_QUBITS).contains(&n_qubits) {
        return Err(Error::ResourceLimit(format!(
            "{n_qubits} qubits outside supported range 1..={MAX_QUBITS} \
             ({} bytes of amplitudes)",
            (1u128 << n_qubits) * 16
        )));
    }
    let mut amps = vec![Complex64::new(0.0, 0.0); 1usize << n_qubits];
    amps[0] = Complex64::new(1.0, 0.0);
    Ok(StateVector { n_qubits, amps })
}

/// Brickwork layout: `layers` rows of adjacent `gate_qubits`-wide Haar
/// gates, every odd layer offset by half a gate width (edge windows that
/// do not fit are skipped).
#[derive(Debug, Clone)]
pub struct CircuitSpec {
    pub n_qubits: u32,
    pub gate_qubits: u32,
    pub layers: u32,
    pub seed: u64,
}

impl CircuitSpec {
    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_QUBITS).contains(&self.n_qubits) {
            return Err(Error::ResourceLimit(format!(
                "{} qubits outside supported range 1..={MAX_QUBITS}",
                self.n_qubits
            )));
        }
        let d = self.gate_qubits;
        if d < 2 || !d.is_multiple_of(2) {
            return Err(Error::InvalidArgument(format!(
                "gate width {d} must be even and >= 2"
            )));
        }
        if d > self.n_qubits {
            return Err(Error::InvalidArgument(format!(
                "gate width {d} exceeds {} qubits",
                self.n_qubits
            )));
        }
        Ok(())
    }

    /// Window start qubits of one layer.
    pub fn layer_windows(&self, layer: u32) -> Vec<u32> {
        let d = self.gate_qubits;
        let offset = if layer.is_multiple_of(2) { 0 } else { d / 2 };
        let mut starts = Vec::new();
        let mut q = offset;
        while q + d <= self.n_qubits {
            starts.push(q);
            q += d;
        }
        starts
    }

    /// Deterministic per-gate randomness stream.
    fn gate_seed(&self, layer: u32, window_idx: usize) -> RngSeed {
        RngSeed::new(self.seed, ((layer as u64) << 32) | window_idx as u64)
    }
}

/// What one simulation run did.
#[derive(Debug, Clone)]
pub struct SimReport {
    pub backend: String,
    /// Split count per gate application, in gate order (empty for
    /// non-splitting backends).
    pub per_gate_splits: Vec<u32>,
    /// Real part of the first amplitude <0...0|psi>.
    pub first_amp_re: f64,
    /// Relative error of `first_amp_re` against a reference, when one was
    /// requested.
    pub rel_err_vs_ref: Option<f64>,
    /// Largest concurrent slice working set over all gates, in bytes.
    pub peak_slice_bytes: u64,
    /// Any gate hit the AUTO split cap.
    pub splits_capped: bool,
    /// GEMM shape of each gate: (2^(N-d), 2^d, 2^d).
    pub gemm_shape: (usize, usize, usize),
    pub final_norm: f64,
}

fn window_masks(start: u32, d: u32) -> (usize, usize) {
    let low_mask = (1usize << start) - 1;
    let win_mask = ((1usize << d) - 1) << start;
    (low_mask, win_mask)
}

/// Gather amplitudes so the window qubits become the fastest-varying
/// index: row = remaining qubits, column = window qubits.
fn gather<T: Copy + Send + Sync>(amps: &[T], start: u32, d: u32, zero: T) -> Vec<T> {
    let (low_mask, win_mask) = window_masks(start, d);
    let mut out = vec![zero; amps.len()];
    let cols = 1usize << d;
    out.par_chunks_mut(cols)
        .enumerate()
        .for_each(|(row, chunk)| {
            let low = row & low_mask;
            let high = (row & !low_mask) << d;
            for (col, o) in chunk.iter_mut().enumerate() {
                let idx = low | high | (col << start);
                debug_assert_eq!(idx & win_mask, col << start);
                *o = amps[idx];
            }
        });
    out
}

/// Inverse of [`gather`]: each output amplitude pulls from its gathered
/// slot, so parallel blocks write disjoint memory.
fn scatter<T: Copy + Send + Sync>(gathered: &[T], start: u32, d: u32, zero: T) -> Vec<T> {
    let (low_mask, _) = window_masks(start, d);
    let win_mask = (1usize << d) - 1;
    let mut out = vec![zero; gathered.len()];
    let cols = 1usize << d;
    out.par_chunks_mut(cols)
        .enumerate()
        .for_each(|(blk, chunk)| {
            for (t, o) in chunk.iter_mut().enumerate() {
                let idx = (blk << d) | t;
                let low = idx & low_mask;
                let win = (idx >> start) & win_mask;
                let high = idx >> (start + d);
                let row = low | (high << start);
                *o = gathered[(row << d) | win];
            }
        });
    out
}

/// Apply a 2^d x 2^d unitary to `d` contiguous qubits starting at
/// `window_start`, multiplying through the backend's ZGEMM. A gate that is
/// not unitary to 1e-10 is applied anyway with a warning on stderr (error
/// injection relies on this).
pub fn apply_gate(
    state: &StateVector,
    u: &CpxMatrix,
    window_start: u32,
    backend: &GemmBackend,
) -> Result<(StateVector, Option<GemmReport>)> {
    let n = state.n_qubits;
    let d_dim = u.rows;
    if u.cols != d_dim || !d_dim.is_power_of_two() || d_dim < 2 {
        return Err(Error::InvalidArgument(format!(
            "gate must be a square power-of-two matrix, got {}x{}",
            u.rows, u.cols
        )));
    }
    let d = d_dim.trailing_zeros();
    if window_start + d > n {
        return Err(Error::InvalidArgument(format!(
            "window [{window_start}, {}) exceeds {n} qubits",
            window_start + d
        )));
    }
    let defect = unitarity_defect(u);
    if defect > 1e-10 {
        eprintln!("apply_gate: gate unitarity defect {defect:e} exceeds 1e-10, proceeding");
    }

    let zero = Complex64::new(0.0, 0.0);
    let gathered = gather(&state.amps, window_start, d, zero);
    let rows = state.amps.len() >> d;
    let a = CpxMatrix {
        rows,
        cols: d_dim,
        data: gathered,
    };
    // new[r, w] = sum_w' psi[r, w'] U[w, w']  ==  A . U^T
    let (product, report) = backend.zgemm(&a, &u.transpose())?;
    let amps = scatter(&product.data, window_start, d, zero);
    Ok((StateVector { n_qubits: n, amps }, report))
}

/// Double-double amplitudes for the reference path.
struct DdState {
    amps: Vec<(DdValue, DdValue)>,
}

fn apply_gate_dd(state: &mut DdState, u: &CpxMatrix, window_start: u32) {
    let d = u.rows.trailing_zeros();
    let zero = (DdValue::ZERO, DdValue::ZERO);
    let gathered = gather(&state.amps, window_start, d, zero);
    let cols = u.rows;
    let mut product = vec![zero; gathered.len()];
    product
        .par_chunks_mut(cols)
        .zip(gathered.par_chunks(cols))
        .for_each(|(orow, arow)| {
            for (w, o) in orow.iter_mut().enumerate() {
                let mut re = DdValue::ZERO;
                let mut im = DdValue::ZERO;
                for (wp, &(are, aim)) in arow.iter().enumerate() {
                    let uv = u.get(w, wp);
                    // (are + i aim) * (uv.re + i uv.im) in double-double
                    re = dd_add(re, dd_mul_f64(are, uv.re));
                    re = dd_sub(re, dd_mul_f64(aim, uv.im));
                    im = dd_add(im, dd_mul_f64(are, uv.im));
                    im = dd_add(im, dd_mul_f64(aim, uv.re));
                }
                *o = (re, im);
            }
        });
    state.amps = scatter(&product, window_start, d, zero);
}

/// Run the brickwork circuit on the given backend. The DD backend carries
/// double-double amplitudes end to end and rounds only into the returned
/// state.
pub fn run_brickwork(
    spec: &CircuitSpec,
    backend: &GemmBackend,
) -> Result<(StateVector, SimReport)> {
    spec.validate()?;
    let n = spec.n_qubits;
    let d = spec.gate_qubits;
    let gemm_shape = (1usize << (n - d), 1usize << d, 1usize << d);

    if matches!(backend.cfg(), BackendCfg::Dd) {
        let mut state = DdState {
            amps: {
                let mut v = vec![(DdValue::ZERO, DdValue::ZERO); 1usize << n];
                v[0].0 = DdValue::from_f64(1.0);
                v
            },
        };
        for layer in 0..spec.layers {
            for (widx, start) in spec.layer_windows(layer).into_iter().enumerate() {
                let u = haar_unitary(1usize << d, spec.gate_seed(layer, widx));
                apply_gate_dd(&mut state, &u, start);
            }
        }
        let amps: Vec<Complex64> = state
            .amps
            .iter()
            .map(|(re, im)| Complex64::new(re.to_f64(), im.to_f64()))
            .collect();
        let sv = StateVector { n_qubits: n, amps };
        let report = SimReport {
            backend: backend.label(),
            per_gate_splits: Vec::new(),
            first_amp_re: sv.amps[0].re,
            rel_err_vs_ref: None,
            peak_slice_bytes: 0,
            splits_capped: false,
            gemm_shape,
            final_norm: sv.norm_sqr(),
        };
        return Ok((sv, report));
    }

    let mut state = init_state(n)?;
    let mut per_gate_splits = Vec::new();
    let mut peak_slice_bytes = 0u64;
    let mut splits_capped = false;
    for layer in 0..spec.layers {
        for (widx, start) in spec.layer_windows(layer).into_iter().enumerate() {
            let u = haar_unitary(1usize << d, spec.gate_seed(layer, widx));
            let (next, report) = apply_gate(&state, &u, start, backend)?;
            state = next;
            if let Some(rep) = report {
                per_gate_splits.push(rep.splits_used);
                peak_slice_bytes = peak_slice_bytes.max(rep.slice_bytes);
                splits_capped |= rep.splits_capped;
            }
        }
    }
    let report = SimReport {
        backend: backend.label(),
        per_gate_splits,
        first_amp_re: state.amps[0].re,
        rel_err_vs_ref: None,
        peak_slice_bytes,
        splits_capped,
        gemm_shape,
        final_norm: state.norm_sqr(),
    };
    Ok((state, report))
}

/// Relative error of a backend's first amplitude against the reference
/// run's, in the sense |x - r| / |r|.
pub fn first_amp_rel_err(value: f64, reference: f64) -> f64 {
    if reference == 0.0 {
        if value == 0.0 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        ((value - reference) / reference).abs()
    }
}
