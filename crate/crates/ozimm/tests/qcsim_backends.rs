//! Simulator accuracy across GEMM backends.

use ozimm::datagen::{haar_unitary, RngSeed};
use ozimm::mmu::MmuSpec;
use ozimm::ozgemm::{gemm_backend, BackendCfg, SplitSel};
use ozimm::qcsim::{apply_gate, first_amp_rel_err, init_state, run_brickwork, CircuitSpec};

fn oz_auto(t: f64) -> BackendCfg {
    BackendCfg::OzInt {
        mmu: MmuSpec::int8_int32(),
        splits: SplitSel::Auto { threshold: t },
    }
}

#[test]
fn one_haar_gate_auto_matches_dd() {
    // N = 8, d = 4, single gate: exact splitting keeps the AUTO backend
    // within 1e-13 of the double-double amplitudes
    let n = 8u32;
    let u = haar_unitary(16, RngSeed::new(77, 0));
    let state = init_state(n).unwrap();

    let (s_auto, _) = apply_gate(&state, &u, 2, &gemm_backend(oz_auto(0.0))).unwrap();
    let (s_dd, _) = apply_gate(&state, &u, 2, &gemm_backend(BackendCfg::Dd)).unwrap();

    for (x, r) in s_auto.amps.iter().zip(&s_dd.amps) {
        if r.re != 0.0 {
            assert!(
                first_amp_rel_err(x.re, r.re) <= 1e-13,
                "re {} vs {}",
                x.re,
                r.re
            );
        }
        if r.im != 0.0 {
            assert!(first_amp_rel_err(x.im, r.im) <= 1e-13);
        }
    }
}

#[test]
fn brickwork_error_parity_small() {
    let spec = CircuitSpec {
        n_qubits: 10,
        gate_qubits: 2,
        layers: 4,
        seed: 4242,
    };
    let (_, rep_dd) = run_brickwork(&spec, &gemm_backend(BackendCfg::Dd)).unwrap();
    let (_, rep_fp) = run_brickwork(&spec, &gemm_backend(BackendCfg::Fp64)).unwrap();
    let (_, rep_auto) = run_brickwork(&spec, &gemm_backend(oz_auto(0.0))).unwrap();

    let err_fp = first_amp_rel_err(rep_fp.first_amp_re, rep_dd.first_amp_re);
    let err_auto = first_amp_rel_err(rep_auto.first_amp_re, rep_dd.first_amp_re);
    // error-free splitting keeps the emulated path at the FP64 level
    assert!(
        err_auto <= (2.0 * err_fp).max(1e-14),
        "auto {err_auto:e} vs fp64 {err_fp:e}"
    );
}

#[test]
fn looser_threshold_never_needs_more_splits() {
    let spec = CircuitSpec {
        n_qubits: 10,
        gate_qubits: 2,
        layers: 4,
        seed: 99,
    };
    let (_, rep_t0) = run_brickwork(&spec, &gemm_backend(oz_auto(0.0))).unwrap();
    let (_, rep_t1) = run_brickwork(&spec, &gemm_backend(oz_auto(1.0))).unwrap();
    assert_eq!(rep_t0.per_gate_splits.len(), rep_t1.per_gate_splits.len());
    for (s1, s0) in rep_t1.per_gate_splits.iter().zip(&rep_t0.per_gate_splits) {
        assert!(s1 <= s0, "T=1 used {s1} splits where T=0 used {s0}");
    }
    assert!(rep_t1.peak_slice_bytes <= rep_t0.peak_slice_bytes);
}

#[test]
fn unitary_times_dagger_is_near_identity() {
    // off-diagonals of U U^H cancel exactly in the high digits; the
    // emulated path resolves the cancellation against the dd reference
    let u = haar_unitary(16, RngSeed::new(55, 0));
    let (c, _) =
        ozimm::ozgemm::oz_zgemm(&u, &u.dagger(), &ozimm::ozgemm::OzConfig::int8_fixed(12)).unwrap();
    for i in 0..16 {
        for j in 0..16 {
            let v = c.get(i, j);
            if i == j {
                assert!((v.re - 1.0).abs() < 1e-13 && v.im.abs() < 1e-13);
            } else {
                assert!(v.norm() < 1e-14, "({i},{j}): {v}");
            }
        }
    }
}

#[test]
fn auto_cap_sets_warning_flag() {
    use ozimm::matrix::Fp64Matrix;
    use ozimm::ozgemm::{auto_splits_with_max, oz_dgemm, OzConfig, OzPath};
    // a row spanning 80 octaves cannot reach zero mean loss within the cap
    let a = Fp64Matrix::from_vec(
        1,
        2,
        vec![1.0 + f64::EPSILON, (1.0 + f64::EPSILON) * 2f64.powi(-80)],
    )
    .unwrap();
    let choice = auto_splits_with_max(&a, &a.transpose(), &MmuSpec::int8_int32(), 0.0, 12).unwrap();
    assert!(choice.capped);
    assert_eq!(choice.splits, 12);
    let cfg = OzConfig {
        splits: SplitSel::Auto { threshold: 0.0 },
        mmu: MmuSpec::int8_int32(),
        path: OzPath::Integer,
        s_max: 12,
        keep_all_pairs: false,
    };
    let (_, rep) = oz_dgemm(&a, &a.transpose(), &cfg).unwrap();
    assert!(rep.splits_capped);
}

#[test]
fn auto_backend_picks_eight_on_shared_exponent() {
    use ozimm::matrix::Fp64Matrix;
    // full-mantissa entries in [0.5, 1): offset 1 + 53 bits over w = 7
    // slices -> 8 splits at T = 0
    let mut t = 3u64;
    let m = Fp64Matrix::from_fn(8, 8, |_, _| {
        t = t.wrapping_mul(6364136223846793005).wrapping_add(1);
        0.5 + ((t >> 12) | 1) as f64 / 2f64.powi(53)
    });
    let backend = gemm_backend(oz_auto(0.0));
    let (_, rep) = backend.dgemm(&m, &m).unwrap();
    assert_eq!(rep.unwrap().splits_used, 8);
}

#[test]
fn fixed_split_backend_runs() {
    let spec = CircuitSpec {
        n_qubits: 6,
        gate_qubits: 2,
        layers: 2,
        seed: 5,
    };
    let backend = gemm_backend(BackendCfg::OzInt {
        mmu: MmuSpec::int8_int32(),
        splits: SplitSel::Fixed(10),
    });
    let (state, rep) = run_brickwork(&spec, &backend).unwrap();
    assert!((state.norm_sqr() - 1.0).abs() < 1e-10);
    assert!(rep.per_gate_splits.iter().all(|&s| s == 10));
    assert_eq!(rep.backend, "ozaki:10");
}
