//! CLI surface: exit codes, output files, manifests, matrix dump/load.

use std::process::Command;

fn ozimm() -> Command {
    Command::new(env!("CARGO_BIN_EXE_ozimm"))
}

#[test]
fn missing_mmu_is_usage_error() {
    let out = ozimm().args(["plan"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_flag_values_are_usage_errors() {
    let cases: Vec<Vec<&str>> = vec![
        vec!["plan", "--mmu", "int16"],
        vec!["plan", "--mmu", "int8", "--k-min", "1000"], // not a power of two
        vec![
            "plan", "--mmu", "int8", "--k-min", "2^12", "--k-max", "2^11",
        ],
        vec!["plan", "--mmu", "int8", "--target-bits", "0"],
        vec!["accuracy", "--splits", "zero"],
        vec!["qcsim", "--backend", "turbo"],
        vec!["qcsim", "--gate-qubits", "3"], // must be even
    ];
    for case in cases {
        let out = ozimm().args(&case).output().unwrap();
        assert_eq!(out.status.code(), Some(2), "{case:?}");
    }
}

#[test]
fn infeasible_configuration_exits_3() {
    // the 31-bit accumulator cannot take k = 2^30 exactly; the command
    // refuses before generating anything
    let out = ozimm()
        .args(["accuracy", "--m", "1", "--n", "1", "--k", "1073741824"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("infeasible"), "{err}");
}

#[test]
fn qubit_cap_exits_4() {
    let out = ozimm().args(["qcsim", "--qubits", "30"]).output().unwrap();
    assert_eq!(out.status.code(), Some(4));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("bytes"),
        "message should state required bytes: {err}"
    );
}

#[test]
fn out_writes_csv_and_manifest() {
    let dir = std::env::temp_dir().join("ozimm_cli_out_test");
    std::fs::create_dir_all(&dir).unwrap();
    let csv_path = dir.join("plan.csv");
    let out = ozimm()
        .args([
            "plan", "--mmu", "int8", "--k-min", "2^11", "--k-max", "2^12",
        ])
        .args(["--out", csv_path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = std::fs::read_to_string(&csv_path).unwrap();
    assert!(csv.starts_with("mmu,k,alpha,bps,splits,bytes_per_element,gemm_ops,feasible\n"));
    assert_eq!(csv.lines().count(), 3);

    let manifest_path = dir.join("plan.csv.manifest.json");
    let manifest = std::fs::read_to_string(&manifest_path).unwrap();
    let parsed: serde_json::Value = serde_json::from_str(&manifest).unwrap();
    assert_eq!(parsed["command"], "plan");
    assert_eq!(parsed["args"]["mmu"], "int8");
    assert!(parsed["wall_seconds"].as_f64().unwrap() >= 0.0);

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn accuracy_dump_then_load_reproduces_rows() {
    let dir = std::env::temp_dir().join("ozimm_cli_dump_test");
    std::fs::create_dir_all(&dir).unwrap();
    let a_path = dir.join("a.ozmm");
    let b_path = dir.join("b.ozmm");
    let base = [
        "accuracy", "--m", "32", "--n", "32", "--k", "32", "--phi", "0.5", "--splits", "9",
        "--seed", "7",
    ];

    let dumped = ozimm()
        .args(base)
        .args([
            "--dump-a",
            a_path.to_str().unwrap(),
            "--dump-b",
            b_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(dumped.status.success());

    let loaded = ozimm()
        .args(base)
        .args([
            "--load-a",
            a_path.to_str().unwrap(),
            "--load-b",
            b_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(loaded.status.success());
    assert_eq!(
        String::from_utf8_lossy(&dumped.stdout),
        String::from_utf8_lossy(&loaded.stdout),
        "loading the dumped operands must reproduce the CSV"
    );

    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn accuracy_on_zero_matrices_reports_zero_errors() {
    let dir = std::env::temp_dir().join("ozimm_cli_zero_test");
    std::fs::create_dir_all(&dir).unwrap();
    let z_path = dir.join("zero.ozmm");
    ozimm::matio::write_real(&z_path, &ozimm::Fp64Matrix::zeros(8, 8)).unwrap();
    let out = ozimm()
        .args([
            "accuracy", "--m", "8", "--n", "8", "--k", "8", "--phi", "0", "--splits", "1",
        ])
        .args([
            "--load-a",
            z_path.to_str().unwrap(),
            "--load-b",
            z_path.to_str().unwrap(),
        ])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = String::from_utf8_lossy(&out.stdout);
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[4], "0e0", "{line}");
        assert_eq!(fields[5], "0e0", "{line}");
    }
    std::fs::remove_dir_all(&dir).ok();
}

#[test]
fn bench_256_smoke_budget() {
    let t0 = std::time::Instant::now();
    let out = ozimm()
        .args(["bench", "--sizes", "256", "--splits", "9", "--seed", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = String::from_utf8_lossy(&out.stdout);
    assert_eq!(csv.lines().count(), 3);
    assert!(t0.elapsed().as_secs_f64() < 60.0);
}

#[test]
fn qcsim_layers_zero_has_zero_error() {
    let out = ozimm()
        .args([
            "qcsim",
            "--qubits",
            "6",
            "--gate-qubits",
            "2",
            "--layers",
            "0",
        ])
        .args(["--backend", "fp64,dd,ozaki:9,auto:0"])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = String::from_utf8_lossy(&out.stdout);
    for line in csv.lines().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[4], "1e0", "first amplitude: {line}");
        assert_eq!(fields[5], "0e0", "error: {line}");
    }
}

#[test]
fn csv_headers_are_pinned() {
    let expect = [
        (
            vec!["plan", "--mmu", "int8", "--k-min", "2^11", "--k-max", "2^11"],
            "mmu,k,alpha,bps,splits,bytes_per_element,gemm_ops,feasible",
        ),
        (
            vec!["accuracy", "--m", "4", "--n", "4", "--k", "4", "--phi", "0", "--splits", "1"],
            "size,phi,method,splits,mean_rel_err,max_rel_err,feasible",
        ),
        (
            vec!["invpair", "--n", "4", "--splits", "1"],
            "n,method,splits,mean_rel_err,max_rel_err,feasible",
        ),
        (
            vec!["qcsim", "--qubits", "4", "--gate-qubits", "2", "--layers", "1", "--backend", "fp64"],
            "backend,qubits,gate_qubits,layers,first_amp_re,rel_err_vs_dd,splits_hist,peak_slice_bytes,splits_capped",
        ),
        (
            vec!["bench", "--sizes", "4", "--splits", "1"],
            "size,method,splits,seconds,effective_gflops,gemm_calls",
        ),
    ];
    for (argv, header) in expect {
        let out = ozimm().args(&argv).output().unwrap();
        assert!(out.status.success(), "{argv:?}");
        let csv = String::from_utf8_lossy(&out.stdout);
        assert_eq!(csv.lines().next().unwrap(), header, "{argv:?}");
    }
}

#[test]
fn qcsim_presets_fix_the_layout() {
    let via_preset = ozimm()
        .args([
            "qcsim",
            "--preset",
            "b",
            "--backend",
            "fp64",
            "--seed",
            "11",
        ])
        .output()
        .unwrap();
    let explicit = ozimm()
        .args([
            "qcsim",
            "--qubits",
            "16",
            "--gate-qubits",
            "8",
            "--layers",
            "4",
        ])
        .args(["--backend", "fp64", "--seed", "11"])
        .output()
        .unwrap();
    assert!(via_preset.status.success());
    assert_eq!(via_preset.stdout, explicit.stdout);

    let bad = ozimm().args(["qcsim", "--preset", "c"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
}

#[test]
fn qcsim_dump_state_roundtrips() {
    let dir = std::env::temp_dir().join("ozimm_cli_state_test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("state.ozmm");
    let out = ozimm()
        .args([
            "qcsim",
            "--qubits",
            "4",
            "--gate-qubits",
            "2",
            "--layers",
            "2",
        ])
        .args(["--backend", "fp64", "--seed", "3"])
        .args(["--dump-state", path.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    match ozimm::matio::read_matrix(&path).unwrap() {
        ozimm::matio::MatData::Complex(m) => {
            assert_eq!((m.rows, m.cols), (16, 1));
            let norm: f64 = m.data.iter().map(|z| z.norm_sqr()).sum();
            assert!((norm - 1.0).abs() < 1e-10);
        }
        _ => panic!("expected complex state"),
    }
    std::fs::remove_dir_all(&dir).ok();
}
