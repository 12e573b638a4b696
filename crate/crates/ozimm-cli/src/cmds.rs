//! Command implementations: each builds a CSV string plus the values the
//! manifest records.

use std::fmt::Write as _;
use std::time::Instant;

use anyhow::anyhow;

use ozimm::datagen::{gen_inverse_pair, gen_phi_matrix, RngSeed};
use ozimm::dd::{dd_gemm, relative_error_stats, ErrorStats};
use ozimm::matio;
use ozimm::matrix::dgemm_f64;
use ozimm::mmu::{sweep, MmuSpec};
use ozimm::ozgemm::{gemm_backend, oz_dgemm, BackendCfg, OzConfig, SplitSel};
use ozimm::qcsim::{first_amp_rel_err, run_brickwork, CircuitSpec, MAX_QUBITS};

use crate::args::{AccuracyArgs, BenchArgs, InvpairArgs, PlanArgs, QcsimArgs};

/// Command failure modes mapped to process exit codes by `main`.
#[derive(Debug)]
pub enum CmdError {
    Usage(String),
    Infeasible(String),
    ResourceCap(String),
    Other(anyhow::Error),
}

impl From<anyhow::Error> for CmdError {
    fn from(e: anyhow::Error) -> Self {
        CmdError::Other(e)
    }
}

impl From<ozimm::Error> for CmdError {
    fn from(e: ozimm::Error) -> Self {
        match e {
            ozimm::Error::Infeasible(m) => CmdError::Infeasible(m),
            ozimm::Error::ResourceLimit(m) => CmdError::ResourceCap(m),
            ozimm::Error::InvalidArgument(m) => CmdError::Usage(m),
            other => CmdError::Other(anyhow!(other)),
        }
    }
}

pub type CmdResult = Result<String, CmdError>;

/// Accept "2^12" or a plain integer; must be a power of two.
pub fn parse_pow2(s: &str) -> Result<u64, CmdError> {
    let v = if let Some(exp) = s.strip_prefix("2^") {
        let e: u32 = exp
            .parse()
            .map_err(|_| CmdError::Usage(format!("bad exponent in '{s}'")))?;
        if e >= 63 {
            return Err(CmdError::Usage(format!("'{s}' is out of range")));
        }
        1u64 << e
    } else {
        s.parse::<u64>()
            .map_err(|_| CmdError::Usage(format!("'{s}' is not an integer or 2^k")))?
    };
    if v == 0 || !v.is_power_of_two() {
        return Err(CmdError::Usage(format!("'{s}' must be a power of two")));
    }
    Ok(v)
}

fn fmt_err(x: f64) -> String {
    format!("{x:e}")
}

fn stats_row(out: &mut String, prefix: &str, stats: &ErrorStats, feasible: bool) {
    let _ = writeln!(
        out,
        "{prefix},{},{},{}",
        fmt_err(stats.mean),
        fmt_err(stats.max),
        feasible
    );
}

pub fn cmd_plan(args: &PlanArgs) -> CmdResult {
    let mut mmus = Vec::new();
    for name in args.mmu.split(',') {
        let name = name.trim();
        if name.is_empty() {
            continue;
        }
        let spec = MmuSpec::preset(name)
            .ok_or_else(|| CmdError::Usage(format!("unknown matrix unit '{name}'")))?;
        mmus.push(spec);
    }
    if mmus.is_empty() {
        return Err(CmdError::Usage("--mmu needs at least one unit".into()));
    }
    let k_min = parse_pow2(&args.k_min)?;
    let k_max = parse_pow2(&args.k_max)?;
    if k_min > k_max {
        return Err(CmdError::Usage("--k-min exceeds --k-max".into()));
    }
    if args.target_bits == 0 {
        return Err(CmdError::Usage("--target-bits must be positive".into()));
    }
    let mut ks = Vec::new();
    let mut k = k_min;
    while k <= k_max {
        ks.push(k);
        k *= 2;
    }

    let rows = sweep(&mmus, &ks, args.target_bits);
    let mut out = String::from("mmu,k,alpha,bps,splits,bytes_per_element,gemm_ops,feasible\n");
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.mmu, r.k, r.alpha, r.bps, r.splits, r.bytes_per_element, r.gemm_ops, r.feasible
        );
    }
    Ok(out)
}

fn parse_f64_list(s: &str, what: &str) -> Result<Vec<f64>, CmdError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| CmdError::Usage(format!("bad {what} value '{t}'")))
        })
        .collect()
}

fn parse_u32_list(s: &str, what: &str) -> Result<Vec<u32>, CmdError> {
    s.split(',')
        .filter(|t| !t.trim().is_empty())
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| CmdError::Usage(format!("bad {what} value '{t}'")))
        })
        .collect()
}

pub fn cmd_accuracy(args: &AccuracyArgs) -> CmdResult {
    let phis = parse_f64_list(&args.phi, "phi")?;
    let splits = parse_u32_list(&args.splits, "splits")?;
    if phis.is_empty() || splits.is_empty() {
        return Err(CmdError::Usage(
            "--phi and --splits must be nonempty".into(),
        ));
    }
    let (m, n, k) = (args.m, args.n, args.k);
    if m == 0 || n == 0 || k == 0 {
        return Err(CmdError::Usage("dimensions must be positive".into()));
    }
    // refuse before generating anything when the unit cannot accumulate k
    ozimm::split::int_slice_width(&MmuSpec::int8_int32(), k as u64).map_err(CmdError::from)?;
    let size = format!("{m}x{n}x{k}");
    let mut out = String::from("size,phi,method,splits,mean_rel_err,max_rel_err,feasible\n");

    for (pi, &phi) in phis.iter().enumerate() {
        let a = match &args.load_a {
            Some(p) => matio::read_real(p.as_path()).map_err(CmdError::from)?,
            None => gen_phi_matrix(m, k, phi, RngSeed::new(args.seed, 2 * pi as u64)),
        };
        let b = match &args.load_b {
            Some(p) => matio::read_real(p.as_path()).map_err(CmdError::from)?,
            None => gen_phi_matrix(k, n, phi, RngSeed::new(args.seed, 2 * pi as u64 + 1)),
        };
        if a.rows != m || a.cols != k || b.rows != k || b.cols != n {
            return Err(CmdError::Usage(format!(
                "input shapes {}x{} and {}x{} do not match --m/--n/--k",
                a.rows, a.cols, b.rows, b.cols
            )));
        }
        if let Some(p) = &args.dump_a {
            matio::write_real(p.as_path(), &a).map_err(CmdError::from)?;
        }
        if let Some(p) = &args.dump_b {
            matio::write_real(p.as_path(), &b).map_err(CmdError::from)?;
        }

        let reference = dd_gemm(&a, &b).map_err(CmdError::from)?;
        let plain = dgemm_f64(&a, &b).map_err(CmdError::from)?;
        let stats = relative_error_stats(&plain, &reference).map_err(CmdError::from)?;
        stats_row(&mut out, &format!("{size},{phi},fp64,0"), &stats, true);

        for &s in &splits {
            match oz_dgemm(&a, &b, &OzConfig::int8_fixed(s)) {
                Ok((c, _)) => {
                    let stats = relative_error_stats(&c, &reference).map_err(CmdError::from)?;
                    stats_row(&mut out, &format!("{size},{phi},ozint,{s}"), &stats, true);
                }
                Err(ozimm::Error::Infeasible(_)) => {
                    let _ = writeln!(out, "{size},{phi},ozint,{s},,,false");
                }
                Err(e) => return Err(CmdError::from(e)),
            }
        }
    }
    Ok(out)
}

pub fn cmd_invpair(args: &InvpairArgs) -> CmdResult {
    let splits = parse_u32_list(&args.splits, "splits")?;
    if args.n == 0 {
        return Err(CmdError::Usage("--n must be positive".into()));
    }
    let (a, a_dag) =
        gen_inverse_pair(args.n, RngSeed::new(args.seed, 0)).map_err(CmdError::from)?;
    let reference = dd_gemm(&a, &a_dag).map_err(CmdError::from)?;

    let mut out = String::from("n,method,splits,mean_rel_err,max_rel_err,feasible\n");
    let plain = dgemm_f64(&a, &a_dag).map_err(CmdError::from)?;
    let stats = relative_error_stats(&plain, &reference).map_err(CmdError::from)?;
    stats_row(&mut out, &format!("{},fp64,0", args.n), &stats, true);

    for &s in &splits {
        match oz_dgemm(&a, &a_dag, &OzConfig::int8_fixed(s)) {
            Ok((c, _)) => {
                let stats = relative_error_stats(&c, &reference).map_err(CmdError::from)?;
                stats_row(&mut out, &format!("{},ozint,{s}", args.n), &stats, true);
            }
            Err(ozimm::Error::Infeasible(_)) => {
                let _ = writeln!(out, "{},ozint,{s},,,false", args.n);
            }
            Err(e) => return Err(CmdError::from(e)),
        }
    }
    Ok(out)
}

pub fn parse_backend(label: &str) -> Result<BackendCfg, CmdError> {
    let label = label.trim();
    if label == "fp64" {
        return Ok(BackendCfg::Fp64);
    }
    if label == "dd" {
        return Ok(BackendCfg::Dd);
    }
    if let Some(s) = label.strip_prefix("ozaki:") {
        let s: u32 = s
            .parse()
            .map_err(|_| CmdError::Usage(format!("bad split count in '{label}'")))?;
        if s == 0 {
            return Err(CmdError::Usage("split count must be >= 1".into()));
        }
        return Ok(BackendCfg::OzInt {
            mmu: MmuSpec::int8_int32(),
            splits: SplitSel::Fixed(s),
        });
    }
    if let Some(t) = label.strip_prefix("auto:") {
        let t: f64 = t
            .parse()
            .map_err(|_| CmdError::Usage(format!("bad threshold in '{label}'")))?;
        if t.is_nan() || t < 0.0 {
            return Err(CmdError::Usage("threshold must be >= 0".into()));
        }
        return Ok(BackendCfg::OzInt {
            mmu: MmuSpec::int8_int32(),
            splits: SplitSel::Auto { threshold: t },
        });
    }
    Err(CmdError::Usage(format!(
        "unknown backend '{label}' (expected fp64, dd, ozaki:S or auto:T)"
    )))
}

fn splits_histogram(per_gate: &[u32]) -> String {
    use std::collections::BTreeMap;
    let mut hist: BTreeMap<u32, usize> = BTreeMap::new();
    for &s in per_gate {
        *hist.entry(s).or_default() += 1;
    }
    hist.iter()
        .map(|(s, c)| format!("{s}:{c}"))
        .collect::<Vec<_>>()
        .join(";")
}

pub fn cmd_qcsim(args: &QcsimArgs) -> CmdResult {
    let (qubits, gate_qubits, layers) = match args.preset.as_deref() {
        None => (args.qubits, args.gate_qubits, args.layers),
        Some("a") | Some("A") => (16, 4, 8),
        Some("b") | Some("B") => (16, 8, 4),
        Some(other) => {
            return Err(CmdError::Usage(format!(
                "unknown preset '{other}' (expected a or b)"
            )))
        }
    };
    let args = &QcsimArgs {
        preset: None,
        qubits,
        gate_qubits,
        layers,
        backend: args.backend.clone(),
        seed: args.seed,
        dump_state: args.dump_state.clone(),
    };
    if args.qubits > MAX_QUBITS {
        return Err(CmdError::ResourceCap(format!(
            "{} qubits needs {} bytes of amplitudes (plus {} for the double-double \
             reference); the cap is {MAX_QUBITS} qubits",
            args.qubits,
            (1u128 << args.qubits) * 16,
            (1u128 << args.qubits) * 32,
        )));
    }
    let spec = CircuitSpec {
        n_qubits: args.qubits,
        gate_qubits: args.gate_qubits,
        layers: args.layers,
        seed: args.seed,
    };
    spec.validate().map_err(CmdError::from)?;

    let backends: Vec<BackendCfg> = args
        .backend
        .split(',')
        .filter(|t| !t.trim().is_empty())
        .map(parse_backend)
        .collect::<Result<_, _>>()?;
    if backends.is_empty() {
        return Err(CmdError::Usage("--backend needs at least one entry".into()));
    }

    let (_, dd_report) =
        run_brickwork(&spec, &gemm_backend(BackendCfg::Dd)).map_err(CmdError::from)?;

    let mut out = String::from(
        "backend,qubits,gate_qubits,layers,first_amp_re,rel_err_vs_dd,splits_hist,peak_slice_bytes,splits_capped\n",
    );
    let mut last_state = None;
    for cfg in backends {
        let backend = gemm_backend(cfg);
        let (state, rep) = run_brickwork(&spec, &backend).map_err(CmdError::from)?;
        let rel = first_amp_rel_err(rep.first_amp_re, dd_report.first_amp_re);
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{}",
            rep.backend,
            args.qubits,
            args.gate_qubits,
            args.layers,
            fmt_err(rep.first_amp_re),
            fmt_err(rel),
            splits_histogram(&rep.per_gate_splits),
            rep.peak_slice_bytes,
            rep.splits_capped
        );
        last_state = Some(state);
    }
    if let Some(path) = &args.dump_state {
        let state = last_state.expect("at least one backend ran");
        let m =
            ozimm::CpxMatrix::from_vec(state.amps.len(), 1, state.amps).map_err(CmdError::from)?;
        matio::write_complex(path.as_path(), &m).map_err(CmdError::from)?;
    }
    Ok(out)
}

pub fn cmd_bench(args: &BenchArgs) -> CmdResult {
    let sizes = parse_u32_list(&args.sizes, "sizes")?;
    let splits = parse_u32_list(&args.splits, "splits")?;
    if sizes.is_empty() {
        return Err(CmdError::Usage("--sizes must be nonempty".into()));
    }
    let mut out = String::from("size,method,splits,seconds,effective_gflops,gemm_calls\n");
    for &size in &sizes {
        let n = size as usize;
        let a = gen_phi_matrix(n, n, args.phi, RngSeed::new(args.seed, 0));
        let b = gen_phi_matrix(n, n, args.phi, RngSeed::new(args.seed, 1));
        let flops = 2.0 * (n as f64).powi(3);

        let t0 = Instant::now();
        let _c = dgemm_f64(&a, &b).map_err(CmdError::from)?;
        let secs = t0.elapsed().as_secs_f64();
        let _ = writeln!(out, "{size},fp64,0,{:.6},{:.3},1", secs, flops / secs / 1e9);

        for &s in &splits {
            let t0 = Instant::now();
            match oz_dgemm(&a, &b, &OzConfig::int8_fixed(s)) {
                Ok((_c, rep)) => {
                    let secs = t0.elapsed().as_secs_f64();
                    let _ = writeln!(
                        out,
                        "{size},ozint,{s},{:.6},{:.3},{}",
                        secs,
                        flops / secs / 1e9,
                        rep.gemm_calls
                    );
                }
                Err(ozimm::Error::Infeasible(msg)) => {
                    return Err(CmdError::Infeasible(msg));
                }
                Err(e) => return Err(CmdError::from(e)),
            }
        }
    }
    Ok(out)
}
