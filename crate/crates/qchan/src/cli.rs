//! Command-line front end: `coeff`, `region`, `verify`, `nogo`, `bkm`.
//! All randomness flows from one seed (`--seed`, then `QCHAN_SEED`, then 0);
//! identical invocations produce byte-identical output. Exit codes: 0 ok,
//! 1 verification failure, 2 parse error, 3 assumption failure.

use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use nalgebra::Vector3;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::channels::{parse_channel_spec, Channel, DensityMatrix};
use crate::coefficients::{
    ampdamp_contraction_conjecture, ampdamp_expansion_conjecture, depol_qubit_exact,
    depol_relative_bounds, CoefficientEstimate,
};
use crate::divergences::{
    bkm_metric, bkm_qubit, check_integral_representation_l1, check_integral_representation_l2,
    rel_entropy, SupportPolicy,
};
use crate::error::QchanError;
use crate::estimator::{estimate_coefficient, is_isometric, nogo_witness, Mode, OptimizerConfig};
use crate::lessnoisy::{fmt12, region_to_csv, relative_expansion_surface, sweep_region};

#[derive(Parser)]
#[command(name = "qchan", version, about = "Contraction and expansion coefficients of quantum channels")]
pub struct Cli {
    /// RNG seed (falls back to QCHAN_SEED, then 0)
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for sweeps and restarts (results are independent of this)
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Output format override: json or csv
    #[arg(long, global = true)]
    format: Option<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute coefficient estimates for a channel pair
    Coeff(CoeffArgs),
    /// Sweep the flagged amplitude-damping region and emit CSV
    Region(RegionArgs),
    /// Run property-verification suites
    Verify(VerifyArgs),
    /// Expansion-vanishing witness ladder
    Nogo(NogoArgs),
    /// Evaluate the BKM metric
    Bkm(BkmArgs),
}

#[derive(Args)]
struct CoeffArgs {
    /// Numerator channel spec, e.g. amp:gamma=0.5
    #[arg(long)]
    n: String,
    /// Denominator channel spec (id:d=<d> for plain coefficients)
    #[arg(long)]
    m: String,
    /// contraction, expansion, or both
    #[arg(long, default_value = "both")]
    which: String,
    #[arg(long, default_value_t = 50)]
    restarts: usize,
    #[arg(long, default_value_t = 2000)]
    max_iters: usize,
}

#[derive(Args)]
struct RegionArgs {
    #[arg(long, default_value_t = 50)]
    grid: usize,
    /// Comma-separated flag probabilities
    #[arg(long, default_value = "0.6,0.75,0.9")]
    p: String,
    /// Random cq-ensembles sampled per grid point (0 disables)
    #[arg(long, default_value_t = 0)]
    ensembles: usize,
    /// Emit the figure-2 style conjectured expansion surface instead
    #[arg(long)]
    fig: Option<u32>,
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Args)]
struct VerifyArgs {
    /// dpi, bkm, sandwich, integral, region, or all
    #[arg(long, default_value = "all")]
    suite: String,
    #[arg(long, default_value_t = 100)]
    trials: usize,
}

#[derive(Args)]
struct NogoArgs {
    #[arg(long)]
    n: String,
    /// Comma-separated epsilons; default ladder 1e-2..1e-6
    #[arg(long)]
    eps: Option<String>,
}

#[derive(Args)]
struct BkmArgs {
    /// Base Bloch vector, e.g. 0.3,0,0
    #[arg(long)]
    w: Option<String>,
    /// Perturbation Bloch vector
    #[arg(long)]
    y: Option<String>,
    /// JSON file with a density matrix (rows of [re,im] pairs)
    #[arg(long)]
    state: Option<std::path::PathBuf>,
    /// JSON file with a Hermitian traceless perturbation
    #[arg(long)]
    perturbation: Option<std::path::PathBuf>,
}

/// Provenance record attached to every emitted file.
#[derive(Serialize)]
pub struct RunManifest {
    pub command_line: Vec<String>,
    pub seed: u64,
    pub version: String,
    pub wall_clock_secs: f64,
    pub timings: Vec<(String, f64)>,
}

impl RunManifest {
    pub fn hash(&self) -> String {
        let bytes = serde_json::to_vec(self).expect("manifest serializes");
        hex::encode(Sha256::digest(&bytes))
    }
}

fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| {
        std::env::var("QCHAN_SEED")
            .ok()
            .and_then(|s| s.parse().ok())
    })
    .unwrap_or(0)
}

fn exit_code(e: &QchanError) -> i32 {
    match e {
        QchanError::Parse(_) | QchanError::BadParam(_) | QchanError::DimMismatch(_) => 2,
        QchanError::AssumptionFailed(_) | QchanError::PurityPreserving => 3,
        _ => 2,
    }
}

pub fn run() -> i32 {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let seed = resolve_seed(cli.seed);
    #[cfg(feature = "parallel")]
    if let Some(jobs) = cli.jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(jobs).build_global();
    }
    #[cfg(not(feature = "parallel"))]
    let _ = cli.jobs;
    let started = Instant::now();
    let argv: Vec<String> = std::env::args().collect();
    let result = match &cli.command {
        Command::Coeff(a) => cmd_coeff(a, seed),
        Command::Region(a) => cmd_region(a, seed, &argv, started),
        Command::Verify(a) => return cmd_verify(a, seed),
        Command::Nogo(a) => cmd_nogo(a),
        Command::Bkm(a) => cmd_bkm(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

#[derive(Serialize)]
struct CoeffReport {
    n: String,
    m: String,
    seed: u64,
    #[serde(skip_serializing_if = "Option::is_none")]
    contraction_closed_form: Option<CoefficientEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expansion_closed_form: Option<CoefficientEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    contraction_numerical: Option<CoefficientEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    expansion_numerical: Option<CoefficientEstimate>,
    #[serde(skip_serializing_if = "Option::is_none")]
    nogo_ladder: Option<Vec<(f64, f64)>>,
}

struct SpecParams {
    kind: String,
    params: Vec<(String, f64)>,
}

fn spec_params(spec: &str) -> SpecParams {
    let (kind, rest) = spec.split_once(':').unwrap_or((spec, ""));
    let params = rest
        .split(',')
        .filter_map(|kv| {
            let (k, v) = kv.split_once('=')?;
            Some((k.trim().to_string(), v.trim().parse().ok()?))
        })
        .collect();
    SpecParams {
        kind: kind.to_string(),
        params,
    }
}

impl SpecParams {
    fn get(&self, key: &str) -> Option<f64> {
        self.params.iter().find(|(k, _)| k == key).map(|(_, v)| *v)
    }
}

/// Closed forms that apply to the given pair of channel specs.
fn closed_forms(
    n: &SpecParams,
    m: &SpecParams,
) -> crate::error::Result<(Option<CoefficientEstimate>, Option<CoefficientEstimate>)> {
    if n.kind == "depol" && m.kind == "depol" && n.get("d") == Some(2.0) && m.get("d") == Some(2.0) {
        if let (Some(p1), Some(p2)) = (n.get("p"), m.get("p")) {
            if 0.0 < p2 && p2 <= p1 && p1 < 1.0 {
                let (eta, check) = depol_qubit_exact(p1, p2)?;
                return Ok((Some(eta), Some(check)));
            }
        }
    }
    if n.kind == "depol" && m.kind == "depol" && n.get("d") == m.get("d") {
        if let (Some(d), Some(p1), Some(p2)) = (n.get("d"), n.get("p"), m.get("p")) {
            if 0.0 < p2 && p2 <= p1 && p1 < 1.0 {
                return Ok((Some(depol_relative_bounds(d as usize, p1, p2)?), None));
            }
        }
    }
    if n.kind == "amp" && m.kind == "amp" {
        if let (Some(g1), Some(g2)) = (n.get("gamma"), m.get("gamma")) {
            if 0.0 < g1 && g1 < 1.0 && 0.0 < g2 && g2 < 1.0 {
                return Ok((
                    Some(ampdamp_contraction_conjecture(g1, g2, 10_000)?),
                    Some(ampdamp_expansion_conjecture(g1, g2)?),
                ));
            }
        }
    }
    Ok((None, None))
}

fn cmd_coeff(a: &CoeffArgs, seed: u64) -> crate::error::Result<()> {
    let ch_n = parse_channel_spec(&a.n)?;
    let ch_m = parse_channel_spec(&a.m)?;
    let np = spec_params(&a.n);
    let mp = spec_params(&a.m);
    let (cf_eta, cf_check) = closed_forms(&np, &mp)?;
    let mut report = CoeffReport {
        n: a.n.clone(),
        m: a.m.clone(),
        seed,
        contraction_closed_form: cf_eta,
        expansion_closed_form: cf_check,
        contraction_numerical: None,
        expansion_numerical: None,
        nogo_ladder: None,
    };
    let want_contraction = a.which == "contraction" || a.which == "both";
    let want_expansion = a.which == "expansion" || a.which == "both";
    if !(want_contraction || want_expansion) {
        return Err(QchanError::Parse(format!(
            "--which must be contraction, expansion, or both, got `{}`",
            a.which
        )));
    }
    let mut cfg = OptimizerConfig::new(Mode::Max);
    cfg.restarts = a.restarts;
    cfg.max_iters = a.max_iters;
    cfg.seed = seed;
    if want_contraction {
        report.contraction_numerical = Some(estimate_coefficient(&ch_n, &ch_m, &cfg)?);
    }
    if want_expansion {
        cfg.mode = Mode::Min;
        report.expansion_numerical = Some(estimate_coefficient(&ch_n, &ch_m, &cfg)?);
        // Against an identity denominator, a genuinely noisy channel has
        // vanishing expansion: attach the witness ladder.
        if mp.kind == "id" && !is_isometric(&ch_n) && ch_n.dim_in() >= ch_n.dim_out() {
            let mut ladder = Vec::new();
            for k in 2..=6 {
                let eps = 10f64.powi(-k);
                let (_, _, ratio) = nogo_witness(&ch_n, eps)?;
                ladder.push((eps, ratio));
            }
            report.nogo_ladder = Some(ladder);
        }
    }
    // strip the bulky per-restart traces from stdout output
    for est in [
        report.contraction_numerical.as_mut(),
        report.expansion_numerical.as_mut(),
    ]
    .into_iter()
    .flatten()
    {
        if let Some(meta) = est.meta.as_mut() {
            meta.best_pair = None;
        }
    }
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

fn cmd_region(
    a: &RegionArgs,
    seed: u64,
    argv: &[String],
    started: Instant,
) -> crate::error::Result<()> {
    let body = match a.fig {
        Some(2) => {
            let table = relative_expansion_surface(a.grid)?;
            let mut s = String::from("gamma1,gamma2,expansion_conjectured\n");
            for (g1, g2, v) in table {
                s.push_str(&format!("{},{},{}\n", fmt12(g1), fmt12(g2), fmt12(v)));
            }
            s
        }
        Some(other) => {
            return Err(QchanError::Parse(format!("unknown figure selector {other}")));
        }
        None => {
            let p_list: Vec<f64> = a
                .p
                .split(',')
                .map(|t| {
                    t.trim()
                        .parse()
                        .map_err(|e| QchanError::Parse(format!("bad p value `{t}`: {e}")))
                })
                .collect::<crate::error::Result<_>>()?;
            let samples = sweep_region(a.grid, &p_list, a.ensembles, seed)?;
            region_to_csv(&samples)
        }
    };
    let manifest = RunManifest {
        command_line: argv.to_vec(),
        seed,
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_clock_secs: started.elapsed().as_secs_f64(),
        timings: vec![("sweep".into(), started.elapsed().as_secs_f64())],
    };
    let hash = manifest.hash();
    std::fs::write(&a.out, format!("# manifest={hash}\n{body}"))?;
    let manifest_path = a.out.with_extension("manifest.json");
    std::fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest).expect("manifest serializes"),
    )?;
    println!(
        "wrote {} (manifest {} -> {})",
        a.out.display(),
        hash,
        manifest_path.display()
    );
    Ok(())
}

fn cmd_nogo(a: &NogoArgs) -> crate::error::Result<()> {
    let ch = parse_channel_spec(&a.n)?;
    if is_isometric(&ch) {
        // purity-preserving: the expansion coefficient is exactly 1
        println!("{}", serde_json::json!({"n": a.n, "isometric": true, "expansion": 1.0}));
        return Ok(());
    }
    let epsilons: Vec<f64> = match &a.eps {
        Some(list) => list
            .split(',')
            .map(|t| {
                t.trim()
                    .parse()
                    .map_err(|e| QchanError::Parse(format!("bad eps `{t}`: {e}")))
            })
            .collect::<crate::error::Result<_>>()?,
        None => (2..=6).map(|k| 10f64.powi(-k)).collect(),
    };
    let mut ladder = Vec::new();
    for &eps in &epsilons {
        let (_, _, ratio) = nogo_witness(&ch, eps)?;
        ladder.push(serde_json::json!({"eps": eps, "ratio": ratio}));
    }
    println!(
        "{}",
        serde_json::to_string_pretty(&serde_json::json!({"n": a.n, "ladder": ladder}))
            .expect("serializes")
    );
    Ok(())
}

fn read_matrix_json(path: &std::path::Path) -> crate::error::Result<crate::linalg::CMat> {
    let text = std::fs::read_to_string(path)?;
    let raw: Vec<Vec<[f64; 2]>> = serde_json::from_str(&text)
        .map_err(|e| QchanError::Parse(format!("bad matrix JSON: {e}")))?;
    let n = raw.len();
    if raw.iter().any(|r| r.len() != n) {
        return Err(QchanError::Parse("matrix must be square".into()));
    }
    Ok(crate::linalg::CMat::from_fn(n, n, |i, j| {
        num_complex::Complex64::new(raw[i][j][0], raw[i][j][1])
    }))
}

fn parse_vec3(s: &str) -> crate::error::Result<Vector3<f64>> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|e| QchanError::Parse(format!("bad component `{t}`: {e}")))
        })
        .collect::<crate::error::Result<_>>()?;
    if parts.len() != 3 {
        return Err(QchanError::Parse("expected three comma-separated components".into()));
    }
    Ok(Vector3::new(parts[0], parts[1], parts[2]))
}

fn cmd_bkm(a: &BkmArgs) -> crate::error::Result<()> {
    let value = match (&a.w, &a.y, &a.state, &a.perturbation) {
        (Some(w), Some(y), None, None) => bkm_qubit(&parse_vec3(w)?, &parse_vec3(y)?)?,
        (None, None, Some(state), Some(pert)) => {
            let rho = DensityMatrix::new(read_matrix_json(state)?)?;
            let x = read_matrix_json(pert)?;
            bkm_metric(&rho, &x)?
        }
        _ => {
            return Err(QchanError::Parse(
                "provide either --w and --y, or --state and --perturbation".into(),
            ))
        }
    };
    println!("{}", serde_json::json!({ "bkm": value }));
    Ok(())
}

// ---- verify suites ----

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
    secs: f64,
}

fn run_check(name: &'static str, f: impl FnOnce() -> (bool, String)) -> Check {
    let t = Instant::now();
    let (passed, detail) = f();
    Check {
        name,
        passed,
        detail,
        secs: t.elapsed().as_secs_f64(),
    }
}

fn random_full_rank_qubit(rng: &mut ChaCha8Rng) -> DensityMatrix {
    loop {
        let w = Vector3::new(
            1.8 * rng.gen::<f64>() - 0.9,
            1.8 * rng.gen::<f64>() - 0.9,
            1.8 * rng.gen::<f64>() - 0.9,
        );
        if w.norm() <= 0.95 {
            return DensityMatrix::from_bloch(&w).unwrap();
        }
    }
}

fn sample_channel(rng: &mut ChaCha8Rng) -> Channel {
    match rng.gen_range(0..3) {
        0 => Channel::depolarizing(2, rng.gen_range(0.05..0.95)).unwrap(),
        1 => Channel::qubit_dephasing(rng.gen_range(0.05..1.95)).unwrap(),
        _ => Channel::amplitude_damping(rng.gen_range(0.05..0.95)).unwrap(),
    }
}

fn suite_dpi(trials: usize, seed: u64) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let ch = sample_channel(&mut rng);
        let rho = random_full_rank_qubit(&mut rng);
        let sigma = random_full_rank_qubit(&mut rng);
        let before = rel_entropy(&rho, &sigma, SupportPolicy::Infinite).unwrap();
        let after = rel_entropy(
            &ch.apply(&rho).unwrap(),
            &ch.apply(&sigma).unwrap(),
            SupportPolicy::Infinite,
        )
        .unwrap();
        worst = worst.max(after - before);
    }
    (worst <= 1e-9, format!("max D-increase {worst:.3e}"))
}

fn suite_bkm(trials: usize, seed: u64) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials {
        let rho = random_full_rank_qubit(&mut rng);
        let sigma = random_full_rank_qubit(&mut rng);
        // second derivative of t -> D((1-t) sigma + t rho || sigma) at t
        let t0 = 0.5;
        let h = 1e-4;
        let d_at = |t: f64| {
            rel_entropy(&sigma.mix(&rho, t), &sigma, SupportPolicy::Error).unwrap()
        };
        let second = (d_at(t0 + h) - 2.0 * d_at(t0) + d_at(t0 - h)) / (h * h);
        let x = rho.matrix() - sigma.matrix();
        let metric = bkm_metric(&sigma.mix(&rho, t0), &x).unwrap();
        let rel = (second - metric).abs() / metric.max(1e-12);
        worst = worst.max(rel);
        // closed form vs spectral
        let w = rho.bloch().unwrap();
        let y = Vector3::new(0.1, -0.2, 0.15);
        let spectral = bkm_metric(&rho, &crate::channels::pauli_dot(&y)).unwrap();
        let closed = bkm_qubit(&w, &y).unwrap();
        let rel2 = (spectral - closed).abs() / closed.max(1e-12);
        worst = worst.max(rel2);
    }
    (worst <= 1e-4, format!("max relative deviation {worst:.3e}"))
}

fn suite_sandwich(trials: usize, seed: u64) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut detail = String::new();
    let mut ok = true;
    for gamma in [0.2, 0.5, 0.8] {
        let ch = Channel::amplitude_damping(gamma).unwrap();
        let cap = (1.0 - gamma).sqrt();
        let mut max_ratio = 0.0f64;
        for _ in 0..trials {
            let rho = random_full_rank_qubit(&mut rng);
            let sigma = random_full_rank_qubit(&mut rng);
            let den = rel_entropy(&rho, &sigma, SupportPolicy::Infinite).unwrap();
            if den < 1e-8 {
                continue;
            }
            let num = rel_entropy(
                &ch.apply(&rho).unwrap(),
                &ch.apply(&sigma).unwrap(),
                SupportPolicy::Infinite,
            )
            .unwrap();
            max_ratio = max_ratio.max(num / den);
        }
        ok &= max_ratio <= cap + 1e-6;
        detail.push_str(&format!("gamma={gamma}: max ratio {max_ratio:.6} <= {cap:.6}; "));
    }
    (ok, detail)
}

fn suite_integral(trials: usize, seed: u64) -> (bool, String) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..trials.min(50) {
        let rho = random_full_rank_qubit(&mut rng);
        let sigma = random_full_rank_qubit(&mut rng);
        let d = rel_entropy(&rho, &sigma, SupportPolicy::Error).unwrap();
        let l2 = check_integral_representation_l2(&rho, &sigma, 64).unwrap();
        let l1 = check_integral_representation_l1(&rho, &sigma, 1e-10).unwrap();
        worst = worst.max((d - l2).abs()).max((d - l1).abs());
    }
    (worst <= 1e-5, format!("max residual {worst:.3e}"))
}

fn suite_region(seed: u64) -> (bool, String) {
    let samples = match sweep_region(12, &[0.6, 0.75, 0.9], 5, seed) {
        Ok(s) => s,
        Err(e) => return (false, format!("sweep failed: {e}")),
    };
    let mut ok = true;
    let mut detail = String::new();
    for r in &samples {
        if r.degradable && r.holevo_margin_min.is_finite() && r.holevo_margin_min < -1e-9 {
            ok = false;
            detail.push_str(&format!(
                "degradable point ({}, {}, {}) margin {}; ",
                r.gamma1, r.gamma2, r.p, r.holevo_margin_min
            ));
        }
        if r.antidegradable && r.holevo_margin_min.is_finite() && -r.holevo_margin_min < -1e-9 {
            // anti-degradable points favor the environment: margin <= 0
            ok = false;
            detail.push_str(&format!(
                "anti-degradable point ({}, {}, {}) margin {}; ",
                r.gamma1, r.gamma2, r.p, r.holevo_margin_min
            ));
        }
        if r.proven_less_noisy && !r.degradable {
            let inside = r.gamma1 + r.gamma2 > 1.0 && r.gamma1 < 0.5;
            if !inside {
                ok = false;
                detail.push_str("proven point outside the admissible region; ");
            }
        }
    }
    if detail.is_empty() {
        detail = format!("{} records consistent", samples.len());
    }
    (ok, detail)
}

fn cmd_verify(a: &VerifyArgs, seed: u64) -> i32 {
    let mut checks = Vec::new();
    let all = a.suite == "all";
    let trials = a.trials;
    if all || a.suite == "dpi" {
        checks.push(run_check("dpi", || suite_dpi(trials, seed)));
    }
    if all || a.suite == "bkm" {
        checks.push(run_check("bkm", || suite_bkm(trials, seed)));
    }
    if all || a.suite == "sandwich" {
        checks.push(run_check("sandwich", || suite_sandwich(trials, seed)));
    }
    if all || a.suite == "integral" {
        checks.push(run_check("integral", || suite_integral(trials, seed)));
    }
    if all || a.suite == "region" {
        checks.push(run_check("region", || suite_region(seed)));
    }
    if checks.is_empty() {
        eprintln!("error: unknown suite `{}`", a.suite);
        return 2;
    }
    let mut failed = false;
    for c in &checks {
        println!(
            "[{}] {} ({:.2}s): {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.secs,
            c.detail
        );
        failed |= !c.passed;
    }
    if failed {
        1
    } else {
        0
    }
}
