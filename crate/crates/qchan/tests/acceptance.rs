//! End-to-end acceptance suite: nine criteria, each printing one
//! PASS/FAIL line. Run with `cargo test --test acceptance -- --nocapture`.

use nalgebra::Vector3;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

use qchan::channels::{Channel, DensityMatrix, DephasingSpec};
use qchan::coefficients::{
    ampdamp_expansion_conjecture, dephasing_cp_expansion_bound, depol_qubit_exact,
    depol_relative_bounds,
};
use qchan::divergences::{
    bkm_metric, bkm_qubit, check_integral_representation_l1, check_integral_representation_l2,
    rel_entropy, SupportPolicy,
};
use qchan::estimator::{
    estimate_coefficient, is_isometric, nogo_witness, Mode, OptimizerConfig,
};
use qchan::lessnoisy::{classify_degradability, p_min, sampled_margin_min};

fn report(criterion: &str, passed: bool, detail: &str) {
    println!(
        "[{}] {criterion}: {detail}",
        if passed { "PASS" } else { "FAIL" }
    );
    assert!(passed, "{criterion}: {detail}");
}

fn config(mode: Mode, seed: u64) -> OptimizerConfig {
    let mut cfg = OptimizerConfig::new(mode);
    cfg.seed = seed;
    cfg.ratio_guard = 1e-8;
    cfg
}

fn random_full_rank_qubit(rng: &mut ChaCha8Rng) -> DensityMatrix {
    loop {
        let w = Vector3::new(
            1.9 * rng.gen::<f64>() - 0.95,
            1.9 * rng.gen::<f64>() - 0.95,
            1.9 * rng.gen::<f64>() - 0.95,
        );
        if w.norm() <= 0.95 {
            return DensityMatrix::from_bloch(&w).unwrap();
        }
    }
}

fn random_state(d: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    // full-rank via a random square root
    let m = qchan::linalg::CMat::from_fn(d, d, |_, _| {
        num_complex::Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let rho = &m * m.adjoint() + qchan::linalg::identity(d).scale(0.02);
    let tr = rho.trace().re;
    DensityMatrix::new(rho.scale(1.0 / tr)).unwrap()
}

#[test]
fn criterion_1_qubit_depolarizing_exactness() {
    let pairs = [(0.5, 0.25), (0.4, 0.2), (0.6, 0.3), (0.7, 0.35), (0.3, 0.15)];
    let mut worst = 0.0f64;
    for (i, &(p1, p2)) in pairs.iter().enumerate() {
        let n = Channel::depolarizing(2, p1).unwrap();
        let m = Channel::depolarizing(2, p2).unwrap();
        let (eta, check) = depol_qubit_exact(p1, p2).unwrap();
        let est_max = estimate_coefficient(&n, &m, &config(Mode::Max, i as u64)).unwrap();
        let est_min = estimate_coefficient(&n, &m, &config(Mode::Min, i as u64)).unwrap();
        worst = worst.max((est_max.lo - eta.lo).abs());
        worst = worst.max((est_min.lo - check.lo).abs());
    }
    report(
        "criterion 1 (qubit depolarizing exactness)",
        worst <= 1e-3,
        &format!("max |numerical - closed form| = {worst:.3e} <= 1e-3"),
    );
}

#[test]
fn criterion_2_depolarizing_bound_containment() {
    let pairs = [(0.5, 0.25), (0.4, 0.2), (0.6, 0.3), (0.8, 0.4), (0.3, 0.1)];
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut violations = 0usize;
    let mut total = 0usize;
    for d in [2usize, 3, 4] {
        for &(p1, p2) in &pairs {
            let bounds = depol_relative_bounds(d, p1, p2).unwrap();
            let n = Channel::depolarizing(d, p1).unwrap();
            let m = Channel::depolarizing(d, p2).unwrap();
            for _ in 0..1000 {
                let rho = random_state(d, &mut rng);
                let sigma = random_state(d, &mut rng);
                let num = rel_entropy(
                    &n.apply(&rho).unwrap(),
                    &n.apply(&sigma).unwrap(),
                    SupportPolicy::Infinite,
                )
                .unwrap();
                let den = rel_entropy(
                    &m.apply(&rho).unwrap(),
                    &m.apply(&sigma).unwrap(),
                    SupportPolicy::Infinite,
                )
                .unwrap();
                if den < 1e-10 {
                    continue;
                }
                total += 1;
                let r = num / den;
                if r < bounds.lo - 1e-9 || r > bounds.hi + 1e-9 {
                    violations += 1;
                }
            }
        }
    }
    report(
        "criterion 2 (depolarizing bound containment)",
        violations == 0,
        &format!("{violations} violations over {total} sampled ratios"),
    );
}

#[test]
fn criterion_3_nogo_vanishing() {
    let channels = [
        ("depolarizing", Channel::depolarizing(2, 0.5).unwrap()),
        ("dephasing", Channel::qubit_dephasing(0.6).unwrap()),
        ("amplitude damping", Channel::amplitude_damping(0.4).unwrap()),
    ];
    let mut ok = true;
    let mut detail = String::new();
    for (name, ch) in &channels {
        let mut prev = f64::INFINITY;
        let mut last = f64::NAN;
        for k in 2..=6 {
            let eps = 10f64.powi(-k);
            let (_, _, ratio) = nogo_witness(ch, eps).unwrap();
            ok &= ratio <= prev + 1e-12;
            prev = ratio;
            last = ratio;
        }
        ok &= last < 1e-3;
        detail.push_str(&format!("{name}: ratio(1e-6) = {last:.3e}; "));
    }
    // unitary input: witness refuses and the coefficient is reported as 1
    let u = Channel::unitary(qchan::linalg::identity(2)).unwrap();
    let unitary_ok = is_isometric(&u) && nogo_witness(&u, 1e-3).is_err();
    ok &= unitary_ok;
    detail.push_str(&format!("unitary handled: {unitary_ok}"));
    report("criterion 3 (no-go vanishing)", ok, &detail);
}

#[test]
fn criterion_4_bkm_equivalence() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut worst_fd = 0.0f64;
    let mut worst_cf = 0.0f64;
    for _ in 0..100 {
        let rho = random_full_rank_qubit(&mut rng);
        let sigma = random_full_rank_qubit(&mut rng);
        let h = 1e-3;
        let t0 = 0.5;
        let d_at =
            |t: f64| rel_entropy(&sigma.mix(&rho, t), &sigma, SupportPolicy::Error).unwrap();
        let second = (d_at(t0 + h) - 2.0 * d_at(t0) + d_at(t0 - h)) / (h * h);
        let x = rho.matrix() - sigma.matrix();
        let metric = bkm_metric(&sigma.mix(&rho, t0), &x).unwrap();
        worst_fd = worst_fd.max((second - metric).abs() / metric.max(1e-12));

        let w = rho.bloch().unwrap();
        let y = Vector3::new(
            rng.gen::<f64>() - 0.5,
            rng.gen::<f64>() - 0.5,
            rng.gen::<f64>() - 0.5,
        );
        let spectral = bkm_metric(&rho, &qchan::channels::pauli_dot(&y)).unwrap();
        let closed = bkm_qubit(&w, &y).unwrap();
        worst_cf = worst_cf.max((spectral - closed).abs() / closed.max(1e-12));
    }
    report(
        "criterion 4 (BKM equivalence)",
        worst_fd <= 1e-4 && worst_cf <= 1e-8,
        &format!("finite-difference rel dev {worst_fd:.3e} <= 1e-4, closed-vs-spectral rel dev {worst_cf:.3e} <= 1e-8"),
    );
}

#[test]
fn criterion_5_integral_representations() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst_l2 = 0.0f64;
    let mut worst_l1 = 0.0f64;
    for _ in 0..50 {
        let rho = random_full_rank_qubit(&mut rng);
        let sigma = random_full_rank_qubit(&mut rng);
        let d = rel_entropy(&rho, &sigma, SupportPolicy::Error).unwrap();
        worst_l2 = worst_l2.max((d - check_integral_representation_l2(&rho, &sigma, 64).unwrap()).abs());
        worst_l1 = worst_l1.max((d - check_integral_representation_l1(&rho, &sigma, 1e-9).unwrap()).abs());
    }
    report(
        "criterion 5 (integral representations)",
        worst_l2 <= 1e-6 && worst_l1 <= 1e-5,
        &format!("L2 residual {worst_l2:.3e} <= 1e-6, L1 residual {worst_l1:.3e} <= 1e-5"),
    );
}

#[test]
fn criterion_6_trace_sandwich() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut ok = true;
    let mut detail = String::new();
    for gamma in [0.2, 0.5, 0.8] {
        let ch = Channel::amplitude_damping(gamma).unwrap();
        let cap = (1.0 - gamma).sqrt();
        let floor = 1.0 - gamma;
        let mut max_ratio = 0.0f64;
        for k in 0..2000 {
            // near-pure pairs around the fixed point |0><0| (where the
            // sampled contraction approaches 1 - gamma), mixed with generic
            // full-rank pairs
            let (rho, sigma) = if k % 4 != 0 {
                let a = 10f64.powf(-4.0 + 2.0 * rng.gen::<f64>()); // 1e-4..1e-2
                let b = 10f64.powf(-4.0 + 2.0 * rng.gen::<f64>());
                (
                    DensityMatrix::diagonal(&[1.0 - a, a]).unwrap(),
                    DensityMatrix::diagonal(&[1.0 - b, b]).unwrap(),
                )
            } else {
                (
                    random_full_rank_qubit(&mut rng),
                    random_full_rank_qubit(&mut rng),
                )
            };
            let den = rel_entropy(&rho, &sigma, SupportPolicy::Infinite).unwrap();
            if den < 1e-10 {
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
        let within = max_ratio <= cap + 1e-6 && max_ratio >= floor - 1e-3;
        ok &= within;
        detail.push_str(&format!(
            "gamma={gamma}: max ratio {max_ratio:.6} in [{floor:.3}-1e-3, {cap:.6}+1e-6]; "
        ));
    }
    report("criterion 6 (trace sandwich)", ok, &detail);
}

#[test]
fn criterion_7_less_noisy_region() {
    let (deg, anti) = classify_degradability(0.75, 0.2, 0.81).unwrap();
    let pm = p_min(0.2, 0.81).unwrap();
    let pm_ok = (pm - 0.68066).abs() <= 1e-4;
    let margin = sampled_margin_min(0.75, 0.2, 0.81, 500, 7).unwrap();
    let ok = !deg && !anti && pm_ok && margin >= -1e-9;
    report(
        "criterion 7 (less-noisy region)",
        ok,
        &format!(
            "classify=(deg {deg}, anti {anti}), p_min = {pm:.6} (target 0.68066), min Holevo margin over 500 ensembles = {margin:.3e}"
        ),
    );
}

#[test]
fn criterion_8_dephasing_cp_bound() {
    // qubit pair p = 0.4, p' = 0.5 with eps = 0.25 satisfies the hypotheses
    let (p, p_prime, eps) = (0.4, 0.5, 0.25);
    let g = DephasingSpec::from_real(&[vec![1.0, 1.0 - p], vec![1.0 - p, 1.0]]).unwrap();
    let gp =
        DephasingSpec::from_real(&[vec![1.0, 1.0 - p_prime], vec![1.0 - p_prime, 1.0]]).unwrap();
    let bound = dephasing_cp_expansion_bound(&g, &gp, eps).unwrap();
    let n = Channel::dephasing(&gp).unwrap();
    let m = Channel::dephasing(&g).unwrap();
    let est = estimate_coefficient(&n, &m, &config(Mode::Min, 8)).unwrap();
    let ok = est.lo >= bound.lo - 1e-6;
    report(
        "criterion 8 (dephasing CP bound)",
        ok,
        &format!("numerical expansion {:.6} >= bound {:.6} - 1e-6", est.lo, bound.lo),
    );
}

#[test]
fn criterion_9_ampdamp_conjecture_surface() {
    // soft criterion: mismatches are reported as evidence, not failures
    let gammas = [0.15, 0.3, 0.5, 0.7, 0.85];
    let mut worst = 0.0f64;
    let mut mismatches = Vec::new();
    for (i, &g1) in gammas.iter().enumerate() {
        for (j, &g2) in gammas.iter().enumerate() {
            let n = Channel::amplitude_damping(g1).unwrap();
            let m = Channel::amplitude_damping(g2).unwrap();
            let conj = ampdamp_expansion_conjecture(g1, g2).unwrap().lo;
            let mut cfg = config(Mode::Min, (i * 5 + j) as u64);
            cfg.restarts = 30;
            cfg.max_iters = 1500;
            let est = estimate_coefficient(&n, &m, &cfg).unwrap();
            let rel = (est.lo - conj).abs() / conj;
            worst = worst.max(rel);
            if rel > 5e-3 {
                mismatches.push(format!("({g1},{g2}): numerical {:.5} vs conjectured {conj:.5}", est.lo));
            }
        }
    }
    println!(
        "[{}] criterion 9 (amplitude-damping conjecture surface): max relative deviation {worst:.3e} over 5x5 grid{}{}",
        if mismatches.is_empty() { "PASS" } else { "SOFT-FAIL" },
        if mismatches.is_empty() { "" } else { "; mismatched points: " },
        mismatches.join(", ")
    );
    // soft criterion: record but never fail the build
}
