//! Property and invariant tests: data processing, metric identities,
//! contraction sandwiches, optimizer soundness, and randomized
//! construction/round-trip checks.

use nalgebra::Vector3;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng as _, SeedableRng as _};
use rand_chacha::ChaCha8Rng;

use qchan::channels::{parse_channel_spec, Channel, DensityMatrix};
use qchan::coefficients::{dephasing_cp_expansion_bound, depol_relative_bounds};
use qchan::divergences::{
    bkm_metric, hockey_stick, rel_entropy, trace_distance, SupportPolicy,
};
use qchan::estimator::{estimate_coefficient, Mode, OptimizerConfig};
use qchan::lessnoisy::{classify_degradability, p_min, sampled_margin_min};
use qchan::linalg::{eig_hermitian, CMat, CVec};

fn random_state(d: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let m = CMat::from_fn(d, d, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let rho = &m * m.adjoint() + qchan::linalg::identity(d).scale(0.05);
    let tr = rho.trace().re;
    DensityMatrix::new(rho.scale(1.0 / tr)).unwrap()
}

fn random_pure(d: usize, rng: &mut ChaCha8Rng) -> DensityMatrix {
    let v = CVec::from_fn(d, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    DensityMatrix::pure(&v.scale(1.0 / v.norm())).unwrap()
}

/// A random CPTP map with `k` Kraus operators, via the thin QR factor of a
/// random (k d) x d complex matrix.
fn random_channel(d: usize, k: usize, rng: &mut ChaCha8Rng) -> Channel {
    let m = CMat::from_fn(k * d, d, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let q = m.qr().q();
    let kraus = (0..k).map(|i| q.rows(i * d, d).into_owned()).collect();
    Channel::from_kraus(kraus).unwrap()
}

fn random_traceless_hermitian(d: usize, rng: &mut ChaCha8Rng) -> CMat {
    let m = CMat::from_fn(d, d, |_, _| {
        Complex64::new(rng.gen::<f64>() - 0.5, rng.gen::<f64>() - 0.5)
    });
    let h = (&m + m.adjoint()).scale(0.5);
    let shift = h.trace() / Complex64::new(d as f64, 0.0);
    &h - qchan::linalg::identity(d) * shift
}

fn full_rank(rho: &DensityMatrix, cutoff: f64) -> bool {
    eig_hermitian(rho.matrix())
        .unwrap()
        .eigenvalues
        .iter()
        .all(|&l| l > cutoff)
}

#[test]
fn data_processing_200_triples() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    for i in 0..200 {
        let d = 2 + (i % 2);
        let ch = random_channel(d, 2 + i % 3, &mut rng);
        let rho = random_state(d, &mut rng);
        let sigma = random_state(d, &mut rng);
        let before = rel_entropy(&rho, &sigma, SupportPolicy::Infinite).unwrap();
        let after = rel_entropy(
            &ch.apply(&rho).unwrap(),
            &ch.apply(&sigma).unwrap(),
            SupportPolicy::Infinite,
        )
        .unwrap();
        assert!(
            after <= before + 1e-9,
            "DPI violated: {after} > {before} (trial {i})"
        );
    }
}

#[test]
fn bkm_second_derivative_identity() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let rho = random_state(2, &mut rng);
        let sigma = random_state(2, &mut rng);
        let h = 1e-4;
        let t0 = 0.3 + 0.4 * rng.gen::<f64>();
        let d_at =
            |t: f64| rel_entropy(&sigma.mix(&rho, t), &sigma, SupportPolicy::Error).unwrap();
        let second = (d_at(t0 + h) - 2.0 * d_at(t0) + d_at(t0 - h)) / (h * h);
        let x = rho.matrix() - sigma.matrix();
        let metric = bkm_metric(&sigma.mix(&rho, t0), &x).unwrap();
        assert!(
            (second - metric).abs() <= 1e-4 * metric.max(1e-9),
            "second derivative {second} vs metric {metric}"
        );
    }
}

#[test]
fn bkm_comparison_under_operator_dominance() {
    // rho <= c sigma with c = lambda_max(sigma^{-1/2} rho sigma^{-1/2})
    // implies g_rho(X) >= g_sigma(X) / c.
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for _ in 0..100 {
        let rho = random_state(2, &mut rng);
        let sigma = random_state(2, &mut rng);
        let s = eig_hermitian(sigma.matrix()).unwrap();
        let inv_sqrt = &s.eigenvectors
            * CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                2,
                s.eigenvalues
                    .iter()
                    .map(|&l| Complex64::new(1.0 / l.sqrt(), 0.0)),
            ))
            * s.eigenvectors.adjoint();
        let c = eig_hermitian(&(&inv_sqrt * rho.matrix() * &inv_sqrt))
            .unwrap()
            .eigenvalues
            .iter()
            .cloned()
            .fold(f64::NEG_INFINITY, f64::max);
        let x = random_traceless_hermitian(2, &mut rng);
        let g_rho = bkm_metric(&rho, &x).unwrap();
        let g_sigma = bkm_metric(&sigma, &x).unwrap();
        assert!(
            g_rho >= g_sigma / c - 1e-9,
            "g_rho = {g_rho} < g_sigma / c = {}",
            g_sigma / c
        );
    }
}

#[test]
fn bkm_data_processing() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut tested = 0;
    while tested < 50 {
        let ch = random_channel(2, 2, &mut rng);
        let sigma = random_state(2, &mut rng);
        let out = ch.apply(&sigma).unwrap();
        if !full_rank(&out, 1e-6) {
            continue;
        }
        let x = random_traceless_hermitian(2, &mut rng);
        let g_before = bkm_metric(&sigma, &x).unwrap();
        let g_after = bkm_metric(&out, &ch.apply_op(&x).unwrap()).unwrap();
        assert!(
            g_after <= g_before + 1e-9,
            "BKM DPI violated: {g_after} > {g_before}"
        );
        tested += 1;
    }
}

#[test]
fn entropy_trace_sandwich_sampled() {
    // for amplitude damping the trace-norm contraction is exactly
    // sqrt(1-gamma); entropy ratios must stay below it and the sampled
    // entropy sup must respect the lower edge (1-gamma) = eta_tr^2.
    let mut rng = ChaCha8Rng::seed_from_u64(14);
    for gamma in [0.3, 0.6] {
        let ch = Channel::amplitude_damping(gamma).unwrap();
        let eta_tr = (1.0 - gamma).sqrt();
        let mut ent_sup = 0.0f64;
        let mut tr_sup = 0.0f64;
        for k in 0..1500 {
            let (rho, sigma) = if k % 3 == 0 {
                (random_state(2, &mut rng), random_state(2, &mut rng))
            } else {
                let a = 10f64.powf(-4.0 + 2.0 * rng.gen::<f64>());
                let b = 10f64.powf(-4.0 + 2.0 * rng.gen::<f64>());
                (
                    DensityMatrix::diagonal(&[1.0 - a, a]).unwrap(),
                    DensityMatrix::diagonal(&[1.0 - b, b]).unwrap(),
                )
            };
            let den = rel_entropy(&rho, &sigma, SupportPolicy::Infinite).unwrap();
            if den > 1e-10 {
                let num = rel_entropy(
                    &ch.apply(&rho).unwrap(),
                    &ch.apply(&sigma).unwrap(),
                    SupportPolicy::Infinite,
                )
                .unwrap();
                ent_sup = ent_sup.max(num / den);
            }
            let dtr = trace_distance(&rho, &sigma).unwrap();
            if dtr > 1e-10 {
                tr_sup = tr_sup
                    .max(trace_distance(&ch.apply(&rho).unwrap(), &ch.apply(&sigma).unwrap()).unwrap() / dtr);
            }
        }
        assert!(ent_sup <= eta_tr + 1e-6, "entropy sup {ent_sup} > {eta_tr}");
        assert!(tr_sup <= eta_tr + 1e-6, "trace sup {tr_sup} > {eta_tr}");
        assert!(
            ent_sup >= eta_tr * eta_tr - 1e-2,
            "entropy sup {ent_sup} below lower edge {}",
            eta_tr * eta_tr
        );
    }
}

#[test]
fn hockey_stick_pure_input_attainment() {
    let mut rng = ChaCha8Rng::seed_from_u64(15);
    // deterministic part: for pure psi, E_s(psi||sigma) >= 1 - s <psi|sigma|psi>
    for _ in 0..100 {
        let psi = random_pure(2, &mut rng);
        let sigma = random_state(2, &mut rng);
        let s = 2.0 * rng.gen::<f64>();
        let overlap = (psi.matrix() * sigma.matrix()).trace().re;
        let e = hockey_stick(&psi, &sigma, s).unwrap();
        assert!(e >= 1.0 - s * overlap - 1e-10);
    }
    // sampled part: mixed-input contraction ratios never exceed the
    // pure-input sampled sup
    let ch = Channel::amplitude_damping(0.4).unwrap();
    let s = 1.3;
    let mut pure_sup = 0.0f64;
    for _ in 0..3000 {
        let rho = random_pure(2, &mut rng);
        let sigma = random_pure(2, &mut rng);
        let den = hockey_stick(&rho, &sigma, s).unwrap();
        if den > 1e-9 {
            pure_sup = pure_sup
                .max(hockey_stick(&ch.apply(&rho).unwrap(), &ch.apply(&sigma).unwrap(), s).unwrap() / den);
        }
    }
    for _ in 0..300 {
        let rho = random_state(2, &mut rng);
        let sigma = random_state(2, &mut rng);
        let den = hockey_stick(&rho, &sigma, s).unwrap();
        if den > 1e-9 {
            let r = hockey_stick(&ch.apply(&rho).unwrap(), &ch.apply(&sigma).unwrap(), s)
                .unwrap()
                / den;
            assert!(r <= pure_sup + 1e-6, "mixed ratio {r} > pure sup {pure_sup}");
        }
    }
}

fn soundness_config(mode: Mode, seed: u64) -> OptimizerConfig {
    let mut cfg = OptimizerConfig::new(mode);
    cfg.restarts = 20;
    cfg.seed = seed;
    cfg.ratio_guard = 1e-8;
    cfg
}

#[test]
fn optimizer_respects_proven_bounds() {
    // depolarizing pair: estimates stay inside the proven interval
    let (d, p1, p2) = (2, 0.5, 0.25);
    let bounds = depol_relative_bounds(d, p1, p2).unwrap();
    let n = Channel::depolarizing(d, p1).unwrap();
    let m = Channel::depolarizing(d, p2).unwrap();
    let hi = estimate_coefficient(&n, &m, &soundness_config(Mode::Max, 20)).unwrap();
    let lo = estimate_coefficient(&n, &m, &soundness_config(Mode::Min, 21)).unwrap();
    assert!(hi.lo <= bounds.hi + 1e-6, "max estimate {} > {}", hi.lo, bounds.hi);
    assert!(lo.lo >= bounds.lo - 1e-6, "min estimate {} < {}", lo.lo, bounds.lo);

    // dephasing pair satisfying the CP-order hypotheses
    let g = qchan::channels::DephasingSpec::from_real(&[vec![1.0, 0.6], vec![0.6, 1.0]]).unwrap();
    let gp = qchan::channels::DephasingSpec::from_real(&[vec![1.0, 0.5], vec![0.5, 1.0]]).unwrap();
    let bound = dephasing_cp_expansion_bound(&g, &gp, 0.25).unwrap();
    let n = Channel::dephasing(&gp).unwrap();
    let m = Channel::dephasing(&g).unwrap();
    let est = estimate_coefficient(&n, &m, &soundness_config(Mode::Min, 22)).unwrap();
    assert!(est.lo >= bound.lo - 1e-6, "min estimate {} < bound {}", est.lo, bound.lo);
}

#[test]
fn contraction_vs_identity_below_one() {
    let id = Channel::identity_channel(2);
    for (seed, ch) in [
        Channel::depolarizing(2, 0.3).unwrap(),
        Channel::amplitude_damping(0.5).unwrap(),
        Channel::qubit_dephasing(0.7).unwrap(),
    ]
    .into_iter()
    .enumerate()
    {
        let est = estimate_coefficient(&ch, &id, &soundness_config(Mode::Max, 30 + seed as u64))
            .unwrap();
        assert!(est.lo <= 1.0 + 1e-6, "eta vs identity = {} > 1", est.lo);
    }
}

#[test]
fn degradability_implies_margin_sign() {
    // degradable point: gamma1 + gamma2 <= 1
    let (deg, _) = classify_degradability(0.5, 0.3, 0.6).unwrap();
    assert!(deg);
    let m = sampled_margin_min(0.5, 0.3, 0.6, 100, 40).unwrap();
    assert!(m >= -1e-9, "degradable point has margin {m}");

    // anti-degradable point: mirrored conditions
    let (_, anti) = classify_degradability(0.5, 0.7, 0.6).unwrap();
    assert!(anti);
    let mut rng = ChaCha8Rng::seed_from_u64(41);
    for _ in 0..100 {
        let ens = qchan::lessnoisy::random_ensemble(&mut rng);
        let margin = qchan::lessnoisy::holevo_margin(0.5, 0.7, 0.6, &ens).unwrap();
        assert!(margin <= 1e-9, "anti-degradable point has margin {margin}");
    }
}

#[test]
fn p_min_strictly_above_half_on_region() {
    for i in 0..10 {
        for j in 0..10 {
            let g1 = 0.05 + 0.4 * i as f64 / 9.0; // gamma1 < 1/2
            let g2 = 1.0 - g1 + (1.0 - (1.0 - g1)) * j as f64 / 9.0 * 0.9;
            let g2 = g2.min(0.99);
            if g1 + g2 <= 1.0 {
                continue;
            }
            let p = p_min(g1, g2).unwrap();
            assert!(p > 0.5 && p < 1.0, "p_min({g1},{g2}) = {p} outside (1/2, 1)");
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn parse_round_trip_depolarizing(d in 2usize..5, p in 0.01f64..0.99) {
        let ch = parse_channel_spec(&format!("depol:d={d},p={p}")).unwrap();
        let direct = Channel::depolarizing(d, p).unwrap();
        prop_assert!(qchan::linalg::max_abs(&(ch.choi() - direct.choi())) < 1e-12);
    }

    #[test]
    fn parse_round_trip_amplitude_damping(g in 0.01f64..0.99) {
        let ch = parse_channel_spec(&format!("amp:gamma={g}")).unwrap();
        let direct = Channel::amplitude_damping(g).unwrap();
        prop_assert!(qchan::linalg::max_abs(&(ch.choi() - direct.choi())) < 1e-12);
    }

    #[test]
    fn parse_flagged_mixture_dims(p in 0.01f64..0.99, g in 0.01f64..0.99) {
        let ch = parse_channel_spec(&format!("flag:p={p},a=(amp:gamma={g}),b=(amp:gamma={g})")).unwrap();
        prop_assert_eq!(ch.dim_in(), 2);
        prop_assert_eq!(ch.dim_out(), 4);
    }

    #[test]
    fn bloch_round_trip(x in -0.57f64..0.57, y in -0.57f64..0.57, z in -0.57f64..0.57) {
        let w = Vector3::new(x, y, z);
        let rho = DensityMatrix::from_bloch(&w).unwrap();
        let back = rho.bloch().unwrap();
        prop_assert!((w - back).norm() < 1e-12);
    }

    #[test]
    fn constructed_channels_trace_preserving(p in 0.01f64..0.99, g in 0.01f64..0.99) {
        for ch in [
            Channel::depolarizing(3, p).unwrap(),
            Channel::amplitude_damping(g).unwrap(),
            Channel::qubit_dephasing(p).unwrap(),
            Channel::erasure(p, 2).unwrap(),
        ] {
            let mut rng = ChaCha8Rng::seed_from_u64(99);
            let rho = random_state(ch.dim_in(), &mut rng);
            let out = ch.apply(&rho).unwrap();
            prop_assert!((out.matrix().trace().re - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn mixtures_stay_states(t in 0.0f64..1.0, seed in 0u64..1000) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_state(2, &mut rng);
        let b = random_state(2, &mut rng);
        let m = a.mix(&b, t);
        prop_assert!(qchan::linalg::is_psd(m.matrix(), 1e-10));
        prop_assert!((m.matrix().trace().re - 1.0).abs() < 1e-12);
    }
}
