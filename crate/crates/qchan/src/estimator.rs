//! Numerical estimation of contraction/expansion coefficients by
//! multi-start Nelder-Mead over purification-parameterized state pairs,
//! plus the explicit witness construction showing that the expansion
//! coefficient of a genuinely noisy channel vanishes.

use num_complex::Complex64;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channels::{Channel, DensityMatrix};
use crate::coefficients::{CoefficientEstimate, CoefficientKind};
use crate::divergences::{rel_entropy, SupportPolicy};
use crate::error::{QchanError, Result};
use crate::linalg::{eig_hermitian, CMat, CVec};

/// Optimization direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    /// Estimate the supremum of the divergence ratio (contraction).
    Max,
    /// Estimate the infimum (expansion).
    Min,
}

#[derive(Debug, Clone, Serialize)]
pub struct OptimizerConfig {
    pub restarts: usize,
    pub max_iters: usize,
    pub seed: u64,
    pub simplex_tol: f64,
    pub ratio_guard: f64,
    pub mode: Mode,
}

impl OptimizerConfig {
    pub fn new(mode: Mode) -> Self {
        Self {
            restarts: 50,
            max_iters: 2000,
            seed: 0,
            simplex_tol: 1e-10,
            ratio_guard: 1e-10,
            mode,
        }
    }
}

/// Outcome of a multi-start run.
#[derive(Debug, Clone, Serialize)]
pub struct OptimizerRun {
    pub best_value: f64,
    pub per_restart: Vec<f64>,
    pub converged: Vec<bool>,
    #[serde(skip)]
    pub best_pair: Option<(DensityMatrix, DensityMatrix)>,
}

/// Real parameterization of a state: a unit vector in C^{d^2} stored as
/// 2 d^2 reals, whose d x d reshaping M gives rho = M M^dagger.
#[derive(Debug, Clone)]
pub struct PurificationVector {
    pub dim: usize,
    pub v: Vec<f64>,
}

impl PurificationVector {
    pub fn new(dim: usize, mut v: Vec<f64>) -> Result<Self> {
        if v.len() != 2 * dim * dim {
            return Err(QchanError::DimMismatch(format!(
                "purification vector needs length {}, got {}",
                2 * dim * dim,
                v.len()
            )));
        }
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n < 1e-300 {
            return Err(QchanError::BadParam("zero purification vector".into()));
        }
        for x in v.iter_mut() {
            *x /= n;
        }
        Ok(Self { dim, v })
    }

    /// rho = M M^dagger with M[i][j] = psi[i * d + j].
    pub fn to_state(&self) -> DensityMatrix {
        let d = self.dim;
        let m = CMat::from_fn(d, d, |i, j| {
            let k = i * d + j;
            Complex64::new(self.v[k], self.v[d * d + k])
        });
        let rho = &m * m.adjoint();
        DensityMatrix::trusted(rho)
    }

    /// Parameter vector whose state is the given diagonal distribution.
    pub fn from_diagonal(probs: &[f64]) -> Result<Self> {
        let d = probs.len();
        let mut v = vec![0.0; 2 * d * d];
        for (i, &p) in probs.iter().enumerate() {
            v[i * d + i] = p.max(0.0).sqrt();
        }
        Self::new(d, v)
    }
}

/// Divergence ratio D(N(rho)||N(sigma)) / D(M(rho)||M(sigma)) for the state
/// pair induced by the two purification vectors. Returns None (rejected)
/// when the denominator is below the guard or the ratio is ill-posed.
pub fn objective_ratio(
    ch_n: &Channel,
    ch_m: &Channel,
    v1: &PurificationVector,
    v2: &PurificationVector,
    ratio_guard: f64,
) -> Result<Option<f64>> {
    if v1.dim != ch_n.dim_in() || v2.dim != ch_n.dim_in() || ch_m.dim_in() != ch_n.dim_in() {
        return Err(QchanError::DimMismatch("objective_ratio dims".into()));
    }
    let rho = v1.to_state();
    let sigma = v2.to_state();
    let num = rel_entropy(
        &ch_n.apply(&rho)?,
        &ch_n.apply(&sigma)?,
        SupportPolicy::Infinite,
    )?;
    let den = rel_entropy(
        &ch_m.apply(&rho)?,
        &ch_m.apply(&sigma)?,
        SupportPolicy::Infinite,
    )?;
    if !den.is_finite() || den < ratio_guard {
        return Ok(None);
    }
    let r = num / den;
    if !r.is_finite() {
        return Ok(None);
    }
    Ok(Some(r))
}

const PENALTY: f64 = 1e6;

fn penalized(ch_n: &Channel, ch_m: &Channel, x: &[f64], cfg: &OptimizerConfig) -> f64 {
    let d = ch_n.dim_in();
    let half = 2 * d * d;
    let sign = match cfg.mode {
        Mode::Min => 1.0,
        Mode::Max => -1.0,
    };
    let (v1, v2) = (
        PurificationVector::new(d, x[..half].to_vec()),
        PurificationVector::new(d, x[half..].to_vec()),
    );
    let (v1, v2) = match (v1, v2) {
        (Ok(a), Ok(b)) => (a, b),
        _ => return PENALTY,
    };
    match objective_ratio(ch_n, ch_m, &v1, &v2, cfg.ratio_guard) {
        Ok(Some(r)) => sign * r,
        _ => PENALTY,
    }
}

/// Standard Nelder-Mead on R^n minimizing `f`, returning (best_x, best_f,
/// converged).
fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    scale: f64,
    max_iters: usize,
    tol: f64,
) -> (Vec<f64>, f64, bool) {
    let n = x0.len();
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut p = x0.to_vec();
        p[i] += scale;
        simplex.push(p);
    }
    let mut values: Vec<f64> = simplex.iter().map(|p| f(p)).collect();
    let (alpha, gamma, rho_c, sigma_s) = (1.0, 2.0, 0.5, 0.5);
    let mut converged = false;
    for _ in 0..max_iters {
        // sort ascending by value (stable — keeps determinism)
        let mut idx: Vec<usize> = (0..=n).collect();
        idx.sort_by(|&a, &b| values[a].partial_cmp(&values[b]).unwrap());
        let simplex_new: Vec<Vec<f64>> = idx.iter().map(|&i| simplex[i].clone()).collect();
        let values_new: Vec<f64> = idx.iter().map(|&i| values[i]).collect();
        simplex = simplex_new;
        values = values_new;
        if (values[n] - values[0]).abs() < tol {
            converged = true;
            break;
        }
        // centroid of all but worst
        let mut c = vec![0.0; n];
        for p in simplex.iter().take(n) {
            for (ci, pi) in c.iter_mut().zip(p) {
                *ci += pi / n as f64;
            }
        }
        let reflect: Vec<f64> = c
            .iter()
            .zip(&simplex[n])
            .map(|(ci, wi)| ci + alpha * (ci - wi))
            .collect();
        let fr = f(&reflect);
        if fr < values[0] {
            let expand: Vec<f64> = c
                .iter()
                .zip(&simplex[n])
                .map(|(ci, wi)| ci + gamma * (ci - wi))
                .collect();
            let fe = f(&expand);
            if fe < fr {
                simplex[n] = expand;
                values[n] = fe;
            } else {
                simplex[n] = reflect;
                values[n] = fr;
            }
        } else if fr < values[n - 1] {
            simplex[n] = reflect;
            values[n] = fr;
        } else {
            let contract: Vec<f64> = c
                .iter()
                .zip(&simplex[n])
                .map(|(ci, wi)| ci + rho_c * (wi - ci))
                .collect();
            let fc = f(&contract);
            if fc < values[n] {
                simplex[n] = contract;
                values[n] = fc;
            } else {
                // shrink toward best
                let best = simplex[0].clone();
                for k in 1..=n {
                    for (pi, bi) in simplex[k].iter_mut().zip(&best) {
                        *pi = bi + sigma_s * (*pi - bi);
                    }
                    values[k] = f(&simplex[k]);
                }
            }
        }
    }
    let mut best = 0;
    for k in 1..=n {
        if values[k] < values[best] {
            best = k;
        }
    }
    (simplex[best].clone(), values[best], converged)
}

/// Starting point for a restart: isotropic Gaussian, except every tenth
/// restart is seeded near analytic extremal candidates (near-pure pairs in
/// a common eigenbasis, with the weight on the last basis state — the
/// regime where amplitude-damping and dephasing extremizers live).
fn restart_start(d: usize, idx: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let n = 4 * d * d;
    if idx % 10 == 0 {
        let lam = 10f64.powf(-1.0 - 3.0 * rng.gen::<f64>()); // 1e-1 .. 1e-4
        let mu = 10f64.powf(-1.0 - 3.0 * rng.gen::<f64>());
        let mut probs1 = vec![lam / (d - 1) as f64; d];
        probs1[d - 1] = 1.0 - lam;
        let mut probs2 = vec![mu / (d - 1) as f64; d];
        probs2[d - 1] = 1.0 - mu;
        let p1 = PurificationVector::from_diagonal(&probs1).unwrap();
        let p2 = PurificationVector::from_diagonal(&probs2).unwrap();
        let mut x: Vec<f64> = p1.v.iter().chain(p2.v.iter()).copied().collect();
        for xi in x.iter_mut() {
            *xi += 1e-3 * rng.sample::<f64, _>(rand_distr_standard_normal());
        }
        x
    } else {
        (0..n)
            .map(|_| rng.sample::<f64, _>(rand_distr_standard_normal()))
            .collect()
    }
}

// Box-Muller via the rand interfaces; avoids pulling a distributions crate
// for one sampler.
struct StdNormal;
impl rand::distributions::Distribution<f64> for StdNormal {
    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
        let u2: f64 = rng.gen();
        (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
    }
}
fn rand_distr_standard_normal() -> StdNormal {
    StdNormal
}

/// Multi-start estimate of the relative contraction (mode max) or expansion
/// (mode min) coefficient of `ch_n` against `ch_m`. Deterministic given the
/// seed: each restart owns stream `i` of a counter-based RNG and the
/// extremum reduction is by index, so the thread count cannot change the
/// result.
pub fn estimate_coefficient(
    ch_n: &Channel,
    ch_m: &Channel,
    cfg: &OptimizerConfig,
) -> Result<CoefficientEstimate> {
    if cfg.restarts == 0 {
        return Err(QchanError::BadParam("restarts must be >= 1".into()));
    }
    let d = ch_n.dim_in();
    if ch_m.dim_in() != d {
        return Err(QchanError::DimMismatch("channel input dims differ".into()));
    }
    let f = |x: &[f64]| penalized(ch_n, ch_m, x, cfg);
    let results: Vec<(f64, Vec<f64>, bool)> = crate::par::map_indexed(cfg.restarts, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        rng.set_stream(i as u64);
        let x0 = restart_start(d, i, &mut rng);
        let scale = if i % 10 == 0 { 1e-3 } else { 0.25 };
        let (x, v, conv) = nelder_mead(&f, &x0, scale, cfg.max_iters, cfg.simplex_tol);
        (v, x, conv)
    });
    let sign = match cfg.mode {
        Mode::Min => 1.0,
        Mode::Max => -1.0,
    };
    let mut best_idx = None;
    let mut per_restart = Vec::with_capacity(cfg.restarts);
    let mut converged = Vec::with_capacity(cfg.restarts);
    for (i, (v, _, conv)) in results.iter().enumerate() {
        per_restart.push(sign * v);
        converged.push(*conv);
        if *v < PENALTY / 2.0 {
            match best_idx {
                None => best_idx = Some(i),
                Some(b) if *v < results[b].0 => best_idx = Some(i),
                _ => {}
            }
        }
    }
    let best_idx = best_idx.ok_or_else(|| {
        QchanError::AssumptionFailed("every restart was rejected by the ratio guard".into())
    })?;
    let best_value = sign * results[best_idx].0;
    let half = 2 * d * d;
    let x = &results[best_idx].1;
    let pair = (
        PurificationVector::new(d, x[..half].to_vec())?.to_state(),
        PurificationVector::new(d, x[half..].to_vec())?.to_state(),
    );
    let run = OptimizerRun {
        best_value,
        per_restart,
        converged,
        best_pair: Some(pair),
    };
    Ok(CoefficientEstimate {
        lo: best_value,
        hi: best_value,
        kind: CoefficientKind::Numerical,
        source: match cfg.mode {
            Mode::Max => "multi-start estimate (lower bound on the supremum)".into(),
            Mode::Min => "multi-start estimate (upper bound on the infimum)".into(),
        },
        meta: Some(run),
    })
}

/// Number of eigenvalues of a PSD matrix above cutoff * lambda_max.
pub fn support_dim(m: &CMat, cutoff: f64) -> Result<usize> {
    let spec = eig_hermitian(m)?;
    let lmax = spec.max_eigenvalue();
    if spec.min_eigenvalue() < -1e-9 * lmax.max(1.0) {
        return Err(QchanError::NotPsd(spec.min_eigenvalue()));
    }
    Ok(spec
        .eigenvalues
        .iter()
        .filter(|&&l| l > cutoff * lmax.max(1e-300))
        .count())
}

/// Witness pair for the vanishing expansion coefficient of a noisy channel
/// with dim_in >= dim_out. Returns (rho, sigma_eps, ratio) where
/// rho = P/k for a projector P chosen so the channel output support stops
/// growing, sigma_eps mixes in the next chain vector with weight eps, and
/// ratio = D(N(rho)||N(sigma_eps)) / D(rho||sigma_eps). The denominator is
/// -ln(1-eps) by construction. Errors with PurityPreserving when no pure
/// input produces a mixed output (isometric or replacement channel).
pub fn nogo_witness(
    ch: &Channel,
    eps: f64,
) -> Result<(DensityMatrix, DensityMatrix, f64)> {
    if ch.dim_in() < ch.dim_out() {
        return Err(QchanError::BadParam(
            "witness needs dim_in >= dim_out".into(),
        ));
    }
    if !(0.0 < eps && eps < 1.0) {
        return Err(QchanError::BadParam(format!("eps = {eps} outside (0,1)")));
    }
    let d = ch.dim_in();
    let cutoff = 1e-9;
    // (a) a pure state with mixed output: basis scan, then random states
    let mut phi1: Option<CVec> = None;
    let mut candidates: Vec<CVec> = (0..d)
        .map(|k| CVec::from_fn(d, |i, _| Complex64::new(if i == k { 1.0 } else { 0.0 }, 0.0)))
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..200 {
        let v = CVec::from_fn(d, |_, _| {
            Complex64::new(
                rng.sample(rand_distr_standard_normal()),
                rng.sample(rand_distr_standard_normal()),
            )
        });
        candidates.push(v);
    }
    for v in &candidates {
        let v = v.unscale(v.norm());
        let out = ch.apply_op(&(&v * v.adjoint()))?;
        if support_dim(&out, cutoff)? >= 2 {
            phi1 = Some(v);
            break;
        }
    }
    let phi1 = phi1.ok_or(QchanError::PurityPreserving)?;
    // chain phi_1, phi_2, ... : Gram-Schmidt of the standard basis against phi_1
    let mut chain: Vec<CVec> = vec![phi1];
    for k in 0..d {
        if chain.len() == d {
            break;
        }
        let mut v = CVec::from_fn(d, |i, _| {
            Complex64::new(if i == k { 1.0 } else { 0.0 }, 0.0)
        });
        for u in &chain {
            let c = (u.adjoint() * &v)[(0, 0)];
            v -= u.scale(1.0) * c;
        }
        if v.norm() > 1e-8 {
            let n = v.norm();
            chain.push(v.unscale(n));
        }
    }
    // (b)+(c): projectors P_k; find k0 with equal output support dims
    let projector = |k: usize| -> CMat {
        let mut p = CMat::zeros(d, d);
        for u in chain.iter().take(k) {
            p += u * u.adjoint();
        }
        p
    };
    let mut k0 = None;
    for k in 1..d {
        let sk = support_dim(&ch.apply_op(&projector(k).scale(1.0 / k as f64))?, cutoff)?;
        let sk1 = support_dim(
            &ch.apply_op(&projector(k + 1).scale(1.0 / (k + 1) as f64))?,
            cutoff,
        )?;
        if sk == sk1 {
            k0 = Some(k);
            break;
        }
    }
    let k0 = k0.ok_or_else(|| {
        QchanError::AssumptionFailed("no support-stabilizing projector found".into())
    })?;
    let rho = DensityMatrix::trusted(projector(k0).scale(1.0 / k0 as f64));
    let psi = &chain[k0];
    let sigma = DensityMatrix::trusted(
        rho.matrix().scale(1.0 - eps) + (psi * psi.adjoint()).scale(eps),
    );
    let num = rel_entropy(&ch.apply(&rho)?, &ch.apply(&sigma)?, SupportPolicy::Infinite)?;
    let den = -(1.0 - eps).ln();
    Ok((rho, sigma, num / den))
}

/// Detect whether the channel acts as a single unitary/isometry (one Kraus
/// operator up to numerical rank), for the witness case split.
pub fn is_isometric(ch: &Channel) -> bool {
    // N is isometric iff its Choi matrix has rank 1
    let spec = match eig_hermitian(&ch.choi()) {
        Ok(s) => s,
        Err(_) => return false,
    };
    let lmax = spec.max_eigenvalue();
    spec.eigenvalues
        .iter()
        .filter(|&&l| l > 1e-9 * lmax.max(1e-300))
        .count()
        == 1
}
