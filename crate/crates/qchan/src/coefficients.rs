//! Closed-form coefficient formulas and rigorous bounds: depolarizing
//! (bounds and the qubit exact forms), generalized dephasing via the CP
//! order, amplitude damping (trace-norm value, entropy sandwich, conjectured
//! relative forms), and the general qubit condition-constant bound.

use serde::Serialize;

use crate::channels::{AffineRep, Channel, DensityMatrix, DephasingSpec};
use crate::divergences::{aux_f, rel_entropy, SupportPolicy};
use crate::error::{QchanError, Result};
use crate::linalg::{eig_hermitian, frobenius_norm, is_psd, CMat, PSD_TOL};

/// How a coefficient value was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum CoefficientKind {
    ExactClosedForm,
    BoundPair,
    ConjecturedClosedForm,
    Numerical,
}

/// A coefficient value or interval, tagged with how it was produced.
#[derive(Debug, Clone, Serialize)]
pub struct CoefficientEstimate {
    pub lo: f64,
    pub hi: f64,
    pub kind: CoefficientKind,
    /// Human-readable label of the producing formula or method.
    pub source: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub meta: Option<crate::estimator::OptimizerRun>,
}

impl CoefficientEstimate {
    pub fn exact(v: f64, source: &str) -> Self {
        Self {
            lo: v,
            hi: v,
            kind: CoefficientKind::ExactClosedForm,
            source: source.into(),
            meta: None,
        }
    }

    pub fn bounds(lo: f64, hi: f64, source: &str) -> Self {
        Self {
            lo,
            hi,
            kind: CoefficientKind::BoundPair,
            source: source.into(),
            meta: None,
        }
    }

    pub fn conjectured(v: f64, source: &str) -> Self {
        Self {
            lo: v,
            hi: v,
            kind: CoefficientKind::ConjecturedClosedForm,
            source: source.into(),
            meta: None,
        }
    }

    /// Representative scalar (midpoint for intervals).
    pub fn value(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }
}

fn check_depol_params(p1: f64, p2: f64) -> Result<()> {
    if !(0.0 < p2 && p2 <= p1 && p1 < 1.0) {
        return Err(QchanError::BadParam(format!(
            "require 0 < p2 <= p1 < 1, got p1 = {p1}, p2 = {p2}"
        )));
    }
    Ok(())
}

/// Two-sided bounds on the relative contraction coefficient of a pair of
/// depolarizing channels D_{p1} vs D_{p2} in dimension d:
/// lo = ((1-p1)/(1-p2))^2 p2/p1,
/// hi = ((1-p1)/(1-p2))^2 (1 - ((d-1)/d) p2) / (1 - ((d-1)/d) p1).
pub fn depol_relative_bounds(d: usize, p1: f64, p2: f64) -> Result<CoefficientEstimate> {
    check_depol_params(p1, p2)?;
    if d < 2 {
        return Err(QchanError::BadParam("depolarizing needs d >= 2".into()));
    }
    let r = ((1.0 - p1) / (1.0 - p2)).powi(2);
    let lo = r * p2 / p1;
    let f = (d - 1) as f64 / d as f64;
    let hi = r * (1.0 - f * p2) / (1.0 - f * p1);
    Ok(CoefficientEstimate::bounds(lo, hi, "depolarizing two-sided bound"))
}

/// Exact relative contraction and expansion coefficients for a pair of
/// qubit depolarizing channels:
/// eta = ((1-p1)/(1-p2))^2,
/// eta_check = ((1-p1)/(1-p2))^2 p2(2-p2)/(p1(2-p1)).
pub fn depol_qubit_exact(p1: f64, p2: f64) -> Result<(CoefficientEstimate, CoefficientEstimate)> {
    check_depol_params(p1, p2)?;
    let r = ((1.0 - p1) / (1.0 - p2)).powi(2);
    let eta = CoefficientEstimate::exact(r, "qubit depolarizing contraction");
    let check = CoefficientEstimate::exact(
        r * (p2 * (2.0 - p2)) / (p1 * (2.0 - p1)),
        "qubit depolarizing expansion",
    );
    Ok((eta, check))
}

/// Two-sided bound on D(M(rho)||M(sigma)) for a strictly positive channel M
/// whose outputs satisfy lmin I <= M(tau) <= lmax I:
/// returns [ ||M(rho-sigma)||_2^2 / (2 lmax), ||M(rho-sigma)||_2^2 / lmin ]
/// and verifies the relative entropy lies inside. The extremal output
/// eigenvalues are estimated over a probe grid plus the two arguments.
pub fn strictly_positive_bounds(
    ch: &Channel,
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
) -> Result<(f64, f64)> {
    // empirical lmin / lmax
    let mut lmin = f64::INFINITY;
    let mut lmax: f64 = 0.0;
    let mut spectra = crate::channels::output_spectra_on_grid(ch, 40)?;
    for st in [rho, sigma] {
        let out = ch.apply(st)?;
        spectra.push(eig_hermitian(out.matrix())?.eigenvalues);
    }
    for row in &spectra {
        for &l in row {
            lmin = lmin.min(l);
            lmax = lmax.max(l);
        }
    }
    if lmin < 1e-9 {
        return Err(QchanError::NotStrictlyPositive(lmin));
    }
    let x = ch.apply_op(&(rho.matrix() - sigma.matrix()))?;
    let n2 = frobenius_norm(&x).powi(2);
    let (lo, hi) = (0.5 * n2 / lmax, n2 / lmin);
    let out_rho = ch.apply(rho)?;
    let out_sigma = ch.apply(sigma)?;
    let d = rel_entropy(&out_rho, &out_sigma, SupportPolicy::Error)?;
    if d < lo - 1e-9 || d > hi + 1e-9 {
        return Err(QchanError::AssumptionFailed(format!(
            "relative entropy {d:.6e} escaped the interval [{lo:.6e}, {hi:.6e}]"
        )));
    }
    Ok((lo, hi))
}

/// Lower bound on the relative expansion coefficient of a generalized
/// dephasing pair (Phi_{Gamma'} relative to Phi_Gamma): when
/// (1-eps) Gamma <= Gamma' <= (1+eps) Gamma in the PSD order and the
/// correction matrix G-hat with entries
/// (Gamma'_ij - (1-eps) Gamma_ij)/(eps Gamma'_ij) (0 when Gamma'_ij = 0)
/// is PSD, the coefficient is at least
/// (1-2 eps)(1-eps) / ((1+2 eps)(1+eps)).
pub fn dephasing_cp_expansion_bound(
    gamma: &DephasingSpec,
    gamma_prime: &DephasingSpec,
    eps: f64,
) -> Result<CoefficientEstimate> {
    if !(0.0 < eps && eps < 0.5) {
        return Err(QchanError::AssumptionFailed(format!(
            "eps = {eps} outside (0, 1/2)"
        )));
    }
    let g = gamma.matrix();
    let gp = gamma_prime.matrix();
    if g.nrows() != gp.nrows() {
        return Err(QchanError::DimMismatch("dephasing matrices differ in size".into()));
    }
    if !is_psd(&(gp - g.scale(1.0 - eps)), PSD_TOL) {
        return Err(QchanError::AssumptionFailed(
            "(1-eps) Gamma <= Gamma' fails".into(),
        ));
    }
    if !is_psd(&(g.scale(1.0 + eps) - gp), PSD_TOL) {
        return Err(QchanError::AssumptionFailed(
            "Gamma' <= (1+eps) Gamma fails".into(),
        ));
    }
    let d = g.nrows();
    let ghat = CMat::from_fn(d, d, |i, j| {
        if gp[(i, j)].norm() == 0.0 {
            num_complex::Complex64::new(0.0, 0.0)
        } else {
            (gp[(i, j)] - g[(i, j)].scale(1.0 - eps)) / (gp[(i, j)].scale(eps))
        }
    });
    if !is_psd(&ghat, PSD_TOL) {
        return Err(QchanError::AssumptionFailed(
            "correction matrix G-hat is not PSD".into(),
        ));
    }
    let v = (1.0 - 2.0 * eps) * (1.0 - eps) / ((1.0 + 2.0 * eps) * (1.0 + eps));
    let mut est = CoefficientEstimate::bounds(v, 1.0, "dephasing CP-order expansion bound");
    est.source = "dephasing CP-order expansion bound".into();
    Ok(est)
}

/// Metric-comparison factor (1-2 eps)(1-eps) / (1 + c eps (1-eps)) from the
/// dephasing comparison argument.
pub fn lemma_comparison_dephasing_bound(eps: f64, c: f64) -> f64 {
    (1.0 - 2.0 * eps) * (1.0 - eps) / (1.0 + c * eps * (1.0 - eps))
}

/// General qubit bound from condition constants c1..c6 with
/// c1 >= c2 > 0, c3 >= c4 > 0, c5 >= c6 > 0:
/// eta_{N,M} <= c3/(c2^2 c6), eta-check_{N,M} >= c4/(c1^2 c5).
pub fn qubit_general_bounds(c: [f64; 6]) -> Result<(f64, f64)> {
    let [c1, c2, c3, c4, c5, c6] = c;
    if !(c1 >= c2 && c2 > 0.0 && c3 >= c4 && c4 > 0.0 && c5 >= c6 && c6 > 0.0) {
        return Err(QchanError::BadParam(format!(
            "condition constants must pair-order positive, got {c:?}"
        )));
    }
    Ok((c3 / (c2 * c2 * c6), c4 / (c1 * c1 * c5)))
}

/// Empirical condition constants for a pair of qubit affine maps, scanned
/// over a grid of base points |w| <= 1 and unit directions y:
/// c2 <= |T2 y|/|T1 y| <= c1,
/// c4 <= (1-|w2'|^2)/(1-|w1'|^2) <= c3 with wi' = Ti w + ti,
/// c6 <= f2~/f1~ <= c5 with fi~ = cos^2(theta_i) + sin^2(theta_i) f(|wi'|).
/// Points where a denominator underflows are skipped.
pub fn estimate_qubit_condition_constants(
    aff1: &AffineRep,
    aff2: &AffineRep,
    grid: usize,
) -> Result<[f64; 6]> {
    let mut c = [f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY];
    let dirs = unit_sphere_grid(grid);
    let mut record = |slot: usize, r: f64| {
        // slot pairs: (0,1) -> (c1,c2) etc.; even index tracks max, odd min
        if r > c[slot] {
            c[slot] = r;
        }
        if r < c[slot + 1] {
            c[slot + 1] = r;
        }
    };
    for y in &dirs {
        let n1 = aff1.map_perturbation(y).norm();
        let n2 = aff2.map_perturbation(y).norm();
        if n1 > 1e-12 {
            record(0, n2 / n1);
        }
    }
    for wdir in &dirs {
        for kr in 0..grid {
            let r = kr as f64 / grid as f64; // keep |w| < 1
            let w = wdir.scale(r);
            let w1 = aff1.map_bloch(&w);
            let w2 = aff2.map_bloch(&w);
            let d1 = 1.0 - w1.norm_squared();
            let d2 = 1.0 - w2.norm_squared();
            if d1 > 1e-12 {
                record(2, d2 / d1);
            }
            for y in dirs.iter().take(grid) {
                let y1 = aff1.map_perturbation(y);
                let y2 = aff2.map_perturbation(y);
                let f1t = f_tilde(&w1, &y1)?;
                let f2t = f_tilde(&w2, &y2)?;
                if f1t > 1e-12 {
                    record(4, f2t / f1t);
                }
            }
        }
    }
    Ok(c)
}

fn f_tilde(wp: &nalgebra::Vector3<f64>, yp: &nalgebra::Vector3<f64>) -> Result<f64> {
    let wn = wp.norm();
    let yn = yp.norm();
    let cos2 = if wn < 1e-12 || yn < 1e-12 {
        0.0
    } else {
        let c = wp.dot(yp) / (wn * yn);
        (c * c).min(1.0)
    };
    Ok(cos2 + (1.0 - cos2) * aux_f(wn.min(1.0))?)
}

fn unit_sphere_grid(n: usize) -> Vec<nalgebra::Vector3<f64>> {
    // Fibonacci sphere
    let mut out = Vec::with_capacity(n);
    let golden = std::f64::consts::PI * (3.0 - 5.0f64.sqrt());
    for k in 0..n {
        let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
        let r = (1.0 - z * z).sqrt();
        let phi = golden * k as f64;
        out.push(nalgebra::Vector3::new(r * phi.cos(), r * phi.sin(), z));
    }
    out
}

/// Trace-norm contraction coefficient of amplitude damping:
/// eta_tr = sqrt(1 - gamma).
pub fn ampdamp_trace_contraction(gamma: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&gamma) {
        return Err(QchanError::BadParam(format!("gamma = {gamma} outside [0,1]")));
    }
    Ok((1.0 - gamma).sqrt())
}

/// Entropy-contraction sandwich for amplitude damping:
/// 1 - gamma <= eta <= sqrt(1 - gamma).
pub fn ampdamp_entropy_sandwich(gamma: f64) -> Result<(f64, f64)> {
    let tr = ampdamp_trace_contraction(gamma)?;
    Ok((1.0 - gamma, tr))
}

/// Conjectured closed form for the relative expansion coefficient of an
/// amplitude damping pair: gamma2 (1 - gamma1) / (gamma1 (1 - gamma2)).
pub fn ampdamp_expansion_conjecture(g1: f64, g2: f64) -> Result<CoefficientEstimate> {
    for g in [g1, g2] {
        if !(0.0 < g && g < 1.0) {
            return Err(QchanError::BadParam(format!("gamma = {g} outside (0,1)")));
        }
    }
    let v = g2 * (1.0 - g1) / (g1 * (1.0 - g2));
    Ok(CoefficientEstimate::conjectured(
        v,
        "amplitude damping relative expansion (conjectured)",
    ))
}

/// Conjectured closed form for the relative contraction coefficient of an
/// amplitude damping pair: (1-gamma1)/(1-gamma2) times the maximum over
/// p in (0,1) of
/// ((1 - 2(1-gamma2) p) [ln(1-(1-gamma1)p) - ln((1-gamma1)p)]) /
/// ((1 - 2(1-gamma1) p) [ln(1-(1-gamma2)p) - ln((1-gamma2)p)]),
/// evaluated on a grid that skips 1e-6 neighborhoods of the zeros of the
/// linear factors, with one refinement pass around the maximizer.
pub fn ampdamp_contraction_conjecture(g1: f64, g2: f64, n_grid: usize) -> Result<CoefficientEstimate> {
    for g in [g1, g2] {
        if !(0.0 < g && g < 1.0) {
            return Err(QchanError::BadParam(format!("gamma = {g} outside (0,1)")));
        }
    }
    let (e1, e2) = (1.0 - g1, 1.0 - g2);
    let singular = [0.5 / e1, 0.5 / e2];
    let ratio = |p: f64| -> Option<f64> {
        if p <= 0.0 || p >= 1.0 {
            return None;
        }
        for s in singular {
            if (p - s).abs() < 1e-6 {
                return None;
            }
        }
        let num = (1.0 - 2.0 * e2 * p) * ((1.0 - e1 * p).ln() - (e1 * p).ln());
        let den = (1.0 - 2.0 * e1 * p) * ((1.0 - e2 * p).ln() - (e2 * p).ln());
        if den.abs() < 1e-300 || !num.is_finite() || !den.is_finite() {
            return None;
        }
        Some(num / den)
    };
    let scan = |a: f64, b: f64, n: usize| -> (f64, f64) {
        let mut best = (f64::NEG_INFINITY, 0.5 * (a + b));
        for k in 0..=n {
            let p = a + (b - a) * k as f64 / n as f64;
            if let Some(r) = ratio(p) {
                if r > best.0 {
                    best = (r, p);
                }
            }
        }
        best
    };
    let n = n_grid.max(100);
    let (mut best, mut p_best) = scan(0.0, 1.0, n);
    let h = 2.0 / n as f64;
    let (b2, p2) = scan((p_best - h).max(0.0), (p_best + h).min(1.0), n);
    if b2 > best {
        best = b2;
        p_best = p2;
    }
    let _ = p_best;
    Ok(CoefficientEstimate::conjectured(
        e1 / e2 * best,
        "amplitude damping relative contraction (conjectured)",
    ))
}

/// Admissible interval [eta_tr^2, eta_tr] for the entropy contraction
/// coefficient given the trace-norm one.
pub fn sandwich_check(eta_tr: f64) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&eta_tr) {
        return Err(QchanError::BadParam(format!("eta_tr = {eta_tr} outside [0,1]")));
    }
    Ok((eta_tr * eta_tr, eta_tr))
}
