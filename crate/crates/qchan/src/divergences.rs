//! Entropic quantities on density matrices: relative entropy, von Neumann
//! entropy, trace distance, hockey-stick divergence, and the BKM metric,
//! together with two integral representations of the relative entropy used
//! as independent cross-checks.

use nalgebra::Vector3;

use crate::channels::{Channel, DensityMatrix};
use crate::error::{QchanError, Result};
use crate::linalg::{eig_hermitian, CMat};

/// Relative cutoff below which an eigenvalue counts as zero when deciding
/// support containment.
pub const SUPPORT_CUTOFF: f64 = 1e-12;

/// How to treat support violations in D(rho || sigma).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SupportPolicy {
    /// Return +infinity when supp(rho) is not contained in supp(sigma).
    Infinite,
    /// Return an error instead.
    Error,
}

fn support_projector_weight(rho: &CMat, sigma_spec: &crate::linalg::Spectrum, cutoff: f64) -> f64 {
    // weight of rho on the kernel of sigma
    let mut w = 0.0;
    let max = sigma_spec.max_eigenvalue().max(0.0);
    for (idx, &lam) in sigma_spec.eigenvalues.iter().enumerate() {
        if lam <= cutoff * max.max(1e-300) {
            let v = sigma_spec.eigenvectors.column(idx);
            w += (v.adjoint() * rho * v)[(0, 0)].re;
        }
    }
    w
}

/// Umegaki relative entropy D(rho||sigma) = tr rho (ln rho - ln sigma),
/// natural log.
pub fn rel_entropy(rho: &DensityMatrix, sigma: &DensityMatrix, policy: SupportPolicy) -> Result<f64> {
    if rho.dim() != sigma.dim() {
        return Err(QchanError::DimMismatch("rel_entropy dims".into()));
    }
    let sr = eig_hermitian(rho.matrix())?;
    let ss = eig_hermitian(sigma.matrix())?;
    let kernel_weight = support_projector_weight(rho.matrix(), &ss, SUPPORT_CUTOFF);
    if kernel_weight > 1e-10 {
        return match policy {
            SupportPolicy::Infinite => Ok(f64::INFINITY),
            SupportPolicy::Error => Err(QchanError::SupportViolation(format!(
                "rho has weight {kernel_weight:.3e} outside supp(sigma)"
            ))),
        };
    }
    let cutoff = SUPPORT_CUTOFF * ss.max_eigenvalue().max(1e-300);
    // tr rho ln rho
    let mut d = 0.0;
    for &lam in &sr.eigenvalues {
        if lam > SUPPORT_CUTOFF {
            d += lam * lam.ln();
        }
    }
    // - tr rho ln sigma, in the eigenbasis of sigma
    for (idx, &mu) in ss.eigenvalues.iter().enumerate() {
        if mu > cutoff {
            let v = ss.eigenvectors.column(idx);
            let w = (v.adjoint() * rho.matrix() * v)[(0, 0)].re;
            d -= w * mu.ln();
        }
    }
    Ok(d.max(0.0)) // clamp -1e-16 roundoff on (near-)equal states
}

/// Von Neumann entropy S(rho) = -tr rho ln rho.
pub fn vn_entropy(rho: &DensityMatrix) -> Result<f64> {
    let spec = eig_hermitian(rho.matrix())?;
    let mut s = 0.0;
    for &lam in &spec.eigenvalues {
        if lam > SUPPORT_CUTOFF {
            s -= lam * lam.ln();
        }
    }
    Ok(s.max(0.0))
}

/// Trace distance (1/2) || rho - sigma ||_1.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    let spec = eig_hermitian(&(rho.matrix() - sigma.matrix()))?;
    Ok(0.5 * spec.eigenvalues.iter().map(|l| l.abs()).sum::<f64>())
}

/// Hockey-stick divergence E_s(rho||sigma) = tr (rho - s sigma)_+.
pub fn hockey_stick(rho: &DensityMatrix, sigma: &DensityMatrix, s: f64) -> Result<f64> {
    if s < 0.0 {
        return Err(QchanError::BadParam(format!("hockey-stick s = {s} < 0")));
    }
    let spec = eig_hermitian(&(rho.matrix() - sigma.matrix().scale(s)))?;
    Ok(spec.eigenvalues.iter().map(|l| l.max(0.0)).sum())
}

/// BKM (Kubo-Mori) metric g_rho(X, X) for a traceless Hermitian perturbation
/// X at a full-rank base point rho, via the spectral kernel
/// k(a,b) = (ln a - ln b)/(a - b), k(a,a) = 1/a.
pub fn bkm_metric(rho: &DensityMatrix, x: &CMat) -> Result<f64> {
    crate::linalg::check_hermitian(x)?;
    if x.trace().re.abs() > 1e-9 {
        return Err(QchanError::BadParam("BKM perturbation must be traceless".into()));
    }
    let spec = eig_hermitian(rho.matrix())?;
    if spec.min_eigenvalue() <= SUPPORT_CUTOFF {
        return Err(QchanError::NotStrictlyPositive(spec.min_eigenvalue()));
    }
    let xe = spec.eigenvectors.adjoint() * x * &spec.eigenvectors;
    let d = rho.dim();
    let mut g = 0.0;
    for i in 0..d {
        for j in 0..d {
            let (a, b) = (spec.eigenvalues[i], spec.eigenvalues[j]);
            let k = if (a - b).abs() < 1e-12 * a.max(b) {
                1.0 / a
            } else {
                (a.ln() - b.ln()) / (a - b)
            };
            g += k * xe[(i, j)].norm_sqr();
        }
    }
    Ok(g)
}

/// Qubit BKM metric in Bloch coordinates, closed form. Base point w with
/// |w| < 1 (and |w| = 1 allowed only for tangent y, when the metric is
/// +infinity unless y = 0); theta is the angle between w and y.
pub fn bkm_qubit(w: &Vector3<f64>, y: &Vector3<f64>) -> Result<f64> {
    let wn = w.norm();
    if wn > 1.0 + 1e-12 {
        return Err(QchanError::BadBloch(wn));
    }
    let yn2 = y.norm_squared();
    if yn2 == 0.0 {
        return Ok(0.0);
    }
    if wn >= 1.0 - 1e-15 {
        return Ok(f64::INFINITY);
    }
    if wn < 1e-12 {
        return Ok(4.0 * yn2);
    }
    let cos2t = {
        let c = w.dot(y) / (wn * yn2.sqrt());
        2.0 * c * c - 1.0
    };
    Ok(2.0 * yn2
        * ((1.0 + cos2t) / (1.0 - wn * wn)
            + (1.0 - cos2t) / (2.0 * wn) * ((1.0 + wn) / (1.0 - wn)).ln()))
}

/// f(x) = (1 - x^2)/(2x) ln((1+x)/(1-x)), with f(0) = 1 and f(1) = 0.
pub fn aux_f(x: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(QchanError::Domain(format!("aux_f argument {x} outside [0,1]")));
    }
    if x < 1e-8 {
        // series: 1 - (2/3) x^2 + O(x^4)
        return Ok(1.0 - 2.0 * x * x / 3.0);
    }
    if x >= 1.0 {
        return Ok(0.0);
    }
    Ok((1.0 - x * x) / (2.0 * x) * ((1.0 + x) / (1.0 - x)).ln())
}

/// BKM ratio for a qubit channel at base point w with perturbation y:
/// g_{N(w)}(T y) expressed through the image Bloch data. Returns the metric
/// value at the output, computed from the closed form
/// (4 |y'|^2 / (1 - |w'|^2)) (cos^2(theta') (1 - f(|w'|)) + f(|w'|)).
pub fn bkm_channel_qubit(ch: &Channel, w: &Vector3<f64>, y: &Vector3<f64>) -> Result<f64> {
    let aff = ch.to_affine()?;
    let wp = aff.map_bloch(w);
    let yp = aff.map_perturbation(y);
    let wn = wp.norm();
    let yn2 = yp.norm_squared();
    if yn2 == 0.0 {
        return Ok(0.0);
    }
    if wn >= 1.0 - 1e-15 {
        return Ok(f64::INFINITY);
    }
    let f = aux_f(wn)?;
    let cos2 = if wn < 1e-12 {
        0.0
    } else {
        let c = wp.dot(&yp) / (wn * yn2.sqrt());
        c * c
    };
    Ok(4.0 * yn2 / (1.0 - wn * wn) * (cos2 * (1.0 - f) + f))
}

// ---- integral representations ----

/// Gauss-Legendre nodes and weights on [0,1], by Newton iteration on the
/// Legendre polynomial.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for k in 0..n {
        // initial guess on [-1,1]
        let mut x = (std::f64::consts::PI * (k as f64 + 0.75) / (n as f64 + 0.5)).cos();
        for _ in 0..100 {
            // evaluate P_n and P_n' by recurrence
            let (mut p0, mut p1) = (1.0, x);
            for j in 2..=n {
                let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
                p0 = p1;
                p1 = p2;
            }
            let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let (mut p0, mut p1) = (1.0, x);
        for j in 2..=n {
            let p2 = ((2 * j - 1) as f64 * x * p1 - (j - 1) as f64 * p0) / j as f64;
            p0 = p1;
            p1 = p2;
        }
        let dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // map [-1,1] -> [0,1]
        nodes[n - 1 - k] = 0.5 * (x + 1.0);
        weights[n - 1 - k] = 0.5 * w;
    }
    (nodes, weights)
}

/// Evaluate D(rho||sigma) through the BKM line integral
/// D = int_0^1 int_0^s g_{rho_t}(rho - sigma) dt ds with
/// rho_t = (1-t) sigma + t rho, by tensor Gauss-Legendre quadrature.
/// Both states must be full rank.
pub fn check_integral_representation_l2(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    n: usize,
) -> Result<f64> {
    for st in [rho, sigma] {
        let spec = eig_hermitian(st.matrix())?;
        if spec.min_eigenvalue() <= SUPPORT_CUTOFF {
            return Err(QchanError::NotStrictlyPositive(spec.min_eigenvalue()));
        }
    }
    let x = rho.matrix() - sigma.matrix();
    let (nodes, weights) = gauss_legendre_unit(n);
    let mut total = 0.0;
    for (&s, &ws) in nodes.iter().zip(&weights) {
        // inner integral over t in [0, s]
        let mut inner = 0.0;
        for (&u, &wu) in nodes.iter().zip(&weights) {
            let t = s * u;
            let rho_t = sigma.mix(rho, t);
            inner += wu * s * bkm_metric(&rho_t, &x)?;
        }
        total += ws * inner;
    }
    Ok(total)
}

fn lambda_min_max(st: &DensityMatrix) -> Result<(f64, f64)> {
    let spec = eig_hermitian(st.matrix())?;
    Ok((spec.min_eigenvalue(), spec.max_eigenvalue()))
}

/// Evaluate D(rho||sigma) through the hockey-stick integral
/// D = int_1^inf ( E_s(rho||sigma)/s + E_s(sigma||rho)/s^2 ) ds,
/// truncated at s_max = max(lmax(rho)/lmin(sigma), lmax(sigma)/lmin(rho))
/// beyond which both integrands vanish; adaptive Simpson inside.
pub fn check_integral_representation_l1(
    rho: &DensityMatrix,
    sigma: &DensityMatrix,
    tol: f64,
) -> Result<f64> {
    let (rmin, rmax) = lambda_min_max(rho)?;
    let (smin, smax_l) = lambda_min_max(sigma)?;
    if rmin <= SUPPORT_CUTOFF || smin <= SUPPORT_CUTOFF {
        return Err(QchanError::NotStrictlyPositive(rmin.min(smin)));
    }
    let s_max = (rmax / smin).max(smax_l / rmin);
    if s_max <= 1.0 {
        return Ok(0.0);
    }
    let f = |s: f64| -> Result<f64> {
        Ok(hockey_stick(rho, sigma, s)? / s + hockey_stick(sigma, rho, s)? / (s * s))
    };
    adaptive_simpson(&f, 1.0, s_max, tol, 24)
}

fn adaptive_simpson<F: Fn(f64) -> Result<f64>>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (fa, fm, fb) = (f(a)?, f(m)?, f(b)?);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_rec(f, a, b, fa, fm, fb, whole, tol, depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_rec<F: Fn(f64) -> Result<f64>>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: usize,
) -> Result<f64> {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm)?, f(rm)?);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
        return Ok(left + right + (left + right - whole) / 15.0);
    }
    Ok(simpson_rec(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)?
        + simpson_rec(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)?)
}

/// Qubit relative entropy directly from Bloch vectors (both full rank).
pub fn rel_entropy_bloch(w1: &Vector3<f64>, w2: &Vector3<f64>) -> Result<f64> {
    let rho = DensityMatrix::from_bloch(w1)?;
    let sigma = DensityMatrix::from_bloch(w2)?;
    rel_entropy(&rho, &sigma, SupportPolicy::Infinite)
}
