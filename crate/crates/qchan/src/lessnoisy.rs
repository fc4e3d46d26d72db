//! Region mapping for flagged amplitude-damping mixtures
//! Psi = p |0><0| (x) A_{gamma1} + (1-p) |1><1| (x) A_{gamma2}:
//! degradability classification, the proven less-noisy threshold p_min,
//! a Holevo-information sampler checking I(X;B) >= I(X;E), and sweep/table
//! builders for the region and conjectured-expansion surfaces.

use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::channels::{Channel, DensityMatrix};
use crate::coefficients::ampdamp_expansion_conjecture;
use crate::divergences::vn_entropy;
use crate::error::{QchanError, Result};
use crate::linalg::CMat;

/// One grid record of the region sweep.
#[derive(Debug, Clone, Serialize)]
pub struct RegionSample {
    pub gamma1: f64,
    pub gamma2: f64,
    pub p: f64,
    pub degradable: bool,
    pub antidegradable: bool,
    pub p_min: Option<f64>,
    pub proven_less_noisy: bool,
    /// Minimum sampled I(X;B) - I(X;E); NaN when sampling was disabled.
    pub holevo_margin_min: f64,
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&v) {
        return Err(QchanError::BadParam(format!("{name} = {v} outside [0,1]")));
    }
    Ok(())
}

/// Degradability / anti-degradability of the flagged mixture, by the
/// closed-form three-case conditions in (p, gamma1, gamma2).
pub fn classify_degradability(p: f64, g1: f64, g2: f64) -> Result<(bool, bool)> {
    check_unit("p", p)?;
    check_unit("gamma1", g1)?;
    check_unit("gamma2", g2)?;
    let sum = g1 + g2;
    let tol = 1e-12;
    let (deg, anti) = if (p - 0.5).abs() <= tol {
        (sum <= 1.0 + tol, sum >= 1.0 - tol)
    } else if p > 0.5 {
        (
            sum <= 1.0 + tol && g1 <= 0.5 + tol,
            sum >= 1.0 - tol && g1 >= 0.5 - tol,
        )
    } else {
        (
            sum <= 1.0 + tol && g2 <= 0.5 + tol,
            sum >= 1.0 - tol && g2 >= 0.5 - tol,
        )
    };
    Ok((deg, anti))
}

/// Lower threshold on the flag probability above which the flagged mixture
/// is provably less noisy, on the region gamma1 + gamma2 > 1, gamma1 < 1/2:
/// with gt1 = (1-2 gamma1)/(1-gamma1), eta_ub = sqrt(1-gt1) and
/// etac_lb = (1-gamma1)(1-gamma2)/(gamma1 gamma2),
/// p_min = 1/(1 + (1-eta_ub) etac_lb).
/// The expansion constant comes from the conjectured closed form, so the
/// threshold is conditional on that conjecture.
pub fn p_min(g1: f64, g2: f64) -> Result<f64> {
    check_unit("gamma1", g1)?;
    check_unit("gamma2", g2)?;
    if !(g1 + g2 > 1.0 && g1 < 0.5) {
        return Err(QchanError::BadParam(format!(
            "p_min needs gamma1 + gamma2 > 1 and gamma1 < 1/2, got ({g1}, {g2})"
        )));
    }
    let gt1 = (1.0 - 2.0 * g1) / (1.0 - g1);
    let eta_ub = (1.0 - gt1).sqrt();
    let etac_lb = (1.0 - g1) * (1.0 - g2) / (g1 * g2);
    Ok(1.0 / (1.0 + (1.0 - eta_ub) * etac_lb))
}

/// Mirrored threshold for the symmetric region gamma1 + gamma2 > 1,
/// gamma2 < 1/2: the mixture is provably "more noisy than its environment"
/// for p <= x/(1+x) with x built from the swapped parameters.
pub fn p_max(g1: f64, g2: f64) -> Result<f64> {
    check_unit("gamma1", g1)?;
    check_unit("gamma2", g2)?;
    if !(g1 + g2 > 1.0 && g2 < 0.5) {
        return Err(QchanError::BadParam(format!(
            "p_max needs gamma1 + gamma2 > 1 and gamma2 < 1/2, got ({g1}, {g2})"
        )));
    }
    let gt2 = (1.0 - 2.0 * g2) / (1.0 - g2);
    let eta_ub = (1.0 - gt2).sqrt();
    let etac_lb = (1.0 - g1) * (1.0 - g2) / (g1 * g2);
    let x = (1.0 - eta_ub) * etac_lb;
    Ok(x / (1.0 + x))
}

/// Holevo mutual information I(X;out) of an ensemble through a channel:
/// S(sum_x w_x N(rho_x)) - sum_x w_x S(N(rho_x)).
fn holevo_information(ch: &Channel, ensemble: &[(f64, DensityMatrix)]) -> Result<f64> {
    let d_out = ch.dim_out();
    let mut avg = CMat::zeros(d_out, d_out);
    let mut cond = 0.0;
    for (w, rho) in ensemble {
        let out = ch.apply(rho)?;
        cond += w * vn_entropy(&out)?;
        avg += out.matrix().scale(*w);
    }
    Ok(vn_entropy(&DensityMatrix::trusted(avg))? - cond)
}

fn check_ensemble(ensemble: &[(f64, DensityMatrix)]) -> Result<()> {
    if ensemble.is_empty() {
        return Err(QchanError::BadEnsemble("empty ensemble".into()));
    }
    let mut sum = 0.0;
    for (w, rho) in ensemble {
        if *w < -1e-12 {
            return Err(QchanError::BadEnsemble(format!("negative weight {w}")));
        }
        if rho.dim() != 2 {
            return Err(QchanError::BadEnsemble("ensemble states must be qubits".into()));
        }
        sum += w;
    }
    if (sum - 1.0).abs() > 1e-9 {
        return Err(QchanError::BadEnsemble(format!("weights sum to {sum}")));
    }
    Ok(())
}

/// I(X;B) - I(X;E) for the flagged mixture Psi_{p,gamma1,gamma2} on a
/// classical-quantum ensemble, computed on the full flagged output and its
/// complementary. Verified against the flag-additivity decomposition
/// p (I(X;B1) - I(X;E1)) + (1-p) (I(X;B2) - I(X;E2)).
pub fn holevo_margin(
    p: f64,
    g1: f64,
    g2: f64,
    ensemble: &[(f64, DensityMatrix)],
) -> Result<f64> {
    check_ensemble(ensemble)?;
    let a1 = Channel::amplitude_damping(g1)?;
    let a2 = Channel::amplitude_damping(g2)?;
    let psi = Channel::flagged_mixture(p, &a1, &a2)?;
    let psi_c = psi.complementary();
    let direct = holevo_information(&psi, ensemble)? - holevo_information(&psi_c, ensemble)?;
    // flag-additivity cross-check
    let mut decomposed = 0.0;
    for (w, ch) in [(p, &a1), (1.0 - p, &a2)] {
        if w > 0.0 {
            decomposed += w
                * (holevo_information(ch, ensemble)?
                    - holevo_information(&ch.complementary(), ensemble)?);
        }
    }
    if (direct - decomposed).abs() > 1e-8 {
        return Err(QchanError::AssumptionFailed(format!(
            "flag additivity violated: direct {direct:.3e} vs decomposed {decomposed:.3e}"
        )));
    }
    Ok(direct)
}

/// Random classical-quantum ensemble of 2..=4 states: Haar-random pure and
/// random mixed states with exponential-normalized weights.
pub fn random_ensemble(rng: &mut ChaCha8Rng) -> Vec<(f64, DensityMatrix)> {
    let size = rng.gen_range(2..=4usize);
    let mut weights: Vec<f64> = (0..size).map(|_| -rng.gen::<f64>().max(1e-12).ln()).collect();
    let s: f64 = weights.iter().sum();
    for w in weights.iter_mut() {
        *w /= s;
    }
    let mut out = Vec::with_capacity(size);
    for w in weights {
        let state = if rng.gen_bool(0.5) {
            let v = crate::linalg::CVec::from_fn(2, |_, _| {
                num_complex::Complex64::new(normal(rng), normal(rng))
            });
            DensityMatrix::pure(&v).unwrap()
        } else {
            // mixed via a random purification
            let m = CMat::from_fn(2, 2, |_, _| num_complex::Complex64::new(normal(rng), normal(rng)));
            let rho = &m * m.adjoint();
            let tr = rho.trace().re;
            DensityMatrix::trusted(rho.scale(1.0 / tr))
        };
        out.push((w, state));
    }
    out
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    let u1: f64 = rng.gen_range(f64::MIN_POSITIVE..1.0);
    let u2: f64 = rng.gen();
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Minimum Holevo margin over `n` random ensembles at a region point.
pub fn sampled_margin_min(p: f64, g1: f64, g2: f64, n: usize, seed: u64) -> Result<f64> {
    if n == 0 {
        return Ok(f64::NAN);
    }
    let margins: Vec<Result<f64>> = crate::par::map_indexed(n, |i| {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(i as u64);
        let ens = random_ensemble(&mut rng);
        holevo_margin(p, g1, g2, &ens)
    });
    let mut min = f64::INFINITY;
    for m in margins {
        min = min.min(m?);
    }
    Ok(min)
}

/// Sweep the (gamma1, gamma2, p) grid; gammas run over interior points
/// (i+1)/(grid+1). Output order is fixed by (gamma1 index, gamma2 index,
/// p index) regardless of execution order. `ensembles_per_point` = 0 skips
/// Holevo sampling (margin reported as NaN).
pub fn sweep_region(
    grid: usize,
    p_list: &[f64],
    ensembles_per_point: usize,
    seed: u64,
) -> Result<Vec<RegionSample>> {
    if grid < 2 {
        return Err(QchanError::BadParam("grid must be >= 2".into()));
    }
    let cells: Vec<(usize, usize, usize)> = (0..grid)
        .flat_map(|i| (0..grid).flat_map(move |j| (0..p_list.len()).map(move |k| (i, j, k))))
        .collect();
    let samples: Vec<Result<RegionSample>> = crate::par::map_indexed(cells.len(), |idx| {
        let (i, j, k) = cells[idx];
        let g1 = (i + 1) as f64 / (grid + 1) as f64;
        let g2 = (j + 1) as f64 / (grid + 1) as f64;
        let p = p_list[k];
        let (deg, anti) = classify_degradability(p, g1, g2)?;
        let pm = p_min(g1, g2).ok();
        let proven = deg || pm.map(|t| p >= t - 1e-12).unwrap_or(false);
        let margin = sampled_margin_min(
            p,
            g1,
            g2,
            ensembles_per_point,
            seed ^ (idx as u64).wrapping_mul(0x9e3779b97f4a7c15),
        )?;
        Ok(RegionSample {
            gamma1: g1,
            gamma2: g2,
            p,
            degradable: deg,
            antidegradable: anti,
            p_min: pm,
            proven_less_noisy: proven,
            holevo_margin_min: margin,
        })
    });
    samples.into_iter().collect()
}

/// Conjectured relative-expansion surface over a (gamma1, gamma2) grid.
pub fn relative_expansion_surface(grid: usize) -> Result<Vec<(f64, f64, f64)>> {
    if grid < 2 {
        return Err(QchanError::BadParam("grid must be >= 2".into()));
    }
    let mut out = Vec::with_capacity(grid * grid);
    for i in 0..grid {
        for j in 0..grid {
            let g1 = (i + 1) as f64 / (grid + 1) as f64;
            let g2 = (j + 1) as f64 / (grid + 1) as f64;
            out.push((g1, g2, ampdamp_expansion_conjecture(g1, g2)?.lo));
        }
    }
    Ok(out)
}

/// Format a float with 12 significant digits.
pub fn fmt12(x: f64) -> String {
    if x.is_nan() {
        "NaN".into()
    } else {
        format!("{x:.11e}")
    }
}

pub const REGION_CSV_HEADER: &str =
    "gamma1,gamma2,p,degradable,antidegradable,p_min,proven_less_noisy,holevo_margin_min";

/// Region records as CSV (header + rows, 12 significant digits).
pub fn region_to_csv(samples: &[RegionSample]) -> String {
    let mut s = String::from(REGION_CSV_HEADER);
    s.push('\n');
    for r in samples {
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            fmt12(r.gamma1),
            fmt12(r.gamma2),
            fmt12(r.p),
            r.degradable,
            r.antidegradable,
            r.p_min.map(fmt12).unwrap_or_else(|| "NaN".into()),
            r.proven_less_noisy,
            fmt12(r.holevo_margin_min),
        ));
    }
    s
}

/// Parse region CSV produced by [`region_to_csv`]; lines starting with `#`
/// (e.g. a manifest reference) are skipped.
pub fn region_from_csv(text: &str) -> Result<Vec<RegionSample>> {
    let mut out = Vec::new();
    let mut saw_header = false;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header {
            if line != REGION_CSV_HEADER {
                return Err(QchanError::Parse(format!("unexpected CSV header `{line}`")));
            }
            saw_header = true;
            continue;
        }
        let f: Vec<&str> = line.split(',').collect();
        if f.len() != 8 {
            return Err(QchanError::Parse(format!("bad CSV row `{line}`")));
        }
        let num = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|e| QchanError::Parse(format!("bad float `{s}`: {e}")))
        };
        let flag = |s: &str| -> Result<bool> {
            s.parse()
                .map_err(|e| QchanError::Parse(format!("bad bool `{s}`: {e}")))
        };
        let pm = num(f[5])?;
        out.push(RegionSample {
            gamma1: num(f[0])?,
            gamma2: num(f[1])?,
            p: num(f[2])?,
            degradable: flag(f[3])?,
            antidegradable: flag(f[4])?,
            p_min: if pm.is_nan() { None } else { Some(pm) },
            proven_less_noisy: flag(f[6])?,
            holevo_margin_min: num(f[7])?,
        });
    }
    if !saw_header {
        return Err(QchanError::Parse("missing CSV header".into()));
    }
    Ok(out)
}
