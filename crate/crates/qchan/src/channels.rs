//! CPTP maps as Kraus lists, standard channel families, and the derived
//! representations used throughout: Choi matrix, complementary channel, and
//! the qubit affine (T, t) form.

use nalgebra::{Matrix3, Vector3};
use num_complex::Complex64;

use crate::error::{QchanError, Result};
use crate::linalg::{
    self, eig_hermitian, identity, is_psd, max_abs, partial_trace, CMat, CVec, Keep, PSD_TOL,
};

const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Pauli matrices (sigma_x, sigma_y, sigma_z).
pub fn paulis() -> [CMat; 3] {
    let i = Complex64::new(0.0, 1.0);
    let mut sx = CMat::zeros(2, 2);
    sx[(0, 1)] = ONE;
    sx[(1, 0)] = ONE;
    let mut sy = CMat::zeros(2, 2);
    sy[(0, 1)] = i;
    sy[(1, 0)] = -i;
    let mut sz = CMat::zeros(2, 2);
    sz[(0, 0)] = ONE;
    sz[(1, 1)] = -ONE;
    [sx, sy, sz]
}

/// Bloch-vector dot Pauli: w . sigma.
pub fn pauli_dot(w: &Vector3<f64>) -> CMat {
    let [sx, sy, sz] = paulis();
    sx.scale(w[0]) + sy.scale(w[1]) + sz.scale(w[2])
}

/// PSD trace-one Hermitian matrix.
#[derive(Debug, Clone)]
pub struct DensityMatrix {
    mat: CMat,
}

impl DensityMatrix {
    pub fn new(mat: CMat) -> Result<Self> {
        linalg::check_hermitian(&mat)?;
        let tr = mat.trace();
        if (tr.re - 1.0).abs() > 1e-10 || tr.im.abs() > 1e-10 {
            return Err(QchanError::BadParam(format!("trace {} != 1", tr)));
        }
        let spec = eig_hermitian(&mat)?;
        if spec.min_eigenvalue() < -1e-10 {
            return Err(QchanError::NotPsd(spec.min_eigenvalue()));
        }
        Ok(Self { mat })
    }

    /// Wrap without validation; for outputs of operations that preserve
    /// the density-matrix invariants by construction.
    pub(crate) fn trusted(mat: CMat) -> Self {
        debug_assert!((mat.trace().re - 1.0).abs() < 1e-8);
        Self { mat }
    }

    pub fn pure(v: &CVec) -> Result<Self> {
        let n = v.norm();
        if n < 1e-300 {
            return Err(QchanError::BadParam("zero state vector".into()));
        }
        let v = v.unscale(n);
        Ok(Self::trusted(&v * v.adjoint()))
    }

    pub fn basis_state(d: usize, k: usize) -> Self {
        let mut m = CMat::zeros(d, d);
        m[(k, k)] = ONE;
        Self { mat: m }
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            mat: identity(d).scale(1.0 / d as f64),
        }
    }

    pub fn diagonal(probs: &[f64]) -> Result<Self> {
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-10 || probs.iter().any(|&p| p < -1e-12) {
            return Err(QchanError::BadParam("probabilities must be a distribution".into()));
        }
        let d = probs.len();
        let mut m = CMat::zeros(d, d);
        for (k, &p) in probs.iter().enumerate() {
            m[(k, k)] = Complex64::new(p, 0.0);
        }
        Ok(Self { mat: m })
    }

    /// Qubit state 1/2 (I + w . sigma); requires |w| <= 1.
    pub fn from_bloch(w: &Vector3<f64>) -> Result<Self> {
        if w.norm() > 1.0 + 1e-9 {
            return Err(QchanError::BadBloch(w.norm()));
        }
        Ok(Self::trusted((identity(2) + pauli_dot(w)).scale(0.5)))
    }

    /// Bloch vector of a qubit state.
    pub fn bloch(&self) -> Result<Vector3<f64>> {
        if self.dim() != 2 {
            return Err(QchanError::NotQubit);
        }
        let [sx, sy, sz] = paulis();
        Ok(Vector3::new(
            (&sx * &self.mat).trace().re,
            (&sy * &self.mat).trace().re,
            (&sz * &self.mat).trace().re,
        ))
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    /// Convex mixture (1-t) self + t other.
    pub fn mix(&self, other: &Self, t: f64) -> Self {
        Self::trusted(self.mat.scale(1.0 - t) + other.mat.scale(t))
    }
}

/// Qubit channel in the affine Bloch-ball picture: w -> T w + t.
#[derive(Debug, Clone)]
pub struct AffineRep {
    pub t_matrix: Matrix3<f64>,
    pub t_vec: Vector3<f64>,
}

impl AffineRep {
    pub fn identity() -> Self {
        Self {
            t_matrix: Matrix3::identity(),
            t_vec: Vector3::zeros(),
        }
    }

    pub fn map_bloch(&self, w: &Vector3<f64>) -> Vector3<f64> {
        self.t_matrix * w + self.t_vec
    }

    pub fn map_perturbation(&self, y: &Vector3<f64>) -> Vector3<f64> {
        self.t_matrix * y
    }

    /// Positivity necessary condition: image of the unit ball stays inside.
    pub fn check_ball_contraction(&self, grid: usize) -> bool {
        for iu in 0..grid {
            for iv in 0..grid {
                for ir in 0..grid {
                    let u = 2.0 * std::f64::consts::PI * iu as f64 / grid as f64;
                    let v = (2.0 * iv as f64 / (grid - 1).max(1) as f64 - 1.0).acos();
                    let r = ir as f64 / (grid - 1).max(1) as f64;
                    let w = Vector3::new(
                        r * v.sin() * u.cos(),
                        r * v.sin() * u.sin(),
                        r * v.cos(),
                    );
                    if self.map_bloch(&w).norm() > 1.0 + 1e-9 {
                        return false;
                    }
                }
            }
        }
        true
    }
}

/// Dephasing matrix: unit diagonal, PSD, entries in [0,1].
#[derive(Debug, Clone)]
pub struct DephasingSpec {
    gamma: CMat,
}

impl DephasingSpec {
    pub fn new(gamma: CMat) -> Result<Self> {
        linalg::check_hermitian(&gamma)?;
        let d = gamma.nrows();
        for i in 0..d {
            if (gamma[(i, i)] - ONE).norm() > 1e-12 {
                return Err(QchanError::BadParam("dephasing matrix must have unit diagonal".into()));
            }
            for j in 0..d {
                let g = gamma[(i, j)];
                if g.im.abs() > 1e-12 || !(-1e-12..=1.0 + 1e-12).contains(&g.re) {
                    return Err(QchanError::BadParam(format!(
                        "dephasing entry ({i},{j}) = {g} outside [0,1]"
                    )));
                }
            }
        }
        if !is_psd(&gamma, PSD_TOL) {
            return Err(QchanError::NotPsd(
                eig_hermitian(&gamma)?.min_eigenvalue(),
            ));
        }
        Ok(Self { gamma })
    }

    pub fn from_real(entries: &[Vec<f64>]) -> Result<Self> {
        let d = entries.len();
        let gamma = CMat::from_fn(d, d, |i, j| Complex64::new(entries[i][j], 0.0));
        Self::new(gamma)
    }

    pub fn matrix(&self) -> &CMat {
        &self.gamma
    }

    pub fn dim(&self) -> usize {
        self.gamma.nrows()
    }
}

/// CPTP map stored as a Kraus list.
#[derive(Debug, Clone)]
pub struct Channel {
    dim_in: usize,
    dim_out: usize,
    kraus: Vec<CMat>,
}

impl Channel {
    /// Build from Kraus operators, verifying trace preservation and a PSD Choi.
    pub fn from_kraus(kraus: Vec<CMat>) -> Result<Self> {
        if kraus.is_empty() {
            return Err(QchanError::BadParam("empty Kraus list".into()));
        }
        let dim_out = kraus[0].nrows();
        let dim_in = kraus[0].ncols();
        for k in &kraus {
            if k.nrows() != dim_out || k.ncols() != dim_in {
                return Err(QchanError::DimMismatch("inconsistent Kraus shapes".into()));
            }
        }
        let ch = Self {
            dim_in,
            dim_out,
            kraus,
        };
        let mut sum = CMat::zeros(dim_in, dim_in);
        for k in &ch.kraus {
            sum += k.adjoint() * k;
        }
        let dev = max_abs(&(sum - identity(dim_in)));
        if dev > 1e-10 {
            return Err(QchanError::BadParam(format!(
                "Kraus operators are not trace-preserving (deviation {dev:.3e})"
            )));
        }
        Ok(ch)
    }

    /// Recover a Kraus representation from an (unnormalized) Choi matrix.
    pub fn from_choi(choi: &CMat, dim_in: usize, dim_out: usize) -> Result<Self> {
        if choi.nrows() != dim_in * dim_out {
            return Err(QchanError::DimMismatch("Choi dimension mismatch".into()));
        }
        let spec = eig_hermitian(choi)?;
        let scale = 1.0_f64.max(max_abs(choi));
        if spec.min_eigenvalue() < -PSD_TOL * scale {
            return Err(QchanError::NotPsd(spec.min_eigenvalue()));
        }
        let mut kraus = Vec::new();
        for (idx, &lam) in spec.eigenvalues.iter().enumerate() {
            if lam <= PSD_TOL * scale {
                continue;
            }
            let v = spec.eigenvectors.column(idx);
            // Choi index convention: row = a * dim_out + b.
            let mut k = CMat::zeros(dim_out, dim_in);
            for a in 0..dim_in {
                for b in 0..dim_out {
                    k[(b, a)] = v[a * dim_out + b] * lam.sqrt();
                }
            }
            kraus.push(k);
        }
        Self::from_kraus(kraus)
    }

    pub fn dim_in(&self) -> usize {
        self.dim_in
    }

    pub fn dim_out(&self) -> usize {
        self.dim_out
    }

    pub fn kraus(&self) -> &[CMat] {
        &self.kraus
    }

    pub fn is_identity_dims(&self) -> bool {
        self.dim_in == self.dim_out
    }

    /// N(X) = sum_i A_i X A_i^dagger on a raw operator.
    pub fn apply_op(&self, x: &CMat) -> Result<CMat> {
        if x.nrows() != self.dim_in || x.ncols() != self.dim_in {
            return Err(QchanError::DimMismatch(format!(
                "channel input dim {} vs operator dim {}",
                self.dim_in,
                x.nrows()
            )));
        }
        let mut out = CMat::zeros(self.dim_out, self.dim_out);
        for k in &self.kraus {
            out += k * x * k.adjoint();
        }
        Ok(out)
    }

    pub fn apply(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        Ok(DensityMatrix::trusted(self.apply_op(rho.matrix())?))
    }

    /// Unnormalized Choi matrix sum_ij |i><j| (x) N(|i><j|).
    pub fn choi(&self) -> CMat {
        let d_in = self.dim_in;
        let d_out = self.dim_out;
        let mut c = CMat::zeros(d_in * d_out, d_in * d_out);
        for k in &self.kraus {
            // vec(K) with index a*d_out + b for K[b,a]
            let mut v = CVec::zeros(d_in * d_out);
            for a in 0..d_in {
                for b in 0..d_out {
                    v[a * d_out + b] = k[(b, a)];
                }
            }
            c += &v * v.adjoint();
        }
        c
    }

    /// Complementary channel with environment dimension = Kraus count:
    /// (N^c(rho))_{ij} = tr(A_i rho A_j^dagger).
    pub fn complementary(&self) -> Channel {
        let m = self.kraus.len();
        let d_in = self.dim_in;
        // Isometry V: H_A -> H_B (x) H_E, V|a> = sum_i A_i|a> (x) |i>;
        // tracing out B gives Kraus operators of N^c in terms of rows of the A_i.
        let mut kraus_c = Vec::with_capacity(self.dim_out);
        for b in 0..self.dim_out {
            let mut k = CMat::zeros(m, d_in);
            for (i, a) in self.kraus.iter().enumerate() {
                for col in 0..d_in {
                    k[(i, col)] = a[(b, col)];
                }
            }
            kraus_c.push(k);
        }
        Channel {
            dim_in: d_in,
            dim_out: m,
            kraus: kraus_c,
        }
    }

    /// Scaled CP order test: c * C_A <= C_B in the PSD order.
    pub fn cp_leq(a: &Channel, b: &Channel, c: f64) -> Result<bool> {
        if a.dim_in != b.dim_in || a.dim_out != b.dim_out {
            return Err(QchanError::DimMismatch("cp_leq requires matching dims".into()));
        }
        let diff = b.choi() - a.choi().scale(c);
        Ok(is_psd(&diff, PSD_TOL))
    }

    /// Qubit affine representation: T[i][j] = tr(sigma_i N(sigma_j))/2,
    /// t[i] = tr(sigma_i N(I))/2.
    pub fn to_affine(&self) -> Result<AffineRep> {
        if self.dim_in != 2 || self.dim_out != 2 {
            return Err(QchanError::NotQubit);
        }
        let sigmas = paulis();
        let mut t_matrix = Matrix3::zeros();
        let mut t_vec = Vector3::zeros();
        let n_id = self.apply_op(&identity(2))?;
        for (i, si) in sigmas.iter().enumerate() {
            t_vec[i] = 0.5 * (si * &n_id).trace().re;
            for (j, sj) in sigmas.iter().enumerate() {
                let nsj = self.apply_op(sj)?;
                t_matrix[(i, j)] = 0.5 * (si * nsj).trace().re;
            }
        }
        Ok(AffineRep { t_matrix, t_vec })
    }

    // ---- standard families ----

    pub fn identity_channel(d: usize) -> Channel {
        Channel {
            dim_in: d,
            dim_out: d,
            kraus: vec![identity(d)],
        }
    }

    pub fn unitary(u: CMat) -> Result<Channel> {
        let d = u.nrows();
        if max_abs(&(u.adjoint() * &u - identity(d))) > 1e-10 {
            return Err(QchanError::BadParam("matrix is not unitary".into()));
        }
        Ok(Channel {
            dim_in: d,
            dim_out: d,
            kraus: vec![u],
        })
    }

    /// D_p(rho) = (1-p) rho + (p/d) tr(rho) I_d.
    pub fn depolarizing(d: usize, p: f64) -> Result<Channel> {
        if !(0.0..=1.0).contains(&p) {
            return Err(QchanError::BadParam(format!("depolarizing p = {p} outside [0,1]")));
        }
        if d < 2 {
            return Err(QchanError::BadParam("depolarizing needs d >= 2".into()));
        }
        if p == 0.0 {
            return Ok(Self::identity_channel(d));
        }
        // Choi = (1-p) sum_ij |i><j| (x) |i><j| + (p/d) I_{d^2}
        let mut choi = identity(d * d).scale(p / d as f64);
        for i in 0..d {
            for j in 0..d {
                choi[(i * d + i, j * d + j)] += Complex64::new(1.0 - p, 0.0);
            }
        }
        Self::from_choi(&choi, d, d)
    }

    /// Generalized dephasing: entrywise product with Gamma.
    pub fn dephasing(spec: &DephasingSpec) -> Result<Channel> {
        let d = spec.dim();
        let mut choi = CMat::zeros(d * d, d * d);
        for i in 0..d {
            for j in 0..d {
                choi[(i * d + i, j * d + j)] = spec.matrix()[(i, j)];
            }
        }
        Self::from_choi(&choi, d, d)
    }

    /// Qubit dephasing Phi_p with Gamma = [[1, 1-p], [1-p, 1]], p in [0,2].
    pub fn qubit_dephasing(p: f64) -> Result<Channel> {
        if !(0.0..=2.0).contains(&p) {
            return Err(QchanError::BadParam(format!("qubit dephasing p = {p} outside [0,2]")));
        }
        let [_, _, sz] = paulis();
        let kraus = vec![
            identity(2).scale((1.0 - p / 2.0).sqrt()),
            sz.scale((p / 2.0).sqrt()),
        ];
        Channel::from_kraus(kraus)
    }

    /// Amplitude damping A_gamma.
    pub fn amplitude_damping(gamma: f64) -> Result<Channel> {
        if !(0.0..=1.0).contains(&gamma) {
            return Err(QchanError::BadParam(format!("amplitude damping gamma = {gamma} outside [0,1]")));
        }
        let mut a0 = CMat::zeros(2, 2);
        a0[(0, 0)] = ONE;
        a0[(1, 1)] = Complex64::new((1.0 - gamma).sqrt(), 0.0);
        let mut a1 = CMat::zeros(2, 2);
        a1[(0, 1)] = Complex64::new(gamma.sqrt(), 0.0);
        if gamma == 0.0 {
            return Ok(Self::identity_channel(2));
        }
        Channel::from_kraus(vec![a0, a1])
    }

    /// Flagged mixture p |0><0| (x) A + (1-p) |1><1| (x) B on a doubled
    /// output space; the flag basis is the computational basis.
    pub fn flagged_mixture(p: f64, a: &Channel, b: &Channel) -> Result<Channel> {
        if a.dim_in != b.dim_in || a.dim_out != b.dim_out {
            return Err(QchanError::DimMismatch(
                "flagged mixture requires matching channel dims".into(),
            ));
        }
        if !(0.0..=1.0).contains(&p) {
            return Err(QchanError::BadParam(format!("flag probability {p} outside [0,1]")));
        }
        let d_out = a.dim_out;
        let mut kraus = Vec::new();
        for (flag, (w, ch)) in [(0usize, (p, a)), (1usize, (1.0 - p, b))] {
            if w == 0.0 {
                continue;
            }
            for k in &ch.kraus {
                let mut big = CMat::zeros(2 * d_out, a.dim_in);
                for r in 0..d_out {
                    for c in 0..a.dim_in {
                        big[(flag * d_out + r, c)] = k[(r, c)] * w.sqrt();
                    }
                }
                kraus.push(big);
            }
        }
        Channel::from_kraus(kraus)
    }

    /// Erasure channel to dimension d+1: (1-nu) rho (+) nu |e><e|.
    pub fn erasure(nu: f64, d: usize) -> Result<Channel> {
        if !(0.0..=1.0).contains(&nu) {
            return Err(QchanError::BadParam(format!("erasure nu = {nu} outside [0,1]")));
        }
        let mut kraus = Vec::new();
        if nu < 1.0 {
            let mut v = CMat::zeros(d + 1, d);
            for i in 0..d {
                v[(i, i)] = Complex64::new((1.0 - nu).sqrt(), 0.0);
            }
            kraus.push(v);
        }
        if nu > 0.0 {
            for i in 0..d {
                let mut k = CMat::zeros(d + 1, d);
                k[(d, i)] = Complex64::new(nu.sqrt(), 0.0);
                kraus.push(k);
            }
        }
        Channel::from_kraus(kraus)
    }

    /// Composition: (self . other)(rho) = self(other(rho)).
    pub fn compose(&self, inner: &Channel) -> Result<Channel> {
        if inner.dim_out != self.dim_in {
            return Err(QchanError::DimMismatch("composition dims".into()));
        }
        let mut kraus = Vec::new();
        for a in &self.kraus {
            for b in &inner.kraus {
                kraus.push(a * b);
            }
        }
        Channel::from_kraus(kraus)
    }
}

/// Parse the CLI channel-spec grammar:
/// `depol:d=<int>,p=<float>`, `deph:p=<float>`, `dephgen:file=<path>`,
/// `amp:gamma=<float>`, `erase:nu=<float>,d=<int>`,
/// `flag:p=<float>,a=(<spec>),b=(<spec>)`, `kraus:file=<path>`, `id:d=<int>`.
pub fn parse_channel_spec(spec: &str) -> Result<Channel> {
    let (kind, rest) = spec
        .split_once(':')
        .ok_or_else(|| QchanError::Parse(format!("channel spec `{spec}` missing `:`")))?;
    let args = parse_kv(rest)?;
    let get = |key: &str| -> Result<&str> {
        args.iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
            .ok_or_else(|| QchanError::Parse(format!("spec `{spec}` missing `{key}`")))
    };
    let get_f = |key: &str| -> Result<f64> {
        get(key)?
            .parse()
            .map_err(|e| QchanError::Parse(format!("bad float for `{key}`: {e}")))
    };
    let get_u = |key: &str| -> Result<usize> {
        get(key)?
            .parse()
            .map_err(|e| QchanError::Parse(format!("bad int for `{key}`: {e}")))
    };
    match kind {
        "id" => Ok(Channel::identity_channel(get_u("d")?)),
        "depol" => Channel::depolarizing(get_u("d")?, get_f("p")?),
        "deph" => Channel::qubit_dephasing(get_f("p")?),
        "dephgen" => {
            let entries = read_real_csv(get("file")?)?;
            Channel::dephasing(&DephasingSpec::from_real(&entries)?)
        }
        "amp" => Channel::amplitude_damping(get_f("gamma")?),
        "erase" => Channel::erasure(get_f("nu")?, get_u("d")?),
        "flag" => {
            let a = parse_channel_spec(strip_parens(get("a")?))?;
            let b = parse_channel_spec(strip_parens(get("b")?))?;
            Channel::flagged_mixture(get_f("p")?, &a, &b)
        }
        "kraus" => {
            let kraus = read_kraus_json(get("file")?)?;
            Channel::from_kraus(kraus)
        }
        other => Err(QchanError::Parse(format!("unknown channel kind `{other}`"))),
    }
}

fn strip_parens(s: &str) -> &str {
    s.strip_prefix('(')
        .and_then(|s| s.strip_suffix(')'))
        .unwrap_or(s)
}

/// Split `k=v,k=v` pairs, respecting parentheses in values (nested specs).
fn parse_kv(s: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    let mut depth = 0usize;
    let mut cur = String::new();
    for ch in s.chars().chain(std::iter::once(',')) {
        match ch {
            '(' => {
                depth += 1;
                cur.push(ch);
            }
            ')' => {
                depth = depth
                    .checked_sub(1)
                    .ok_or_else(|| QchanError::Parse("unbalanced parentheses".into()))?;
                cur.push(ch);
            }
            ',' if depth == 0 => {
                if !cur.is_empty() {
                    let (k, v) = cur
                        .split_once('=')
                        .ok_or_else(|| QchanError::Parse(format!("bad key=value `{cur}`")))?;
                    out.push((k.trim().to_string(), v.trim().to_string()));
                    cur.clear();
                }
            }
            _ => cur.push(ch),
        }
    }
    Ok(out)
}

fn read_real_csv(path: &str) -> Result<Vec<Vec<f64>>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let row: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        rows.push(row.map_err(|e| QchanError::Parse(format!("bad CSV entry: {e}")))?);
    }
    Ok(rows)
}

/// JSON: list of matrices, each a list of rows, each entry [re, im].
fn read_kraus_json(path: &str) -> Result<Vec<CMat>> {
    let text = std::fs::read_to_string(path)?;
    let raw: Vec<Vec<Vec<[f64; 2]>>> = serde_json::from_str(&text)
        .map_err(|e| QchanError::Parse(format!("bad Kraus JSON: {e}")))?;
    let mut out = Vec::new();
    for m in raw {
        let rows = m.len();
        let cols = m.first().map(|r| r.len()).unwrap_or(0);
        if rows == 0 || cols == 0 || m.iter().any(|r| r.len() != cols) {
            return Err(QchanError::Parse("ragged Kraus matrix".into()));
        }
        out.push(CMat::from_fn(rows, cols, |i, j| {
            Complex64::new(m[i][j][0], m[i][j][1])
        }));
    }
    Ok(out)
}

/// Output spectra of a channel on a fixed grid of probe states, used to
/// compare channels up to isometric equivalence.
pub fn output_spectra_on_grid(ch: &Channel, n: usize) -> Result<Vec<Vec<f64>>> {
    let d = ch.dim_in();
    let mut out = Vec::with_capacity(n);
    for k in 0..n {
        let theta = std::f64::consts::PI * (k as f64 + 0.5) / n as f64;
        // deterministic full-support probe states
        let mut probs = vec![0.0; d];
        let mut s = 0.0;
        for (i, p) in probs.iter_mut().enumerate() {
            *p = 1.0 + (theta * (i as f64 + 1.0)).sin().powi(2);
            s += *p;
        }
        for p in probs.iter_mut() {
            *p /= s;
        }
        let mut rho = DensityMatrix::diagonal(&probs)?;
        if d == 2 {
            let r = 0.9 * (k as f64 + 0.5) / n as f64;
            let phi = 2.0 * theta;
            rho = DensityMatrix::from_bloch(&Vector3::new(
                r * phi.sin() * theta.cos(),
                r * phi.sin() * theta.sin(),
                r * phi.cos(),
            ))?;
        }
        let out_state = ch.apply(&rho)?;
        let mut ev = eig_hermitian(out_state.matrix())?.eigenvalues;
        ev.reverse();
        out.push(ev);
    }
    Ok(out)
}

/// Check that tr_B(Choi) = I_A within tolerance.
pub fn choi_trace_condition(ch: &Channel) -> Result<f64> {
    let c = ch.choi();
    let ta = partial_trace(&c, ch.dim_in(), ch.dim_out(), Keep::First)?;
    Ok(max_abs(&(ta - identity(ch.dim_in()))))
}
