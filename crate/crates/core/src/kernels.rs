//! Covariance functions: the Beta product kernel and the stationary RBF and
//! Matérn baselines.
//!
//! The Beta kernel treats each coordinate `x ∈ [0, 1]` as the mode of a Beta
//! density with shape `α = 1 + x/h`, `β = 1 + (1 − x)/h`, and defines the
//! covariance between two points as the integral of the product of their
//! densities. The integral has a closed form as a ratio of Gamma functions,
//! which is evaluated here entirely through [`ln_gamma`] and exponentiated
//! once per entry. The result is non-stationary: `k(x, x)` grows towards the
//! faces of the unit cube.
//!
//! Kernels carry no amplitude; the GP layer owns any output scale.

use std::f64::consts::PI;
use std::fmt;
use std::sync::OnceLock;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::special::{digamma, ln_gamma};

/// Coordinates are pulled this far inside the cube before shapes are formed.
pub const COORD_CLAMP: f64 = 1e-12;

/// A point of the unit hypercube `[0, 1]^d`, `d ≥ 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitPoint(Vec<f64>);

impl UnitPoint {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidParameter("unit point needs d >= 1".into()));
        }
        for &c in &coords {
            if !(0.0..=1.0).contains(&c) {
                return Err(Error::domain("unit coordinate", "in [0, 1]", c));
            }
        }
        Ok(UnitPoint(coords))
    }

    /// The cube center `(½, …, ½)`.
    pub fn center(d: usize) -> Self {
        UnitPoint(vec![0.5; d.max(1)])
    }

    #[inline]
    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    #[inline]
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for UnitPoint {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Shape parameters of the Beta density whose mode sits at `x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BetaShape {
    pub alpha: f64,
    pub beta: f64,
}

impl BetaShape {
    pub fn from_mode(x: f64, h: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::domain("mode", "in [0, 1]", x));
        }
        check_bandwidth(h)?;
        let x = clamp_coord(x);
        Ok(BetaShape {
            alpha: 1.0 + x / h,
            beta: 1.0 + (1.0 - x) / h,
        })
    }

    /// Recovers the mode `(α − 1) / (α + β − 2)`.
    pub fn mode(&self) -> f64 {
        (self.alpha - 1.0) / (self.alpha + self.beta - 2.0)
    }
}

/// Half-integer Matérn smoothness values with closed forms.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum MaternNu {
    Half,
    ThreeHalves,
    FiveHalves,
}

impl MaternNu {
    pub fn from_f64(nu: f64) -> Result<Self> {
        match nu {
            v if v == 0.5 => Ok(MaternNu::Half),
            v if v == 1.5 => Ok(MaternNu::ThreeHalves),
            v if v == 2.5 => Ok(MaternNu::FiveHalves),
            v => Err(Error::domain("Matérn nu", "one of 0.5, 1.5, 2.5", v)),
        }
    }

    pub fn value(self) -> f64 {
        match self {
            MaternNu::Half => 0.5,
            MaternNu::ThreeHalves => 1.5,
            MaternNu::FiveHalves => 2.5,
        }
    }
}

/// Kernel family without hyperparameter values.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum KernelKind {
    Beta,
    Rbf,
    Matern(MaternNu),
}

impl KernelKind {
    pub fn is_stationary(self) -> bool {
        !matches!(self, KernelKind::Beta)
    }

    /// Short lowercase label used in CSV output and configs.
    pub fn label(self) -> &'static str {
        match self {
            KernelKind::Beta => "beta",
            KernelKind::Rbf => "rbf",
            KernelKind::Matern(MaternNu::Half) => "matern12",
            KernelKind::Matern(MaternNu::ThreeHalves) => "matern32",
            KernelKind::Matern(MaternNu::FiveHalves) => "matern",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "beta" => Ok(KernelKind::Beta),
            "rbf" => Ok(KernelKind::Rbf),
            "matern" | "matern52" => Ok(KernelKind::Matern(MaternNu::FiveHalves)),
            "matern32" => Ok(KernelKind::Matern(MaternNu::ThreeHalves)),
            "matern12" => Ok(KernelKind::Matern(MaternNu::Half)),
            other => Err(Error::InvalidParameter(format!("unknown kernel '{other}'"))),
        }
    }
}

impl fmt::Display for KernelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// A kernel family together with its hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub enum KernelSpec {
    /// Per-dimension bandwidths `h_i > 0`.
    Beta { bandwidths: Vec<f64> },
    Rbf { lengthscale: f64 },
    Matern { lengthscale: f64, nu: MaternNu },
}

impl KernelSpec {
    pub fn beta(bandwidths: Vec<f64>) -> Result<Self> {
        if bandwidths.is_empty() {
            return Err(Error::InvalidParameter("Beta kernel needs d >= 1 bandwidths".into()));
        }
        for &h in &bandwidths {
            check_bandwidth(h)?;
        }
        Ok(KernelSpec::Beta { bandwidths })
    }

    /// Beta kernel with the same bandwidth in each of `d` dimensions.
    pub fn beta_shared(h: f64, d: usize) -> Result<Self> {
        KernelSpec::beta(vec![h; d])
    }

    pub fn rbf(lengthscale: f64) -> Result<Self> {
        check_lengthscale(lengthscale)?;
        Ok(KernelSpec::Rbf { lengthscale })
    }

    pub fn matern(lengthscale: f64, nu: MaternNu) -> Result<Self> {
        check_lengthscale(lengthscale)?;
        Ok(KernelSpec::Matern { lengthscale, nu })
    }

    /// Default hyperparameters for `kind` in `d` dimensions (`h = 1`, `ℓ = 1`).
    pub fn default_for(kind: KernelKind, d: usize) -> Self {
        match kind {
            KernelKind::Beta => KernelSpec::Beta {
                bandwidths: vec![1.0; d.max(1)],
            },
            KernelKind::Rbf => KernelSpec::Rbf { lengthscale: 1.0 },
            KernelKind::Matern(nu) => KernelSpec::Matern {
                lengthscale: 1.0,
                nu,
            },
        }
    }

    pub fn kind(&self) -> KernelKind {
        match self {
            KernelSpec::Beta { .. } => KernelKind::Beta,
            KernelSpec::Rbf { .. } => KernelKind::Rbf,
            KernelSpec::Matern { nu, .. } => KernelKind::Matern(*nu),
        }
    }

    /// Input dimension the spec is tied to; stationary kernels accept any.
    pub fn fixed_dim(&self) -> Option<usize> {
        match self {
            KernelSpec::Beta { bandwidths } => Some(bandwidths.len()),
            _ => None,
        }
    }

    /// Hyperparameters in log space: `ln h_i` for Beta, `ln ℓ` otherwise.
    pub fn log_params(&self) -> Vec<f64> {
        match self {
            KernelSpec::Beta { bandwidths } => bandwidths.iter().map(|h| h.ln()).collect(),
            KernelSpec::Rbf { lengthscale } | KernelSpec::Matern { lengthscale, .. } => {
                vec![lengthscale.ln()]
            }
        }
    }

    /// Same family, hyperparameters replaced from log space.
    pub fn with_log_params(&self, log_params: &[f64]) -> Result<Self> {
        match self {
            KernelSpec::Beta { bandwidths } => {
                Error::check_dim(bandwidths.len(), log_params.len())?;
                KernelSpec::beta(log_params.iter().map(|v| v.exp()).collect())
            }
            KernelSpec::Rbf { .. } => {
                Error::check_dim(1, log_params.len())?;
                KernelSpec::rbf(log_params[0].exp())
            }
            KernelSpec::Matern { nu, .. } => {
                Error::check_dim(1, log_params.len())?;
                KernelSpec::matern(log_params[0].exp(), *nu)
            }
        }
    }

    /// Scalar summary for reports: the shared bandwidth (or mean of the
    /// per-dimension ones) or the lengthscale.
    pub fn scale_summary(&self) -> f64 {
        match self {
            KernelSpec::Beta { bandwidths } => {
                bandwidths.iter().sum::<f64>() / bandwidths.len() as f64
            }
            KernelSpec::Rbf { lengthscale } | KernelSpec::Matern { lengthscale, .. } => {
                *lengthscale
            }
        }
    }

    /// Checks that `points` all have dimension `d` and, for the Beta kernel,
    /// that `d` matches the bandwidth vector and every coordinate is in the
    /// unit cube.
    pub fn validate_points(&self, points: &[Vec<f64>]) -> Result<usize> {
        let d = match (points.first(), self.fixed_dim()) {
            (Some(p), _) => p.len(),
            (None, Some(d)) => d,
            (None, None) => return Ok(0),
        };
        if d == 0 {
            return Err(Error::InvalidParameter("points need d >= 1".into()));
        }
        if let Some(fixed) = self.fixed_dim() {
            Error::check_dim(fixed, d)?;
        }
        for p in points {
            Error::check_dim(d, p.len())?;
            if self.kind() == KernelKind::Beta {
                for &c in p {
                    if !(0.0..=1.0).contains(&c) {
                        return Err(Error::domain("unit coordinate", "in [0, 1]", c));
                    }
                }
            }
        }
        Ok(d)
    }

    /// `k(x, y)` for a single pair.
    pub fn eval(&self, x: &[f64], y: &[f64]) -> Result<f64> {
        let pts = [x.to_vec(), y.to_vec()];
        self.validate_points(&pts)?;
        let prep = self.prepare(&pts);
        Ok(self.entry(&prep, 0, &prep, 1))
    }

    /// `k(x, x)`.
    pub fn diag(&self, x: &[f64]) -> Result<f64> {
        self.eval(x, x)
    }

    pub(crate) fn prepare(&self, points: &[Vec<f64>]) -> Prepared {
        Prepared::new(self, points)
    }

    /// Covariance between row `i` of `p` and row `j` of `q`.
    #[inline]
    pub(crate) fn entry(&self, p: &Prepared, i: usize, q: &Prepared, j: usize) -> f64 {
        match self {
            KernelSpec::Beta { .. } => beta_entry(p, i, q, j).exp(),
            KernelSpec::Rbf { lengthscale } => {
                let r2 = sq_dist(p.row(i), q.row(j));
                (-r2 / (2.0 * lengthscale * lengthscale)).exp()
            }
            KernelSpec::Matern { lengthscale, nu } => {
                let r = sq_dist(p.row(i), q.row(j)).sqrt();
                matern_unchecked(r, *lengthscale, *nu)
            }
        }
    }

    /// Gram matrix of prepared points (symmetric, filled from the lower half).
    pub(crate) fn gram_prepared(&self, p: &Prepared) -> DMatrix<f64> {
        let n = p.n;
        let mut k = DMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..=i {
                let v = self.entry(p, i, p, j);
                k[(i, j)] = v;
                k[(j, i)] = v;
            }
        }
        k
    }

    /// `m × n` cross-covariance between prepared queries and training points.
    pub(crate) fn cross_prepared(&self, queries: &Prepared, train: &Prepared) -> DMatrix<f64> {
        DMatrix::from_fn(queries.n, train.n, |i, j| self.entry(queries, i, train, j))
    }

    pub(crate) fn diag_prepared(&self, p: &Prepared) -> Vec<f64> {
        match self {
            KernelSpec::Beta { .. } => (0..p.n).map(|i| beta_entry(p, i, p, i).exp()).collect(),
            _ => vec![1.0; p.n],
        }
    }

    /// Gram matrix plus `∂K/∂θ_p` for each log-hyperparameter `θ_p`.
    pub(crate) fn gram_with_log_grads(&self, p: &Prepared) -> (DMatrix<f64>, Vec<DMatrix<f64>>) {
        let n = p.n;
        let k = self.gram_prepared(p);
        let grads = match self {
            KernelSpec::Beta { bandwidths } => {
                let d = p.d;
                let mut grads = vec![DMatrix::zeros(n, n); d];
                let lc_grad: Vec<f64> = bandwidths
                    .iter()
                    .map(|&h| -2.0 / h * (digamma(1.0 / h + 2.0) - digamma(2.0 / h + 2.0)))
                    .collect();
                // a ψ(1 + a) + b ψ(1 + b) per point and dimension
                let own: Vec<f64> = p
                    .a
                    .iter()
                    .zip(&p.b)
                    .map(|(&a, &b)| a * digamma(1.0 + a) + b * digamma(1.0 + b))
                    .collect();
                for i in 0..n {
                    for j in 0..=i {
                        let kij = k[(i, j)];
                        for m in 0..d {
                            let (ai, bi) = (p.a[i * d + m], p.b[i * d + m]);
                            let (aj, bj) = (p.a[j * d + m], p.b[j * d + m]);
                            let sa = ai + aj;
                            let sb = bi + bj;
                            let dlog = lc_grad[m] - sa * digamma(1.0 + sa) - sb * digamma(1.0 + sb)
                                + own[i * d + m]
                                + own[j * d + m];
                            let v = kij * dlog;
                            grads[m][(i, j)] = v;
                            grads[m][(j, i)] = v;
                        }
                    }
                }
                grads
            }
            KernelSpec::Rbf { lengthscale } => {
                let l2 = lengthscale * lengthscale;
                let g = DMatrix::from_fn(n, n, |i, j| {
                    let r2 = sq_dist(p.row(i), p.row(j));
                    k[(i, j)] * r2 / l2
                });
                vec![g]
            }
            KernelSpec::Matern { lengthscale, nu } => {
                let g = DMatrix::from_fn(n, n, |i, j| {
                    let r = sq_dist(p.row(i), p.row(j)).sqrt();
                    matern_log_lengthscale_grad(r, *lengthscale, *nu)
                });
                vec![g]
            }
        };
        (k, grads)
    }
}

/// Points transformed once per hyperparameter setting.
///
/// For the Beta kernel `a = x/h`, `b = (1 − x)/h` per coordinate plus the
/// per-point self term; stationary kernels keep raw coordinates.
#[derive(Debug, Clone)]
pub(crate) struct Prepared {
    pub n: usize,
    pub d: usize,
    coords: Vec<f64>,
    a: Vec<f64>,
    b: Vec<f64>,
    self_term: Vec<f64>,
    log_norm: f64,
}

impl Prepared {
    fn new(spec: &KernelSpec, points: &[Vec<f64>]) -> Self {
        let n = points.len();
        let d = points.first().map_or(0, Vec::len);
        match spec {
            KernelSpec::Beta { bandwidths } => {
                let mut a = Vec::with_capacity(n * d);
                let mut b = Vec::with_capacity(n * d);
                let mut self_term = Vec::with_capacity(n);
                for p in points {
                    let mut s = 0.0;
                    for (&x, &h) in p.iter().zip(bandwidths) {
                        let x = clamp_coord(x);
                        let (ai, bi) = (x / h, (1.0 - x) / h);
                        s += ln_gamma(1.0 + ai) + ln_gamma(1.0 + bi);
                        a.push(ai);
                        b.push(bi);
                    }
                    self_term.push(s);
                }
                Prepared {
                    n,
                    d,
                    coords: Vec::new(),
                    a,
                    b,
                    self_term,
                    log_norm: beta_log_norm(bandwidths),
                }
            }
            _ => Prepared {
                n,
                d,
                coords: points.iter().flatten().copied().collect(),
                a: Vec::new(),
                b: Vec::new(),
                self_term: Vec::new(),
                log_norm: 0.0,
            },
        }
    }

    #[inline]
    fn row(&self, i: usize) -> &[f64] {
        &self.coords[i * self.d..(i + 1) * self.d]
    }
}

#[inline]
fn beta_entry(p: &Prepared, i: usize, q: &Prepared, j: usize) -> f64 {
    let d = p.d;
    let (pa, pb) = (&p.a[i * d..(i + 1) * d], &p.b[i * d..(i + 1) * d]);
    let (qa, qb) = (&q.a[j * d..(j + 1) * d], &q.b[j * d..(j + 1) * d]);
    // grouped so that swapping the two points gives bit-identical results
    let mut cross = 0.0;
    for m in 0..d {
        cross += ln_gamma(1.0 + (pa[m] + qa[m])) + ln_gamma(1.0 + (pb[m] + qb[m]));
    }
    p.log_norm + cross - (p.self_term[i] + q.self_term[j])
}

/// `ln C̃ = Σ_i [2 ln Γ(1/h_i + 2) − ln Γ(2/h_i + 2)]`.
fn beta_log_norm(bandwidths: &[f64]) -> f64 {
    bandwidths
        .iter()
        .map(|&h| 2.0 * ln_gamma(1.0 / h + 2.0) - ln_gamma(2.0 / h + 2.0))
        .sum()
}

#[inline]
fn clamp_coord(x: f64) -> f64 {
    x.clamp(COORD_CLAMP, 1.0 - COORD_CLAMP)
}

#[inline]
fn sq_dist(x: &[f64], y: &[f64]) -> f64 {
    x.iter().zip(y).map(|(a, b)| (a - b) * (a - b)).sum()
}

fn check_bandwidth(h: f64) -> Result<()> {
    if h > 0.0 && h.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("bandwidth h", "finite and > 0", h))
    }
}

fn check_lengthscale(l: f64) -> Result<()> {
    if l > 0.0 && l.is_finite() {
        Ok(())
    } else {
        Err(Error::domain("lengthscale", "finite and > 0", l))
    }
}

fn check_pair(x: &UnitPoint, y: &UnitPoint, h: &[f64]) -> Result<()> {
    Error::check_dim(x.dim(), y.dim())?;
    Error::check_dim(x.dim(), h.len())?;
    h.iter().try_for_each(|&h| check_bandwidth(h))
}

/// The Beta product kernel between two unit-cube points.
pub fn beta_kernel(x: &UnitPoint, y: &UnitPoint, h: &[f64]) -> Result<f64> {
    check_pair(x, y, h)?;
    let spec = KernelSpec::Beta {
        bandwidths: h.to_vec(),
    };
    let pts = [x.0.clone(), y.0.clone()];
    let prep = spec.prepare(&pts);
    Ok(beta_entry(&prep, 0, &prep, 1).exp())
}

/// `k(x, x)` through the diagonal-specific Gamma ratio
/// `C̃ ∏ Γ(2a+1) Γ(2b+1) / (Γ²(a+1) Γ²(b+1))`, `a = x/h`, `b = (1−x)/h`.
pub fn beta_kernel_diag(x: &UnitPoint, h: &[f64]) -> Result<f64> {
    check_pair(x, x, h)?;
    let mut acc = beta_log_norm(h);
    for (&xi, &hi) in x.coords().iter().zip(h) {
        let xi = clamp_coord(xi);
        let (a, b) = (xi / hi, (1.0 - xi) / hi);
        acc += ln_gamma(2.0 * a + 1.0) + ln_gamma(2.0 * b + 1.0)
            - 2.0 * ln_gamma(a + 1.0)
            - 2.0 * ln_gamma(b + 1.0);
    }
    Ok(acc.exp())
}

/// Closed-form upper bound on the diagonal for a shared bandwidth:
/// `2^{3d − 2d/h} (1/h + 1)^d (1/(hπ) + 3/(2π))^{d/2}`.
///
/// Only a valid bound for `h ≥ 1`; at smaller bandwidths the diagonal at
/// the cube vertices, `((1+h)² / (h(2+h)))^d`, exceeds it.
pub fn beta_diag_upper_bound(d: usize, h: f64) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidParameter("bound needs d >= 1".into()));
    }
    check_bandwidth(h)?;
    let per_dim = (3.0 - 2.0 / h) * std::f64::consts::LN_2
        + (1.0 / h + 1.0).ln()
        + 0.5 * (1.0 / (h * PI) + 1.5 / PI).ln();
    Ok((d as f64 * per_dim).exp())
}

/// `exp(−r² / (2ℓ²))`.
pub fn rbf_kernel(r: f64, lengthscale: f64) -> Result<f64> {
    check_lengthscale(lengthscale)?;
    if !(r >= 0.0) {
        return Err(Error::domain("distance r", ">= 0", r));
    }
    Ok((-r * r / (2.0 * lengthscale * lengthscale)).exp())
}

/// Half-integer Matérn closed forms.
pub fn matern_kernel(r: f64, lengthscale: f64, nu: MaternNu) -> Result<f64> {
    check_lengthscale(lengthscale)?;
    if !(r >= 0.0) {
        return Err(Error::domain("distance r", ">= 0", r));
    }
    Ok(matern_unchecked(r, lengthscale, nu))
}

#[inline]
fn matern_unchecked(r: f64, lengthscale: f64, nu: MaternNu) -> f64 {
    match nu {
        MaternNu::Half => (-r / lengthscale).exp(),
        MaternNu::ThreeHalves => {
            let u = 3f64.sqrt() * r / lengthscale;
            (1.0 + u) * (-u).exp()
        }
        MaternNu::FiveHalves => {
            let u = 5f64.sqrt() * r / lengthscale;
            (1.0 + u + u * u / 3.0) * (-u).exp()
        }
    }
}

/// `∂k/∂ ln ℓ` for the Matérn family.
#[inline]
fn matern_log_lengthscale_grad(r: f64, lengthscale: f64, nu: MaternNu) -> f64 {
    match nu {
        MaternNu::Half => {
            let u = r / lengthscale;
            u * (-u).exp()
        }
        MaternNu::ThreeHalves => {
            let u = 3f64.sqrt() * r / lengthscale;
            u * u * (-u).exp()
        }
        MaternNu::FiveHalves => {
            let u = 5f64.sqrt() * r / lengthscale;
            u * u * (1.0 + u) / 3.0 * (-u).exp()
        }
    }
}

/// Gram matrix of `points` under `spec`. Beta points must lie in the unit
/// cube; stationary kernels take any real coordinates.
pub fn kernel_matrix(points: &[Vec<f64>], spec: &KernelSpec) -> Result<DMatrix<f64>> {
    if points.is_empty() {
        return Err(Error::InvalidParameter("kernel matrix needs n >= 1 points".into()));
    }
    spec.validate_points(points)?;
    crate::special::debug_check_identities();
    Ok(spec.gram_prepared(&spec.prepare(points)))
}

/// Cross-covariance `K[i, j] = k(queries[i], points[j])`.
pub fn cross_kernel_matrix(
    queries: &[Vec<f64>],
    points: &[Vec<f64>],
    spec: &KernelSpec,
) -> Result<DMatrix<f64>> {
    spec.validate_points(points)?;
    spec.validate_points(queries)?;
    if let (Some(q), Some(p)) = (queries.first(), points.first()) {
        Error::check_dim(p.len(), q.len())?;
    }
    Ok(spec.cross_prepared(&spec.prepare(queries), &spec.prepare(points)))
}

// ---------------------------------------------------------------------------
// Quadrature oracle
// ---------------------------------------------------------------------------

const GL_ORDER: usize = 16;

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton on `P_n`.
fn gauss_legendre() -> &'static [(f64, f64)] {
    static RULE: OnceLock<Vec<(f64, f64)>> = OnceLock::new();
    RULE.get_or_init(|| {
        let n = GL_ORDER;
        let mut rule = Vec::with_capacity(n);
        for i in 0..n {
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (mut p0, mut p1) = (1.0, x);
                for k in 2..=n {
                    let k = k as f64;
                    let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
                    p0 = p1;
                    p1 = p2;
                }
                dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
                let step = p1 / dp;
                x -= step;
                if step.abs() < 1e-16 {
                    break;
                }
            }
            rule.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
        }
        rule
    })
}

/// Panel breakpoints on `[0, 1]`: geometric towards both ends (down to
/// `2^-40`), uniform in the middle.
fn panel_breaks() -> &'static [f64] {
    static BREAKS: OnceLock<Vec<f64>> = OnceLock::new();
    BREAKS.get_or_init(|| {
        let mut left: Vec<f64> = (2..=40).rev().map(|k| 0.5f64.powi(k)).collect();
        left.insert(0, 0.0);
        let mut breaks = left.clone();
        for i in 1..8 {
            breaks.push(0.25 + 0.5 * i as f64 / 8.0);
        }
        breaks.extend(left.iter().rev().map(|v| 1.0 - v));
        breaks
    })
}

/// Composite Gauss–Legendre integral over `[0, 1]` of `exp(g(s))`.
fn integrate_unit_log(g: impl Fn(f64) -> f64) -> f64 {
    let rule = gauss_legendre();
    panel_breaks()
        .windows(2)
        .map(|w| {
            let (lo, hi) = (w[0], w[1]);
            let half = 0.5 * (hi - lo);
            let mid = 0.5 * (hi + lo);
            half * rule.iter().map(|&(x, wt)| wt * g(mid + half * x).exp()).sum::<f64>()
        })
        .sum()
}

/// Independent evaluation of the Beta kernel as `∏_i ∫ p_i(s) p'_i(s) ds`,
/// with both densities normalized by quadrature rather than Gamma functions.
///
/// Intended for test-scale inputs: `d ≤ 4`, `h_i ≥ 0.05`.
pub fn beta_kernel_quadrature_oracle(x: &UnitPoint, y: &UnitPoint, h: &[f64]) -> Result<f64> {
    check_pair(x, y, h)?;
    if x.dim() > 4 {
        return Err(Error::InvalidParameter(format!(
            "quadrature oracle supports d <= 4, got {}",
            x.dim()
        )));
    }
    if let Some(&bad) = h.iter().find(|&&h| h < 0.05) {
        return Err(Error::domain("oracle bandwidth", ">= 0.05", bad));
    }
    let mut prod = 1.0;
    for ((&xi, &yi), &hi) in x.coords().iter().zip(y.coords()).zip(h) {
        let p = BetaShape::from_mode(xi, hi)?;
        let q = BetaShape::from_mode(yi, hi)?;
        let log_unnorm = |shape: BetaShape, s: f64| {
            (shape.alpha - 1.0) * s.ln() + (shape.beta - 1.0) * (-s).ln_1p()
        };
        let zp = integrate_unit_log(|s| log_unnorm(p, s));
        let zq = integrate_unit_log(|s| log_unnorm(q, s));
        let joint = integrate_unit_log(|s| log_unnorm(p, s) + log_unnorm(q, s));
        prod *= joint / (zp * zq);
    }
    Ok(prod)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn up(v: &[f64]) -> UnitPoint {
        UnitPoint::new(v.to_vec()).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        ((a - b) / b).abs()
    }

    const K_HALF_HALF: f64 = 32.0 / (3.0 * PI * PI);

    #[test]
    fn beta_closed_form_anchors() {
        let h = [1.0];
        assert!(rel(beta_kernel(&up(&[0.5]), &up(&[0.5]), &h).unwrap(), K_HALF_HALF) < 1e-12);
        assert!(rel(beta_kernel(&up(&[0.0]), &up(&[1.0]), &h).unwrap(), 2.0 / 3.0) < 1e-9);
        assert!(rel(beta_kernel(&up(&[0.0]), &up(&[0.0]), &h).unwrap(), 4.0 / 3.0) < 1e-9);
    }

    #[test]
    fn beta_product_structure() {
        let h = [1.0, 1.0];
        let k = beta_kernel(&up(&[0.5, 0.0]), &up(&[0.5, 1.0]), &h).unwrap();
        assert!(rel(k, K_HALF_HALF * 2.0 / 3.0) < 1e-9);
    }

    #[test]
    fn beta_symmetry_and_reflection() {
        let h = [0.3, 0.7];
        let x = up(&[0.1, 0.8]);
        let y = up(&[0.6, 0.25]);
        let kxy = beta_kernel(&x, &y, &h).unwrap();
        assert_eq!(kxy, beta_kernel(&y, &x, &h).unwrap());
        let xr = up(&[0.9, 0.2]);
        let yr = up(&[0.4, 0.75]);
        assert!(rel(beta_kernel(&xr, &yr, &h).unwrap(), kxy) < 1e-12);
    }

    #[test]
    fn beta_errors() {
        assert!(matches!(
            beta_kernel(&up(&[0.5]), &up(&[0.5, 0.5]), &[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(beta_kernel(&up(&[0.5]), &up(&[0.5]), &[0.0]).is_err());
        assert!(beta_kernel(&up(&[0.5]), &up(&[0.5]), &[-1.0]).is_err());
        assert!(UnitPoint::new(vec![1.5]).is_err());
        assert!(UnitPoint::new(vec![]).is_err());
    }

    #[test]
    fn oracle_examples() {
        let o = |x: f64, y: f64, h: f64| {
            beta_kernel_quadrature_oracle(&up(&[x]), &up(&[y]), &[h]).unwrap()
        };
        assert!(rel(o(0.0, 0.0, 1.0), 4.0 / 3.0) < 1e-9);
        assert!(rel(o(0.5, 0.5, 1.0), K_HALF_HALF) < 1e-9);
        // 30-digit adaptive quadrature reference values
        assert!(rel(o(0.25, 0.75, 0.5), 0.864_607_433_747_948_98) < 1e-9);
        assert!(rel(o(0.3, 0.9, 0.05), 0.001_260_295_245_482_038_4) < 1e-7);
        let closed = beta_kernel(&up(&[0.25]), &up(&[0.75]), &[0.5]).unwrap();
        assert!(rel(closed, o(0.25, 0.75, 0.5)) < 1e-6);
    }

    #[test]
    fn oracle_rejects_out_of_scope_inputs() {
        let x = up(&[0.5; 5]);
        assert!(beta_kernel_quadrature_oracle(&x, &x, &[1.0; 5]).is_err());
        assert!(beta_kernel_quadrature_oracle(&up(&[0.5]), &up(&[0.5]), &[0.01]).is_err());
    }

    #[test]
    fn diag_matches_general_form() {
        assert!(rel(beta_kernel_diag(&up(&[0.0]), &[1.0]).unwrap(), 4.0 / 3.0) < 1e-9);
        assert!(rel(beta_kernel_diag(&up(&[0.5]), &[1.0]).unwrap(), K_HALF_HALF) < 1e-12);
        let h = [0.2, 0.9, 1.4];
        for x in [[0.1, 0.5, 0.95], [0.0, 1.0, 0.33], [0.7, 0.2, 0.5]] {
            let x = up(&x);
            let general = beta_kernel(&x, &x, &h).unwrap();
            assert!(rel(beta_kernel_diag(&x, &h).unwrap(), general) < 1e-12);
        }
        let a = beta_kernel_diag(&up(&[0.2, 0.5]), &[0.4, 0.4]).unwrap();
        let b = beta_kernel_diag(&up(&[0.8, 0.5]), &[0.4, 0.4]).unwrap();
        assert!(rel(a, b) < 1e-12);
    }

    #[test]
    fn diag_at_vertex_closed_form() {
        for h in [0.1, 0.25, 0.5, 1.0, 1.5] {
            let want = (1.0 + h) * (1.0 + h) / (h * (2.0 + h));
            assert!(rel(beta_kernel_diag(&up(&[0.0]), &[h]).unwrap(), want) < 1e-9);
        }
    }

    #[test]
    fn upper_bound_examples() {
        let one = beta_diag_upper_bound(1, 1.0).unwrap();
        assert!(rel(one, 4.0 * (2.5 / PI).sqrt()) < 1e-14);
        assert!(rel(beta_diag_upper_bound(2, 1.0).unwrap(), one * one) < 1e-14);
        assert!(beta_kernel_diag(&up(&[0.0]), &[1.0]).unwrap() <= one);
        assert!(beta_diag_upper_bound(1, 0.0).is_err());
        assert!(beta_diag_upper_bound(0, 1.0).is_err());
    }

    #[test]
    fn upper_bound_holds_where_the_derivation_is_tight() {
        for h in [1.0, 1.5, 2.0] {
            for i in 0..=100 {
                let x = up(&[i as f64 / 100.0]);
                assert!(beta_kernel_diag(&x, &[h]).unwrap() <= beta_diag_upper_bound(1, h).unwrap());
            }
        }
    }

    #[test]
    fn non_stationary_diagonal() {
        let h = [1.0];
        let k00 = beta_kernel(&up(&[0.0]), &up(&[0.0]), &h).unwrap();
        let k55 = beta_kernel(&up(&[0.5]), &up(&[0.5]), &h).unwrap();
        assert!((k00 - k55).abs() > 0.2);
    }

    #[test]
    fn stationary_examples() {
        assert_eq!(rbf_kernel(0.0, 1.0).unwrap(), 1.0);
        assert!((rbf_kernel(1.0, 1.0).unwrap() - 0.606_530_659_712_633_4).abs() < 1e-15);
        assert!((rbf_kernel(3.0, 1.0).unwrap() - 0.011_108_996_538_242_306).abs() < 1e-16);
        assert!(rbf_kernel(1.0, 0.0).is_err());

        for nu in [MaternNu::Half, MaternNu::ThreeHalves, MaternNu::FiveHalves] {
            assert_eq!(matern_kernel(0.0, 0.7, nu).unwrap(), 1.0);
        }
        let m12 = matern_kernel(1.0, 1.0, MaternNu::Half).unwrap();
        assert!((m12 - 0.367_879_441_171_442_3).abs() < 1e-15);
        let m52 = matern_kernel(1.0, 1.0, MaternNu::FiveHalves).unwrap();
        assert!((m52 - 0.523_994_108_831_820_3).abs() < 1e-15);
        assert!(MaternNu::from_f64(2.0).is_err());
        assert!(matern_kernel(1.0, -1.0, MaternNu::Half).is_err());
    }

    /// General-ν Matérn through the modified Bessel function `K_ν`, computed
    /// from its integral representation `∫_0^∞ e^{−z cosh t} cosh(νt) dt`.
    fn matern_general(r: f64, l: f64, nu: f64) -> f64 {
        let z = (2.0 * nu).sqrt() * r / l;
        let n = 200_000;
        let t_max = 30.0;
        let dt = t_max / n as f64;
        let mut k_nu = 0.0;
        for i in 0..=n {
            let t = i as f64 * dt;
            let w = if i == 0 || i == n { 0.5 } else { 1.0 };
            k_nu += w * (-z * t.cosh()).exp() * (nu * t).cosh();
        }
        k_nu *= dt;
        let gamma_nu = ln_gamma(nu).exp();
        2f64.powf(1.0 - nu) / gamma_nu * z.powf(nu) * k_nu
    }

    #[test]
    fn matern_closed_forms_match_bessel_definition() {
        for (nu, tag) in [
            (0.5, MaternNu::Half),
            (1.5, MaternNu::ThreeHalves),
            (2.5, MaternNu::FiveHalves),
        ] {
            for r in [0.1, 0.5, 1.0, 2.0] {
                let closed = matern_kernel(r, 0.8, tag).unwrap();
                let general = matern_general(r, 0.8, nu);
                assert!((closed - general).abs() < 1e-8, "nu={nu} r={r}");
            }
        }
    }

    #[test]
    fn kernel_matrix_shapes() {
        let spec = KernelSpec::matern(0.5, MaternNu::FiveHalves).unwrap();
        let k = kernel_matrix(&[vec![0.3, 0.4]], &spec).unwrap();
        assert_eq!(k.shape(), (1, 1));
        assert_eq!(k[(0, 0)], 1.0);
        let k = kernel_matrix(&[vec![0.3], vec![0.3]], &KernelSpec::rbf(1.0).unwrap()).unwrap();
        assert!(k.iter().all(|&v| v == 1.0));
        let beta = KernelSpec::beta_shared(0.5, 2).unwrap();
        assert!(kernel_matrix(&[vec![0.3]], &beta).is_err());
        assert!(kernel_matrix(&[vec![0.3, 1.2]], &beta).is_err());
        assert!(kernel_matrix(&[vec![0.3, 0.2], vec![0.1]], &KernelSpec::rbf(1.0).unwrap()).is_err());
    }

    fn finite_diff_check(spec: &KernelSpec, points: &[Vec<f64>]) {
        let (_, grads) = spec.gram_with_log_grads(&spec.prepare(points));
        let theta = spec.log_params();
        for (p, g) in grads.iter().enumerate() {
            let eps = 1e-6;
            let mut up_t = theta.clone();
            up_t[p] += eps;
            let mut dn_t = theta.clone();
            dn_t[p] -= eps;
            let ku = kernel_matrix(points, &spec.with_log_params(&up_t).unwrap()).unwrap();
            let kd = kernel_matrix(points, &spec.with_log_params(&dn_t).unwrap()).unwrap();
            let fd = (ku - kd) / (2.0 * eps);
            let err = (&fd - g).norm() / fd.norm().max(1e-12);
            assert!(err < 1e-6, "{:?} param {p}: rel err {err:e}", spec.kind());
        }
    }

    #[test]
    fn log_param_gradients_match_finite_differences() {
        let pts = vec![vec![0.1, 0.9], vec![0.5, 0.4], vec![0.0, 0.2], vec![0.77, 1.0]];
        finite_diff_check(&KernelSpec::beta(vec![0.3, 1.2]).unwrap(), &pts);
        finite_diff_check(&KernelSpec::rbf(0.4).unwrap(), &pts);
        for nu in [MaternNu::Half, MaternNu::ThreeHalves, MaternNu::FiveHalves] {
            finite_diff_check(&KernelSpec::matern(0.6, nu).unwrap(), &pts);
        }
    }

    #[test]
    fn beta_shape_invariants() {
        for (x, h) in [(0.0, 0.1), (0.3, 0.5), (1.0, 2.0)] {
            let s = BetaShape::from_mode(x, h).unwrap();
            assert!(s.alpha >= 1.0 && s.beta >= 1.0);
            assert!((s.alpha + s.beta - (2.0 + 1.0 / h)).abs() < 1e-12);
            assert!((s.mode() - x).abs() < 1e-11);
        }
    }
}
