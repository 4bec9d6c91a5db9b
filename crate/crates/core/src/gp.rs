//! Exact Gaussian-process regression and marginal-likelihood fitting.

use std::f64::consts::PI;

use nalgebra::{Cholesky, DMatrix, DVector, Dyn};

use crate::error::{Error, Result};
use crate::kernels::{KernelKind, KernelSpec, Prepared};
use crate::qmc;

/// Diagonal jitter tried in order when the raw Cholesky factorization fails.
pub const JITTER_LADDER: [f64; 7] = [1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4];

/// Default fixed observation noise for deterministic objectives.
pub const DEFAULT_NOISE_VAR: f64 = 1e-6;

/// Posterior mean and variance at one query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PosteriorMoments {
    pub mean: f64,
    pub variance: f64,
}

impl PosteriorMoments {
    pub fn new(mean: f64, variance: f64) -> Self {
        PosteriorMoments {
            mean,
            variance: variance.max(0.0),
        }
    }

    #[inline]
    pub fn std_dev(&self) -> f64 {
        self.variance.sqrt()
    }
}

/// An immutable fitted GP posterior.
///
/// Targets may be standardized internally; every public quantity (posterior
/// moments, stored targets) is reported in the original units.
#[derive(Debug, Clone)]
pub struct GpState {
    x: Vec<Vec<f64>>,
    y: Vec<f64>,
    y_mean: f64,
    y_scale: f64,
    noise_var: f64,
    amplitude: f64,
    jitter: f64,
    kernel: KernelSpec,
    prepared: Prepared,
    chol: Cholesky<f64, Dyn>,
    alpha: DVector<f64>,
}

impl GpState {
    /// Fits the posterior to `y` as given (zero prior mean, no rescaling).
    pub fn fit(x: &[Vec<f64>], y: &[f64], kernel: &KernelSpec, noise_var: f64) -> Result<Self> {
        Self::fit_inner(x, y, kernel, noise_var, 1.0, false)
    }

    /// Fits the posterior to standardized targets `(y − ȳ) / s`; predictions
    /// are mapped back to the original units.
    pub fn fit_standardized(
        x: &[Vec<f64>],
        y: &[f64],
        kernel: &KernelSpec,
        noise_var: f64,
    ) -> Result<Self> {
        Self::fit_inner(x, y, kernel, noise_var, 1.0, true)
    }

    /// Like [`GpState::fit_standardized`] with a signal amplitude multiplying
    /// the kernel.
    pub fn fit_with_amplitude(
        x: &[Vec<f64>],
        y: &[f64],
        kernel: &KernelSpec,
        noise_var: f64,
        amplitude: f64,
        standardize: bool,
    ) -> Result<Self> {
        if !(amplitude > 0.0 && amplitude.is_finite()) {
            return Err(Error::domain("amplitude", "finite and > 0", amplitude));
        }
        Self::fit_inner(x, y, kernel, noise_var, amplitude, standardize)
    }

    fn fit_inner(
        x: &[Vec<f64>],
        y: &[f64],
        kernel: &KernelSpec,
        noise_var: f64,
        amplitude: f64,
        standardize: bool,
    ) -> Result<Self> {
        if x.is_empty() {
            return Err(Error::InvalidParameter("GP fit needs t >= 1 points".into()));
        }
        Error::check_dim(x.len(), y.len())?;
        if !(noise_var >= 0.0 && noise_var.is_finite()) {
            return Err(Error::domain("noise variance", "finite and >= 0", noise_var));
        }
        if let Some(bad) = y.iter().find(|v| !v.is_finite()) {
            return Err(Error::domain("target", "finite", *bad));
        }
        kernel.validate_points(x)?;
        crate::special::debug_check_identities();

        let (y_mean, y_scale) = if standardize {
            standardization(y)
        } else {
            (0.0, 1.0)
        };
        let prepared = kernel.prepare(x);
        let mut k = kernel.gram_prepared(&prepared);
        if amplitude != 1.0 {
            k *= amplitude;
        }
        for i in 0..x.len() {
            k[(i, i)] += noise_var;
        }
        let (chol, jitter) = cholesky_with_jitter(k)?;
        let ys = DVector::from_iterator(y.len(), y.iter().map(|v| (v - y_mean) / y_scale));
        let alpha = chol.solve(&ys);
        Ok(GpState {
            x: x.to_vec(),
            y: y.to_vec(),
            y_mean,
            y_scale,
            noise_var,
            amplitude,
            jitter,
            kernel: kernel.clone(),
            prepared,
            chol,
            alpha,
        })
    }

    pub fn kernel(&self) -> &KernelSpec {
        &self.kernel
    }

    pub fn inputs(&self) -> &[Vec<f64>] {
        &self.x
    }

    pub fn targets(&self) -> &[f64] {
        &self.y
    }

    pub fn n(&self) -> usize {
        self.x.len()
    }

    pub fn dim(&self) -> usize {
        self.x[0].len()
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn amplitude(&self) -> f64 {
        self.amplitude
    }

    /// Diagonal jitter that was needed for the factorization (0 if none).
    pub fn jitter(&self) -> f64 {
        self.jitter
    }

    /// Lower-triangular factor `L` with `L Lᵀ = K + (σ² + jitter) I`.
    pub fn chol_factor(&self) -> DMatrix<f64> {
        self.chol.l()
    }

    /// `(K + σ²I)⁻¹ y` for the (possibly standardized) targets.
    pub fn alpha(&self) -> &DVector<f64> {
        &self.alpha
    }

    /// Smallest observed target.
    pub fn best_target(&self) -> f64 {
        self.y.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Posterior moments at a single query.
    pub fn posterior(&self, x: &[f64]) -> Result<PosteriorMoments> {
        Ok(self.posterior_batch(&[x.to_vec()])?[0])
    }

    /// Posterior moments at many queries, sharing one triangular solve.
    pub fn posterior_batch(&self, queries: &[Vec<f64>]) -> Result<Vec<PosteriorMoments>> {
        if queries.is_empty() {
            return Ok(Vec::new());
        }
        for q in queries {
            Error::check_dim(self.dim(), q.len())?;
        }
        self.kernel.validate_points(queries)?;
        Ok(self.posterior_unchecked(queries))
    }

    pub(crate) fn posterior_unchecked(&self, queries: &[Vec<f64>]) -> Vec<PosteriorMoments> {
        let qp = self.kernel.prepare(queries);
        let mut kx = self.kernel.cross_prepared(&qp, &self.prepared).transpose();
        if self.amplitude != 1.0 {
            kx *= self.amplitude;
        }
        let prior = self.kernel.diag_prepared(&qp);
        let mean = kx.tr_mul(&self.alpha);
        self.chol.l_dirty().solve_lower_triangular_mut(&mut kx);
        let s2 = self.y_scale * self.y_scale;
        (0..queries.len())
            .map(|j| {
                let reduction = kx.column(j).norm_squared();
                let var = self.amplitude * prior[j] - reduction;
                PosteriorMoments::new(mean[j] * self.y_scale + self.y_mean, var.max(0.0) * s2)
            })
            .collect()
    }

    /// `−½ yᵀα − Σ ln L_ii − (t/2) ln 2π`, on the targets the model was fit to
    /// (standardized ones for standardized fits).
    pub fn log_marginal_likelihood(&self) -> f64 {
        let t = self.n() as f64;
        let ys = DVector::from_iterator(
            self.n(),
            self.y.iter().map(|v| (v - self.y_mean) / self.y_scale),
        );
        let l = self.chol.l_dirty();
        let log_det_half: f64 = (0..self.n()).map(|i| l[(i, i)].ln()).sum();
        -0.5 * ys.dot(&self.alpha) - log_det_half - 0.5 * t * (2.0 * PI).ln()
    }
}

fn standardization(y: &[f64]) -> (f64, f64) {
    let n = y.len() as f64;
    let mean = y.iter().sum::<f64>() / n;
    let var = y.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    let sd = var.sqrt();
    if sd > 1e-12 * mean.abs().max(1.0) {
        (mean, sd)
    } else {
        (mean, 1.0)
    }
}

fn cholesky_with_jitter(k: DMatrix<f64>) -> Result<(Cholesky<f64, Dyn>, f64)> {
    if let Some(c) = Cholesky::new(k.clone()) {
        return Ok((c, 0.0));
    }
    for &j in &JITTER_LADDER {
        let mut kj = k.clone();
        for i in 0..kj.nrows() {
            kj[(i, i)] += j;
        }
        if let Some(c) = Cholesky::new(kj) {
            log::debug!("cholesky needed jitter {j:e}");
            return Ok((c, j));
        }
    }
    Err(Error::IllConditioned {
        max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
    })
}

// ---------------------------------------------------------------------------
// Hyperparameter fitting
// ---------------------------------------------------------------------------

/// Whether the observation noise is held fixed or fitted.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoisePolicy {
    Fixed(f64),
    /// Fitted in log space inside `[lower, upper]`.
    Learn { lower: f64, upper: f64 },
}

impl Default for NoisePolicy {
    fn default() -> Self {
        NoisePolicy::Fixed(DEFAULT_NOISE_VAR)
    }
}

impl NoisePolicy {
    pub fn learn_default() -> Self {
        NoisePolicy::Learn {
            lower: 1e-8,
            upper: 1e-1,
        }
    }
}

/// Log-space search box and restart settings for marginal-likelihood fits.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperSearch {
    pub bandwidth_range: (f64, f64),
    pub lengthscale_range: (f64, f64),
    pub restarts: usize,
    pub max_iters: usize,
}

impl Default for HyperSearch {
    fn default() -> Self {
        HyperSearch {
            bandwidth_range: (0.05, 2.0),
            lengthscale_range: (0.01, 10.0),
            restarts: 8,
            max_iters: 60,
        }
    }
}

/// Result of a marginal-likelihood fit.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperFit {
    pub kernel: KernelSpec,
    pub noise_var: f64,
    /// Log marginal likelihood on the standardized targets.
    pub log_likelihood: f64,
}

/// The objective: negative log marginal likelihood over log-hyperparameters
/// `θ = (kernel log-params…, [ln σ²])`, evaluated on standardized targets.
struct Objective<'a> {
    base: KernelSpec,
    prepared_raw: &'a [Vec<f64>],
    ys: DVector<f64>,
    noise: NoisePolicy,
    n_kernel: usize,
}

impl Objective<'_> {
    fn split(&self, theta: &[f64]) -> Result<(KernelSpec, f64)> {
        let kernel = self.base.with_log_params(&theta[..self.n_kernel])?;
        let noise = match self.noise {
            NoisePolicy::Fixed(v) => v,
            NoisePolicy::Learn { .. } => theta[self.n_kernel].exp(),
        };
        Ok((kernel, noise))
    }

    fn value(&self, theta: &[f64]) -> Option<f64> {
        let (kernel, noise) = self.split(theta).ok()?;
        let prep = kernel.prepare(self.prepared_raw);
        let mut k = kernel.gram_prepared(&prep);
        for i in 0..k.nrows() {
            k[(i, i)] += noise;
        }
        let (chol, _) = cholesky_with_jitter(k).ok()?;
        Some(nlml(&chol, &self.ys))
    }

    /// Negative log likelihood and its gradient with respect to `θ`.
    fn value_grad(&self, theta: &[f64]) -> Option<(f64, Vec<f64>)> {
        let (kernel, noise) = self.split(theta).ok()?;
        let prep = kernel.prepare(self.prepared_raw);
        let (mut k, dks) = kernel.gram_with_log_grads(&prep);
        let t = k.nrows();
        for i in 0..t {
            k[(i, i)] += noise;
        }
        let (chol, _) = cholesky_with_jitter(k).ok()?;
        let value = nlml(&chol, &self.ys);
        let alpha = chol.solve(&self.ys);
        // W = K⁻¹ − ααᵀ; ∂(−LML)/∂θ = ½ tr(W ∂K/∂θ)
        let mut w = chol.inverse();
        w.ger(-1.0, &alpha, &alpha, 1.0);
        let mut grad: Vec<f64> = dks.iter().map(|dk| 0.5 * w.dot(dk)).collect();
        if let NoisePolicy::Learn { .. } = self.noise {
            grad.push(0.5 * noise * w.trace());
        }
        Some((value, grad))
    }
}

fn nlml(chol: &Cholesky<f64, Dyn>, ys: &DVector<f64>) -> f64 {
    let alpha = chol.solve(ys);
    let l = chol.l_dirty();
    let half_log_det: f64 = (0..ys.len()).map(|i| l[(i, i)].ln()).sum();
    0.5 * ys.dot(&alpha) + half_log_det + 0.5 * ys.len() as f64 * (2.0 * PI).ln()
}

/// Maps an unbounded `z` into `[lo, hi]` and back.
#[derive(Debug, Clone, Copy)]
struct Squash {
    lo: f64,
    hi: f64,
}

impl Squash {
    fn forward(self, z: f64) -> f64 {
        self.lo + (self.hi - self.lo) / (1.0 + (-z).exp())
    }

    fn derivative(self, z: f64) -> f64 {
        let s = 1.0 / (1.0 + (-z).exp());
        (self.hi - self.lo) * s * (1.0 - s)
    }

    fn inverse(self, theta: f64) -> f64 {
        let p = ((theta - self.lo) / (self.hi - self.lo)).clamp(1e-9, 1.0 - 1e-9);
        (p / (1.0 - p)).ln()
    }
}

/// Maximizes the log marginal likelihood of a standardized-target GP over
/// the kernel's hyperparameters (and optionally the noise).
///
/// Restarts start from scrambled-Sobol points of the log box, plus `warm`
/// when given; each runs L-BFGS in a sigmoid reparameterization of the box.
/// The returned likelihood is at least that of every starting point.
pub fn optimize_hyperparameters(
    x: &[Vec<f64>],
    y: &[f64],
    kind: KernelKind,
    noise: NoisePolicy,
    search: &HyperSearch,
    warm: Option<&HyperFit>,
    seed: u64,
) -> Result<HyperFit> {
    if x.len() < 2 {
        return Err(Error::InvalidParameter(
            "hyperparameter fitting needs t >= 2 points".into(),
        ));
    }
    Error::check_dim(x.len(), y.len())?;
    let d = x[0].len();
    let base = KernelSpec::default_for(kind, d);
    base.validate_points(x)?;
    let (mean, scale) = standardization(y);
    let ys = DVector::from_iterator(y.len(), y.iter().map(|v| (v - mean) / scale));

    let (klo, khi) = match kind {
        KernelKind::Beta => search.bandwidth_range,
        _ => search.lengthscale_range,
    };
    let n_kernel = base.log_params().len();
    let mut bounds = vec![
        Squash {
            lo: klo.ln(),
            hi: khi.ln()
        };
        n_kernel
    ];
    if let NoisePolicy::Learn { lower, upper } = noise {
        bounds.push(Squash {
            lo: lower.ln(),
            hi: upper.ln(),
        });
    }
    let dim = bounds.len();
    let obj = Objective {
        base,
        prepared_raw: x,
        ys,
        noise,
        n_kernel,
    };

    let mut starts: Vec<Vec<f64>> = qmc::sobol_points(dim, search.restarts.max(1), Some(seed))
        .into_iter()
        .map(|u| {
            u.iter()
                .zip(&bounds)
                .map(|(&u, b)| b.lo + (b.hi - b.lo) * (0.02 + 0.96 * u))
                .collect()
        })
        .collect();
    if let Some(w) = warm {
        if w.kernel.kind() == kind && w.kernel.log_params().len() == n_kernel {
            let mut theta = w.kernel.log_params();
            if let NoisePolicy::Learn { .. } = noise {
                theta.push(w.noise_var.ln());
            }
            starts.push(theta);
        }
    }

    let to_z = |theta: &[f64]| -> Vec<f64> {
        theta.iter().zip(&bounds).map(|(&t, b)| b.inverse(t)).collect()
    };
    let to_theta = |z: &[f64]| -> Vec<f64> {
        z.iter().zip(&bounds).map(|(&z, b)| b.forward(z)).collect()
    };
    let f = |z: &[f64]| -> Option<(f64, Vec<f64>)> {
        let theta = to_theta(z);
        let (v, g) = obj.value_grad(&theta)?;
        let gz = g.iter().zip(z).zip(&bounds).map(|((g, &z), b)| g * b.derivative(z)).collect();
        Some((v, gz))
    };

    let mut best: Option<(f64, Vec<f64>)> = None;
    for start in &starts {
        let z0 = to_z(start);
        let Some((v0, _)) = f(&z0) else { continue };
        let (zv, v) = lbfgs_minimize(&f, z0, v0, search.max_iters);
        if best.as_ref().is_none_or(|(bv, _)| v < *bv) {
            best = Some((v, zv));
        }
    }
    let Some((_, z)) = best else {
        return Err(Error::IllConditioned {
            max_jitter: JITTER_LADDER[JITTER_LADDER.len() - 1],
        });
    };
    let theta = to_theta(&z);
    let (kernel, noise_var) = obj.split(&theta)?;
    let log_likelihood = -obj.value(&theta).unwrap_or(f64::INFINITY);
    Ok(HyperFit {
        kernel,
        noise_var,
        log_likelihood,
    })
}

/// Limited-memory BFGS with Armijo backtracking. Returns the best point seen
/// and its value; never worse than the start.
fn lbfgs_minimize(
    f: &dyn Fn(&[f64]) -> Option<(f64, Vec<f64>)>,
    x0: Vec<f64>,
    f0: f64,
    max_iters: usize,
) -> (Vec<f64>, f64) {
    const MEMORY: usize = 6;
    let n = x0.len();
    let mut x = x0;
    let Some((mut fx, mut g)) = f(&x).map(|(v, g)| (v.min(f0), g)) else {
        return (x, f0);
    };
    let mut hist: Vec<(Vec<f64>, Vec<f64>, f64)> = Vec::new();
    for _ in 0..max_iters {
        let gnorm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
        if gnorm < 1e-6 {
            break;
        }
        // two-loop recursion
        let mut q = g.clone();
        let mut alphas = Vec::with_capacity(hist.len());
        for (s, yv, rho) in hist.iter().rev() {
            let a = rho * dot(s, &q);
            axpy(-a, yv, &mut q);
            alphas.push(a);
        }
        let gamma = hist.last().map_or(1.0 / gnorm.max(1.0), |(s, yv, _)| dot(s, yv) / dot(yv, yv));
        q.iter_mut().for_each(|v| *v *= gamma);
        for ((s, yv, rho), a) in hist.iter().zip(alphas.iter().rev()) {
            let b = rho * dot(yv, &q);
            axpy(a - b, s, &mut q);
        }
        let mut dir: Vec<f64> = q.iter().map(|v| -v).collect();
        let mut slope = dot(&g, &dir);
        if slope >= 0.0 {
            dir = g.iter().map(|v| -v).collect();
            slope = -gnorm * gnorm;
            hist.clear();
        }
        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..30 {
            let xn: Vec<f64> = x.iter().zip(&dir).map(|(a, d)| a + step * d).collect();
            if let Some((fn_, gn)) = f(&xn) {
                if fn_.is_finite() && fn_ <= fx + 1e-4 * step * slope {
                    accepted = Some((xn, fn_, gn));
                    break;
                }
            }
            step *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else { break };
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &yv);
        if sy > 1e-12 {
            hist.push((s, yv, 1.0 / sy));
            if hist.len() > MEMORY {
                hist.remove(0);
            }
        }
        let improvement = fx - fn_;
        x = xn;
        fx = fn_;
        g = gn;
        if improvement.abs() < 1e-9 * fx.abs().max(1.0) {
            break;
        }
    }
    debug_assert_eq!(x.len(), n);
    (x, fx)
}

#[inline]
fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[inline]
fn axpy(a: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(y, x)| *y += a * x);
}
