//! Expected Gram-matrix spectra and a log-linear decay test.
//!
//! Each replicate draws `n_points` i.i.d. uniform points in `[0, 1]^d`, forms
//! their `n_points × n_points` Gram matrix, and sorts its eigenvalues in
//! descending order; the expected spectrum is the elementwise mean. The
//! decay test regresses `ln λ̄_j` on `j` by ordinary least squares and reports
//! the two-sided t-test p-value of the slope.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::kernels::{kernel_matrix, KernelSpec};
use crate::qmc::{split_seed, splitmix64};
use crate::special::student_t_two_sided_ln_p;

/// Replicates whose eigensolver fails are redrawn at most this many times.
pub const EIGEN_ATTEMPTS: usize = 3;

/// Anything that can build a Gram matrix over a set of points.
pub trait GramKernel: Sync {
    fn gram(&self, points: &[Vec<f64>]) -> Result<DMatrix<f64>>;
}

impl GramKernel for KernelSpec {
    fn gram(&self, points: &[Vec<f64>]) -> Result<DMatrix<f64>> {
        kernel_matrix(points, self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectrumSettings {
    pub n_matrices: usize,
    pub n_points: usize,
    /// Eigenvalues at or below `eigen_floor · λ̄₁` are dropped before the fit.
    pub eigen_floor: f64,
}

impl Default for SpectrumSettings {
    fn default() -> Self {
        SpectrumSettings {
            n_matrices: 300,
            n_points: 100,
            eigen_floor: 1e-12,
        }
    }
}

impl SpectrumSettings {
    pub fn validate(&self) -> Result<()> {
        if self.n_matrices == 0 {
            return Err(Error::InvalidParameter("n_matrices must be >= 1".into()));
        }
        if self.n_points < 2 {
            return Err(Error::InvalidParameter("n_points must be >= 2".into()));
        }
        if !(self.eigen_floor >= 0.0 && self.eigen_floor < 1.0) {
            return Err(Error::domain("eigen floor", "in [0, 1)", self.eigen_floor));
        }
        Ok(())
    }
}

/// Eigenvalues of a symmetric matrix, sorted descending.
pub fn sorted_eigenvalues(m: DMatrix<f64>) -> Option<Vec<f64>> {
    let eig = SymmetricEigen::try_new(m, f64::EPSILON, 10_000)?;
    let mut ev: Vec<f64> = eig.eigenvalues.iter().copied().collect();
    if ev.iter().any(|v| !v.is_finite()) {
        return None;
    }
    ev.sort_by(|a, b| b.total_cmp(a));
    Some(ev)
}

fn uniform_design(rng: &mut ChaCha8Rng, n: usize, d: usize) -> Vec<Vec<f64>> {
    (0..n).map(|_| (0..d).map(|_| rng.random::<f64>()).collect()).collect()
}

/// Sorted spectrum of one random design; replicate `r` of `seed`.
fn replicate(kernel: &dyn GramKernel, d: usize, n_points: usize, seed: u64, r: usize) -> Result<Vec<f64>> {
    for attempt in 0..EIGEN_ATTEMPTS {
        let stream = (r as u64) | ((attempt as u64) << 40);
        let mut rng = ChaCha8Rng::seed_from_u64(split_seed(seed, stream));
        let points = uniform_design(&mut rng, n_points, d);
        if let Some(ev) = sorted_eigenvalues(kernel.gram(&points)?) {
            return Ok(ev);
        }
        log::warn!("replicate {r}: eigensolver failed, redrawing");
    }
    Err(Error::EigenFailure {
        attempts: EIGEN_ATTEMPTS,
    })
}

/// Elementwise mean of sorted spectra over `n_matrices` random designs.
/// Replicates run in parallel; the result depends only on `seed`.
pub fn expected_spectrum(
    kernel: &dyn GramKernel,
    d: usize,
    n_matrices: usize,
    n_points: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    if d == 0 {
        return Err(Error::InvalidParameter("d must be >= 1".into()));
    }
    SpectrumSettings {
        n_matrices,
        n_points,
        eigen_floor: 0.0,
    }
    .validate()?;
    let spectra: Vec<Vec<f64>> = (0..n_matrices)
        .into_par_iter()
        .map(|r| replicate(kernel, d, n_points, seed, r))
        .collect::<Result<_>>()?;
    let mut mean = vec![0.0; n_points];
    for s in &spectra {
        for (m, v) in mean.iter_mut().zip(s) {
            *m += v;
        }
    }
    mean.iter_mut().for_each(|m| *m /= n_matrices as f64);
    Ok(mean)
}

/// Least-squares fit of `ln λ_j = intercept + slope · j`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Regression {
    pub slope: f64,
    pub intercept: f64,
    pub p_value: f64,
    /// `log10` of the p-value, finite even where `p_value` underflows.
    pub log10_p: f64,
    pub r_squared: f64,
    pub n_retained: usize,
}

/// Regresses `ln λ_j` on `j = 1, 2, …` over the leading eigenvalues above
/// `floor · λ₁`. The p-value is the two-sided t-test of the slope with
/// `n − 2` degrees of freedom.
pub fn eigendecay_regression(eigenvalues: &[f64], floor: f64) -> Result<Regression> {
    let lead = eigenvalues.first().copied().unwrap_or(0.0);
    let cutoff = floor * lead;
    let retained: Vec<f64> = eigenvalues
        .iter()
        .copied()
        .take_while(|&v| v > cutoff && v > 0.0)
        .collect();
    let n = retained.len();
    if n < 3 {
        return Err(Error::TooFewEigenvalues { needed: 3, found: n });
    }
    let nf = n as f64;
    let xs: Vec<f64> = (1..=n).map(|j| j as f64).collect();
    let ys: Vec<f64> = retained.iter().map(|v| v.ln()).collect();
    let x_mean = xs.iter().sum::<f64>() / nf;
    let y_mean = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - x_mean).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - x_mean) * (y - y_mean)).sum();
    let syy: f64 = ys.iter().map(|y| (y - y_mean).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = y_mean - slope * x_mean;
    let sse: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum();
    let r_squared = if syy > 0.0 { (1.0 - sse / syy).clamp(0.0, 1.0) } else { 1.0 };
    let df = nf - 2.0;
    let se = (sse / df / sxx).sqrt();
    // a residual at rounding level is an exact fit
    let ln_p = if se <= 1e-14 * slope.abs() {
        f64::NEG_INFINITY
    } else {
        student_t_two_sided_ln_p(slope / se, df)
    };
    Ok(Regression {
        slope,
        intercept,
        p_value: ln_p.exp(),
        log10_p: ln_p / std::f64::consts::LN_10,
        r_squared,
        n_retained: n,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumReport {
    pub kernel: KernelSpec,
    pub d: usize,
    pub n_matrices: usize,
    pub n_points: usize,
    pub seed: u64,
    pub mean_eigenvalues: Vec<f64>,
    pub regression: Regression,
    pub eigencount_used: usize,
}

/// Seed for one `(kernel, d)` cell, independent of grid order.
pub fn cell_seed(seed: u64, kernel: &KernelSpec, d: usize) -> u64 {
    let mut h = splitmix64(d as u64);
    for c in kernel.kind().label().bytes() {
        h = splitmix64(h ^ c as u64);
    }
    for p in kernel.log_params() {
        h = splitmix64(h ^ p.to_bits());
    }
    split_seed(seed, h)
}

/// Expected spectrum and decay fit for one kernel in `d` dimensions.
pub fn spectrum_report(
    kernel: &KernelSpec,
    d: usize,
    settings: &SpectrumSettings,
    seed: u64,
) -> Result<SpectrumReport> {
    settings.validate()?;
    if let Some(fd) = kernel.fixed_dim() {
        Error::check_dim(fd, d)?;
    }
    let cell = cell_seed(seed, kernel, d);
    let mean = expected_spectrum(kernel, d, settings.n_matrices, settings.n_points, cell)?;
    let regression = eigendecay_regression(&mean, settings.eigen_floor)?;
    Ok(SpectrumReport {
        kernel: kernel.clone(),
        d,
        n_matrices: settings.n_matrices,
        n_points: settings.n_points,
        seed,
        eigencount_used: regression.n_retained,
        mean_eigenvalues: mean,
        regression,
    })
}

/// One Beta-kernel report per `(d, h)` cell, `d` varying slowest.
pub fn decay_report_suite(
    h_grid: &[f64],
    d_grid: &[usize],
    settings: &SpectrumSettings,
    seed: u64,
) -> Result<Vec<SpectrumReport>> {
    if h_grid.is_empty() || d_grid.is_empty() {
        return Err(Error::InvalidParameter("spectrum grids must be non-empty".into()));
    }
    let mut out = Vec::with_capacity(h_grid.len() * d_grid.len());
    for &d in d_grid {
        for &h in h_grid {
            let spec = KernelSpec::beta_shared(h, d)?;
            out.push(spectrum_report(&spec, d, settings, seed)?);
        }
    }
    Ok(out)
}
