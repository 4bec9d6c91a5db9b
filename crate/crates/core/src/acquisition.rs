//! Acquisition scores (oriented so that larger is better under
//! minimization) and their maximization over the unit cube.

use std::fmt;

use crate::error::{Error, Result};
use crate::gp::{GpState, PosteriorMoments};
use crate::kernels::UnitPoint;
use crate::qmc;
use crate::special::{normal_cdf, normal_pdf};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AcquisitionKind {
    Ucb,
    Ei,
    Pi,
}

impl AcquisitionKind {
    pub fn label(self) -> &'static str {
        match self {
            AcquisitionKind::Ucb => "ucb",
            AcquisitionKind::Ei => "ei",
            AcquisitionKind::Pi => "pi",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "ucb" | "lcb" => Ok(AcquisitionKind::Ucb),
            "ei" => Ok(AcquisitionKind::Ei),
            "pi" => Ok(AcquisitionKind::Pi),
            other => Err(Error::InvalidParameter(format!("unknown acquisition '{other}'"))),
        }
    }
}

impl fmt::Display for AcquisitionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Acquisition choice and its constants. Objectives are always minimized.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AcquisitionSpec {
    pub kind: AcquisitionKind,
    /// UCB exploration weight; the score uses `√beta_t`.
    pub beta_t: f64,
    /// EI/PI improvement margin, in objective units.
    pub xi: f64,
}

impl AcquisitionSpec {
    pub const DEFAULT_BETA_T: f64 = 4.0;
    pub const DEFAULT_XI: f64 = 0.01;

    pub fn new(kind: AcquisitionKind, beta_t: f64, xi: f64) -> Result<Self> {
        if !(beta_t > 0.0 && beta_t.is_finite()) {
            return Err(Error::domain("beta_t", "finite and > 0", beta_t));
        }
        if !(xi >= 0.0 && xi.is_finite()) {
            return Err(Error::domain("xi", "finite and >= 0", xi));
        }
        Ok(AcquisitionSpec { kind, beta_t, xi })
    }

    pub fn with_defaults(kind: AcquisitionKind) -> Self {
        AcquisitionSpec {
            kind,
            beta_t: Self::DEFAULT_BETA_T,
            xi: Self::DEFAULT_XI,
        }
    }

    /// Score of `m` given the incumbent `best` (ignored by UCB).
    #[inline]
    pub fn score(&self, m: &PosteriorMoments, best: f64) -> f64 {
        match self.kind {
            AcquisitionKind::Ucb => ucb_score(m, self),
            AcquisitionKind::Ei => ei_score(m, best, self),
            AcquisitionKind::Pi => pi_score(m, best, self),
        }
    }
}

/// `−(μ − √β σ)`: the negated lower confidence bound.
#[inline]
pub fn ucb_score(m: &PosteriorMoments, spec: &AcquisitionSpec) -> f64 {
    -(m.mean - spec.beta_t.sqrt() * m.std_dev())
}

/// Expected improvement below `best − ξ`.
#[inline]
pub fn ei_score(m: &PosteriorMoments, best: f64, spec: &AcquisitionSpec) -> f64 {
    let gap = best - spec.xi - m.mean;
    let sd = m.std_dev();
    if sd <= 0.0 {
        return gap.max(0.0);
    }
    let z = gap / sd;
    (gap * normal_cdf(z) + sd * normal_pdf(z)).max(0.0)
}

/// Probability of improving on `best − ξ`.
#[inline]
pub fn pi_score(m: &PosteriorMoments, best: f64, spec: &AcquisitionSpec) -> f64 {
    let gap = best - spec.xi - m.mean;
    let sd = m.std_dev();
    if sd <= 0.0 {
        return if gap > 0.0 { 1.0 } else { 0.0 };
    }
    normal_cdf(gap / sd)
}

/// Settings of the two-stage maximizer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaximizerSettings {
    /// Quasi-random candidates per input dimension.
    pub candidates_per_dim: usize,
    /// Number of best candidates refined locally.
    pub n_refine: usize,
    /// Score evaluations per local refinement.
    pub refine_evals: usize,
}

impl Default for MaximizerSettings {
    fn default() -> Self {
        MaximizerSettings {
            candidates_per_dim: 1024,
            n_refine: 4,
            refine_evals: 200,
        }
    }
}

/// A maximizer result: the chosen point and its score.
#[derive(Debug, Clone, PartialEq)]
pub struct Proposal {
    pub point: UnitPoint,
    pub score: f64,
}

/// Maximizes the acquisition over `[0, 1]^d` for a fitted GP whose inputs are
/// unit-cube coordinates. The incumbent for EI/PI is the smallest observed
/// target.
pub fn maximize_acquisition(state: &GpState, spec: &AcquisitionSpec, seed: u64) -> Result<Proposal> {
    maximize_acquisition_with(state, spec, seed, &MaximizerSettings::default())
}

/// [`maximize_acquisition`] with explicit maximizer settings.
///
/// `1024·d` scrambled-Sobol candidates are scored in one batch; the best
/// `n_refine` distinct ones seed Nelder–Mead searches (clamped to the cube).
/// Ties go to the lowest candidate index.
pub fn maximize_acquisition_with(
    state: &GpState,
    spec: &AcquisitionSpec,
    seed: u64,
    settings: &MaximizerSettings,
) -> Result<Proposal> {
    let d = state.dim();
    let best = state.best_target();
    let n_cand = (settings.candidates_per_dim * d).max(1);
    let candidates = qmc::sobol_points(d, n_cand, Some(seed));
    let scores: Vec<f64> = state
        .posterior_unchecked(&candidates)
        .iter()
        .map(|m| spec.score(m, best))
        .collect();

    let mut order: Vec<usize> = (0..n_cand).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));

    let mut best_point = candidates[order[0]].clone();
    let mut best_score = scores[order[0]];

    let objective = |p: &[f64]| -> f64 {
        let m = state.posterior_unchecked(&[p.to_vec()]);
        let s = spec.score(&m[0], best);
        if s.is_nan() {
            f64::NEG_INFINITY
        } else {
            s
        }
    };
    for &idx in order.iter().take(settings.n_refine) {
        let (p, s) = nelder_mead_max(&objective, &candidates[idx], settings.refine_evals);
        if s > best_score {
            best_score = s;
            best_point = p;
        }
    }
    Ok(Proposal {
        point: UnitPoint::new(best_point)?,
        score: best_score,
    })
}

/// Nelder–Mead on the unit cube, maximizing `f`; vertices are clamped into
/// the cube. Returns the best vertex seen and its value.
fn nelder_mead_max(f: &dyn Fn(&[f64]) -> f64, start: &[f64], max_evals: usize) -> (Vec<f64>, f64) {
    let d = start.len();
    let clamp = |v: Vec<f64>| -> Vec<f64> { v.into_iter().map(|x| x.clamp(0.0, 1.0)).collect() };
    let evals = std::cell::Cell::new(0usize);
    let eval = |p: &[f64]| {
        evals.set(evals.get() + 1);
        -f(p)
    };

    let step = 0.05;
    let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(d + 1);
    let s0 = start.to_vec();
    let v0 = eval(&s0);
    simplex.push((s0, v0));
    for j in 0..d {
        let mut p = start.to_vec();
        p[j] = if p[j] + step <= 1.0 { p[j] + step } else { p[j] - step };
        let v = eval(&p);
        simplex.push((p, v));
    }

    while evals.get() < max_evals {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let worst = simplex[d].1;
        let centroid: Vec<f64> = (0..d)
            .map(|j| simplex[..d].iter().map(|(p, _)| p[j]).sum::<f64>() / d as f64)
            .collect();
        let along = |t: f64| -> Vec<f64> {
            clamp(
                centroid
                    .iter()
                    .zip(&simplex[d].0)
                    .map(|(c, w)| c + t * (c - w))
                    .collect(),
            )
        };
        let xr = along(1.0);
        let fr = eval(&xr);
        if fr < simplex[0].1 {
            let xe = along(2.0);
            let fe = eval(&xe);
            simplex[d] = if fe < fr { (xe, fe) } else { (xr, fr) };
        } else if fr < simplex[d - 1].1 {
            simplex[d] = (xr, fr);
        } else {
            let (xc, fc) = if fr < worst {
                let xc = along(0.5);
                let fc = eval(&xc);
                (xc, fc)
            } else {
                let xc = along(-0.5);
                let fc = eval(&xc);
                (xc, fc)
            };
            if fc < worst.min(fr) {
                simplex[d] = (xc, fc);
            } else {
                let best = simplex[0].0.clone();
                for v in simplex.iter_mut().skip(1) {
                    let p: Vec<f64> = best.iter().zip(&v.0).map(|(b, x)| b + 0.5 * (x - b)).collect();
                    let fv = eval(&p);
                    *v = (p, fv);
                }
            }
        }
        let spread = simplex
            .iter()
            .map(|(p, _)| p.iter().zip(&simplex[0].0).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread < 1e-10 {
            break;
        }
    }
    let (p, v) = simplex
        .into_iter()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("simplex is never empty");
    (p, -v)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{KernelSpec, MaternNu};

    fn pm(mean: f64, sd: f64) -> PosteriorMoments {
        PosteriorMoments::new(mean, sd * sd)
    }

    #[test]
    fn ucb_examples() {
        let s = AcquisitionSpec::new(AcquisitionKind::Ucb, 4.0, 0.0).unwrap();
        assert_eq!(ucb_score(&pm(0.0, 0.0), &s), 0.0);
        assert_eq!(ucb_score(&pm(1.0, 1.0), &s), 1.0);
        assert!(ucb_score(&pm(1.0, 2.0), &s) > ucb_score(&pm(1.0, 1.0), &s));
    }

    #[test]
    fn ei_examples() {
        let s = AcquisitionSpec::new(AcquisitionKind::Ei, 4.0, 0.0).unwrap();
        assert_eq!(ei_score(&pm(4.0, 0.0), 5.0, &s), 1.0);
        assert_eq!(ei_score(&pm(6.0, 0.0), 5.0, &s), 0.0);
        assert!((ei_score(&pm(5.0, 1.0), 5.0, &s) - 0.398_942_280_401_432_7).abs() < 1e-15);
    }

    #[test]
    fn pi_examples() {
        let s = AcquisitionSpec::new(AcquisitionKind::Pi, 4.0, 0.0).unwrap();
        assert_eq!(pi_score(&pm(5.0, 1.0), 5.0, &s), 0.5);
        assert!((pi_score(&pm(2.0, 1.0), 5.0, &s) - 0.998_650_101_968_369_9).abs() < 1e-14);
        assert_eq!(pi_score(&pm(4.0, 0.0), 5.0, &s), 1.0);
        assert_eq!(pi_score(&pm(5.0, 0.0), 5.0, &s), 0.0);
    }

    #[test]
    fn spec_validation() {
        assert!(AcquisitionSpec::new(AcquisitionKind::Ucb, 0.0, 0.0).is_err());
        assert!(AcquisitionSpec::new(AcquisitionKind::Ei, 1.0, -0.1).is_err());
        assert_eq!(AcquisitionKind::parse("EI").unwrap(), AcquisitionKind::Ei);
        assert!(AcquisitionKind::parse("thompson").is_err());
    }

    fn linear_1d_state() -> GpState {
        let x = vec![vec![0.0], vec![0.5], vec![1.0]];
        let y = [0.0, 0.5, 1.0];
        let k = KernelSpec::matern(0.5, MaternNu::FiveHalves).unwrap();
        GpState::fit_standardized(&x, &y, &k, 1e-6).unwrap()
    }

    #[test]
    fn ucb_prefers_low_mean_region() {
        let state = linear_1d_state();
        let spec = AcquisitionSpec::with_defaults(AcquisitionKind::Ucb);
        let p = maximize_acquisition(&state, &spec, 1).unwrap();
        assert!(p.point.coords()[0] <= 0.25, "{:?}", p.point);
        // dense-grid oracle
        let grid: Vec<Vec<f64>> = (0..=10_000).map(|i| vec![i as f64 / 10_000.0]).collect();
        let best = state
            .posterior_batch(&grid)
            .unwrap()
            .iter()
            .map(|m| spec.score(m, 0.0))
            .fold(f64::NEG_INFINITY, f64::max);
        assert!(p.score >= best - 1e-6 * best.abs());
    }

    #[test]
    fn same_seed_same_point() {
        let state = linear_1d_state();
        for kind in [AcquisitionKind::Ucb, AcquisitionKind::Ei, AcquisitionKind::Pi] {
            let spec = AcquisitionSpec::with_defaults(kind);
            assert_eq!(
                maximize_acquisition(&state, &spec, 9).unwrap(),
                maximize_acquisition(&state, &spec, 9).unwrap()
            );
        }
    }

    #[test]
    fn single_high_observation_pulls_away() {
        let k = KernelSpec::beta_shared(0.3, 2).unwrap();
        let state = GpState::fit(&[vec![0.5, 0.5]], &[10.0], &k, 1e-6).unwrap();
        let spec = AcquisitionSpec::with_defaults(AcquisitionKind::Ucb);
        let p = maximize_acquisition(&state, &spec, 0).unwrap();
        let at_train = state.posterior(&[0.5, 0.5]).unwrap();
        let at_p = state.posterior(p.point.coords()).unwrap();
        assert!(at_p.variance > at_train.variance);
    }

    #[test]
    fn nelder_mead_finds_interior_maximum() {
        let f = |p: &[f64]| -((p[0] - 0.3).powi(2) + (p[1] - 0.8).powi(2));
        let (p, v) = nelder_mead_max(&f, &[0.5, 0.5], 400);
        assert!((p[0] - 0.3).abs() < 1e-4 && (p[1] - 0.8).abs() < 1e-4);
        assert!(v > -1e-7);
        let g = |p: &[f64]| p[0];
        let (p, _) = nelder_mead_max(&g, &[0.5], 100);
        assert_eq!(p[0], 1.0);
    }
}
