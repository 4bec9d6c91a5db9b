//! The GP-based Bayesian-optimization loop and trajectory summaries.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::acquisition::{maximize_acquisition_with, AcquisitionSpec, MaximizerSettings};
use crate::benchmarks::{boundary_distance, from_unit, BlackBox};
use crate::error::{Error, Result};
use crate::gp::{optimize_hyperparameters, GpState, HyperFit, HyperSearch, NoisePolicy};
use crate::kernels::{KernelKind, KernelSpec, UnitPoint};
use crate::qmc::split_seed;

pub use crate::qmc::sobol_init;

/// Candidates closer than this (L∞, unit coordinates) to an observation are
/// perturbed before evaluation.
pub const DUPLICATE_TOL: f64 = 1e-9;
/// Half-width of the uniform perturbation applied to duplicates.
pub const PERTURB_RADIUS: f64 = 1e-3;

const STREAM_SOBOL: u64 = 0;
const STREAM_ACQ: u64 = 1;
const STREAM_PERTURB: u64 = 2;
const STREAM_HYPER: u64 = 3;

/// How kernel hyperparameters are chosen during a run.
#[derive(Debug, Clone, PartialEq)]
pub enum HyperPolicy {
    /// Marginal-likelihood refit every `every` iterations (1 = each one).
    Refit { every: usize },
    /// Hyperparameters held fixed for the whole run.
    Fixed(KernelSpec),
}

impl Default for HyperPolicy {
    fn default() -> Self {
        HyperPolicy::Refit { every: 1 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BoConfig {
    pub kernel: KernelKind,
    pub acquisition: AcquisitionSpec,
    /// Initial design size; `None` picks `3·d` for synthetic benchmarks and
    /// 5 otherwise.
    pub n_init: Option<usize>,
    pub n_iter: usize,
    pub seed: u64,
    pub hyper: HyperPolicy,
    pub noise: NoisePolicy,
    pub search: HyperSearch,
    pub maximizer: MaximizerSettings,
}

impl BoConfig {
    pub fn new(kernel: KernelKind, acquisition: AcquisitionSpec, n_iter: usize, seed: u64) -> Self {
        BoConfig {
            kernel,
            acquisition,
            n_init: None,
            n_iter,
            seed,
            hyper: HyperPolicy::default(),
            noise: NoisePolicy::default(),
            search: HyperSearch::default(),
            maximizer: MaximizerSettings::default(),
        }
    }

    pub fn resolved_n_init(&self, black_box: &dyn BlackBox) -> usize {
        self.n_init.unwrap_or_else(|| {
            if black_box.is_synthetic() {
                3 * black_box.domain().dim()
            } else {
                5
            }
        })
    }
}

/// One evaluated query.
#[derive(Debug, Clone, PartialEq)]
pub struct Record {
    pub iter: usize,
    pub unit: UnitPoint,
    pub raw: Vec<f64>,
    pub y: f64,
    pub best: f64,
    pub delta_boundary: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub records: Vec<Record>,
    pub config: BoConfig,
    pub n_init: usize,
    /// Fitted log-hyperparameters used at each BO iteration.
    pub hyper_history: Vec<Vec<f64>>,
}

impl Trajectory {
    pub fn final_best(&self) -> Option<f64> {
        self.records.last().map(|r| r.best)
    }

    fn push(&mut self, unit: UnitPoint, raw: Vec<f64>, y: f64) {
        let best = self.records.last().map_or(y, |r| r.best.min(y));
        let delta_boundary = boundary_distance(&unit);
        self.records.push(Record {
            iter: self.records.len(),
            unit,
            raw,
            y,
            best,
            delta_boundary,
        });
    }

    fn evaluate(&mut self, black_box: &dyn BlackBox, unit: UnitPoint) -> Result<()> {
        let raw = from_unit(&unit, black_box.domain())?;
        match black_box.evaluate(&raw) {
            Ok(y) if y.is_finite() => {
                self.push(unit, raw, y);
                Ok(())
            }
            Ok(y) => Err(self.fail(format!("objective returned non-finite value {y}"))),
            Err(e) => Err(self.fail(e.0)),
        }
    }

    fn fail(&self, message: String) -> Error {
        Error::BlackBox {
            message,
            partial: Box::new(self.clone()),
        }
    }
}

/// Runs GP-based minimization of `black_box`: a scrambled-Sobol initial
/// design, then `n_iter` rounds of (refit hyperparameters, fit GP on all
/// observations, maximize the acquisition, evaluate).
///
/// A failed evaluation aborts the run with [`Error::BlackBox`], which carries
/// the records gathered so far.
pub fn run_bo(black_box: &dyn BlackBox, config: &BoConfig) -> Result<Trajectory> {
    let d = black_box.domain().dim();
    if let HyperPolicy::Fixed(spec) = &config.hyper {
        if spec.kind() != config.kernel {
            return Err(Error::InvalidParameter(format!(
                "fixed hyperparameters are for {}, run uses {}",
                spec.kind(),
                config.kernel
            )));
        }
        if let Some(fd) = spec.fixed_dim() {
            Error::check_dim(d, fd)?;
        }
    }
    if let HyperPolicy::Refit { every: 0 } = config.hyper {
        return Err(Error::InvalidParameter("refit interval must be >= 1".into()));
    }
    let n_init = config.resolved_n_init(black_box);
    if n_init + config.n_iter == 0 {
        return Err(Error::InvalidParameter("budget must be >= 1 evaluation".into()));
    }
    let mut traj = Trajectory {
        records: Vec::with_capacity(n_init + config.n_iter),
        config: config.clone(),
        n_init,
        hyper_history: Vec::with_capacity(config.n_iter),
    };
    for u in sobol_init(d, n_init, split_seed(config.seed, STREAM_SOBOL)) {
        traj.evaluate(black_box, u)?;
    }

    let mut perturb_rng = ChaCha8Rng::seed_from_u64(split_seed(config.seed, STREAM_PERTURB));
    let hyper_seed = split_seed(config.seed, STREAM_HYPER);
    let acq_seed = split_seed(config.seed, STREAM_ACQ);
    let fixed_noise = match config.noise {
        NoisePolicy::Fixed(v) => v,
        NoisePolicy::Learn { lower, upper } => (lower * upper).sqrt(),
    };
    let mut current = HyperFit {
        kernel: match &config.hyper {
            HyperPolicy::Fixed(spec) => spec.clone(),
            HyperPolicy::Refit { .. } => KernelSpec::default_for(config.kernel, d),
        },
        noise_var: fixed_noise,
        log_likelihood: f64::NEG_INFINITY,
    };
    let mut warm: Option<HyperFit> = None;

    for it in 0..config.n_iter {
        let xs: Vec<Vec<f64>> = traj.records.iter().map(|r| r.unit.coords().to_vec()).collect();
        let ys: Vec<f64> = traj.records.iter().map(|r| r.y).collect();

        if let HyperPolicy::Refit { every } = config.hyper {
            if it % every == 0 && xs.len() >= 2 {
                match optimize_hyperparameters(
                    &xs,
                    &ys,
                    config.kernel,
                    config.noise,
                    &config.search,
                    warm.as_ref(),
                    split_seed(hyper_seed, it as u64),
                ) {
                    Ok(fit) => {
                        current = fit.clone();
                        warm = Some(fit);
                    }
                    Err(e) => log::warn!("iteration {it}: hyperparameter fit failed ({e}); keeping previous"),
                }
            }
        }
        traj.hyper_history.push(current.kernel.log_params());

        let candidate = match GpState::fit_standardized(&xs, &ys, &current.kernel, current.noise_var) {
            Ok(state) => {
                maximize_acquisition_with(
                    &state,
                    &config.acquisition,
                    split_seed(acq_seed, it as u64),
                    &config.maximizer,
                )?
                .point
            }
            Err(e) => {
                log::warn!("iteration {it}: GP fit failed ({e}); sampling uniformly");
                UnitPoint::new((0..d).map(|_| perturb_rng.random::<f64>()).collect())?
            }
        };
        let candidate = dedupe(candidate, &xs, &mut perturb_rng)?;
        traj.evaluate(black_box, candidate)?;
    }
    Ok(traj)
}

fn is_duplicate(u: &[f64], xs: &[Vec<f64>]) -> bool {
    xs.iter().any(|x| {
        x.iter().zip(u).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max) <= DUPLICATE_TOL
    })
}

fn dedupe(candidate: UnitPoint, xs: &[Vec<f64>], rng: &mut ChaCha8Rng) -> Result<UnitPoint> {
    let mut u = candidate.into_inner();
    let mut tries = 0;
    while is_duplicate(&u, xs) && tries < 16 {
        for v in u.iter_mut() {
            *v = (*v + rng.random_range(-PERTURB_RADIUS..=PERTURB_RADIUS)).clamp(0.0, 1.0);
        }
        tries += 1;
    }
    UnitPoint::new(u)
}

/// Aggregate over repeated runs.
#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub n_runs: usize,
    pub mean_final_best: f64,
    /// Sample standard deviation over runs divided by `√n` (0 for one run).
    pub stderr: f64,
    pub mean_best_curve: Vec<f64>,
    pub mean_delta_boundary_curve: Vec<f64>,
}

pub fn summarize(trajectories: &[Trajectory]) -> Result<Summary> {
    let first = trajectories
        .first()
        .ok_or_else(|| Error::InvalidParameter("summary needs >= 1 trajectory".into()))?;
    let len = first.records.len();
    if len == 0 {
        return Err(Error::MismatchedTrajectories("trajectories are empty".into()));
    }
    if let Some(bad) = trajectories.iter().find(|t| t.records.len() != len) {
        return Err(Error::MismatchedTrajectories(format!(
            "lengths {} and {}",
            len,
            bad.records.len()
        )));
    }
    let n = trajectories.len() as f64;
    let curve = |f: fn(&Record) -> f64| -> Vec<f64> {
        (0..len)
            .map(|i| trajectories.iter().map(|t| f(&t.records[i])).sum::<f64>() / n)
            .collect()
    };
    let finals: Vec<f64> = trajectories.iter().map(|t| t.records[len - 1].best).collect();
    let mean = finals.iter().sum::<f64>() / n;
    let stderr = if trajectories.len() > 1 {
        let var = finals.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
        var.sqrt() / n.sqrt()
    } else {
        0.0
    };
    Ok(Summary {
        n_runs: trajectories.len(),
        mean_final_best: mean,
        stderr,
        mean_best_curve: curve(|r| r.best),
        mean_delta_boundary_curve: curve(|r| r.delta_boundary),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acquisition::AcquisitionKind;
    use crate::benchmarks::{DomainBox, FnBlackBox};
    use crate::kernels::MaternNu;

    fn quadratic() -> impl BlackBox {
        FnBlackBox::new("quad", DomainBox::unit(1), |x: &[f64]| (x[0] - 0.3).powi(2))
    }

    fn cfg(kind: KernelKind, n_iter: usize, seed: u64) -> BoConfig {
        let mut c = BoConfig::new(kind, AcquisitionSpec::with_defaults(AcquisitionKind::Ucb), n_iter, seed);
        c.n_init = Some(3);
        c
    }

    #[test]
    fn constant_objective() {
        let bb = FnBlackBox::new("c", DomainBox::unit(2), |_: &[f64]| 7.0);
        let t = run_bo(&bb, &cfg(KernelKind::Beta, 4, 0)).unwrap();
        assert_eq!(t.records.len(), 7);
        assert!(t.records.iter().all(|r| r.best == 7.0));
    }

    #[test]
    fn quadratic_converges_with_beta_ucb() {
        let t = run_bo(&quadratic(), &cfg(KernelKind::Beta, 30, 1)).unwrap();
        assert!(t.final_best().unwrap() <= 1e-3);
        for w in t.records.windows(2) {
            assert!(w[1].best <= w[0].best);
        }
    }

    #[test]
    fn runs_are_deterministic() {
        let c = cfg(KernelKind::Matern(MaternNu::FiveHalves), 5, 17);
        let a = run_bo(&quadratic(), &c).unwrap();
        let b = run_bo(&quadratic(), &c).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn failure_keeps_partial_records() {
        let calls = std::sync::atomic::AtomicUsize::new(0);
        let bb = FnBlackBox::new("nan", DomainBox::unit(1), |_: &[f64]| {
            if calls.fetch_add(1, std::sync::atomic::Ordering::SeqCst) >= 4 {
                f64::NAN
            } else {
                1.0
            }
        });
        match run_bo(&bb, &cfg(KernelKind::Rbf, 3, 0)) {
            Err(Error::BlackBox { partial, .. }) => assert_eq!(partial.records.len(), 4),
            other => panic!("expected black-box error, got {other:?}"),
        }
    }

    #[test]
    fn default_initial_design_sizes() {
        let c = BoConfig::new(KernelKind::Beta, AcquisitionSpec::with_defaults(AcquisitionKind::Ei), 0, 0);
        assert_eq!(c.resolved_n_init(&quadratic()), 5);
        let spec = crate::benchmarks::BenchmarkSpec::new(
            crate::benchmarks::BenchmarkFunction::Levy,
            4,
            crate::benchmarks::Setting::Center,
            0.05,
        )
        .unwrap();
        let syn = crate::benchmarks::SyntheticBlackBox::new(spec).unwrap();
        assert_eq!(c.resolved_n_init(&syn), 12);
        let t = run_bo(&syn, &c).unwrap();
        assert_eq!(t.records.len(), 12);
        assert!(t.records.iter().all(|r| syn.domain().contains(&r.raw)));
    }

    #[test]
    fn duplicate_guard_moves_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let xs = vec![vec![0.5, 0.5]];
        let u = dedupe(UnitPoint::new(vec![0.5, 0.5]).unwrap(), &xs, &mut rng).unwrap();
        assert!(!is_duplicate(u.coords(), &xs));
        assert!(u.coords().iter().all(|v| (v - 0.5).abs() <= PERTURB_RADIUS));
    }

    fn fake(finals: &[f64], deltas: &[f64]) -> Trajectory {
        let mut t = Trajectory {
            records: Vec::new(),
            config: cfg(KernelKind::Beta, 0, 0),
            n_init: 0,
            hyper_history: Vec::new(),
        };
        for (&y, &dlt) in finals.iter().zip(deltas) {
            let u = UnitPoint::new(vec![0.5 - (1.0 - dlt) / 2.0]).unwrap();
            t.push(u, vec![0.0], y);
        }
        t
    }

    #[test]
    fn summary_examples() {
        let s = summarize(&[fake(&[3.0, 2.0], &[1.0, 1.0])]).unwrap();
        assert_eq!((s.mean_final_best, s.stderr), (2.0, 0.0));
        assert_eq!(s.mean_delta_boundary_curve, vec![1.0, 1.0]);
        let s = summarize(&[fake(&[1.0], &[1.0]), fake(&[3.0], &[0.0])]).unwrap();
        assert_eq!(s.mean_final_best, 2.0);
        assert!((s.stderr - 1.0).abs() < 1e-15);
        assert_eq!(s.mean_delta_boundary_curve, vec![0.5]);
        assert!(summarize(&[fake(&[1.0], &[1.0]), fake(&[1.0, 2.0], &[1.0, 1.0])]).is_err());
        assert!(summarize(&[]).is_err());
    }
}
