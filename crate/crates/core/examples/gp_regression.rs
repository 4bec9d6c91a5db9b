//! Fits a GP to noisy 1D data, learns the hyperparameters by marginal
//! likelihood and prints the posterior on a grid.

use betabo::gp::{optimize_hyperparameters, GpState, HyperSearch, NoisePolicy};
use betabo::kernels::KernelKind;

fn main() -> betabo::error::Result<()> {
    let f = |x: f64| (6.0 * x).sin() + 0.5 * x;
    let x: Vec<Vec<f64>> = (0..12).map(|i| vec![i as f64 / 11.0]).collect();
    let y: Vec<f64> = x.iter().map(|p| f(p[0])).collect();

    for kind in [KernelKind::Beta, KernelKind::Matern(betabo::kernels::MaternNu::FiveHalves)] {
        let fit = optimize_hyperparameters(&x, &y, kind, NoisePolicy::learn_default(), &HyperSearch::default(), None, 0)?;
        println!(
            "{kind}: scale {:.4}, noise {:.2e}, log marginal likelihood {:.4}",
            fit.kernel.scale_summary(),
            fit.noise_var,
            fit.log_likelihood
        );
        let gp = GpState::fit_standardized(&x, &y, &fit.kernel, fit.noise_var)?;
        for i in 0..=8 {
            let t = i as f64 / 8.0;
            let m = gp.posterior(&[t])?;
            println!("  x = {t:.3}  mean {:+.4} ± {:.4}  (truth {:+.4})", m.mean, 2.0 * m.std_dev(), f(t));
        }
    }
    Ok(())
}
