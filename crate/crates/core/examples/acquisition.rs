//! Scores UCB, EI and PI on a fitted GP and maximizes each.

use betabo::acquisition::{maximize_acquisition, AcquisitionKind, AcquisitionSpec};
use betabo::gp::GpState;
use betabo::kernels::KernelSpec;

fn main() -> betabo::error::Result<()> {
    let x = vec![vec![0.1], vec![0.4], vec![0.55], vec![0.9]];
    let y = vec![1.2, 0.3, 0.5, 0.9];
    let gp = GpState::fit_standardized(&x, &y, &KernelSpec::beta(vec![0.3])?, 1e-6)?;
    let best = gp.best_target();

    println!("     x     UCB       EI        PI");
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        let m = gp.posterior(&[t])?;
        let s: Vec<f64> = [AcquisitionKind::Ucb, AcquisitionKind::Ei, AcquisitionKind::Pi]
            .iter()
            .map(|&k| AcquisitionSpec::with_defaults(k).score(&m, best))
            .collect();
        println!("  {t:.2}  {:+.4}  {:.5}  {:.5}", s[0], s[1], s[2]);
    }
    for kind in [AcquisitionKind::Ucb, AcquisitionKind::Ei, AcquisitionKind::Pi] {
        let p = maximize_acquisition(&gp, &AcquisitionSpec::with_defaults(kind), 7)?;
        println!("{kind}: argmax {:.5} score {:.6}", p.point.coords()[0], p.score);
    }
    Ok(())
}
