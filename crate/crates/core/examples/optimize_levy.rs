//! Minimizes 4D Levy with the Beta and Matérn kernels under UCB and prints
//! the best-so-far curve and the distance to the boundary.
//!
//! `cargo run --release --example optimize_levy -- [n_iter] [seed]`

use betabo::acquisition::{AcquisitionKind, AcquisitionSpec};
use betabo::benchmarks::{BenchmarkFunction, BenchmarkSpec, Setting, SyntheticBlackBox};
use betabo::bo::{run_bo, BoConfig};
use betabo::kernels::{KernelKind, MaternNu};

fn main() -> betabo::error::Result<()> {
    let mut args = std::env::args().skip(1);
    let n_iter: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(30);
    let seed: u64 = args.next().and_then(|a| a.parse().ok()).unwrap_or(0);

    let spec = BenchmarkSpec::new(BenchmarkFunction::Levy, 4, Setting::Center, BenchmarkSpec::DEFAULT_MARGIN)?;
    let bb = SyntheticBlackBox::new(spec)?;
    for kind in [KernelKind::Beta, KernelKind::Matern(MaternNu::FiveHalves)] {
        let cfg = BoConfig::new(kind, AcquisitionSpec::with_defaults(AcquisitionKind::Ucb), n_iter, seed);
        let t = run_bo(&bb, &cfg)?;
        println!("{kind} ({} initial points):", t.n_init);
        for r in t.records.iter().skip(t.n_init).step_by(5) {
            println!("  iter {:>3}  y {:>9.4}  best {:>9.4}  delta {:.3}", r.iter, r.y, r.best, r.delta_boundary);
        }
        println!("  final best {:.6}", t.final_best().unwrap_or(f64::NAN));
    }
    Ok(())
}
