//! Expected spectra of random Gram matrices and their log-linear decay fits
//! for a few kernels at d = 3.

use betabo::kernels::{KernelSpec, MaternNu};
use betabo::spectral::{spectrum_report, SpectrumSettings};

fn main() -> betabo::error::Result<()> {
    let settings = SpectrumSettings {
        n_matrices: 50,
        ..SpectrumSettings::default()
    };
    let kernels = [
        ("beta h=0.1", KernelSpec::beta_shared(0.1, 3)?),
        ("beta h=0.25", KernelSpec::beta_shared(0.25, 3)?),
        ("beta h=1.5", KernelSpec::beta_shared(1.5, 3)?),
        ("rbf l=1", KernelSpec::rbf(1.0)?),
        ("matern52 l=1", KernelSpec::matern(1.0, MaternNu::FiveHalves)?),
    ];
    println!("{:<14} {:>9} {:>9} {:>9} {:>5}  first eigenvalues", "kernel", "slope", "log10 p", "r2", "kept");
    for (name, spec) in kernels {
        let r = spectrum_report(&spec, 3, &settings, 0)?;
        let head: Vec<String> = r.mean_eigenvalues.iter().take(4).map(|v| format!("{v:.3e}")).collect();
        println!(
            "{name:<14} {:>9.4} {:>9.1} {:>9.4} {:>5}  {}",
            r.regression.slope,
            r.regression.log10_p,
            r.regression.r_squared,
            r.eigencount_used,
            head.join(" ")
        );
    }
    Ok(())
}
