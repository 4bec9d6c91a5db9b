//! Optimizes an objective run as a subprocess. The default command is a
//! small shell/awk script; pass any program that reads whitespace-separated
//! numbers on stdin and prints one number.
//!
//! `cargo run --example external_objective -- [program args...]`

use betabo::acquisition::{AcquisitionKind, AcquisitionSpec};
use betabo::benchmarks::{DomainBox, ExternalBlackBox};
use betabo::bo::{run_bo, BoConfig};
use betabo::kernels::KernelKind;

fn main() -> betabo::error::Result<()> {
    let mut command: Vec<String> = std::env::args().skip(1).collect();
    if command.is_empty() {
        let script = "awk '{ s = 0; for (i = 1; i <= NF; i++) s += ($i - 0.3)^2; printf \"%.17g\\n\", s }'";
        command = vec!["sh".into(), "-c".into(), script.into()];
    }
    let domain = DomainBox::new(vec![0.0, 0.0], vec![1.0, 2.0])?;
    let bb = ExternalBlackBox::new(&command, domain)?;
    let cfg = BoConfig::new(KernelKind::Beta, AcquisitionSpec::with_defaults(AcquisitionKind::Ei), 15, 1);
    match run_bo(&bb, &cfg) {
        Ok(t) => {
            for r in &t.records {
                println!("{:>3}  x = [{:.5}, {:.5}]  y = {:.6e}", r.iter, r.raw[0], r.raw[1], r.y);
            }
            println!("best {:.6e}", t.final_best().unwrap_or(f64::NAN));
        }
        Err(betabo::error::Error::BlackBox { message, partial }) => {
            eprintln!("objective failed after {} evaluations: {message}", partial.records.len());
            std::process::exit(3);
        }
        Err(e) => return Err(e),
    }
    Ok(())
}
