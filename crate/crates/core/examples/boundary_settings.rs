//! Shows how the three optimum-location settings reshape each benchmark's
//! box, and the volume of the center/face/vertex partitions.

use betabo::benchmarks::{
    boundary_distance, partition_volumes, shift_domain, to_unit, BenchmarkFunction, BenchmarkSpec, Setting,
};

fn main() -> betabo::error::Result<()> {
    let eps = BenchmarkSpec::DEFAULT_MARGIN;
    for d in [2, 8, 20] {
        let (c, f, v) = partition_volumes(d, eps)?;
        println!("d = {d:>2}: center {c:.3e}  face {f:.3e}  vertex {v:.3e}");
    }
    for f in BenchmarkFunction::ALL {
        let d = if f == BenchmarkFunction::Hartmann6Repeated { 6 } else { 2 };
        let (x_star, f_star) = f.first_optimum(d)?;
        println!("\n{f} (d = {d}), f* = {f_star:.6} at {x_star:.4?}");
        for i in 1..=3 {
            let spec = BenchmarkSpec::new(f, d, Setting::from_index(i)?, eps)?;
            match shift_domain(&spec) {
                Ok(b) => {
                    let u = to_unit(&x_star, &b)?;
                    println!(
                        "  setting {i}: lower {:.4?} upper {:.4?} delta_boundary(x*) {:.4}",
                        b.lower(),
                        b.upper(),
                        boundary_distance(&u)
                    );
                }
                Err(e) => println!("  setting {i}: {e}"),
            }
        }
    }
    Ok(())
}
