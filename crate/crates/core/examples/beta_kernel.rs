//! Evaluates the Beta product kernel, its diagonal and a small Gram matrix,
//! and compares against the quadrature oracle.

use betabo::kernels::{beta_kernel, beta_kernel_diag, beta_kernel_quadrature_oracle, kernel_matrix, KernelSpec, UnitPoint};

fn main() -> betabo::error::Result<()> {
    let h = [0.5, 1.0];
    let x = UnitPoint::new(vec![0.1, 0.9])?;
    let y = UnitPoint::new(vec![0.2, 0.4])?;
    let k = beta_kernel(&x, &y, &h)?;
    let q = beta_kernel_quadrature_oracle(&x, &y, &h)?;
    println!("k(x, y)          = {k:.12}");
    println!("quadrature       = {q:.12}");
    println!("k(x, x)          = {:.12}", beta_kernel_diag(&x, &h)?);
    println!("k(center,center) = {:.12}", beta_kernel_diag(&UnitPoint::center(2), &h)?);

    // the diagonal is not constant: larger near the faces
    println!("\nk(t, t) in 1D, h = 0.3:");
    for i in 0..=10 {
        let t = i as f64 / 10.0;
        println!("  t = {t:.1}  {:.6}", beta_kernel_diag(&UnitPoint::new(vec![t])?, &[0.3])?);
    }

    let pts = vec![vec![0.0, 0.0], vec![0.5, 0.5], vec![1.0, 0.25]];
    let g = kernel_matrix(&pts, &KernelSpec::beta(h.to_vec())?)?;
    println!("\nGram matrix:{g:.6}");
    Ok(())
}
