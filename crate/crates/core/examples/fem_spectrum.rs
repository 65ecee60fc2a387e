//! Discrete Laplacian spectrum against the continuum values `(kπ)²` and the
//! quadratic decay of the L² projection error.

use slq_core::fem::FemSpace;

fn main() -> slq_core::Result<()> {
    let space = FemSpace::assemble(0.0, 1.0, 16)?;
    println!("mode  lambda_h        (k pi)^2       ratio");
    for (k, lam) in space.eigenvalues.iter().enumerate().take(6) {
        let exact = ((k + 1) as f64 * std::f64::consts::PI).powi(2);
        println!("{:>4}  {lam:<14.6} {exact:<14.6} {:.6}", k + 1, lam / exact);
    }

    let f = |x: f64| x * (1.0 - x) * (3.0 * x).exp();
    println!("\nn_elements  ||f - P_h f||");
    for n in [8, 16, 32, 64, 128] {
        let space = FemSpace::assemble(0.0, 1.0, n)?;
        let p = space.project_l2(f)?;
        println!("{n:>10}  {:.3e}", space.l2_error_nodal(&space.nodal_values(&p), f));
    }
    Ok(())
}
