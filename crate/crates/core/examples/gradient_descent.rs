//! Open-loop gradient descent for additive noise with exact conditional
//! expectations, compared with the cost of the feedback law.

use std::sync::Arc;

use slq_core::fem::FemSpace;
use slq_core::open_loop::{evaluate_cost_exact, gd_run, CoefficientControl, GdConfig};
use slq_core::problem::{ProblemSpec, Profile};
use slq_core::stochastics::TimeGrid;

fn main() -> slq_core::Result<()> {
    let space = Arc::new(FemSpace::assemble(0.0, 1.0, 12)?);
    let grid = TimeGrid::new(1.0, 24)?;
    let spec = ProblemSpec::from_profiles(space, grid, 0.0, 1.0, &Profile::SmoothBump, &Profile::TimeModulatedSine)?;
    let config = GdConfig::at_bound(&spec, 500, 1e-10);
    let start = CoefficientControl::zeros(grid.steps, spec.dim());
    println!("kappa = {}, J(0) = {:.8}", config.kappa, evaluate_cost_exact(&start, &spec)?);

    let (u, report) = gd_run(&spec, &config, start)?;
    for (k, (d, c)) in report.distances.iter().zip(&report.costs).enumerate().step_by(5) {
        println!("iter {:>3}  |U_k+1 - U_k| = {d:.3e}  J = {c:.10}", k + 1);
    }
    println!(
        "converged = {} after {} iterations, J(U*) = {:.10}",
        report.converged, report.iterations_run, report.final_cost
    );
    let g0 = &u.g[0];
    println!("deterministic part of U*_0: first modes {:?}", &g0.coeffs[..3]);
    Ok(())
}
