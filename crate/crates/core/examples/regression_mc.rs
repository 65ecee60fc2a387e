//! Gradient descent with multiplicative noise, where the adjoint's
//! conditional expectations are estimated by partitioning regression.

use std::sync::Arc;

use slq_core::fem::FemSpace;
use slq_core::open_loop::{gd_run_mc, ConditionalEstimator, GdConfig, McConfig};
use slq_core::problem::{ProblemSpec, Profile};
use slq_core::regression::default_cells;
use slq_core::stochastics::TimeGrid;

fn main() -> slq_core::Result<()> {
    let space = Arc::new(FemSpace::assemble(0.0, 1.0, 6)?);
    let grid = TimeGrid::new(1.0, 16)?;
    let spec = ProblemSpec::from_profiles(space, grid, 0.5, 1.0, &Profile::SmoothBump, &Profile::TimeModulatedSine)?;
    let config = GdConfig::at_bound(&spec, 30, 1e-6);
    for paths in [1000, 4000] {
        let cells = default_cells(paths);
        let mc = McConfig {
            paths,
            master_seed: 3,
            estimator: ConditionalEstimator::Regression { cells },
        };
        let run = gd_run_mc(&spec, &config, &mc)?;
        let r = &run.report;
        println!(
            "M = {paths:>5}, R = {cells:>3}: cost {:.6} -> {:.6} in {} iterations, last step {:.2e}",
            r.costs.first().copied().unwrap_or(f64::NAN),
            r.final_cost,
            r.iterations_run,
            r.distances.last().copied().unwrap_or(f64::NAN)
        );
    }
    Ok(())
}
