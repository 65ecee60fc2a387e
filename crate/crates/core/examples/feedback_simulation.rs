//! Closed-loop simulation with multiplicative noise: the Monte-Carlo cost of
//! the feedback law against the uncontrolled system on the same paths.

use std::sync::Arc;

use slq_core::closed_loop::{
    evaluate_discrete_cost, simulate_feedback_ensemble, simulate_forward_given_control, CostConvention,
    CostEstimate, TrajectoryPair,
};
use slq_core::fem::{FemFunction, FemSpace};
use slq_core::problem::{ProblemSpec, Profile};
use slq_core::riccati::{solve_eta, solve_riccati_v2};
use slq_core::stochastics::{sample_path, SeedSpec, TimeGrid};

fn main() -> slq_core::Result<()> {
    let space = Arc::new(FemSpace::assemble(0.0, 1.0, 16)?);
    let grid = TimeGrid::new(1.0, 64)?;
    let spec = ProblemSpec::from_profiles(space, grid, 0.5, 1.0, &Profile::SmoothBump, &Profile::TimeModulatedSine)?;
    let ric = solve_riccati_v2(&spec.space, grid, spec.beta, spec.alpha)?;
    let eta = solve_eta(&ric, &spec)?;

    let (seed, paths) = (7, 4000);
    let controlled = simulate_feedback_ensemble(&ric, &eta, &spec, seed, 0, paths)?;
    let feedback = evaluate_discrete_cost(&controlled, &spec, CostConvention::LeftPoint)?;

    let zero = vec![FemFunction::zeros(spec.dim()); grid.steps];
    let free = (0..paths as u64)
        .map(|i| {
            let path = sample_path(grid, SeedSpec::new(seed, i));
            let states = simulate_forward_given_control(&zero, &spec, &path)?;
            Ok(TrajectoryPair { states, controls: zero.clone() })
        })
        .collect::<slq_core::Result<Vec<_>>>()?;
    let uncontrolled = evaluate_discrete_cost(&free, &spec, CostConvention::LeftPoint)?;

    let report = |name: &str, c: CostEstimate| println!("{name:<12} {:.6} ± {:.1e}", c.mean, c.std_error);
    report("feedback", feedback);
    report("no control", uncontrolled);
    let mid = &controlled[0].states[grid.steps / 2];
    println!("path 0, t = T/2: ||X|| = {:.4}", mid.l2_norm());
    Ok(())
}
