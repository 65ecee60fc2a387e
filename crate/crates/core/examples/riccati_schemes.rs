//! Both difference Riccati schemes against the continuous per-mode solution,
//! and the value-function check on a tiny instance.

use slq_core::fem::{FemFunction, FemSpace};
use slq_core::riccati::{
    brute_force_lq_value, solve_riccati, solve_riccati_ode_reference, DenseStorage, RiccatiScheme,
};
use slq_core::stochastics::TimeGrid;

fn main() -> slq_core::Result<()> {
    let (beta, alpha, horizon) = (1.0, 1.0, 1.0);
    let space = FemSpace::assemble(0.0, 1.0, 9)?;
    let ode = solve_riccati_ode_reference(&space, beta, alpha, horizon, &[0.0])?;
    println!("steps  scheme  max |p_0 - p(0)|  mode-1 p_0");
    for steps in [16, 64, 256, 1024] {
        let grid = TimeGrid::new(horizon, steps)?;
        for scheme in [RiccatiScheme::V1, RiccatiScheme::V2] {
            let ric = solve_riccati(&space, grid, beta, alpha, scheme, DenseStorage::Never)?;
            let gap = ric.diagonal[0]
                .entries
                .iter()
                .zip(&ode[0].entries)
                .map(|(p, r)| (p - r).abs())
                .fold(0.0, f64::max);
            println!("{steps:>5}  {scheme:>6}  {gap:<16.3e} {:.8}", ric.diagonal[0].entries[0]);
        }
    }

    let small = FemSpace::assemble(0.0, 1.0, 4)?;
    let grid = TimeGrid::new(horizon, 3)?;
    let z = FemFunction::from_coeffs(vec![0.4, -1.0, 0.25]);
    let ric = solve_riccati(&small, grid, beta, alpha, RiccatiScheme::V2, DenseStorage::Always)?;
    let brute = brute_force_lq_value(&small, grid, beta, alpha, 0, &z, RiccatiScheme::V2)?;
    println!(
        "\n(P_0 z, z) = {:.12}, brute force = {brute:.12}, dense/diagonal gap = {:.1e}",
        ric.diagonal[0].quadratic_form(&z),
        ric.representation_gap().unwrap_or(0.0)
    );
    Ok(())
}
