#![allow(dead_code)]

use std::sync::Arc;

use slq_core::fem::{FemFunction, FemSpace};
use slq_core::open_loop::CoefficientControl;
use slq_core::problem::ProblemSpec;
use slq_core::stochastics::{sample_uniforms, SeedSpec, TimeGrid};

pub fn space(n_elements: usize) -> Arc<FemSpace> {
    Arc::new(FemSpace::assemble(0.0, 1.0, n_elements).unwrap())
}

/// Smooth initial state and time-dependent noise on `(0, 1)`.
pub fn smooth_spec(n_elements: usize, steps: usize, beta: f64, alpha: f64) -> ProblemSpec {
    let pi = std::f64::consts::PI;
    ProblemSpec::new(
        space(n_elements),
        TimeGrid::new(1.0, steps).unwrap(),
        beta,
        alpha,
        |x| 16.0 * x * x * (1.0 - x) * (1.0 - x),
        move |t, x| (pi * x).sin() * (1.0 + 0.5 * (pi * t).sin()),
    )
    .unwrap()
}

/// Uniform draws in `[-scale, scale)` from a fixed stream.
pub fn draws(stream: u64, count: usize, scale: f64) -> Vec<f64> {
    sample_uniforms(SeedSpec::new(31_337, stream), count)
        .into_iter()
        .map(|u| scale * (2.0 * u - 1.0))
        .collect()
}

pub fn random_function(stream: u64, dim: usize, scale: f64) -> FemFunction {
    FemFunction::from_coeffs(draws(stream, dim, scale))
}

/// Control with every coefficient drawn uniformly.
pub fn random_control(stream: u64, steps: usize, dim: usize, scale: f64) -> CoefficientControl {
    let total = steps * dim * steps * 2 + steps * dim;
    let mut values = draws(stream, total, scale).into_iter();
    let mut take = |d: usize| FemFunction::from_coeffs(values.by_ref().take(d).collect());
    let mut u = CoefficientControl::zeros(steps, dim);
    for n in 0..steps {
        u.g[n] = take(dim);
        for m in 0..n {
            u.f[n][m] = take(dim);
            u.ftilde[n][m] = take(dim);
        }
    }
    u
}
