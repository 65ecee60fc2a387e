//! Feedback simulation, the forward stepper for prescribed controls, and
//! Monte-Carlo estimates of the discrete cost.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::fem::FemFunction;
use crate::problem::ProblemSpec;
use crate::riccati::{EtaSequence, RiccatiSolution};
use crate::stochastics::{sample_path, BrownianPath, SeedSpec};

/// States `X_0..X_N` and controls `U_0..U_{N-1}` along one Brownian path.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryPair {
    pub states: Vec<FemFunction>,
    pub controls: Vec<FemFunction>,
}

/// Sample mean of per-path costs with the standard error of the mean.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CostEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub n_paths: usize,
}

impl CostEstimate {
    pub fn from_samples(samples: &[f64]) -> Result<Self> {
        let n = samples.len();
        if n == 0 {
            return Err(Error::EmptyEnsemble);
        }
        let mean = neumaier_sum(samples.iter().copied()) / n as f64;
        let std_error = if n > 1 {
            let ss = neumaier_sum(samples.iter().map(|c| (c - mean) * (c - mean)));
            (ss / (n - 1) as f64 / n as f64).sqrt()
        } else {
            0.0
        };
        Ok(Self {
            mean,
            std_error,
            n_paths: n,
        })
    }
}

/// Compensated summation; the result does not depend on how the terms were produced.
pub fn neumaier_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut sum = 0.0_f64;
    let mut comp = 0.0_f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Which state samples enter the running cost.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CostConvention {
    /// `τ Σ_{n=0}^{N-1} ‖X_n‖²`
    #[default]
    LeftPoint,
    /// `τ Σ_{n=1}^{N} ‖X_n‖²`
    RightPoint,
}

fn check_path(spec: &ProblemSpec, path: &BrownianPath) -> Result<()> {
    if path.grid != spec.grid {
        return Err(Error::DimensionMismatch {
            expected: spec.grid.steps,
            found: path.grid.steps,
        });
    }
    Ok(())
}

/// One step `X_{n+1} = A_0(X_n + τU_n + (βX_n + Π_hσ(t_n))Δ_{n+1}W)`.
#[inline]
fn advance(
    a0: &[f64],
    tau: f64,
    beta: f64,
    state: &[f64],
    control: &[f64],
    sigma: &[f64],
    dw: f64,
) -> FemFunction {
    let coeffs = (0..a0.len())
        .map(|i| a0[i] * (state[i] + tau * control[i] + (beta * state[i] + sigma[i]) * dw))
        .collect();
    FemFunction { coeffs }
}

/// Closed-loop sweep with `U_n = −P_{n+1}X_n − η_n`.
pub fn simulate_feedback(
    riccati: &RiccatiSolution,
    eta: &EtaSequence,
    spec: &ProblemSpec,
    path: &BrownianPath,
) -> Result<TrajectoryPair> {
    check_path(spec, path)?;
    let dim = spec.dim();
    let steps = spec.grid.steps;
    if riccati.dim() != dim || riccati.grid != spec.grid {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: riccati.dim(),
        });
    }
    if eta.eta.len() != steps + 1 {
        return Err(Error::DimensionMismatch {
            expected: steps + 1,
            found: eta.eta.len(),
        });
    }
    let a0 = spec.heat_step();
    let tau = spec.tau();

    let mut states = Vec::with_capacity(steps + 1);
    let mut controls = Vec::with_capacity(steps);
    states.push(spec.initial.clone());
    for n in 0..steps {
        let x = &states[n].coeffs;
        let p = &riccati.diagonal[n + 1].entries;
        let e = &eta.eta[n].coeffs;
        let u = FemFunction {
            coeffs: (0..dim).map(|i| -p[i] * x[i] - e[i]).collect(),
        };
        let next = advance(&a0, tau, spec.beta, x, &u.coeffs, &spec.noise[n].coeffs, path.dw(n + 1));
        controls.push(u);
        states.push(next);
    }
    Ok(TrajectoryPair { states, controls })
}

/// States driven by prescribed controls `U_0..U_{N-1}` along `path`.
///
/// Rearranging `X_{n+1} − X_n = τ(Δ_hX_{n+1} + U_n) + (βX_n + Π_hσ(t_n))Δ_{n+1}W`
/// gives the same stepper as [`simulate_feedback`].
pub fn simulate_forward_given_control(
    controls: &[FemFunction],
    spec: &ProblemSpec,
    path: &BrownianPath,
) -> Result<Vec<FemFunction>> {
    check_path(spec, path)?;
    let steps = spec.grid.steps;
    if controls.len() != steps {
        return Err(Error::DimensionMismatch {
            expected: steps,
            found: controls.len(),
        });
    }
    if let Some(bad) = controls.iter().find(|u| u.dim() != spec.dim()) {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: bad.dim(),
        });
    }
    let a0 = spec.heat_step();
    let tau = spec.tau();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(spec.initial.clone());
    for n in 0..steps {
        let next = advance(
            &a0,
            tau,
            spec.beta,
            &states[n].coeffs,
            &controls[n].coeffs,
            &spec.noise[n].coeffs,
            path.dw(n + 1),
        );
        states.push(next);
    }
    Ok(states)
}

/// Cost of one realization, `½τ Σ(‖X_n‖² + ‖U_n‖²) + ½α‖X_N‖²`.
pub fn pathwise_cost(
    states: &[FemFunction],
    controls: &[FemFunction],
    tau: f64,
    alpha: f64,
    convention: CostConvention,
) -> f64 {
    let steps = controls.len();
    let running = match convention {
        CostConvention::LeftPoint => &states[..steps],
        CostConvention::RightPoint => &states[1..=steps],
    };
    let state_part = neumaier_sum(running.iter().map(FemFunction::l2_norm_sq));
    let control_part = neumaier_sum(controls.iter().map(FemFunction::l2_norm_sq));
    0.5 * tau * (state_part + control_part) + 0.5 * alpha * states[steps].l2_norm_sq()
}

pub fn evaluate_discrete_cost(
    trajectories: &[TrajectoryPair],
    spec: &ProblemSpec,
    convention: CostConvention,
) -> Result<CostEstimate> {
    let costs: Vec<f64> = trajectories
        .iter()
        .map(|t| pathwise_cost(&t.states, &t.controls, spec.tau(), spec.alpha, convention))
        .collect();
    CostEstimate::from_samples(&costs)
}

/// Feedback trajectories for paths `first_index..first_index + count`, in index order.
pub fn simulate_feedback_ensemble(
    riccati: &RiccatiSolution,
    eta: &EtaSequence,
    spec: &ProblemSpec,
    master_seed: u64,
    first_index: u64,
    count: usize,
) -> Result<Vec<TrajectoryPair>> {
    (0..count as u64)
        .into_par_iter()
        .map(|i| {
            let path = sample_path(spec.grid, SeedSpec::new(master_seed, first_index + i));
            simulate_feedback(riccati, eta, spec, &path)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::FemSpace;
    use crate::riccati::{solve_eta, solve_riccati_v2, DenseStorage, RiccatiScheme};
    use crate::stochastics::TimeGrid;
    use std::sync::Arc;

    fn spec_with(
        n_el: usize,
        steps: usize,
        beta: f64,
        alpha: f64,
        x0: impl Fn(f64) -> f64,
        sigma: impl Fn(f64, f64) -> f64,
    ) -> ProblemSpec {
        let space = Arc::new(FemSpace::assemble(0.0, 1.0, n_el).unwrap());
        ProblemSpec::new(space, TimeGrid::new(1.0, steps).unwrap(), beta, alpha, x0, sigma).unwrap()
    }

    fn feedback(spec: &ProblemSpec, path: &BrownianPath) -> TrajectoryPair {
        let ric = solve_riccati_v2(&spec.space, spec.grid, spec.beta, spec.alpha).unwrap();
        let eta = solve_eta(&ric, spec).unwrap();
        simulate_feedback(&ric, &eta, spec, path).unwrap()
    }

    #[test]
    fn zero_data_stays_zero() {
        let spec = spec_with(6, 8, 0.5, 1.0, |_| 0.0, |_, _| 0.0);
        let path = sample_path(spec.grid, SeedSpec::new(3, 0));
        let traj = feedback(&spec, &path);
        assert!(traj.states.iter().chain(&traj.controls).all(|v| v.l2_norm() == 0.0));
    }

    #[test]
    fn eigenmode_follows_scalar_recursion() {
        let n_el = 8;
        let space = Arc::new(FemSpace::assemble(0.0, 1.0, n_el).unwrap());
        let k = 2;
        let grid = TimeGrid::new(1.0, 10).unwrap();
        let noise = vec![FemFunction::zeros(7); 11];
        let spec = ProblemSpec::from_discrete(
            space.clone(),
            grid,
            0.0,
            0.0,
            FemFunction::unit(7, k),
            noise,
        )
        .unwrap();
        let path = sample_path(grid, SeedSpec::new(1, 5));
        let traj = feedback(&spec, &path);
        let ric = solve_riccati_v2(&space, grid, 0.0, 0.0).unwrap();
        let a0 = 1.0 / (1.0 + grid.tau() * space.eigenvalues[k]);
        let mut x = 1.0;
        for n in 0..grid.steps {
            x *= a0 * (1.0 - grid.tau() * ric.diagonal[n + 1].entries[k]);
            assert!((traj.states[n + 1].coeffs[k] - x).abs() < 1e-14);
        }
    }

    #[test]
    fn uncontrolled_additive_noise_unrolls() {
        let spec = spec_with(5, 4, 0.0, 1.0, |x| x * (1.0 - x), |t, x| (1.0 + t) * x);
        let path = sample_path(spec.grid, SeedSpec::new(9, 2));
        let zero_controls = vec![FemFunction::zeros(4); 4];
        let states = simulate_forward_given_control(&zero_controls, &spec, &path).unwrap();
        let a0 = spec.heat_step();
        for n in 0..=4 {
            for i in 0..4 {
                let mut direct = a0[i].powi(n as i32) * spec.initial.coeffs[i];
                for k in 0..n {
                    direct += a0[i].powi((n - k) as i32) * spec.noise[k].coeffs[i] * path.dw(k + 1);
                }
                assert!((states[n].coeffs[i] - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn forward_stepper_reproduces_feedback_states() {
        // both displayed forms reduce to the same recursion, so replaying the
        // feedback controls through the open-loop stepper must agree
        let spec = spec_with(9, 16, 0.0, 1.0, |x| x.sin(), |_, x| x);
        let path = sample_path(spec.grid, SeedSpec::new(4, 4));
        let traj = feedback(&spec, &path);
        let replay = simulate_forward_given_control(&traj.controls, &spec, &path).unwrap();
        for (a, b) in replay.iter().zip(&traj.states) {
            assert!(a.sub(b).l2_norm() < 1e-12);
        }
    }

    #[test]
    fn one_step_by_hand() {
        let space = Arc::new(FemSpace::assemble(0.0, 1.0, 2).unwrap());
        let grid = TimeGrid::new(0.5, 1).unwrap();
        let spec = ProblemSpec::from_discrete(
            space,
            grid,
            0.4,
            1.0,
            FemFunction::from_coeffs(vec![2.0]),
            vec![FemFunction::from_coeffs(vec![0.3]); 2],
        )
        .unwrap();
        let path = BrownianPath {
            grid,
            increments: vec![0.25],
        };
        let x = simulate_forward_given_control(&[FemFunction::from_coeffs(vec![-1.0])], &spec, &path)
            .unwrap();
        // (2 + 0.5·(−1) + (0.4·2 + 0.3)·0.25) / (1 + 0.5·12)
        assert!((x[1].coeffs[0] - 1.775 / 7.0).abs() < 1e-15);
    }

    #[test]
    fn deterministic_cost_by_hand() {
        let space = Arc::new(FemSpace::assemble(0.0, 1.0, 2).unwrap());
        let traj = TrajectoryPair {
            states: [1.0, 0.5, 0.2].iter().map(|v| FemFunction::from_coeffs(vec![*v])).collect(),
            controls: [-0.3, -0.1].iter().map(|v| FemFunction::from_coeffs(vec![*v])).collect(),
        };
        let spec = ProblemSpec::from_discrete(
            space,
            TimeGrid::new(1.0, 2).unwrap(),
            0.0,
            2.0,
            FemFunction::zeros(1),
            vec![FemFunction::zeros(1); 3],
        )
        .unwrap();
        let est = evaluate_discrete_cost(std::slice::from_ref(&traj), &spec, CostConvention::LeftPoint).unwrap();
        // ½·0.5·(1 + 0.25 + 0.09 + 0.01) + ½·2·0.04
        assert!((est.mean - 0.3775).abs() < 1e-15);
        assert_eq!(est.std_error, 0.0);
        let right = evaluate_discrete_cost(&[traj], &spec, CostConvention::RightPoint).unwrap();
        assert!((right.mean - (0.25 * (0.25 + 0.04 + 0.1) + 0.04)).abs() < 1e-15);
        assert!(matches!(
            evaluate_discrete_cost(&[], &spec, CostConvention::LeftPoint),
            Err(Error::EmptyEnsemble)
        ));
    }

    #[test]
    fn noiseless_simulation_ignores_the_path() {
        let spec = spec_with(7, 12, 0.0, 1.0, |x| x * (1.0 - x), |_, _| 0.0);
        let a = feedback(&spec, &sample_path(spec.grid, SeedSpec::new(1, 0)));
        let b = feedback(&spec, &sample_path(spec.grid, SeedSpec::new(2, 7)));
        assert_eq!(a, b);
    }

    #[test]
    fn standard_error_scales_with_ensemble_size() {
        let spec = spec_with(6, 16, 0.5, 1.0, |x| x, |_, x| x);
        let ric = solve_riccati_v2(&spec.space, spec.grid, spec.beta, spec.alpha).unwrap();
        let eta = solve_eta(&ric, &spec).unwrap();
        let small = simulate_feedback_ensemble(&ric, &eta, &spec, 5, 0, 2000).unwrap();
        let large = simulate_feedback_ensemble(&ric, &eta, &spec, 5, 2000, 4000).unwrap();
        let s = evaluate_discrete_cost(&small, &spec, CostConvention::LeftPoint).unwrap();
        let l = evaluate_discrete_cost(&large, &spec, CostConvention::LeftPoint).unwrap();
        let ratio = l.std_error / s.std_error;
        assert!((ratio - std::f64::consts::FRAC_1_SQRT_2).abs() < 0.2 * std::f64::consts::FRAC_1_SQRT_2);
    }

    #[test]
    fn v1_feedback_is_selectable() {
        let spec = spec_with(6, 16, 0.5, 1.0, |x| x, |_, x| x);
        let ric = crate::riccati::solve_riccati(
            &spec.space,
            spec.grid,
            spec.beta,
            spec.alpha,
            RiccatiScheme::V1,
            DenseStorage::Never,
        )
        .unwrap();
        let eta = solve_eta(&ric, &spec).unwrap();
        let path = sample_path(spec.grid, SeedSpec::new(0, 0));
        let traj = simulate_feedback(&ric, &eta, &spec, &path).unwrap();
        assert_eq!(traj.controls.len(), 16);
    }
}
