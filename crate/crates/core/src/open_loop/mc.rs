//! Gradient descent on simulated paths, with conditional expectations of the
//! adjoint replaced by partitioning regression on the current state.

use rayon::prelude::*;

use crate::closed_loop::{neumaier_sum, pathwise_cost, simulate_forward_given_control, CostConvention};
use crate::error::{Error, Result};
use crate::fem::FemFunction;
use crate::problem::ProblemSpec;
use crate::regression::{build_partition, fit_vector};
use crate::stochastics::{sample_path, BrownianPath, SeedSpec};

use super::coeff::CoefficientControl;
use super::exact::{adjoint_by_expansion, GdConfig, GdReport};

/// How `E^{t_n}[Θ_n]` is obtained in [`gd_run_mc`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConditionalEstimator {
    /// Partitioning regression on `X_n` with this many cells per time level.
    Regression { cells: usize },
    /// Exact conditional expectations tracked in coefficient form; `β = 0` only.
    ExactAdditive,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McConfig {
    pub paths: usize,
    pub master_seed: u64,
    pub estimator: ConditionalEstimator,
}

#[derive(Debug, Clone)]
pub struct McRun {
    /// `controls[path][n]`
    pub controls: Vec<Vec<FemFunction>>,
    /// Adjoint realizations of the last iteration, `adjoints[path][n]`.
    pub adjoints: Vec<Vec<FemFunction>>,
    pub report: GdReport,
}

/// `Θ_{N-1} = αA_0X_N`, `Θ_n = τA_0X_{n+1} + (1 + βΔ_{n+2}W)A_0Θ_{n+1}`.
pub fn theta_accumulate(states: &[FemFunction], path: &BrownianPath, spec: &ProblemSpec) -> Vec<FemFunction> {
    let steps = spec.grid.steps;
    let tau = spec.tau();
    let a0 = spec.heat_step();
    let mut theta = vec![FemFunction::zeros(spec.dim()); steps];
    theta[steps - 1] = FemFunction {
        coeffs: a0.iter().zip(&states[steps].coeffs).map(|(a, x)| spec.alpha * a * x).collect(),
    };
    for n in (0..steps - 1).rev() {
        let factor = 1.0 + spec.beta * path.dw(n + 2);
        let coeffs = (0..spec.dim())
            .map(|i| a0[i] * (tau * states[n + 1].coeffs[i] + factor * theta[n + 1].coeffs[i]))
            .collect();
        theta[n] = FemFunction { coeffs };
    }
    theta
}

/// `Θ_n = τ Σ_{j=n+1}^{N-1} A_0^{j-n} ∏_{k=n+2}^{j}(1+βΔ_kW) X_j + α A_0^{N-n} ∏_{k=n+2}^{N}(1+βΔ_kW) X_N`
/// summed term by term.
pub fn theta_direct(states: &[FemFunction], path: &BrownianPath, spec: &ProblemSpec) -> Vec<FemFunction> {
    let steps = spec.grid.steps;
    let tau = spec.tau();
    let a0 = spec.heat_step();
    let weight = |n: usize, j: usize| -> f64 { ((n + 2)..=j).map(|k| 1.0 + spec.beta * path.dw(k)).product() };
    (0..steps)
        .map(|n| {
            let coeffs = (0..spec.dim())
                .map(|i| {
                    let mut s = 0.0;
                    for j in (n + 1)..steps {
                        s += tau * a0[i].powi((j - n) as i32) * weight(n, j) * states[j].coeffs[i];
                    }
                    s + spec.alpha * a0[i].powi((steps - n) as i32) * weight(n, steps) * states[steps].coeffs[i]
                })
                .collect();
            FemFunction { coeffs }
        })
        .collect()
}

fn mean_cost(states: &[Vec<FemFunction>], controls: &[Vec<FemFunction>], spec: &ProblemSpec) -> f64 {
    let costs: Vec<f64> = states
        .iter()
        .zip(controls)
        .map(|(x, u)| pathwise_cost(x, u, spec.tau(), spec.alpha, CostConvention::LeftPoint))
        .collect();
    neumaier_sum(costs) / states.len() as f64
}

/// Regress every `Θ_n` on `X_n` over the ensemble, returning `Y = −Ê[Θ | X]`.
fn regressed_adjoints(
    states: &[Vec<FemFunction>],
    thetas: &[Vec<FemFunction>],
    steps: usize,
    cells: usize,
) -> Result<Vec<Vec<FemFunction>>> {
    let per_level: Vec<Vec<FemFunction>> = (0..steps)
        .into_par_iter()
        .map(|n| {
            let xs: Vec<Vec<f64>> = states.iter().map(|s| s[n].coeffs.clone()).collect();
            let ys: Vec<Vec<f64>> = thetas.iter().map(|t| t[n].coeffs.clone()).collect();
            let partition = build_partition(&xs, cells)?;
            let est = fit_vector(&partition, &xs, &ys)?;
            Ok(xs
                .iter()
                .map(|x| FemFunction::from_coeffs(est.predict(x).iter().map(|v| -v).collect()))
                .collect())
        })
        .collect::<Result<_>>()?;
    // transpose to [path][n]
    let paths = states.len();
    Ok((0..paths)
        .map(|p| (0..steps).map(|n| per_level[n][p].clone()).collect())
        .collect())
}

/// Run the descent on `mc.paths` simulated paths starting from `U = 0`.
pub fn gd_run_mc(spec: &ProblemSpec, config: &GdConfig, mc: &McConfig) -> Result<McRun> {
    config.check(spec)?;
    let steps = spec.grid.steps;
    let dim = spec.dim();
    let tau = spec.tau();
    let kappa = config.kappa;
    match mc.estimator {
        ConditionalEstimator::Regression { cells } => {
            if cells == 0 {
                return Err(Error::InvalidArgument("need at least one cell".into()));
            }
            if mc.paths < 10 * cells {
                return Err(Error::TooFewPaths {
                    got: mc.paths,
                    required: 10 * cells,
                });
            }
        }
        ConditionalEstimator::ExactAdditive => {
            if spec.beta != 0.0 {
                return Err(Error::AdditiveNoiseRequired { beta: spec.beta });
            }
            if mc.paths == 0 {
                return Err(Error::EmptyEnsemble);
            }
        }
    }

    let paths: Vec<BrownianPath> = (0..mc.paths as u64)
        .into_par_iter()
        .map(|i| sample_path(spec.grid, SeedSpec::new(mc.master_seed, i)))
        .collect();
    let simulate = |controls: &[Vec<FemFunction>]| -> Result<Vec<Vec<FemFunction>>> {
        paths
            .par_iter()
            .zip(controls)
            .map(|(p, u)| simulate_forward_given_control(u, spec, p))
            .collect()
    };

    let mut coeffs = CoefficientControl::zeros(steps, dim);
    let mut controls = vec![vec![FemFunction::zeros(dim); steps]; mc.paths];
    let mut states = simulate(&controls)?;
    let mut adjoints = controls.clone();
    let mut distances = Vec::new();
    let mut costs = Vec::new();
    let mut converged = false;

    for _ in 0..config.max_iters {
        adjoints = match mc.estimator {
            ConditionalEstimator::Regression { cells } => {
                let thetas: Vec<Vec<FemFunction>> = states
                    .par_iter()
                    .zip(&paths)
                    .map(|(x, p)| theta_accumulate(x, p, spec))
                    .collect();
                regressed_adjoints(&states, &thetas, steps, cells)?
            }
            ConditionalEstimator::ExactAdditive => {
                let y = adjoint_by_expansion(&coeffs, spec)?;
                coeffs = coeffs.lincomb(1.0 - 1.0 / kappa, &y, 1.0 / kappa);
                paths.par_iter().map(|p| y.evaluate_on_path(p)).collect()
            }
        };

        let next: Vec<Vec<FemFunction>> = controls
            .par_iter()
            .zip(&adjoints)
            .map(|(u, y)| {
                u.iter()
                    .zip(y)
                    .map(|(un, yn)| {
                        let mut out = un.scaled(1.0 - 1.0 / kappa);
                        out.axpy(1.0 / kappa, yn);
                        out
                    })
                    .collect()
            })
            .collect();
        let sq: Vec<f64> = next
            .iter()
            .zip(&controls)
            .map(|(a, b)| neumaier_sum(a.iter().zip(b).map(|(x, y)| x.sub(y).l2_norm_sq())))
            .collect();
        let distance = (tau * neumaier_sum(sq) / mc.paths as f64).sqrt();

        controls = next;
        states = simulate(&controls)?;
        distances.push(distance);
        costs.push(mean_cost(&states, &controls, spec));
        if distance < config.tol {
            converged = true;
            break;
        }
    }

    let final_cost = match costs.last() {
        Some(c) => *c,
        None => mean_cost(&states, &controls, spec),
    };
    Ok(McRun {
        controls,
        adjoints,
        report: GdReport {
            iterations_run: distances.len(),
            distances,
            costs,
            final_cost,
            converged,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fem::FemSpace;
    use crate::open_loop::exact::{gd_step_exact, kappa_bound};
    use crate::stochastics::TimeGrid;
    use std::sync::Arc;

    fn small_spec(beta: f64) -> ProblemSpec {
        let space = Arc::new(FemSpace::assemble(0.0, 1.0, 3).unwrap());
        let grid = TimeGrid::new(1.0, 4).unwrap();
        ProblemSpec::new(space, grid, beta, 1.2, |x| x * (1.0 - x) + 0.3 * x, |t, x| (1.0 + t) * x).unwrap()
    }

    #[test]
    fn accumulation_matches_direct_sum() {
        for beta in [0.0, 0.7] {
            let spec = small_spec(beta);
            for i in 0..10 {
                let path = sample_path(spec.grid, SeedSpec::new(17, i));
                let controls: Vec<FemFunction> = (0..4)
                    .map(|n| FemFunction::from_coeffs(vec![0.1 * n as f64, -0.2]))
                    .collect();
                let states = simulate_forward_given_control(&controls, &spec, &path).unwrap();
                let a = theta_accumulate(&states, &path, &spec);
                let b = theta_direct(&states, &path, &spec);
                for (x, y) in a.iter().zip(&b) {
                    assert!(x.sub(y).l2_norm() <= 1e-12);
                }
            }
        }
    }

    #[test]
    fn exact_conditioning_matches_closed_form_adjoint_on_paths() {
        let spec = small_spec(0.0);
        let cfg = GdConfig {
            kappa: kappa_bound(&spec),
            max_iters: 1,
            tol: 1e-14,
        };
        let mc = McConfig {
            paths: 10,
            master_seed: 5,
            estimator: ConditionalEstimator::ExactAdditive,
        };
        let run = gd_run_mc(&spec, &cfg, &mc).unwrap();
        let (y, _) = gd_step_exact(&CoefficientControl::zeros(4, 2), &spec, cfg.kappa).unwrap();
        for (i, realized) in run.adjoints.iter().enumerate() {
            let path = sample_path(spec.grid, SeedSpec::new(5, i as u64));
            let expect = y.evaluate_on_path(&path);
            for (a, b) in realized.iter().zip(&expect) {
                assert!(a.sub(b).l2_norm() <= 1e-10);
            }
        }
    }

    #[test]
    fn zero_data_leaves_zero_control() {
        let space = Arc::new(FemSpace::assemble(0.0, 1.0, 5).unwrap());
        let grid = TimeGrid::new(1.0, 6).unwrap();
        let spec = ProblemSpec::new(space, grid, 0.8, 1.0, |_| 0.0, |_, _| 0.0).unwrap();
        let cfg = GdConfig::at_bound(&spec, 3, 1e-12);
        let mc = McConfig {
            paths: 80,
            master_seed: 1,
            estimator: ConditionalEstimator::Regression { cells: 8 },
        };
        let run = gd_run_mc(&spec, &cfg, &mc).unwrap();
        assert!(run.controls.iter().flatten().all(|u| u.l2_norm() == 0.0));
        assert!(run.report.converged);
    }

    #[test]
    fn path_budget_is_enforced() {
        let spec = small_spec(0.5);
        let cfg = GdConfig::at_bound(&spec, 3, 1e-8);
        let mc = McConfig {
            paths: 50,
            master_seed: 1,
            estimator: ConditionalEstimator::Regression { cells: 8 },
        };
        assert!(matches!(gd_run_mc(&spec, &cfg, &mc), Err(Error::TooFewPaths { .. })));
        let exact = McConfig {
            estimator: ConditionalEstimator::ExactAdditive,
            ..mc
        };
        assert!(matches!(gd_run_mc(&spec, &cfg, &exact), Err(Error::AdditiveNoiseRequired { .. })));
    }

    #[test]
    fn regression_descent_lowers_cost_with_multiplicative_noise() {
        let space = Arc::new(FemSpace::assemble(0.0, 1.0, 5).unwrap());
        let grid = TimeGrid::new(1.0, 8).unwrap();
        let spec = ProblemSpec::new(space, grid, 0.7, 1.0, |x| (std::f64::consts::PI * x).sin(), |_, x| x).unwrap();
        let cfg = GdConfig::at_bound(&spec, 15, 1e-6);
        let mc = McConfig {
            paths: 800,
            master_seed: 3,
            estimator: ConditionalEstimator::Regression { cells: 16 },
        };
        let run = gd_run_mc(&spec, &cfg, &mc).unwrap();
        let paths: Vec<BrownianPath> = (0..800).map(|i| sample_path(grid, SeedSpec::new(3, i))).collect();
        let zero = vec![vec![FemFunction::zeros(4); 8]; 800];
        let free: Vec<Vec<FemFunction>> = paths
            .iter()
            .zip(&zero)
            .map(|(p, u)| simulate_forward_given_control(u, &spec, p).unwrap())
            .collect();
        let uncontrolled = mean_cost(&free, &zero, &spec);
        assert!(run.report.final_cost < uncontrolled);
        let d = &run.report.distances;
        assert!(d.last().unwrap() < &d[0]);
    }
}
