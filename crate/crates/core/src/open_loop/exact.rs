//! Gradient descent for additive noise with exactly represented conditional
//! expectations.

use crate::error::{Error, Result};
use crate::problem::ProblemSpec;

use super::coeff::{CoefficientControl, Expansion};

/// `1 + αT e^{β²T} + T² e^{β²T}`
pub fn kappa_bound(spec: &ProblemSpec) -> f64 {
    let t = spec.grid.horizon;
    let growth = (spec.beta * spec.beta * t).exp();
    1.0 + spec.alpha * t * growth + t * t * growth
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GdConfig {
    pub kappa: f64,
    pub max_iters: usize,
    pub tol: f64,
}

impl GdConfig {
    /// Step denominator at the admissible bound.
    pub fn at_bound(spec: &ProblemSpec, max_iters: usize, tol: f64) -> Self {
        Self {
            kappa: kappa_bound(spec),
            max_iters,
            tol,
        }
    }

    pub fn check(&self, spec: &ProblemSpec) -> Result<()> {
        let bound = kappa_bound(spec);
        // the bound is evaluated in floating point; allow for rounding in it
        if !(self.kappa >= bound * (1.0 - 1e-12)) {
            return Err(Error::KappaTooSmall {
                kappa: self.kappa,
                bound,
            });
        }
        if !(self.tol > 0.0) {
            return Err(Error::InvalidArgument(format!("tol must be positive, got {}", self.tol)));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GdReport {
    pub iterations_run: usize,
    /// `‖U^{(ℓ+1)} − U^{(ℓ)}‖` for each iteration.
    pub distances: Vec<f64>,
    /// Cost of `U^{(ℓ+1)}` for each iteration.
    pub costs: Vec<f64>,
    pub final_cost: f64,
    pub converged: bool,
}

fn require_additive(spec: &ProblemSpec) -> Result<()> {
    if spec.beta != 0.0 {
        return Err(Error::AdditiveNoiseRequired { beta: spec.beta });
    }
    Ok(())
}

fn check_shape(u: &CoefficientControl, spec: &ProblemSpec) -> Result<()> {
    u.validate()?;
    if u.steps != spec.grid.steps {
        return Err(Error::DimensionMismatch {
            expected: spec.grid.steps,
            found: u.steps,
        });
    }
    if u.dim != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            found: u.dim,
        });
    }
    Ok(())
}

/// `‖U‖²_𝕌 = τ Σ_n E‖U_n‖²`
pub fn control_norm_sq_exact(u: &CoefficientControl, tau: f64) -> f64 {
    (0..u.steps).map(|n| u.expansion(n).second_moment(tau)).sum::<f64>() * tau
}

/// `(U, V)_𝕌 = τ Σ_n E(U_n, V_n)`
pub fn control_inner_exact(u: &CoefficientControl, v: &CoefficientControl, tau: f64) -> f64 {
    (0..u.steps)
        .map(|n| u.expansion(n).inner(&v.expansion(n), tau))
        .sum::<f64>()
        * tau
}

/// States `X_0..X_N` under `U` as expansions (additive noise only).
pub fn state_expansions(u: &CoefficientControl, spec: &ProblemSpec) -> Result<Vec<Expansion>> {
    require_additive(spec)?;
    check_shape(u, spec)?;
    let steps = spec.grid.steps;
    let tau = spec.tau();
    let a0 = spec.heat_step();
    let mut states = Vec::with_capacity(steps + 1);
    states.push(Expansion::deterministic(steps, &spec.initial.coeffs));
    for n in 0..steps {
        let mut next = states[n].clone();
        next.add_scaled(tau, &u.expansion(n));
        let noise = &spec.noise[n].coeffs;
        for (a, s) in next.increment[n + 1].iter_mut().zip(noise) {
            *a += s;
        }
        next.scale_modes(&a0);
        states.push(next);
    }
    Ok(states)
}

/// Exact `𝒥(U) = ½τ Σ_{n<N} E(‖X_n‖² + ‖U_n‖²) + ½α E‖X_N‖²` for additive noise.
pub fn evaluate_cost_exact(u: &CoefficientControl, spec: &ProblemSpec) -> Result<f64> {
    let states = state_expansions(u, spec)?;
    let tau = spec.tau();
    let steps = spec.grid.steps;
    let running: f64 = states[..steps].iter().map(|x| x.second_moment(tau)).sum();
    Ok(0.5 * tau * running
        + 0.5 * control_norm_sq_exact(u, tau)
        + 0.5 * spec.alpha * states[steps].second_moment(tau))
}

/// Adjoint `Y_n = −E^{t_n}[Θ_n]` with
/// `Θ_n = τ Σ_{j=n+1}^{N-1} A_0^{j-n} X_j + α A_0^{N-n} X_N`, obtained by
/// running `Θ_{N-1} = αA_0X_N`, `Θ_n = τA_0X_{n+1} + A_0Θ_{n+1}` in the moment
/// algebra and conditioning each `Θ_n`.
pub fn adjoint_by_expansion(u: &CoefficientControl, spec: &ProblemSpec) -> Result<CoefficientControl> {
    let states = state_expansions(u, spec)?;
    let steps = spec.grid.steps;
    let tau = spec.tau();
    let a0 = spec.heat_step();
    let mut y = CoefficientControl::zeros(steps, spec.dim());
    let mut theta = states[steps].clone();
    theta.scale_modes(&vec![spec.alpha; spec.dim()]);
    theta.scale_modes(&a0);
    for n in (0..steps).rev() {
        if n + 1 < steps {
            let mut next = theta.clone();
            next.add_scaled(tau, &states[n + 1]);
            next.scale_modes(&a0);
            theta = next;
        }
        let mut cond = theta.conditional(n);
        cond.scale_modes(&vec![-1.0; spec.dim()]);
        y.set_from_expansion(n, &cond);
    }
    Ok(y)
}

/// Per-mode tables for the closed-form coefficient update.
struct ModeKernel {
    /// `A^k` for `k = 0..=2N + 1`
    pow: Vec<f64>,
    /// `geo[c] = Σ_{i<c} A^{2i}`
    geo: Vec<f64>,
}

impl ModeKernel {
    fn new(a: f64, steps: usize) -> Self {
        let mut pow = vec![1.0; 2 * steps + 2];
        for k in 1..pow.len() {
            pow[k] = pow[k - 1] * a;
        }
        let mut geo = vec![0.0; steps + 1];
        for c in 1..=steps {
            geo[c] = geo[c - 1] + pow[2 * (c - 1)];
        }
        Self { pow, geo }
    }

    /// `τ² Σ_{j=max(n,l)+1}^{N-1} A^{2j-l-n} + ατ A^{2N-l-n}`: the weight of
    /// `U_l` in `Θ_n`.
    fn weight(&self, n: usize, l: usize, steps: usize, tau: f64, alpha: f64) -> f64 {
        let k = n.max(l) + 1;
        let running = if k < steps {
            tau * tau * self.pow[2 * k - l - n] * self.geo[steps - k]
        } else {
            0.0
        };
        running + alpha * tau * self.pow[2 * steps - l - n]
    }
}

/// One step of the descent: the adjoint coefficients `F, F̃, G` in closed
/// form, then `U ← (1 − 1/κ)U + Y/κ`.
///
/// For `n = 0` the product terms of future controls collapse to their mean
/// `E[P_m] = 1` and enter `G_0`; this term vanishes whenever `f ≡ 0`.
pub fn gd_step_exact(
    u: &CoefficientControl,
    spec: &ProblemSpec,
    kappa: f64,
) -> Result<(CoefficientControl, CoefficientControl)> {
    require_additive(spec)?;
    check_shape(u, spec)?;
    let steps = spec.grid.steps;
    let dim = spec.dim();
    let tau = spec.tau();
    let alpha = spec.alpha;
    let a0 = spec.heat_step();
    let mut y = CoefficientControl::zeros(steps, dim);

    for (i, &a) in a0.iter().enumerate() {
        let kern = ModeKernel::new(a, steps);
        let w: Vec<Vec<f64>> = (0..steps)
            .map(|n| (0..steps).map(|l| kern.weight(n, l, steps, tau, alpha)).collect())
            .collect();
        let f = |l: usize, m: usize| u.f[l][m - 1].coeffs[i];
        let ft = |l: usize, m: usize| u.ftilde[l][m - 1].coeffs[i];
        let x = spec.initial.coeffs[i];

        for n in 0..steps {
            // tail[l] = Σ_{m=n+1}^{l} f[l][m]
            let tail: Vec<f64> = (0..steps)
                .map(|l| ((n + 1)..=l).map(|m| f(l, m)).sum())
                .collect();

            for m in 1..n {
                let s: f64 = (m..steps).map(|l| w[n][l] * f(l, m)).sum();
                y.f[n][m - 1].coeffs[i] = -s;
            }
            if n >= 1 {
                let s: f64 = (n..steps).map(|l| w[n][l] * (f(l, n) + tail[l])).sum();
                y.f[n][n - 1].coeffs[i] = -s;
            }
            let later = if n + 1 < steps { kern.geo[steps - 1 - n] } else { 0.0 };
            for m in 1..=n {
                let sigma = spec.noise[m - 1].coeffs[i];
                let s: f64 = (m..steps).map(|l| w[n][l] * ft(l, m)).sum();
                let forced = tau * kern.pow[n + 3 - m] * later + alpha * kern.pow[2 * steps + 1 - m - n];
                y.ftilde[n][m - 1].coeffs[i] = -s - forced * sigma;
            }
            let mut gsum: f64 = (0..steps).map(|l| w[n][l] * u.g[l].coeffs[i]).sum();
            if n == 0 {
                gsum += (1..steps).map(|l| w[0][l] * tail[l]).sum::<f64>();
            }
            let free = tau * kern.pow[n + 2] * later + alpha * kern.pow[2 * steps - n];
            y.g[n].coeffs[i] = -free * x - gsum;
        }
    }

    let next = u.lincomb(1.0 - 1.0 / kappa, &y, 1.0 / kappa);
    Ok((y, next))
}

/// Iterate [`gd_step_exact`] until successive iterates are within `tol` in `𝕌`.
pub fn gd_run(
    spec: &ProblemSpec,
    config: &GdConfig,
    initial: CoefficientControl,
) -> Result<(CoefficientControl, GdReport)> {
    require_additive(spec)?;
    config.check(spec)?;
    check_shape(&initial, spec)?;
    let tau = spec.tau();
    let mut u = initial;
    let mut distances = Vec::new();
    let mut costs = Vec::new();
    let mut converged = false;
    for _ in 0..config.max_iters {
        let (_, next) = gd_step_exact(&u, spec, config.kappa)?;
        let distance = control_norm_sq_exact(&next.sub(&u), tau).max(0.0).sqrt();
        u = next;
        distances.push(distance);
        costs.push(evaluate_cost_exact(&u, spec)?);
        if distance < config.tol {
            converged = true;
            break;
        }
    }
    let final_cost = match costs.last() {
        Some(c) => *c,
        None => evaluate_cost_exact(&u, spec)?,
    };
    Ok((
        u,
        GdReport {
            iterations_run: distances.len(),
            distances,
            costs,
            final_cost,
            converged,
        },
    ))
}
