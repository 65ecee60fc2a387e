//! Backward difference Riccati recursions, the affine η recursion, the
//! semi-discrete Riccati ODE in closed form, and a brute-force value-function
//! oracle for small deterministic LQ problems.
//!
//! Every coefficient of the recursions is a function of `Δ_h`, so in spectral
//! coordinates each `P_n` is diagonal and the recursion splits into one scalar
//! map per mode. The dense path runs the same recursion with matrices and
//! symmetric positive-definite solves.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::fem::{FemFunction, FemSpace};
use crate::problem::ProblemSpec;
use crate::stochastics::TimeGrid;

/// Largest `(N - l) * dim` accepted by [`brute_force_lq_value`].
pub const BRUTE_FORCE_LIMIT: usize = 64;

/// Dense matrices are kept under [`DenseStorage::Auto`] while
/// `dim² (N + 1)` stays below this many entries.
pub const DENSE_AUTO_LIMIT: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RiccatiScheme {
    /// Step operator `(I - τ(Δ_h + β²/2))^{-1}`; needs `1 + τ(λ_i - β²/2) > 0`.
    V1,
    /// Heat step `(I - τΔ_h)^{-1}` with the factor `1 + β²τ/2`; always defined.
    V2,
}

impl std::fmt::Display for RiccatiScheme {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RiccatiScheme::V1 => write!(f, "v1"),
            RiccatiScheme::V2 => write!(f, "v2"),
        }
    }
}

impl std::str::FromStr for RiccatiScheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "v1" => Ok(RiccatiScheme::V1),
            "v2" => Ok(RiccatiScheme::V2),
            other => Err(Error::Config(format!("unknown scheme '{other}' (v1 or v2)"))),
        }
    }
}

/// Whether the dense representation is computed alongside the diagonal one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DenseStorage {
    #[default]
    Auto,
    Always,
    Never,
}

/// An operator that is diagonal in spectral coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct DiagonalOp {
    pub entries: Vec<f64>,
}

impl DiagonalOp {
    pub fn identity(dim: usize) -> Self {
        Self::constant(dim, 1.0)
    }

    pub fn constant(dim: usize, value: f64) -> Self {
        Self {
            entries: vec![value; dim],
        }
    }

    pub fn apply(&self, v: &FemFunction) -> FemFunction {
        FemFunction {
            coeffs: self.entries.iter().zip(&v.coeffs).map(|(p, c)| p * c).collect(),
        }
    }

    /// `(P v, v)`
    pub fn quadratic_form(&self, v: &FemFunction) -> f64 {
        self.entries.iter().zip(&v.coeffs).map(|(p, c)| p * c * c).sum()
    }

    /// Operator norm on L², the largest entry in absolute value.
    pub fn norm(&self) -> f64 {
        self.entries.iter().fold(0.0, |m, p| m.max(p.abs()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        DMatrix::from_diagonal(&DVector::from_column_slice(&self.entries))
    }
}

/// `P_0, …, P_N` of one scheme on one grid.
#[derive(Debug, Clone)]
pub struct RiccatiSolution {
    pub scheme: RiccatiScheme,
    pub grid: TimeGrid,
    pub diagonal: Vec<DiagonalOp>,
    pub dense: Option<Vec<DMatrix<f64>>>,
    /// The scheme's step operator (V1: shifted, V2: heat step).
    pub step: DiagonalOp,
}

impl RiccatiSolution {
    pub fn dim(&self) -> usize {
        self.step.entries.len()
    }

    pub fn at(&self, n: usize) -> &DiagonalOp {
        &self.diagonal[n]
    }

    /// Largest entrywise gap between the two representations, if both exist.
    pub fn representation_gap(&self) -> Option<f64> {
        let dense = self.dense.as_ref()?;
        Some(
            self.diagonal
                .iter()
                .zip(dense)
                .map(|(d, m)| (m - d.to_dense()).amax())
                .fold(0.0, f64::max),
        )
    }

    /// `max_n ‖P_n‖`
    pub fn max_norm(&self) -> f64 {
        self.diagonal.iter().map(DiagonalOp::norm).fold(0.0, f64::max)
    }
}

fn step_factors(
    space: &FemSpace,
    tau: f64,
    beta: f64,
    scheme: RiccatiScheme,
) -> Result<(Vec<f64>, f64)> {
    match scheme {
        RiccatiScheme::V1 => {
            let shift = 0.5 * beta * beta;
            let mut a = Vec::with_capacity(space.dim());
            for (mode, &lambda) in space.eigenvalues.iter().enumerate() {
                let value = 1.0 + tau * (lambda - shift);
                if !(value > 0.0) {
                    return Err(Error::RiccatiGuard {
                        mode,
                        lambda,
                        tau,
                        value,
                    });
                }
                a.push(1.0 / value);
            }
            Ok((a, 1.0))
        }
        RiccatiScheme::V2 => Ok((
            space.eigenvalues.iter().map(|l| 1.0 / (1.0 + tau * l)).collect(),
            1.0 + 0.5 * beta * beta * tau,
        )),
    }
}

/// Per-mode scalar step: `p ↦ c²G/(1 + τG) + τ` with `G = a²p`.
///
/// Algebraically equal to `c²G + τ - τ(cG)²/(1 + τG)`, without the cancellation.
#[inline]
fn scalar_step(p_next: f64, a: f64, c: f64, tau: f64) -> f64 {
    let g = a * a * p_next;
    c * c * g / (1.0 + tau * g) + tau
}

fn dense_step(p_next: &DMatrix<f64>, a: &[f64], c: f64, tau: f64) -> Result<DMatrix<f64>> {
    let dim = a.len();
    let g = DMatrix::from_fn(dim, dim, |i, j| a[i] * p_next[(i, j)] * a[j]);
    let h = &g * c;
    let k = DMatrix::identity(dim, dim) + &g * tau;
    let chol = k
        .cholesky()
        .ok_or_else(|| Error::Eigen("I + τ A P A is not positive definite".into()))?;
    let k_inv_h = chol.solve(&h);
    let mut p = &g * (c * c) - (&h * k_inv_h) * tau;
    for i in 0..dim {
        p[(i, i)] += tau;
    }
    Ok(p)
}

/// Run the backward recursion `P_N = αI`, `P_n = c²G + τI − τ H K⁻¹ H` with
/// `G = A P_{n+1} A`, `H = cG`, `K = I + τG`.
pub fn solve_riccati(
    space: &FemSpace,
    grid: TimeGrid,
    beta: f64,
    alpha: f64,
    scheme: RiccatiScheme,
    storage: DenseStorage,
) -> Result<RiccatiSolution> {
    let dim = space.dim();
    let tau = grid.tau();
    let steps = grid.steps;
    let (a, c) = step_factors(space, tau, beta, scheme)?;

    let mut diagonal = vec![DiagonalOp::constant(dim, alpha); steps + 1];
    for n in (0..steps).rev() {
        let entries = diagonal[n + 1]
            .entries
            .iter()
            .zip(&a)
            .map(|(&p, &ai)| scalar_step(p, ai, c, tau))
            .collect();
        diagonal[n] = DiagonalOp { entries };
    }

    let keep_dense = match storage {
        DenseStorage::Always => true,
        DenseStorage::Never => false,
        DenseStorage::Auto => dim * dim * (steps + 1) <= DENSE_AUTO_LIMIT,
    };
    let dense = if keep_dense {
        let mut mats = vec![DMatrix::zeros(dim, dim); steps + 1];
        mats[steps] = DMatrix::identity(dim, dim) * alpha;
        for n in (0..steps).rev() {
            mats[n] = dense_step(&mats[n + 1], &a, c, tau)?;
        }
        Some(mats)
    } else {
        None
    };

    Ok(RiccatiSolution {
        scheme,
        grid,
        diagonal,
        dense,
        step: DiagonalOp { entries: a },
    })
}

pub fn solve_riccati_v1(
    space: &FemSpace,
    grid: TimeGrid,
    beta: f64,
    alpha: f64,
) -> Result<RiccatiSolution> {
    solve_riccati(space, grid, beta, alpha, RiccatiScheme::V1, DenseStorage::Auto)
}

pub fn solve_riccati_v2(
    space: &FemSpace,
    grid: TimeGrid,
    beta: f64,
    alpha: f64,
) -> Result<RiccatiSolution> {
    solve_riccati(space, grid, beta, alpha, RiccatiScheme::V2, DenseStorage::Auto)
}

/// Closed-form solution of `p' = p² + 2ap − 1`, `p(T) = α`, with
/// `a = λ − β²/2`, evaluated a time `time_to_go = T − t` before the horizon.
pub fn scalar_riccati_ode(lambda: f64, beta: f64, alpha: f64, time_to_go: f64) -> f64 {
    let a = lambda - 0.5 * beta * beta;
    let s = (a * a + 1.0).sqrt();
    // roots of p² + 2ap − 1: r1 > 0 > r2
    let r1 = if a > 0.0 { 1.0 / (a + s) } else { s - a };
    let r2 = -1.0 / r1;
    let q = (alpha - r1) / (alpha - r2) * (-2.0 * s * time_to_go).exp();
    r1 + 2.0 * s * q / (1.0 - q)
}

/// Diagonals of the semi-discrete Riccati solution `P_h(t)` at `eval_times`.
pub fn solve_riccati_ode_reference(
    space: &FemSpace,
    beta: f64,
    alpha: f64,
    horizon: f64,
    eval_times: &[f64],
) -> Result<Vec<DiagonalOp>> {
    eval_times
        .iter()
        .map(|&t| {
            if !(0.0..=horizon).contains(&t) {
                return Err(Error::InvalidArgument(format!(
                    "evaluation time {t} outside [0, {horizon}]"
                )));
            }
            Ok(DiagonalOp {
                entries: space
                    .eigenvalues
                    .iter()
                    .map(|&l| scalar_riccati_ode(l, beta, alpha, horizon - t))
                    .collect(),
            })
        })
        .collect()
}

/// `η_0, …, η_N` of the affine part of the feedback law.
#[derive(Debug, Clone, PartialEq)]
pub struct EtaSequence {
    pub eta: Vec<FemFunction>,
}

/// `η_N = 0`, `η_n = A_0[η_{n+1} + τ(−P_{n+1}η_{n+1} + β P_{n+1} Π_hσ(t_{n+1}))]`
/// with the heat step `A_0 = (I − τΔ_h)^{-1}`.
pub fn solve_eta(riccati: &RiccatiSolution, spec: &ProblemSpec) -> Result<EtaSequence> {
    let dim = spec.dim();
    if riccati.grid != spec.grid {
        return Err(Error::InvalidArgument(
            "Riccati solution and problem use different time grids".into(),
        ));
    }
    if riccati.dim() != dim {
        return Err(Error::DimensionMismatch {
            expected: dim,
            found: riccati.dim(),
        });
    }
    let tau = spec.tau();
    let beta = spec.beta;
    let a0 = spec.heat_step();
    let steps = spec.grid.steps;

    let mut eta = vec![FemFunction::zeros(dim); steps + 1];
    for n in (0..steps).rev() {
        let p = &riccati.diagonal[n + 1].entries;
        let sigma = &spec.noise[n + 1].coeffs;
        let next = &eta[n + 1].coeffs;
        let coeffs = (0..dim)
            .map(|i| a0[i] * (next[i] + tau * p[i] * (beta * sigma[i] - next[i])))
            .collect();
        eta[n] = FemFunction { coeffs };
    }
    Ok(EtaSequence { eta })
}

/// Twice the optimal cost of the deterministic LQ problem started from `z`
/// at `t_l`, found by minimizing over all stacked controls `u_l … u_{N−1}` at
/// once in nodal coordinates.
///
/// The dynamics are `x_{n+1} = S(x_n + τu_n)` with `S = (M + τK − τβ²M/2)⁻¹M`
/// for [`RiccatiScheme::V1`] and `x_{n+1} = cRx_n + τRu_n` with
/// `R = (M + τK)⁻¹M`, `c = 1 + β²τ/2` for [`RiccatiScheme::V2`]; the cost is
/// `½τ Σ_{n=l}^{N−1}(|x_n|² + |u_n|²) + ½α|x_N|²`.
pub fn brute_force_lq_value(
    space: &FemSpace,
    grid: TimeGrid,
    beta: f64,
    alpha: f64,
    start: usize,
    z: &FemFunction,
    scheme: RiccatiScheme,
) -> Result<f64> {
    let d = space.dim();
    let steps = grid.steps;
    if start >= steps {
        return Err(Error::InvalidArgument(format!(
            "start index {start} must be below N = {steps}"
        )));
    }
    if z.dim() != d {
        return Err(Error::DimensionMismatch {
            expected: d,
            found: z.dim(),
        });
    }
    let m = steps - start;
    let size = m * d;
    if size > BRUTE_FORCE_LIMIT {
        return Err(Error::SizeGuard {
            size,
            limit: BRUTE_FORCE_LIMIT,
        });
    }

    let tau = grid.tau();
    let mass = &space.mass;
    let lhs = match scheme {
        RiccatiScheme::V1 => mass * (1.0 - 0.5 * tau * beta * beta) + &space.stiffness * tau,
        RiccatiScheme::V2 => mass + &space.stiffness * tau,
    };
    let solve = |rhs: &DMatrix<f64>| {
        lhs.clone()
            .lu()
            .solve(rhs)
            .ok_or_else(|| Error::Eigen("singular step matrix".into()))
    };
    let base = solve(mass)?;
    let (state_map, control_map) = match scheme {
        RiccatiScheme::V1 => (base.clone(), &base * tau),
        RiccatiScheme::V2 => (&base * (1.0 + 0.5 * beta * beta * tau), &base * tau),
    };

    let z_nodal = DVector::from_vec(space.nodal_values(z));
    let mut free = z_nodal.clone();
    let mut forced = DMatrix::<f64>::zeros(d, size);
    let mut hessian = DMatrix::<f64>::zeros(size, size);
    let mut linear = DVector::<f64>::zeros(size);
    let mut constant = 0.0;

    for n in start..=steps {
        let weight = if n < steps { tau } else { alpha };
        let m_forced = mass * &forced;
        hessian += forced.transpose() * &m_forced * weight;
        linear += m_forced.transpose() * &free * weight;
        constant += 0.5 * weight * free.dot(&(mass * &free));
        if n < steps {
            let j = n - start;
            let mut block = hessian.view_mut((j * d, j * d), (d, d));
            block += mass * tau;
            free = &state_map * &free;
            forced = &state_map * &forced;
            let mut block = forced.view_mut((0, j * d), (d, d));
            block += &control_map;
        }
    }

    let chol = hessian
        .cholesky()
        .ok_or_else(|| Error::Eigen("normal equations are not positive definite".into()))?;
    let u = chol.solve(&linear);
    let minimum = constant - 0.5 * linear.dot(&u);
    Ok(2.0 * minimum)
}
