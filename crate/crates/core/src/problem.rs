//! Problem data: coupling, terminal weight, horizon, initial state and noise
//! intensity, already projected onto the finite-element space.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::fem::{FemFunction, FemSpace};
use crate::stochastics::TimeGrid;

/// A discretized control problem on a fixed space and time grid.
///
/// `initial` is `Π_h x` and `noise[n]` is `Π_h σ(t_n)` for `n = 0..=N`,
/// both in spectral coordinates.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub space: Arc<FemSpace>,
    pub grid: TimeGrid,
    pub beta: f64,
    pub alpha: f64,
    pub initial: FemFunction,
    pub noise: Vec<FemFunction>,
}

impl ProblemSpec {
    /// Project `x0(x)` and `sigma(t, x)` onto the space at every grid node.
    pub fn new(
        space: Arc<FemSpace>,
        grid: TimeGrid,
        beta: f64,
        alpha: f64,
        x0: impl Fn(f64) -> f64,
        sigma: impl Fn(f64, f64) -> f64,
    ) -> Result<Self> {
        let initial = space.project_l2(&x0)?;
        let noise = grid
            .nodes()
            .into_iter()
            .map(|t| space.project_l2(|x| sigma(t, x)))
            .collect::<Result<Vec<_>>>()?;
        Self::from_discrete(space, grid, beta, alpha, initial, noise)
    }

    /// Build from data that is already in spectral coordinates.
    pub fn from_discrete(
        space: Arc<FemSpace>,
        grid: TimeGrid,
        beta: f64,
        alpha: f64,
        initial: FemFunction,
        noise: Vec<FemFunction>,
    ) -> Result<Self> {
        if !beta.is_finite() {
            return Err(Error::InvalidArgument(format!("beta must be finite, got {beta}")));
        }
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::InvalidArgument(format!("alpha must be >= 0, got {alpha}")));
        }
        let dim = space.dim();
        if initial.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: initial.dim(),
            });
        }
        if noise.len() != grid.steps + 1 {
            return Err(Error::DimensionMismatch {
                expected: grid.steps + 1,
                found: noise.len(),
            });
        }
        if let Some(bad) = noise.iter().find(|s| s.dim() != dim) {
            return Err(Error::DimensionMismatch {
                expected: dim,
                found: bad.dim(),
            });
        }
        Ok(Self {
            space,
            grid,
            beta,
            alpha,
            initial,
            noise,
        })
    }

    /// Built-in profiles on the space's interval.
    pub fn from_profiles(
        space: Arc<FemSpace>,
        grid: TimeGrid,
        beta: f64,
        alpha: f64,
        x0: &Profile,
        sigma: &Profile,
    ) -> Result<Self> {
        let (a, b) = (space.mesh.a, space.mesh.b);
        let horizon = grid.horizon;
        Self::new(
            space,
            grid,
            beta,
            alpha,
            |x| x0.eval(a, b, horizon, 0.0, x),
            |t, x| sigma.eval(a, b, horizon, t, x),
        )
    }

    pub fn dim(&self) -> usize {
        self.space.dim()
    }

    pub fn tau(&self) -> f64 {
        self.grid.tau()
    }

    /// Heat step `A_0 = (I - τΔ_h)^{-1}` as per-mode factors.
    pub fn heat_step(&self) -> Vec<f64> {
        let tau = self.tau();
        self.space
            .eigenvalues
            .iter()
            .map(|lam| 1.0 / (1.0 + tau * lam))
            .collect()
    }

    /// True when both the initial state and the noise vanish identically.
    pub fn is_trivial(&self) -> bool {
        self.initial.coeffs.iter().all(|c| *c == 0.0)
            && self.noise.iter().all(|s| s.coeffs.iter().all(|c| *c == 0.0))
    }
}

/// Named built-in functions of `(t, x)` used by the experiment configs.
///
/// Space is rescaled to `s = (x - a)/(b - a) ∈ (0, 1)` and time to `t/T`.
#[derive(Debug, Clone, PartialEq)]
pub enum Profile {
    Zero,
    /// `sin(kπs)`
    SineMode(usize),
    /// `16 s²(1-s)²`
    SmoothBump,
    /// `sin(πs)(1 + sin(πt/T)/2)`
    TimeModulatedSine,
    Scaled(f64, Box<Profile>),
}

impl Profile {
    pub fn eval(&self, a: f64, b: f64, horizon: f64, t: f64, x: f64) -> f64 {
        let s = (x - a) / (b - a);
        let pi = std::f64::consts::PI;
        match self {
            Profile::Zero => 0.0,
            Profile::SineMode(k) => (*k as f64 * pi * s).sin(),
            Profile::SmoothBump => 16.0 * s * s * (1.0 - s) * (1.0 - s),
            Profile::TimeModulatedSine => (pi * s).sin() * (1.0 + 0.5 * (pi * t / horizon).sin()),
            Profile::Scaled(c, inner) => c * inner.eval(a, b, horizon, t, x),
        }
    }

    pub fn scaled(self, c: f64) -> Profile {
        Profile::Scaled(c, Box::new(self))
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Zero => write!(f, "zero"),
            Profile::SineMode(k) => write!(f, "sine_mode({k})"),
            Profile::SmoothBump => write!(f, "smooth_bump"),
            Profile::TimeModulatedSine => write!(f, "time_modulated_sine"),
            Profile::Scaled(c, inner) => write!(f, "{c}*{inner}"),
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    /// Accepts `zero`, `sine_mode(k)`, `smooth_bump`, `time_modulated_sine`,
    /// optionally prefixed by a scale factor as in `0.5*smooth_bump`.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some((scale, rest)) = s.split_once('*') {
            let c: f64 = scale
                .trim()
                .parse()
                .map_err(|_| Error::Config(format!("bad profile scale in '{s}'")))?;
            return Ok(rest.parse::<Profile>()?.scaled(c));
        }
        match s {
            "zero" => Ok(Profile::Zero),
            "smooth_bump" => Ok(Profile::SmoothBump),
            "time_modulated_sine" => Ok(Profile::TimeModulatedSine),
            _ => {
                let k = s
                    .strip_prefix("sine_mode(")
                    .and_then(|r| r.strip_suffix(')'))
                    .and_then(|k| k.trim().parse::<usize>().ok())
                    .filter(|k| *k >= 1)
                    .ok_or_else(|| Error::Config(format!("unknown profile '{s}'")))?;
                Ok(Profile::SineMode(k))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn profile_round_trip() {
        for text in ["zero", "sine_mode(3)", "smooth_bump", "time_modulated_sine", "0.5*smooth_bump"] {
            let p: Profile = text.parse().unwrap();
            assert_eq!(p.to_string(), text);
        }
        assert!("sine_mode(0)".parse::<Profile>().is_err());
        assert!("bump".parse::<Profile>().is_err());
    }

    #[test]
    fn profiles_on_shifted_interval() {
        let p = Profile::SmoothBump;
        assert!((p.eval(0.0, 4.0, 1.0, 0.0, 2.0) - 1.0).abs() < 1e-15);
        let q = Profile::TimeModulatedSine;
        assert!((q.eval(0.0, 1.0, 2.0, 1.0, 0.5) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_inconsistent_data() {
        let space = Arc::new(FemSpace::assemble(0.0, 1.0, 4).unwrap());
        let grid = TimeGrid::new(1.0, 2).unwrap();
        let noise = vec![FemFunction::zeros(3); 3];
        assert!(ProblemSpec::from_discrete(
            space.clone(),
            grid,
            0.0,
            -1.0,
            FemFunction::zeros(3),
            noise.clone()
        )
        .is_err());
        assert!(ProblemSpec::from_discrete(
            space.clone(),
            grid,
            0.0,
            1.0,
            FemFunction::zeros(2),
            noise
        )
        .is_err());
        assert!(ProblemSpec::from_discrete(
            space,
            grid,
            0.0,
            1.0,
            FemFunction::zeros(3),
            vec![FemFunction::zeros(3); 2]
        )
        .is_err());
    }
}
