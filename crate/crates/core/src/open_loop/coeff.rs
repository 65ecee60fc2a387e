//! Deterministic-coefficient representation of adapted controls and the
//! second-moment algebra it lives in.
//!
//! Random variables are expanded over `1`, `P_m = ∏_{i≤m}(1 + Δ_iW)` and
//! `D_m = Δ_mW` (`m = 1..N`), whose mixed moments are
//! `E[P_m P_m'] = (1+τ)^{min(m,m')}`, `E[P_m D_m'] = τ·1{m' ≤ m}`,
//! `E[D_m D_m'] = τ δ_{mm'}` and `E[P_m] = 1`, `E[D_m] = 0`.

use crate::error::{Error, Result};
use crate::fem::FemFunction;
use crate::stochastics::BrownianPath;

/// `U_n = Σ_{m=1}^n P_m f[n][m] + Σ_{m=1}^n D_m f̃[n][m] + g[n]`, `n = 0..N-1`.
///
/// `f[n]` and `ftilde[n]` hold `n` entries, `f[n][m - 1]` being the
/// coefficient of `P_m`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientControl {
    pub steps: usize,
    pub dim: usize,
    pub f: Vec<Vec<FemFunction>>,
    pub ftilde: Vec<Vec<FemFunction>>,
    pub g: Vec<FemFunction>,
}

impl CoefficientControl {
    pub fn zeros(steps: usize, dim: usize) -> Self {
        let tri = |_| (0..steps).map(|n| vec![FemFunction::zeros(dim); n]).collect();
        Self {
            steps,
            dim,
            f: tri(()),
            ftilde: tri(()),
            g: vec![FemFunction::zeros(dim); steps],
        }
    }

    /// A control with deterministic values `g` only.
    pub fn deterministic(g: Vec<FemFunction>) -> Result<Self> {
        let steps = g.len();
        let dim = g.first().map(FemFunction::dim).ok_or(Error::EmptyEnsemble)?;
        let mut u = Self::zeros(steps, dim);
        u.g = g;
        u.validate()?;
        Ok(u)
    }

    /// Check the triangular shape and coefficient lengths.
    pub fn validate(&self) -> Result<()> {
        let bad = |expected, found| Err(Error::DimensionMismatch { expected, found });
        if self.f.len() != self.steps || self.ftilde.len() != self.steps || self.g.len() != self.steps {
            return bad(self.steps, self.f.len().min(self.ftilde.len()).min(self.g.len()));
        }
        for n in 0..self.steps {
            if self.f[n].len() != n {
                return bad(n, self.f[n].len());
            }
            if self.ftilde[n].len() != n {
                return bad(n, self.ftilde[n].len());
            }
        }
        let all = self.f.iter().flatten().chain(self.ftilde.iter().flatten()).chain(&self.g);
        for v in all {
            if v.dim() != self.dim {
                return bad(self.dim, v.dim());
            }
        }
        Ok(())
    }

    /// `a·self + b·other`, coefficientwise.
    pub fn lincomb(&self, a: f64, other: &CoefficientControl, b: f64) -> CoefficientControl {
        let mix = |x: &FemFunction, y: &FemFunction| {
            let mut out = x.scaled(a);
            out.axpy(b, y);
            out
        };
        let tri = |x: &[Vec<FemFunction>], y: &[Vec<FemFunction>]| {
            x.iter()
                .zip(y)
                .map(|(rx, ry)| rx.iter().zip(ry).map(|(p, q)| mix(p, q)).collect())
                .collect()
        };
        CoefficientControl {
            steps: self.steps,
            dim: self.dim,
            f: tri(&self.f, &other.f),
            ftilde: tri(&self.ftilde, &other.ftilde),
            g: self.g.iter().zip(&other.g).map(|(p, q)| mix(p, q)).collect(),
        }
    }

    pub fn sub(&self, other: &CoefficientControl) -> CoefficientControl {
        self.lincomb(1.0, other, -1.0)
    }

    /// Plug one path's increments into the representation.
    pub fn evaluate_on_path(&self, path: &BrownianPath) -> Vec<FemFunction> {
        let mut products = Vec::with_capacity(self.steps);
        let mut running = 1.0;
        for m in 1..self.steps {
            running *= 1.0 + path.dw(m);
            products.push(running);
        }
        (0..self.steps)
            .map(|n| {
                let mut u = self.g[n].clone();
                for m in 1..=n {
                    u.axpy(products[m - 1], &self.f[n][m - 1]);
                    u.axpy(path.dw(m), &self.ftilde[n][m - 1]);
                }
                u
            })
            .collect()
    }

    /// `U_n` as an element of the moment algebra.
    pub fn expansion(&self, n: usize) -> Expansion {
        let mut e = Expansion::zeros(self.steps, self.dim);
        e.constant = self.g[n].coeffs.clone();
        for m in 1..=n {
            e.product[m] = self.f[n][m - 1].coeffs.clone();
            e.increment[m] = self.ftilde[n][m - 1].coeffs.clone();
        }
        e
    }

    /// Inverse of [`expansion`](Self::expansion) for expansions measurable at `t_n`.
    pub(crate) fn set_from_expansion(&mut self, n: usize, e: &Expansion) {
        self.g[n] = FemFunction::from_coeffs(e.constant.clone());
        for m in 1..=n {
            self.f[n][m - 1] = FemFunction::from_coeffs(e.product[m].clone());
            self.ftilde[n][m - 1] = FemFunction::from_coeffs(e.increment[m].clone());
        }
    }
}

/// See [`CoefficientControl::evaluate_on_path`].
pub fn evaluate_control_on_path(u: &CoefficientControl, path: &BrownianPath) -> Vec<FemFunction> {
    u.evaluate_on_path(path)
}

/// A `V_h`-valued random variable `c + Σ_m P_m p_m + Σ_m D_m d_m`.
///
/// `product[0]` and `increment[0]` are unused and stay zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Expansion {
    pub constant: Vec<f64>,
    pub product: Vec<Vec<f64>>,
    pub increment: Vec<Vec<f64>>,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn axpy(y: &mut [f64], s: f64, x: &[f64]) {
    for (a, b) in y.iter_mut().zip(x) {
        *a += s * b;
    }
}

impl Expansion {
    pub fn zeros(steps: usize, dim: usize) -> Self {
        Self {
            constant: vec![0.0; dim],
            product: vec![vec![0.0; dim]; steps + 1],
            increment: vec![vec![0.0; dim]; steps + 1],
        }
    }

    pub fn deterministic(steps: usize, values: &[f64]) -> Self {
        let mut e = Self::zeros(steps, values.len());
        e.constant = values.to_vec();
        e
    }

    /// `self += s · other`
    pub fn add_scaled(&mut self, s: f64, other: &Expansion) {
        axpy(&mut self.constant, s, &other.constant);
        for (a, b) in self.product.iter_mut().zip(&other.product) {
            axpy(a, s, b);
        }
        for (a, b) in self.increment.iter_mut().zip(&other.increment) {
            axpy(a, s, b);
        }
    }

    /// Apply a diagonal operator to every coefficient.
    pub fn scale_modes(&mut self, diag: &[f64]) {
        let apply = |v: &mut Vec<f64>| v.iter_mut().zip(diag).for_each(|(a, d)| *a *= d);
        apply(&mut self.constant);
        self.product.iter_mut().for_each(apply);
        self.increment.iter_mut().for_each(apply);
    }

    /// `E^{t_n}[·]`: `P_m ↦ P_{min(m,n)}` (`P_0 = 1`) and `D_m ↦ 0` for `m > n`.
    pub fn conditional(&self, n: usize) -> Expansion {
        let steps = self.product.len() - 1;
        let mut out = self.clone();
        for m in (n + 1)..=steps {
            let moved = std::mem::replace(&mut out.product[m], vec![0.0; self.constant.len()]);
            if n == 0 {
                axpy(&mut out.constant, 1.0, &moved);
            } else {
                axpy(&mut out.product[n], 1.0, &moved);
            }
            out.increment[m].iter_mut().for_each(|v| *v = 0.0);
        }
        out
    }

    /// `E⟨self, other⟩_{L²}` in `O(N·dim)` using suffix sums of the product terms.
    pub fn inner(&self, other: &Expansion, tau: f64) -> f64 {
        let steps = self.product.len() - 1;
        let dim = self.constant.len();
        // suffix[k] = Σ_{m ≥ k} p_m
        let suffix = |p: &[Vec<f64>]| {
            let mut s = vec![vec![0.0; dim]; steps + 2];
            for k in (1..=steps).rev() {
                let (head, tail) = s.split_at_mut(k + 1);
                head[k].copy_from_slice(&tail[0]);
                axpy(&mut head[k], 1.0, &p[k]);
            }
            s
        };
        let sa = suffix(&self.product);
        let sb = suffix(&other.product);

        let mut total = dot(&self.constant, &other.constant);
        if steps >= 1 {
            total += dot(&self.constant, &sb[1]) + dot(&sa[1], &other.constant);
            total += dot(&sa[1], &sb[1]);
        }
        // (1+τ)^{min(m,m')} = 1 + Σ_{k=1}^{min} τ(1+τ)^{k-1}
        let mut weight = tau;
        for k in 1..=steps {
            total += weight * dot(&sa[k], &sb[k]);
            weight *= 1.0 + tau;
            // E[P_m D_k] = τ for k ≤ m
            total += tau * (dot(&sa[k], &other.increment[k]) + dot(&self.increment[k], &sb[k]));
            total += tau * dot(&self.increment[k], &other.increment[k]);
        }
        total
    }

    pub fn second_moment(&self, tau: f64) -> f64 {
        self.inner(self, tau)
    }

    /// Realization along a path.
    pub fn evaluate(&self, path: &BrownianPath) -> Vec<f64> {
        let mut out = self.constant.clone();
        let mut running = 1.0;
        for m in 1..self.product.len() {
            running *= 1.0 + path.dw(m);
            axpy(&mut out, running, &self.product[m]);
            axpy(&mut out, path.dw(m), &self.increment[m]);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stochastics::{sample_path, SeedSpec, TimeGrid};

    fn random_expansion(steps: usize, dim: usize, seed: u64) -> Expansion {
        let grid = TimeGrid::new(1.0, 4 * (steps + 1) * dim).unwrap();
        let mut draws = sample_path(grid, SeedSpec::new(seed, 0)).increments.into_iter();
        let mut next = || (0..dim).map(|_| draws.next().unwrap()).collect::<Vec<f64>>();
        let mut e = Expansion::zeros(steps, dim);
        e.constant = next();
        for m in 1..=steps {
            e.product[m] = next();
            e.increment[m] = next();
        }
        e
    }

    /// Pairwise moment sum, quadratic in `N`.
    fn inner_pairwise(a: &Expansion, b: &Expansion, tau: f64) -> f64 {
        let steps = a.product.len() - 1;
        let mut t = dot(&a.constant, &b.constant);
        for m in 1..=steps {
            t += dot(&a.constant, &b.product[m]) + dot(&a.product[m], &b.constant);
            t += tau * dot(&a.increment[m], &b.increment[m]);
            for k in 1..=steps {
                t += (1.0 + tau).powi(m.min(k) as i32) * dot(&a.product[m], &b.product[k]);
                if k <= m {
                    t += tau * (dot(&a.product[m], &b.increment[k]) + dot(&a.increment[k], &b.product[m]));
                }
            }
        }
        t
    }

    #[test]
    fn suffix_sum_inner_matches_pairwise_sum() {
        for (steps, tau) in [(1, 0.5), (5, 0.2), (12, 1.0 / 12.0)] {
            let a = random_expansion(steps, 3, 1);
            let b = random_expansion(steps, 3, 2);
            let fast = a.inner(&b, tau);
            let slow = inner_pairwise(&a, &b, tau);
            assert!((fast - slow).abs() < 1e-12 * slow.abs().max(1.0));
        }
    }

    #[test]
    fn conditioning_collapses_future_products() {
        let e = random_expansion(4, 2, 3);
        let c = e.conditional(2);
        for k in 0..2 {
            let expect = e.product[2][k] + e.product[3][k] + e.product[4][k];
            assert!((c.product[2][k] - expect).abs() < 1e-15);
            assert_eq!(c.increment[3][k], 0.0);
            assert_eq!(c.product[4][k], 0.0);
        }
        let c0 = e.conditional(0);
        let expect: f64 = e.constant[0] + (1..=4).map(|m| e.product[m][0]).sum::<f64>();
        assert!((c0.constant[0] - expect).abs() < 1e-15);
    }

    #[test]
    fn path_evaluation_agrees_with_expansion() {
        let grid = TimeGrid::new(1.0, 5).unwrap();
        let mut u = CoefficientControl::zeros(5, 2);
        u.g[3] = FemFunction::from_coeffs(vec![1.0, 2.0]);
        u.f[3][1] = FemFunction::from_coeffs(vec![0.5, -1.0]);
        u.ftilde[4][3] = FemFunction::from_coeffs(vec![2.0, 0.0]);
        let path = sample_path(grid, SeedSpec::new(8, 1));
        let direct = u.evaluate_on_path(&path);
        for n in 0..5 {
            let via = u.expansion(n).evaluate(&path);
            for k in 0..2 {
                assert!((direct[n].coeffs[k] - via[k]).abs() < 1e-14);
            }
        }
        let zero_path = BrownianPath::zero(grid);
        let at_zero = u.evaluate_on_path(&zero_path);
        assert_eq!(at_zero[3].coeffs, vec![1.5, 1.0]);
        assert_eq!(at_zero[4].coeffs, vec![0.0, 0.0]);
    }

    #[test]
    fn shape_validation() {
        let mut u = CoefficientControl::zeros(4, 3);
        assert!(u.validate().is_ok());
        u.f[2].pop();
        assert!(u.validate().is_err());
        let v = CoefficientControl::deterministic(vec![FemFunction::zeros(2); 3]).unwrap();
        assert!(v.f.iter().flatten().all(|c| c.l2_norm() == 0.0));
    }
}
