//! P1 finite elements on a uniform 1D mesh with homogeneous Dirichlet conditions.
//!
//! All solvers in this crate work in the *spectral* coordinates of the
//! discrete Laplacian: a function `v ∈ V_h` is stored through its coefficients
//! in the M-orthonormal generalized eigenbasis `K φ_i = λ_i M φ_i`. In these
//! coordinates the L² inner product is the Euclidean one and `Δ_h` acts as
//! `diag(-λ_i)`. Nodal values are only used for I/O and mesh transfer.

use nalgebra::{DMatrix, DVector, SymmetricEigen};

use crate::error::{Error, Result};

/// Three-point Gauss–Legendre rule on [-1, 1].
const GAUSS_NODES: [f64; 3] = [-0.774_596_669_241_483_4, 0.0, 0.774_596_669_241_483_4];
const GAUSS_WEIGHTS: [f64; 3] = [5.0 / 9.0, 8.0 / 9.0, 5.0 / 9.0];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mesh1D {
    pub a: f64,
    pub b: f64,
    pub n_elements: usize,
    pub h: f64,
}

impl Mesh1D {
    pub fn new(a: f64, b: f64, n_elements: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(Error::InvalidMesh(format!("need a < b, got ({a}, {b})")));
        }
        if n_elements < 2 {
            return Err(Error::InvalidMesh(format!(
                "need at least 2 elements, got {n_elements}"
            )));
        }
        Ok(Self {
            a,
            b,
            n_elements,
            h: (b - a) / n_elements as f64,
        })
    }

    /// Number of interior nodes.
    pub fn dim(&self) -> usize {
        self.n_elements - 1
    }

    /// Coordinate of node `j` (0 and `n_elements` are the boundary nodes).
    pub fn node(&self, j: usize) -> f64 {
        if j == self.n_elements {
            self.b
        } else {
            self.a + j as f64 * self.h
        }
    }

    /// Interior node coordinates.
    pub fn interior_nodes(&self) -> Vec<f64> {
        (1..self.n_elements).map(|j| self.node(j)).collect()
    }
}

/// The assembled P1 space together with its spectral decomposition.
///
/// Immutable after construction; share it behind an `Arc` across workers.
#[derive(Debug, Clone)]
pub struct FemSpace {
    pub mesh: Mesh1D,
    pub mass: DMatrix<f64>,
    pub stiffness: DMatrix<f64>,
    /// Ascending generalized eigenvalues `λ_1 ≤ … ≤ λ_dim`.
    pub eigenvalues: Vec<f64>,
    /// Columns are M-orthonormal eigenvectors (nodal values of `φ_{h,i}`).
    pub eigenvectors: DMatrix<f64>,
}

/// An element of `V_h` in spectral coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct FemFunction {
    pub coeffs: Vec<f64>,
}

impl FemFunction {
    pub fn zeros(dim: usize) -> Self {
        Self {
            coeffs: vec![0.0; dim],
        }
    }

    pub fn from_coeffs(coeffs: Vec<f64>) -> Self {
        Self { coeffs }
    }

    /// Spectral unit vector `e_i` (the `i`-th discrete eigenfunction), zero-based.
    pub fn unit(dim: usize, i: usize) -> Self {
        let mut v = Self::zeros(dim);
        v.coeffs[i] = 1.0;
        v
    }

    pub fn dim(&self) -> usize {
        self.coeffs.len()
    }

    pub fn l2_norm_sq(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.l2_norm_sq().sqrt()
    }

    pub fn dot(&self, other: &FemFunction) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| a * b)
            .sum()
    }

    /// `self += s * other`
    pub fn axpy(&mut self, s: f64, other: &FemFunction) {
        for (a, b) in self.coeffs.iter_mut().zip(&other.coeffs) {
            *a += s * b;
        }
    }

    pub fn scaled(&self, s: f64) -> FemFunction {
        FemFunction {
            coeffs: self.coeffs.iter().map(|c| s * c).collect(),
        }
    }

    pub fn sub(&self, other: &FemFunction) -> FemFunction {
        FemFunction {
            coeffs: self
                .coeffs
                .iter()
                .zip(&other.coeffs)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }
}

impl FemSpace {
    /// Assemble mass and stiffness on the uniform mesh of `(a, b)` and solve
    /// the generalized eigenproblem `K φ = λ M φ` once.
    pub fn assemble(a: f64, b: f64, n_elements: usize) -> Result<Self> {
        let mesh = Mesh1D::new(a, b, n_elements)?;
        let dim = mesh.dim();
        let h = mesh.h;

        let mut mass = DMatrix::zeros(dim, dim);
        let mut stiffness = DMatrix::zeros(dim, dim);
        for i in 0..dim {
            mass[(i, i)] = 4.0 * h / 6.0;
            stiffness[(i, i)] = 2.0 / h;
            if i + 1 < dim {
                mass[(i, i + 1)] = h / 6.0;
                mass[(i + 1, i)] = h / 6.0;
                stiffness[(i, i + 1)] = -1.0 / h;
                stiffness[(i + 1, i)] = -1.0 / h;
            }
        }

        // Reduce to a standard symmetric problem: C = L⁻¹ K L⁻ᵀ with M = L Lᵀ.
        let chol = mass
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Eigen("mass matrix is not positive definite".into()))?;
        let l = chol.l();
        let l_inv_k = l
            .solve_lower_triangular(&stiffness)
            .ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
        let c = l
            .solve_lower_triangular(&l_inv_k.transpose())
            .ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;
        let c = (&c + c.transpose()) * 0.5;

        let eig = SymmetricEigen::try_new(c, f64::EPSILON, 10_000)
            .ok_or_else(|| Error::Eigen("symmetric eigensolver did not converge".into()))?;

        let mut order: Vec<usize> = (0..dim).collect();
        order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));

        let eigenvalues: Vec<f64> = order.iter().map(|&i| eig.eigenvalues[i]).collect();
        if eigenvalues.iter().any(|&lam| !(lam > 0.0)) {
            return Err(Error::Eigen("non-positive eigenvalue".into()));
        }

        let q = DMatrix::from_fn(dim, dim, |r, col| eig.eigenvectors[(r, order[col])]);
        let mut phi = l
            .transpose()
            .solve_upper_triangular(&q)
            .ok_or_else(|| Error::Eigen("singular Cholesky factor".into()))?;

        // Fix the sign: first significant nodal value positive.
        for col in 0..dim {
            let scale = phi.column(col).amax();
            let pivot = (0..dim)
                .map(|r| phi[(r, col)])
                .find(|v| v.abs() > 1e-8 * scale)
                .unwrap_or(1.0);
            if pivot < 0.0 {
                phi.column_mut(col).neg_mut();
            }
        }

        Ok(Self {
            mesh,
            mass,
            stiffness,
            eigenvalues,
            eigenvectors: phi,
        })
    }

    pub fn dim(&self) -> usize {
        self.mesh.dim()
    }

    /// Load vector `b_i = ∫ f φ_i` by composite 3-point Gauss quadrature.
    pub fn load_vector(&self, f: impl Fn(f64) -> f64) -> Result<Vec<f64>> {
        let mesh = &self.mesh;
        let dim = self.dim();
        let h = mesh.h;
        let mut load = vec![0.0; dim];
        for e in 0..mesh.n_elements {
            let xl = mesh.node(e);
            for (gx, gw) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                let s = 0.5 * (gx + 1.0);
                let x = xl + h * s;
                let fx = f(x);
                if !fx.is_finite() {
                    return Err(Error::NonFinite { x, value: fx });
                }
                let w = 0.5 * h * gw * fx;
                // element e spans nodes e and e+1; interior index = node - 1
                if e >= 1 {
                    load[e - 1] += w * (1.0 - s);
                }
                if e < dim {
                    load[e] += w * s;
                }
            }
        }
        Ok(load)
    }

    /// L² projection `Π_h f`, returned in spectral coordinates.
    ///
    /// The nodal solve `M c = b` followed by `ĉ = Φᵀ M c` collapses to `ĉ = Φᵀ b`.
    pub fn project_l2(&self, f: impl Fn(f64) -> f64) -> Result<FemFunction> {
        let load = DVector::from_vec(self.load_vector(f)?);
        let coeffs = self.eigenvectors.tr_mul(&load);
        Ok(FemFunction {
            coeffs: coeffs.iter().copied().collect(),
        })
    }

    /// `‖v‖_{γ} = (Σ λ_i^γ ĉ_i²)^{1/2}`.
    pub fn norm_gamma(&self, v: &FemFunction, gamma: f64) -> f64 {
        self.eigenvalues
            .iter()
            .zip(&v.coeffs)
            .map(|(lam, c)| lam.powf(gamma) * c * c)
            .sum::<f64>()
            .sqrt()
    }

    /// Values at the interior nodes, `c = Φ ĉ`.
    pub fn nodal_values(&self, v: &FemFunction) -> Vec<f64> {
        let c = &self.eigenvectors * DVector::from_column_slice(&v.coeffs);
        c.iter().copied().collect()
    }

    /// Inverse of [`nodal_values`](Self::nodal_values): `ĉ = Φᵀ M c`.
    pub fn from_nodal(&self, nodal: &[f64]) -> FemFunction {
        let mc = &self.mass * DVector::from_column_slice(nodal);
        FemFunction {
            coeffs: self.eigenvectors.tr_mul(&mc).iter().copied().collect(),
        }
    }

    /// Point evaluation of the P1 interpolant; zero outside `(a, b)`.
    pub fn evaluate(&self, v: &FemFunction, x: f64) -> f64 {
        self.evaluate_nodal(&self.nodal_values(v), x)
    }

    pub fn evaluate_nodal(&self, nodal: &[f64], x: f64) -> f64 {
        let mesh = &self.mesh;
        if x <= mesh.a || x >= mesh.b {
            return 0.0;
        }
        let t = (x - mesh.a) / mesh.h;
        let e = (t.floor() as usize).min(mesh.n_elements - 1);
        let s = t - e as f64;
        let left = if e == 0 { 0.0 } else { nodal[e - 1] };
        let right = if e + 1 == mesh.n_elements { 0.0 } else { nodal[e] };
        (1.0 - s) * left + s * right
    }

    /// `(cᵀ M c)^{1/2}` for nodal values `c`.
    pub fn l2_norm_nodal(&self, nodal: &[f64]) -> f64 {
        let c = DVector::from_column_slice(nodal);
        c.dot(&(&self.mass * &c)).max(0.0).sqrt()
    }

    /// Nodal values of a coarse P1 function on the interior nodes of a nested
    /// finer mesh of the same interval (exact, since `V_H ⊂ V_h`).
    pub fn prolongate_nodal(&self, nodal: &[f64], fine: &FemSpace) -> Result<Vec<f64>> {
        let coarse_n = self.mesh.n_elements;
        let fine_n = fine.mesh.n_elements;
        if !fine_n.is_multiple_of(coarse_n) || self.mesh.a != fine.mesh.a || self.mesh.b != fine.mesh.b {
            return Err(Error::NotNested {
                coarse: coarse_n,
                fine: fine_n,
            });
        }
        let ratio = fine_n / coarse_n;
        let value = |j: usize| {
            if j == 0 || j == coarse_n {
                0.0
            } else {
                nodal[j - 1]
            }
        };
        Ok((1..fine_n)
            .map(|k| {
                let e = k / ratio;
                let r = k % ratio;
                if r == 0 {
                    value(e)
                } else {
                    let s = r as f64 / ratio as f64;
                    (1.0 - s) * value(e) + s * value(e + 1)
                }
            })
            .collect())
    }

    /// `‖f − v‖_{L²}` for the P1 function with the given nodal values, by
    /// composite Gauss quadrature.
    pub fn l2_error_nodal(&self, nodal: &[f64], f: impl Fn(f64) -> f64) -> f64 {
        let mesh = &self.mesh;
        let value = |j: usize| {
            if j == 0 || j == mesh.n_elements {
                0.0
            } else {
                nodal[j - 1]
            }
        };
        let mut total = 0.0;
        for e in 0..mesh.n_elements {
            let (vl, vr) = (value(e), value(e + 1));
            for (gx, gw) in GAUSS_NODES.iter().zip(GAUSS_WEIGHTS) {
                let s = 0.5 * (gx + 1.0);
                let diff = f(mesh.node(e) + mesh.h * s) - ((1.0 - s) * vl + s * vr);
                total += 0.5 * mesh.h * gw * diff * diff;
            }
        }
        total.sqrt()
    }
}
