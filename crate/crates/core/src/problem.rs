//! Composite problem instances `minimize f(x) + g(Tx)` and the built-in
//! catalog addressed by string keys.

use std::fmt;
use std::sync::Arc;

use nalgebra::dmatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::envelopes::objective;
use crate::error::{Error, Result};
use crate::linalg::{gaussian_vector, random_orthonormal, rank, Matrix, Vector};
use crate::oracles::{
    make_box_indicator, make_l1, make_least_squares, make_logistic, make_quadratic, make_quadratic_psd,
    make_zero, ProxOracle, SmoothOracle,
};
use crate::reference::{admm_solve, ista_solve, SolveReport};

/// Keys accepted by [`catalog`].
pub const CATALOG_KEYS: [&str; 5] = ["lasso", "box-qp", "pl-quadratic", "logistic-l1", "eq-qp"];

/// Linear map applied to `x` inside `g`.
#[derive(Debug, Clone, PartialEq)]
pub enum Coupling {
    Identity,
    Matrix(Matrix),
}

/// How the proximal parameter is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MuPolicy {
    /// `2/(L_f + m_f)` when `m_f > 0`, else `1/(2L_f)`.
    BestContraction,
    Fixed(f64),
}

impl MuPolicy {
    pub fn resolve(self, m_f: f64, l_f: f64) -> Result<f64> {
        let mu = match self {
            MuPolicy::BestContraction if m_f > 0.0 => 2.0 / (l_f + m_f),
            MuPolicy::BestContraction => 1.0 / (2.0 * l_f),
            MuPolicy::Fixed(mu) => mu,
        };
        if mu > 0.0 && mu.is_finite() {
            Ok(mu)
        } else {
            Err(Error::InvalidInput(format!("mu must be positive, got {mu}")))
        }
    }
}

/// `minimize f(x) + g(z)` subject to `Tx − z = r`; with `T = I` and `r = 0`
/// this is `minimize f(x) + g(x)`.
#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub name: String,
    pub f: SmoothOracle,
    pub g: ProxOracle,
    pub coupling: Coupling,
    pub offset: Option<Vector>,
    pub mu: f64,
}

/// Primal-dual solution produced by a discrete solver independent of the
/// flows: `x`, the multiplier `y` with `∇f(x) + Tᵀy = 0`, `z = Tx − r`.
#[derive(Debug, Clone)]
pub struct ReferenceSolution {
    pub x: Vector,
    pub y: Vector,
    pub z: Vector,
    pub objective: f64,
    pub report: SolveReport,
}

impl ProblemSpec {
    pub fn new(name: impl Into<String>, f: SmoothOracle, g: ProxOracle, mu: f64) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            f,
            g,
            coupling: Coupling::Identity,
            offset: None,
            mu,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Problem with a general coupling `Tx − z = r`; `g` lives on the range of `T`.
    pub fn coupled(
        name: impl Into<String>,
        f: SmoothOracle,
        g: ProxOracle,
        t: Matrix,
        offset: Option<Vector>,
        mu: f64,
    ) -> Result<Self> {
        let spec = Self {
            name: name.into(),
            f,
            g,
            coupling: Coupling::Matrix(t),
            offset,
            mu,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_mu(mut self, mu: f64) -> Result<Self> {
        self.mu = mu;
        self.validate()?;
        Ok(self)
    }

    pub fn with_mu_policy(self, policy: MuPolicy) -> Result<Self> {
        let mu = policy.resolve(self.m_f(), self.l_f())?;
        self.with_mu(mu)
    }

    fn validate(&self) -> Result<()> {
        if !(self.mu > 0.0 && self.mu.is_finite()) {
            return Err(Error::InvalidInput(format!("mu must be positive, got {}", self.mu)));
        }
        let n = self.f.dim();
        let m = match &self.coupling {
            Coupling::Identity => n,
            Coupling::Matrix(t) => {
                if t.ncols() != n {
                    return Err(Error::DimensionMismatch {
                        expected: n,
                        found: t.ncols(),
                    });
                }
                t.nrows()
            }
        };
        if self.g.dim() != m {
            return Err(Error::DimensionMismatch {
                expected: m,
                found: self.g.dim(),
            });
        }
        if let Some(r) = &self.offset {
            if r.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    found: r.len(),
                });
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.f.dim()
    }

    pub fn m(&self) -> usize {
        self.g.dim()
    }

    pub fn m_f(&self) -> f64 {
        self.f.strong_convexity()
    }

    pub fn l_f(&self) -> f64 {
        self.f.lipschitz()
    }

    pub fn is_identity(&self) -> bool {
        matches!(self.coupling, Coupling::Identity) && self.offset.as_ref().is_none_or(|r| r.iter().all(|&v| v == 0.0))
    }

    /// `T` as an explicit matrix.
    pub fn t_matrix(&self) -> Matrix {
        match &self.coupling {
            Coupling::Identity => Matrix::identity(self.n(), self.n()),
            Coupling::Matrix(t) => t.clone(),
        }
    }

    pub fn offset_vector(&self) -> Vector {
        self.offset.clone().unwrap_or_else(|| Vector::zeros(self.m()))
    }

    pub fn require_identity(&self) -> Result<()> {
        if self.is_identity() {
            Ok(())
        } else {
            Err(Error::CouplingNotIdentity)
        }
    }

    pub fn require_full_row_rank(&self) -> Result<()> {
        let t = self.t_matrix();
        let r = rank(&t);
        if r < t.nrows() {
            return Err(Error::RankDeficient { rank: r, rows: t.nrows() });
        }
        Ok(())
    }

    /// `F(x) = f(x) + g(Tx − r)`.
    pub fn objective(&self, x: &Vector) -> f64 {
        if self.is_identity() {
            return objective(self.f.as_ref(), &self.g, x);
        }
        let z = self.t_matrix() * x - self.offset_vector();
        let gz = self.g.value(&z);
        if gz.is_infinite() {
            f64::INFINITY
        } else {
            self.f.value(x) + gz
        }
    }

    /// Solves the problem with a discrete method: proximal gradient when
    /// `T = I`, ADMM otherwise (quadratic `f` only).
    pub fn reference(&self) -> Result<ReferenceSolution> {
        if self.is_identity() {
            let x0 = Vector::zeros(self.n());
            let (x, report) = ista_solve(self.f.as_ref(), &self.g, &x0, 1e-14, 1_000_000);
            if !report.converged {
                return Err(Error::NonConvergence {
                    iterations: report.iterations,
                    residual: report.residual,
                });
            }
            let y = -self.f.gradient(&x);
            Ok(ReferenceSolution {
                objective: self.objective(&x),
                z: x.clone(),
                y,
                x,
                report,
            })
        } else {
            let sol = admm_solve(self, 1e-13, 1_000_000)?;
            if !sol.report.converged {
                return Err(Error::NonConvergence {
                    iterations: sol.report.iterations,
                    residual: sol.report.residual,
                });
            }
            Ok(ReferenceSolution {
                objective: self.objective(&sol.x),
                x: sol.x,
                y: sol.y,
                z: sol.z,
                report: sol.report,
            })
        }
    }
}

impl fmt::Display for ProblemSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} (n = {}, m = {}, m_f = {:.6}, L_f = {:.6}, mu = {:.6})",
            self.name,
            self.n(),
            self.m(),
            self.m_f(),
            self.l_f(),
            self.mu
        )
    }
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![lo];
    }
    (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect()
}

fn rotated(eigs: &[f64], rng: &mut ChaCha8Rng) -> Matrix {
    let n = eigs.len();
    let v = random_orthonormal(rng, n, n);
    let d = Matrix::from_diagonal(&Vector::from_column_slice(eigs));
    let q = &v * d * v.transpose();
    (&q + q.transpose()) * 0.5
}

/// Lasso `½‖Ax − b‖² + λ‖x‖₁` with `n = 8`, `AᵀA` spectrum spread on
/// `[1, 3]`, `λ = 0.5`.
pub fn lasso() -> Result<ProblemSpec> {
    let (rows, n) = (12, 8);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a55_0001);
    let u = random_orthonormal(&mut rng, rows, n);
    let v = random_orthonormal(&mut rng, n, n);
    let s: Vec<f64> = linspace(1.0, 3.0, n).into_iter().map(f64::sqrt).collect();
    let a = u * Matrix::from_diagonal(&Vector::from_vec(s)) * v.transpose();
    let mut x_true = Vector::zeros(n);
    for (i, val) in [(0, 2.0), (2, -1.5), (5, 1.0), (7, -0.6)] {
        x_true[i] = val;
    }
    let b = &a * x_true + gaussian_vector(&mut rng, rows, 0.3);
    let f = make_least_squares(&a, &b)?;
    ProblemSpec::new("lasso", Arc::new(f), make_l1(0.5, n)?, 0.5)
}

/// Strongly convex QP over the box `[−1, 1]⁶`, spectrum `[0.5, 4]`.
pub fn box_qp() -> Result<ProblemSpec> {
    let n = 6;
    let mut rng = ChaCha8Rng::seed_from_u64(0xb0c5_0002);
    let q = rotated(&linspace(0.5, 4.0, n), &mut rng);
    let lin = gaussian_vector(&mut rng, n, 3.0);
    let f = make_quadratic(&q, &lin)?;
    let g = make_box_indicator(&Vector::from_element(n, -1.0), &Vector::from_element(n, 1.0))?;
    ProblemSpec::new("box-qp", Arc::new(f), g, 1.0)?.with_mu_policy(MuPolicy::BestContraction)
}

/// Rank-deficient PSD quadratic with eigenvalues `{0, 1, 4}` and `g ≡ 0`;
/// the linear term lies in the range of `Q` so a minimizer exists.
pub fn pl_quadratic() -> Result<ProblemSpec> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9105_0003);
    let q = rotated(&[0.0, 1.0, 4.0], &mut rng);
    let c = gaussian_vector(&mut rng, 3, 1.0);
    let lin = &q * c;
    let f = make_quadratic_psd(&q, &lin)?;
    ProblemSpec::new("pl-quadratic", Arc::new(f), make_zero(3), 0.1)
}

/// Ridge-regularized logistic regression with an `ℓ1` penalty.
pub fn logistic_l1() -> Result<ProblemSpec> {
    let (rows, n) = (20, 5);
    let mut rng = ChaCha8Rng::seed_from_u64(0x1091_0004);
    let a = Matrix::from_fn(rows, n, |_, _| rand::Rng::sample::<f64, _>(&mut rng, rand_distr::StandardNormal)) * 0.5;
    let w = gaussian_vector(&mut rng, n, 1.0);
    let noise = gaussian_vector(&mut rng, rows, 0.5);
    let labels = Vector::from_fn(rows, |i, _| if (&a * &w)[i] + noise[i] >= 0.0 { 1.0 } else { -1.0 });
    let f = make_logistic(&a, &labels, 0.1)?;
    ProblemSpec::new("logistic-l1", Arc::new(f), make_l1(0.05, n)?, 1.0)?.with_mu_policy(MuPolicy::BestContraction)
}

/// `minimize ½‖x‖²` subject to `x₁ + x₂ = 1`, written as `Tx − z = r` with
/// `T = [1 1]`, `r = 1` and `z` pinned to `0` by the indicator of `{0}`.
pub fn eq_qp() -> Result<ProblemSpec> {
    let f = make_quadratic(&Matrix::identity(2, 2), &Vector::zeros(2))?;
    let g = make_box_indicator(&Vector::zeros(1), &Vector::zeros(1))?;
    ProblemSpec::coupled(
        "eq-qp",
        Arc::new(f),
        g,
        dmatrix![1.0, 1.0],
        Some(Vector::from_element(1, 1.0)),
        1.0,
    )
}

/// Looks up a catalog problem by key.
pub fn catalog(key: &str) -> Result<ProblemSpec> {
    match key {
        "lasso" => lasso(),
        "box-qp" => box_qp(),
        "pl-quadratic" => pl_quadratic(),
        "logistic-l1" => logistic_l1(),
        "eq-qp" => eq_qp(),
        other => Err(Error::InvalidInput(format!("unknown problem: {other}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn lasso_constants() {
        let p = lasso().unwrap();
        assert_abs_diff_eq!(p.m_f(), 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.l_f(), 3.0, epsilon = 1e-12);
        assert_eq!(p.mu, 0.5);
        let sol = p.reference().unwrap();
        let zeros = sol.x.iter().filter(|v| **v == 0.0).count();
        assert!(zeros > 0 && zeros < p.n(), "lasso solution should be partially sparse: {}", sol.x);
    }

    #[test]
    fn box_qp_has_active_constraints() {
        let p = box_qp().unwrap();
        let sol = p.reference().unwrap();
        let active = sol.x.iter().filter(|v| v.abs() == 1.0).count();
        assert!(active > 0 && active < p.n(), "{}", sol.x);
    }

    #[test]
    fn pl_quadratic_is_rank_deficient() {
        let p = pl_quadratic().unwrap();
        assert_eq!(p.m_f(), 0.0);
        assert_abs_diff_eq!(p.l_f(), 4.0, epsilon = 1e-12);
    }

    #[test]
    fn eq_qp_reference() {
        let p = eq_qp().unwrap();
        let sol = p.reference().unwrap();
        assert_abs_diff_eq!(sol.x[0], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.x[1], 0.5, epsilon = 1e-10);
        assert_abs_diff_eq!(sol.y[0], -0.5, epsilon = 1e-10);
    }

    #[test]
    fn unknown_key() {
        let err = catalog("nope").unwrap_err();
        assert_eq!(err.to_string(), "invalid input: unknown problem: nope");
    }

    #[test]
    fn mu_policy() {
        assert_eq!(MuPolicy::BestContraction.resolve(1.0, 3.0).unwrap(), 0.5);
        assert_eq!(MuPolicy::BestContraction.resolve(0.0, 4.0).unwrap(), 0.125);
        assert!(MuPolicy::Fixed(-1.0).resolve(1.0, 3.0).is_err());
    }
}
