//! Discrete algorithms used as independent references for the flows:
//! proximal gradient (ISTA / projected gradient), Douglas-Rachford and ADMM.
//!
//! Nothing here calls into `flows`; the recursions are written out directly
//! against the oracles.

use nalgebra::linalg::Cholesky;

use crate::error::{Error, Result};
use crate::linalg::{Matrix, Vector};
use crate::oracles::{ConjugateQuadratic, ProxOracle, Resolvent, SmoothFunction};
use crate::problem::ProblemSpec;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveReport {
    pub iterations: usize,
    pub residual: f64,
    pub converged: bool,
}

/// `x ← x + θ·(prox_{μg}(x − μ∇f(x)) − x)`; `θ = 1` is plain ISTA. Returns
/// `iters + 1` iterates including `x0`.
pub fn ista_steps(
    f: &dyn SmoothFunction,
    g: &ProxOracle,
    mu: f64,
    x0: &Vector,
    iters: usize,
    relaxation: f64,
) -> Vec<Vector> {
    let mut out = Vec::with_capacity(iters + 1);
    let mut x = x0.clone();
    out.push(x.clone());
    for _ in 0..iters {
        let forward = &x - f.gradient(&x) * mu;
        let p = g.prox(mu, &forward);
        x = if relaxation == 1.0 {
            p
        } else {
            &x + (p - &x) * relaxation
        };
        out.push(x.clone());
    }
    out
}

/// Proximal gradient to a fixed point, step `2/(L_f + m_f)` (or `1/L_f` when
/// `m_f = 0`). Stops when `‖x⁺ − x‖ ≤ tol·max(1, ‖x‖)`.
pub fn ista_solve(
    f: &dyn SmoothFunction,
    g: &ProxOracle,
    x0: &Vector,
    tol: f64,
    max_iter: usize,
) -> (Vector, SolveReport) {
    let (m, l) = (f.strong_convexity(), f.lipschitz());
    let step = if m > 0.0 { 2.0 / (l + m) } else { 1.0 / l };
    let mut x = x0.clone();
    let mut residual = f64::INFINITY;
    for k in 0..max_iter {
        let next = g.prox(step, &(&x - f.gradient(&x) * step));
        residual = (&next - &x).norm();
        let done = residual <= tol * x.norm().max(1.0) || next == x;
        x = next;
        if done {
            return (
                x,
                SolveReport {
                    iterations: k + 1,
                    residual,
                    converged: true,
                },
            );
        }
    }
    (
        x,
        SolveReport {
            iterations: max_iter,
            residual,
            converged: false,
        },
    )
}

/// Douglas-Rachford in three-step form:
/// `x = prox_{μf}(z)`, `y = prox_{μg}(2x − z)`, `z ← z + λ(y − x)`.
///
/// `λ = 1` is the classical (averaged) recursion; `λ = 2` is
/// Peaceman-Rachford. Returns the `z` iterates including `z0`.
pub fn dr_steps(
    resolvent: &Resolvent,
    g: &ProxOracle,
    z0: &Vector,
    iters: usize,
    relaxation: f64,
) -> Result<Vec<Vector>> {
    let mu = resolvent.mu();
    let mut out = Vec::with_capacity(iters + 1);
    let mut z = z0.clone();
    out.push(z.clone());
    for _ in 0..iters {
        let x = resolvent.apply(&z)?;
        let reflected = &x * 2.0 - &z;
        let y = g.prox(mu, &reflected);
        z += (y - x) * relaxation;
        out.push(z.clone());
    }
    Ok(out)
}

/// One ADMM sweep's iterates. `w = y − μẑ` is the matching dual
/// Douglas-Rachford state.
#[derive(Debug, Clone)]
pub struct AdmmIterate {
    pub x: Vector,
    pub z: Vector,
    pub y: Vector,
    pub w: Vector,
}

/// ADMM on `minimize f(x) + g(z)` s.t. `Tx − z = r` with quadratic `f` and
/// penalty `μ`, optionally over-relaxed.
#[derive(Debug, Clone)]
pub struct Admm {
    t: Matrix,
    r: Vector,
    mu: f64,
    linear: Vector,
    factor: Cholesky<f64, nalgebra::Dyn>,
    g: ProxOracle,
}

impl Admm {
    pub fn new(p: &ProblemSpec) -> Result<Self> {
        let cq = ConjugateQuadratic::from_smooth(p.f.as_ref())?;
        let t = p.t_matrix();
        let mu = p.mu;
        let system = cq.hessian() + t.transpose() * &t * mu;
        let factor = Cholesky::new(system).ok_or_else(|| Error::Singular("Q + μTᵀT is singular".into()))?;
        Ok(Self {
            r: p.offset_vector(),
            linear: cq.linear().clone(),
            t,
            mu,
            factor,
            g: p.g.clone(),
        })
    }

    /// Runs `iters` sweeps of
    ///
    /// ```text
    /// x  = argmin f(x) + (μ/2)‖Tx − ẑ − r + y/μ‖²
    /// y ← y + μ(Tx − ẑ − r)
    /// z  = argmin g(z) + (μ/2)‖Tx − z − r + y/μ‖²
    /// ẑ ← λz + (1 − λ)(Tx − r)
    /// ```
    ///
    /// starting from `y = w0`, `ẑ = 0`.
    pub fn steps(&self, w0: &Vector, iters: usize, relaxation: f64) -> Vec<AdmmIterate> {
        let mu = self.mu;
        let mut y = w0.clone();
        let mut z_hat = Vector::zeros(w0.len());
        let mut out = Vec::with_capacity(iters);
        for _ in 0..iters {
            let rhs = -&self.linear + self.t.transpose() * ((&z_hat + &self.r) * mu - &y);
            let x = self.factor.solve(&rhs);
            let tx_r = &self.t * &x - &self.r;
            y += (&tx_r - &z_hat) * mu;
            let z = self.g.prox(1.0 / mu, &(&tx_r + &y / mu));
            z_hat = &z * relaxation + &tx_r * (1.0 - relaxation);
            out.push(AdmmIterate {
                w: &y - &z_hat * mu,
                x,
                z,
                y: y.clone(),
            });
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct AdmmSolution {
    pub x: Vector,
    pub z: Vector,
    pub y: Vector,
    pub report: SolveReport,
}

/// Plain ADMM until primal and dual residuals fall below `tol`.
pub fn admm_solve(p: &ProblemSpec, tol: f64, max_iter: usize) -> Result<AdmmSolution> {
    let admm = Admm::new(p)?;
    let mu = p.mu;
    let mut y = Vector::zeros(p.m());
    let mut z_hat = Vector::zeros(p.m());
    let mut x = Vector::zeros(p.n());
    let mut residual = f64::INFINITY;
    for k in 0..max_iter {
        let rhs = -&admm.linear + admm.t.transpose() * ((&z_hat + &admm.r) * mu - &y);
        x = admm.factor.solve(&rhs);
        let tx_r = &admm.t * &x - &admm.r;
        y += (&tx_r - &z_hat) * mu;
        let z = admm.g.prox(1.0 / mu, &(&tx_r + &y / mu));
        let primal = (&tx_r - &z).norm();
        let dual = (admm.t.transpose() * (&z - &z_hat)).norm() * mu;
        residual = primal.max(dual);
        z_hat = z;
        if residual <= tol * (1.0 + y.norm()) {
            return Ok(AdmmSolution {
                x,
                z: z_hat,
                y,
                report: SolveReport {
                    iterations: k + 1,
                    residual,
                    converged: true,
                },
            });
        }
    }
    Ok(AdmmSolution {
        x,
        z: z_hat,
        y,
        report: SolveReport {
            iterations: max_iter,
            residual,
            converged: false,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracles::{make_l1, make_quadratic};
    use approx::assert_abs_diff_eq;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn ista_scalar_lasso() {
        // min ½(x − 3)² + |x|  →  x = 2
        let f = make_quadratic(&dmatrix![1.0], &dvector![-3.0]).unwrap();
        let g = make_l1(1.0, 1).unwrap();
        let (x, rep) = ista_solve(&f, &g, &dvector![0.0], 1e-14, 1000);
        assert!(rep.converged);
        assert_abs_diff_eq!(x[0], 2.0, epsilon = 1e-13);
    }

    #[test]
    fn relaxed_ista_is_convex_combination() {
        let f = make_quadratic(&dmatrix![2.0], &dvector![-1.0]).unwrap();
        let g = make_l1(0.1, 1).unwrap();
        let plain = ista_steps(&f, &g, 0.3, &dvector![4.0], 1, 1.0);
        let half = ista_steps(&f, &g, 0.3, &dvector![4.0], 1, 0.5);
        assert_abs_diff_eq!(half[1][0], 0.5 * (4.0 + plain[1][0]), epsilon = 1e-15);
    }
}
