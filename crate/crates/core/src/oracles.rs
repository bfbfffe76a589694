//! Function catalog: smooth convex terms `f` with known curvature constants
//! and nonsmooth terms `g` with closed-form proximal operators.
//!
//! Smooth terms are trait objects behind [`SmoothOracle`] so callers can plug
//! in their own functions; the nonsmooth catalog is closed and lives in the
//! [`ProxOracle`] enum.

use std::fmt::Debug;
use std::sync::Arc;

use nalgebra::linalg::Cholesky;
use nalgebra::Dyn;

use crate::error::{Error, Result};
use crate::linalg::{check_len, sym_eigenvalues, symmetrized, Matrix, Vector};

/// Borrowed view of `f(x) = ½xᵀQx + qᵀx + c`.
#[derive(Debug, Clone, Copy)]
pub struct QuadraticForm<'a> {
    pub hessian: &'a Matrix,
    pub linear: &'a Vector,
    pub constant: f64,
}

/// A smooth convex function with gradient, Hessian-vector product and the
/// constants `m_f` (strong convexity) and `L_f` (gradient Lipschitz).
pub trait SmoothFunction: Debug + Send + Sync {
    fn dim(&self) -> usize;
    fn value(&self, x: &Vector) -> f64;
    fn gradient(&self, x: &Vector) -> Vector;
    fn hessian_apply(&self, x: &Vector, v: &Vector) -> Vector;
    fn strong_convexity(&self) -> f64;
    fn lipschitz(&self) -> f64;
    fn twice_differentiable(&self) -> bool {
        true
    }
    /// Closed form when `f` is quadratic; enables linear-solve resolvents and
    /// conjugates.
    fn quadratic_form(&self) -> Option<QuadraticForm<'_>> {
        None
    }

    fn condition_number(&self) -> f64 {
        self.lipschitz() / self.strong_convexity()
    }
}

pub type SmoothOracle = Arc<dyn SmoothFunction>;

#[derive(Debug, Clone)]
pub struct Quadratic {
    hessian: Matrix,
    linear: Vector,
    eigenvalues: Vec<f64>,
    m_f: f64,
    l_f: f64,
}

impl Quadratic {
    fn build(q: &Matrix, linear: &Vector, require_pd: bool) -> Result<Self> {
        let hessian = symmetrized(q)?;
        check_len(linear, hessian.nrows())?;
        if hessian.nrows() == 0 {
            return Err(Error::InvalidInput("empty quadratic".into()));
        }
        let eigenvalues = sym_eigenvalues(&hessian);
        let lo = eigenvalues[0];
        let hi = *eigenvalues.last().unwrap();
        let floor = 1e-12 * hi.abs().max(1.0);
        let m_f = if require_pd {
            if lo <= 0.0 {
                return Err(Error::NotPositiveDefinite(lo));
            }
            lo
        } else {
            if lo < -floor {
                return Err(Error::NotPositiveSemidefinite(lo));
            }
            if lo <= floor {
                0.0
            } else {
                lo
            }
        };
        if hi <= 0.0 {
            return Err(Error::InvalidInput("quadratic has no positive curvature".into()));
        }
        Ok(Self {
            hessian,
            linear: linear.clone(),
            eigenvalues,
            m_f,
            l_f: hi,
        })
    }

    pub fn hessian(&self) -> &Matrix {
        &self.hessian
    }

    pub fn linear(&self) -> &Vector {
        &self.linear
    }

    /// Ascending eigenvalues of `Q`.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    /// Smallest eigenvalue above the numerical-zero floor; the PL constant of
    /// a PSD quadratic is twice this value.
    pub fn smallest_positive_eigenvalue(&self) -> f64 {
        let hi = self.l_f;
        self.eigenvalues
            .iter()
            .copied()
            .find(|&l| l > 1e-12 * hi.max(1.0))
            .unwrap_or(hi)
    }
}

impl SmoothFunction for Quadratic {
    fn dim(&self) -> usize {
        self.linear.len()
    }
    fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) + self.linear.dot(x)
    }
    fn gradient(&self, x: &Vector) -> Vector {
        &self.hessian * x + &self.linear
    }
    fn hessian_apply(&self, _x: &Vector, v: &Vector) -> Vector {
        &self.hessian * v
    }
    fn strong_convexity(&self) -> f64 {
        self.m_f
    }
    fn lipschitz(&self) -> f64 {
        self.l_f
    }
    fn quadratic_form(&self) -> Option<QuadraticForm<'_>> {
        Some(QuadraticForm {
            hessian: &self.hessian,
            linear: &self.linear,
            constant: 0.0,
        })
    }
}

/// Strongly convex quadratic `½xᵀQx + qᵀx` with `m_f = λ_min(Q)` and
/// `L_f = λ_max(Q)`.
pub fn make_quadratic(q: &Matrix, linear: &Vector) -> Result<Quadratic> {
    Quadratic::build(q, linear, true)
}

/// Same as [`make_quadratic`] but accepts singular PSD `Q` (then `m_f = 0`).
pub fn make_quadratic_psd(q: &Matrix, linear: &Vector) -> Result<Quadratic> {
    Quadratic::build(q, linear, false)
}

/// `½‖Ax − b‖²`, stored through its Gram matrix.
#[derive(Debug, Clone)]
pub struct LeastSquares {
    a: Matrix,
    b: Vector,
    gram: Matrix,
    linear: Vector,
    constant: f64,
    m_f: f64,
    l_f: f64,
}

impl LeastSquares {
    pub fn a(&self) -> &Matrix {
        &self.a
    }
    pub fn b(&self) -> &Vector {
        &self.b
    }
}

pub fn make_least_squares(a: &Matrix, b: &Vector) -> Result<LeastSquares> {
    check_len(b, a.nrows())?;
    let gram = a.transpose() * a;
    let eig = sym_eigenvalues(&gram);
    let hi = *eig.last().ok_or_else(|| Error::InvalidInput("empty matrix".into()))?;
    if hi <= 0.0 {
        return Err(Error::InvalidInput("least-squares matrix is zero".into()));
    }
    let lo = eig[0];
    let m_f = if lo <= 1e-12 * hi { 0.0 } else { lo };
    Ok(LeastSquares {
        linear: -(a.transpose() * b),
        constant: 0.5 * b.norm_squared(),
        a: a.clone(),
        b: b.clone(),
        gram,
        m_f,
        l_f: hi,
    })
}

impl SmoothFunction for LeastSquares {
    fn dim(&self) -> usize {
        self.a.ncols()
    }
    fn value(&self, x: &Vector) -> f64 {
        0.5 * (&self.a * x - &self.b).norm_squared()
    }
    fn gradient(&self, x: &Vector) -> Vector {
        self.a.transpose() * (&self.a * x - &self.b)
    }
    fn hessian_apply(&self, _x: &Vector, v: &Vector) -> Vector {
        &self.gram * v
    }
    fn strong_convexity(&self) -> f64 {
        self.m_f
    }
    fn lipschitz(&self) -> f64 {
        self.l_f
    }
    fn quadratic_form(&self) -> Option<QuadraticForm<'_>> {
        Some(QuadraticForm {
            hessian: &self.gram,
            linear: &self.linear,
            constant: self.constant,
        })
    }
}

/// Ridge-regularized logistic loss
/// `Σᵢ log(1 + exp(−bᵢ aᵢᵀx)) + (ε/2)‖x‖²` for labels `bᵢ ∈ {−1, 1}`.
///
/// The constants are analytic bounds: `m_f = ε`, `L_f = ‖A‖²/4 + ε`.
#[derive(Debug, Clone)]
pub struct Logistic {
    a: Matrix,
    labels: Vector,
    ridge: f64,
    l_f: f64,
}

pub fn make_logistic(a: &Matrix, labels: &Vector, ridge: f64) -> Result<Logistic> {
    check_len(labels, a.nrows())?;
    if !(ridge > 0.0) {
        return Err(Error::InvalidInput(format!("ridge must be positive, got {ridge}")));
    }
    if labels.iter().any(|&b| b != 1.0 && b != -1.0) {
        return Err(Error::InvalidInput("labels must be ±1".into()));
    }
    let spectral_sq = sym_eigenvalues(&(a.transpose() * a))
        .last()
        .copied()
        .unwrap_or(0.0);
    Ok(Logistic {
        a: a.clone(),
        labels: labels.clone(),
        ridge,
        l_f: 0.25 * spectral_sq + ridge,
    })
}

fn softplus(t: f64) -> f64 {
    t.max(0.0) + (-t.abs()).exp().ln_1p()
}

fn sigmoid(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

impl SmoothFunction for Logistic {
    fn dim(&self) -> usize {
        self.a.ncols()
    }
    fn value(&self, x: &Vector) -> f64 {
        let margins = &self.a * x;
        let loss: f64 = margins
            .iter()
            .zip(self.labels.iter())
            .map(|(m, b)| softplus(-b * m))
            .sum();
        loss + 0.5 * self.ridge * x.norm_squared()
    }
    fn gradient(&self, x: &Vector) -> Vector {
        let margins = &self.a * x;
        let weights = Vector::from_fn(margins.len(), |i, _| {
            let b = self.labels[i];
            -b * sigmoid(-b * margins[i])
        });
        self.a.transpose() * weights + x * self.ridge
    }
    fn hessian_apply(&self, x: &Vector, v: &Vector) -> Vector {
        let margins = &self.a * x;
        let av = &self.a * v;
        let scaled = Vector::from_fn(margins.len(), |i, _| {
            let s = sigmoid(margins[i]);
            s * (1.0 - s) * av[i]
        });
        self.a.transpose() * scaled + v * self.ridge
    }
    fn strong_convexity(&self) -> f64 {
        self.ridge
    }
    fn lipschitz(&self) -> f64 {
        self.l_f
    }
}

/// Closed, proper, convex nonsmooth terms with closed-form proximal operators.
#[derive(Debug, Clone, PartialEq)]
pub enum ProxOracle {
    /// `g ≡ 0`.
    Zero { dim: usize },
    /// `g(z) = λ‖z‖₁`.
    L1 { lambda: f64, dim: usize },
    /// Indicator of the box `[lo, hi]`; `+∞` outside.
    Box { lo: Vector, hi: Vector },
}

pub fn make_zero(dim: usize) -> ProxOracle {
    ProxOracle::Zero { dim }
}

pub fn make_l1(lambda: f64, dim: usize) -> Result<ProxOracle> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::InvalidInput(format!("l1 weight must be positive, got {lambda}")));
    }
    Ok(ProxOracle::L1 { lambda, dim })
}

pub fn make_box_indicator(lo: &Vector, hi: &Vector) -> Result<ProxOracle> {
    check_len(hi, lo.len())?;
    if let Some(i) = (0..lo.len()).find(|&i| !(lo[i] <= hi[i])) {
        return Err(Error::InvalidInput(format!(
            "box bound lo[{i}] = {} exceeds hi[{i}] = {}",
            lo[i], hi[i]
        )));
    }
    Ok(ProxOracle::Box {
        lo: lo.clone(),
        hi: hi.clone(),
    })
}

fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

impl ProxOracle {
    pub fn dim(&self) -> usize {
        match self {
            ProxOracle::Zero { dim } | ProxOracle::L1 { dim, .. } => *dim,
            ProxOracle::Box { lo, .. } => lo.len(),
        }
    }

    pub fn is_zero(&self) -> bool {
        matches!(self, ProxOracle::Zero { .. })
    }

    /// `g(z)`; `f64::INFINITY` for points outside an indicator's box.
    pub fn value(&self, z: &Vector) -> f64 {
        match self {
            ProxOracle::Zero { .. } => 0.0,
            ProxOracle::L1 { lambda, .. } => lambda * z.lp_norm(1),
            ProxOracle::Box { lo, hi } => {
                let inside = z
                    .iter()
                    .zip(lo.iter().zip(hi.iter()))
                    .all(|(x, (l, h))| l <= x && x <= h);
                if inside {
                    0.0
                } else {
                    f64::INFINITY
                }
            }
        }
    }

    /// `prox_{μg}(v)`.
    pub fn prox(&self, mu: f64, v: &Vector) -> Vector {
        match self {
            ProxOracle::Zero { .. } => v.clone(),
            ProxOracle::L1 { lambda, .. } => v.map(|x| soft_threshold(x, mu * lambda)),
            ProxOracle::Box { lo, hi } => {
                Vector::from_fn(v.len(), |i, _| v[i].max(lo[i]).min(hi[i]))
            }
        }
    }

    /// `prox_{μg⋆}(v) = v − μ·prox_{g/μ}(v/μ)` (Moreau decomposition).
    pub fn prox_conjugate(&self, mu: f64, v: &Vector) -> Vector {
        v - self.prox(1.0 / mu, &(v / mu)) * mu
    }

    /// Membership test `s ∈ ∂g(x)` with absolute tolerance `tol`.
    pub fn subgradient_contains(&self, x: &Vector, s: &Vector, tol: f64) -> bool {
        if x.len() != s.len() {
            return false;
        }
        match self {
            ProxOracle::Zero { .. } => s.iter().all(|si| si.abs() <= tol),
            ProxOracle::L1 { lambda, .. } => x.iter().zip(s.iter()).all(|(&xi, &si)| {
                if xi > tol {
                    (si - lambda).abs() <= tol
                } else if xi < -tol {
                    (si + lambda).abs() <= tol
                } else {
                    si.abs() <= lambda + tol
                }
            }),
            ProxOracle::Box { lo, hi } => (0..x.len()).all(|i| {
                let (xi, si) = (x[i], s[i]);
                if xi < lo[i] - tol || xi > hi[i] + tol {
                    return false;
                }
                let at_lo = xi <= lo[i] + tol;
                let at_hi = xi >= hi[i] - tol;
                match (at_lo, at_hi) {
                    (true, true) => true,
                    (true, false) => si <= tol,
                    (false, true) => si >= -tol,
                    (false, false) => si.abs() <= tol,
                }
            }),
        }
    }

    /// Distance from `v` to the nearest point where `prox_{μg}` is not
    /// differentiable, taken componentwise (`+∞` when it is smooth).
    pub fn kink_distance(&self, mu: f64, v: &Vector) -> f64 {
        match self {
            ProxOracle::Zero { .. } => f64::INFINITY,
            ProxOracle::L1 { lambda, .. } => v
                .iter()
                .map(|x| (x.abs() - mu * lambda).abs())
                .fold(f64::INFINITY, f64::min),
            ProxOracle::Box { lo, hi } => (0..v.len())
                .map(|i| (v[i] - lo[i]).abs().min((v[i] - hi[i]).abs()))
                .fold(f64::INFINITY, f64::min),
        }
    }
}

/// `f(x) = ½xᵀQx + qᵀx + c` together with its conjugate
/// `f⋆(w) = ½(w − q)ᵀQ⁻¹(w − q) − c`.
#[derive(Debug, Clone)]
pub struct ConjugateQuadratic {
    hessian: Matrix,
    linear: Vector,
    constant: f64,
    factor: Cholesky<f64, Dyn>,
}

impl ConjugateQuadratic {
    pub fn new(q: &Matrix, linear: &Vector) -> Result<Self> {
        Self::with_constant(q, linear, 0.0)
    }

    pub fn with_constant(q: &Matrix, linear: &Vector, constant: f64) -> Result<Self> {
        let hessian = symmetrized(q)?;
        check_len(linear, hessian.nrows())?;
        let factor = Cholesky::new(hessian.clone())
            .ok_or_else(|| Error::NotPositiveDefinite(sym_eigenvalues(&hessian)[0]))?;
        Ok(Self {
            hessian,
            linear: linear.clone(),
            constant,
            factor,
        })
    }

    pub fn from_smooth(f: &dyn SmoothFunction) -> Result<Self> {
        let form = f.quadratic_form().ok_or(Error::NotQuadratic)?;
        Self::with_constant(form.hessian, form.linear, form.constant)
    }

    pub fn hessian(&self) -> &Matrix {
        &self.hessian
    }

    pub fn linear(&self) -> &Vector {
        &self.linear
    }

    pub fn dim(&self) -> usize {
        self.linear.len()
    }

    pub fn value(&self, x: &Vector) -> f64 {
        0.5 * x.dot(&(&self.hessian * x)) + self.linear.dot(x) + self.constant
    }

    /// `Q⁻¹ v`.
    pub fn solve(&self, v: &Vector) -> Vector {
        self.factor.solve(v)
    }

    pub fn conjugate(&self, w: &Vector) -> f64 {
        let shifted = w - &self.linear;
        0.5 * shifted.dot(&self.solve(&shifted)) - self.constant
    }

    /// `∇f⋆(w) = Q⁻¹(w − q)`, the maximizer in the conjugate's supremum.
    pub fn conjugate_gradient(&self, w: &Vector) -> Vector {
        self.solve(&(w - &self.linear))
    }

    /// `f⋆⋆(x) = sup_w ⟨w, x⟩ − f⋆(w)`, evaluated at its maximizer `w = Qx + q`.
    pub fn biconjugate(&self, x: &Vector) -> f64 {
        let w = &self.hessian * x + &self.linear;
        w.dot(x) - self.conjugate(&w)
    }
}

const RESOLVENT_TOL: f64 = 1e-12;
const NEWTON_MAX_ITERS: usize = 100;

/// `prox_{μf} = (I + μ∇f)⁻¹` for a fixed `μ`, factorized once when `f` is
/// quadratic and evaluated by damped Newton otherwise.
#[derive(Debug, Clone)]
pub struct Resolvent {
    f: SmoothOracle,
    mu: f64,
    factor: Option<(Cholesky<f64, Dyn>, Vector, Matrix)>,
}

impl Resolvent {
    pub fn new(f: SmoothOracle, mu: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::InvalidInput(format!("mu must be positive, got {mu}")));
        }
        let factor = match f.quadratic_form() {
            Some(form) => {
                let n = form.linear.len();
                let system = Matrix::identity(n, n) + form.hessian * mu;
                let chol = Cholesky::new(system.clone())
                    .ok_or_else(|| Error::Singular("I + μQ is not positive definite".into()))?;
                Some((chol, form.linear * mu, system))
            }
            None => None,
        };
        Ok(Self { f, mu, factor })
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn residual(&self, z: &Vector, v: &Vector) -> f64 {
        (z + self.f.gradient(z) * self.mu - v).norm()
    }

    pub fn apply(&self, v: &Vector) -> Result<Vector> {
        check_len(v, self.f.dim())?;
        match &self.factor {
            Some((chol, mu_q, system)) => {
                let rhs = v - mu_q;
                let mut z = chol.solve(&rhs);
                // one step of iterative refinement
                let r = &rhs - system * &z;
                z += chol.solve(&r);
                Ok(z)
            }
            None => self.newton(v),
        }
    }

    fn newton(&self, v: &Vector) -> Result<Vector> {
        let n = v.len();
        let tol = RESOLVENT_TOL * v.norm().max(1.0);
        let mu = self.mu;
        let merit = |z: &Vector| mu * self.f.value(z) + 0.5 * (z - v).norm_squared();
        let mut z = v.clone();
        let mut r = &z + self.f.gradient(&z) * mu - v;
        for _ in 0..NEWTON_MAX_ITERS {
            if r.norm() <= tol {
                return Ok(z);
            }
            let mut h = Matrix::identity(n, n);
            for j in 0..n {
                let e = Vector::from_fn(n, |i, _| if i == j { 1.0 } else { 0.0 });
                let col = self.f.hessian_apply(&z, &e) * mu;
                for i in 0..n {
                    h[(i, j)] += col[i];
                }
            }
            let h = (&h + h.transpose()) * 0.5;
            let step = Cholesky::new(h)
                .ok_or_else(|| Error::Singular("Newton system not positive definite".into()))?
                .solve(&(-&r));
            let slope = r.dot(&step);
            let base = merit(&z);
            let mut t = 1.0;
            loop {
                let trial = &z + &step * t;
                let trial_r = &trial + self.f.gradient(&trial) * mu - v;
                if merit(&trial) <= base + 1e-4 * t * slope || trial_r.norm() < r.norm() {
                    z = trial;
                    r = trial_r;
                    break;
                }
                t *= 0.5;
                if t < 1e-12 {
                    return Err(Error::NonConvergence {
                        iterations: NEWTON_MAX_ITERS,
                        residual: r.norm(),
                    });
                }
            }
        }
        if r.norm() <= tol {
            Ok(z)
        } else {
            Err(Error::NonConvergence {
                iterations: NEWTON_MAX_ITERS,
                residual: r.norm(),
            })
        }
    }
}

/// `z = (I + μ∇f)⁻¹ v`.
pub fn prox_smooth(f: &SmoothOracle, mu: f64, v: &Vector) -> Result<Vector> {
    Resolvent::new(f.clone(), mu)?.apply(v)
}
