//! Moreau envelope, proximal augmented Lagrangian, forward-backward envelope,
//! generalized gradient map and the `D_g` curvature quantity.

use crate::error::{Error, Result};
use crate::linalg::{check_len, Matrix, Vector};
use crate::oracles::{ProxOracle, SmoothFunction};

/// Value of an envelope together with the inner minimizer.
#[derive(Debug, Clone, PartialEq)]
pub struct EnvelopeEval {
    pub value: f64,
    pub gradient: Option<Vector>,
    pub prox_point: Vector,
}

/// Proximal augmented Lagrangian value and its partial gradients.
#[derive(Debug, Clone, PartialEq)]
pub struct PalEval {
    pub value: f64,
    pub grad_x: Vector,
    pub grad_y: Vector,
    pub prox_point: Vector,
}

fn check_mu(mu: f64) -> Result<()> {
    if mu > 0.0 && mu.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("mu must be positive, got {mu}")))
    }
}

/// `M_{μg}(v) = g(p) + ‖p − v‖²/(2μ)` with `p = prox_{μg}(v)` and
/// `∇M_{μg}(v) = (v − p)/μ`.
pub fn moreau(g: &ProxOracle, mu: f64, v: &Vector) -> Result<EnvelopeEval> {
    check_mu(mu)?;
    check_len(v, g.dim())?;
    let prox_point = g.prox(mu, v);
    let diff = v - &prox_point;
    Ok(EnvelopeEval {
        value: g.value(&prox_point) + diff.norm_squared() / (2.0 * mu),
        gradient: Some(diff / mu),
        prox_point,
    })
}

/// `𝓛_μ(x; y) = f(x) + M_{μg}(Tx + μy) − (μ/2)‖y‖²`. `t = None` means `T = I`.
pub fn pal(
    f: &dyn SmoothFunction,
    g: &ProxOracle,
    t: Option<&Matrix>,
    mu: f64,
    x: &Vector,
    y: &Vector,
) -> Result<PalEval> {
    check_mu(mu)?;
    check_len(x, f.dim())?;
    let tx = match t {
        Some(t) => {
            if t.ncols() != f.dim() {
                return Err(Error::DimensionMismatch {
                    expected: f.dim(),
                    found: t.ncols(),
                });
            }
            t * x
        }
        None => x.clone(),
    };
    check_len(y, tx.len())?;
    let env = moreau(g, mu, &(tx + y * mu))?;
    let grad_m = env.gradient.expect("moreau always returns a gradient");
    let coupled = match t {
        Some(t) => t.transpose() * &grad_m,
        None => grad_m.clone(),
    };
    Ok(PalEval {
        value: f.value(x) + env.value - 0.5 * mu * y.norm_squared(),
        grad_x: f.gradient(x) + coupled,
        grad_y: (grad_m - y) * mu,
        prox_point: env.prox_point,
    })
}

/// `F_μ(x) = f(x) + M_{μg}(x − μ∇f(x)) − (μ/2)‖∇f(x)‖²`.
pub fn fb_envelope(f: &dyn SmoothFunction, g: &ProxOracle, mu: f64, x: &Vector) -> Result<EnvelopeEval> {
    check_mu(mu)?;
    check_len(x, f.dim())?;
    check_len(x, g.dim())?;
    let grad = f.gradient(x);
    let env = moreau(g, mu, &(x - &grad * mu))?;
    Ok(EnvelopeEval {
        value: f.value(x) + env.value - 0.5 * mu * grad.norm_squared(),
        gradient: None,
        prox_point: env.prox_point,
    })
}

/// `G_μ(x) = (x − prox_{μg}(x − μ∇f(x)))/μ`.
pub fn gmap(f: &dyn SmoothFunction, g: &ProxOracle, mu: f64, x: &Vector) -> Result<Vector> {
    check_mu(mu)?;
    check_len(x, f.dim())?;
    check_len(x, g.dim())?;
    let p = g.prox(mu, &(x - f.gradient(x) * mu));
    Ok((x - p) / mu)
}

/// `∇F_μ(x) = (I − μ∇²f(x)) G_μ(x)`.
pub fn fb_gradient(f: &dyn SmoothFunction, g: &ProxOracle, mu: f64, x: &Vector) -> Result<Vector> {
    if !f.twice_differentiable() {
        return Err(Error::NotTwiceDifferentiable);
    }
    let gm = gmap(f, g, mu, x)?;
    Ok(&gm - f.hessian_apply(x, &gm) * mu)
}

/// `F(x) = f(x) + g(x)`; `+∞` when `x` leaves an indicator's domain.
pub fn objective(f: &dyn SmoothFunction, g: &ProxOracle, x: &Vector) -> f64 {
    let gx = g.value(x);
    if gx.is_infinite() {
        return f64::INFINITY;
    }
    f.value(x) + gx
}

/// `D_g(x, α) = −2α·min_y [⟨∇f(x), y − x⟩ + (α/2)‖y − x‖² + g(y) − g(x)]`.
///
/// The inner minimizer is `y = prox_{g/α}(x − ∇f(x)/α)`. Returns `+∞` when
/// `g(x)` is infinite.
pub fn dg_curvature(f: &dyn SmoothFunction, g: &ProxOracle, alpha: f64, x: &Vector) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(Error::InvalidInput(format!("alpha must be positive, got {alpha}")));
    }
    check_len(x, f.dim())?;
    let gx = g.value(x);
    if gx.is_infinite() {
        return Ok(f64::INFINITY);
    }
    let grad = f.gradient(x);
    let y = g.prox(1.0 / alpha, &(x - &grad / alpha));
    let d = &y - x;
    let inner = grad.dot(&d) + 0.5 * alpha * d.norm_squared() + g.value(&y) - gx;
    Ok(-2.0 * alpha * inner)
}
