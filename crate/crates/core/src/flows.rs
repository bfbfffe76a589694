//! Continuous-time dynamics and their fixed-step integration.
//!
//! Every flow has the form `ṡ = −s + u(s)` for a flow-specific nonlinearity
//! `u`:
//!
//! | kind              | state      | `u(s)`                                   |
//! |-------------------|------------|------------------------------------------|
//! | `ProxGradient`    | `x ∈ ℝⁿ`   | `prox_{μg}(x − μ∇f(x))`                  |
//! | `DrSplitting`     | `z ∈ ℝⁿ`   | `R_{μg}(R_{μf}(z))`                      |
//! | `DualDr`          | `w ∈ ℝᵐ`   | `R_{μg₁}(R_{μf₁}(w))` on the dual pair   |
//!
//! The primal-dual (Arrow-Hurwicz-Uzawa) flow on the proximal augmented
//! Lagrangian is integrated on the stacked state `(x, y) ∈ ℝⁿ⁺ᵐ`.

use std::fmt;
use std::io::Write;
use std::path::Path;
use std::str::FromStr;

use nalgebra::linalg::Cholesky;
use serde::{Deserialize, Serialize};

use crate::envelopes::{fb_envelope, gmap, pal};
use crate::error::{Error, Result};
use crate::linalg::{all_finite, check_len, Matrix, Vector};
use crate::oracles::{ConjugateQuadratic, ProxOracle, Resolvent};
use crate::problem::{ProblemSpec, ReferenceSolution};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FlowKind {
    ProxGradient,
    DrSplitting,
    AhuPrimalDual,
    DualDr,
}

impl FlowKind {
    pub fn as_str(self) -> &'static str {
        match self {
            FlowKind::ProxGradient => "prox_gradient",
            FlowKind::DrSplitting => "dr_splitting",
            FlowKind::AhuPrimalDual => "ahu_primal_dual",
            FlowKind::DualDr => "dual_dr",
        }
    }
}

impl fmt::Display for FlowKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for FlowKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "pg" | "prox_gradient" | "prox-gradient" => Ok(FlowKind::ProxGradient),
            "dr" | "dr_splitting" | "dr-splitting" => Ok(FlowKind::DrSplitting),
            "ahu" | "ahu_primal_dual" | "primal-dual" => Ok(FlowKind::AhuPrimalDual),
            "dual-dr" | "dual_dr" => Ok(FlowKind::DualDr),
            other => Err(Error::InvalidInput(format!("unknown flow: {other}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Euler,
    Rk4,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "euler" => Ok(Method::Euler),
            "rk4" => Ok(Method::Rk4),
            other => Err(Error::InvalidInput(format!("unknown integration method: {other}"))),
        }
    }
}

/// `ẋ = −(x − prox_{μg}(x − μ∇f(x)))`.
pub fn pg_field(p: &ProblemSpec, x: &Vector) -> Result<Vector> {
    p.require_identity()?;
    Ok(gmap(p.f.as_ref(), &p.g, p.mu, x)? * (-p.mu))
}

/// Right-hand side of the primal-descent / dual-ascent flow on the proximal
/// augmented Lagrangian, for general `T`.
pub fn ahu_field(p: &ProblemSpec, x: &Vector, y: &Vector) -> Result<(Vector, Vector)> {
    let t = match &p.coupling {
        crate::problem::Coupling::Identity => None,
        crate::problem::Coupling::Matrix(t) => Some(t),
    };
    let e = pal(p.f.as_ref(), &p.g, t, p.mu, x, y)?;
    Ok((e.grad_x * (-p.mu), e.grad_y))
}

/// `R_{μg}(v) = 2 prox_{μg}(v) − v`.
pub fn reflected_prox_g(p: &ProblemSpec, v: &Vector) -> Vector {
    p.g.prox(p.mu, v) * 2.0 - v
}

/// `R_{μf}(v) = 2 prox_{μf}(v) − v`.
pub fn reflected_prox_f(p: &ProblemSpec, v: &Vector) -> Result<Vector> {
    let res = Resolvent::new(p.f.clone(), p.mu)?;
    Ok(res.apply(v)? * 2.0 - v)
}

/// `ż = −z + R_{μg}(R_{μf}(z))`.
pub fn dr_field(p: &ProblemSpec, z: &Vector) -> Result<Vector> {
    p.require_identity()?;
    let res = Resolvent::new(p.f.clone(), p.mu)?;
    dr_field_with(&res, &p.g, z)
}

fn dr_composite(res: &Resolvent, g: &ProxOracle, z: &Vector) -> Result<Vector> {
    let rf = res.apply(z)? * 2.0 - z;
    Ok(g.prox(res.mu(), &rf) * 2.0 - rf)
}

fn dr_field_with(res: &Resolvent, g: &ProxOracle, z: &Vector) -> Result<Vector> {
    Ok(dr_composite(res, g, z)? - z)
}

/// Douglas-Rachford on the dual of `minimize f(x) + g(z)` s.t. `Tx − z = r`,
/// i.e. with `S = −I`. `f` must be a strongly convex quadratic and `T` have
/// full row rank.
///
/// With `f₁(ζ) = f⋆(−Tᵀζ) + rᵀζ` and `g₁(ζ) = g⋆(ζ)`:
/// `prox_{μf₁}` is the linear solve `(I + μTQ⁻¹Tᵀ)ζ = v − μ(TQ⁻¹q + r)`, and
/// `prox_{μg⋆}` comes from the Moreau decomposition.
#[derive(Debug, Clone)]
pub struct DualDr {
    cq: ConjugateQuadratic,
    t: Matrix,
    mu: f64,
    factor: Cholesky<f64, nalgebra::Dyn>,
    shift: Vector,
    g: ProxOracle,
}

impl DualDr {
    pub fn new(p: &ProblemSpec) -> Result<Self> {
        let cq = ConjugateQuadratic::from_smooth(p.f.as_ref())?;
        p.require_full_row_rank()?;
        let t = p.t_matrix();
        let m = t.nrows();
        let q_inv_tt = Matrix::from_columns(
            &(0..m)
                .map(|i| cq.solve(&t.row(i).transpose()))
                .collect::<Vec<_>>(),
        );
        let system = Matrix::identity(m, m) + &t * q_inv_tt * p.mu;
        let system = (&system + system.transpose()) * 0.5;
        let factor = Cholesky::new(system).ok_or_else(|| Error::Singular("I + μTQ⁻¹Tᵀ".into()))?;
        let shift = (&t * cq.solve(cq.linear()) + p.offset_vector()) * p.mu;
        Ok(Self {
            cq,
            t,
            mu: p.mu,
            factor,
            shift,
            g: p.g.clone(),
        })
    }

    pub fn prox_f1(&self, v: &Vector) -> Vector {
        self.factor.solve(&(v - &self.shift))
    }

    pub fn prox_g1(&self, v: &Vector) -> Vector {
        self.g.prox_conjugate(self.mu, v)
    }

    pub fn field(&self, w: &Vector) -> Vector {
        let rf = self.prox_f1(w) * 2.0 - w;
        let rg = self.prox_g1(&rf) * 2.0 - &rf;
        rg - w
    }

    /// Dual iterate `ζ = prox_{μf₁}(w)`.
    pub fn dual(&self, w: &Vector) -> Vector {
        self.prox_f1(w)
    }

    /// Primal point `x = ∇f⋆(−Tᵀζ) = −Q⁻¹(q + Tᵀζ)`.
    pub fn primal(&self, zeta: &Vector) -> Vector {
        -self.cq.solve(&(self.cq.linear() + self.t.transpose() * zeta))
    }
}

/// `ζ̇ = −ζ + R_{μg₁}(R_{μf₁}(ζ))`.
pub fn dual_dr_field(p: &ProblemSpec, w: &Vector) -> Result<Vector> {
    let d = DualDr::new(p)?;
    check_len(w, p.m())?;
    Ok(d.field(w))
}

/// Per-sample diagnostics; `NaN` where a quantity is not defined for the
/// flow (or no reference is attached, for the distance).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Diagnostics {
    pub distance_to_ref: f64,
    pub envelope_value: f64,
    pub gmap_norm: f64,
}

#[derive(Debug, Clone)]
pub struct FlowSystem {
    kind: FlowKind,
    problem: ProblemSpec,
    resolvent: Option<Resolvent>,
    dual: Option<DualDr>,
    reference: Option<Vector>,
}

impl FlowSystem {
    pub fn new(kind: FlowKind, problem: ProblemSpec) -> Result<Self> {
        let mut resolvent = None;
        let mut dual = None;
        match kind {
            FlowKind::ProxGradient => problem.require_identity()?,
            FlowKind::DrSplitting => {
                problem.require_identity()?;
                resolvent = Some(Resolvent::new(problem.f.clone(), problem.mu)?);
            }
            FlowKind::AhuPrimalDual => {
                if problem.offset.as_ref().is_some_and(|r| r.iter().any(|&v| v != 0.0)) {
                    return Err(Error::InvalidInput("primal-dual flow requires r = 0".into()));
                }
            }
            FlowKind::DualDr => dual = Some(DualDr::new(&problem)?),
        }
        Ok(Self {
            kind,
            problem,
            resolvent,
            dual,
            reference: None,
        })
    }

    pub fn kind(&self) -> FlowKind {
        self.kind
    }

    pub fn problem(&self) -> &ProblemSpec {
        &self.problem
    }

    pub fn dual_dr(&self) -> Option<&DualDr> {
        self.dual.as_ref()
    }

    pub fn resolvent(&self) -> Option<&Resolvent> {
        self.resolvent.as_ref()
    }

    pub fn state_dim(&self) -> usize {
        match self.kind {
            FlowKind::ProxGradient | FlowKind::DrSplitting => self.problem.n(),
            FlowKind::AhuPrimalDual => self.problem.n() + self.problem.m(),
            FlowKind::DualDr => self.problem.m(),
        }
    }

    pub fn reference(&self) -> Option<&Vector> {
        self.reference.as_ref()
    }

    /// Attaches the equilibrium state used for the distance diagnostic.
    pub fn with_reference(mut self, state: Vector) -> Result<Self> {
        check_len(&state, self.state_dim())?;
        self.reference = Some(state);
        Ok(self)
    }

    /// Maps a discrete-solver solution to this flow's equilibrium state:
    /// `x⋆` (pg), `x⋆ + μ∇f(x⋆)` (dr), `(x⋆, y⋆)` (ahu), `y⋆ − μz⋆` (dual dr).
    pub fn equilibrium_from(&self, sol: &ReferenceSolution) -> Vector {
        let mu = self.problem.mu;
        match self.kind {
            FlowKind::ProxGradient => sol.x.clone(),
            FlowKind::DrSplitting => &sol.x + self.problem.f.gradient(&sol.x) * mu,
            FlowKind::AhuPrimalDual => {
                Vector::from_iterator(self.state_dim(), sol.x.iter().chain(sol.y.iter()).copied())
            }
            FlowKind::DualDr => &sol.y - &sol.z * mu,
        }
    }

    /// Solves the problem with the independent discrete solver and attaches
    /// the mapped equilibrium.
    pub fn attach_reference(self) -> Result<(Self, ReferenceSolution)> {
        let sol = self.problem.reference()?;
        let state = self.equilibrium_from(&sol);
        Ok((self.with_reference(state)?, sol))
    }

    fn split(&self, s: &Vector) -> (Vector, Vector) {
        let n = self.problem.n();
        (s.rows(0, n).into_owned(), s.rows(n, s.len() - n).into_owned())
    }

    /// The nonlinearity `u(s)` with `ṡ = −s + u(s)`.
    pub fn nonlinearity(&self, s: &Vector) -> Result<Vector> {
        Ok(self.field(s)? + s)
    }

    pub fn field(&self, s: &Vector) -> Result<Vector> {
        check_len(s, self.state_dim())?;
        let p = &self.problem;
        match self.kind {
            FlowKind::ProxGradient => pg_field(p, s),
            FlowKind::DrSplitting => dr_field_with(self.resolvent.as_ref().unwrap(), &p.g, s),
            FlowKind::AhuPrimalDual => {
                let (x, y) = self.split(s);
                let (dx, dy) = ahu_field(p, &x, &y)?;
                Ok(Vector::from_iterator(s.len(), dx.iter().chain(dy.iter()).copied()))
            }
            FlowKind::DualDr => Ok(self.dual.as_ref().unwrap().field(s)),
        }
    }

    /// Primal estimate carried by a state: `x`, `prox_{μf}(z)`, or
    /// `∇f⋆(−Tᵀζ)` for the dual flow.
    pub fn primal(&self, s: &Vector) -> Result<Vector> {
        match self.kind {
            FlowKind::ProxGradient => Ok(s.clone()),
            FlowKind::DrSplitting => self.resolvent.as_ref().unwrap().apply(s),
            FlowKind::AhuPrimalDual => Ok(self.split(s).0),
            FlowKind::DualDr => {
                let d = self.dual.as_ref().unwrap();
                Ok(d.primal(&d.dual(s)))
            }
        }
    }

    pub fn diagnostics(&self, s: &Vector) -> Result<Diagnostics> {
        let p = &self.problem;
        let distance_to_ref = self.reference.as_ref().map_or(f64::NAN, |r| (s - r).norm());
        let (envelope_value, gmap_norm) = match self.kind {
            FlowKind::DualDr => (f64::NAN, f64::NAN),
            FlowKind::AhuPrimalDual if !p.is_identity() => {
                let (x, y) = self.split(s);
                let t = p.t_matrix();
                (pal(p.f.as_ref(), &p.g, Some(&t), p.mu, &x, &y)?.value, f64::NAN)
            }
            FlowKind::AhuPrimalDual => {
                let (x, y) = self.split(s);
                (
                    pal(p.f.as_ref(), &p.g, None, p.mu, &x, &y)?.value,
                    gmap(p.f.as_ref(), &p.g, p.mu, &x)?.norm(),
                )
            }
            _ => {
                let x = self.primal(s)?;
                (
                    fb_envelope(p.f.as_ref(), &p.g, p.mu, &x)?.value,
                    gmap(p.f.as_ref(), &p.g, p.mu, &x)?.norm(),
                )
            }
        };
        Ok(Diagnostics {
            distance_to_ref,
            envelope_value,
            gmap_norm,
        })
    }

    /// Lipschitz bound on the field, used to pick fixed-point step sizes.
    fn field_lipschitz(&self) -> f64 {
        let p = &self.problem;
        let t_norm = p.t_matrix().singular_values().max();
        p.mu * p.l_f() + t_norm * t_norm + p.mu * t_norm + t_norm + p.mu
    }
}

/// Time-stamped states with per-sample diagnostics.
#[derive(Debug, Clone, Default)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<Vector>,
    pub diagnostics: Vec<Diagnostics>,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn distances(&self) -> Vec<f64> {
        self.diagnostics.iter().map(|d| d.distance_to_ref).collect()
    }

    pub fn envelope_values(&self) -> Vec<f64> {
        self.diagnostics.iter().map(|d| d.envelope_value).collect()
    }

    /// CSV with header `t,dist,envelope,gmap_norm,state_0,…,state_{d−1}`;
    /// floats in scientific notation with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        let dim = self.states.first().map_or(0, |s| s.len());
        let mut header = String::from("t,dist,envelope,gmap_norm");
        for i in 0..dim {
            header.push_str(&format!(",state_{i}"));
        }
        writeln!(out, "{header}")?;
        for ((t, s), d) in self.times.iter().zip(&self.states).zip(&self.diagnostics) {
            let mut line = format!(
                "{},{},{},{}",
                fmt17(*t),
                fmt17(d.distance_to_ref),
                fmt17(d.envelope_value),
                fmt17(d.gmap_norm)
            );
            for v in s.iter() {
                line.push(',');
                line.push_str(&fmt17(*v));
            }
            writeln!(out, "{line}")?;
        }
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf).expect("writing to a Vec cannot fail");
        String::from_utf8(buf).expect("csv is ascii")
    }

    pub fn save_csv(&self, path: impl AsRef<Path>) -> std::io::Result<()> {
        let file = std::fs::File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file))
    }
}

/// 17 significant digits, scientific notation; `NaN`/`inf` spelled out.
pub fn fmt17(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else if v.is_nan() {
        "NaN".to_string()
    } else if v > 0.0 {
        "inf".to_string()
    } else {
        "-inf".to_string()
    }
}

fn rk4_step(sys: &FlowSystem, s: &Vector, h: f64) -> Result<Vector> {
    let k1 = sys.field(s)?;
    let k2 = sys.field(&(s + &k1 * (h / 2.0)))?;
    let k3 = sys.field(&(s + &k2 * (h / 2.0)))?;
    let k4 = sys.field(&(s + &k3 * h))?;
    Ok(s + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0))
}

fn step(sys: &FlowSystem, s: &Vector, h: f64, method: Method) -> Result<Vector> {
    match method {
        Method::Euler => Ok(s + sys.field(s)? * h),
        Method::Rk4 => rk4_step(sys, s, h),
    }
}

/// Fixed-step integration from `x0` to `t_end`, recording every step.
///
/// Forward Euler with `h = 1` on the proximal gradient flow is exactly the
/// proximal gradient iteration.
pub fn integrate(sys: &FlowSystem, x0: &Vector, h: f64, t_end: f64, method: Method) -> Result<Trajectory> {
    if !(h > 0.0 && h.is_finite()) {
        return Err(Error::InvalidInput(format!("step size must be positive, got {h}")));
    }
    if !(t_end.is_finite() && t_end >= h * (1.0 - 1e-12)) {
        return Err(Error::InvalidInput(format!("t_end = {t_end} must be at least h = {h}")));
    }
    check_len(x0, sys.state_dim())?;
    if !all_finite(x0) {
        return Err(Error::NonFinite(0.0));
    }
    let steps = (t_end / h).round() as usize;
    let mut traj = Trajectory {
        times: Vec::with_capacity(steps + 1),
        states: Vec::with_capacity(steps + 1),
        diagnostics: Vec::with_capacity(steps + 1),
    };
    let mut s = x0.clone();
    traj.times.push(0.0);
    traj.diagnostics.push(sys.diagnostics(&s)?);
    traj.states.push(s.clone());
    for k in 1..=steps {
        let t = k as f64 * h;
        s = step(sys, &s, h, method)?;
        if !all_finite(&s) {
            return Err(Error::NonFinite(t));
        }
        traj.times.push(t);
        traj.diagnostics.push(sys.diagnostics(&s)?);
        traj.states.push(s.clone());
    }
    Ok(traj)
}

#[derive(Debug, Clone)]
pub struct Equilibrium {
    pub state: Vector,
    /// `x⋆` recovered from the state (`prox_{μf}(z⋆)` for the DR flow).
    pub primal: Vector,
    pub residual: f64,
    pub iterations: usize,
    pub converged: bool,
}

const EQUILIBRIUM_MAX_ITERS: usize = 1_000_000;

/// Drives the flow to a point with `‖field‖ ≤ tol`.
///
/// The gradient-type flows use the damped fixed-point iteration
/// `s ← s + θ·field(s)` (`θ = 1` for pg, `½` for the DR flows); the
/// primal-dual flow takes RK4 steps sized by a field Lipschitz bound. A
/// non-converged run is reported through `converged = false`.
pub fn solve_equilibrium(sys: &FlowSystem, x0: &Vector, tol: f64) -> Result<Equilibrium> {
    if !(tol > 0.0) {
        return Err(Error::InvalidInput(format!("tolerance must be positive, got {tol}")));
    }
    check_len(x0, sys.state_dim())?;
    let p = sys.problem();
    let theta = match sys.kind {
        FlowKind::ProxGradient if p.mu * p.l_f() < 2.0 => 1.0,
        FlowKind::ProxGradient => 1.0 / (p.mu * p.l_f()),
        FlowKind::DrSplitting | FlowKind::DualDr => 0.5,
        FlowKind::AhuPrimalDual => 1.0 / sys.field_lipschitz(),
    };
    let mut s = x0.clone();
    let mut best = (s.clone(), f64::INFINITY);
    for k in 0..EQUILIBRIUM_MAX_ITERS {
        let field = sys.field(&s)?;
        let residual = field.norm();
        if !residual.is_finite() {
            break;
        }
        if residual < best.1 {
            best = (s.clone(), residual);
        }
        if residual <= tol {
            return Ok(Equilibrium {
                primal: sys.primal(&s)?,
                state: s,
                residual,
                iterations: k,
                converged: true,
            });
        }
        s = match sys.kind {
            FlowKind::AhuPrimalDual => rk4_step(sys, &s, theta)?,
            _ => &s + field * theta,
        };
    }
    let (state, residual) = best;
    Ok(Equilibrium {
        primal: sys.primal(&state)?,
        state,
        residual,
        iterations: EQUILIBRIUM_MAX_ITERS,
        converged: false,
    })
}
