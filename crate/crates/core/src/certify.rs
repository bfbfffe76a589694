//! Analytic contraction factors and rates, the scalar LMI condition, and
//! sampling-based checks of the quadratic constraint, contraction, decay
//! rates and the proximal PL inequality.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize, Serializer};

use crate::envelopes::fb_envelope;
use crate::envelopes::gmap;
use crate::error::{Error, Result};
use crate::flows::{fmt17, integrate, FlowKind, FlowSystem, Method, Trajectory};
use crate::linalg::{gaussian_vector, Vector};
use crate::problem::ProblemSpec;

/// Radii of the Gaussian sampling clouds.
pub const SAMPLE_RADII: [f64; 3] = [0.1, 1.0, 10.0];

/// `σ = max{|1 − μm_f|, |1 − μL_f|}`.
pub fn sigma_bound(m_f: f64, l_f: f64, mu: f64) -> Result<f64> {
    if !(m_f > 0.0) {
        return Err(Error::NotStronglyConvex(m_f));
    }
    if !(l_f >= m_f) || !l_f.is_finite() {
        return Err(Error::InvalidInput(format!("need m_f <= L_f, got m_f = {m_f}, L_f = {l_f}")));
    }
    if !(mu > 0.0) {
        return Err(Error::InvalidInput(format!("mu must be positive, got {mu}")));
    }
    Ok((1.0 - mu * m_f).abs().max((1.0 - mu * l_f).abs()))
}

/// `p² − 2(1 − ρ)p + σ²`.
pub fn lmi_residual(p: f64, sigma: f64, rho: f64) -> f64 {
    p * p - 2.0 * (1.0 - rho) * p + sigma * sigma
}

/// Scalar reduction of the KYP inequality with `P = pI`: feasible iff some
/// `p > 0` has `p² − 2(1 − ρ)p + σ² ≤ 0`, i.e. iff `ρ ≤ 1 − σ`. Returns the
/// vertex `p = 1 − ρ` as witness.
pub fn lmi_feasibility(sigma: f64, rho: f64) -> Result<Option<f64>> {
    if !(sigma >= 0.0) {
        return Err(Error::InvalidInput(format!("sigma must be nonnegative, got {sigma}")));
    }
    if !(rho < 1.0) {
        return Err(Error::InvalidInput(format!(
            "rho = {rho} >= 1 leaves no positive diagonal in the reduced LMI"
        )));
    }
    if !(rho > 0.0) {
        return Err(Error::InvalidInput(format!("rho must be positive, got {rho}")));
    }
    let vertex = 1.0 - rho;
    // vertex value σ² − (1 − ρ)² factors as (σ − (1 − ρ))(σ + (1 − ρ))
    if sigma <= vertex {
        Ok(Some(vertex))
    } else {
        Ok(None)
    }
}

/// Builds the nonlinearity `u` of the pg or DR flow.
fn flow_nonlinearity(p: &ProblemSpec, kind: FlowKind) -> Result<FlowSystem> {
    match kind {
        FlowKind::ProxGradient | FlowKind::DrSplitting => FlowSystem::new(kind, p.clone()),
        other => Err(Error::InvalidInput(format!("no sector certificate for the {other} flow"))),
    }
}

/// Random pairs `(ξ, ξ̂)` from Gaussian clouds of several radii around
/// `center`, with perturbations ranging from tiny to large.
pub fn sample_pairs(center: &Vector, count: usize, seed: u64) -> Vec<(Vector, Vector)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = center.len();
    let offsets = [1e-3, 1e-1, 1.0, 10.0];
    (0..count)
        .map(|k| {
            let r = SAMPLE_RADII[k % SAMPLE_RADII.len()];
            let xi = center + gaussian_vector(&mut rng, n, r);
            let xi_hat = &xi + gaussian_vector(&mut rng, n, offsets[k % offsets.len()]);
            (xi, xi_hat)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QcReport {
    /// `max ‖u − û‖² − σ²‖ξ − ξ̂‖²` over the sampled pairs.
    pub max_violation: f64,
    /// Same, divided by `1 + ‖ξ − ξ̂‖²`.
    pub max_relative_violation: f64,
    pub sigma: f64,
    pub pairs: usize,
    pub passed: bool,
}

pub const QC_TOLERANCE: f64 = 1e-10;

/// Samples the pointwise quadratic inequality
/// `[ξ−ξ̂; u−û]ᵀ diag(σ²I, −I) [ξ−ξ̂; u−û] ≥ 0` for the pg nonlinearity
/// `prox_{μg}(ξ − μ∇f(ξ))` or the DR composite `R_{μg}R_{μf}`.
pub fn quadratic_constraint_check(p: &ProblemSpec, kind: FlowKind, samples: usize, seed: u64) -> Result<QcReport> {
    let sigma = sigma_bound(p.m_f(), p.l_f(), p.mu)?;
    let sys = flow_nonlinearity(p, kind)?;
    let pairs = sample_pairs(&Vector::zeros(p.n()), samples, seed);
    qc_on_pairs(&sys, sigma, &pairs)
}

pub fn qc_on_pairs(sys: &FlowSystem, sigma: f64, pairs: &[(Vector, Vector)]) -> Result<QcReport> {
    let mut max_violation = if pairs.is_empty() { 0.0 } else { f64::NEG_INFINITY };
    let mut max_relative_violation = max_violation;
    for (xi, xi_hat) in pairs {
        let du = sys.nonlinearity(xi)? - sys.nonlinearity(xi_hat)?;
        let dxi_sq = (xi - xi_hat).norm_squared();
        let v = du.norm_squared() - sigma * sigma * dxi_sq;
        max_violation = max_violation.max(v);
        max_relative_violation = max_relative_violation.max(v / (1.0 + dxi_sq));
    }
    Ok(QcReport {
        max_violation,
        max_relative_violation,
        sigma,
        pairs: pairs.len(),
        passed: max_relative_violation <= QC_TOLERANCE,
    })
}

/// `σ̂ = max ‖u(ξ) − u(ξ̂)‖ / ‖ξ − ξ̂‖` over the pairs (coincident pairs are
/// skipped).
pub fn empirical_contraction<F>(mut u: F, pairs: &[(Vector, Vector)]) -> Result<f64>
where
    F: FnMut(&Vector) -> Result<Vector>,
{
    if pairs.is_empty() {
        return Err(Error::InvalidInput("empirical contraction needs at least one pair".into()));
    }
    let mut worst = 0.0_f64;
    for (a, b) in pairs {
        let d = (a - b).norm();
        if d == 0.0 {
            continue;
        }
        worst = worst.max((u(a)? - u(b)?).norm() / d);
    }
    Ok(worst)
}

/// Least-squares slope of `−log(dist)` against `t` over the samples with
/// `dist ∈ [1e−10, dist(0)/10]`.
pub fn empirical_rate(traj: &Trajectory) -> Result<f64> {
    let dist = traj.distances();
    if dist.iter().any(|d| d.is_nan()) {
        return Err(Error::MissingDiagnostics("distance"));
    }
    if dist.iter().filter(|&&d| d > 1e-12).count() < 10 {
        return Err(Error::ConvergedTooFast);
    }
    let upper = dist[0] / 10.0;
    let window: Vec<(f64, f64)> = traj
        .times
        .iter()
        .zip(&dist)
        .filter(|(_, &d)| (1e-10..=upper).contains(&d))
        .map(|(&t, &d)| (t, -d.ln()))
        .collect();
    if window.len() < 2 {
        return Err(Error::ConvergedTooFast);
    }
    let k = window.len() as f64;
    let t_mean = window.iter().map(|w| w.0).sum::<f64>() / k;
    let y_mean = window.iter().map(|w| w.1).sum::<f64>() / k;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (t, y) in &window {
        sxy += (t - t_mean) * (y - y_mean);
        sxx += (t - t_mean) * (t - t_mean);
    }
    if sxx == 0.0 {
        return Err(Error::ConvergedTooFast);
    }
    Ok(sxy / sxx)
}

/// `‖z(t) − z⋆‖ ≤ c·e^{−ρt}‖z(0) − z⋆‖` over the trajectory with `c = 1 + 1e−6`.
pub fn exponential_envelope_holds(traj: &Trajectory, rho: f64) -> Result<bool> {
    let dist = traj.distances();
    if dist.iter().any(|d| d.is_nan()) {
        return Err(Error::MissingDiagnostics("distance"));
    }
    let d0 = dist[0];
    Ok(traj
        .times
        .iter()
        .zip(&dist)
        .all(|(&t, &d)| d <= (1.0 + 1e-6) * (-rho * t).exp() * d0))
}

/// `γ = 2κ/|μκ − 1|` from the constant `κ` of the proximal PL inequality in
/// `D_g` form.
pub fn pl_gamma_from_kappa(pl_kappa: f64, mu: f64) -> Result<f64> {
    if !(pl_kappa > 0.0) || !(mu > 0.0) {
        return Err(Error::InvalidInput(format!(
            "need pl_kappa > 0 and mu > 0, got {pl_kappa}, {mu}"
        )));
    }
    let denom = (mu * pl_kappa - 1.0).abs();
    if denom <= 1e-12 {
        return Err(Error::Singular(format!("mu * pl_kappa = {} equals 1", mu * pl_kappa)));
    }
    Ok(2.0 * pl_kappa / denom)
}

fn ser17<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        let raw = serde_json::value::RawValue::from_string(fmt17(*v)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    } else {
        s.serialize_none()
    }
}

fn ser17_opt<S: Serializer>(v: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    match v {
        Some(v) => ser17(v, s),
        None => s.serialize_none(),
    }
}

fn de_nullable<'de, D: serde::Deserializer<'de>>(d: D) -> std::result::Result<f64, D::Error> {
    Ok(Option::<f64>::deserialize(d)?.unwrap_or(f64::NAN))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PLReport {
    #[serde(serialize_with = "ser17")]
    pub gamma: f64,
    #[serde(serialize_with = "ser17")]
    pub mu: f64,
    #[serde(serialize_with = "ser17")]
    pub rate: f64,
    pub sampled_violations: usize,
    #[serde(serialize_with = "ser17", deserialize_with = "de_nullable")]
    pub min_ratio: f64,
    #[serde(serialize_with = "ser17")]
    pub f_star: f64,
    #[serde(rename = "L_f", serialize_with = "ser17")]
    pub l_f: f64,
    pub samples: usize,
    pub seed: u64,
}

/// Samples `‖G_μ(x)‖² ≥ γ(F_μ(x) − F_μ⋆)` on Gaussian clouds around the
/// reference minimizer.
pub fn pl_check(p: &ProblemSpec, gamma: f64, samples: usize, seed: u64) -> Result<PLReport> {
    p.require_identity()?;
    let (mu, l_f) = (p.mu, p.l_f());
    if !(mu > 0.0 && mu * l_f < 1.0) {
        return Err(Error::InvalidInput(format!("mu = {mu} must lie in (0, 1/L_f) = (0, {})", 1.0 / l_f)));
    }
    if !(gamma > 0.0) {
        return Err(Error::InvalidInput(format!("gamma must be positive, got {gamma}")));
    }
    let sol = p.reference()?;
    let f_star = sol.objective;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut min_ratio = f64::INFINITY;
    let per_radius = samples / SAMPLE_RADII.len();
    for (i, r) in SAMPLE_RADII.iter().enumerate() {
        let count = if i + 1 == SAMPLE_RADII.len() {
            samples - per_radius * (SAMPLE_RADII.len() - 1)
        } else {
            per_radius
        };
        for _ in 0..count {
            let dx = gaussian_vector(&mut rng, p.n(), *r);
            if dx.norm() <= 1e-8 {
                continue;
            }
            let x = &sol.x + dx;
            let env = fb_envelope(p.f.as_ref(), &p.g, mu, &x)?.value;
            let gap = env - f_star;
            if gap < -1e-9 * f_star.abs().max(1.0) {
                return Err(Error::InconsistentReference {
                    value: env,
                    optimum: f_star,
                });
            }
            if gap < 1e-12 {
                continue;
            }
            let ratio = gmap(p.f.as_ref(), &p.g, mu, &x)?.norm_squared() / gap;
            min_ratio = min_ratio.min(ratio);
            if ratio < gamma {
                violations += 1;
            }
        }
    }
    Ok(PLReport {
        gamma,
        mu,
        rate: gamma * mu * (1.0 - mu * l_f),
        sampled_violations: violations,
        min_ratio,
        f_star,
        l_f,
        samples,
        seed,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecayCheck {
    pub passed: bool,
    /// Largest `(F_μ(x(t)) − F⋆) / (e^{−ρt}(F_μ(x(0)) − F⋆))`.
    pub worst_margin: f64,
}

/// `F_μ(x(t)) − F_μ⋆ ≤ e^{−ρt}(F_μ(x(0)) − F_μ⋆)` at every sample, with
/// multiplicative slack `1 + 1e−6` and an absolute roundoff floor of
/// `1e−12·max(1, |F⋆|)`.
pub fn envelope_decay_check(traj: &Trajectory, report: &PLReport) -> Result<DecayCheck> {
    let env = traj.envelope_values();
    if env.is_empty() || env.iter().any(|v| v.is_nan()) {
        return Err(Error::MissingDiagnostics("envelope"));
    }
    let f_star = report.f_star;
    let floor = 1e-12 * f_star.abs().max(1.0);
    let v0 = env[0] - f_star;
    let mut passed = true;
    let mut worst_margin = 0.0_f64;
    for (&t, &e) in traj.times.iter().zip(&env) {
        let lhs = e - f_star;
        let rhs = (-report.rate * t).exp() * v0;
        if lhs > (1.0 + 1e-6) * rhs + floor {
            passed = false;
        }
        if rhs > floor {
            worst_margin = worst_margin.max(lhs / rhs);
        } else if lhs > floor {
            worst_margin = f64::INFINITY;
        }
    }
    Ok(DecayCheck { passed, worst_margin })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateCertificate {
    pub kind: FlowKind,
    #[serde(serialize_with = "ser17")]
    pub m_f: f64,
    #[serde(rename = "L_f", serialize_with = "ser17")]
    pub l_f: f64,
    #[serde(serialize_with = "ser17")]
    pub mu: f64,
    #[serde(serialize_with = "ser17")]
    pub sigma: f64,
    #[serde(serialize_with = "ser17")]
    pub rho_certified: f64,
    #[serde(serialize_with = "ser17_opt")]
    pub lmi_witness_p: Option<f64>,
    #[serde(serialize_with = "ser17", deserialize_with = "de_nullable")]
    pub sigma_empirical: f64,
    #[serde(serialize_with = "ser17", deserialize_with = "de_nullable")]
    pub rho_empirical: f64,
    #[serde(serialize_with = "ser17", deserialize_with = "de_nullable")]
    pub max_qc_violation: f64,
    pub seed: u64,
    pub passed: bool,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CertifyOptions {
    pub samples: usize,
    pub seed: u64,
    pub h: f64,
    pub t_end: f64,
}

impl Default for CertifyOptions {
    fn default() -> Self {
        Self {
            samples: 10_000,
            seed: 0,
            h: 0.01,
            t_end: 20.0,
        }
    }
}

/// Full strong-convexity certificate: analytic `σ` and `ρ = 1 − σ`, the LMI
/// witness, the sampled quadratic constraint, `σ̂` and a fitted `ρ̂`.
pub fn certify(p: &ProblemSpec, kind: FlowKind, opts: &CertifyOptions) -> Result<RateCertificate> {
    let (m_f, l_f, mu) = (p.m_f(), p.l_f(), p.mu);
    let sigma = sigma_bound(m_f, l_f, mu)?;
    let sys = flow_nonlinearity(p, kind)?;
    let mut notes = Vec::new();
    let mut failures = Vec::new();

    let rho_certified = if sigma < 1.0 { 1.0 - sigma } else { 0.0 };
    if sigma >= 1.0 {
        failures.push(format!("sigma = {sigma} >= 1: mu outside (0, 2/L_f), no contraction"));
    }
    let lmi_witness_p = if sigma < 1.0 && rho_certified < 1.0 {
        let w = lmi_feasibility(sigma, rho_certified)?;
        if w.is_none() {
            failures.push("LMI infeasible at rho = 1 - sigma".into());
        }
        w
    } else {
        if sigma == 0.0 {
            notes.push("sigma = 0 gives rho = 1, outside the LMI's rho < 1 range".into());
        }
        None
    };
    if kind == FlowKind::DrSplitting {
        notes.push(
            "rho = 1 - sigma is accepted as feasible (double root of the LMI quadratic) although the \
             DR rate statement uses an open interval"
                .into(),
        );
    }

    let pairs = sample_pairs(&Vector::zeros(p.n()), opts.samples, opts.seed);
    let qc = qc_on_pairs(&sys, sigma, &pairs)?;
    if !qc.passed {
        failures.push(format!("quadratic constraint violated: {:e}", qc.max_relative_violation));
    }
    let sigma_empirical = empirical_contraction(|x| sys.nonlinearity(x), &pairs)?;
    if sigma_empirical > sigma + 1e-8 {
        failures.push(format!("empirical contraction {sigma_empirical} exceeds sigma"));
    }

    let (sys, _) = sys.attach_reference()?;
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed.wrapping_add(1));
    let x0 = sys.reference().unwrap() + gaussian_vector(&mut rng, sys.state_dim(), 1.0);
    let rho_empirical = match integrate(&sys, &x0, opts.h, opts.t_end, Method::Rk4) {
        Ok(traj) => match empirical_rate(&traj) {
            Ok(r) => r,
            Err(e) => {
                notes.push(format!("rate fit unavailable: {e}"));
                f64::NAN
            }
        },
        Err(e) => {
            failures.push(format!("simulation failed: {e}"));
            f64::NAN
        }
    };
    if sigma < 1.0 && rho_empirical < rho_certified - 2e-3 {
        failures.push(format!("empirical rate {rho_empirical} below certified {rho_certified}"));
    }

    let passed = failures.is_empty();
    notes.extend(failures);
    Ok(RateCertificate {
        kind,
        m_f,
        l_f,
        mu,
        sigma,
        rho_certified,
        lmi_witness_p,
        sigma_empirical,
        rho_empirical,
        max_qc_violation: qc.max_violation,
        seed: opts.seed,
        passed,
        notes,
    })
}
