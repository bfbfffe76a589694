//! Command-line front end. `run` parses arguments and dispatches in-process so
//! the binary and the tests share one code path.

use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::certify::{
    certify, empirical_rate, envelope_decay_check, exponential_envelope_holds, pl_check, sigma_bound,
    CertifyOptions, DecayCheck, PLReport, RateCertificate, SAMPLE_RADII,
};
use crate::envelopes::{dg_curvature, fb_envelope, objective};
use crate::error::{Error, Result};
use crate::flows::{fmt17, integrate, FlowKind, FlowSystem, Method};
use crate::linalg::{gaussian_vector, sym_eigenvalues, Matrix, Vector};
use crate::oracles::{
    make_box_indicator, make_l1, make_least_squares, make_quadratic_psd, make_zero, ProxOracle, SmoothOracle,
};
use crate::problem::{catalog, MuPolicy, ProblemSpec};
use crate::reference::{dr_steps, ista_steps, Admm};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INVALID: i32 = 1;
pub const EXIT_NONCONVERGENCE: i32 = 2;
pub const EXIT_CERTIFICATION: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "proxflow", version, about = "Simulate and certify proximal flows")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Integrate a flow and report the fitted rate against the analytic bound.
    Simulate(SimulateArgs),
    /// Build a rate certificate for the pg or dr flow.
    Certify(Common),
    /// Check the proximal PL inequality and forward-backward envelope decay.
    Pl(PlArgs),
    /// Certify over a uniform grid of step sizes, one JSON line per point.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
struct Common {
    /// JSON experiment config; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Catalog key (lasso, box-qp, pl-quadratic, logistic-l1, eq-qp).
    #[arg(long)]
    problem: Option<String>,
    /// pg, dr, ahu or dual-dr.
    #[arg(long)]
    flow: Option<String>,
    /// Step size: a number, or "remark2" (alias "best") for 2/(L_f + m_f).
    #[arg(long, allow_negative_numbers = true)]
    mu: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    h: Option<f64>,
    /// euler or rk4.
    #[arg(long)]
    method: Option<String>,
    #[arg(long, allow_negative_numbers = true)]
    t_end: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long)]
    json: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[command(flatten)]
    common: Common,
    /// Compare forward Euler against the matching discrete algorithm.
    #[arg(long)]
    compare_discrete: bool,
}

#[derive(Debug, Args)]
struct PlArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_negative_numbers = true)]
    gamma: Option<f64>,
    /// Multiplies gamma; values above 1 make a negative control.
    #[arg(long, allow_negative_numbers = true)]
    gamma_scale: Option<f64>,
}

#[derive(Debug, Args)]
struct SweepArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long, allow_negative_numbers = true)]
    mu_min: Option<f64>,
    #[arg(long, allow_negative_numbers = true)]
    mu_max: Option<f64>,
    #[arg(long)]
    mu_steps: Option<usize>,
}

/// Problem given inline in a config file. Supply either `Q`/`q` or `A`/`b`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InlineProblem {
    #[serde(default)]
    pub name: Option<String>,
    #[serde(rename = "Q", default)]
    pub q_matrix: Option<Vec<Vec<f64>>>,
    #[serde(rename = "q", default)]
    pub q_vector: Option<Vec<f64>>,
    #[serde(rename = "A", default)]
    pub a: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub b: Option<Vec<f64>>,
    pub g: RegularizerConfig,
    #[serde(rename = "T", default)]
    pub t: Option<Vec<Vec<f64>>>,
    #[serde(default)]
    pub r: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum RegularizerConfig {
    #[default]
    Zero,
    L1 { lambda: f64 },
    Box { lo: Vec<f64>, hi: Vec<f64> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProblemConfig {
    Key(String),
    Inline(InlineProblem),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum MuConfig {
    Value(f64),
    Policy(String),
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct IntegratorConfig {
    pub method: Option<String>,
    pub h: Option<f64>,
    pub t_end: Option<f64>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub mu_min: Option<f64>,
    pub mu_max: Option<f64>,
    pub steps: Option<usize>,
}

/// On-disk experiment description. Every field is optional; command-line flags
/// take precedence.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub problem: Option<ProblemConfig>,
    pub flow: Option<String>,
    pub mu: Option<MuConfig>,
    #[serde(default)]
    pub integrator: IntegratorConfig,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub x0: Option<Vec<f64>>,
    #[serde(default)]
    pub outputs: OutputConfig,
    pub gamma: Option<f64>,
    pub gamma_scale: Option<f64>,
    #[serde(default)]
    pub sweep: SweepConfig,
}

/// Fully resolved settings shared by the subcommands.
struct Resolved {
    problem: ProblemSpec,
    flow: FlowKind,
    method: Method,
    h: f64,
    t_end: f64,
    seed: u64,
    samples: usize,
    x0: Option<Vector>,
    csv: Option<PathBuf>,
    json: Option<PathBuf>,
}

fn field_error(field: &str, msg: impl std::fmt::Display) -> Error {
    Error::InvalidInput(format!("{field}: {msg}"))
}

fn matrix_from_rows(field: &str, rows: &[Vec<f64>]) -> Result<Matrix> {
    let ncols = rows.first().map_or(0, Vec::len);
    if rows.is_empty() || ncols == 0 {
        return Err(field_error(field, "matrix must be nonempty"));
    }
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(field_error(field, "rows have different lengths"));
    }
    Ok(Matrix::from_row_iterator(rows.len(), ncols, rows.iter().flatten().copied()))
}

fn build_inline(p: &InlineProblem) -> Result<ProblemSpec> {
    let f: SmoothOracle = match (&p.q_matrix, &p.q_vector, &p.a, &p.b) {
        (Some(q), lin, None, None) => {
            let q = matrix_from_rows("problem.Q", q)?;
            let lin = lin.as_ref().map_or_else(|| Vector::zeros(q.nrows()), |v| Vector::from_vec(v.clone()));
            Arc::new(make_quadratic_psd(&q, &lin).map_err(|e| field_error("problem.Q", e))?)
        }
        (None, None, Some(a), Some(b)) => {
            let a = matrix_from_rows("problem.A", a)?;
            Arc::new(make_least_squares(&a, &Vector::from_vec(b.clone())).map_err(|e| field_error("problem.A", e))?)
        }
        _ => return Err(field_error("problem", "give either Q (and q) or A and b")),
    };
    let m = match &p.t {
        Some(t) => t.len(),
        None => f.dim(),
    };
    let g = match &p.g {
        RegularizerConfig::Zero => make_zero(m),
        RegularizerConfig::L1 { lambda } => make_l1(*lambda, m).map_err(|e| field_error("problem.g.lambda", e))?,
        RegularizerConfig::Box { lo, hi } => make_box_indicator(&Vector::from_vec(lo.clone()), &Vector::from_vec(hi.clone()))
            .map_err(|e| field_error("problem.g", e))?,
    };
    let name = p.name.clone().unwrap_or_else(|| "inline".into());
    let mu = 1.0;
    let spec = match &p.t {
        Some(t) => {
            let t = matrix_from_rows("problem.T", t)?;
            let r = p.r.as_ref().map(|r| Vector::from_vec(r.clone()));
            ProblemSpec::coupled(name, f, g, t, r, mu).map_err(|e| field_error("problem.T", e))
        }
        None => {
            if p.r.is_some() {
                return Err(field_error("problem.r", "offset needs a coupling matrix T"));
            }
            ProblemSpec::new(name, f, g, mu).map_err(|e| field_error("problem.g", e))
        }
    }?;
    spec.with_mu_policy(MuPolicy::BestContraction)
        .map_err(|e| field_error("problem", e))
}

fn parse_mu(s: &str) -> Result<MuConfig> {
    if s == "remark2" || s == "best" {
        return Ok(MuConfig::Policy(s.into()));
    }
    s.parse::<f64>()
        .map(MuConfig::Value)
        .map_err(|_| field_error("mu", format!("expected a number or \"remark2\", got {s:?}")))
}

fn resolve(common: &Common, default_flow: FlowKind) -> Result<(Resolved, ExperimentConfig)> {
    let mut cfg = match &common.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(|e| field_error("config", format!("{}: {e}", path.display())))?;
            serde_json::from_str::<ExperimentConfig>(&text).map_err(|e| field_error("config", e))?
        }
        None => ExperimentConfig::default(),
    };
    if let Some(k) = &common.problem {
        cfg.problem = Some(ProblemConfig::Key(k.clone()));
    }
    if let Some(f) = &common.flow {
        cfg.flow = Some(f.clone());
    }
    if let Some(mu) = &common.mu {
        cfg.mu = Some(parse_mu(mu)?);
    }
    if let Some(h) = common.h {
        cfg.integrator.h = Some(h);
    }
    if let Some(m) = &common.method {
        cfg.integrator.method = Some(m.clone());
    }
    if let Some(t) = common.t_end {
        cfg.integrator.t_end = Some(t);
    }
    if let Some(s) = common.seed {
        cfg.seed = Some(s);
    }
    if let Some(s) = common.samples {
        cfg.samples = Some(s);
    }
    if let Some(p) = &common.csv {
        cfg.outputs.csv = Some(p.clone());
    }
    if let Some(p) = &common.json {
        cfg.outputs.json = Some(p.clone());
    }

    let problem = match cfg.problem.as_ref() {
        Some(ProblemConfig::Key(k)) => catalog(k)?,
        Some(ProblemConfig::Inline(p)) => build_inline(p)?,
        None => return Err(field_error("problem", "missing")),
    };
    let problem = match cfg.mu.as_ref() {
        None => problem,
        Some(MuConfig::Value(v)) => problem.with_mu_policy(MuPolicy::Fixed(*v)).map_err(|e| field_error("mu", e))?,
        Some(MuConfig::Policy(s)) if s == "remark2" || s == "best" => problem
            .with_mu_policy(MuPolicy::BestContraction)
            .map_err(|e| field_error("mu", e))?,
        Some(MuConfig::Policy(s)) => return Err(field_error("mu", format!("unknown policy {s:?}"))),
    };
    let flow = match cfg.flow.as_deref() {
        Some(s) => s.parse::<FlowKind>().map_err(|e| field_error("flow", e))?,
        None => default_flow,
    };
    let method = match cfg.integrator.method.as_deref() {
        Some(s) => s.parse::<Method>().map_err(|e| field_error("integrator.method", e))?,
        None => Method::Rk4,
    };
    let h = cfg.integrator.h.unwrap_or(0.01);
    if !(h > 0.0 && h.is_finite()) {
        return Err(field_error("integrator.h", format!("must be positive, got {h}")));
    }
    let t_end = cfg.integrator.t_end.unwrap_or(20.0);
    if !(t_end >= h && t_end.is_finite()) {
        return Err(field_error("integrator.t_end", format!("must be at least h = {h}, got {t_end}")));
    }
    let samples = cfg.samples.unwrap_or(10_000);
    if samples == 0 {
        return Err(field_error("samples", "must be positive"));
    }
    let resolved = Resolved {
        problem,
        flow,
        method,
        h,
        t_end,
        seed: cfg.seed.unwrap_or(0),
        samples,
        x0: cfg.x0.clone().map(Vector::from_vec),
        csv: cfg.outputs.csv.clone(),
        json: cfg.outputs.json.clone(),
    };
    Ok((resolved, cfg))
}

fn exit_code(e: &Error) -> i32 {
    match e {
        Error::NonConvergence { .. } | Error::NonFinite(_) => EXIT_NONCONVERGENCE,
        _ => EXIT_INVALID,
    }
}

fn write_file(field: &str, path: &PathBuf, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| field_error(field, format!("{}: {e}", path.display())))
}

fn initial_state(r: &Resolved, sys: &FlowSystem) -> Result<Vector> {
    match &r.x0 {
        Some(x0) => {
            if x0.len() != sys.state_dim() {
                return Err(field_error(
                    "x0",
                    format!("expected length {}, got {}", sys.state_dim(), x0.len()),
                ));
            }
            Ok(x0.clone())
        }
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(r.seed);
            Ok(gaussian_vector(&mut rng, sys.state_dim(), 1.0))
        }
    }
}

fn max_step_deviation(sys: &FlowSystem, states: &[Vector], h: f64) -> Result<f64> {
    let p = sys.problem();
    let steps = states.len() - 1;
    let reference: Vec<Vector> = match sys.kind() {
        FlowKind::ProxGradient => ista_steps(p.f.as_ref(), &p.g, p.mu, &states[0], steps, h),
        FlowKind::DrSplitting => dr_steps(sys.resolvent().expect("dr flow has a resolvent"), &p.g, &states[0], steps, 2.0 * h)?,
        FlowKind::DualDr => {
            let mut out = vec![states[0].clone()];
            out.extend(Admm::new(p)?.steps(&states[0], steps, 2.0 * h).into_iter().map(|it| it.w));
            out
        }
        FlowKind::AhuPrimalDual => {
            return Err(field_error("compare-discrete", "no discrete counterpart for the ahu flow"));
        }
    };
    Ok(states
        .iter()
        .zip(&reference)
        .map(|(a, b)| (a - b).amax())
        .fold(0.0, f64::max))
}

fn cmd_simulate(args: &SimulateArgs, out: &mut dyn Write) -> Result<i32> {
    let (r, _) = resolve(&args.common, FlowKind::ProxGradient)?;
    if args.compare_discrete && r.method != Method::Euler {
        return Err(field_error("compare-discrete", "requires --method euler"));
    }
    let sys = FlowSystem::new(r.flow, r.problem.clone())?;
    let (sys, _) = sys.attach_reference()?;
    let x0 = initial_state(&r, &sys)?;
    let traj = integrate(&sys, &x0, r.h, r.t_end, r.method)?;
    if let Some(path) = &r.csv {
        write_file("outputs.csv", path, &traj.to_csv())?;
    }

    let sigma = match r.flow {
        FlowKind::ProxGradient | FlowKind::DrSplitting if r.problem.m_f() > 0.0 => {
            sigma_bound(r.problem.m_f(), r.problem.l_f(), r.problem.mu)?
        }
        _ => f64::NAN,
    };
    let rho_hat = empirical_rate(&traj).unwrap_or(f64::NAN);
    let bound_ok = sigma < 1.0 && exponential_envelope_holds(&traj, 1.0 - sigma)?;
    writeln!(
        out,
        "rho_hat={} sigma={} bound_ok={bound_ok}",
        fmt17(rho_hat),
        fmt17(sigma)
    )
    .map_err(|e| field_error("stdout", e))?;
    if args.compare_discrete {
        let dev = max_step_deviation(&sys, &traj.states, r.h)?;
        writeln!(out, "max_step_deviation={}", fmt17(dev)).map_err(|e| field_error("stdout", e))?;
    }
    let final_dist = traj.distances().last().copied().unwrap_or(f64::NAN);
    let start_dist = traj.distances()[0];
    if final_dist.is_finite() && final_dist > start_dist.max(1.0) * 1e3 {
        return Err(Error::NonConvergence {
            iterations: traj.len(),
            residual: final_dist,
        });
    }
    Ok(EXIT_OK)
}

fn certificate_options(r: &Resolved) -> CertifyOptions {
    CertifyOptions {
        samples: r.samples,
        seed: r.seed,
        h: r.h,
        t_end: r.t_end,
    }
}

fn cmd_certify(common: &Common, out: &mut dyn Write) -> Result<i32> {
    let (r, _) = resolve(common, FlowKind::ProxGradient)?;
    let cert = certify(&r.problem, r.flow, &certificate_options(&r))?;
    let json = serde_json::to_string_pretty(&cert).map_err(|e| field_error("json", e))?;
    if let Some(path) = &r.json {
        write_file("outputs.json", path, &format!("{json}\n"))?;
    }
    writeln!(out, "{json}").map_err(|e| field_error("stdout", e))?;
    Ok(if cert.passed { EXIT_OK } else { EXIT_CERTIFICATION })
}

/// `2·λ_min⁺(Q)` for quadratics and `2m_f` otherwise.
fn default_gamma(p: &ProblemSpec) -> Result<f64> {
    if let Some(form) = p.f.quadratic_form() {
        let eig = sym_eigenvalues(form.hessian);
        let top = eig.last().copied().unwrap_or(0.0);
        if let Some(lam) = eig.into_iter().find(|&l| l > 1e-12 * top.max(1.0)) {
            return Ok(2.0 * lam);
        }
    }
    if p.m_f() > 0.0 {
        return Ok(2.0 * p.m_f());
    }
    Err(field_error("gamma", "no default for this problem; pass --gamma"))
}

/// `max |D_g(x, 1/μ) − (2/μ)(F(x) − F_μ(x))| / max(1, |D_g|)` over points in
/// the domain of `g`.
fn dg_identity_deviation(p: &ProblemSpec, center: &Vector, count: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0_f64;
    for k in 0..count {
        let mut x = center + gaussian_vector(&mut rng, p.n(), SAMPLE_RADII[k % SAMPLE_RADII.len()]);
        if let ProxOracle::Box { .. } = p.g {
            x = p.g.prox(1.0, &x);
        }
        let d = dg_curvature(p.f.as_ref(), &p.g, 1.0 / p.mu, &x)?;
        let gap = objective(p.f.as_ref(), &p.g, &x) - fb_envelope(p.f.as_ref(), &p.g, p.mu, &x)?.value;
        worst = worst.max((d - 2.0 / p.mu * gap).abs() / d.abs().max(1.0));
    }
    Ok(worst)
}

#[derive(Serialize)]
struct PlOutput<'a> {
    #[serde(flatten)]
    report: &'a PLReport,
    decay_pass: bool,
    #[serde(serialize_with = "ser_f64")]
    decay_worst_margin: f64,
    #[serde(serialize_with = "ser_f64")]
    dg_identity_max_deviation: f64,
    passed: bool,
}

fn ser_f64<S: serde::Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        let raw = serde_json::value::RawValue::from_string(fmt17(*v)).map_err(serde::ser::Error::custom)?;
        raw.serialize(s)
    } else {
        s.serialize_none()
    }
}

fn cmd_pl(args: &PlArgs, out: &mut dyn Write) -> Result<i32> {
    let (r, cfg) = resolve(&args.common, FlowKind::ProxGradient)?;
    let p = &r.problem;
    let gamma = match args.gamma.or(cfg.gamma) {
        Some(g) => g,
        None => default_gamma(p)?,
    } * args.gamma_scale.or(cfg.gamma_scale).unwrap_or(1.0);

    let report = pl_check(p, gamma, r.samples, r.seed)?;
    let sys = FlowSystem::new(FlowKind::ProxGradient, p.clone())?;
    let (sys, sol) = sys.attach_reference()?;
    let x0 = match &r.x0 {
        Some(_) => initial_state(&r, &sys)?,
        None => {
            let mut rng = ChaCha8Rng::seed_from_u64(r.seed.wrapping_add(1));
            &sol.x + gaussian_vector(&mut rng, p.n(), 1.0)
        }
    };
    let traj = integrate(&sys, &x0, r.h, r.t_end, r.method)?;
    if let Some(path) = &r.csv {
        write_file("outputs.csv", path, &traj.to_csv())?;
    }
    let DecayCheck { passed: decay_pass, worst_margin } = envelope_decay_check(&traj, &report)?;
    let dg = dg_identity_deviation(p, &sol.x, 1000, r.seed.wrapping_add(2))?;
    let passed = report.sampled_violations == 0 && decay_pass;
    let output = PlOutput {
        report: &report,
        decay_pass,
        decay_worst_margin: worst_margin,
        dg_identity_max_deviation: dg,
        passed,
    };
    let json = serde_json::to_string_pretty(&output).map_err(|e| field_error("json", e))?;
    if let Some(path) = &r.json {
        write_file("outputs.json", path, &format!("{json}\n"))?;
    }
    writeln!(out, "{json}").map_err(|e| field_error("stdout", e))?;
    writeln!(
        out,
        "violations={} decay_pass={decay_pass} dg_identity_max_deviation={}",
        report.sampled_violations,
        fmt17(dg)
    )
    .map_err(|e| field_error("stdout", e))?;
    Ok(if passed { EXIT_OK } else { EXIT_CERTIFICATION })
}

fn cmd_sweep(args: &SweepArgs, out: &mut dyn Write) -> Result<i32> {
    let (r, cfg) = resolve(&args.common, FlowKind::ProxGradient)?;
    let l_f = r.problem.l_f();
    let lo = args.mu_min.or(cfg.sweep.mu_min).unwrap_or(0.05 / l_f);
    let hi = args.mu_max.or(cfg.sweep.mu_max).unwrap_or(1.95 / l_f);
    let steps = args.mu_steps.or(cfg.sweep.steps).unwrap_or(10);
    if !(lo > 0.0 && hi >= lo) {
        return Err(field_error("sweep", format!("need 0 < mu_min <= mu_max, got [{lo}, {hi}]")));
    }
    if steps == 0 {
        return Err(field_error("sweep.steps", "must be positive"));
    }
    let opts = certificate_options(&r);
    let certs: Vec<RateCertificate> = (0..steps)
        .map(|k| {
            let mu = if steps == 1 {
                lo
            } else {
                lo + (hi - lo) * k as f64 / (steps - 1) as f64
            };
            let p = r.problem.clone().with_mu(mu).map_err(|e| field_error("sweep", e))?;
            certify(&p, r.flow, &opts)
        })
        .collect::<Result<_>>()?;
    let mut lines = String::new();
    for c in &certs {
        lines.push_str(&serde_json::to_string(c).map_err(|e| field_error("json", e))?);
        lines.push('\n');
    }
    if let Some(path) = &r.json {
        write_file("outputs.json", path, &lines)?;
    }
    out.write_all(lines.as_bytes()).map_err(|e| field_error("stdout", e))?;
    Ok(if certs.iter().all(|c| c.passed) {
        EXIT_OK
    } else {
        EXIT_CERTIFICATION
    })
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code. Diagnostics go to `err` as a single line.
pub fn run<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(out, "{e}");
                    EXIT_OK
                }
                _ => {
                    let _ = write!(err, "{e}");
                    EXIT_INVALID
                }
            };
        }
    };
    let result = match &cli.command {
        Command::Simulate(a) => cmd_simulate(a, out),
        Command::Certify(a) => cmd_certify(a, out),
        Command::Pl(a) => cmd_pl(a, out),
        Command::Sweep(a) => cmd_sweep(a, out),
    };
    match result {
        Ok(code) => code,
        Err(e) => {
            let msg = match &e {
                Error::InvalidInput(m) => m.clone(),
                other => other.to_string(),
            };
            let _ = writeln!(err, "error: {msg}");
            exit_code(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_capture(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let code = run(std::iter::once("proxflow").chain(args.iter().copied()), &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn unknown_problem() {
        let (code, _, err) = run_capture(&["simulate", "--problem", "nope"]);
        assert_eq!(code, EXIT_INVALID);
        assert_eq!(err.trim(), "error: unknown problem: nope");
    }

    #[test]
    fn bad_mu_names_field() {
        let (code, _, err) = run_capture(&["simulate", "--problem", "lasso", "--mu", "fast"]);
        assert_eq!(code, EXIT_INVALID);
        assert!(err.starts_with("error: mu:"), "{err}");
    }

    #[test]
    fn inline_config_parses() {
        let cfg: ExperimentConfig = serde_json::from_str(
            r#"{"problem": {"Q": [[2, 0], [0, 1]], "q": [1, -1], "g": {"kind": "l1", "lambda": 0.1}},
                "mu": "remark2", "integrator": {"method": "euler", "h": 0.5}}"#,
        )
        .unwrap();
        let Some(ProblemConfig::Inline(p)) = &cfg.problem else {
            panic!("expected inline problem")
        };
        let spec = build_inline(p).unwrap();
        assert_eq!(spec.n(), 2);
        assert_eq!(spec.l_f(), 2.0);
        assert!(matches!(cfg.mu, Some(MuConfig::Policy(_))));
    }

    #[test]
    fn default_gamma_uses_smallest_positive_eigenvalue() {
        let p = catalog("pl-quadratic").unwrap();
        approx::assert_abs_diff_eq!(default_gamma(&p).unwrap(), 2.0, epsilon = 1e-12);
    }
}
