use std::fs;

use proxflow::cli::{run, EXIT_CERTIFICATION, EXIT_INVALID, EXIT_NONCONVERGENCE, EXIT_OK};

fn run_cli(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let code = run(std::iter::once("proxflow").chain(args.iter().copied()), &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

#[test]
fn simulate_lasso_pg_meets_bound() {
    let (code, out, _) = run_cli(&["simulate", "--problem", "lasso", "--flow", "pg", "--mu", "remark2"]);
    assert_eq!(code, EXIT_OK);
    assert!(out.starts_with("rho_hat="), "{out}");
    assert!(out.contains("bound_ok=true"), "{out}");
}

#[test]
fn simulate_compare_discrete_prints_deviation() {
    let (code, out, _) = run_cli(&[
        "simulate", "--problem", "lasso", "--flow", "dr", "--h", "1", "--method", "euler", "--compare-discrete",
    ]);
    assert_eq!(code, EXIT_OK);
    let dev: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("max_step_deviation="))
        .expect("deviation line")
        .parse()
        .unwrap();
    assert!(dev <= 1e-12, "{dev}");

    let (code, _, err) = run_cli(&["simulate", "--problem", "lasso", "--compare-discrete"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("compare-discrete"), "{err}");
}

#[test]
fn invalid_inputs_exit_one() {
    let (code, _, err) = run_cli(&["simulate", "--problem", "nope"]);
    assert_eq!(code, EXIT_INVALID);
    assert_eq!(err.trim(), "error: unknown problem: nope");

    let (code, _, err) = run_cli(&["simulate", "--problem", "lasso", "--h", "-1"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("integrator.h"), "{err}");

    let (code, _, err) = run_cli(&["simulate", "--problem", "lasso", "--h", "0.5", "--t-end", "0.1"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("integrator.t_end"), "{err}");

    let (code, _, _) = run_cli(&["simulate", "--problem", "lasso", "--flow", "sideways"]);
    assert_eq!(code, EXIT_INVALID);

    let (code, _, err) = run_cli(&["certify", "--problem", "pl-quadratic"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("m_f"), "{err}");

    let (code, _, err) = run_cli(&["pl", "--problem", "pl-quadratic", "--mu", "0.3"]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("1/L_f"), "{err}");

    let (code, _, _) = run_cli(&["frobnicate"]);
    assert_eq!(code, EXIT_INVALID);
}

#[test]
fn divergent_step_exits_two() {
    let (code, _, err) = run_cli(&[
        "simulate", "--problem", "lasso", "--mu", "3", "--h", "0.5", "--method", "euler", "--t-end", "2000",
    ]);
    assert_eq!(code, EXIT_NONCONVERGENCE, "{err}");
}

#[test]
fn certify_lasso_at_half_step() {
    let dir = tempfile::tempdir().unwrap();
    let json = dir.path().join("cert.json");
    let (code, _, _) = run_cli(&[
        "certify", "--problem", "lasso", "--mu", "0.5", "--samples", "2000", "--json", json.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    let cert: serde_json::Value = serde_json::from_str(&fs::read_to_string(&json).unwrap()).unwrap();
    for key in ["sigma", "rho_certified", "lmi_witness_p"] {
        assert!((cert[key].as_f64().unwrap() - 0.5).abs() <= 1e-12, "{key}: {}", cert[key]);
    }
    assert!(cert["max_qc_violation"].as_f64().unwrap() <= 0.0);
    assert_eq!(cert["passed"], true);
}

#[test]
fn certify_outside_step_range_exits_three() {
    let (code, out, _) = run_cli(&["certify", "--problem", "lasso", "--mu", "1", "--samples", "500"]);
    assert_eq!(code, EXIT_CERTIFICATION);
    let cert: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!((cert["sigma"].as_f64().unwrap() - 2.0).abs() <= 1e-12);
    assert!(cert["lmi_witness_p"].is_null());
}

#[test]
fn certify_box_qp_dr() {
    let (code, out, _) = run_cli(&["certify", "--problem", "box-qp", "--mu", "remark2", "--flow", "dr", "--samples", "2000"]);
    assert_eq!(code, EXIT_OK);
    let cert: serde_json::Value = serde_json::from_str(&out).unwrap();
    assert!(cert["max_qc_violation"].as_f64().unwrap() <= 0.0);
}

#[test]
fn pl_passes_and_negative_control_fails() {
    let (code, out, _) = run_cli(&["pl", "--problem", "pl-quadratic", "--samples", "3000"]);
    assert_eq!(code, EXIT_OK, "{out}");
    assert!(out.contains("violations=0 decay_pass=true"), "{out}");

    let (code, out, _) = run_cli(&["pl", "--problem", "pl-quadratic", "--samples", "3000", "--gamma-scale", "10"]);
    assert_eq!(code, EXIT_CERTIFICATION);
    assert!(out.contains("decay_pass=false"), "{out}");
}

#[test]
fn pl_strongly_convex_quadratic_with_twice_m() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("quad.json");
    fs::write(
        &cfg,
        r#"{"problem": {"Q": [[1, 0, 0], [0, 2, 0], [0, 0, 4]], "q": [1, -1, 0.5], "g": {"kind": "zero"}},
            "mu": 0.2, "gamma": 2.0, "samples": 3000, "seed": 4}"#,
    )
    .unwrap();
    let (code, out, err) = run_cli(&["pl", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK, "{out}{err}");
}

#[test]
fn sweep_emits_one_line_per_step() {
    let (code, out, _) = run_cli(&[
        "sweep", "--problem", "lasso", "--mu-min", "0.1", "--mu-max", "0.6", "--mu-steps", "3", "--samples", "500",
    ]);
    assert_eq!(code, EXIT_OK);
    let lines: Vec<_> = out.lines().collect();
    assert_eq!(lines.len(), 3);
    for l in lines {
        let v: serde_json::Value = serde_json::from_str(l).unwrap();
        assert_eq!(v["passed"], true);
    }
    let (code, _, _) = run_cli(&["sweep", "--problem", "lasso", "--mu-max", "0.9", "--mu-steps", "3", "--samples", "200"]);
    assert_eq!(code, EXIT_CERTIFICATION);
}

#[test]
fn config_file_and_outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.json");
    let csv = dir.path().join("traj.csv");
    fs::write(
        &cfg,
        format!(
            r#"{{"problem": "box-qp", "flow": "dr", "mu": "remark2",
                "integrator": {{"method": "rk4", "h": 0.05, "t_end": 5}},
                "seed": 21, "outputs": {{"csv": {:?}}}}}"#,
            csv.to_str().unwrap()
        ),
    )
    .unwrap();
    let (code, out1, _) = run_cli(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_OK);
    let first = fs::read(&csv).unwrap();
    let (_, out2, _) = run_cli(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(first, fs::read(&csv).unwrap());
    assert_eq!(out1, out2);
    assert_eq!(String::from_utf8(first).unwrap().lines().count(), 102);

    let (_, a, _) = run_cli(&["certify", "--problem", "logistic-l1", "--samples", "300", "--seed", "5"]);
    let (_, b, _) = run_cli(&["certify", "--problem", "logistic-l1", "--samples", "300", "--seed", "5"]);
    assert_eq!(a, b);
}

#[test]
fn bad_config_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"problem": "lasso", "integrator": {"h": 0}}"#).unwrap();
    let (code, _, err) = run_cli(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("integrator.h"), "{err}");

    fs::write(&cfg, r#"{"problem": "lasso", "stepsize": 1}"#).unwrap();
    let (code, _, err) = run_cli(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code, EXIT_INVALID);
    assert!(err.contains("stepsize"), "{err}");
}
