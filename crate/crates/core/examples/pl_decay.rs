//! Proximal PL inequality on a rank-deficient quadratic and the resulting
//! exponential decay of the forward-backward envelope.

use proxflow::certify::{envelope_decay_check, pl_check};
use proxflow::problem::pl_quadratic;
use proxflow::{integrate, FlowKind, FlowSystem, Method, Vector};

fn main() {
    let p = pl_quadratic().unwrap();
    for gamma in [2.0, 20.0] {
        let report = pl_check(&p, gamma, 10_000, 1).unwrap();
        let (sys, sol) = FlowSystem::new(FlowKind::ProxGradient, p.clone()).unwrap().attach_reference().unwrap();
        let x0 = &sol.x + Vector::from_element(p.n(), 1.0);
        let traj = integrate(&sys, &x0, 0.01, 20.0, Method::Rk4).unwrap();
        let decay = envelope_decay_check(&traj, &report).unwrap();
        println!(
            "gamma = {gamma:4}: violations {:5}, min ratio {:.4}, rate {:.3}, decay {} (worst margin {:.3})",
            report.sampled_violations,
            report.min_ratio,
            report.rate,
            if decay.passed { "holds" } else { "fails" },
            decay.worst_margin
        );
    }
}
