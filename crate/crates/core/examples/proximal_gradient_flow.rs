//! Integrates the proximal gradient flow on the lasso instance and compares the
//! fitted rate with the certified `1 − σ`.

use proxflow::certify::{empirical_rate, sigma_bound};
use proxflow::problem::lasso;
use proxflow::{integrate, FlowKind, FlowSystem, Method, Vector};

fn main() {
    let p = lasso().unwrap();
    let sigma = sigma_bound(p.m_f(), p.l_f(), p.mu).unwrap();
    let (sys, sol) = FlowSystem::new(FlowKind::ProxGradient, p).unwrap().attach_reference().unwrap();

    let x0 = &sol.x + Vector::from_element(sys.state_dim(), 3.0);
    let traj = integrate(&sys, &x0, 0.01, 20.0, Method::Rk4).unwrap();
    for k in (0..traj.len()).step_by(250) {
        println!("t = {:5.2}  |x - x*| = {:.3e}", traj.times[k], traj.diagnostics[k].distance_to_ref);
    }
    println!("certified rate {:.4}, fitted rate {:.4}", 1.0 - sigma, empirical_rate(&traj).unwrap());

    if let Some(path) = std::env::args().nth(1) {
        traj.save_csv(&path).unwrap();
        println!("wrote {path}");
    }
}
