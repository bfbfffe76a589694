//! Arrow-Hurwicz-Uzawa flow on the proximal augmented Lagrangian for the
//! logistic regression problem with an l1 penalty.

use proxflow::problem::logistic_l1;
use proxflow::{integrate, FlowKind, FlowSystem, Method, Vector};

fn main() {
    let p = logistic_l1().unwrap();
    let (sys, sol) = FlowSystem::new(FlowKind::AhuPrimalDual, p.clone()).unwrap().attach_reference().unwrap();
    let s0 = Vector::zeros(sys.state_dim());
    let traj = integrate(&sys, &s0, 0.02, 80.0, Method::Rk4).unwrap();
    for k in (0..traj.len()).step_by(500) {
        let d = &traj.diagnostics[k];
        println!(
            "t = {:5.1}  dist = {:.3e}  L_mu = {:.8}  |G_mu| = {:.3e}",
            traj.times[k], d.distance_to_ref, d.envelope_value, d.gmap_norm
        );
    }
    let x = sys.primal(traj.states.last().unwrap()).unwrap();
    println!("|x(T) - x*| = {:.2e}, F* = {:.8}", (x - sol.x).norm(), sol.objective);
}
