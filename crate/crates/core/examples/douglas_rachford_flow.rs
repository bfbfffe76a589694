//! Douglas-Rachford flow on the box-constrained QP. The primal point is
//! recovered as `prox_{μf}(z)`; forward Euler with step `h` reproduces the
//! discrete recursion relaxed by `2h`.

use proxflow::problem::box_qp;
use proxflow::reference::dr_steps;
use proxflow::{integrate, FlowKind, FlowSystem, Method, Vector};

fn main() {
    let p = box_qp().unwrap();
    let (sys, sol) = FlowSystem::new(FlowKind::DrSplitting, p.clone()).unwrap().attach_reference().unwrap();
    let z0 = Vector::zeros(p.n());

    let traj = integrate(&sys, &z0, 0.01, 30.0, Method::Rk4).unwrap();
    let x = sys.primal(traj.states.last().unwrap()).unwrap();
    println!("x(T) = {:.6?}", x.as_slice());
    println!("reference = {:.6?}", sol.x.as_slice());

    for h in [0.5, 1.0] {
        let euler = integrate(&sys, &z0, h, 20.0 * h, Method::Euler).unwrap();
        let disc = dr_steps(sys.resolvent().unwrap(), &p.g, &z0, 20, 2.0 * h).unwrap();
        let dev = euler.states.iter().zip(&disc).map(|(a, b)| (a - b).amax()).fold(0.0, f64::max);
        println!("h = {h}: max deviation from relaxed DR (lambda = {}) = {dev:.1e}", 2.0 * h);
    }
}
