//! Douglas-Rachford flow on the dual of an equality-constrained QP. Forward
//! Euler with `h = 1/2` is ADMM; the primal point is read off the dual state.

use nalgebra::dvector;
use proxflow::problem::eq_qp;
use proxflow::reference::Admm;
use proxflow::{integrate, FlowKind, FlowSystem, Method};

fn main() {
    let p = eq_qp().unwrap();
    let sys = FlowSystem::new(FlowKind::DualDr, p.clone()).unwrap();
    let w0 = dvector![2.0];
    let traj = integrate(&sys, &w0, 0.5, 15.0, Method::Euler).unwrap();
    let admm = Admm::new(&p).unwrap().steps(&w0, 30, 1.0);
    for (k, it) in admm.iter().enumerate().step_by(5) {
        println!(
            "k = {k:2}  flow w = {:+.12}  ADMM y - mu z = {:+.12}  ADMM x = {:.6?}",
            traj.states[k + 1][0],
            it.w[0],
            it.x.as_slice()
        );
    }
    let d = sys.dual_dr().unwrap();
    let w = traj.states.last().unwrap();
    println!("multiplier {:.8}, primal {:.8?}", d.dual(w)[0], sys.primal(w).unwrap().as_slice());
}
