//! Soft-thresholding, box projection and the Moreau decomposition.

use nalgebra::dvector;
use proxflow::oracles::{make_box_indicator, make_l1};

fn main() {
    let l1 = make_l1(1.0, 3).unwrap();
    let v = dvector![2.0, 0.5, -3.0];
    println!("prox of |.|_1 at {:?}: {:?}", v.as_slice(), l1.prox(1.0, &v).as_slice());

    let unit = make_box_indicator(&dvector![0.0, 0.0, 0.0], &dvector![1.0, 1.0, 1.0]).unwrap();
    println!("projection onto [0, 1]^3: {:?}", unit.prox(0.3, &v).as_slice());

    // v = prox_{μg}(v) + μ prox_{g⋆/μ}(v/μ)
    let mu = 0.4;
    let back = l1.prox(mu, &v) + l1.prox_conjugate(1.0 / mu, &(&v / mu)) * mu;
    println!("Moreau decomposition residual: {:.1e}", (back - v).amax());
}
