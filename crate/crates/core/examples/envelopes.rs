//! Moreau envelope, forward-backward envelope and gradient map on the lasso
//! instance, plus the `D_g` identity.

use proxflow::envelopes::{dg_curvature, fb_envelope, fb_gradient, gmap, moreau, objective};
use proxflow::problem::lasso;
use proxflow::Vector;

fn main() {
    let p = lasso().unwrap();
    let f = p.f.as_ref();
    let sol = p.reference().unwrap();
    println!("F* = {:.10}", sol.objective);

    let x = &sol.x + Vector::from_element(p.n(), 0.5);
    let mu = 0.25;
    let fbe = fb_envelope(f, &p.g, mu, &x).unwrap().value;
    println!("F(x) = {:.6}  F_mu(x) = {fbe:.6}", objective(f, &p.g, &x));
    println!("|G_mu(x)| = {:.6}", gmap(f, &p.g, mu, &x).unwrap().norm());
    println!("|grad F_mu(x)| = {:.6}", fb_gradient(f, &p.g, mu, &x).unwrap().norm());

    let d = dg_curvature(f, &p.g, 1.0 / mu, &x).unwrap();
    println!("D_g(x, 1/mu) = {d:.10}  (2/mu)(F - F_mu) = {:.10}", 2.0 / mu * (objective(f, &p.g, &x) - fbe));

    let m = moreau(&p.g, mu, &x).unwrap();
    println!("Moreau envelope of g at x: {:.6}", m.value);
}
