use nalgebra::dvector;
use proxflow::envelopes::{dg_curvature, fb_envelope, fb_gradient, gmap, moreau, objective, pal};
use proxflow::oracles::make_l1;
use proxflow::problem::{catalog, lasso};
use proxflow::{linalg::gaussian_vector, Vector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn fbe_sandwiched_between_objective_and_its_lower_bound() {
    // F_μ ≤ F, and F_μ(x) ≥ F(prox point) + ((1 − μL)/2μ)‖x − p‖² for μ < 1/L
    let p = lasso().unwrap();
    let mu = 0.2;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for _ in 0..200 {
        let x = gaussian_vector(&mut rng, p.n(), 3.0);
        let e = fb_envelope(p.f.as_ref(), &p.g, mu, &x).unwrap();
        let f_x = objective(p.f.as_ref(), &p.g, &x);
        assert!(e.value <= f_x + 1e-10);
        let lower = objective(p.f.as_ref(), &p.g, &e.prox_point)
            + (1.0 - mu * p.l_f()) / (2.0 * mu) * (&x - &e.prox_point).norm_squared();
        assert!(e.value >= lower - 1e-10 * lower.abs().max(1.0));
    }
}

#[test]
fn gmap_vanishes_at_the_minimizer() {
    let p = lasso().unwrap();
    let sol = p.reference().unwrap();
    assert!(gmap(p.f.as_ref(), &p.g, p.mu, &sol.x).unwrap().norm() <= 1e-8);
    let e = fb_envelope(p.f.as_ref(), &p.g, p.mu, &sol.x).unwrap();
    assert!((e.value - sol.objective).abs() <= 1e-10);
}

#[test]
fn pal_is_stationary_at_the_saddle_point() {
    // at (x⋆, −∇f(x⋆)) the Lagrangian equals F⋆ and both partial gradients vanish
    let p = catalog("box-qp").unwrap();
    let sol = p.reference().unwrap();
    let e = pal(p.f.as_ref(), &p.g, None, p.mu, &sol.x, &sol.y).unwrap();
    assert!((e.value - sol.objective).abs() <= 1e-9);
    assert!(e.grad_x.norm() <= 1e-8);
    assert!(e.grad_y.norm() <= 1e-8);
}

#[test]
fn fb_gradient_matches_finite_differences_on_logistic() {
    let p = catalog("logistic-l1").unwrap();
    let mu = 0.5 / p.l_f();
    let x = dvector![0.3, -0.2, 0.8, 0.0, -1.1];
    let fwd = &x - p.f.gradient(&x) * mu;
    assert!(p.g.kink_distance(mu, &fwd) > 1e-4);
    let g = fb_gradient(p.f.as_ref(), &p.g, mu, &x).unwrap();
    let h = 1e-6;
    for i in 0..x.len() {
        let mut e = Vector::zeros(x.len());
        e[i] = h;
        let fd = (fb_envelope(p.f.as_ref(), &p.g, mu, &(&x + &e)).unwrap().value
            - fb_envelope(p.f.as_ref(), &p.g, mu, &(&x - &e)).unwrap().value)
            / (2.0 * h);
        assert!((fd - g[i]).abs() <= 1e-6 * g.norm().max(1.0));
    }
}

#[test]
fn moreau_gradient_matches_finite_differences() {
    let g = make_l1(0.8, 1).unwrap();
    for v in [-3.0, -0.2, 0.5, 2.5] {
        let h = 1e-6;
        let m = |t: f64| moreau(&g, 0.5, &dvector![t]).unwrap().value;
        let fd = (m(v + h) - m(v - h)) / (2.0 * h);
        assert!((fd - moreau(&g, 0.5, &dvector![v]).unwrap().gradient.unwrap()[0]).abs() <= 1e-8);
    }
}

#[test]
fn dg_is_infinite_outside_the_box() {
    let p = catalog("box-qp").unwrap();
    let x = Vector::from_element(p.n(), 5.0);
    assert_eq!(dg_curvature(p.f.as_ref(), &p.g, 1.0, &x).unwrap(), f64::INFINITY);
}
