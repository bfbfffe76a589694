//! Rate certificates across step sizes: analytic contraction factor, LMI
//! witness, sampled quadratic constraint and fitted rate.

use proxflow::certify::{certify, CertifyOptions};
use proxflow::problem::lasso;
use proxflow::FlowKind;

fn main() {
    let base = lasso().unwrap();
    let opts = CertifyOptions {
        samples: 2000,
        ..CertifyOptions::default()
    };
    println!("{:>6} {:>8} {:>8} {:>8} {:>8} {:>6}", "mu", "sigma", "rho", "sig_hat", "rho_hat", "pass");
    for mu in [0.1, 0.3, 0.5, 0.6, 0.7] {
        let p = base.clone().with_mu(mu).unwrap();
        let c = certify(&p, FlowKind::DrSplitting, &opts).unwrap();
        println!(
            "{mu:>6.2} {:>8.4} {:>8.4} {:>8.4} {:>8.4} {:>6}",
            c.sigma, c.rho_certified, c.sigma_empirical, c.rho_empirical, c.passed
        );
    }
    let c = certify(&base, FlowKind::ProxGradient, &opts).unwrap();
    println!("{}", serde_json::to_string_pretty(&c).unwrap());
}
