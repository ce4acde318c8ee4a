//! Construct the explicit Kaplan function and all of its certificate
//! constants, then verify the subsolution inequality pointwise.

use blowup::kaplan::default_verification_radii;
use blowup::{compute_bounds, verify_subsolution, KaplanParams, OperatorParams};

fn main() -> blowup::Result<()> {
    let op = OperatorParams::new(1.0, 1.0, 0.5, 1)?;
    let beta = 1.5;
    let kp1 = KaplanParams::new(beta, 1.0, op)?;

    let bounds = compute_bounds(&kp1)?;
    println!("certificate constants (eps = 1):");
    println!("  A  (sup |Lap kappa_1|)        = {:.10}", bounds.lap_sup);
    println!("  B  (sup |(-Lap)^s kappa_1|)   = {:.10}", bounds.frac_sup);
    println!("  R0                            = {:.10}", bounds.r0);
    println!("  eta1, eta2 (tail envelope)    = {:.10}, {:.10}", bounds.eta1, bounds.eta2);
    println!("  lambda1                       = {:.10}", bounds.lambda1);
    println!("  lambda2                       = {:.10}", bounds.lambda2);
    println!("  lambda0 = max(lambda1,lambda2)= {:.10}", bounds.lambda0);
    println!("  theta (hypergeometric prefac) = {:.10}", bounds.theta);

    println!("\nsubsolution verification at lambda = eps^s lambda0:");
    for eps in [1.0, 0.1, 0.01] {
        let kp = KaplanParams::new(beta, eps, op)?;
        let lambda = eps.powf(op.s) * bounds.lambda0;
        let radii = default_verification_radii(2000, bounds.r0, eps);
        let rep = verify_subsolution(&kp, lambda, &radii, &bounds)?;
        println!(
            "  eps = {eps:5}: lambda = {lambda:12.6e}, min margin / kappa = {:9.2e}, pass = {}",
            rep.min_margin, rep.pass
        );
    }

    // non-vacuity: the inequality genuinely fails without the lambda term
    let radii = default_verification_radii(2000, bounds.r0, 1.0);
    let rep = verify_subsolution(&kp1, 0.0, &radii, &bounds)?;
    println!("  lambda = 0 control: pass = {} (expected false)", rep.pass);
    Ok(())
}
