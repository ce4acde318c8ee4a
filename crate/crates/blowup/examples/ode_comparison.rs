//! The scalar comparison problem `Phi' = f(Phi) - lambda Phi`: Osgood
//! blow-up-time bounds against adaptive integration.

use blowup::{integrate_comparison, osgood_blowup_bound, s_f, ReactionSpec};

fn main() -> blowup::Result<()> {
    let f = ReactionSpec::power(2.0)?;

    println!("closed-form anchors (p = 2):");
    println!(
        "  lambda = 0, phi0 = 1: T* = {:.10}  (exact 1)",
        osgood_blowup_bound(&f, 0.0, 1.0)?
    );
    println!(
        "  lambda = 1, phi0 = 2: T* = {:.10}  (exact ln 2 = {:.10})",
        osgood_blowup_bound(&f, 1.0, 2.0)?,
        2f64.ln()
    );

    println!("\nnumerical blow-up vs the bound:");
    for (lambda, phi0) in [(1.0, 2.0), (0.5, 1.2), (2.0, 3.5)] {
        let t_star = osgood_blowup_bound(&f, lambda, phi0)?;
        let traj = integrate_comparison(&f, lambda, phi0, 4.0 * t_star)?;
        let tb = traj.blowup_time().expect("above threshold");
        println!(
            "  lambda = {lambda}, phi0 = {phi0}: numerical t_b = {tb:.8}, bound T* = {t_star:.8} \
             (ratio {:.4})",
            tb / t_star
        );
    }

    println!("\nthreshold behavior:");
    let lambda = 1.5;
    let threshold = s_f(&f, lambda)?;
    println!("  s_f({lambda}) = {threshold}");
    let stationary = integrate_comparison(&f, lambda, threshold, 10.0)?;
    println!(
        "  phi0 = s_f: Phi(10) = {:.12} (equilibrium)",
        stationary.values.last().unwrap()
    );
    let decaying = integrate_comparison(&f, lambda, 0.5 * threshold, 10.0)?;
    println!(
        "  phi0 = s_f/2: Phi(10) = {:.3e} (decays, no blow-up)",
        decaying.values.last().unwrap()
    );
    Ok(())
}
