//! End-to-end certification: does this datum force finite-time blow-up?

use blowup::{
    certify, compute_bounds, epsilon_search, weighted_mass, InitialDatum, KaplanParams,
    OperatorParams, ReactionSpec, Verdict,
};

fn main() -> blowup::Result<()> {
    let op = OperatorParams::new(1.0, 1.0, 0.5, 1)?;
    let reaction = ReactionSpec::power(2.0)?;
    let beta = 1.5;

    // fixed scale: a large gaussian certifies directly at eps = 1
    let kp1 = KaplanParams::new(beta, 1.0, op)?;
    let bounds = compute_bounds(&kp1)?;
    let unit = InitialDatum::Gaussian { amplitude: 1.0, width: 1.0 };
    let unit_mass = weighted_mass(&unit, &kp1)?;
    let amplitude = 2.0 * bounds.lambda0 / unit_mass; // I = 2 s_f(lambda0) for p = 2
    let datum = InitialDatum::Gaussian { amplitude, width: 1.0 };

    let cert = certify(&datum, &reaction, &kp1, &bounds)?;
    println!("fixed scale eps = 1, amplitude = {amplitude:.4}:");
    println!("  I = {:.8}, threshold = {:.8}", cert.integral_i, cert.threshold);
    println!(
        "  verdict: {}",
        if cert.verdict == Verdict::Certified { "certified" } else { "not certified" }
    );
    if let Some(tb) = cert.blowup_time_bound {
        println!("  blow-up no later than T* = {tb:.8}");
    }

    // scale search: a unit gaussian with a subcritical reaction certifies
    // at some small eps even though eps = 1 fails
    let subcritical = ReactionSpec::power(1.5)?;
    let report = epsilon_search(&unit, &subcritical, beta, &op)?;
    println!("\nscale search for gaussian(1, 1) with f(u) = u^1.5:");
    match report.best {
        Some(best) => println!(
            "  certified at eps = {:.3e} with margin {:.3e} (T* = {:.4})",
            best.epsilon,
            best.margin,
            best.blowup_time_bound.unwrap_or(f64::NAN)
        ),
        None => println!("  no scale on the grid certified"),
    }
    Ok(())
}
