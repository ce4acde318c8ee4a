//! Simulate a certified configuration and watch the tracked functional
//! `Phi(t) = int kappa u` ride the comparison inequality into blow-up.

use blowup::{
    certify, compute_bounds, run_simulation, weighted_mass, InitialDatum, KaplanParams,
    OperatorParams, ReactionSpec, SimConfig,
};

fn main() -> blowup::Result<()> {
    let op = OperatorParams::new(1.0, 1.0, 0.5, 1)?;
    let reaction = ReactionSpec::power(2.0)?;
    let beta = 1.5;

    let kp = KaplanParams::new(beta, 1.0, op)?;
    let bounds = compute_bounds(&kp)?;
    let unit = InitialDatum::Gaussian { amplitude: 1.0, width: 1.0 };
    let amplitude = 2.0 * bounds.lambda0 / weighted_mass(&unit, &kp)?;
    let datum = InitialDatum::Gaussian { amplitude, width: 1.0 };

    let cert = certify(&datum, &reaction, &kp, &bounds)?;
    let t_star = cert.blowup_time_bound.expect("certified");
    println!("certificate: margin = {:.4e}, T* = {t_star:.6}", cert.margin);

    let config = SimConfig {
        op,
        reaction,
        u0: datum,
        box_halfwidth: 32.0,
        points_per_dim: 2048,
        dt_init: 1e-4,
        t_max: 3.0 * t_star,
        blowup_threshold: 1e10,
        kaplan: Some(kp),
        kaplan_lambda: Some(cert.lambda),
    };
    let traj = run_simulation(&config)?;
    println!("termination: {:?}", traj.termination);
    if let Some(tb) = traj.blowup_time() {
        println!("detected blow-up at t_b = {tb:.6} (bound predicts <= {t_star:.6})");
    }

    println!("\n  t         sup|u|        Phi(t)");
    let stride = (traj.snapshots.len() / 12).max(1);
    for s in traj.snapshots.iter().step_by(stride) {
        println!("  {:8.5}  {:12.5e}  {:12.5e}", s.t, s.sup_norm, s.phi);
    }
    let last = traj.snapshots.last().unwrap();
    println!("  {:8.5}  {:12.5e}  {:12.5e}", last.t, last.sup_norm, last.phi);
    println!(
        "\nclamps: {} significant / {} total; outer-shell mass fraction {:.2e}",
        traj.significant_clamps, traj.total_clamps, traj.tail_mass_indicator
    );
    Ok(())
}
