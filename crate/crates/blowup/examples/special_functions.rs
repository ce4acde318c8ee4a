//! The special-function kernel: log-gamma, the Gauss hypergeometric
//! function, and the closed-form constants used everywhere else.

use blowup::{frac_constant, gauss_2f1, log_gamma, psi_mass, HyperParams, OperatorParams};

fn main() -> blowup::Result<()> {
    println!("== gamma ==");
    for x in [0.5, 1.0, 2.5, 5.0, 10.0] {
        println!("  ln Gamma({x:4}) = {:.15}", log_gamma(x)?);
    }

    println!("\n== 2F1 across its evaluation branches ==");
    let cases = [
        (1.0, 1.0, 2.0, 0.5),      // -ln(1-z)/z identity
        (0.5, 1.5, 2.5, -3.0),     // Pfaff branch (negative argument)
        (0.3, 1.7, 2.6, 0.75),     // generic z -> 1-z connection
        (0.5, 1.5, 3.0, 0.8),      // integer-case connection (log terms)
        (-0.5, 2.0, 0.5, 0.999),   // far-field Kaplan branch
    ];
    for (a, b, c, z) in cases {
        let v = gauss_2f1(&HyperParams::new(a, b, c, z)?)?;
        println!("  2F1({a}, {b}; {c}; {z}) = {v:.12}");
    }

    println!("\n== kernel normalization C_{{N,s}} ==");
    for (n, s) in [(1usize, 0.5), (2, 0.5), (1, 0.25), (3, 0.75)] {
        let op = OperatorParams::new(0.0, 1.0, s, n)?;
        println!("  C_{{{n},{s}}} = {:.12}", frac_constant(&op)?);
    }

    println!("\n== weight mass c_beta = || (1+|x|^2)^-beta ||_L1 ==");
    for (n, beta) in [(1usize, 1.0), (2, 2.0), (3, 2.0), (1, 1.5)] {
        println!("  c_beta(N={n}, beta={beta}) = {:.12}", psi_mass(beta, n)?);
    }
    Ok(())
}
