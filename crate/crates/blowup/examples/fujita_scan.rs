//! Scan reaction exponents across the critical value `p_F = 1 + 2s/N`:
//! below it every nontrivial datum certifies at some scale.

use blowup::{fujita_exponent, fujita_scan, InitialDatum, OperatorParams};

fn main() -> blowup::Result<()> {
    let op = OperatorParams::new(1.0, 1.0, 0.5, 1)?;
    let datum = InitialDatum::Gaussian { amplitude: 1.0, width: 1.0 };
    println!("p_F = {}", fujita_exponent(&op));

    let table = fujita_scan(&op, &datum, 1.0, &[1.2, 1.5, 1.8, 2.5, 3.0])?;
    println!("{}", table.to_csv());
    for row in &table.rows {
        let regime = if row.p < table.p_fujita { "subcritical" } else { "supercritical" };
        println!(
            "p = {:4}: {} ({regime}{})",
            row.p,
            if row.certified { "certified" } else { "not certified" },
            if row.note.is_empty() { String::new() } else { format!("; {}", row.note) }
        );
    }
    println!("\n(absence of a certificate proves nothing; presence rules out global solutions)");
    Ok(())
}
