// Minimal energy at fixed mass for a mass-subcritical power: zero for small mass,
// negative past a threshold, with each minimizer a ground state at its multiplier.

use hypnls::build_grid;
use hypnls::expcli::{log_spaced, mass_curve, MassCurveReport};

pub fn run_example() -> hypnls::Result<MassCurveReport> {
    let grid = build_grid(3, 20.0, 2000)?;
    let rep = mass_curve(3, 2.0, &log_spaced(0.5, 20.0, 5), &grid)?;
    for r in &rep.rows {
        let lambda = r.lagrange_lambda.map(|l| format!("{l:.4}")).unwrap_or_else(|| "-".into());
        println!("alpha {:>7.3}: e = {:>11.4e}, lambda = {lambda}", r.alpha, r.e_alpha);
    }
    println!("first negative grid mass: {:?}", rep.alpha0);
    Ok(rep)
}

fn main() -> hypnls::Result<()> {
    run_example().map(|_| ())
}
