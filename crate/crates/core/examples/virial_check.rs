// The second time derivative of the second moment against the virial functional,
// and the localized virial approaching it as the cutoff radius grows.

use hypnls::evolve::{evolve_run, virial_consistency, IntegratorConfig, VirialReport};
use hypnls::functionals::{g_functional, localized_virial, CutoffProfile};
use hypnls::{build_grid, solve_ground_state, RadialField};

pub fn run_example() -> hypnls::Result<VirialReport> {
    let grid = build_grid(3, 20.0, 2000)?;
    let gs = solve_ground_state(3, 3.0, 0.0, &grid, 1e-13)?;
    let u0 = RadialField::from_real_fn(grid, |r| 0.5 * (-r * r).exp());
    let run = evolve_run(&u0, &IntegratorConfig::new(2e-3, 1.0), &gs)?;
    let rep = virial_consistency(&run)?;
    println!("max relative mismatch {:.2e} over {} records", rep.max_mismatch, rep.records_used);

    let cut = CutoffProfile::standard();
    let g = g_functional(&run.final_field, 3.0);
    for radius in [4.0, 8.0, 16.0] {
        let lv = localized_virial(&run.final_field, radius, &cut, 3.0);
        println!("R = {radius:>4}: |localized - G| / |G| = {:.2e}", (lv - g).abs() / g.abs());
    }
    Ok(rep)
}

fn main() -> hypnls::Result<()> {
    run_example().map(|_| ())
}
