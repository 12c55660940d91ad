// Solve for the cubic ground state on H^3 at a few shifts and print its identities.

use hypnls::functionals::{g_functional, lp1};
use hypnls::{build_grid, solve_ground_state, GroundState};

pub fn run_example() -> hypnls::Result<Vec<GroundState>> {
    let grid = build_grid(3, 20.0, 2000)?;
    let mut states = Vec::new();
    println!("{:>6} {:>10} {:>10} {:>10} {:>10}", "lambda", "Q(0)", "pohozaev", "G(Q)/H", "|Q|_4^4");
    for lambda in [0.0, 0.5, 0.9] {
        let gs = solve_ground_state(3, 3.0, lambda, &grid, 1e-13)?;
        let q = gs.field();
        println!(
            "{lambda:>6} {:>10.6} {:>10.1e} {:>10.1e} {:>10.4}",
            gs.q0,
            gs.residuals.pohozaev,
            g_functional(&q, 3.0).abs() / gs.hlam_sq,
            lp1(&q, 3.0)
        );
        states.push(gs);
    }
    Ok(states)
}

fn main() -> hypnls::Result<()> {
    run_example().map(|_| ())
}
