// Evolve alpha Q below and above the threshold and classify each pair of runs.

use hypnls::evolve::IntegratorConfig;
use hypnls::expcli::{dichotomy_row, DichotomyRow, DICHOTOMY_BLOWUP_FACTOR};
use hypnls::{build_grid, solve_ground_state};

pub fn run_example() -> hypnls::Result<Vec<DichotomyRow>> {
    let gs = solve_ground_state(3, 3.0, 0.0, &build_grid(3, 20.0, 2000)?, 1e-13)?;
    let mut icfg = IntegratorConfig::new(2e-3, 3.0);
    icfg.blowup_h1_factor = DICHOTOMY_BLOWUP_FACTOR;
    let mut rows = Vec::new();
    for alpha in [0.5, 0.9, 1.1, 1.5] {
        let (row, fwd, _) = dichotomy_row(&gs, alpha, &icfg)?;
        let last = fwd.series.last().expect("a run records its start");
        println!(
            "alpha {alpha}: delta sign {:+}, {:?}, G at the last record {:.3}, consistent {}",
            row.delta_sign, fwd.status, last.g_value, row.consistent
        );
        rows.push(row);
    }
    Ok(rows)
}

fn main() -> hypnls::Result<()> {
    run_example().map(|_| ())
}
