// Reshape a diagnostics series into long `series,t,value` rows for plotting.

use hypnls::evolve::{evolve_run, IntegratorConfig};
use hypnls::expcli::{long_format, PlotKind};
use hypnls::functionals::DiagnosticsRecord;
use hypnls::{build_grid, solve_ground_state};

pub fn run_example() -> hypnls::Result<String> {
    let gs = solve_ground_state(3, 3.0, 0.0, &build_grid(3, 20.0, 1000)?, 1e-13)?;
    let run = evolve_run(&gs.field().scaled(0.9), &IntegratorConfig::new(2e-3, 0.2), &gs)?;
    let mut wide = format!("{}\n", DiagnosticsRecord::CSV_HEADER);
    for r in &run.series {
        wide.push_str(&r.to_csv_row());
        wide.push('\n');
    }
    let long = long_format(PlotKind::Diagnostics, &wide)?;
    for line in long.lines().filter(|l| l.starts_with("series") || l.starts_with("delta_lambda")) {
        println!("{line}");
    }
    Ok(long)
}

fn main() -> hypnls::Result<()> {
    run_example().map(|_| ())
}
