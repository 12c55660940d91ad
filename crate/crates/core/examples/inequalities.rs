// Pointwise inequalities behind the virial argument, scanned in extended precision.

use hypnls::expcli::{inequality_rows, ScanRow};

pub fn run_example() -> hypnls::Result<Vec<ScanRow>> {
    let mut rows = inequality_rows(2, 20.0, 100_000, 1.0)?;
    rows.extend(inequality_rows(3, 20.0, 100_000, 1.0)?);
    for r in &rows {
        let p = r.p.map(|p| format!("p = {p:.3}")).unwrap_or_default();
        println!(
            "n = {} {:<15} {p:<10} min {:>10.3e} at r = {:<8.4} passed {}",
            r.n, r.check, r.scan.min_value, r.scan.argmin, r.passed
        );
    }
    Ok(rows)
}

fn main() -> hypnls::Result<()> {
    run_example().map(|_| ())
}
