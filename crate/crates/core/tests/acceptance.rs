//! The nine acceptance criteria at their stated tolerances. Run with `--nocapture`
//! to see the one-line verdicts.

use hypnls::evolve::{evolve_run, virial_consistency, IntegratorConfig, RunStatus};
use hypnls::expcli::*;
use hypnls::spectral::{SpectralConfig, SpectralTransform};
use hypnls::{build_grid, solve_ground_state, GroundState, RadialField, Result};

struct Verdict {
    passed: bool,
    detail: String,
}

fn verdict(passed: bool, detail: String) -> Result<Verdict> {
    Ok(Verdict { passed, detail })
}

fn config(command: Command, n: usize, lambda: f64, tier: Tier) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(command);
    cfg.n = n;
    cfg.lambda = lambda;
    cfg.tier = tier;
    cfg
}

fn tier_ground_state(n: usize, lambda: f64, tier: Tier) -> Result<GroundState> {
    let cfg = config(Command::GroundState, n, lambda, tier);
    solve_ground_state(n, 3.0, lambda, &build_grid(n, cfg.r_max(), cfg.points())?, 1e-13)
}

fn ground_state_identities() -> Result<Verdict> {
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    let mut passed = true;
    for (n, lambda) in [(3, 0.0), (3, 0.5), (3, 0.9), (2, 0.0), (2, 0.2)] {
        let cfg = config(Command::GroundState, n, lambda, Tier::Quick);
        let gs = solve_ground_state(n, 3.0, lambda, &groundstate_grid(&cfg)?, 1e-13)?;
        let r = gs.residuals;
        passed &= r.pohozaev < 1e-5 && r.energy_ratio < 1e-5 && r.g_value < 1e-4;
        worst = (worst.0.max(r.pohozaev), worst.1.max(r.energy_ratio), worst.2.max(r.g_value));
    }
    verdict(passed, format!("worst pohozaev {:.1e}, energy ratio {:.1e}, |G(Q)| {:.1e}", worst.0, worst.1, worst.2))
}

fn stationary_evolution() -> Result<Verdict> {
    let gs = tier_ground_state(3, 0.5, Tier::Production)?;
    let cfg = config(Command::Dichotomy, 3, 0.5, Tier::Production);
    let run = evolve_run(&gs.field(), &IntegratorConfig::new(cfg.dt(), 3.0), &gs)?;
    let (a, b) = (run.series[0], run.series[run.series.len() - 1]);
    let mass_drift = (b.mass - a.mass).abs() / a.mass / 3.0;
    let energy_drift = (b.energy_lambda - a.energy_lambda).abs() / a.energy_lambda.abs() / 3.0;
    verdict(
        run.completed() && run.max_modulus_deviation < 1e-3 && mass_drift < 1e-8 && energy_drift < 1e-6,
        format!(
            "modulus deviation {:.1e}, mass drift {mass_drift:.1e}/t, energy drift {energy_drift:.1e}/t",
            run.max_modulus_deviation
        ),
    )
}

fn virial_identity() -> Result<Verdict> {
    let gs = tier_ground_state(3, 0.0, Tier::Quick)?;
    let u0 = RadialField::from_real_fn(gs.grid().clone(), |r| 0.5 * (-r * r).exp());
    let run = evolve_run(&u0, &IntegratorConfig::new(Tier::Quick.dt(), 1.0), &gs)?;
    let rep = virial_consistency(&run)?;
    verdict(
        run.series.len() == 101 && rep.max_mismatch < 0.02,
        format!("max mismatch {:.2e} over {} records", rep.max_mismatch, rep.records_used),
    )
}

fn dichotomy_reports() -> Result<Vec<DichotomyReport>> {
    [3, 2]
        .iter()
        .map(|&n| {
            let mut cfg = config(Command::Dichotomy, n, 0.0, Tier::Quick);
            cfg.out = std::env::temp_dir().join(format!("hypnls-acceptance-{}", std::process::id()));
            let outcome = cmd_dichotomy(&cfg);
            let _ = std::fs::remove_dir_all(&cfg.out);
            outcome.map(|o| o.report)
        })
        .collect()
}

fn dichotomy(reports: &[DichotomyReport]) -> Result<Verdict> {
    let mut passed = true;
    let mut parts = Vec::new();
    for rep in reports {
        let blowups: Vec<f64> = rep
            .rows
            .iter()
            .filter(|r| r.alpha > 1.0)
            .filter_map(|r| r.forward.as_ref().and_then(|f| f.t_star))
            .collect();
        let expected = rep.rows.iter().map(|r| r.alpha).collect::<Vec<_>>() == [0.5, 0.9, 1.1, 1.5];
        let rows_ok = rep.rows.iter().all(|r| {
            let dir_ok = |d: &Option<DirectionOutcome>| {
                d.as_ref().is_some_and(|d| match d.status {
                    RunStatus::Completed { .. } => r.alpha < 1.0 && d.proxy.is_consistent(),
                    RunStatus::Blowup { t_star, .. } => r.alpha > 1.0 && t_star.is_finite(),
                    RunStatus::InnerSolveFailure { .. } => false,
                })
            };
            r.consistent && dir_ok(&r.forward) && dir_ok(&r.backward)
        });
        let ordered = blowups.len() == 2 && blowups[1] < blowups[0];
        passed &= expected && rows_ok && ordered;
        let worst_excess = rep.rows.iter().filter_map(|r| r.max_virial_excess).fold(f64::NEG_INFINITY, f64::max);
        parts.push(format!("n = {}: t_star {blowups:.4?}, worst virial excess {worst_excess:.2e}", rep.n));
    }
    verdict(passed, parts.join("; "))
}

fn trapping(reports: &[DichotomyReport]) -> Result<Verdict> {
    let rows: Vec<&DichotomyRow> = reports.iter().flat_map(|r| &r.rows).filter(|r| r.energy_ratio <= 1.0).collect();
    let signs = rows.iter().all(|r| r.delta_sign_preserved == Some(true));
    let worst = rows.iter().filter_map(|r| r.min_bound_residual).fold(f64::INFINITY, f64::min);
    verdict(
        !rows.is_empty() && signs && worst >= -1e-6,
        format!("{} rows, delta sign constant in all: {signs}, smallest bound residual {worst:.2e}", rows.len()),
    )
}

fn inequality_scans() -> Result<Verdict> {
    let mut rows = inequality_rows(2, 20.0, 100_000, 1.0)?;
    rows.extend(inequality_rows(3, 20.0, 100_000, 1.0)?);
    let quartic_min = rows.iter().filter(|r| r.check == "quartic").map(|r| r.scan.min_value).fold(f64::INFINITY, f64::min);
    verdict(rows.iter().all(|r| r.passed), format!("{} scans, quartic min {quartic_min:.2e}", rows.len()))
}

fn mass_curve_check() -> Result<Verdict> {
    let cfg = config(Command::MassCurve, 3, 0.0, Tier::Quick);
    let (lo, hi, k) = DEFAULT_MASS_GRID;
    let rep = mass_curve(3, 2.0, &log_spaced(lo, hi, k), &build_grid(3, cfg.r_max(), cfg.points())?)?;
    let (first, last) = (rep.rows[0], rep.rows[rep.rows.len() - 1]);
    let minimizers: Vec<&MassCurveRow> = rep.rows.iter().filter(|r| r.e_alpha < 0.0).collect();
    let worst_el = minimizers.iter().filter_map(|r| r.el_residual).fold(0.0, f64::max);
    let passed = first.e_alpha == 0.0
        && last.e_alpha < 0.0
        && minimizers.iter().all(|r| r.el_residual.is_some_and(|x| x < 1e-4) && r.lagrange_lambda.is_some_and(|l| l < 1.0));
    verdict(
        passed,
        format!("e({}) = 0, e({:.0}) = {:.3e}, {} minimizers, worst EL residual {worst_el:.1e}", first.alpha, last.alpha, last.e_alpha, minimizers.len()),
    )
}

fn spectral_suite() -> Result<Verdict> {
    let cfg = config(Command::SpectralCheck, 3, 0.0, Tier::Quick);
    let t = SpectralTransform::new(spectral_grid(&cfg)?, SpectralConfig::default())?;
    let (rep, _) = spectral_report(&t, 0)?;
    let spreads: Vec<f64> = rep.sobolev.iter().map(|r| r.spread).collect();
    verdict(
        rep.passed,
        format!(
            "parseval {:.1e}, reconstruction {:.1e}, sup-bound constant {:.2e} (held out {:.2e}), Sobolev spreads {spreads:.2?}",
            rep.parseval_max, rep.reconstruction, rep.sup_bound.fitted_constant, rep.sup_bound.validation_max
        ),
    )
}

fn order(v: &[f64]) -> f64 {
    ((v[0] - v[1]) / (v[1] - v[2])).abs().log2()
}

fn self_convergence() -> Result<Verdict> {
    let tiers = [Tier::Quick, Tier::Mid, Tier::Production];
    let gs: Vec<GroundState> = tiers.iter().map(|&t| tier_ground_state(3, 0.0, t)).collect::<Result<_>>()?;
    let q0: Vec<f64> = gs.iter().map(|g| g.q0).collect();
    let mut orders = vec![order(&q0)];
    for alpha in [1.1, 1.5] {
        let mut t_star = Vec::new();
        for (g, &tier) in gs.iter().zip(&tiers) {
            let mut icfg = dichotomy_integrator(&config(Command::Dichotomy, 3, 0.0, tier));
            icfg.horizon = 3.0;
            match evolve_run(&g.field().scaled(alpha), &icfg, g)?.status {
                RunStatus::Blowup { t_star: t, .. } => t_star.push(t),
                _ => return verdict(false, format!("alpha = {alpha} did not blow up at tier {}", tier.name())),
            }
        }
        orders.push(order(&t_star));
    }
    verdict(orders.iter().all(|&p| p >= 1.9), format!("orders q0 {:.2}, t_star(1.1) {:.2}, t_star(1.5) {:.2}", orders[0], orders[1], orders[2]))
}

fn with_reports(reports: &Result<Vec<DichotomyReport>>, f: fn(&[DichotomyReport]) -> Result<Verdict>) -> Result<Verdict> {
    match reports {
        Ok(r) => f(r),
        Err(e) => verdict(false, format!("dichotomy runs failed: {e}")),
    }
}

#[test]
fn acceptance_criteria() {
    let reports = dichotomy_reports();
    let criteria: Vec<(&str, Box<dyn Fn() -> Result<Verdict>>)> = vec![
        ("ground-state identities", Box::new(ground_state_identities)),
        ("stationary evolution", Box::new(stationary_evolution)),
        ("virial identity", Box::new(virial_identity)),
        ("dichotomy", Box::new(|| with_reports(&reports, dichotomy))),
        ("trapping sign invariance", Box::new(|| with_reports(&reports, trapping))),
        ("inequality scans", Box::new(inequality_scans)),
        ("mass curve", Box::new(mass_curve_check)),
        ("spectral suite", Box::new(spectral_suite)),
        ("self-convergence", Box::new(self_convergence)),
    ];
    let mut failed = Vec::new();
    for (k, (name, check)) in criteria.iter().enumerate() {
        let (ok, detail) = match check() {
            Ok(v) => (v.passed, v.detail),
            Err(e) => (false, format!("error: {e}")),
        };
        println!("criterion {} {name}: {} ({detail})", k + 1, if ok { "PASS" } else { "FAIL" });
        if !ok {
            failed.push(k + 1);
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
