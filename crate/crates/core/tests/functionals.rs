use std::f64::consts::PI;
use std::sync::Arc;

use hypnls::functionals::*;
use hypnls::hypgeom::{quadrature, RadialGrid};
use hypnls::spectral::random_fields;
use hypnls::{build_grid, solve_ground_state, GroundState, RadialField};
use num_complex::Complex64;

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

fn ground_state(n: usize) -> GroundState {
    let g = build_grid(n, 20.0, 2000).unwrap();
    solve_ground_state(n, 3.0, 0.0, &g, 1e-13).unwrap()
}

fn fine(n: usize) -> Arc<RadialGrid> {
    build_grid(n, 20.0, 20000).unwrap()
}

#[test]
fn mass_oracles() {
    let g = fine(3);
    assert_eq!(mass(&RadialField::zeros(g.clone())), 0.0);
    // 4 pi int e^{-4r} sinh^2 r dr = pi / 6
    let u = RadialField::from_real_fn(g.clone(), |r| (-2.0 * r).exp());
    assert!(rel(mass(&u), PI / 6.0) < 1e-5);

    let c = Complex64::new(2.0, 1.0);
    for v in random_fields(&build_grid(3, 20.0, 1000).unwrap(), 5, 11) {
        let w = RadialField::from_values(v.grid().clone(), v.values().iter().map(|z| c * z).collect()).unwrap();
        assert!(rel(mass(&w), 5.0 * mass(&v)) < 1e-13);
    }
}

#[test]
fn second_moment_oracles() {
    let g = fine(2);
    assert_eq!(second_moment(&RadialField::zeros(g.clone())), 0.0);
    // 2 pi int r^2 e^{-4r} sinh r dr = pi (2/27 - 2/125)
    let u = RadialField::from_real_fn(g.clone(), |r| (-2.0 * r).exp());
    assert!(rel(second_moment(&u), PI * (2.0 / 27.0 - 2.0 / 125.0)) < 1e-5);
    assert!(rel(second_moment(&u.scaled(3.0)), 9.0 * second_moment(&u)) < 1e-13);
}

#[test]
fn shifted_energy_identities() {
    let grid = build_grid(3, 20.0, 1000).unwrap();
    assert_eq!(energy_lambda(&RadialField::zeros(grid.clone()), 0.3, 3.0).unwrap(), 0.0);
    for u in random_fields(&grid, 10, 3) {
        for lambda in [-0.5, 0.0, 0.7] {
            let lhs = energy_lambda(&u, lambda, 3.0).unwrap();
            let rhs = energy(&u, 3.0) - 0.5 * lambda * mass(&u);
            assert!((lhs - rhs).abs() <= 1e-12 * (energy(&u, 3.0).abs() + mass(&u)));
        }
    }
    let u = &random_fields(&grid, 1, 3)[0];
    assert!(energy_lambda(u, 1.0, 3.0).is_err());
    assert!(h_lambda_sq(u, 1.2).is_err());
}

#[test]
fn ground_state_energy_and_norm_gap() {
    let gs = ground_state(3);
    let q = gs.field();
    let el = energy_lambda(&q, 0.0, 3.0).unwrap();
    assert!(rel(el, 0.25 * gs.hlam_sq) < 1e-5);
    assert!(delta_lambda(&q, &gs).unwrap().abs() < 1e-8 * gs.hlam_sq);
    let zero = RadialField::zeros(gs.grid().clone());
    assert!(rel(delta_lambda(&zero, &gs).unwrap(), -gs.hlam_sq) < 1e-14);
    assert!(rel(delta_lambda(&q.scaled(1.1), &gs).unwrap(), 0.21 * gs.hlam_sq) < 1e-10);
}

#[test]
fn virial_functional_values() {
    let gs = ground_state(3);
    let q = gs.field();
    assert_eq!(g_functional(&RadialField::zeros(gs.grid().clone()), 3.0), 0.0);
    assert!(g_functional(&q, 3.0).abs() < 1e-4 * gs.hlam_sq);

    let u = q.scaled(1.1);
    let g = g_functional(&u, 3.0);
    let q4w2: Vec<f64> =
        gs.profile.iter().zip(&gs.grid().weights().w2).map(|(x, w)| x.powi(4) * w).collect();
    let direct = 8.0 * 1.21 * h_sq(&q) - 2.0 * 1.1f64.powi(4) * quadrature(&q4w2, gs.grid()).unwrap();
    assert!(g < 0.0);
    assert!(rel(g, direct) < 1e-12);
}

#[test]
fn virial_functional_has_no_w1_term_in_three_dimensions() {
    let grid = build_grid(3, 20.0, 1000).unwrap();
    for u in random_fields(&grid, 5, 8) {
        let p = 3.0;
        let l: Vec<f64> = u.values().iter().zip(&grid.weights().w2).map(|(z, w)| z.norm().powf(p + 1.0) * w).collect();
        let two_term = 8.0 * h_sq(&u) - 4.0 * (p - 1.0) / (p + 1.0) * quadrature(&l, &grid).unwrap();
        assert_eq!(g_functional(&u, p).to_bits(), two_term.to_bits());
    }
}

#[test]
fn auxiliary_functional() {
    let gs = ground_state(3);
    assert!(h_aux(&gs.field(), &gs).unwrap().abs() < 1e-4 * gs.hlam_sq);
    let zero = RadialField::zeros(gs.grid().clone());
    assert!(rel(h_aux(&zero, &gs).unwrap(), 16.0 * gs.energy_lambda) < 1e-14);
    // 4 (4 - n(p-1)) / (p+1) = -2 at n = 3, p = 3
    for u in random_fields(gs.grid(), 20, 21) {
        for a in [0.5, 3.0, 10.0] {
            let v = u.scaled(a);
            assert!(h_aux(&v, &gs).unwrap() <= -2.0 * lp1(&v, 3.0) + 16.0 * gs.energy_lambda);
        }
    }
}

fn compact_bump(grid: &Arc<RadialGrid>, radius: f64) -> RadialField {
    RadialField::from_real_fn(grid.clone(), |r| {
        let s = r / radius;
        if s < 1.0 {
            (1.0 - s * s).powi(4)
        } else {
            0.0
        }
    })
}

#[test]
fn localized_virial_matches_g_inside_the_cutoff() {
    let cut = CutoffProfile::standard();
    for n in [2, 3] {
        let grid = build_grid(n, 20.0, 2000).unwrap();
        let u = compact_bump(&grid, 3.0).scaled(1.7);
        let g = g_functional(&u, 3.0);
        let lv = localized_virial(&u, 4.0, &cut, 3.0);
        assert!(rel(lv, g) < 1e-10, "n = {n}: {lv} vs {g}");
        assert_eq!(localized_virial(&RadialField::zeros(grid.clone()), 4.0, &cut, 3.0), 0.0);
    }
}

#[test]
fn localized_virial_converges_to_g() {
    let cut = CutoffProfile::standard();
    let grid = build_grid(3, 20.0, 4000).unwrap();
    let u = RadialField::from_real_fn(grid.clone(), |r| (-r * r).exp());
    let g = g_functional(&u, 3.0);
    let d6 = (localized_virial(&u, 6.0, &cut, 3.0) - g).abs();
    let d12 = (localized_virial(&u, 12.0, &cut, 3.0) - g).abs();
    let scale = h1_sq(&u) + lp1(&u, 3.0);
    assert!(d6 < (-6.0f64).exp() * scale, "{d6:e}");
    assert!(d12 <= d6);
}

#[test]
fn functionals_ignore_global_phase() {
    let gs = ground_state(3);
    for u in random_fields(gs.grid(), 5, 4) {
        let rot = Complex64::from_polar(1.0, 0.83);
        let v = RadialField::from_values(u.grid().clone(), u.values().iter().map(|z| rot * z).collect()).unwrap();
        let cut = CutoffProfile::standard();
        let a = DiagnosticsRecord::compute(0.0, &u, &gs, 5.0, &cut).as_array();
        let b = DiagnosticsRecord::compute(0.0, &v, &gs, 5.0, &cut).as_array();
        for (x, y) in a.iter().zip(&b) {
            assert!((x - y).abs() <= 1e-12 * x.abs().max(1.0), "{x} vs {y}");
        }
    }
}

#[test]
fn diagnostics_record_identities() {
    let gs = solve_ground_state(3, 3.0, 0.5, &build_grid(3, 20.0, 2000).unwrap(), 1e-13).unwrap();
    let cut = CutoffProfile::standard();
    for u in random_fields(gs.grid(), 5, 9) {
        let r = DiagnosticsRecord::compute(0.5, &u, &gs, 5.0, &cut);
        assert!((r.energy_lambda - (r.energy - 0.25 * r.mass)).abs() <= 1e-12 * (r.energy.abs() + r.mass));
        assert!(r.hlam_sq > r.h_sq);
        let back = DiagnosticsRecord::from_array(r.as_array());
        assert_eq!(back.to_csv_row(), r.to_csv_row());
    }
    assert_eq!(
        DiagnosticsRecord::CSV_HEADER,
        "t,mass,energy,energy_lambda,hlam_sq,h_sq,lp1,delta_lambda,G_value,second_moment,loc_virial,h1_sq"
    );
}

#[test]
fn trapping_sign_detector() {
    let gs = ground_state(3);
    let cut = CutoffProfile::standard();
    let q = gs.field();
    let mk = |t: f64, a: f64| DiagnosticsRecord::compute(t, &q.scaled(a), &gs, 5.0, &cut);
    let below: Vec<_> = (0..5).map(|k| mk(k as f64, 0.9)).collect();
    let above: Vec<_> = (0..5).map(|k| mk(k as f64, 1.1)).collect();
    assert_eq!(trapping_sign_check(&below).unwrap(), SignHistory::ConstantNegative);
    assert_eq!(trapping_sign_check(&above).unwrap(), SignHistory::ConstantPositive);
    let flipping: Vec<_> = (0..6).map(|k| mk(k as f64, if k % 2 == 0 { 0.9 } else { 1.1 })).collect();
    assert_eq!(trapping_sign_check(&flipping).unwrap(), SignHistory::Violation { t: 1.0 });
    assert!(trapping_sign_check(&[]).is_err());
}

#[test]
fn variational_bound() {
    let gs = ground_state(3);
    let q = gs.field();
    let at_q = variational_bound_check(&q.scaled(1.0 - 1e-12), &gs).unwrap().unwrap();
    assert!(at_q.abs() < 1e-6 * gs.hlam_sq);
    let half = variational_bound_check(&q.scaled(0.5), &gs).unwrap().unwrap();
    // (2 a^2 - a^4 - a^2) ||Q||^2 at a = 1/2
    assert!(rel(half, 0.1875 * gs.hlam_sq) < 1e-8);
    assert!(variational_bound_check(&q.scaled(1.05), &gs).unwrap().is_none());

    let mut bad = gs.clone();
    bad.energy_lambda = -1.0;
    assert!(variational_bound_check(&q.scaled(0.5), &bad).is_err());
}

#[test]
fn poincare_sobolev_with_the_computed_constant() {
    let gs = ground_state(3);
    let d = gs.d_lambda;
    assert!(rel(d, gs.lp1.powf(-0.5)) < 1e-14);
    for u in random_fields(gs.grid(), 50, 31) {
        let lhs = lp1(&u, 3.0).powf(0.5);
        let rhs = d * h_lambda_sq(&u, 0.0).unwrap();
        assert!(lhs <= rhs * (1.0 + 1e-6), "{lhs} > {rhs}");
    }
}
