use std::f64::consts::PI;

use hypnls::hypgeom::{apply_laplacian, build_weights, lap_r2, quadrature, w1};
use hypnls::{build_grid, Error, RadialField};

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

#[test]
fn grid_node_arithmetic() {
    let g = build_grid(3, 20.0, 4000).unwrap();
    assert_eq!(g.dr(), 0.005);
    assert!((g.nodes()[0] - 0.0025).abs() < 1e-15);
    assert!(g.nodes().windows(2).all(|w| w[1] > w[0]));

    let g = build_grid(2, 15.0, 3000).unwrap();
    assert_eq!(g.dr(), 0.005);
    assert_eq!(g.sphere_area(), 2.0 * PI);
    assert_eq!(build_grid(3, 1.0, 16).unwrap().sphere_area(), 4.0 * PI);

    assert!(matches!(build_grid(4, 20.0, 4000), Err(Error::UnsupportedDimension(4))));
    assert!(build_grid(3, 0.0, 4000).is_err());
    assert!(build_grid(3, 20.0, 15).is_err());
}

#[test]
fn weight_limits() {
    assert!((w1(1e-4) - 1.0 / 3.0).abs() < 1e-6);
    assert!(w1(20.0) < 1e-6);
    assert!((lap_r2(3, 1e-4) - 6.0).abs() < 1e-6);
    assert!((lap_r2(2, 1e-4) - 4.0).abs() < 1e-6);

    for n in [2, 3] {
        let g = build_grid(n, 20.0, 2000).unwrap();
        let w = build_weights(&g);
        assert!(w.w1.iter().all(|&x| x > 0.0 && x < 1.0 / 3.0));
        for v in [&w.volume, &w.coth, &w.w1, &w.w2, &w.lap_r2, &w.bilap_r2] {
            assert!(v.iter().all(|x| x.is_finite()));
        }
        assert!((w.lap_r2[0] - 2.0 * n as f64).abs() < 1e-4);
        assert_eq!(&w, g.weights());
    }
}

#[test]
fn unit_ball_volumes() {
    // dr = 1e-3 puts a cell face exactly at r = 1
    let g = build_grid(2, 10.0, 10000).unwrap();
    let ind: Vec<f64> = g.nodes().iter().map(|&r| if r <= 1.0 { 1.0 } else { 0.0 }).collect();
    assert!(rel(quadrature(&ind, &g).unwrap(), 2.0 * PI * (1f64.cosh() - 1.0)) < 1e-4);

    let g = build_grid(3, 10.0, 10000).unwrap();
    let ind: Vec<f64> = g.nodes().iter().map(|&r| if r <= 1.0 { 1.0 } else { 0.0 }).collect();
    assert!(rel(quadrature(&ind, &g).unwrap(), PI * (2f64.sinh() - 2.0)) < 1e-4);

    assert_eq!(quadrature(&vec![0.0; 10000], &g).unwrap(), 0.0);
    assert!(matches!(quadrature(&[1.0; 3], &g), Err(Error::GridMismatch)));
}

#[test]
fn quadrature_converges_at_second_order() {
    // 2 pi int_0^inf e^{-2r} sinh r dr = 2 pi / 3
    let err = |points: usize| {
        let g = build_grid(2, 20.0, points).unwrap();
        let f: Vec<f64> = g.nodes().iter().map(|&r| (-2.0 * r).exp()).collect();
        (quadrature(&f, &g).unwrap() - 2.0 * PI / 3.0).abs()
    };
    let (e1, e2, e3) = (err(500), err(1000), err(2000));
    assert!((3.8..4.2).contains(&(e1 / e2)), "{}", e1 / e2);
    assert!((3.8..4.2).contains(&(e2 / e3)), "{}", e2 / e3);
}

/// Largest `|Delta_h f - Delta f|` on `[lo, hi]`, relative to the largest `|Delta f|` there.
fn max_rel_err(n: usize, points: usize, f: impl Fn(f64) -> f64, lap: impl Fn(f64) -> f64, lo: f64, hi: f64) -> f64 {
    let g = build_grid(n, 20.0, points).unwrap();
    let u = RadialField::from_real_fn(g.clone(), &f);
    let l = apply_laplacian(&u);
    let window = || g.nodes().iter().zip(l.values()).filter(|(&r, _)| r >= lo && r <= hi);
    let scale = window().map(|(&r, _)| lap(r).abs()).fold(0.0, f64::max);
    window().map(|(&r, v)| (v.re - lap(r)).abs()).fold(0.0, f64::max) / scale
}

// The point-value volume weights leave an O(dr^2 / r^2) consistency error, which is
// O(1) at the first node; second order holds on any interval away from the origin.
#[test]
fn laplacian_of_cosh_in_three_dimensions() {
    let e1 = max_rel_err(3, 2000, f64::cosh, |r| 3.0 * r.cosh(), 0.5, 15.0);
    let e2 = max_rel_err(3, 4000, f64::cosh, |r| 3.0 * r.cosh(), 0.5, 15.0);
    assert!(e1 < 1e-3, "{e1:e}");
    assert!((3.5..4.5).contains(&(e1 / e2)), "{}", e1 / e2);
}

#[test]
fn laplacian_of_gaussian_in_two_dimensions() {
    let f = |r: f64| (-r * r).exp();
    let lap = |r: f64| ((4.0 * r * r - 2.0) - 2.0 * r / r.tanh()) * (-r * r).exp();
    let e1 = max_rel_err(2, 2000, f, lap, 0.5, 5.0);
    let e2 = max_rel_err(2, 4000, f, lap, 0.5, 5.0);
    assert!(e1 < 1e-2, "{e1:e}");
    assert!((3.5..4.5).contains(&(e1 / e2)), "{}", e1 / e2);
}

#[test]
fn constants_are_harmonic_away_from_the_wall() {
    let g = build_grid(3, 20.0, 2000).unwrap();
    let l = apply_laplacian(&RadialField::from_real_fn(g.clone(), |_| 1.0));
    let inner = g.num_points() - 2;
    assert!(l.values()[..inner].iter().all(|v| v.norm() < 1e-9));
}
