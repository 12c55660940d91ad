use hypnls::functionals::inequalities::*;

#[test]
fn quartic_vanishes_at_the_origin() {
    for n in [2, 3] {
        assert!(quartic(n, 1e-6).abs() < 1e-18);
        assert!(quartic(n, 1e-6) >= 0.0);
    }
}

#[test]
fn quartic_matches_plain_evaluation_at_moderate_radii() {
    for n in [2usize, 3] {
        let nf = n as f64;
        for k in 1..=20 {
            let r = 0.25 * k as f64;
            let (c, s) = (r.cosh(), r.sinh());
            let plain = (2.0 * nf - 2.0) * r * r * c * c + nf * r * r - (3.0 * nf - 4.0) * r * c * s - 2.0 * s * s;
            let scale = (2.0 * nf - 2.0) * r * r * c * c;
            assert!((quartic(n, r) - plain).abs() < 1e-12 * scale, "n = {n}, r = {r}");
        }
    }
}

#[test]
fn quartic_leading_growth() {
    // F(r) ~ (e^{2r}/4) ((2n-2) r^2 - (3n-4) r - 2) + n r^2 + O(r^2) for large r
    for n in [2usize, 3] {
        let nf = n as f64;
        let r: f64 = 20.0;
        let lead = (2.0 * r).exp() / 4.0 * ((2.0 * nf - 2.0) * r * r - (3.0 * nf - 4.0) * r - 2.0);
        assert!(((quartic(n, r) - lead) / lead).abs() < 1e-12);
    }
}

#[test]
fn quartic_scans_are_nonnegative() {
    for n in [2, 3] {
        let rep = scan_quartic(n, 20.0, 100_000).unwrap();
        assert!(rep.min_value >= -1e-12, "n = {n}: {rep:?}");
        let flipped = scan_quartic_signed(n, 20.0, 100_000, -1.0).unwrap();
        assert!(flipped.min_value < -1e-12);
        assert_eq!(flipped.argmin, 20.0);
    }
}

#[test]
fn w1_extrema() {
    let rep = scan_w1(20.0, 100_000).unwrap();
    assert!((rep.max_value - 1.0 / 3.0).abs() < 1e-6);
    assert!(rep.max_value < 1.0 / 3.0);
    assert!(rep.tail_value < 1e-6 && rep.tail_value > 0.0);
    assert!(rep.nonincreasing);
}

#[test]
fn pm_coefficient_signs() {
    assert!(scan_pm_coefficient(3, 7.0 / 3.0, 20.0, 100_000).unwrap().min_value >= -1e-12);
    assert!(scan_pm_coefficient(2, 3.0, 20.0, 100_000).unwrap().min_value >= -1e-12);
    let below = scan_pm_coefficient(3, 2.0, 20.0, 100_000).unwrap();
    assert!(below.min_value < 0.0);
    assert!(pm_coefficient(3, 2.0, 1e-3) < -2.9);
}

#[test]
fn pm_coefficient_matches_plain_evaluation() {
    for (n, p) in [(2usize, 3.0), (3, 7.0 / 3.0), (3, 2.0), (3, 4.0)] {
        let m = n as f64 - 1.0;
        for k in 1..=16 {
            let r = 0.25 * k as f64;
            let q = r / r.sinh();
            let plain = m * q * q * ((p - 1.0) * m * r.cosh().powi(2) + 2.0) + 2.0 * m * (p - 4.0) * r / r.tanh() + p - 5.0;
            assert!((pm_coefficient(n, p, r) - plain).abs() < 1e-11 * (1.0 + plain.abs()), "n = {n}, p = {p}, r = {r}");
        }
    }
}

#[test]
fn scan_rejects_degenerate_grids() {
    assert!(scan_w1(0.0, 100).is_err());
    assert!(scan_quartic(3, 20.0, 1).is_err());
}
