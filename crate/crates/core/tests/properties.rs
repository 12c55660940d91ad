use std::sync::{Arc, OnceLock};

use hypnls::expcli::{Command, ExperimentConfig};
use hypnls::functionals::*;
use hypnls::hypgeom::{apply_laplacian, quadrature, spectral_gap};
use hypnls::spectral::even_bump;
use hypnls::{build_grid, solve_ground_state, GroundState, RadialField, RadialGrid};
use num_complex::Complex64;
use proptest::prelude::*;

fn grid(n: usize) -> Arc<RadialGrid> {
    static G: OnceLock<[Arc<RadialGrid>; 2]> = OnceLock::new();
    G.get_or_init(|| [build_grid(2, 20.0, 400).unwrap(), build_grid(3, 20.0, 400).unwrap()])[n - 2].clone()
}

fn ground_state() -> &'static GroundState {
    static GS: OnceLock<GroundState> = OnceLock::new();
    GS.get_or_init(|| solve_ground_state(3, 3.0, 0.0, &grid(3), 1e-12).unwrap())
}

/// Sums of up to three even bumps with complex amplitudes.
fn field(n: usize) -> impl Strategy<Value = RadialField> {
    prop::collection::vec((0.0..8.0f64, 0.3..3.0f64, -2.0..2.0f64, -2.0..2.0f64), 1..4).prop_map(move |bumps| {
        RadialField::from_fn(grid(n), move |r| {
            bumps.iter().map(|&(c, w, re, im)| Complex64::new(re, im) * even_bump(c, w, 1.0)(r)).sum()
        })
    })
}

fn inner(u: &RadialField, v: &RadialField) -> Complex64 {
    let re: Vec<f64> = u.values().iter().zip(v.values()).map(|(a, b)| (a.conj() * b).re).collect();
    let im: Vec<f64> = u.values().iter().zip(v.values()).map(|(a, b)| (a.conj() * b).im).collect();
    Complex64::new(quadrature(&re, u.grid()).unwrap(), quadrature(&im, u.grid()).unwrap())
}

fn norm(u: &RadialField) -> f64 {
    mass(u).sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn laplacian_is_self_adjoint(n in 2usize..4, seed_u in field(3), seed_v in field(3)) {
        let (u, v) = (
            RadialField::from_values(grid(n), seed_u.into_values()).unwrap(),
            RadialField::from_values(grid(n), seed_v.into_values()).unwrap(),
        );
        let (lu, lv) = (apply_laplacian(&u), apply_laplacian(&v));
        let scale = norm(&lu) * norm(&v) + norm(&u) * norm(&lv);
        prop_assert!((inner(&lu, &v) - inner(&u, &lv)).norm() <= 1e-12 * scale);
        prop_assert!((inner(&lu, &u).re + dirichlet(&u)).abs() <= 1e-12 * dirichlet(&u));
    }

    #[test]
    fn dirichlet_energy_exceeds_the_spectral_gap(n in 2usize..4, seed in field(3)) {
        let u = RadialField::from_values(grid(n), seed.into_values()).unwrap();
        prop_assert!(dirichlet(&u) >= spectral_gap(n) * mass(&u));
        prop_assert!(h_sq(&u) >= 0.0);
    }

    #[test]
    fn quadrature_is_linear(a in -5.0..5.0f64, b in -5.0..5.0f64, u in field(3), v in field(3)) {
        let f: Vec<f64> = u.values().iter().map(|z| z.re).collect();
        let g: Vec<f64> = v.values().iter().map(|z| z.im).collect();
        let h: Vec<f64> = f.iter().zip(&g).map(|(x, y)| a * x + b * y).collect();
        let (qf, qg) = (quadrature(&f, &grid(3)).unwrap(), quadrature(&g, &grid(3)).unwrap());
        let abs: Vec<f64> = h.iter().map(|x| x.abs()).collect();
        let scale = quadrature(&abs, &grid(3)).unwrap() + (a * qf).abs() + (b * qg).abs();
        prop_assert!((quadrature(&h, &grid(3)).unwrap() - a * qf - b * qg).abs() <= 1e-13 * scale);
    }

    #[test]
    fn shifted_energy_identity(u in field(3), lambda in -2.0..0.99f64, p in 2.0..4.9f64) {
        let lhs = energy_lambda(&u, lambda, p).unwrap();
        let rhs = energy(&u, p) - 0.5 * lambda * mass(&u);
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (energy(&u, p).abs() + mass(&u) + lp1(&u, p)));
    }

    #[test]
    fn functionals_ignore_phase(u in field(3), theta in 0.0..6.3f64) {
        let rot = Complex64::from_polar(1.0, theta);
        let v = RadialField::from_values(grid(3), u.values().iter().map(|z| rot * z).collect()).unwrap();
        let gs = ground_state();
        for (a, b) in [
            (mass(&u), mass(&v)),
            (dirichlet(&u), dirichlet(&v)),
            (lp1(&u, 3.0), lp1(&v, 3.0)),
            (g_functional(&u, 3.0), g_functional(&v, 3.0)),
            (delta_lambda(&u, gs).unwrap(), delta_lambda(&v, gs).unwrap()),
        ] {
            prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
        }
    }

    #[test]
    fn functionals_scale_homogeneously(u in field(3), a in 0.1..10.0f64, p in 2.0..4.9f64) {
        let v = u.scaled(a);
        prop_assert!((mass(&v) / (a * a * mass(&u)) - 1.0).abs() < 1e-12);
        prop_assert!((dirichlet(&v) / (a * a * dirichlet(&u)) - 1.0).abs() < 1e-12);
        prop_assert!((lp1(&v, p) / (a.powf(p + 1.0) * lp1(&u, p)) - 1.0).abs() < 1e-12);
        prop_assert!((second_moment(&v) / (a * a * second_moment(&u)) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn config_text_round_trips(
        n in 2usize..4,
        p in 1.5..5.0f64,
        lambda in -1.0..0.9f64,
        tier in prop::sample::select(vec!["quick", "mid", "production"]),
        points in prop::option::of(16usize..20_000),
        dt in prop::option::of(1e-5..1e-2f64),
        alphas in prop::collection::vec(0.05..3.0f64, 0..4),
        seed in any::<u64>(),
    ) {
        let mut cfg = ExperimentConfig::new(Command::Dichotomy);
        cfg.set("n", &n.to_string()).unwrap();
        cfg.set("p", &p.to_string()).unwrap();
        cfg.set("lambda", &lambda.to_string()).unwrap();
        cfg.set("tier", tier).unwrap();
        if let Some(k) = points {
            cfg.set("points", &k.to_string()).unwrap();
        }
        if let Some(d) = dt {
            cfg.set("dt", &d.to_string()).unwrap();
        }
        for a in &alphas {
            cfg.set("alpha", &a.to_string()).unwrap();
        }
        cfg.set("seed", &seed.to_string()).unwrap();

        let mut back = ExperimentConfig::new(Command::Dichotomy);
        back.apply_text(&cfg.to_text()).unwrap();
        prop_assert_eq!(back.canonical(), cfg.canonical());
        prop_assert_eq!(back.digest(), cfg.digest());
        prop_assert_eq!(back.alphas, cfg.alphas);
    }
}
