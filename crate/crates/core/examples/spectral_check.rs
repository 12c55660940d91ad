// Radial spherical transform on H^3: Parseval, the projector reconstruction and the
// refined Sobolev ratio for a few bumps.

use hypnls::spectral::{default_m_samples, even_bump, SpectralConfig, SpectralTransform};
use hypnls::{build_grid, RadialField};

pub fn run_example() -> hypnls::Result<Vec<f64>> {
    let grid = build_grid(3, 20.0, 2000)?;
    let t = SpectralTransform::new(grid.clone(), SpectralConfig { lambda_max: 48.0, num_lambda: 2048 })?;
    let u = RadialField::from_real_fn(grid.clone(), |r| (-r * r).exp());
    println!("parseval residual {:.1e}", t.parseval_residual(&u)?);
    println!("projector reconstruction residual {:.1e}", t.reconstruction_residual(&u, None)?);

    let m = default_m_samples(32.0);
    let mut ratios = Vec::new();
    for center in [0.0, 2.0, 5.0] {
        let v = RadialField::from_real_fn(grid.clone(), even_bump(center, 1.0, 1.0));
        let r = t.refined_sobolev_ratio(&v, 1.0, &m)?;
        println!("bump at r = {center}: refined Sobolev ratio {r:.4}");
        ratios.push(r);
    }
    Ok(ratios)
}

fn main() -> hypnls::Result<()> {
    run_example().map(|_| ())
}
