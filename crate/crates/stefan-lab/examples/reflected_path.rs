//! Runs the reflected solver at a noise amplitude strong enough to
//! activate the projection, and reports the reflection measure and its
//! complementarity with the path.
//!
//! ```bash
//! cargo run --release -p stefan-lab --example reflected_path
//! ```

use stefan_lab::cutoff::CutoffParams;
use stefan_lab::grid::GridSpec;
use stefan_lab::mild::{reflected_solve, SolverOptions};
use stefan_lab::noise::NoiseField;
use stefan_lab::profiles;

fn main() -> stefan_lab::Result<()> {
    let grid = GridSpec::new(24, 96, 1.0, 0.1)?;
    let params = CutoffParams::new(8, 2.5, 8.0, 50.0, grid.horizon)?;
    let u0 = grid.sample_profile(|x| profiles::quad_bump(x, grid.lambda, 0.2));
    let sigma = grid.sample_profile(|x| profiles::sine(x, grid.lambda, 2.0));

    for seed in 0..5u64 {
        let noise = NoiseField::sample_sheet(&grid, seed);
        let (path, eta) = reflected_solve(&noise, &u0, &sigma, &params, &SolverOptions::default())?;
        let total = eta.total_mass();
        let resid = eta.complementarity_residual(&path);
        let scale = total * path.sup_abs();
        println!(
            "seed {seed}: min u = {:+.2e}, eta mass = {:.4e}, complementarity residual / scale = {:.2e}",
            path.min_value(),
            total,
            if scale > 0.0 { resid / scale } else { 0.0 }
        );
    }
    Ok(())
}
