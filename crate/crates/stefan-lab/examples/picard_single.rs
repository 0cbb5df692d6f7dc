//! Solves one noisy path of the cut-off mild equation by Picard iteration
//! and prints the contraction history, the stopping-time classification
//! and the H-norm trace.
//!
//! ```bash
//! cargo run --release -p stefan-lab --example picard_single
//! ```

use stefan_lab::cutoff::{classify_path, h_norm, CutoffParams};
use stefan_lab::grid::GridSpec;
use stefan_lab::mild::{picard_solve, SolverOptions};
use stefan_lab::noise::NoiseField;
use stefan_lab::profiles;

fn main() -> stefan_lab::Result<()> {
    let grid = GridSpec::new(32, 256, 1.0, 0.25)?;
    let params = CutoffParams::new(8, 2.5, 8.0, 50.0, grid.horizon)?;
    let u0 = grid.sample_profile(|x| profiles::quad_bump(x, grid.lambda, 1.0));
    let sigma = grid.sample_profile(|x| profiles::sine(x, grid.lambda, 0.5));
    let noise = NoiseField::sample_sheet(&grid, 7);

    let (path, report) = picard_solve(&noise, &u0, &sigma, &params, &SolverOptions::default())?;
    println!("converged in {} iterations; difference history:", report.iterations);
    for (k, d) in report.diffs.iter().enumerate() {
        println!("  d_{k} = {d:.3e}");
    }
    let ratios = report.contraction_ratios();
    println!("contraction ratios: {ratios:.3?}");

    let class = classify_path(&path, None, &params)?;
    println!(
        "classification: tau_M = {}, tau~_n = {}, in Omega_M = {}, in Omega_M^n = {}",
        class.tau_m, class.tau_tilde_n, class.in_omega_m, class.in_omega_m_n
    );
    println!("H-norm trace (every 32nd step):");
    for j in (0..=grid.nt).step_by(32) {
        let h = h_norm(path.time_slice(j), grid.dx())?;
        println!("  t = {:.4}: ||u||_H = {h:.4}, u_x(0+) = {:+.4}", grid.t(j), path.boundary_grad[j]);
    }
    Ok(())
}
