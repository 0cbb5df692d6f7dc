//! Cross-validates the Picard mild solver against the explicit
//! finite-difference scheme on the same data: a deterministic drift run
//! and a noisy linear run, with a refinement study on frozen noise.
//!
//! ```bash
//! cargo run --release -p stefan-lab --example solver_crosscheck
//! ```

use stefan_lab::cutoff::CutoffParams;
use stefan_lab::fd::{fd_solve, FdOptions};
use stefan_lab::grid::GridSpec;
use stefan_lab::mild::{picard_solve, SolverOptions};
use stefan_lab::noise::NoiseField;
use stefan_lab::profiles;

fn main() -> stefan_lab::Result<()> {
    // deterministic, drift on
    let grid = GridSpec::new(64, 4096, 1.0, 0.25)?;
    let params = CutoffParams::new(8, 2.5, 8.0, 50.0, grid.horizon)?;
    let u0 = grid.sample_profile(|x| profiles::quad_bump(x, grid.lambda, 1.0));
    let zero = vec![0.0; grid.nx + 2];
    let opts = SolverOptions::default();
    let noise0 = NoiseField::zeros(&grid);
    let (mild, report) = picard_solve(&noise0, &u0, &zero, &params, &opts)?;
    let (fd, _) = fd_solve(&noise0, &u0, &zero, &FdOptions::default())?;
    let rel = mild.sup_distance(&fd) / mild.sup_abs();
    println!(
        "deterministic drift: sup|mild - fd| / sup|mild| = {rel:.5} ({} Picard iterations)",
        report.iterations
    );

    // noisy, drift off (linear SPDE); the shorter horizon keeps the two
    // schemes' step responses matched at this resolution
    let gl = GridSpec::new(64, 4096, 1.0, 0.15)?;
    let pl = CutoffParams::new(8, 2.5, 8.0, 50.0, gl.horizon)?;
    let zl = vec![0.0; gl.nx + 2];
    let sl = gl.sample_profile(|x| profiles::sine(x, gl.lambda, 1.0));
    let lin_opts = SolverOptions {
        drift: false,
        ..opts
    };
    let fd_lin = FdOptions {
        drift: false,
        ..FdOptions::default()
    };
    let mut worst = 0.0f64;
    for seed in 0..5 {
        let noise = NoiseField::sample_sheet(&gl, seed);
        let (m, _) = picard_solve(&noise, &zl, &sl, &pl, &lin_opts)?;
        let (f, _) = fd_solve(&noise, &zl, &sl, &fd_lin)?;
        let rel = m.sup_distance(&f) / m.sup_abs();
        worst = worst.max(rel);
        println!("noisy linear seed {seed}: relative sup discrepancy {rel:.4}");

        // refinement on frozen, conservatively split noise
        let fine = noise.refine(2, 4)?;
        let gf = fine.grid;
        let zf = vec![0.0; gf.nx + 2];
        let sf = gf.sample_profile(|x| profiles::sine(x, gf.lambda, 1.0));
        let pf = CutoffParams::new(8, 2.5, 8.0, 50.0, gf.horizon)?;
        let (mf, _) = picard_solve(&fine, &zf, &sf, &pf, &lin_opts)?;
        let (ff, _) = fd_solve(&fine, &zf, &sf, &fd_lin)?;
        println!(
            "  refined (2x space, 4x time): {:.4}",
            mf.sup_distance(&ff) / mf.sup_abs()
        );
    }
    println!("worst noisy discrepancy: {worst:.4}");
    Ok(())
}
