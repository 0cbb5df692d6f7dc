//! Space-time continuity diagnostics: log-log regression of dyadic-lag
//! increments for the pure stochastic convolution (expect roughly 1/4 in
//! time, 1/2 in space) and for a deterministic drift path (Lipschitz in
//! time).
//!
//! ```bash
//! cargo run --release -p stefan-lab --example holder_exponents
//! ```

use stefan_lab::cutoff::CutoffParams;
use stefan_lab::grid::GridSpec;
use stefan_lab::mild::{holder_report, picard_solve, SolverOptions};
use stefan_lab::noise::NoiseField;
use stefan_lab::profiles;

fn main() -> stefan_lab::Result<()> {
    let grid = GridSpec::new(64, 4096, 1.0, 0.25)?;
    let params = CutoffParams::new(8, 2.5, 8.0, 50.0, grid.horizon)?;
    let zero = vec![0.0; grid.nx + 2];
    let sigma = grid.sample_profile(|x| profiles::sine(x, grid.lambda, 1.0));

    let lin = SolverOptions {
        drift: false,
        ..SolverOptions::default()
    };
    let noise = NoiseField::sample_sheet(&grid, 5);
    let (conv, _) = picard_solve(&noise, &zero, &sigma, &params, &lin)?;
    let rep = holder_report(&conv, None)?;
    println!(
        "stochastic convolution: time exponent {:.3} (95% CI {:.3}..{:.3}), space exponent {:.3} (95% CI {:.3}..{:.3})",
        rep.time.exponent, rep.time.ci95.0, rep.time.ci95.1,
        rep.space.exponent, rep.space.ci95.0, rep.space.ci95.1,
    );

    let u0 = grid.sample_profile(|x| profiles::quad_bump(x, grid.lambda, 1.0));
    let (det, _) = picard_solve(
        &NoiseField::zeros(&grid),
        &u0,
        &zero,
        &params,
        &SolverOptions::default(),
    )?;
    let drep = holder_report(&det, None)?;
    println!(
        "deterministic drift path: time exponent {:.3} (Lipschitz expected)",
        drep.time.exponent
    );
    Ok(())
}
