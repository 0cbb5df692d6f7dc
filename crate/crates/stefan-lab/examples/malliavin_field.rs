//! Solves the derivative field for a few noise cells and validates it
//! pathwise against noise-bump finite differences (rerunning the full
//! Picard solve on perturbed noise).
//!
//! ```bash
//! cargo run --release -p stefan-lab --example malliavin_field
//! ```

use stefan_lab::cutoff::CutoffParams;
use stefan_lab::grid::GridSpec;
use stefan_lab::malliavin::{
    bump_check, gn_process, malliavin_solve, MalliavinOptions, SourceCell, SourceSelection,
};
use stefan_lab::mild::{picard_solve, SolverOptions};
use stefan_lab::noise::NoiseField;
use stefan_lab::profiles;

fn main() -> stefan_lab::Result<()> {
    let grid = GridSpec::new(24, 96, 1.0, 0.1)?;
    let params = CutoffParams::new(8, 2.5, 8.0, 50.0, grid.horizon)?;
    let u0 = grid.sample_profile(|x| profiles::quad_bump(x, grid.lambda, 0.5));
    let sigma = grid.sample_profile(|x| profiles::sine(x, grid.lambda, 0.5));
    let noise = NoiseField::sample_sheet(&grid, 31);
    let opts = SolverOptions {
        tol: 5e-13,
        max_iters: 90,
        ..SolverOptions::default()
    };

    let (path, _) = picard_solve(&noise, &u0, &sigma, &params, &opts)?;
    let gn = gn_process(&path, &params);
    println!("chain-rule factor recorded c_L = {:.3} (band bound {:.3})",
        gn.c_l, 2.0 * params.flat_radius() + 3.0);

    let cells = vec![
        SourceCell { iy: 6, is: 10 },
        SourceCell { iy: 12, is: 30 },
        SourceCell { iy: 18, is: 50 },
    ];
    let field = malliavin_solve(
        &path,
        &gn,
        &sigma,
        &params,
        &SourceSelection::Explicit(cells.clone()),
        &MalliavinOptions::default(),
    )?;
    println!("tau_Md trip: {:?} (cap {})", field.truncated_at, params.malliavin_cap);
    for (ci, cell) in cells.iter().enumerate() {
        let j = (cell.is + grid.nt) / 2;
        let mid = grid.nx / 2;
        println!(
            "D at source (y index {}, s index {}), probe (x index {mid}, t index {j}): {:+.5e}",
            cell.iy,
            cell.is,
            field.value(ci, mid, j)
        );
    }

    let report = bump_check(&noise, &u0, &sigma, &params, &opts, &cells, 1e-6, 0.01)?;
    println!(
        "bump validation: {}/{} probed values within 1% (worst rel err {:.2e})",
        report.within_tol, report.compared, report.worst_rel_err
    );
    Ok(())
}
