//! Windowed scaling of the derivative field near a terminal time: the
//! epsilon-power of the windowed L^p mass and of the remainder after
//! subtracting the kernel fan, against their predicted exponents
//! `(3-p)/2` and `1 + (3-p)/2 + (1-q/2)p/q`.
//!
//! ```bash
//! cargo run --release -p stefan-lab --example scaling_estimates
//! ```

use rayon::prelude::*;
use stefan_lab::cutoff::CutoffParams;
use stefan_lab::grid::GridSpec;
use stefan_lab::malliavin::{
    estimate_scaling, gn_process, malliavin_solve, positivity_check, MalliavinOptions,
    SourceSelection, StorageMode,
};
use stefan_lab::mild::{picard_solve, SolverOptions};
use stefan_lab::noise::NoiseField;
use stefan_lab::profiles;

fn main() -> stefan_lab::Result<()> {
    let grid = GridSpec::new(24, 96, 1.0, 0.1)?;
    let params = CutoffParams::new(8, 2.5, 8.0, 50.0, grid.horizon)?;
    let u0 = grid.sample_profile(|x| profiles::quad_bump(x, grid.lambda, 0.5));
    let sigma = grid.sample_profile(|x| profiles::sine(x, grid.lambda, 0.5));
    let probe = (grid.nx - 1) / 2;
    let b_index = grid.nt * 7 / 8;
    let b = grid.t(b_index);
    let eps: Vec<f64> = [16.0, 8.0, 4.0, 2.0].iter().map(|d| b / d).collect();
    let n_paths = 64u64;

    let opts = SolverOptions::default();
    let mopts = MalliavinOptions {
        storage: StorageMode::Probe(probe),
        ..MalliavinOptions::default()
    };
    let window_fields: Vec<_> = (0..n_paths)
        .into_par_iter()
        .map(|seed| {
            let noise = NoiseField::sample_sheet(&grid, seed);
            let (path, _) = picard_solve(&noise, &u0, &sigma, &params, &opts).unwrap();
            let gn = gn_process(&path, &params);
            malliavin_solve(
                &path,
                &gn,
                &sigma,
                &params,
                &SourceSelection::Stratified {
                    count: 192,
                    seed,
                    window: Some((b_index / 2, b_index)),
                },
                &mopts,
            )
            .unwrap()
        })
        .collect();
    let scaling = estimate_scaling(&window_fields, &sigma, probe, &eps, b, 1.0)?;
    println!("epsilon ladder: {:?}", scaling.eps);
    println!("windowed |D|^p mass:      {:?}", scaling.e1);
    println!("windowed remainder mass:  {:?}", scaling.e2);
    println!(
        "slope1 = {:.3} (predicted {:.2}), slope2 = {:.3} (predicted {:.2})",
        scaling.slope1, scaling.target_slope1, scaling.slope2, scaling.target_slope2
    );

    let full_fields: Vec<_> = (0..n_paths)
        .into_par_iter()
        .map(|seed| {
            let noise = NoiseField::sample_sheet(&grid, 500 + seed);
            let (path, _) = picard_solve(&noise, &u0, &sigma, &params, &opts).unwrap();
            let gn = gn_process(&path, &params);
            malliavin_solve(
                &path,
                &gn,
                &sigma,
                &params,
                &SourceSelection::Stratified {
                    count: 384,
                    seed,
                    window: None,
                },
                &mopts,
            )
            .unwrap()
        })
        .collect();
    let pos = positivity_check(&full_fields, &sigma, probe, 1.0, false)?;
    println!(
        "positivity: fraction {} of {} paths carry L^p mass above {:.1e} ({} at 100x the threshold)",
        pos.fraction, pos.evaluated_paths, pos.threshold, pos.fraction_at_100x
    );
    Ok(())
}
