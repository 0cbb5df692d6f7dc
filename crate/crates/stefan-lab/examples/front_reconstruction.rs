//! Reconstructs the moving boundaries from two independently driven half
//! problems, writes the front trajectory CSV, and samples the physical
//! density across the solid segment.
//!
//! ```bash
//! cargo run --release -p stefan-lab --example front_reconstruction
//! ```

use stefan_lab::cutoff::CutoffParams;
use stefan_lab::front::{inverse_transform, reconstruct_front, PhysicalDomain};
use stefan_lab::grid::GridSpec;
use stefan_lab::mild::{picard_solve, SolverOptions};
use stefan_lab::noise::NoiseField;
use stefan_lab::profiles;

fn main() -> stefan_lab::Result<()> {
    let grid = GridSpec::new(48, 384, 1.0, 0.05)?;
    let params = CutoffParams::new(8, 2.5, 8.0, 50.0, grid.horizon)?;
    let u0 = grid.sample_profile(|x| profiles::quad_bump(x, grid.lambda, 1.0));
    let sigma = grid.sample_profile(|x| profiles::sine(x, grid.lambda, 0.3));
    let opts = SolverOptions::default();

    // the two halves ride independent sheets
    let (plus, _) = picard_solve(
        &NoiseField::sample_sheet(&grid, 100),
        &u0,
        &sigma,
        &params,
        &opts,
    )?;
    let (minus, _) = picard_solve(
        &NoiseField::sample_sheet(&grid, 101),
        &u0,
        &sigma,
        &params,
        &opts,
    )?;
    let domain = PhysicalDomain::new(-0.5, 0.5)?;
    let front = reconstruct_front(&plus, &minus, -0.05, 0.05, &domain)?;
    println!("hit: {:?} at t = {}", front.hit_kind, front.hit_time);
    println!("t, s_minus, s_plus, spread (every 48th step):");
    for j in (0..=grid.nt).step_by(48) {
        println!(
            "  {:.4}, {:+.5}, {:+.5}, {:.5}",
            grid.t(j),
            front.s_minus[j],
            front.s_plus[j],
            front.spread[j]
        );
    }

    let density = inverse_transform(&plus, &minus, &front)?;
    let j = front.hit_index.map_or(grid.nt, |h| h.saturating_sub(1)) / 2;
    println!("physical density at t = {:.4} (21 probes):", grid.t(j));
    for (y, w) in density.snapshot(20, j)? {
        println!("  w({y:+.3}) = {w:.5}");
    }

    let mut csv = Vec::new();
    front.write_csv(&mut csv)?;
    println!("front CSV is {} bytes (t,s_minus,s_plus,spread)", csv.len());
    Ok(())
}
