//! Draws a Brownian sheet, checks its cell moments against theory, and
//! round-trips the binary dump format bit-for-bit.
//!
//! ```bash
//! cargo run --release -p stefan-lab --example sample_noise
//! ```

use stefan_lab::grid::GridSpec;
use stefan_lab::noise::{walsh_integral, NoiseField, RNG_ID};
use stefan_lab::profiles;

fn main() -> stefan_lab::Result<()> {
    let grid = GridSpec::new(64, 256, 1.0, 1.0)?;
    let seed = 2024;
    let sheet = NoiseField::sample_sheet(&grid, seed);
    println!("generator: {RNG_ID}, seed {seed}");

    let n = (grid.nx * grid.nt) as f64;
    let mean = sheet.increments().iter().sum::<f64>() / n;
    let var = sheet.increments().iter().map(|v| v * v).sum::<f64>() / n - mean * mean;
    let cell = grid.dx() * grid.dt();
    println!(
        "{} cells: mean {mean:+.3e} (se {:.1e}), variance / (dx dt) = {:.4}",
        grid.nx * grid.nt,
        (cell / n).sqrt(),
        var / cell
    );

    // a flat-kernel Walsh integral is Gaussian with variance ~ lambda * t
    let sigma = grid.sample_interior(|y| profiles::sine(y, grid.lambda, 1.0));
    let w = walsh_integral(|_, _| 1.0, &sigma, &sheet, grid.nt)?;
    println!("Walsh integral of sin(pi y) against the sheet: {w:+.4}");

    let mut buf = Vec::new();
    sheet.write_to(&mut buf)?;
    let back = NoiseField::read_from(&mut buf.as_slice())?;
    println!(
        "binary dump: {} bytes, reload bit-identical: {}",
        buf.len(),
        back == sheet
    );
    Ok(())
}
