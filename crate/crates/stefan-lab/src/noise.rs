//! Discrete Brownian sheet driving every simulation, and Walsh integrals
//! against it.
//!
//! The sheet is materialized as a full `nx x nt` array of cell increments
//! up front so the mild solver, the finite-difference oracle and the
//! noise-bump tests all consume identical randomness. Increments are drawn
//! from ChaCha12 (counter-based, seedable) through the ziggurat normal
//! sampler; both choices are recorded in [`RNG_ID`] so archived seeds
//! replay exactly.

use std::io::{Read, Write};

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha12Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// Generator and sampler identifier embedded in run provenance.
pub const RNG_ID: &str = "chacha12/ziggurat-v1";

const DUMP_MAGIC: &[u8; 4] = b"STWN";
const DUMP_VERSION: u16 = 1;

/// Brownian-sheet increments over the grid cells: `increment(i, j)` is the
/// mass of `W(dy, ds)` over cell `(i, j)` (space node `i+1`, time slab
/// `[t_j, t_{j+1})`), a centered Gaussian with variance `dx * dt`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseField {
    increments: Array2<f64>,
    pub seed: u64,
    pub grid: GridSpec,
}

impl NoiseField {
    /// Draw the full sheet for `(grid, seed)`; bit-for-bit reproducible.
    pub fn sample_sheet(grid: &GridSpec, seed: u64) -> Self {
        let mut rng = ChaCha12Rng::seed_from_u64(seed);
        let std = (grid.dx() * grid.dt()).sqrt();
        let mut increments = Array2::zeros((grid.nx, grid.nt));
        for j in 0..grid.nt {
            for i in 0..grid.nx {
                let z: f64 = StandardNormal.sample(&mut rng);
                increments[(i, j)] = std * z;
            }
        }
        NoiseField {
            increments,
            seed,
            grid: *grid,
        }
    }

    /// All-zero sheet (deterministic runs).
    pub fn zeros(grid: &GridSpec) -> Self {
        NoiseField {
            increments: Array2::zeros((grid.nx, grid.nt)),
            seed: 0,
            grid: *grid,
        }
    }

    /// Increment over cell `(i, j)`: space row `i` in `0..nx` (interior node
    /// `i + 1`), time slab `j` in `0..nt`.
    #[inline]
    pub fn increment(&self, i: usize, j: usize) -> f64 {
        self.increments[(i, j)]
    }

    pub fn increments(&self) -> &Array2<f64> {
        &self.increments
    }

    /// Add `delta` to one cell (noise-bump sensitivity runs).
    pub fn bump(&self, i: usize, j: usize, delta: f64) -> Self {
        let mut out = self.clone();
        out.increments[(i, j)] += delta;
        out
    }

    /// Conservative refinement onto a `(space_factor * nx + space_factor - 1
    /// , time_factor * nt)`-compatible finer grid: every coarse cell mass is
    /// divided equally over the fine cells it covers, so block sums are
    /// preserved exactly and both solvers see the same realization across
    /// resolutions.
    ///
    /// Refining space by `f` maps `nx -> f * (nx + 1) - 1` so the wall
    /// spacing divides evenly; fine interior node `f*i` coincides with
    /// coarse node `i`.
    pub fn refine(&self, space_factor: usize, time_factor: usize) -> Result<NoiseField> {
        if space_factor == 0 || time_factor == 0 {
            return Err(Error::Usage("refinement factors must be >= 1".into()));
        }
        let g = &self.grid;
        let fine = GridSpec::new(
            space_factor * (g.nx + 1) - 1,
            time_factor * g.nt,
            g.lambda,
            g.horizon,
        )?;
        let share = 1.0 / (space_factor * time_factor) as f64;
        let mut increments = Array2::zeros((fine.nx, fine.nt));
        for j in 0..fine.nt {
            let cj = j / time_factor;
            for i in 0..fine.nx {
                // fine node i+1 lies in the coarse cell of node floor((i+1)/f)
                let ci = (i + 1) / space_factor;
                if ci >= 1 && ci <= g.nx {
                    increments[(i, j)] = self.increments[(ci - 1, cj)] * share;
                }
                // fine cells beyond the last coarse interior node keep zero
            }
        }
        Ok(NoiseField {
            increments,
            seed: self.seed,
            grid: fine,
        })
    }

    /// Binary dump: magic `STWN`, version u16, nx u32, nt u32, lambda f64,
    /// horizon f64, seed u64, then row-major little-endian f64 increments.
    pub fn write_to<W: Write>(&self, w: &mut W) -> Result<()> {
        w.write_all(DUMP_MAGIC)?;
        w.write_all(&DUMP_VERSION.to_le_bytes())?;
        w.write_all(&(self.grid.nx as u32).to_le_bytes())?;
        w.write_all(&(self.grid.nt as u32).to_le_bytes())?;
        w.write_all(&self.grid.lambda.to_le_bytes())?;
        w.write_all(&self.grid.horizon.to_le_bytes())?;
        w.write_all(&self.seed.to_le_bytes())?;
        for i in 0..self.grid.nx {
            for j in 0..self.grid.nt {
                w.write_all(&self.increments[(i, j)].to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn read_from<R: Read>(r: &mut R) -> Result<NoiseField> {
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != DUMP_MAGIC {
            return Err(Error::Format(format!("bad magic {magic:?}")));
        }
        let mut b2 = [0u8; 2];
        r.read_exact(&mut b2)?;
        let version = u16::from_le_bytes(b2);
        if version != DUMP_VERSION {
            return Err(Error::Format(format!("unsupported version {version}")));
        }
        let mut b4 = [0u8; 4];
        r.read_exact(&mut b4)?;
        let nx = u32::from_le_bytes(b4) as usize;
        r.read_exact(&mut b4)?;
        let nt = u32::from_le_bytes(b4) as usize;
        let mut b8 = [0u8; 8];
        r.read_exact(&mut b8)?;
        let lambda = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let horizon = f64::from_le_bytes(b8);
        r.read_exact(&mut b8)?;
        let seed = u64::from_le_bytes(b8);
        let grid = GridSpec::new(nx, nt, lambda, horizon)?;
        let mut increments = Array2::zeros((nx, nt));
        for i in 0..nx {
            for j in 0..nt {
                r.read_exact(&mut b8)?;
                increments[(i, j)] = f64::from_le_bytes(b8);
            }
        }
        Ok(NoiseField {
            increments,
            seed,
            grid,
        })
    }
}

/// Discrete Walsh integral up to time index `t_index`:
///
/// `sum_{j < t_index} sum_i kernel_fn(i, j) sigma_i dW_{ij}`,
///
/// the grid form of `int_0^t int_D f(y, s) sigma(y) W(dy, ds)`. The cell
/// measure is carried by the increment variance `dx dt`, so no quadrature
/// weights appear. Neumaier-compensated accumulation keeps the result
/// independent of summation order at the 1e-12 level.
pub fn walsh_integral<F: Fn(usize, usize) -> f64>(
    kernel_fn: F,
    sigma: &[f64],
    noise: &NoiseField,
    t_index: usize,
) -> Result<f64> {
    let g = &noise.grid;
    if t_index > g.nt {
        return Err(Error::Usage(format!(
            "t_index {t_index} out of range (nt = {})",
            g.nt
        )));
    }
    if sigma.len() != g.nx {
        return Err(Error::Usage(format!(
            "sigma has {} entries, expected nx = {}",
            sigma.len(),
            g.nx
        )));
    }
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for j in 0..t_index {
        for i in 0..g.nx {
            let term = kernel_fn(i, j) * sigma[i] * noise.increments[(i, j)];
            let t = sum + term;
            if sum.abs() >= term.abs() {
                comp += (sum - t) + term;
            } else {
                comp += (term - t) + sum;
            }
            sum = t;
        }
    }
    Ok(sum + comp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::heat_kernel::{simpson, KernelParams};

    fn grid() -> GridSpec {
        GridSpec::new(64, 256, 1.0, 1.0).unwrap()
    }

    #[test]
    fn determinism_and_distinct_streams() {
        let g = grid();
        let a = NoiseField::sample_sheet(&g, 7);
        let b = NoiseField::sample_sheet(&g, 7);
        assert_eq!(a, b);
        let c = NoiseField::sample_sheet(&g, 8);
        let differing = a
            .increments()
            .iter()
            .zip(c.increments().iter())
            .filter(|(x, y)| x != y)
            .count();
        let total = g.nx * g.nt;
        assert!(differing as f64 > 0.99 * total as f64, "{differing}/{total}");
    }

    #[test]
    fn increment_moments() {
        let g = grid(); // 16384 cells
        let f = NoiseField::sample_sheet(&g, 12345);
        let n = (g.nx * g.nt) as f64;
        let mean = f.increments().iter().sum::<f64>() / n;
        let var = f.increments().iter().map(|v| v * v).sum::<f64>() / n - mean * mean;
        let cell_var = g.dx() * g.dt();
        let se = (cell_var / n).sqrt();
        assert!(mean.abs() < 4.0 * se, "mean {mean} vs se {se}");
        assert!(
            var / cell_var > 0.98 && var / cell_var < 1.02,
            "variance ratio {}",
            var / cell_var
        );
    }

    #[test]
    fn mean_within_four_se_at_1e5_cells() {
        let g = GridSpec::new(100, 1000, 1.0, 1.0).unwrap();
        let f = NoiseField::sample_sheet(&g, 99);
        let n = (g.nx * g.nt) as f64;
        let mean = f.increments().iter().sum::<f64>() / n;
        let se = (g.dx() * g.dt() / n).sqrt();
        assert!(mean.abs() < 4.0 * se);
    }

    #[test]
    fn walsh_zero_sigma() {
        let g = grid();
        let f = NoiseField::sample_sheet(&g, 1);
        let v = walsh_integral(|_, _| 1.0, &vec![0.0; g.nx], &f, g.nt).unwrap();
        assert_eq!(v, 0.0);
    }

    #[test]
    fn walsh_index_checks() {
        let g = grid();
        let f = NoiseField::sample_sheet(&g, 1);
        assert!(walsh_integral(|_, _| 1.0, &vec![1.0; g.nx], &f, g.nt + 1).is_err());
        assert!(walsh_integral(|_, _| 1.0, &vec![1.0; 3], &f, g.nt).is_err());
    }

    #[test]
    fn walsh_flat_kernel_variance_is_lambda_t() {
        // kernel 1, sigma 1: the integral is Gaussian with variance
        // (nx dx) * t; over 1e4 seeds the sample variance lands within 5%.
        let g = GridSpec::new(32, 64, 1.0, 1.0).unwrap();
        let sigma = vec![1.0; g.nx];
        let n_seeds = 10_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for seed in 0..n_seeds {
            let f = NoiseField::sample_sheet(&g, seed);
            let v = walsh_integral(|_, _| 1.0, &sigma, &f, g.nt).unwrap();
            sum += v;
            sumsq += v * v;
        }
        let n = n_seeds as f64;
        let var = sumsq / n - (sum / n) * (sum / n);
        let expected = (g.nx as f64 * g.dx()) * g.horizon;
        assert!(
            (var / expected - 1.0).abs() < 0.05,
            "variance {var} vs expected {expected}"
        );
    }

    #[test]
    fn ito_isometry_against_quadrature_oracle() {
        // kernel G(1/2, ., t - .), sigma = sin(pi y): Monte Carlo variance
        // vs the int int G^2 sigma^2 quadrature, within 3 MC standard errors.
        let g = GridSpec::new(32, 64, 1.0, 0.25).unwrap();
        let kp = KernelParams::new(1.0, 1.0).unwrap();
        let pi = std::f64::consts::PI;
        let sigma: Vec<f64> = g.sample_interior(|y| (pi * y).sin());
        let x = 0.5;
        let t_index = g.nt;
        let t = g.horizon;
        // kernel table: lag index j -> value at node i
        let mut table = vec![vec![0.0; g.nx]; t_index];
        for (j, row) in table.iter_mut().enumerate() {
            let tau = t - g.t(j) - 0.5 * g.dt();
            for (im, v) in row.iter_mut().enumerate() {
                *v = crate::heat_kernel::kernel_value(x, g.x(im + 1), tau, &kp).unwrap();
            }
        }
        let n_seeds = 10_000u64;
        let mut sum = 0.0;
        let mut sumsq = 0.0;
        for seed in 0..n_seeds {
            let f = NoiseField::sample_sheet(&g, 1_000_000 + seed);
            let v = walsh_integral(|i, j| table[j][i], &sigma, &f, t_index).unwrap();
            sum += v;
            sumsq += v * v;
        }
        let n = n_seeds as f64;
        let var = sumsq / n - (sum / n) * (sum / n);
        // quadrature of int_0^t int G^2 sigma^2 dy ds at the grid
        // resolution (the same left-endpoint rule the Walsh sum uses)
        let mut quad = 0.0;
        for row in table.iter() {
            for (im, g2) in row.iter().enumerate() {
                quad += g2 * g2 * sigma[im] * sigma[im] * g.dx() * g.dt();
            }
        }
        // sanity: the grid quadrature approaches the continuum integral
        let mut continuum = 0.0;
        let m = 256;
        for em in 0..m {
            let um = (em as f64 + 0.5) / m as f64;
            let tau = t * um * um;
            let inner = simpson(
                |y| {
                    let gv = crate::heat_kernel::kernel_value(x, y, tau, &kp).unwrap();
                    gv * gv * (pi * y).sin().powi(2)
                },
                0.0,
                1.0,
                ((8.0 / tau.sqrt()).ceil() as usize).clamp(64, 4000),
            );
            continuum += inner * 2.0 * t * um / m as f64;
        }
        assert!(
            (quad - continuum).abs() / continuum < 0.25,
            "grid quadrature {quad} far from continuum {continuum}"
        );
        // MC standard error of a variance estimate: var * sqrt(2/n)
        let se = var * (2.0 / n).sqrt();
        assert!(
            (var - quad).abs() < 3.0 * se,
            "variance {var} vs quadrature {quad} (se {se})"
        );
    }

    #[test]
    fn disjoint_time_blocks_uncorrelated() {
        let g = GridSpec::new(16, 64, 1.0, 1.0).unwrap();
        let sigma = vec![1.0; g.nx];
        let half = g.nt / 2;
        let n_seeds = 4000u64;
        let (mut sa, mut sb, mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for seed in 0..n_seeds {
            let f = NoiseField::sample_sheet(&g, 31_000 + seed);
            let a = walsh_integral(|_, _| 1.0, &sigma, &f, half).unwrap();
            let full = walsh_integral(|_, _| 1.0, &sigma, &f, g.nt).unwrap();
            let b = full - a;
            sa += a;
            sb += b;
            sab += a * b;
            saa += a * a;
            sbb += b * b;
        }
        let n = n_seeds as f64;
        let cov = sab / n - (sa / n) * (sb / n);
        let va = saa / n - (sa / n) * (sa / n);
        let vb = sbb / n - (sb / n) * (sb / n);
        let se = (va * vb / n).sqrt();
        assert!(cov.abs() < 3.0 * se, "covariance {cov}, se {se}");
    }

    #[test]
    fn dump_roundtrip_is_bit_exact() {
        let g = GridSpec::new(9, 17, 2.0, 0.3).unwrap();
        let f = NoiseField::sample_sheet(&g, 424242);
        let mut buf = Vec::new();
        f.write_to(&mut buf).unwrap();
        let back = NoiseField::read_from(&mut buf.as_slice()).unwrap();
        assert_eq!(f, back);
    }

    #[test]
    fn dump_rejects_garbage() {
        let mut bad = b"NOPE".to_vec();
        bad.extend_from_slice(&[0u8; 64]);
        assert!(NoiseField::read_from(&mut bad.as_slice()).is_err());
    }

    #[test]
    fn refine_preserves_block_sums() {
        let g = GridSpec::new(7, 8, 1.0, 0.5).unwrap();
        let f = NoiseField::sample_sheet(&g, 5);
        let r = f.refine(2, 4).unwrap();
        assert_eq!(r.grid.nx, 15);
        assert_eq!(r.grid.nt, 32);
        // coarse cell (i, j) covers fine rows for nodes {2(i+1)-1, 2(i+1)}
        // and fine time slabs 4j..4j+4
        for i in 0..g.nx {
            for j in 0..g.nt {
                let mut s = 0.0;
                for fi in 0..r.grid.nx {
                    if (fi + 1) / 2 == i + 1 {
                        for fj in 4 * j..4 * j + 4 {
                            s += r.increment(fi, fj);
                        }
                    }
                }
                assert!((s - f.increment(i, j)).abs() < 1e-15);
            }
        }
    }
}
