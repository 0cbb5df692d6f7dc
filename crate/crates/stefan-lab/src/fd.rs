//! Explicit finite-difference solver for the strong form of the
//! transformed equation, used solely to cross-validate the mild solver on
//! the same noise.

use ndarray::Array2;

use crate::cutoff;
use crate::error::{Error, Result};
use crate::mild::{PathMeta, PathState, ReflectionMeasure, SolverKind};
use crate::noise::NoiseField;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdOptions {
    pub alpha: f64,
    /// `false` disables the nonlocal transport term.
    pub drift: bool,
    /// Clamp to zero and record the deficit as reflection mass.
    pub reflect: bool,
}

impl Default for FdOptions {
    fn default() -> Self {
        FdOptions {
            alpha: 1.0,
            drift: true,
            reflect: false,
        }
    }
}

/// Marches `u^{j+1}_i = u^j_i + dt [alpha D2 u - u_x(0+,t_j) D u]_i
/// + sigma_i dW_{ij} / dx` with central `D2` and the first difference
/// upwinded against the transport speed. Refuses to run outside the
/// explicit stability region `alpha dt / dx^2 <= 1/2`.
pub fn fd_solve(
    noise: &NoiseField,
    u0: &[f64],
    sigma: &[f64],
    opts: &FdOptions,
) -> Result<(PathState, Option<ReflectionMeasure>)> {
    let g = noise.grid;
    let (nx, nt) = (g.nx, g.nt);
    if u0.len() != nx + 2 || sigma.len() != nx + 2 {
        return Err(Error::Usage(format!(
            "u0 and sigma must be sampled at all {} nodes",
            nx + 2
        )));
    }
    let r = g.diffusion_number(opts.alpha);
    if r > 0.5 {
        return Err(Error::Stability(format!(
            "alpha dt / dx^2 = {r:.4} exceeds 1/2; refine the time grid"
        )));
    }
    let (dx, dt) = (g.dx(), g.dt());
    let mut values = Array2::zeros((nt + 1, nx + 2));
    for i in 0..nx + 2 {
        values[(0, i)] = u0[i];
    }
    let mut measure = opts.reflect.then(|| ReflectionMeasure::zeros(&g));

    let mut cur: Vec<f64> = u0.to_vec();
    let mut next = vec![0.0; nx + 2];
    for j in 0..nt {
        let trace = if opts.drift {
            cutoff::boundary_gradient(&cur, dx)?
        } else {
            0.0
        };
        for i in 1..=nx {
            let diff = opts.alpha * (cur[i + 1] - 2.0 * cur[i] + cur[i - 1]) / (dx * dx);
            let transport = if opts.drift {
                let du = if trace >= 0.0 {
                    (cur[i] - cur[i - 1]) / dx
                } else {
                    (cur[i + 1] - cur[i]) / dx
                };
                -trace * du
            } else {
                0.0
            };
            let mut v =
                cur[i] + dt * (diff + transport) + sigma[i] * noise.increment(i - 1, j) / dx;
            if opts.reflect && v < 0.0 {
                if let Some(m) = measure.as_mut() {
                    m.mass[(j, i - 1)] = -v * dx;
                }
                v = 0.0;
            }
            next[i] = v;
        }
        next[0] = 0.0;
        next[nx + 1] = 0.0;
        for i in 0..nx + 2 {
            values[(j + 1, i)] = next[i];
        }
        std::mem::swap(&mut cur, &mut next);
    }
    let meta = PathMeta {
        solver: SolverKind::FiniteDifference,
        seed: noise.seed,
        alpha: opts.alpha,
    };
    let path = PathState::from_time_major(g, values, meta)?;
    Ok((path, measure))
}
