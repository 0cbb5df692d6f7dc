//! Maps the two transformed half-problem solutions back to the physical
//! frame: moving boundaries, spread, termination events and the physical
//! density.
//!
//! Sign conventions come from the chain rule on the change of variables
//! `x = y - s+(t)` (right half) and `x = s-(t) - y` (left half):
//! `d s+/dt = -u+_x(0+, t)` and `d s-/dt = +u-_x(0+, t)`. The two halves
//! are driven by independent noise fields (distinct seeds).

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::mild::PathState;

/// The static physical domain `Omega = (a, b)`; `lambda = b - a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PhysicalDomain {
    pub a: f64,
    pub b: f64,
}

impl PhysicalDomain {
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(b > a) {
            return Err(Error::Domain(format!("need a < b, got a={a}, b={b}")));
        }
        Ok(PhysicalDomain { a, b })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HitKind {
    None,
    SpreadZero,
    WallContact,
}

#[derive(Debug, Clone, Serialize)]
pub struct FrontTrajectory {
    pub s_minus: Vec<f64>,
    pub s_plus: Vec<f64>,
    pub spread: Vec<f64>,
    pub hit_time: f64,
    pub hit_kind: HitKind,
    pub hit_index: Option<usize>,
    pub domain: PhysicalDomain,
    #[serde(skip)]
    pub grid: GridSpec,
}

/// First grid time at which the spread closes (`spread <= 0`) or a front
/// touches the wall. Spread closure is checked first when both trip at
/// the same index.
pub fn detect_hit(
    s_minus: &[f64],
    s_plus: &[f64],
    domain: &PhysicalDomain,
    grid: &GridSpec,
) -> (f64, HitKind, Option<usize>) {
    for j in 0..s_minus.len() {
        if s_plus[j] - s_minus[j] <= 0.0 {
            return (grid.t(j), HitKind::SpreadZero, Some(j));
        }
        if s_minus[j] <= domain.a || s_plus[j] >= domain.b {
            return (grid.t(j), HitKind::WallContact, Some(j));
        }
    }
    (f64::INFINITY, HitKind::None, None)
}

/// Integrates the Stefan condition: `s+(t) = s+(0) - int_0^t u+_x(0+, r) dr`
/// and `s-(t) = s-(0) + int_0^t u-_x(0+, r) dr` by the trapezoid rule on
/// the boundary-gradient traces, with hit detection.
pub fn reconstruct_front(
    path_plus: &PathState,
    path_minus: &PathState,
    s0_minus: f64,
    s0_plus: f64,
    domain: &PhysicalDomain,
) -> Result<FrontTrajectory> {
    if path_plus.grid != path_minus.grid {
        return Err(Error::Usage("half-problem grids differ".into()));
    }
    if !(s0_minus < s0_plus) {
        return Err(Error::Usage(format!(
            "need s-(0) < s+(0), got {s0_minus} >= {s0_plus}"
        )));
    }
    if s0_minus <= domain.a || s0_plus >= domain.b {
        return Err(Error::Usage(
            "initial fronts must lie strictly inside the domain".into(),
        ));
    }
    let g = path_plus.grid;
    let dt = g.dt();
    let n = g.nt + 1;
    let mut s_minus = Vec::with_capacity(n);
    let mut s_plus = Vec::with_capacity(n);
    let (mut int_plus, mut int_minus) = (0.0f64, 0.0f64);
    for j in 0..n {
        if j > 0 {
            int_plus += 0.5 * dt * (path_plus.boundary_grad[j - 1] + path_plus.boundary_grad[j]);
            int_minus +=
                0.5 * dt * (path_minus.boundary_grad[j - 1] + path_minus.boundary_grad[j]);
        }
        s_plus.push(s0_plus - int_plus);
        s_minus.push(s0_minus + int_minus);
    }
    let spread: Vec<f64> = s_plus.iter().zip(&s_minus).map(|(p, m)| p - m).collect();
    let (hit_time, hit_kind, hit_index) = detect_hit(&s_minus, &s_plus, domain, &g);
    Ok(FrontTrajectory {
        s_minus,
        s_plus,
        spread,
        hit_time,
        hit_kind,
        hit_index,
        domain: *domain,
        grid: g,
    })
}

impl FrontTrajectory {
    /// CSV with columns `t,s_minus,s_plus,spread`.
    pub fn write_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "t,s_minus,s_plus,spread")?;
        for j in 0..self.s_minus.len() {
            writeln!(
                w,
                "{},{},{},{}",
                self.grid.t(j),
                self.s_minus[j],
                self.s_plus[j],
                self.spread[j]
            )?;
        }
        Ok(())
    }
}

/// Physical density assembled from the two half solutions and the fronts:
/// zero on the solid segment `[s-, s+]`, the transported half fields
/// outside it.
pub struct PhysicalDensity<'a> {
    plus: &'a PathState,
    minus: &'a PathState,
    front: &'a FrontTrajectory,
}

pub fn inverse_transform<'a>(
    path_plus: &'a PathState,
    path_minus: &'a PathState,
    front: &'a FrontTrajectory,
) -> Result<PhysicalDensity<'a>> {
    if path_plus.grid != front.grid || path_minus.grid != front.grid {
        return Err(Error::Usage("paths and trajectory share one grid".into()));
    }
    Ok(PhysicalDensity {
        plus: path_plus,
        minus: path_minus,
        front,
    })
}

impl PhysicalDensity<'_> {
    fn interp(path: &PathState, x: f64, j: usize) -> f64 {
        let g = path.grid;
        let lam = g.lambda;
        if x <= 0.0 {
            return 0.0;
        }
        if x >= lam {
            return 0.0;
        }
        let pos = x / g.dx();
        let i0 = pos.floor() as usize;
        let frac = pos - i0 as f64;
        if i0 + 1 > g.nx + 1 {
            return 0.0;
        }
        path.value(i0, j) * (1.0 - frac) + path.value(i0 + 1, j) * frac
    }

    /// `w(y, t_j)`. Querying at or beyond the hit time is a usage error.
    pub fn value_at(&self, y: f64, j: usize) -> Result<f64> {
        let f = self.front;
        if let Some(h) = f.hit_index {
            if j >= h {
                return Err(Error::Usage(format!(
                    "time index {j} is at/after the hit at index {h}"
                )));
            }
        }
        if j >= f.s_minus.len() {
            return Err(Error::Usage(format!("time index {j} out of range")));
        }
        if y < f.domain.a || y > f.domain.b {
            return Err(Error::Usage(format!(
                "price {y} outside the domain [{}, {}]",
                f.domain.a, f.domain.b
            )));
        }
        let (sm, sp) = (f.s_minus[j], f.s_plus[j]);
        Ok(if y >= sp {
            Self::interp(self.plus, y - sp, j)
        } else if y <= sm {
            Self::interp(self.minus, sm - y, j)
        } else {
            0.0
        })
    }

    /// Density snapshot on `ny + 1` equispaced physical nodes.
    pub fn snapshot(&self, ny: usize, j: usize) -> Result<Vec<(f64, f64)>> {
        let d = self.front.domain;
        (0..=ny)
            .map(|k| {
                let y = d.a + (d.b - d.a) * k as f64 / ny as f64;
                Ok((y, self.value_at(y, j)?))
            })
            .collect()
    }

    /// CSV snapshots `t,y,w` at the listed time indices.
    pub fn write_csv<W: Write>(&self, w: &mut W, times: &[usize], ny: usize) -> Result<()> {
        writeln!(w, "t,y,w")?;
        for &j in times {
            for (y, v) in self.snapshot(ny, j)? {
                writeln!(w, "{},{},{}", self.front.grid.t(j), y, v)?;
            }
        }
        Ok(())
    }
}
