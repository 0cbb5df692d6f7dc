//! Named initial-datum and diffusion profiles used by the harness and the
//! test fixtures. All named profiles vanish at both walls.

use std::fmt;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::GridSpec;

/// `A sin(pi x / lambda)`, with exact zeros on the walls.
pub fn sine(x: f64, lambda: f64, amplitude: f64) -> f64 {
    if x <= 0.0 || x >= lambda {
        return 0.0;
    }
    amplitude * (std::f64::consts::PI * x / lambda).sin()
}

/// `A x (lambda - x)`; boundary gradient is exactly `A lambda`.
pub fn quadratic(x: f64, lambda: f64, amplitude: f64) -> f64 {
    amplitude * x * (lambda - x)
}

/// Smooth mollifier supported on `[0.05 lambda, 0.95 lambda]`, peak `A` at
/// the center.
pub fn bump(x: f64, lambda: f64, amplitude: f64) -> f64 {
    let c = 0.5 * lambda;
    let w = 0.45 * lambda;
    let r = (x - c) / w;
    if r.abs() >= 1.0 {
        0.0
    } else {
        amplitude * (1.0 - 1.0 / (1.0 - r * r)).exp()
    }
}

/// `A x (lambda - x)` tapered by the mollifier: nonnegative, smooth,
/// compactly supported inside the domain.
pub fn quad_bump(x: f64, lambda: f64, amplitude: f64) -> f64 {
    quadratic(x, lambda, amplitude) * bump(x, lambda, 1.0)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NamedProfile {
    Zero,
    Sine,
    Quadratic,
    Bump,
    QuadBump,
    /// Two-column CSV `x,value`, linearly interpolated, zero outside the
    /// tabulated range.
    Table(String),
}

impl NamedProfile {
    pub fn parse(name: &str) -> Result<Self> {
        Ok(match name.trim() {
            "zero" => NamedProfile::Zero,
            "sine" => NamedProfile::Sine,
            "quadratic" => NamedProfile::Quadratic,
            "bump" => NamedProfile::Bump,
            "quad_bump" => NamedProfile::QuadBump,
            other => {
                if let Some(path) = other.strip_prefix("table:") {
                    NamedProfile::Table(path.trim().to_string())
                } else {
                    return Err(Error::Config(vec![format!(
                        "unknown profile '{other}' (expected zero|sine|quadratic|bump|quad_bump|table:PATH)"
                    )]));
                }
            }
        })
    }

    /// Samples the profile at all grid nodes (walls included).
    pub fn sample(&self, grid: &GridSpec, amplitude: f64) -> Result<Vec<f64>> {
        let lam = grid.lambda;
        Ok(match self {
            NamedProfile::Zero => vec![0.0; grid.nx + 2],
            NamedProfile::Sine => grid.sample_profile(|x| sine(x, lam, amplitude)),
            NamedProfile::Quadratic => grid.sample_profile(|x| quadratic(x, lam, amplitude)),
            NamedProfile::Bump => grid.sample_profile(|x| bump(x, lam, amplitude)),
            NamedProfile::QuadBump => grid.sample_profile(|x| quad_bump(x, lam, amplitude)),
            NamedProfile::Table(path) => {
                let table = load_table(Path::new(path))?;
                grid.sample_profile(|x| amplitude * interp_table(&table, x))
            }
        })
    }
}

impl fmt::Display for NamedProfile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NamedProfile::Zero => write!(f, "zero"),
            NamedProfile::Sine => write!(f, "sine"),
            NamedProfile::Quadratic => write!(f, "quadratic"),
            NamedProfile::Bump => write!(f, "bump"),
            NamedProfile::QuadBump => write!(f, "quad_bump"),
            NamedProfile::Table(p) => write!(f, "table:{p}"),
        }
    }
}

fn load_table(path: &Path) -> Result<Vec<(f64, f64)>> {
    let text = std::fs::read_to_string(path)?;
    let mut rows = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut cols = line.split(',');
        let parse = |s: Option<&str>| -> Result<f64> {
            s.ok_or_else(|| Error::Config(vec![format!("{path:?}:{}: missing column", lineno + 1)]))?
                .trim()
                .parse::<f64>()
                .map_err(|e| Error::Config(vec![format!("{path:?}:{}: {e}", lineno + 1)]))
        };
        let x = parse(cols.next())?;
        let v = parse(cols.next())?;
        rows.push((x, v));
    }
    if rows.len() < 2 {
        return Err(Error::Config(vec![format!(
            "profile table {path:?} needs at least two rows"
        )]));
    }
    rows.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    Ok(rows)
}

fn interp_table(table: &[(f64, f64)], x: f64) -> f64 {
    if x <= table[0].0 || x >= table[table.len() - 1].0 {
        return 0.0;
    }
    let idx = table.partition_point(|&(xi, _)| xi <= x);
    let (x0, v0) = table[idx - 1];
    let (x1, v1) = table[idx];
    v0 + (v1 - v0) * (x - x0) / (x1 - x0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn named_profiles_vanish_at_walls() {
        let g = GridSpec::new(16, 4, 2.0, 1.0).unwrap();
        for name in ["zero", "sine", "quadratic", "bump", "quad_bump"] {
            let p = NamedProfile::parse(name).unwrap();
            let v = p.sample(&g, 1.3).unwrap();
            assert_eq!(v[0], 0.0, "{name}");
            assert_eq!(v[g.nx + 1], 0.0, "{name}");
        }
        assert!(NamedProfile::parse("wibble").is_err());
    }

    #[test]
    fn quad_bump_is_nonnegative_and_interior_supported() {
        let lam = 1.0;
        for i in 0..=1000 {
            let x = lam * i as f64 / 1000.0;
            let v = quad_bump(x, lam, 2.0);
            assert!(v >= 0.0);
            if x < 0.05 || x > 0.95 {
                assert_eq!(v, 0.0);
            }
        }
    }

    #[test]
    fn table_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("prof.csv");
        std::fs::write(&path, "0.0,0.0\n0.5,2.0\n1.0,0.0\n").unwrap();
        let p = NamedProfile::parse(&format!("table:{}", path.display())).unwrap();
        let g = GridSpec::new(3, 4, 1.0, 1.0).unwrap();
        let v = p.sample(&g, 1.0).unwrap();
        // nodes at 0.25, 0.5, 0.75
        assert!((v[1] - 1.0).abs() < 1e-12);
        assert!((v[2] - 2.0).abs() < 1e-12);
        assert!((v[3] - 1.0).abs() < 1e-12);
    }
}
