//! Localization machinery: the cut-off functions `H_n`, `T_n`, the weighted
//! sup norm `||f||_H = sup |f(x)/x|`, the boundary-gradient trace, stopping
//! times and sample-space classification.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::malliavin::MalliavinField;
use crate::mild::PathState;

/// Which form of the boundary-gradient stopping rule applies. The reflected
/// problem keeps `u >= 0` so the one-sided and absolute conventions
/// coincide there; the unreflected solution changes sign in general and
/// uses the absolute value.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum GradientConvention {
    #[default]
    Absolute,
    OneSided,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CutoffParams {
    /// Localization level `n`; the cut-off is the identity below
    /// `n^{1/p}`.
    pub level: u32,
    /// Moment exponent, strictly inside `(2, 3)`.
    pub p: f64,
    /// Boundary-gradient cap `M`.
    pub grad_cap: f64,
    /// Malliavin-trace cap `M_d`.
    pub malliavin_cap: f64,
    /// Deterministic horizon `T`.
    pub horizon: f64,
    pub gradient_convention: GradientConvention,
}

impl CutoffParams {
    pub fn new(level: u32, p: f64, grad_cap: f64, malliavin_cap: f64, horizon: f64) -> Result<Self> {
        if !(p > 2.0 && p < 3.0) {
            return Err(Error::Domain(format!("p must lie in (2, 3), got {p}")));
        }
        if level == 0 {
            return Err(Error::Usage("localization level must be >= 1".into()));
        }
        if !(grad_cap > 0.0) || !(malliavin_cap > 0.0) || !(horizon > 0.0) {
            return Err(Error::Domain(
                "grad_cap, malliavin_cap and horizon must be positive".into(),
            ));
        }
        Ok(CutoffParams {
            level,
            p,
            grad_cap,
            malliavin_cap,
            horizon,
            gradient_convention: GradientConvention::default(),
        })
    }

    /// `n^{1/p}`, the inner radius of the cut-off band.
    #[inline]
    pub fn flat_radius(&self) -> f64 {
        (self.level as f64).powf(1.0 / self.p)
    }

    /// Nonemptiness of the classified events requires the caps to sit above
    /// the initial data's static values: `M > grad u0(0+)` and
    /// `n > ||u0||_H^p`.
    pub fn check_admissible(&self, u0_grad: f64, u0_hnorm: f64) -> Result<()> {
        let mut problems = Vec::new();
        if self.grad_cap <= u0_grad {
            problems.push(format!(
                "grad_cap M = {} must exceed the initial boundary gradient {}",
                self.grad_cap, u0_grad
            ));
        }
        if self.level as f64 <= u0_hnorm.powf(self.p) {
            problems.push(format!(
                "level n = {} must exceed ||u0||_H^p = {}",
                self.level,
                u0_hnorm.powf(self.p)
            ));
        }
        if problems.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(problems))
        }
    }

    fn grad_breach(&self, g: f64) -> bool {
        match self.gradient_convention {
            GradientConvention::Absolute => g.abs() >= self.grad_cap,
            GradientConvention::OneSided => g >= self.grad_cap,
        }
    }
}

/// `H_n(v)`: 1 below `n^{1/p}` in `|v|`, 0 above `n^{1/p} + 1`, joined by a
/// C^1 cubic smoothstep, so `|H_n'| <= 3/2 <= 2`.
#[inline]
pub fn hn(v: f64, params: &CutoffParams) -> f64 {
    let a = params.flat_radius();
    let r = v.abs() - a;
    if r <= 0.0 {
        1.0
    } else if r >= 1.0 {
        0.0
    } else {
        1.0 - r * r * (3.0 - 2.0 * r)
    }
}

/// `d H_n / d v`; supported only on the band `n^{1/p} < |v| < n^{1/p} + 1`.
#[inline]
pub fn hn_prime(v: f64, params: &CutoffParams) -> f64 {
    let a = params.flat_radius();
    let r = v.abs() - a;
    if r <= 0.0 || r >= 1.0 {
        0.0
    } else {
        -v.signum() * 6.0 * r * (1.0 - r)
    }
}

/// `T_n(v) = H_n(v) v`, the Lipschitz truncation applied to `u(y)/y`.
#[inline]
pub fn tn(v: f64, params: &CutoffParams) -> f64 {
    hn(v, params) * v
}

/// Exact derivative of the implemented `T_n`.
#[inline]
pub fn tn_prime(v: f64, params: &CutoffParams) -> f64 {
    hn_prime(v, params) * v + hn(v, params)
}

/// Discrete `||f||_H`: max over interior nodes of `|f(x_i) / x_i|`. The
/// field must carry exact zeros on both walls (`f[0]` and `f[last]`).
pub fn h_norm(field: &[f64], dx: f64) -> Result<f64> {
    if field.len() < 3 {
        return Err(Error::Usage("h_norm needs at least one interior node".into()));
    }
    if field[0] != 0.0 || field[field.len() - 1] != 0.0 {
        return Err(Error::Contract(format!(
            "h_norm requires zero boundary values, got f(0)={}, f(lambda)={}",
            field[0],
            field[field.len() - 1]
        )));
    }
    let mut m = 0.0f64;
    for (i, &v) in field.iter().enumerate().skip(1).take(field.len() - 2) {
        m = m.max((v / (i as f64 * dx)).abs());
    }
    Ok(m)
}

/// One-sided boundary derivative at `0+` by the second-order stencil
/// `(-3 f_0 + 4 f_1 - f_2) / (2 dx)`; exact on quadratics.
pub fn boundary_gradient(field: &[f64], dx: f64) -> Result<f64> {
    if field.len() < 4 {
        return Err(Error::Usage(
            "boundary_gradient needs nx >= 2 interior nodes".into(),
        ));
    }
    Ok((-3.0 * field[0] + 4.0 * field[1] - field[2]) / (2.0 * dx))
}

/// Stopping times and event membership for one sample path.
///
/// Times are grid times; `f64::INFINITY` encodes "never tripped". The
/// events are the discrete renderings of the gradient-cap event (membership
/// means the trace never reached `M` strictly before the horizon) and of
/// its intersection with `sup_t ||u(.,t)||_H^p < n`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PathClassification {
    pub tau_m: f64,
    pub tau_tilde_n: f64,
    /// `None` when no Malliavin field was supplied (undefined, not zero).
    pub tau_md: Option<f64>,
    pub in_omega_m: bool,
    pub in_omega_m_n: bool,
    /// Largest `||u(.,t)||_H` over grid times before `min(T, tau_M)`.
    pub sup_h_norm: f64,
    /// Largest trace magnitude over the same range.
    pub sup_gradient: f64,
}

/// Classifies a path by the stopping times and events. Sups are taken over
/// grid times, which is flagged here once: between-node excursions are
/// invisible at this resolution and quantified by refinement studies, not
/// by this function.
pub fn classify_path(
    path: &PathState,
    dpath: Option<&MalliavinField>,
    params: &CutoffParams,
) -> Result<PathClassification> {
    let g = path.grid;
    let dx = g.dx();
    let n_times = g.nt + 1;
    let horizon_index = g.nt; // t_nt == T

    let mut tau_m = f64::INFINITY;
    let mut tau_m_index = usize::MAX;
    for j in 0..n_times {
        if params.grad_breach(path.boundary_grad[j]) {
            tau_m = g.t(j);
            tau_m_index = j;
            break;
        }
    }
    let mut tau_tilde_n = f64::INFINITY;
    for j in 0..n_times {
        if h_norm(path.time_slice(j), dx)? >= params.level as f64 {
            tau_tilde_n = g.t(j);
            break;
        }
    }
    let tau_md = match dpath {
        None => None,
        Some(d) => Some(d.trace_trip_time(params.malliavin_cap)),
    };

    // sup over grid times strictly before min(T, tau_M)
    let stop_index = tau_m_index.min(horizon_index);
    let mut sup_h = 0.0f64;
    let mut sup_g = 0.0f64;
    for j in 0..stop_index.max(1) {
        sup_h = sup_h.max(h_norm(path.time_slice(j), dx)?);
        sup_g = sup_g.max(path.boundary_grad[j].abs());
    }
    let in_omega_m = tau_m_index >= horizon_index;
    let in_omega_m_n = in_omega_m && sup_h.powf(params.p) < params.level as f64;
    Ok(PathClassification {
        tau_m,
        tau_tilde_n,
        tau_md,
        in_omega_m,
        in_omega_m_n,
        sup_h_norm: sup_h,
        sup_gradient: sup_g,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::GridSpec;
    use proptest::prelude::*;

    fn params(level: u32) -> CutoffParams {
        CutoffParams::new(level, 2.5, 8.0, 50.0, 0.25).unwrap()
    }

    #[test]
    fn param_validation() {
        assert!(CutoffParams::new(1, 2.0, 1.0, 1.0, 1.0).is_err());
        assert!(CutoffParams::new(1, 3.0, 1.0, 1.0, 1.0).is_err());
        assert!(CutoffParams::new(0, 2.5, 1.0, 1.0, 1.0).is_err());
        assert!(CutoffParams::new(1, 2.5, 0.0, 1.0, 1.0).is_err());
        assert!(CutoffParams::new(8, 2.5, 1.0, 1.0, 1.0).is_ok());
    }

    #[test]
    fn admissibility_checks_initial_data() {
        let p = params(8);
        assert!(p.check_admissible(1.0, 1.0).is_ok());
        assert!(p.check_admissible(9.0, 1.0).is_err());
        assert!(p.check_admissible(1.0, 3.0).is_err()); // 3^2.5 > 8
    }

    #[test]
    fn tn_identity_inside_flat_region() {
        let p = params(8);
        let a = p.flat_radius();
        for v in [-a + 1e-9, -0.5 * a, 0.0, 0.3 * a, a - 1e-9] {
            assert_eq!(tn(v, &p), v);
            assert_eq!(tn_prime(v, &p), 1.0);
        }
    }

    #[test]
    fn tn_zero_outside_band() {
        let p = params(8);
        let a = p.flat_radius();
        for v in [a + 1.0, a + 1.5, -(a + 1.00001), 1e6] {
            assert_eq!(tn(v, &p), 0.0);
            assert_eq!(tn_prime(v, &p), 0.0);
        }
    }

    #[test]
    fn tn_prime_matches_finite_difference() {
        let p = params(8);
        let a = p.flat_radius();
        let h = 1e-7;
        for frac in 1..20 {
            let v = a - 0.5 + frac as f64 * 0.1; // sweeps across the band
            let fd = (tn(v + h, &p) - tn(v - h, &p)) / (2.0 * h);
            let an = tn_prime(v, &p);
            assert!((fd - an).abs() < 1e-5, "v={v}: fd {fd} vs {an}");
        }
    }

    proptest! {
        #[test]
        fn hn_band_properties(v in -50.0f64..50.0, level in 1u32..64) {
            let p = params(level);
            let a = p.flat_radius();
            let h = hn(v, &p);
            prop_assert!((0.0..=1.0).contains(&h));
            prop_assert!(hn_prime(v, &p).abs() <= 2.0);
            if v.abs() < a {
                prop_assert_eq!(h, 1.0);
                prop_assert_eq!(hn_prime(v, &p), 0.0);
            }
            if v.abs() > a + 1.0 {
                prop_assert_eq!(h, 0.0);
                prop_assert_eq!(hn_prime(v, &p), 0.0);
            }
        }

        #[test]
        fn tn_lipschitz_with_band_bound(level in 1u32..64) {
            let p = params(level);
            let a = p.flat_radius();
            let bound = 2.0 * a + 3.0;
            // measured Lipschitz constant over a fine lattice
            let m = 4000;
            let lo = -(a + 2.0);
            let hi = a + 2.0;
            let step = (hi - lo) / m as f64;
            let mut c: f64 = 0.0;
            let mut prev = tn(lo, &p);
            for i in 1..=m {
                let v = lo + i as f64 * step;
                let t = tn(v, &p);
                c = c.max(((t - prev) / step).abs());
                prev = t;
            }
            prop_assert!(c <= bound, "measured {} vs band bound {}", c, bound);
        }
    }

    #[test]
    fn h_norm_examples() {
        let g = GridSpec::new(63, 10, 1.0, 1.0).unwrap();
        let dx = g.dx();
        let zero = vec![0.0; g.nx + 2];
        assert_eq!(h_norm(&zero, dx).unwrap(), 0.0);

        // f = x (lambda - x): |f/x| = lambda - x, maximal at the first node
        let quad: Vec<f64> = g.sample_profile(|x| x * (1.0 - x));
        let hn = h_norm(&quad, dx).unwrap();
        assert!((hn - (1.0 - dx)).abs() < 1e-12);

        // f = sin(pi x): max f/x -> pi as the grid refines
        let pi = std::f64::consts::PI;
        let fine = GridSpec::new(1023, 10, 1.0, 1.0).unwrap();
        let sine: Vec<f64> = fine.sample_profile(|x| crate::profiles::sine(x, 1.0, 1.0));
        let hs = h_norm(&sine, fine.dx()).unwrap();
        assert!((hs - pi).abs() < 1e-3, "sine H-norm {hs}");
    }

    #[test]
    fn h_norm_rejects_nonzero_boundaries() {
        let mut f = vec![0.0; 10];
        f[9] = 0.5;
        assert!(matches!(h_norm(&f, 0.1), Err(Error::Contract(_))));
    }

    #[test]
    fn boundary_gradient_exact_on_quadratics() {
        let g = GridSpec::new(16, 10, 1.0, 1.0).unwrap();
        let quad: Vec<f64> = g.sample_profile(|x| x * (1.0 - x));
        let bg = boundary_gradient(&quad, g.dx()).unwrap();
        assert!((bg - 1.0).abs() < 1e-13, "quadratic gradient {bg}");
        let zero = vec![0.0; g.nx + 2];
        assert_eq!(boundary_gradient(&zero, g.dx()).unwrap(), 0.0);
    }

    #[test]
    fn boundary_gradient_second_order_on_sine() {
        let pi = std::f64::consts::PI;
        let g = GridSpec::new(64, 10, 1.0, 1.0).unwrap();
        let sine: Vec<f64> = g.sample_profile(|x| crate::profiles::sine(x, 1.0, 1.0));
        let bg = boundary_gradient(&sine, g.dx()).unwrap();
        assert!((bg - pi).abs() / pi < 1e-3, "sine gradient {bg} vs {pi}");
    }

    #[test]
    fn boundary_gradient_needs_two_interior_nodes() {
        assert!(boundary_gradient(&[0.0, 1.0, 0.0], 0.25).is_err());
    }

    #[test]
    fn classify_static_quadratic_path() {
        use crate::mild::PathState;
        let g = GridSpec::new(32, 16, 1.0, 0.25).unwrap();
        let path = PathState::constant_profile(&g, |x| x * (1.0 - x));

        // M above the static gradient (= 1): never trips
        let p = CutoffParams::new(64, 2.5, 2.0, 50.0, g.horizon).unwrap();
        let c = classify_path(&path, None, &p).unwrap();
        assert!(c.tau_m.is_infinite());
        assert!(c.in_omega_m);
        assert!(c.in_omega_m_n);
        assert!(c.tau_md.is_none());

        // M below the static gradient: trips at t = 0
        let p2 = CutoffParams::new(64, 2.5, 0.5, 50.0, g.horizon).unwrap();
        let c2 = classify_path(&path, None, &p2).unwrap();
        assert_eq!(c2.tau_m, 0.0);
        assert!(!c2.in_omega_m);
        assert!(!c2.in_omega_m_n);
    }

    #[test]
    fn omega_events_nest_in_n() {
        use crate::mild::PathState;
        let g = GridSpec::new(32, 16, 1.0, 0.25).unwrap();
        // h-norm of this path is about 0.875 => n = 1 fails (0.875^p < 1 ok)
        // so scale it up to make low levels fail
        let path = PathState::constant_profile(&g, |x| 3.0 * x * (1.0 - x));
        let mut prev = false;
        for level in [1u32, 2, 4, 8, 16, 64] {
            let p = CutoffParams::new(level, 2.5, 10.0, 50.0, g.horizon).unwrap();
            let c = classify_path(&path, None, &p).unwrap();
            assert!(
                !prev || c.in_omega_m_n,
                "membership must be monotone in n (level {level})"
            );
            prev = c.in_omega_m_n;
            assert!(c.in_omega_m_n <= c.in_omega_m);
        }
        assert!(prev, "largest level must qualify");
    }
}
