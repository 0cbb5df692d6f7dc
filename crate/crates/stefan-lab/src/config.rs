//! Run configuration: a flat `key = value` text format with `[section]`
//! headers, exhaustive validation, canonical re-serialization and hashing.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::cutoff::{CutoffParams, GradientConvention};
use crate::error::{Error, Result};
use crate::grid::GridSpec;
use crate::profiles::NamedProfile;
use crate::cutoff;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SolverChoice {
    Mild,
    Fd,
    Reflected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportKind {
    Classification,
    Moments,
    Holder,
    Eta,
    Paths,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProfileConfig {
    pub profile: NamedProfile,
    pub amplitude: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrontConfig {
    pub a: f64,
    pub b: f64,
    pub s0_minus: f64,
    pub s0_plus: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Tolerances {
    pub picard_tol: f64,
    pub picard_max_iters: usize,
    pub complementarity_tol: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub alpha: f64,
    pub cutoff: CutoffParams,
    pub sigma: ProfileConfig,
    pub u0: ProfileConfig,
    pub solver: SolverChoice,
    pub ensemble_size: usize,
    pub base_seed: u64,
    pub outputs: Vec<ReportKind>,
    pub front: FrontConfig,
    pub tolerances: Tolerances,
}

impl Default for RunConfig {
    fn default() -> Self {
        let grid = GridSpec::new(32, 256, 1.0, 0.25).unwrap();
        let mut cutoff = CutoffParams::new(8, 2.5, 8.0, 50.0, grid.horizon).unwrap();
        cutoff.gradient_convention = GradientConvention::Absolute;
        RunConfig {
            grid,
            alpha: 1.0,
            cutoff,
            sigma: ProfileConfig {
                profile: NamedProfile::Sine,
                amplitude: 0.5,
            },
            u0: ProfileConfig {
                profile: NamedProfile::QuadBump,
                amplitude: 1.0,
            },
            solver: SolverChoice::Mild,
            ensemble_size: 100,
            base_seed: 42,
            outputs: vec![ReportKind::Classification, ReportKind::Moments],
            front: FrontConfig {
                a: -0.5,
                b: 0.5,
                s0_minus: -0.05,
                s0_plus: 0.05,
            },
            tolerances: Tolerances {
                picard_tol: 1e-8,
                picard_max_iters: 50,
                complementarity_tol: 1e-8,
            },
        }
    }
}

fn parse_sections(text: &str, errors: &mut Vec<String>) -> BTreeMap<String, BTreeMap<String, String>> {
    let mut sections: BTreeMap<String, BTreeMap<String, String>> = BTreeMap::new();
    let mut current = String::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            current = name.trim().to_string();
            sections.entry(current.clone()).or_default();
            continue;
        }
        match line.split_once('=') {
            Some((k, v)) => {
                if current.is_empty() {
                    errors.push(format!("line {}: key outside any section", lineno + 1));
                } else {
                    sections
                        .entry(current.clone())
                        .or_default()
                        .insert(k.trim().to_string(), v.trim().to_string());
                }
            }
            None => errors.push(format!("line {}: expected 'key = value'", lineno + 1)),
        }
    }
    sections
}

struct SectionReader<'a> {
    name: &'a str,
    map: BTreeMap<String, String>,
    errors: &'a mut Vec<String>,
    seen: Vec<String>,
}

impl<'a> SectionReader<'a> {
    fn get<T: std::str::FromStr>(&mut self, key: &str, default: T) -> T
    where
        T::Err: std::fmt::Display,
    {
        self.seen.push(key.to_string());
        match self.map.get(key) {
            None => default,
            Some(raw) => match raw.parse() {
                Ok(v) => v,
                Err(e) => {
                    self.errors
                        .push(format!("[{}] {key} = {raw}: {e}", self.name));
                    default
                }
            },
        }
    }

    fn get_str(&mut self, key: &str) -> Option<String> {
        self.seen.push(key.to_string());
        self.map.get(key).cloned()
    }

    fn finish(self) {
        for k in self.map.keys() {
            if !self.seen.contains(k) {
                self.errors.push(format!("[{}] unknown key '{k}'", self.name));
            }
        }
    }
}

impl RunConfig {
    /// Parses and validates. Every problem found is listed; nothing is
    /// computed from a configuration that fails validation.
    pub fn parse(text: &str) -> Result<RunConfig> {
        let mut errors = Vec::new();
        let mut sections = parse_sections(text, &mut errors);
        let known = ["grid", "cutoff", "sigma", "u0", "run", "front", "tolerances"];
        for name in sections.keys() {
            if !known.contains(&name.as_str()) {
                errors.push(format!("unknown section [{name}]"));
            }
        }
        let mut take = |name: &str| sections.remove(name).unwrap_or_default();
        let d = RunConfig::default();

        let mut s = SectionReader {
            name: "grid",
            map: take("grid"),
            errors: &mut errors,
            seen: vec![],
        };
        let nx = s.get("nx", d.grid.nx);
        let nt = s.get("nt", d.grid.nt);
        let lambda = s.get("lambda", d.grid.lambda);
        let horizon = s.get("horizon", d.grid.horizon);
        s.finish();

        let mut s = SectionReader {
            name: "cutoff",
            map: take("cutoff"),
            errors: &mut errors,
            seen: vec![],
        };
        let level = s.get("level", d.cutoff.level);
        let p = s.get("p", d.cutoff.p);
        let grad_cap = s.get("grad_cap", d.cutoff.grad_cap);
        let malliavin_cap = s.get("malliavin_cap", d.cutoff.malliavin_cap);
        let convention_raw = s.get_str("gradient_convention");
        s.finish();
        let gradient_convention = match convention_raw.as_deref() {
            None | Some("absolute") => GradientConvention::Absolute,
            Some("one_sided") => GradientConvention::OneSided,
            Some(other) => {
                errors.push(format!(
                    "[cutoff] gradient_convention = {other}: expected absolute|one_sided"
                ));
                GradientConvention::Absolute
            }
        };

        let profile_of = |sect: &'static str,
                              errors: &mut Vec<String>,
                              map: BTreeMap<String, String>,
                              default: &ProfileConfig| {
            let mut s = SectionReader {
                name: sect,
                map,
                errors,
                seen: vec![],
            };
            let amplitude = s.get("amplitude", default.amplitude);
            let profile_raw = s.get_str("profile");
            s.finish();
            let profile = match profile_raw {
                None => default.profile.clone(),
                Some(raw) => match NamedProfile::parse(&raw) {
                    Ok(p) => p,
                    Err(e) => {
                        errors.push(format!("[{sect}] {e}"));
                        default.profile.clone()
                    }
                },
            };
            ProfileConfig { profile, amplitude }
        };
        let sigma = profile_of("sigma", &mut errors, take("sigma"), &d.sigma);
        let u0 = profile_of("u0", &mut errors, take("u0"), &d.u0);

        let mut s = SectionReader {
            name: "run",
            map: take("run"),
            errors: &mut errors,
            seen: vec![],
        };
        let alpha = s.get("alpha", d.alpha);
        let ensemble_size = s.get("ensemble_size", d.ensemble_size);
        let base_seed = s.get("base_seed", d.base_seed);
        let solver_raw = s.get_str("solver");
        let outputs_raw = s.get_str("outputs");
        s.finish();
        let solver = match solver_raw.as_deref() {
            None => d.solver,
            Some("mild") => SolverChoice::Mild,
            Some("fd") => SolverChoice::Fd,
            Some("reflected") => SolverChoice::Reflected,
            Some(other) => {
                errors.push(format!("[run] solver = {other}: expected mild|fd|reflected"));
                d.solver
            }
        };
        let outputs = match outputs_raw {
            None => d.outputs.clone(),
            Some(raw) => {
                let mut out = Vec::new();
                for item in raw.split(',').map(str::trim).filter(|s| !s.is_empty()) {
                    match item {
                        "classification" => out.push(ReportKind::Classification),
                        "moments" => out.push(ReportKind::Moments),
                        "holder" => out.push(ReportKind::Holder),
                        "eta" => out.push(ReportKind::Eta),
                        "paths" => out.push(ReportKind::Paths),
                        other => errors.push(format!("[run] unknown output '{other}'")),
                    }
                }
                out
            }
        };

        let mut s = SectionReader {
            name: "front",
            map: take("front"),
            errors: &mut errors,
            seen: vec![],
        };
        let front = FrontConfig {
            a: s.get("a", d.front.a),
            b: s.get("b", d.front.b),
            s0_minus: s.get("s0_minus", d.front.s0_minus),
            s0_plus: s.get("s0_plus", d.front.s0_plus),
        };
        s.finish();

        let mut s = SectionReader {
            name: "tolerances",
            map: take("tolerances"),
            errors: &mut errors,
            seen: vec![],
        };
        let tolerances = Tolerances {
            picard_tol: s.get("picard_tol", d.tolerances.picard_tol),
            picard_max_iters: s.get("picard_max_iters", d.tolerances.picard_max_iters),
            complementarity_tol: s.get("complementarity_tol", d.tolerances.complementarity_tol),
        };
        s.finish();

        // structural validation
        if nx == 0 || nt == 0 {
            errors.push("[grid] nx and nt must be >= 1".into());
        }
        if !(lambda > 0.0) || !(horizon > 0.0) {
            errors.push("[grid] lambda and horizon must be positive".into());
        }
        if !(p > 2.0 && p < 3.0) {
            errors.push(format!("[cutoff] p must lie in (2, 3), got {p}"));
        }
        if level == 0 {
            errors.push("[cutoff] level must be >= 1".into());
        }
        if !(grad_cap > 0.0) || !(malliavin_cap > 0.0) {
            errors.push("[cutoff] caps must be positive".into());
        }
        if !(alpha > 0.0) {
            errors.push(format!("[run] alpha must be positive, got {alpha}"));
        }
        if ensemble_size == 0 {
            errors.push("[run] ensemble_size must be >= 1".into());
        }
        if !errors.is_empty() {
            return Err(Error::Config(errors));
        }

        let grid = GridSpec::new(nx, nt, lambda, horizon).expect("validated above");
        let cutoff = CutoffParams {
            level,
            p,
            grad_cap,
            malliavin_cap,
            horizon,
            gradient_convention,
        };
        let cfg = RunConfig {
            grid,
            alpha,
            cutoff,
            sigma,
            u0,
            solver,
            ensemble_size,
            base_seed,
            outputs,
            front,
            tolerances,
        };
        cfg.validate_semantics()?;
        Ok(cfg)
    }

    /// Cross-field checks that need the profiles sampled on the grid.
    fn validate_semantics(&self) -> Result<()> {
        let mut errors = Vec::new();
        let g = &self.grid;
        match self.sigma.profile.sample(g, self.sigma.amplitude) {
            Err(e) => errors.push(format!("[sigma] {e}")),
            Ok(sig) => {
                if sig[0] != 0.0 || sig[g.nx + 1] != 0.0 {
                    errors.push("[sigma] profile must vanish at x = 0 and x = lambda".into());
                }
            }
        }
        match self.u0.profile.sample(g, self.u0.amplitude) {
            Err(e) => errors.push(format!("[u0] {e}")),
            Ok(u0) => {
                if u0[0] != 0.0 || u0[g.nx + 1] != 0.0 {
                    errors.push("[u0] profile must vanish at x = 0 and x = lambda".into());
                }
                if u0.iter().any(|&v| v < 0.0) {
                    errors.push("[u0] profile must be nonnegative".into());
                }
                if u0.iter().all(|&v| v == 0.0) && self.u0.amplitude != 0.0 {
                    // fine: degenerate but allowed
                }
                let dx = g.dx();
                if u0.len() >= 4 {
                    let grad = cutoff::boundary_gradient(&u0, dx).unwrap_or(f64::INFINITY);
                    let hn = cutoff::h_norm(&u0, dx).unwrap_or(f64::INFINITY);
                    if let Err(Error::Config(mut admissibility)) =
                        self.cutoff.check_admissible(grad, hn)
                    {
                        errors.append(&mut admissibility);
                    }
                }
            }
        }
        if matches!(self.solver, SolverChoice::Fd) {
            let r = g.diffusion_number(self.alpha);
            if r > 0.5 {
                errors.push(format!(
                    "[run] fd solver needs alpha dt / dx^2 <= 1/2, got {r:.4}"
                ));
            }
        }
        let f = &self.front;
        if !(f.a < f.b) {
            errors.push("[front] need a < b".into());
        }
        if !(f.s0_minus < f.s0_plus) {
            errors.push("[front] need s0_minus < s0_plus".into());
        }
        if f.s0_minus <= f.a || f.s0_plus >= f.b {
            errors.push("[front] initial fronts must lie strictly inside (a, b)".into());
        }
        if f.b - f.a > g.lambda + 1e-12 {
            errors.push(format!(
                "[front] domain width {} exceeds lambda = {}; the transformed fields cannot cover it",
                f.b - f.a,
                g.lambda
            ));
        }
        if !(self.tolerances.picard_tol > 0.0) {
            errors.push("[tolerances] picard_tol must be positive".into());
        }
        if self.tolerances.picard_max_iters == 0 {
            errors.push("[tolerances] picard_max_iters must be >= 1".into());
        }
        if errors.is_empty() {
            Ok(())
        } else {
            Err(Error::Config(errors))
        }
    }

    /// Canonical text form; `parse(canonical_text()) == self`.
    pub fn canonical_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "[grid]");
        let _ = writeln!(s, "nx = {}", self.grid.nx);
        let _ = writeln!(s, "nt = {}", self.grid.nt);
        let _ = writeln!(s, "lambda = {}", self.grid.lambda);
        let _ = writeln!(s, "horizon = {}", self.grid.horizon);
        let _ = writeln!(s, "\n[cutoff]");
        let _ = writeln!(s, "level = {}", self.cutoff.level);
        let _ = writeln!(s, "p = {}", self.cutoff.p);
        let _ = writeln!(s, "grad_cap = {}", self.cutoff.grad_cap);
        let _ = writeln!(s, "malliavin_cap = {}", self.cutoff.malliavin_cap);
        let _ = writeln!(
            s,
            "gradient_convention = {}",
            match self.cutoff.gradient_convention {
                GradientConvention::Absolute => "absolute",
                GradientConvention::OneSided => "one_sided",
            }
        );
        let _ = writeln!(s, "\n[sigma]");
        let _ = writeln!(s, "profile = {}", self.sigma.profile);
        let _ = writeln!(s, "amplitude = {}", self.sigma.amplitude);
        let _ = writeln!(s, "\n[u0]");
        let _ = writeln!(s, "profile = {}", self.u0.profile);
        let _ = writeln!(s, "amplitude = {}", self.u0.amplitude);
        let _ = writeln!(s, "\n[run]");
        let _ = writeln!(
            s,
            "solver = {}",
            match self.solver {
                SolverChoice::Mild => "mild",
                SolverChoice::Fd => "fd",
                SolverChoice::Reflected => "reflected",
            }
        );
        let _ = writeln!(s, "alpha = {}", self.alpha);
        let _ = writeln!(s, "ensemble_size = {}", self.ensemble_size);
        let _ = writeln!(s, "base_seed = {}", self.base_seed);
        let outputs: Vec<&str> = self
            .outputs
            .iter()
            .map(|o| match o {
                ReportKind::Classification => "classification",
                ReportKind::Moments => "moments",
                ReportKind::Holder => "holder",
                ReportKind::Eta => "eta",
                ReportKind::Paths => "paths",
            })
            .collect();
        let _ = writeln!(s, "outputs = {}", outputs.join(","));
        let _ = writeln!(s, "\n[front]");
        let _ = writeln!(s, "a = {}", self.front.a);
        let _ = writeln!(s, "b = {}", self.front.b);
        let _ = writeln!(s, "s0_minus = {}", self.front.s0_minus);
        let _ = writeln!(s, "s0_plus = {}", self.front.s0_plus);
        let _ = writeln!(s, "\n[tolerances]");
        let _ = writeln!(s, "picard_tol = {}", self.tolerances.picard_tol);
        let _ = writeln!(s, "picard_max_iters = {}", self.tolerances.picard_max_iters);
        let _ = writeln!(
            s,
            "complementarity_tol = {}",
            self.tolerances.complementarity_tol
        );
        s
    }

    pub fn hash(&self) -> String {
        let mut hasher = Sha256::new();
        hasher.update(self.canonical_text().as_bytes());
        let digest = hasher.finalize();
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn sampled_sigma(&self) -> Result<Vec<f64>> {
        self.sigma.profile.sample(&self.grid, self.sigma.amplitude)
    }

    pub fn sampled_u0(&self) -> Result<Vec<f64>> {
        self.u0.profile.sample(&self.grid, self.u0.amplitude)
    }

    pub fn wants(&self, kind: ReportKind) -> bool {
        self.outputs.contains(&kind)
    }
}
