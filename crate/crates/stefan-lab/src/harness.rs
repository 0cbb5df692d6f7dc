//! Ensemble orchestration, statistics and report emission: the engine
//! behind the `stefan-lab` binary.
//!
//! Everything emitted is a pure function of `(config, base_seed)`: path
//! workers run in parallel but aggregate in seed order, and wall-clock
//! information goes to a separate sidecar file, never into reports.

use std::fs;
use std::path::Path;

use rayon::prelude::*;
use serde::Serialize;

use crate::config::{ReportKind, RunConfig, SolverChoice};
use crate::cutoff::{self, classify_path, PathClassification};
use crate::error::{Error, Result};
use crate::fd::{fd_solve, FdOptions};
use crate::front::{inverse_transform, reconstruct_front, HitKind, PhysicalDomain};
use crate::heat_kernel::{
    kernel_mass, kernel_power_time_integral, kernel_value, simpson, verify_kernel_bounds,
    BoundsReport, KernelParams, PowerIntegralReport,
};
use crate::malliavin::{
    bump_check, estimate_scaling, gn_process, malliavin_solve, positivity_check, BumpCheckReport,
    MalliavinOptions, PositivityReport, ScalingReport, SourceCell, SourceSelection, StorageMode,
};
use crate::mild::{
    holder_report, picard_solve, reflected_solve, HolderReport, IterationReport, PathState,
    ReflectionMeasure, SolverOptions,
};
use crate::noise::{NoiseField, RNG_ID};

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub config_text: String,
    pub config_hash: String,
    pub base_seed: u64,
    pub rng: String,
    pub version: String,
}

impl Provenance {
    fn of(config: &RunConfig) -> Self {
        Provenance {
            config_text: config.canonical_text(),
            config_hash: config.hash(),
            base_seed: config.base_seed,
            rng: RNG_ID.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum PathStatus {
    Completed,
    PicardFailed { iterations: usize, last_diff: f64 },
}

#[derive(Debug, Clone, Serialize)]
pub struct PathRecord {
    pub seed: u64,
    pub status: PathStatus,
    pub classification: Option<PathClassification>,
    /// `sup_{t < min(T, tau_M, tau~_n)} ||u(., t)||_H^p`.
    pub localized_moment: Option<f64>,
    pub picard_iterations: Option<usize>,
    pub eta_total_mass: Option<f64>,
    /// Complementarity residual over `total mass * sup |u|`.
    pub complementarity_rel: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct MomentEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub count: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EtaSummary {
    pub paths_with_mass: usize,
    pub max_total_mass: f64,
    pub worst_complementarity_rel: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct HolderSummary {
    pub mean_time_exponent: f64,
    pub mean_space_exponent: f64,
    pub paths_measured: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct EnsembleReport {
    pub provenance: Provenance,
    pub ensemble_size: usize,
    pub completed: usize,
    pub failed: usize,
    pub omega_m_fraction: f64,
    /// Fractions of `Omega_M^n` membership for `n` in a x1/x2/x4/x8 sweep.
    pub omega_m_n_fractions: Vec<(u32, f64)>,
    pub moment: Option<MomentEstimate>,
    pub eta: Option<EtaSummary>,
    pub holder: Option<HolderSummary>,
    pub paths: Vec<PathRecord>,
    pub passed: bool,
}

struct SolvedPath {
    path: Option<PathState>,
    eta: Option<ReflectionMeasure>,
    report: Option<IterationReport>,
    status: PathStatus,
}

fn solver_options(config: &RunConfig) -> SolverOptions {
    SolverOptions {
        alpha: config.alpha,
        tol: config.tolerances.picard_tol,
        max_iters: config.tolerances.picard_max_iters,
        ..SolverOptions::default()
    }
}

fn solve_one(config: &RunConfig, seed: u64, u0: &[f64], sigma: &[f64]) -> Result<SolvedPath> {
    let noise = NoiseField::sample_sheet(&config.grid, seed);
    let opts = solver_options(config);
    match config.solver {
        SolverChoice::Mild => match picard_solve(&noise, u0, sigma, &config.cutoff, &opts) {
            Ok((path, report)) => Ok(SolvedPath {
                path: Some(path),
                eta: None,
                report: Some(report),
                status: PathStatus::Completed,
            }),
            Err(Error::NonConvergence {
                iterations,
                last_diff,
                ..
            }) => Ok(SolvedPath {
                path: None,
                eta: None,
                report: None,
                status: PathStatus::PicardFailed {
                    iterations,
                    last_diff,
                },
            }),
            Err(e) => Err(e),
        },
        SolverChoice::Reflected => {
            let (path, eta) = reflected_solve(&noise, u0, sigma, &config.cutoff, &opts)?;
            Ok(SolvedPath {
                path: Some(path),
                eta: Some(eta),
                report: None,
                status: PathStatus::Completed,
            })
        }
        SolverChoice::Fd => {
            let fd_opts = FdOptions {
                alpha: config.alpha,
                drift: true,
                reflect: false,
            };
            let (path, eta) = fd_solve(&noise, u0, sigma, &fd_opts)?;
            Ok(SolvedPath {
                path: Some(path),
                eta,
                report: None,
                status: PathStatus::Completed,
            })
        }
    }
}

/// `sup_{t_j < min(T, tau_M, tau~_n)} ||u(., t_j)||_H^p` on the grid.
fn localized_moment(path: &PathState, c: &PathClassification, p: f64) -> f64 {
    let g = path.grid;
    let dt = g.dt();
    let idx_of = |t: f64| -> usize {
        if t.is_infinite() {
            usize::MAX
        } else {
            (t / dt).round() as usize
        }
    };
    let stop = g
        .nt
        .min(idx_of(c.tau_m))
        .min(idx_of(c.tau_tilde_n))
        .max(1);
    let mut sup = 0.0f64;
    for j in 0..stop {
        let h = cutoff::h_norm(path.time_slice(j), g.dx()).unwrap_or(f64::INFINITY);
        sup = sup.max(h);
    }
    sup.powf(p)
}

fn record_of(
    config: &RunConfig,
    seed: u64,
    solved: &SolvedPath,
) -> Result<(PathRecord, Option<HolderReport>)> {
    let mut rec = PathRecord {
        seed,
        status: solved.status.clone(),
        classification: None,
        localized_moment: None,
        picard_iterations: solved.report.as_ref().map(|r| r.iterations),
        eta_total_mass: None,
        complementarity_rel: None,
    };
    let mut holder = None;
    if let Some(path) = &solved.path {
        let c = classify_path(path, None, &config.cutoff)?;
        rec.localized_moment = Some(localized_moment(path, &c, config.cutoff.p));
        rec.classification = Some(c);
        if let Some(eta) = &solved.eta {
            let total = eta.total_mass();
            rec.eta_total_mass = Some(total);
            let scale = total * path.sup_abs();
            rec.complementarity_rel = Some(if scale > 0.0 {
                eta.complementarity_residual(path) / scale
            } else {
                0.0
            });
        }
        if config.wants(ReportKind::Holder) {
            holder = holder_report(path, None).ok();
        }
    }
    Ok((rec, holder))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PathDumpFormat {
    #[default]
    Csv,
    /// The noise dump followed by an `STPU` path section in one file.
    Binary,
}

/// Solves one path with the configured solver and writes artifacts.
pub fn run_single(config: &RunConfig, out_dir: Option<&Path>) -> Result<SingleReport> {
    run_single_with_format(config, out_dir, PathDumpFormat::Csv)
}

pub fn run_single_with_format(
    config: &RunConfig,
    out_dir: Option<&Path>,
    format: PathDumpFormat,
) -> Result<SingleReport> {
    let u0 = config.sampled_u0()?;
    let sigma = config.sampled_sigma()?;
    let solved = solve_one(config, config.base_seed, &u0, &sigma)?;
    let (record, holder) = record_of(config, config.base_seed, &solved)?;
    let passed = matches!(record.status, PathStatus::Completed)
        && record
            .complementarity_rel
            .map_or(true, |r| r <= config.tolerances.complementarity_tol);
    let report = SingleReport {
        provenance: Provenance::of(config),
        record,
        holder,
        iteration_diffs: solved.report.as_ref().map(|r| r.diffs.clone()),
        passed,
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.txt"), config.canonical_text())?;
        fs::write(dir.join("single.json"), to_json(&report)?)?;
        if let Some(path) = &solved.path {
            if config.wants(ReportKind::Paths) {
                match format {
                    PathDumpFormat::Csv => {
                        let mut buf = Vec::new();
                        path.write_csv(&mut buf)?;
                        fs::write(dir.join("path.csv"), buf)?;
                    }
                    PathDumpFormat::Binary => {
                        let mut buf = Vec::new();
                        NoiseField::sample_sheet(&config.grid, config.base_seed)
                            .write_to(&mut buf)?;
                        path.write_stpu(&mut buf)?;
                        fs::write(dir.join("path.bin"), buf)?;
                    }
                }
            }
        }
        write_sidecar(dir)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct SingleReport {
    pub provenance: Provenance,
    pub record: PathRecord,
    pub holder: Option<HolderReport>,
    pub iteration_diffs: Option<Vec<f64>>,
    pub passed: bool,
}

/// Runs `ensemble_size` paths with seeds `base_seed + k`, aggregates the
/// localized moment, event fractions and optional summaries.
pub fn run_ensemble(config: &RunConfig, out_dir: Option<&Path>) -> Result<EnsembleReport> {
    if config.ensemble_size < 2 {
        return Err(Error::Usage("run_ensemble needs ensemble_size >= 2".into()));
    }
    let u0 = config.sampled_u0()?;
    let sigma = config.sampled_sigma()?;
    let seeds: Vec<u64> = (0..config.ensemble_size)
        .map(|k| config.base_seed + k as u64)
        .collect();
    let results: Vec<Result<(PathRecord, Option<HolderReport>)>> = seeds
        .par_iter()
        .map(|&seed| {
            let solved = solve_one(config, seed, &u0, &sigma)?;
            record_of(config, seed, &solved)
        })
        .collect();

    let mut paths = Vec::with_capacity(results.len());
    let mut holders = Vec::new();
    for r in results {
        let (rec, h) = r?;
        paths.push(rec);
        if let Some(h) = h {
            holders.push(h);
        }
    }
    let completed = paths
        .iter()
        .filter(|r| matches!(r.status, PathStatus::Completed))
        .count();
    let failed = paths.len() - completed;

    let in_m = paths
        .iter()
        .filter_map(|r| r.classification.as_ref())
        .filter(|c| c.in_omega_m)
        .count();
    let classified = paths
        .iter()
        .filter(|r| r.classification.is_some())
        .count()
        .max(1);
    let omega_m_fraction = in_m as f64 / classified as f64;

    let n0 = config.cutoff.level;
    let omega_m_n_fractions: Vec<(u32, f64)> = [1u32, 2, 4, 8]
        .iter()
        .map(|&mult| {
            let n = n0.saturating_mul(mult);
            let count = paths
                .iter()
                .filter_map(|r| r.classification.as_ref())
                .filter(|c| c.in_omega_m && c.sup_h_norm.powf(config.cutoff.p) < n as f64)
                .count();
            (n, count as f64 / classified as f64)
        })
        .collect();

    let moment = if config.wants(ReportKind::Moments) {
        let vals: Vec<f64> = paths.iter().filter_map(|r| r.localized_moment).collect();
        (!vals.is_empty()).then(|| {
            let n = vals.len() as f64;
            let mean = vals.iter().sum::<f64>() / n;
            let var = vals.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n.max(2.0);
            MomentEstimate {
                mean,
                std_error: (var / n).sqrt(),
                count: vals.len(),
            }
        })
    } else {
        None
    };

    let eta = config.wants(ReportKind::Eta).then(|| {
        let with_mass = paths
            .iter()
            .filter(|r| r.eta_total_mass.is_some_and(|m| m > 0.0))
            .count();
        EtaSummary {
            paths_with_mass: with_mass,
            max_total_mass: paths
                .iter()
                .filter_map(|r| r.eta_total_mass)
                .fold(0.0, f64::max),
            worst_complementarity_rel: paths
                .iter()
                .filter_map(|r| r.complementarity_rel)
                .fold(0.0, f64::max),
        }
    });

    let holder = (!holders.is_empty()).then(|| HolderSummary {
        mean_time_exponent: holders.iter().map(|h| h.time.exponent).sum::<f64>()
            / holders.len() as f64,
        mean_space_exponent: holders.iter().map(|h| h.space.exponent).sum::<f64>()
            / holders.len() as f64,
        paths_measured: holders.len(),
    });

    let worst_compl = paths
        .iter()
        .filter_map(|r| r.complementarity_rel)
        .fold(0.0, f64::max);
    let passed = failed == 0 && worst_compl <= config.tolerances.complementarity_tol;

    let report = EnsembleReport {
        provenance: Provenance::of(config),
        ensemble_size: config.ensemble_size,
        completed,
        failed,
        omega_m_fraction,
        omega_m_n_fractions,
        moment,
        eta,
        holder,
        paths,
        passed,
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.txt"), config.canonical_text())?;
        fs::write(dir.join("ensemble.json"), to_json(&report)?)?;
        fs::write(dir.join("ensemble.txt"), report.text_table())?;
        fs::write(dir.join("paths.csv"), report.paths_csv())?;
        write_sidecar(dir)?;
    }
    Ok(report)
}

impl EnsembleReport {
    pub fn text_table(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(s, "ensemble report (config {})", &self.provenance.config_hash[..12]);
        let _ = writeln!(
            s,
            "paths: {} completed, {} failed of {}",
            self.completed, self.failed, self.ensemble_size
        );
        let _ = writeln!(s, "omega_M fraction: {:.4}", self.omega_m_fraction);
        for (n, f) in &self.omega_m_n_fractions {
            let _ = writeln!(s, "omega_M^n fraction at n = {n}: {f:.4}");
        }
        if let Some(m) = &self.moment {
            let _ = writeln!(
                s,
                "localized moment E[sup ||u||_H^p]: {:.6e} +- {:.2e} ({} paths)",
                m.mean, m.std_error, m.count
            );
        }
        if let Some(e) = &self.eta {
            let _ = writeln!(
                s,
                "reflection: {} paths with mass, max {:.4e}, worst complementarity {:.2e}",
                e.paths_with_mass, e.max_total_mass, e.worst_complementarity_rel
            );
        }
        if let Some(h) = &self.holder {
            let _ = writeln!(
                s,
                "holder exponents: time {:.3}, space {:.3} ({} paths)",
                h.mean_time_exponent, h.mean_space_exponent, h.paths_measured
            );
        }
        let _ = writeln!(s, "passed: {}", self.passed);
        s
    }

    pub fn paths_csv(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        let _ = writeln!(
            s,
            "seed,status,tau_m,tau_tilde_n,in_omega_m,in_omega_m_n,sup_h_norm,localized_moment"
        );
        for r in &self.paths {
            let status = match &r.status {
                PathStatus::Completed => "completed".to_string(),
                PathStatus::PicardFailed { iterations, .. } => {
                    format!("picard_failed_{iterations}")
                }
            };
            match &r.classification {
                Some(c) => {
                    let _ = writeln!(
                        s,
                        "{},{},{},{},{},{},{},{}",
                        r.seed,
                        status,
                        c.tau_m,
                        c.tau_tilde_n,
                        c.in_omega_m,
                        c.in_omega_m_n,
                        c.sup_h_norm,
                        r.localized_moment.unwrap_or(f64::NAN)
                    );
                }
                None => {
                    let _ = writeln!(s, "{},{},,,,,,", r.seed, status);
                }
            }
        }
        s
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct FrontReport {
    pub provenance: Provenance,
    pub hit_time: f64,
    pub hit_kind: HitKind,
    /// Max deviation of the discrete front velocity from the negated
    /// boundary-gradient trace, over the trajectory.
    pub velocity_residual: f64,
    pub final_spread: f64,
    pub passed: bool,
}

/// Solves the two half problems on independent seeds, reconstructs the
/// moving boundaries and writes the front and density CSVs.
pub fn run_front(config: &RunConfig, out_dir: Option<&Path>) -> Result<FrontReport> {
    let u0 = config.sampled_u0()?;
    let sigma = config.sampled_sigma()?;
    let plus = solve_one(config, config.base_seed, &u0, &sigma)?;
    let minus = solve_one(config, config.base_seed + 1, &u0, &sigma)?;
    let (path_plus, path_minus) = match (plus.path, minus.path) {
        (Some(p), Some(m)) => (p, m),
        _ => {
            return Err(Error::Precondition(
                "front reconstruction needs both half paths to complete".into(),
            ))
        }
    };
    let domain = PhysicalDomain::new(config.front.a, config.front.b)?;
    let front = reconstruct_front(
        &path_plus,
        &path_minus,
        config.front.s0_minus,
        config.front.s0_plus,
        &domain,
    )?;
    // front velocity vs the trace, first-order in dt
    let g = config.grid;
    let mut vres = 0.0f64;
    let end = front.hit_index.unwrap_or(g.nt);
    for j in 1..=end {
        let v = (front.s_plus[j] - front.s_plus[j - 1]) / g.dt();
        let target = -0.5 * (path_plus.boundary_grad[j - 1] + path_plus.boundary_grad[j]);
        vres = vres.max((v - target).abs());
    }
    let spread_ok = front.spread[..front.hit_index.unwrap_or(front.spread.len() - 1) + 1]
        .iter()
        .all(|&s| s >= 0.0);
    let report = FrontReport {
        provenance: Provenance::of(config),
        hit_time: front.hit_time,
        hit_kind: front.hit_kind,
        velocity_residual: vres,
        final_spread: *front.spread.last().unwrap(),
        passed: spread_ok && vres < 1e-9,
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.txt"), config.canonical_text())?;
        let mut buf = Vec::new();
        front.write_csv(&mut buf)?;
        fs::write(dir.join("front.csv"), buf)?;
        let density = inverse_transform(&path_plus, &path_minus, &front)?;
        let times: Vec<usize> = (0..=4)
            .map(|k| k * end.max(1) / 4)
            .filter(|&j| front.hit_index.map_or(true, |h| j < h))
            .collect();
        let mut buf = Vec::new();
        density.write_csv(&mut buf, &times, 2 * g.nx)?;
        fs::write(dir.join("density.csv"), buf)?;
        fs::write(dir.join("front.json"), to_json(&report)?)?;
        write_sidecar(dir)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct MalliavinReport {
    pub provenance: Provenance,
    pub scaling: ScalingReport,
    pub positivity: PositivityReport,
    pub bump: BumpCheckReport,
    pub recorded_c_l: f64,
    pub tau_md_trips: usize,
    pub passed: bool,
}

/// Derivative-field diagnostics over an ensemble: windowed scaling slopes,
/// positivity fraction at the domain center, and a noise-bump spot check
/// on the first path.
pub fn run_malliavin(config: &RunConfig, out_dir: Option<&Path>) -> Result<MalliavinReport> {
    let g = config.grid;
    let u0 = config.sampled_u0()?;
    let sigma = config.sampled_sigma()?;
    let probe = (g.nx - 1) / 2;
    let b_index = g.nt * 7 / 8;
    let b = g.t(b_index);
    let eps: Vec<f64> = [16.0, 8.0, 4.0, 2.0].iter().map(|d| b / d).collect();
    let window_lo = b_index / 2;
    let opts = solver_options(config);

    let seeds: Vec<u64> = (0..config.ensemble_size)
        .map(|k| config.base_seed + k as u64)
        .collect();
    let per_path: Vec<Result<(crate::malliavin::MalliavinField, crate::malliavin::MalliavinField, f64, bool)>> = seeds
        .par_iter()
        .map(|&seed| {
            let noise = NoiseField::sample_sheet(&g, seed);
            let (path, _) = picard_solve(&noise, &u0, &sigma, &config.cutoff, &opts)?;
            let gn = gn_process(&path, &config.cutoff);
            let mopts = MalliavinOptions {
                alpha: config.alpha,
                drift: true,
                storage: StorageMode::Probe(probe),
                ..MalliavinOptions::default()
            };
            let scaling_field = malliavin_solve(
                &path,
                &gn,
                &sigma,
                &config.cutoff,
                &SourceSelection::Stratified {
                    count: 8 * g.nx.min(64),
                    seed,
                    window: Some((window_lo, b_index)),
                },
                &mopts,
            )?;
            let positivity_field = malliavin_solve(
                &path,
                &gn,
                &sigma,
                &config.cutoff,
                &SourceSelection::Stratified {
                    count: 8 * g.nx.min(64),
                    seed: seed ^ 0x9e37_79b9,
                    window: None,
                },
                &mopts,
            )?;
            let tripped = scaling_field.truncated_at.is_some()
                || positivity_field.truncated_at.is_some();
            Ok((scaling_field, positivity_field, gn.c_l, tripped))
        })
        .collect();

    let mut scaling_fields = Vec::new();
    let mut positivity_fields = Vec::new();
    let mut c_l = 0.0f64;
    let mut trips = 0usize;
    for r in per_path {
        let (sf, pf, cl, tripped) = r?;
        scaling_fields.push(sf);
        positivity_fields.push(pf);
        c_l = c_l.max(cl);
        if tripped {
            trips += 1;
        }
    }
    let scaling = estimate_scaling(&scaling_fields, &sigma, probe, &eps, b, config.alpha)?;
    let positivity = positivity_check(&positivity_fields, &sigma, probe, config.alpha, false)?;

    let bump_cells: Vec<SourceCell> = vec![
        SourceCell {
            iy: g.nx / 4,
            is: g.nt / 8,
        },
        SourceCell {
            iy: g.nx / 2,
            is: g.nt / 3,
        },
        SourceCell {
            iy: 3 * g.nx / 4,
            is: g.nt / 2,
        },
    ];
    let bump_noise = NoiseField::sample_sheet(&g, config.base_seed);
    let bump_opts = SolverOptions {
        tol: 5e-13,
        max_iters: 90,
        ..opts
    };
    let bump = bump_check(
        &bump_noise,
        &u0,
        &sigma,
        &config.cutoff,
        &bump_opts,
        &bump_cells,
        1e-6,
        0.01,
    )?;

    let passed = scaling.pass1 && scaling.pass2 && positivity.fraction == 1.0 && bump.fraction_ok >= 0.95;
    let report = MalliavinReport {
        provenance: Provenance::of(config),
        scaling,
        positivity,
        bump,
        recorded_c_l: c_l,
        tau_md_trips: trips,
        passed,
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("config.txt"), config.canonical_text())?;
        fs::write(dir.join("malliavin.json"), to_json(&report)?)?;
        if let Some(field) = scaling_fields.first() {
            let mut buf = Vec::new();
            field.write_stmd(&mut buf)?;
            fs::write(dir.join("field.stmd"), buf)?;
        }
        write_sidecar(dir)?;
    }
    Ok(report)
}

#[derive(Debug, Clone, Serialize)]
pub struct KernelReport {
    pub bounds: BoundsReport,
    pub chapman_kolmogorov_residual: f64,
    pub late_time_mass: f64,
    pub small_time_mass_error: f64,
    pub power_integrals: Vec<PowerIntegralReport>,
    pub passed: bool,
}

/// Machine verification of the kernel bounds and identities on a given
/// diffusivity/domain pair.
pub fn run_verify_kernel(alpha: f64, lambda: f64, out_dir: Option<&Path>) -> Result<KernelReport> {
    let kp = KernelParams::new(alpha, lambda)?;
    let scale = lambda * lambda / alpha;
    let bounds = verify_kernel_bounds(&[0.1 * scale, 0.01 * scale, 0.001 * scale], &kp)?;

    let (x, y) = (0.3 * lambda, 0.6 * lambda);
    let (t1, t2) = (0.04 * scale, 0.07 * scale);
    let conv = simpson(
        |z| kernel_value(x, z, t1, &kp).unwrap() * kernel_value(z, y, t2, &kp).unwrap(),
        0.0,
        lambda,
        1200,
    );
    let ck = (conv - kernel_value(x, y, t1 + t2, &kp)?).abs();

    let late = kernel_mass(0.5 * lambda, scale, &kp, 600)?;
    let t_small = 1e-5 * scale;
    let panels = ((12.0 * lambda / (alpha * t_small).sqrt()).ceil() as usize).clamp(512, 60_000);
    let small_err = (kernel_mass(0.5 * lambda, t_small, &kp, panels)? - 1.0).abs();

    let sigma_flat = |_: f64| 1.0;
    let mut power_integrals = Vec::new();
    for p in [2.5, 2.9] {
        power_integrals.push(kernel_power_time_integral(
            0.5 * lambda,
            0.1 * scale,
            p,
            &sigma_flat,
            &kp,
        )?);
    }
    let powers_ok = power_integrals.iter().all(|r| {
        r.value.is_finite() && (r.fitted_power - (1.0 - r.p) / 2.0).abs() < 0.05
    });
    let passed = bounds.pass && ck < 1e-6 && late < 1.0 && small_err < 1e-6 && powers_ok;
    let report = KernelReport {
        bounds,
        chapman_kolmogorov_residual: ck,
        late_time_mass: late,
        small_time_mass_error: small_err,
        power_integrals,
        passed,
    };
    if let Some(dir) = out_dir {
        fs::create_dir_all(dir)?;
        fs::write(dir.join("kernel.json"), to_json(&report)?)?;
        write_sidecar(dir)?;
    }
    Ok(report)
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string_pretty(value)
        .map_err(|e| Error::Format(format!("report serialization: {e}")))
}

/// Wall-clock info lives only here, keeping every report byte-reproducible.
fn write_sidecar(dir: &Path) -> Result<()> {
    let now = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    fs::write(dir.join("sidecar.txt"), format!("unix_time = {now}\n"))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_config() -> RunConfig {
        let mut cfg = RunConfig::parse(
            "[grid]\nnx = 16\nnt = 64\nhorizon = 0.1\n\n[run]\nensemble_size = 8\n\n[sigma]\namplitude = 0.2\n",
        )
        .unwrap();
        cfg.outputs = vec![ReportKind::Classification, ReportKind::Moments];
        cfg
    }

    #[test]
    fn single_run_completes_and_reports() {
        let cfg = small_config();
        let rep = run_single(&cfg, None).unwrap();
        assert!(matches!(rep.record.status, PathStatus::Completed));
        assert!(rep.record.classification.is_some());
        assert!(rep.passed);
    }

    #[test]
    fn provenance_round_trips() {
        let cfg = small_config();
        let rep = run_single(&cfg, None).unwrap();
        let back = RunConfig::parse(&rep.provenance.config_text).unwrap();
        assert_eq!(cfg, back);
        assert_eq!(rep.provenance.config_hash, back.hash());
    }

    #[test]
    fn ensemble_aggregates_and_nests() {
        let cfg = small_config();
        let rep = run_ensemble(&cfg, None).unwrap();
        assert_eq!(rep.ensemble_size, 8);
        assert_eq!(rep.failed, 0);
        // nesting of the n sweep
        let fr: Vec<f64> = rep.omega_m_n_fractions.iter().map(|(_, f)| *f).collect();
        for w in fr.windows(2) {
            assert!(w[1] >= w[0], "omega fractions must be nondecreasing {fr:?}");
        }
        assert!(rep.moment.is_some());
    }

    #[test]
    fn deterministic_artifacts() {
        let cfg = small_config();
        let dir1 = tempfile::tempdir().unwrap();
        let dir2 = tempfile::tempdir().unwrap();
        run_ensemble(&cfg, Some(dir1.path())).unwrap();
        run_ensemble(&cfg, Some(dir2.path())).unwrap();
        for name in ["config.txt", "ensemble.json", "ensemble.txt", "paths.csv"] {
            let a = fs::read(dir1.path().join(name)).unwrap();
            let b = fs::read(dir2.path().join(name)).unwrap();
            assert_eq!(a, b, "artifact {name} differs between reruns");
        }
    }

    #[test]
    fn ensemble_requires_two_paths() {
        let mut cfg = small_config();
        cfg.ensemble_size = 1;
        assert!(run_ensemble(&cfg, None).is_err());
    }
}
