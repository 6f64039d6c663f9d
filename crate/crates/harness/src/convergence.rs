//! The end-to-end experiment: clouds, perforated solves and the Brinkman
//! limit, compared row by row.

use std::sync::Arc;
use std::time::Instant;

use brinkman_core::cloud::{generate_cloud_with, ParticleCloud};
use brinkman_core::correctors::{
    brinkman_source_pairing, corrector_h1_seminorm, corrector_l2_norm, friction_pairing, CorrectorField, FrictionOptions,
};
use brinkman_core::fields::{Forcing, MomentField, TestField, VectorField};
use brinkman_core::grid::{
    solve_brinkman, solve_perforated, solve_stokes_with_boundary, BrinkmanProblem, GridLayout, SolverConfig,
    StaggeredField,
};
use brinkman_core::measure_limits::pair_surface_measures;
use brinkman_core::quadrature::SphereRule;
use brinkman_core::reflections::{solve_mor, Background, MorOptions, SharedField};
use brinkman_core::{Error, Matrix, Vector};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::config::{ExperimentConfig, Method};
use crate::HarnessError;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Failure {
    /// `limit`, `cloud`, `solve` or `metrics`.
    pub stage: String,
    pub message: String,
}

/// Everything measured for one `(method, N, seed)`; `None` where undefined.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct RowMetrics {
    pub abs_error: f64,
    pub rel_error: Option<f64>,
    pub ubar_norm: f64,
    pub corrector_l2: f64,
    pub corrector_h1: f64,
    pub source_pairing_error: Option<f64>,
    pub friction_pairing_error: Option<f64>,
    pub surface_iso_error: Option<f64>,
    pub surface_rad_error: Option<f64>,
    pub mismatch: f64,
    pub mean_mismatch: Option<f64>,
    pub wall_violation: Option<f64>,
    pub reflections: Option<usize>,
    pub converged: bool,
    pub picard_iterations: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub method: Method,
    pub n: usize,
    pub seed: u64,
    pub eps: f64,
    pub metrics: Option<RowMetrics>,
    pub failure: Option<Failure>,
    pub runtime_s: f64,
}

impl ReportRow {
    pub fn is_ok(&self) -> bool {
        self.failure.is_none()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LimitSummary {
    pub nu: f64,
    pub nu0: f64,
    pub u_norm: f64,
    pub picard_iterations: usize,
    pub runtime_s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesPoint {
    pub method: Method,
    pub n: usize,
    /// Median over the seeds that completed.
    pub median_rel_error: Option<f64>,
    pub median_abs_error: Option<f64>,
    pub rows_ok: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub config_hash: String,
    pub config: ExperimentConfig,
    pub harness_version: String,
    pub core_version: String,
    pub workers: usize,
    /// Seconds since the Unix epoch at assembly.
    pub created_unix_s: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceReport {
    pub metadata: Metadata,
    pub limit: Option<LimitSummary>,
    pub rows: Vec<ReportRow>,
    pub series: Vec<SeriesPoint>,
    /// Least-squares slope of `log median_rel_error` against `log N`, per method.
    pub fitted_slopes: Vec<(Method, f64)>,
}

impl ConvergenceReport {
    /// A report without rows, for the given configuration.
    pub fn empty(config: &ExperimentConfig) -> Self {
        assemble(config, None, Vec::new(), 1)
    }

    pub fn series_for(&self, method: Method) -> Vec<&SeriesPoint> {
        self.series.iter().filter(|p| p.method == method).collect()
    }
}

pub fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    Some(if v.len() % 2 == 1 { v[m] } else { 0.5 * (v[m - 1] + v[m]) })
}

fn fit_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let (mx, my) = points.iter().fold((0.0, 0.0), |a, p| (a.0 + p.0 / n, a.1 + p.1 / n));
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Worker budget from `BLL_WORKERS`, defaulting to the available cores.
pub fn workers_from_env() -> Result<usize, HarnessError> {
    match std::env::var("BLL_WORKERS") {
        Ok(s) => match s.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(n),
            _ => Err(HarnessError::Config(format!("BLL_WORKERS must be a positive integer, got '{s}'"))),
        },
        Err(_) => Ok(std::thread::available_parallelism().map_or(1, |n| n.get())),
    }
}

pub fn run_convergence(config: &ExperimentConfig) -> Result<ConvergenceReport, HarnessError> {
    run_convergence_with(config, workers_from_env()?)
}

/// Test fields for the pairing columns.
fn pairing_w() -> TestField {
    TestField::PolyBump {
        value: Vector::new(0.3, 0.1, 1.0),
        linear: Matrix::from_rows(Vector::new(0.2, 0.0, 0.3), Vector::new(0.1, -0.3, 0.0), Vector::new(0.6, 0.2, 0.1)),
        center: Vector::splat(1.25),
        radius: 1.7,
    }
}

fn pairing_phi() -> TestField {
    TestField::PolyBump {
        value: Vector::new(0.5, 1.0, 0.2),
        linear: Matrix::from_rows(Vector::new(0.1, 0.0, 0.3), Vector::new(0.0, 0.2, 0.0), Vector::new(0.4, 0.0, -0.1)),
        center: Vector::splat(1.25),
        radius: 1.7,
    }
}

struct Context {
    layout: GridLayout,
    moments: MomentField,
    forcing: Forcing,
    nu: f64,
    u: StaggeredField,
    u_norm: f64,
    /// Plain Stokes solution of `g`, the fixed background when walls are not corrected.
    free_background: Option<StaggeredField>,
    solver: SolverConfig,
}

pub fn run_convergence_with(config: &ExperimentConfig, workers: usize) -> Result<ConvergenceReport, HarnessError> {
    config.validate()?;
    let nu = config.viscosity()?;
    let layout = config.limit_layout()?;
    let t = &config.tolerances;
    let solver = SolverConfig { h: layout.h, tolerance: t.grid, linear_tolerance: t.linear, ..SolverConfig::default() };
    let moments = config.moments();
    let forcing = config.forcing();
    let mut cases = Vec::new();
    for (method, n) in config.cases() {
        for &seed in &config.seeds {
            cases.push((method, n, seed));
        }
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| HarnessError::Config(format!("worker pool: {e}")))?;

    let start = Instant::now();
    let problem = BrinkmanProblem { moments, g: forcing, nu, advection: config.advection };
    let limit = pool.install(|| solve_brinkman(&problem, &solver));
    let limit = match limit {
        Ok(s) => s,
        Err(e) => {
            let rows = cases
                .into_iter()
                .map(|(method, n, seed)| ReportRow {
                    method,
                    n,
                    seed,
                    eps: 1.0 / n as f64,
                    metrics: None,
                    failure: Some(Failure { stage: "limit".into(), message: e.to_string() }),
                    runtime_s: 0.0,
                })
                .collect();
            return Ok(assemble(config, None, rows, workers));
        }
    };
    let free_background = if config.wall_correction || config.solver == crate::config::SolverChoice::Grid {
        None
    } else {
        let zero = StaggeredField::zeros(layout);
        Some(pool.install(|| solve_stokes_with_boundary(layout, nu, &forcing, &zero, None, &solver))?.0)
    };
    let summary = LimitSummary {
        nu,
        nu0: config.nu0()?,
        u_norm: limit.field.l2_norm(),
        picard_iterations: limit.picard_history.len(),
        runtime_s: start.elapsed().as_secs_f64(),
    };
    let ctx = Context { layout, moments, forcing, nu, u_norm: summary.u_norm, u: limit.field, free_background, solver };
    let mut rows: Vec<ReportRow> =
        pool.install(|| cases.par_iter().map(|&(method, n, seed)| run_row(config, &ctx, method, n, seed)).collect());
    rows.sort_by_key(|r| (r.method, r.n, r.seed));
    Ok(assemble(config, Some(summary), rows, workers))
}

fn assemble(config: &ExperimentConfig, limit: Option<LimitSummary>, rows: Vec<ReportRow>, workers: usize) -> ConvergenceReport {
    let mut series = Vec::new();
    let mut fitted_slopes = Vec::new();
    for method in [Method::Mor, Method::Grid] {
        let mut ns: Vec<usize> = rows.iter().filter(|r| r.method == method).map(|r| r.n).collect();
        ns.dedup();
        let mut pts = Vec::new();
        for n in ns {
            let ok: Vec<&RowMetrics> =
                rows.iter().filter(|r| r.method == method && r.n == n).filter_map(|r| r.metrics.as_ref()).collect();
            let rel = median(ok.iter().filter_map(|m| m.rel_error).collect());
            if let Some(e) = rel.filter(|&e| e > 0.0) {
                pts.push(((n as f64).ln(), e.ln()));
            }
            series.push(SeriesPoint {
                method,
                n,
                median_rel_error: rel,
                median_abs_error: median(ok.iter().map(|m| m.abs_error).collect()),
                rows_ok: ok.len(),
            });
        }
        if let Some(s) = fit_slope(&pts) {
            fitted_slopes.push((method, s));
        }
    }
    let created_unix_s =
        std::time::SystemTime::now().duration_since(std::time::UNIX_EPOCH).map_or(0, |d| d.as_secs());
    ConvergenceReport {
        metadata: Metadata {
            config_hash: config.hash(),
            config: config.clone(),
            harness_version: env!("CARGO_PKG_VERSION").into(),
            core_version: brinkman_core::VERSION.into(),
            workers,
            created_unix_s,
        },
        limit,
        rows,
        series,
        fitted_slopes,
    }
}

fn run_row(config: &ExperimentConfig, ctx: &Context, method: Method, n: usize, seed: u64) -> ReportRow {
    let start = Instant::now();
    let eps = 1.0 / n as f64;
    let (metrics, failure) = match row_metrics(config, ctx, method, n, seed) {
        Ok(m) => (Some(m), None),
        Err((stage, e)) => (None, Some(Failure { stage: stage.into(), message: e.to_string() })),
    };
    ReportRow { method, n, seed, eps, metrics, failure, runtime_s: start.elapsed().as_secs_f64() }
}

fn make_cloud(config: &ExperimentConfig, moments: &MomentField, n: usize, seed: u64) -> brinkman_core::Result<ParticleCloud> {
    if moments.is_zero() {
        let mut c = ParticleCloud::empty(config.domain);
        c.eps = 1.0 / n as f64;
        return Ok(c);
    }
    generate_cloud_with(n, config.domain, moments, &config.generator(), seed)
}

fn relative(value: f64, limit: Option<f64>) -> Option<f64> {
    limit.filter(|l| *l != 0.0).map(|l| (value - l).abs() / l.abs())
}

/// Penalized-grid spacing: the largest `side/k` not above `ε/4` on the shortest side.
fn perforated_h(config: &ExperimentConfig, eps: f64) -> f64 {
    let s = config.domain.sides;
    let side = s.x.min(s.y).min(s.z);
    side / (4.0 * side / eps - 1e-9).ceil()
}

fn row_metrics(
    config: &ExperimentConfig,
    ctx: &Context,
    method: Method,
    n: usize,
    seed: u64,
) -> Result<RowMetrics, (&'static str, Error)> {
    let cloud = make_cloud(config, &ctx.moments, n, seed).map_err(|e| ("cloud", e))?;
    let t = &config.tolerances;
    let mut m = RowMetrics::default();
    let ubar = match method {
        Method::Mor => {
            let opts = MorOptions {
                tol: t.mor,
                max_reflections: t.max_reflections,
                nu: ctx.nu,
                advection: config.advection,
                grid: ctx.solver,
                require_mean_field: true,
            };
            let (forcing, background): (SharedField, _) = (Arc::new(ctx.forcing), ctx.free_background.clone());
            let bg = match background {
                None => Background::WallCorrected { g: forcing },
                Some(f) => Background::Fixed(Arc::new(f)),
            };
            let sol = solve_mor(&cloud, bg, &opts).map_err(|e| ("solve", e))?;
            m.mismatch = sol.mismatch;
            m.mean_mismatch = Some(sol.mean_mismatch);
            m.wall_violation = Some(sol.wall_violation);
            m.reflections = Some(sol.reflections);
            m.converged = sol.converged;
            m.picard_iterations = config.advection.then_some(sol.picard_history.len());
            StaggeredField::sample(ctx.layout, &sol)
        }
        Method::Grid => {
            let cfg = SolverConfig { h: perforated_h(config, cloud.eps), ..ctx.solver };
            let sol = solve_perforated(&cloud, &ctx.forcing, &cfg).map_err(|e| ("solve", e))?;
            m.mismatch = sol.mismatch;
            m.converged = true;
            StaggeredField::sample(ctx.layout, &sol.extended)
        }
    };
    m.ubar_norm = ubar.l2_norm();
    m.abs_error = ubar.difference(&ctx.u).l2_norm();
    m.rel_error = (ctx.u_norm > 0.0).then(|| m.abs_error / ctx.u_norm);
    if !cloud.is_empty() {
        let a = CorrectorField::a(&cloud).map_err(|e| ("metrics", e))?;
        m.corrector_l2 = corrector_l2_norm(&a);
        m.corrector_h1 = corrector_h1_seminorm(&a);
        let w = pairing_w();
        let s = brinkman_source_pairing(&cloud, &w, Some(&ctx.moments)).map_err(|e| ("metrics", e))?;
        m.source_pairing_error = relative(s.pairing, s.limit);
        let f = friction_pairing(&cloud, &ctx.u, &w, Some(&ctx.moments), &FrictionOptions::default())
            .map_err(|e| ("metrics", e))?;
        m.friction_pairing_error = relative(f.pairing, f.limit);
        let g = ctx.forcing;
        let p = pair_surface_measures(&cloud, &|x: Vector| g.eval(x), &pairing_phi(), Some(&ctx.moments), &SphereRule::default_product());
        m.surface_iso_error = relative(p.isotropic, p.isotropic_limit);
        m.surface_rad_error = relative(p.radial, p.radial_limit);
    }
    Ok(m)
}
