use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::Method;
use crate::convergence::{ConvergenceReport, ReportRow};
use crate::HarnessError;

/// Column order of `report.csv`; see `docs/report-schema.md`.
pub const CSV_COLUMNS: [&str; 23] = [
    "method",
    "n",
    "seed",
    "eps",
    "status",
    "failure_stage",
    "failure_message",
    "rel_error",
    "abs_error",
    "u_norm",
    "ubar_norm",
    "corrector_l2",
    "corrector_h1",
    "source_pairing_error",
    "friction_pairing_error",
    "surface_iso_error",
    "surface_rad_error",
    "mismatch",
    "mean_mismatch",
    "wall_violation",
    "reflections",
    "converged",
    "picard_iterations",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ReportFormat {
    /// `report.csv` and `plots/*.dat`.
    Csv,
    Json,
    All,
}

fn opt<T: Display>(v: Option<T>) -> String {
    v.map_or_else(String::new, |x| x.to_string())
}

fn csv_record(row: &ReportRow, u_norm: Option<f64>) -> Vec<String> {
    let m = row.metrics.as_ref();
    let f = row.failure.as_ref();
    vec![
        row.method.as_str().into(),
        row.n.to_string(),
        row.seed.to_string(),
        row.eps.to_string(),
        if f.is_none() { "ok" } else { "failed" }.into(),
        opt(f.map(|f| &f.stage)),
        opt(f.map(|f| &f.message)),
        opt(m.and_then(|m| m.rel_error)),
        opt(m.map(|m| m.abs_error)),
        opt(u_norm),
        opt(m.map(|m| m.ubar_norm)),
        opt(m.map(|m| m.corrector_l2)),
        opt(m.map(|m| m.corrector_h1)),
        opt(m.and_then(|m| m.source_pairing_error)),
        opt(m.and_then(|m| m.friction_pairing_error)),
        opt(m.and_then(|m| m.surface_iso_error)),
        opt(m.and_then(|m| m.surface_rad_error)),
        opt(m.map(|m| m.mismatch)),
        opt(m.and_then(|m| m.mean_mismatch)),
        opt(m.and_then(|m| m.wall_violation)),
        opt(m.and_then(|m| m.reflections)),
        opt(m.map(|m| m.converged)),
        opt(m.and_then(|m| m.picard_iterations)),
    ]
}

/// CSV body; runtimes and the timestamp are left out so that it is reproducible.
pub fn to_csv(report: &ConvergenceReport) -> Result<String, HarnessError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_COLUMNS)?;
    let u_norm = report.limit.as_ref().map(|l| l.u_norm);
    for row in &report.rows {
        w.write_record(csv_record(row, u_norm))?;
    }
    let bytes = w.into_inner().map_err(|e| HarnessError::Io(e.into_error()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// `N value` lines for each plotted series, keyed by file name.
pub fn plot_series(report: &ConvergenceReport) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for method in [Method::Mor, Method::Grid] {
        let pts = report.series_for(method);
        if pts.is_empty() {
            continue;
        }
        for (name, get) in [
            ("rel_error", (|p: &crate::convergence::SeriesPoint| p.median_rel_error) as fn(&_) -> Option<f64>),
            ("abs_error", |p| p.median_abs_error),
        ] {
            let mut body = format!("# N median_{name} ({})\n", method.as_str());
            for p in &pts {
                if let Some(v) = get(p) {
                    body.push_str(&format!("{} {}\n", p.n, v));
                }
            }
            out.push((format!("{name}_{}.dat", method.as_str()), body));
        }
    }
    out
}

/// Writes the requested files under `dir` and returns their paths.
pub fn emit_report(report: &ConvergenceReport, dir: &Path, format: ReportFormat) -> Result<Vec<PathBuf>, HarnessError> {
    fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    if format != ReportFormat::Json {
        let p = dir.join("report.csv");
        fs::write(&p, to_csv(report)?)?;
        written.push(p);
        let plots = dir.join("plots");
        fs::create_dir_all(&plots)?;
        for (name, body) in plot_series(report) {
            let p = plots.join(name);
            fs::write(&p, body)?;
            written.push(p);
        }
    }
    if format != ReportFormat::Csv {
        let p = dir.join("report.json");
        fs::write(&p, serde_json::to_string_pretty(report)?)?;
        written.push(p);
    }
    Ok(written)
}

pub fn load_report(path: &Path) -> Result<ConvergenceReport, HarnessError> {
    let s = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&s)?)
}
