//! Comparison of the three fitting methods over a set of tracks.

use std::fmt::Write as _;

use rayon::prelude::*;

use crate::bernstein::BasisKind;
use crate::error::Result;
use crate::fitting::{FitMethod, FitPlan, FitReport};
use crate::tracking::TrackSet;

/// (frames, degree) pairs benchmarked by default.
pub const DEFAULT_CONFIGS: [(usize, usize); 4] = [(50, 24), (100, 49), (200, 99), (400, 199)];

pub const CSV_HEADER: &str = "frames,degree,method,mae,avg_abs_coeff,max_abs_error,condition_estimate";

#[derive(Debug, Clone, PartialEq)]
pub struct BenchmarkRow {
    pub frames: usize,
    pub degree: usize,
    pub method: FitMethod,
    /// Averaged over every tracked point.
    pub report: FitReport,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchmarkTable {
    pub rows: Vec<BenchmarkRow>,
    /// Skipped configurations and failed methods.
    pub warnings: Vec<String>,
}

pub fn run_fit_benchmark(
    tracks: &TrackSet,
    configs: &[(usize, usize)],
    lambda: f64,
) -> BenchmarkTable {
    run_fit_benchmark_in(tracks, configs, lambda, BasisKind::Bernstein)
}

pub fn run_fit_benchmark_in(
    tracks: &TrackSet,
    configs: &[(usize, usize)],
    lambda: f64,
    basis: BasisKind,
) -> BenchmarkTable {
    let mut table = BenchmarkTable::default();
    for &(frames, degree) in configs {
        if frames < 2 || frames > tracks.num_frames() {
            let msg = format!(
                "skipping ({frames}, {degree}): tracks have {} frames",
                tracks.num_frames()
            );
            log::warn!("{msg}");
            table.warnings.push(msg);
            continue;
        }
        let times: Vec<f64> = (0..frames).map(|i| i as f64 / (frames - 1) as f64).collect();
        let methods = [
            FitMethod::Interpolation,
            FitMethod::LeastSquares,
            FitMethod::Ridge(lambda),
        ];
        for method in methods {
            match bench_one(tracks, frames, &times, basis, degree, method) {
                Ok(report) => table.rows.push(BenchmarkRow {
                    frames,
                    degree,
                    method,
                    report,
                }),
                Err(e) => {
                    let msg = format!("({frames}, {degree}) {}: {e}", method.name());
                    log::warn!("{msg}");
                    table.warnings.push(msg);
                }
            }
        }
    }
    table
}

fn bench_one(
    tracks: &TrackSet,
    frames: usize,
    times: &[f64],
    basis: BasisKind,
    degree: usize,
    method: FitMethod,
) -> Result<FitReport> {
    let plan = FitPlan::new(basis, degree, method, times)?;
    let reports = tracks
        .points()
        .par_iter()
        .map(|p| {
            let positions = &p.coords[..frames];
            let traj = plan.fit(positions)?;
            Ok(plan.report(&traj, positions))
        })
        .collect::<Result<Vec<_>>>()?;
    let count = reports.len() as f64;
    // fixed-order reduction
    let mut avg = FitReport {
        mae: 0.0,
        avg_abs_coeff: 0.0,
        max_abs_error: 0.0,
        condition_estimate: plan.condition_estimate(),
    };
    for r in &reports {
        avg.mae += r.mae / count;
        avg.avg_abs_coeff += r.avg_abs_coeff / count;
        avg.max_abs_error += r.max_abs_error / count;
    }
    Ok(avg)
}

impl BenchmarkTable {
    pub fn get(&self, frames: usize, method: &str) -> Option<&FitReport> {
        self.rows
            .iter()
            .find(|r| r.frames == frames && r.method.name() == method)
            .map(|r| &r.report)
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::from(CSV_HEADER);
        out.push('\n');
        for row in &self.rows {
            let r = &row.report;
            let _ = writeln!(
                out,
                "{},{},{},{:.6e},{:.6e},{:.6e},{:.6e}",
                row.frames,
                row.degree,
                row.method.name(),
                r.mae,
                r.avg_abs_coeff,
                r.max_abs_error,
                r.condition_estimate
            );
        }
        out
    }

    /// Two metric groups (MAE, mean |coefficient|) with one column per method.
    pub fn to_markdown(&self) -> String {
        let methods = ["interpolation", "least_squares", "ridge"];
        let mut configs: Vec<(usize, usize)> = Vec::new();
        for row in &self.rows {
            if !configs.contains(&(row.frames, row.degree)) {
                configs.push((row.frames, row.degree));
            }
        }
        let mut lines = vec![
            "| frames | max degree | MAE: interpolation | MAE: least squares | MAE: ridge | avg abs coeff: interpolation | avg abs coeff: least squares | avg abs coeff: ridge |".to_string(),
            "|---:|---:|---:|---:|---:|---:|---:|---:|".to_string(),
        ];
        let cell = |frames: usize, method: &str, pick: fn(&FitReport) -> f64| {
            self.get(frames, method)
                .map(|r| format!("{:.3e}", pick(r)))
                .unwrap_or_else(|| "n/a".into())
        };
        for (frames, degree) in configs {
            let mut cols = vec![frames.to_string(), degree.to_string()];
            cols.extend(methods.iter().map(|m| cell(frames, m, |r| r.mae)));
            cols.extend(methods.iter().map(|m| cell(frames, m, |r| r.avg_abs_coeff)));
            lines.push(format!("| {} |", cols.join(" | ")));
        }
        lines.join("\n") + "\n"
    }
}
