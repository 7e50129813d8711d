//! Report rows and their table / CSV renderings.

use std::fmt::Write as _;
use std::path::Path;

use stiffcal_core::identification::covariance;
use stiffcal_core::{test_pose_criterion, ExperimentPlan, ExperimentPose, Geometry, NoiseModel, Plan, Stats, Test};

use crate::config::Format;
use crate::error::{io_error, CliError};

pub const CSV_HEADER: [&str; 8] = ["label", "perf_sigma2", "q2_deg", "q3_deg", "alpha_deg", "dk1_sigma", "dk2_sigma", "dk3_sigma"];

/// One plan: criterion in units of σ², configurations `(q2, q3, α)` in
/// degrees, accuracies in units of σ/F0.
#[derive(Debug, Clone, PartialEq)]
pub struct ReportRow {
    pub label: String,
    pub performance: f64,
    pub configurations: Vec<[f64; 3]>,
    pub delta_k: [f64; 3],
}

impl ReportRow {
    pub fn evaluate(geom: &Geometry, plan: &Plan, test: &Test, label: impl Into<String>) -> Result<Self, CliError> {
        let cov = covariance(geom, plan, &NoiseModel::new(1.0)?)?;
        let performance = test_pose_criterion(geom, plan, test, 1.0)?;
        let f0 = plan.force_magnitude();
        Ok(Self {
            label: label.into(),
            performance,
            configurations: plan.poses().iter().map(|p| p.to_degrees()).collect(),
            delta_k: cov.std_devs().map(|s| s * f0),
        })
    }
}

pub fn render(rows: &[ReportRow], format: Format) -> String {
    match format {
        Format::Table => render_table(rows),
        Format::Csv => render_csv(rows),
    }
}

pub fn render_table(rows: &[ReportRow]) -> String {
    let width = rows.iter().map(|r| r.label.chars().count()).max().unwrap_or(0).max(5);
    let mut out = String::new();
    let _ = writeln!(
        out,
        "{:<width$}  {:>9}  {:>8} {:>8} {:>8}  {:>7} {:>7} {:>7}",
        "label", "perf[σ²]", "q2[°]", "q3[°]", "α[°]", "δk1[σ]", "δk2[σ]", "δk3[σ]"
    );
    for r in rows {
        for (i, c) in r.configurations.iter().enumerate() {
            if i == 0 {
                let _ = writeln!(
                    out,
                    "{:<width$}  {:>9.4}  {:>8.2} {:>8.2} {:>8.2}  {:>7.4} {:>7.4} {:>7.4}",
                    r.label, r.performance, c[0], c[1], c[2], r.delta_k[0], r.delta_k[1], r.delta_k[2]
                );
            } else {
                let _ = writeln!(out, "{:<width$}  {:>9}  {:>8.2} {:>8.2} {:>8.2}", "", "", c[0], c[1], c[2]);
            }
        }
    }
    out
}

/// Shortest representation that parses back to the same `f64`.
fn num(x: f64) -> String {
    format!("{x:?}")
}

/// CSV, one line per pose.
pub fn render_csv(rows: &[ReportRow]) -> String {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(CSV_HEADER).expect("in-memory write");
    for r in rows {
        for c in &r.configurations {
            let fields = [
                r.label.clone(),
                num(r.performance),
                num(c[0]),
                num(c[1]),
                num(c[2]),
                num(r.delta_k[0]),
                num(r.delta_k[1]),
                num(r.delta_k[2]),
            ];
            w.write_record(&fields).expect("in-memory write");
        }
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

/// Reads the poses of a single-plan CSV report (as written by `optimize`).
pub fn read_plan_csv(path: &Path, force_magnitude: f64) -> Result<(String, Plan), CliError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    let headers = reader.headers().map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?.clone();
    let column = |name: &str| {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| CliError::Config(format!("{}: missing column `{name}`", path.display())))
    };
    let (il, i2, i3, ia) = (column("label")?, column("q2_deg")?, column("q3_deg")?, column("alpha_deg")?);

    let mut label: Option<String> = None;
    let mut poses = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record.map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        let num = |i: usize, name: &str| -> Result<f64, CliError> {
            record[i].trim().parse::<f64>().map_err(|_| {
                CliError::Config(format!("{}: row {}: `{name}` is not a number: {:?}", path.display(), line + 1, &record[i]))
            })
        };
        match &label {
            None => label = Some(record[il].to_string()),
            Some(l) if l != &record[il] => {
                return Err(CliError::Config(format!(
                    "{}: several plans in one file (`{l}`, `{}`); keep one",
                    path.display(),
                    &record[il]
                )))
            }
            _ => {}
        }
        poses.push(ExperimentPose::from_degrees(num(i2, "q2_deg")?, num(i3, "q3_deg")?, num(ia, "alpha_deg")?));
    }
    let label = label.ok_or_else(|| CliError::Config(format!("{}: no poses", path.display())))?;
    let plan = ExperimentPlan::new(poses, force_magnitude).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    Ok((label, plan))
}

pub fn emit(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|e| io_error(&format!("cannot write {}", path.display()), e)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Empirical versus analytic statistics, one line per quantity.
///
/// With `σ > 0` the criterion is reported in units of σ², compliance bias in
/// σ/F0 and covariance entries in (σ/F0)²; with `σ = 0` values are absolute.
pub struct SimulationReport {
    pub header: Vec<String>,
    pub lines: Vec<SimLine>,
}

pub struct SimLine {
    pub quantity: String,
    pub empirical: f64,
    pub std_error: f64,
    pub analytic: f64,
}

impl SimLine {
    /// Deviation from the analytic value in standard errors.
    pub fn z(&self) -> f64 {
        let d = self.empirical - self.analytic;
        if d == 0.0 {
            0.0
        } else {
            d / self.std_error
        }
    }
}

impl SimulationReport {
    pub fn new(stats: &Stats, k_true: [f64; 3], sigma: f64, force_magnitude: f64, header: Vec<String>) -> Self {
        let (ot_scale, k_scale) = if sigma > 0.0 { (1.0 / (sigma * sigma), force_magnitude / sigma) } else { (1.0, 1.0) };
        let cov_scale = k_scale * k_scale;
        let mut lines = vec![SimLine {
            quantity: if sigma > 0.0 { "O_t/sigma^2".into() } else { "O_t".into() },
            empirical: stats.empirical_ot * ot_scale,
            std_error: stats.ot_std_error * ot_scale,
            analytic: stats.analytic_ot * ot_scale,
        }];
        for j in 0..3 {
            lines.push(SimLine {
                quantity: format!("bias_k{}", j + 1),
                empirical: (stats.mean_k.0[j] - k_true[j]) * k_scale,
                std_error: stats.mean_k_std_error[j] * k_scale,
                analytic: 0.0,
            });
        }
        for i in 0..3 {
            for j in i..3 {
                lines.push(SimLine {
                    quantity: format!("cov_k{}k{}", i + 1, j + 1),
                    empirical: stats.empirical_cov.0[(i, j)] * cov_scale,
                    std_error: stats.cov_std_error[(i, j)] * cov_scale,
                    analytic: stats.analytic_cov.0[(i, j)] * cov_scale,
                });
            }
        }
        Self { header, lines }
    }

    pub fn render(&self, format: Format) -> String {
        let mut out = String::new();
        match format {
            Format::Table => {
                for h in &self.header {
                    let _ = writeln!(out, "# {h}");
                }
                let _ = writeln!(out, "{:<12} {:>14} {:>12} {:>14} {:>8}", "quantity", "empirical", "std_error", "analytic", "z");
                for l in &self.lines {
                    let _ = writeln!(
                        out,
                        "{:<12} {:>14.6e} {:>12.3e} {:>14.6e} {:>8.2}",
                        l.quantity,
                        l.empirical,
                        l.std_error,
                        l.analytic,
                        l.z()
                    );
                }
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(Vec::new());
                w.write_record(["quantity", "empirical", "std_error", "analytic"]).expect("in-memory write");
                for l in &self.lines {
                    w.write_record([l.quantity.clone(), num(l.empirical), num(l.std_error), num(l.analytic)])
                        .expect("in-memory write");
                }
                out = String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output");
            }
        }
        out
    }
}
