use std::path::Path;

use stiffcal_core::optimizer::DEFAULT_SEED;
use stiffcal_core::{optimize_plan, run_trials, ComplianceVector, Plan, TrialConfig};

use crate::config::{Format, RunConfig};
use crate::error::CliError;
use crate::reference;
use crate::report::{emit, read_plan_csv, render, ReportRow, SimulationReport};
use crate::OutputArgs;

fn format_of(output: &OutputArgs, cfg: Option<&RunConfig>) -> Format {
    output.format.or_else(|| cfg.and_then(|c| c.output.format)).unwrap_or_default()
}

fn out_path<'a>(output: &'a OutputArgs, cfg: &'a RunConfig) -> Option<&'a Path> {
    output.out.as_deref().or(cfg.output.path.as_deref())
}

fn load_plan(cfg: &RunConfig, csv: Option<&Path>, command: &str) -> Result<(String, Plan), CliError> {
    if let Some(path) = csv {
        return read_plan_csv(path, cfg.force_magnitude());
    }
    match cfg.plan()? {
        Some(plan) => Ok((cfg.plan_label(), plan)),
        None => Err(CliError::Usage(format!("{command} needs a plan: add `[plan] poses_deg` to the config or pass --plan <csv>"))),
    }
}

pub fn evaluate(cfg: &RunConfig, csv: Option<&Path>) -> Result<ReportRow, CliError> {
    let (label, plan) = load_plan(cfg, csv, "evaluate")?;
    ReportRow::evaluate(&cfg.geometry()?, &plan, &cfg.test_pose()?, label)
}

pub fn cmd_evaluate(config: &Path, csv: Option<&Path>, output: &OutputArgs) -> Result<(), CliError> {
    let cfg = RunConfig::from_path(config)?;
    let row = evaluate(&cfg, csv)?;
    emit(&render(&[row], format_of(output, Some(&cfg))), out_path(output, &cfg))
}

pub struct Optimized {
    pub row: ReportRow,
    pub starts: usize,
    pub seed: u64,
    pub starts_converged: usize,
    pub best_start_index: usize,
}

pub fn optimize(cfg: &RunConfig, m: Option<usize>, starts: Option<usize>, seed: Option<u64>) -> Result<Optimized, CliError> {
    let m = m
        .or(cfg.optimizer.m)
        .ok_or_else(|| CliError::Usage("optimize needs the number of experiments: pass --m <int> or set optimizer.m".into()))?;
    if m == 0 {
        return Err(CliError::Usage("--m must be at least 1".into()));
    }
    let mut opts = cfg.optimizer_options(m);
    if let Some(s) = starts {
        if s == 0 {
            return Err(CliError::Usage("--starts must be at least 1".into()));
        }
        opts.starts = s;
    }
    if let Some(s) = seed {
        opts.seed = s;
    }
    let geom = cfg.geometry()?;
    let test = cfg.test_pose()?;
    let result = optimize_plan(&geom, &test, m, &opts)?;
    let row = ReportRow::evaluate(&geom, &result.plan, &test, format!("opt{m}"))?;
    Ok(Optimized {
        row,
        starts: opts.starts,
        seed: opts.seed,
        starts_converged: result.starts_converged,
        best_start_index: result.best_start_index,
    })
}

pub fn cmd_optimize(
    config: &Path,
    m: Option<usize>,
    starts: Option<usize>,
    seed: Option<u64>,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let cfg = RunConfig::from_path(config)?;
    let o = optimize(&cfg, m, starts, seed)?;
    let format = format_of(output, Some(&cfg));
    let mut text = String::new();
    if format == Format::Table {
        text.push_str(&format!(
            "# seed {}, {} starts, {} converged, best from start {}\n",
            o.seed, o.starts, o.starts_converged, o.best_start_index
        ));
    }
    text.push_str(&render(&[o.row], format));
    emit(&text, out_path(output, &cfg))
}

pub fn simulate(
    cfg: &RunConfig,
    csv: Option<&Path>,
    trials: Option<usize>,
    sigma: Option<f64>,
    seed: Option<u64>,
) -> Result<SimulationReport, CliError> {
    let trials = trials
        .or(cfg.simulation.trials)
        .ok_or_else(|| CliError::Usage("simulate needs a trial count: pass --trials <N> or set simulation.trials".into()))?;
    let sigma = sigma
        .or(cfg.simulation.sigma)
        .ok_or_else(|| CliError::Usage("simulate needs the noise level: pass --sigma <m> or set simulation.sigma".into()))?;
    if trials == 0 {
        return Err(CliError::Usage("--trials must be at least 1".into()));
    }
    if !(sigma.is_finite() && sigma >= 0.0) {
        return Err(CliError::Usage(format!("--sigma must be non-negative, got {sigma}")));
    }
    let seed = seed.or(cfg.simulation.seed).unwrap_or(DEFAULT_SEED);
    let (label, plan) = load_plan(cfg, csv, "simulate")?;
    let geom = cfg.geometry()?;
    let test = cfg.test_pose()?;
    let k_true = cfg.k_true();
    let f0 = plan.force_magnitude();
    let header = vec![
        format!("plan {label}: {} experiments, force magnitude {f0} N", plan.len()),
        format!("{trials} trials, seed {seed}, Gaussian noise with sigma {sigma} m per coordinate"),
        format!("k_true = ({:e}, {:e}, {:e}) rad/(N m)", k_true[0], k_true[1], k_true[2]),
        if sigma > 0.0 {
            "units: O_t in sigma^2, bias in sigma/F0, covariance in (sigma/F0)^2".to_string()
        } else {
            "units: absolute (sigma = 0)".to_string()
        },
    ];
    let cfg_trials = TrialConfig { plan, test, k_true: ComplianceVector(k_true), sigma, trials, seed };
    let stats = run_trials(&geom, &cfg_trials)?;
    let mut report = SimulationReport::new(&stats, k_true, sigma, f0, header);
    report.header.push(format!("negative compliance estimates: {}", stats.negative_estimates));
    Ok(report)
}

pub fn cmd_simulate(
    config: &Path,
    csv: Option<&Path>,
    trials: Option<usize>,
    sigma: Option<f64>,
    seed: Option<u64>,
    output: &OutputArgs,
) -> Result<(), CliError> {
    let cfg = RunConfig::from_path(config)?;
    let report = simulate(&cfg, csv, trials, sigma, seed)?;
    emit(&report.render(format_of(output, Some(&cfg))), out_path(output, &cfg))
}

pub fn cmd_reproduce_table1(tolerance_perf: f64, tolerance_dk: f64, output: &OutputArgs) -> Result<(), CliError> {
    for (name, v) in [("--tolerance-perf", tolerance_perf), ("--tolerance-dk", tolerance_dk)] {
        if !(v.is_finite() && v >= 0.0) {
            return Err(CliError::Usage(format!("{name} must be non-negative, got {v}")));
        }
    }
    let rep = reference::reproduce(tolerance_perf, tolerance_dk)?;
    let text = match format_of(output, None) {
        Format::Table => rep.render_table(),
        Format::Csv => render(&rep.all_rows(), Format::Csv),
    };
    emit(&text, output.out.as_deref())
}
