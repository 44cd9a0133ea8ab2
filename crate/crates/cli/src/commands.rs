use std::path::{Path, PathBuf};
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use serde::Serialize;

use promot::config::{ExperimentConfig, Target};
use promot::harness::{
    self, attack_campaign, run_protocol_traced, run_seed_traced, sweep, write_atomic, write_runs_csv, write_summary,
    AttackReport, InitSpec, ProtocolResult, RunRow,
};
use promot::objectives::{ackley, griewank, LandscapeObjective, Objective};
use promot::presets::{self, MethodId, Task};
use promot::verify::{self, Effort, Suite, SuiteReport};
use promot::{Kernel, Trajectory, Transform};

use crate::failure::{AbortedRun, ChecksFailed, ConfigError, RuntimeAbort};

/// `<out>/<name>`.
pub fn experiment_dir(out: &Path, cfg: &ExperimentConfig) -> PathBuf {
    out.join(&cfg.name)
}

fn write_config_copy(dir: &Path, cfg: &ExperimentConfig) -> Result<()> {
    let text = toml::to_string(cfg).context("serializing the resolved config")?;
    write_atomic(&dir.join("config.toml"), text.as_bytes())?;
    Ok(())
}

fn single(cfg: &ExperimentConfig) -> Result<(Arc<dyn Objective>, InitSpec)> {
    match cfg.objective.build().map_err(ConfigError::from)? {
        Target::Single(f) => {
            let init = cfg.init.ok_or_else(|| ConfigError::from(promot::Error::field("init", "required")))?;
            Ok((f, init))
        }
        Target::Attack { .. } => bail!(ConfigError::new("this command needs a benchmark-style objective")),
    }
}

#[derive(Serialize)]
struct RunSummary<'a> {
    name: &'a str,
    long_running: bool,
    horizon: usize,
    seeds: Vec<u64>,
    #[serde(flatten)]
    result: &'a ProtocolResult,
    #[serde(skip_serializing_if = "Option::is_none")]
    note: Option<&'static str>,
}

const GRIEWANK_NOTE: &str = "best_value is the raw objective value, reported without rescaling";

fn objective_note(cfg: &ExperimentConfig) -> Option<&'static str> {
    match &cfg.objective {
        promot::config::ObjectiveConfig::Benchmark {
            name: promot::objectives::BenchmarkKind::Griewank,
            ..
        } => Some(GRIEWANK_NOTE),
        _ => None,
    }
}

fn aborted_error(what: &str, aborted: Vec<AbortedRun>) -> Result<()> {
    if aborted.is_empty() {
        return Ok(());
    }
    Err(RuntimeAbort {
        message: format!("{} {what} aborted", aborted.len()),
        aborted,
    }
    .into())
}

/// Runs every seed and writes `trajectories/seed_<s>.csv`, `runs.csv` and
/// `summary.json` under the experiment directory.
pub fn run(cfg: &ExperimentConfig, out: &Path, include_mu: bool) -> Result<PathBuf> {
    if matches!(cfg.objective, promot::config::ObjectiveConfig::Attack { .. }) {
        return attack(cfg, out);
    }
    let method = cfg.method_spec().map_err(ConfigError::from)?;
    let (f, init) = single(cfg)?;
    let seeds = cfg.seeds();
    let (result, trajs): (ProtocolResult, Vec<Option<Trajectory>>) = if seeds.len() == 1 {
        let (o, t) = run_seed_traced(&method, f.as_ref(), &init, cfg.horizon, seeds[0]);
        let mut agg = harness::aggregate(&o.result.iter().cloned().collect::<Vec<_>>());
        agg.aborted = usize::from(o.result.is_none());
        agg.runs = 1;
        let r = ProtocolResult {
            method: method.label(),
            objective: f.name(),
            outcomes: vec![o],
            aggregate: agg,
        };
        (r, vec![t])
    } else {
        run_protocol_traced(&method, f.as_ref(), &init, cfg.horizon, &seeds).map_err(ConfigError::from)?
    };
    let dir = experiment_dir(out, cfg);
    for (seed, t) in seeds.iter().zip(&trajs) {
        if let Some(t) = t {
            t.write_csv(&dir.join("trajectories").join(format!("seed_{seed}.csv")), include_mu)?;
        }
    }
    let rows: Vec<RunRow> = result
        .outcomes
        .iter()
        .map(|o| RunRow::from_outcome(0, &result.method, o))
        .collect();
    write_runs_csv(&dir.join("runs.csv"), &rows)?;
    let summary = RunSummary {
        name: &cfg.name,
        long_running: cfg.long_running,
        horizon: cfg.horizon,
        seeds: seeds.clone(),
        result: &result,
        note: objective_note(cfg),
    };
    write_summary(&dir.join("summary.json"), "run", &summary)?;
    write_config_copy(&dir, cfg)?;
    println!("{}: {}", result.method, result.aggregate.row());
    let aborted = result
        .outcomes
        .iter()
        .filter_map(|o| {
            o.abort.as_ref().map(|r| AbortedRun {
                id: format!("seed {}", o.seed),
                reason: r.clone(),
            })
        })
        .collect();
    aborted_error("run(s)", aborted)?;
    Ok(dir)
}

#[derive(Serialize)]
struct SweepSummary<'a> {
    name: &'a str,
    horizon: usize,
    seeds: Vec<u64>,
    method: &'a str,
    objective: &'a str,
    selected: &'a harness::GridPoint,
    /// Ranked best first.
    ranking: Vec<SweepEntry<'a>>,
}

#[derive(Serialize)]
struct SweepEntry<'a> {
    config_id: usize,
    point: &'a harness::GridPoint,
    aggregate: &'a harness::Aggregate,
    abort_reason: Option<&'a str>,
}

/// Evaluates the config's sweep grid; `runs.csv` has one row per point and seed.
pub fn run_sweep(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let Some(grid) = &cfg.sweep else {
        bail!(ConfigError::from(promot::Error::field("sweep", "the sweep command needs a sweep grid")));
    };
    let method = cfg.method_spec().map_err(ConfigError::from)?;
    let (f, init) = single(cfg)?;
    let seeds = cfg.seeds();
    let result = sweep(&method, f.as_ref(), grid, &init, cfg.horizon, &seeds).map_err(ConfigError::from)?;
    let dir = experiment_dir(out, cfg);
    let mut by_id: Vec<&harness::SweepRow> = result.rows.iter().collect();
    by_id.sort_by_key(|r| r.config_id);
    let rows: Vec<RunRow> = by_id
        .iter()
        .flat_map(|r| r.outcomes.iter().map(|o| RunRow::from_outcome(r.config_id, &result.method, o)))
        .collect();
    write_runs_csv(&dir.join("runs.csv"), &rows)?;
    let summary = SweepSummary {
        name: &cfg.name,
        horizon: cfg.horizon,
        seeds,
        method: &result.method,
        objective: &result.objective,
        selected: &result.selected().point,
        ranking: result
            .rows
            .iter()
            .map(|r| SweepEntry {
                config_id: r.config_id,
                point: &r.point,
                aggregate: &r.aggregate,
                abort_reason: r.abort_reason.as_deref(),
            })
            .collect(),
    };
    write_summary(&dir.join("summary.json"), "sweep", &summary)?;
    write_config_copy(&dir, cfg)?;
    for r in result.rows.iter().take(5) {
        println!("#{:<4} {}  {:?}", r.config_id, r.aggregate.row(), r.point);
    }
    Ok(dir)
}

#[derive(Serialize)]
struct AttackSummary<'a> {
    name: &'a str,
    horizon: usize,
    seed: u64,
    kappa: f64,
    penalty: f64,
    #[serde(flatten)]
    report: &'a AttackReport,
}

/// Attacks every input of an attack config; writes `attacks.csv` and `summary.json`.
pub fn attack(cfg: &ExperimentConfig, out: &Path) -> Result<PathBuf> {
    let method = cfg.method_spec().map_err(ConfigError::from)?;
    let Target::Attack {
        classifier,
        inputs,
        kappa,
        penalty,
    } = cfg.objective.build().map_err(ConfigError::from)?
    else {
        bail!(ConfigError::from(promot::Error::field("objective.kind", "expected `attack`")));
    };
    let report = attack_campaign(&method, classifier, &inputs, kappa, penalty, cfg.horizon, cfg.seed)
        .map_err(ConfigError::from)?;
    let dir = experiment_dir(out, cfg);
    let mut w = Vec::new();
    w.extend_from_slice(b"input,target,success,first_success,linf,r2,final_margin,abort\n");
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in &report.runs {
        let line = format!(
            "{},{},{},{},{},{},{},{}\n",
            r.input,
            r.target,
            r.success,
            r.first_success.map(|t| t.to_string()).unwrap_or_default(),
            opt(r.linf),
            opt(r.r2),
            opt(r.final_margin),
            r.abort.as_deref().unwrap_or("").replace([',', '\n'], ";"),
        );
        w.extend_from_slice(line.as_bytes());
    }
    write_atomic(&dir.join("attacks.csv"), &w)?;
    let summary = AttackSummary {
        name: &cfg.name,
        horizon: cfg.horizon,
        seed: cfg.seed,
        kappa,
        penalty,
        report: &report,
    };
    write_summary(&dir.join("summary.json"), "attack", &summary)?;
    write_config_copy(&dir, cfg)?;
    let cell = |m: &Option<harness::MeanStd>| m.map(|v| v.cell()).unwrap_or_else(|| "-".into());
    println!(
        "{}: success rate {:.2} over {} inputs, linf {}, r2 {}",
        report.method,
        report.success_rate,
        report.runs.len(),
        cell(&report.linf),
        cell(&report.r2)
    );
    let aborted = report
        .runs
        .iter()
        .filter_map(|r| {
            r.abort.as_ref().map(|a| AbortedRun {
                id: format!("input {}", r.input),
                reason: a.clone(),
            })
        })
        .collect();
    aborted_error("attack(s)", aborted)?;
    Ok(dir)
}

/// The desk attack preset for `task` and `method`.
pub fn attack_preset(task: Task, method: MethodId) -> Result<ExperimentConfig> {
    if !matches!(task, Task::Cifar | Task::Vitaldb) {
        bail!(ConfigError::new(format!("`{}` is not an attack task", task.name())));
    }
    let row = presets::lookup(task, method)
        .ok_or_else(|| ConfigError::new(format!("no preset for {} / {}", task.name(), method.name())))?;
    Ok(ExperimentConfig::from_preset(row, false).map_err(ConfigError::from)?)
}

pub struct LandscapeArgs {
    pub objective: String,
    pub kernel: Kernel,
    pub transform: Transform,
    pub thetas: Vec<f64>,
    pub sigmas: Vec<f64>,
    pub lo: f64,
    pub hi: f64,
    pub points: usize,
}

/// Smoothed curves of a one-dimensional objective as CSV bytes.
pub fn landscape(a: &LandscapeArgs) -> Result<Vec<u8>> {
    if a.points == 0 {
        bail!(ConfigError::from(promot::Error::field("points", "the grid is empty")));
    }
    if !(a.lo <= a.hi) || !a.lo.is_finite() || !a.hi.is_finite() {
        bail!(ConfigError::from(promot::Error::field("lo", "needs finite lo <= hi")));
    }
    let (f, breaks): (Box<dyn Objective>, Vec<f64>) = match a.objective.as_str() {
        "landscape" => {
            let l = LandscapeObjective::standard();
            let b = l.breakpoints();
            (Box::new(l), b)
        }
        "ackley" => (Box::new(ackley(1).map_err(ConfigError::from)?), vec![0.0]),
        "griewank" => (Box::new(griewank(1).map_err(ConfigError::from)?), vec![]),
        other => bail!(ConfigError::from(promot::Error::field(
            "objective",
            format!("unknown one-dimensional objective `{other}` (landscape, ackley, griewank)")
        ))),
    };
    let grid: Vec<f64> = if a.points == 1 {
        vec![a.lo]
    } else {
        (0..a.points)
            .map(|i| a.lo + (a.hi - a.lo) * i as f64 / (a.points - 1) as f64)
            .collect()
    };
    let table = harness::landscape(f.as_ref(), &breaks, a.kernel, a.transform, &a.thetas, &a.sigmas, &grid)
        .map_err(ConfigError::from)?;
    for c in table.columns.iter().filter(|c| c.error.is_some()) {
        eprintln!(
            "{}",
            serde_json::json!({
                "warning": "quadrature_failed",
                "theta": c.theta,
                "sigma": c.sigma,
                "message": c.error,
            })
        );
    }
    Ok(table.to_csv()?)
}

/// Runs the selected suites and prints one line per check.
pub fn verify(suites: &[Suite], effort: Effort, seed: u64, json: Option<&Path>) -> Result<()> {
    let mut reports: Vec<SuiteReport> = Vec::new();
    for &s in suites {
        let r = verify::run_suite(s, effort, seed).with_context(|| format!("suite {}", s.name()))?;
        println!("== {} ({:.1}s)", s.name(), r.seconds);
        for c in &r.checks {
            println!("{c}");
        }
        reports.push(r);
    }
    if let Some(p) = json {
        write_summary(p, "verify", &reports)?;
    }
    let failed: Vec<String> = reports
        .iter()
        .flat_map(|r| r.failures().map(move |c| format!("{}: {}", r.suite.name(), c.name)))
        .collect();
    let total: usize = reports.iter().map(|r| r.checks.len()).sum();
    println!("{} of {total} checks passed", total - failed.len());
    if !failed.is_empty() {
        return Err(ChecksFailed { failed }.into());
    }
    Ok(())
}

/// File name of a shipped preset.
pub fn preset_file_name(task: Task, method: MethodId, full: bool) -> String {
    format!("{}_{}{}.toml", task.name(), method.name(), if full { "_full" } else { "" })
}

/// Every preset as `(file name, TOML text)`.
pub fn preset_files() -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for row in presets::PRESETS {
        for full in [false, true] {
            if full && row.task.init().is_none() {
                continue;
            }
            let cfg = ExperimentConfig::from_preset(row, full).map_err(ConfigError::from)?;
            let text = toml::to_string(&cfg).context("serializing preset")?;
            out.push((preset_file_name(row.task, row.method, full), text));
        }
    }
    Ok(out)
}

pub fn write_presets(dir: &Path) -> Result<usize> {
    let files = preset_files()?;
    for (name, text) in &files {
        write_atomic(&dir.join(name), text.as_bytes())?;
    }
    Ok(files.len())
}
