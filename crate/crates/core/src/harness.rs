//! Multi-seed runs, metrics, sweeps and persistence.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::baselines::{run_baseline, BaselineSpec};
use crate::error::{Error, Result};
use crate::objectives::{AttackObjective, Objective, SoftmaxClassifier};
use crate::optimizer::{self, RunOptions, Schedule, Trajectory};
use crate::kernels::Kernel;
use crate::smoothing::{Estimator, SmoothingSpec, Surrogate1d};
use crate::transforms::Transform;
use crate::{par, rng};

/// Version of the CSV/JSON layouts written here.
pub const SCHEMA_VERSION: u32 = 1;

const INIT_STREAM: u64 = 0x1a1f_0000_0000_0001;

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir)?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.to_string()))?;
    Ok(())
}

/// An optimizer and all its settings.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum MethodSpec {
    Promot {
        label: String,
        spec: SmoothingSpec,
        schedule: Schedule,
        options: RunOptions,
    },
    Baseline(BaselineSpec),
}

impl MethodSpec {
    pub fn label(&self) -> String {
        match self {
            MethodSpec::Promot { label, .. } => label.clone(),
            MethodSpec::Baseline(b) => b.method.name().to_string(),
        }
    }

    pub fn validate(&self, horizon: usize) -> Result<()> {
        match self {
            MethodSpec::Promot { spec, schedule, options, .. } => {
                spec.validate()?;
                schedule.validate(spec, horizon)?;
                if options.estimator == Estimator::LeaveOneOut && spec.batch < 2 {
                    return Err(Error::param("batch", spec.batch as f64, "batch >= 2 for the leave-one-out estimator"));
                }
                Ok(())
            }
            MethodSpec::Baseline(b) => b.validate(),
        }
    }

    pub fn run(&self, f: &dyn Objective, mu0: &[f64], horizon: usize, seed: u64) -> Result<Trajectory> {
        match self {
            MethodSpec::Promot { spec, schedule, options, .. } => {
                optimizer::run(spec, f, mu0, schedule, horizon, options, seed)
            }
            MethodSpec::Baseline(b) => run_baseline(b, f, mu0, horizon, seed),
        }
    }
}

/// Initial point `μ₀ ~ N(mean·1, std² I)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitSpec {
    pub mean: f64,
    pub std: f64,
}

impl InitSpec {
    pub fn sample(&self, dim: usize, seed: u64) -> Vec<f64> {
        let mut r = rng::stream(seed, INIT_STREAM);
        (0..dim)
            .map(|_| self.mean + self.std * r.sample::<f64, _>(StandardNormal))
            .collect()
    }
}

/// Metrics of one run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunResult {
    pub seed: u64,
    /// `min_t ‖μ_t - x*‖² / d`, the squared distance averaged over
    /// coordinates; absent when `x*` is unknown.
    pub mse: Option<f64>,
    /// First `t` attaining the minimum.
    pub hitting_time: Option<usize>,
    /// `f(μ)` at the hitting time, or the best observed value without `x*`.
    pub best_value: f64,
    pub evals: u64,
    pub wall_time_s: f64,
}

pub fn compute_metrics(traj: &Trajectory, x_star: Option<&[f64]>) -> RunResult {
    let (mse, hitting_time, best_value) = match x_star {
        Some(x) => {
            let mut best = (f64::INFINITY, 0usize);
            let dim = x.len().max(1) as f64;
            for (t, mu) in traj.mus.iter().enumerate() {
                let d: f64 = mu.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>() / dim;
                if d < best.0 {
                    best = (d, t);
                }
            }
            (Some(best.0), Some(best.1), traj.f_values[best.1])
        }
        None => (
            None,
            None,
            traj.f_values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        ),
    };
    RunResult {
        seed: traj.seed,
        mse,
        hitting_time,
        best_value,
        evals: traj.total_evals(),
        wall_time_s: 0.0,
    }
}

/// One seed's outcome: metrics or the abort reason.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOutcome {
    pub seed: u64,
    pub result: Option<RunResult>,
    pub abort: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeanStd {
    pub mean: f64,
    /// Population standard deviation.
    pub std: f64,
}

impl MeanStd {
    pub fn of(values: &[f64]) -> Option<Self> {
        if values.is_empty() {
            return None;
        }
        let mut v = values.to_vec();
        // sorting makes the sums independent of seed order
        v.sort_by(f64::total_cmp);
        let n = v.len() as f64;
        let mean = v.iter().sum::<f64>() / n;
        let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
        Some(MeanStd { mean, std: var.sqrt() })
    }

    /// `mean(std)` with two decimals.
    pub fn cell(&self) -> String {
        format!("{:.2}({:.2})", self.mean, self.std)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub runs: usize,
    pub aborted: usize,
    pub mse: Option<MeanStd>,
    pub hitting_time: Option<MeanStd>,
    pub best_value: Option<MeanStd>,
}

pub fn aggregate(results: &[RunResult]) -> Aggregate {
    let mse: Vec<f64> = results.iter().filter_map(|r| r.mse).collect();
    let ht: Vec<f64> = results.iter().filter_map(|r| r.hitting_time.map(|h| h as f64)).collect();
    let bv: Vec<f64> = results.iter().map(|r| r.best_value).collect();
    Aggregate {
        runs: results.len(),
        aborted: 0,
        mse: MeanStd::of(&mse),
        hitting_time: MeanStd::of(&ht),
        best_value: MeanStd::of(&bv),
    }
}

impl Aggregate {
    /// `mse | hitting time | best value` cells.
    pub fn row(&self) -> String {
        let c = |m: &Option<MeanStd>| m.map(|v| v.cell()).unwrap_or_else(|| "-".into());
        format!("{} | {} | {}", c(&self.mse), c(&self.hitting_time), c(&self.best_value))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolResult {
    pub method: String,
    pub objective: String,
    pub outcomes: Vec<RunOutcome>,
    pub aggregate: Aggregate,
}

impl ProtocolResult {
    pub fn results(&self) -> Vec<RunResult> {
        self.outcomes.iter().filter_map(|o| o.result.clone()).collect()
    }
}

/// Runs one seed and measures it.
pub fn run_seed(method: &MethodSpec, f: &dyn Objective, init: &InitSpec, horizon: usize, seed: u64) -> RunOutcome {
    run_seed_traced(method, f, init, horizon, seed).0
}

/// [`run_seed`] keeping the trajectory of a completed run.
pub fn run_seed_traced(
    method: &MethodSpec,
    f: &dyn Objective,
    init: &InitSpec,
    horizon: usize,
    seed: u64,
) -> (RunOutcome, Option<Trajectory>) {
    let mu0 = init.sample(f.dim(), seed);
    let start = Instant::now();
    match method.run(f, &mu0, horizon, seed) {
        Ok(traj) => {
            let mut r = compute_metrics(&traj, f.maximizer().as_deref());
            r.wall_time_s = start.elapsed().as_secs_f64();
            let o = RunOutcome {
                seed,
                result: Some(r),
                abort: None,
            };
            (o, Some(traj))
        }
        Err(e) => {
            let o = RunOutcome {
                seed,
                result: None,
                abort: Some(e.to_string()),
            };
            (o, None)
        }
    }
}

fn collect(outcomes: &[RunOutcome]) -> Aggregate {
    let ok: Vec<RunResult> = outcomes.iter().filter_map(|o| o.result.clone()).collect();
    let mut agg = aggregate(&ok);
    agg.aborted = outcomes.len() - ok.len();
    agg.runs = outcomes.len();
    agg
}

/// Runs every seed (concurrently) and aggregates.
pub fn run_protocol(
    method: &MethodSpec,
    f: &dyn Objective,
    init: &InitSpec,
    horizon: usize,
    seeds: &[u64],
) -> Result<ProtocolResult> {
    if seeds.len() < 2 {
        return Err(Error::Config("a protocol needs at least two seeds".into()));
    }
    method.validate(horizon)?;
    let outcomes = par::map_slice(seeds, |&s| run_seed(method, f, init, horizon, s));
    let aggregate = collect(&outcomes);
    Ok(ProtocolResult {
        method: method.label(),
        objective: f.name(),
        outcomes,
        aggregate,
    })
}

/// [`run_protocol`] that also returns each seed's trajectory (`None` for an
/// aborted run), in seed order.
pub fn run_protocol_traced(
    method: &MethodSpec,
    f: &dyn Objective,
    init: &InitSpec,
    horizon: usize,
    seeds: &[u64],
) -> Result<(ProtocolResult, Vec<Option<Trajectory>>)> {
    if seeds.len() < 2 {
        return Err(Error::Config("a protocol needs at least two seeds".into()));
    }
    method.validate(horizon)?;
    let (outcomes, trajs): (Vec<_>, Vec<_>) = par::map_slice(seeds, |&s| run_seed_traced(method, f, init, horizon, s))
        .into_iter()
        .unzip();
    let aggregate = collect(&outcomes);
    let result = ProtocolResult {
        method: method.label(),
        objective: f.name(),
        outcomes,
        aggregate,
    };
    Ok((result, trajs))
}

/// Candidate lists per hyperparameter; an empty list keeps the base value.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepGrid {
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub eta0: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub sigma: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub theta: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub gamma_dec: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub alpha: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beta1: Vec<f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub beta2: Vec<f64>,
}

/// One assignment from a grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eta0: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma_dec: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
}

impl SweepGrid {
    fn axes(&self) -> [&Vec<f64>; 7] {
        [
            &self.eta0,
            &self.sigma,
            &self.theta,
            &self.gamma_dec,
            &self.alpha,
            &self.beta1,
            &self.beta2,
        ]
    }

    /// Cartesian product in row-major order (last axis fastest).
    pub fn points(&self) -> Vec<GridPoint> {
        let mut out = vec![GridPoint::default()];
        for (axis, values) in self.axes().into_iter().enumerate() {
            if values.is_empty() {
                continue;
            }
            out = out
                .into_iter()
                .flat_map(|p| {
                    values.iter().map(move |&v| {
                        let mut q = p.clone();
                        *q.slot(axis) = Some(v);
                        q
                    })
                })
                .collect();
        }
        out
    }
}

impl GridPoint {
    fn slot(&mut self, axis: usize) -> &mut Option<f64> {
        match axis {
            0 => &mut self.eta0,
            1 => &mut self.sigma,
            2 => &mut self.theta,
            3 => &mut self.gamma_dec,
            4 => &mut self.alpha,
            5 => &mut self.beta1,
            _ => &mut self.beta2,
        }
    }

    /// The base method with this point's values substituted.
    pub fn apply(&self, base: &MethodSpec) -> Result<MethodSpec> {
        let mut m = base.clone();
        match &mut m {
            MethodSpec::Promot { spec, schedule, .. } => {
                for (name, v) in [
                    ("gamma_dec", self.gamma_dec),
                    ("alpha", self.alpha),
                    ("beta1", self.beta1),
                    ("beta2", self.beta2),
                ] {
                    if v.is_some() {
                        return Err(Error::Config(format!("`{name}` does not apply to this method")));
                    }
                }
                if let Some(s) = self.sigma {
                    spec.scales.iter_mut().for_each(|x| *x = s);
                }
                if let Some(t) = self.theta {
                    spec.theta = t;
                }
                if let Some(e) = self.eta0 {
                    match schedule {
                        Schedule::Poly { eta0, .. } => *eta0 = e,
                        Schedule::Constant { eta } => *eta = e,
                        _ => return Err(Error::Config("`eta0` needs a poly or constant schedule".into())),
                    }
                }
            }
            MethodSpec::Baseline(b) => {
                if self.theta.is_some() {
                    return Err(Error::Config("`theta` does not apply to this method".into()));
                }
                if let Some(v) = self.eta0 {
                    b.eta0 = v;
                }
                if let Some(v) = self.sigma {
                    b.sigma0 = v;
                }
                b.gamma_dec = self.gamma_dec.or(b.gamma_dec);
                b.alpha = self.alpha.or(b.alpha);
                b.beta1 = self.beta1.or(b.beta1);
                b.beta2 = self.beta2.or(b.beta2);
            }
        }
        Ok(m)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub config_id: usize,
    pub point: GridPoint,
    pub aggregate: Aggregate,
    pub outcomes: Vec<RunOutcome>,
    /// First abort reason, if any seed aborted.
    pub abort_reason: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub method: String,
    pub objective: String,
    /// Rows ranked best first.
    pub rows: Vec<SweepRow>,
}

impl SweepResult {
    pub fn selected(&self) -> &SweepRow {
        &self.rows[0]
    }
}

fn rank_key(row: &SweepRow) -> (bool, f64) {
    let aborted = row.aggregate.aborted > 0;
    let score = match (&row.aggregate.mse, &row.aggregate.best_value) {
        (Some(m), _) => m.mean,
        (None, Some(b)) => -b.mean,
        _ => f64::INFINITY,
    };
    (aborted, score)
}

/// Evaluates every grid point on every seed and ranks points by mean MSE,
/// ascending; points with an aborted seed go last.
pub fn sweep(
    base: &MethodSpec,
    f: &dyn Objective,
    grid: &SweepGrid,
    init: &InitSpec,
    horizon: usize,
    seeds: &[u64],
) -> Result<SweepResult> {
    if seeds.is_empty() {
        return Err(Error::Config("a sweep needs at least one seed".into()));
    }
    let points = grid.points();
    let methods: Vec<MethodSpec> = points.iter().map(|p| p.apply(base)).collect::<Result<_>>()?;
    for m in &methods {
        m.validate(horizon)?;
    }
    let n = seeds.len();
    let outcomes = par::map_indexed(methods.len() * n, |job| {
        run_seed(&methods[job / n], f, init, horizon, seeds[job % n])
    });
    let mut rows: Vec<SweepRow> = points
        .into_iter()
        .enumerate()
        .map(|(id, point)| {
            let o = outcomes[id * n..(id + 1) * n].to_vec();
            SweepRow {
                config_id: id,
                point,
                aggregate: collect(&o),
                abort_reason: o.iter().find_map(|x| x.abort.clone()),
                outcomes: o,
            }
        })
        .collect();
    rows.sort_by(|a, b| {
        let (ka, kb) = (rank_key(a), rank_key(b));
        ka.0.cmp(&kb.0)
            .then(ka.1.total_cmp(&kb.1))
            .then(a.config_id.cmp(&b.config_id))
    });
    Ok(SweepResult {
        method: base.label(),
        objective: f.name(),
        rows,
    })
}

/// One CSV row: one seed of one configuration.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunRow {
    pub config_id: usize,
    pub method: String,
    pub seed: u64,
    pub status: String,
    pub mse: Option<f64>,
    pub hitting_time: Option<usize>,
    pub best_value: Option<f64>,
    pub evals: Option<u64>,
    pub wall_time_s: Option<f64>,
    pub reason: Option<String>,
}

impl RunRow {
    pub fn from_outcome(config_id: usize, method: &str, o: &RunOutcome) -> Self {
        let r = o.result.as_ref();
        RunRow {
            config_id,
            method: method.to_string(),
            seed: o.seed,
            status: if r.is_some() { "ok".into() } else { "aborted".into() },
            mse: r.and_then(|r| r.mse),
            hitting_time: r.and_then(|r| r.hitting_time),
            best_value: r.map(|r| r.best_value),
            evals: r.map(|r| r.evals),
            wall_time_s: r.map(|r| r.wall_time_s),
            reason: o.abort.clone(),
        }
    }

    fn to_result(&self) -> Option<RunResult> {
        (self.status == "ok").then(|| RunResult {
            seed: self.seed,
            mse: self.mse,
            hitting_time: self.hitting_time,
            best_value: self.best_value.unwrap_or(f64::NAN),
            evals: self.evals.unwrap_or(0),
            wall_time_s: self.wall_time_s.unwrap_or(0.0),
        })
    }
}

pub fn runs_csv(rows: &[RunRow]) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for r in rows {
        w.serialize(r)?;
    }
    w.into_inner().map_err(|e| Error::Io(e.to_string()))
}

pub fn write_runs_csv(path: &Path, rows: &[RunRow]) -> Result<()> {
    write_atomic(path, &runs_csv(rows)?)
}

pub fn read_runs_csv(path: &Path) -> Result<Vec<RunRow>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize().map(|row| row.map_err(Error::from)).collect()
}

/// Aggregates per configuration from persisted rows.
pub fn aggregate_rows(rows: &[RunRow]) -> BTreeMap<usize, Aggregate> {
    let mut groups: BTreeMap<usize, Vec<&RunRow>> = BTreeMap::new();
    for r in rows {
        groups.entry(r.config_id).or_default().push(r);
    }
    groups
        .into_iter()
        .map(|(id, rs)| {
            let ok: Vec<RunResult> = rs.iter().filter_map(|r| r.to_result()).collect();
            let mut agg = aggregate(&ok);
            agg.runs = rs.len();
            agg.aborted = rs.len() - ok.len();
            (id, agg)
        })
        .collect()
}

/// Versioned JSON summary wrapper.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary<T> {
    pub schema_version: u32,
    pub kind: String,
    pub body: T,
}

pub fn write_summary<T: Serialize>(path: &Path, kind: &str, body: &T) -> Result<()> {
    let s = Summary {
        schema_version: SCHEMA_VERSION,
        kind: kind.to_string(),
        body,
    };
    let mut bytes = serde_json::to_vec_pretty(&s)?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Outcome of attacking one clean input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackRun {
    pub input: usize,
    pub target: usize,
    pub success: bool,
    /// First step whose iterate is classified as the target.
    pub first_success: Option<usize>,
    /// `‖μ‖∞` of the first successful perturbation.
    pub linf: Option<f64>,
    /// `R²(x, x + μ) = 1 - ‖μ‖² / Σ(x_i - x̄)²` of the first successful perturbation.
    pub r2: Option<f64>,
    pub final_margin: Option<f64>,
    pub abort: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackReport {
    pub method: String,
    pub runs: Vec<AttackRun>,
    pub success_rate: f64,
    pub linf: Option<MeanStd>,
    pub r2: Option<MeanStd>,
}

/// Attacks every input from `μ = 0`; input `i` runs with seed
/// `derive(seed, i)`. An input counts as a success as soon as one iterate
/// reaches the target class.
pub fn attack_campaign(
    method: &MethodSpec,
    classifier: Arc<SoftmaxClassifier>,
    inputs: &[Vec<f64>],
    kappa: f64,
    penalty: f64,
    horizon: usize,
    seed: u64,
) -> Result<AttackReport> {
    method.validate(horizon)?;
    if inputs.is_empty() {
        return Err(Error::Config("attack needs at least one input".into()));
    }
    let objectives = inputs
        .iter()
        .map(|x| AttackObjective::new(classifier.clone(), x.clone(), kappa, penalty))
        .collect::<Result<Vec<_>>>()?;
    let idx: Vec<usize> = (0..inputs.len()).collect();
    let runs = par::map_slice(&idx, |&i| {
        let f = &objectives[i];
        let d = f.dim();
        let mut run = AttackRun {
            input: i,
            target: f.target(),
            success: false,
            first_success: None,
            linf: None,
            r2: None,
            final_margin: None,
            abort: None,
        };
        match method.run(f, &vec![0.0; d], horizon, rng::derive(seed, i as u64)) {
            Ok(traj) => {
                run.final_margin = Some(f.margin(traj.final_mu()));
                if let Some(t) = traj.mus.iter().position(|m| f.success(m)) {
                    let mu = &traj.mus[t];
                    let x = f.input();
                    let mean = x.iter().sum::<f64>() / d as f64;
                    let spread: f64 = x.iter().map(|v| (v - mean).powi(2)).sum();
                    let sq: f64 = mu.iter().map(|v| v * v).sum();
                    run.success = true;
                    run.first_success = Some(t);
                    run.linf = Some(mu.iter().fold(0.0f64, |a, v| a.max(v.abs())));
                    run.r2 = Some(1.0 - sq / spread);
                }
            }
            Err(e) => run.abort = Some(e.to_string()),
        }
        run
    });
    let wins: Vec<&AttackRun> = runs.iter().filter(|r| r.success).collect();
    let linf: Vec<f64> = wins.iter().filter_map(|r| r.linf).collect();
    let r2: Vec<f64> = wins.iter().filter_map(|r| r.r2).collect();
    Ok(AttackReport {
        method: method.label(),
        success_rate: wins.len() as f64 / runs.len() as f64,
        linf: MeanStd::of(&linf),
        r2: MeanStd::of(&r2),
        runs,
    })
}

/// Smoothed one-dimensional curves on a grid, one column per `(θ, σ)`.
/// Values are in units of `g(θ, f*)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandscapeTable {
    pub grid: Vec<f64>,
    pub raw: Vec<f64>,
    pub columns: Vec<LandscapeColumn>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LandscapeColumn {
    pub theta: f64,
    pub sigma: f64,
    /// Empty when quadrature failed; see `error`.
    pub values: Vec<f64>,
    pub error: Option<String>,
}

pub fn landscape(
    f: &dyn Objective,
    breaks: &[f64],
    kernel: Kernel,
    transform: Transform,
    thetas: &[f64],
    sigmas: &[f64],
    grid: &[f64],
) -> Result<LandscapeTable> {
    if grid.is_empty() {
        return Err(Error::Config("landscape grid is empty".into()));
    }
    if thetas.is_empty() || sigmas.is_empty() {
        return Err(Error::Config("landscape needs at least one theta and one sigma".into()));
    }
    if f.dim() != 1 {
        return Err(Error::Dimension {
            expected: 1,
            actual: f.dim(),
        });
    }
    kernel.validate()?;
    transform.validate()?;
    if let Some(&t) = thetas.iter().find(|t| !(**t > 0.0 && t.is_finite())) {
        return Err(Error::param("theta", t, "theta > 0"));
    }
    if let Some(&s) = sigmas.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
        return Err(Error::param("sigma", s, "sigma > 0"));
    }
    let pairs: Vec<(f64, f64)> = thetas.iter().flat_map(|&t| sigmas.iter().map(move |&s| (t, s))).collect();
    let columns = par::map_slice(&pairs, |&(theta, sigma)| {
        let values = Surrogate1d::new(f, kernel, transform, theta, sigma, breaks.to_vec())
            .and_then(|s| grid.iter().map(|&m| s.value(m)).collect::<Result<Vec<f64>>>());
        match values {
            Ok(values) => LandscapeColumn {
                theta,
                sigma,
                values,
                error: None,
            },
            Err(e) => LandscapeColumn {
                theta,
                sigma,
                values: Vec::new(),
                error: Some(e.to_string()),
            },
        }
    });
    Ok(LandscapeTable {
        grid: grid.to_vec(),
        raw: grid.iter().map(|&x| f.evaluate(&[x])).collect(),
        columns,
    })
}

impl LandscapeTable {
    /// `mu,f,theta=..;sigma=..,...`; failed columns are left blank.
    pub fn to_csv(&self) -> Result<Vec<u8>> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["mu".to_string(), "f".to_string()];
        header.extend(self.columns.iter().map(|c| format!("theta={};sigma={}", c.theta, c.sigma)));
        w.write_record(&header)?;
        for (i, x) in self.grid.iter().enumerate() {
            let mut rec = vec![x.to_string(), self.raw[i].to_string()];
            rec.extend(self.columns.iter().map(|c| c.values.get(i).map(|v| v.to_string()).unwrap_or_default()));
            w.write_record(&rec)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }
}
