//! Declarative experiment files.
//!
//! One file describes one experiment: the objective, the method with its
//! hyperparameters, the horizon and seeds, and optionally a sweep grid.
//! Validation happens before anything runs and names the offending field.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::baselines::BaselineSpec;
use crate::error::{Error, Result};
use crate::harness::{InitSpec, MethodSpec, SweepGrid};
use crate::kernels::Kernel;
use crate::objectives::{
    sample_inputs, BenchmarkKind, DomainBox, ExternalObjective, LandscapeObjective, Objective, SoftmaxClassifier,
    DEFAULT_CLASSIFIER_SEED,
};
use crate::optimizer::{RunOptions, Schedule, StepNorm};
use crate::presets::{self, MethodId, PresetRow, Task};
use crate::smoothing::{default_ridge, Estimator, Scaling, SmoothingSpec};
use crate::transforms::Transform;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
    /// Marks presets that take hours rather than minutes.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub long_running: bool,
    /// Number of optimizer steps `T`.
    pub horizon: usize,
    /// First seed; runs use `seed, seed + 1, ...`.
    #[serde(default)]
    pub seed: u64,
    pub runs: usize,
    pub objective: ObjectiveConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub init: Option<InitSpec>,
    pub method: MethodConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepGrid>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub out_dir: Option<PathBuf>,
}

fn default_classes() -> usize {
    presets::ATTACK_CLASSES
}
fn default_inputs() -> usize {
    presets::ATTACK_INPUTS
}
fn default_penalty() -> f64 {
    presets::ATTACK_PENALTY
}
fn default_classifier_seed() -> u64 {
    DEFAULT_CLASSIFIER_SEED
}
fn default_timeout_ms() -> u64 {
    10_000
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ObjectiveConfig {
    Benchmark {
        name: BenchmarkKind,
        dim: usize,
        /// `[lo, hi]` per coordinate; the function's standard box if absent.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        bounds: Option<[f64; 2]>,
    },
    Landscape {},
    /// Margin attack on the built-in synthetic classifier.
    Attack {
        dim: usize,
        #[serde(default = "default_classes")]
        classes: usize,
        #[serde(default)]
        kappa: f64,
        #[serde(default = "default_penalty")]
        penalty: f64,
        #[serde(default = "default_inputs")]
        inputs: usize,
        #[serde(default)]
        input_seed: u64,
        #[serde(default = "default_classifier_seed")]
        classifier_seed: u64,
    },
    /// Subprocess speaking the one-vector-in, one-value-out line protocol.
    External {
        program: String,
        #[serde(default)]
        args: Vec<String>,
        lo: Vec<f64>,
        hi: Vec<f64>,
        #[serde(default = "default_timeout_ms")]
        timeout_ms: u64,
    },
}

/// Smoothing scale: one value for every coordinate or one per coordinate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Sigma {
    Isotropic(f64),
    PerCoordinate(Vec<f64>),
}

impl Sigma {
    fn scales(&self, dim: usize) -> Vec<f64> {
        match self {
            Sigma::Isotropic(s) => vec![*s; dim],
            Sigma::PerCoordinate(v) => v.clone(),
        }
    }

    fn first(&self) -> f64 {
        match self {
            Sigma::Isotropic(s) => *s,
            Sigma::PerCoordinate(v) => v.first().copied().unwrap_or(f64::NAN),
        }
    }
}

/// `{ family = "...", theta = ..., c = ..., beta = ..., alpha = ... }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TransformTable", into = "TransformTable")]
pub struct TransformConfig {
    pub theta: f64,
    pub shape: Transform,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformTable {
    family: String,
    theta: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
}

impl TryFrom<TransformTable> for TransformConfig {
    type Error = String;

    fn try_from(t: TransformTable) -> std::result::Result<Self, String> {
        Ok(TransformConfig {
            theta: t.theta,
            shape: Transform::from_parts(&t.family, t.c, t.alpha, t.beta)?,
        })
    }
}

impl From<TransformConfig> for TransformTable {
    fn from(t: TransformConfig) -> Self {
        let (c, alpha, beta) = t.shape.parts();
        TransformTable {
            family: t.shape.family().to_string(),
            theta: t.theta,
            c,
            alpha,
            beta,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ScheduleConfig {
    /// `η_t = η₀`.
    Constant {},
    /// `η_t = η₀ (t+1)^{-(1/2+γ)}`.
    Poly {
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    IsotropicPoly {
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    AnisotropicPoly {
        #[serde(default = "default_gamma")]
        gamma: f64,
    },
    Table {
        etas: Vec<f64>,
    },
}

fn default_gamma() -> f64 {
    crate::optimizer::DEFAULT_GAMMA
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodConfig {
    pub id: MethodId,
    /// Initial (or constant) step size; unused by the theory schedules.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eta0: Option<f64>,
    pub sigma: Sigma,
    pub batch: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kernel: Option<Kernel>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub transform: Option<TransformConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ridge: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scaling: Option<Scaling>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub step_norm: Option<StepNorm>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub schedule: Option<ScheduleConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_dec: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
}

/// The objective side of a validated config.
pub enum Target {
    Single(Arc<dyn Objective>),
    Attack {
        classifier: Arc<SoftmaxClassifier>,
        inputs: Vec<Vec<f64>>,
        kappa: f64,
        penalty: f64,
    },
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::field(path, format!("must be a finite positive number, got {v}")))
    }
}

fn non_negative(path: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::field(path, format!("must be a finite non-negative number, got {v}")))
    }
}

fn at(path: &str) -> impl Fn(Error) -> Error + '_ {
    move |e| match e {
        Error::Field { .. } => e,
        Error::Parameter { name, value, expected } => {
            Error::field(format!("{path}.{name}"), format!("{value} is outside its domain ({expected})"))
        }
        other => Error::field(path, other.to_string()),
    }
}

impl ObjectiveConfig {
    pub fn dim(&self) -> usize {
        match self {
            ObjectiveConfig::Benchmark { dim, .. } | ObjectiveConfig::Attack { dim, .. } => *dim,
            ObjectiveConfig::Landscape {} => 1,
            ObjectiveConfig::External { lo, .. } => lo.len(),
        }
    }

    fn validate(&self) -> Result<()> {
        match self {
            ObjectiveConfig::Benchmark { name, dim, bounds } => {
                let min = if *name == BenchmarkKind::Rosenbrock { 2 } else { 1 };
                if *dim < min {
                    return Err(Error::field("objective.dim", format!("{} needs dim >= {min}", name.name())));
                }
                if let Some([lo, hi]) = bounds {
                    if !(lo < hi) {
                        return Err(Error::field("objective.bounds", "needs lo < hi"));
                    }
                }
            }
            ObjectiveConfig::Landscape {} => {}
            ObjectiveConfig::Attack {
                dim,
                classes,
                kappa,
                penalty,
                inputs,
                ..
            } => {
                if *dim < 1 {
                    return Err(Error::field("objective.dim", "must be at least 1"));
                }
                if *classes < 2 {
                    return Err(Error::field("objective.classes", "must be at least 2"));
                }
                if *inputs < 1 {
                    return Err(Error::field("objective.inputs", "must be at least 1"));
                }
                if !kappa.is_finite() {
                    return Err(Error::field("objective.kappa", "must be finite"));
                }
                non_negative("objective.penalty", *penalty)?;
            }
            ObjectiveConfig::External { program, lo, hi, .. } => {
                if program.trim().is_empty() {
                    return Err(Error::field("objective.program", "must not be empty"));
                }
                if lo.is_empty() || lo.len() != hi.len() {
                    return Err(Error::field("objective.hi", "lo and hi need the same nonzero length"));
                }
                DomainBox::new(lo.clone(), hi.clone()).map_err(at("objective.lo"))?;
            }
        }
        Ok(())
    }

    /// Builds the objective. External objectives spawn their process here.
    pub fn build(&self) -> Result<Target> {
        self.validate()?;
        let t = match self {
            ObjectiveConfig::Benchmark { name, dim, bounds } => {
                let mut b = name.build(*dim)?;
                if let Some([lo, hi]) = bounds {
                    b = b.with_domain(DomainBox::cube(*dim, *lo, *hi))?;
                }
                Target::Single(Arc::new(b))
            }
            ObjectiveConfig::Landscape {} => Target::Single(Arc::new(LandscapeObjective::standard())),
            ObjectiveConfig::Attack {
                dim,
                classes,
                kappa,
                penalty,
                inputs,
                input_seed,
                classifier_seed,
            } => Target::Attack {
                classifier: Arc::new(SoftmaxClassifier::random(*classes, *dim, *classifier_seed)?),
                inputs: sample_inputs(*inputs, *dim, *input_seed),
                kappa: *kappa,
                penalty: *penalty,
            },
            ObjectiveConfig::External {
                program,
                args,
                lo,
                hi,
                timeout_ms,
            } => {
                let domain = DomainBox::new(lo.clone(), hi.clone())?;
                let f = ExternalObjective::spawn(program, args, domain, std::time::Duration::from_millis(*timeout_ms))?;
                Target::Single(Arc::new(f))
            }
        };
        Ok(t)
    }

    /// The search box without building the objective.
    pub fn domain(&self) -> Result<DomainBox> {
        match self {
            ObjectiveConfig::Benchmark { name, dim, bounds } => {
                let (lo, hi) = bounds.map(|[a, b]| (a, b)).unwrap_or_else(|| name.default_bounds());
                Ok(DomainBox::cube(*dim, lo, hi))
            }
            ObjectiveConfig::Landscape {} => Ok(LandscapeObjective::standard().domain().clone()),
            ObjectiveConfig::Attack { dim, .. } => Ok(DomainBox::cube(*dim, -10.0, 10.0)),
            ObjectiveConfig::External { lo, hi, .. } => DomainBox::new(lo.clone(), hi.clone()),
        }
    }
}

impl MethodConfig {
    fn is_promot(&self) -> bool {
        self.id.baseline().is_none()
    }

    fn schedule(&self) -> Result<Schedule> {
        let eta0 = || {
            self.eta0
                .ok_or_else(|| Error::field("method.eta0", "required by this schedule"))
        };
        Ok(match self.schedule.clone().unwrap_or(ScheduleConfig::Constant {}) {
            ScheduleConfig::Constant {} => Schedule::Constant { eta: eta0()? },
            ScheduleConfig::Poly { gamma } => Schedule::Poly { eta0: eta0()?, gamma },
            ScheduleConfig::IsotropicPoly { gamma } => Schedule::IsotropicPoly { gamma },
            ScheduleConfig::AnisotropicPoly { gamma } => Schedule::AnisotropicPoly { gamma },
            ScheduleConfig::Table { etas } => Schedule::Table { etas },
        })
    }

    fn check_fields(&self, dim: usize) -> Result<()> {
        if let Some(e) = self.eta0 {
            non_negative("method.eta0", e)?;
        }
        match &self.sigma {
            Sigma::Isotropic(s) => positive("method.sigma", *s)?,
            Sigma::PerCoordinate(v) => {
                if v.len() != dim {
                    return Err(Error::field(
                        "method.sigma",
                        format!("has {} entries for a {dim}-dimensional objective", v.len()),
                    ));
                }
                for (i, s) in v.iter().enumerate() {
                    positive(&format!("method.sigma[{i}]"), *s)?;
                }
            }
        }
        if self.batch < 1 {
            return Err(Error::field("method.batch", "must be at least 1"));
        }
        if let Some(r) = self.ridge {
            positive("method.ridge", r)?;
        }
        if self.is_promot() {
            if self.id == MethodId::PromotLoo && self.batch < 2 {
                return Err(Error::field("method.batch", "the leave-one-out estimator needs batch >= 2"));
            }
            let t = self
                .transform
                .as_ref()
                .ok_or_else(|| Error::field("method.transform", "required for this method"))?;
            positive("method.transform.theta", t.theta)?;
            t.shape.validate().map_err(at("method.transform"))?;
            if self.id == MethodId::Epgs {
                if t.shape != Transform::Exponential {
                    return Err(Error::field("method.transform.family", "epgs uses the exponential transform"));
                }
                if self.kernel.is_some_and(|k| k != Kernel::Gaussian) {
                    return Err(Error::field("method.kernel", "epgs uses the gaussian kernel"));
                }
            }
            if let Some(k) = self.kernel {
                k.validate().map_err(at("method.kernel"))?;
            }
            for (name, v) in [
                ("gamma_dec", self.gamma_dec),
                ("alpha", self.alpha),
                ("beta1", self.beta1),
                ("beta2", self.beta2),
            ] {
                if v.is_some() {
                    return Err(Error::field(format!("method.{name}"), "does not apply to this method"));
                }
            }
        } else {
            for (name, present) in [
                ("kernel", self.kernel.is_some()),
                ("transform", self.transform.is_some()),
                ("ridge", self.ridge.is_some()),
                ("scaling", self.scaling.is_some()),
                ("step_norm", self.step_norm.is_some()),
                ("schedule", self.schedule.is_some()),
            ] {
                if present {
                    return Err(Error::field(format!("method.{name}"), "does not apply to this method"));
                }
            }
            if self.eta0.is_none() {
                return Err(Error::field("method.eta0", "required for this method"));
            }
            if matches!(self.sigma, Sigma::PerCoordinate(_)) {
                return Err(Error::field("method.sigma", "baselines take a single scale"));
            }
        }
        Ok(())
    }

    /// The runnable method on `domain`.
    pub fn build(&self, domain: &DomainBox, horizon: usize) -> Result<MethodSpec> {
        self.check_fields(domain.dim())?;
        let m = if let Some(b) = self.id.baseline() {
            MethodSpec::Baseline(BaselineSpec {
                gamma_dec: self.gamma_dec,
                alpha: self.alpha,
                beta1: self.beta1,
                beta2: self.beta2,
                ..BaselineSpec::new(b, self.eta0.unwrap_or_default(), self.sigma.first(), self.batch)
            })
        } else {
            let t = self.transform.as_ref().expect("checked above");
            let kernel = match self.id {
                MethodId::Epgs => Kernel::Gaussian,
                _ => self.kernel.unwrap_or(Kernel::Logistic),
            };
            let spec = SmoothingSpec::new(
                kernel,
                t.shape,
                t.theta,
                self.sigma.scales(domain.dim()),
                self.batch,
                domain.clone(),
            )
            .map_err(at("method"))?
            .with_ridge(self.ridge.unwrap_or_else(|| default_ridge(self.batch)))
            .map_err(at("method"))?;
            let estimator = match self.id {
                MethodId::PromotLoo => Estimator::LeaveOneOut,
                _ => Estimator::Plain,
            };
            let defaults = presets::preset_options(estimator);
            MethodSpec::Promot {
                label: self.id.name().to_string(),
                spec,
                schedule: self.schedule()?,
                options: RunOptions {
                    estimator,
                    scaling: self.scaling.unwrap_or(defaults.scaling),
                    step_norm: self.step_norm.unwrap_or(defaults.step_norm),
                },
            }
        };
        m.validate(horizon).map_err(|e| match (&m, e) {
            (MethodSpec::Baseline(_), Error::Parameter { name: "sigma0", value, expected }) => {
                Error::field("method.sigma", format!("{value} is outside its domain ({expected})"))
            }
            (MethodSpec::Promot { .. }, Error::Parameter { name, value, expected })
                if matches!(name, "gamma" | "eta0" | "eta") =>
            {
                Error::field(
                    "method.schedule",
                    format!("{name} = {value} is outside its domain ({expected})"),
                )
            }
            (_, e) => at("method")(e),
        })?;
        Ok(m)
    }
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.name.trim().is_empty() {
            return Err(Error::field("name", "must not be empty"));
        }
        if self.horizon < 1 {
            return Err(Error::field("horizon", "must be at least 1"));
        }
        if self.runs < 1 {
            return Err(Error::field("runs", "must be at least 1"));
        }
        self.objective.validate()?;
        let attack = matches!(self.objective, ObjectiveConfig::Attack { .. });
        match (&self.init, attack) {
            (Some(_), true) => return Err(Error::field("init", "attacks start from the zero perturbation")),
            (None, false) => return Err(Error::field("init", "required for this objective")),
            (Some(i), false) => {
                if !i.mean.is_finite() {
                    return Err(Error::field("init.mean", "must be finite"));
                }
                non_negative("init.std", i.std)?;
            }
            (None, true) => {}
        }
        let domain = self.objective.domain()?;
        let method = self.method.build(&domain, self.horizon)?;
        if let Some(grid) = &self.sweep {
            if attack {
                return Err(Error::field("sweep", "sweeps run on benchmark-style objectives only"));
            }
            for p in grid.points() {
                p.apply(&method)
                    .and_then(|m| m.validate(self.horizon).map(|_| m))
                    .map_err(at("sweep"))?;
            }
        }
        Ok(())
    }

    /// Validated method on the objective's box.
    pub fn method_spec(&self) -> Result<MethodSpec> {
        self.validate()?;
        self.method.build(&self.objective.domain()?, self.horizon)
    }

    pub fn seeds(&self) -> Vec<u64> {
        (0..self.runs as u64).map(|i| self.seed.wrapping_add(i)).collect()
    }

    /// The shipped experiment for a selected-hyperparameter row.
    ///
    /// Benchmarks use the desk protocol unless `full`; attacks use the
    /// synthetic classifier at the desk dimension.
    pub fn from_preset(row: &PresetRow, full: bool) -> Result<Self> {
        let (objective, init, horizon, runs, batch) = match row.task {
            Task::Ackley | Task::Rosenbrock | Task::Griewank => {
                let name = match row.task {
                    Task::Ackley => BenchmarkKind::Ackley,
                    Task::Rosenbrock => BenchmarkKind::Rosenbrock,
                    _ => BenchmarkKind::Griewank,
                };
                let dim = if full { presets::FULL_DIM } else { presets::DESK_DIM };
                let runs = if full { 20 } else { presets::DESK_SEEDS };
                (
                    ObjectiveConfig::Benchmark { name, dim, bounds: None },
                    row.task.init(),
                    presets::DESK_HORIZON,
                    runs,
                    presets::DESK_BATCH,
                )
            }
            Task::Cifar | Task::Vitaldb => {
                if full {
                    return Err(Error::Config("attack presets have no full-scale variant".into()));
                }
                (
                    ObjectiveConfig::Attack {
                        dim: presets::ATTACK_DESK_DIM,
                        classes: presets::ATTACK_CLASSES,
                        kappa: 0.0,
                        penalty: presets::ATTACK_PENALTY,
                        inputs: presets::ATTACK_INPUTS,
                        input_seed: 0,
                        classifier_seed: DEFAULT_CLASSIFIER_SEED,
                    },
                    None,
                    presets::ATTACK_HORIZON,
                    1,
                    presets::ATTACK_BATCH,
                )
            }
        };
        let promot = row.method.baseline().is_none();
        let transform = row.theta.filter(|_| promot).map(|theta| TransformConfig {
            theta,
            shape: match row.method {
                MethodId::Epgs => Transform::Exponential,
                _ => row.task.transform(),
            },
        });
        let method = MethodConfig {
            id: row.method,
            eta0: Some(row.eta0),
            sigma: Sigma::Isotropic(row.sigma),
            batch,
            kernel: if promot { row.kernel } else { None },
            transform,
            ridge: None,
            scaling: None,
            step_norm: None,
            schedule: None,
            gamma_dec: row.gamma_dec,
            alpha: row.alpha,
            beta1: row.beta1,
            beta2: row.beta2,
        };
        let scale = if full { "full" } else { "desk" };
        let cfg = ExperimentConfig {
            name: format!("{}_{}{}", row.task.name(), row.method.name(), if full { "_full" } else { "" }),
            note: Some(format!("selected hyperparameters, {scale} scale")),
            long_running: full,
            horizon,
            seed: 0,
            runs,
            objective,
            init,
            method,
            sweep: if full { None } else { presets::candidate_grid(row.task, row.method) },
            out_dir: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }
}
