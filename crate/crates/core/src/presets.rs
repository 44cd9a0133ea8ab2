//! Selected hyperparameters and candidate grids for the benchmark and attack
//! tasks, and the builders that turn a row into a runnable method.

use serde::{Deserialize, Serialize};

use crate::baselines::{BaselineMethod, BaselineSpec};
use crate::error::{Error, Result};
use crate::harness::{InitSpec, MethodSpec, SweepGrid};
use crate::kernels::Kernel;
use crate::objectives::DomainBox;
use crate::optimizer::{RunOptions, Schedule, StepNorm};
use crate::smoothing::{Estimator, Scaling, SmoothingSpec};
use crate::transforms::Transform;

/// Exponent `β` of the hybrid transform `(y + c)^β e^{θy}` in every preset.
pub const HYBRID_BETA: f64 = 10.0;

/// Desk-scale protocol.
pub const DESK_DIM: usize = 50;
pub const DESK_HORIZON: usize = 400;
pub const DESK_BATCH: usize = 50;
pub const DESK_SEEDS: usize = 10;
/// Full-scale protocol dimension.
pub const FULL_DIM: usize = 500;

/// Attack protocol.
pub const ATTACK_HORIZON: usize = 500;
pub const ATTACK_BATCH: usize = 30;
pub const ATTACK_CLASSES: usize = 4;
pub const ATTACK_DESK_DIM: usize = 20;
pub const ATTACK_INPUTS: usize = 20;
pub const ATTACK_PENALTY: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Ackley,
    Rosenbrock,
    Griewank,
    /// Image-classifier attack; dimension 3072 in the original setting.
    Cifar,
    /// Tabular-classifier attack.
    Vitaldb,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodId {
    Promot,
    PromotLoo,
    Epgs,
    Rsgf,
    ZoSgd,
    ZoAdamm,
    ZoSlghd,
    ZoSlghr,
}

impl MethodId {
    pub const ALL: [MethodId; 8] = [
        MethodId::Promot,
        MethodId::PromotLoo,
        MethodId::Epgs,
        MethodId::Rsgf,
        MethodId::ZoSgd,
        MethodId::ZoAdamm,
        MethodId::ZoSlghd,
        MethodId::ZoSlghr,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            MethodId::Promot => "promot",
            MethodId::PromotLoo => "promot_loo",
            MethodId::Epgs => "epgs",
            MethodId::Rsgf => "rsgf",
            MethodId::ZoSgd => "zo_sgd",
            MethodId::ZoAdamm => "zo_adamm",
            MethodId::ZoSlghd => "zo_slghd",
            MethodId::ZoSlghr => "zo_slghr",
        }
    }

    pub fn baseline(&self) -> Option<BaselineMethod> {
        match self {
            MethodId::Rsgf => Some(BaselineMethod::Rsgf),
            MethodId::ZoSgd => Some(BaselineMethod::ZoSgd),
            MethodId::ZoAdamm => Some(BaselineMethod::ZoAdamm),
            MethodId::ZoSlghd => Some(BaselineMethod::ZoSlghd),
            MethodId::ZoSlghr => Some(BaselineMethod::ZoSlghr),
            _ => None,
        }
    }
}

impl Task {
    pub const ALL: [Task; 5] = [Task::Ackley, Task::Rosenbrock, Task::Griewank, Task::Cifar, Task::Vitaldb];

    pub fn name(&self) -> &'static str {
        match self {
            Task::Ackley => "ackley",
            Task::Rosenbrock => "rosenbrock",
            Task::Griewank => "griewank",
            Task::Cifar => "cifar",
            Task::Vitaldb => "vitaldb",
        }
    }

    /// Offset `c` of the hybrid transform.
    pub fn offset(&self) -> f64 {
        match self {
            Task::Ackley => 600.0,
            Task::Rosenbrock => 6000.0,
            Task::Griewank | Task::Vitaldb => 1000.0,
            Task::Cifar => 10_000.0,
        }
    }

    /// Initial distribution of the benchmark tasks.
    pub fn init(&self) -> Option<InitSpec> {
        match self {
            Task::Ackley | Task::Griewank => Some(InitSpec { mean: 5.0, std: 0.01 }),
            Task::Rosenbrock => Some(InitSpec { mean: 3.0, std: 0.01 }),
            _ => None,
        }
    }

    pub fn transform(&self) -> Transform {
        Transform::PowerExpHybrid {
            c: self.offset(),
            beta: HYBRID_BETA,
        }
    }
}

/// One selected-hyperparameter row.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PresetRow {
    pub task: Task,
    pub method: MethodId,
    pub eta0: f64,
    pub sigma: f64,
    pub theta: Option<f64>,
    pub gamma_dec: Option<f64>,
    pub alpha: Option<f64>,
    pub beta1: Option<f64>,
    pub beta2: Option<f64>,
    /// Smoothing kernel of the ProMoT rows.
    pub kernel: Option<Kernel>,
}

const fn row(task: Task, method: MethodId, eta0: f64, sigma: f64) -> PresetRow {
    PresetRow {
        task,
        method,
        eta0,
        sigma,
        theta: None,
        gamma_dec: None,
        alpha: None,
        beta1: None,
        beta2: None,
        kernel: None,
    }
}

const fn pm(task: Task, method: MethodId, eta0: f64, sigma: f64, theta: f64, kernel: Kernel) -> PresetRow {
    PresetRow {
        theta: Some(theta),
        kernel: Some(kernel),
        ..row(task, method, eta0, sigma)
    }
}

const fn epgs(task: Task, eta0: f64, sigma: f64, theta: f64) -> PresetRow {
    PresetRow {
        theta: Some(theta),
        kernel: Some(Kernel::Gaussian),
        ..row(task, MethodId::Epgs, eta0, sigma)
    }
}

const fn decay(task: Task, method: MethodId, eta0: f64, sigma: f64, gamma: f64) -> PresetRow {
    PresetRow {
        gamma_dec: Some(gamma),
        ..row(task, method, eta0, sigma)
    }
}

const fn slghd(task: Task, eta0: f64, sigma: f64, gamma: f64, alpha: f64) -> PresetRow {
    PresetRow {
        gamma_dec: Some(gamma),
        alpha: Some(alpha),
        ..row(task, MethodId::ZoSlghd, eta0, sigma)
    }
}

const fn adamm(task: Task, eta0: f64, sigma: f64, b1: f64, b2: f64) -> PresetRow {
    PresetRow {
        beta1: Some(b1),
        beta2: Some(b2),
        ..row(task, MethodId::ZoAdamm, eta0, sigma)
    }
}

use Kernel::{GeneralizedGaussian, Gaussian, Logistic};
use MethodId::*;
use Task::*;

/// Every selected row. The attack rows have no candidate grids.
pub const PRESETS: &[PresetRow] = &[
    pm(Ackley, Promot, 0.5, 0.5, 5.0, Logistic),
    pm(Ackley, PromotLoo, 0.5, 0.1, 1.0, Logistic),
    epgs(Ackley, 0.5, 0.5, 5.0),
    decay(Ackley, Rsgf, 0.1, 0.1, 0.9),
    row(Ackley, ZoSgd, 10.0, 0.1),
    adamm(Ackley, 0.5, 0.1, 0.5, 0.5),
    slghd(Ackley, 5.0, 0.5, 0.99, 0.001),
    decay(Ackley, ZoSlghr, 5.0, 0.5, 0.99),
    pm(Rosenbrock, Promot, 0.1, 0.1, 0.1, Logistic),
    pm(Rosenbrock, PromotLoo, 0.1, 0.1, 0.001, Logistic),
    epgs(Rosenbrock, 0.1, 0.1, 0.1),
    decay(Rosenbrock, Rsgf, 0.1, 0.5, 0.99),
    row(Rosenbrock, ZoSgd, 0.01, 0.1),
    adamm(Rosenbrock, 0.5, 0.1, 0.3, 0.9),
    slghd(Rosenbrock, 0.001, 0.5, 0.95, 0.1),
    decay(Rosenbrock, ZoSlghr, 0.001, 0.5, 0.95),
    pm(Griewank, Promot, 0.1, 2.0, 5.0, Logistic),
    pm(Griewank, PromotLoo, 0.1, 1.0, 1.0, Logistic),
    epgs(Griewank, 0.1, 2.0, 5.0),
    decay(Griewank, Rsgf, 0.1, 1.0, 0.9),
    row(Griewank, ZoSgd, 10.0, 1.0),
    adamm(Griewank, 0.5, 1.0, 0.1, 0.7),
    slghd(Griewank, 10.0, 1.0, 0.99, 0.1),
    decay(Griewank, ZoSlghr, 10.0, 2.0, 0.95),
    pm(Cifar, Promot, 0.005, 0.1, 0.03, Gaussian),
    pm(Cifar, PromotLoo, 0.005, 0.01, 0.03, GeneralizedGaussian { beta: 4.0 }),
    epgs(Cifar, 0.005, 0.1, 0.03),
    decay(Cifar, Rsgf, 0.03, 1.0, 0.8),
    row(Cifar, ZoSgd, 0.00005, 0.1),
    adamm(Cifar, 0.03, 0.1, 0.9, 0.1),
    slghd(Cifar, 0.00003, 0.1, 0.999, 0.1 / 3072.0),
    decay(Cifar, ZoSlghr, 0.00003, 0.1, 0.995),
    pm(Vitaldb, Promot, 0.01, 0.3, 5.0, Gaussian),
    pm(Vitaldb, PromotLoo, 0.01, 0.3, 5.0, Gaussian),
    epgs(Vitaldb, 0.03, 0.3, 5.0),
    decay(Vitaldb, Rsgf, 0.03, 3.0, 0.95),
    row(Vitaldb, ZoSgd, 0.3, 0.3),
    adamm(Vitaldb, 0.5, 0.3, 0.7, 0.3),
    slghd(Vitaldb, 0.1, 1.0, 0.999, 0.001),
    decay(Vitaldb, ZoSlghr, 0.1, 0.3, 0.995),
];

pub fn lookup(task: Task, method: MethodId) -> Option<&'static PresetRow> {
    PRESETS.iter().find(|r| r.task == task && r.method == method)
}

/// Step rule shared by the ProMoT family in presets: constant `η₀` along the
/// root-mean-square normalized estimate.
pub fn preset_schedule(eta0: f64) -> Schedule {
    Schedule::Constant { eta: eta0 }
}

pub fn preset_options(estimator: Estimator) -> RunOptions {
    RunOptions {
        estimator,
        scaling: Scaling::BatchMax,
        step_norm: StepNorm::Rms,
    }
}

impl PresetRow {
    /// The runnable method on `domain` with batch size `batch`.
    pub fn method_spec(&self, domain: &DomainBox, batch: usize) -> Result<MethodSpec> {
        if let Some(b) = self.method.baseline() {
            return Ok(MethodSpec::Baseline(BaselineSpec {
                gamma_dec: self.gamma_dec,
                alpha: self.alpha,
                beta1: self.beta1,
                beta2: self.beta2,
                ..BaselineSpec::new(b, self.eta0, self.sigma, batch)
            }));
        }
        let theta = self
            .theta
            .ok_or_else(|| Error::Config(format!("{} row needs theta", self.method.name())))?;
        let (kernel, transform, estimator) = match self.method {
            MethodId::Epgs => (Kernel::Gaussian, Transform::Exponential, Estimator::Plain),
            MethodId::Promot => (self.kernel.unwrap_or(Kernel::Logistic), self.task.transform(), Estimator::Plain),
            _ => (
                self.kernel.unwrap_or(Kernel::Logistic),
                self.task.transform(),
                Estimator::LeaveOneOut,
            ),
        };
        let spec = SmoothingSpec::isotropic(kernel, transform, theta, self.sigma, batch, domain.clone())?;
        Ok(MethodSpec::Promot {
            label: self.method.name().to_string(),
            spec,
            schedule: preset_schedule(self.eta0),
            options: preset_options(estimator),
        })
    }
}

/// Candidate grid searched for a benchmark row; `None` for the attack tasks.
pub fn candidate_grid(task: Task, method: MethodId) -> Option<SweepGrid> {
    let etas = vec![0.1, 0.5];
    let sigmas = match task {
        Ackley | Rosenbrock => vec![0.1, 0.5],
        Griewank => vec![1.0, 2.0],
        _ => return None,
    };
    let thetas = match task {
        Rosenbrock => vec![0.1, 0.01, 0.001],
        _ => vec![1.0, 3.0, 5.0],
    };
    let big_eta = match task {
        Rosenbrock => vec![0.01, 0.001],
        _ => vec![1.0, 5.0, 10.0],
    };
    let grid = match method {
        Promot | PromotLoo | Epgs => SweepGrid {
            eta0: etas,
            sigma: sigmas,
            theta: thetas,
            ..SweepGrid::default()
        },
        Rsgf => SweepGrid {
            eta0: etas,
            sigma: sigmas,
            gamma_dec: match task {
                Rosenbrock => vec![0.9, 0.95, 0.99],
                _ => vec![0.8, 0.9, 0.99],
            },
            ..SweepGrid::default()
        },
        ZoSgd => SweepGrid {
            eta0: big_eta,
            sigma: sigmas,
            ..SweepGrid::default()
        },
        ZoAdamm => SweepGrid {
            eta0: etas,
            sigma: sigmas,
            beta1: vec![0.5, 0.7, 0.9],
            beta2: vec![0.1, 0.3, 0.5],
            ..SweepGrid::default()
        },
        ZoSlghd => SweepGrid {
            eta0: big_eta,
            sigma: sigmas,
            gamma_dec: vec![0.95, 0.99],
            alpha: vec![0.1, 0.01, 0.001],
            ..SweepGrid::default()
        },
        ZoSlghr => SweepGrid {
            eta0: big_eta,
            sigma: sigmas,
            gamma_dec: vec![0.95, 0.99],
            ..SweepGrid::default()
        },
    };
    Some(grid)
}
