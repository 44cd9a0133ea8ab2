//! Numeric verification suites: kernel constants, transform ratio
//! monotonicity, estimator unbiasedness, leave-one-out variance reduction,
//! second-moment and Lipschitz bounds, and localization of stationary points.
//!
//! Each check records what was measured next to what was expected.

use std::f64::consts::PI;
use std::fmt;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;
use statrs::function::gamma::gamma;

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::objectives::{ackley, griewank, rosenbrock, LandscapeObjective, Objective};
use crate::presets::{self, MethodId, Task};
use crate::smoothing::{
    self, default_ridge, draw_batch, Estimator, finite_difference_oracle, paired_second_moments, second_moment_probe, Scaling,
    SmoothingSpec, Surrogate1d,
};
use crate::transforms::Transform;
use crate::{par, rng};

/// Smallest integer `θ` from which every stationary point of the smoothed
/// standard landscape in `|μ| < LOCALIZATION_WINDOW` lies within
/// `LOCALIZATION_DELTA` of the maximizer, per `σ`. Logistic kernel,
/// exponential transform; found by scanning `θ = 1..60`.
pub const LOCALIZATION_THRESHOLDS: [(f64, f64); 4] = [(2.0, 20.0), (2.5, 14.0), (3.0, 12.0), (3.5, 17.0)];
/// An amplification at which every `σ` above still has several stationary points.
pub const LOCALIZATION_BELOW: f64 = 3.0;
pub const LOCALIZATION_WINDOW: f64 = 30.0;
pub const LOCALIZATION_DELTA: f64 = 0.25;

/// One-sided 99% normal quantile.
const Z99: f64 = 2.326_347_874;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Suite {
    Constants,
    Transforms,
    Unbiasedness,
    Loo,
    Bounds,
    Localization,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::Constants,
        Suite::Transforms,
        Suite::Unbiasedness,
        Suite::Loo,
        Suite::Bounds,
        Suite::Localization,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Suite::Constants => "constants",
            Suite::Transforms => "transforms",
            Suite::Unbiasedness => "unbiasedness",
            Suite::Loo => "loo",
            Suite::Bounds => "bounds",
            Suite::Localization => "localization",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite `{s}`")))
    }
}

/// Sample sizes. `Full` runs the sizes of the release gate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Effort {
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub measured: String,
    pub expected: String,
    pub passed: bool,
}

impl Check {
    fn new(name: impl Into<String>, measured: impl Into<String>, expected: impl Into<String>, passed: bool) -> Self {
        Check {
            name: name.into(),
            measured: measured.into(),
            expected: expected.into(),
            passed,
        }
    }
}

impl fmt::Display for Check {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let tag = if self.passed { "ok  " } else { "FAIL" };
        write!(f, "{tag} {}: measured {}, expected {}", self.name, self.measured, self.expected)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub checks: Vec<Check>,
    pub seconds: f64,
}

impl SuiteReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.passed)
    }
}

pub fn run_suite(suite: Suite, effort: Effort, seed: u64) -> Result<SuiteReport> {
    let start = Instant::now();
    let checks = match suite {
        Suite::Constants => constants_checks(&kernel_reference())?,
        Suite::Transforms => transform_checks(effort, seed)?,
        Suite::Unbiasedness => estimator_mean_checks(effort, seed, Estimator::Plain)?,
        Suite::Loo => {
            let mut c = estimator_mean_checks(effort, seed, Estimator::LeaveOneOut)?;
            c.extend(loo_bound_checks(effort, seed)?);
            c.extend(variance_reduction_checks(effort, seed)?);
            c
        }
        Suite::Bounds => {
            let mut c = second_moment_checks(effort, seed)?;
            c.extend(lipschitz_checks()?);
            c
        }
        Suite::Localization => localization_checks()?,
    };
    Ok(SuiteReport {
        suite,
        checks,
        seconds: start.elapsed().as_secs_f64(),
    })
}

/// Reference values for a kernel's constants `I` and `K`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelReference {
    pub kernel: Kernel,
    pub fisher: f64,
    pub curvature: f64,
}

pub const FISHER_TOL: f64 = 1e-3;
pub const CURVATURE_TOL: f64 = 5e-3;

/// Closed-form `I` and printed `K` for the shipped kernels.
pub fn kernel_reference() -> Vec<KernelReference> {
    let t = |nu: f64, k: f64| KernelReference {
        kernel: Kernel::StudentT { nu },
        fisher: (nu + 1.0) / (nu + 3.0),
        curvature: k,
    };
    let beta: f64 = 4.0;
    vec![
        KernelReference {
            kernel: Kernel::Gaussian,
            fisher: 1.0,
            curvature: 0.96749,
        },
        KernelReference {
            kernel: Kernel::Logistic,
            fisher: 1.0 / 3.0,
            curvature: 0.38496,
        },
        t(1.0, 0.82691),
        t(3.0, 0.87870),
        t(10.0, 0.92883),
        KernelReference {
            kernel: Kernel::HyperbolicSecant,
            fisher: PI * PI / 8.0,
            curvature: PI / 2.0,
        },
        KernelReference {
            kernel: Kernel::GeneralizedGaussian { beta },
            fisher: beta * beta * gamma(2.0 - 1.0 / beta) / gamma(1.0 / beta),
            curvature: 3.364,
        },
    ]
}

/// Compares computed constants against `reference`; each kernel yields an
/// `I` and a `K` check named after the kernel.
pub fn constants_checks(reference: &[KernelReference]) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    for r in reference {
        let c = r.kernel.compute_constants()?;
        let di = (c.fisher_information - r.fisher).abs();
        let dk = (c.curvature - r.curvature).abs();
        out.push(Check::new(
            format!("{} I", r.kernel),
            format!("{:.6}", c.fisher_information),
            format!("{:.6} ± {FISHER_TOL}", r.fisher),
            di <= FISHER_TOL,
        ));
        out.push(Check::new(
            format!("{} K", r.kernel),
            format!("{:.6}", c.curvature),
            format!("{:.6} ± {CURVATURE_TOL}", r.curvature),
            dk <= CURVATURE_TOL,
        ));
    }
    Ok(out)
}

/// The seven families with the parameters used in checks.
pub fn transform_families() -> [Transform; 7] {
    [
        Transform::Power { c: 2.0 },
        Transform::Exponential,
        Transform::FracExponential { alpha: 0.5 },
        Transform::PowerExpHybrid { c: 600.0, beta: 10.0 },
        Transform::Softplus,
        Transform::SinhShift { c: 1.0 },
        Transform::SigmoidPower { alpha: 1.0 },
    ]
}

fn theta_grid(n: usize) -> Vec<f64> {
    // log-spaced over [1e-2, 50]
    (0..n)
        .map(|i| 1e-2 * (5e3f64).powf(i as f64 / (n - 1) as f64))
        .collect()
}

/// Ratio monotonicity of every family and boundedness of `sigmoid_power`.
pub fn transform_checks(effort: Effort, seed: u64) -> Result<Vec<Check>> {
    let pairs = 100;
    let grid = theta_grid(50);
    let mut out = Vec::new();
    for (fi, t) in transform_families().into_iter().enumerate() {
        let mut r = rng::stream(seed, fi as u64);
        let floor = t.ratio_domain_floor();
        let lo = if floor.is_finite() { floor } else { -10.0 };
        let mut failures = 0;
        let mut first = None;
        for _ in 0..pairs {
            let (mut a, mut b);
            loop {
                a = lo + 20.0 * r.random::<f64>();
                b = lo + 20.0 * r.random::<f64>();
                if a < b {
                    std::mem::swap(&mut a, &mut b);
                }
                if a > b && b > floor {
                    break;
                }
            }
            let res = t.ratio_monotonicity_check(a, b, &grid)?;
            if !res.passed() {
                failures += 1;
                first.get_or_insert(format!(" (first at a = {a:.4}, b = {b:.4}: {res:?})"));
            }
        }
        out.push(Check::new(
            format!("{} ratio monotone", t.family()),
            format!("{failures} of {pairs} pairs fail{}", first.unwrap_or_default()),
            "0 failures on a 50-point theta grid",
            failures == 0,
        ));
    }
    let points = match effort {
        Effort::Quick => 10_000,
        Effort::Full => 100_000,
    };
    let sig = Transform::SigmoidPower { alpha: 1.0 };
    let mut r = rng::stream(seed, 99);
    let mut worst = f64::NEG_INFINITY;
    let mut bad = 0usize;
    for _ in 0..points {
        let theta = 1e-3 + 20.0 * r.random::<f64>();
        let y = -50.0 + 100.0 * r.random::<f64>();
        let l = sig.log_eval(theta, y)?;
        let v = sig.eval(theta, y)?;
        worst = worst.max(l);
        if !(l.is_finite() && l <= 0.0 && v <= 1.0) {
            bad += 1;
        }
    }
    out.push(Check::new(
        "sigmoid_power bounded in (0, 1]",
        format!("{bad} of {points} points outside, max log g = {worst:.3e}"),
        "all points inside",
        bad == 0,
    ));
    Ok(out)
}

/// Ackley in two dimensions with the logistic kernel and the hybrid
/// transform; the unbiasedness setting.
pub fn unbiasedness_spec() -> Result<(SmoothingSpec, Vec<f64>)> {
    let f = ackley(2)?;
    let spec = SmoothingSpec::isotropic(
        Kernel::Logistic,
        Transform::PowerExpHybrid { c: 600.0, beta: 10.0 },
        1.0,
        0.5,
        10,
        f.domain().clone(),
    )?;
    Ok((spec, vec![0.7, -0.4]))
}

/// Batch-mean gradient of `estimator` against the finite-difference oracle,
/// per coordinate, within 4 joint standard errors.
pub fn estimator_mean_checks(effort: Effort, seed: u64, estimator: Estimator) -> Result<Vec<Check>> {
    let loo = estimator == Estimator::LeaveOneOut;
    let (batches, oracle_n) = match effort {
        Effort::Quick => (20_000, 400_000),
        Effort::Full => (100_000, 2_000_000),
    };
    let f = ackley(2)?;
    let (spec, mu) = unbiasedness_spec()?;
    let key = rng::derive(seed, 0x0b1a5);
    let ests: Vec<Result<(Vec<f64>, Vec<f64>)>> = par::map_indexed(batches, |i| {
        let b = draw_batch(&spec, &f, &mu, rng::derive(key, i as u64), Scaling::Absolute)?;
        Ok((b.plain(), b.loo(spec.ridge).0))
    });
    let ests: Vec<(Vec<f64>, Vec<f64>)> = ests.into_iter().collect::<Result<_>>()?;
    let mut out = Vec::new();
    for coord in 0..2 {
        let oracle = finite_difference_oracle(&spec, &f, &mu, coord, 1e-4, oracle_n, rng::derive(seed, 0xfd + coord as u64))?;
        let pick = |e: &(Vec<f64>, Vec<f64>)| if loo { e.1[coord] } else { e.0[coord] };
        let s: f64 = ests.iter().map(pick).sum();
        let s2: f64 = ests.iter().map(|e| pick(e).powi(2)).sum();
        let (mean, se) = smoothing::mean_and_se(s, s2, ests.len());
        let joint = (se * se + oracle.std_err * oracle.std_err).sqrt();
        let z = (mean - oracle.mean) / joint;
        let name = if loo { "loo" } else { "plain" };
        out.push(Check::new(
            format!("{name} estimator mean, coordinate {coord}"),
            format!("{mean:.6e} (se {se:.2e}), {z:+.2} joint SE from the oracle"),
            format!("finite-difference oracle {:.6e} (se {:.2e}) within 4 SE", oracle.mean, oracle.std_err),
            z.abs() <= 4.0,
        ));
    }
    Ok(out)
}

/// Per-sample `U = h‖S‖²` and `V = ‖S‖²` moments over independent batches.
struct SampleMoments {
    mu_u: f64,
    var_u: f64,
    mu_v: f64,
    var_v: f64,
}

fn sample_moments(spec: &SmoothingSpec, f: &dyn Objective, mu: &[f64], batches: usize, key: u64) -> Result<SampleMoments> {
    let parts: Vec<Result<[f64; 4]>> = par::map_indexed(batches, |i| {
        let b = draw_batch(spec, f, mu, rng::derive(key, i as u64), Scaling::Absolute)?;
        let mut acc = [0.0; 4];
        for x in &b.samples {
            let v = x.score_norm_sq();
            let u = x.h * v;
            acc[0] += u;
            acc[1] += u * u;
            acc[2] += v;
            acc[3] += v * v;
        }
        Ok(acc)
    });
    let mut acc = [0.0; 4];
    for p in parts {
        let p = p?;
        for k in 0..4 {
            acc[k] += p[k];
        }
    }
    let n = (batches * spec.batch) as f64;
    let mu_u = acc[0] / n;
    let mu_v = acc[2] / n;
    Ok(SampleMoments {
        mu_u,
        var_u: (acc[1] / n - mu_u * mu_u).max(0.0),
        mu_v,
        var_v: (acc[3] / n - mu_v * mu_v).max(0.0),
    })
}

/// The explicit part of the leave-one-out excess constant; the `O(·)`
/// remainders are not included.
fn c_loo(m: &SampleMoments, batch: usize, ridge: f64) -> f64 {
    let s = (batch - 1) as f64;
    let l = ridge;
    let b_star = m.mu_u / m.mu_v;
    (b_star * l / (m.mu_v + l)).powi(2)
        + 2.0 * m.var_u.sqrt() / (l * s.sqrt())
        + 2.0 * m.mu_u * m.var_v.sqrt() / (l * l * s.sqrt())
        + 2.0 * m.var_u / (l * l * s)
        + 4.0 * m.mu_u * m.mu_u * m.var_v / (l.powi(4) * s)
}

/// Leave-one-out second moment against its explicit bound, with `g* = 1`.
pub fn loo_bound_checks(effort: Effort, seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();

    // second-moment bound with g* = 1: exponential transform of an objective
    // whose maximum is 0
    let batches = match effort {
        Effort::Quick => 1_000,
        Effort::Full => 4_000,
    };
    let f = ackley(5)?;
    let spec = SmoothingSpec::isotropic(Kernel::Gaussian, Transform::Exponential, 1.0, 0.5, 30, f.domain().clone())?;
    let mu = vec![0.3; 5];
    let key = rng::derive(seed, 0x5ec);
    let rep = second_moment_probe(&spec, &f, &mu, batches, Estimator::LeaveOneOut, key, Some(1.0))?;
    let m = sample_moments(&spec, &f, &mu, batches, rng::derive(seed, 0x5ed))?;
    let i_s2 = spec.kernel.compute_constants()?.fisher_information * spec.s2();
    let bound = (1.0 - rep.r2) * i_s2 + c_loo(&m, spec.batch, spec.ridge) * i_s2;
    out.push(Check::new(
        "loo second moment, ackley(5)",
        format!("{:.4e} (se {:.1e}), R² = {:.3}", rep.mean_sq_norm, rep.std_err, rep.r2),
        format!("<= (1 - R²) g*² I S2 + C_loo I S2 = {bound:.4e}"),
        rep.mean_sq_norm <= bound + 3.0 * rep.std_err,
    ));

    Ok(out)
}

/// Paired second moments of the two estimators on each benchmark's
/// leave-one-out preset at `d = 10`.
pub fn variance_reduction_checks(effort: Effort, seed: u64) -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let paired = match effort {
        Effort::Quick => 2_000,
        Effort::Full => 10_000,
    };
    for task in [Task::Ackley, Task::Rosenbrock, Task::Griewank] {
        let (f, spec, mu) = loo_preset_probe(task, 10)?;
        let p = paired_second_moments(&spec, f.as_ref(), &mu, paired, rng::derive(seed, 0xa11 + task as u64))?;
        out.push(Check::new(
            format!("loo below plain, {} preset at d = 10", task.name()),
            format!(
                "E|g_loo|² = {:.4e}, E|g_plain|² = {:.4e}, diff {:.3e} (se {:.1e})",
                p.loo, p.plain, p.diff_mean, p.diff_se
            ),
            "diff < 0 at 99% confidence",
            p.loo_smaller(Z99),
        ));
    }
    Ok(out)
}

/// The leave-one-out preset of a benchmark task at dimension `dim`, with
/// `B = 50` and the default ridge, probed at the task's initial mean.
pub fn loo_preset_probe(task: Task, dim: usize) -> Result<(Box<dyn Objective>, SmoothingSpec, Vec<f64>)> {
    let row = presets::lookup(task, MethodId::PromotLoo).ok_or_else(|| Error::Config("missing preset".into()))?;
    let f: Box<dyn Objective> = match task {
        Task::Ackley => Box::new(ackley(dim)?),
        Task::Rosenbrock => Box::new(rosenbrock(dim)?),
        Task::Griewank => Box::new(griewank(dim)?),
        _ => return Err(Error::Config("not a benchmark task".into())),
    };
    let spec = SmoothingSpec::isotropic(
        row.kernel.unwrap_or(Kernel::Logistic),
        task.transform(),
        row.theta.unwrap_or(1.0),
        row.sigma,
        presets::DESK_BATCH,
        f.domain().clone(),
    )?
    .with_ridge(default_ridge(presets::DESK_BATCH))?;
    let mean = task.init().map(|i| i.mean).unwrap_or(0.0);
    Ok((f, spec, vec![mean; dim]))
}

/// Configurations of the plain second-moment check: isotropic and
/// anisotropic scales, each with its `g*`.
pub fn second_moment_configs() -> Result<Vec<(String, Box<dyn Objective>, SmoothingSpec, Vec<f64>, f64)>> {
    let a = ackley(5)?;
    let sa = SmoothingSpec::isotropic(
        Kernel::Logistic,
        Transform::PowerExpHybrid { c: 600.0, beta: 10.0 },
        1.0,
        0.5,
        20,
        a.domain().clone(),
    )?;
    let ga = Transform::PowerExpHybrid { c: 600.0, beta: 10.0 }.eval(1.0, 0.0)?;
    let g = griewank(4)?;
    let sg = SmoothingSpec::new(
        Kernel::Gaussian,
        Transform::Exponential,
        2.0,
        vec![0.5, 1.0, 2.0, 4.0],
        20,
        g.domain().clone(),
    )?;
    let r = rosenbrock(3)?;
    let sr = SmoothingSpec::new(
        Kernel::StudentT { nu: 3.0 },
        Transform::PowerExpHybrid { c: 6000.0, beta: 10.0 },
        0.01,
        vec![0.2, 0.4, 0.8],
        20,
        r.domain().clone(),
    )?;
    let gr = Transform::PowerExpHybrid { c: 6000.0, beta: 10.0 }.eval(0.01, 0.0)?;
    Ok(vec![
        ("ackley(5) isotropic logistic".into(), Box::new(a), sa, vec![1.0; 5], ga),
        ("griewank(4) anisotropic gaussian".into(), Box::new(g), sg, vec![2.0, -1.0, 0.5, 3.0], 1.0),
        ("rosenbrock(3) anisotropic student_t(3)".into(), Box::new(r), sr, vec![0.5, 0.8, 1.2], gr),
    ])
}

/// Kernel and transform pairs of the one-dimensional Lipschitz check.
pub fn lipschitz_pairs() -> [(Kernel, Transform, f64, f64); 3] {
    [
        (Kernel::Logistic, Transform::Exponential, 10.0, 2.0),
        (Kernel::Gaussian, Transform::PowerExpHybrid { c: 1.0, beta: 2.0 }, 3.0, 1.5),
        (Kernel::HyperbolicSecant, Transform::Softplus, 5.0, 3.0),
    ]
}

/// Plain second moment against `g*² I S2` on [`second_moment_configs`].
pub fn second_moment_checks(effort: Effort, seed: u64) -> Result<Vec<Check>> {
    let batches = match effort {
        Effort::Quick => 1_000,
        Effort::Full => 4_000,
    };
    let mut out = Vec::new();
    for (i, (name, f, spec, mu, g_star)) in second_moment_configs()?.into_iter().enumerate() {
        let rep = second_moment_probe(
            &spec,
            f.as_ref(),
            &mu,
            batches,
            Estimator::Plain,
            rng::derive(seed, 0xb0 + i as u64),
            Some(g_star),
        )?;
        let q = rep.bound.unwrap_or(f64::NAN);
        out.push(Check::new(
            format!("plain second moment, {name}"),
            format!("{:.4e} (se {:.1e})", rep.mean_sq_norm, rep.std_err),
            format!("<= g*² I S2 = {q:.4e} (+3 SE)"),
            rep.within_bound == Some(true),
        ));
    }
    Ok(out)
}

/// `|G''| <= g* max(K, I)/σ²` on a 201-point grid for [`lipschitz_pairs`].
pub fn lipschitz_checks() -> Result<Vec<Check>> {
    let mut out = Vec::new();
    let land = LandscapeObjective::standard();
    let grid: Vec<f64> = (0..201).map(|i| -30.0 + 60.0 * i as f64 / 200.0).collect();
    for (kernel, transform, theta, sigma) in lipschitz_pairs() {
        let s = Surrogate1d::new(&land, kernel, transform, theta, sigma, land.breakpoints())?;
        let c = kernel.compute_constants()?;
        // values are in units of g(θ, f*), so g* = 1
        let bound = c.fisher_information.max(c.curvature) / (sigma * sigma);
        let vals: Vec<f64> = par::map_slice(&grid, |&m| s.second_derivative(m))
            .into_iter()
            .collect::<Result<_>>()?;
        let worst = vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        out.push(Check::new(
            format!("|G''| on 201 points, {kernel} + {transform}, theta {theta}, sigma {sigma}"),
            format!("max {worst:.4e}"),
            format!("<= g* max(K, I)/σ² = {bound:.4e}"),
            worst <= bound,
        ));
    }
    Ok(out)
}

/// Stationary points of the smoothed standard landscape in the window.
pub fn landscape_stationary_points(theta: f64, sigma: f64) -> Result<Vec<f64>> {
    let land = LandscapeObjective::standard();
    let s = Surrogate1d::new(&land, Kernel::Logistic, Transform::Exponential, theta, sigma, land.breakpoints())?;
    s.stationary_points(-LOCALIZATION_WINDOW, LOCALIZATION_WINDOW, 601)
}

/// Stationary points near the maximizer above each threshold, several below.
pub fn localization_checks() -> Result<Vec<Check>> {
    let x_star = 1.0;
    let mut out = Vec::new();
    for (sigma, threshold) in LOCALIZATION_THRESHOLDS {
        for theta in [threshold, threshold + 5.0, 2.0 * threshold, 60.0] {
            let z = landscape_stationary_points(theta, sigma)?;
            let ok = !z.is_empty() && z.iter().all(|x| (x - x_star).abs() <= LOCALIZATION_DELTA);
            out.push(Check::new(
                format!("stationary points localized, sigma {sigma}, theta {theta}"),
                format!("{z:.3?}"),
                format!("all within [{:.2}, {:.2}]", x_star - LOCALIZATION_DELTA, x_star + LOCALIZATION_DELTA),
                ok,
            ));
        }
        let z = landscape_stationary_points(LOCALIZATION_BELOW, sigma)?;
        out.push(Check::new(
            format!("several stationary points below threshold, sigma {sigma}, theta {LOCALIZATION_BELOW}"),
            format!("{z:.3?}"),
            "more than one",
            z.len() > 1,
        ));
    }
    Ok(out)
}
