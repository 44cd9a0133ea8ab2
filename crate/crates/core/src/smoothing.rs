//! The smoothed objective `G(μ) = E[g(θ, f(X)); S]`, `X ~ μ + Σ Z`, and its
//! Monte Carlo gradient estimators.
//!
//! Sample `k` of a batch drawn under key `key` comes from
//! `rng::stream(key, k)`, so a batch is the same no matter how its points are
//! scheduled. Reductions run in index order.
//!
//! Transformed values are carried as `log h`. Under [`Scaling::Absolute`]
//! they are exponentiated as is (and overflow is an error); under
//! [`Scaling::BatchMax`] every `h_k` is divided by the batch maximum before
//! use. Both estimators are linear in `h`, so the rescaled estimate is the
//! exact estimate times `e^{-log_scale}`; the leave-one-out baseline `b_k`
//! scales the same way since `λ` only enters the denominator.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::objectives::{DomainBox, Objective};
use crate::quadrature::Quadrature;
use crate::transforms::{Transform, OVERFLOW_GUARD};
use crate::{par, rng};

/// Which gradient estimator to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Estimator {
    Plain,
    #[serde(rename = "loo")]
    LeaveOneOut,
}

impl Estimator {
    pub fn name(&self) -> &'static str {
        match self {
            Estimator::Plain => "plain",
            Estimator::LeaveOneOut => "loo",
        }
    }
}

/// How transformed values are brought into floating-point range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scaling {
    Absolute,
    BatchMax,
}

/// Everything that defines `G_{θ,Σ}` and its estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SmoothingSpec {
    pub kernel: Kernel,
    pub transform: Transform,
    pub theta: f64,
    pub scales: Vec<f64>,
    pub batch: usize,
    pub ridge: f64,
    pub domain: DomainBox,
}

/// `(B - 1)^{-1/8}`.
pub fn default_ridge(batch: usize) -> f64 {
    if batch < 2 {
        1.0
    } else {
        ((batch - 1) as f64).powf(-0.125)
    }
}

impl SmoothingSpec {
    /// Builds and validates a spec with the default ridge.
    pub fn new(
        kernel: Kernel,
        transform: Transform,
        theta: f64,
        scales: Vec<f64>,
        batch: usize,
        domain: DomainBox,
    ) -> Result<Self> {
        let spec = SmoothingSpec {
            kernel,
            transform,
            theta,
            scales,
            batch,
            ridge: default_ridge(batch),
            domain,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Same scale `σ` on every coordinate.
    pub fn isotropic(
        kernel: Kernel,
        transform: Transform,
        theta: f64,
        sigma: f64,
        batch: usize,
        domain: DomainBox,
    ) -> Result<Self> {
        let d = domain.dim();
        Self::new(kernel, transform, theta, vec![sigma; d], batch, domain)
    }

    pub fn with_ridge(mut self, ridge: f64) -> Result<Self> {
        self.ridge = ridge;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        self.kernel.validate()?;
        self.transform.validate()?;
        if !(self.theta > 0.0 && self.theta.is_finite()) {
            return Err(Error::param("theta", self.theta, "theta > 0"));
        }
        if self.scales.is_empty() {
            return Err(Error::Config("scales must be nonempty".into()));
        }
        if self.scales.len() != self.domain.dim() {
            return Err(Error::Dimension {
                expected: self.domain.dim(),
                actual: self.scales.len(),
            });
        }
        if let Some(&s) = self.scales.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::param("sigma", s, "sigma > 0"));
        }
        if self.batch < 1 {
            return Err(Error::param("batch", 0.0, "batch >= 1"));
        }
        if !(self.ridge > 0.0 && self.ridge.is_finite()) {
            return Err(Error::param("ridge", self.ridge, "ridge > 0"));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.scales.len()
    }

    /// `S2(Σ) = d · max_i σ_i^{-2}`.
    pub fn s2(&self) -> f64 {
        let min = self.scales.iter().copied().fold(f64::INFINITY, f64::min);
        self.dim() as f64 / (min * min)
    }

    pub fn is_isotropic(&self) -> bool {
        self.scales.iter().all(|&s| s == self.scales[0])
    }

    /// `log g(θ, y)`, or `None` when `y` is below the transform's domain.
    pub fn log_transform(&self, y: f64) -> Result<Option<f64>> {
        if !self.transform.in_domain(y) {
            return Ok(None);
        }
        self.transform.log_eval(self.theta, y).map(Some)
    }
}

/// One draw `x = μ + Σ z` with its transformed value and score.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSample {
    pub point: Vec<f64>,
    /// `g(θ, f(x)) · 1{x ∈ S}`, in the batch's scaled units.
    pub h: f64,
    pub log_h: f64,
    /// `S(x)_i = -s(z_i)/σ_i`.
    pub score: Vec<f64>,
    pub in_domain: bool,
}

impl GradientSample {
    pub fn score_norm_sq(&self) -> f64 {
        self.score.iter().map(|v| v * v).sum()
    }
}

/// Per-call record of what the estimator saw.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Diagnostics {
    pub batch: usize,
    pub in_domain: usize,
    /// In-domain samples whose objective value fell below the transform's
    /// domain; they contribute `h = 0`.
    pub below_transform_domain: usize,
    pub max_abs_theta_f: f64,
    /// Smallest and largest leave-one-out baseline, scaled units.
    pub baseline_range: Option<(f64, f64)>,
    /// No sample contributed a positive `h`.
    pub starved: bool,
    pub log_scale: f64,
}

/// A drawn batch, ready for either estimator.
#[derive(Debug, Clone)]
pub struct Batch {
    pub samples: Vec<GradientSample>,
    /// All `h` are `exp(log_h - log_scale)`.
    pub log_scale: f64,
    pub diagnostics: Diagnostics,
}

/// A gradient estimate in units of `e^{log_scale}`.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientEstimate {
    pub gradient: Vec<f64>,
    pub log_scale: f64,
    pub diagnostics: Diagnostics,
}

impl GradientEstimate {
    pub fn norm(&self) -> f64 {
        self.gradient.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

struct Draw {
    point: Vec<f64>,
    score: Vec<f64>,
    in_domain: bool,
}

fn draw_point(spec: &SmoothingSpec, mu: &[f64], key: u64, index: u64) -> Draw {
    let mut r = rng::stream(key, index);
    let mut point = Vec::with_capacity(mu.len());
    let mut score = Vec::with_capacity(mu.len());
    for (&m, &s) in mu.iter().zip(&spec.scales) {
        let z = spec.kernel.sample(&mut r);
        point.push(m + s * z);
        score.push(-spec.kernel.score(z) / s);
    }
    let in_domain = spec.domain.contains(&point);
    Draw {
        point,
        score,
        in_domain,
    }
}

struct Evaluated {
    log_h: f64,
    theta_f: f64,
    below: bool,
}

fn evaluate_point(spec: &SmoothingSpec, f: &dyn Objective, draw: &Draw) -> Result<Evaluated> {
    if !draw.in_domain {
        return Ok(Evaluated {
            log_h: f64::NEG_INFINITY,
            theta_f: 0.0,
            below: false,
        });
    }
    let y = f.evaluate(&draw.point);
    if !y.is_finite() {
        return Err(Error::NonFiniteObjective { value: y });
    }
    let log_h = spec.log_transform(y)?;
    Ok(Evaluated {
        log_h: log_h.unwrap_or(f64::NEG_INFINITY),
        theta_f: (spec.theta * y).abs(),
        below: log_h.is_none(),
    })
}

fn check_mu(spec: &SmoothingSpec, mu: &[f64]) -> Result<()> {
    if mu.len() != spec.dim() {
        return Err(Error::Dimension {
            expected: spec.dim(),
            actual: mu.len(),
        });
    }
    Ok(())
}

/// Draws and evaluates one batch of `spec.batch` points around `μ`.
pub fn draw_batch(spec: &SmoothingSpec, f: &dyn Objective, mu: &[f64], key: u64, scaling: Scaling) -> Result<Batch> {
    check_mu(spec, mu)?;
    let evaluated = par::map_indexed(spec.batch, |k| {
        let draw = draw_point(spec, mu, key, k as u64);
        evaluate_point(spec, f, &draw).map(|e| (draw, e))
    });
    let evaluated: Vec<(Draw, Evaluated)> = evaluated.into_iter().collect::<Result<_>>()?;

    let max_log = evaluated
        .iter()
        .map(|(_, e)| e.log_h)
        .fold(f64::NEG_INFINITY, f64::max);
    let starved = max_log == f64::NEG_INFINITY;
    let log_scale = match scaling {
        Scaling::Absolute => {
            if max_log > OVERFLOW_GUARD {
                return Err(Error::AmplificationOverflow {
                    family: spec.transform.family(),
                    theta: spec.theta,
                    y: f64::NAN,
                    log_value: max_log,
                });
            }
            0.0
        }
        Scaling::BatchMax if starved => 0.0,
        Scaling::BatchMax => max_log,
    };

    let mut diagnostics = Diagnostics {
        batch: spec.batch,
        in_domain: 0,
        below_transform_domain: 0,
        max_abs_theta_f: 0.0,
        baseline_range: None,
        starved,
        log_scale,
    };
    let samples = evaluated
        .into_iter()
        .map(|(draw, e)| {
            diagnostics.in_domain += draw.in_domain as usize;
            diagnostics.below_transform_domain += e.below as usize;
            diagnostics.max_abs_theta_f = diagnostics.max_abs_theta_f.max(e.theta_f);
            GradientSample {
                point: draw.point,
                h: (e.log_h - log_scale).exp(),
                log_h: e.log_h,
                score: draw.score,
                in_domain: draw.in_domain,
            }
        })
        .collect();
    Ok(Batch {
        samples,
        log_scale,
        diagnostics,
    })
}

impl Batch {
    fn dim(&self) -> usize {
        self.samples.first().map_or(0, |s| s.score.len())
    }

    /// `(1/B) Σ h_k S_k`.
    pub fn plain(&self) -> Vec<f64> {
        let mut g = vec![0.0; self.dim()];
        for s in &self.samples {
            for (gi, si) in g.iter_mut().zip(&s.score) {
                *gi += s.h * si;
            }
        }
        let b = self.samples.len() as f64;
        g.iter_mut().for_each(|v| *v /= b);
        g
    }

    /// Leave-one-out baselines `b_k = (U - h_k‖S_k‖²)/(V - ‖S_k‖² + λ)`.
    pub fn baselines(&self, ridge: f64) -> Vec<f64> {
        let norms: Vec<f64> = self.samples.iter().map(GradientSample::score_norm_sq).collect();
        let u: f64 = self.samples.iter().zip(&norms).map(|(s, n)| s.h * n).sum();
        let v: f64 = norms.iter().sum();
        self.samples
            .iter()
            .zip(&norms)
            .map(|(s, n)| (u - s.h * n) / (v - n + ridge))
            .collect()
    }

    /// `(1/B) Σ (h_k - b_k) S_k`, with the baselines used.
    pub fn loo(&self, ridge: f64) -> (Vec<f64>, Vec<f64>) {
        let b = self.baselines(ridge);
        let mut g = vec![0.0; self.dim()];
        for (s, bk) in self.samples.iter().zip(&b) {
            let w = s.h - bk;
            for (gi, si) in g.iter_mut().zip(&s.score) {
                *gi += w * si;
            }
        }
        let n = self.samples.len() as f64;
        g.iter_mut().for_each(|v| *v /= n);
        (g, b)
    }

    pub fn estimate(&self, estimator: Estimator, ridge: f64) -> Result<GradientEstimate> {
        let mut diagnostics = self.diagnostics.clone();
        let gradient = match estimator {
            Estimator::Plain => self.plain(),
            Estimator::LeaveOneOut => {
                if self.samples.len() < 2 {
                    return Err(Error::param(
                        "batch",
                        self.samples.len() as f64,
                        "batch >= 2 for the leave-one-out estimator",
                    ));
                }
                let (g, b) = self.loo(ridge);
                let lo = b.iter().copied().fold(f64::INFINITY, f64::min);
                let hi = b.iter().copied().fold(f64::NEG_INFINITY, f64::max);
                diagnostics.baseline_range = Some((lo, hi));
                g
            }
        };
        Ok(GradientEstimate {
            gradient,
            log_scale: self.log_scale,
            diagnostics,
        })
    }
}

/// General entry point used by the optimizer.
pub fn gradient(
    spec: &SmoothingSpec,
    f: &dyn Objective,
    mu: &[f64],
    key: u64,
    estimator: Estimator,
    scaling: Scaling,
) -> Result<GradientEstimate> {
    if estimator == Estimator::LeaveOneOut && spec.batch < 2 {
        return Err(Error::param("batch", spec.batch as f64, "batch >= 2 for the leave-one-out estimator"));
    }
    draw_batch(spec, f, mu, key, scaling)?.estimate(estimator, spec.ridge)
}

/// Plain score-function estimate in absolute units.
pub fn score_gradient(spec: &SmoothingSpec, f: &dyn Objective, mu: &[f64], key: u64) -> Result<GradientEstimate> {
    gradient(spec, f, mu, key, Estimator::Plain, Scaling::Absolute)
}

/// Leave-one-out estimate in absolute units.
pub fn loo_gradient(spec: &SmoothingSpec, f: &dyn Objective, mu: &[f64], key: u64) -> Result<GradientEstimate> {
    gradient(spec, f, mu, key, Estimator::LeaveOneOut, Scaling::Absolute)
}

/// A Monte Carlo mean with its standard error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct McValue {
    pub mean: f64,
    pub std_err: f64,
    pub n: usize,
}

const CHUNK: usize = 4096;

/// Sums `(x, x²)` over `n` indexed terms in fixed-size chunks, reduced in
/// order.
pub(crate) fn chunked_moments<F>(n: usize, term: F) -> Result<(f64, f64)>
where
    F: Fn(usize) -> Result<f64> + Sync + Send,
{
    let chunks = n.div_ceil(CHUNK);
    let parts: Vec<Result<(f64, f64)>> = par::map_indexed(chunks, |c| {
        let (mut s, mut s2) = (0.0, 0.0);
        for i in c * CHUNK..((c + 1) * CHUNK).min(n) {
            let v = term(i)?;
            s += v;
            s2 += v * v;
        }
        Ok((s, s2))
    });
    let mut s = 0.0;
    let mut s2 = 0.0;
    for p in parts {
        let (a, b) = p?;
        s += a;
        s2 += b;
    }
    Ok((s, s2))
}

pub(crate) fn mean_and_se(sum: f64, sum_sq: f64, n: usize) -> (f64, f64) {
    let nf = n as f64;
    let mean = sum / nf;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = ((sum_sq - nf * mean * mean) / (nf - 1.0)).max(0.0);
    (mean, (var / nf).sqrt())
}

/// Monte Carlo estimate of `G(μ)` from `n` draws (in absolute units).
/// Draw `i` uses `rng::stream(key, i)`, so equal keys give common random
/// numbers across different `μ`.
pub fn smoothed_value(spec: &SmoothingSpec, f: &dyn Objective, mu: &[f64], n: usize, key: u64) -> Result<McValue> {
    check_mu(spec, mu)?;
    if n == 0 {
        return Err(Error::param("n", 0.0, "n >= 1"));
    }
    let (s, s2) = chunked_moments(n, |i| {
        let draw = draw_point(spec, mu, key, i as u64);
        let e = evaluate_point(spec, f, &draw)?;
        if e.log_h > OVERFLOW_GUARD {
            return Err(Error::AmplificationOverflow {
                family: spec.transform.family(),
                theta: spec.theta,
                y: f64::NAN,
                log_value: e.log_h,
            });
        }
        Ok(e.log_h.exp())
    })?;
    let (mean, std_err) = mean_and_se(s, s2, n);
    Ok(McValue { mean, std_err, n })
}

/// Central finite difference of `G` along coordinate `coord` with common
/// random numbers: draw `i` uses the same kernel sample at `μ + δe` and
/// `μ - δe`. An independent oracle for `∂G/∂μ_coord` in absolute units.
pub fn finite_difference_oracle(
    spec: &SmoothingSpec,
    f: &dyn Objective,
    mu: &[f64],
    coord: usize,
    delta: f64,
    n: usize,
    key: u64,
) -> Result<McValue> {
    check_mu(spec, mu)?;
    if coord >= mu.len() {
        return Err(Error::Dimension {
            expected: mu.len(),
            actual: coord + 1,
        });
    }
    if !(delta > 0.0) || n < 2 {
        return Err(Error::Config("finite differences need delta > 0 and n >= 2".into()));
    }
    let mut up = mu.to_vec();
    let mut down = mu.to_vec();
    up[coord] += delta;
    down[coord] -= delta;
    let h = |m: &[f64], i: usize| -> Result<f64> {
        let e = evaluate_point(spec, f, &draw_point(spec, m, key, i as u64))?;
        if e.log_h > OVERFLOW_GUARD {
            return Err(Error::AmplificationOverflow {
                family: spec.transform.family(),
                theta: spec.theta,
                y: f64::NAN,
                log_value: e.log_h,
            });
        }
        Ok(e.log_h.exp())
    };
    let (s, s2) = chunked_moments(n, |i| Ok((h(&up, i)? - h(&down, i)?) / (2.0 * delta)))?;
    let (mean, std_err) = mean_and_se(s, s2, n);
    Ok(McValue { mean, std_err, n })
}

/// Result of [`second_moment_probe`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SecondMomentReport {
    pub estimator: Estimator,
    pub batches: usize,
    /// Mean of `‖ĝ‖²` over batches.
    pub mean_sq_norm: f64,
    pub std_err: f64,
    /// Plug-in `(E[h‖S‖²])² / (E[h²‖S‖²] E[‖S‖²])`.
    pub r2: f64,
    /// `g*² · I · S2(Σ)`, when `g*` was supplied.
    pub bound: Option<f64>,
    /// `mean ≤ bound + 3 SE`.
    pub within_bound: Option<bool>,
    pub starved_batches: usize,
}

struct BatchMoments {
    sq_plain: f64,
    sq_loo: f64,
    h_s: f64,
    h2_s: f64,
    s: f64,
    starved: bool,
}

fn batch_moments(spec: &SmoothingSpec, f: &dyn Objective, mu: &[f64], key: u64) -> Result<BatchMoments> {
    let b = draw_batch(spec, f, mu, key, Scaling::Absolute)?;
    let sq = |g: &[f64]| g.iter().map(|v| v * v).sum::<f64>();
    let sq_plain = sq(&b.plain());
    let sq_loo = if b.samples.len() >= 2 {
        sq(&b.loo(spec.ridge).0)
    } else {
        f64::NAN
    };
    let (mut h_s, mut h2_s, mut s) = (0.0, 0.0, 0.0);
    for x in &b.samples {
        let n = x.score_norm_sq();
        h_s += x.h * n;
        h2_s += x.h * x.h * n;
        s += n;
    }
    Ok(BatchMoments {
        sq_plain,
        sq_loo,
        h_s,
        h2_s,
        s,
        starved: b.diagnostics.starved,
    })
}

fn probe_all(spec: &SmoothingSpec, f: &dyn Objective, mu: &[f64], batches: usize, key: u64) -> Result<Vec<BatchMoments>> {
    check_mu(spec, mu)?;
    if batches < 100 {
        return Err(Error::param("batches", batches as f64, "batches >= 100"));
    }
    par::map_indexed(batches, |i| batch_moments(spec, f, mu, rng::derive(key, i as u64)))
        .into_iter()
        .collect()
}

/// Empirical second moment of an estimator at a fixed `μ` over independent
/// batches, with the plug-in alignment coefficient `R²`.
pub fn second_moment_probe(
    spec: &SmoothingSpec,
    f: &dyn Objective,
    mu: &[f64],
    batches: usize,
    estimator: Estimator,
    key: u64,
    g_star: Option<f64>,
) -> Result<SecondMomentReport> {
    if estimator == Estimator::LeaveOneOut && spec.batch < 2 {
        return Err(Error::param("batch", spec.batch as f64, "batch >= 2 for the leave-one-out estimator"));
    }
    let all = probe_all(spec, f, mu, batches, key)?;
    let pick = |m: &BatchMoments| match estimator {
        Estimator::Plain => m.sq_plain,
        Estimator::LeaveOneOut => m.sq_loo,
    };
    let sum: f64 = all.iter().map(pick).sum();
    let sum_sq: f64 = all.iter().map(|m| pick(m).powi(2)).sum();
    let (mean, se) = mean_and_se(sum, sum_sq, all.len());
    let h_s: f64 = all.iter().map(|m| m.h_s).sum();
    let h2_s: f64 = all.iter().map(|m| m.h2_s).sum();
    let s: f64 = all.iter().map(|m| m.s).sum();
    let total = (all.len() * spec.batch) as f64;
    let r2 = (h_s / total).powi(2) / ((h2_s / total) * (s / total));
    let bound = match g_star {
        Some(g) => Some(g * g * spec.kernel.compute_constants()?.fisher_information * spec.s2()),
        None => None,
    };
    Ok(SecondMomentReport {
        estimator,
        batches: all.len(),
        mean_sq_norm: mean,
        std_err: se,
        r2,
        bound,
        within_bound: bound.map(|q| mean <= q + 3.0 * se),
        starved_batches: all.iter().filter(|m| m.starved).count(),
    })
}

/// Plain and leave-one-out second moments on the same batches.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairedMoments {
    pub batches: usize,
    pub plain: f64,
    pub loo: f64,
    /// Mean and standard error of `‖ĝ_loo‖² - ‖ĝ_plain‖²`.
    pub diff_mean: f64,
    pub diff_se: f64,
}

impl PairedMoments {
    /// One-sided test that the leave-one-out moment is smaller, at the
    /// normal quantile `z`.
    pub fn loo_smaller(&self, z: f64) -> bool {
        self.diff_mean + z * self.diff_se < 0.0
    }
}

pub fn paired_second_moments(
    spec: &SmoothingSpec,
    f: &dyn Objective,
    mu: &[f64],
    batches: usize,
    key: u64,
) -> Result<PairedMoments> {
    if spec.batch < 2 {
        return Err(Error::param("batch", spec.batch as f64, "batch >= 2 for the leave-one-out estimator"));
    }
    let all = probe_all(spec, f, mu, batches, key)?;
    let n = all.len() as f64;
    let diffs: Vec<f64> = all.iter().map(|m| m.sq_loo - m.sq_plain).collect();
    let (diff_mean, diff_se) = mean_and_se(diffs.iter().sum(), diffs.iter().map(|d| d * d).sum(), all.len());
    Ok(PairedMoments {
        batches: all.len(),
        plain: all.iter().map(|m| m.sq_plain).sum::<f64>() / n,
        loo: all.iter().map(|m| m.sq_loo).sum::<f64>() / n,
        diff_mean,
        diff_se,
    })
}

/// `G`, `G'` and `G''` of a one-dimensional objective by adaptive
/// quadrature. Values are reported in units of `exp(log_reference)`, by
/// default `g(θ, f*)`.
pub struct Surrogate1d<'a> {
    f: &'a dyn Objective,
    kernel: Kernel,
    transform: Transform,
    theta: f64,
    sigma: f64,
    breaks: Vec<f64>,
    log_reference: f64,
    quadrature: Quadrature,
}

impl<'a> Surrogate1d<'a> {
    pub fn new(
        f: &'a dyn Objective,
        kernel: Kernel,
        transform: Transform,
        theta: f64,
        sigma: f64,
        breaks: Vec<f64>,
    ) -> Result<Self> {
        if f.dim() != 1 {
            return Err(Error::Dimension {
                expected: 1,
                actual: f.dim(),
            });
        }
        kernel.validate()?;
        transform.validate()?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::param("sigma", sigma, "sigma > 0"));
        }
        let dom = f.domain();
        if !(dom.lo[0].is_finite() && dom.hi[0].is_finite()) {
            return Err(Error::Config("quadrature surrogate needs a bounded domain".into()));
        }
        let log_reference = match f.optimum_value() {
            Some(y) if transform.in_domain(y) => transform.log_eval(theta, y)?,
            _ => {
                transform.log_eval(theta, 1.0)?;
                0.0
            }
        };
        Ok(Surrogate1d {
            f,
            kernel,
            transform,
            theta,
            sigma,
            breaks,
            log_reference,
            quadrature: Quadrature::with_abs_tol(1e-11),
        })
    }

    pub fn with_reference(mut self, log_reference: f64) -> Self {
        self.log_reference = log_reference;
        self
    }

    pub fn log_reference(&self) -> f64 {
        self.log_reference
    }

    fn scaled_h(&self, x: f64) -> f64 {
        let y = self.f.evaluate(&[x]);
        if !self.transform.in_domain(y) {
            return 0.0;
        }
        match self.transform.log_eval(self.theta, y) {
            Ok(l) => (l - self.log_reference).exp(),
            Err(_) => f64::NAN,
        }
    }

    fn integrate<W: Fn(f64) -> f64>(&self, mu: f64, weight: W) -> Result<f64> {
        let (lo, hi) = (self.f.domain().lo[0], self.f.domain().hi[0]);
        let mut pts = vec![lo, hi];
        pts.extend(self.breaks.iter().copied());
        for k in [-30.0, -10.0, -3.0, -1.0, 0.0, 1.0, 3.0, 10.0, 30.0] {
            pts.push(mu + k * self.sigma);
        }
        pts.retain(|&p| p >= lo && p <= hi);
        pts.sort_by(f64::total_cmp);
        pts.dedup();
        let s = self.sigma;
        let r = self
            .quadrature
            .integrate_with_breaks(|x| self.scaled_h(x) * weight((x - mu) / s) / s, &pts)?;
        if !r.value.is_finite() {
            return Err(Error::Quadrature {
                estimate: r.value,
                achieved: r.abs_error,
                requested: self.quadrature.abs_tol,
            });
        }
        Ok(r.value)
    }

    /// `G(μ)`.
    pub fn value(&self, mu: f64) -> Result<f64> {
        self.integrate(mu, |z| self.kernel.density(z))
    }

    /// `G'(μ) = -(1/σ) ∫ h(x) p'((x-μ)/σ) dx/σ`.
    pub fn derivative(&self, mu: f64) -> Result<f64> {
        let s = self.sigma;
        self.integrate(mu, |z| -self.kernel.density_derivative(z) / s)
    }

    /// `G''(μ) = (1/σ²) ∫ h(x) p''((x-μ)/σ) dx/σ`.
    pub fn second_derivative(&self, mu: f64) -> Result<f64> {
        let s2 = self.sigma * self.sigma;
        self.integrate(mu, |z| self.kernel.density_second_derivative(z) / s2)
    }

    /// Zeros of `G'` on `[a, b]`, bracketed on a uniform grid of `n` points
    /// and refined by bisection.
    pub fn stationary_points(&self, a: f64, b: f64, n: usize) -> Result<Vec<f64>> {
        if n < 2 || !(a < b) {
            return Err(Error::Config("stationary point scan needs a < b and at least 2 grid points".into()));
        }
        let xs: Vec<f64> = (0..n).map(|i| a + (b - a) * i as f64 / (n - 1) as f64).collect();
        let ds: Vec<f64> = par::map_slice(&xs, |&x| self.derivative(x))
            .into_iter()
            .collect::<Result<_>>()?;
        let mut zeros = Vec::new();
        for i in 0..n - 1 {
            let (d0, d1) = (ds[i], ds[i + 1]);
            if d0 == 0.0 {
                zeros.push(xs[i]);
            } else if d0.signum() != d1.signum() && d1 != 0.0 {
                let (mut lo, mut hi, mut dlo) = (xs[i], xs[i + 1], d0);
                for _ in 0..50 {
                    let m = 0.5 * (lo + hi);
                    let dm = self.derivative(m)?;
                    if dm.signum() == dlo.signum() {
                        lo = m;
                        dlo = dm;
                    } else {
                        hi = m;
                    }
                }
                zeros.push(0.5 * (lo + hi));
            }
        }
        if ds[n - 1] == 0.0 {
            zeros.push(xs[n - 1]);
        }
        Ok(zeros)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{ackley, FnObjective, LandscapeObjective};
    use approx::assert_abs_diff_eq;

    fn wide_1d() -> DomainBox {
        DomainBox::cube(1, -1e6, 1e6)
    }

    fn identity() -> Transform {
        Transform::Power { c: 0.0 }
    }

    #[test]
    fn spec_validation() {
        let d = DomainBox::cube(2, -1.0, 1.0);
        let ok = SmoothingSpec::isotropic(Kernel::Gaussian, Transform::Exponential, 1.0, 0.5, 10, d.clone()).unwrap();
        assert_abs_diff_eq!(ok.ridge, 9f64.powf(-0.125));
        assert_eq!(ok.s2(), 8.0);
        assert!(SmoothingSpec::isotropic(Kernel::Gaussian, Transform::Exponential, -1.0, 0.5, 10, d.clone()).is_err());
        assert!(SmoothingSpec::isotropic(Kernel::Gaussian, Transform::Exponential, 1.0, 0.0, 10, d.clone()).is_err());
        assert!(SmoothingSpec::isotropic(Kernel::Gaussian, Transform::Exponential, 1.0, 0.5, 0, d.clone()).is_err());
        assert!(ok.clone().with_ridge(0.0).is_err());
        assert!(SmoothingSpec::new(Kernel::Gaussian, Transform::Exponential, 1.0, vec![1.0], 4, d).is_err());
    }

    #[test]
    fn constant_objective_value() {
        let f = FnObjective::new("one", DomainBox::cube(3, -100.0, 100.0), |_: &[f64]| 1.0);
        let spec = SmoothingSpec::isotropic(Kernel::Logistic, identity(), 1.0, 1.0, 4, f.domain().clone()).unwrap();
        let v = smoothed_value(&spec, &f, &[0.5, -0.5, 0.0], 2000, 1).unwrap();
        assert_eq!(v.mean, 1.0);
        assert_eq!(v.std_err, 0.0);
    }

    #[test]
    fn second_moment_of_gaussian() {
        // f(x) = x², identity transform: G(0) = E[Z²] = 1
        let f = FnObjective::new("sq", wide_1d(), |x: &[f64]| x[0] * x[0]);
        let spec = SmoothingSpec::isotropic(Kernel::Gaussian, identity(), 1.0, 1.0, 2, wide_1d()).unwrap();
        let v = smoothed_value(&spec, &f, &[0.0], 200_000, 9).unwrap();
        assert!((v.mean - 1.0).abs() < 4.0 * v.std_err, "{v:?}");
    }

    #[test]
    fn far_outside_domain_vanishes() {
        let f = FnObjective::new("one", DomainBox::cube(1, -1.0, 1.0), |_: &[f64]| 1.0);
        let spec = SmoothingSpec::isotropic(Kernel::Gaussian, identity(), 1.0, 0.5, 8, f.domain().clone()).unwrap();
        assert_eq!(smoothed_value(&spec, &f, &[50.0], 1000, 2).unwrap().mean, 0.0);
        let g = score_gradient(&spec, &f, &[50.0], 3).unwrap();
        assert_eq!(g.gradient, vec![0.0]);
        assert!(g.diagnostics.starved);
        assert_eq!(g.diagnostics.in_domain, 0);
    }

    #[test]
    fn stein_identity_mean() {
        // f(x) = x with identity transform needs y > 0; shift so f > 0 on S
        let f = FnObjective::new("lin", DomainBox::cube(1, -1e3, 1e3), |x: &[f64]| x[0] + 2e3);
        let spec = SmoothingSpec::isotropic(Kernel::Gaussian, identity(), 1.0, 1.0, 50, f.domain().clone()).unwrap();
        let n = 4000;
        let gs: Vec<f64> = (0..n)
            .map(|i| score_gradient(&spec, &f, &[0.0], i).unwrap().gradient[0])
            .collect();
        let (m, se) = mean_and_se(gs.iter().sum(), gs.iter().map(|v| v * v).sum(), n as usize);
        assert!((m - 1.0).abs() < 4.0 * se, "{m} ± {se}");
    }

    #[test]
    fn loo_two_sample_baseline() {
        let f = FnObjective::new("q", DomainBox::cube(2, -10.0, 10.0), |x: &[f64]| 5.0 - x[0] * x[0] + x[1]);
        let spec = SmoothingSpec::isotropic(Kernel::Logistic, identity(), 1.0, 0.7, 2, f.domain().clone())
            .unwrap()
            .with_ridge(0.3)
            .unwrap();
        let b = draw_batch(&spec, &f, &[0.1, 0.2], 11, Scaling::Absolute).unwrap();
        let base = b.baselines(0.3);
        let n2 = b.samples[1].score_norm_sq();
        assert_abs_diff_eq!(base[0], b.samples[1].h * n2 / (n2 + 0.3), epsilon = 1e-12);
    }

    #[test]
    fn loo_cancels_constant_h() {
        let f = FnObjective::new("c", DomainBox::cube(3, -1e3, 1e3), |_: &[f64]| 2.0);
        let spec = SmoothingSpec::isotropic(Kernel::Logistic, identity(), 1.0, 1.0, 20, f.domain().clone())
            .unwrap()
            .with_ridge(1e-12)
            .unwrap();
        let g = loo_gradient(&spec, &f, &[0.0; 3], 4).unwrap();
        assert!(g.norm() < 1e-9, "{:?}", g.gradient);
        let (lo, hi) = g.diagnostics.baseline_range.unwrap();
        assert_abs_diff_eq!(lo, 2.0, epsilon = 1e-9);
        assert_abs_diff_eq!(hi, 2.0, epsilon = 1e-9);
    }

    #[test]
    fn loo_needs_two_samples() {
        let f = FnObjective::new("c", DomainBox::cube(1, -1.0, 1.0), |_: &[f64]| 1.0);
        let spec = SmoothingSpec::isotropic(Kernel::Logistic, identity(), 1.0, 1.0, 1, f.domain().clone()).unwrap();
        assert!(matches!(loo_gradient(&spec, &f, &[0.0], 1), Err(Error::Parameter { .. })));
        assert!(score_gradient(&spec, &f, &[0.0], 1).is_ok());
    }

    #[test]
    fn rescaling_is_exact() {
        let f = ackley(3).unwrap();
        let spec = SmoothingSpec::isotropic(
            Kernel::Logistic,
            Transform::PowerExpHybrid { c: 600.0, beta: 10.0 },
            5.0,
            0.5,
            16,
            f.domain().clone(),
        )
        .unwrap();
        let mu = [1.0, -2.0, 0.5];
        for est in [Estimator::Plain, Estimator::LeaveOneOut] {
            let abs = gradient(&spec, &f, &mu, 8, est, Scaling::Absolute).unwrap();
            let rel = gradient(&spec, &f, &mu, 8, est, Scaling::BatchMax).unwrap();
            let k = rel.log_scale.exp();
            for (a, r) in abs.gradient.iter().zip(&rel.gradient) {
                assert!((a - r * k).abs() <= 1e-10 * a.abs().max(1.0), "{a} vs {}", r * k);
            }
        }
    }

    #[test]
    fn overflow_is_reported_in_absolute_mode() {
        let f = FnObjective::new("big", DomainBox::cube(1, -10.0, 10.0), |_: &[f64]| 100.0);
        let spec = SmoothingSpec::isotropic(Kernel::Gaussian, Transform::Exponential, 10.0, 1.0, 4, f.domain().clone()).unwrap();
        assert!(matches!(
            score_gradient(&spec, &f, &[0.0], 1),
            Err(Error::AmplificationOverflow { .. })
        ));
        let g = gradient(&spec, &f, &[0.0], 1, Estimator::Plain, Scaling::BatchMax).unwrap();
        assert_eq!(g.log_scale, 1000.0);
    }

    #[test]
    fn nonfinite_objective_is_an_error() {
        let f = FnObjective::new("nan", DomainBox::cube(1, -10.0, 10.0), |_: &[f64]| f64::NAN);
        let spec = SmoothingSpec::isotropic(Kernel::Gaussian, Transform::Exponential, 1.0, 1.0, 4, f.domain().clone()).unwrap();
        assert!(matches!(score_gradient(&spec, &f, &[0.0], 1), Err(Error::NonFiniteObjective { .. })));
    }

    #[test]
    fn below_transform_domain_counts() {
        let f = FnObjective::new("neg", DomainBox::cube(1, -10.0, 10.0), |x: &[f64]| x[0]);
        let spec = SmoothingSpec::isotropic(Kernel::Gaussian, identity(), 1.0, 1.0, 200, f.domain().clone()).unwrap();
        let g = score_gradient(&spec, &f, &[0.0], 5).unwrap();
        let d = g.diagnostics;
        assert_eq!(d.in_domain, 200);
        assert!(d.below_transform_domain > 60 && d.below_transform_domain < 140);
    }

    #[test]
    fn r2_is_one_for_constant_h() {
        let f = FnObjective::new("c", DomainBox::cube(2, -1e3, 1e3), |_: &[f64]| 3.0);
        let spec = SmoothingSpec::isotropic(Kernel::Logistic, identity(), 1.0, 1.0, 10, f.domain().clone()).unwrap();
        let r = second_moment_probe(&spec, &f, &[0.0, 0.0], 200, Estimator::Plain, 3, Some(3.0)).unwrap();
        assert_abs_diff_eq!(r.r2, 1.0, epsilon = 1e-12);
        assert_eq!(r.within_bound, Some(true));
        assert!(second_moment_probe(&spec, &f, &[0.0, 0.0], 99, Estimator::Plain, 3, None).is_err());
    }

    #[test]
    fn batch_is_reproducible() {
        let f = ackley(4).unwrap();
        let spec = SmoothingSpec::isotropic(Kernel::Logistic, Transform::Exponential, 1.0, 0.5, 32, f.domain().clone()).unwrap();
        let a = draw_batch(&spec, &f, &[1.0; 4], 77, Scaling::BatchMax).unwrap();
        let b = par::with_jobs(1, || draw_batch(&spec, &f, &[1.0; 4], 77, Scaling::BatchMax).unwrap());
        assert_eq!(a.plain(), b.plain());
        assert_eq!(a.loo(0.5).0, b.loo(0.5).0);
    }

    #[test]
    fn surrogate_approaches_f_for_small_sigma() {
        let f = LandscapeObjective::standard();
        for &x in &[-20.0, -9.0, -3.3, 0.0, 0.7, 1.0, 4.0, 11.0] {
            let s = Surrogate1d::new(&f, Kernel::Gaussian, identity(), 1.0, 1e-2, f.breakpoints()).unwrap();
            assert!((s.value(x).unwrap() - f.value(x)).abs() < 1e-3, "x = {x}");
        }
    }

    #[test]
    fn surrogate_derivatives_match_differences() {
        let f = LandscapeObjective::standard();
        let s = Surrogate1d::new(&f, Kernel::Logistic, Transform::Exponential, 3.0, 1.5, f.breakpoints()).unwrap();
        for &mu in &[-7.0, 0.0, 2.5] {
            let h = 1e-3;
            let fd1 = (s.value(mu + h).unwrap() - s.value(mu - h).unwrap()) / (2.0 * h);
            assert_abs_diff_eq!(s.derivative(mu).unwrap(), fd1, epsilon = 1e-6);
            let fd2 = (s.derivative(mu + h).unwrap() - s.derivative(mu - h).unwrap()) / (2.0 * h);
            assert_abs_diff_eq!(s.second_derivative(mu).unwrap(), fd2, epsilon = 1e-6);
        }
    }
}
