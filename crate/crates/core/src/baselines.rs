//! Comparison optimizers.
//!
//! All two-point methods share one gradient estimator with a shared center,
//! `ĝ = (1/B) Σ_k ((f(μ + σu_k) - f(μ))/σ) u_k` with `u_k ~ N(0, I)`.
//! The center value is the objective at the current iterate, which the
//! driver already evaluated for metrics, so a step costs `B` perturbed
//! evaluations plus one evaluation of the new iterate.
//!
//! Update rules (ascent form):
//!
//! * ZO-SGD: `μ += η₀ ĝ`, `σ` fixed.
//! * RSGF: `μ += η₀ ĝ`, `σ_t = σ₀ γ^t`.
//! * ZO-AdaMM: `m = β₁m + (1-β₁)ĝ`, `v = β₂v + (1-β₂)ĝ²`, `v̂ = max(v̂, v)`,
//!   `μ += η₀ m/(√v̂ + ε)`.
//! * ZO-SLGHr: `μ += η₀ ĝ`, `σ_t = σ₀ γ^t`.
//! * ZO-SLGHd: `μ += η₀ ĝ`, then
//!   `σ ← min(σ + α ĝ_σ, γσ)` with
//!   `ĝ_σ = (1/B) Σ_k (f(μ + σu_k) - f(μ))(‖u_k‖² - d)/σ`, the derivative of
//!   the Gaussian homotopy in its scale.
//!
//! Scales are floored at [`SIGMA_FLOOR`]; hitting the floor sets a flag.
//! EPGS is ProMoT with a Gaussian kernel and exponential transform, see
//! [`epgs_config`].

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernels::Kernel;
use crate::objectives::{DomainBox, Objective};
use crate::optimizer::{divergence_limit, eval_metric, Schedule, Trajectory};
use crate::smoothing::SmoothingSpec;
use crate::transforms::Transform;
use crate::{par, rng};

pub const SIGMA_FLOOR: f64 = 1e-12;
const ADAMM_EPS: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineMethod {
    Rsgf,
    ZoSgd,
    ZoAdamm,
    ZoSlghd,
    ZoSlghr,
}

impl BaselineMethod {
    pub fn name(&self) -> &'static str {
        match self {
            BaselineMethod::Rsgf => "rsgf",
            BaselineMethod::ZoSgd => "zo_sgd",
            BaselineMethod::ZoAdamm => "zo_adamm",
            BaselineMethod::ZoSlghd => "zo_slghd",
            BaselineMethod::ZoSlghr => "zo_slghr",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BaselineSpec {
    pub method: BaselineMethod,
    pub eta0: f64,
    pub sigma0: f64,
    pub batch: usize,
    /// Scale decrease factor (RSGF, ZO-SLGHd/r).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma_dec: Option<f64>,
    /// Scale step (ZO-SLGHd).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta1: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta2: Option<f64>,
}

fn need(v: Option<f64>, name: &'static str, method: BaselineMethod) -> Result<f64> {
    v.ok_or_else(|| Error::Config(format!("{} needs `{name}`", method.name())))
}

impl BaselineSpec {
    pub fn new(method: BaselineMethod, eta0: f64, sigma0: f64, batch: usize) -> Self {
        BaselineSpec {
            method,
            eta0,
            sigma0,
            batch,
            gamma_dec: None,
            alpha: None,
            beta1: None,
            beta2: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eta0 >= 0.0 && self.eta0.is_finite()) {
            return Err(Error::param("eta0", self.eta0, "eta0 >= 0"));
        }
        if !(self.sigma0 > 0.0 && self.sigma0.is_finite()) {
            return Err(Error::param("sigma0", self.sigma0, "sigma0 > 0"));
        }
        if self.batch < 1 {
            return Err(Error::param("batch", 0.0, "batch >= 1"));
        }
        let m = self.method;
        if matches!(m, BaselineMethod::Rsgf | BaselineMethod::ZoSlghd | BaselineMethod::ZoSlghr) {
            let g = need(self.gamma_dec, "gamma_dec", m)?;
            if !(g > 0.0 && g <= 1.0) {
                return Err(Error::param("gamma_dec", g, "0 < gamma_dec <= 1"));
            }
        }
        if m == BaselineMethod::ZoSlghd {
            let a = need(self.alpha, "alpha", m)?;
            if !(a > 0.0 && a.is_finite()) {
                return Err(Error::param("alpha", a, "alpha > 0"));
            }
        }
        if m == BaselineMethod::ZoAdamm {
            for (name, v) in [("beta1", self.beta1), ("beta2", self.beta2)] {
                let b = need(v, name, m)?;
                if !(b > 0.0 && b < 1.0) {
                    return Err(Error::param(name, b, "0 < beta < 1"));
                }
            }
        }
        Ok(())
    }
}

/// Mutable optimizer state.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineState {
    pub mu: Vec<f64>,
    /// `f(μ)` at the current iterate.
    pub f_mu: f64,
    pub sigma: f64,
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub v_hat: Vec<f64>,
    pub t: usize,
    pub sigma_clamped: bool,
}

impl BaselineState {
    pub fn new(mu: Vec<f64>, f_mu: f64, sigma: f64) -> Self {
        let d = mu.len();
        BaselineState {
            mu,
            f_mu,
            sigma,
            m: vec![0.0; d],
            v: vec![0.0; d],
            v_hat: vec![0.0; d],
            t: 0,
            sigma_clamped: false,
        }
    }
}

/// Two-point estimate at the state's iterate and scale.
#[derive(Debug, Clone, PartialEq)]
pub struct TwoPoint {
    pub gradient: Vec<f64>,
    /// Derivative estimate with respect to the scale.
    pub sigma_gradient: f64,
    pub evals: u64,
}

/// Shared-center two-point Gaussian estimator. Direction `k` is drawn from
/// `rng::stream(key, k)`.
pub fn two_point(f: &dyn Objective, mu: &[f64], f_mu: f64, sigma: f64, batch: usize, key: u64) -> Result<TwoPoint> {
    let d = mu.len();
    let parts = par::map_indexed(batch, |k| {
        let mut r = rng::stream(key, k as u64);
        let u: Vec<f64> = (0..d).map(|_| r.sample::<f64, _>(StandardNormal)).collect();
        let x: Vec<f64> = mu.iter().zip(&u).map(|(m, ui)| m + sigma * ui).collect();
        let y = f.evaluate(&x);
        if !y.is_finite() {
            return Err(Error::NonFiniteObjective { value: y });
        }
        Ok((u, y - f_mu))
    });
    let mut g = vec![0.0; d];
    let mut gs = 0.0;
    for p in parts {
        let (u, diff) = p?;
        let w = diff / sigma;
        for (gi, ui) in g.iter_mut().zip(&u) {
            *gi += w * ui;
        }
        let norm: f64 = u.iter().map(|v| v * v).sum();
        gs += diff * (norm - d as f64) / sigma;
    }
    let b = batch as f64;
    g.iter_mut().for_each(|v| *v /= b);
    Ok(TwoPoint {
        gradient: g,
        sigma_gradient: gs / b,
        evals: batch as u64,
    })
}

fn ascend(state: &mut BaselineState, eta: f64, g: &[f64]) {
    for (m, gi) in state.mu.iter_mut().zip(g) {
        *m += eta * gi;
    }
}

fn floor_sigma(state: &mut BaselineState, sigma: f64) {
    if sigma < SIGMA_FLOOR || !sigma.is_finite() {
        state.sigma = SIGMA_FLOOR;
        state.sigma_clamped = true;
    } else {
        state.sigma = sigma;
    }
}

fn decayed(spec: &BaselineSpec, t: usize) -> f64 {
    spec.sigma0 * spec.gamma_dec.unwrap_or(1.0).powi(t as i32)
}

/// Result of one step, before the new iterate is evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepInfo {
    pub grad_norm: f64,
    pub evals: u64,
}

fn info(tp: &TwoPoint) -> StepInfo {
    StepInfo {
        grad_norm: tp.gradient.iter().map(|v| v * v).sum::<f64>().sqrt(),
        evals: tp.evals,
    }
}

pub fn zo_sgd_step(spec: &BaselineSpec, state: &mut BaselineState, f: &dyn Objective, key: u64) -> Result<StepInfo> {
    let tp = two_point(f, &state.mu, state.f_mu, state.sigma, spec.batch, key)?;
    ascend(state, spec.eta0, &tp.gradient);
    state.t += 1;
    Ok(info(&tp))
}

pub fn rsgf_step(spec: &BaselineSpec, state: &mut BaselineState, f: &dyn Objective, key: u64) -> Result<StepInfo> {
    let tp = two_point(f, &state.mu, state.f_mu, state.sigma, spec.batch, key)?;
    ascend(state, spec.eta0, &tp.gradient);
    state.t += 1;
    floor_sigma(state, decayed(spec, state.t));
    Ok(info(&tp))
}

pub fn zo_slghr_step(spec: &BaselineSpec, state: &mut BaselineState, f: &dyn Objective, key: u64) -> Result<StepInfo> {
    rsgf_step(spec, state, f, key)
}

pub fn zo_slghd_step(spec: &BaselineSpec, state: &mut BaselineState, f: &dyn Objective, key: u64) -> Result<StepInfo> {
    let tp = two_point(f, &state.mu, state.f_mu, state.sigma, spec.batch, key)?;
    ascend(state, spec.eta0, &tp.gradient);
    state.t += 1;
    let alpha = spec.alpha.unwrap_or(0.0);
    let gamma = spec.gamma_dec.unwrap_or(1.0);
    let next = (state.sigma + alpha * tp.sigma_gradient).min(gamma * state.sigma);
    floor_sigma(state, next);
    Ok(info(&tp))
}

pub fn zo_adamm_step(spec: &BaselineSpec, state: &mut BaselineState, f: &dyn Objective, key: u64) -> Result<StepInfo> {
    let tp = two_point(f, &state.mu, state.f_mu, state.sigma, spec.batch, key)?;
    let b1 = spec.beta1.unwrap_or(0.9);
    let b2 = spec.beta2.unwrap_or(0.999);
    for i in 0..state.mu.len() {
        let g = tp.gradient[i];
        state.m[i] = b1 * state.m[i] + (1.0 - b1) * g;
        state.v[i] = b2 * state.v[i] + (1.0 - b2) * g * g;
        state.v_hat[i] = state.v_hat[i].max(state.v[i]);
        state.mu[i] += spec.eta0 * state.m[i] / (state.v_hat[i].sqrt() + ADAMM_EPS);
    }
    state.t += 1;
    Ok(info(&tp))
}

pub fn step(spec: &BaselineSpec, state: &mut BaselineState, f: &dyn Objective, key: u64) -> Result<StepInfo> {
    match spec.method {
        BaselineMethod::Rsgf => rsgf_step(spec, state, f, key),
        BaselineMethod::ZoSgd => zo_sgd_step(spec, state, f, key),
        BaselineMethod::ZoAdamm => zo_adamm_step(spec, state, f, key),
        BaselineMethod::ZoSlghd => zo_slghd_step(spec, state, f, key),
        BaselineMethod::ZoSlghr => zo_slghr_step(spec, state, f, key),
    }
}

/// Runs a baseline for `T` steps; step `t` uses key `rng::derive(seed, t)`.
pub fn run_baseline(spec: &BaselineSpec, f: &dyn Objective, mu0: &[f64], horizon: usize, seed: u64) -> Result<Trajectory> {
    spec.validate()?;
    if horizon < 1 {
        return Err(Error::param("T", 0.0, "T >= 1"));
    }
    if mu0.len() != f.dim() {
        return Err(Error::Dimension {
            expected: f.dim(),
            actual: mu0.len(),
        });
    }
    let limit = divergence_limit(f);
    let f0 = eval_metric(f, mu0, 0)?;
    let mut state = BaselineState::new(mu0.to_vec(), f0, spec.sigma0);
    let mut traj = Trajectory::start(mu0.to_vec(), f0, spec.sigma0, seed);
    for t in 0..horizon {
        let info = step(spec, &mut state, f, rng::derive(seed, t as u64)).map_err(|e| Error::Aborted {
            step: t,
            reason: e.to_string(),
        })?;
        let sup = state.mu.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(sup <= limit) {
            return Err(Error::Aborted {
                step: t,
                reason: format!("iterate escaped: max |mu_i| = {sup:e} exceeds {limit:e}"),
            });
        }
        state.f_mu = eval_metric(f, &state.mu, t + 1)?;
        traj.push(
            state.mu.clone(),
            state.f_mu,
            spec.eta0,
            info.grad_norm,
            0.0,
            state.sigma,
            info.evals + 1,
        );
    }
    Ok(traj)
}

/// EPGS as a ProMoT configuration: Gaussian kernel, exponential transform.
pub fn epgs_config(
    theta: f64,
    sigma: f64,
    eta0: f64,
    batch: usize,
    domain: DomainBox,
    gamma: f64,
) -> Result<(SmoothingSpec, Schedule)> {
    let spec = SmoothingSpec::isotropic(Kernel::Gaussian, Transform::Exponential, theta, sigma, batch, domain)?;
    Ok((spec, Schedule::Poly { eta0, gamma }))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::{ackley, FnObjective};

    fn spec(method: BaselineMethod) -> BaselineSpec {
        BaselineSpec {
            gamma_dec: Some(0.9),
            alpha: Some(0.01),
            beta1: Some(0.5),
            beta2: Some(0.5),
            ..BaselineSpec::new(method, 0.1, 0.5, 8)
        }
    }

    #[test]
    fn validation() {
        assert!(BaselineSpec::new(BaselineMethod::ZoSgd, 0.1, 0.5, 4).validate().is_ok());
        assert!(BaselineSpec::new(BaselineMethod::Rsgf, 0.1, 0.5, 4).validate().is_err());
        assert!(BaselineSpec::new(BaselineMethod::ZoAdamm, 0.1, 0.5, 4).validate().is_err());
        let mut s = spec(BaselineMethod::ZoSlghd);
        s.gamma_dec = Some(1.5);
        assert!(s.validate().is_err());
        assert!(BaselineSpec::new(BaselineMethod::ZoSgd, 0.1, 0.0, 4).validate().is_err());
    }

    #[test]
    fn slghr_sigma_sequence() {
        let f = ackley(3).unwrap();
        let s = spec(BaselineMethod::ZoSlghr);
        let t = run_baseline(&s, &f, &[1.0, 2.0, 3.0], 50, 4).unwrap();
        for (i, &sig) in t.sigmas.iter().enumerate() {
            assert_eq!(sig, 0.5 * 0.9f64.powi(i as i32));
        }
        assert_eq!(t.total_evals(), 9 * 50 + 1);
    }

    #[test]
    fn sigma_floor_flags() {
        let f = ackley(2).unwrap();
        let mut s = spec(BaselineMethod::ZoSlghr);
        s.gamma_dec = Some(1e-3);
        let mut st = BaselineState::new(vec![1.0, 1.0], f.evaluate(&[1.0, 1.0]), s.sigma0);
        for t in 0..6 {
            zo_slghr_step(&s, &mut st, &f, t).unwrap();
            st.f_mu = f.evaluate(&st.mu);
        }
        assert_eq!(st.sigma, SIGMA_FLOOR);
        assert!(st.sigma_clamped);
    }

    #[test]
    fn adamm_zero_gradient() {
        let f = FnObjective::new("flat", DomainBox::cube(2, -1.0, 1.0), |_: &[f64]| 1.0);
        let s = spec(BaselineMethod::ZoAdamm);
        let t = run_baseline(&s, &f, &[0.3, -0.2], 10, 1).unwrap();
        assert!(t.mus.iter().all(|m| m == &vec![0.3, -0.2]));
    }

    #[test]
    fn slghd_never_exceeds_decay_cap() {
        let f = ackley(4).unwrap();
        let s = spec(BaselineMethod::ZoSlghd);
        let t = run_baseline(&s, &f, &[2.0; 4], 30, 9).unwrap();
        for w in t.sigmas.windows(2) {
            assert!(w[1] <= 0.9 * w[0] || w[1] == SIGMA_FLOOR, "{w:?}");
        }
    }

    #[test]
    fn two_point_on_quadratic() {
        // f = -‖x‖²: the Gaussian-smoothed gradient is -2μ for every σ, and
        // the forward difference adds an O(σ) bias term with mean zero
        let f = FnObjective::new("q", DomainBox::cube(2, -10.0, 10.0), |x: &[f64]| -(x[0] * x[0] + x[1] * x[1]));
        let mu = [0.7, -1.2];
        let n = 4000;
        let mut sum = [0.0; 2];
        let mut sq = [0.0; 2];
        for k in 0..n {
            let tp = two_point(&f, &mu, f.evaluate(&mu), 1e-3, 20, k).unwrap();
            for i in 0..2 {
                sum[i] += tp.gradient[i];
                sq[i] += tp.gradient[i] * tp.gradient[i];
            }
        }
        for i in 0..2 {
            let m = sum[i] / n as f64;
            let se = ((sq[i] / n as f64 - m * m) / n as f64).sqrt();
            assert!((m + 2.0 * mu[i]).abs() < 3.0 * se + 1e-3, "{m} vs {}", -2.0 * mu[i]);
        }
    }

    #[test]
    fn epgs_shape() {
        let (s, sched) = epgs_config(5.0, 0.5, 0.5, 50, DomainBox::cube(3, -1.0, 1.0), 0.1).unwrap();
        assert_eq!(s.kernel, Kernel::Gaussian);
        assert_eq!(s.transform, Transform::Exponential);
        assert_eq!(sched, Schedule::Poly { eta0: 0.5, gamma: 0.1 });
    }
}
