//! Single-loop stochastic gradient ascent on the smoothed objective.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harness::write_atomic;
use crate::objectives::Objective;
use crate::rng;
use crate::smoothing::{self, Estimator, Scaling, SmoothingSpec};

/// Step-size schedule `η_t`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Schedule {
    /// `(σ²/d)(t+1)^{-(1/2+γ)}`; needs equal scales.
    IsotropicPoly { gamma: f64 },
    /// `S2(Σ)^{-1}(t+1)^{-(1/2+γ)}`.
    AnisotropicPoly { gamma: f64 },
    /// `η₀ (t+1)^{-(1/2+γ)}`.
    Poly { eta0: f64, gamma: f64 },
    Constant { eta: f64 },
    /// Explicit per-step values; must cover the horizon.
    Table { etas: Vec<f64> },
}

/// Default decay exponent offset.
pub const DEFAULT_GAMMA: f64 = 0.1;

fn check_gamma(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma < 0.5 {
        Ok(())
    } else {
        Err(Error::param("gamma", gamma, "0 < gamma < 1/2"))
    }
}

impl Schedule {
    pub fn validate(&self, spec: &SmoothingSpec, horizon: usize) -> Result<()> {
        match self {
            Schedule::IsotropicPoly { gamma } => {
                check_gamma(*gamma)?;
                if !spec.is_isotropic() {
                    return Err(Error::Config("isotropic_poly schedule needs equal scales".into()));
                }
            }
            Schedule::AnisotropicPoly { gamma } => check_gamma(*gamma)?,
            Schedule::Poly { eta0, gamma } => {
                check_gamma(*gamma)?;
                if !(*eta0 >= 0.0 && eta0.is_finite()) {
                    return Err(Error::param("eta0", *eta0, "eta0 >= 0"));
                }
            }
            Schedule::Constant { eta } => {
                if !(*eta >= 0.0 && eta.is_finite()) {
                    return Err(Error::param("eta", *eta, "eta >= 0"));
                }
            }
            Schedule::Table { etas } => {
                if etas.len() < horizon {
                    return Err(Error::Config(format!(
                        "step table has {} entries, horizon is {horizon}",
                        etas.len()
                    )));
                }
                if let Some(&e) = etas.iter().find(|e| !(**e >= 0.0 && e.is_finite())) {
                    return Err(Error::param("eta", e, "eta >= 0"));
                }
            }
        }
        Ok(())
    }

    /// `η_t` for this spec.
    pub fn eta(&self, t: usize, spec: &SmoothingSpec) -> f64 {
        let decay = |gamma: f64| ((t + 1) as f64).powf(-(0.5 + gamma));
        match self {
            Schedule::IsotropicPoly { gamma } => {
                let s = spec.scales[0];
                s * s / spec.dim() as f64 * decay(*gamma)
            }
            Schedule::AnisotropicPoly { gamma } => decay(*gamma) / spec.s2(),
            Schedule::Poly { eta0, gamma } => eta0 * decay(*gamma),
            Schedule::Constant { eta } => *eta,
            Schedule::Table { etas } => etas[t],
        }
    }
}

/// `C_γ = (1/2 - γ)/(2^{1/2-γ} - 1)`.
pub fn c_gamma(gamma: f64) -> Result<f64> {
    check_gamma(gamma)?;
    let a = 0.5 - gamma;
    Ok(a / ((a * std::f64::consts::LN_2).exp_m1()))
}

/// Sufficient iteration count for `E‖∇G(μ_T)‖² < ε` under the
/// `S2(Σ)^{-1}`-scaled polynomial schedule:
/// `[C_γ S2/ε · (g* + I max(K, I) g*³ (1 - C/2))]^{2/(1-2γ)}`. Pass the
/// variance-reduction constant `C` for the leave-one-out estimator.
pub fn grid_complexity_bound(
    gamma: f64,
    s2: f64,
    g_star: f64,
    fisher: f64,
    curvature: f64,
    c: Option<f64>,
    epsilon: f64,
) -> Result<f64> {
    let cg = c_gamma(gamma)?;
    if !(epsilon > 0.0) {
        return Err(Error::param("epsilon", epsilon, "epsilon > 0"));
    }
    let reduction = 1.0 - c.unwrap_or(0.0) / 2.0;
    let inner = g_star + fisher * curvature.max(fisher) * g_star.powi(3) * reduction;
    Ok((cg * s2 / epsilon * inner).powf(2.0 / (1.0 - 2.0 * gamma)))
}

/// A full optimization run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    /// `μ_0 … μ_T`.
    pub mus: Vec<Vec<f64>>,
    /// `f(μ_t)` for every row.
    pub f_values: Vec<f64>,
    /// Step size used from `t` to `t+1`.
    pub etas: Vec<f64>,
    /// Norm of the gradient estimate applied at `t`, in its scaled units.
    pub grad_norms: Vec<f64>,
    /// Log scale of each gradient estimate (0 for absolute units).
    pub log_scales: Vec<f64>,
    /// Smoothing scale in effect at each row (mean over coordinates).
    pub sigmas: Vec<f64>,
    /// Cumulative objective evaluations after each row.
    pub evals: Vec<u64>,
    pub seed: u64,
}

impl Trajectory {
    pub(crate) fn start(mu0: Vec<f64>, f0: f64, sigma: f64, seed: u64) -> Self {
        Trajectory {
            mus: vec![mu0],
            f_values: vec![f0],
            etas: Vec::new(),
            grad_norms: Vec::new(),
            log_scales: Vec::new(),
            sigmas: vec![sigma],
            evals: vec![1],
            seed,
        }
    }

    pub(crate) fn push(&mut self, mu: Vec<f64>, f: f64, eta: f64, grad_norm: f64, log_scale: f64, sigma: f64, cost: u64) {
        let last = *self.evals.last().unwrap_or(&0);
        self.mus.push(mu);
        self.f_values.push(f);
        self.etas.push(eta);
        self.grad_norms.push(grad_norm);
        self.log_scales.push(log_scale);
        self.sigmas.push(sigma);
        self.evals.push(last + cost);
    }

    /// Number of steps `T`.
    pub fn steps(&self) -> usize {
        self.mus.len() - 1
    }

    pub fn total_evals(&self) -> u64 {
        *self.evals.last().unwrap_or(&0)
    }

    pub fn final_mu(&self) -> &[f64] {
        self.mus.last().map(Vec::as_slice).unwrap_or(&[])
    }

    /// CSV with columns `step, eta, [mu_0 …], f_mu, grad_norm, evals`. The
    /// last row has empty `eta` and `grad_norm`.
    pub fn to_csv(&self, include_mu: bool) -> Result<Vec<u8>> {
        let d = self.mus.first().map_or(0, Vec::len);
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = vec!["step".to_string(), "eta".to_string()];
        if include_mu {
            header.extend((0..d).map(|i| format!("mu_{i}")));
        }
        header.extend(["f_mu", "grad_norm", "evals"].map(String::from));
        w.write_record(&header)?;
        for t in 0..self.mus.len() {
            let mut row = vec![t.to_string(), self.etas.get(t).map(|v| v.to_string()).unwrap_or_default()];
            if include_mu {
                row.extend(self.mus[t].iter().map(|v| v.to_string()));
            }
            row.push(self.f_values[t].to_string());
            row.push(self.grad_norms.get(t).map(|v| v.to_string()).unwrap_or_default());
            row.push(self.evals[t].to_string());
            w.write_record(&row)?;
        }
        w.into_inner().map_err(|e| Error::Io(e.to_string()))
    }

    pub fn write_csv(&self, path: &Path, include_mu: bool) -> Result<()> {
        write_atomic(path, &self.to_csv(include_mu)?)
    }
}

/// How the gradient estimate is turned into a step direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StepNorm {
    /// Step along the estimate as is.
    #[default]
    Raw,
    /// Rescale the estimate to unit root-mean-square per coordinate, so a
    /// step moves `mu` by `eta * sqrt(d)` in Euclidean norm.
    Rms,
}

impl StepNorm {
    pub fn apply(self, g: &mut [f64]) {
        if self == StepNorm::Rms {
            let rms = (g.iter().map(|v| v * v).sum::<f64>() / g.len().max(1) as f64).sqrt();
            if rms > 0.0 {
                g.iter_mut().for_each(|v| *v /= rms);
            }
        }
    }
}

/// Knobs of a ProMoT run beyond the smoothing spec.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOptions {
    pub estimator: Estimator,
    pub scaling: Scaling,
    #[serde(default)]
    pub step_norm: StepNorm,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            estimator: Estimator::LeaveOneOut,
            scaling: Scaling::BatchMax,
            step_norm: StepNorm::Raw,
        }
    }
}

pub(crate) fn divergence_limit(f: &dyn Objective) -> f64 {
    let diam = f.domain().diameter();
    if diam.is_finite() {
        1e3 * diam
    } else {
        f64::INFINITY
    }
}

pub(crate) fn eval_metric(f: &dyn Objective, mu: &[f64], step: usize) -> Result<f64> {
    let v = f.evaluate(mu);
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Aborted {
            step,
            reason: format!("objective returned {v} at the iterate"),
        })
    }
}

/// Runs `T` steps of `μ_{t+1} = μ_t + η_t ĝ_t` from `μ₀`. Step `t` draws its
/// batch under key `rng::derive(seed, t)`.
pub fn run(
    spec: &SmoothingSpec,
    f: &dyn Objective,
    mu0: &[f64],
    schedule: &Schedule,
    horizon: usize,
    options: &RunOptions,
    seed: u64,
) -> Result<Trajectory> {
    spec.validate()?;
    schedule.validate(spec, horizon)?;
    if horizon < 1 {
        return Err(Error::param("T", 0.0, "T >= 1"));
    }
    if mu0.len() != spec.dim() || f.dim() != spec.dim() {
        return Err(Error::Dimension {
            expected: spec.dim(),
            actual: if mu0.len() != spec.dim() { mu0.len() } else { f.dim() },
        });
    }
    if mu0.iter().any(|v| !v.is_finite()) {
        return Err(Error::Config("initial point must be finite".into()));
    }
    if options.estimator == Estimator::LeaveOneOut && spec.batch < 2 {
        return Err(Error::param("batch", spec.batch as f64, "batch >= 2 for the leave-one-out estimator"));
    }

    let limit = divergence_limit(f);
    let sigma = spec.scales.iter().sum::<f64>() / spec.dim() as f64;
    let mut mu = mu0.to_vec();
    let mut traj = Trajectory::start(mu.clone(), eval_metric(f, &mu, 0)?, sigma, seed);
    for t in 0..horizon {
        let est = smoothing::gradient(spec, f, &mu, rng::derive(seed, t as u64), options.estimator, options.scaling)
            .map_err(|e| Error::Aborted {
                step: t,
                reason: e.to_string(),
            })?;
        if est.gradient.iter().any(|v| !v.is_finite()) {
            return Err(Error::Aborted {
                step: t,
                reason: format!("non-finite gradient estimate; diagnostics {:?}", est.diagnostics),
            });
        }
        let grad_norm = est.norm();
        let mut dir = est.gradient;
        options.step_norm.apply(&mut dir);
        let eta = schedule.eta(t, spec);
        for (m, g) in mu.iter_mut().zip(&dir) {
            *m += eta * g;
        }
        let sup = mu.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        if !(sup <= limit) {
            return Err(Error::Aborted {
                step: t,
                reason: format!("iterate escaped: max |mu_i| = {sup:e} exceeds {limit:e}"),
            });
        }
        let fv = eval_metric(f, &mu, t + 1)?;
        traj.push(mu.clone(), fv, eta, grad_norm, est.log_scale, sigma, spec.batch as u64 + 1);
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::Kernel;
    use crate::objectives::{ackley, DomainBox, FnObjective};
    use crate::transforms::Transform;
    use approx::assert_relative_eq;

    fn spec(d: usize, sigma: f64, batch: usize) -> SmoothingSpec {
        SmoothingSpec::isotropic(
            Kernel::Logistic,
            Transform::PowerExpHybrid { c: 600.0, beta: 10.0 },
            1.0,
            sigma,
            batch,
            DomainBox::cube(d, -32.768, 32.768),
        )
        .unwrap()
    }

    #[test]
    fn schedule_formulas() {
        let s = spec(500, 0.5, 10);
        let iso = Schedule::IsotropicPoly { gamma: 0.1 };
        assert_relative_eq!(iso.eta(0, &s), 5e-4, max_relative = 1e-15);
        assert_relative_eq!(iso.eta(9, &s), 5e-4 * 10f64.powf(-0.6), max_relative = 1e-15);
        let aniso = Schedule::AnisotropicPoly { gamma: 0.1 };
        assert_relative_eq!(aniso.eta(3, &s), iso.eta(3, &s), max_relative = 1e-15);
        let mut a = s.clone();
        a.scales[7] = 0.25;
        assert!(iso.validate(&a, 10).is_err());
        assert_relative_eq!(aniso.eta(0, &a), 0.25 * 0.25 / 500.0, max_relative = 1e-15);
        assert!(Schedule::Poly { eta0: 1.0, gamma: 0.5 }.validate(&s, 1).is_err());
        assert!(Schedule::Table { etas: vec![0.1; 3] }.validate(&s, 4).is_err());
    }

    #[test]
    fn c_gamma_values() {
        assert_relative_eq!(c_gamma(0.25).unwrap(), 0.25 / (2f64.powf(0.25) - 1.0), max_relative = 1e-14);
        assert_relative_eq!(c_gamma(1e-9).unwrap(), 0.5 / (2f64.sqrt() - 1.0), max_relative = 1e-8);
        assert!(c_gamma(0.0).is_err());
        let plain = grid_complexity_bound(0.1, 10.0, 1.0, 1.0 / 3.0, 0.385, None, 0.1).unwrap();
        let zero = grid_complexity_bound(0.1, 10.0, 1.0, 1.0 / 3.0, 0.385, Some(0.0), 0.1).unwrap();
        let loo = grid_complexity_bound(0.1, 10.0, 1.0, 1.0 / 3.0, 0.385, Some(0.5), 0.1).unwrap();
        assert_eq!(plain, zero);
        assert!(loo < plain);
    }

    #[test]
    fn zero_schedule_stands_still() {
        let f = ackley(3).unwrap();
        let s = spec(3, 0.5, 8);
        let t = run(&s, &f, &[1.0, 2.0, 3.0], &Schedule::Constant { eta: 0.0 }, 5, &RunOptions::default(), 1).unwrap();
        assert!(t.mus.iter().all(|m| m == &vec![1.0, 2.0, 3.0]));
        assert_eq!(t.total_evals(), 9 * 5 + 1);
        assert_eq!(t.mus.len(), 6);
    }

    #[test]
    fn update_rule_is_exact() {
        let f = ackley(2).unwrap();
        let s = spec(2, 0.5, 6);
        let sched = Schedule::Poly { eta0: 0.3, gamma: 0.1 };
        let opts = RunOptions::default();
        let t = run(&s, &f, &[2.0, -1.0], &sched, 4, &opts, 42).unwrap();
        for step in 0..4 {
            let g = smoothing::gradient(&s, &f, &t.mus[step], rng::derive(42, step as u64), opts.estimator, opts.scaling)
                .unwrap();
            for i in 0..2 {
                assert_eq!(t.mus[step + 1][i], t.mus[step][i] + t.etas[step] * g.gradient[i]);
            }
        }
    }

    #[test]
    fn escape_aborts() {
        let f = FnObjective::new("slope", DomainBox::cube(1, -1.0, 1.0), |x: &[f64]| x[0] + 5.0);
        let s = SmoothingSpec::isotropic(Kernel::Gaussian, Transform::Exponential, 1.0, 0.5, 4, f.domain().clone()).unwrap();
        let err = run(&s, &f, &[0.0], &Schedule::Constant { eta: 1e9 }, 10, &RunOptions::default(), 0).unwrap_err();
        assert!(matches!(err, Error::Aborted { .. }), "{err}");
    }

    #[test]
    fn csv_layout() {
        let f = ackley(2).unwrap();
        let s = spec(2, 0.5, 4);
        let t = run(&s, &f, &[1.0, 1.0], &Schedule::Constant { eta: 0.1 }, 2, &RunOptions::default(), 3).unwrap();
        let text = String::from_utf8(t.to_csv(true).unwrap()).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "step,eta,mu_0,mu_1,f_mu,grad_norm,evals");
        assert_eq!(lines.len(), 4);
        assert!(lines[3].starts_with("2,,"));
        assert!(lines[3].ends_with(",11"));
        let short = String::from_utf8(t.to_csv(false).unwrap()).unwrap();
        assert!(short.starts_with("step,eta,f_mu,grad_norm,evals"));
    }
}
