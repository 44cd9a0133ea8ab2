//! Ratio-monotone transforms `g(θ, y)` applied to objective values before
//! smoothing.
//!
//! Every family is evaluated through [`Transform::log_eval`], which never
//! forms `e^{θy}` explicitly; [`Transform::eval`] exponentiates and refuses
//! values that would overflow.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Largest log-value that [`Transform::eval`] will exponentiate.
pub const OVERFLOW_GUARD: f64 = 700.0;

/// A transform family with its shape parameters. The amplification `θ` is
/// supplied per call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "TransformRepr", into = "TransformRepr")]
pub enum Transform {
    /// `(y + c)^θ`, `y > -c`.
    Power { c: f64 },
    /// `e^{θy}`.
    Exponential,
    /// `exp(θ · max(y, 0)^α)`.
    FracExponential { alpha: f64 },
    /// `(y + c)^β e^{θy}`, `y > -c`.
    PowerExpHybrid { c: f64, beta: f64 },
    /// `log(1 + e^{θy})`.
    Softplus,
    /// `max(sinh(θ(y + c)), 0)`, `y ≥ -c`.
    SinhShift { c: f64 },
    /// `σ(αy)^θ` with `σ` the logistic sigmoid; bounded by 1.
    SigmoidPower { alpha: f64 },
}

/// Flat serialized form: `family` plus the family's own parameters only.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TransformRepr {
    family: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    alpha: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    beta: Option<f64>,
}

impl TryFrom<TransformRepr> for Transform {
    type Error = String;

    fn try_from(r: TransformRepr) -> std::result::Result<Self, String> {
        Transform::from_parts(&r.family, r.c, r.alpha, r.beta)
    }
}

impl Transform {
    /// Builds a family from its name and the parameters it takes; any
    /// missing or extra parameter is an error.
    pub fn from_parts(
        family: &str,
        c: Option<f64>,
        alpha: Option<f64>,
        beta: Option<f64>,
    ) -> std::result::Result<Self, String> {
        let r = TransformRepr {
            family: family.to_string(),
            c,
            alpha,
            beta,
        };
        let wanted: &[&str] = match r.family.as_str() {
            "power" | "sinh_shift" => &["c"],
            "exponential" | "softplus" => &[],
            "frac_exponential" | "sigmoid_power" => &["alpha"],
            "power_exp_hybrid" => &["c", "beta"],
            other => return Err(format!("unknown transform family `{other}`")),
        };
        for (name, v) in [("c", r.c), ("alpha", r.alpha), ("beta", r.beta)] {
            match (wanted.contains(&name), v.is_some()) {
                (true, false) => return Err(format!("transform `{}` needs `{name}`", r.family)),
                (false, true) => return Err(format!("transform `{}` takes no `{name}`", r.family)),
                _ => {}
            }
        }
        let t = match r.family.as_str() {
            "power" => Transform::Power { c: r.c.unwrap_or_default() },
            "sinh_shift" => Transform::SinhShift { c: r.c.unwrap_or_default() },
            "exponential" => Transform::Exponential,
            "softplus" => Transform::Softplus,
            "frac_exponential" => Transform::FracExponential {
                alpha: r.alpha.unwrap_or_default(),
            },
            "sigmoid_power" => Transform::SigmoidPower {
                alpha: r.alpha.unwrap_or_default(),
            },
            _ => Transform::PowerExpHybrid {
                c: r.c.unwrap_or_default(),
                beta: r.beta.unwrap_or_default(),
            },
        };
        Ok(t)
    }

    /// `(c, alpha, beta)` as used by [`Transform::from_parts`].
    pub fn parts(&self) -> (Option<f64>, Option<f64>, Option<f64>) {
        let r = TransformRepr::from(*self);
        (r.c, r.alpha, r.beta)
    }
}

impl From<Transform> for TransformRepr {
    fn from(t: Transform) -> Self {
        let (c, alpha, beta) = match t {
            Transform::Power { c } | Transform::SinhShift { c } => (Some(c), None, None),
            Transform::PowerExpHybrid { c, beta } => (Some(c), None, Some(beta)),
            Transform::FracExponential { alpha } | Transform::SigmoidPower { alpha } => (None, Some(alpha), None),
            Transform::Exponential | Transform::Softplus => (None, None, None),
        };
        TransformRepr {
            family: t.family().to_string(),
            c,
            alpha,
            beta,
        }
    }
}

/// Outcome of a ratio-monotonicity probe.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum RatioCheck {
    Pass,
    /// The pair lies outside the domain where the family claims the property.
    NotClaimed,
    /// First grid index `i` where the ratio decreased from `θ_i` to `θ_{i+1}`.
    Fail { index: usize, before: f64, after: f64 },
}

impl RatioCheck {
    pub fn passed(&self) -> bool {
        matches!(self, RatioCheck::Pass)
    }
}

/// `log(1 + e^t)` without overflow.
pub(crate) fn softplus(t: f64) -> f64 {
    if t > 0.0 {
        t + (-t).exp().ln_1p()
    } else {
        t.exp().ln_1p()
    }
}

/// `log(sinh(t))` for `t > 0`.
fn log_sinh(t: f64) -> f64 {
    // sinh t = e^t (1 - e^{-2t}) / 2
    t + (-(-2.0 * t).exp()).ln_1p() - std::f64::consts::LN_2
}

impl Transform {
    pub fn family(&self) -> &'static str {
        match self {
            Transform::Power { .. } => "power",
            Transform::Exponential => "exponential",
            Transform::FracExponential { .. } => "frac_exponential",
            Transform::PowerExpHybrid { .. } => "power_exp_hybrid",
            Transform::Softplus => "softplus",
            Transform::SinhShift { .. } => "sinh_shift",
            Transform::SigmoidPower { .. } => "sigmoid_power",
        }
    }

    /// Checks the shape parameters.
    pub fn validate(&self) -> Result<()> {
        match *self {
            Transform::Power { c } | Transform::SinhShift { c } if !(c >= 0.0 && c.is_finite()) => {
                Err(Error::param("c", c, "c >= 0"))
            }
            Transform::PowerExpHybrid { c, beta } => {
                if !(c >= 0.0 && c.is_finite()) {
                    Err(Error::param("c", c, "c >= 0"))
                } else if !(beta >= 0.0 && beta.is_finite()) {
                    Err(Error::param("beta", beta, "beta >= 0"))
                } else {
                    Ok(())
                }
            }
            Transform::FracExponential { alpha } | Transform::SigmoidPower { alpha }
                if !(alpha > 0.0 && alpha.is_finite()) =>
            {
                Err(Error::param("alpha", alpha, "alpha > 0"))
            }
            _ => Ok(()),
        }
    }

    fn check_theta(theta: f64) -> Result<()> {
        if theta > 0.0 && theta.is_finite() {
            Ok(())
        } else {
            Err(Error::param("theta", theta, "theta > 0"))
        }
    }

    /// Whether `y` lies in the family's domain.
    pub fn in_domain(&self, y: f64) -> bool {
        if y.is_nan() {
            return false;
        }
        match *self {
            Transform::Power { c } | Transform::PowerExpHybrid { c, .. } => y > -c,
            Transform::SinhShift { c } => y >= -c,
            _ => true,
        }
    }

    fn domain_error(&self, y: f64) -> Error {
        let expected = match *self {
            Transform::Power { c } | Transform::PowerExpHybrid { c, .. } => format!("y > {}", -c),
            Transform::SinhShift { c } => format!("y >= {}", -c),
            _ => "finite y".to_string(),
        };
        Error::TransformDomain {
            family: self.family(),
            y,
            expected,
        }
    }

    /// `log g(θ, y)`; `-∞` where `g` vanishes.
    pub fn log_eval(&self, theta: f64, y: f64) -> Result<f64> {
        Self::check_theta(theta)?;
        if !self.in_domain(y) {
            return Err(self.domain_error(y));
        }
        let v = match *self {
            Transform::Power { c } => theta * (y + c).ln(),
            Transform::Exponential => theta * y,
            Transform::FracExponential { alpha } => theta * y.max(0.0).powf(alpha),
            Transform::PowerExpHybrid { c, beta } => {
                if beta == 0.0 {
                    theta * y
                } else {
                    beta * (y + c).ln() + theta * y
                }
            }
            Transform::Softplus => softplus(theta * y).ln(),
            Transform::SinhShift { c } => {
                let t = theta * (y + c);
                if t <= 0.0 {
                    f64::NEG_INFINITY
                } else {
                    log_sinh(t)
                }
            }
            Transform::SigmoidPower { alpha } => -theta * softplus(-alpha * y),
        };
        Ok(v)
    }

    /// `g(θ, y)`; errors instead of overflowing.
    pub fn eval(&self, theta: f64, y: f64) -> Result<f64> {
        let log_value = self.log_eval(theta, y)?;
        if log_value > OVERFLOW_GUARD {
            return Err(Error::AmplificationOverflow {
                family: self.family(),
                theta,
                y,
                log_value,
            });
        }
        // small values are computed directly for accuracy
        let direct = match *self {
            Transform::Exponential => Some((theta * y).exp()),
            Transform::Softplus => Some(softplus(theta * y)),
            Transform::Power { c } => Some((y + c).powf(theta)),
            Transform::SinhShift { c } if theta * (y + c) < 1.0 => Some((theta * (y + c)).sinh().max(0.0)),
            _ => None,
        };
        Ok(direct.unwrap_or_else(|| log_value.exp()))
    }

    /// Lower end of the range of `y` over which the ratio property is
    /// claimed, exclusive.
    pub fn ratio_domain_floor(&self) -> f64 {
        match *self {
            Transform::Power { c } | Transform::PowerExpHybrid { c, .. } | Transform::SinhShift { c } => -c,
            Transform::Softplus | Transform::SigmoidPower { .. } => 0.0,
            Transform::Exponential | Transform::FracExponential { .. } => f64::NEG_INFINITY,
        }
    }

    /// Verifies that `θ ↦ g(θ, a)/g(θ, b)` does not decrease along the grid.
    /// Ratios are compared in log space with an absolute slack of `1e-12`.
    pub fn ratio_monotonicity_check(&self, a: f64, b: f64, theta_grid: &[f64]) -> Result<RatioCheck> {
        self.validate()?;
        if !(a > b) {
            return Err(Error::Config(format!("ratio check needs a > b (got a = {a}, b = {b})")));
        }
        if theta_grid.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::Config("theta grid must be strictly increasing".into()));
        }
        if b <= self.ratio_domain_floor() {
            return Ok(RatioCheck::NotClaimed);
        }
        let mut prev: Option<f64> = None;
        for (i, &theta) in theta_grid.iter().enumerate() {
            let r = self.log_eval(theta, a)? - self.log_eval(theta, b)?;
            if let Some(p) = prev {
                if r < p - 1e-12 {
                    return Ok(RatioCheck::Fail {
                        index: i - 1,
                        before: p,
                        after: r,
                    });
                }
            }
            prev = Some(r);
        }
        Ok(RatioCheck::Pass)
    }
}

impl fmt::Display for Transform {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Transform::Power { c } => write!(f, "power(c={c})"),
            Transform::Exponential => write!(f, "exponential"),
            Transform::FracExponential { alpha } => write!(f, "frac_exponential(alpha={alpha})"),
            Transform::PowerExpHybrid { c, beta } => write!(f, "power_exp_hybrid(c={c}, beta={beta})"),
            Transform::Softplus => write!(f, "softplus"),
            Transform::SinhShift { c } => write!(f, "sinh_shift(c={c})"),
            Transform::SigmoidPower { alpha } => write!(f, "sigmoid_power(alpha={alpha})"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn closed_forms() {
        assert_relative_eq!(Transform::Exponential.eval(2.0, 3.0).unwrap(), 6f64.exp(), max_relative = 1e-15);
        assert_eq!(Transform::Power { c: 0.0 }.eval(3.0, 2.0).unwrap(), 8.0);
        assert_abs_diff_eq!(Transform::Softplus.eval(1.0, 0.0).unwrap(), 2f64.ln(), epsilon = 1e-15);
        assert_abs_diff_eq!(
            Transform::SigmoidPower { alpha: 1.0 }.eval(2.0, 0.0).unwrap(),
            0.25,
            epsilon = 1e-15
        );
        assert_eq!(Transform::SinhShift { c: 1.0 }.eval(3.0, -1.0).unwrap(), 0.0);
    }

    #[test]
    fn log_eval_examples() {
        assert_eq!(Transform::Exponential.log_eval(100.0, 10.0).unwrap(), 1000.0);
        let hybrid = Transform::PowerExpHybrid { c: 600.0, beta: 10.0 };
        // 10 ln 600, checked against 60-digit arithmetic
        assert_abs_diff_eq!(hybrid.log_eval(5.0, 0.0).unwrap(), 63.969_296_552_161_46, epsilon = 1e-12);
        assert_eq!(Transform::Power { c: 1.0 }.log_eval(3.0, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn hybrid_on_ackley_range() {
        let hybrid = Transform::PowerExpHybrid { c: 600.0, beta: 10.0 };
        for &y in &[-22.3, -10.0, -1.0, 0.0] {
            let g = hybrid.eval(5.0, y).unwrap();
            let expected = (y + 600.0f64).powi(10) * (5.0 * y).exp();
            assert_relative_eq!(g, expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn domain_and_overflow_errors() {
        let p = Transform::Power { c: 1.0 };
        assert!(matches!(p.eval(2.0, -1.0), Err(Error::TransformDomain { .. })));
        assert!(matches!(p.eval(2.0, -3.0), Err(Error::TransformDomain { .. })));
        assert!(Transform::SinhShift { c: 1.0 }.eval(2.0, -1.0).is_ok());
        match Transform::Exponential.eval(100.0, 10.0) {
            Err(Error::AmplificationOverflow { theta, y, .. }) => {
                assert_eq!((theta, y), (100.0, 10.0));
            }
            other => panic!("expected overflow, got {other:?}"),
        }
        assert!(Transform::Exponential.eval(0.0, 1.0).is_err());
        assert!(Transform::Exponential.eval(-1.0, 1.0).is_err());
        assert!(Transform::SigmoidPower { alpha: 0.0 }.validate().is_err());
    }

    #[test]
    fn ratio_examples() {
        let grid: Vec<f64> = (1..=100).map(|i| 0.1 * i as f64).collect();
        assert!(Transform::Exponential.ratio_monotonicity_check(1.0, 0.5, &grid).unwrap().passed());
        assert!(Transform::Power { c: 1.0 }.ratio_monotonicity_check(2.0, 1.0, &grid).unwrap().passed());
        let fine: Vec<f64> = (1..=200).map(|i| 0.1 * i as f64).collect();
        assert!(Transform::Softplus.ratio_monotonicity_check(2.0, 1.0, &fine).unwrap().passed());
        assert_eq!(
            Transform::Softplus.ratio_monotonicity_check(1.0, -1.0, &grid).unwrap(),
            RatioCheck::NotClaimed
        );
        assert!(Transform::Exponential.ratio_monotonicity_check(0.5, 1.0, &grid).is_err());
        assert!(Transform::Exponential.ratio_monotonicity_check(1.0, 0.5, &[1.0, 1.0]).is_err());
    }

    #[test]
    fn serde_shape() {
        let t: Transform = serde_json::from_str(r#"{"family":"power_exp_hybrid","c":600,"beta":10}"#).unwrap();
        assert_eq!(t, Transform::PowerExpHybrid { c: 600.0, beta: 10.0 });
        assert!(serde_json::from_str::<Transform>(r#"{"family":"exponential","c":1}"#).is_err());
        assert!(serde_json::from_str::<Transform>(r#"{"family":"power"}"#).is_err());
        assert!(serde_json::from_str::<Transform>(r#"{"family":"power","c":1,"zeta":2}"#).is_err());
        for t in [Transform::Softplus, Transform::SigmoidPower { alpha: 2.0 }, Transform::SinhShift { c: 1.0 }] {
            let s = serde_json::to_string(&t).unwrap();
            assert_eq!(serde_json::from_str::<Transform>(&s).unwrap(), t);
        }
    }
}
