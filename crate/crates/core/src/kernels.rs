//! One-dimensional symmetric unimodal smoothing densities and their product
//! extension.
//!
//! Each kernel exposes its density `p`, score `s = p'/p`, the score
//! derivative `s'` (so `p'' = p (s² + s')`), CDF and an exact sampler. The
//! constants `I = ∫ (p')²/p` and `K = ∫ |p''|` that drive the variance and
//! smoothness bounds are computed by adaptive quadrature.

use std::f64::consts::{FRAC_2_PI, PI};
use std::fmt;
use std::str::FromStr;

use rand::Rng;
use rand_distr::{ChiSquared, Distribution, Gamma, Open01, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::{beta::beta_reg, erf::erfc, gamma::gamma_lr, gamma::ln_gamma};

use crate::error::{Error, Result};
use crate::quadrature::{Integral, Quadrature};

/// A smoothing density on the real line.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Kernel {
    Gaussian,
    Logistic,
    StudentT { nu: f64 },
    HyperbolicSecant,
    GeneralizedGaussian { beta: f64 },
}

/// Fisher information `I` and curvature constant `K` of a kernel, with the
/// quadrature error of each.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KernelConstants {
    pub fisher_information: f64,
    pub curvature: f64,
    pub fisher_error: f64,
    pub curvature_error: f64,
}

impl Kernel {
    pub fn student_t(nu: f64) -> Result<Self> {
        let k = Kernel::StudentT { nu };
        k.validate()?;
        Ok(k)
    }

    pub fn generalized_gaussian(beta: f64) -> Result<Self> {
        let k = Kernel::GeneralizedGaussian { beta };
        k.validate()?;
        Ok(k)
    }

    /// Cauchy is Student-t with one degree of freedom.
    pub fn cauchy() -> Self {
        Kernel::StudentT { nu: 1.0 }
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            Kernel::StudentT { nu } if !(nu > 0.0 && nu.is_finite()) => {
                Err(Error::param("nu", nu, "nu > 0"))
            }
            Kernel::GeneralizedGaussian { beta } if !(beta > 0.0 && beta.is_finite()) => {
                Err(Error::param("beta", beta, "beta > 0"))
            }
            _ => Ok(()),
        }
    }

    pub fn log_density(&self, z: f64) -> f64 {
        match *self {
            Kernel::Gaussian => -0.5 * z * z - 0.5 * (2.0 * PI).ln(),
            Kernel::Logistic => {
                let a = z.abs();
                -a - 2.0 * (-a).exp().ln_1p()
            }
            Kernel::StudentT { nu } => {
                ln_gamma(0.5 * (nu + 1.0))
                    - ln_gamma(0.5 * nu)
                    - 0.5 * (nu * PI).ln()
                    - 0.5 * (nu + 1.0) * (z * z / nu).ln_1p()
            }
            Kernel::HyperbolicSecant => {
                // ½ sech(πz/2) = e^{-a} / (1 + e^{-2a}), a = π|z|/2
                let a = 0.5 * PI * z.abs();
                -a - (-2.0 * a).exp().ln_1p()
            }
            Kernel::GeneralizedGaussian { beta } => {
                (0.5 * beta).ln() - ln_gamma(1.0 / beta) - z.abs().powf(beta)
            }
        }
    }

    pub fn density(&self, z: f64) -> f64 {
        self.log_density(z).exp()
    }

    /// `p'(z) / p(z)`.
    pub fn score(&self, z: f64) -> f64 {
        match *self {
            Kernel::Gaussian => -z,
            Kernel::Logistic => -(0.5 * z).tanh(),
            Kernel::StudentT { nu } => -(nu + 1.0) * z / (nu + z * z),
            Kernel::HyperbolicSecant => -0.5 * PI * (0.5 * PI * z).tanh(),
            Kernel::GeneralizedGaussian { beta } => {
                if z == 0.0 {
                    0.0
                } else {
                    -beta * z.signum() * z.abs().powf(beta - 1.0)
                }
            }
        }
    }

    /// Derivative of the score, `s'(z)`.
    pub fn score_derivative(&self, z: f64) -> f64 {
        match *self {
            Kernel::Gaussian => -1.0,
            Kernel::Logistic => {
                let c = (0.5 * z).cosh();
                -0.5 / (c * c)
            }
            Kernel::StudentT { nu } => {
                let q = nu + z * z;
                -(nu + 1.0) * (nu - z * z) / (q * q)
            }
            Kernel::HyperbolicSecant => {
                let c = (0.5 * PI * z).cosh();
                -0.25 * PI * PI / (c * c)
            }
            Kernel::GeneralizedGaussian { beta } => {
                if z == 0.0 && beta < 2.0 {
                    f64::NEG_INFINITY
                } else {
                    -beta * (beta - 1.0) * z.abs().powf(beta - 2.0)
                }
            }
        }
    }

    /// `p'(z)`.
    pub fn density_derivative(&self, z: f64) -> f64 {
        self.score(z) * self.density(z)
    }

    /// `p''(z) = p(z) (s(z)² + s'(z))`.
    pub fn density_second_derivative(&self, z: f64) -> f64 {
        let p = self.density(z);
        if p == 0.0 {
            return 0.0;
        }
        let s = self.score(z);
        p * (s * s + self.score_derivative(z))
    }

    pub fn cdf(&self, z: f64) -> f64 {
        match *self {
            Kernel::Gaussian => 0.5 * erfc(-z / std::f64::consts::SQRT_2),
            Kernel::Logistic => {
                if z >= 0.0 {
                    1.0 / (1.0 + (-z).exp())
                } else {
                    let e = z.exp();
                    e / (1.0 + e)
                }
            }
            Kernel::StudentT { nu } => {
                if nu == 1.0 {
                    return 0.5 + z.atan() / PI;
                }
                let tail = 0.5 * beta_reg(0.5 * nu, 0.5, nu / (nu + z * z));
                if z >= 0.0 {
                    1.0 - tail
                } else {
                    tail
                }
            }
            Kernel::HyperbolicSecant => FRAC_2_PI * (0.5 * PI * z).exp().atan(),
            Kernel::GeneralizedGaussian { beta } => {
                let t = z.abs().powf(beta);
                let half = if t == 0.0 {
                    0.0
                } else if t.is_finite() {
                    0.5 * gamma_lr(1.0 / beta, t)
                } else {
                    0.5
                };
                if z >= 0.0 {
                    0.5 + half
                } else {
                    0.5 - half
                }
            }
        }
    }

    /// One draw from the standardized kernel.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Kernel::Gaussian => rng.sample(StandardNormal),
            Kernel::Logistic => {
                let u: f64 = rng.sample(Open01);
                (u / (1.0 - u)).ln()
            }
            Kernel::StudentT { nu } => {
                let z: f64 = rng.sample(StandardNormal);
                let chi = ChiSquared::new(nu).expect("validated nu");
                let v: f64 = chi.sample(rng);
                z / (v / nu).sqrt()
            }
            Kernel::HyperbolicSecant => {
                let u: f64 = rng.sample(Open01);
                FRAC_2_PI * (0.5 * PI * u).tan().ln()
            }
            Kernel::GeneralizedGaussian { beta } => {
                let g = Gamma::new(1.0 / beta, 1.0).expect("validated beta");
                let r: f64 = g.sample(rng).powf(1.0 / beta);
                if rng.random::<bool>() {
                    r
                } else {
                    -r
                }
            }
        }
    }

    /// `n` i.i.d. draws; `n == 0` is rejected.
    pub fn sample_n<R: Rng + ?Sized>(&self, rng: &mut R, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(Error::param("n", 0.0, "n >= 1"));
        }
        Ok((0..n).map(|_| self.sample(rng)).collect())
    }

    /// Whether the density is twice continuously differentiable.
    pub fn is_c2(&self) -> bool {
        match *self {
            Kernel::GeneralizedGaussian { beta } => beta >= 2.0,
            _ => true,
        }
    }

    /// `I = ∫ (p')²/p = ∫ s² p` and `K = ∫ |p''|` by adaptive quadrature.
    pub fn compute_constants(&self) -> Result<KernelConstants> {
        self.validate()?;
        if !self.is_c2() {
            return Err(Error::Config(format!("kernel {self} is not twice continuously differentiable")));
        }
        let q = Quadrature::default();
        let fisher = integrate_even(&q, |z| {
            let s = self.score(z);
            s * s * self.density(z)
        }, &[])?;
        let breaks = self.inflection_points();
        let curvature = integrate_even(&q, |z| self.density_second_derivative(z).abs(), &breaks)?;
        Ok(KernelConstants {
            fisher_information: fisher.value,
            curvature: curvature.value,
            fisher_error: fisher.abs_error,
            curvature_error: curvature.abs_error,
        })
    }

    /// Positive sign changes of `p''`, located by grid scan and bisection.
    pub fn inflection_points(&self) -> Vec<f64> {
        let q = |z: f64| {
            let s = self.score(z);
            s * s + self.score_derivative(z)
        };
        let mut out = Vec::new();
        let step = 1e-3;
        let mut a = step;
        let mut qa = q(a);
        while a < 60.0 {
            let b = a + step;
            let qb = q(b);
            if qa.signum() != qb.signum() && qa != 0.0 && qb != 0.0 {
                let (mut lo, mut hi, mut qlo) = (a, b, qa);
                for _ in 0..80 {
                    let mid = 0.5 * (lo + hi);
                    let qm = q(mid);
                    if qm.signum() == qlo.signum() {
                        lo = mid;
                        qlo = qm;
                    } else {
                        hi = mid;
                    }
                }
                out.push(0.5 * (lo + hi));
            }
            a = b;
            qa = qb;
        }
        out
    }
}

/// `2 ∫_0^∞ f` for even `f`: `[0, 1]` directly (with extra breakpoints) and
/// `[1, ∞)` mapped onto `(0, 1]` by `z = 1/u`.
fn integrate_even<F: Fn(f64) -> f64>(q: &Quadrature, f: F, breaks: &[f64]) -> Result<Integral> {
    let mut inner: Vec<f64> = vec![0.0];
    inner.extend(breaks.iter().copied().filter(|&b| b > 0.0 && b < 1.0));
    inner.push(1.0);
    let near = q.integrate_with_breaks(&f, &inner)?;
    // breakpoints beyond 1 map to u = 1/b
    let mut outer: Vec<f64> = vec![0.0];
    let mut mapped: Vec<f64> = breaks.iter().filter(|&&b| b > 1.0).map(|b| 1.0 / b).collect();
    mapped.sort_by(f64::total_cmp);
    outer.extend(mapped);
    outer.push(1.0);
    let far = q.integrate_with_breaks(
        |u| {
            let z = 1.0 / u;
            let v = f(z) * z * z;
            if v.is_finite() {
                v
            } else {
                0.0
            }
        },
        &outer,
    )?;
    Ok(Integral {
        value: 2.0 * (near.value + far.value),
        abs_error: 2.0 * (near.abs_error + far.abs_error),
        evaluations: near.evaluations + far.evaluations,
    })
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Kernel::Gaussian => write!(f, "gaussian"),
            Kernel::Logistic => write!(f, "logistic"),
            Kernel::StudentT { nu } => write!(f, "student_t({nu})"),
            Kernel::HyperbolicSecant => write!(f, "hypsec"),
            Kernel::GeneralizedGaussian { beta } => write!(f, "gen_gaussian({beta})"),
        }
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let (name, arg) = match s.find('(') {
            Some(i) if s.ends_with(')') => (&s[..i], Some(&s[i + 1..s.len() - 1])),
            Some(_) => return Err(Error::Config(format!("malformed kernel `{s}`"))),
            None => (s, None),
        };
        let parse_arg = |what: &str| -> Result<f64> {
            arg.ok_or_else(|| Error::Config(format!("kernel {name} needs a parameter ({what})")))?
                .trim()
                .parse::<f64>()
                .map_err(|_| Error::Config(format!("kernel {name}: cannot parse {what}")))
        };
        let kernel = match (name.trim(), arg) {
            ("gaussian", None) => Kernel::Gaussian,
            ("logistic", None) => Kernel::Logistic,
            ("hypsec", None) => Kernel::HyperbolicSecant,
            ("cauchy", None) => Kernel::cauchy(),
            ("student_t", _) => Kernel::StudentT { nu: parse_arg("nu")? },
            ("gen_gaussian", _) => Kernel::GeneralizedGaussian { beta: parse_arg("beta")? },
            _ => return Err(Error::Config(format!("unknown kernel `{s}`"))),
        };
        kernel.validate()?;
        Ok(kernel)
    }
}

impl TryFrom<String> for Kernel {
    type Error = Error;
    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Kernel> for String {
    fn from(k: Kernel) -> String {
        k.to_string()
    }
}

/// The base kernel shifted to `center` and scaled per coordinate by `scales`.
#[derive(Debug, Clone, PartialEq)]
pub struct ShiftedProductKernel {
    pub base: Kernel,
    pub center: Vec<f64>,
    pub scales: Vec<f64>,
}

impl ShiftedProductKernel {
    pub fn new(base: Kernel, center: Vec<f64>, scales: Vec<f64>) -> Result<Self> {
        base.validate()?;
        if center.len() != scales.len() {
            return Err(Error::Dimension {
                expected: center.len(),
                actual: scales.len(),
            });
        }
        if let Some(&s) = scales.iter().find(|&&s| !(s > 0.0 && s.is_finite())) {
            return Err(Error::param("sigma", s, "sigma > 0"));
        }
        Ok(ShiftedProductKernel {
            base,
            center,
            scales,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn log_density(&self, x: &[f64]) -> f64 {
        x.iter()
            .zip(&self.center)
            .zip(&self.scales)
            .map(|((&xi, &m), &s)| self.base.log_density((xi - m) / s) - s.ln())
            .sum()
    }

    /// Gradient of the log-density with respect to the center.
    pub fn score(&self, x: &[f64]) -> Vec<f64> {
        x.iter()
            .zip(&self.center)
            .zip(&self.scales)
            .map(|((&xi, &m), &s)| -self.base.score((xi - m) / s) / s)
            .collect()
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        self.center
            .iter()
            .zip(&self.scales)
            .map(|(&m, &s)| m + s * self.base.sample(rng))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;
    use approx::assert_abs_diff_eq;

    fn all_kernels() -> Vec<Kernel> {
        vec![
            Kernel::Gaussian,
            Kernel::Logistic,
            Kernel::cauchy(),
            Kernel::StudentT { nu: 3.0 },
            Kernel::StudentT { nu: 10.0 },
            Kernel::HyperbolicSecant,
            Kernel::GeneralizedGaussian { beta: 4.0 },
        ]
    }

    #[test]
    fn density_at_zero() {
        assert_abs_diff_eq!(Kernel::Gaussian.density(0.0), 0.398_942_280_401_432_7, epsilon = 1e-15);
        assert_abs_diff_eq!(Kernel::Logistic.density(0.0), 0.25, epsilon = 1e-15);
        assert_abs_diff_eq!(Kernel::HyperbolicSecant.density(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(Kernel::cauchy().density(0.0), 1.0 / PI, epsilon = 1e-14);
    }

    #[test]
    fn score_examples() {
        assert_eq!(Kernel::Gaussian.score(1.5), -1.5);
        assert_abs_diff_eq!(Kernel::cauchy().score(1.0), -1.0, epsilon = 1e-15);
        assert_eq!(Kernel::Logistic.score(0.0), 0.0);
    }

    #[test]
    fn score_matches_log_density_difference() {
        let h = 1e-5;
        for k in all_kernels() {
            for &z in &[-3.1, -0.7, 0.4, 2.2] {
                let fd = (k.log_density(z + h) - k.log_density(z - h)) / (2.0 * h);
                assert_abs_diff_eq!(k.score(z), fd, epsilon = 1e-6);
                let fd2 = (k.score(z + h) - k.score(z - h)) / (2.0 * h);
                assert_abs_diff_eq!(k.score_derivative(z), fd2, epsilon = 1e-5);
            }
        }
    }

    #[test]
    fn cdf_examples() {
        assert_abs_diff_eq!(Kernel::Logistic.cdf(0.0), 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(Kernel::Gaussian.cdf(1.959_964), 0.975, epsilon = 1e-7);
        assert_abs_diff_eq!(Kernel::cauchy().cdf(1.0), 0.75, epsilon = 1e-15);
        for k in all_kernels() {
            assert_abs_diff_eq!(k.cdf(0.0), 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn cdf_derivative_is_density() {
        let h = 1e-5;
        for k in all_kernels() {
            for &z in &[-2.5, -0.3, 0.9, 4.0] {
                let fd = (k.cdf(z + h) - k.cdf(z - h)) / (2.0 * h);
                assert_abs_diff_eq!(fd, k.density(z), epsilon = 1e-7);
            }
        }
    }

    #[test]
    fn invalid_parameters() {
        assert!(Kernel::student_t(0.0).is_err());
        assert!(Kernel::generalized_gaussian(-1.0).is_err());
        assert!(Kernel::Gaussian.sample_n(&mut seeded(1), 0).is_err());
        assert!(Kernel::GeneralizedGaussian { beta: 1.5 }.compute_constants().is_err());
    }

    #[test]
    fn parse_round_trip() {
        for k in all_kernels() {
            assert_eq!(k.to_string().parse::<Kernel>().unwrap(), k);
        }
        assert_eq!("cauchy".parse::<Kernel>().unwrap(), Kernel::StudentT { nu: 1.0 });
        assert!("student_t".parse::<Kernel>().is_err());
        assert!("student_t(-2)".parse::<Kernel>().is_err());
        assert!("laplace".parse::<Kernel>().is_err());
    }

    #[test]
    fn gaussian_sample_mean() {
        let n = 1_000_000;
        let xs = Kernel::Gaussian.sample_n(&mut seeded(7), n).unwrap();
        let mean = xs.iter().sum::<f64>() / n as f64;
        assert!(mean.abs() < 4.0 / (n as f64).sqrt(), "mean {mean}");
    }

    #[test]
    fn cauchy_sample_median() {
        let n = 100_000;
        let mut xs = Kernel::cauchy().sample_n(&mut seeded(11), n).unwrap();
        xs.sort_by(f64::total_cmp);
        let median = 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
        assert!(median.abs() < 0.02, "median {median}");
    }

    #[test]
    fn shifted_product_score() {
        let k = ShiftedProductKernel::new(Kernel::Logistic, vec![1.0, -2.0], vec![0.5, 2.0]).unwrap();
        let x = [1.3, -1.0];
        let s = k.score(&x);
        assert_abs_diff_eq!(s[0], -Kernel::Logistic.score(0.6) / 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(s[1], -Kernel::Logistic.score(0.5) / 2.0, epsilon = 1e-15);
        let expected = Kernel::Logistic.log_density(0.6) - 0.5f64.ln() + Kernel::Logistic.log_density(0.5) - 2.0f64.ln();
        assert_abs_diff_eq!(k.log_density(&x), expected, epsilon = 1e-14);
        assert!(ShiftedProductKernel::new(Kernel::Gaussian, vec![0.0], vec![0.0]).is_err());
    }
}
