use std::f64::consts::{E, PI};

use serde::{Deserialize, Serialize};

use super::{DomainBox, Objective};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BenchmarkKind {
    Ackley,
    Rosenbrock,
    Griewank,
}

impl BenchmarkKind {
    pub fn name(&self) -> &'static str {
        match self {
            BenchmarkKind::Ackley => "ackley",
            BenchmarkKind::Rosenbrock => "rosenbrock",
            BenchmarkKind::Griewank => "griewank",
        }
    }

    /// Standard literature search boxes.
    pub fn default_bounds(&self) -> (f64, f64) {
        match self {
            BenchmarkKind::Ackley => (-32.768, 32.768),
            BenchmarkKind::Rosenbrock => (-5.0, 10.0),
            BenchmarkKind::Griewank => (-600.0, 600.0),
        }
    }

    pub fn build(&self, dim: usize) -> Result<Benchmark> {
        match self {
            BenchmarkKind::Ackley => ackley(dim),
            BenchmarkKind::Rosenbrock => rosenbrock(dim),
            BenchmarkKind::Griewank => griewank(dim),
        }
    }
}

/// One of the canonical test functions, written for maximization.
#[derive(Debug, Clone)]
pub struct Benchmark {
    kind: BenchmarkKind,
    domain: DomainBox,
}

fn check_dim(dim: usize, min: usize) -> Result<()> {
    if dim < min {
        Err(Error::Config(format!("benchmark dimension must be at least {min} (got {dim})")))
    } else {
        Ok(())
    }
}

/// Negated Ackley; optimum 0 at the origin.
pub fn ackley(dim: usize) -> Result<Benchmark> {
    check_dim(dim, 1)?;
    Ok(Benchmark::new(BenchmarkKind::Ackley, dim))
}

/// Negated, dimension-averaged Rosenbrock; optimum 0 at the all-ones point.
pub fn rosenbrock(dim: usize) -> Result<Benchmark> {
    check_dim(dim, 2)?;
    Ok(Benchmark::new(BenchmarkKind::Rosenbrock, dim))
}

/// Griewank variant with per-factor constant `1.05^0.2`; optimum
/// `1.05^{0.2 d} - 1` at the origin.
pub fn griewank(dim: usize) -> Result<Benchmark> {
    check_dim(dim, 1)?;
    Ok(Benchmark::new(BenchmarkKind::Griewank, dim))
}

impl Benchmark {
    fn new(kind: BenchmarkKind, dim: usize) -> Self {
        let (lo, hi) = kind.default_bounds();
        Benchmark {
            kind,
            domain: DomainBox::cube(dim, lo, hi),
        }
    }

    pub fn with_domain(mut self, domain: DomainBox) -> Result<Self> {
        if domain.dim() != self.domain.dim() {
            return Err(Error::Dimension {
                expected: self.domain.dim(),
                actual: domain.dim(),
            });
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn kind(&self) -> BenchmarkKind {
        self.kind
    }
}

impl Objective for Benchmark {
    fn name(&self) -> String {
        self.kind.name().to_string()
    }

    fn dim(&self) -> usize {
        self.domain.dim()
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        let d = x.len() as f64;
        match self.kind {
            BenchmarkKind::Ackley => {
                let sq = x.iter().map(|v| v * v).sum::<f64>() / d;
                let cs = x.iter().map(|v| (2.0 * PI * v).cos()).sum::<f64>() / d;
                20.0 * (-0.2 * sq.sqrt()).exp() + cs.exp() - 20.0 - E
            }
            BenchmarkKind::Rosenbrock => {
                let s: f64 = x
                    .windows(2)
                    .map(|w| 100.0 * (w[1] - w[0] * w[0]).powi(2) + (1.0 - w[0]).powi(2))
                    .sum();
                -s / (d - 1.0)
            }
            BenchmarkKind::Griewank => {
                let factor = 1.05f64.powf(0.2);
                let sq = x.iter().map(|v| v * v).sum::<f64>() / 4000.0;
                let prod: f64 = x
                    .iter()
                    .enumerate()
                    .map(|(i, v)| factor * (v / ((i + 1) as f64).sqrt()).cos())
                    .product();
                -1.0 - sq + prod
            }
        }
    }

    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    fn maximizer(&self) -> Option<Vec<f64>> {
        let d = self.domain.dim();
        Some(match self.kind {
            BenchmarkKind::Rosenbrock => vec![1.0; d],
            _ => vec![0.0; d],
        })
    }

    fn optimum_value(&self) -> Option<f64> {
        Some(match self.kind {
            BenchmarkKind::Griewank => 1.05f64.powf(0.2 * self.domain.dim() as f64) - 1.0,
            _ => 0.0,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::objectives::central_gradient;
    use approx::assert_abs_diff_eq;

    #[test]
    fn optimum_values() {
        let a = ackley(500).unwrap();
        assert_abs_diff_eq!(a.evaluate(&vec![0.0; 500]), 0.0, epsilon = 1e-12);
        let r = rosenbrock(500).unwrap();
        assert_eq!(r.evaluate(&vec![1.0; 500]), 0.0);
        let g = griewank(5).unwrap();
        assert_abs_diff_eq!(g.evaluate(&[0.0; 5]), 0.05, epsilon = 1e-12);
        for b in [a, r, g] {
            let x = b.maximizer().unwrap();
            assert_abs_diff_eq!(b.evaluate(&x), b.optimum_value().unwrap(), epsilon = 1e-9);
        }
    }

    #[test]
    fn smooth_optima_are_stationary() {
        for b in [rosenbrock(7).unwrap(), griewank(7).unwrap()] {
            let g = central_gradient(&b, &b.maximizer().unwrap(), 1e-5);
            let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
            assert!(norm < 1e-6, "{}: {norm}", b.name());
        }
        // Ackley is not differentiable at the origin; check symmetry of the
        // radial term instead.
        let a = ackley(4).unwrap();
        for &t in &[1e-3, 0.1, 0.37] {
            let plus = a.evaluate(&[t, 0.0, 0.0, 0.0]);
            let minus = a.evaluate(&[-t, 0.0, 0.0, 0.0]);
            assert_eq!(plus, minus);
            assert!(plus < 0.0);
        }
    }

    #[test]
    fn dimension_checks() {
        assert!(ackley(0).is_err());
        assert!(rosenbrock(1).is_err());
        assert!(griewank(3).unwrap().with_domain(DomainBox::cube(2, -1.0, 1.0)).is_err());
    }

    #[test]
    fn known_values() {
        // Rosenbrock at 3·1, d = 3: both terms are 100·36 + 4
        let r = rosenbrock(3).unwrap();
        assert_eq!(r.evaluate(&[3.0, 3.0, 3.0]), -3604.0);
        let a = ackley(2).unwrap();
        // cos(2π) = 1, so the cosine term contributes e
        assert_abs_diff_eq!(a.evaluate(&[1.0, 1.0]), 20.0 * (-0.2f64).exp() - 20.0, epsilon = 1e-12);
    }
}
