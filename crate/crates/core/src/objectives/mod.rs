//! Black-box objectives. Everything is maximized.

mod attack;
mod benchmarks;
mod external;
mod landscape;

pub use attack::{sample_inputs, AttackObjective, SoftmaxClassifier, DEFAULT_CLASSIFIER_SEED};
pub use benchmarks::{ackley, griewank, rosenbrock, Benchmark, BenchmarkKind};
pub use external::ExternalObjective;
pub use landscape::{LandscapeObjective, LANDSCAPE_BUMPS};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Axis-aligned box `[lo_i, hi_i]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainBox {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl DomainBox {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() {
            return Err(Error::Dimension {
                expected: lo.len(),
                actual: hi.len(),
            });
        }
        if let Some((l, h)) = lo.iter().zip(&hi).find(|(l, h)| !(l < h)) {
            return Err(Error::Config(format!("empty domain side [{l}, {h}]")));
        }
        Ok(DomainBox { lo, hi })
    }

    pub fn cube(dim: usize, lo: f64, hi: f64) -> Self {
        DomainBox {
            lo: vec![lo; dim],
            hi: vec![hi; dim],
        }
    }

    /// The whole space; every point is inside.
    pub fn unbounded(dim: usize) -> Self {
        Self::cube(dim, f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn dim(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(&v, (&l, &h))| v >= l && v <= h)
    }

    /// Longest side length.
    pub fn diameter(&self) -> f64 {
        self.lo
            .iter()
            .zip(&self.hi)
            .map(|(l, h)| h - l)
            .fold(0.0, f64::max)
    }
}

/// A black-box function over a box.
pub trait Objective: Send + Sync {
    fn name(&self) -> String;

    fn dim(&self) -> usize;

    /// `f(x)`. Implementations that can fail return NaN; callers treat
    /// non-finite values as errors.
    fn evaluate(&self, x: &[f64]) -> f64;

    fn domain(&self) -> &DomainBox;

    fn maximizer(&self) -> Option<Vec<f64>> {
        None
    }

    fn optimum_value(&self) -> Option<f64> {
        None
    }
}

impl<T: Objective + ?Sized> Objective for std::sync::Arc<T> {
    fn name(&self) -> String {
        (**self).name()
    }
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn evaluate(&self, x: &[f64]) -> f64 {
        (**self).evaluate(x)
    }
    fn domain(&self) -> &DomainBox {
        (**self).domain()
    }
    fn maximizer(&self) -> Option<Vec<f64>> {
        (**self).maximizer()
    }
    fn optimum_value(&self) -> Option<f64> {
        (**self).optimum_value()
    }
}

/// Wraps a closure as an objective.
pub struct FnObjective<F> {
    name: String,
    domain: DomainBox,
    f: F,
    maximizer: Option<Vec<f64>>,
    optimum: Option<f64>,
}

impl<F> FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    pub fn new(name: impl Into<String>, domain: DomainBox, f: F) -> Self {
        FnObjective {
            name: name.into(),
            domain,
            f,
            maximizer: None,
            optimum: None,
        }
    }

    pub fn with_maximizer(mut self, x: Vec<f64>, value: f64) -> Self {
        self.maximizer = Some(x);
        self.optimum = Some(value);
        self
    }
}

impl<F> Objective for FnObjective<F>
where
    F: Fn(&[f64]) -> f64 + Send + Sync,
{
    fn name(&self) -> String {
        self.name.clone()
    }
    fn dim(&self) -> usize {
        self.domain.dim()
    }
    fn evaluate(&self, x: &[f64]) -> f64 {
        (self.f)(x)
    }
    fn domain(&self) -> &DomainBox {
        &self.domain
    }
    fn maximizer(&self) -> Option<Vec<f64>> {
        self.maximizer.clone()
    }
    fn optimum_value(&self) -> Option<f64> {
        self.optimum
    }
}

/// Central-difference gradient of `f` at `x`.
pub fn central_gradient(f: &dyn Objective, x: &[f64], step: f64) -> Vec<f64> {
    let mut probe = x.to_vec();
    (0..x.len())
        .map(|i| {
            probe[i] = x[i] + step;
            let up = f.evaluate(&probe);
            probe[i] = x[i] - step;
            let down = f.evaluate(&probe);
            probe[i] = x[i];
            (up - down) / (2.0 * step)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn domain_box() {
        let b = DomainBox::new(vec![-1.0, 0.0], vec![1.0, 3.0]).unwrap();
        assert!(b.contains(&[0.0, 3.0]));
        assert!(!b.contains(&[0.0, 3.1]));
        assert_eq!(b.diameter(), 3.0);
        assert!(DomainBox::new(vec![1.0], vec![1.0]).is_err());
        assert!(DomainBox::new(vec![1.0], vec![2.0, 3.0]).is_err());
        assert!(DomainBox::unbounded(3).contains(&[1e300, -1e300, 0.0]));
    }
}
