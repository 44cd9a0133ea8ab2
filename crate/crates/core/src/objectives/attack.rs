use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use super::{DomainBox, Objective};
use crate::error::{Error, Result};
use crate::rng;

/// Seed of the reference classifier used by the attack experiments.
pub const DEFAULT_CLASSIFIER_SEED: u64 = 20_240_611;

/// Linear classifier `C(x) = W x + b` with one logit per class.
#[derive(Debug, Clone, PartialEq)]
pub struct SoftmaxClassifier {
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

impl SoftmaxClassifier {
    pub fn new(weights: Vec<Vec<f64>>, bias: Vec<f64>) -> Result<Self> {
        if weights.len() < 2 {
            return Err(Error::Config("classifier needs at least two classes".into()));
        }
        if bias.len() != weights.len() {
            return Err(Error::Dimension {
                expected: weights.len(),
                actual: bias.len(),
            });
        }
        let d = weights[0].len();
        if let Some(row) = weights.iter().find(|r| r.len() != d) {
            return Err(Error::Dimension {
                expected: d,
                actual: row.len(),
            });
        }
        Ok(SoftmaxClassifier { weights, bias })
    }

    /// Standard-normal weights and small biases drawn from `seed`.
    pub fn random(classes: usize, dim: usize, seed: u64) -> Result<Self> {
        let mut rng = rng::seeded(seed);
        let weights = (0..classes)
            .map(|_| (0..dim).map(|_| rng.sample::<f64, _>(StandardNormal)).collect())
            .collect();
        let bias = (0..classes)
            .map(|_| 0.1 * rng.sample::<f64, _>(StandardNormal))
            .collect();
        Self::new(weights, bias)
    }

    /// One weight row per class.
    pub fn weights(&self) -> &[Vec<f64>] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub fn classes(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.weights[0].len()
    }

    pub fn logits(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>() + b)
            .collect()
    }

    pub fn probabilities(&self, x: &[f64]) -> Vec<f64> {
        let z = self.logits(x);
        let m = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - m).exp()).collect();
        let s: f64 = e.iter().sum();
        e.into_iter().map(|v| v / s).collect()
    }

    pub fn predict(&self, x: &[f64]) -> usize {
        argmax(&self.logits(x))
    }
}

/// Clean inputs `x ~ N(0, I)` for attack experiments, one stream per input.
pub fn sample_inputs(count: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    (0..count)
        .map(|i| {
            let mut r = rng::stream(seed, i as u64);
            (0..dim).map(|_| r.sample::<f64, _>(StandardNormal)).collect()
        })
        .collect()
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

fn argmin(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::INFINITY), |(bi, bv), (i, &x)| if x < bv { (i, x) } else { (bi, bv) })
        .0
}

/// Targeted margin objective over a perturbation `μ`:
/// `L(μ) = -max{max_{y≠t} C(x+μ)_y - C(x+μ)_t, κ} - λ‖μ‖₂`, with the target
/// `t` the least likely class of the clean input.
#[derive(Debug, Clone)]
pub struct AttackObjective {
    classifier: Arc<SoftmaxClassifier>,
    input: Vec<f64>,
    target: usize,
    kappa: f64,
    penalty: f64,
    domain: DomainBox,
}

impl AttackObjective {
    pub fn new(classifier: Arc<SoftmaxClassifier>, input: Vec<f64>, kappa: f64, penalty: f64) -> Result<Self> {
        if input.len() != classifier.dim() {
            return Err(Error::Dimension {
                expected: classifier.dim(),
                actual: input.len(),
            });
        }
        if !(penalty >= 0.0) {
            return Err(Error::param("lambda_pen", penalty, "lambda_pen >= 0"));
        }
        let target = argmin(&classifier.logits(&input));
        let domain = DomainBox::cube(input.len(), -10.0, 10.0);
        Ok(AttackObjective {
            classifier,
            input,
            target,
            kappa,
            penalty,
            domain,
        })
    }

    pub fn with_domain(mut self, domain: DomainBox) -> Result<Self> {
        if domain.dim() != self.input.len() {
            return Err(Error::Dimension {
                expected: self.input.len(),
                actual: domain.dim(),
            });
        }
        self.domain = domain;
        Ok(self)
    }

    pub fn target(&self) -> usize {
        self.target
    }

    pub fn input(&self) -> &[f64] {
        &self.input
    }

    fn perturbed(&self, mu: &[f64]) -> Vec<f64> {
        self.input.iter().zip(mu).map(|(a, b)| a + b).collect()
    }

    /// Largest non-target logit minus the target logit.
    pub fn margin(&self, mu: &[f64]) -> f64 {
        let z = self.classifier.logits(&self.perturbed(mu));
        let other = z
            .iter()
            .enumerate()
            .filter(|&(i, _)| i != self.target)
            .map(|(_, &v)| v)
            .fold(f64::NEG_INFINITY, f64::max);
        other - z[self.target]
    }

    /// The classifier assigns `x + μ` to the target class.
    pub fn success(&self, mu: &[f64]) -> bool {
        self.classifier.predict(&self.perturbed(mu)) == self.target
    }
}

impl Objective for AttackObjective {
    fn name(&self) -> String {
        "attack".into()
    }

    fn dim(&self) -> usize {
        self.input.len()
    }

    fn evaluate(&self, mu: &[f64]) -> f64 {
        if mu.len() != self.input.len() {
            return f64::NAN;
        }
        let norm = mu.iter().map(|v| v * v).sum::<f64>().sqrt();
        -self.margin(mu).max(self.kappa) - self.penalty * norm
    }

    fn domain(&self) -> &DomainBox {
        &self.domain
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three_class() -> Arc<SoftmaxClassifier> {
        // logits (3, 1, 0) at the origin, slope along x
        let w = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![-1.0, 0.0]];
        Arc::new(SoftmaxClassifier::new(w, vec![3.0, 1.0, 0.0]).unwrap())
    }

    #[test]
    fn direct_substitution() {
        let a = AttackObjective::new(three_class(), vec![0.0, 0.0], -5.0, 0.0).unwrap();
        assert_eq!(a.target(), 2);
        assert_eq!(a.evaluate(&[0.0, 0.0]), -3.0);
        assert!(!a.success(&[0.0, 0.0]));
    }

    #[test]
    fn clamp_when_target_wins() {
        let a = AttackObjective::new(three_class(), vec![0.0, 0.0], 0.0, 0.5).unwrap();
        // at μ = (-4, 0): logits (-1, 1, 4), target margin 3
        let mu = [-4.0, 0.0];
        assert!(a.margin(&mu) < 0.0);
        assert!(a.success(&mu));
        assert_eq!(a.evaluate(&mu), -0.5 * 4.0);
    }

    #[test]
    fn success_iff_zero_objective() {
        let clf = Arc::new(SoftmaxClassifier::random(4, 3, 5).unwrap());
        let a = AttackObjective::new(clf, vec![0.3, -0.2, 1.0], 0.0, 0.0).unwrap();
        let mut r = rng::seeded(3);
        for _ in 0..2000 {
            let mu: Vec<f64> = (0..3).map(|_| 3.0 * r.sample::<f64, _>(StandardNormal)).collect();
            assert_eq!(a.success(&mu), a.evaluate(&mu) == 0.0, "{mu:?}");
        }
    }

    #[test]
    fn errors() {
        assert!(SoftmaxClassifier::new(vec![vec![1.0]], vec![0.0]).is_err());
        assert!(AttackObjective::new(three_class(), vec![0.0], 0.0, 0.0).is_err());
        assert!(AttackObjective::new(three_class(), vec![0.0, 0.0], 0.0, -1.0).is_err());
        let p = three_class().probabilities(&[0.0, 0.0]);
        assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-15);
    }
}
