use super::{DomainBox, Objective};
use crate::error::{Error, Result};

/// `(height, center, width)` of the standard one-dimensional landscape: a
/// narrow global peak at 1 flanked by two broad, slightly lower decoys.
pub const LANDSCAPE_BUMPS: [(f64, f64, f64); 3] = [(1.0, 1.0, 0.6), (0.85, -9.0, 2.0), (0.8, 11.0, 2.0)];

/// Upper envelope of Gaussian bumps on an interval.
///
/// `f(x) = max_j h_j exp(-(x - c_j)^2 / (2 w_j^2))`, continuous with kinks
/// where the dominant bump changes.
#[derive(Debug, Clone)]
pub struct LandscapeObjective {
    bumps: Vec<(f64, f64, f64)>,
    domain: DomainBox,
    kinks: Vec<f64>,
}

impl LandscapeObjective {
    pub fn standard() -> Self {
        Self::new(LANDSCAPE_BUMPS.to_vec(), -40.0, 40.0).expect("standard landscape is valid")
    }

    pub fn new(bumps: Vec<(f64, f64, f64)>, lo: f64, hi: f64) -> Result<Self> {
        if bumps.is_empty() {
            return Err(Error::Config("landscape needs at least one bump".into()));
        }
        for &(h, _, w) in &bumps {
            if !(h > 0.0) || !(w > 0.0) {
                return Err(Error::Config(format!("bump height {h} and width {w} must be positive")));
            }
        }
        let domain = DomainBox::new(vec![lo], vec![hi])?;
        let mut me = LandscapeObjective {
            bumps,
            domain,
            kinks: Vec::new(),
        };
        me.kinks = me.find_kinks(lo, hi);
        Ok(me)
    }

    fn dominant(&self, x: f64) -> usize {
        let mut best = 0;
        let mut best_v = f64::NEG_INFINITY;
        for (j, &(h, c, w)) in self.bumps.iter().enumerate() {
            let v = h.ln() - (x - c).powi(2) / (2.0 * w * w);
            if v > best_v {
                best_v = v;
                best = j;
            }
        }
        best
    }

    fn find_kinks(&self, lo: f64, hi: f64) -> Vec<f64> {
        let n = 80_000;
        let step = (hi - lo) / n as f64;
        let mut out = Vec::new();
        let mut prev = self.dominant(lo);
        for i in 1..=n {
            let x = lo + step * i as f64;
            let cur = self.dominant(x);
            if cur != prev {
                let (mut a, mut b) = (x - step, x);
                for _ in 0..80 {
                    let m = 0.5 * (a + b);
                    if self.dominant(m) == prev {
                        a = m;
                    } else {
                        b = m;
                    }
                }
                out.push(0.5 * (a + b));
                prev = cur;
            }
        }
        out
    }

    /// Points where `f` is not differentiable.
    pub fn kinks(&self) -> &[f64] {
        &self.kinks
    }

    /// Kinks plus bump centers inside the domain; useful integration breaks.
    pub fn breakpoints(&self) -> Vec<f64> {
        let (lo, hi) = (self.domain.lo[0], self.domain.hi[0]);
        let mut pts: Vec<f64> = self
            .kinks
            .iter()
            .copied()
            .chain(self.bumps.iter().map(|b| b.1))
            .filter(|&x| x > lo && x < hi)
            .collect();
        pts.sort_by(f64::total_cmp);
        pts
    }

    pub fn value(&self, x: f64) -> f64 {
        self.bumps
            .iter()
            .map(|&(h, c, w)| h * (-(x - c).powi(2) / (2.0 * w * w)).exp())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    fn argmax(&self) -> (f64, f64) {
        // the envelope maximum sits at a dominant bump's center
        self.bumps
            .iter()
            .map(|&(_, c, _)| (c, self.value(c)))
            .fold((f64::NAN, f64::NEG_INFINITY), |a, b| if b.1 > a.1 { b } else { a })
    }
}

impl Objective for LandscapeObjective {
    fn name(&self) -> String {
        "landscape".into()
    }

    fn dim(&self) -> usize {
        1
    }

    fn evaluate(&self, x: &[f64]) -> f64 {
        match x {
            [v] => self.value(*v),
            _ => f64::NAN,
        }
    }

    fn domain(&self) -> &DomainBox {
        &self.domain
    }

    fn maximizer(&self) -> Option<Vec<f64>> {
        Some(vec![self.argmax().0])
    }

    fn optimum_value(&self) -> Option<f64> {
        Some(self.argmax().1)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn standard_landscape() {
        let f = LandscapeObjective::standard();
        assert_eq!(f.maximizer(), Some(vec![1.0]));
        assert_eq!(f.optimum_value(), Some(1.0));
        assert_eq!(f.kinks().len(), 2);
        for &k in f.kinks() {
            let l = f.value(k - 1e-9);
            let r = f.value(k + 1e-9);
            assert!((l - r).abs() < 1e-8);
        }
        // decoys are the local maxima away from the peak
        assert!((f.value(-9.0) - 0.85).abs() < 1e-12);
        assert!((f.value(11.0) - 0.8).abs() < 1e-12);
        assert!(f.evaluate(&[0.0, 1.0]).is_nan());
    }

    #[test]
    fn rejects_bad_bumps() {
        assert!(LandscapeObjective::new(vec![], -1.0, 1.0).is_err());
        assert!(LandscapeObjective::new(vec![(1.0, 0.0, 0.0)], -1.0, 1.0).is_err());
        assert!(LandscapeObjective::new(vec![(1.0, 0.0, 1.0)], 1.0, -1.0).is_err());
    }
}
