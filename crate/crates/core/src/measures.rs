//! Discrete measures, relative entropy and total variation.

use serde::{Deserialize, Serialize};

use crate::error::{check_len, input, Result};

/// Tolerance on the total mass of a probability vector.
pub const PROBABILITY_TOL: f64 = 1e-12;

/// Nonnegative weights on an indexed support.
///
/// When constructed as a probability measure the weights are renormalized
/// and the applied correction `|Σw - 1|` is stored.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiscreteMeasure {
    weights: Vec<f64>,
    is_probability: bool,
    correction: f64,
}

impl DiscreteMeasure {
    /// Finite nonnegative measure.
    pub fn finite(weights: Vec<f64>) -> Result<Self> {
        validate(&weights)?;
        Ok(Self {
            weights,
            is_probability: false,
            correction: 0.0,
        })
    }

    /// Probability vector; the sum must be 1 within [`PROBABILITY_TOL`].
    pub fn probability(weights: Vec<f64>) -> Result<Self> {
        Self::probability_with_tol(weights, PROBABILITY_TOL)
    }

    /// Probability vector accepted when the sum is within `tol` of 1.
    pub fn probability_with_tol(weights: Vec<f64>, tol: f64) -> Result<Self> {
        validate(&weights)?;
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > tol {
            return input(format!("weights sum to {total}, not 1"));
        }
        Ok(Self {
            weights: weights.iter().map(|w| w / total).collect(),
            is_probability: true,
            correction: (total - 1.0).abs(),
        })
    }

    /// Normalizes arbitrary nonnegative weights with positive total.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        validate(&weights)?;
        let total: f64 = weights.iter().sum();
        if !(total > 0.0) {
            return input("cannot normalize a zero measure");
        }
        Ok(Self {
            weights: weights.iter().map(|w| w / total).collect(),
            is_probability: true,
            correction: (total - 1.0).abs(),
        })
    }

    pub fn dirac(k: usize, i: usize) -> Result<Self> {
        if i >= k {
            return input(format!("dirac index {i} out of range for {k} points"));
        }
        let mut w = vec![0.0; k];
        w[i] = 1.0;
        Self::probability(w)
    }

    pub fn uniform(k: usize) -> Result<Self> {
        if k == 0 {
            return input("uniform measure needs at least one point");
        }
        Self::probability(vec![1.0 / k as f64; k])
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn is_probability(&self) -> bool {
        self.is_probability
    }

    /// Normalization correction applied at construction.
    pub fn correction(&self) -> f64 {
        self.correction
    }

    pub fn total(&self) -> f64 {
        self.weights.iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Result<Self> {
        Self::finite(self.weights.iter().map(|w| w * factor).collect())
    }

    /// Indices with positive weight.
    pub fn support(&self) -> Vec<usize> {
        (0..self.len()).filter(|&i| self.weights[i] > 0.0).collect()
    }
}

fn validate(weights: &[f64]) -> Result<()> {
    if let Some(w) = weights.iter().find(|w| !(**w >= 0.0) || !w.is_finite()) {
        return input(format!("weights must be finite and nonnegative, found {w}"));
    }
    Ok(())
}

fn require_probabilities(a: &DiscreteMeasure, b: &DiscreteMeasure) -> Result<()> {
    if !a.is_probability || !b.is_probability {
        return input("expected probability measures");
    }
    check_len(a.len(), b.len())
}

/// `H(ν|γ) = Σ ν log(ν/γ)` in nats; `+∞` when `ν` charges a `γ`-null point.
pub fn relative_entropy(nu: &DiscreteMeasure, gamma: &DiscreteMeasure) -> Result<f64> {
    require_probabilities(nu, gamma)?;
    Ok(entropy_sum(nu.weights(), gamma.weights()))
}

/// `Σ p log(p/q)` for raw vectors, with `0 log 0 = 0`.
pub(crate) fn entropy_sum(p: &[f64], q: &[f64]) -> f64 {
    let mut h = 0.0;
    for (&a, &b) in p.iter().zip(q) {
        if a > 0.0 {
            if b <= 0.0 {
                return f64::INFINITY;
            }
            h += a * (a / b).ln();
        }
    }
    h.max(0.0)
}

/// `(1/2) Σ |ν₁ - ν₂|`.
pub fn tv_distance(nu1: &DiscreteMeasure, nu2: &DiscreteMeasure) -> Result<f64> {
    require_probabilities(nu1, nu2)?;
    Ok(0.5 * nu1.weights().iter().zip(nu2.weights()).map(|(a, b)| (a - b).abs()).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn entropy_examples() {
        let u = DiscreteMeasure::uniform(4).unwrap();
        assert_eq!(relative_entropy(&u, &u).unwrap(), 0.0);
        let d = DiscreteMeasure::dirac(4, 0).unwrap();
        assert!((relative_entropy(&d, &u).unwrap() - 4f64.ln()).abs() < 1e-12);
        let half = DiscreteMeasure::uniform(2).unwrap();
        let d2 = DiscreteMeasure::dirac(2, 0).unwrap();
        assert_eq!(relative_entropy(&half, &d2).unwrap(), f64::INFINITY);
        let f = DiscreteMeasure::finite(vec![1.0, 1.0]).unwrap();
        assert!(relative_entropy(&f, &half).is_err());
    }

    #[test]
    fn tv_examples() {
        let a = DiscreteMeasure::probability(vec![0.75, 0.25]).unwrap();
        let b = DiscreteMeasure::probability(vec![0.25, 0.75]).unwrap();
        assert_eq!(tv_distance(&a, &a).unwrap(), 0.0);
        assert!((tv_distance(&a, &b).unwrap() - 0.5).abs() < 1e-15);
        let d0 = DiscreteMeasure::dirac(2, 0).unwrap();
        let d1 = DiscreteMeasure::dirac(2, 1).unwrap();
        assert_eq!(tv_distance(&d0, &d1).unwrap(), 1.0);
    }

    #[test]
    fn construction_rejects_bad_weights() {
        assert!(DiscreteMeasure::probability(vec![0.5, 0.6]).is_err());
        assert!(DiscreteMeasure::finite(vec![-0.1]).is_err());
        assert!(DiscreteMeasure::finite(vec![f64::NAN]).is_err());
        let m = DiscreteMeasure::probability(vec![0.5, 0.5 + 5e-13]).unwrap();
        assert!(m.correction() > 0.0);
        assert!((m.total() - 1.0).abs() < 1e-15);
    }

    fn prob(k: usize) -> impl Strategy<Value = Vec<f64>> {
        proptest::collection::vec(0.01f64..1.0, k).prop_map(|w| {
            let s: f64 = w.iter().sum();
            w.into_iter().map(|x| x / s).collect()
        })
    }

    proptest! {
        #[test]
        fn entropy_nonnegative_and_zero_on_diagonal(p in prob(4), q in prob(4)) {
            let p = DiscreteMeasure::normalized(p).unwrap();
            let q = DiscreteMeasure::normalized(q).unwrap();
            let h = relative_entropy(&p, &q).unwrap();
            prop_assert!(h >= 0.0);
            prop_assert!(relative_entropy(&p, &p).unwrap().abs() < 1e-15);
            // Pinsker: tv² ≤ H/2
            let tv = tv_distance(&p, &q).unwrap();
            prop_assert!(2.0 * tv * tv <= h + 1e-12);
        }
    }
}
