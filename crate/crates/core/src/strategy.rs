//! Distributions over a finite action set and deviation maps on it.

use rand::Rng;

use crate::error::{Error, Result};
use crate::scalar::{Real, Scalar};

/// Probabilities below this are clamped to zero on construction; keeps
/// negative-zero noise artifacts out of downstream products.
const CLAMP_FLOOR: f64 = 1e-12;

/// A probability distribution over `k` actions.
///
/// Entries are non-negative and sum to one; construction renormalizes after
/// validating the sum to tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct MixedStrategy<S: Scalar = Real> {
    probs: Vec<S>,
}

impl<S: Scalar> MixedStrategy<S> {
    /// Validates non-negativity and a total within tolerance of one, clamps
    /// dust to zero, and renormalizes exactly.
    pub fn new(probs: Vec<S>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::contract("mixed strategy needs at least one action"));
        }
        let tol = S::base_tolerance();
        let mut probs = probs;
        for p in probs.iter_mut() {
            if *p < S::zero() {
                if *p < -tol {
                    return Err(Error::contract(format!(
                        "negative probability {p} in mixed strategy"
                    )));
                }
                *p = S::zero();
            }
            if p.into_f64() < CLAMP_FLOOR {
                *p = S::zero();
            }
        }
        let total: S = probs.iter().copied().sum();
        if (total - S::one()).abs() > tol {
            return Err(Error::contract(format!(
                "mixed strategy sums to {total}, expected 1"
            )));
        }
        if total <= S::zero() {
            return Err(Error::numeric("mixed strategy has zero total mass"));
        }
        // Renormalize only beyond ulp scale: construction is then idempotent,
        // so serialized distributions reload to bit-identical strategies.
        let ulp_scale = S::epsilon() * S::from_f64(4.0 * probs.len() as f64);
        if (total - S::one()).abs() > ulp_scale {
            for p in probs.iter_mut() {
                *p = *p / total;
            }
        }
        Ok(Self { probs })
    }

    /// Renormalizes arbitrary non-negative weights. Used by learners, where
    /// the weight total is nowhere near one by design.
    pub fn from_weights(weights: Vec<S>) -> Result<Self> {
        let total: S = weights.iter().copied().sum();
        if !(total > S::zero()) || !total.is_finite() {
            return Err(Error::numeric(format!(
                "cannot normalize weights with total {total}"
            )));
        }
        let mut probs = weights;
        for w in probs.iter_mut() {
            if *w < S::zero() {
                return Err(Error::contract("negative weight"));
            }
            *w = *w / total;
            if w.into_f64() < CLAMP_FLOOR {
                *w = S::zero();
            }
        }
        // Second pass restores an exact total after clamping.
        let total: S = probs.iter().copied().sum();
        for w in probs.iter_mut() {
            *w = *w / total;
        }
        Ok(Self { probs })
    }

    /// Reload a strategy we serialized ourselves: validates but never
    /// mutates, so artifacts round-trip bit-exactly.
    pub fn from_stored(probs: Vec<S>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::contract("mixed strategy needs at least one action"));
        }
        if probs.iter().any(|&p| p < S::zero()) {
            return Err(Error::contract("negative probability in stored strategy"));
        }
        let total: S = probs.iter().copied().sum();
        if (total - S::one()).abs() > S::base_tolerance() {
            return Err(Error::contract(format!(
                "stored strategy sums to {total}, expected 1"
            )));
        }
        Ok(Self { probs })
    }

    pub fn uniform(k: usize) -> Self {
        assert!(k > 0, "uniform strategy needs k >= 1");
        let p = S::one() / S::from_f64(k as f64);
        Self {
            probs: vec![p; k],
        }
    }

    pub fn point_mass(k: usize, action: usize) -> Self {
        assert!(action < k, "point mass action out of range");
        let mut probs = vec![S::zero(); k];
        probs[action] = S::one();
        Self { probs }
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.probs.len()
    }

    #[inline]
    pub fn probs(&self) -> &[S] {
        &self.probs
    }

    #[inline]
    pub fn prob(&self, action: usize) -> S {
        self.probs[action]
    }

    /// Pushforward under a deviation map: mass of `j` in the result is the
    /// total mass of the actions the map sends to `j`.
    pub fn apply(&self, map: &DeviationMap) -> Self {
        debug_assert_eq!(map.k(), self.k());
        let mut probs = vec![S::zero(); self.k()];
        for (source, &p) in self.probs.iter().enumerate() {
            probs[map.target(source)] = probs[map.target(source)] + p;
        }
        Self { probs }
    }

    /// Draw one action. Deterministic given the rng stream.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> usize {
        let u: f64 = rng.gen::<f64>();
        let mut acc = 0.0;
        for (j, &p) in self.probs.iter().enumerate() {
            acc += p.into_f64();
            if u < acc {
                return j;
            }
        }
        self.probs.len() - 1
    }

    pub fn to_f64_vec(&self) -> Vec<f64> {
        self.probs.iter().map(|p| p.into_f64()).collect()
    }
}

impl MixedStrategy<Real> {
    pub fn from_f64_slice(probs: &[f64]) -> Result<Self> {
        Self::new(probs.to_vec())
    }
}

/// A total remapping of the action set, `[k] -> [k]`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DeviationMap {
    targets: Vec<usize>,
}

impl DeviationMap {
    pub fn new(targets: Vec<usize>) -> Result<Self> {
        let k = targets.len();
        if k == 0 {
            return Err(Error::contract("deviation map on empty action set"));
        }
        if let Some(&bad) = targets.iter().find(|&&t| t >= k) {
            return Err(Error::contract(format!(
                "deviation target {bad} out of range for k={k}"
            )));
        }
        Ok(Self { targets })
    }

    pub fn identity(k: usize) -> Self {
        Self {
            targets: (0..k).collect(),
        }
    }

    /// The constant map onto one action; these make up the fixed family.
    pub fn constant(k: usize, action: usize) -> Self {
        assert!(action < k);
        Self {
            targets: vec![action; k],
        }
    }

    #[inline]
    pub fn k(&self) -> usize {
        self.targets.len()
    }

    #[inline]
    pub fn target(&self, source: usize) -> usize {
        self.targets[source]
    }

    pub fn is_identity(&self) -> bool {
        self.targets.iter().enumerate().all(|(s, &t)| s == t)
    }

    /// All `k^k` maps, for exhaustive cross-checks on tiny `k`.
    pub fn enumerate_all(k: usize) -> impl Iterator<Item = DeviationMap> {
        let total = (k as u64).pow(k as u32);
        (0..total).map(move |mut code| {
            let mut targets = Vec::with_capacity(k);
            for _ in 0..k {
                targets.push((code % k as u64) as usize);
                code /= k as u64;
            }
            DeviationMap { targets }
        })
    }
}
