//! Exact distribution of opponent action counts under a product profile.
//!
//! Dense dynamic programming over count vectors: for `m` players and `k`
//! actions the state space is all compositions of `m` into `k` bins, stored
//! as a dense array over the free coordinates `c_1..c_{k-1}` (side `m + 1`
//! each, `c_0` implied). Polynomial in `m` for fixed `k`, which is what makes
//! count-structured games tractable at hundreds of players.

use crate::error::{Error, Result};
use crate::strategy::MixedStrategy;

/// State-space budget: `(m+1)^(k-1)` cells.
const COUNT_STATE_BUDGET: f64 = 1e7;

#[derive(Debug, Clone)]
pub(crate) struct CountDistribution {
    m: usize,
    k: usize,
    side: usize,
    probs: Vec<f64>,
}

impl CountDistribution {
    pub fn of(k: usize, strategies: &[MixedStrategy]) -> Result<Self> {
        let refs: Vec<&MixedStrategy> = strategies.iter().collect();
        Self::of_refs(k, &refs)
    }

    pub fn of_refs(k: usize, strategies: &[&MixedStrategy]) -> Result<Self> {
        if k < 2 {
            return Err(Error::contract("count distribution needs k >= 2"));
        }
        let m = strategies.len();
        let side = m + 1;
        let len = (side as f64).powi(k as i32 - 1);
        if len > COUNT_STATE_BUDGET {
            return Err(Error::resource(format!(
                "count state space {len:.3e} exceeds budget {COUNT_STATE_BUDGET:.0e}"
            )));
        }
        let len = len as usize;
        let mut probs = vec![0.0_f64; len];
        probs[0] = 1.0;
        let strides = strides(side, k);
        let mut scratch = vec![0.0_f64; len];
        for s in strategies {
            scratch.iter_mut().for_each(|v| *v = 0.0);
            for (idx, &p_state) in probs.iter().enumerate() {
                if p_state == 0.0 {
                    continue;
                }
                for a in 0..k {
                    let pa = s.prob(a);
                    if pa == 0.0 {
                        continue;
                    }
                    let target = if a == 0 { idx } else { idx + strides[a - 1] };
                    scratch[target] += p_state * pa;
                }
            }
            std::mem::swap(&mut probs, &mut scratch);
        }
        Ok(Self { m, k, side, probs })
    }

    /// Visit every count vector with positive probability. The slice handed
    /// to the callback has length `k` and sums to `m`.
    pub fn for_each(&self, mut f: impl FnMut(&[usize], f64)) {
        let mut counts = vec![0usize; self.k];
        for (idx, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            if !self.decode(idx, &mut counts) {
                continue;
            }
            f(&counts, p);
        }
    }

    fn decode(&self, mut idx: usize, counts: &mut [usize]) -> bool {
        let mut total = 0usize;
        for c in counts.iter_mut().skip(1) {
            *c = idx % self.side;
            idx /= self.side;
            total += *c;
        }
        if total > self.m {
            return false;
        }
        counts[0] = self.m - total;
        true
    }

    /// Remove one player's contribution, two-action games only.
    ///
    /// Solves the linear deconvolution in whichever direction keeps the
    /// recurrence multiplier at most one; returns `None` if the result fails
    /// a sanity check, in which case callers rebuild from scratch.
    pub fn deconvolve_one(&self, s: &MixedStrategy) -> Option<Self> {
        if self.k != 2 || self.m == 0 {
            return None;
        }
        let p1 = s.prob(1);
        let m = self.m;
        let d = &self.probs;
        let mut x = vec![0.0_f64; m];
        if p1 <= 1e-15 {
            x.copy_from_slice(&d[..m]);
        } else if p1 >= 1.0 - 1e-15 {
            x.copy_from_slice(&d[1..]);
        } else if p1 < 0.5 {
            let p0 = 1.0 - p1;
            x[0] = d[0] / p0;
            for c in 1..m {
                x[c] = (d[c] - p1 * x[c - 1]) / p0;
            }
        } else {
            x[m - 1] = d[m] / p1;
            for c in (1..m).rev() {
                x[c - 1] = (d[c] - (1.0 - p1) * x[c]) / p1;
            }
        }
        let mut total = 0.0;
        for v in x.iter_mut() {
            if *v < 0.0 {
                if *v < -1e-7 {
                    return None;
                }
                *v = 0.0;
            }
            total += *v;
        }
        if (total - 1.0).abs() > 1e-6 {
            return None;
        }
        for v in x.iter_mut() {
            *v /= total;
        }
        Some(Self {
            m: m - 1,
            k: 2,
            side: m,
            probs: x,
        })
    }
}

fn strides(side: usize, k: usize) -> Vec<usize> {
    let mut out = Vec::with_capacity(k - 1);
    let mut s = 1usize;
    for _ in 1..k {
        out.push(s);
        s *= side;
    }
    out
}
