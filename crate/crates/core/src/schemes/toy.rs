//! Small schemes that exhibit the failure modes of individual properties.

use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::Scalar;
use crate::compression::{Compressor, Learner, Multiset, SchemeError};

/// Compresses to the maximum and learns (−∞, second largest].
///
/// Inclusion holds but coherence I fails: a fresh z strictly between the
/// second largest element and the maximum is rejected without changing the
/// compression.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SecondLargest;

impl Compressor for SecondLargest {
    type Example = Scalar;

    fn compress(&self, u: &Multiset<Scalar>) -> Result<Multiset<Scalar>, SchemeError> {
        Ok(u.distinct().next_back().copied().into_iter().collect())
    }
}

impl Learner for SecondLargest {
    /// The accepted half-line's right end; −∞ for fewer than two examples.
    type Hypothesis = f64;

    fn learn(&self, u: &Multiset<Scalar>) -> Result<f64, SchemeError> {
        Ok(u.iter().rev().nth(1).map_or(f64::NEG_INFINITY, |s| s.0))
    }

    fn loss(&self, h: &f64, z: &Scalar) -> bool {
        z.0 > *h
    }
}

/// Identity, except the multiplicity of `atom` is capped at `cap`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trimming {
    pub atom: Scalar,
    pub cap: usize,
}

impl Trimming {
    pub fn new(atom: f64, cap: usize) -> Self {
        Self { atom: Scalar(atom), cap }
    }
}

impl Compressor for Trimming {
    type Example = Scalar;

    fn compress(&self, u: &Multiset<Scalar>) -> Result<Multiset<Scalar>, SchemeError> {
        let mut c = u.clone();
        c.retain(|e, n| if *e == self.atom { n.min(self.cap) } else { n });
        Ok(c)
    }
}

/// Examples are positions on the unit circle, encoded in [0, 1); the
/// compression is the closest pair (smallest in order on ties).
///
/// Preference holds, but two points added together can form a closer pair
/// even though neither alone does, so non-associativity fails.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClosestPairOnCircle;

fn circle_gap(a: f64, b: f64) -> f64 {
    let d = (a - b).abs().rem_euclid(1.0);
    d.min(1.0 - d)
}

impl Compressor for ClosestPairOnCircle {
    type Example = Scalar;

    fn compress(&self, u: &Multiset<Scalar>) -> Result<Multiset<Scalar>, SchemeError> {
        let pts: Vec<Scalar> = u.iter().copied().collect();
        if pts.len() < 2 {
            return Ok(u.clone());
        }
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..pts.len() {
            for j in (i + 1)..pts.len() {
                let g = circle_gap(pts[i].0, pts[j].0);
                if best.is_none_or(|(bg, _, _)| g < bg) {
                    best = Some((g, i, j));
                }
            }
        }
        let (_, i, j) = best.expect("at least two points");
        Ok([pts[i], pts[j]].into_iter().collect())
    }
}

/// Returns a pseudo-random sub-multiset that changes from call to call; no
/// property can be expected to hold.
#[derive(Debug, Default)]
pub struct RandomSubset {
    calls: AtomicU64,
}

impl Compressor for RandomSubset {
    type Example = Scalar;

    fn compress(&self, u: &Multiset<Scalar>) -> Result<Multiset<Scalar>, SchemeError> {
        let call = self.calls.fetch_add(1, Ordering::Relaxed);
        let mut state = crate::seed::derive_seed(call, u.len() as u64);
        let mut out = Multiset::new();
        for e in u.iter() {
            state = crate::seed::derive_seed(state, 1);
            if state & 1 == 1 {
                out.insert(*e);
            }
        }
        Ok(out)
    }
}
