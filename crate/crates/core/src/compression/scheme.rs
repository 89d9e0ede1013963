use std::fmt;

use serde::Serialize;
use thiserror::Error;

use super::Multiset;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SchemeError {
    #[error("solver did not converge after {iterations} iterations")]
    NotConverged { iterations: usize },
    #[error("invalid scheme configuration: {0}")]
    Config(String),
    #[error("invalid training data: {0}")]
    Data(String),
    #[error("compression is not a sub-multiset of its input")]
    NotSubMultiset,
}

/// A compression function: a map from multisets of examples to sub-multisets.
pub trait Compressor: Sync {
    type Example: Ord + Clone + Send + Sync + fmt::Debug + Serialize;

    fn compress(&self, u: &Multiset<Self::Example>) -> Result<Multiset<Self::Example>, SchemeError>;
}

/// A compression scheme that also carries a learning algorithm and a 0/1 loss.
pub trait Learner: Compressor {
    type Hypothesis: Send + Sync;

    fn learn(&self, u: &Multiset<Self::Example>) -> Result<Self::Hypothesis, SchemeError>;

    /// `true` when `h` is inappropriate for `z`.
    fn loss(&self, h: &Self::Hypothesis, z: &Self::Example) -> bool;

    /// Rebuilds the hypothesis from a compression, when the scheme has a reconstruction map.
    fn reconstruct(&self, _c: &Multiset<Self::Example>) -> Option<Result<Self::Hypothesis, SchemeError>> {
        None
    }

    /// Training examples with loss 1, with their full multiplicities.
    fn misclassified(&self, h: &Self::Hypothesis, u: &Multiset<Self::Example>) -> Multiset<Self::Example> {
        let mut out = Multiset::new();
        for (z, c) in u.iter_counts() {
            if self.loss(h, z) {
                out.insert_n(z.clone(), c);
            }
        }
        out
    }
}

/// Compresses and verifies the result is a sub-multiset of the input.
pub fn checked_compress<S: Compressor + ?Sized>(
    s: &S,
    u: &Multiset<S::Example>,
) -> Result<Multiset<S::Example>, SchemeError> {
    let c = s.compress(u)?;
    if c.is_subset(u) {
        Ok(c)
    } else {
        Err(SchemeError::NotSubMultiset)
    }
}

/// `c(c(U) ∪ {z}) ≠ c(U)`, given `c(U)` already computed; one compress call.
pub fn changes_compression<S: Compressor + ?Sized>(
    s: &S,
    c_u: &Multiset<S::Example>,
    z: &S::Example,
) -> Result<bool, SchemeError> {
    let grown = c_u.with(z.clone());
    Ok(checked_compress(s, &grown)? != *c_u)
}

/// Whether adding `z` to the compression of `U` changes it. Calls `compress` exactly twice.
pub fn change_of_compression<S: Compressor + ?Sized>(
    s: &S,
    u: &Multiset<S::Example>,
    z: &S::Example,
) -> Result<bool, SchemeError> {
    let c_u = checked_compress(s, u)?;
    changes_compression(s, &c_u, z)
}

/// The augmented scheme c̃(U) = c(U) ∪ (mis(U) \ c(U)) with reconstruction equal to the learner.
///
/// Every misclassified training example ends up in the compression with its
/// full multiplicity, so the augmented scheme has the inclusion property.
#[derive(Debug, Clone)]
pub struct Augmented<S> {
    inner: S,
}

pub fn augment<S: Learner>(s: S) -> Augmented<S> {
    Augmented { inner: s }
}

impl<S> Augmented<S> {
    pub fn inner(&self) -> &S {
        &self.inner
    }
}

impl<S: Learner> Compressor for Augmented<S> {
    type Example = S::Example;

    fn compress(&self, u: &Multiset<S::Example>) -> Result<Multiset<S::Example>, SchemeError> {
        let c = checked_compress(&self.inner, u)?;
        let h = self.inner.learn(u)?;
        let mis = self.inner.misclassified(&h, u);
        Ok(c.union(&mis.difference(&c)))
    }
}

impl<S: Learner> Learner for Augmented<S> {
    type Hypothesis = S::Hypothesis;

    fn learn(&self, u: &Multiset<S::Example>) -> Result<S::Hypothesis, SchemeError> {
        self.inner.learn(u)
    }

    fn loss(&self, h: &S::Hypothesis, z: &S::Example) -> bool {
        self.inner.loss(h, z)
    }

    fn reconstruct(&self, c: &Multiset<S::Example>) -> Option<Result<S::Hypothesis, SchemeError>> {
        Some(self.inner.learn(c))
    }
}
