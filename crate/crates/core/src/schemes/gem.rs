//! Guaranteed Error Machine: a ternary classifier made of nested feature-space
//! balls. Each ball is centred on an example and grows until it touches an
//! example of the opposite label; that example becomes the next centre. Points
//! outside every ball receive the abstention label 0.

use serde::{Deserialize, Serialize};

use super::{Kernel, LabeledExample, Point};
use crate::compression::{Compressor, Learner, Multiset, SchemeError};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Region {
    pub center: LabeledExample,
    /// Squared feature-space radius of the open ball; `None` when unbounded.
    pub radius_sq: Option<f64>,
}

impl Region {
    fn contains(&self, kernel: &Kernel, x: &[f64]) -> bool {
        match self.radius_sq {
            None => true,
            Some(r2) => kernel.feature_dist_sq(self.center.x.coords(), x) < r2,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GemModel {
    pub kernel: Kernel,
    pub budget: usize,
    pub regions: Vec<Region>,
    /// The centres picked after the anchor, in order.
    pub centers: Vec<LabeledExample>,
}

impl GemModel {
    /// Label of the first region containing `x`, or 0 when `x` is in no region.
    pub fn predict(&self, x: &[f64]) -> f64 {
        self.regions
            .iter()
            .find(|r| r.contains(&self.kernel, x))
            .map_or(0.0, |r| r.center.label())
    }
}

pub fn gem_train(
    s: &Multiset<LabeledExample>,
    anchor: &LabeledExample,
    budget: usize,
    kernel: Kernel,
) -> Result<GemModel, SchemeError> {
    if budget == 0 {
        return Err(SchemeError::Config("GEM budget d must be at least 1".into()));
    }
    kernel.validate().map_err(SchemeError::Config)?;
    let dim = anchor.x.dim();
    for e in s.distinct().chain(std::iter::once(anchor)) {
        if e.label().abs() != 1.0 || e.x.dim() != dim || !e.x.is_finite() {
            return Err(SchemeError::Data(format!("GEM needs ±1 labels on finite {dim}-vectors, got {e:?}")));
        }
    }

    let mut pool = s.with(anchor.clone());
    let mut center = anchor.clone();
    let mut regions = Vec::new();
    let mut centers = Vec::new();
    loop {
        let dist = |e: &LabeledExample| kernel.feature_dist_sq(center.x.coords(), e.x.coords());
        let r2 = pool
            .distinct()
            .filter(|e| e.y != center.y)
            .map(dist)
            .fold(f64::INFINITY, f64::min);
        regions.push(Region {
            center: center.clone(),
            radius_sq: r2.is_finite().then_some(r2),
        });
        if r2 > 0.0 {
            pool.retain(|e, c| if dist(e) < r2 { 0 } else { c });
        } else {
            pool.remove_one(&center);
        }
        if r2.is_finite() {
            let next = pool
                .distinct()
                .find(|e| e.y != center.y && dist(e) == r2)
                .cloned()
                .expect("the nearest opposite-label example stays in the pool");
            centers.push(next.clone());
            center = next;
        }
        if centers.len() == budget || pool.is_empty() {
            break;
        }
    }
    Ok(GemModel {
        kernel,
        budget,
        regions,
        centers,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GemScheme {
    pub anchor: LabeledExample,
    pub budget: usize,
    pub kernel: Kernel,
}

impl GemScheme {
    pub fn new(anchor: LabeledExample, budget: usize, kernel: Kernel) -> Result<Self, SchemeError> {
        if budget == 0 {
            return Err(SchemeError::Config("GEM budget d must be at least 1".into()));
        }
        kernel.validate().map_err(SchemeError::Config)?;
        Ok(Self { anchor, budget, kernel })
    }

    /// Anchor at the origin of ℝᵈⁱᵐ with label +1.
    pub fn with_default_anchor(dim: usize, budget: usize, kernel: Kernel) -> Result<Self, SchemeError> {
        Self::new(
            LabeledExample {
                x: Point(vec![0.0; dim]),
                y: super::Scalar(1.0),
            },
            budget,
            kernel,
        )
    }
}

impl Compressor for GemScheme {
    type Example = LabeledExample;

    fn compress(&self, u: &Multiset<LabeledExample>) -> Result<Multiset<LabeledExample>, SchemeError> {
        Ok(self.learn(u)?.centers.into_iter().collect())
    }
}

impl Learner for GemScheme {
    type Hypothesis = GemModel;

    fn learn(&self, u: &Multiset<LabeledExample>) -> Result<GemModel, SchemeError> {
        gem_train(u, &self.anchor, self.budget, self.kernel)
    }

    /// Only a firm wrong label counts; abstention is never a loss.
    fn loss(&self, h: &GemModel, z: &LabeledExample) -> bool {
        (z.label() - h.predict(z.x.coords())).abs() == 2.0
    }

    fn reconstruct(&self, c: &Multiset<LabeledExample>) -> Option<Result<GemModel, SchemeError>> {
        Some(self.learn(c))
    }
}
