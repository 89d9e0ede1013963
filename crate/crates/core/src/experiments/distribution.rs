use std::marker::PhantomData;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::compression::{Generator, Multiset};
use crate::schemes::{LabeledExample, Point, Scalar};
use crate::seed::TrialRng;

/// Synthetic data laws. All but `point_mass` are absolutely continuous, so
/// their samples contain no repeated example almost surely.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Distribution {
    /// Independent coordinates N(meanᵢ, varᵢ); mean defaults to 0 and var to 1.
    Gaussian {
        dim: usize,
        #[serde(default)]
        mean: Option<Vec<f64>>,
        #[serde(default)]
        var: Option<Vec<f64>>,
    },
    UniformCube { dim: usize, lo: f64, hi: f64 },
    /// Label ±1 with equal probability, then x ~ N(mean of that label, spread²·I).
    LabeledBlobs { mean_pos: Vec<f64>, mean_neg: Vec<f64>, spread: f64 },
    /// x uniform on [x_lo, x_hi], y = slope·x + intercept + U(−noise, noise).
    NoisyLine {
        slope: f64,
        intercept: f64,
        noise: f64,
        #[serde(default = "default_x_lo")]
        x_lo: f64,
        #[serde(default = "default_x_hi")]
        x_hi: f64,
    },
    PointMass { atom: f64 },
}

fn default_x_lo() -> f64 {
    -1.0
}

fn default_x_hi() -> f64 {
    1.0
}

impl Distribution {
    pub fn validate(&self) -> Result<(), String> {
        let finite = |v: &[f64]| v.iter().all(|x| x.is_finite());
        match self {
            Distribution::Gaussian { dim, mean, var } => {
                if *dim == 0 {
                    return Err("gaussian dim must be positive".into());
                }
                if let Some(m) = mean {
                    if m.len() != *dim || !finite(m) {
                        return Err(format!("gaussian mean must have {dim} finite entries"));
                    }
                }
                if let Some(v) = var {
                    if v.len() != *dim || !v.iter().all(|x| *x > 0.0 && x.is_finite()) {
                        return Err(format!("gaussian var must have {dim} positive entries"));
                    }
                }
                Ok(())
            }
            Distribution::UniformCube { dim, lo, hi } => {
                if *dim == 0 {
                    return Err("uniform_cube dim must be positive".into());
                }
                if !(lo < hi && lo.is_finite() && hi.is_finite()) {
                    return Err(format!("uniform_cube needs finite lo < hi, got [{lo}, {hi}]"));
                }
                Ok(())
            }
            Distribution::LabeledBlobs {
                mean_pos,
                mean_neg,
                spread,
            } => {
                if mean_pos.is_empty() || mean_pos.len() != mean_neg.len() || !finite(mean_pos) || !finite(mean_neg) {
                    return Err("labeled_blobs means must be finite vectors of equal positive length".into());
                }
                if !(*spread > 0.0 && spread.is_finite()) {
                    return Err(format!("labeled_blobs spread must be positive, got {spread}"));
                }
                Ok(())
            }
            Distribution::NoisyLine {
                slope,
                intercept,
                noise,
                x_lo,
                x_hi,
            } => {
                if !finite(&[*slope, *intercept]) || !(*noise > 0.0 && noise.is_finite()) {
                    return Err("noisy_line needs finite slope/intercept and positive noise".into());
                }
                if !(x_lo < x_hi && x_lo.is_finite() && x_hi.is_finite()) {
                    return Err(format!("noisy_line needs finite x_lo < x_hi, got [{x_lo}, {x_hi}]"));
                }
                Ok(())
            }
            Distribution::PointMass { atom } => {
                if atom.is_finite() {
                    Ok(())
                } else {
                    Err("point_mass atom must be finite".into())
                }
            }
        }
    }

    /// Dimension of the input space.
    pub fn dim(&self) -> usize {
        match self {
            Distribution::Gaussian { dim, .. } | Distribution::UniformCube { dim, .. } => *dim,
            Distribution::LabeledBlobs { mean_pos, .. } => mean_pos.len(),
            Distribution::NoisyLine { .. } | Distribution::PointMass { .. } => 1,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Distribution::Gaussian { .. } => "gaussian",
            Distribution::UniformCube { .. } => "uniform_cube",
            Distribution::LabeledBlobs { .. } => "labeled_blobs",
            Distribution::NoisyLine { .. } => "noisy_line",
            Distribution::PointMass { .. } => "point_mass",
        }
    }

    fn coords(&self, rng: &mut TrialRng) -> Vec<f64> {
        match self {
            Distribution::Gaussian { dim, mean, var } => (0..*dim)
                .map(|i| {
                    let z: f64 = rng.sample(StandardNormal);
                    let m = mean.as_ref().map_or(0.0, |m| m[i]);
                    let v = var.as_ref().map_or(1.0, |v| v[i]);
                    m + v.sqrt() * z
                })
                .collect(),
            Distribution::UniformCube { dim, lo, hi } => (0..*dim).map(|_| rng.random_range(*lo..*hi)).collect(),
            Distribution::PointMass { atom } => vec![*atom],
            _ => unreachable!("labeled laws are sampled as labeled examples"),
        }
    }
}

/// Example types that can be drawn from a [`Distribution`].
pub trait Sample: Ord + Sized {
    fn supports(d: &Distribution) -> bool;
    fn draw(d: &Distribution, rng: &mut TrialRng) -> Self;
}

impl Sample for Point {
    fn supports(d: &Distribution) -> bool {
        matches!(d, Distribution::Gaussian { .. } | Distribution::UniformCube { .. })
    }

    fn draw(d: &Distribution, rng: &mut TrialRng) -> Self {
        Point(d.coords(rng))
    }
}

impl Sample for Scalar {
    fn supports(d: &Distribution) -> bool {
        match d {
            Distribution::Gaussian { dim, .. } | Distribution::UniformCube { dim, .. } => *dim == 1,
            Distribution::PointMass { .. } => true,
            _ => false,
        }
    }

    fn draw(d: &Distribution, rng: &mut TrialRng) -> Self {
        Scalar(d.coords(rng)[0])
    }
}

impl Sample for LabeledExample {
    fn supports(d: &Distribution) -> bool {
        matches!(d, Distribution::LabeledBlobs { .. } | Distribution::NoisyLine { .. })
    }

    fn draw(d: &Distribution, rng: &mut TrialRng) -> Self {
        match d {
            Distribution::LabeledBlobs {
                mean_pos,
                mean_neg,
                spread,
            } => {
                let positive = rng.random_bool(0.5);
                let mean = if positive { mean_pos } else { mean_neg };
                let x = mean
                    .iter()
                    .map(|m| {
                        let z: f64 = rng.sample(StandardNormal);
                        m + spread * z
                    })
                    .collect::<Vec<_>>();
                LabeledExample::new(x, if positive { 1.0 } else { -1.0 })
            }
            Distribution::NoisyLine {
                slope,
                intercept,
                noise,
                x_lo,
                x_hi,
            } => {
                let x = rng.random_range(*x_lo..*x_hi);
                let e = rng.random_range(-*noise..*noise);
                LabeledExample::new(vec![x], slope * x + intercept + e)
            }
            _ => unreachable!("checked by supports"),
        }
    }
}

/// Draws i.i.d. samples of a fixed size from a distribution.
#[derive(Debug, Clone)]
pub struct Sampler<E> {
    dist: Distribution,
    size: usize,
    _example: PhantomData<fn() -> E>,
}

impl<E: Sample> Sampler<E> {
    pub fn new(dist: Distribution, size: usize) -> Result<Self, String> {
        dist.validate()?;
        if !E::supports(&dist) {
            return Err(format!(
                "distribution `{}` does not produce {}",
                dist.kind(),
                std::any::type_name::<E>().rsplit("::").next().unwrap_or("examples")
            ));
        }
        Ok(Self {
            dist,
            size,
            _example: PhantomData,
        })
    }

    pub fn distribution(&self) -> &Distribution {
        &self.dist
    }

    pub fn size(&self) -> usize {
        self.size
    }
}

impl<E: Sample> Generator<E> for Sampler<E> {
    fn multiset(&self, rng: &mut TrialRng) -> Multiset<E> {
        (0..self.size).map(|_| E::draw(&self.dist, rng)).collect()
    }

    fn example(&self, rng: &mut TrialRng) -> E {
        E::draw(&self.dist, rng)
    }
}
