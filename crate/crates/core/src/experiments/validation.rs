use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Distribution, Sample, Sampler};
use crate::compression::{
    augment, check_coherence_i, check_coherence_ii, check_idempotence, check_inclusion, check_non_associativity,
    check_preference, check_reconstruction, CheckConfig, Compressor, Learner, Property, PropertyReport,
};
use crate::schemes::{GemScheme, HullScheme, Kernel, SecondLargest, SvmScheme, SvrScheme, Trimming};

/// The reference schemes with fixed validation hyperparameters and sampling laws.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ValidationScheme {
    Hull2,
    Hull3,
    Svm,
    Svr,
    Gem,
    SecondLargest,
    Trimming,
}

impl ValidationScheme {
    pub const ALL: [ValidationScheme; 7] = [
        ValidationScheme::Hull2,
        ValidationScheme::Hull3,
        ValidationScheme::Svm,
        ValidationScheme::Svr,
        ValidationScheme::Gem,
        ValidationScheme::SecondLargest,
        ValidationScheme::Trimming,
    ];

    pub fn name(self) -> &'static str {
        match self {
            ValidationScheme::Hull2 => "hull2",
            ValidationScheme::Hull3 => "hull3",
            ValidationScheme::Svm => "svm",
            ValidationScheme::Svr => "svr",
            ValidationScheme::Gem => "gem",
            ValidationScheme::SecondLargest => "second_largest",
            ValidationScheme::Trimming => "trimming",
        }
    }

    /// Training-sample size used when none is given.
    pub fn default_sample_size(self) -> usize {
        match self {
            ValidationScheme::Hull2 => 30,
            ValidationScheme::Hull3 => 50,
            ValidationScheme::Svm | ValidationScheme::Svr | ValidationScheme::Gem => 30,
            ValidationScheme::SecondLargest => 10,
            ValidationScheme::Trimming => 6,
        }
    }

    pub fn distribution(self) -> Distribution {
        let blobs = Distribution::LabeledBlobs {
            mean_pos: vec![1.0, 1.0],
            mean_neg: vec![-1.0, -1.0],
            spread: 1.0,
        };
        match self {
            ValidationScheme::Hull2 => Distribution::UniformCube { dim: 2, lo: 0.0, hi: 1.0 },
            ValidationScheme::Hull3 => Distribution::Gaussian { dim: 3, mean: None, var: None },
            ValidationScheme::Svm | ValidationScheme::Gem => blobs,
            ValidationScheme::Svr => Distribution::NoisyLine {
                slope: 1.0,
                intercept: 0.0,
                noise: 0.3,
                x_lo: -1.0,
                x_hi: 1.0,
            },
            ValidationScheme::SecondLargest => Distribution::UniformCube { dim: 1, lo: 0.0, hi: 1.0 },
            ValidationScheme::Trimming => Distribution::PointMass { atom: 0.5 },
        }
    }

    /// What the scheme is known to satisfy; `None` when the property needs a learner the scheme lacks.
    pub fn expectation(self, p: Property, augmented: bool) -> Option<Expectation> {
        use Expectation::*;
        use Property::*;
        use ValidationScheme as V;
        if augmented && p == Inclusion {
            return Some(Holds);
        }
        Some(match (self, p) {
            (V::Trimming, Preference | Idempotence | NonAssoc) => Holds,
            (V::Trimming, _) => return None,
            (V::Hull2 | V::Hull3 | V::Svr, _) => Holds,
            (V::Svm, Coherence2) => Fails,
            (V::Svm, _) => Holds,
            (V::Gem, NonAssoc | Coherence2) => Undocumented,
            (V::Gem, _) => Holds,
            (V::SecondLargest, Coherence1) => Fails,
            (V::SecondLargest, Reconstruction) => Undocumented,
            (V::SecondLargest, _) => Holds,
        })
    }
}

impl FromStr for ValidationScheme {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Self::ALL
            .into_iter()
            .find(|v| v.name() == s)
            .ok_or_else(|| format!("unknown scheme `{s}`"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    Holds,
    Fails,
    Undocumented,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationOutcome {
    pub scheme: String,
    pub augmented: bool,
    pub expectation: Expectation,
    #[serde(flatten)]
    pub report: PropertyReport,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationOptions {
    pub check: CheckConfig,
    pub sample_size: Option<usize>,
    pub augment: bool,
}

fn compressor_report<S, E>(s: &S, g: &Sampler<E>, p: Property, cfg: &CheckConfig) -> PropertyReport
where
    S: Compressor<Example = E>,
    E: Sample,
{
    match p {
        Property::Preference => check_preference(s, g, cfg),
        Property::Idempotence => check_idempotence(s, g, cfg),
        Property::NonAssoc => check_non_associativity(s, g, cfg),
        _ => unreachable!("learner properties are dispatched separately"),
    }
}

fn learner_report<S, E>(s: &S, g: &Sampler<E>, p: Property, cfg: &CheckConfig) -> PropertyReport
where
    S: Learner<Example = E>,
    E: Sample,
{
    match p {
        Property::Inclusion => check_inclusion(s, g, cfg),
        Property::Coherence1 => check_coherence_i(s, g, cfg),
        Property::Coherence2 => check_coherence_ii(s, g, cfg),
        Property::Reconstruction => check_reconstruction(s, g, cfg),
        _ => compressor_report(s, g, p, cfg),
    }
}

fn with_learner<S, E>(s: S, scheme: ValidationScheme, props: &[Property], opts: &ValidationOptions) -> Result<Vec<PropertyReport>, String>
where
    S: Learner<Example = E>,
    E: Sample,
{
    let g = Sampler::<E>::new(scheme.distribution(), opts.sample_size.unwrap_or(scheme.default_sample_size()))?;
    Ok(if opts.augment {
        let a = augment(s);
        props.iter().map(|&p| learner_report(&a, &g, p, &opts.check)).collect()
    } else {
        props.iter().map(|&p| learner_report(&s, &g, p, &opts.check)).collect()
    })
}

/// Runs the requested property checks on one reference scheme.
pub fn validate_scheme(
    scheme: ValidationScheme,
    props: &[Property],
    opts: &ValidationOptions,
) -> Result<Vec<ValidationOutcome>, String> {
    let mut expectations = Vec::with_capacity(props.len());
    for &p in props {
        let e = scheme
            .expectation(p, opts.augment)
            .ok_or_else(|| format!("property `{}` needs a learner, which scheme `{}` lacks", p.name(), scheme.name()))?;
        expectations.push(e);
    }
    if opts.augment && scheme == ValidationScheme::Trimming {
        return Err("scheme `trimming` has no learner to augment".into());
    }
    let rbf = Kernel::Rbf { gamma: 1.0 };
    let err = |e: crate::compression::SchemeError| e.to_string();
    let reports = match scheme {
        ValidationScheme::Hull2 => with_learner(HullScheme::new(2).map_err(err)?, scheme, props, opts)?,
        ValidationScheme::Hull3 => with_learner(HullScheme::new(3).map_err(err)?, scheme, props, opts)?,
        ValidationScheme::Svm => with_learner(SvmScheme::new(rbf, 10.0).map_err(err)?, scheme, props, opts)?,
        ValidationScheme::Svr => with_learner(SvrScheme::new(rbf, 10.0, 0.1).map_err(err)?, scheme, props, opts)?,
        ValidationScheme::Gem => with_learner(GemScheme::with_default_anchor(2, 5, rbf).map_err(err)?, scheme, props, opts)?,
        ValidationScheme::SecondLargest => with_learner(SecondLargest, scheme, props, opts)?,
        ValidationScheme::Trimming => {
            let g = Sampler::new(scheme.distribution(), opts.sample_size.unwrap_or(scheme.default_sample_size()))?;
            let s = Trimming::new(0.5, 3);
            props.iter().map(|&p| compressor_report(&s, &g, p, &opts.check)).collect()
        }
    };
    Ok(reports
        .into_iter()
        .zip(expectations)
        .map(|(report, expectation)| ValidationOutcome {
            scheme: scheme.name().to_string(),
            augmented: opts.augment,
            expectation,
            report,
        })
        .collect())
}
