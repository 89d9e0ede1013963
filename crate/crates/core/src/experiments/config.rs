use serde::{Deserialize, Serialize};

use super::Distribution;
use crate::schemes::{Kernel, LabeledExample};

fn default_rho() -> f64 {
    10.0
}

/// A reference scheme with its hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum SchemeSpec {
    Hull {
        dim: usize,
    },
    Svm {
        #[serde(default)]
        kernel: Kernel,
        #[serde(default = "default_rho")]
        rho: f64,
    },
    Svr {
        #[serde(default)]
        kernel: Kernel,
        #[serde(default = "default_rho")]
        rho: f64,
        t: f64,
    },
    Gem {
        d: usize,
        #[serde(default)]
        kernel: Kernel,
        /// Defaults to the origin with label +1.
        #[serde(default)]
        anchor: Option<LabeledExample>,
    },
    SecondLargest,
    Trimming {
        atom: f64,
        cap: usize,
    },
}

impl SchemeSpec {
    pub fn name(&self) -> &'static str {
        match self {
            SchemeSpec::Hull { dim: 2 } => "hull2",
            SchemeSpec::Hull { .. } => "hull3",
            SchemeSpec::Svm { .. } => "svm",
            SchemeSpec::Svr { .. } => "svr",
            SchemeSpec::Gem { .. } => "gem",
            SchemeSpec::SecondLargest => "second_largest",
            SchemeSpec::Trimming { .. } => "trimming",
        }
    }

    pub fn has_learner(&self) -> bool {
        !matches!(self, SchemeSpec::Trimming { .. })
    }
}

/// One Monte Carlo experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub scheme: SchemeSpec,
    /// Replace the compression by its augmentation with misclassified training examples.
    #[serde(default)]
    pub augment: bool,
    pub distribution: Distribution,
    /// Training-sample size N.
    pub n: u64,
    pub delta: f64,
    pub trials: usize,
    pub n_test_risk: usize,
    pub n_test_phi: usize,
    pub seed: u64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<(), String> {
        if self.n == 0 {
            return Err("n: must be positive".into());
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(format!("delta: must lie in (0, 1), got {}", self.delta));
        }
        if self.n_test_risk == 0 {
            return Err("n_test_risk: must be positive".into());
        }
        if self.n_test_phi == 0 {
            return Err("n_test_phi: must be positive".into());
        }
        if self.augment && !self.scheme.has_learner() {
            return Err(format!("augment: scheme `{}` has no learner to augment", self.scheme.name()));
        }
        self.distribution.validate().map_err(|e| format!("distribution: {e}"))
    }
}
