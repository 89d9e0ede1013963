use serde::{Deserialize, Serialize};

/// Positive semidefinite kernels on ℝᵈ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Kernel {
    Linear,
    Rbf { gamma: f64 },
    Polynomial { degree: u32, coef: f64 },
}

impl Default for Kernel {
    fn default() -> Self {
        Kernel::Rbf { gamma: 1.0 }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

impl Kernel {
    pub fn validate(&self) -> Result<(), String> {
        match *self {
            Kernel::Rbf { gamma } if !(gamma > 0.0 && gamma.is_finite()) => Err(format!("rbf gamma must be positive, got {gamma}")),
            Kernel::Polynomial { degree: 0, .. } => Err("polynomial degree must be at least 1".into()),
            Kernel::Polynomial { coef, .. } if !(coef >= 0.0 && coef.is_finite()) => {
                Err(format!("polynomial coef must be nonnegative, got {coef}"))
            }
            _ => Ok(()),
        }
    }

    pub fn eval(&self, a: &[f64], b: &[f64]) -> f64 {
        match *self {
            Kernel::Linear => dot(a, b),
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                (-gamma * d2).exp()
            }
            Kernel::Polynomial { degree, coef } => (dot(a, b) + coef).powi(degree as i32),
        }
    }

    /// ‖φ(a) − φ(b)‖², exactly zero when a and b coincide.
    pub fn feature_dist_sq(&self, a: &[f64], b: &[f64]) -> f64 {
        if a == b {
            return 0.0;
        }
        match *self {
            Kernel::Rbf { gamma } => {
                let d2: f64 = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum();
                -2.0 * (-gamma * d2).exp_m1()
            }
            _ => (self.eval(a, a) - 2.0 * self.eval(a, b) + self.eval(b, b)).max(0.0),
        }
    }

    /// Row-major n×n Gram matrix.
    pub fn gram(&self, xs: &[&[f64]]) -> Vec<f64> {
        let n = xs.len();
        let mut g = vec![0.0; n * n];
        for i in 0..n {
            for j in i..n {
                let v = self.eval(xs[i], xs[j]);
                g[i * n + j] = v;
                g[j * n + i] = v;
            }
        }
        g
    }
}
