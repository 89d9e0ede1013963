//! Soft-margin SVM and ε-insensitive SVR trained by SMO on the dual.
//!
//! The primal is ‖w‖² + ρ Σ ξᵢ, so the dual box is [0, ρ/2]. Among the
//! optimal biases the one of smallest magnitude is returned.

use serde::{Deserialize, Serialize};

use super::{Kernel, LabeledExample, Point};
use crate::compression::{Compressor, Learner, Multiset, SchemeError};

/// Default stopping tolerance on the maximal violating pair.
pub const SOLVER_TOL: f64 = 1e-9;
/// Slack on the margin test that decides membership of the compression.
pub const MARGIN_TOL: f64 = 1e-6;

const TAU: f64 = 1e-12;

/// min ½βᵀQβ + pᵀβ  s.t.  sᵀβ = 0, 0 ≤ β ≤ c, with Q_ab = s_a s_b K[a mod n][b mod n].
struct Dual<'a> {
    k: &'a [f64],
    n: usize,
    s: Vec<f64>,
    p: Vec<f64>,
    c: f64,
}

struct DualSolution {
    beta: Vec<f64>,
    iterations: usize,
    converged: bool,
}

impl Dual<'_> {
    fn len(&self) -> usize {
        self.s.len()
    }

    fn q(&self, a: usize, b: usize) -> f64 {
        self.s[a] * self.s[b] * self.k[(a % self.n) * self.n + b % self.n]
    }

    fn in_up(&self, t: usize, beta: &[f64]) -> bool {
        if self.s[t] > 0.0 {
            beta[t] < self.c
        } else {
            beta[t] > 0.0
        }
    }

    fn in_low(&self, t: usize, beta: &[f64]) -> bool {
        if self.s[t] > 0.0 {
            beta[t] > 0.0
        } else {
            beta[t] < self.c
        }
    }

    /// Second-order working set selection; `None` once the maximal violation is below `tol`.
    fn select(&self, beta: &[f64], grad: &[f64], tol: f64) -> Option<(usize, usize)> {
        let l = self.len();
        let mut gmax = f64::NEG_INFINITY;
        let mut i = None;
        for t in 0..l {
            if self.in_up(t, beta) && -self.s[t] * grad[t] >= gmax {
                gmax = -self.s[t] * grad[t];
                i = Some(t);
            }
        }
        let i = i?;
        let mut gmax2 = f64::NEG_INFINITY;
        let mut best = f64::INFINITY;
        let mut j = None;
        let qii = self.q(i, i);
        for t in 0..l {
            if !self.in_low(t, beta) {
                continue;
            }
            let v = self.s[t] * grad[t];
            gmax2 = gmax2.max(v);
            let b = gmax + v;
            if b > 0.0 {
                let a = qii + self.q(t, t) - 2.0 * self.s[i] * self.s[t] * self.q(i, t);
                let a = if a > 0.0 { a } else { TAU };
                let obj = -(b * b) / a;
                if obj <= best {
                    best = obj;
                    j = Some(t);
                }
            }
        }
        if gmax + gmax2 < tol {
            return None;
        }
        j.map(|j| (i, j))
    }

    fn solve(&self, tol: f64, max_iter: usize) -> DualSolution {
        let l = self.len();
        let c = self.c;
        let mut beta = vec![0.0; l];
        let mut grad = self.p.clone();
        let mut iterations = 0;
        while iterations < max_iter {
            let Some((i, j)) = self.select(&beta, &grad, tol) else {
                return DualSolution {
                    beta,
                    iterations,
                    converged: true,
                };
            };
            iterations += 1;
            let (old_i, old_j) = (beta[i], beta[j]);
            let (qii, qjj, qij) = (self.q(i, i), self.q(j, j), self.q(i, j));
            if self.s[i] != self.s[j] {
                let quad = (qii + qjj + 2.0 * qij).max(TAU);
                let delta = (-grad[i] - grad[j]) / quad;
                let diff = beta[i] - beta[j];
                beta[i] += delta;
                beta[j] += delta;
                if diff > 0.0 {
                    if beta[j] < 0.0 {
                        beta[j] = 0.0;
                        beta[i] = diff;
                    }
                } else if beta[i] < 0.0 {
                    beta[i] = 0.0;
                    beta[j] = -diff;
                }
                if diff > 0.0 {
                    if beta[i] > c {
                        beta[i] = c;
                        beta[j] = c - diff;
                    }
                } else if beta[j] > c {
                    beta[j] = c;
                    beta[i] = c + diff;
                }
            } else {
                let quad = (qii + qjj - 2.0 * qij).max(TAU);
                let delta = (grad[i] - grad[j]) / quad;
                let sum = beta[i] + beta[j];
                beta[i] -= delta;
                beta[j] += delta;
                if sum > c {
                    if beta[i] > c {
                        beta[i] = c;
                        beta[j] = sum - c;
                    }
                } else if beta[j] < 0.0 {
                    beta[j] = 0.0;
                    beta[i] = sum;
                }
                if sum > c {
                    if beta[j] > c {
                        beta[j] = c;
                        beta[i] = sum - c;
                    }
                } else if beta[i] < 0.0 {
                    beta[i] = 0.0;
                    beta[j] = sum;
                }
            }
            let (di, dj) = (beta[i] - old_i, beta[j] - old_j);
            for (t, g) in grad.iter_mut().enumerate() {
                *g += self.q(t, i) * di + self.q(t, j) * dj;
            }
        }
        DualSolution {
            beta,
            iterations,
            converged: false,
        }
    }
}

/// One hinge max(0, slope·(b − at)) with slope ±1.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Hinge {
    pub slope: f64,
    pub at: f64,
}

/// The interval of minimizers of Σ hinges over b, then its point closest to 0.
pub(crate) fn min_abs_minimizer(hinges: &[Hinge]) -> f64 {
    let mut at: Vec<f64> = hinges.iter().map(|h| h.at).collect();
    at.sort_by(f64::total_cmp);
    let falling = hinges.iter().filter(|h| h.slope < 0.0).count();
    let lo = if falling == 0 { f64::NEG_INFINITY } else { at[falling - 1] };
    let hi = at.get(falling).copied().unwrap_or(f64::INFINITY);
    0.0f64.clamp(lo, hi.max(lo))
}

fn hinge_sum(hinges: &[Hinge], b: f64) -> f64 {
    hinges.iter().map(|h| (h.slope * (b - h.at)).max(0.0)).sum()
}

/// A trained kernel expansion f(x) = Σ coefᵢ k(xᵢ, x) + b.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub kernel: Kernel,
    pub rho: f64,
    /// Tube half-width for regression; `None` for classification.
    pub tube: Option<f64>,
    /// Training inputs in multiset order, one entry per copy.
    pub inputs: Vec<Point>,
    /// Dual coefficients: αᵢ for classification, (αᵢ, αᵢ*) interleaved as two halves for regression.
    pub dual: Vec<f64>,
    /// Expansion weights per training input.
    pub coef: Vec<f64>,
    pub bias: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Largest KKT violation at the returned (β, b), plus |sᵀβ|.
    pub kkt_residual: f64,
    /// ‖w‖² + ρ Σ ξᵢ at the returned solution.
    pub objective: f64,
}

impl SvmModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.inputs
            .iter()
            .zip(&self.coef)
            .filter(|(_, c)| **c != 0.0)
            .map(|(p, c)| c * self.kernel.eval(p.coords(), x))
            .sum::<f64>()
            + self.bias
    }

    pub fn classify(&self, x: &[f64]) -> f64 {
        if self.decision(x) >= 0.0 {
            1.0
        } else {
            -1.0
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolverOptions {
    pub tol: f64,
    /// Iteration cap; `None` means max(10⁵, 100·variables).
    pub max_iter: Option<usize>,
}

impl Default for SolverOptions {
    fn default() -> Self {
        Self {
            tol: SOLVER_TOL,
            max_iter: None,
        }
    }
}

fn validate(kernel: &Kernel, rho: f64) -> Result<(), SchemeError> {
    kernel.validate().map_err(SchemeError::Config)?;
    if !(rho > 0.0 && rho.is_finite()) {
        return Err(SchemeError::Config(format!("rho must be positive, got {rho}")));
    }
    Ok(())
}

fn check_inputs(data: &[&LabeledExample]) -> Result<usize, SchemeError> {
    let dim = data.first().map_or(0, |e| e.x.dim());
    for e in data {
        if e.x.dim() != dim || !e.x.is_finite() || !e.label().is_finite() {
            return Err(SchemeError::Data(format!("malformed example {e:?}")));
        }
    }
    Ok(dim)
}

/// Trains the classifier on every copy of every example.
pub fn svm_train(
    data: &[&LabeledExample],
    kernel: Kernel,
    rho: f64,
    opts: &SolverOptions,
) -> Result<SvmModel, SchemeError> {
    validate(&kernel, rho)?;
    check_inputs(data)?;
    if let Some(e) = data.iter().find(|e| e.label() != 1.0 && e.label() != -1.0) {
        return Err(SchemeError::Data(format!("classification label must be ±1, got {}", e.label())));
    }
    let n = data.len();
    let xs: Vec<&[f64]> = data.iter().map(|e| e.x.coords()).collect();
    let k = kernel.gram(&xs);
    let y: Vec<f64> = data.iter().map(|e| e.label()).collect();
    let dual = Dual {
        k: &k,
        n,
        s: y.clone(),
        p: vec![-1.0; n],
        c: rho / 2.0,
    };
    let sol = dual.solve(opts.tol, opts.max_iter.unwrap_or((100 * n).max(100_000)));
    let coef: Vec<f64> = sol.beta.iter().zip(&y).map(|(a, y)| a * y).collect();
    let g = expansion(&k, n, &coef);
    let hinges: Vec<Hinge> = (0..n)
        .map(|i| Hinge {
            slope: -y[i],
            at: y[i] - g[i],
        })
        .collect();
    let bias = min_abs_minimizer(&hinges);
    finish(data, kernel, rho, None, &dual, sol, coef, g, &hinges, bias)
}

/// Trains the ε-insensitive regressor with tube half-width `tube`.
pub fn svr_train(
    data: &[&LabeledExample],
    kernel: Kernel,
    rho: f64,
    tube: f64,
    opts: &SolverOptions,
) -> Result<SvmModel, SchemeError> {
    validate(&kernel, rho)?;
    if !(tube > 0.0 && tube.is_finite()) {
        return Err(SchemeError::Config(format!("tube half-width t must be positive, got {tube}")));
    }
    check_inputs(data)?;
    let n = data.len();
    let xs: Vec<&[f64]> = data.iter().map(|e| e.x.coords()).collect();
    let k = kernel.gram(&xs);
    let y: Vec<f64> = data.iter().map(|e| e.label()).collect();
    let mut s = vec![1.0; n];
    s.extend(std::iter::repeat_n(-1.0, n));
    let mut p: Vec<f64> = y.iter().map(|y| tube - y).collect();
    p.extend(y.iter().map(|y| tube + y));
    let dual = Dual {
        k: &k,
        n,
        s,
        p,
        c: rho / 2.0,
    };
    let sol = dual.solve(opts.tol, opts.max_iter.unwrap_or((200 * n).max(100_000)));
    let coef: Vec<f64> = (0..n).map(|i| sol.beta[i] - sol.beta[n + i]).collect();
    let g = expansion(&k, n, &coef);
    let hinges: Vec<Hinge> = (0..n)
        .flat_map(|i| {
            [
                Hinge {
                    slope: -1.0,
                    at: y[i] - g[i] - tube,
                },
                Hinge {
                    slope: 1.0,
                    at: y[i] - g[i] + tube,
                },
            ]
        })
        .collect();
    let bias = min_abs_minimizer(&hinges);
    finish(data, kernel, rho, Some(tube), &dual, sol, coef, g, &hinges, bias)
}

fn expansion(k: &[f64], n: usize, coef: &[f64]) -> Vec<f64> {
    (0..n)
        .map(|i| (0..n).filter(|&j| coef[j] != 0.0).map(|j| coef[j] * k[i * n + j]).sum())
        .collect()
}

#[allow(clippy::too_many_arguments)]
fn finish(
    data: &[&LabeledExample],
    kernel: Kernel,
    rho: f64,
    tube: Option<f64>,
    dual: &Dual<'_>,
    sol: DualSolution,
    coef: Vec<f64>,
    g: Vec<f64>,
    hinges: &[Hinge],
    bias: f64,
) -> Result<SvmModel, SchemeError> {
    if !sol.converged {
        return Err(SchemeError::NotConverged {
            iterations: sol.iterations,
        });
    }
    let n = data.len();
    let w2: f64 = coef.iter().zip(&g).map(|(c, g)| c * g).sum();
    let objective = w2.max(0.0) + rho * hinge_sum(hinges, bias);
    let mut kkt = dual.s.iter().zip(&sol.beta).map(|(s, b)| s * b).sum::<f64>().abs();
    let grad: Vec<f64> = (0..dual.len())
        .map(|t| dual.s[t] * g[t % n] + dual.p[t])
        .collect();
    let worst = (0..dual.len())
        .map(|t| {
            let r = grad[t] + dual.s[t] * bias;
            if sol.beta[t] <= 0.0 {
                (-r).max(0.0)
            } else if sol.beta[t] >= dual.c {
                r.max(0.0)
            } else {
                r.abs()
            }
        })
        .fold(0.0, f64::max);
    kkt += worst;
    Ok(SvmModel {
        kernel,
        rho,
        tube,
        inputs: data.iter().map(|e| e.x.clone()).collect(),
        dual: sol.beta,
        coef,
        bias,
        iterations: sol.iterations,
        converged: true,
        kkt_residual: kkt,
        objective,
    })
}

/// Classification scheme: the compression is the margin set {i : 1 − yᵢ f(xᵢ) ≥ −tol}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvmScheme {
    pub kernel: Kernel,
    pub rho: f64,
    pub solver: SolverOptions,
}

impl SvmScheme {
    pub fn new(kernel: Kernel, rho: f64) -> Result<Self, SchemeError> {
        validate(&kernel, rho)?;
        Ok(Self {
            kernel,
            rho,
            solver: SolverOptions::default(),
        })
    }
}

/// Regression scheme: the compression is {i : |yᵢ − f(xᵢ)| ≥ t − tol}.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SvrScheme {
    pub kernel: Kernel,
    pub rho: f64,
    pub tube: f64,
    pub solver: SolverOptions,
}

impl SvrScheme {
    pub fn new(kernel: Kernel, rho: f64, tube: f64) -> Result<Self, SchemeError> {
        validate(&kernel, rho)?;
        if !(tube > 0.0 && tube.is_finite()) {
            return Err(SchemeError::Config(format!("tube half-width t must be positive, got {tube}")));
        }
        Ok(Self {
            kernel,
            rho,
            tube,
            solver: SolverOptions::default(),
        })
    }
}

/// Keeps each distinct example whose copies satisfy `on_margin`, with full multiplicity.
fn margin_set(u: &Multiset<LabeledExample>, on_margin: impl Fn(&LabeledExample) -> bool) -> Multiset<LabeledExample> {
    let mut out = Multiset::new();
    for (e, c) in u.iter_counts() {
        if on_margin(e) {
            out.insert_n(e.clone(), c);
        }
    }
    out
}

impl Compressor for SvmScheme {
    type Example = LabeledExample;

    fn compress(&self, u: &Multiset<LabeledExample>) -> Result<Multiset<LabeledExample>, SchemeError> {
        if u.is_empty() {
            return Ok(Multiset::new());
        }
        let m = self.learn(u)?;
        Ok(margin_set(u, |e| 1.0 - e.label() * m.decision(e.x.coords()) >= -MARGIN_TOL))
    }
}

impl Learner for SvmScheme {
    type Hypothesis = SvmModel;

    fn learn(&self, u: &Multiset<LabeledExample>) -> Result<SvmModel, SchemeError> {
        let data: Vec<&LabeledExample> = u.iter().collect();
        svm_train(&data, self.kernel, self.rho, &self.solver)
    }

    fn loss(&self, h: &SvmModel, z: &LabeledExample) -> bool {
        h.classify(z.x.coords()) != z.label()
    }

    fn reconstruct(&self, c: &Multiset<LabeledExample>) -> Option<Result<SvmModel, SchemeError>> {
        Some(self.learn(c))
    }
}

impl Compressor for SvrScheme {
    type Example = LabeledExample;

    fn compress(&self, u: &Multiset<LabeledExample>) -> Result<Multiset<LabeledExample>, SchemeError> {
        if u.is_empty() {
            return Ok(Multiset::new());
        }
        let m = self.learn(u)?;
        Ok(margin_set(u, |e| (e.label() - m.decision(e.x.coords())).abs() >= self.tube - MARGIN_TOL))
    }
}

impl Learner for SvrScheme {
    type Hypothesis = SvmModel;

    fn learn(&self, u: &Multiset<LabeledExample>) -> Result<SvmModel, SchemeError> {
        let data: Vec<&LabeledExample> = u.iter().collect();
        svr_train(&data, self.kernel, self.rho, self.tube, &self.solver)
    }

    fn loss(&self, h: &SvmModel, z: &LabeledExample) -> bool {
        (z.label() - h.decision(z.x.coords())).abs() > self.tube
    }

    fn reconstruct(&self, c: &Multiset<LabeledExample>) -> Option<Result<SvmModel, SchemeError>> {
        Some(self.learn(c))
    }
}
