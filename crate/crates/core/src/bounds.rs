//! Risk bounds as functions of the compressed-set cardinality.
//!
//! For a sample of size `N` and confidence parameter `delta`, `eps_upper`
//! returns the one-sided bound ε_k and `eps_interval` the two-sided pair
//! (ε̲_k, ε̄_k). Both are found by bisection on incomplete-beta reformulations
//! of the defining equations `psi(α) = 1` and `psi_tilde(α) = 1`; the direct
//! log-domain series in [`psi`] and [`psi_tilde`] re-check every root.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::exec::Execution;
use crate::format::sig_digits;
use crate::numerics::{
    binomial_density, bisect_by, log_binomial, reg_inc_beta_with, Endpoint, NumericsError, Precision,
};

/// Largest admissible |ψ(root) − 1| after bisection.
pub const RESIDUAL_GUARD: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum BoundsError {
    #[error("invalid bound query: {0}")]
    InvalidQuery(String),
    #[error("{function} is undefined for {detail}")]
    Domain { function: &'static str, detail: String },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
    #[error("{which} root for N={n}, k={k}, delta={delta} fails re-evaluation: |psi - 1| = {residual:e}")]
    ResidualGuard {
        which: &'static str,
        n: u64,
        k: u64,
        delta: f64,
        residual: f64,
    },
    #[error("bisection for {which} did not converge")]
    Bisection { which: &'static str },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundQuery {
    n: u64,
    k: u64,
    delta: f64,
}

impl BoundQuery {
    pub fn new(n: u64, k: u64, delta: f64) -> Result<Self, BoundsError> {
        if n == 0 {
            return Err(BoundsError::InvalidQuery("N must be positive".into()));
        }
        if k > n {
            return Err(BoundsError::InvalidQuery(format!("k = {k} exceeds N = {n}")));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(BoundsError::InvalidQuery(format!("delta = {delta} outside (0, 1)")));
        }
        Ok(Self { n, k, delta })
    }

    pub fn n(&self) -> u64 {
        self.n
    }

    pub fn k(&self) -> u64 {
        self.k
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn ratio(&self) -> f64 {
        self.k as f64 / self.n as f64
    }
}

/// Neumaier-compensated sum of exp(terms) relative to the largest term; returns ln of the sum.
fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for &t in terms {
        let v = (t - max).exp();
        let s = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - s) + v;
        } else {
            comp += (v - s) + sum;
        }
        sum = s;
    }
    max + (sum + comp).ln()
}

/// ln of each term C(m,k)/C(N,k)·(1−α)^(e(m)) over a range of m.
fn series_terms(
    q: &BoundQuery,
    ms: impl Iterator<Item = u64>,
    ln_one_minus_alpha: f64,
    exponent: impl Fn(u64) -> f64,
) -> Result<Vec<f64>, BoundsError> {
    let ln_norm = log_binomial(q.n, q.k)?;
    ms.map(|m| Ok(log_binomial(m, q.k)? - ln_norm + exponent(m) * ln_one_minus_alpha))
        .collect()
}

/// ψ_{k,δ}(α) = (δ/N) Σ_{m=k}^{N−1} C(m,k)/C(N,k) (1−α)^−(N−m), for k < N and 0 ≤ α < 1.
pub fn psi(q: &BoundQuery, alpha: f64) -> Result<f64, BoundsError> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(BoundsError::Domain {
            function: "psi",
            detail: format!("alpha = {alpha} outside [0, 1)"),
        });
    }
    psi_at_complement(q, 1.0 - alpha)
}

/// ψ_{k,δ} evaluated at α = 1 − s, keeping full relative precision when α is close to 1.
pub fn psi_at_complement(q: &BoundQuery, s: f64) -> Result<f64, BoundsError> {
    if q.k == q.n {
        return Err(BoundsError::Domain {
            function: "psi",
            detail: "k = N".into(),
        });
    }
    if !(s > 0.0 && s <= 1.0) {
        return Err(BoundsError::Domain {
            function: "psi",
            detail: format!("1 - alpha = {s} outside (0, 1]"),
        });
    }
    let n = q.n;
    let terms = series_terms(q, q.k..n, s.ln(), |m| -((n - m) as f64))?;
    Ok(q.delta / n as f64 * log_sum_exp(&terms).exp())
}

/// ψ̃_{k,δ}(α) for α < 1: the two-sum form for k < N and the single tail sum for k = N.
pub fn psi_tilde(q: &BoundQuery, alpha: f64) -> Result<f64, BoundsError> {
    if !(alpha < 1.0) {
        return Err(BoundsError::Domain {
            function: "psi_tilde",
            detail: format!("alpha = {alpha} not below 1"),
        });
    }
    psi_tilde_at_complement(q, 1.0 - alpha)
}

/// ψ̃_{k,δ} evaluated at α = 1 − s.
pub fn psi_tilde_at_complement(q: &BoundQuery, s: f64) -> Result<f64, BoundsError> {
    if !(s > 0.0 && s.is_finite()) {
        return Err(BoundsError::Domain {
            function: "psi_tilde",
            detail: format!("1 - alpha = {s} not positive"),
        });
    }
    let n = q.n;
    let nf = n as f64;
    let ln_s = s.ln();
    let tail = series_terms(q, (n + 1)..=(4 * n), ln_s, |m| (m - n) as f64)?;
    let tail = (q.delta / (6.0 * nf)) * log_sum_exp(&tail).exp();
    if q.k == n {
        return Ok(tail);
    }
    let head = series_terms(q, q.k..n, ln_s, |m| -((n - m) as f64))?;
    let head = (q.delta / (2.0 * nf)) * log_sum_exp(&head).exp();
    Ok(head + tail)
}

/// I_t(a, b) extended to the degenerate shapes a = 0 (point mass at 0) and b = 0 (point mass at 1).
fn inc_beta(t: f64, a: u64, b: u64, prec: &Precision) -> Result<f64, BoundsError> {
    if a == 0 {
        return Ok(1.0);
    }
    if b == 0 {
        return Ok(if t >= 1.0 { 1.0 } else { 0.0 });
    }
    Ok(reg_inc_beta_with(t, a as f64, b as f64, prec)?)
}

/// α·N·C(N,k) αᵏ (1−α)^(N−k) with s = 1 − α; equal to α·N·(I_α(k, N−k+1) − I_α(k+1, N−k)).
fn scaled_binomial_term(q: &BoundQuery, s: f64) -> f64 {
    let n = q.n as f64;
    let t = 1.0 - s;
    t * n * binomial_density(q.k as f64, n, t, s)
}

/// Both sides of the incomplete-beta form of ψ(α) = 1 at α = 1 − s:
/// left = δ·I_α(k+1, N−k), right = α·N·C(N,k) αᵏ(1−α)^(N−k). Their ratio is ψ(α).
pub fn upper_equation_sides(q: &BoundQuery, s: f64, prec: &Precision) -> Result<(f64, f64), BoundsError> {
    let left = q.delta * inc_beta(1.0 - s, q.k + 1, q.n - q.k, prec)?;
    Ok((left, scaled_binomial_term(q, s)))
}

/// Both sides of the incomplete-beta form of ψ̃(α) = 1 at α = 1 − s, with the first
/// coefficient δ/3 (the lower-root form) or δ/2 − δ/6 (the upper-root form).
pub fn interval_equation_sides(
    q: &BoundQuery,
    s: f64,
    first_coefficient: f64,
    prec: &Precision,
) -> Result<(f64, f64), BoundsError> {
    let (n, k, d) = (q.n, q.k, q.delta);
    let t = 1.0 - s;
    let left = first_coefficient * inc_beta(t, k + 1, n - k, prec)? + d / 6.0 * inc_beta(t, k + 1, 4 * n + 1 - k, prec)?;
    let right = (1.0 + d / (6.0 * n as f64)) * scaled_binomial_term(q, s);
    Ok((left, right))
}

/// A root α together with 1 − α, which stays accurate when α rounds to 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Root {
    pub value: f64,
    pub complement: f64,
}

impl Root {
    fn from_complement(s: f64) -> Self {
        Self {
            value: 1.0 - s,
            complement: s,
        }
    }

    const ONE: Root = Root {
        value: 1.0,
        complement: 0.0,
    };
}

fn guard(which: &'static str, q: &BoundQuery, value: f64) -> Result<(), BoundsError> {
    let residual = (value - 1.0).abs();
    if residual <= RESIDUAL_GUARD {
        Ok(())
    } else {
        Err(BoundsError::ResidualGuard {
            which,
            n: q.n,
            k: q.k,
            delta: q.delta,
            residual,
        })
    }
}

/// Bisection over s = 1 − α whose predicate may fail; the first error aborts the search.
fn solve<P>(which: &'static str, mut pred: P, lo: f64, hi: f64, prec: &Precision, endpoint: Endpoint) -> Result<f64, BoundsError>
where
    P: FnMut(f64) -> Result<bool, BoundsError>,
{
    let mut failure = None;
    let outcome = bisect_by(
        |s| match pred(s) {
            Ok(v) => v,
            Err(e) => {
                failure.get_or_insert(e);
                false
            }
        },
        lo,
        hi,
        prec,
        endpoint,
    );
    if let Some(e) = failure {
        return Err(e);
    }
    if !outcome.converged {
        return Err(BoundsError::Bisection { which });
    }
    Ok(outcome.value)
}

/// ε_k: the unique root of ψ_{k,δ}(α) = 1 in (0, 1), or 1 when k = N.
pub fn eps_upper(q: &BoundQuery) -> Result<f64, BoundsError> {
    Ok(eps_upper_root(q, &Precision::default())?.value)
}

/// ε_k with its complement. The bracket shrinks from [0, 1] and the upper end in α is
/// returned, so ψ(ε_k) ≤ 1 up to rounding.
pub fn eps_upper_root(q: &BoundQuery, prec: &Precision) -> Result<Root, BoundsError> {
    if q.k == q.n {
        return Ok(Root::ONE);
    }
    let s = solve(
        "eps",
        |s| {
            let (left, right) = upper_equation_sides(q, s, prec)?;
            Ok(!(left > right))
        },
        0.0,
        1.0,
        prec,
        Endpoint::Lower,
    )?;
    guard("eps", q, psi_at_complement(q, s)?)?;
    Ok(Root::from_complement(s))
}

/// (ε̲_k, ε̄_k): the roots of ψ̃_{k,δ}(α) = 1 either side of k/N, the lower one clamped at 0.
pub fn eps_interval(q: &BoundQuery) -> Result<(f64, f64), BoundsError> {
    let (lo, up) = eps_interval_roots(q, &Precision::default())?;
    Ok((lo.value, up.value))
}

/// Both interval roots with complements. The lower root is the lower bracket end in α
/// searched over [0, k/N]; the upper root is the upper end searched over [k/N, 1].
pub fn eps_interval_roots(q: &BoundQuery, prec: &Precision) -> Result<(Root, Root), BoundsError> {
    let d = q.delta;
    let s_ratio = (q.n - q.k) as f64 / q.n as f64;
    let s_low = solve(
        "eps_low",
        |s| {
            let (left, right) = interval_equation_sides(q, s, d / 3.0, prec)?;
            Ok(left > right)
        },
        s_ratio,
        1.0,
        prec,
        Endpoint::Upper,
    )?;
    let low = Root::from_complement(s_low);
    if low.value > 0.0 {
        guard("eps_low", q, psi_tilde_at_complement(q, s_low)?)?;
    }
    if q.k == q.n {
        return Ok((low, Root::ONE));
    }
    let s_up = solve(
        "eps_up",
        |s| {
            let (left, right) = interval_equation_sides(q, s, d / 2.0 - d / 6.0, prec)?;
            Ok(!(left > right))
        },
        0.0,
        s_ratio,
        prec,
        Endpoint::Lower,
    )?;
    guard("eps_up", q, psi_tilde_at_complement(q, s_up)?)?;
    Ok((low, Root::from_complement(s_up)))
}

/// Explicit envelope k/N ∓ 2√(k+1)/N·(ln(1/δ) + ln(k+1) + 4), unclamped.
pub fn asymptotic_envelope(q: &BoundQuery) -> (f64, f64) {
    let k1 = (q.k + 1) as f64;
    let s = 2.0 * k1.sqrt() / q.n as f64 * ((1.0 / q.delta).ln() + k1.ln() + 4.0);
    (q.ratio() - s, q.ratio() + s)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundRow {
    pub k: u64,
    pub eps: f64,
    pub eps_low: f64,
    pub eps_up: f64,
    pub asym_low: f64,
    pub asym_high: f64,
}

impl BoundRow {
    pub fn compute(q: &BoundQuery, prec: &Precision) -> Result<Self, BoundsError> {
        let eps = eps_upper_root(q, prec)?.value;
        let (eps_low, eps_up) = eps_interval_roots(q, prec)?;
        let (eps_low, eps_up) = (eps_low.value, eps_up.value);
        let (asym_low, asym_high) = asymptotic_envelope(q);
        Ok(Self {
            k: q.k,
            eps,
            eps_low,
            eps_up,
            asym_low,
            asym_high,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundTable {
    pub n: u64,
    pub delta: f64,
    pub rows: Vec<BoundRow>,
}

pub const TABLE_CSV_HEADER: &str = "N,delta,k,eps,eps_low,eps_up,asym_low,asym_high";

impl BoundTable {
    /// Rows for every k in 0..=N; rows are independent and may be computed in parallel.
    pub fn compute(n: u64, delta: f64, prec: &Precision, exec: Execution) -> Result<Self, BoundsError> {
        BoundQuery::new(n, 0, delta)?;
        prec.validate()?;
        let rows = exec
            .map(n as usize + 1, |k| {
                let q = BoundQuery::new(n, k as u64, delta)?;
                BoundRow::compute(&q, prec)
            })
            .into_iter()
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Self { n, delta, rows })
    }

    pub fn row(&self, k: u64) -> Option<&BoundRow> {
        self.rows.get(k as usize).filter(|r| r.k == k)
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{TABLE_CSV_HEADER}")?;
        let delta = sig_digits(self.delta, 12);
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                self.n,
                delta,
                r.k,
                sig_digits(r.eps, 12),
                sig_digits(r.eps_low, 12),
                sig_digits(r.eps_up, 12),
                sig_digits(r.asym_low, 12),
                sig_digits(r.asym_high, 12),
            )?;
        }
        Ok(())
    }
}

/// Convenience wrapper with default precision.
pub fn bound_table(n: u64, delta: f64) -> Result<BoundTable, BoundsError> {
    BoundTable::compute(n, delta, &Precision::default(), Execution::default())
}
