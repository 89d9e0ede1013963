//! Scalar special functions and bracketing root finding.
//!
//! Everything here is a pure function of its arguments. Log-gamma uses the
//! Lanczos approximation (g = 7, nine coefficients); densities that feed the
//! incomplete beta function use Loader's saddle-point form so that the
//! prefactor keeps full relative accuracy for parameters in the thousands.

use std::f64::consts::PI;

use thiserror::Error;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;
const LN_2PI: f64 = 1.837_877_066_409_345_5;
const TINY: f64 = 1e-300;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NumericsError {
    #[error("domain error in {function}: {detail}")]
    Domain {
        function: &'static str,
        detail: String,
    },
    #[error("{function} did not converge within {max_iter} iterations")]
    NoConvergence {
        function: &'static str,
        max_iter: usize,
    },
}

fn domain(function: &'static str, detail: impl Into<String>) -> NumericsError {
    NumericsError::Domain {
        function,
        detail: detail.into(),
    }
}

/// Tolerances shared by the bisection solver and the continued fractions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Precision {
    /// Absolute width at which a bisection bracket is considered resolved.
    pub bisection_tol: f64,
    /// The bracket must also be narrower than this fraction of its larger end.
    pub relative_tol: f64,
    /// Relative tolerance for continued-fraction convergence.
    pub series_tol: f64,
    pub max_iter: usize,
}

impl Default for Precision {
    fn default() -> Self {
        Self {
            bisection_tol: 1e-10,
            relative_tol: 1e-13,
            series_tol: 1e-15,
            max_iter: 10_000,
        }
    }
}

impl Precision {
    pub fn new(bisection_tol: f64, series_tol: f64, max_iter: usize) -> Result<Self, NumericsError> {
        let p = Self {
            bisection_tol,
            relative_tol: Self::default().relative_tol,
            series_tol,
            max_iter,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), NumericsError> {
        if !(self.bisection_tol > 0.0) || !(self.relative_tol >= 0.0) || !(self.series_tol > 0.0) || self.max_iter == 0 {
            return Err(domain(
                "Precision",
                format!(
                    "tolerances must be positive and max_iter >= 1 (got {}, {}, {})",
                    self.bisection_tol, self.series_tol, self.max_iter
                ),
            ));
        }
        Ok(())
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of |Γ(x)|.
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // reflection
        return (PI / (PI * x).sin()).abs().ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + acc.ln()
}

/// ln C(n, k).
pub fn log_binomial(n: u64, k: u64) -> Result<f64, NumericsError> {
    if k > n {
        return Err(domain("log_binomial", format!("k = {k} exceeds n = {n}")));
    }
    if k == 0 || k == n {
        return Ok(0.0);
    }
    let (n, k) = (n as f64, k as f64);
    Ok(ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0))
}

/// Error of Stirling's approximation: ln Γ(n+1) − (n+½) ln n + n − ln √(2π).
fn stirling_error(n: f64) -> f64 {
    const S0: f64 = 1.0 / 12.0;
    const S1: f64 = 1.0 / 360.0;
    const S2: f64 = 1.0 / 1260.0;
    const S3: f64 = 1.0 / 1680.0;
    const S4: f64 = 1.0 / 1188.0;
    if n <= 15.0 {
        return ln_gamma(n + 1.0) - (n + 0.5) * n.ln() + n - LN_SQRT_2PI;
    }
    let nn = n * n;
    if n > 500.0 {
        (S0 - S1 / nn) / n
    } else if n > 80.0 {
        (S0 - (S1 - S2 / nn) / nn) / n
    } else if n > 35.0 {
        (S0 - (S1 - (S2 - S3 / nn) / nn) / nn) / n
    } else {
        (S0 - (S1 - (S2 - (S3 - S4 / nn) / nn) / nn) / nn) / n
    }
}

/// Deviance term x ln(x/m) + m − x, evaluated without cancellation near x = m.
fn deviance(x: f64, m: f64) -> f64 {
    if (x - m).abs() < 0.1 * (x + m) {
        let mut v = (x - m) / (x + m);
        let mut s = (x - m) * v;
        let mut ej = 2.0 * x * v;
        v *= v;
        for j in 1..1000 {
            ej *= v;
            let s1 = s + ej / (2 * j + 1) as f64;
            if s1 == s {
                return s1;
            }
            s = s1;
        }
        s
    } else {
        x * (x / m).ln() + m - x
    }
}

/// Binomial density C(n,x) pᵡ qⁿ⁻ˣ for real 0 ≤ x ≤ n, with q = 1 − p supplied
/// separately so callers can pass an exact complement.
pub fn binomial_density(x: f64, n: f64, p: f64, q: f64) -> f64 {
    if p == 0.0 {
        return if x == 0.0 { 1.0 } else { 0.0 };
    }
    if q == 0.0 {
        return if x == n { 1.0 } else { 0.0 };
    }
    if x < 0.0 || x > n {
        return 0.0;
    }
    if x == 0.0 {
        if n == 0.0 {
            return 1.0;
        }
        let lc = if p < 0.1 {
            -deviance(n, n * q) - n * p
        } else {
            n * q.ln()
        };
        return lc.exp();
    }
    if x == n {
        let lc = if q < 0.1 {
            -deviance(n, n * p) - n * q
        } else {
            n * p.ln()
        };
        return lc.exp();
    }
    let lc = stirling_error(n)
        - stirling_error(x)
        - stirling_error(n - x)
        - deviance(x, n * p)
        - deviance(n - x, n * q);
    let lf = LN_2PI + x.ln() + (-x / n).ln_1p();
    (lc - 0.5 * lf).exp()
}

/// xᵃ(1−x)ᵇ / (a·B(a,b)), the leading factor of the continued-fraction expansion.
fn beta_prefactor(x: f64, y: f64, a: f64, b: f64) -> f64 {
    binomial_density(a, a + b, x, y) * b / (a + b)
}

/// Modified Lentz evaluation of the incomplete-beta continued fraction.
fn beta_continued_fraction(a: f64, b: f64, x: f64, prec: &Precision) -> Result<f64, NumericsError> {
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..=prec.max_iter {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() <= prec.series_tol {
            return Ok(h);
        }
    }
    Err(NumericsError::NoConvergence {
        function: "reg_inc_beta",
        max_iter: prec.max_iter,
    })
}

/// Regularized incomplete beta function I_t(a, b).
pub fn reg_inc_beta(t: f64, a: f64, b: f64) -> Result<f64, NumericsError> {
    reg_inc_beta_with(t, a, b, &Precision::default())
}

pub fn reg_inc_beta_with(t: f64, a: f64, b: f64, prec: &Precision) -> Result<f64, NumericsError> {
    if !(0.0..=1.0).contains(&t) {
        return Err(domain("reg_inc_beta", format!("t = {t} outside [0, 1]")));
    }
    if !(a > 0.0) || !(b > 0.0) || !a.is_finite() || !b.is_finite() {
        return Err(domain(
            "reg_inc_beta",
            format!("shape parameters must be positive and finite (a = {a}, b = {b})"),
        ));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    if t == 1.0 {
        return Ok(1.0);
    }
    let s = 1.0 - t;
    let value = if t < (a + 1.0) / (a + b + 2.0) {
        beta_prefactor(t, s, a, b) * beta_continued_fraction(a, b, t, prec)?
    } else {
        1.0 - beta_prefactor(s, t, b, a) * beta_continued_fraction(b, a, s, prec)?
    };
    Ok(value.clamp(0.0, 1.0))
}

/// Which end of the final bracket a bisection reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Endpoint {
    Lower,
    Upper,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bisection {
    pub value: f64,
    pub lo: f64,
    pub hi: f64,
    pub iterations: usize,
    /// False when `max_iter` ran out before the bracket shrank to tolerance;
    /// `value` is then the bracket midpoint.
    pub converged: bool,
}

/// Bisection driven by a predicate: `move_hi(mid)` true replaces the upper end.
///
/// Stops once the bracket is within both tolerances or no float lies strictly inside it.
pub fn bisect_by<P>(mut move_hi: P, lo: f64, hi: f64, prec: &Precision, endpoint: Endpoint) -> Bisection
where
    P: FnMut(f64) -> bool,
{
    let (mut lo, mut hi) = (lo, hi);
    let mut iterations = 0;
    let open = |lo: f64, hi: f64| {
        let w = hi - lo;
        let mid = 0.5 * (lo + hi);
        (w > prec.bisection_tol || w > prec.relative_tol * lo.abs().max(hi.abs())) && lo < mid && mid < hi
    };
    while open(lo, hi) {
        if iterations == prec.max_iter {
            return Bisection {
                value: 0.5 * (lo + hi),
                lo,
                hi,
                iterations,
                converged: false,
            };
        }
        let mid = 0.5 * (lo + hi);
        if move_hi(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
        iterations += 1;
    }
    let value = match endpoint {
        Endpoint::Lower => lo,
        Endpoint::Upper => hi,
    };
    Bisection {
        value,
        lo,
        hi,
        iterations,
        converged: true,
    }
}

/// Bisection on a function negative below its crossing and positive above it.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, prec: &Precision, endpoint: Endpoint) -> Bisection
where
    F: FnMut(f64) -> f64,
{
    bisect_by(|x| f(x) > 0.0, lo, hi, prec, endpoint)
}
