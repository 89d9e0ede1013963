#![allow(dead_code)]

use compress_cert::schemes::{Kernel, LabeledExample};
use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};

pub fn rat(x: f64) -> BigRational {
    BigRational::from_float(x).expect("finite")
}

pub fn binom(n: u64, k: u64) -> BigInt {
    let mut c = BigInt::one();
    for i in 0..k {
        c = c * BigInt::from(n - i) / BigInt::from(i + 1);
    }
    c
}

fn powi(x: &BigRational, e: i64) -> BigRational {
    let mut r = BigRational::one();
    let base = if e >= 0 { x.clone() } else { x.recip() };
    for _ in 0..e.unsigned_abs() {
        r *= &base;
    }
    r
}

/// ψ_{k,δ}(α) summed term by term in exact rational arithmetic.
pub fn psi_exact(n: u64, k: u64, delta: f64, alpha: f64) -> BigRational {
    let one_minus = BigRational::one() - rat(alpha);
    let norm = BigRational::from_integer(binom(n, k));
    let mut sum = BigRational::zero();
    for m in k..n {
        sum += BigRational::from_integer(binom(m, k)) / &norm * powi(&one_minus, -((n - m) as i64));
    }
    rat(delta) / BigRational::from_integer(BigInt::from(n)) * sum
}

/// ψ̃_{k,δ}(α) summed term by term in exact rational arithmetic.
pub fn psi_tilde_exact(n: u64, k: u64, delta: f64, alpha: f64) -> BigRational {
    let one_minus = BigRational::one() - rat(alpha);
    let norm = BigRational::from_integer(binom(n, k));
    let nn = BigRational::from_integer(BigInt::from(n));
    let d = rat(delta);
    let mut tail = BigRational::zero();
    for m in (n + 1)..=(4 * n) {
        tail += BigRational::from_integer(binom(m, k)) / &norm * powi(&one_minus, (m - n) as i64);
    }
    let tail = &d / (BigRational::from_integer(BigInt::from(6)) * &nn) * tail;
    if k == n {
        return tail;
    }
    let mut head = BigRational::zero();
    for m in k..n {
        head += BigRational::from_integer(binom(m, k)) / &norm * powi(&one_minus, -((n - m) as i64));
    }
    d / (BigRational::from_integer(BigInt::from(2)) * nn) * head + tail
}

pub fn to_f64(x: &BigRational) -> f64 {
    x.to_f64().expect("representable")
}

pub fn rel_err(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Dense dual of a kernel machine: min ½βᵀQβ + pᵀβ, sᵀβ = 0, 0 ≤ β ≤ c.
pub struct DenseDual {
    pub q: Vec<f64>,
    pub p: Vec<f64>,
    pub s: Vec<f64>,
    pub c: f64,
}

impl DenseDual {
    fn len(&self) -> usize {
        self.p.len()
    }

    fn qv(&self, v: &[f64]) -> Vec<f64> {
        let l = self.len();
        (0..l).map(|i| (0..l).map(|j| self.q[i * l + j] * v[j]).sum()).collect()
    }

    fn objective(&self, b: &[f64]) -> f64 {
        let qb = self.qv(b);
        0.5 * b.iter().zip(&qb).map(|(x, y)| x * y).sum::<f64>() + b.iter().zip(&self.p).map(|(x, y)| x * y).sum::<f64>()
    }

    /// Euclidean projection onto the box intersected with the hyperplane, by bisection on the multiplier.
    fn project(&self, v: &[f64]) -> Vec<f64> {
        let clip = |lam: f64| -> Vec<f64> { v.iter().zip(&self.s).map(|(x, s)| (x - lam * s).clamp(0.0, self.c)).collect() };
        let g = |lam: f64| clip(lam).iter().zip(&self.s).map(|(b, s)| b * s).sum::<f64>();
        let span = v.iter().fold(0.0f64, |m, x| m.max(x.abs())) + self.c + 1.0;
        let (mut lo, mut hi) = (-span, span);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if g(mid) > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        clip(0.5 * (lo + hi))
    }

    fn lipschitz(&self) -> f64 {
        let l = self.len();
        let mut v = vec![1.0; l];
        let mut lam = 0.0;
        for _ in 0..200 {
            let w = self.qv(&v);
            let n = w.iter().map(|x| x * x).sum::<f64>().sqrt();
            if n == 0.0 {
                return 1.0;
            }
            lam = n / v.iter().map(|x| x * x).sum::<f64>().sqrt();
            v = w.into_iter().map(|x| x / n).collect();
        }
        lam * 1.05 + 1e-12
    }

    /// Accelerated projected gradient with function-value restarts.
    pub fn solve(&self, iters: usize) -> Vec<f64> {
        let l = self.len();
        let step = 1.0 / self.lipschitz();
        let mut x = vec![0.0; l];
        let mut y = x.clone();
        let mut t = 1.0f64;
        let mut fx = self.objective(&x);
        for _ in 0..iters {
            let gy: Vec<f64> = self.qv(&y).iter().zip(&self.p).map(|(a, b)| a + b).collect();
            let z: Vec<f64> = y.iter().zip(&gy).map(|(a, g)| a - step * g).collect();
            let xn = self.project(&z);
            let fxn = self.objective(&xn);
            if fxn > fx {
                t = 1.0;
                y = x.clone();
                continue;
            }
            let tn = 0.5 * (1.0 + (1.0 + 4.0 * t * t).sqrt());
            y = xn.iter().zip(&x).map(|(a, b)| a + (t - 1.0) / tn * (a - b)).collect();
            x = xn;
            t = tn;
            fx = fxn;
        }
        x
    }
}

/// Minimum over b of Σ max(0, slope·(b − at)), scanning every breakpoint.
pub fn min_hinge_sum(hinges: &[(f64, f64)]) -> f64 {
    let total = |b: f64| hinges.iter().map(|(s, a)| (s * (b - a)).max(0.0)).sum::<f64>();
    hinges.iter().map(|&(_, a)| total(a)).fold(f64::INFINITY, f64::min).min(total(0.0))
}

fn gram(data: &[LabeledExample], kernel: Kernel) -> Vec<f64> {
    let xs: Vec<&[f64]> = data.iter().map(|e| e.x.coords()).collect();
    kernel.gram(&xs)
}

/// Reference optimum of ‖w‖² + ρ Σ hinge for classification.
pub fn svm_reference_objective(data: &[LabeledExample], kernel: Kernel, rho: f64, iters: usize) -> f64 {
    let n = data.len();
    let k = gram(data, kernel);
    let y: Vec<f64> = data.iter().map(|e| e.label()).collect();
    let q = (0..n * n).map(|ij| y[ij / n] * y[ij % n] * k[ij]).collect();
    let dual = DenseDual {
        q,
        p: vec![-1.0; n],
        s: y.clone(),
        c: rho / 2.0,
    };
    let beta = dual.solve(iters);
    let coef: Vec<f64> = beta.iter().zip(&y).map(|(a, y)| a * y).collect();
    let g: Vec<f64> = (0..n).map(|i| (0..n).map(|j| coef[j] * k[i * n + j]).sum()).collect();
    let w2: f64 = coef.iter().zip(&g).map(|(c, g)| c * g).sum();
    let hinges: Vec<(f64, f64)> = (0..n).map(|i| (-y[i], y[i] - g[i])).collect();
    w2 + rho * min_hinge_sum(&hinges)
}

/// Reference optimum of ‖w‖² + ρ Σ (|y − f| − t)₊ for regression.
pub fn svr_reference_objective(data: &[LabeledExample], kernel: Kernel, rho: f64, tube: f64, iters: usize) -> f64 {
    let n = data.len();
    let k = gram(data, kernel);
    let y: Vec<f64> = data.iter().map(|e| e.label()).collect();
    let l = 2 * n;
    let s: Vec<f64> = (0..l).map(|a| if a < n { 1.0 } else { -1.0 }).collect();
    let q = (0..l * l).map(|ab| s[ab / l] * s[ab % l] * k[(ab / l % n) * n + ab % l % n]).collect();
    let p = (0..l).map(|a| if a < n { tube - y[a] } else { tube + y[a - n] }).collect();
    let dual = DenseDual { q, p, s, c: rho / 2.0 };
    let beta = dual.solve(iters);
    let coef: Vec<f64> = (0..n).map(|i| beta[i] - beta[n + i]).collect();
    let g: Vec<f64> = (0..n).map(|i| (0..n).map(|j| coef[j] * k[i * n + j]).sum()).collect();
    let w2: f64 = coef.iter().zip(&g).map(|(c, g)| c * g).sum();
    let hinges: Vec<(f64, f64)> = (0..n).flat_map(|i| [(-1.0, y[i] - g[i] - tube), (1.0, y[i] - g[i] + tube)]).collect();
    w2 + rho * min_hinge_sum(&hinges)
}

/// Vertex indices of a 3-D point set by enumerating every candidate facet plane.
pub fn brute_force_hull3(pts: &[Vec<f64>], tol: f64) -> Vec<usize> {
    let n = pts.len();
    let sub = |a: &[f64], b: &[f64]| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let mut is_vertex = vec![false; n];
    for i in 0..n {
        for j in (i + 1)..n {
            for l in (j + 1)..n {
                let (u, v) = (sub(&pts[j], &pts[i]), sub(&pts[l], &pts[i]));
                let nrm = [u[1] * v[2] - u[2] * v[1], u[2] * v[0] - u[0] * v[2], u[0] * v[1] - u[1] * v[0]];
                let len = (nrm[0] * nrm[0] + nrm[1] * nrm[1] + nrm[2] * nrm[2]).sqrt();
                if len < 1e-12 {
                    continue;
                }
                let side = |p: &[f64]| {
                    let d = sub(p, &pts[i]);
                    (nrm[0] * d[0] + nrm[1] * d[1] + nrm[2] * d[2]) / len
                };
                let (mut above, mut below) = (false, false);
                for p in pts {
                    let d = side(p);
                    above |= d > tol;
                    below |= d < -tol;
                    if above && below {
                        break;
                    }
                }
                if !(above && below) {
                    is_vertex[i] = true;
                    is_vertex[j] = true;
                    is_vertex[l] = true;
                }
            }
        }
    }
    (0..n).filter(|&i| is_vertex[i]).collect()
}
