use std::collections::HashMap;
use std::io::{self, Write};
use std::sync::{Arc, Mutex, OnceLock};

use thiserror::Error;

use super::{Distribution, ExperimentConfig, Sample, Sampler, SchemeSpec};
use crate::bounds::{BoundTable, BoundsError};
use crate::compression::{augment, changes_compression, checked_compress, Compressor, Generator, Learner, Multiset, SchemeError};
use crate::exec::Execution;
use crate::format::sig_digits;
use crate::numerics::Precision;
use crate::schemes::{GemScheme, HullScheme, SecondLargest, SvmScheme, SvrScheme, Trimming};
use crate::seed::{derive_seed, trial_rng, Stream, TrialRng};

#[derive(Debug, Error)]
pub enum ExperimentError {
    #[error("invalid experiment configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Bounds(#[from] BoundsError),
    #[error(transparent)]
    Scheme(#[from] SchemeError),
}

/// Fraction of `n_test` fresh draws on which the hypothesis learned from `u` is inappropriate.
pub fn estimate_risk<S, G>(s: &S, u: &Multiset<S::Example>, g: &G, n_test: usize, rng: &mut TrialRng) -> Result<f64, SchemeError>
where
    S: Learner,
    G: Generator<S::Example>,
{
    let h = s.learn(u)?;
    Ok(risk_of(s, &h, g, n_test, rng))
}

fn risk_of<S: Learner, G: Generator<S::Example>>(s: &S, h: &S::Hypothesis, g: &G, n_test: usize, rng: &mut TrialRng) -> f64 {
    let hits = (0..n_test).filter(|_| s.loss(h, &g.example(rng))).count();
    hits as f64 / n_test as f64
}

/// Fraction of `n_test` fresh draws z with c(c(U) ∪ {z}) ≠ c(U).
pub fn estimate_phi<S, G>(s: &S, u: &Multiset<S::Example>, g: &G, n_test: usize, rng: &mut TrialRng) -> Result<f64, SchemeError>
where
    S: Compressor,
    G: Generator<S::Example>,
{
    let c = checked_compress(s, u)?;
    phi_of(s, &c, g, n_test, rng)
}

fn phi_of<S: Compressor, G: Generator<S::Example>>(
    s: &S,
    c: &Multiset<S::Example>,
    g: &G,
    n_test: usize,
    rng: &mut TrialRng,
) -> Result<f64, SchemeError> {
    let mut hits = 0usize;
    for _ in 0..n_test {
        if changes_compression(s, c, &g.example(rng))? {
            hits += 1;
        }
    }
    Ok(hits as f64 / n_test as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrialStats {
    pub k: u64,
    pub risk_hat: f64,
    pub phi_hat: f64,
    pub eps: f64,
    pub eps_low: f64,
    pub eps_up: f64,
    pub inside: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialResult {
    pub trial: usize,
    pub seed: u64,
    /// Scheme failures are kept per trial and excluded from coverage.
    pub outcome: Result<TrialStats, String>,
}

/// Three binomial standard errors of a frequency estimated from `n` draws.
pub fn containment_slack(risk_hat: f64, n: usize) -> f64 {
    3.0 * (risk_hat * (1.0 - risk_hat) / n as f64).sqrt()
}

/// Per-trial (k, risk, φ) for one scheme and sampler.
trait TrialKernel: Sync {
    fn run(&self, seed: u64, cfg: &ExperimentConfig) -> Result<(u64, f64, f64), SchemeError>;
}

struct WithLearner<S, G>(S, G);
struct CompressOnly<S, G>(S, G);

impl<S, G> TrialKernel for WithLearner<S, G>
where
    S: Learner,
    G: Generator<S::Example>,
{
    fn run(&self, seed: u64, cfg: &ExperimentConfig) -> Result<(u64, f64, f64), SchemeError> {
        let WithLearner(s, g) = self;
        let u = g.multiset(&mut trial_rng(seed, Stream::Training));
        let c = checked_compress(s, &u)?;
        let h = s.learn(&u)?;
        let risk = risk_of(s, &h, g, cfg.n_test_risk, &mut trial_rng(seed, Stream::Risk));
        let phi = phi_of(s, &c, g, cfg.n_test_phi, &mut trial_rng(seed, Stream::Phi))?;
        Ok((c.len() as u64, risk, phi))
    }
}

/// Without a learner the risk is taken to be the probability of change of compression.
impl<S, G> TrialKernel for CompressOnly<S, G>
where
    S: Compressor,
    G: Generator<S::Example>,
{
    fn run(&self, seed: u64, cfg: &ExperimentConfig) -> Result<(u64, f64, f64), SchemeError> {
        let CompressOnly(s, g) = self;
        let u = g.multiset(&mut trial_rng(seed, Stream::Training));
        let c = checked_compress(s, &u)?;
        let phi = phi_of(s, &c, g, cfg.n_test_phi, &mut trial_rng(seed, Stream::Phi))?;
        Ok((c.len() as u64, phi, phi))
    }
}

fn learner_kernel<S, E>(s: S, dist: &Distribution, n: usize, augmented: bool) -> Result<Box<dyn TrialKernel>, String>
where
    S: Learner<Example = E> + 'static,
    E: Sample + Send + Sync + 'static,
{
    let g = Sampler::<E>::new(dist.clone(), n)?;
    Ok(if augmented {
        Box::new(WithLearner(augment(s), g))
    } else {
        Box::new(WithLearner(s, g))
    })
}

fn build(cfg: &ExperimentConfig) -> Result<Box<dyn TrialKernel>, String> {
    let n = cfg.n as usize;
    let d = &cfg.distribution;
    let a = cfg.augment;
    let err = |e: SchemeError| e.to_string();
    match &cfg.scheme {
        SchemeSpec::Hull { dim } => {
            let s = HullScheme::new(*dim).map_err(err)?;
            if d.dim() != *dim {
                return Err(format!("distribution dimension {} does not match hull dimension {dim}", d.dim()));
            }
            learner_kernel(s, d, n, a)
        }
        SchemeSpec::Svm { kernel, rho } => learner_kernel(SvmScheme::new(*kernel, *rho).map_err(err)?, d, n, a),
        SchemeSpec::Svr { kernel, rho, t } => learner_kernel(SvrScheme::new(*kernel, *rho, *t).map_err(err)?, d, n, a),
        SchemeSpec::Gem { d: budget, kernel, anchor } => {
            let s = match anchor {
                Some(anchor) => GemScheme::new(anchor.clone(), *budget, *kernel),
                None => GemScheme::with_default_anchor(d.dim(), *budget, *kernel),
            }
            .map_err(err)?;
            learner_kernel(s, d, n, a)
        }
        SchemeSpec::SecondLargest => learner_kernel(SecondLargest, d, n, a),
        SchemeSpec::Trimming { atom, cap } => Ok(Box::new(CompressOnly(Trimming::new(*atom, *cap), Sampler::new(d.clone(), n)?))),
    }
}

type CacheKey = (u64, u64);

fn table_cache() -> &'static Mutex<HashMap<CacheKey, Arc<BoundTable>>> {
    static CACHE: OnceLock<Mutex<HashMap<CacheKey, Arc<BoundTable>>>> = OnceLock::new();
    CACHE.get_or_init(Default::default)
}

/// The bound table for (N, δ), computed once per process and shared.
pub fn cached_bound_table(n: u64, delta: f64, exec: Execution) -> Result<Arc<BoundTable>, BoundsError> {
    let key = (n, delta.to_bits());
    if let Some(t) = table_cache().lock().expect("bound cache poisoned").get(&key) {
        return Ok(Arc::clone(t));
    }
    let table = Arc::new(BoundTable::compute(n, delta, &Precision::default(), exec)?);
    Ok(Arc::clone(table_cache().lock().expect("bound cache poisoned").entry(key).or_insert(table)))
}

/// Runs all trials; the output depends only on the configuration, never on the schedule.
pub fn run_trials(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<TrialResult>, ExperimentError> {
    cfg.validate().map_err(ExperimentError::Config)?;
    let kernel = build(cfg).map_err(ExperimentError::Config)?;
    if cfg.trials == 0 {
        return Ok(Vec::new());
    }
    let table = cached_bound_table(cfg.n, cfg.delta, exec)?;
    Ok(exec.map(cfg.trials, |i| {
        let seed = derive_seed(cfg.seed, i as u64);
        let outcome = kernel.run(seed, cfg).map_err(|e| e.to_string()).map(|(k, risk_hat, phi_hat)| {
            let row = table.row(k).expect("compression never exceeds the sample");
            let slack = containment_slack(risk_hat, cfg.n_test_risk);
            TrialStats {
                k,
                risk_hat,
                phi_hat,
                eps: row.eps,
                eps_low: row.eps_low,
                eps_up: row.eps_up,
                inside: row.eps_low - slack <= risk_hat && risk_hat <= row.eps_up + slack,
            }
        });
        TrialResult { trial: i, seed, outcome }
    }))
}

pub const TRIALS_CSV_HEADER: &str = "trial,seed,k,risk_hat,phi_hat,eps,eps_low,eps_up,inside";

pub fn write_trials_csv<W: Write>(results: &[TrialResult], mut out: W) -> io::Result<()> {
    writeln!(out, "{TRIALS_CSV_HEADER}")?;
    for r in results {
        match &r.outcome {
            Ok(t) => writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.trial,
                r.seed,
                t.k,
                sig_digits(t.risk_hat, 12),
                sig_digits(t.phi_hat, 12),
                sig_digits(t.eps, 12),
                sig_digits(t.eps_low, 12),
                sig_digits(t.eps_up, 12),
                t.inside
            )?,
            Err(_) => writeln!(out, "{},{},,,,,,,error", r.trial, r.seed)?,
        }
    }
    Ok(())
}
