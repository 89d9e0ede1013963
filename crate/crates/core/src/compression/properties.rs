use rand::Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use super::scheme::{changes_compression, checked_compress, Compressor, Learner, SchemeError};
use super::Multiset;
use crate::exec::Execution;
use crate::seed::{derive_seed, trial_rng, Stream, TrialRng};

/// Source of random training multisets and fresh examples.
pub trait Generator<E: Ord>: Sync {
    fn multiset(&self, rng: &mut TrialRng) -> Multiset<E>;
    fn example(&self, rng: &mut TrialRng) -> E;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Property {
    Preference,
    Idempotence,
    NonAssoc,
    Inclusion,
    Coherence1,
    Coherence2,
    Reconstruction,
}

impl Property {
    pub const ALL: [Property; 7] = [
        Property::Preference,
        Property::Idempotence,
        Property::NonAssoc,
        Property::Inclusion,
        Property::Coherence1,
        Property::Coherence2,
        Property::Reconstruction,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Property::Preference => "preference",
            Property::Idempotence => "idempotence",
            Property::NonAssoc => "non_assoc",
            Property::Inclusion => "inclusion",
            Property::Coherence1 => "coherence1",
            Property::Coherence2 => "coherence2",
            Property::Reconstruction => "reconstruction",
        }
    }

    pub fn needs_learner(self) -> bool {
        !matches!(self, Property::Preference | Property::Idempotence | Property::NonAssoc)
    }
}

impl std::str::FromStr for Property {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        Property::ALL
            .into_iter()
            .find(|p| p.name() == s)
            .ok_or_else(|| format!("unknown property `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PropertyReport {
    pub property: String,
    pub trials: usize,
    pub violations: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub counterexample: Option<Value>,
}

impl PropertyReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CheckConfig {
    pub trials: usize,
    pub seed: u64,
    pub exec: Execution,
    /// Fresh examples added together in the non-associativity check.
    pub batch: usize,
    /// Probe points per trial in the reconstruction check.
    pub probes: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            trials: 1000,
            seed: 0,
            exec: Execution::default(),
            batch: 3,
            probes: 1000,
        }
    }
}

type Outcome = Result<Option<Value>, SchemeError>;

/// Runs independent trials and keeps the counterexample of the lowest-indexed violation.
fn run(property: &str, cfg: &CheckConfig, trial: impl Fn(&mut TrialRng) -> Outcome + Sync) -> PropertyReport {
    let outcomes = cfg.exec.map(cfg.trials, |i| {
        let mut rng = trial_rng(derive_seed(cfg.seed, i as u64), Stream::Training);
        match trial(&mut rng) {
            Ok(v) => v.map(|mut v| {
                v["trial"] = json!(i);
                v
            }),
            Err(e) => Some(json!({ "trial": i, "error": e.to_string() })),
        }
    });
    let violations = outcomes.iter().filter(|o| o.is_some()).count();
    PropertyReport {
        property: property.to_string(),
        trials: cfg.trials,
        violations,
        counterexample: outcomes.into_iter().flatten().next(),
    }
}

fn keep_half<E: Ord + Clone>(m: &Multiset<E>, rng: &mut TrialRng) -> Multiset<E> {
    let mut out = Multiset::new();
    for e in m.iter() {
        if rng.random_bool(0.5) {
            out.insert(e.clone());
        }
    }
    out
}

/// c(V) = c(U) for random V with c(U) ⊆ V ⊆ U.
pub fn check_preference<S, G>(s: &S, g: &G, cfg: &CheckConfig) -> PropertyReport
where
    S: Compressor,
    G: Generator<S::Example>,
{
    run(Property::Preference.name(), cfg, |rng| {
        let u = g.multiset(rng);
        let c_u = checked_compress(s, &u)?;
        let v = c_u.union(&keep_half(&u.difference(&c_u), rng));
        let c_v = checked_compress(s, &v)?;
        Ok((c_v != c_u).then(|| json!({ "u": u, "v": v, "c_u": c_u, "c_v": c_v })))
    })
}

/// c(c(U)) = c(U).
pub fn check_idempotence<S, G>(s: &S, g: &G, cfg: &CheckConfig) -> PropertyReport
where
    S: Compressor,
    G: Generator<S::Example>,
{
    run(Property::Idempotence.name(), cfg, |rng| {
        let u = g.multiset(rng);
        let c_u = checked_compress(s, &u)?;
        let c_c = checked_compress(s, &c_u)?;
        Ok((c_c != c_u).then(|| json!({ "u": u, "c_u": c_u, "c_c_u": c_c })))
    })
}

/// If no single fresh example changes c(U), adding all of them together must not either.
pub fn check_non_associativity<S, G>(s: &S, g: &G, cfg: &CheckConfig) -> PropertyReport
where
    S: Compressor,
    G: Generator<S::Example>,
{
    let batch = cfg.batch.max(1);
    run(Property::NonAssoc.name(), cfg, |rng| {
        let u = g.multiset(rng);
        let zs: Vec<_> = (0..batch).map(|_| g.example(rng)).collect();
        let c_u = checked_compress(s, &u)?;
        for z in &zs {
            if checked_compress(s, &u.with(z.clone()))? != c_u {
                return Ok(None);
            }
        }
        let mut joint = u.clone();
        joint.extend(zs.iter().cloned());
        let c_joint = checked_compress(s, &joint)?;
        Ok((c_joint != c_u).then(|| json!({ "u": u, "added": zs, "c_u": c_u, "c_joint": c_joint })))
    })
}

/// Every misclassified training example is in c(U) with its full multiplicity.
pub fn check_inclusion<S, G>(s: &S, g: &G, cfg: &CheckConfig) -> PropertyReport
where
    S: Learner,
    G: Generator<S::Example>,
{
    run(Property::Inclusion.name(), cfg, |rng| {
        let u = g.multiset(rng);
        let c_u = checked_compress(s, &u)?;
        let h = s.learn(&u)?;
        let missing = s.misclassified(&h, &u).difference(&c_u);
        Ok((!missing.is_empty()).then(|| json!({ "u": u, "c_u": c_u, "missing": missing })))
    })
}

/// ℓ(A(U), z) = 1 implies a change of compression.
pub fn check_coherence_i<S, G>(s: &S, g: &G, cfg: &CheckConfig) -> PropertyReport
where
    S: Learner,
    G: Generator<S::Example>,
{
    run(Property::Coherence1.name(), cfg, |rng| {
        let u = g.multiset(rng);
        let z = g.example(rng);
        let h = s.learn(&u)?;
        if !s.loss(&h, &z) {
            return Ok(None);
        }
        let c_u = checked_compress(s, &u)?;
        let changed = changes_compression(s, &c_u, &z)?;
        Ok((!changed).then(|| json!({ "u": u, "z": z, "c_u": c_u, "loss": true, "change": false })))
    })
}

/// A change of compression implies ℓ(A(U), z) = 1.
pub fn check_coherence_ii<S, G>(s: &S, g: &G, cfg: &CheckConfig) -> PropertyReport
where
    S: Learner,
    G: Generator<S::Example>,
{
    run(Property::Coherence2.name(), cfg, |rng| {
        let u = g.multiset(rng);
        let z = g.example(rng);
        let c_u = checked_compress(s, &u)?;
        if !changes_compression(s, &c_u, &z)? {
            return Ok(None);
        }
        let h = s.learn(&u)?;
        Ok((!s.loss(&h, &z)).then(|| json!({ "u": u, "z": z, "c_u": c_u, "loss": false, "change": true })))
    })
}

/// ρ(c(U)) agrees with A(U) on fresh probes. Vacuous for schemes without a reconstruction map.
pub fn check_reconstruction<S, G>(s: &S, g: &G, cfg: &CheckConfig) -> PropertyReport
where
    S: Learner,
    G: Generator<S::Example>,
{
    run(Property::Reconstruction.name(), cfg, |rng| {
        let u = g.multiset(rng);
        let c_u = checked_compress(s, &u)?;
        let Some(rebuilt) = s.reconstruct(&c_u) else {
            return Ok(None);
        };
        let rebuilt = rebuilt?;
        let h = s.learn(&u)?;
        for _ in 0..cfg.probes {
            let z = g.example(rng);
            if s.loss(&h, &z) != s.loss(&rebuilt, &z) {
                return Ok(Some(json!({ "u": u, "c_u": c_u, "probe": z })));
            }
        }
        Ok(None)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Uniform integers in 0..100, multisets of size 1..=12.
    struct Ints;
    impl Generator<i32> for Ints {
        fn multiset(&self, rng: &mut TrialRng) -> Multiset<i32> {
            let n = rng.random_range(1..=12);
            (0..n).map(|_| rng.random_range(0..100)).collect()
        }
        fn example(&self, rng: &mut TrialRng) -> i32 {
            rng.random_range(0..100)
        }
    }

    struct Max;
    impl Compressor for Max {
        type Example = i32;
        fn compress(&self, u: &Multiset<i32>) -> Result<Multiset<i32>, SchemeError> {
            Ok(u.distinct().next_back().copied().into_iter().collect())
        }
    }
    impl Learner for Max {
        type Hypothesis = i32;
        fn learn(&self, u: &Multiset<i32>) -> Result<i32, SchemeError> {
            Ok(u.distinct().next_back().copied().unwrap_or(i32::MIN))
        }
        fn loss(&self, h: &i32, z: &i32) -> bool {
            z > h
        }
        fn reconstruct(&self, c: &Multiset<i32>) -> Option<Result<i32, SchemeError>> {
            Some(self.learn(c))
        }
    }

    /// Keeps the smallest element of odd cardinality multisets, the largest otherwise.
    struct Parity;
    impl Compressor for Parity {
        type Example = i32;
        fn compress(&self, u: &Multiset<i32>) -> Result<Multiset<i32>, SchemeError> {
            let pick = if u.len() % 2 == 1 { u.distinct().next() } else { u.distinct().next_back() };
            Ok(pick.copied().into_iter().collect())
        }
    }

    fn cfg(seed: u64) -> CheckConfig {
        CheckConfig {
            trials: 300,
            seed,
            ..CheckConfig::default()
        }
    }

    #[test]
    fn consistent_scheme_passes_everything() {
        let c = cfg(1);
        for r in [
            check_preference(&Max, &Ints, &c),
            check_idempotence(&Max, &Ints, &c),
            check_non_associativity(&Max, &Ints, &c),
            check_inclusion(&Max, &Ints, &c),
            check_coherence_i(&Max, &Ints, &c),
            check_coherence_ii(&Max, &Ints, &c),
            check_reconstruction(&Max, &Ints, &c),
        ] {
            assert!(r.passed(), "{r:?}");
            assert!(r.counterexample.is_none());
            assert_eq!(r.trials, 300);
        }
    }

    #[test]
    fn parity_scheme_breaks_preference() {
        let r = check_preference(&Parity, &Ints, &cfg(2));
        assert!(r.violations > 0);
        let ce = r.counterexample.unwrap();
        assert!(ce.get("u").is_some() && ce.get("v").is_some());
    }

    #[test]
    fn reports_are_schedule_independent() {
        let par = check_preference(&Parity, &Ints, &cfg(3));
        let seq = check_preference(
            &Parity,
            &Ints,
            &CheckConfig {
                exec: Execution::Sequential,
                ..cfg(3)
            },
        );
        assert_eq!(par, seq);
    }

    #[test]
    fn report_json_shape() {
        let r = check_idempotence(&Max, &Ints, &cfg(4));
        let j = serde_json::to_value(&r).unwrap();
        assert_eq!(j, json!({ "property": "idempotence", "trials": 300, "violations": 0 }));
        assert_eq!("non_assoc".parse::<Property>().unwrap(), Property::NonAssoc);
        assert!("nosuch".parse::<Property>().is_err());
    }
}
