//! Acceptance suite. Runs every criterion, prints one PASS/FAIL line each and
//! exits non-zero if any fails.

mod common;

use std::process::ExitCode;
use std::time::Instant;

use common::{psi_exact, rel_err, svm_reference_objective, svr_reference_objective, to_f64};
use compress_cert::bounds::{eps_interval_roots, eps_upper_root};
use compress_cert::compression::{CheckConfig, Property};
use compress_cert::exec::with_threads;
use compress_cert::experiments::validation::{validate_scheme, ValidationOptions, ValidationScheme};
use compress_cert::experiments::{coverage_report, run_trials, write_trials_csv, Distribution, ExperimentConfig, SchemeSpec};
use compress_cert::schemes::{svm_train, svr_train, Kernel, LabeledExample, SolverOptions};
use compress_cert::{
    asymptotic_envelope, eps_interval, eps_upper, psi, psi_at_complement, psi_tilde, psi_tilde_at_complement, BoundQuery,
    Execution, Precision,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

const GRID_N: [u64; 5] = [1, 2, 10, 100, 2000];
const GRID_DELTA: [f64; 3] = [1e-3, 1e-6, 1e-9];

fn grid_k(n: u64) -> Vec<u64> {
    let mut ks = vec![0, 1, n / 10, n / 2, n.saturating_sub(1), n];
    ks.retain(|&k| k <= n);
    ks.sort_unstable();
    ks.dedup();
    ks
}

fn grid() -> Vec<BoundQuery> {
    let mut out = Vec::new();
    for n in GRID_N {
        for k in grid_k(n) {
            for d in GRID_DELTA {
                out.push(BoundQuery::new(n, k, d).unwrap());
            }
        }
    }
    out
}

struct Outcome {
    pass: bool,
    detail: String,
}

fn pass_if(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let prec = Precision::default();
    let mut worst = 0.0f64;
    let mut problems = Vec::new();
    let queries = grid();
    for q in &queries {
        let label = format!("N={} k={} delta={:e}", q.n(), q.k(), q.delta());
        let eps = match eps_upper_root(q, &prec) {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("{label}: {e}"));
                continue;
            }
        };
        let (low, up) = match eps_interval_roots(q, &prec) {
            Ok(r) => r,
            Err(e) => {
                problems.push(format!("{label}: {e}"));
                continue;
            }
        };
        if q.k() == q.n() {
            if eps.value != 1.0 || up.value != 1.0 {
                problems.push(format!("{label}: eps={} eps_up={} (want exactly 1)", eps.value, up.value));
            }
        } else {
            let r1 = (psi_at_complement(q, eps.complement).unwrap() - 1.0).abs();
            let r3 = (psi_tilde_at_complement(q, up.complement).unwrap() - 1.0).abs();
            worst = worst.max(r1).max(r3);
            if r1 > 1e-6 || r3 > 1e-6 {
                problems.push(format!("{label}: residuals {r1:e} {r3:e}"));
            }
        }
        if low.value > 0.0 {
            let r2 = (psi_tilde_at_complement(q, low.complement).unwrap() - 1.0).abs();
            worst = worst.max(r2);
            if r2 > 1e-6 {
                problems.push(format!("{label}: lower residual {r2:e}"));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 30.0 {
        problems.push(format!("runtime {secs:.1}s"));
    }
    pass_if(
        problems.is_empty(),
        format!(
            "{} grid points, max |residual| {worst:.2e}, {secs:.2}s{}",
            queries.len(),
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

fn criterion_2() -> Outcome {
    let mut problems = Vec::new();
    let mut worst_eps = 0.0f64;
    for d in [1e-3, 1e-6, 1e-9, 0.05, 0.5] {
        let e = eps_upper(&BoundQuery::new(1, 0, d).unwrap()).unwrap();
        worst_eps = worst_eps.max((e - (1.0 - d)).abs());
    }
    if worst_eps > 1e-9 {
        problems.push(format!("N=1 eps_0 error {worst_eps:e}"));
    }
    let mut worst_psi0 = 0.0f64;
    let mut worst_psi0_rel = 0.0f64;
    for n in [1u64, 2, 3, 5, 10, 20, 50, 100] {
        for k in 0..n {
            for d in GRID_DELTA {
                let q = BoundQuery::new(n, k, d).unwrap();
                let exact = to_f64(&psi_exact(n, k, d, 0.0));
                let closed = d * (n - k) as f64 / (n as f64 * (k + 1) as f64);
                if rel_err(exact, closed) > 1e-14 {
                    problems.push(format!("oracle disagrees with closed form at N={n} k={k}"));
                }
                let got = psi(&q, 0.0).unwrap();
                worst_psi0 = worst_psi0.max((got - exact).abs());
                worst_psi0_rel = worst_psi0_rel.max(rel_err(got, exact));
            }
        }
    }
    if worst_psi0 > 1e-12 {
        problems.push(format!("psi(0) error {worst_psi0:e}"));
    }
    let mut worst_tilde = 0.0f64;
    let mut lower_nonzero = Vec::new();
    for n in GRID_N {
        for d in GRID_DELTA {
            let q = BoundQuery::new(n, 0, d).unwrap();
            worst_tilde = worst_tilde.max((psi_tilde(&q, 0.0).unwrap() - d).abs());
            let (low, _) = eps_interval(&q).unwrap();
            if low != 0.0 {
                lower_nonzero.push(format!("N={n} delta={d:e}: {low}"));
            }
        }
    }
    if worst_tilde > 1e-12 {
        problems.push(format!("psi_tilde_0(0) error {worst_tilde:e}"));
    }
    if !lower_nonzero.is_empty() {
        problems.push(format!("eps_low_0 nonzero at {}", lower_nonzero.join(", ")));
    }
    pass_if(
        problems.is_empty(),
        format!(
            "eps_0(N=1) err {worst_eps:.1e}, psi(0) abs err {worst_psi0:.1e} (rel {worst_psi0_rel:.1e}), psi_tilde_0(0) err {worst_tilde:.1e}{}",
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

fn criterion_3() -> Outcome {
    let mut violations = Vec::new();
    let queries = grid();
    for q in &queries {
        let eps = eps_upper(q).unwrap();
        let (low, up) = eps_interval(q).unwrap();
        let (env_low, env_high) = asymptotic_envelope(q);
        let r = q.ratio();
        let ok = r <= eps && eps <= up && up <= env_high && low >= env_low;
        if !ok {
            violations.push(format!(
                "N={} k={} delta={:e}: ratio {r} eps {eps} eps_up {up} eps_low {low} envelope [{env_low}, {env_high}]",
                q.n(),
                q.k(),
                q.delta()
            ));
        }
    }
    pass_if(
        violations.is_empty(),
        format!("{} grid points, {} violations{}", queries.len(), violations.len(), if violations.is_empty() { String::new() } else { format!("; {}", violations.join("; ")) }),
    )
}

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut widths = Vec::new();
    for n in [2000u64, 4000, 8000] {
        let q = BoundQuery::new(n, n / 10, 1e-6).unwrap();
        match eps_interval(&q) {
            Ok((low, up)) => widths.push(up - low),
            Err(e) => return pass_if(false, format!("N={n}: {e}")),
        }
    }
    let secs = start.elapsed().as_secs_f64();
    let decreasing = widths.windows(2).all(|w| w[1] < w[0]);
    pass_if(
        decreasing && secs < 60.0,
        format!("widths {:.6} > {:.6} > {:.6}, {secs:.2}s", widths[0], widths[1], widths[2]),
    )
}

fn hull_config(distribution: Distribution) -> ExperimentConfig {
    ExperimentConfig {
        scheme: SchemeSpec::Hull { dim: 3 },
        augment: false,
        distribution,
        n: 1000,
        delta: 1e-3,
        trials: 200,
        n_test_risk: 100_000,
        n_test_phi: 500,
        seed: 20_240_601,
    }
}

fn gaussian_3d() -> Distribution {
    Distribution::Gaussian { dim: 3, mean: None, var: None }
}

fn trials_csv(cfg: &ExperimentConfig, exec: Execution) -> Result<Vec<u8>, String> {
    let results = run_trials(cfg, exec).map_err(|e| e.to_string())?;
    let mut buf = Vec::new();
    write_trials_csv(&results, &mut buf).map_err(|e| e.to_string())?;
    Ok(buf)
}

fn criterion_5() -> (Outcome, Option<Vec<u8>>) {
    let start = Instant::now();
    let laws = [
        ("gaussian", gaussian_3d()),
        ("uniform", Distribution::UniformCube { dim: 3, lo: -1.0, hi: 1.0 }),
    ];
    let mut parts = Vec::new();
    let mut pass = true;
    let mut gaussian_csv = None;
    for (name, law) in laws {
        let cfg = hull_config(law);
        let results = match run_trials(&cfg, Execution::Parallel) {
            Ok(r) => r,
            Err(e) => return (pass_if(false, format!("{name}: {e}")), None),
        };
        let summary = coverage_report(&results, cfg.n, cfg.delta);
        let coverage = summary.coverage.unwrap_or(0.0);
        pass &= summary.failed_trials == 0 && coverage >= 0.99;
        parts.push(format!(
            "{name}: coverage {}/{} = {coverage:.3}, k in [{}, {}], failed {}",
            summary.inside,
            summary.trials - summary.failed_trials,
            summary.k_min.unwrap_or(0),
            summary.k_max.unwrap_or(0),
            summary.failed_trials
        ));
        if name == "gaussian" {
            let mut buf = Vec::new();
            write_trials_csv(&results, &mut buf).unwrap();
            gaussian_csv = Some(buf);
        }
    }
    let secs = start.elapsed().as_secs_f64();
    pass &= secs < 900.0;
    (pass_if(pass, format!("{}; {secs:.1}s", parts.join("; "))), gaussian_csv)
}

fn sorted_scalars(u: &Value) -> Vec<f64> {
    let mut out = Vec::new();
    for entry in u.as_array().into_iter().flatten() {
        let x = entry["example"].as_f64().unwrap_or(f64::NAN);
        let m = entry["multiplicity"].as_u64().unwrap_or(0);
        out.extend(std::iter::repeat_n(x, m as usize));
    }
    out.sort_by(f64::total_cmp);
    out
}

fn criterion_6() -> Outcome {
    let mut problems = Vec::new();
    let schemes = [
        ValidationScheme::Hull2,
        ValidationScheme::Hull3,
        ValidationScheme::Gem,
        ValidationScheme::Svr,
        ValidationScheme::Svm,
        ValidationScheme::Trimming,
    ];
    let opts = |seed| ValidationOptions {
        check: CheckConfig { trials: 1000, seed, ..CheckConfig::default() },
        sample_size: None,
        augment: false,
    };
    for s in schemes {
        match validate_scheme(s, &[Property::Preference, Property::Idempotence], &opts(7)) {
            Ok(out) => {
                for o in out {
                    if o.report.violations != 0 || o.report.trials != 1000 {
                        problems.push(format!("{} {}: {} violations", s.name(), o.report.property, o.report.violations));
                    }
                }
            }
            Err(e) => problems.push(format!("{}: {e}", s.name())),
        }
    }
    let seeds = [0u64, 1, 2, 3, 4, 5, 6, 7, 8, 9];
    let mut found = 0;
    for seed in seeds {
        let out = match validate_scheme(ValidationScheme::SecondLargest, &[Property::Coherence1], &opts(seed)) {
            Ok(o) => o,
            Err(e) => {
                problems.push(format!("second_largest: {e}"));
                continue;
            }
        };
        let Some(cx) = out[0].report.counterexample.as_ref() else {
            problems.push(format!("second_largest seed {seed}: no counterexample"));
            continue;
        };
        let u = sorted_scalars(&cx["u"]);
        let z = cx["z"].as_f64().unwrap_or(f64::NAN);
        let strictly_between = u.len() >= 2 && u[u.len() - 2] < z && z < u[u.len() - 1];
        if strictly_between {
            found += 1;
        } else {
            problems.push(format!("second_largest seed {seed}: counterexample {cx} is not strictly between"));
        }
    }
    pass_if(
        problems.is_empty(),
        format!(
            "preference+idempotence clean on 6 schemes x 1000 pairs; coherence-I counterexample in {found}/{} runs{}",
            seeds.len(),
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

fn criterion_7() -> Outcome {
    let cfg = ExperimentConfig {
        scheme: SchemeSpec::Trimming { atom: 0.5, cap: 100 },
        augment: false,
        distribution: Distribution::PointMass { atom: 0.5 },
        n: 500,
        delta: 1e-3,
        trials: 20,
        n_test_risk: 1000,
        n_test_phi: 1000,
        seed: 11,
    };
    let results = match run_trials(&cfg, Execution::Parallel) {
        Ok(r) => r,
        Err(e) => return pass_if(false, e.to_string()),
    };
    let stats: Vec<_> = results.iter().filter_map(|r| r.outcome.as_ref().ok()).collect();
    let all_shape = stats.len() == cfg.trials && stats.iter().all(|t| t.k == 100 && t.phi_hat == 0.0 && t.eps_low > 0.0);
    let summary = coverage_report(&results, cfg.n, cfg.delta);
    let coverage = summary.coverage.unwrap_or(1.0);
    let eps_low = stats.first().map_or(f64::NAN, |t| t.eps_low);
    pass_if(
        all_shape && coverage < 1.0 - cfg.delta,
        format!("k = 100, phi_hat = 0, eps_low_100 = {eps_low:.4} in all {} trials: {all_shape}; coverage {coverage:.3} < {}", stats.len(), 1.0 - cfg.delta),
    )
}

fn random_kernel(rng: &mut ChaCha8Rng) -> Kernel {
    match rng.random_range(0..3) {
        0 => Kernel::Linear,
        1 => Kernel::Rbf { gamma: [0.3, 1.0, 3.0][rng.random_range(0..3)] },
        _ => Kernel::Polynomial { degree: 2, coef: 1.0 },
    }
}

fn criterion_8() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut worst_obj = 0.0f64;
    let mut worst_kkt = 0.0f64;
    let mut problems = Vec::new();
    let opts = SolverOptions::default();
    for i in 0..50 {
        let n = rng.random_range(4..=40);
        let kernel = random_kernel(&mut rng);
        let rho = [0.1, 1.0, 10.0, 100.0][rng.random_range(0..4)];
        let classify = i % 2 == 0;
        let mut data = Vec::with_capacity(n);
        for j in 0..n {
            let x = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let y = if classify {
                let y: f64 = if j % 2 == 0 { 1.0 } else { -1.0 };
                data.push(LabeledExample::new(vec![x[0] + 0.8 * y, x[1] + 0.8 * y], y));
                continue;
            } else {
                (1.5 * x[0]).sin() + 0.3 * x[1] + rng.random_range(-0.2..0.2)
            };
            data.push(LabeledExample::new(x.to_vec(), y));
        }
        let refs: Vec<&LabeledExample> = data.iter().collect();
        let (model, reference) = if classify {
            (svm_train(&refs, kernel, rho, &opts), svm_reference_objective(&data, kernel, rho, 20_000))
        } else {
            let tube = [0.05, 0.2][rng.random_range(0..2)];
            (svr_train(&refs, kernel, rho, tube, &opts), svr_reference_objective(&data, kernel, rho, tube, 20_000))
        };
        let model = match model {
            Ok(m) => m,
            Err(e) => {
                problems.push(format!("problem {i}: {e}"));
                continue;
            }
        };
        let err = rel_err(model.objective, reference);
        worst_obj = worst_obj.max(err);
        worst_kkt = worst_kkt.max(model.kkt_residual);
        if err > 1e-4 || model.kkt_residual > 1e-5 {
            problems.push(format!(
                "problem {i} (n={n}, {kernel:?}, rho={rho}): objective {} vs reference {reference}, kkt {:e}",
                model.objective, model.kkt_residual
            ));
        }
    }
    pass_if(
        problems.is_empty(),
        format!(
            "50 problems, max relative objective gap {worst_obj:.2e}, max KKT residual {worst_kkt:.2e}{}",
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

fn criterion_9(reference: Option<Vec<u8>>) -> Outcome {
    let cfg = hull_config(gaussian_3d());
    let reference = match reference {
        Some(r) => r,
        None => match trials_csv(&cfg, Execution::Parallel) {
            Ok(r) => r,
            Err(e) => return pass_if(false, e),
        },
    };
    let mut runs = Vec::new();
    for threads in [1usize, 8] {
        runs.push((format!("{threads} workers"), with_threads(threads, || trials_csv(&cfg, Execution::Parallel))));
    }
    let mut problems = Vec::new();
    for (label, csv) in &runs {
        match csv {
            Ok(bytes) if *bytes == reference => {}
            Ok(_) => problems.push(format!("{label}: CSV differs")),
            Err(e) => problems.push(format!("{label}: {e}")),
        }
    }
    pass_if(
        problems.is_empty(),
        format!(
            "{} reruns byte-identical to the reference ({} bytes){}",
            runs.len() - problems.len(),
            reference.len(),
            if problems.is_empty() { String::new() } else { format!("; {}", problems.join("; ")) }
        ),
    )
}

fn main() -> ExitCode {
    let mut all = true;
    let mut report = |id: u32, name: &str, o: Outcome| {
        all &= o.pass;
        println!("criterion {id} [{name}]: {} ({})", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    };
    report(1, "solver correctness", criterion_1());
    report(2, "closed forms", criterion_2());
    report(3, "explicit envelope", criterion_3());
    report(4, "interval width shrinks with N", criterion_4());
    let (c5, csv) = criterion_5();
    report(5, "hull coverage", c5);
    report(6, "property suites", criterion_6());
    report(7, "trimming breaks the lower bound", criterion_7());
    report(8, "SVM/SVR solver oracle", criterion_8());
    report(9, "determinism across worker counts", criterion_9(csv));
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
