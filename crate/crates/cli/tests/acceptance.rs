//! Release acceptance: ten criteria, one pass/fail line each.
//!
//! Runs without the libtest harness so every line is printed even when all
//! criteria pass; exits nonzero if any fails.

use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::sync::Arc;
use std::time::{Duration, Instant};

use promot::config::{ExperimentConfig, Target};
use promot::harness::{attack_campaign, run_protocol};
use promot::objectives::{sample_inputs, AttackObjective, Objective, SoftmaxClassifier, DEFAULT_CLASSIFIER_SEED};
use promot::presets::{self, MethodId, Task};
use promot::verify::{self, Check, Effort};
use promot::Estimator;

const SEED: u64 = 0;

struct Outcome {
    passed: bool,
    detail: String,
}

fn from_checks(checks: Vec<Check>) -> Outcome {
    let failed: Vec<String> = checks.iter().filter(|c| !c.passed).map(|c| c.to_string()).collect();
    let detail = if failed.is_empty() {
        format!("{} checks", checks.len())
    } else {
        failed.join("; ")
    };
    Outcome {
        passed: failed.is_empty(),
        detail,
    }
}

fn c1() -> promot::Result<Outcome> {
    Ok(from_checks(verify::constants_checks(&verify::kernel_reference())?))
}

fn c2() -> promot::Result<Outcome> {
    Ok(from_checks(verify::transform_checks(Effort::Full, SEED)?))
}

fn c3() -> promot::Result<Outcome> {
    let mut c = verify::estimator_mean_checks(Effort::Full, SEED, Estimator::Plain)?;
    c.extend(verify::estimator_mean_checks(Effort::Full, SEED, Estimator::LeaveOneOut)?);
    Ok(from_checks(c))
}

fn c4() -> promot::Result<Outcome> {
    Ok(from_checks(verify::second_moment_checks(Effort::Full, SEED)?))
}

fn c5() -> promot::Result<Outcome> {
    Ok(from_checks(verify::variance_reduction_checks(Effort::Full, SEED)?))
}

fn c6() -> promot::Result<Outcome> {
    Ok(from_checks(verify::localization_checks()?))
}

fn c7() -> promot::Result<Outcome> {
    Ok(from_checks(verify::lipschitz_checks()?))
}

fn desk_mse(task: Task, method: MethodId) -> promot::Result<f64> {
    let row = presets::lookup(task, method).expect("preset row");
    let cfg = ExperimentConfig::from_preset(row, false)?;
    let spec = cfg.method_spec()?;
    let Target::Single(f) = cfg.objective.build()? else {
        unreachable!("benchmark preset")
    };
    let r = run_protocol(&spec, f.as_ref(), &cfg.init.expect("init"), cfg.horizon, &cfg.seeds())?;
    assert_eq!(r.aggregate.aborted, 0, "{} {} aborted", task.name(), method.name());
    Ok(r.aggregate.mse.expect("mse").mean)
}

fn c8() -> promot::Result<Outcome> {
    let a_loo = desk_mse(Task::Ackley, MethodId::PromotLoo)?;
    let a_pm = desk_mse(Task::Ackley, MethodId::Promot)?;
    let a_ep = desk_mse(Task::Ackley, MethodId::Epgs)?;
    let r_loo = desk_mse(Task::Rosenbrock, MethodId::PromotLoo)?;
    let r_pm = desk_mse(Task::Rosenbrock, MethodId::Promot)?;
    let ok = a_loo < a_pm && r_loo < r_pm && a_loo < a_ep;
    Ok(Outcome {
        passed: ok,
        detail: format!(
            "ackley loo {a_loo:.4} / promot {a_pm:.4} / epgs {a_ep:.4}; rosenbrock loo {r_loo:.4} / promot {r_pm:.4}"
        ),
    })
}

/// `-max(max_{y≠t} z_y - z_t, κ) - λ‖μ‖` from the raw weights.
fn attack_by_hand(clf: &SoftmaxClassifier, x: &[f64], mu: &[f64], kappa: f64, penalty: f64) -> f64 {
    let logits = |p: &[f64]| -> Vec<f64> {
        clf.weights()
            .iter()
            .zip(clf.bias())
            .map(|(w, b)| w.iter().zip(p).map(|(a, c)| a * c).sum::<f64>() + b)
            .collect()
    };
    let z0 = logits(x);
    let mut t = 0;
    for (i, &v) in z0.iter().enumerate() {
        if v < z0[t] {
            t = i;
        }
    }
    let xp: Vec<f64> = x.iter().zip(mu).map(|(a, b)| a + b).collect();
    let z = logits(&xp);
    let other = (0..z.len()).filter(|&i| i != t).map(|i| z[i]).fold(f64::NEG_INFINITY, f64::max);
    let norm = mu.iter().map(|v| v * v).sum::<f64>().sqrt();
    -(other - z[t]).max(kappa) - penalty * norm
}

fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

fn c9() -> promot::Result<Outcome> {
    let row = presets::lookup(Task::Cifar, MethodId::PromotLoo).expect("preset row");
    let cfg = ExperimentConfig::from_preset(row, false)?;
    let spec = cfg.method_spec()?;
    let Target::Attack {
        classifier,
        inputs,
        kappa,
        penalty,
    } = cfg.objective.build()?
    else {
        unreachable!("attack preset")
    };
    let report = attack_campaign(&spec, classifier, &inputs, kappa, penalty, cfg.horizon, cfg.seed)?;

    let clf = Arc::new(SoftmaxClassifier::random(4, 2, DEFAULT_CLASSIFIER_SEED)?);
    let axis = [-1.0, 0.0, 1.0];
    let grid: Vec<[f64; 2]> = axis.iter().flat_map(|&a| axis.iter().map(move |&b| [a, b])).collect();
    let mut mismatches = 0;
    let probes = sample_inputs(20, 2, 11);
    for x in &probes {
        let f = AttackObjective::new(clf.clone(), x.clone(), 0.0, presets::ATTACK_PENALTY)?;
        let ours: Vec<f64> = grid.iter().map(|m| f.evaluate(m)).collect();
        let brute: Vec<f64> = grid.iter().map(|m| attack_by_hand(&clf, x, m, 0.0, presets::ATTACK_PENALTY)).collect();
        let close = ours.iter().zip(&brute).all(|(a, b)| (a - b).abs() <= 1e-12);
        if argmax(&ours) != argmax(&brute) || !close {
            mismatches += 1;
        }
    }
    Ok(Outcome {
        passed: report.success_rate == 1.0 && mismatches == 0,
        detail: format!(
            "success rate {:.2} over {} inputs (T = {}, B = {}); grid argmax mismatches {mismatches} of {}",
            report.success_rate,
            report.runs.len(),
            cfg.horizon,
            row_batch(&cfg),
            probes.len()
        ),
    })
}

fn row_batch(cfg: &ExperimentConfig) -> usize {
    cfg.method.batch
}

fn run_binary(config: &Path, out: &Path, jobs: &str) -> Vec<(PathBuf, Vec<u8>)> {
    let status = Command::new(env!("CARGO_BIN_EXE_promot"))
        .args(["run", config.to_str().unwrap(), "--jobs", jobs, "--out", out.to_str().unwrap()])
        .env_remove("PROMOT_OUT_DIR")
        .output()
        .expect("spawn promot");
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let dir = out.join("ackley_promot_loo/trajectories");
    let mut files: Vec<(PathBuf, Vec<u8>)> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| {
            let p = e.unwrap().path();
            let bytes = std::fs::read(&p).unwrap();
            (PathBuf::from(p.file_name().unwrap()), bytes)
        })
        .collect();
    files.sort();
    files
}

fn c10() -> promot::Result<Outcome> {
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../presets/ackley_promot_loo.toml");
    let tmp = tempfile::tempdir()?;
    let a = run_binary(&config, &tmp.path().join("a"), "1");
    let b = run_binary(&config, &tmp.path().join("b"), "1");
    let c = run_binary(&config, &tmp.path().join("c"), "8");
    Ok(Outcome {
        passed: a.len() == 10 && a == b && a == c,
        detail: format!(
            "{} trajectory files; repeat identical: {}; --jobs 1 vs 8 identical: {}",
            a.len(),
            a == b,
            a == c
        ),
    })
}

type Criterion = (&'static str, u64, fn() -> promot::Result<Outcome>);

const CRITERIA: [Criterion; 10] = [
    ("kernel constants", 10, c1),
    ("transform ratio monotonicity and boundedness", 30, c2),
    ("estimator unbiasedness", 300, c3),
    ("plain second-moment bound", 120, c4),
    ("leave-one-out variance reduction", 300, c5),
    ("localization of stationary points", 60, c6),
    ("one-dimensional Lipschitz bound", 60, c7),
    ("desk-scale benchmark ordering", 900, c8),
    ("attack success and grid argmax", 300, c9),
    ("determinism across runs and job counts", 60, c10),
];

fn main() -> ExitCode {
    // libtest flags such as --nocapture or a name filter are accepted and ignored
    let mut failures = 0;
    for (i, (name, limit, f)) in CRITERIA.iter().enumerate() {
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(f);
        let secs = start.elapsed();
        let (passed, detail) = match outcome {
            Ok(Ok(o)) => (o.passed, o.detail),
            Ok(Err(e)) => (false, format!("error: {e}")),
            Err(_) => (false, "panicked".to_string()),
        };
        let in_time = secs <= Duration::from_secs(*limit);
        let ok = passed && in_time;
        if !ok {
            failures += 1;
        }
        println!(
            "criterion {:>2} {}: {} ({:.1}s of {}s) {}",
            i + 1,
            if ok { "PASS" } else { "FAIL" },
            name,
            secs.as_secs_f64(),
            limit,
            detail
        );
    }
    println!("acceptance: {} of {} criteria passed", CRITERIA.len() - failures, CRITERIA.len());
    if failures == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
