use std::sync::Arc;

use promot::config::{ExperimentConfig, Target};
use promot::harness::{attack_campaign, run_protocol, sweep, SweepGrid};
use promot::objectives::{sample_inputs, SoftmaxClassifier};
use promot::presets::{self, MethodId, Task};
use promot::verify::landscape_stationary_points;

fn desk(task: Task, method: MethodId) -> ExperimentConfig {
    ExperimentConfig::from_preset(presets::lookup(task, method).unwrap(), false).unwrap()
}

fn shrink(mut cfg: ExperimentConfig, dim: usize, horizon: usize) -> ExperimentConfig {
    if let promot::config::ObjectiveConfig::Benchmark { dim: d, .. } = &mut cfg.objective {
        *d = dim;
    }
    cfg.horizon = horizon;
    cfg.runs = 4;
    cfg
}

#[test]
fn loo_preset_approaches_the_optimum() {
    let cfg = shrink(desk(Task::Ackley, MethodId::PromotLoo), 10, 200);
    let spec = cfg.method_spec().unwrap();
    let Target::Single(f) = cfg.objective.build().unwrap() else { unreachable!() };
    let init = cfg.init.unwrap();
    let r = run_protocol(&spec, f.as_ref(), &init, cfg.horizon, &cfg.seeds()).unwrap();
    assert_eq!(r.aggregate.aborted, 0);
    let start = (init.mean * init.mean) as f64;
    let mse = r.aggregate.mse.unwrap().mean;
    assert!(mse < 0.2 * start, "mse {mse} vs start {start}");
}

// Some table step sizes make the baselines escape on Rosenbrock; those runs
// must be reported with a reason rather than dropped.
#[test]
fn every_method_runs_or_reports_why_not() {
    for task in [Task::Ackley, Task::Rosenbrock, Task::Griewank] {
        for method in MethodId::ALL {
            let cfg = shrink(desk(task, method), 5, 20);
            let spec = cfg.method_spec().unwrap();
            let Target::Single(f) = cfg.objective.build().unwrap() else { unreachable!() };
            let r = run_protocol(&spec, f.as_ref(), &cfg.init.unwrap(), cfg.horizon, &cfg.seeds()).unwrap();
            assert_eq!(r.outcomes.len(), 4);
            for o in &r.outcomes {
                assert_ne!(o.result.is_some(), o.abort.is_some());
            }
            if method.baseline().is_none() || task != Task::Rosenbrock {
                assert_eq!(r.aggregate.aborted, 0, "{} {}", task.name(), method.name());
                assert!(r.aggregate.mse.unwrap().mean.is_finite());
            }
        }
    }
}

#[test]
fn sweep_is_deterministic_and_ranked() {
    let cfg = shrink(desk(Task::Rosenbrock, MethodId::Promot), 4, 30);
    let spec = cfg.method_spec().unwrap();
    let Target::Single(f) = cfg.objective.build().unwrap() else { unreachable!() };
    let grid = SweepGrid {
        eta0: vec![0.01, 0.1],
        sigma: vec![0.1, 0.5],
        ..Default::default()
    };
    let init = cfg.init.unwrap();
    let a = sweep(&spec, f.as_ref(), &grid, &init, cfg.horizon, &cfg.seeds()).unwrap();
    let b = sweep(&spec, f.as_ref(), &grid, &init, cfg.horizon, &cfg.seeds()).unwrap();
    assert_eq!(a.rows.len(), 4);
    let key = |r: &promot::harness::SweepRow| (r.config_id, r.aggregate.mse.unwrap().mean.to_bits());
    assert_eq!(a.rows.iter().map(key).collect::<Vec<_>>(), b.rows.iter().map(key).collect::<Vec<_>>());
    let means: Vec<f64> = a.rows.iter().map(|r| r.aggregate.mse.unwrap().mean).collect();
    assert!(means.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn attack_campaign_reports_every_input() {
    let cfg = desk(Task::Vitaldb, MethodId::PromotLoo);
    let spec = cfg.method_spec().unwrap();
    let clf = Arc::new(SoftmaxClassifier::random(4, 20, 1).unwrap());
    let inputs = sample_inputs(4, 20, 2);
    let r = attack_campaign(&spec, clf, &inputs, 0.0, 0.01, 200, 9).unwrap();
    assert_eq!(r.runs.len(), 4);
    for run in &r.runs {
        assert!(run.abort.is_none());
        assert_eq!(run.success, run.first_success.is_some());
        if run.success {
            assert!(run.linf.unwrap() > 0.0 && run.r2.unwrap() < 1.0);
        }
    }
}

#[test]
fn stationary_points_concentrate_as_theta_grows() {
    let low = landscape_stationary_points(1.0, 2.0).unwrap();
    let high = landscape_stationary_points(40.0, 2.0).unwrap();
    assert!(low.len() > high.len());
    assert_eq!(high.len(), 1);
    assert!((high[0] - 1.0).abs() < 0.05);
}
