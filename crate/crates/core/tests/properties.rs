use proptest::prelude::*;

use promot::harness::{aggregate, compute_metrics, read_runs_csv, write_runs_csv, RunResult, RunRow};
use promot::objectives::ackley;
use promot::smoothing::{draw_batch, Scaling};
use promot::verify::transform_families;
use promot::{Kernel, Objective, SmoothingSpec, Trajectory, Transform};

fn result_strategy() -> impl Strategy<Value = RunResult> {
    (0u64..1000, 0.0f64..100.0, 0usize..400, -50.0f64..50.0, 1u64..10_000).prop_map(|(seed, mse, ht, bv, evals)| {
        RunResult {
            seed,
            mse: Some(mse),
            hitting_time: Some(ht),
            best_value: bv,
            evals,
            wall_time_s: 0.0,
        }
    })
}

fn trajectory(mus: Vec<Vec<f64>>) -> Trajectory {
    let n = mus.len();
    Trajectory {
        f_values: mus.iter().map(|m| -m.iter().map(|v| v * v).sum::<f64>()).collect(),
        etas: vec![0.1; n - 1],
        grad_norms: vec![1.0; n - 1],
        log_scales: vec![0.0; n - 1],
        sigmas: vec![1.0; n],
        evals: (0..n as u64).collect(),
        seed: 3,
        mus,
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn aggregation_ignores_seed_order(
        (rs, perm) in prop::collection::vec(result_strategy(), 2..20)
            .prop_flat_map(|v| { let n = v.len(); (Just(v), Just((0..n).collect::<Vec<_>>()).prop_shuffle()) })
    ) {
        let shuffled: Vec<RunResult> = perm.iter().map(|&i| rs[i].clone()).collect();
        prop_assert_eq!(aggregate(&rs), aggregate(&shuffled));
    }

    #[test]
    fn metrics_ignore_appended_worse_steps(
        mus in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 1..30),
        extra in prop::collection::vec(prop::collection::vec(-3.0f64..3.0, 3), 1..10),
    ) {
        let x_star = [0.0; 3];
        let base = trajectory(mus.clone());
        let m = compute_metrics(&base, Some(&x_star));
        let best = m.mse.unwrap() * 3.0;
        // push the extra points outward until they are strictly farther than the best
        let far: Vec<Vec<f64>> = extra
            .into_iter()
            .map(|p| {
                let n2: f64 = p.iter().map(|v| v * v).sum();
                let k = ((best + 1.0) / n2.max(1e-9)).sqrt().max(1.0);
                p.iter().map(|v| v * k + 1e-3 * k).collect()
            })
            .collect();
        let mut all = mus;
        all.extend(far);
        let longer = compute_metrics(&trajectory(all), Some(&x_star));
        prop_assert_eq!(m.mse, longer.mse);
        prop_assert_eq!(m.hitting_time, longer.hitting_time);
        prop_assert_eq!(m.best_value, longer.best_value);
    }

    #[test]
    fn runs_csv_round_trips(rs in prop::collection::vec(result_strategy(), 1..10), abort in any::<bool>()) {
        let mut rows: Vec<RunRow> = rs
            .iter()
            .enumerate()
            .map(|(i, r)| RunRow::from_outcome(i % 3, "promot", &promot::harness::RunOutcome {
                seed: r.seed,
                result: Some(r.clone()),
                abort: None,
            }))
            .collect();
        if abort {
            rows.push(RunRow::from_outcome(0, "promot", &promot::harness::RunOutcome {
                seed: 99,
                result: None,
                abort: Some("step 3: overflow, with comma".into()),
            }));
        }
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("runs.csv");
        write_runs_csv(&p, &rows).unwrap();
        prop_assert_eq!(read_runs_csv(&p).unwrap(), rows);
    }

    #[test]
    fn ratio_is_monotone_in_theta(
        family in 0usize..7,
        u in 0.0f64..1.0,
        v in 0.0f64..1.0,
        thetas in prop::collection::vec(1e-3f64..40.0, 2..30),
    ) {
        let t = transform_families()[family];
        let floor = t.ratio_domain_floor();
        let lo = if floor.is_finite() { floor } else { -15.0 };
        let (a, b) = (lo + 15.0 * u.max(v), lo + 15.0 * u.min(v));
        prop_assume!(a > b && b > floor);
        let mut grid = thetas;
        grid.sort_by(f64::total_cmp);
        prop_assert!(t.ratio_monotonicity_check(a, b, &grid).unwrap().passed());
    }

    #[test]
    fn sigmoid_power_is_bounded(alpha in 0.01f64..10.0, theta in 1e-3f64..50.0, y in -200.0f64..200.0) {
        let t = Transform::SigmoidPower { alpha };
        let l = t.log_eval(theta, y).unwrap();
        prop_assert!(l.is_finite() && l <= 0.0);
        let g = t.eval(theta, y).unwrap();
        prop_assert!(g <= 1.0 && g >= 0.0);
    }

    #[test]
    fn estimators_are_linear_in_h(
        mu in prop::collection::vec(-3.0f64..3.0, 4),
        key in any::<u64>(),
        c in 0.01f64..100.0,
    ) {
        let f = ackley(4).unwrap();
        let spec = SmoothingSpec::isotropic(Kernel::Logistic, Transform::Exponential, 0.5, 0.7, 8, f.domain().clone()).unwrap();
        let batch = draw_batch(&spec, &f, &mu, key, Scaling::BatchMax).unwrap();
        let mut scaled = batch.clone();
        scaled.samples.iter_mut().for_each(|s| s.h *= c);
        let close = |a: &[f64], b: &[f64]| a.iter().zip(b).all(|(x, y)| (c * x - y).abs() <= 1e-9 * (1.0 + y.abs()));
        prop_assert!(close(&batch.plain(), &scaled.plain()));
        prop_assert!(close(&batch.loo(spec.ridge).0, &scaled.loo(spec.ridge).0));
    }

    #[test]
    fn baseline_excludes_own_sample(
        mu in prop::collection::vec(-3.0f64..3.0, 3),
        key in any::<u64>(),
        k in 0usize..6,
        bump in 0.0f64..10.0,
    ) {
        let f = ackley(3).unwrap();
        let spec = SmoothingSpec::isotropic(Kernel::Gaussian, Transform::Exponential, 1.0, 0.5, 6, f.domain().clone()).unwrap();
        let batch = draw_batch(&spec, &f, &mu, key, Scaling::BatchMax).unwrap();
        let mut changed = batch.clone();
        changed.samples[k].h += bump;
        let (b0, b1) = (batch.baselines(spec.ridge), changed.baselines(spec.ridge));
        // equal up to rounding in the batch sums
        prop_assert!((b0[k] - b1[k]).abs() <= 1e-12 * (1.0 + b0[k].abs()) * (1.0 + bump));
    }

    #[test]
    fn kernel_score_is_log_density_slope(which in 0usize..5, z in -6.0f64..6.0) {
        let k = [
            Kernel::Gaussian,
            Kernel::Logistic,
            Kernel::StudentT { nu: 3.0 },
            Kernel::HyperbolicSecant,
            Kernel::GeneralizedGaussian { beta: 4.0 },
        ][which];
        let h = 1e-5;
        let fd = (k.log_density(z + h) - k.log_density(z - h)) / (2.0 * h);
        prop_assert!((k.score(z) - fd).abs() <= 1e-5 * (1.0 + fd.abs()), "{} at {}: {} vs {}", k, z, k.score(z), fd);
    }

    #[test]
    fn batches_repeat_for_a_key(mu in prop::collection::vec(-3.0f64..3.0, 2), key in any::<u64>()) {
        let f = ackley(2).unwrap();
        let spec = SmoothingSpec::isotropic(Kernel::Logistic, Transform::Softplus, 2.0, 0.3, 5, f.domain().clone()).unwrap();
        let a = draw_batch(&spec, &f, &mu, key, Scaling::BatchMax).unwrap();
        let b = draw_batch(&spec, &f, &mu, key, Scaling::BatchMax).unwrap();
        prop_assert_eq!(a.samples, b.samples);
    }
}
