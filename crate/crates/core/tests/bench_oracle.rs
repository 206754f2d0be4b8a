use bayesopt_core::bench::{
    experiment_rosenbrock, experiment_surrogate, rosenbrock, rosenbrock_grad, RosenbrockBox, RosenbrockExperiment,
    SurrogateExperiment, SurrogateTuningProblem, SURROGATE_ALPHAS, SURROGATE_K,
};
use bayesopt_core::engine::Settings;
use bayesopt_core::space::{Configuration, Value};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[test]
fn rosenbrock_gradient_matches_differences() {
    assert_eq!(rosenbrock(1.0, 1.0, 1.0, 1.0), 0.0);
    assert_eq!(rosenbrock_grad(1.0, 1.0, 1.0, 1.0), [0.0, 0.0]);
    assert_eq!(rosenbrock(0.0, 0.0, 1.0, 1.0), 1.0);
    let f = rosenbrock(1.00292, 0.99658, 1.0, 1.0);
    assert!((f - 9.4e-5).abs() < 0.05e-5, "{f}");

    let mut rng = StdRng::seed_from_u64(17);
    let h = 1e-5;
    for _ in 0..100 {
        let (x, y) = (rng.random_range(-10.0..10.0), rng.random_range(-10.0..10.0));
        let (a, b) = (rng.random_range(0.5..2.0), rng.random_range(0.5..100.0));
        let g = rosenbrock_grad(x, y, a, b);
        let fd = [
            (rosenbrock(x + h, y, a, b) - rosenbrock(x - h, y, a, b)) / (2.0 * h),
            (rosenbrock(x, y + h, a, b) - rosenbrock(x, y - h, a, b)) / (2.0 * h),
        ];
        let scale = g[0].abs().max(g[1].abs());
        let err = (g[0] - fd[0]).abs().max((g[1] - fd[1]).abs());
        assert!(err <= 1e-6 * scale, "({x}, {y}): {g:?} vs {fd:?}");
    }
}

#[test]
fn surrogate_grid_enumeration() {
    let p = SurrogateTuningProblem::new().unwrap();
    let mut max = f64::NEG_INFINITY;
    let mut argmax = Vec::new();
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let mut count = 0;
    for a in 1..=16i64 {
        for b in 1..=16 {
            for c in 1..=16 {
                for d in 1..=16 {
                    let n = [a, b, c, d];
                    let u: Vec<f64> = (0..3)
                        .map(|k| {
                            let mut v: Vec<Value> = n.iter().map(|x| Value::Int(x * i64::from(SURROGATE_K))).collect();
                            v.push(Value::Real(SURROGATE_ALPHAS[k]));
                            p.utility(&Configuration(v)).unwrap()
                        })
                        .collect();
                    // 1e-2 scores below 1e-4 everywhere and sits on a plateau
                    assert!(u[0] < u[2], "{n:?}: {u:?}");
                    assert!((63.0..=65.0).contains(&u[0]), "{n:?}: {}", u[0]);
                    for (k, &v) in u.iter().enumerate() {
                        count += 1;
                        lo = lo.min(v);
                        hi = hi.max(v);
                        if v > max {
                            max = v;
                            argmax = vec![(n, k)];
                        } else if v == max {
                            argmax.push((n, k));
                        }
                    }
                }
            }
        }
    }
    assert_eq!(count, 196_608);
    assert!(lo >= 0.0 && hi <= 100.0);
    assert_eq!(argmax.len(), 1, "optimum must be unique");
    let (n, k) = argmax[0];
    assert_eq!(SURROGATE_ALPHAS[k], 1e-4);
    let (opt, value) = p.optimum();
    assert_eq!(value, max);
    let expected: Vec<Value> =
        n.iter().map(|x| Value::Int(x * i64::from(SURROGATE_K))).chain([Value::Real(1e-4)]).collect();
    assert_eq!(opt.0, expected);
}

#[test]
fn design_only_rosenbrock_reports_five_evaluations() {
    let mut exp = RosenbrockExperiment::new(RosenbrockBox::Narrow, vec![0, 1, 2]);
    exp.settings = Settings::new(5, 5, 0);
    let report = experiment_rosenbrock(&exp).unwrap();
    assert!(report.runs.iter().all(|r| r.evaluations == 5 && r.trace.len() == 5));
    assert_eq!(report, experiment_rosenbrock(&exp).unwrap());
}

#[test]
fn short_surrogate_runs_are_deterministic_and_monotone() {
    let mut exp = SurrogateExperiment::new(vec![3, 4]);
    exp.settings.budget = 16;
    let report = experiment_surrogate(&exp).unwrap();
    for r in &report.runs {
        assert_eq!(r.trace.len(), 16);
        assert!(r.trace.windows(2).all(|w| w[1] >= w[0]));
        assert!(r.relative_gap >= 0.0);
    }
    assert_eq!(report, experiment_surrogate(&exp).unwrap());
}
