use erw_core::moments::exact_moments_upto;
use erw_core::simulator::{
    conditional_continuation_test, empirical_q_moments, martingale_diagnostics, path_statistics,
    simulate_batch, simulate_path, simulate_replicates, BatchAccumulator, WalkState,
};
use erw_core::{MemoryParameter, MomentSet, RawMoments, StepDistribution};

fn mp(a: f64) -> MemoryParameter<f64> {
    MemoryParameter::new(a).unwrap()
}

fn bernoulli() -> StepDistribution {
    StepDistribution::bernoulli(0.3).unwrap()
}

#[test]
fn full_memory_repeats_the_first_step() {
    let d = StepDistribution::gaussian(0.5, 1.0).unwrap();
    for seed in 0..5 {
        let path = simulate_path(&d, &mp(1.0), 200, seed);
        assert!(path.steps.iter().all(|&x| x == path.steps[0]));
        let want = 200.0 * (path.steps[0] - 0.5);
        assert!((path.s_tilde - want).abs() <= 1e-12 * want.abs().max(1.0));
    }
}

#[test]
fn paths_are_deterministic() {
    for d in [
        StepDistribution::Rademacher,
        bernoulli(),
        StepDistribution::uniform(-1.0, 1.0).unwrap(),
    ] {
        let a = simulate_path(&d, &mp(0.7), 1000, 99);
        let b = simulate_path(&d, &mp(0.7), 1000, 99);
        assert_eq!(a, b);
        assert_ne!(a.steps, simulate_path(&d, &mp(0.7), 1000, 100).steps);
    }
}

#[test]
fn walk_state_invariants() {
    let d = StepDistribution::discrete(vec![-1.0, 0.5, 2.0], vec![0.3, 0.3, 0.4]).unwrap();
    let raw: RawMoments<f64> = d.raw_moments();
    let path = simulate_path(&d, &mp(0.8), 500, 3);
    let n = path.n as f64;
    let sum = |p: i32| path.steps.iter().map(|x| x.powi(p)).sum::<f64>();
    assert_eq!(path.steps.len(), 500);
    assert!((path.s - sum(1)).abs() < 1e-9);
    assert!((path.s_tilde - (sum(1) - n * raw.m1)).abs() < 1e-9);
    assert!((path.t_tilde - (sum(2) - n * raw.m2)).abs() < 1e-9);
    assert!((path.u_tilde - (sum(3) - n * raw.m3)).abs() < 1e-8);
    let q = erw_core::gamma::martingale_scale(500, 0.8) * path.s_tilde;
    assert!((path.q - q).abs() <= 1e-12 * q.abs().max(1.0));
    assert_eq!(WalkState::from_steps(&d, &mp(0.8), &path.steps), path);
}

#[test]
fn memoryless_walk_has_classical_variance() {
    let d = bernoulli();
    let acc = simulate_batch(&d, &mp(0.0), 1000, 100_000, 5, &[1000]).unwrap();
    let cell = &acc.cells[0];
    let var = cell.mean_power(2) - cell.mean_power(1).powi(2);
    assert!((var / 1000.0 / 0.21 - 1.0).abs() < 0.03, "{var}");
}

#[test]
fn batch_matches_exact_second_moment() {
    let d = StepDistribution::Rademacher;
    let n = 3000;
    let acc = simulate_batch(&d, &mp(0.75), n, 100_000, 2024, &[1000, n]).unwrap();
    let ms: MomentSet<f64> = d.moment_set();
    let rows = exact_moments_upto(&ms, &mp(0.75), n);
    let est = empirical_q_moments(&acc, &mp(0.75)).unwrap();
    for e in &est {
        let exact = &rows[e.n - 1];
        let scale = (e.n as f64).powf(e.p as f64 * 0.75);
        let want = match e.p {
            1 => 0.0,
            2 => exact.s2 / scale,
            3 => exact.s3 / scale,
            _ => exact.s4 / scale,
        };
        assert!(
            (e.estimate - want).abs() <= 3.0 * e.stderr,
            "n={} p={}: {} ± {} vs {want}",
            e.n,
            e.p,
            e.estimate,
            e.stderr
        );
    }
}

#[test]
fn full_memory_rademacher_estimate_is_exactly_one() {
    let acc = simulate_batch(
        &StepDistribution::Rademacher,
        &mp(1.0),
        777,
        50,
        1,
        &[1, 777],
    )
    .unwrap();
    for e in empirical_q_moments(&acc, &mp(1.0)).unwrap() {
        if e.p == 2 || e.p == 4 {
            assert_eq!(e.estimate, 1.0);
        }
    }
}

#[test]
fn batch_independent_of_thread_count_and_partition() {
    let d = StepDistribution::uniform(-1.0, 2.0).unwrap();
    let run = |threads: usize| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| simulate_batch(&d, &mp(0.8), 400, 3000, 0xfeed, &[10, 100, 400]).unwrap())
    };
    let one = run(1);
    assert_eq!(one, run(3));
    assert_eq!(one, run(8));

    let mut parts = BatchAccumulator::new(&[10, 100, 400]);
    for range in [2000..3000, 0..777, 777..2000] {
        parts.merge(
            &simulate_replicates(&d, &mp(0.8), 400, 0xfeed, range, &[10, 100, 400]).unwrap(),
        );
    }
    assert_eq!(parts, one);
}

#[test]
fn singleton_batch_is_the_path() {
    let d = bernoulli();
    let acc = simulate_batch(&d, &mp(0.6), 50, 1, 31, &[50]).unwrap();
    let path = simulate_path(&d, &mp(0.6), 50, 31);
    let cell = &acc.cells[0];
    for p in 1..=8 {
        assert_eq!(cell.mean_power(p), path.s_tilde.powi(p as i32));
    }
    let est = empirical_q_moments(&acc, &mp(0.6)).unwrap();
    assert!(est.iter().all(|e| e.degenerate && e.stderr.is_nan()));
}

#[test]
fn scaled_mean_is_centered() {
    let d = StepDistribution::gaussian(-1.0, 2.0).unwrap();
    let acc = simulate_batch(&d, &mp(0.65), 500, 20_000, 8, &[100, 500]).unwrap();
    for e in empirical_q_moments(&acc, &mp(0.65))
        .unwrap()
        .iter()
        .filter(|e| e.p == 1)
    {
        assert!(e.estimate.abs() <= 3.0 * e.stderr);
    }
}

#[test]
fn reconstruction_on_every_path() {
    for (i, d) in [
        StepDistribution::Rademacher,
        bernoulli(),
        StepDistribution::gaussian(2.0, 0.5).unwrap(),
    ]
    .iter()
    .enumerate()
    {
        let ms: MomentSet<f64> = d.moment_set();
        for alpha in [0.0, 0.4, 0.75, 1.0] {
            for seed in 0..20 {
                let path = simulate_path(d, &mp(alpha), 2000, seed * 10 + i as u64);
                let view = martingale_diagnostics(&path, &mp(alpha), &ms).unwrap();
                assert!(view.max_rel_error <= 1e-10);
            }
        }
    }
}

#[test]
fn marginal_moments_are_preserved() {
    let d = StepDistribution::discrete(vec![-1.0, 2.0], vec![0.6, 0.4]).unwrap();
    let raw: RawMoments<f64> = d.raw_moments();
    let want = [raw.m1, raw.m2, raw.m3, raw.m4];
    let stats = path_statistics(&d, &mp(0.75), 100, 100_000, 17, 100, &[1, 10, 50, 99]).unwrap();
    for (k, row) in stats.step_moments.iter().enumerate() {
        for p in 0..4 {
            assert!(
                row[p].within(want[p], 4.0),
                "k={} p={}: {:?} vs {}",
                k + 1,
                p + 1,
                row[p],
                want[p]
            );
        }
    }
    for (n, inc) in &stats.increments {
        assert!(inc.within(0.0, 4.0), "n={n}: {inc:?}");
    }
    assert!(stats.max_reconstruction_error <= 1e-10);
}

#[test]
fn martingale_differences_obey_the_moment_bound() {
    let d = StepDistribution::Rademacher;
    let samples = [1, 2, 10, 100, 1000, 4999];
    let stats = path_statistics(&d, &mp(0.75), 5000, 10_000, 11, 0, &samples).unwrap();
    for (n, e) in samples.iter().zip(&stats.epsilon_abs) {
        assert!(e[1].mean <= 16.0 * d.abs_moment(4), "n={n}: {:?}", e[1]);
        assert!(e[0].mean <= 4.0 * d.abs_moment(2));
    }
}

#[test]
fn memoryless_differences_have_step_variance() {
    let d = bernoulli();
    let stats = path_statistics(&d, &mp(0.0), 200, 50_000, 12, 0, &[1, 50, 200]).unwrap();
    for e in &stats.epsilon_abs {
        assert!(e[0].within(0.21, 4.0), "{:?}", e[0]);
    }
}

#[test]
fn continuation_after_three_ups() {
    let d = StepDistribution::Rademacher;
    let prefix = WalkState::from_steps(&d, &mp(0.6), &[1.0, 1.0, 1.0]);
    let r = conditional_continuation_test(&prefix, &d, &mp(0.6), 100_000, 5).unwrap();
    assert!((r.predicted.centered1 - 0.6).abs() < 1e-15);
    assert!(r.empirical[0].within(0.6, 3.0), "{:?}", r.empirical[0]);
    assert!(
        r.z_scores().iter().all(|z| z.abs() <= 3.0),
        "{:?}",
        r.z_scores()
    );
}

#[test]
fn continuation_matches_predictions_for_a_skewed_law() {
    let d = StepDistribution::discrete(vec![-1.0, 0.5, 3.0], vec![0.5, 0.3, 0.2]).unwrap();
    let prefix = simulate_path(&d, &mp(0.7), 25, 6);
    let r = conditional_continuation_test(&prefix, &d, &mp(0.7), 200_000, 9).unwrap();
    assert!(
        r.z_scores().iter().all(|z| z.abs() <= 3.0),
        "{:?}",
        r.z_scores()
    );
}

#[test]
fn memoryless_continuation_is_unconditional() {
    let d = StepDistribution::uniform(0.0, 2.0).unwrap();
    let ms: MomentSet<f64> = d.moment_set();
    let prefix = simulate_path(&d, &mp(0.0), 10, 2);
    let r = conditional_continuation_test(&prefix, &d, &mp(0.0), 100_000, 3).unwrap();
    let want = [0.0, ms.central2, ms.central3, 0.0, ms.mixed12, 0.0];
    assert_eq!(r.predicted.to_array(), want);
    for (e, w) in r.empirical.iter().zip(want) {
        assert!(e.within(w, 3.0), "{e:?} vs {w}");
    }
}

#[test]
fn bad_checkpoints_are_rejected() {
    let d = StepDistribution::Rademacher;
    assert!(simulate_batch(&d, &mp(0.5), 10, 5, 0, &[0, 5]).is_err());
    assert!(simulate_batch(&d, &mp(0.5), 10, 5, 0, &[5, 5]).is_err());
    assert!(simulate_batch(&d, &mp(0.5), 10, 5, 0, &[11]).is_err());
    assert!(simulate_batch(&d, &mp(0.5), 10, 5, 0, &[]).is_err());
}
