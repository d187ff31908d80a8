mod common;

use common::{poisson, random_model, shared_exponential, DelayKind};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rrcov::simulate::sample_path;
use rrcov::{simulate, CycleBuilder, Delay, Error, ModelSpec, Primitive, SimConfig};

fn within(value: f64, target: f64, se: f64) -> bool {
    (value - target).abs() <= 4.0 * se
}

#[test]
fn worker_count_never_changes_results() {
    let spec = random_model(77, 2, DelayKind::SameAsCycle).build();
    let base = SimConfig::new(vec![1.0, 3.0, 9.0], 30_000, 99).with_block_size(700);
    let reference = simulate(&spec, &base.clone().with_workers(1)).unwrap();
    for w in [2, 8] {
        assert_eq!(
            simulate(&spec, &base.clone().with_workers(w)).unwrap(),
            reference
        );
    }
    let other_seed = SimConfig {
        master_seed: 100,
        ..base
    };
    assert_ne!(simulate(&spec, &other_seed).unwrap(), reference);
}

#[test]
fn poisson_counts_have_mean_and_variance_t() {
    let est = simulate(&poisson(), &SimConfig::new(vec![5.0, 20.0], 1_000_000, 4)).unwrap();
    for p in &est.points {
        assert!(
            within(p.mean[0], p.t, p.se_mean[0]),
            "mean at {}: {}",
            p.t,
            p.mean[0]
        );
        assert!(
            within(p.cov[(0, 0)], p.t, p.se_cov[(0, 0)]),
            "var at {}: {}",
            p.t,
            p.cov[(0, 0)]
        );
    }
}

#[test]
fn compound_poisson_variance() {
    let (cycle, names) = CycleBuilder::new()
        .component("u", Primitive::exponential(0.5).unwrap())
        .component("g", Primitive::gamma(3.0, 0.4).unwrap())
        .component("h", Primitive::uniform(-1.0, 2.0).unwrap())
        .time(0.0, &[("u", 1.0)])
        .reward("x", 0.0, &[("g", 1.0)])
        .reward("y", 0.2, &[("h", 1.0)])
        .build()
        .unwrap();
    let spec = ModelSpec::new(cycle, names, Delay::Ordinary, false).unwrap();
    let mom = spec.cycle_moments().unwrap();
    let est = simulate(&spec, &SimConfig::new(vec![4.0, 12.0], 400_000, 8)).unwrap();
    for p in &est.points {
        for i in 0..2 {
            let target = p.t * mom.lambda2[i] / mom.mu1;
            assert!(
                within(p.cov[(i, i)], target, p.se_cov[(i, i)]),
                "{i} at {}",
                p.t
            );
        }
        // Both coordinates are driven by the same Poisson count.
        let cross = p.t * mom.lambda1[0] * mom.lambda1[1] / mom.mu1;
        assert!(within(p.cov[(0, 1)], cross, p.se_cov[(0, 1)]));
    }
}

#[test]
fn rewards_are_credited_when_the_cycle_ends() {
    let one = Primitive::deterministic(1.0).unwrap();
    let (cycle, names) = CycleBuilder::new()
        .component("one", one)
        .time(0.0, &[("one", 1.0)])
        .reward("x", 0.0, &[("one", 1.0)])
        .build()
        .unwrap();
    let grid = [0.0, 0.999, 1.0, 2.5];
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let ordinary = ModelSpec::new(cycle.clone(), names.clone(), Delay::Ordinary, true).unwrap();
    assert_eq!(
        sample_path(&ordinary, &mut rng, &grid),
        vec![vec![0.0], vec![0.0], vec![1.0], vec![2.0]]
    );
    let (delay, _) = CycleBuilder::new()
        .component("half", Primitive::deterministic(0.5).unwrap())
        .time(0.0, &[("half", 1.0)])
        .reward("x", 3.0, &[])
        .build()
        .unwrap();
    let delayed = ModelSpec::new(cycle, names, Delay::Independent(delay), true).unwrap();
    assert_eq!(
        sample_path(&delayed, &mut rng, &[0.0, 0.499, 0.5, 1.4, 1.5, 2.5]),
        vec![
            vec![0.0],
            vec![0.0],
            vec![3.0],
            vec![3.0],
            vec![4.0],
            vec![5.0]
        ]
    );
}

#[test]
fn nonnegative_rewards_give_nondecreasing_paths() {
    let spec = shared_exponential(Delay::SameAsCycle);
    let grid: Vec<f64> = (0..40).map(|k| k as f64 * 0.5).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..200 {
        let path = sample_path(&spec, &mut rng, &grid);
        for w in path.windows(2) {
            assert!(w[1][0] >= w[0][0] && w[1][1] >= w[0][1]);
        }
    }
}

#[test]
fn identical_coordinates_have_min_equal_to_mean() {
    let (cycle, names) = CycleBuilder::new()
        .component("u", Primitive::exponential(1.0).unwrap())
        .component("v", Primitive::gamma(2.0, 1.0).unwrap())
        .time(0.0, &[("u", 1.0)])
        .reward("x", 0.0, &[("u", 0.5), ("v", 1.0)])
        .reward("y", 0.0, &[("u", 0.5), ("v", 1.0)])
        .build()
        .unwrap();
    let spec = ModelSpec::new(cycle, names, Delay::Ordinary, false).unwrap();
    let est = simulate(&spec, &SimConfig::new(vec![2.0, 6.0], 20_000, 3)).unwrap();
    for p in &est.points {
        assert_eq!(p.min_mean, p.mean[0]);
        assert_eq!(p.mean[0], p.mean[1]);
        assert_eq!(p.se_min, p.se_mean[0]);
    }
}

#[test]
fn estimates_are_well_formed() {
    let spec = random_model(5, 3, DelayKind::Ordinary).build();
    let est = simulate(&spec, &SimConfig::new(vec![3.0, 8.0, 20.0], 50_000, 1)).unwrap();
    assert_eq!(est.reward_names, vec!["r0", "r1", "r2"]);
    for p in &est.points {
        assert_eq!(p.replications, 50_000);
        assert!(p.cov.is_symmetric() && p.se_cov.is_symmetric());
        let min_eig = p
            .cov
            .symmetric_eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
        assert!(min_eig >= -1e-9 * p.cov.trace());
        assert!(p.se_mean.iter().all(|&s| s > 0.0));
        assert!(p.se_min > 0.0);
    }
}

#[test]
fn invalid_configurations_are_rejected() {
    let spec = poisson();
    let bad = [
        SimConfig::new(vec![2.0, 1.0], 100, 0),
        SimConfig::new(vec![1.0, 1.0], 100, 0),
        SimConfig::new(vec![-1.0], 100, 0),
        SimConfig::new(vec![1.0], 1, 0),
        SimConfig::new(vec![1.0], 100, 0).with_block_size(0),
        SimConfig::new(vec![1.0], 100, 0).with_workers(0),
    ];
    for cfg in bad {
        assert!(
            matches!(simulate(&spec, &cfg), Err(Error::InvalidConfig(_))),
            "{cfg:?}"
        );
    }
}

#[test]
fn runaway_paths_are_reported() {
    let cfg = SimConfig::new(vec![1000.0], 10, 9).with_max_cycles(50);
    match simulate(&poisson(), &cfg) {
        Err(Error::RunawayPath { max_cycles, .. }) => assert_eq!(max_cycles, 50),
        other => panic!("{other:?}"),
    }
}
