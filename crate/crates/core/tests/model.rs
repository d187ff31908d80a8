mod common;

use common::{random_model, shared_exponential, DelayKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rrcov::model::MAX_JOINT_ORDER;
use rrcov::{CycleBuilder, Delay, ModelSpec, Primitive};

fn exponent_tuples(l: usize, max: u32) -> Vec<Vec<u32>> {
    let mut out = vec![vec![]];
    for _ in 0..=l {
        out = out
            .into_iter()
            .flat_map(|v: Vec<u32>| {
                let used: u32 = v.iter().sum();
                (0..=max - used).map(move |k| {
                    let mut w = v.clone();
                    w.push(k);
                    w
                })
            })
            .collect();
    }
    out.retain(|v| v.iter().any(|&k| k > 0));
    out
}

/// Worst `|mc - exact| / se` over every joint moment of order <= 4.
fn worst_moment_z(spec: &ModelSpec, n: usize, seed: u64) -> (Vec<u32>, f64) {
    let tuples = exponent_tuples(spec.dim(), MAX_JOINT_ORDER);
    let mut sum = vec![0.0; tuples.len()];
    let mut sum_sq = vec![0.0; tuples.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..n {
        let (t, x) = spec.sample_cycle(&mut rng);
        let coords: Vec<f64> = std::iter::once(t).chain(x).collect();
        for (idx, tup) in tuples.iter().enumerate() {
            let prod: f64 = tup
                .iter()
                .zip(&coords)
                .map(|(&k, v)| v.powi(k as i32))
                .product();
            sum[idx] += prod;
            sum_sq[idx] += prod * prod;
        }
    }
    let nf = n as f64;
    let mut worst = (vec![], 0.0);
    for (idx, tup) in tuples.iter().enumerate() {
        let exact = spec.joint_moment(tup[0], &tup[1..]).unwrap();
        let mean = sum[idx] / nf;
        let se = ((sum_sq[idx] / nf - mean * mean).max(0.0) / (nf - 1.0)).sqrt();
        let z = if se == 0.0 {
            if (mean - exact).abs() <= 1e-9 * exact.abs().max(1.0) {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            (mean - exact).abs() / se
        };
        if z >= worst.1 {
            worst = (tup.clone(), z);
        }
    }
    worst
}

#[test]
fn mean_cycle_time_against_ten_million_cycles() {
    let spec = shared_exponential(Delay::SameAsCycle);
    assert_eq!(spec.joint_moment(1, &[0, 0]).unwrap(), 2.0);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 10_000_000;
    let (mut s, mut s2) = (0.0, 0.0);
    for _ in 0..n {
        let (t, _) = spec.sample_cycle(&mut rng);
        s += t;
        s2 += t * t;
    }
    let mean = s / n as f64;
    let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
    assert!((mean - 2.0).abs() <= 4.0 * se, "{mean} vs 2 (se {se})");
}

#[test]
fn sampler_agrees_with_every_low_order_moment() {
    let spec = shared_exponential(Delay::SameAsCycle);
    let (tup, z) = worst_moment_z(&spec, 1_000_000, 3);
    assert!(z <= 4.0, "{tup:?}: {z:.2} SE");
    for seed in [101, 102, 103] {
        let spec = random_model(seed, 2, DelayKind::Ordinary).build();
        let (tup, z) = worst_moment_z(&spec, 1_000_000, seed);
        assert!(z <= 4.0, "model {seed}, {tup:?}: {z:.2} SE");
    }
}

#[test]
fn shared_component_gives_unit_covariance() {
    let spec = shared_exponential(Delay::SameAsCycle);
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 1_000_000;
    let mut prods = Vec::with_capacity(n);
    let (mut sx, mut sy) = (0.0, 0.0);
    let mut draws = Vec::with_capacity(n);
    for _ in 0..n {
        let (t, r) = spec.sample_cycle(&mut rng);
        assert!(t >= 0.0);
        sx += r[0];
        sy += r[1];
        draws.push((r[0], r[1]));
    }
    let (mx, my) = (sx / n as f64, sy / n as f64);
    for (x, y) in &draws {
        prods.push((x - mx) * (y - my));
    }
    let cov = prods.iter().sum::<f64>() / (n as f64 - 1.0);
    let var = prods.iter().map(|p| (p - cov).powi(2)).sum::<f64>() / (n as f64 - 1.0);
    let se = (var / n as f64).sqrt();
    assert!((cov - 1.0).abs() <= 4.0 * se, "{cov} (se {se})");
}

#[test]
fn deterministic_model_is_constant() {
    let (cycle, names) = CycleBuilder::new()
        .component("one", Primitive::deterministic(1.0).unwrap())
        .time(0.0, &[("one", 1.0)])
        .reward("x", 0.0, &[("one", 2.0)])
        .build()
        .unwrap();
    let spec = ModelSpec::new(cycle, names, Delay::Ordinary, true).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for _ in 0..10 {
        assert_eq!(spec.sample_cycle(&mut rng), (1.0, vec![2.0]));
    }
    assert_eq!(spec.joint_moment(2, &[1]).unwrap(), 2.0);
    assert_eq!(spec.joint_moment(0, &[0]).unwrap(), 1.0);
}

#[test]
fn ordinary_delay_moments_vanish() {
    let mom = shared_exponential(Delay::Ordinary).cycle_moments().unwrap();
    assert_eq!(mom.delay.et0, 0.0);
    assert_eq!(mom.delay.et0_sq, 0.0);
    assert!(mom.delay.ex0.iter().all(|&x| x == 0.0));
    let same = shared_exponential(Delay::SameAsCycle)
        .cycle_moments()
        .unwrap();
    assert_eq!(same.delay.et0, same.mu1);
    assert_eq!(same.delay.ex0, same.lambda1);
}

#[test]
fn independent_coordinates_factorize() {
    let e = |m| Primitive::exponential(m).unwrap();
    let (cycle, names) = CycleBuilder::new()
        .component("a", e(0.7))
        .component("b", Primitive::gamma(2.0, 0.5).unwrap())
        .component("c", Primitive::uniform(-1.0, 3.0).unwrap())
        .time(0.25, &[("a", 1.5)])
        .reward("x", 0.5, &[("b", 1.0), ("c", -2.0)])
        .build()
        .unwrap();
    let spec = ModelSpec::new(cycle, names, Delay::Ordinary, false).unwrap();
    for p in 0..=2u32 {
        for q in 0..=(4 - p).min(2) {
            let joint = spec.joint_moment(p, &[q]).unwrap();
            let prod = spec.joint_moment(p, &[0]).unwrap() * spec.joint_moment(0, &[q]).unwrap();
            assert!(
                (joint - prod).abs() <= 1e-12 * prod.abs().max(1e-300),
                "{p} {q}"
            );
        }
    }
}

#[test]
fn order_above_four_is_rejected() {
    let spec = shared_exponential(Delay::Ordinary);
    assert!(spec.joint_moment(3, &[1, 1]).is_err());
    assert!(spec.joint_moment(2, &[1, 1]).is_ok());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn relabeling_components_is_bit_exact(seed in any::<u64>(), rot in 1usize..5, rev in any::<bool>()) {
        let m = random_model(seed, 2, DelayKind::SameAsCycle);
        let n = m.components.len();
        let mut order: Vec<usize> = (0..n).map(|k| (k + rot) % n).collect();
        if rev {
            order.reverse();
        }
        let a = m.build();
        let b = m.build_with_order(&order);
        for tup in exponent_tuples(2, MAX_JOINT_ORDER) {
            let x = a.joint_moment(tup[0], &tup[1..]).unwrap();
            let y = b.joint_moment(tup[0], &tup[1..]).unwrap();
            prop_assert_eq!(x.to_bits(), y.to_bits(), "{:?}", tup);
        }
        prop_assert_eq!(a.cycle_moments().unwrap(), b.cycle_moments().unwrap());
    }

    #[test]
    fn sampled_cycle_times_are_nonnegative(seed in any::<u64>()) {
        let spec = random_model(seed, 1, DelayKind::Ordinary).build();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..200 {
            prop_assert!(spec.sample_cycle(&mut rng).0 >= 0.0);
        }
    }

    #[test]
    fn random_models_satisfy_moment_invariants(seed in any::<u64>(), l in 1usize..4) {
        let spec = random_model(seed, l, DelayKind::SameAsCycle).build();
        let mom = spec.cycle_moments().unwrap();
        prop_assert!(mom.check_invariants().is_ok());
    }
}

#[test]
fn negative_time_coefficient_is_rejected() {
    let err = CycleBuilder::new()
        .component("u", Primitive::exponential(1.0).unwrap())
        .time(0.0, &[("u", -1.0)])
        .reward("x", 1.0, &[])
        .build()
        .unwrap_err();
    assert!(err.to_string().contains("negative"), "{err}");
}
