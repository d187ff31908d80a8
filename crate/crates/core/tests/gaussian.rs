use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rrcov::{expected_min_bivariate, pd_threshold, Matrix, PdThreshold};

fn random_pair(seed: u64) -> (Matrix, Matrix) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=4);
    let a: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
        .collect();
    let c = Matrix::symmetric_from_fn(n, |i, j| {
        let dot: f64 = (0..n).map(|k| a[i][k] * a[j][k]).sum();
        Ok::<_, ()>(dot + if i == j { 0.05 } else { 0.0 })
    })
    .unwrap();
    let mut d = Matrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let v = rng.random_range(-3.0..2.0);
            d[(i, j)] = v;
            d[(j, i)] = v;
        }
    }
    (c, d)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn pd_predicate_switches_once_at_the_threshold(seed in any::<u64>()) {
        let (c, d) = random_pair(seed);
        let pd = |t: f64| c.scale_add(t, &d).is_positive_definite();
        match pd_threshold(&c, &d).unwrap() {
            PdThreshold::AlwaysPd => prop_assert!(d.is_positive_definite()),
            PdThreshold::Above(t0) => {
                let below = (t0 - 1e-6).max(0.0);
                for k in 0..=50 {
                    let t = below * k as f64 / 50.0;
                    prop_assert!(!pd(t), "PD at {} <= t0 = {}", t, t0);
                }
                prop_assert!(pd(t0 + 1e-6));
                for k in 1..=50 {
                    prop_assert!(pd(t0 + 10.0 * k as f64 / 50.0));
                }
            }
        }
    }

    #[test]
    fn expected_min_is_below_both_means_and_symmetric(
        mw in -10.0f64..10.0, mv in -10.0f64..10.0,
        sw in 0.0f64..3.0, sv in 0.0f64..3.0, rho in -1.0f64..1.0,
    ) {
        let cov = rho * sw * sv;
        let m = expected_min_bivariate(mw, mv, sw * sw, sv * sv, cov).unwrap();
        let swapped = expected_min_bivariate(mv, mw, sv * sv, sw * sw, cov).unwrap();
        prop_assert!(m <= mw.min(mv) + 1e-12);
        prop_assert!((m - swapped).abs() <= 1e-14 * m.abs().max(1.0));
    }
}

#[test]
fn threshold_examples() {
    let id = Matrix::identity(2);
    assert_eq!(pd_threshold(&id, &id).unwrap(), PdThreshold::AlwaysPd);
    let t0 = pd_threshold(&id, &Matrix::from_diagonal(&[-1.0, 0.0]))
        .unwrap()
        .value();
    assert!((t0 - 1.0).abs() <= 1e-9);
    assert!(pd_threshold(&Matrix::from_diagonal(&[1.0, 0.0]), &id).is_err());
}

#[test]
fn closed_form_examples() {
    let v = expected_min_bivariate(0.0, 0.0, 1.0, 1.0, 0.0).unwrap();
    assert!((v + 1.0 / std::f64::consts::PI.sqrt()).abs() <= 1e-12);
    assert_eq!(
        expected_min_bivariate(2.5, 2.5, 1.0, 1.0, 1.0).unwrap(),
        2.5
    );
    assert!((expected_min_bivariate(-10.0, 10.0, 1.0, 1.0, 0.0).unwrap() + 10.0).abs() < 1e-9);
    assert!(expected_min_bivariate(0.0, 0.0, 1.0, 1.0, 1.5).is_err());
}

#[test]
fn closed_form_matches_monte_carlo() {
    let mut params = ChaCha8Rng::seed_from_u64(2024);
    for set in 0..20u64 {
        let mw = params.random_range(-3.0..3.0);
        let mv = params.random_range(-3.0..3.0);
        let sw: f64 = params.random_range(0.2..3.0);
        let sv: f64 = params.random_range(0.2..3.0);
        let rho: f64 = params.random_range(-0.95..0.95);
        let exact = expected_min_bivariate(mw, mv, sw * sw, sv * sv, rho * sw * sv).unwrap();

        let mut rng = ChaCha8Rng::seed_from_u64(set);
        let n = 1_000_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let z1: f64 = rng.sample(StandardNormal);
            let z2: f64 = rng.sample(StandardNormal);
            let w = mw + sw * z1;
            let v = mv + sv * (rho * z1 + (1.0 - rho * rho).sqrt() * z2);
            let m = w.min(v);
            s += m;
            s2 += m * m;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / (n - 1) as f64).sqrt();
        assert!(
            (mean - exact).abs() <= 4.0 * se,
            "set {set}: {mean} vs {exact} (se {se})"
        );
    }
}
