#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rrcov::{CycleBuilder, Delay, ModelSpec, Primitive};

pub type Terms = Vec<(String, f64)>;

/// A small random model described by name, so it can be rebuilt with the
/// components declared in any order.
#[derive(Debug, Clone)]
pub struct RandomModel {
    pub components: Vec<(String, Primitive)>,
    pub time: (f64, Terms),
    pub rewards: Vec<(String, f64, Terms)>,
    pub delay: DelayKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DelayKind {
    Ordinary,
    SameAsCycle,
}

fn primitive(rng: &mut ChaCha8Rng) -> Primitive {
    match rng.random_range(0..4) {
        0 => Primitive::exponential(rng.random_range(0.2..2.0)).unwrap(),
        1 => Primitive::gamma(rng.random_range(0.5..3.0), rng.random_range(0.2..1.5)).unwrap(),
        2 => {
            let lo = rng.random_range(-1.0..1.0);
            Primitive::uniform(lo, lo + rng.random_range(0.1..2.0)).unwrap()
        }
        _ => Primitive::deterministic(rng.random_range(0.1..2.0)).unwrap(),
    }
}

/// Random model with `l` reward coordinates. The first component is always
/// exponential so the cycle time is never degenerate.
pub fn random_model(seed: u64, l: usize, delay: DelayKind) -> RandomModel {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = rng.random_range(2..=5);
    let mut components = vec![(
        "c0".to_string(),
        Primitive::exponential(rng.random_range(0.3..2.0)).unwrap(),
    )];
    for k in 1..n {
        components.push((format!("c{k}"), primitive(&mut rng)));
    }
    let mut tterms = vec![("c0".to_string(), rng.random_range(0.5..2.0))];
    for (name, p) in &components[1..] {
        if p.is_nonnegative() && rng.random_bool(0.5) {
            tterms.push((name.clone(), rng.random_range(0.0..1.5)));
        }
    }
    let time = (rng.random_range(0.0..0.5), tterms);
    let rewards = (0..l)
        .map(|i| {
            let mut terms = Vec::new();
            for (name, _) in &components {
                if rng.random_bool(0.6) {
                    terms.push((name.clone(), rng.random_range(-1.0..2.0)));
                }
            }
            if terms.is_empty() {
                terms.push(("c0".to_string(), rng.random_range(0.5..2.0)));
            }
            (format!("r{i}"), rng.random_range(-0.5..1.0), terms)
        })
        .collect();
    RandomModel {
        components,
        time,
        rewards,
        delay,
    }
}

impl RandomModel {
    pub fn build(&self) -> ModelSpec {
        let order: Vec<usize> = (0..self.components.len()).collect();
        self.build_with_order(&order)
    }

    /// Builds the model declaring components in `order`; terms keep their
    /// original order too, so only internal indices change.
    pub fn build_with_order(&self, order: &[usize]) -> ModelSpec {
        let mut b = CycleBuilder::new();
        for &k in order {
            let (name, p) = &self.components[k];
            b = b.component(name.clone(), *p);
        }
        let tt: Vec<(&str, f64)> = self.time.1.iter().map(|(n, c)| (n.as_str(), *c)).collect();
        b = b.time(self.time.0, &tt);
        for (name, c, terms) in &self.rewards {
            let rt: Vec<(&str, f64)> = terms.iter().map(|(n, c)| (n.as_str(), *c)).collect();
            b = b.reward(name.clone(), *c, &rt);
        }
        let (cycle, names) = b.build().unwrap();
        let delay = match self.delay {
            DelayKind::Ordinary => Delay::Ordinary,
            DelayKind::SameAsCycle => Delay::SameAsCycle,
        };
        ModelSpec::new(cycle, names, delay, false).unwrap()
    }
}

/// The two-reward model with shared exponential components.
pub fn shared_exponential(delay: Delay) -> ModelSpec {
    let e = |m| Primitive::exponential(m).unwrap();
    let (cycle, names) = CycleBuilder::new()
        .component("u1", e(1.0))
        .component("u2", e(1.0))
        .component("u3", e(0.5))
        .component("u4", e(1.0))
        .time(0.0, &[("u1", 1.0), ("u4", 1.0)])
        .reward("x", 0.0, &[("u2", 1.0), ("u4", 1.0)])
        .reward("y", 0.0, &[("u3", 1.0), ("u4", 1.0)])
        .build()
        .unwrap();
    ModelSpec::new(cycle, names, delay, false).unwrap()
}

/// Exponential(1) cycle times with one unit reward per cycle.
pub fn poisson() -> ModelSpec {
    let (cycle, names) = CycleBuilder::new()
        .component("u", Primitive::exponential(1.0).unwrap())
        .time(0.0, &[("u", 1.0)])
        .reward("count", 1.0, &[])
        .build()
        .unwrap();
    ModelSpec::new(cycle, names, Delay::Ordinary, false).unwrap()
}
