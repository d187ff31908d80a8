//! Process specification and exact joint moments.
//!
//! A cycle `(T, X_1, ..., X_L)` is described by affine forms over a shared
//! set of independent primitives. Sharing a primitive between two forms is
//! how cross-coordinate dependence is expressed: `T = U1 + U4` and
//! `X = U2 + U4` are dependent through `U4`.
//!
//! Joint moments `E[T^i X_1^j1 ... X_L^jL]` are computed by expanding the
//! product of forms into monomials over the primitives and factorizing each
//! monomial's expectation across independent components.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::distributions::{Primitive, Sampler};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

/// Highest total order accepted by [`CycleSpec::joint_moment`].
pub const MAX_JOINT_ORDER: u32 = 4;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Component {
    pub name: String,
    pub dist: Primitive,
}

/// `constant + sum(coefficient * component)`, components by index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AffineForm {
    pub constant: f64,
    pub terms: Vec<(usize, f64)>,
}

impl AffineForm {
    pub fn constant(value: f64) -> Self {
        AffineForm {
            constant: value,
            terms: Vec::new(),
        }
    }

    fn eval(&self, draws: &[f64]) -> f64 {
        self.terms
            .iter()
            .fold(self.constant, |acc, &(k, c)| acc + c * draws[k])
    }

    /// True when the form is almost surely zero over `components`.
    fn is_almost_surely_zero(&self, components: &[Component]) -> bool {
        let mut mean = self.constant;
        for &(k, c) in &self.terms {
            if c == 0.0 {
                continue;
            }
            let dist = &components[k].dist;
            if !dist.is_degenerate() {
                return false;
            }
            mean += c * dist.mean();
        }
        mean == 0.0
    }
}

/// One cycle distribution: components plus the time and reward forms.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleSpec {
    components: Vec<Component>,
    time: AffineForm,
    rewards: Vec<AffineForm>,
}

/// How the first cycle `(T0, X0)` is distributed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum Delay {
    /// `T0 = 0` and `X0 = 0`.
    Ordinary,
    /// The first cycle is an independent copy of the regular cycle.
    SameAsCycle,
    /// The first cycle has its own distribution. It must have the same
    /// number of reward coordinates as the regular cycle.
    Independent(CycleSpec),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    cycle: CycleSpec,
    reward_names: Vec<String>,
    delay: Delay,
    lattice: bool,
}

/// Builder for a [`CycleSpec`] that resolves component names.
#[derive(Debug, Default, Clone)]
pub struct CycleBuilder {
    components: Vec<Component>,
    time: Option<(f64, Terms)>,
    rewards: Vec<(String, f64, Terms)>,
}

type Terms = Vec<(String, f64)>;

impl CycleBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn component(mut self, name: impl Into<String>, dist: Primitive) -> Self {
        self.components.push(Component {
            name: name.into(),
            dist,
        });
        self
    }

    pub fn time(mut self, constant: f64, terms: &[(&str, f64)]) -> Self {
        self.time = Some((constant, owned_terms(terms)));
        self
    }

    pub fn reward(mut self, name: impl Into<String>, constant: f64, terms: &[(&str, f64)]) -> Self {
        self.rewards
            .push((name.into(), constant, owned_terms(terms)));
        self
    }

    /// Returns the cycle and the reward names in declaration order.
    pub fn build(self) -> Result<(CycleSpec, Vec<String>)> {
        for (i, c) in self.components.iter().enumerate() {
            c.dist.validate()?;
            if self.components[..i].iter().any(|o| o.name == c.name) {
                return Err(Error::InvalidModel(format!(
                    "component `{}` declared twice",
                    c.name
                )));
            }
        }
        let resolve = |terms: &[(String, f64)]| -> Result<Vec<(usize, f64)>> {
            terms
                .iter()
                .map(|(name, coef)| {
                    let idx = self
                        .components
                        .iter()
                        .position(|c| &c.name == name)
                        .ok_or_else(|| Error::UnknownComponent(name.clone()))?;
                    if !coef.is_finite() {
                        return Err(Error::InvalidModel(format!(
                            "coefficient of `{name}` is not finite"
                        )));
                    }
                    Ok((idx, *coef))
                })
                .collect()
        };
        let (tc, tterms) = self
            .time
            .clone()
            .ok_or_else(|| Error::InvalidModel("missing time form".into()))?;
        let time = AffineForm {
            constant: tc,
            terms: resolve(&tterms)?,
        };
        let mut names = Vec::with_capacity(self.rewards.len());
        let mut rewards = Vec::with_capacity(self.rewards.len());
        for (name, c, terms) in &self.rewards {
            if !c.is_finite() {
                return Err(Error::InvalidModel(format!(
                    "constant of reward `{name}` is not finite"
                )));
            }
            names.push(name.clone());
            rewards.push(AffineForm {
                constant: *c,
                terms: resolve(terms)?,
            });
        }
        let cycle = CycleSpec {
            components: self.components,
            time,
            rewards,
        };
        cycle.check_time_nonnegative()?;
        Ok((cycle, names))
    }
}

fn owned_terms(terms: &[(&str, f64)]) -> Vec<(String, f64)> {
    terms.iter().map(|&(n, c)| (n.to_string(), c)).collect()
}

impl CycleSpec {
    pub fn components(&self) -> &[Component] {
        &self.components
    }

    pub fn time_form(&self) -> &AffineForm {
        &self.time
    }

    pub fn reward_forms(&self) -> &[AffineForm] {
        &self.rewards
    }

    pub fn dim(&self) -> usize {
        self.rewards.len()
    }

    fn check_time_nonnegative(&self) -> Result<()> {
        if self.time.constant.is_nan() || self.time.constant < 0.0 {
            return Err(Error::InvalidModel(format!(
                "time constant must be nonnegative, got {}",
                self.time.constant
            )));
        }
        for &(k, c) in &self.time.terms {
            let comp = &self.components[k];
            if c.is_nan() || c < 0.0 {
                return Err(Error::InvalidModel(format!(
                    "negative time coefficient {c} on component `{}`",
                    comp.name
                )));
            }
            if c > 0.0 && !comp.dist.is_nonnegative() {
                return Err(Error::InvalidModel(format!(
                    "time uses component `{}` whose support is not nonnegative",
                    comp.name
                )));
            }
        }
        Ok(())
    }

    /// Exact `E[T^time_power * prod_c X_c^reward_powers[c]]`.
    ///
    /// The result does not depend on the order in which components were
    /// declared, bit for bit: the expansion's terms are summed in sorted
    /// order.
    pub fn joint_moment(&self, time_power: u32, reward_powers: &[u32]) -> Result<f64> {
        if reward_powers.len() != self.rewards.len() {
            return Err(Error::InvalidInput(format!(
                "expected {} reward powers, got {}",
                self.rewards.len(),
                reward_powers.len()
            )));
        }
        let order = time_power + reward_powers.iter().sum::<u32>();
        if order > MAX_JOINT_ORDER {
            return Err(Error::UnsupportedOrder {
                order,
                max: MAX_JOINT_ORDER,
            });
        }

        let mut factors: Vec<&AffineForm> = Vec::with_capacity(order as usize);
        factors.extend(std::iter::repeat_n(&self.time, time_power as usize));
        for (form, &p) in self.rewards.iter().zip(reward_powers) {
            factors.extend(std::iter::repeat_n(form, p as usize));
        }

        let k = self.components.len();
        // moment_table[c][e] = E[U_c^e]
        let moment_table: Vec<Vec<f64>> = self
            .components
            .iter()
            .map(|c| (0..=order).map(|e| c.dist.raw_moment(e)).collect())
            .collect::<Result<_>>()?;

        let mut exponents = vec![0u32; k];
        let mut contributions = Vec::new();
        expand(
            &factors,
            1.0,
            &mut exponents,
            &moment_table,
            &mut contributions,
        );
        Ok(sorted_sum(contributions))
    }

    /// Draws one cycle into `rewards`, returning its length. `draws` is
    /// scratch space of one slot per component.
    fn sample_into<R: Rng + ?Sized>(
        &self,
        samplers: &[Sampler],
        rng: &mut R,
        draws: &mut [f64],
        rewards: &mut [f64],
    ) -> f64 {
        for (d, s) in draws.iter_mut().zip(samplers) {
            *d = s.sample(rng);
        }
        for (r, form) in rewards.iter_mut().zip(&self.rewards) {
            *r = form.eval(draws);
        }
        // Rounding can push a sum of nonnegative terms below zero only if a
        // coefficient is negative, which validation forbids.
        self.time.eval(draws)
    }

    fn samplers(&self) -> Vec<Sampler> {
        self.components.iter().map(|c| c.dist.sampler()).collect()
    }
}

/// Depth-first walk over one term choice per factor. Every complete choice
/// is a monomial `coef * prod U_c^{e_c}`; its expectation factorizes.
fn expand(
    factors: &[&AffineForm],
    coef: f64,
    exponents: &mut [u32],
    moment_table: &[Vec<f64>],
    out: &mut Vec<f64>,
) {
    let Some((first, rest)) = factors.split_first() else {
        let mut moments: Vec<f64> = exponents
            .iter()
            .enumerate()
            .filter(|(_, &e)| e > 0)
            .map(|(c, &e)| moment_table[c][e as usize])
            .collect();
        moments.sort_by(f64::total_cmp);
        out.push(moments.into_iter().fold(coef, |acc, m| acc * m));
        return;
    };
    if first.constant != 0.0 {
        expand(rest, coef * first.constant, exponents, moment_table, out);
    }
    for &(c, a) in &first.terms {
        if a == 0.0 {
            continue;
        }
        exponents[c] += 1;
        expand(rest, coef * a, exponents, moment_table, out);
        exponents[c] -= 1;
    }
}

/// Order-independent compensated sum.
fn sorted_sum(mut values: Vec<f64>) -> f64 {
    values.sort_by(f64::total_cmp);
    let mut sum = 0.0f64;
    let mut comp = 0.0f64;
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

impl ModelSpec {
    pub fn new(
        cycle: CycleSpec,
        reward_names: Vec<String>,
        delay: Delay,
        lattice: bool,
    ) -> Result<Self> {
        if cycle.rewards.is_empty() {
            return Err(Error::InvalidModel(
                "at least one reward coordinate is required".into(),
            ));
        }
        if reward_names.len() != cycle.rewards.len() {
            return Err(Error::InvalidModel(format!(
                "{} reward names for {} reward forms",
                reward_names.len(),
                cycle.rewards.len()
            )));
        }
        for (i, name) in reward_names.iter().enumerate() {
            if reward_names[..i].contains(name) {
                return Err(Error::InvalidModel(format!(
                    "reward `{name}` declared twice"
                )));
            }
        }
        if cycle.time.is_almost_surely_zero(&cycle.components) {
            return Err(Error::InvalidModel(
                "cycle time is almost surely zero".into(),
            ));
        }
        for (form, name) in cycle.rewards.iter().zip(&reward_names) {
            if form.is_almost_surely_zero(&cycle.components) {
                return Err(Error::InvalidModel(format!(
                    "reward `{name}` is almost surely zero"
                )));
            }
        }
        if let Delay::Independent(d) = &delay {
            if d.rewards.len() != cycle.rewards.len() {
                return Err(Error::InvalidModel(format!(
                    "delay cycle has {} rewards, regular cycle has {}",
                    d.rewards.len(),
                    cycle.rewards.len()
                )));
            }
            d.check_time_nonnegative()?;
        }
        Ok(ModelSpec {
            cycle,
            reward_names,
            delay,
            lattice,
        })
    }

    pub fn cycle(&self) -> &CycleSpec {
        &self.cycle
    }

    pub fn delay(&self) -> &Delay {
        &self.delay
    }

    pub fn reward_names(&self) -> &[String] {
        &self.reward_names
    }

    /// Declared, not inferred. A lattice time distribution violates the
    /// hypotheses of the correction-term results; callers should warn.
    pub fn is_lattice(&self) -> bool {
        self.lattice
    }

    pub fn dim(&self) -> usize {
        self.cycle.dim()
    }

    pub fn is_ordinary(&self) -> bool {
        matches!(self.delay, Delay::Ordinary)
    }

    pub fn joint_moment(&self, time_power: u32, reward_powers: &[u32]) -> Result<f64> {
        self.cycle.joint_moment(time_power, reward_powers)
    }

    /// All moments used by the asymptotic constants.
    pub fn cycle_moments(&self) -> Result<CycleMoments> {
        let mom = CycleMoments::compute(&self.cycle, &self.delay)?;
        mom.check_invariants()?;
        Ok(mom)
    }

    /// Draws one regular cycle.
    pub fn sample_cycle<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, Vec<f64>) {
        let mut sampler = PathSampler::new(self);
        let mut rewards = vec![0.0; self.dim()];
        let t = sampler.next_cycle(rng, &mut rewards);
        (t, rewards)
    }
}

/// Prepared samplers for drawing the delay cycle and then regular cycles.
#[derive(Debug, Clone)]
pub struct PathSampler<'a> {
    cycle: &'a CycleSpec,
    cycle_samplers: Vec<Sampler>,
    delay: Option<(&'a CycleSpec, Vec<Sampler>)>,
    ordinary: bool,
    draws: Vec<f64>,
}

impl<'a> PathSampler<'a> {
    pub fn new(spec: &'a ModelSpec) -> Self {
        let (delay, ordinary) = match &spec.delay {
            Delay::Ordinary => (None, true),
            Delay::SameAsCycle => (None, false),
            Delay::Independent(d) => (Some((d, d.samplers())), false),
        };
        let width = spec
            .cycle
            .components
            .len()
            .max(delay.as_ref().map_or(0, |(d, _)| d.components.len()));
        PathSampler {
            cycle: &spec.cycle,
            cycle_samplers: spec.cycle.samplers(),
            delay,
            ordinary,
            draws: vec![0.0; width],
        }
    }

    /// Draws `(T0, X0)`; ordinary models yield zeros without consuming
    /// randomness.
    pub fn delay_cycle<R: Rng + ?Sized>(&mut self, rng: &mut R, rewards: &mut [f64]) -> f64 {
        if self.ordinary {
            rewards.iter_mut().for_each(|r| *r = 0.0);
            return 0.0;
        }
        match &self.delay {
            Some((d, samplers)) => d.sample_into(samplers, rng, &mut self.draws, rewards),
            None => self
                .cycle
                .sample_into(&self.cycle_samplers, rng, &mut self.draws, rewards),
        }
    }

    #[inline]
    pub fn next_cycle<R: Rng + ?Sized>(&mut self, rng: &mut R, rewards: &mut [f64]) -> f64 {
        self.cycle
            .sample_into(&self.cycle_samplers, rng, &mut self.draws, rewards)
    }
}

/// Joint moments of the regular cycle and the delay cycle.
///
/// Naming follows the moment being taken: `m21[i] = E[T^2 X_i]`,
/// `p111[(i, j)] = E[T X_i X_j]`, and so on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CycleMoments {
    pub mu1: f64,
    pub mu2: f64,
    pub mu3: f64,
    pub lambda1: Vec<f64>,
    pub lambda2: Vec<f64>,
    pub m11: Vec<f64>,
    pub m21: Vec<f64>,
    pub m12: Vec<f64>,
    pub p011: Matrix,
    pub p111: Matrix,
    pub delay: DelayMoments,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DelayMoments {
    pub et0: f64,
    pub et0_sq: f64,
    pub ex0: Vec<f64>,
    pub et0x0: Vec<f64>,
    pub ex0x0: Matrix,
}

impl DelayMoments {
    fn zeros(n: usize) -> Self {
        DelayMoments {
            et0: 0.0,
            et0_sq: 0.0,
            ex0: vec![0.0; n],
            et0x0: vec![0.0; n],
            ex0x0: Matrix::zeros(n),
        }
    }

    fn compute(spec: &CycleSpec) -> Result<Self> {
        let n = spec.dim();
        let unit = |i: usize, p: u32| {
            let mut v = vec![0; n];
            v[i] = p;
            v
        };
        Ok(DelayMoments {
            et0: spec.joint_moment(1, &vec![0; n])?,
            et0_sq: spec.joint_moment(2, &vec![0; n])?,
            ex0: (0..n)
                .map(|i| spec.joint_moment(0, &unit(i, 1)))
                .collect::<Result<_>>()?,
            et0x0: (0..n)
                .map(|i| spec.joint_moment(1, &unit(i, 1)))
                .collect::<Result<_>>()?,
            ex0x0: Matrix::symmetric_from_fn(n, |i, j| spec.joint_moment(0, &pair(n, i, j)))?,
        })
    }

    pub fn var_t0(&self) -> f64 {
        self.et0_sq - self.et0 * self.et0
    }

    pub fn cov_t0_x0(&self, i: usize) -> f64 {
        self.et0x0[i] - self.et0 * self.ex0[i]
    }

    pub fn cov_x0(&self, i: usize, j: usize) -> f64 {
        self.ex0x0[(i, j)] - self.ex0[i] * self.ex0[j]
    }
}

fn pair(n: usize, i: usize, j: usize) -> Vec<u32> {
    let mut v = vec![0; n];
    v[i] += 1;
    v[j] += 1;
    v
}

impl CycleMoments {
    fn compute(cycle: &CycleSpec, delay: &Delay) -> Result<Self> {
        let n = cycle.dim();
        let zero = vec![0; n];
        let unit = |i: usize, p: u32| {
            let mut v = vec![0; n];
            v[i] = p;
            v
        };
        let per_coord = |tp: u32, xp: u32| -> Result<Vec<f64>> {
            (0..n)
                .map(|i| cycle.joint_moment(tp, &unit(i, xp)))
                .collect()
        };
        let mu1 = cycle.joint_moment(1, &zero)?;
        let mu2 = cycle.joint_moment(2, &zero)?;
        let mu3 = cycle.joint_moment(3, &zero)?;
        let lambda1 = per_coord(0, 1)?;
        let lambda2 = per_coord(0, 2)?;
        let m11 = per_coord(1, 1)?;
        let m21 = per_coord(2, 1)?;
        let m12 = per_coord(1, 2)?;
        let p011 = Matrix::symmetric_from_fn(n, |i, j| cycle.joint_moment(0, &pair(n, i, j)))?;
        let p111 = Matrix::symmetric_from_fn(n, |i, j| cycle.joint_moment(1, &pair(n, i, j)))?;
        let delay = match delay {
            Delay::Ordinary => DelayMoments::zeros(n),
            Delay::SameAsCycle => DelayMoments {
                et0: mu1,
                et0_sq: mu2,
                ex0: lambda1.clone(),
                et0x0: m11.clone(),
                ex0x0: p011.clone(),
            },
            Delay::Independent(d) => DelayMoments::compute(d)?,
        };
        Ok(CycleMoments {
            mu1,
            mu2,
            mu3,
            lambda1,
            lambda2,
            m11,
            m21,
            m12,
            p011,
            p111,
            delay,
        })
    }

    pub fn dim(&self) -> usize {
        self.lambda1.len()
    }

    /// Sanity checks that any genuine moment set satisfies. A failure means
    /// the expansion produced garbage.
    pub fn check_invariants(&self) -> Result<()> {
        let tol = |a: f64, b: f64| 1e-9 * a.abs().max(b.abs()).max(1.0);
        let fail = |msg: String| Err(Error::InternalConsistency(msg));
        if self.mu1.is_nan() || self.mu1 <= 0.0 {
            return fail(format!("mean cycle length {} is not positive", self.mu1));
        }
        if self.mu2 < self.mu1 * self.mu1 - tol(self.mu2, self.mu1 * self.mu1) {
            return fail(format!("E T^2 = {} < (E T)^2", self.mu2));
        }
        if !self.mu3.is_finite() {
            return fail("E T^3 is not finite".into());
        }
        let d = &self.delay;
        if d.et0 < 0.0 || d.et0_sq < d.et0 * d.et0 - tol(d.et0_sq, d.et0 * d.et0) {
            return fail(format!(
                "delay moments E T0 = {}, E T0^2 = {}",
                d.et0, d.et0_sq
            ));
        }
        let n = self.dim();
        for i in 0..n {
            let lhs = self.m11[i] * self.m11[i];
            let rhs = self.mu2 * self.lambda2[i];
            if lhs > rhs + tol(lhs, rhs) {
                return fail(format!("Cauchy-Schwarz fails for E T X_{i}"));
            }
            for j in 0..n {
                if self.p011[(i, j)].to_bits() != self.p011[(j, i)].to_bits() {
                    return fail("E X_i X_j is not symmetric".into());
                }
                let lhs = self.p011[(i, j)] * self.p011[(i, j)];
                let rhs = self.lambda2[i] * self.lambda2[j];
                if lhs > rhs + tol(lhs, rhs) {
                    return fail(format!("Cauchy-Schwarz fails for E X_{i} X_{j}"));
                }
            }
        }
        Ok(())
    }
}
