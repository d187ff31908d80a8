//! Invariant checks behind the `validate` subcommand.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rrcov::asymptotics::{summarize, variance_correction, COV_RATE_FORM_TOL};
use rrcov::model::MAX_JOINT_ORDER;
use rrcov::ModelSpec;

use crate::CliError;

pub const PSD_REL_TOL: f64 = 1e-12;
pub const DIAGONAL_TOL: f64 = 1e-12;
/// Monte Carlo moments must agree with the exact ones within this many
/// standard errors.
pub const MC_SE_BAND: f64 = 4.0;

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &'static str, passed: bool, detail: String) -> Check {
    Check {
        name,
        passed,
        detail,
    }
}

/// Every exponent vector over `(T, X_1..X_L)` with total order in `1..=max`.
pub fn exponent_tuples(l: usize, max: u32) -> Vec<Vec<u32>> {
    let mut out = Vec::new();
    let mut cur = vec![0u32; l + 1];
    fn rec(pos: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if pos == cur.len() {
            if cur.iter().any(|&k| k > 0) {
                out.push(cur.clone());
            }
            return;
        }
        for k in 0..=left {
            cur[pos] = k;
            rec(pos + 1, left - k, cur, out);
        }
        cur[pos] = 0;
    }
    rec(0, max, &mut cur, &mut out);
    out
}

/// Runs every check. Only errors that prevent checking at all are returned
/// as `Err`; failed checks come back with `passed == false`.
pub fn run_checks(spec: &ModelSpec, replications: u64, seed: u64) -> Result<Vec<Check>, CliError> {
    let mut checks = Vec::new();
    let mom = match spec.cycle_moments() {
        Ok(m) => m,
        Err(e) => {
            checks.push(check("moment-invariants", false, e.to_string()));
            return Ok(checks);
        }
    };
    checks.push(check("moment-invariants", true, "ok".into()));

    let s = summarize(&mom)?;
    let l = s.dim();
    checks.push(check(
        "cov-rate-two-forms",
        s.c_form_residual <= COV_RATE_FORM_TOL,
        format!(
            "max residual {:e} (tol {COV_RATE_FORM_TOL:e})",
            s.c_form_residual
        ),
    ));
    checks.push(check(
        "symmetry",
        s.c.is_symmetric() && s.d.is_symmetric() && s.d_ring.is_symmetric(),
        "C, D and D_ring".into(),
    ));
    let min_eig =
        s.c.symmetric_eigenvalues()
            .into_iter()
            .fold(f64::INFINITY, f64::min);
    let floor = -PSD_REL_TOL * s.c.trace().abs();
    checks.push(check(
        "cov-rate-psd",
        min_eig >= floor,
        format!("min eigenvalue {min_eig:e} (floor {floor:e})"),
    ));
    let mut worst = 0.0f64;
    for i in 0..l {
        let direct = variance_correction(&mom, i);
        worst = worst.max((direct - s.d[(i, i)]).abs() / direct.abs().max(1.0));
    }
    checks.push(check(
        "diagonal-reduction",
        worst <= DIAGONAL_TOL,
        format!("max scaled difference {worst:e}"),
    ));
    if spec.is_ordinary() {
        checks.push(check(
            "ordinary-d-equals-d-ring",
            s.d == s.d_ring,
            "bitwise".into(),
        ));
    }
    if replications >= 2 {
        checks.push(monte_carlo_moments(spec, replications, seed)?);
    }
    Ok(checks)
}

/// Compares the sample mean of `T^k0 X_1^k1 ...` with the exact joint moment
/// for every exponent vector of total order at most four.
pub fn monte_carlo_moments(
    spec: &ModelSpec,
    replications: u64,
    seed: u64,
) -> Result<Check, CliError> {
    let l = spec.dim();
    let tuples = exponent_tuples(l, MAX_JOINT_ORDER);
    let mut sum = vec![0.0; tuples.len()];
    let mut sum_sq = vec![0.0; tuples.len()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut powers = vec![[1.0f64; MAX_JOINT_ORDER as usize + 1]; l + 1];
    for _ in 0..replications {
        let (t, x) = spec.sample_cycle(&mut rng);
        for (v, p) in std::iter::once(t).chain(x).zip(powers.iter_mut()) {
            for k in 1..p.len() {
                p[k] = p[k - 1] * v;
            }
        }
        for (idx, tup) in tuples.iter().enumerate() {
            let prod: f64 = tup
                .iter()
                .zip(&powers)
                .map(|(&k, p)| p[k as usize])
                .product();
            sum[idx] += prod;
            sum_sq[idx] += prod * prod;
        }
    }
    let n = replications as f64;
    let mut worst = (0.0f64, Vec::new());
    for (idx, tup) in tuples.iter().enumerate() {
        let exact = spec.joint_moment(tup[0], &tup[1..])?;
        let mean = sum[idx] / n;
        let var = ((sum_sq[idx] - n * mean * mean) / (n - 1.0)).max(0.0);
        let se = (var / n).sqrt();
        let z = if se > 0.0 {
            (mean - exact).abs() / se
        } else if (mean - exact).abs() <= 1e-12 * exact.abs().max(1.0) {
            0.0
        } else {
            f64::INFINITY
        };
        if z > worst.0 || worst.1.is_empty() {
            worst = (z, tup.clone());
        }
    }
    Ok(check(
        "monte-carlo-moments",
        worst.0 <= MC_SE_BAND,
        format!(
            "{} moments, {replications} cycles, worst exponent {:?} at {:.2} SE",
            tuples.len(),
            worst.1,
            worst.0
        ),
    ))
}
