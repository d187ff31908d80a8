//! Monte Carlo estimates of `R(t)` on a time grid.
//!
//! Each replication draws one sample path up to the last grid time and reads
//! `R(t)` off it at every grid point, so all grid estimates share paths.
//!
//! Replications are split into blocks of `block_size`. Block `k` draws from
//! ChaCha8 stream `k` under `master_seed`, and block results are merged in
//! block order. The worker count only decides which thread runs a block, so
//! results are bit-identical for any number of workers.

mod accumulator;
mod compare;

pub use accumulator::MomentAccumulator;
pub use compare::{compare, CompareRow, CompareTable};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{ModelSpec, PathSampler};

/// Upper bound on the number of jackknife groups. Blocks are folded into
/// at most this many consecutive groups.
pub const MAX_JACKKNIFE_GROUPS: u64 = 100;

/// Blocks dispatched to the pool at once; bounds memory for tiny blocks.
const DISPATCH_WINDOW: u64 = 1024;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub time_grid: Vec<f64>,
    pub replications: u64,
    pub master_seed: u64,
    pub block_size: u64,
    pub max_cycles_per_path: u64,
    /// Threads used; never affects the result.
    #[serde(skip)]
    pub workers: usize,
}

impl SimConfig {
    pub fn new(time_grid: Vec<f64>, replications: u64, master_seed: u64) -> Self {
        SimConfig {
            time_grid,
            replications,
            master_seed,
            block_size: 10_000,
            max_cycles_per_path: 1_000_000_000,
            workers: std::thread::available_parallelism().map_or(1, |n| n.get()),
        }
    }

    pub fn with_block_size(mut self, block_size: u64) -> Self {
        self.block_size = block_size;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = workers;
        self
    }

    pub fn with_max_cycles(mut self, max_cycles: u64) -> Self {
        self.max_cycles_per_path = max_cycles;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfig(m));
        if self.time_grid.is_empty() {
            return bad("time grid is empty".into());
        }
        if !self.time_grid.iter().all(|t| t.is_finite() && *t > 0.0) {
            return bad("time grid entries must be positive and finite".into());
        }
        if !self.time_grid.windows(2).all(|w| w[0] < w[1]) {
            return bad("time grid must be strictly increasing".into());
        }
        if self.replications < 2 {
            return bad("at least 2 replications are needed for standard errors".into());
        }
        if self.block_size == 0 {
            return bad("block size must be positive".into());
        }
        if self.workers == 0 {
            return bad("worker count must be positive".into());
        }
        if self.max_cycles_per_path == 0 {
            return bad("max cycles per path must be positive".into());
        }
        Ok(())
    }

    pub fn blocks(&self) -> u64 {
        self.replications.div_ceil(self.block_size)
    }
}

/// Estimates at one grid time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimPoint {
    pub t: f64,
    pub replications: u64,
    pub mean: Vec<f64>,
    pub se_mean: Vec<f64>,
    pub cov: Matrix,
    /// Block-jackknife standard errors of the covariance entries.
    pub se_cov: Matrix,
    /// Mean of `min_i R_i(t)` over replications.
    pub min_mean: f64,
    pub se_min: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEstimate {
    pub reward_names: Vec<String>,
    pub jackknife_groups: u64,
    pub points: Vec<SimPoint>,
}

/// Runs the simulation.
pub fn simulate(spec: &ModelSpec, cfg: &SimConfig) -> Result<SimEstimate> {
    cfg.validate()?;
    let dim = spec.dim() + 1;
    let grid_len = cfg.time_grid.len();
    let blocks = cfg.blocks();
    let groups = blocks.min(MAX_JACKKNIFE_GROUPS);
    let group_of = |block: u64| block * groups / blocks;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("cannot start worker pool: {e}")))?;

    let mut group_accs: Vec<Vec<MomentAccumulator>> =
        vec![vec![MomentAccumulator::new(dim); grid_len]; groups as usize];

    let mut start = 0;
    while start < blocks {
        let end = (start + DISPATCH_WINDOW).min(blocks);
        let results: Vec<Result<Vec<MomentAccumulator>>> = pool.install(|| {
            (start..end)
                .into_par_iter()
                .map(|b| run_block(spec, cfg, b))
                .collect()
        });
        for (b, res) in (start..end).zip(results) {
            let block = res?;
            for (acc, part) in group_accs[group_of(b) as usize].iter_mut().zip(&block) {
                acc.merge(part);
            }
        }
        start = end;
    }

    let points = (0..grid_len)
        .map(|g| {
            let per_group: Vec<&MomentAccumulator> = group_accs.iter().map(|v| &v[g]).collect();
            summarize_point(cfg.time_grid[g], spec.dim(), &per_group)
        })
        .collect();

    Ok(SimEstimate {
        reward_names: spec.reward_names().to_vec(),
        jackknife_groups: groups,
        points,
    })
}

fn run_block(spec: &ModelSpec, cfg: &SimConfig, block: u64) -> Result<Vec<MomentAccumulator>> {
    let l = spec.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.master_seed);
    rng.set_stream(block);
    let mut sampler = PathSampler::new(spec);
    let mut accs = vec![MomentAccumulator::new(l + 1); cfg.time_grid.len()];
    let mut scratch = vec![0.0; l];
    let mut state = vec![0.0; l];

    let first = block * cfg.block_size;
    let last = (first + cfg.block_size).min(cfg.replications);
    for replication in first..last {
        walk_path(
            &mut sampler,
            &mut rng,
            &cfg.time_grid,
            cfg.max_cycles_per_path,
            &mut scratch,
            &mut state,
            |g, r| {
                state_with_min(r, &mut accs[g]);
            },
        )
        .map_err(|max_cycles| Error::RunawayPath {
            seed: cfg.master_seed,
            block,
            replication,
            max_cycles,
        })?;
    }
    Ok(accs)
}

fn state_with_min(r: &[f64], acc: &mut MomentAccumulator) {
    let mut buf = [0.0f64; 9];
    let l = r.len();
    if l < buf.len() {
        buf[..l].copy_from_slice(r);
        buf[l] = r.iter().copied().fold(f64::INFINITY, f64::min);
        acc.push(&buf[..=l]);
    } else {
        let mut v = r.to_vec();
        v.push(r.iter().copied().fold(f64::INFINITY, f64::min));
        acc.push(&v);
    }
}

/// Generates one path and calls `record(g, R(grid[g]))` for each grid index
/// in order. Fails with the cycle limit when the path needs more cycles.
fn walk_path<R: rand::Rng + ?Sized>(
    sampler: &mut PathSampler<'_>,
    rng: &mut R,
    grid: &[f64],
    max_cycles: u64,
    cycle_rewards: &mut [f64],
    state: &mut [f64],
    mut record: impl FnMut(usize, &[f64]),
) -> std::result::Result<(), u64> {
    state.iter_mut().for_each(|v| *v = 0.0);
    // S_0 = T_0; the reward of cycle n is credited once S_n <= t.
    let mut arrival = sampler.delay_cycle(rng, cycle_rewards);
    let mut next_grid = 0;
    let mut cycles = 0u64;
    loop {
        while next_grid < grid.len() && grid[next_grid] < arrival {
            record(next_grid, state);
            next_grid += 1;
        }
        if next_grid == grid.len() {
            return Ok(());
        }
        for (s, x) in state.iter_mut().zip(cycle_rewards.iter()) {
            *s += x;
        }
        cycles += 1;
        if cycles > max_cycles {
            return Err(max_cycles);
        }
        arrival += sampler.next_cycle(rng, cycle_rewards);
    }
}

/// Draws a single path and returns `R(t)` at each time of the strictly
/// increasing `grid`.
pub fn sample_path<R: rand::Rng + ?Sized>(
    spec: &ModelSpec,
    rng: &mut R,
    grid: &[f64],
) -> Vec<Vec<f64>> {
    let l = spec.dim();
    let mut sampler = PathSampler::new(spec);
    let mut scratch = vec![0.0; l];
    let mut state = vec![0.0; l];
    let mut out = Vec::with_capacity(grid.len());
    walk_path(
        &mut sampler,
        rng,
        grid,
        u64::MAX,
        &mut scratch,
        &mut state,
        |_, r| out.push(r.to_vec()),
    )
    .expect("no cycle limit");
    out
}

fn summarize_point(t: f64, l: usize, groups: &[&MomentAccumulator]) -> SimPoint {
    let dim = l + 1;
    let n_groups = groups.len();
    // prefix[g] = groups[..g], suffix[g] = groups[g..], both merged in order.
    let mut prefix = Vec::with_capacity(n_groups + 1);
    prefix.push(MomentAccumulator::new(dim));
    for g in groups {
        let mut next = prefix.last().unwrap().clone();
        next.merge(g);
        prefix.push(next);
    }
    let mut suffix = vec![MomentAccumulator::new(dim); n_groups + 1];
    for g in (0..n_groups).rev() {
        let mut acc = groups[g].clone();
        acc.merge(&suffix[g + 1]);
        suffix[g] = acc;
    }
    let total = &prefix[n_groups];
    let leave_out: Vec<MomentAccumulator> = (0..n_groups)
        .map(|g| {
            let mut acc = prefix[g].clone();
            acc.merge(&suffix[g + 1]);
            acc
        })
        .collect();

    let cov = Matrix::symmetric_from_fn(l, |i, j| Ok::<_, Error>(total.covariance(i, j)))
        .expect("infallible");
    let se_cov = Matrix::symmetric_from_fn(l, |i, j| {
        Ok::<_, Error>(jackknife_se(leave_out.iter().map(|a| a.covariance(i, j))))
    })
    .expect("infallible");

    SimPoint {
        t,
        replications: total.count(),
        mean: total.mean()[..l].to_vec(),
        se_mean: (0..l).map(|i| total.standard_error(i)).collect(),
        cov,
        se_cov,
        min_mean: total.mean()[l],
        se_min: total.standard_error(l),
    }
}

/// Delete-one-group jackknife standard error.
fn jackknife_se(estimates: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = estimates.collect();
    let g = v.len();
    if g < 2 {
        return f64::NAN;
    }
    let mean = v.iter().sum::<f64>() / g as f64;
    let ss: f64 = v.iter().map(|x| (x - mean) * (x - mean)).sum();
    (ss * (g - 1) as f64 / g as f64).sqrt()
}
