//! One function per subcommand. Each returns the data stream (CSV, JSON or
//! a text report) plus diagnostics destined for stderr.

use std::fmt::Write as _;

use rrcov::asymptotics::summarize;
use rrcov::gaussian::{GaussianApprox, PdThreshold};
use rrcov::simulate::{compare, simulate, SimConfig};
use rrcov::{Delay, Matrix, ModelSpec};
use serde_json::{json, Value};

use crate::manifest::RunManifest;
use crate::model_file::parse_model;
use crate::table::{format_number, num_json, Cell, Table};
use crate::validate::run_checks;
use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Csv,
    Json,
    /// Human-readable report; only `analyze` and `validate` have one, the
    /// others fall back to CSV.
    Text,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Toggles {
    pub use_b: bool,
    pub use_d: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunOptions {
    pub grid: Vec<f64>,
    pub replications: u64,
    pub seed: u64,
    /// `None` picks `ceil(replications / 100)`.
    pub block_size: Option<u64>,
    pub max_cycles: u64,
    pub workers: usize,
    pub toggles: Toggles,
    pub format: Format,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            grid: vec![1.0, 2.0, 4.0, 8.0, 16.0, 32.0],
            replications: 1_000_000,
            seed: 1,
            block_size: None,
            max_cycles: 1_000_000_000,
            workers: 1,
            toggles: Toggles {
                use_b: true,
                use_d: true,
            },
            format: Format::Csv,
        }
    }
}

impl RunOptions {
    pub fn sim_config(&self) -> SimConfig {
        let block = self
            .block_size
            .unwrap_or_else(|| self.replications.div_ceil(100).max(1));
        SimConfig::new(self.grid.clone(), self.replications, self.seed)
            .with_block_size(block)
            .with_max_cycles(self.max_cycles)
            .with_workers(self.workers)
    }

    fn record_sim(&self, m: &mut RunManifest) {
        let cfg = self.sim_config();
        m.set("grid", join(&self.grid))
            .set("replications", cfg.replications)
            .set("seed", cfg.master_seed)
            .set("block_size", cfg.block_size)
            .set("max_cycles_per_path", cfg.max_cycles_per_path);
    }
}

/// A model file already read into memory.
#[derive(Debug, Clone)]
pub struct ModelInput {
    pub name: String,
    pub text: String,
}

#[derive(Debug, Clone, Default)]
pub struct Output {
    pub body: String,
    pub diagnostics: Vec<String>,
}

fn join(v: &[f64]) -> String {
    v.iter()
        .map(|x| format_number(*x))
        .collect::<Vec<_>>()
        .join(",")
}

fn load(model: &ModelInput) -> Result<(ModelSpec, Vec<String>), CliError> {
    let spec = parse_model(&model.text)?;
    let mut diagnostics = Vec::new();
    if spec.is_lattice() {
        diagnostics.push(
            "warning: the cycle-time distribution is declared lattice; the constant \
             correction terms b and D assume a spread-out distribution and may not describe \
             this model"
                .to_string(),
        );
    }
    Ok((spec, diagnostics))
}

fn render(table: &Table, manifest: &RunManifest, format: Format) -> String {
    match format {
        Format::Json => table.to_json(manifest),
        Format::Csv | Format::Text => table.to_csv(manifest),
    }
}

fn threshold_text(th: Option<PdThreshold>) -> String {
    match th {
        Some(PdThreshold::AlwaysPd) => "always-pd".into(),
        Some(PdThreshold::Above(t0)) => format_number(t0),
        None => "undefined (C is singular)".into(),
    }
}

fn delay_name(spec: &ModelSpec) -> &'static str {
    match spec.delay() {
        Delay::Ordinary => "ordinary",
        Delay::SameAsCycle => "same-as-cycle",
        Delay::Independent(_) => "independent",
    }
}

/// `analyze`: every asymptotic constant of the model.
pub fn analyze(model: &ModelInput, format: Format) -> Result<Output, CliError> {
    let (spec, diagnostics) = load(model)?;
    let summary = summarize(&spec.cycle_moments()?)?;
    let approx = GaussianApprox::new(&summary);
    let names = spec.reward_names();
    let manifest = RunManifest::new("analyze", &model.name, &model.text);

    let vectors: [(&str, &Vec<f64>); 4] = [
        ("a", &summary.a),
        ("b", &summary.b),
        ("b_ring", &summary.b_ring),
        ("ell", &summary.ell),
    ];
    let matrices: [(&str, &Matrix); 5] = [
        ("a_pair", &summary.a_pair),
        ("b_ring_pair", &summary.b_ring_pair),
        ("C", &summary.c),
        ("D_ring", &summary.d_ring),
        ("D", &summary.d),
    ];

    let body = match format {
        Format::Text => {
            let mut s = String::new();
            let _ = writeln!(
                s,
                "model {} ({} reward coordinates: {}; delay: {})",
                model.name,
                names.len(),
                names.join(", "),
                delay_name(&spec)
            );
            for (label, v) in vectors {
                let _ = writeln!(s, "{label:<12}= [{}]", join(v));
            }
            for (label, m) in matrices {
                let rows: Vec<String> = m.rows().iter().map(|r| format!("[{}]", join(r))).collect();
                let _ = writeln!(s, "{label:<12}= [{}]", rows.join(", "));
            }
            let _ = writeln!(s, "{:<12}= {}", "t0", threshold_text(approx.threshold));
            let _ = writeln!(
                s,
                "{:<12}= {}",
                "c_residual",
                format_number(summary.c_form_residual)
            );
            s
        }
        Format::Csv => {
            let mut t = Table::new(vec![
                "quantity".into(),
                "i".into(),
                "j".into(),
                "value".into(),
            ]);
            for (label, v) in vectors {
                for (i, x) in v.iter().enumerate() {
                    t.push(vec![
                        Cell::Text(label.into()),
                        Cell::Text(names[i].clone()),
                        Cell::Missing,
                        Cell::Num(*x),
                    ]);
                }
            }
            for (label, m) in matrices {
                for i in 0..m.dim() {
                    for j in 0..m.dim() {
                        t.push(vec![
                            Cell::Text(label.into()),
                            Cell::Text(names[i].clone()),
                            Cell::Text(names[j].clone()),
                            Cell::Num(m[(i, j)]),
                        ]);
                    }
                }
            }
            let t0 = match approx.threshold {
                Some(th) => Cell::Num(th.value()),
                None => Cell::Missing,
            };
            t.push(vec![
                Cell::Text("t0".into()),
                Cell::Missing,
                Cell::Missing,
                t0,
            ]);
            t.push(vec![
                Cell::Text("c_residual".into()),
                Cell::Missing,
                Cell::Missing,
                Cell::Num(summary.c_form_residual),
            ]);
            t.to_csv(&manifest)
        }
        Format::Json => {
            let vec_json = |v: &Vec<f64>| Value::Array(v.iter().map(|x| num_json(*x)).collect());
            let mat_json = |m: &Matrix| Value::Array(m.rows().iter().map(vec_json).collect());
            let mut doc = json!({
                "manifest": manifest.to_json(),
                "rewards": names,
                "delay": delay_name(&spec),
                "t0": match approx.threshold {
                    Some(PdThreshold::AlwaysPd) => json!("always-pd"),
                    Some(PdThreshold::Above(t0)) => num_json(t0),
                    None => Value::Null,
                },
                "c_residual": num_json(summary.c_form_residual),
            });
            for (label, v) in vectors {
                doc[label] = vec_json(v);
            }
            for (label, m) in matrices {
                doc[label] = mat_json(m);
            }
            let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
            s.push('\n');
            s
        }
    };
    Ok(Output { body, diagnostics })
}

/// `approx`: Gaussian parameters and approximate expected minimum per time.
pub fn approx(model: &ModelInput, opts: &RunOptions) -> Result<Output, CliError> {
    let (spec, mut diagnostics) = load(model)?;
    let summary = summarize(&spec.cycle_moments()?)?;
    let g = GaussianApprox::new(&summary);
    let names = spec.reward_names();
    let l = names.len();
    let Toggles { use_b, use_d } = opts.toggles;

    let mut columns: Vec<String> = vec!["t".into()];
    columns.extend(names.iter().map(|n| format!("mean_{n}")));
    for i in 0..l {
        for j in i..l {
            columns.push(format!("cov_{}_{}", names[i], names[j]));
        }
    }
    if l == 2 {
        columns.push("m_tilde".into());
    } else {
        diagnostics.push(format!(
            "note: m_tilde needs exactly 2 reward coordinates; this model has {l}"
        ));
    }
    columns.push("status".into());

    let mut table = Table::new(columns);
    for &t in &opts.grid {
        let mut row = vec![Cell::Num(t)];
        match g.params_at(t, use_b, use_d) {
            Ok(p) => {
                row.extend(p.mean.iter().map(|&m| Cell::Num(m)));
                for i in 0..l {
                    for j in i..l {
                        row.push(Cell::Num(p.cov[(i, j)]));
                    }
                }
                if l == 2 {
                    row.push(Cell::Num(g.expected_min(t, use_b, use_d)?));
                }
                row.push(Cell::Text("ok".into()));
            }
            Err(rrcov::Error::NotPositiveDefinite { .. }) => {
                let mean = g.params_at(t, use_b, false)?.mean;
                row.extend(mean.iter().map(|&m| Cell::Num(m)));
                row.extend(std::iter::repeat_n(Cell::Missing, l * (l + 1) / 2));
                if l == 2 {
                    row.push(Cell::Missing);
                }
                row.push(Cell::Text("pd-violation".into()));
            }
            Err(e) => return Err(e.into()),
        }
        table.push(row);
    }
    if use_d {
        diagnostics.push(format!(
            "C t + D is positive definite for t > t0 = {}",
            threshold_text(g.threshold)
        ));
    }

    let mut manifest = RunManifest::new("approx", &model.name, &model.text);
    manifest
        .set("grid", join(&opts.grid))
        .set("use_b", use_b)
        .set("use_D", use_d);
    Ok(Output {
        body: render(&table, &manifest, opts.format),
        diagnostics,
    })
}

/// `simulate`: Monte Carlo means, covariances and expected minimum.
pub fn simulate_cmd(model: &ModelInput, opts: &RunOptions) -> Result<Output, CliError> {
    let (spec, mut diagnostics) = load(model)?;
    let cfg = opts.sim_config();
    let est = simulate(&spec, &cfg)?;
    let names = &est.reward_names;
    let l = names.len();

    let mut columns: Vec<String> = vec!["t".into(), "replications".into()];
    for n in names {
        columns.push(format!("mean_{n}"));
        columns.push(format!("se_mean_{n}"));
    }
    for i in 0..l {
        for j in i..l {
            columns.push(format!("cov_{}_{}", names[i], names[j]));
            columns.push(format!("se_cov_{}_{}", names[i], names[j]));
        }
    }
    columns.push("min_mean".into());
    columns.push("se_min".into());

    let mut table = Table::new(columns);
    for p in &est.points {
        let mut row = vec![Cell::Num(p.t), Cell::Int(p.replications)];
        for i in 0..l {
            row.push(Cell::Num(p.mean[i]));
            row.push(Cell::Num(p.se_mean[i]));
        }
        for i in 0..l {
            for j in i..l {
                row.push(Cell::Num(p.cov[(i, j)]));
                row.push(Cell::Num(p.se_cov[(i, j)]));
            }
        }
        row.push(Cell::Num(p.min_mean));
        row.push(Cell::Num(p.se_min));
        table.push(row);
    }
    if est.jackknife_groups < 2 {
        diagnostics.push(
            "warning: fewer than 2 seed blocks; covariance standard errors are undefined".into(),
        );
    }
    let mut manifest = RunManifest::new("simulate", &model.name, &model.text);
    opts.record_sim(&mut manifest);
    Ok(Output {
        body: render(&table, &manifest, opts.format),
        diagnostics,
    })
}

/// `compare`: approximation error with and without `D` against simulation.
pub fn compare_cmd(model: &ModelInput, opts: &RunOptions) -> Result<Output, CliError> {
    let (spec, mut diagnostics) = load(model)?;
    let cfg = opts.sim_config();
    let use_b = opts.toggles.use_b;
    let cmp = compare(&spec, &cfg, use_b)?;
    let mut table = Table::new(
        ["t", "m_hat", "se_m_hat", "err_no_D", "err_with_D"]
            .map(String::from)
            .to_vec(),
    );
    for r in &cmp.rows {
        table.push(vec![
            Cell::Num(r.t),
            Cell::Num(r.m_hat),
            Cell::Num(r.se_m_hat),
            Cell::Num(r.err_plain),
            r.err_refined.into(),
        ]);
    }
    diagnostics.push(format!(
        "C t + D is positive definite for t > t0 = {}; err_with_D is empty at or below it",
        threshold_text(cmp.threshold)
    ));
    let mut manifest = RunManifest::new("compare", &model.name, &model.text);
    opts.record_sim(&mut manifest);
    manifest.set("use_b", use_b);
    Ok(Output {
        body: render(&table, &manifest, opts.format),
        diagnostics,
    })
}

/// `validate`: runs the invariant checks; fails if any check fails.
pub fn validate_cmd(model: &ModelInput, opts: &RunOptions) -> Result<Output, CliError> {
    let (spec, diagnostics) = load(model)?;
    let checks = run_checks(&spec, opts.replications, opts.seed)?;
    let mut body = String::new();
    for c in &checks {
        let _ = writeln!(
            body,
            "{} {:<28} {}",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.detail
        );
    }
    let failed: Vec<&str> = checks
        .iter()
        .filter(|c| !c.passed)
        .map(|c| c.name)
        .collect();
    if !failed.is_empty() {
        return Err(CliError::Invariant(format!(
            "{}\n{} check(s) failed: {}",
            body.trim_end(),
            failed.len(),
            failed.join(", ")
        )));
    }
    Ok(Output { body, diagnostics })
}
