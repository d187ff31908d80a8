//! TOML model files.
//!
//! ```toml
//! lattice = false
//!
//! [[components]]
//! name = "u1"
//! kind = "exponential"
//! mean = 1.0
//!
//! [time]
//! constant = 0.0
//! terms = { u1 = 1.0 }
//!
//! [[rewards]]
//! name = "x"
//! terms = { u1 = 2.0 }
//!
//! [delay]
//! mode = "same-as-cycle"   # or "ordinary", or "independent" with its own
//!                          # components / time / rewards tables
//! ```

use std::collections::BTreeMap;

use rrcov::{CycleBuilder, CycleSpec, Delay, ModelSpec, Primitive};
use serde::Deserialize;
use toml::Spanned;

use crate::CliError;

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ModelFile {
    #[serde(default)]
    lattice: bool,
    components: Vec<ComponentDef>,
    time: FormDef,
    rewards: Vec<RewardDef>,
    #[serde(default)]
    delay: Option<DelayDef>,
}

#[derive(Debug, Deserialize)]
struct ComponentDef {
    name: String,
    #[serde(flatten)]
    dist: Primitive,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct FormDef {
    #[serde(default)]
    constant: f64,
    #[serde(default)]
    terms: BTreeMap<Spanned<String>, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RewardDef {
    name: String,
    #[serde(default)]
    constant: f64,
    #[serde(default)]
    terms: BTreeMap<Spanned<String>, f64>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DelayDef {
    mode: DelayMode,
    #[serde(default)]
    components: Vec<ComponentDef>,
    time: Option<FormDef>,
    #[serde(default)]
    rewards: Vec<RewardDef>,
}

#[derive(Debug, Deserialize, PartialEq)]
#[serde(rename_all = "kebab-case")]
enum DelayMode {
    Ordinary,
    SameAsCycle,
    Independent,
}

/// Parses and validates a model file.
pub fn parse_model(text: &str) -> Result<ModelSpec, CliError> {
    let file: ModelFile = toml::from_str(text).map_err(|e| CliError::Parse(e.to_string()))?;
    let line_of = |offset: usize| text[..offset.min(text.len())].matches('\n').count() + 1;

    let (cycle, names) = build_cycle(&file.components, &file.time, &file.rewards, &line_of)?;
    let delay = match file.delay {
        None => Delay::Ordinary,
        Some(d) => match d.mode {
            DelayMode::Ordinary | DelayMode::SameAsCycle => {
                if !d.components.is_empty() || d.time.is_some() || !d.rewards.is_empty() {
                    return Err(CliError::Validation(
                        "delay components/time/rewards are only allowed with mode = \"independent\""
                            .into(),
                    ));
                }
                if d.mode == DelayMode::Ordinary {
                    Delay::Ordinary
                } else {
                    Delay::SameAsCycle
                }
            }
            DelayMode::Independent => {
                let time = d.time.ok_or_else(|| {
                    CliError::Validation("independent delay needs a [delay.time] table".into())
                })?;
                let (spec, delay_names) = build_cycle(&d.components, &time, &d.rewards, &line_of)?;
                if delay_names != names {
                    return Err(CliError::Validation(format!(
                        "delay rewards {delay_names:?} must match cycle rewards {names:?}"
                    )));
                }
                Delay::Independent(spec)
            }
        },
    };
    ModelSpec::new(cycle, names, delay, file.lattice)
        .map_err(|e| CliError::Validation(e.to_string()))
}

fn build_cycle(
    components: &[ComponentDef],
    time: &FormDef,
    rewards: &[RewardDef],
    line_of: &dyn Fn(usize) -> usize,
) -> Result<(CycleSpec, Vec<String>), CliError> {
    let known = |terms: &BTreeMap<Spanned<String>, f64>| -> Result<(), CliError> {
        for key in terms.keys() {
            if !components.iter().any(|c| &c.name == key.get_ref()) {
                return Err(CliError::Validation(format!(
                    "line {}: unknown component `{}`",
                    line_of(key.span().start),
                    key.get_ref()
                )));
            }
        }
        Ok(())
    };
    let plain = |terms: &BTreeMap<Spanned<String>, f64>| -> Vec<(String, f64)> {
        terms
            .iter()
            .map(|(k, v)| (k.get_ref().clone(), *v))
            .collect()
    };

    known(&time.terms)?;
    let mut builder = CycleBuilder::new();
    for c in components {
        builder = builder.component(c.name.clone(), c.dist);
    }
    let tterms = plain(&time.terms);
    let tref: Vec<(&str, f64)> = tterms.iter().map(|(n, c)| (n.as_str(), *c)).collect();
    builder = builder.time(time.constant, &tref);
    for r in rewards {
        known(&r.terms)?;
        let rterms = plain(&r.terms);
        let rref: Vec<(&str, f64)> = rterms.iter().map(|(n, c)| (n.as_str(), *c)).collect();
        builder = builder.reward(r.name.clone(), r.constant, &rref);
    }
    builder
        .build()
        .map_err(|e| CliError::Validation(e.to_string()))
}
