use serde_json::{Map, Value};
use sha2::{Digest, Sha256};

/// Everything needed to reproduce an output: the command, the exact model
/// bytes (by digest) and every resolved setting that affects the numbers.
///
/// The worker count is deliberately absent: it never changes results, and
/// leaving it out keeps outputs byte-identical across machines.
#[derive(Debug, Clone, PartialEq)]
pub struct RunManifest {
    pub command: String,
    pub model_file: String,
    pub model_sha256: String,
    pub settings: Vec<(String, String)>,
    pub version: String,
}

impl RunManifest {
    pub fn new(command: &str, model_file: &str, model_text: &str) -> Self {
        RunManifest {
            command: command.to_string(),
            model_file: model_file.to_string(),
            model_sha256: sha256_hex(model_text.as_bytes()),
            settings: Vec::new(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }

    pub fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.settings.push((key.to_string(), value.to_string()));
        self
    }

    fn entries(&self) -> Vec<(String, String)> {
        let mut e = vec![
            ("tool".to_string(), format!("rrcov {}", self.version)),
            ("command".to_string(), self.command.clone()),
            ("model".to_string(), self.model_file.clone()),
            ("model_sha256".to_string(), self.model_sha256.clone()),
        ];
        e.extend(self.settings.iter().cloned());
        e
    }

    pub fn to_comment_block(&self) -> String {
        self.entries()
            .into_iter()
            .map(|(k, v)| format!("# {k}: {v}\n"))
            .collect()
    }

    pub fn to_json(&self) -> Value {
        let mut m = Map::new();
        for (k, v) in self.entries() {
            m.insert(k, Value::String(v));
        }
        Value::Object(m)
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes)
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}
