use serde::Serialize;
use serde_json::Value;
use std::collections::BTreeMap;

/// JSON report; key order is fixed so identical runs give identical bytes.
#[derive(Debug, Serialize)]
pub struct Report {
    pub command: Vec<String>,
    pub model_digest: Option<String>,
    pub seed: u64,
    pub tolerances: BTreeMap<String, f64>,
    pub results: Value,
    pub checks: BTreeMap<String, bool>,
    pub pass: bool,
}

impl Report {
    pub fn new(command: Vec<String>, model_digest: Option<String>, seed: u64) -> Self {
        Self { command, model_digest, seed, tolerances: BTreeMap::new(), results: Value::Null, checks: BTreeMap::new(), pass: true }
    }

    pub fn tolerance(&mut self, name: &str, value: f64) {
        self.tolerances.insert(name.to_string(), value);
    }

    pub fn check(&mut self, name: &str, ok: bool) {
        self.checks.insert(name.to_string(), ok);
        self.pass &= ok;
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}
