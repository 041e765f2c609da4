use std::collections::BTreeMap;

use hmin_core::gallery::Check;
use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::spec::Numeric;

/// Machine-readable result of one command.
#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    /// SHA-256 over the command line settings and every input file.
    pub inputs_digest: String,
    pub subject: String,
    pub numeric: Numeric,
    pub checks: Vec<Check>,
    pub info: BTreeMap<String, Value>,
    /// Files written next to the report.
    pub outputs: Vec<String>,
    pub pass: bool,
    pub wall_time_s: f64,
}

impl Report {
    pub fn new(command: &str, subject: impl Into<String>, numeric: Numeric) -> Self {
        Self {
            command: command.into(),
            inputs_digest: String::new(),
            subject: subject.into(),
            numeric,
            checks: Vec::new(),
            info: BTreeMap::new(),
            outputs: Vec::new(),
            pass: true,
            wall_time_s: 0.0,
        }
    }

    pub fn check(&mut self, c: Check) {
        self.checks.push(c);
    }

    pub fn info(&mut self, key: &str, v: impl Serialize) {
        self.info.insert(key.into(), serde_json::to_value(v).unwrap_or(Value::Null));
    }

    pub fn finish(&mut self) {
        self.pass = self.checks.iter().all(|c| c.pass);
    }
}

/// Incremental inputs digest. Each part is length-prefixed so that
/// different splits of the same bytes hash differently.
#[derive(Default)]
pub struct InputsDigest(Sha256);

impl InputsDigest {
    pub fn add(&mut self, label: &str, bytes: &[u8]) {
        for part in [label.as_bytes(), bytes] {
            self.0.update((part.len() as u64).to_le_bytes());
            self.0.update(part);
        }
    }

    pub fn hex(self) -> String {
        hex::encode(self.0.finalize())
    }
}
