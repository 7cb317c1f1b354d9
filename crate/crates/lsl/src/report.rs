//! Machine-readable run reports: input hashing, deterministic JSON
//! serialization, and timing normalization for byte-identical bundles.

use serde::Serialize;
use sha2::{Digest, Sha256};
use std::collections::BTreeMap;
use std::path::Path;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(bytes);
    let out = h.finalize();
    out.iter().map(|b| format!("{b:02x}")).collect()
}

/// Report wrapper every command emits: command line, input hashes, a
/// command-specific payload, wall-clock timing, and the tool version.
/// Reports are deterministic given identical inputs once the timing field
/// is normalized (see [`normalized_json`]).
#[derive(Debug, Clone, Serialize)]
pub struct RunReport<T: Serialize> {
    pub command: String,
    pub version: String,
    pub seed: u64,
    pub inputs: BTreeMap<String, String>,
    pub payload: T,
    pub timing_ms: u128,
}

impl<T: Serialize> RunReport<T> {
    pub fn new(command: &str, payload: T) -> Self {
        RunReport {
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            seed: crate::expr::eval::lsl_seed(),
            inputs: BTreeMap::new(),
            payload,
            timing_ms: 0,
        }
    }

    pub fn with_input(mut self, name: &str, content: &[u8]) -> Self {
        self.inputs.insert(name.to_string(), sha256_hex(content));
        self
    }

    pub fn with_input_file(mut self, path: &Path) -> std::io::Result<Self> {
        let bytes = std::fs::read(path)?;
        self.inputs
            .insert(path.display().to_string(), sha256_hex(&bytes));
        Ok(self)
    }

    pub fn with_timing(mut self, elapsed: std::time::Duration) -> Self {
        self.timing_ms = elapsed.as_millis();
        self
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// JSON with every `timing_ms` field zeroed, recursively: the normalized
/// form two runs of the same command must agree on byte-for-byte.
pub fn normalized_json(json: &str) -> String {
    let mut v: serde_json::Value = serde_json::from_str(json).expect("valid report JSON");
    zero_timings(&mut v);
    serde_json::to_string_pretty(&v).expect("normalized report serializes")
}

fn zero_timings(v: &mut serde_json::Value) {
    match v {
        serde_json::Value::Object(map) => {
            for (k, val) in map.iter_mut() {
                if k == "timing_ms" {
                    *val = serde_json::Value::from(0u64);
                } else {
                    zero_timings(val);
                }
            }
        }
        serde_json::Value::Array(items) => items.iter_mut().for_each(zero_timings),
        _ => {}
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn timing_normalization_erases_the_only_nondeterminism() {
        let mut a = RunReport::new("demo", vec![1, 2, 3]);
        let mut b = RunReport::new("demo", vec![1, 2, 3]);
        a.timing_ms = 17;
        b.timing_ms = 912;
        assert_ne!(a.to_json(), b.to_json());
        assert_eq!(normalized_json(&a.to_json()), normalized_json(&b.to_json()));
    }

    #[test]
    fn hashing_is_stable() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }
}
