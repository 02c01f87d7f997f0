//! Run reports.

use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

pub const TOOL: &str = "contextua";

#[derive(Debug, Clone, PartialEq)]
pub struct RunReport {
    pub command: String,
    pub scenario_name: String,
    /// SHA-256 of the scenario bytes, hex.
    pub scenario_digest: String,
    pub verdict: String,
    /// Whether the verdict is the negative outcome of the checked property.
    pub negative: bool,
    pub details: Map<String, Value>,
    /// Wall-clock milliseconds per phase, in execution order.
    pub timings: Vec<(String, f64)>,
    /// Graphviz text, for `poset-export`.
    pub dot: Option<String>,
}

pub fn digest(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl RunReport {
    pub fn exit_code(&self) -> i32 {
        if self.negative {
            2
        } else {
            0
        }
    }

    pub fn to_json(&self) -> Value {
        let mut timings = Map::new();
        for (k, v) in &self.timings {
            timings.insert(k.clone(), json!(v));
        }
        json!({
            "tool": TOOL,
            "version": env!("CARGO_PKG_VERSION"),
            "command": self.command,
            "scenario": { "name": self.scenario_name, "digest": self.scenario_digest },
            "verdict": self.verdict,
            "details": Value::Object(self.details.clone()),
            "timings_ms": Value::Object(timings),
        })
    }

    pub fn render_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.to_json()).expect("serialisable");
        s.push('\n');
        s
    }

    pub fn render_text(&self, color: bool) -> String {
        let verdict = if !color {
            self.verdict.clone()
        } else if self.negative {
            format!("\x1b[31m{}\x1b[0m", self.verdict)
        } else {
            format!("\x1b[32m{}\x1b[0m", self.verdict)
        };
        let mut out = format!(
            "{TOOL} {} {}\nscenario: {} (sha256 {})\nverdict: {verdict}\n",
            env!("CARGO_PKG_VERSION"),
            self.command,
            self.scenario_name,
            self.scenario_digest
        );
        for (k, v) in &self.details {
            out.push_str(&format!("  {k}: {}\n", compact(v)));
        }
        for (k, v) in &self.timings {
            out.push_str(&format!("  time {k}: {v:.3} ms\n"));
        }
        out
    }
}

fn compact(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}
