//! Report envelope, input digests and the plain-text rendering.

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

pub const REPORT_SCHEMA: &str = "uncertain-objectives/report/v1";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// The analysis found a violation, a cycle or an infeasibility.
    Violation,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Report {
    #[serde(rename = "$schema")]
    pub schema: &'static str,
    pub command: String,
    pub version: &'static str,
    pub inputs_digest: String,
    pub settings: Value,
    pub status: Status,
    pub findings: Value,
}

impl Report {
    pub fn new(command: &str, inputs: &[&[u8]], settings: Value, status: Status, findings: Value) -> Self {
        Report {
            schema: REPORT_SCHEMA,
            command: command.to_string(),
            version: env!("CARGO_PKG_VERSION"),
            inputs_digest: digest(command, inputs, &settings),
            settings,
            status,
            findings,
        }
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("reports serialize");
        s.push('\n');
        s
    }

    pub fn to_text(&self) -> String {
        let mut out = format!(
            "{} ({}), status {}\ninputs {}\n",
            self.command,
            self.version,
            match self.status {
                Status::Ok => "ok",
                Status::Violation => "violation",
            },
            self.inputs_digest
        );
        render(&mut out, "settings", &self.settings);
        render(&mut out, "", &self.findings);
        out
    }
}

/// SHA-256 over the command, each input document and the settings.
fn digest(command: &str, inputs: &[&[u8]], settings: &Value) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    for input in inputs {
        h.update([0u8]);
        h.update((input.len() as u64).to_le_bytes());
        h.update(input);
    }
    h.update([0u8]);
    h.update(settings.to_string().as_bytes());
    format!("sha256:{}", hex::encode(h.finalize()))
}

fn render(out: &mut String, prefix: &str, v: &Value) {
    match v {
        Value::Object(map) => {
            for (k, child) in map {
                let key = if prefix.is_empty() {
                    k.clone()
                } else {
                    format!("{prefix}.{k}")
                };
                render(out, &key, child);
            }
        }
        Value::Array(items) if items.iter().all(|i| !i.is_object() && !i.is_array()) => {
            let parts: Vec<String> = items.iter().map(scalar).collect();
            out.push_str(&format!("{prefix}: [{}]\n", parts.join(", ")));
        }
        Value::Array(items) => {
            for (i, child) in items.iter().enumerate() {
                render(out, &format!("{prefix}[{i}]"), child);
            }
        }
        other => out.push_str(&format!("{prefix}: {}\n", scalar(other))),
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    #[test]
    fn digest_depends_on_every_input() {
        let a = Report::new("x", &[b"one"], json!({"k": 1}), Status::Ok, json!({}));
        let b = Report::new("x", &[b"one"], json!({"k": 2}), Status::Ok, json!({}));
        let c = Report::new("x", &[b"on", b"e"], json!({"k": 1}), Status::Ok, json!({}));
        assert_ne!(a.inputs_digest, b.inputs_digest);
        assert_ne!(a.inputs_digest, c.inputs_digest);
        assert_eq!(a, Report::new("x", &[b"one"], json!({"k": 1}), Status::Ok, json!({})));
    }

    #[test]
    fn text_flattens_nested_findings() {
        let r = Report::new(
            "bound",
            &[],
            json!({"cap": 7}),
            Status::Ok,
            json!({"bound": "1/3", "orders": [["a", "b"], ["b", "a"]]}),
        );
        let text = r.to_text();
        assert!(text.contains("bound: 1/3\n"));
        assert!(text.contains("orders[1]: [b, a]\n"));
        assert!(text.contains("settings.cap: 7\n"));
    }
}
