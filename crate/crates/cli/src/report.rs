use std::fmt::Write;

use serde_json::{json, Map, Value};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Status {
    Pass,
    Fail,
    Indeterminate,
}

impl Status {
    pub fn as_str(self) -> &'static str {
        match self {
            Status::Pass => "pass",
            Status::Fail => "fail",
            Status::Indeterminate => "indeterminate",
        }
    }
}

/// A command result: resolved config, one table, scalar summary, and the
/// in-run assertions that decide the exit code.
pub struct Report {
    pub command: &'static str,
    pub config: Map<String, Value>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Map<String, Value>,
    pub failures: Vec<String>,
    pub indeterminate: bool,
}

impl Report {
    pub fn new(command: &'static str, config: Map<String, Value>, columns: Vec<&'static str>) -> Self {
        Report { command, config, columns, rows: Vec::new(), summary: Map::new(), failures: Vec::new(), indeterminate: false }
    }

    pub fn summary(&mut self, key: &str, v: impl Into<Value>) {
        self.summary.insert(key.into(), v.into());
    }

    /// Record an assertion; failing ones end up in the failure record.
    pub fn check(&mut self, name: &str, ok: bool) {
        if !ok {
            self.failures.push(name.into());
        }
    }

    pub fn status(&self) -> Status {
        if !self.failures.is_empty() {
            Status::Fail
        } else if self.indeterminate {
            Status::Indeterminate
        } else {
            Status::Pass
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# command={}", self.command);
        for (k, v) in &self.config {
            let _ = writeln!(out, "# config.{k}={}", scalar(v));
        }
        for (k, v) in &self.summary {
            let _ = writeln!(out, "# summary.{k}={}", scalar(v));
        }
        let _ = writeln!(out, "# status={}", self.status().as_str());
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(|v| quote(&scalar(v))).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| Value::Object(self.columns.iter().map(|c| c.to_string()).zip(r.iter().cloned()).collect()))
            .collect();
        json!({
            "command": self.command,
            "config": self.config,
            "summary": self.summary,
            "status": self.status().as_str(),
            "failures": self.failures,
            "rows": rows,
        })
    }

    pub fn render(&self, format: crate::Format) -> String {
        match format {
            crate::Format::Csv => self.to_csv(),
            crate::Format::Json => {
                let mut s = serde_json::to_string_pretty(&self.to_json()).expect("json");
                s.push('\n');
                s
            }
        }
    }
}

fn scalar(v: &Value) -> String {
    match v {
        Value::String(s) => s.clone(),
        Value::Null => String::new(),
        other => other.to_string(),
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
