//! Byte-stable report assembly and emission.
//!
//! Reals render at 17 significant digits, exact rationals render
//! symbolically, and JSON objects keep sorted keys, so identical plans
//! produce identical bytes regardless of parallelism. Wall time goes to
//! stderr, never into the report.

use std::collections::BTreeMap;
use std::io::Write;

use serde_json::{json, Value};

use crate::config::{ExperimentPlan, OutputFormat};

/// Render a real at 17 significant digits.
pub fn real17(x: f64) -> String {
    format!("{:.16e}", x)
}

#[derive(Debug, Clone)]
pub struct Report {
    pub plan: BTreeMap<String, String>,
    pub columns: Vec<&'static str>,
    /// Pre-rendered cells, one row per record.
    pub records: Vec<Vec<String>>,
    pub flags: BTreeMap<String, bool>,
}

impl Report {
    pub fn new(plan: &ExperimentPlan, columns: Vec<&'static str>) -> Self {
        let mut echo = BTreeMap::new();
        echo.insert("subcommand".into(), plan.subcommand.name().to_string());
        echo.insert("seed".into(), plan.seed.to_string());
        echo.insert("budget".into(), plan.budget.to_string());
        echo.insert("format".into(), plan.format.name().to_string());
        echo.insert("log_base".into(), plan.log_base.name().to_string());
        for (k, v) in &plan.values {
            if !matches!(k.as_str(), "out" | "format" | "seed" | "budget" | "config") {
                echo.insert(k.clone(), v.clone());
            }
        }
        Report {
            plan: echo,
            columns,
            records: Vec::new(),
            flags: BTreeMap::new(),
        }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.records.push(row);
    }

    pub fn flag(&mut self, name: &str, value: bool) {
        self.flags.insert(name.to_string(), value);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.plan {
            out.push_str(&format!("# plan {k}={v}\n"));
        }
        for (k, v) in &self.flags {
            out.push_str(&format!("# flag {k}={v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.records {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> String {
        let records: Vec<Value> = self
            .records
            .iter()
            .map(|row| {
                let obj: BTreeMap<&str, &str> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(&c, v)| (c, v.as_str()))
                    .collect();
                json!(obj)
            })
            .collect();
        let doc = json!({
            "plan": self.plan,
            "records": records,
            "flags": self.flags,
        });
        let mut text = serde_json::to_string_pretty(&doc).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn render(&self, format: OutputFormat) -> String {
        match format {
            OutputFormat::Csv => self.to_csv(),
            OutputFormat::Json => self.to_json(),
        }
    }
}

/// Write rendered output to a path, `-` meaning stdout. I/O failures are
/// the caller's exit-code-4 case.
pub fn write_output(path: &str, content: &str) -> std::io::Result<()> {
    if path == "-" {
        std::io::stdout().write_all(content.as_bytes())
    } else {
        std::fs::write(path, content)
    }
}
