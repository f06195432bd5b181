//! Writing artifacts. Everything except `timing.json` is a pure function of
//! the configuration, so reruns are byte-identical.

use std::path::{Path, PathBuf};
use std::time::Duration;

use lattice_flow::io::fmt_f64;
use lattice_flow::random::RNG_ALGORITHM;
use serde::Serialize;
use serde_json::{json, Value};

use crate::config::SCHEMA_VERSION;
use crate::CliError;

pub const METADATA_FILE: &str = "metadata.json";
pub const TIMING_FILE: &str = "timing.json";
pub const REPORTS_FILE: &str = "reports.json";
pub const TRAJECTORY_FILE: &str = "trajectory.csv";
pub const BLOWUP_FILE: &str = "blowup.json";
pub const GROWTH_FILE: &str = "growth_sweep.json";
pub const KERNEL_FILE: &str = "kernel_sweep.json";

pub fn ensure_dir(dir: &Path) -> Result<(), CliError> {
    std::fs::create_dir_all(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

/// Comma-separated table with round-trip number formatting.
#[derive(Debug, Clone, Default)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<String>,
}

impl Table {
    pub fn new(header: Vec<String>) -> Self {
        Table {
            header,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, values: &[f64], flag: Option<bool>) {
        let mut cells: Vec<String> = values.iter().map(|&x| fmt_f64(x)).collect();
        if let Some(f) = flag {
            cells.push(if f { "1".into() } else { "0".into() });
        }
        self.rows.push(cells.join(","));
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(row);
            out.push('\n');
        }
        out
    }
}

/// Run metadata: configuration echo, seeds, versions and the verdict.
pub fn metadata(command: &str, config: &Value, seeds: Value, passed: bool) -> Value {
    json!({
        "schema_version": SCHEMA_VERSION,
        "tool": "lattice-flow",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "rng": RNG_ALGORITHM,
        "seeds": seeds,
        "config": config,
        "passed": passed,
    })
}

/// Wall time lives in its own file so the rest stays deterministic.
pub fn write_timing(dir: &Path, elapsed: Duration) -> Result<(), CliError> {
    write_json(&dir.join(TIMING_FILE), &json!({ "wall_seconds": elapsed.as_secs_f64() }))
}

pub fn read_json_value(path: &Path) -> Result<Value, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn resolve(base: Option<&Path>, path: &Path) -> PathBuf {
    match base {
        Some(b) if path.is_relative() => b.join(path),
        _ => path.to_path_buf(),
    }
}
