//! Dataset writers. CSV carries its metadata and the resolved configuration
//! in a `# ` comment header; JSON carries the same content as one object.
//! Both embed enough to re-run the command bit-exactly with `--replay`.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::CliError;

const CONFIG_BEGIN: &str = "# --- config ---";
const CONFIG_END: &str = "# --- end config ---";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}

/// Shortest representation that parses back to the same `f64`.
pub fn fmt_f64(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        }
    } else if x == 0.0 || (1e-4..1e15).contains(&x.abs()) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(i) => i.to_string(),
            Cell::Num(x) => fmt_f64(*x),
            Cell::Text(s) => s.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table {
    pub tool: String,
    pub command: String,
    pub seed: u64,
    /// Ordered `key = value` notes: units, derived quantities, summary numbers.
    pub metadata: Vec<(String, String)>,
    /// The fully resolved run configuration (TOML).
    pub config: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(command: &str, seed: u64, config: String, columns: &[&str]) -> Self {
        Self {
            tool: format!("faraday {}", env!("CARGO_PKG_VERSION")),
            command: command.to_string(),
            seed,
            metadata: Vec::new(),
            config,
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.metadata.push((key.to_string(), value.to_string()));
    }

    pub fn meta_f64(&mut self, key: &str, value: f64) {
        self.meta(key, fmt_f64(value));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# {}", self.tool);
        let _ = writeln!(out, "# command = {}", self.command);
        let _ = writeln!(out, "# seed = {}", self.seed);
        for (k, v) in &self.metadata {
            for (i, line) in v.lines().enumerate() {
                if i == 0 {
                    let _ = writeln!(out, "# {k} = {line}");
                } else {
                    let _ = writeln!(out, "#   {line}");
                }
            }
        }
        let _ = writeln!(out, "{CONFIG_BEGIN}");
        for line in self.config.lines() {
            let _ = writeln!(out, "# {line}");
        }
        let _ = writeln!(out, "{CONFIG_END}");
        let _ = writeln!(out, "{}", self.columns.join(","));
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("table serializes");
        s.push('\n');
        s
    }

    /// Write as JSON when `path` ends in `.json`, CSV otherwise; stdout when
    /// no path is given.
    pub fn write(&self, path: Option<&Path>) -> Result<(), CliError> {
        match path {
            None => {
                print!("{}", self.to_csv());
                Ok(())
            }
            Some(p) => {
                let body = if is_json(p) {
                    self.to_json()
                } else {
                    self.to_csv()
                };
                std::fs::write(p, body).map_err(|e| CliError::Io {
                    path: p.display().to_string(),
                    source: e,
                })
            }
        }
    }
}

fn is_json(p: &Path) -> bool {
    p.extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"))
}

/// Command and resolved config recorded in an earlier output file.
pub struct Recorded {
    pub command: String,
    pub config: String,
}

pub fn read_recorded(path: &Path) -> Result<Recorded, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    if text.trim_start().starts_with('{') {
        let table: Table = serde_json::from_str(&text)
            .map_err(|e| CliError::Parse(format!("{}: {e}", path.display())))?;
        return Ok(Recorded {
            command: table.command,
            config: table.config,
        });
    }
    let mut command = None;
    let mut config = String::new();
    let mut in_config = false;
    for line in text.lines() {
        if !line.starts_with('#') {
            break;
        }
        if line == CONFIG_BEGIN {
            in_config = true;
        } else if line == CONFIG_END {
            in_config = false;
        } else if in_config {
            config.push_str(
                line.strip_prefix("# ")
                    .unwrap_or(line.trim_start_matches('#')),
            );
            config.push('\n');
        } else if let Some(c) = line.strip_prefix("# command = ") {
            command = Some(c.trim().to_string());
        }
    }
    match command {
        Some(command) if !config.is_empty() => Ok(Recorded { command, config }),
        _ => Err(CliError::Parse(format!(
            "{}: no embedded command/config header; not a faraday output file",
            path.display()
        ))),
    }
}
