use std::fmt;
use std::path::{Path, PathBuf};

use extremal_core::{graph::weights_from_json, Graph};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

#[derive(Debug)]
pub enum CliError {
    Core(extremal_core::Error),
    Io { path: PathBuf, source: std::io::Error },
    Usage(String),
    ChecksFailed(usize),
}

impl From<extremal_core::Error> for CliError {
    fn from(e: extremal_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Usage(msg) => f.write_str(msg),
            CliError::ChecksFailed(n) => write!(f, "{n} oracle check(s) failed"),
        }
    }
}

impl CliError {
    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Io { .. } => "io",
            CliError::Usage(_) => "usage",
            CliError::ChecksFailed(_) => "oracle_failed",
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            _ => 1,
        }
    }

    pub fn to_json(&self) -> String {
        json!({"error": {"code": self.code(), "message": self.to_string()}}).to_string()
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Graph JSON, a wrapper object with a `graph` field (as written by
/// `generate`), or an edge list. Edge-list weights are returned when present.
pub fn load_graph(path: &Path) -> Result<(Graph, Option<Vec<f64>>), CliError> {
    let text = read(path)?;
    if !text.trim_start().starts_with('{') {
        return Ok(Graph::from_edge_list(&text)?);
    }
    let value: Value = serde_json::from_str(&text)
        .map_err(|e| extremal_core::Error::Parse(e.to_string()))?;
    let inner = value.get("graph").unwrap_or(&value);
    Ok((Graph::from_json(&inner.to_string())?, None))
}

pub fn load_weights(path: &Path, g: &Graph) -> Result<Vec<f64>, CliError> {
    let w = weights_from_json(&read(path)?)?;
    if w.len() != g.m() {
        return Err(extremal_core::Error::DimensionMismatch { expected: g.m(), got: w.len() }.into());
    }
    Ok(w)
}

/// Weights from `--weights`, else from the edge list, else all ones.
pub fn resolve_weights(g: &Graph, inline: Option<Vec<f64>>, path: Option<&Path>) -> Result<Vec<f64>, CliError> {
    match (path, inline) {
        (Some(p), _) => load_weights(p, g),
        (None, Some(w)) => Ok(w),
        (None, None) => Ok(vec![1.0; g.m()]),
    }
}

pub fn sha256_hex(text: &str) -> String {
    Sha256::digest(text.as_bytes())
        .iter()
        .map(|b| format!("{b:02x}"))
        .collect()
}

#[derive(Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub graph_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights_sha256: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub options: Value,
}

impl Provenance {
    pub fn new(command: &'static str, g: Option<&Graph>, options: Value) -> Self {
        Provenance {
            tool: "extremal",
            version: env!("CARGO_PKG_VERSION"),
            command,
            graph_sha256: g.map(|g| sha256_hex(&g.to_json())),
            weights_sha256: None,
            seed: None,
            options,
        }
    }

    pub fn with_weights(mut self, w: &[f64]) -> Self {
        self.weights_sha256 = Some(sha256_hex(&serde_json::to_string(w).expect("finite weights")));
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }
}

pub fn emit<T: Serialize>(value: &T, out: Option<&Path>) -> Result<(), CliError> {
    let mut text = serde_json::to_string_pretty(value).expect("report serializes");
    text.push('\n');
    write_text(&text, out)
}

pub fn write_text(text: &str, out: Option<&Path>) -> Result<(), CliError> {
    match out {
        Some(path) => std::fs::write(path, text).map_err(|source| CliError::Io {
            path: path.to_path_buf(),
            source,
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// Writes `<prefix>_<name>.csv`.
pub fn write_csv(prefix: &Path, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
    let mut file_name = prefix.file_name().map(|s| s.to_os_string()).unwrap_or_default();
    file_name.push(format!("_{name}.csv"));
    let path = prefix.with_file_name(file_name);
    let io_err = |e: csv::Error| CliError::Io {
        path: path.clone(),
        source: std::io::Error::other(e),
    };
    let mut w = csv::Writer::from_path(&path).map_err(io_err)?;
    w.write_record(header).map_err(io_err)?;
    for row in rows {
        w.write_record(row).map_err(io_err)?;
    }
    w.flush().map_err(|source| CliError::Io { path: path.clone(), source })
}
