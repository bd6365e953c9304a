//! Command implementations behind the `capdist` binary.
//!
//! Exit codes: 0 ok, 1 verification failure, 2 bad argument, 3 grid cap
//! exceeded, 4 I/O error, 5 schema violation in an input file.

pub mod commands;
pub mod verify;

use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("verification failed: {0}")]
    VerifyFailed(String),
    #[error("invalid argument: {0}")]
    BadArg(String),
    #[error("{0}")]
    GridCap(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("schema violation at {0}")]
    Schema(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::VerifyFailed(_) => 1,
            CliError::BadArg(_) => 2,
            CliError::GridCap(_) => 3,
            CliError::Io { .. } => 4,
            CliError::Schema(_) => 5,
        }
    }

    pub fn io(path: &Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<capdist::Error> for CliError {
    fn from(e: capdist::Error) -> Self {
        use capdist::Error as E;
        match e {
            E::GridCap { .. } => CliError::GridCap(e.to_string()),
            E::Schema { .. } | E::Cardinality { .. } => CliError::Schema(e.to_string()),
            other => CliError::BadArg(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Nine significant digits, plain decimal notation.
pub fn format_num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let sci = format!("{:.8e}", x);
    let exp: i32 = sci[sci.find('e').unwrap() + 1..].parse().unwrap();
    let decimals = (8 - exp).max(0) as usize;
    format!("{:.*}", decimals, x)
}

/// Provenance written next to every output file as `<file>.manifest.json`.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub parameters: Value,
    pub grid: Option<Value>,
    pub version: String,
    pub wall_time_s: f64,
    pub outputs: Vec<String>,
}

impl RunManifest {
    pub fn path_for(out: &Path) -> PathBuf {
        let mut s = out.as_os_str().to_owned();
        s.push(".manifest.json");
        PathBuf::from(s)
    }
}

pub fn write_file(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::io(path, e))
}

/// Writes `contents` to `out` and its manifest beside it.
pub fn write_with_manifest(out: &Path, contents: &str, mut manifest: RunManifest) -> CliResult<()> {
    write_file(out, contents)?;
    manifest.outputs = vec![out.display().to_string()];
    let m = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    write_file(&RunManifest::path_for(out), &(m + "\n"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nine_significant_digits() {
        assert_eq!(format_num(1.5822038214981346), "1.58220382");
        assert_eq!(format_num(0.126), "0.126000000");
        assert_eq!(format_num(0.0), "0");
        assert_eq!(format_num(1.5), "1.50000000");
        assert_eq!(format_num(9.9999999999), "10.0000000");
        assert_eq!(format_num(-0.05), "-0.0500000000");
        assert_eq!(format_num(123456789012.0), "123456789012");
    }

    #[test]
    fn exit_codes() {
        let e: CliError = capdist::Error::GridCap { cells: 10, cap: 1 }.into();
        assert_eq!(e.exit_code(), 3);
        let e: CliError = capdist::Error::Cardinality {
            name: "T",
            size: 8,
            max: 7,
        }
        .into();
        assert_eq!(e.exit_code(), 5);
        let e: CliError = capdist::Error::Domain { what: "ps", value: 2.0 }.into();
        assert_eq!(e.exit_code(), 2);
    }

    #[test]
    fn manifest_path() {
        assert_eq!(
            RunManifest::path_for(Path::new("/tmp/a.csv")),
            PathBuf::from("/tmp/a.csv.manifest.json")
        );
    }
}
