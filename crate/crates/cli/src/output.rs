//! Atomic file emission and the run manifest.

use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct OutputRecord {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub tool: &'static str,
    pub cli_version: &'static str,
    pub library_version: &'static str,
    pub subcommand: &'a str,
    pub config_sha256: String,
    pub config: &'a serde_json::Value,
    pub outputs: &'a [OutputRecord],
    pub failures: &'a [String],
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub struct OutputDir {
    dir: PathBuf,
    records: Vec<OutputRecord>,
}

impl OutputDir {
    pub fn create(dir: &Path) -> Result<OutputDir, CliError> {
        std::fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        Ok(OutputDir {
            dir: dir.to_path_buf(),
            records: vec![],
        })
    }

    /// Write through a temporary file in the same directory, then rename.
    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        self.write_untracked(name, bytes)?;
        self.records.push(OutputRecord {
            file: name.to_string(),
            bytes: bytes.len(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    fn write_untracked(&self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let target = self.dir.join(name);
        let mut tmp = tempfile::NamedTempFile::new_in(&self.dir).map_err(|e| CliError::io(&self.dir, e))?;
        tmp.write_all(bytes).map_err(|e| CliError::io(tmp.path(), e))?;
        tmp.as_file().sync_all().map_err(|e| CliError::io(tmp.path(), e))?;
        tmp.persist(&target).map_err(|e| CliError::io(&target, e.error))?;
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let mut text = serde_json::to_string_pretty(value).expect("output serializes");
        text.push('\n');
        self.write(name, text.as_bytes())
    }

    pub fn write_csv(&mut self, name: &str, header: &[&str], rows: &[Vec<String>]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let csv_err = |e: csv::Error| CliError::Csv {
            path: name.to_string(),
            message: e.to_string(),
        };
        w.write_record(header).map_err(csv_err)?;
        for r in rows {
            w.write_record(r).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| CliError::Csv {
            path: name.to_string(),
            message: e.to_string(),
        })?;
        self.write(name, &bytes)
    }

    #[cfg(test)]
    pub fn records(&self) -> &[OutputRecord] {
        &self.records
    }

    /// Write `manifest.json`, listing every file written so far.
    pub fn finish(self, subcommand: &str, config: &serde_json::Value, failures: &[String]) -> Result<PathBuf, CliError> {
        let canonical = serde_json::to_vec(config).expect("config serializes");
        let manifest = Manifest {
            tool: "gaitlab",
            cli_version: env!("CARGO_PKG_VERSION"),
            library_version: gaitlab::VERSION,
            subcommand,
            config_sha256: sha256_hex(&canonical),
            config,
            outputs: &self.records,
            failures,
        };
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        self.write_untracked("manifest.json", text.as_bytes())?;
        Ok(self.dir.join("manifest.json"))
    }
}

/// Fixed-precision number for CSV cells; empty for a missing value.
pub fn num(x: Option<f64>, digits: usize) -> String {
    match x {
        Some(v) if v.is_finite() => format!("{:.*}", digits, v + 0.0),
        Some(v) => v.to_string(),
        None => String::new(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_checksums() {
        let dir = tempfile::tempdir().unwrap();
        let mut out = OutputDir::create(dir.path()).unwrap();
        out.write("a.txt", b"abc").unwrap();
        assert_eq!(
            out.records()[0].sha256,
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        assert_eq!(std::fs::read(dir.path().join("a.txt")).unwrap(), b"abc");
        let m = out.finish("test", &serde_json::json!({}), &[]).unwrap();
        let v: serde_json::Value = serde_json::from_slice(&std::fs::read(m).unwrap()).unwrap();
        assert_eq!(v["outputs"][0]["file"], "a.txt");
    }

    #[test]
    fn number_cells() {
        assert_eq!(num(Some(-0.0), 3), "0.000");
        assert_eq!(num(Some(1.23456), 2), "1.23");
        assert_eq!(num(None, 2), "");
    }
}
