//! Buffered output files.
//!
//! Every command renders its files into memory first and writes them only
//! after all computation succeeded, so a failing run leaves nothing behind.

use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::error::CliError;

/// Shortest representation that parses back to the same bits.
pub fn real(x: f64) -> String {
    format!("{x:?}")
}

pub fn optional_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

/// A CSV table with a fixed header.
pub struct Table {
    writer: csv::Writer<Vec<u8>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Result<Self, CliError> {
        let mut writer = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(Vec::new());
        writer.write_record(header).map_err(render)?;
        Ok(Self { writer })
    }

    pub fn row<I, S>(&mut self, fields: I) -> Result<(), CliError>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<[u8]>,
    {
        self.writer.write_record(fields).map_err(render)
    }

    pub fn into_bytes(self) -> Result<Vec<u8>, CliError> {
        self.writer
            .into_inner()
            .map_err(|e| CliError::Runtime(e.to_string()))
    }
}

fn render(e: csv::Error) -> CliError {
    CliError::Runtime(format!("csv: {e}"))
}

pub fn json<T: Serialize>(value: &T) -> Result<Vec<u8>, CliError> {
    let mut bytes =
        serde_json::to_vec_pretty(value).map_err(|e| CliError::Runtime(format!("json: {e}")))?;
    bytes.push(b'\n');
    Ok(bytes)
}

/// Files to be written into the output directory.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(String, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn write(self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let mut written = Vec::with_capacity(self.files.len());
        for (name, bytes) in self.files {
            let path = dir.join(name);
            std::fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
            written.push(path);
        }
        Ok(written)
    }
}

/// Fails unless `dir` is an existing directory.
pub fn require_dir(dir: &Path) -> Result<(), CliError> {
    if dir.is_dir() {
        Ok(())
    } else {
        Err(CliError::Io(format!(
            "output directory {} does not exist",
            dir.display()
        )))
    }
}
