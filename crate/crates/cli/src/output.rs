//! CSV assembly: a commented provenance header (tool version, experiment,
//! config digest, seed) followed by plain comma-separated rows. All floats
//! are written with a fixed 12-digit scientific format so identical inputs
//! produce byte-identical files.

use crate::config::{Config, Experiment};

/// Fixed-format float for CSV cells; total ordering of bytes follows from
/// the deterministic formatting alone.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.12e}")
}

/// A CSV file under construction.
pub struct Csv {
    buffer: String,
    columns: usize,
}

impl Csv {
    /// Start a file: provenance comments, then the column header.
    pub fn new(experiment: Experiment, cfg: &Config, columns: &[&str]) -> Self {
        let mut buffer = String::new();
        buffer.push_str(&format!(
            "# tool_version: {}\n",
            env!("CARGO_PKG_VERSION")
        ));
        buffer.push_str(&format!("# experiment: {}\n", experiment.name()));
        buffer.push_str(&format!("# config_sha256: {}\n", cfg.digest()));
        buffer.push_str(&format!("# seed: {}\n", cfg.seed));
        buffer.push_str(&columns.join(","));
        buffer.push('\n');
        Self {
            buffer,
            columns: columns.len(),
        }
    }

    /// Append one data row; panics on arity mismatch (a programming error,
    /// not an input error).
    pub fn row(&mut self, cells: &[String]) {
        assert_eq!(
            cells.len(),
            self.columns,
            "row arity {} does not match header arity {}",
            cells.len(),
            self.columns
        );
        self.buffer.push_str(&cells.join(","));
        self.buffer.push('\n');
    }

    /// Append a trailing summary comment, e.g. fit coefficients.
    pub fn comment(&mut self, text: &str) {
        self.buffer.push_str("# ");
        self.buffer.push_str(text);
        self.buffer.push('\n');
    }

    pub fn into_string(self) -> String {
        self.buffer
    }
}
