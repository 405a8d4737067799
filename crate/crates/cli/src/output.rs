//! Output formatting and all-or-nothing file writes.

use std::io::Write;
use std::path::{Path, PathBuf};

use catgate::DensityOperator;
use tempfile::NamedTempFile;

use crate::CliError;

pub fn num(x: f64) -> String {
    format!("{x:.11e}")
}

pub fn csv_row(values: &[f64]) -> String {
    let mut s = values.iter().map(|&v| num(v)).collect::<Vec<_>>().join(",");
    s.push('\n');
    s
}

/// Header line with the dimensions, then one matrix row per line as
/// `re,im` pairs.
pub fn complex_matrix(rho: &DensityOperator) -> String {
    let dims = rho
        .dims()
        .iter()
        .map(|d| d.to_string())
        .collect::<Vec<_>>()
        .join("x");
    let mut s = format!("# dims={dims}\n");
    let m = rho.matrix();
    for r in 0..m.nrows() {
        let row = (0..m.ncols())
            .map(|c| format!("{},{}", num(m[(r, c)].re), num(m[(r, c)].im)))
            .collect::<Vec<_>>()
            .join(",");
        s.push_str(&row);
        s.push('\n');
    }
    s
}

/// Files produced by one command, written together.
#[derive(Debug, Default)]
pub struct Outputs {
    files: Vec<(String, String)>,
}

impl Outputs {
    pub fn add(&mut self, name: &str, contents: String) {
        self.files.push((name.to_string(), contents));
    }

    /// Stages every file as a temporary in `dir` and renames them into place
    /// only once all of them were written.
    pub fn commit(self, dir: &Path) -> Result<Vec<PathBuf>, CliError> {
        let io =
            |what: &str, e: std::io::Error| CliError::Io(format!("{what} {}: {e}", dir.display()));
        std::fs::create_dir_all(dir).map_err(|e| io("cannot create", e))?;
        let mut staged = Vec::with_capacity(self.files.len());
        for (name, contents) in &self.files {
            let mut tmp = NamedTempFile::new_in(dir).map_err(|e| io("cannot write to", e))?;
            tmp.write_all(contents.as_bytes())
                .map_err(|e| io("cannot write to", e))?;
            tmp.as_file()
                .sync_all()
                .map_err(|e| io("cannot write to", e))?;
            staged.push((tmp, dir.join(name)));
        }
        let mut written = Vec::with_capacity(staged.len());
        for (tmp, path) in staged {
            tmp.persist(&path)
                .map_err(|e| io("cannot persist into", e.error))?;
            written.push(path);
        }
        Ok(written)
    }
}
