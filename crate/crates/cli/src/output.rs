//! Output artifacts: CSV series with provenance headers, the JSON run
//! summary, and binary field snapshots.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use ymlab::diagnostics::DiagnosticsReport;
use ymlab::error::{Error, Result};
use ymlab::field::FormField;
use ymlab::Real;

/// Everything a scenario needs to place its artifacts.
pub struct OutputContext<'a> {
    pub dir: &'a Path,
    pub config_hash: &'a str,
    pub seed: u64,
    pub snapshot_every: usize,
}

impl OutputContext<'_> {
    /// Open a CSV file with the provenance header and column line.
    pub fn csv(&self, name: &str, columns: &str) -> Result<BufWriter<File>> {
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        writeln!(w, "# config_hash = {}", self.config_hash)?;
        writeln!(w, "# seed = {}", self.seed)?;
        writeln!(w, "{columns}")?;
        Ok(w)
    }

    /// Write the JSON summary: run metadata plus the verdict report.
    pub fn summary(
        &self,
        name: &str,
        scenario: &str,
        report: &DiagnosticsReport<Real>,
        extra: serde_json::Value,
    ) -> Result<()> {
        let report_json: serde_json::Value = serde_json::from_str(&report.to_json()?)
            .map_err(|e| Error::Io(std::io::Error::new(std::io::ErrorKind::Other, e)))?;
        let doc = serde_json::json!({
            "schema_version": ymlab::diagnostics::SCHEMA_VERSION,
            "tool_version": env!("CARGO_PKG_VERSION"),
            "scenario": scenario,
            "config_hash": self.config_hash,
            "seed": self.seed,
            "report": report_json,
            "details": extra,
        });
        let text = serde_json::to_string_pretty(&doc)
            .map_err(|e| Error::Io(std::io::Error::new(std::io::ErrorKind::Other, e)))?;
        let mut w = BufWriter::new(File::create(self.dir.join(name))?);
        w.write_all(text.as_bytes())?;
        w.write_all(b"\n")?;
        Ok(())
    }

    /// Snapshot path for node `idx` of the series `prefix`.
    pub fn snapshot_path(&self, prefix: &str, idx: usize) -> PathBuf {
        self.dir.join(format!("{prefix}_{idx:04}.ymf"))
    }

    /// Write field snapshots at every `snapshot_every`-th node (0 disables).
    pub fn write_snapshots(&self, prefix: &str, fields: &[FormField<Real>]) -> Result<()> {
        if self.snapshot_every == 0 {
            return Ok(());
        }
        for (idx, f) in fields.iter().enumerate() {
            if idx % self.snapshot_every == 0 {
                let w = BufWriter::new(File::create(self.snapshot_path(prefix, idx))?);
                f.write_snapshot(w)?;
            }
        }
        Ok(())
    }
}

/// Fixed-width scientific formatting shared by all CSV writers, so output
/// bytes are identical across platforms and thread counts.
pub fn fmt(x: Real) -> String {
    format!("{x:.17e}")
}
