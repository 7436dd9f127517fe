//! Result emission.
//!
//! CSV rows and JSON documents are written with fixed field order and
//! 13-significant-digit scientific floats, so identical sweeps produce
//! byte-identical files. Metrics an estimator does not define are emitted as
//! `NaN` in CSV and `null` in JSON.

use std::io::Write;
use std::path::Path;

use anyhow::Context;

use crate::metrics::MetricsRecord;

/// Output file format.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputFormat {
    Csv,
    Json,
}

impl std::str::FromStr for OutputFormat {
    type Err = anyhow::Error;
    fn from_str(s: &str) -> anyhow::Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "json" => Ok(Self::Json),
            other => anyhow::bail!("unknown format '{other}' (expected csv or json)"),
        }
    }
}

pub const CSV_HEADER: &str =
    "estimator,pnr_db,mse_theta_r,mse_phi_t,mse_irs,mse_gamma,nmse_h,failure_rate,trials,failures";

fn float(value: f64) -> String {
    format!("{value:.12e}")
}

fn opt_float(value: Option<f64>) -> String {
    value.map(float).unwrap_or_else(|| "NaN".to_string())
}

/// Write the fixed 10-column CSV.
pub fn write_csv<W: Write>(records: &[MetricsRecord], mut w: W) -> anyhow::Result<()> {
    writeln!(w, "{CSV_HEADER}")?;
    for r in records {
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.estimator,
            float(r.pnr_db),
            opt_float(r.mse_theta_r),
            opt_float(r.mse_phi_t),
            opt_float(r.mse_irs),
            opt_float(r.mse_gamma),
            opt_float(r.nmse_h),
            float(r.failure_rate),
            r.trials,
            r.failures,
        )?;
    }
    Ok(())
}

/// Write the JSON mirror of the CSV content.
pub fn write_json<W: Write>(records: &[MetricsRecord], mut w: W) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(&mut w, records)?;
    writeln!(w)?;
    Ok(())
}

pub fn read_json(text: &str) -> anyhow::Result<Vec<MetricsRecord>> {
    Ok(serde_json::from_str(text)?)
}

/// Render records in the requested format.
pub fn render(records: &[MetricsRecord], format: OutputFormat) -> anyhow::Result<Vec<u8>> {
    let mut buffer = Vec::new();
    match format {
        OutputFormat::Csv => write_csv(records, &mut buffer)?,
        OutputFormat::Json => write_json(records, &mut buffer)?,
    }
    Ok(buffer)
}

/// Write records to a file, creating parent directories as needed.
pub fn emit_results(
    records: &[MetricsRecord],
    format: OutputFormat,
    path: &Path,
) -> anyhow::Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent)
                .with_context(|| format!("creating {}", parent.display()))?;
        }
    }
    let bytes = render(records, format)?;
    std::fs::write(path, bytes).with_context(|| format!("writing {}", path.display()))
}
