//! Report files: canonical `report.v1.json` and the Markdown document.

use csaf_core::report::{render_document, validate_report, ReportError, StandardReport};

pub const FILE_NAME: &str = "report.v1.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Format {
    /// Canonical JSON.
    Machine,
    /// Markdown table.
    Document,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportFileError {
    #[error("malformed report: {0}")]
    Parse(#[from] serde_json::Error),
    #[error(transparent)]
    Report(#[from] ReportError),
}

pub fn parse_report(bytes: &[u8]) -> Result<StandardReport, ReportFileError> {
    Ok(serde_json::from_slice(bytes)?)
}

/// Renders a report that validates; invalid reports are refused.
pub fn render_report(r: &StandardReport, format: Format) -> Result<Vec<u8>, ReportFileError> {
    match format {
        Format::Document => Ok(render_document(r)?.into_bytes()),
        Format::Machine => {
            let violations = validate_report(r);
            if !violations.is_empty() {
                return Err(ReportError::Invalid(violations).into());
            }
            let mut out = serde_json::to_vec_pretty(r)?;
            out.push(b'\n');
            Ok(out)
        }
    }
}
