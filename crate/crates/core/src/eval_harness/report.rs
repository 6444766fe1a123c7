//! Report files: full JSON, summary CSV and plot-ready curve CSVs.

use std::fs;
use std::path::Path;

use serde::Serialize;

use super::metrics::CurvePoint;
use super::protocol::EvalReport;
use crate::error::{Error, Result};

pub fn write_json<T: Serialize + ?Sized>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_text(path, &text)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub const SUMMARY_HEADER: &str = "sequence,protocol,frames,auc,precision_at_20,mean_iou,failures,average_overlap,fps";

pub fn summary_row(r: &EvalReport) -> String {
    let protocol = match r.protocol {
        super::protocol::Protocol::Ope => "ope",
        super::protocol::Protocol::Reset => "reset",
    };
    format!(
        "{},{},{},{:.6},{:.6},{:.6},{},{:.6},{:.2}",
        r.sequence, protocol, r.frames, r.auc, r.precision_at_20, r.mean_iou, r.failures, r.average_overlap, r.fps
    )
}

pub fn summary_csv(reports: &[EvalReport]) -> String {
    let mut out = format!("{SUMMARY_HEADER}\n");
    for r in reports {
        out.push_str(&summary_row(r));
        out.push('\n');
    }
    out
}

pub fn curve_csv(curve: &[CurvePoint]) -> String {
    let mut out = String::from("threshold,value\n");
    for p in curve {
        out.push_str(&format!("{},{:.6}\n", p.threshold, p.value));
    }
    out
}

/// Writes `<name>.json`, `<name>_success.csv` and `<name>_precision.csv`
/// under `dir`.
pub fn write_report_files(dir: &Path, report: &EvalReport) -> Result<()> {
    let name = &report.sequence;
    write_json(&dir.join(format!("{name}.json")), report)?;
    write_text(&dir.join(format!("{name}_success.csv")), &curve_csv(&report.success_curve))?;
    write_text(&dir.join(format!("{name}_precision.csv")), &curve_csv(&report.precision_curve))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_csv_layout() {
        let csv = curve_csv(&[
            CurvePoint {
                threshold: 0.0,
                value: 1.0,
            },
            CurvePoint {
                threshold: 0.5,
                value: 0.25,
            },
        ]);
        assert_eq!(csv, "threshold,value\n0,1.000000\n0.5,0.250000\n");
    }
}
