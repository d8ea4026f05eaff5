//! CSV ingestion and result serialization.
//!
//! Input files carry a header row with feature columns followed by a final
//! integer `label` column. Scores are written with 17 significant digits so
//! golden files stay stable across runs.

use crate::dataset::{LabeledPoint, ValQuery};
use crate::error::{Error, Result};
use crate::eval::EvalReport;
use crate::scores::ShapleyScores;
use std::io::Write;
use std::path::Path;

fn parse_rows(path: &Path) -> Result<Vec<(Vec<f64>, u32)>> {
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    if headers.is_empty() || &headers[headers.len() - 1] != "label" {
        return Err(Error::Data(format!(
            "{}: expected a final `label` column, found {:?}",
            path.display(),
            headers.iter().next_back().unwrap_or("")
        )));
    }
    let dim = headers.len() - 1;
    if dim == 0 {
        return Err(Error::Data(format!(
            "{}: no feature columns before `label`",
            path.display()
        )));
    }

    let mut rows = Vec::new();
    for (line, record) in reader.records().enumerate() {
        let record = record?;
        if record.len() != dim + 1 {
            return Err(Error::Data(format!(
                "{}: row {} has {} fields, expected {}",
                path.display(),
                line + 2,
                record.len(),
                dim + 1
            )));
        }
        let mut features = Vec::with_capacity(dim);
        for field in record.iter().take(dim) {
            let value: f64 = field.trim().parse().map_err(|_| {
                Error::Data(format!(
                    "{}: row {}: bad feature value {field:?}",
                    path.display(),
                    line + 2
                ))
            })?;
            features.push(value);
        }
        let label: u32 = record[dim].trim().parse().map_err(|_| {
            Error::Data(format!(
                "{}: row {}: bad label {:?}",
                path.display(),
                line + 2,
                &record[dim]
            ))
        })?;
        rows.push((features, label));
    }
    Ok(rows)
}

/// Read training points; original indices follow file order.
pub fn read_points(path: &Path) -> Result<Vec<LabeledPoint>> {
    Ok(parse_rows(path)?
        .into_iter()
        .enumerate()
        .map(|(i, (features, label))| LabeledPoint::new(features, label, i))
        .collect())
}

/// Read validation queries from the same CSV layout.
pub fn read_queries(path: &Path) -> Result<Vec<ValQuery>> {
    Ok(parse_rows(path)?
        .into_iter()
        .map(|(features, label)| ValQuery::new(features, label))
        .collect())
}

/// Full-precision decimal form used in all score output.
pub fn format_value(v: f64) -> String {
    format!("{v:.16e}")
}

/// Write `orig_index,value` rows, with `lower,upper,eps` columns when the
/// scores carry certified intervals.
pub fn write_scores_csv<W: Write>(mut out: W, scores: &ShapleyScores) -> Result<()> {
    match (&scores.intervals, scores.eps) {
        (Some(intervals), Some(eps)) => {
            writeln!(out, "orig_index,value,lower,upper,eps")?;
            for (i, (v, (lo, hi))) in scores.values.iter().zip(intervals).enumerate() {
                writeln!(
                    out,
                    "{i},{},{},{},{}",
                    format_value(*v),
                    format_value(*lo),
                    format_value(*hi),
                    format_value(eps)
                )?;
            }
        }
        _ => {
            writeln!(out, "orig_index,value")?;
            for (i, v) in scores.values.iter().enumerate() {
                writeln!(out, "{i},{}", format_value(*v))?;
            }
        }
    }
    Ok(())
}

pub fn scores_csv_string(scores: &ShapleyScores) -> String {
    let mut buf = Vec::new();
    write_scores_csv(&mut buf, scores).expect("in-memory write");
    String::from_utf8(buf).expect("ascii output")
}

pub fn write_report<W: Write>(mut out: W, report: &EvalReport) -> Result<()> {
    out.write_all(report.to_kv().as_bytes())?;
    Ok(())
}
