//! Fixed-schema CSV persistence for optimizer traces.
//!
//! Schema: `iter,alpha,grad_norm_est,decrement_sq,loss_est,param_error,
//! hessian_repaired,elapsed_ms`, one row per iterate including iterate 0.
//! Floats use Rust's shortest round-trip formatting, so identical traces
//! serialize to identical bytes. Timing is written as 0 unless requested,
//! keeping default outputs reproducible run to run.

use std::path::Path;

use rnewt_core::IterateTrace;

use crate::CliError;

pub const TRACE_HEADER: &str =
    "iter,alpha,grad_norm_est,decrement_sq,loss_est,param_error,hessian_repaired,elapsed_ms";

pub fn write_trace_csv(
    trace: &IterateTrace,
    path: &Path,
    record_timing: bool,
) -> Result<(), CliError> {
    let mut out = String::new();
    out.push_str(TRACE_HEADER);
    out.push('\n');
    for (iter, r) in trace.records.iter().enumerate() {
        let elapsed_ms = if record_timing {
            r.elapsed.as_secs_f64() * 1e3
        } else {
            0.0
        };
        out.push_str(&format!(
            "{iter},{},{},{},{},{},{},{}\n",
            r.alpha,
            r.grad_norm_est,
            r.decrement_sq,
            r.loss_est,
            r.param_error,
            r.hessian_repaired,
            elapsed_ms
        ));
    }
    std::fs::write(path, out).map_err(|e| CliError::io(path, e))
}

/// One parsed row of a trace CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceRow {
    pub iter: usize,
    pub alpha: f64,
    pub grad_norm_est: f64,
    pub decrement_sq: f64,
    pub loss_est: f64,
    pub param_error: f64,
    pub hessian_repaired: bool,
    pub elapsed_ms: f64,
}

pub fn read_trace_csv(path: &Path) -> Result<Vec<TraceRow>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let mut lines = text.lines();
    match lines.next() {
        Some(header) if header == TRACE_HEADER => {}
        other => {
            return Err(CliError::SchemaMismatch(format!(
                "{}: expected header `{TRACE_HEADER}`, found `{}`",
                path.display(),
                other.unwrap_or("<empty file>")
            )))
        }
    }
    let mut rows = Vec::new();
    for (lineno, line) in lines.enumerate() {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 8 {
            return Err(CliError::SchemaMismatch(format!(
                "{}: line {} has {} fields, expected 8",
                path.display(),
                lineno + 2,
                fields.len()
            )));
        }
        let parse = |s: &str, what: &str| -> Result<f64, CliError> {
            s.parse::<f64>().map_err(|_| {
                CliError::SchemaMismatch(format!(
                    "{}: line {}: bad {what} value `{s}`",
                    path.display(),
                    lineno + 2
                ))
            })
        };
        rows.push(TraceRow {
            iter: fields[0].parse().map_err(|_| {
                CliError::SchemaMismatch(format!(
                    "{}: line {}: bad iter `{}`",
                    path.display(),
                    lineno + 2,
                    fields[0]
                ))
            })?,
            alpha: parse(fields[1], "alpha")?,
            grad_norm_est: parse(fields[2], "grad_norm_est")?,
            decrement_sq: parse(fields[3], "decrement_sq")?,
            loss_est: parse(fields[4], "loss_est")?,
            param_error: parse(fields[5], "param_error")?,
            hessian_repaired: fields[6] == "true",
            elapsed_ms: parse(fields[7], "elapsed_ms")?,
        });
    }
    Ok(rows)
}

/// Writes arbitrary rows as CSV with a caller-supplied header.
pub fn write_summary_csv(
    header: &str,
    rows: &[String],
    path: &Path,
) -> Result<(), CliError> {
    let mut out = String::with_capacity(header.len() + rows.iter().map(|r| r.len() + 1).sum::<usize>());
    out.push_str(header);
    out.push('\n');
    for row in rows {
        out.push_str(row);
        out.push('\n');
    }
    std::fs::write(path, out).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::DVector;
    use rnewt_core::IterateRecord;
    use std::time::Duration;

    fn trace() -> IterateTrace {
        IterateTrace {
            records: vec![
                IterateRecord {
                    theta: DVector::zeros(2),
                    alpha: 1.0,
                    grad_norm_est: 0.5,
                    decrement_sq: 0.25,
                    loss_est: -1.5,
                    hessian_repaired: false,
                    curvature_breakdown: false,
                    linesearch_floor: false,
                    param_error: 2.0,
                    elapsed: Duration::from_millis(3),
                },
                IterateRecord {
                    theta: DVector::zeros(2),
                    alpha: f64::NAN,
                    grad_norm_est: 1e-9,
                    decrement_sq: f64::NAN,
                    loss_est: -1.9,
                    hessian_repaired: true,
                    curvature_breakdown: false,
                    linesearch_floor: false,
                    param_error: 0.1,
                    elapsed: Duration::from_millis(2),
                },
            ],
        }
    }

    #[test]
    fn round_trip_with_nan_fields() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace_csv(&trace(), &path, false).unwrap();
        let rows = read_trace_csv(&path).unwrap();
        assert_eq!(rows.len(), 2);
        assert_eq!(rows[0].iter, 0);
        assert_eq!(rows[0].alpha, 1.0);
        assert!(rows[1].alpha.is_nan());
        assert!(rows[1].decrement_sq.is_nan());
        assert!(rows[1].hessian_repaired);
        assert_eq!(rows[1].param_error, 0.1);
        assert_eq!(rows[0].elapsed_ms, 0.0); // timing suppressed by default
    }

    #[test]
    fn timing_is_written_when_requested() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("trace.csv");
        write_trace_csv(&trace(), &path, true).unwrap();
        let rows = read_trace_csv(&path).unwrap();
        assert!(rows[0].elapsed_ms > 0.0);
    }

    #[test]
    fn wrong_header_is_schema_mismatch() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.csv");
        std::fs::write(&path, "a,b,c\n1,2,3\n").unwrap();
        assert!(matches!(
            read_trace_csv(&path),
            Err(CliError::SchemaMismatch(_))
        ));
    }
}
