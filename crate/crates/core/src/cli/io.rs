use std::fs::File;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::inference::InferenceResult;
use crate::numerics::Matrix;
use crate::simlab::{SimRow, SummaryRow};
use crate::transfer::{Dataset, DetectionReport, Role, TransferFit};

/// Decimal form with 17 significant digits, enough to round-trip any f64.
pub fn fmt_num(v: f64) -> String {
    format!("{v:.16e}")
}

fn io_err(path: &Path, source: std::io::Error) -> Error {
    Error::Io {
        path: path.display().to_string(),
        source,
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    match e.into_kind() {
        csv::ErrorKind::Io(source) => io_err(path, source),
        other => Error::Parse(format!("{}: {other:?}", path.display())),
    }
}

/// Reads a headered CSV file. `y` comes from the `response` column and `x`
/// from the remaining columns in header order. Data rows are numbered from 1
/// in error messages.
pub fn ingest_dataset(path: &Path, response: &str, role: Role) -> Result<Dataset> {
    let file = File::open(path).map_err(|e| io_err(path, e))?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);
    let headers: Vec<String> = reader
        .headers()
        .map_err(|e| csv_err(path, e))?
        .iter()
        .map(str::to_string)
        .collect();
    let hits: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.as_str() == response)
        .map(|(j, _)| j)
        .collect();
    let resp_col = match hits.as_slice() {
        [j] => *j,
        [] => {
            return Err(Error::Parse(format!(
                "{}: response column '{response}' not found",
                path.display()
            )))
        }
        _ => {
            return Err(Error::Parse(format!(
                "{}: response column '{response}' appears {} times",
                path.display(),
                hits.len()
            )))
        }
    };
    let width = headers.len();
    let p = width - 1;
    let mut y = Vec::new();
    let mut data = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| csv_err(path, e))?;
        if record.len() != width {
            return Err(Error::Parse(format!(
                "{}: row {row} has {} fields, header has {width}",
                path.display(),
                record.len()
            )));
        }
        for (j, cell) in record.iter().enumerate() {
            let v: f64 = cell.parse().map_err(|_| {
                Error::Parse(format!(
                    "{}: non-numeric value '{cell}' at row {row}, column {}",
                    path.display(),
                    headers[j]
                ))
            })?;
            if !v.is_finite() {
                return Err(Error::Parse(format!(
                    "{}: non-finite value at row {row}, column {}",
                    path.display(),
                    headers[j]
                )));
            }
            if j == resp_col {
                y.push(v);
            } else {
                data.push(v);
            }
        }
    }
    let n = y.len();
    if n < 2 {
        return Err(Error::Parse(format!(
            "{}: need at least 2 data rows, found {n}",
            path.display()
        )));
    }
    let x = Matrix::from_vec(n, p, data)?;
    Dataset::new(x, y, role)
}

fn write_table(path: &Path, header: &[&str], rows: impl IntoIterator<Item = Vec<String>>) -> Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_path(path)
        .map_err(|e| csv_err(path, e))?;
    w.write_record(header).map_err(|e| csv_err(path, e))?;
    for row in rows {
        w.write_record(&row).map_err(|e| csv_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Writes the response column first, then `x1..xp`.
pub fn write_dataset(path: &Path, dataset: &Dataset, response: &str) -> Result<()> {
    let mut header = vec![response.to_string()];
    header.extend((1..=dataset.p()).map(|j| format!("x{j}")));
    let header: Vec<&str> = header.iter().map(String::as_str).collect();
    let rows = (0..dataset.n()).map(|i| {
        std::iter::once(dataset.y[i])
            .chain(dataset.x.row(i).iter().copied())
            .map(fmt_num)
            .collect()
    });
    write_table(path, &header, rows)
}

pub fn write_fit(path: &Path, fit: &TransferFit) -> Result<()> {
    let rows = (0..fit.beta_hat.len()).map(|j| {
        vec![
            (j + 1).to_string(),
            fmt_num(fit.w_hat[j]),
            fmt_num(fit.delta_hat[j]),
            fmt_num(fit.beta_hat[j]),
        ]
    });
    write_table(path, &["index", "w_hat", "delta_hat", "beta_hat"], rows)
}

/// Row `k = 0` is the target-only loss; sources are numbered from 1.
pub fn write_detection(path: &Path, report: &DetectionReport) -> Result<()> {
    let target = vec!["0".to_string(), fmt_num(report.target_loss), "true".to_string()];
    let sources = report.source_losses.iter().enumerate().map(|(k, &loss)| {
        vec![
            (k + 1).to_string(),
            fmt_num(loss),
            report.selected.contains(&k).to_string(),
        ]
    });
    write_table(
        path,
        &["k", "loss", "included"],
        std::iter::once(target).chain(sources),
    )
}

pub fn test_line(result: &InferenceResult) -> String {
    format!(
        "reject={} statistic={} critical={}",
        result.test.reject,
        fmt_num(result.test.statistic),
        fmt_num(result.test.critical)
    )
}

pub fn write_intervals(path: &Path, result: &InferenceResult) -> Result<()> {
    let rows = result.intervals.iter().map(|iv| {
        vec![
            (iv.index + 1).to_string(),
            fmt_num(result.beta_tilde[iv.index]),
            fmt_num(iv.lo),
            fmt_num(iv.hi),
        ]
    });
    write_table(path, &["index", "beta_tilde", "lo", "hi"], rows)
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut f = File::create(path).map_err(|e| io_err(path, e))?;
    f.write_all(text.as_bytes()).map_err(|e| io_err(path, e))
}

pub fn write_results(path: &Path, rows: &[SimRow]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        vec![
            r.estimator.name().to_string(),
            r.informative_size.to_string(),
            (r.replication + 1).to_string(),
            fmt_num(r.l1_error),
            fmt_num(r.l2_error),
            fmt_num(r.seconds),
        ]
    });
    write_table(
        path,
        &["estimator", "A_size", "replication", "l1_error", "l2_error", "seconds"],
        rows,
    )
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let rows = rows.iter().map(|r| {
        vec![
            r.estimator.name().to_string(),
            r.informative_size.to_string(),
            r.count.to_string(),
            fmt_num(r.mean_l1),
            fmt_num(r.se_l1),
            fmt_num(r.mean_l2),
            fmt_num(r.se_l2),
        ]
    });
    write_table(
        path,
        &["estimator", "A_size", "count", "mean_l1", "se_l1", "mean_l2", "se_l2"],
        rows,
    )
}

/// Detected and true informative sets of the data-driven estimators, as
/// space-separated 1-based source numbers.
pub fn write_detections(path: &Path, rows: &[SimRow]) -> Result<()> {
    let join = |v: &[usize]| {
        v.iter()
            .map(|k| (k + 1).to_string())
            .collect::<Vec<_>>()
            .join(" ")
    };
    let rows = rows.iter().filter_map(|r| {
        r.detected.as_ref().map(|d| {
            vec![
                r.estimator.name().to_string(),
                r.informative_size.to_string(),
                (r.replication + 1).to_string(),
                join(d),
                join(&r.informative),
                (d == &r.informative).to_string(),
            ]
        })
    });
    write_table(
        path,
        &["estimator", "A_size", "replication", "detected", "informative", "exact"],
        rows,
    )
}
