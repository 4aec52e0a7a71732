//! Study reports: per-measurement rows, per-order aggregates and provenance,
//! written as CSV and JSON.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::config::OutputFormat;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Ok,
    /// Ground-truth re-solve did not converge.
    OracleFailed,
    /// Modal coefficients could not be obtained.
    ModalFailed,
    /// Compliance refused an ill-conditioned inner matrix.
    IllConditioned,
}

/// One measurement: a wrench increment on one shape at one order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub shape_id: usize,
    pub order: usize,
    pub wrench_axis: String,
    pub increment: f64,
    pub e_p_mm: Option<f64>,
    pub rot_err_deg: Option<f64>,
    pub time_us: Option<f64>,
    pub status: Status,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Aggregate {
    pub order: usize,
    pub rows: usize,
    pub ok_rows: usize,
    pub mean_e_p_mm: Option<f64>,
    pub max_e_p_mm: Option<f64>,
    pub mean_rot_err_deg: Option<f64>,
    pub max_rot_err_deg: Option<f64>,
    pub mean_time_us: Option<f64>,
    pub throughput_hz: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exclusion {
    pub shape_id: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuadratureNodes {
    pub order: usize,
    pub energy_kernel_nodes: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub library_version: String,
    pub magnus_order: usize,
    pub integration_steps: usize,
    pub quadrature: Vec<QuadratureNodes>,
    pub tendon_quadrature_nodes: usize,
    pub oracle_rk4_steps: usize,
    pub rotation_metric: String,
    pub coefficient_source: String,
    pub seed: u64,
    pub assumptions: Vec<String>,
    /// The configuration document, verbatim.
    pub config: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub study: String,
    pub metadata: Metadata,
    pub exclusions: Vec<Exclusion>,
    pub aggregates: Vec<Aggregate>,
    /// Study-specific summary values.
    pub extras: BTreeMap<String, f64>,
    pub rows: Vec<Row>,
}

#[derive(Debug, thiserror::Error)]
pub enum ReportError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {source}")]
    Csv { path: PathBuf, source: csv::Error },
    #[error("{path}: {source}")]
    Json {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{path}: aggregates do not match the rows (order {order})")]
    Inconsistent { path: PathBuf, order: usize },
}

fn mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

fn max(values: &[f64]) -> Option<f64> {
    values.iter().copied().reduce(f64::max)
}

/// Per-order aggregates over the `ok` rows, orders ascending.
pub fn aggregate(rows: &[Row]) -> Vec<Aggregate> {
    let mut by_order: BTreeMap<usize, Vec<&Row>> = BTreeMap::new();
    for r in rows {
        by_order.entry(r.order).or_default().push(r);
    }
    by_order
        .into_iter()
        .map(|(order, rs)| {
            let ok: Vec<&Row> = rs.iter().copied().filter(|r| r.status == Status::Ok).collect();
            let e: Vec<f64> = ok.iter().filter_map(|r| r.e_p_mm).collect();
            let rot: Vec<f64> = ok.iter().filter_map(|r| r.rot_err_deg).collect();
            let t: Vec<f64> = ok.iter().filter_map(|r| r.time_us).collect();
            let mean_time = mean(&t);
            Aggregate {
                order,
                rows: rs.len(),
                ok_rows: ok.len(),
                mean_e_p_mm: mean(&e),
                max_e_p_mm: max(&e),
                mean_rot_err_deg: mean(&rot),
                max_rot_err_deg: max(&rot),
                mean_time_us: mean_time,
                throughput_hz: mean_time.filter(|t| *t > 0.0).map(|t| 1e6 / t),
            }
        })
        .collect()
}

impl StudyReport {
    pub fn new(study: &str, metadata: Metadata, exclusions: Vec<Exclusion>, rows: Vec<Row>) -> Self {
        Self {
            study: study.to_string(),
            metadata,
            exclusions,
            aggregates: aggregate(&rows),
            extras: BTreeMap::new(),
            rows,
        }
    }

    pub fn aggregate_for(&self, order: usize) -> Option<&Aggregate> {
        self.aggregates.iter().find(|a| a.order == order)
    }

    /// Checks the stored aggregates against a recomputation from the rows.
    pub fn verify(&self, path: &Path) -> Result<(), ReportError> {
        let fresh = aggregate(&self.rows);
        let orders: Vec<usize> = self.aggregates.iter().map(|a| a.order).collect();
        for a in &self.aggregates {
            if fresh.iter().find(|f| f.order == a.order) != Some(a) {
                return Err(ReportError::Inconsistent {
                    path: path.to_path_buf(),
                    order: a.order,
                });
            }
        }
        if let Some(f) = fresh.iter().find(|f| !orders.contains(&f.order)) {
            return Err(ReportError::Inconsistent {
                path: path.to_path_buf(),
                order: f.order,
            });
        }
        Ok(())
    }

    /// Reads a JSON report and verifies its aggregates.
    pub fn load_json(path: &Path) -> Result<Self, ReportError> {
        let file = File::open(path).map_err(|source| ReportError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let report: StudyReport =
            serde_json::from_reader(BufReader::new(file)).map_err(|source| ReportError::Json {
                path: path.to_path_buf(),
                source,
            })?;
        report.verify(path)?;
        Ok(report)
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> ReportError + '_ {
    move |source| ReportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

pub fn write_csv(rows: &[Row], path: &Path) -> Result<(), ReportError> {
    let csv_err = |source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    };
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    if rows.is_empty() {
        w.write_record([
            "shape_id",
            "order",
            "wrench_axis",
            "increment",
            "e_p_mm",
            "rot_err_deg",
            "time_us",
            "status",
        ])
        .map_err(csv_err)?;
    }
    for r in rows {
        w.serialize(r).map_err(csv_err)?;
    }
    w.flush().map_err(io_err(path))
}

pub fn read_csv(path: &Path) -> Result<Vec<Row>, ReportError> {
    let mut r = csv::Reader::from_path(path).map_err(|source| ReportError::Csv {
        path: path.to_path_buf(),
        source,
    })?;
    r.deserialize()
        .collect::<Result<Vec<Row>, _>>()
        .map_err(|source| ReportError::Csv {
            path: path.to_path_buf(),
            source,
        })
}

pub fn write_json(report: &StudyReport, path: &Path) -> Result<(), ReportError> {
    let file = File::create(path).map_err(io_err(path))?;
    let mut w = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut w, report).map_err(|source| ReportError::Json {
        path: path.to_path_buf(),
        source,
    })?;
    w.write_all(b"\n").map_err(io_err(path))?;
    w.flush().map_err(io_err(path))
}

/// Writes `<dir>/<stem>.csv` and/or `<dir>/<stem>.json`, creating `dir`.
pub fn emit_report(
    report: &StudyReport,
    dir: &Path,
    stem: &str,
    format: OutputFormat,
) -> Result<Vec<PathBuf>, ReportError> {
    std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    let mut written = Vec::new();
    if format.csv() {
        let path = dir.join(format!("{stem}.csv"));
        write_csv(&report.rows, &path)?;
        written.push(path);
    }
    if format.json() {
        let path = dir.join(format!("{stem}.json"));
        write_json(report, &path)?;
        written.push(path);
    }
    Ok(written)
}

/// Spearman rank correlation with average ranks for ties.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = x.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let mut sxy = 0.0;
    let mut sxx = 0.0;
    let mut syy = 0.0;
    for (a, b) in rx.iter().zip(&ry) {
        sxy += (a - mx) * (b - my);
        sxx += (a - mx) * (a - mx);
        syy += (b - my) * (b - my);
    }
    (sxx > 0.0 && syy > 0.0).then(|| sxy / (sxx * syy).sqrt())
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = rank;
        }
        i = j + 1;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(order: usize, e: f64, status: Status) -> Row {
        Row {
            shape_id: 0,
            order,
            wrench_axis: "fx".into(),
            increment: 0.1,
            e_p_mm: Some(e),
            rot_err_deg: Some(e / 10.0),
            time_us: Some(5.0),
            status,
        }
    }

    #[test]
    fn aggregates_skip_failed_rows() {
        let rows = vec![row(2, 1.0, Status::Ok), row(2, 3.0, Status::Ok), row(2, 99.0, Status::OracleFailed), row(0, 4.0, Status::Ok)];
        let a = aggregate(&rows);
        assert_eq!(a.len(), 2);
        assert_eq!(a[0].order, 0);
        assert_eq!(a[1].rows, 3);
        assert_eq!(a[1].ok_rows, 2);
        assert_eq!(a[1].mean_e_p_mm, Some(2.0));
        assert_eq!(a[1].max_e_p_mm, Some(3.0));
        assert_eq!(a[1].throughput_hz, Some(2e5));
    }

    #[test]
    fn spearman_matches_hand_values() {
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[10.0, 20.0, 30.0]), Some(1.0));
        assert_eq!(spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]), Some(-1.0));
        // Ranks with a tie: x = (1, 2.5, 2.5, 4), y = (1, 2, 3, 4).
        let r = spearman(&[1.0, 2.0, 2.0, 3.0], &[1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((r - 4.5 / (4.5f64 * 5.0).sqrt()).abs() < 1e-15);
        assert_eq!(spearman(&[1.0, 1.0], &[1.0, 2.0]), None);
    }
}
