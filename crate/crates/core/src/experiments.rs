//! Hyperparameter grid search with resumable CSV results.

use std::path::Path;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::engine::{train, Hyperparams, TrainOptions};
use crate::error::{Error, Result};
use crate::evaluation::{evaluate, EvalConfig};
use crate::ingest::Dataset;

pub const RESULTS_FILE: &str = "results.csv";
pub const RESULTS_HEADER: [&str; 9] = [
    "k", "lambda", "tau", "precision", "recall", "train_rmse", "test_rmse", "seconds", "status",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GridSpec {
    pub k_values: Vec<usize>,
    pub lambda_values: Vec<f64>,
    pub tau_values: Vec<f64>,
    pub epochs: usize,
    pub eval: EvalConfig,
    /// Initialization seed shared by every cell.
    pub seed: u64,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self {
            k_values: vec![2, 10, 50, 100],
            lambda_values: vec![0.1, 0.5],
            tau_values: vec![0.05, 0.1, 0.25],
            epochs: 20,
            eval: EvalConfig::default(),
            seed: 0,
        }
    }
}

impl GridSpec {
    /// Every `(k, λ, τ)` cell, sorted and deduplicated.
    pub fn cells(&self) -> Result<Vec<(usize, f64, f64)>> {
        if self.k_values.is_empty() || self.lambda_values.is_empty() || self.tau_values.is_empty() {
            return Err(Error::InvalidArgument("grid value lists must be non-empty".into()));
        }
        let mut ks = self.k_values.clone();
        ks.sort_unstable();
        ks.dedup();
        let sorted = |v: &[f64]| {
            let mut v = v.to_vec();
            v.sort_by(f64::total_cmp);
            v.dedup();
            v
        };
        let (lambdas, taus) = (sorted(&self.lambda_values), sorted(&self.tau_values));
        let mut cells = Vec::with_capacity(ks.len() * lambdas.len() * taus.len());
        for &k in &ks {
            for &l in &lambdas {
                for &t in &taus {
                    cells.push((k, l, t));
                }
            }
        }
        Ok(cells)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellMetrics {
    pub precision: f64,
    pub recall: f64,
    pub train_rmse: f64,
    pub test_rmse: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GridResultRow {
    pub k: usize,
    pub lambda: f64,
    pub tau: f64,
    /// `None` for a failed cell.
    pub metrics: Option<CellMetrics>,
    pub seconds: f64,
    /// `ok`, or `error: <message>`.
    pub status: String,
}

impl GridResultRow {
    pub fn is_ok(&self) -> bool {
        self.metrics.is_some()
    }

    fn key(&self) -> (usize, u64, u64) {
        (self.k, self.lambda.to_bits(), self.tau.to_bits())
    }

    fn record(&self) -> Vec<String> {
        let metric = |f: fn(&CellMetrics) -> f64| self.metrics.as_ref().map(|m| format!("{:.6}", f(m))).unwrap_or_default();
        vec![
            self.k.to_string(),
            self.lambda.to_string(),
            self.tau.to_string(),
            metric(|m| m.precision),
            metric(|m| m.recall),
            metric(|m| m.train_rmse),
            metric(|m| m.test_rmse),
            format!("{:.3}", self.seconds),
            self.status.clone(),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Criterion {
    TestRmse,
    Precision,
}

pub fn history_file(k: usize, lambda: f64, tau: f64) -> String {
    format!("history_k{k}_lambda{lambda}_tau{tau}.csv")
}

pub fn write_results(path: &Path, rows: &[GridResultRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(RESULTS_HEADER)?;
    for row in rows {
        w.write_record(row.record())?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn load_results(path: &Path) -> Result<Vec<GridResultRow>> {
    let mut rdr = csv::Reader::from_path(path)?;
    if rdr.headers()?.iter().ne(RESULTS_HEADER.iter().copied()) {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            message: format!("expected header {}", RESULTS_HEADER.join(",")),
        });
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line());
        let bad = |what: &str| Error::Parse {
            path: path.to_path_buf(),
            line,
            message: format!("bad {what}"),
        };
        let num = |idx: usize, what: &str| rec[idx].parse::<f64>().map_err(|_| bad(what));
        let status = rec[8].to_owned();
        let metrics = if status == "ok" {
            Some(CellMetrics {
                precision: num(3, "precision")?,
                recall: num(4, "recall")?,
                train_rmse: num(5, "train_rmse")?,
                test_rmse: num(6, "test_rmse")?,
            })
        } else {
            None
        };
        rows.push(GridResultRow {
            k: rec[0].parse().map_err(|_| bad("k"))?,
            lambda: num(1, "lambda")?,
            tau: num(2, "tau")?,
            metrics,
            seconds: num(7, "seconds")?,
            status,
        });
    }
    Ok(rows)
}

/// Trains and evaluates every grid cell in `(k, λ, τ)` order, writing
/// `results.csv` and one history CSV per cell into `out_dir`. Cells already
/// present in an existing `results.csv` are kept and not retrained. A cell
/// that fails is recorded with an error status and the grid moves on.
pub fn run_grid(spec: &GridSpec, data: &Dataset, out_dir: &Path, opts: TrainOptions) -> Result<Vec<GridResultRow>> {
    let cells = spec.cells()?;
    spec.eval.validate()?;
    std::fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let results_path = out_dir.join(RESULTS_FILE);
    let existing = if results_path.exists() {
        load_results(&results_path)?
    } else {
        Vec::new()
    };

    let mut rows: Vec<GridResultRow> = Vec::with_capacity(cells.len());
    for (k, lambda, tau) in cells {
        let key = (k, lambda.to_bits(), tau.to_bits());
        if let Some(done) = existing.iter().find(|r| r.key() == key) {
            rows.push(done.clone());
            continue;
        }
        let start = Instant::now();
        let outcome = run_cell(spec, data, k, lambda, tau, opts, &out_dir.join(history_file(k, lambda, tau)));
        let seconds = start.elapsed().as_secs_f64();
        let (metrics, status) = match outcome {
            Ok(m) => (Some(m), "ok".to_owned()),
            Err(e) => (None, format!("error: {e}")),
        };
        rows.push(GridResultRow {
            k,
            lambda,
            tau,
            metrics,
            seconds,
            status,
        });
        write_results(&results_path, &rows)?;
    }
    write_results(&results_path, &rows)?;
    Ok(rows)
}

fn run_cell(
    spec: &GridSpec,
    data: &Dataset,
    k: usize,
    lambda: f64,
    tau: f64,
    opts: TrainOptions,
    history_path: &Path,
) -> Result<CellMetrics> {
    let h = Hyperparams::new(k, lambda, tau, spec.epochs, spec.seed)?;
    let (params, history) = train(data, &h, opts)?;
    history.save(history_path)?;
    let report = evaluate(&params, data, &spec.eval)?;
    Ok(CellMetrics {
        precision: report.precision_at_k,
        recall: report.recall_at_k,
        train_rmse: report.rmse_train,
        test_rmse: report.rmse_test,
    })
}

/// Best successful row: lowest test RMSE or highest precision, ties broken
/// by smaller `k` then larger `τ`.
pub fn select_best(rows: &[GridResultRow], criterion: Criterion) -> Result<&GridResultRow> {
    rows.iter()
        .filter_map(|r| r.metrics.map(|m| (r, m)))
        .min_by(|(a, ma), (b, mb)| {
            let primary = match criterion {
                Criterion::TestRmse => ma.test_rmse.total_cmp(&mb.test_rmse),
                Criterion::Precision => mb.precision.total_cmp(&ma.precision),
            };
            primary.then(a.k.cmp(&b.k)).then(b.tau.total_cmp(&a.tau))
        })
        .map(|(r, _)| r)
        .ok_or(Error::Empty("no successful grid cells"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(k: usize, tau: f64, test_rmse: f64, precision: f64) -> GridResultRow {
        GridResultRow {
            k,
            lambda: 0.1,
            tau,
            metrics: Some(CellMetrics {
                precision,
                recall: 0.0,
                train_rmse: 0.5,
                test_rmse,
            }),
            seconds: 0.0,
            status: "ok".into(),
        }
    }

    #[test]
    fn default_grid_has_24_cells() {
        let cells = GridSpec::default().cells().unwrap();
        assert_eq!(cells.len(), 24);
        assert_eq!(cells[0], (2, 0.1, 0.05));
        assert_eq!(cells[23], (100, 0.5, 0.25));
    }

    #[test]
    fn empty_list_rejected() {
        let spec = GridSpec {
            tau_values: vec![],
            ..Default::default()
        };
        assert!(spec.cells().is_err());
    }

    #[test]
    fn partial_config_uses_defaults() {
        let spec: GridSpec = serde_json::from_str(r#"{"k_values": [10], "epochs": 5}"#).unwrap();
        assert_eq!(spec.k_values, vec![10]);
        assert_eq!(spec.lambda_values, vec![0.1, 0.5]);
        assert_eq!(spec.eval.k, 10);
    }

    #[test]
    fn best_single_row() {
        let rows = [row(10, 0.25, 0.8, 0.01)];
        assert_eq!(select_best(&rows, Criterion::TestRmse).unwrap(), &rows[0]);
    }

    #[test]
    fn tie_prefers_smaller_k_then_larger_tau() {
        let rows = [row(50, 0.25, 0.8, 0.1), row(10, 0.1, 0.8, 0.1), row(10, 0.25, 0.8, 0.1)];
        let best = select_best(&rows, Criterion::TestRmse).unwrap();
        assert_eq!((best.k, best.tau), (10, 0.25));
        let best = select_best(&rows, Criterion::Precision).unwrap();
        assert_eq!((best.k, best.tau), (10, 0.25));
    }

    #[test]
    fn precision_criterion_maximizes() {
        let rows = [row(2, 0.1, 0.7, 0.01), row(10, 0.1, 0.9, 0.04)];
        assert_eq!(select_best(&rows, Criterion::Precision).unwrap().k, 10);
        assert_eq!(select_best(&rows, Criterion::TestRmse).unwrap().k, 2);
    }

    #[test]
    fn all_failed_is_error() {
        let mut r = row(2, 0.1, 0.7, 0.01);
        r.metrics = None;
        r.status = "error: boom".into();
        assert!(select_best(&[r], Criterion::TestRmse).is_err());
    }

    #[test]
    fn results_csv_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join(RESULTS_FILE);
        let mut failed = row(100, 0.05, 0.0, 0.0);
        failed.metrics = None;
        failed.status = "error: non-finite parameters, row 3".into();
        let rows = vec![row(10, 0.25, 0.782_8, 0.043), failed];
        write_results(&path, &rows).unwrap();
        assert_eq!(load_results(&path).unwrap(), rows);
    }
}
