//! Corpus-level evaluation and per-cell aggregation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::CorpusRecord;
use crate::error::{Error, Result};
use crate::metrics::{Evaluator, Measure, MetricId, TextEvaluation, Undefined};
use crate::scoring::LogprobProvider;
use crate::stats::BenchmarkMatrix;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunOptions {
    /// Upper bound on concurrent evaluations (and so on provider calls).
    pub max_inflight: usize,
    pub failure_threshold: f64,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            max_inflight: 4,
            failure_threshold: 0.10,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RecordResult {
    pub dataset: String,
    pub method: String,
    pub instance_id: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub evaluation: Option<TextEvaluation>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// Mean of one metric over the instances of a (dataset, method) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CellAggregate {
    pub dataset: String,
    pub method: String,
    pub metric: MetricId,
    pub value: Measure,
    pub defined: usize,
    pub instances: usize,
}

/// Mean fit diagnostics of a (dataset, method) cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitAggregate {
    pub dataset: String,
    pub method: String,
    pub fitted: usize,
    pub instances: usize,
    pub r: Option<f64>,
    pub r_squared: Option<f64>,
    pub rmse: Option<f64>,
    pub dcpr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkResult {
    pub datasets: Vec<String>,
    pub methods: Vec<String>,
    pub records: Vec<RecordResult>,
    pub cells: Vec<CellAggregate>,
    pub fits: Vec<FitAggregate>,
}

fn mean(values: impl Iterator<Item = f64>) -> Option<f64> {
    let (sum, n) = values.fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn push_unique(v: &mut Vec<String>, s: &str) {
    if !v.iter().any(|x| x == s) {
        v.push(s.to_string());
    }
}

impl BenchmarkResult {
    /// Aggregates per-record evaluations: per-instance metrics are averaged
    /// over their defined values only.
    pub fn aggregate(records: Vec<RecordResult>) -> Self {
        let mut datasets = Vec::new();
        let mut methods = Vec::new();
        for r in &records {
            push_unique(&mut datasets, &r.dataset);
            push_unique(&mut methods, &r.method);
        }
        let mut cells = Vec::new();
        let mut fits = Vec::new();
        for d in &datasets {
            for m in &methods {
                let evals: Vec<&TextEvaluation> = records
                    .iter()
                    .filter(|r| &r.dataset == d && &r.method == m)
                    .filter_map(|r| r.evaluation.as_ref())
                    .collect();
                if evals.is_empty() {
                    continue;
                }
                for id in MetricId::ALL {
                    let defined: Vec<f64> = evals.iter().filter_map(|e| e.metrics.get(id).value()).collect();
                    cells.push(CellAggregate {
                        dataset: d.clone(),
                        method: m.clone(),
                        metric: id,
                        value: mean(defined.iter().copied())
                            .map_or(Measure::Undefined(Undefined::NoDefinedValues), Measure::Defined),
                        defined: defined.len(),
                        instances: evals.len(),
                    });
                }
                let fitted: Vec<_> = evals.iter().filter_map(|e| e.fit.as_ref()).collect();
                fits.push(FitAggregate {
                    dataset: d.clone(),
                    method: m.clone(),
                    fitted: fitted.len(),
                    instances: evals.len(),
                    r: mean(fitted.iter().map(|f| f.r)),
                    r_squared: mean(fitted.iter().map(|f| f.r_squared)),
                    rmse: mean(fitted.iter().map(|f| f.rmse)),
                    dcpr: mean(evals.iter().filter_map(|e| e.metrics.dcpr.value())),
                });
            }
        }
        BenchmarkResult {
            datasets,
            methods,
            records,
            cells,
            fits,
        }
    }

    pub fn cell(&self, dataset: &str, method: &str, metric: MetricId) -> Option<&CellAggregate> {
        self.cells
            .iter()
            .find(|c| c.dataset == dataset && c.method == method && c.metric == metric)
    }

    pub fn matrix(&self, metric: MetricId) -> BenchmarkMatrix {
        BenchmarkMatrix {
            metric,
            datasets: self.datasets.clone(),
            methods: self.methods.clone(),
            values: self
                .datasets
                .iter()
                .map(|d| {
                    self.methods
                        .iter()
                        .map(|m| self.cell(d, m, metric).and_then(|c| c.value.value()))
                        .collect()
                })
                .collect(),
        }
    }

    pub fn failed(&self) -> usize {
        self.records.iter().filter(|r| r.error.is_some()).count()
    }
}

/// Evaluates every record, at most `max_inflight` at a time.
///
/// Per-record failures are kept in the result; the run itself fails when
/// the failed fraction exceeds `failure_threshold`.
pub fn run_benchmark(
    corpus: &[CorpusRecord],
    provider: &dyn LogprobProvider,
    evaluator: &Evaluator,
    options: &RunOptions,
) -> Result<BenchmarkResult> {
    if corpus.is_empty() {
        return Err(Error::Input("empty corpus".into()));
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(options.max_inflight.max(1))
        .build()
        .map_err(|e| Error::Input(format!("thread pool: {e}")))?;
    let records: Vec<RecordResult> = pool.install(|| {
        corpus
            .par_iter()
            .map(|rec| {
                let outcome = evaluator.evaluate(&rec.text, provider);
                if let Err(e) = &outcome {
                    log::warn!("{}/{}/{}: {e}", rec.dataset, rec.method, rec.instance_id);
                }
                RecordResult {
                    dataset: rec.dataset.clone(),
                    method: rec.method.clone(),
                    instance_id: rec.instance_id.clone(),
                    error: outcome.as_ref().err().map(ToString::to_string),
                    evaluation: outcome.ok(),
                }
            })
            .collect()
    });
    let result = BenchmarkResult::aggregate(records);
    let failed = result.failed();
    if failed as f64 > options.failure_threshold * corpus.len() as f64 {
        return Err(Error::PartialFailure {
            failed,
            total: corpus.len(),
            threshold: options.failure_threshold,
        });
    }
    Ok(result)
}
