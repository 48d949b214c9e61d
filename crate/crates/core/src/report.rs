//! Report files: long-form results, summary table, rank summaries, fit
//! diagnostics and the Friedman/Nemenyi outputs.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::benchmark::BenchmarkResult;
use crate::error::{Error, Result};
use crate::metrics::{MetricGroup, MetricId};
use crate::stats::{analyze_metric, rank_with_missing, BenchmarkMatrix, MetricStats, StatsConfig};

/// Rendering of a missing or undefined cell.
pub const MISSING: &str = "–";
pub const NOT_SIGNIFICANT: &str = "omnibus not significant";

pub fn fmt2(v: Option<f64>) -> String {
    v.map_or_else(|| MISSING.to_string(), |v| format!("{v:.2}"))
}

/// p-value at 3 decimals, `<0.001` below that.
pub fn fmt_p(p: f64) -> String {
    if p < 0.001 {
        "<0.001".to_string()
    } else {
        format!("{p:.3}")
    }
}

fn write(path: PathBuf, contents: String, written: &mut Vec<PathBuf>) -> Result<()> {
    fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
    written.push(path);
    Ok(())
}

fn csv_string(rows: Vec<Vec<String>>) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in rows {
        w.write_record(row)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::Input(e.to_string()))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

/// Long form `dataset,method,metric,value`; values at full precision so
/// the file reloads bit-exactly.
pub fn results_csv(result: &BenchmarkResult) -> Result<String> {
    let mut rows = vec![vec!["dataset".into(), "method".into(), "metric".into(), "value".into()]];
    for c in &result.cells {
        rows.push(vec![
            c.dataset.clone(),
            c.method.clone(),
            c.metric.key().into(),
            c.value.value().map_or_else(|| MISSING.to_string(), |v| v.to_string()),
        ]);
    }
    csv_string(rows)
}

/// Summary table: one row per dataset and method, two decimals, best value
/// per dataset and metric in bold.
pub fn summary_md(result: &BenchmarkResult) -> String {
    let mut out = String::from("| Dataset | Method |");
    for id in MetricId::ALL {
        let _ = write!(out, " {} {} |", id.label(), id.direction().arrow());
    }
    out.push_str("\n|---|---|");
    out.push_str(&"---:|".repeat(MetricId::ALL.len()));
    out.push('\n');
    for d in &result.datasets {
        let best: Vec<Option<f64>> = MetricId::ALL
            .iter()
            .map(|&id| {
                let dir = id.direction();
                result
                    .methods
                    .iter()
                    .filter_map(|m| result.cell(d, m, id).and_then(|c| c.value.value()))
                    .fold(None, |acc: Option<f64>, v| match acc {
                        Some(b) if !dir.better(v, b) => Some(b),
                        _ => Some(v),
                    })
            })
            .collect();
        for m in &result.methods {
            if result.cell(d, m, MetricId::Ppl).is_none() {
                continue;
            }
            let _ = write!(out, "| {d} | {m} |");
            for (i, &id) in MetricId::ALL.iter().enumerate() {
                let v = result.cell(d, m, id).and_then(|c| c.value.value());
                let text = fmt2(v);
                if v.is_some() && v == best[i] {
                    let _ = write!(out, " **{text}** |");
                } else {
                    let _ = write!(out, " {text} |");
                }
            }
            out.push('\n');
        }
    }
    out
}

fn rank_summary(result: &BenchmarkResult, config: &StatsConfig) -> Vec<(MetricId, Vec<f64>)> {
    MetricId::ALL
        .into_iter()
        .filter_map(|id| match rank_with_missing(&result.matrix(id), config.missing_policy) {
            Ok(t) => Some((id, t.average_ranks)),
            Err(e) => {
                log::warn!("no ranks for {id}: {e}");
                None
            }
        })
        .collect()
}

/// Average rank per metric and method.
pub fn ranks_csv(result: &BenchmarkResult, config: &StatsConfig) -> Result<String> {
    let mut rows = vec![vec!["metric".into(), "method".into(), "average_rank".into()]];
    for (id, ranks) in rank_summary(result, config) {
        for (m, r) in result.methods.iter().zip(ranks) {
            rows.push(vec![id.key().into(), m.clone(), r.to_string()]);
        }
    }
    csv_string(rows)
}

/// Mean of the average ranks within each metric group.
pub fn groups_csv(result: &BenchmarkResult, config: &StatsConfig) -> Result<String> {
    let summary = rank_summary(result, config);
    let mut rows = vec![vec!["method".into(), "group".into(), "mean_rank".into(), "metrics".into()]];
    for (j, m) in result.methods.iter().enumerate() {
        for (group, name) in [(MetricGroup::Standard, "standard"), (MetricGroup::Narrativity, "narrativity")] {
            let ranks: Vec<f64> = summary
                .iter()
                .filter(|(id, _)| id.group() == group)
                .map(|(_, r)| r[j])
                .collect();
            let value = if ranks.is_empty() {
                MISSING.to_string()
            } else {
                (ranks.iter().sum::<f64>() / ranks.len() as f64).to_string()
            };
            rows.push(vec![m.clone(), name.into(), value, ranks.len().to_string()]);
        }
    }
    csv_string(rows)
}

pub fn fits_csv(result: &BenchmarkResult) -> Result<String> {
    let opt = |v: Option<f64>| v.map_or_else(|| MISSING.to_string(), |v| v.to_string());
    let mut rows = vec![[
        "dataset", "method", "fitted", "instances", "r", "r_squared", "rmse", "dcpr",
    ]
    .map(String::from)
    .to_vec()];
    for f in &result.fits {
        rows.push(vec![
            f.dataset.clone(),
            f.method.clone(),
            f.fitted.to_string(),
            f.instances.to_string(),
            opt(f.r),
            opt(f.r_squared),
            opt(f.rmse),
            opt(f.dcpr),
        ]);
    }
    csv_string(rows)
}

/// Outcome of the rank tests for one metric; `Err` carries why the tests
/// could not run (for example fewer than three methods).
pub type StatsOutcome = (MetricId, std::result::Result<MetricStats, String>);

pub fn run_stats(matrices: &[BenchmarkMatrix], config: &StatsConfig) -> Vec<StatsOutcome> {
    matrices
        .iter()
        .map(|m| (m.metric, analyze_metric(m, config).map_err(|e| e.to_string())))
        .collect()
}

pub fn friedman_csv(outcomes: &[StatsOutcome], alpha: f64) -> Result<String> {
    let mut rows = vec![["metric", "k", "n", "chi2", "df", "p", "critical_difference", "significant"]
        .map(String::from)
        .to_vec()];
    for (id, o) in outcomes {
        if let Ok(s) = o {
            let f = &s.friedman;
            rows.push(vec![
                id.key().into(),
                f.k.to_string(),
                f.n.to_string(),
                f.chi2.to_string(),
                f.df.to_string(),
                f.p.to_string(),
                s.critical_difference.to_string(),
                s.significant(alpha).to_string(),
            ]);
        }
    }
    csv_string(rows)
}

pub fn friedman_md(outcomes: &[StatsOutcome], alpha: f64) -> String {
    let mut out = String::from("| Metric | χ² | df | p | CD |\n|---|---:|---:|---:|---:|\n");
    for (id, o) in outcomes {
        match o {
            Ok(s) => {
                let f = &s.friedman;
                let mark = if s.significant(alpha) { "" } else { " (n.s.)" };
                let _ = writeln!(
                    out,
                    "| {} | {:.2} | {} | {}{mark} | {:.2} |",
                    id.label(),
                    f.chi2,
                    f.df,
                    fmt_p(f.p),
                    s.critical_difference
                );
            }
            Err(e) => {
                let _ = writeln!(out, "| {} | {MISSING} | {MISSING} | {MISSING} | {MISSING} |  <!-- {e} -->", id.label());
            }
        }
    }
    out
}

pub fn nemenyi_csv(outcomes: &[StatsOutcome]) -> Result<String> {
    let mut rows = vec![["metric", "method_a", "method_b", "p", "note"].map(String::from).to_vec()];
    for (id, o) in outcomes {
        match o {
            Ok(s) => match &s.nemenyi {
                Some(nm) => {
                    for i in 0..nm.methods.len() {
                        for j in (i + 1)..nm.methods.len() {
                            rows.push(vec![
                                id.key().into(),
                                nm.methods[i].clone(),
                                nm.methods[j].clone(),
                                nm.p[i][j].to_string(),
                                String::new(),
                            ]);
                        }
                    }
                }
                None => rows.push(vec![id.key().into(), String::new(), String::new(), String::new(), NOT_SIGNIFICANT.into()]),
            },
            Err(e) => rows.push(vec![id.key().into(), String::new(), String::new(), String::new(), e.clone()]),
        }
    }
    csv_string(rows)
}

/// Pairwise p-values, one row per method pair and one column per metric.
pub fn nemenyi_md(outcomes: &[StatsOutcome], alpha: f64) -> String {
    let mut out = String::new();
    let methods = outcomes
        .iter()
        .find_map(|(_, o)| o.as_ref().ok().map(|s| s.ranks.methods.clone()))
        .unwrap_or_default();
    let _ = write!(out, "| Comparison |");
    for (id, _) in outcomes {
        let _ = write!(out, " {} |", id.label());
    }
    out.push_str("\n|---|");
    out.push_str(&"---:|".repeat(outcomes.len()));
    out.push('\n');
    for i in 0..methods.len() {
        for j in (i + 1)..methods.len() {
            let _ = write!(out, "| {} vs {} |", methods[i], methods[j]);
            for (_, o) in outcomes {
                let cell = match o.as_ref().ok().and_then(|s| s.nemenyi.as_ref()) {
                    Some(nm) => {
                        let p = nm.p[i][j];
                        if p < alpha {
                            format!("**{}**", fmt_p(p))
                        } else {
                            fmt_p(p)
                        }
                    }
                    None => "--".to_string(),
                };
                let _ = write!(out, " {cell} |");
            }
            out.push('\n');
        }
    }
    for (id, o) in outcomes {
        match o {
            Ok(s) if s.nemenyi.is_none() => {
                let _ = writeln!(out, "\n{}: {NOT_SIGNIFICANT} (p = {}).", id.label(), fmt_p(s.friedman.p));
            }
            Err(e) => {
                let _ = writeln!(out, "\n{}: {e}.", id.label());
            }
            _ => {}
        }
    }
    out
}

/// Writes friedman.{csv,md} and nemenyi.{csv,md}.
pub fn emit_stats(matrices: &[BenchmarkMatrix], config: &StatsConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let outcomes = run_stats(matrices, config);
    let mut written = Vec::new();
    write(out_dir.join("friedman.csv"), friedman_csv(&outcomes, config.alpha)?, &mut written)?;
    write(out_dir.join("friedman.md"), friedman_md(&outcomes, config.alpha), &mut written)?;
    write(out_dir.join("nemenyi.csv"), nemenyi_csv(&outcomes)?, &mut written)?;
    write(out_dir.join("nemenyi.md"), nemenyi_md(&outcomes, config.alpha), &mut written)?;
    Ok(written)
}

/// Writes every report for a benchmark run into `out_dir`.
pub fn emit_reports(result: &BenchmarkResult, config: &StatsConfig, out_dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(out_dir).map_err(|e| Error::io(out_dir, e))?;
    let mut written = Vec::new();
    write(out_dir.join("results.csv"), results_csv(result)?, &mut written)?;
    let mut records = String::new();
    for r in &result.records {
        records.push_str(&serde_json::to_string(r)?);
        records.push('\n');
    }
    write(out_dir.join("records.jsonl"), records, &mut written)?;
    write(out_dir.join("summary.md"), summary_md(result), &mut written)?;
    write(out_dir.join("ranks.csv"), ranks_csv(result, config)?, &mut written)?;
    write(out_dir.join("groups.csv"), groups_csv(result, config)?, &mut written)?;
    write(out_dir.join("fits.csv"), fits_csv(result)?, &mut written)?;
    let matrices: Vec<BenchmarkMatrix> = MetricId::ALL.iter().map(|&id| result.matrix(id)).collect();
    written.extend(emit_stats(&matrices, config, out_dir)?);
    Ok(written)
}
