//! Dataset x method value matrices and their CSV forms.

use std::collections::HashMap;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::MetricId;

/// Values of one metric, `values[dataset][method]`, `None` when missing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkMatrix {
    pub metric: MetricId,
    pub datasets: Vec<String>,
    pub methods: Vec<String>,
    pub values: Vec<Vec<Option<f64>>>,
}

/// Cell text that means "no value".
pub fn is_missing(cell: &str) -> bool {
    matches!(cell.trim(), "" | "-" | "–" | "--" | "NA" | "na" | "undefined")
}

fn parse_cell(cell: &str, line: usize) -> Result<Option<f64>> {
    if is_missing(cell) {
        return Ok(None);
    }
    cell.trim()
        .parse::<f64>()
        .map(Some)
        .map_err(|_| Error::Input(format!("line {line}: not a number: {cell:?}")))
}

fn push_unique(v: &mut Vec<String>, s: &str) {
    if !v.iter().any(|x| x == s) {
        v.push(s.to_string());
    }
}

impl BenchmarkMatrix {
    /// Builds a matrix from `(dataset, method, value)` cells; labels keep
    /// first-appearance order and absent cells are missing.
    pub fn from_cells<'a>(
        metric: MetricId,
        cells: impl IntoIterator<Item = (&'a str, &'a str, Option<f64>)>,
    ) -> Self {
        let mut datasets = Vec::new();
        let mut methods = Vec::new();
        let mut map = HashMap::new();
        for (d, m, v) in cells {
            push_unique(&mut datasets, d);
            push_unique(&mut methods, m);
            map.insert((d.to_string(), m.to_string()), v);
        }
        let values = datasets
            .iter()
            .map(|d| {
                methods
                    .iter()
                    .map(|m| map.get(&(d.clone(), m.clone())).copied().flatten())
                    .collect()
            })
            .collect();
        BenchmarkMatrix {
            metric,
            datasets,
            methods,
            values,
        }
    }

    pub fn value(&self, dataset: &str, method: &str) -> Option<f64> {
        let i = self.datasets.iter().position(|d| d == dataset)?;
        let j = self.methods.iter().position(|m| m == method)?;
        self.values[i][j]
    }
}

/// Reads metric matrices from CSV in either layout:
///
/// * long: `dataset,method,metric,value`
/// * wide: `dataset,method,<metric>,<metric>,...`
///
/// Matrices come back in summary-table metric order.
pub fn read_matrices<R: Read>(reader: R) -> Result<Vec<BenchmarkMatrix>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.to_lowercase()).collect();
    let col = |name: &str| headers.iter().position(|h| h == name);
    let (ds, me) = match (col("dataset"), col("method")) {
        (Some(d), Some(m)) => (d, m),
        _ => return Err(Error::Input("results CSV needs dataset and method columns".into())),
    };

    let mut cells: Vec<(MetricId, String, String, Option<f64>)> = Vec::new();
    let long = (col("metric"), col("value"));
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        let line = i + 2;
        let d = rec.get(ds).unwrap_or_default().to_string();
        let m = rec.get(me).unwrap_or_default().to_string();
        if let (Some(mc), Some(vc)) = long {
            let name = rec.get(mc).unwrap_or_default();
            let metric = MetricId::parse(name)
                .ok_or_else(|| Error::Input(format!("line {line}: unknown metric {name:?}")))?;
            cells.push((metric, d, m, parse_cell(rec.get(vc).unwrap_or_default(), line)?));
        } else {
            for (c, h) in headers.iter().enumerate() {
                if c == ds || c == me {
                    continue;
                }
                let metric = MetricId::parse(h)
                    .ok_or_else(|| Error::Input(format!("unknown metric column {h:?}")))?;
                cells.push((metric, d.clone(), m.clone(), parse_cell(rec.get(c).unwrap_or_default(), line)?));
            }
        }
    }
    if cells.is_empty() {
        return Err(Error::Input("results CSV has no rows".into()));
    }
    Ok(MetricId::ALL
        .into_iter()
        .filter(|id| cells.iter().any(|c| c.0 == *id))
        .map(|id| {
            BenchmarkMatrix::from_cells(
                id,
                cells
                    .iter()
                    .filter(|c| c.0 == id)
                    .map(|c| (c.1.as_str(), c.2.as_str(), c.3)),
            )
        })
        .collect())
}

pub fn load_matrices(path: &Path) -> Result<Vec<BenchmarkMatrix>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_matrices(file)
}
