//! Rank-based comparison of methods across datasets: ranks with a missing
//! value policy, the Friedman omnibus test, Nemenyi post-hoc p-values and
//! the critical difference.

pub mod dist;
pub mod table;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metrics::{Direction, MetricId};

pub use dist::{chi2_sf, studentized_range_isf, studentized_range_sf};
pub use table::BenchmarkMatrix;

/// How missing (undefined) cells are ranked within a dataset row.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MissingRankPolicy {
    /// Missing cells share the mid-rank of the last `k - d` positions, so
    /// every row still sums to `k(k+1)/2`.
    #[default]
    MidRank,
    /// Missing cells all receive rank `d + 1`.
    NextRank,
}

/// Ranks one dataset row: 1 is best under `direction`, ties get mid-ranks.
pub fn rank_row(values: &[Option<f64>], direction: Direction, policy: MissingRankPolicy) -> Result<Vec<f64>> {
    let mut defined: Vec<(usize, f64)> = values
        .iter()
        .enumerate()
        .filter_map(|(i, v)| v.map(|v| (i, v)))
        .collect();
    if defined.is_empty() {
        return Err(Error::Input("cannot rank a row with no defined values".into()));
    }
    if defined.iter().any(|(_, v)| !v.is_finite()) {
        return Err(Error::Input("cannot rank non-finite values".into()));
    }
    defined.sort_by(|a, b| match direction {
        Direction::Lower => a.1.total_cmp(&b.1),
        Direction::Higher => b.1.total_cmp(&a.1),
    });

    let k = values.len();
    let d = defined.len();
    let missing_rank = match policy {
        MissingRankPolicy::MidRank => (d + 1 + k) as f64 / 2.0,
        MissingRankPolicy::NextRank => (d + 1) as f64,
    };
    let mut ranks = vec![missing_rank; k];
    let mut i = 0;
    while i < d {
        let mut j = i;
        while j + 1 < d && defined[j + 1].1 == defined[i].1 {
            j += 1;
        }
        let mid = (i + j + 2) as f64 / 2.0;
        for &(idx, _) in &defined[i..=j] {
            ranks[idx] = mid;
        }
        i = j + 1;
    }
    Ok(ranks)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankTable {
    pub methods: Vec<String>,
    pub datasets: Vec<String>,
    /// `ranks[dataset][method]`.
    pub ranks: Vec<Vec<f64>>,
    pub average_ranks: Vec<f64>,
}

impl RankTable {
    pub fn k(&self) -> usize {
        self.methods.len()
    }

    pub fn n(&self) -> usize {
        self.datasets.len()
    }

    /// Builds a table directly from rank rows.
    pub fn from_ranks(methods: Vec<String>, datasets: Vec<String>, ranks: Vec<Vec<f64>>) -> Result<Self> {
        if ranks.len() != datasets.len() || ranks.iter().any(|r| r.len() != methods.len()) {
            return Err(Error::Input("rank table shape does not match labels".into()));
        }
        let n = ranks.len().max(1) as f64;
        let average_ranks = (0..methods.len())
            .map(|j| ranks.iter().map(|row| row[j]).sum::<f64>() / n)
            .collect();
        Ok(RankTable {
            methods,
            datasets,
            ranks,
            average_ranks,
        })
    }
}

pub fn rank_with_missing(matrix: &BenchmarkMatrix, policy: MissingRankPolicy) -> Result<RankTable> {
    let direction = matrix.metric.direction();
    let ranks = matrix
        .values
        .iter()
        .zip(&matrix.datasets)
        .map(|(row, ds)| {
            rank_row(row, direction, policy).map_err(|e| Error::Input(format!("{} / {ds}: {e}", matrix.metric)))
        })
        .collect::<Result<Vec<_>>>()?;
    RankTable::from_ranks(matrix.methods.clone(), matrix.datasets.clone(), ranks)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FriedmanResult {
    pub chi2: f64,
    pub df: usize,
    pub p: f64,
    pub k: usize,
    pub n: usize,
}

/// Friedman statistic over a rank table, optionally divided by the
/// standard tie correction `1 - Σ(t³ - t) / (N k (k² - 1))`.
pub fn friedman(table: &RankTable, tie_correction: bool) -> Result<FriedmanResult> {
    let (k, n) = (table.k(), table.n());
    if k < 3 {
        return Err(Error::Input(format!("friedman needs k >= 3 methods, got {k}; use sign test")));
    }
    if n < 2 {
        return Err(Error::Input(format!("friedman needs N >= 2 datasets, got {n}")));
    }
    let (kf, nf) = (k as f64, n as f64);
    let centre = (kf + 1.0) / 2.0;
    let mut chi2 = 12.0 * nf / (kf * (kf + 1.0))
        * table.average_ranks.iter().map(|r| (r - centre).powi(2)).sum::<f64>();
    if tie_correction {
        let ties: f64 = table.ranks.iter().map(|row| tie_sum(row)).sum();
        let c = 1.0 - ties / (nf * kf * (kf * kf - 1.0));
        chi2 = if c > 0.0 { chi2 / c } else { 0.0 };
    }
    let df = k - 1;
    Ok(FriedmanResult {
        chi2,
        df,
        p: chi2_sf(chi2, df as f64),
        k,
        n,
    })
}

fn tie_sum(row: &[f64]) -> f64 {
    let mut sorted = row.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut total = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j + 1 < sorted.len() && sorted[j + 1] == sorted[i] {
            j += 1;
        }
        let t = (j - i + 1) as f64;
        total += t * t * t - t;
        i = j + 1;
    }
    total
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NemenyiMatrix {
    pub methods: Vec<String>,
    /// Symmetric, unit diagonal.
    pub p: Vec<Vec<f64>>,
}

impl NemenyiMatrix {
    pub fn get(&self, a: &str, b: &str) -> Option<f64> {
        let i = self.methods.iter().position(|m| m == a)?;
        let j = self.methods.iter().position(|m| m == b)?;
        Some(self.p[i][j])
    }
}

fn rank_se(k: usize, n: usize) -> f64 {
    let (k, n) = (k as f64, n as f64);
    (k * (k + 1.0) / (6.0 * n)).sqrt()
}

#[allow(clippy::needless_range_loop)]
pub fn nemenyi(table: &RankTable) -> Result<NemenyiMatrix> {
    let (k, n) = (table.k(), table.n());
    if k < 2 || n < 1 {
        return Err(Error::Input("nemenyi needs at least two methods and one dataset".into()));
    }
    let se = rank_se(k, n);
    let mut p = vec![vec![1.0; k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let d = (table.average_ranks[i] - table.average_ranks[j]).abs() / se;
            let v = studentized_range_sf(d * std::f64::consts::SQRT_2, k);
            p[i][j] = v;
            p[j][i] = v;
        }
    }
    Ok(NemenyiMatrix {
        methods: table.methods.clone(),
        p,
    })
}

/// Smallest average-rank gap that is significant at `alpha`.
pub fn critical_difference(k: usize, n: usize, alpha: f64) -> f64 {
    studentized_range_isf(alpha, k) / std::f64::consts::SQRT_2 * rank_se(k, n)
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(default)]
pub struct StatsConfig {
    pub alpha: f64,
    pub tie_correction: bool,
    /// Missing-value policy for the ranks fed to the Friedman test.
    pub missing_policy: MissingRankPolicy,
    /// Missing-value policy for the ranks fed to the Nemenyi test.
    pub posthoc_missing_policy: MissingRankPolicy,
}

impl Default for StatsConfig {
    fn default() -> Self {
        StatsConfig {
            alpha: 0.05,
            tie_correction: true,
            missing_policy: MissingRankPolicy::MidRank,
            posthoc_missing_policy: MissingRankPolicy::NextRank,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricStats {
    pub metric: MetricId,
    pub ranks: RankTable,
    pub friedman: FriedmanResult,
    pub critical_difference: f64,
    /// `None` when the omnibus test is not significant.
    pub nemenyi: Option<NemenyiMatrix>,
}

impl MetricStats {
    pub fn significant(&self, alpha: f64) -> bool {
        self.friedman.p < alpha
    }
}

/// Friedman test for one metric, followed by Nemenyi when significant.
pub fn analyze_metric(matrix: &BenchmarkMatrix, config: &StatsConfig) -> Result<MetricStats> {
    let ranks = rank_with_missing(matrix, config.missing_policy)?;
    let friedman = friedman(&ranks, config.tie_correction)?;
    let nemenyi = if friedman.p < config.alpha {
        Some(nemenyi(&rank_with_missing(matrix, config.posthoc_missing_policy)?)?)
    } else {
        None
    };
    Ok(MetricStats {
        metric: matrix.metric,
        critical_difference: critical_difference(ranks.k(), ranks.n(), config.alpha),
        ranks,
        friedman,
        nemenyi,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn names(v: &[&str]) -> Vec<String> {
        v.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn missing_cells_share_last_positions() {
        let r = rank_row(&[Some(3.1), Some(2.0), None, None], Direction::Lower, MissingRankPolicy::MidRank).unwrap();
        assert_eq!(r, [2.0, 1.0, 3.5, 3.5]);
        let r = rank_row(&[Some(3.1), Some(2.0), None, None], Direction::Lower, MissingRankPolicy::NextRank).unwrap();
        assert_eq!(r, [2.0, 1.0, 3.0, 3.0]);
        let r = rank_row(&[Some(1.0); 5], Direction::Higher, MissingRankPolicy::MidRank).unwrap();
        assert_eq!(r, [3.0; 5]);
        assert!(rank_row(&[None, None], Direction::Lower, MissingRankPolicy::MidRank).is_err());
    }

    #[test]
    fn compas_ppl_column_order() {
        let v = [4.50, 5.10, 11.70, 11.42, 7.95, 9.60, 9.65].map(Some);
        let r = rank_row(&v, Direction::Lower, MissingRankPolicy::MidRank).unwrap();
        assert_eq!(r, [1.0, 2.0, 7.0, 6.0, 3.0, 4.0, 5.0]);
    }

    // Hand-computed 3-method / 4-block example (lower is better).
    //   block 1: A=1 B=2 C=3 -> ranks 1 2 3
    //   block 2: A=2 B=1 C=3 -> ranks 2 1 3
    //   block 3: A=1 B=3 C=2 -> ranks 1 3 2
    //   block 4: A=1 B=2 C=3 -> ranks 1 2 3
    // rank sums 5, 8, 11 -> means 1.25, 2.00, 2.75
    // chi2 = 12*4/(3*4) * (0.75² + 0 + 0.75²) = 4.5, df 2, p = e^-2.25
    // SE = sqrt(3*4/24) = sqrt(1/2); A vs C: q = (1.5/SE)*sqrt(2) = 3.0
    fn hand_matrix(block4: [f64; 3]) -> BenchmarkMatrix {
        BenchmarkMatrix {
            metric: MetricId::Ppl,
            datasets: names(&["b1", "b2", "b3", "b4"]),
            methods: names(&["A", "B", "C"]),
            values: vec![
                vec![Some(1.0), Some(2.0), Some(3.0)],
                vec![Some(2.0), Some(1.0), Some(3.0)],
                vec![Some(1.0), Some(3.0), Some(2.0)],
                block4.map(Some).to_vec(),
            ],
        }
    }

    #[test]
    fn hand_computed_friedman_and_nemenyi() {
        let t = rank_with_missing(&hand_matrix([1.0, 2.0, 3.0]), MissingRankPolicy::MidRank).unwrap();
        assert_eq!(t.average_ranks, [1.25, 2.0, 2.75]);
        let f = friedman(&t, false).unwrap();
        assert!((f.chi2 - 4.5).abs() < 1e-12);
        assert_eq!(f.df, 2);
        assert!((f.p - (-2.25f64).exp()).abs() < 1e-12);
        // no ties: the correction is a no-op
        assert!((friedman(&t, true).unwrap().chi2 - 4.5).abs() < 1e-12);

        let nm = nemenyi(&t).unwrap();
        // A vs C: studentized range sf(3.0, 3)
        assert!((nm.get("A", "C").unwrap() - 0.085542572).abs() < 1e-7);
        assert_eq!(nm.get("B", "B"), Some(1.0));
        assert_eq!(nm.get("A", "B"), nm.get("B", "A"));
    }

    // Same blocks with block 4 tied: A=1 B=2 C=2 -> ranks 1 2.5 2.5.
    // means 1.25, 2.125, 2.625; plain chi2 = 4 * 0.96875 = 3.875
    // correction 1 - 6/(4*3*8) = 0.9375 -> chi2 = 4.1333..., p = e^(-chi2/2)
    #[test]
    fn hand_computed_tie_correction() {
        let t = rank_with_missing(&hand_matrix([1.0, 2.0, 2.0]), MissingRankPolicy::MidRank).unwrap();
        assert_eq!(t.ranks[3], [1.0, 2.5, 2.5]);
        assert!((friedman(&t, false).unwrap().chi2 - 3.875).abs() < 1e-12);
        let f = friedman(&t, true).unwrap();
        assert!((f.chi2 - 3.875 / 0.9375).abs() < 1e-12);
        assert!((f.p - (-f.chi2 / 2.0).exp()).abs() < 1e-12);
    }

    #[test]
    fn identical_ranks_give_zero_statistic() {
        let m = BenchmarkMatrix {
            metric: MetricId::Ttr,
            datasets: names(&["x", "y"]),
            methods: names(&["a", "b", "c"]),
            values: vec![vec![Some(0.5); 3], vec![Some(0.5); 3]],
        };
        let t = rank_with_missing(&m, MissingRankPolicy::MidRank).unwrap();
        for tc in [false, true] {
            let f = friedman(&t, tc).unwrap();
            assert_eq!(f.chi2, 0.0);
            assert_eq!(f.p, 1.0);
        }
        assert!(nemenyi(&t).unwrap().p.iter().flatten().all(|&p| p == 1.0));
    }

    #[test]
    fn friedman_rejects_two_methods() {
        let t = RankTable::from_ranks(names(&["a", "b"]), names(&["x", "y"]), vec![vec![1.0, 2.0]; 2]).unwrap();
        assert!(friedman(&t, true).is_err());
    }

    #[test]
    fn critical_difference_values() {
        assert!((critical_difference(7, 6, 0.05) - 3.6772011).abs() < 1e-5);
        for n in [1, 4, 9] {
            let want = 1.959964 / (n as f64).sqrt();
            assert!((critical_difference(2, n, 0.05) - want).abs() < 1e-5);
        }
        let half = critical_difference(7, 24, 0.05);
        assert!((half - critical_difference(7, 6, 0.05) / 2.0).abs() < 1e-9);
    }

    #[test]
    fn maximal_separation_is_highly_significant() {
        let methods = names(&["a", "b", "c", "d", "e", "f", "g"]);
        let datasets = names(&["1", "2", "3", "4", "5", "6"]);
        let row: Vec<f64> = (1..=7).map(f64::from).collect();
        let t = RankTable::from_ranks(methods, datasets, vec![row; 6]).unwrap();
        let p = nemenyi(&t).unwrap().get("a", "g").unwrap();
        assert!(p < 0.001);
        assert!((p - 3.0978496e-5).abs() < 1e-9);
    }

    fn matrix() -> impl Strategy<Value = BenchmarkMatrix> {
        (3usize..8, 2usize..7).prop_flat_map(|(k, n)| {
            proptest::collection::vec(
                proptest::collection::vec(prop_oneof![4 => (0u8..6).prop_map(|v| Some(v as f64)), 1 => Just(None)], k),
                n,
            )
            .prop_filter("each row needs a defined value", |rows| {
                rows.iter().all(|r| r.iter().any(Option::is_some))
            })
            .prop_map(move |values| BenchmarkMatrix {
                metric: MetricId::Ccpr,
                datasets: (0..n).map(|i| format!("d{i}")).collect(),
                methods: (0..k).map(|j| format!("m{j}")).collect(),
                values,
            })
        })
    }

    proptest! {
        #[test]
        fn mid_rank_rows_sum_to_triangular(m in matrix()) {
            let t = rank_with_missing(&m, MissingRankPolicy::MidRank).unwrap();
            let k = t.k() as f64;
            for row in &t.ranks {
                prop_assert!((row.iter().sum::<f64>() - k * (k + 1.0) / 2.0).abs() < 1e-9);
                prop_assert!(row.iter().all(|&r| (1.0..=k).contains(&r)));
            }
        }

        #[test]
        fn friedman_invariant_under_monotone_transform(m in matrix()) {
            let mut t2 = m.clone();
            for row in &mut t2.values {
                for v in row.iter_mut().flatten() {
                    *v = (*v * 3.0 + 1.0).exp();
                }
            }
            let a = friedman(&rank_with_missing(&m, MissingRankPolicy::MidRank).unwrap(), true).unwrap();
            let b = friedman(&rank_with_missing(&t2, MissingRankPolicy::MidRank).unwrap(), true).unwrap();
            prop_assert!((a.chi2 - b.chi2).abs() < 1e-9);
        }

        #[test]
        fn nemenyi_symmetric_unit_diagonal(m in matrix()) {
            let nm = nemenyi(&rank_with_missing(&m, MissingRankPolicy::MidRank).unwrap()).unwrap();
            for i in 0..nm.p.len() {
                prop_assert_eq!(nm.p[i][i], 1.0);
                for j in 0..nm.p.len() {
                    prop_assert_eq!(nm.p[i][j], nm.p[j][i]);
                    prop_assert!((0.0..=1.0).contains(&nm.p[i][j]));
                }
            }
        }
    }
}
