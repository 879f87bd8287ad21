//! Contingency tables and independence statistics: Pearson chi-square,
//! expected counts under independence, standardized residuals, Cramér's V
//! and chi-square tail probabilities.
//!
//! Expected counts are formed from exact integer products (u128) before the
//! single division, so marginal products at the 10^13 scale lose nothing.
//! No continuity correction is applied anywhere.

mod gamma;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use gamma::{ln_gamma, reg_gamma_q};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum StatsError {
    #[error("empty dataset: no records to tabulate")]
    EmptyDataset,
    #[error("degenerate table: {0}")]
    DegenerateTable(String),
    #[error("ragged counts: row {row} has {got} cells, expected {expected}")]
    RaggedCounts { row: usize, got: usize, expected: usize },
}

/// Labeled r×c count matrix with derived marginals.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ContingencyTable {
    pub row_labels: Vec<String>,
    pub col_labels: Vec<String>,
    /// Row-major counts.
    pub counts: Vec<Vec<u64>>,
    pub row_totals: Vec<u64>,
    pub col_totals: Vec<u64>,
    pub grand_total: u64,
}

impl ContingencyTable {
    /// Build from explicit labels and counts (row-major).
    pub fn from_counts(
        row_labels: Vec<String>,
        col_labels: Vec<String>,
        counts: Vec<Vec<u64>>,
    ) -> Result<Self, StatsError> {
        if row_labels.is_empty() || col_labels.is_empty() {
            return Err(StatsError::EmptyDataset);
        }
        let c = col_labels.len();
        for (i, row) in counts.iter().enumerate() {
            if row.len() != c {
                return Err(StatsError::RaggedCounts { row: i, got: row.len(), expected: c });
            }
        }
        if counts.len() != row_labels.len() {
            return Err(StatsError::RaggedCounts {
                row: counts.len(),
                got: counts.len(),
                expected: row_labels.len(),
            });
        }
        let row_totals: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
        let col_totals: Vec<u64> =
            (0..c).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        let grand_total = row_totals.iter().sum();
        if grand_total == 0 {
            return Err(StatsError::EmptyDataset);
        }
        Ok(ContingencyTable { row_labels, col_labels, counts, row_totals, col_totals, grand_total })
    }

    pub fn n_rows(&self) -> usize {
        self.row_labels.len()
    }

    pub fn n_cols(&self) -> usize {
        self.col_labels.len()
    }

    /// Cell count by label pair; absent labels count zero.
    pub fn cell(&self, row_label: &str, col_label: &str) -> u64 {
        match (
            self.row_labels.iter().position(|l| l == row_label),
            self.col_labels.iter().position(|l| l == col_label),
        ) {
            (Some(i), Some(j)) => self.counts[i][j],
            _ => 0,
        }
    }
}

/// Incremental builder with an associative merge, for partitioned scans.
#[derive(Debug, Clone, Default)]
pub struct ContingencyBuilder {
    cells: BTreeMap<(String, String), u64>,
}

impl ContingencyBuilder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn observe(&mut self, row_label: &str, col_label: &str) {
        *self.cells.entry((row_label.to_string(), col_label.to_string())).or_insert(0) += 1;
    }

    pub fn merge(&mut self, other: &ContingencyBuilder) {
        for (k, v) in &other.cells {
            *self.cells.entry(k.clone()).or_insert(0) += v;
        }
    }

    /// Freeze into a table. Labels come out sorted lexicographically so the
    /// matrix layout is reproducible across runs.
    pub fn finish(&self) -> Result<ContingencyTable, StatsError> {
        if self.cells.is_empty() {
            return Err(StatsError::EmptyDataset);
        }
        let mut row_labels: Vec<String> = Vec::new();
        let mut col_labels: Vec<String> = Vec::new();
        for (r, c) in self.cells.keys() {
            if !row_labels.contains(r) {
                row_labels.push(r.clone());
            }
            if !col_labels.contains(c) {
                col_labels.push(c.clone());
            }
        }
        row_labels.sort();
        col_labels.sort();
        let counts: Vec<Vec<u64>> = row_labels
            .iter()
            .map(|r| {
                col_labels
                    .iter()
                    .map(|c| *self.cells.get(&(r.clone(), c.clone())).unwrap_or(&0))
                    .collect()
            })
            .collect();
        ContingencyTable::from_counts(row_labels, col_labels, counts)
    }
}

/// Cross-tabulate a record stream under two key functions.
pub fn build_contingency<T>(
    records: impl IntoIterator<Item = T>,
    row_key: impl Fn(&T) -> String,
    col_key: impl Fn(&T) -> String,
) -> Result<ContingencyTable, StatsError> {
    let mut b = ContingencyBuilder::new();
    for rec in records {
        b.observe(&row_key(&rec), &col_key(&rec));
    }
    b.finish()
}

/// Expected counts under independence: E_ij = row_i · col_j / grand.
/// The numerator is formed exactly in integers before the division.
pub fn expected_counts(t: &ContingencyTable) -> Result<Vec<Vec<f64>>, StatsError> {
    if t.grand_total == 0 {
        return Err(StatsError::EmptyDataset);
    }
    let g = t.grand_total as f64;
    Ok(t.row_totals
        .iter()
        .map(|&ri| {
            t.col_totals
                .iter()
                .map(|&cj| (ri as u128 * cj as u128) as f64 / g)
                .collect()
        })
        .collect())
}

/// Standardized residuals Z_ij = (O_ij − E_ij) / sqrt(E_ij).
///
/// A zero-count cell yields exactly −sqrt(E): the algebraic identity is
/// applied directly rather than through the division.
pub fn standardized_residuals(t: &ContingencyTable) -> Result<Vec<Vec<f64>>, StatsError> {
    let expected = expected_counts(t)?;
    check_marginals(t)?;
    Ok(t.counts
        .iter()
        .zip(&expected)
        .map(|(obs_row, exp_row)| {
            obs_row
                .iter()
                .zip(exp_row)
                .map(|(&o, &e)| {
                    if o == 0 {
                        -e.sqrt()
                    } else {
                        (o as f64 - e) / e.sqrt()
                    }
                })
                .collect()
        })
        .collect())
}

fn check_marginals(t: &ContingencyTable) -> Result<(), StatsError> {
    if let Some(i) = t.row_totals.iter().position(|&v| v == 0) {
        return Err(StatsError::DegenerateTable(format!(
            "row `{}` has zero total, expected counts vanish",
            t.row_labels[i]
        )));
    }
    if let Some(j) = t.col_totals.iter().position(|&v| v == 0) {
        return Err(StatsError::DegenerateTable(format!(
            "column `{}` has zero total, expected counts vanish",
            t.col_labels[j]
        )));
    }
    Ok(())
}

/// Cramér's V = sqrt(χ² / (N · min(r−1, c−1))).
pub fn cramers_v(statistic: f64, grand_total: u64, r: usize, c: usize) -> Result<f64, StatsError> {
    let k = r.min(c).saturating_sub(1);
    if k == 0 {
        return Err(StatsError::DegenerateTable(
            "Cramér's V needs at least two rows and two columns".into(),
        ));
    }
    if grand_total == 0 {
        return Err(StatsError::EmptyDataset);
    }
    Ok((statistic / (grand_total as f64 * k as f64)).sqrt().min(1.0))
}

/// Tail probability with its exact natural log. When the linear value
/// underflows it is clamped to the smallest positive normal f64; `log_p`
/// stays exact.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailProbability {
    pub p: f64,
    pub log_p: f64,
}

/// Upper-tail probability of the chi-square distribution:
/// Q(df/2, x/2) via the regularized incomplete gamma function.
pub fn chi_square_sf(x: f64, df: usize) -> TailProbability {
    debug_assert!(df >= 1);
    let x = x.max(0.0);
    let (q, ln_q) = reg_gamma_q(df as f64 / 2.0, x / 2.0);
    TailProbability { p: q.max(f64::MIN_POSITIVE).min(1.0), log_p: ln_q.min(0.0) }
}

/// Full chi-square test result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChiSquareResult {
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub log_p: f64,
    pub expected: Vec<Vec<f64>>,
    pub residuals: Vec<Vec<f64>>,
    pub cramers_v: f64,
}

/// Pearson chi-square test of independence on a contingency table.
pub fn chi_square_test(t: &ContingencyTable) -> Result<ChiSquareResult, StatsError> {
    check_marginals(t)?;
    let (r, c) = (t.n_rows(), t.n_cols());
    let df = (r - 1) * (c - 1);
    if df == 0 {
        return Err(StatsError::DegenerateTable(
            "test of independence needs at least a 2x2 table".into(),
        ));
    }
    let expected = expected_counts(t)?;
    let mut statistic = 0.0;
    for (obs_row, exp_row) in t.counts.iter().zip(&expected) {
        for (&o, &e) in obs_row.iter().zip(exp_row) {
            let d = o as f64 - e;
            statistic += d * d / e;
        }
    }
    let tail = chi_square_sf(statistic, df);
    let residuals = standardized_residuals(t)?;
    let v = cramers_v(statistic, t.grand_total, r, c)?;
    Ok(ChiSquareResult {
        statistic,
        df,
        p_value: tail.p,
        log_p: tail.log_p,
        expected,
        residuals,
        cramers_v: v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table(counts: Vec<Vec<u64>>) -> ContingencyTable {
        let r = counts.len();
        let c = counts[0].len();
        ContingencyTable::from_counts(
            (0..r).map(|i| format!("r{i}")).collect(),
            (0..c).map(|j| format!("c{j}")).collect(),
            counts,
        )
        .unwrap()
    }

    #[test]
    fn builder_matches_hand_counts() {
        let recs = [("h", "D"), ("h", "D"), ("n", "N"), ("n", "N")];
        let t = build_contingency(recs.iter(), |r| r.0.into(), |r| r.1.into()).unwrap();
        assert_eq!(t.row_labels, vec!["h", "n"]);
        assert_eq!(t.col_labels, vec!["D", "N"]);
        assert_eq!(t.counts, vec![vec![2, 0], vec![0, 2]]);
        assert_eq!(t.grand_total, 4);
    }

    #[test]
    fn single_record_builds_one_by_one() {
        let t = build_contingency([("n", "D")].iter(), |r| r.0.into(), |r| r.1.into()).unwrap();
        assert_eq!((t.n_rows(), t.n_cols(), t.grand_total), (1, 1, 1));
    }

    #[test]
    fn empty_stream_is_an_error() {
        let r = build_contingency(Vec::<(&str, &str)>::new(), |r| r.0.into(), |r| r.1.into());
        assert!(matches!(r, Err(StatsError::EmptyDataset)));
    }

    #[test]
    fn uniform_table_has_uniform_expectation_and_zero_statistic() {
        let t = table(vec![vec![5, 5], vec![5, 5]]);
        let e = expected_counts(&t).unwrap();
        assert!(e.iter().flatten().all(|&v| v == 5.0));
        let res = chi_square_test(&t).unwrap();
        assert_eq!(res.statistic, 0.0);
        assert_eq!(res.p_value, 1.0);
        assert_eq!(res.cramers_v, 0.0);
        assert!(res.residuals.iter().flatten().all(|&z| z == 0.0));
    }

    #[test]
    fn diagonal_two_by_two() {
        // Four cells, each (±5)²/5 = 5, so χ² = 20 with df 1; perfect
        // association makes V = 1.
        let t = table(vec![vec![10, 0], vec![0, 10]]);
        let res = chi_square_test(&t).unwrap();
        assert!((res.statistic - 20.0).abs() < 1e-12);
        assert_eq!(res.df, 1);
        assert!((res.cramers_v - 1.0).abs() < 1e-12);
        let e = expected_counts(&t).unwrap();
        assert!(e.iter().flatten().all(|&v| v == 5.0));
    }

    #[test]
    fn zero_cell_residual_is_exactly_minus_root_e() {
        let t = table(vec![vec![10, 0], vec![0, 10]]);
        let e = expected_counts(&t).unwrap();
        let z = standardized_residuals(&t).unwrap();
        assert_eq!(z[0][1], -e[0][1].sqrt());
        assert_eq!(z[1][0], -e[1][0].sqrt());
    }

    #[test]
    fn degenerate_marginal_is_reported() {
        let t = table(vec![vec![3, 0], vec![5, 0]]);
        assert!(matches!(chi_square_test(&t), Err(StatsError::DegenerateTable(_))));
        assert!(matches!(standardized_residuals(&t), Err(StatsError::DegenerateTable(_))));
    }

    #[test]
    fn cramers_v_rejects_single_row_or_column() {
        assert!(matches!(cramers_v(1.0, 10, 1, 3), Err(StatsError::DegenerateTable(_))));
        assert!(matches!(cramers_v(1.0, 10, 3, 1), Err(StatsError::DegenerateTable(_))));
        assert_eq!(cramers_v(0.0, 10, 2, 2).unwrap(), 0.0);
    }

    #[test]
    fn sf_critical_values() {
        // Closed form for df = 2: Q = exp(-x/2).
        let t = chi_square_sf(5.991, 2);
        assert!((t.p - (-5.991_f64 / 2.0).exp()).abs() < 1e-15);
        assert!((t.p - 0.05).abs() < 1e-3);
        // df = 1 value cross-checked in the acceptance suite against an
        // independent quadrature oracle.
        let t1 = chi_square_sf(3.841, 1);
        assert!((t1.p - 0.05).abs() < 1e-3);
        assert_eq!(chi_square_sf(0.0, 5).p, 1.0);
    }

    #[test]
    fn sf_underflow_clamps_linear_and_keeps_log() {
        let t = chi_square_sf(1_474_795.20, 2);
        assert_eq!(t.p, f64::MIN_POSITIVE);
        assert!((t.log_p - (-1_474_795.20 / 2.0)).abs() < 1e-3 * 737_397.6);
    }

    #[test]
    fn df2_closed_form_over_range() {
        let mut x = 0.0;
        while x <= 700.0 {
            let t = chi_square_sf(x, 2);
            let exact = (-x / 2.0).exp();
            assert!(
                (t.p - exact).abs() <= 1e-12 * exact,
                "x={x}: got {} want {exact}",
                t.p
            );
            x += 3.7;
        }
    }

    #[test]
    fn residual_squares_sum_to_statistic() {
        let t = table(vec![vec![13, 2, 40], vec![7, 21, 9]]);
        let res = chi_square_test(&t).unwrap();
        let sum: f64 = res.residuals.iter().flatten().map(|z| z * z).sum();
        assert!((sum - res.statistic).abs() <= 1e-9 * res.statistic);
    }

    #[test]
    fn permutation_invariance() {
        let t = table(vec![vec![13, 2, 40], vec![7, 21, 9]]);
        let permuted = table(vec![vec![9, 21, 7], vec![40, 2, 13]]);
        let a = chi_square_test(&t).unwrap();
        let b = chi_square_test(&permuted).unwrap();
        assert!((a.statistic - b.statistic).abs() <= 1e-9 * a.statistic);
        assert_eq!(a.df, b.df);
    }

    #[test]
    fn expected_preserves_marginals() {
        let t = table(vec![vec![13, 2, 40], vec![7, 21, 9]]);
        let e = expected_counts(&t).unwrap();
        for (i, row) in e.iter().enumerate() {
            let s: f64 = row.iter().sum();
            assert!((s - t.row_totals[i] as f64).abs() < 1e-9 * t.row_totals[i] as f64);
        }
        for j in 0..t.n_cols() {
            let s: f64 = e.iter().map(|r| r[j]).sum();
            assert!((s - t.col_totals[j] as f64).abs() < 1e-9 * t.col_totals[j] as f64);
        }
    }

    #[test]
    fn builder_merge_equals_single_pass() {
        let recs: Vec<(String, String)> = (0..100)
            .map(|i| (format!("r{}", i % 3), format!("c{}", i % 4)))
            .collect();
        let whole = build_contingency(recs.iter(), |r| r.0.clone(), |r| r.1.clone()).unwrap();
        let mut left = ContingencyBuilder::new();
        for r in &recs[..37] {
            left.observe(&r.0, &r.1);
        }
        let mut right = ContingencyBuilder::new();
        for r in &recs[37..] {
            right.observe(&r.0, &r.1);
        }
        left.merge(&right);
        assert_eq!(left.finish().unwrap(), whole);
    }
}
