//! Five-way verification of a (day/night, confidence) count.
//!
//! The same predicate is counted by five deliberately independent routes —
//! none of them share filtering code — and the result records whether they
//! agree. Disagreement means a computational defect somewhere, which is the
//! point: a headline zero should never rest on one code path.

use serde::{Deserialize, Serialize};

use crate::query::{Predicate, QueryError};
use crate::records::{Confidence, DayNight, FireDetection};
use crate::stats;

/// The predicate being counted: an exact (day/night, confidence) pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct CountPredicate {
    pub daynight: DayNight,
    pub confidence: Confidence,
}

impl CountPredicate {
    /// Render as query-engine text, e.g. `daynight == "N" and confidence == "l"`.
    pub fn to_query(self) -> String {
        format!(
            "daynight == \"{}\" and confidence == \"{}\"",
            self.daynight.as_str(),
            self.confidence.as_str()
        )
    }
}

pub const METHOD_NAMES: [&str; 5] = [
    "Direct boolean filter",
    "Boolean mask sum",
    "Crosstab lookup",
    "Subset value counts",
    "Query engine",
];

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationResult {
    pub method_names: Vec<String>,
    pub counts: Vec<u64>,
    pub agreement: bool,
    pub predicate_description: String,
}

impl VerificationResult {
    fn from_counts(counts: [u64; 5], predicate_description: String) -> Self {
        let agreement = counts.iter().all(|&c| c == counts[0]);
        VerificationResult {
            method_names: METHOD_NAMES.iter().map(|s| s.to_string()).collect(),
            counts: counts.to_vec(),
            agreement,
            predicate_description,
        }
    }
}

/// Method 1: row-iterating filter counter.
pub(crate) fn count_row_filter(records: &[FireDetection], p: CountPredicate) -> u64 {
    records
        .iter()
        .filter(|r| r.daynight == p.daynight && r.confidence == p.confidence)
        .count() as u64
}

/// Method 2: decompose into columnar buffers, build two boolean masks,
/// combine with AND and sum.
pub(crate) fn count_mask_sum(records: &[FireDetection], p: CountPredicate) -> u64 {
    let dn_col: Vec<DayNight> = records.iter().map(|r| r.daynight).collect();
    let conf_col: Vec<Confidence> = records.iter().map(|r| r.confidence).collect();
    let dn_mask: Vec<bool> = dn_col.iter().map(|&d| d == p.daynight).collect();
    let conf_mask: Vec<bool> = conf_col.iter().map(|&c| c == p.confidence).collect();
    dn_mask.iter().zip(&conf_mask).map(|(&a, &b)| u64::from(a & b)).sum()
}

/// Method 3: build the full confidence × day/night crosstab, then read the
/// single cell.
pub(crate) fn count_crosstab(records: &[FireDetection], p: CountPredicate) -> u64 {
    match stats::build_contingency(
        records.iter(),
        |r| r.confidence.as_str().to_string(),
        |r| r.daynight.as_str().to_string(),
    ) {
        Ok(table) => table.cell(p.confidence.as_str(), p.daynight.as_str()),
        // An empty dataset has an empty crosstab; every cell reads zero.
        Err(stats::StatsError::EmptyDataset) => 0,
        Err(_) => unreachable!("crosstab construction only fails on empty input"),
    }
}

/// Method 4: subset to the day/night stratum first, then group the subset
/// into per-confidence value counts and read one entry.
pub(crate) fn count_group_values(records: &[FireDetection], p: CountPredicate) -> u64 {
    let subset: Vec<&FireDetection> =
        records.iter().filter(|r| r.daynight == p.daynight).collect();
    let mut value_counts = std::collections::BTreeMap::<Confidence, u64>::new();
    for r in subset {
        *value_counts.entry(r.confidence).or_insert(0) += 1;
    }
    value_counts.get(&p.confidence).copied().unwrap_or(0)
}

/// Method 5: parse the textual predicate with the query engine and evaluate
/// it row-wise.
pub(crate) fn count_query(records: &[FireDetection], query: &str) -> Result<u64, QueryError> {
    let predicate = Predicate::parse(query)?;
    Ok(records.iter().filter(|r| predicate.matches(r)).count() as u64)
}

/// Count the predicate five independent ways. Method 5 evaluates the
/// canonical textual rendering of the predicate.
pub fn verify_count(
    records: &[FireDetection],
    predicate: CountPredicate,
) -> Result<VerificationResult, QueryError> {
    let query = predicate.to_query();
    verify_count_with_query(records, predicate, &query)
}

/// Like [`verify_count`] but with caller-supplied query text for method 5
/// (the CLI passes its `--query` argument through verbatim).
pub fn verify_count_with_query(
    records: &[FireDetection],
    predicate: CountPredicate,
    query: &str,
) -> Result<VerificationResult, QueryError> {
    let counts = [
        count_row_filter(records, predicate),
        count_mask_sum(records, predicate),
        count_crosstab(records, predicate),
        count_group_values(records, predicate),
        count_query(records, query)?,
    ];
    Ok(VerificationResult::from_counts(counts, query.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::corpus;

    const NIGHT_NOMINAL: CountPredicate =
        CountPredicate { daynight: DayNight::Night, confidence: Confidence::Nominal };

    #[test]
    fn all_five_agree_on_a_known_composition() {
        let records = corpus(&[
            (DayNight::Day, Confidence::High, 3),
            (DayNight::Day, Confidence::Low, 4),
            (DayNight::Day, Confidence::Nominal, 5),
            (DayNight::Night, Confidence::Nominal, 7),
            (DayNight::Night, Confidence::High, 2),
        ]);
        let result = verify_count(&records, NIGHT_NOMINAL).unwrap();
        assert_eq!(result.counts, vec![7, 7, 7, 7, 7]);
        assert!(result.agreement);
    }

    #[test]
    fn absent_category_counts_zero_everywhere() {
        let records = corpus(&[
            (DayNight::Day, Confidence::Low, 6),
            (DayNight::Night, Confidence::Nominal, 4),
        ]);
        let p = CountPredicate { daynight: DayNight::Night, confidence: Confidence::Low };
        let result = verify_count(&records, p).unwrap();
        assert_eq!(result.counts, vec![0; 5]);
        assert!(result.agreement);
    }

    #[test]
    fn empty_dataset_counts_zero_everywhere() {
        let result = verify_count(&[], NIGHT_NOMINAL).unwrap();
        assert_eq!(result.counts, vec![0; 5]);
        assert!(result.agreement);
    }

    #[test]
    fn method_three_equals_the_contingency_cell() {
        let records = corpus(&[
            (DayNight::Day, Confidence::High, 11),
            (DayNight::Night, Confidence::Nominal, 13),
            (DayNight::Night, Confidence::High, 5),
        ]);
        let table = stats::build_contingency(
            records.iter(),
            |r| r.confidence.as_str().to_string(),
            |r| r.daynight.as_str().to_string(),
        )
        .unwrap();
        let via_method = count_crosstab(&records, NIGHT_NOMINAL);
        assert_eq!(via_method, table.cell("n", "N"));
        assert_eq!(via_method, 13);
    }

    #[test]
    fn bad_query_surfaces_a_parse_error_from_method_five_only() {
        let records = corpus(&[(DayNight::Night, Confidence::Nominal, 3)]);
        let err = verify_count_with_query(&records, NIGHT_NOMINAL, "confidence ===");
        assert!(err.is_err());
    }

    /// A deliberately broken mask-sum (OR instead of AND). Substituting it
    /// for method 2 must break the agreement on any corpus where the two
    /// masks differ — evidence the methods are genuinely cross-checking.
    fn count_mask_sum_mutated(records: &[FireDetection], p: CountPredicate) -> u64 {
        let dn_mask: Vec<bool> = records.iter().map(|r| r.daynight == p.daynight).collect();
        let conf_mask: Vec<bool> =
            records.iter().map(|r| r.confidence == p.confidence).collect();
        dn_mask.iter().zip(&conf_mask).map(|(&a, &b)| u64::from(a | b)).sum()
    }

    #[test]
    fn mutated_method_fails_agreement() {
        let records = corpus(&[
            (DayNight::Day, Confidence::Nominal, 5),
            (DayNight::Night, Confidence::Nominal, 7),
        ]);
        let counts = [
            count_row_filter(&records, NIGHT_NOMINAL),
            count_mask_sum_mutated(&records, NIGHT_NOMINAL),
            count_crosstab(&records, NIGHT_NOMINAL),
            count_group_values(&records, NIGHT_NOMINAL),
            count_query(&records, &NIGHT_NOMINAL.to_query()).unwrap(),
        ];
        let agreement = counts.iter().all(|&c| c == counts[0]);
        assert!(!agreement, "the broken method must be caught: {counts:?}");
    }
}
