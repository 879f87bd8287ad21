//! Data-quality validation battery, evaluated in a single streaming pass.
//!
//! Checks: missing values, confidence/day-night validity (surfaced from the
//! reader's skip counters), geographic bounds, brightness typical-range
//! fraction and sample-size adequacy. Counters merge associatively so
//! partitioned scans produce the same report as a single pass.

use serde::{Deserialize, Serialize};

use crate::records::{FireDetection, SatelliteVocabulary, SkipCounts};

/// Tunable QC thresholds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcThresholds {
    /// Inclusive typical brightness range, kelvin.
    pub brightness_typical: (f64, f64),
    /// The brightness check passes when the in-range fraction is at least this.
    pub min_typical_fraction: f64,
    /// Sample size is adequate when total rows exceed this.
    pub adequacy_cutoff: u64,
}

impl Default for QcThresholds {
    fn default() -> Self {
        QcThresholds {
            brightness_typical: (280.0, 500.0),
            min_typical_fraction: 0.99,
            adequacy_cutoff: 1_000_000,
        }
    }
}

/// One rendered validation row: check name, result text, pass flag.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QcCheck {
    pub name: String,
    pub result: String,
    pub passed: bool,
}

/// Aggregated QC counters plus the thresholds they were evaluated against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcReport {
    pub thresholds: QcThresholds,
    /// Rows that parsed successfully.
    pub total_rows: u64,
    /// Parsed rows with an empty mandatory text column.
    pub missing_value_rows: u64,
    /// Syntactic skips surfaced from the reader (not double-counted below).
    pub skipped: SkipCounts,
    pub lat_out_of_bounds: u64,
    pub lon_out_of_bounds: u64,
    /// Parsed rows with brightness inside the typical range (inclusive).
    pub brightness_in_range: u64,
    /// Informational: parsed rows whose satellite token is outside the
    /// configured vocabulary.
    pub unknown_satellite: u64,
}

impl QcReport {
    pub fn new(thresholds: QcThresholds) -> Self {
        QcReport {
            thresholds,
            total_rows: 0,
            missing_value_rows: 0,
            skipped: SkipCounts::default(),
            lat_out_of_bounds: 0,
            lon_out_of_bounds: 0,
            brightness_in_range: 0,
            unknown_satellite: 0,
        }
    }

    pub fn observe(&mut self, rec: &FireDetection, vocab: &SatelliteVocabulary) {
        self.total_rows += 1;
        if rec.satellite.is_empty() || rec.instrument.is_empty() || rec.version.is_empty() {
            self.missing_value_rows += 1;
        }
        if !(-90.0..=90.0).contains(&rec.latitude) {
            self.lat_out_of_bounds += 1;
        }
        if !(-180.0..=180.0).contains(&rec.longitude) {
            self.lon_out_of_bounds += 1;
        }
        let (lo, hi) = self.thresholds.brightness_typical;
        if rec.bright_ti4 >= lo && rec.bright_ti4 <= hi {
            self.brightness_in_range += 1;
        }
        if !vocab.is_known(&rec.satellite) {
            self.unknown_satellite += 1;
        }
    }

    /// Attach the reader's skip counters (syntactic failures never became
    /// records, so they are reported alongside the row counters).
    pub fn attach_skips(&mut self, skips: SkipCounts) {
        self.skipped.merge(&skips);
    }

    /// Fraction of parsed rows with brightness in the typical range.
    /// An empty stream is vacuously in range.
    pub fn brightness_in_typical_range_fraction(&self) -> f64 {
        if self.total_rows == 0 {
            1.0
        } else {
            self.brightness_in_range as f64 / self.total_rows as f64
        }
    }

    pub fn sample_size_adequate(&self) -> bool {
        self.total_rows > self.thresholds.adequacy_cutoff
    }

    /// Per-check status list, derived deterministically from the counters.
    pub fn checks(&self) -> Vec<QcCheck> {
        let pct = |bad: u64| {
            if self.total_rows == 0 {
                "100%".to_string()
            } else {
                format!("{:.4}%", 100.0 * (self.total_rows - bad.min(self.total_rows)) as f64 / self.total_rows as f64)
            }
        };
        let frac = self.brightness_in_typical_range_fraction();
        let (lo, hi) = self.thresholds.brightness_typical;
        vec![
            QcCheck {
                name: "Missing values".into(),
                result: self.missing_value_rows.to_string(),
                passed: self.missing_value_rows == 0,
            },
            QcCheck {
                name: "Valid confidence values (h/n/l)".into(),
                result: pct(self.skipped.invalid_confidence),
                passed: self.skipped.invalid_confidence == 0,
            },
            QcCheck {
                name: "Valid day/night flags (D/N)".into(),
                result: pct(self.skipped.invalid_daynight),
                passed: self.skipped.invalid_daynight == 0,
            },
            QcCheck {
                name: "Geographic bounds (-90 <= lat <= 90)".into(),
                result: pct(self.lat_out_of_bounds),
                passed: self.lat_out_of_bounds == 0,
            },
            QcCheck {
                name: "Geographic bounds (-180 <= lon <= 180)".into(),
                result: pct(self.lon_out_of_bounds),
                passed: self.lon_out_of_bounds == 0,
            },
            QcCheck {
                name: format!("Brightness range ({:.0}-{:.0}K typical)", lo, hi),
                result: format!("{:.2}%", 100.0 * frac),
                passed: frac >= self.thresholds.min_typical_fraction,
            },
            QcCheck {
                name: format!("Sample size adequacy (n > 10^{})", (self.thresholds.adequacy_cutoff as f64).log10().round() as u32),
                result: if self.sample_size_adequate() { "Yes".into() } else { "No".into() },
                passed: self.sample_size_adequate(),
            },
        ]
    }

    /// True when every check passes.
    pub fn passed(&self) -> bool {
        self.checks().iter().all(|c| c.passed)
    }

    /// Associative merge of partial reports from a partitioned scan.
    /// Both sides must share thresholds.
    pub fn merge(&mut self, other: &QcReport) {
        debug_assert_eq!(self.thresholds, other.thresholds);
        self.total_rows += other.total_rows;
        self.missing_value_rows += other.missing_value_rows;
        self.skipped.merge(&other.skipped);
        self.lat_out_of_bounds += other.lat_out_of_bounds;
        self.lon_out_of_bounds += other.lon_out_of_bounds;
        self.brightness_in_range += other.brightness_in_range;
        self.unknown_satellite += other.unknown_satellite;
    }
}

/// Run the full battery over a record stream.
pub fn run_qc<'a>(
    records: impl IntoIterator<Item = &'a FireDetection>,
    thresholds: QcThresholds,
    vocab: &SatelliteVocabulary,
) -> QcReport {
    let mut report = QcReport::new(thresholds);
    for rec in records {
        report.observe(rec, vocab);
    }
    report
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::mk_record;

    #[test]
    fn clean_rows_pass_everything_but_adequacy() {
        let rows: Vec<_> = (0..10).map(|i| mk_record(i as f64, i as f64, 300.0)).collect();
        let report = run_qc(rows.iter(), QcThresholds::default(), &Default::default());
        assert_eq!(report.total_rows, 10);
        assert_eq!(report.lat_out_of_bounds, 0);
        assert_eq!(report.lon_out_of_bounds, 0);
        assert_eq!(report.brightness_in_typical_range_fraction(), 1.0);
        assert!(!report.sample_size_adequate());
        let checks = report.checks();
        assert!(checks.iter().take(6).all(|c| c.passed));
        assert!(!checks[6].passed);
    }

    #[test]
    fn one_hot_row_gives_fraction_point_nine() {
        let mut rows: Vec<_> = (0..9).map(|_| mk_record(0.0, 0.0, 300.0)).collect();
        rows.push(mk_record(0.0, 0.0, 600.0));
        let report = run_qc(rows.iter(), QcThresholds::default(), &Default::default());
        assert!((report.brightness_in_typical_range_fraction() - 0.9).abs() < 1e-12);
    }

    #[test]
    fn bounds_violations_are_counted_not_fatal() {
        let rows = vec![mk_record(91.0, 0.0, 300.0), mk_record(0.0, -190.0, 300.0)];
        let report = run_qc(rows.iter(), QcThresholds::default(), &Default::default());
        assert_eq!(report.lat_out_of_bounds, 1);
        assert_eq!(report.lon_out_of_bounds, 1);
        assert!(!report.passed());
    }

    #[test]
    fn empty_stream_is_inadequate_with_unit_fraction() {
        let report = run_qc(std::iter::empty(), QcThresholds::default(), &Default::default());
        assert_eq!(report.total_rows, 0);
        assert!(!report.sample_size_adequate());
        assert_eq!(report.brightness_in_typical_range_fraction(), 1.0);
    }

    #[test]
    fn counters_merge_like_a_single_pass() {
        let rows: Vec<_> = (0..20)
            .map(|i| mk_record(if i % 7 == 0 { 95.0 } else { 1.0 }, 1.0, if i % 5 == 0 { 600.0 } else { 300.0 }))
            .collect();
        let whole = run_qc(rows.iter(), QcThresholds::default(), &Default::default());
        let mut left = run_qc(rows[..9].iter(), QcThresholds::default(), &Default::default());
        let right = run_qc(rows[9..].iter(), QcThresholds::default(), &Default::default());
        left.merge(&right);
        assert_eq!(left, whole);
    }

    #[test]
    fn boundary_brightness_is_inclusive() {
        let rows = vec![mk_record(0.0, 0.0, 280.0), mk_record(0.0, 0.0, 500.0)];
        let report = run_qc(rows.iter(), QcThresholds::default(), &Default::default());
        assert_eq!(report.brightness_in_range, 2);
    }

    #[test]
    fn empty_text_column_counts_as_missing() {
        let mut rec = mk_record(0.0, 0.0, 300.0);
        rec.version = String::new();
        let report = run_qc([&rec], QcThresholds::default(), &Default::default());
        assert_eq!(report.missing_value_rows, 1);
    }
}
