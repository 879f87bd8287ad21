//! Brightness-temperature statistics per (day/night × confidence) category
//! and detection-threshold inference from empirical minima.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records::{Confidence, DayNight, FireDetection};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum BrightnessError {
    #[error("insufficient data: no rows in the `{0}` stratum")]
    InsufficientData(String),
}

/// Count/mean/median/min/max of brightness for one category. Statistics are
/// absent when the category is empty.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CategoryStats {
    pub daynight: DayNight,
    pub confidence: Confidence,
    pub count: u64,
    pub mean: Option<f64>,
    pub median: Option<f64>,
    pub min: Option<f64>,
    pub max: Option<f64>,
    /// True when the median came from the bounded-memory histogram sketch
    /// rather than exact per-value retention.
    pub median_approximate: bool,
}

/// Median strategy. Exact retains every value per category; the histogram
/// sketch holds 0.1 K bins over [200, 500] K and keeps memory bounded at
/// archive scale, flagged approximate in the output.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MedianMode {
    Exact,
    Histogram,
}

const HIST_LO: f64 = 200.0;
const HIST_HI: f64 = 500.0;
const HIST_BIN: f64 = 0.1;
const HIST_BINS: usize = ((HIST_HI - HIST_LO) / HIST_BIN) as usize;

#[derive(Debug, Clone)]
enum MedianState {
    Exact(Vec<f64>),
    Histogram(Vec<u64>),
}

#[derive(Debug, Clone)]
struct CategoryAcc {
    count: u64,
    // Neumaier-compensated sum, so the streamed mean matches a two-pass
    // mean at the 1e-9 level on 10^7-row streams.
    sum: f64,
    comp: f64,
    min: f64,
    max: f64,
    median: MedianState,
}

impl CategoryAcc {
    fn new(mode: MedianMode) -> Self {
        CategoryAcc {
            count: 0,
            sum: 0.0,
            comp: 0.0,
            min: f64::INFINITY,
            max: f64::NEG_INFINITY,
            median: match mode {
                MedianMode::Exact => MedianState::Exact(Vec::new()),
                MedianMode::Histogram => MedianState::Histogram(vec![0; HIST_BINS]),
            },
        }
    }

    fn observe(&mut self, v: f64) {
        self.count += 1;
        let t = self.sum + v;
        if self.sum.abs() >= v.abs() {
            self.comp += (self.sum - t) + v;
        } else {
            self.comp += (v - t) + self.sum;
        }
        self.sum = t;
        self.min = self.min.min(v);
        self.max = self.max.max(v);
        match &mut self.median {
            MedianState::Exact(values) => values.push(v),
            MedianState::Histogram(bins) => {
                let idx = (((v - HIST_LO) / HIST_BIN).floor() as i64).clamp(0, HIST_BINS as i64 - 1);
                bins[idx as usize] += 1;
            }
        }
    }

    fn merge(&mut self, other: &CategoryAcc) {
        self.count += other.count;
        let t = self.sum + other.sum;
        if self.sum.abs() >= other.sum.abs() {
            self.comp += (self.sum - t) + other.sum;
        } else {
            self.comp += (other.sum - t) + self.sum;
        }
        self.sum = t;
        self.comp += other.comp;
        self.min = self.min.min(other.min);
        self.max = self.max.max(other.max);
        match (&mut self.median, &other.median) {
            (MedianState::Exact(a), MedianState::Exact(b)) => a.extend_from_slice(b),
            (MedianState::Histogram(a), MedianState::Histogram(b)) => {
                for (x, y) in a.iter_mut().zip(b) {
                    *x += y;
                }
            }
            _ => panic!("cannot merge accumulators with different median modes"),
        }
    }

    fn finish(&self, daynight: DayNight, confidence: Confidence) -> CategoryStats {
        if self.count == 0 {
            return CategoryStats {
                daynight,
                confidence,
                count: 0,
                mean: None,
                median: None,
                min: None,
                max: None,
                median_approximate: matches!(self.median, MedianState::Histogram(_)),
            };
        }
        let (median, approx) = match &self.median {
            MedianState::Exact(values) => {
                let mut v = values.clone();
                v.sort_unstable_by(f64::total_cmp);
                let n = v.len();
                let m = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
                (m, false)
            }
            MedianState::Histogram(bins) => {
                // Median as the midpoint of the bin holding the middle rank.
                let half = self.count.div_ceil(2);
                let mut seen = 0u64;
                let mut m = HIST_LO;
                for (i, &b) in bins.iter().enumerate() {
                    seen += b;
                    if seen >= half {
                        m = HIST_LO + (i as f64 + 0.5) * HIST_BIN;
                        break;
                    }
                }
                (m, true)
            }
        };
        CategoryStats {
            daynight,
            confidence,
            count: self.count,
            mean: Some((self.sum + self.comp) / self.count as f64),
            median: Some(median),
            min: Some(self.min),
            max: Some(self.max),
            median_approximate: approx,
        }
    }
}

/// Streaming accumulator over all six (day/night × confidence) categories,
/// in Table order: Day-High, Day-Low, Day-Nominal, Night-High, Night-Low,
/// Night-Nominal.
#[derive(Debug, Clone)]
pub struct BrightnessAccumulator {
    cats: Vec<CategoryAcc>,
    mode: MedianMode,
}

fn category_index(dn: DayNight, conf: Confidence) -> usize {
    dn.index() * 3 + conf.index()
}

impl BrightnessAccumulator {
    pub fn new(mode: MedianMode) -> Self {
        BrightnessAccumulator { cats: (0..6).map(|_| CategoryAcc::new(mode)).collect(), mode }
    }

    pub fn observe(&mut self, rec: &FireDetection) {
        self.cats[category_index(rec.daynight, rec.confidence)].observe(rec.bright_ti4);
    }

    pub fn merge(&mut self, other: &BrightnessAccumulator) {
        assert_eq!(self.mode, other.mode);
        for (a, b) in self.cats.iter_mut().zip(&other.cats) {
            a.merge(b);
        }
    }

    pub fn finish(&self) -> Vec<CategoryStats> {
        DayNight::ALL
            .iter()
            .flat_map(|&dn| Confidence::ALL.iter().map(move |&c| (dn, c)))
            .map(|(dn, c)| self.cats[category_index(dn, c)].finish(dn, c))
            .collect()
    }
}

/// All six category statistics in one pass.
pub fn category_stats<'a>(
    records: impl IntoIterator<Item = &'a FireDetection>,
    mode: MedianMode,
) -> Vec<CategoryStats> {
    let mut acc = BrightnessAccumulator::new(mode);
    for rec in records {
        acc.observe(rec);
    }
    acc.finish()
}

/// Empirical detection thresholds: minima of the relevant strata, each with
/// the number of rows within 1 K above the minimum as supporting evidence.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ThresholdEstimate {
    /// Minimum brightness over nighttime rows.
    pub theta_night: f64,
    /// Global minimum brightness.
    pub theta_min: f64,
    /// Minimum brightness over high-confidence rows.
    pub theta_high: f64,
    pub support_night: u64,
    pub support_min: u64,
    pub support_high: u64,
}

/// Infer thresholds from already-computed category statistics plus a second
/// pass over the records for the support counts.
pub fn infer_thresholds<'a>(
    stats: &[CategoryStats],
    records: impl IntoIterator<Item = &'a FireDetection>,
) -> Result<ThresholdEstimate, BrightnessError> {
    let min_over = |filter: &dyn Fn(&CategoryStats) -> bool| {
        stats
            .iter()
            .filter(|s| filter(s))
            .filter_map(|s| s.min)
            .fold(None::<f64>, |acc, v| Some(acc.map_or(v, |a| a.min(v))))
    };
    let theta_night = min_over(&|s| s.daynight == DayNight::Night)
        .ok_or_else(|| BrightnessError::InsufficientData("night".into()))?;
    let theta_high = min_over(&|s| s.confidence == Confidence::High)
        .ok_or_else(|| BrightnessError::InsufficientData("high".into()))?;
    let theta_min = min_over(&|_| true).expect("night stratum nonempty implies data");

    let mut support_night = 0u64;
    let mut support_min = 0u64;
    let mut support_high = 0u64;
    for rec in records {
        let b = rec.bright_ti4;
        if b <= theta_min + 1.0 {
            support_min += 1;
        }
        if rec.is_night() && b <= theta_night + 1.0 {
            support_night += 1;
        }
        if rec.confidence == Confidence::High && b <= theta_high + 1.0 {
            support_high += 1;
        }
    }
    Ok(ThresholdEstimate {
        theta_night,
        theta_min,
        theta_high,
        support_night,
        support_min,
        support_high,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::testutil::mk_classified;

    fn rec(dn: DayNight, conf: Confidence, bright: f64) -> FireDetection {
        let mut r = mk_classified(dn, conf);
        r.bright_ti4 = bright;
        r
    }

    fn find(stats: &[CategoryStats], dn: DayNight, conf: Confidence) -> &CategoryStats {
        stats.iter().find(|s| s.daynight == dn && s.confidence == conf).unwrap()
    }

    #[test]
    fn three_rows_summarize_exactly() {
        let rows = vec![
            rec(DayNight::Night, Confidence::Nominal, 300.0),
            rec(DayNight::Night, Confidence::Nominal, 310.0),
            rec(DayNight::Night, Confidence::Nominal, 320.0),
        ];
        let stats = category_stats(rows.iter(), MedianMode::Exact);
        assert_eq!(stats.len(), 6);
        let nn = find(&stats, DayNight::Night, Confidence::Nominal);
        assert_eq!(nn.count, 3);
        assert_eq!(nn.mean, Some(310.0));
        assert_eq!(nn.median, Some(310.0));
        assert_eq!(nn.min, Some(300.0));
        assert_eq!(nn.max, Some(320.0));
        assert!(!nn.median_approximate);
    }

    #[test]
    fn empty_category_has_absent_statistics() {
        let rows = vec![rec(DayNight::Day, Confidence::Nominal, 330.0)];
        let stats = category_stats(rows.iter(), MedianMode::Exact);
        let nl = find(&stats, DayNight::Night, Confidence::Low);
        assert_eq!(nl.count, 0);
        assert!(nl.mean.is_none() && nl.median.is_none() && nl.min.is_none() && nl.max.is_none());
    }

    #[test]
    fn even_count_median_averages_the_middle_pair() {
        let rows: Vec<_> =
            [300.0, 301.0, 302.0, 400.0].iter().map(|&b| rec(DayNight::Day, Confidence::Low, b)).collect();
        let stats = category_stats(rows.iter(), MedianMode::Exact);
        assert_eq!(find(&stats, DayNight::Day, Confidence::Low).median, Some(301.5));
    }

    #[test]
    fn histogram_median_is_close_and_flagged() {
        let rows: Vec<_> =
            (0..1001).map(|i| rec(DayNight::Day, Confidence::Nominal, 300.0 + 0.1 * i as f64)).collect();
        let exact = category_stats(rows.iter(), MedianMode::Exact);
        let approx = category_stats(rows.iter(), MedianMode::Histogram);
        let e = find(&exact, DayNight::Day, Confidence::Nominal);
        let a = find(&approx, DayNight::Day, Confidence::Nominal);
        assert!(a.median_approximate);
        assert!((a.median.unwrap() - e.median.unwrap()).abs() <= 0.1);
        assert_eq!(a.mean, e.mean);
    }

    #[test]
    fn streamed_mean_matches_two_pass_mean() {
        let rows: Vec<_> = (0..50_000)
            .map(|i| rec(DayNight::Day, Confidence::Nominal, 280.0 + (i % 870) as f64 * 0.1))
            .collect();
        let stats = category_stats(rows.iter(), MedianMode::Exact);
        let streamed = find(&stats, DayNight::Day, Confidence::Nominal).mean.unwrap();
        let two_pass = rows.iter().map(|r| r.bright_ti4).sum::<f64>() / rows.len() as f64;
        assert!((streamed - two_pass).abs() <= 1e-9 * two_pass.abs());
    }

    #[test]
    fn min_and_max_bound_every_member() {
        let rows: Vec<_> = (0..500)
            .map(|i| {
                rec(
                    if i % 3 == 0 { DayNight::Night } else { DayNight::Day },
                    Confidence::ALL[i % 3],
                    295.0 + (i % 72) as f64,
                )
            })
            .collect();
        let stats = category_stats(rows.iter(), MedianMode::Exact);
        for s in &stats {
            let members: Vec<f64> = rows
                .iter()
                .filter(|r| r.daynight == s.daynight && r.confidence == s.confidence)
                .map(|r| r.bright_ti4)
                .collect();
            assert_eq!(s.count as usize, members.len());
            if let (Some(lo), Some(hi)) = (s.min, s.max) {
                assert!(members.iter().all(|&v| v >= lo && v <= hi));
            }
        }
    }

    #[test]
    fn merge_equals_single_pass() {
        let rows: Vec<_> = (0..300)
            .map(|i| rec(DayNight::ALL[i % 2], Confidence::ALL[i % 3], 290.0 + i as f64 * 0.3))
            .collect();
        let whole = category_stats(rows.iter(), MedianMode::Exact);
        let mut left = BrightnessAccumulator::new(MedianMode::Exact);
        for r in &rows[..120] {
            left.observe(r);
        }
        let mut right = BrightnessAccumulator::new(MedianMode::Exact);
        for r in &rows[120..] {
            right.observe(r);
        }
        left.merge(&right);
        assert_eq!(left.finish(), whole);
    }

    #[test]
    fn thresholds_come_from_strata_minima() {
        let rows = vec![
            rec(DayNight::Day, Confidence::Low, 295.0),
            rec(DayNight::Day, Confidence::Low, 296.2),
            rec(DayNight::Day, Confidence::High, 367.0),
            rec(DayNight::Night, Confidence::Nominal, 301.5),
            rec(DayNight::Night, Confidence::Nominal, 305.0),
            rec(DayNight::Night, Confidence::High, 367.0),
        ];
        let stats = category_stats(rows.iter(), MedianMode::Exact);
        let t = infer_thresholds(&stats, rows.iter()).unwrap();
        assert_eq!(t.theta_min, 295.0);
        assert_eq!(t.theta_night, 301.5);
        assert_eq!(t.theta_high, 367.0);
        assert_eq!(t.support_min, 2); // 295.0 and 296.2 are within 1 K
        assert_eq!(t.support_night, 1);
        assert_eq!(t.support_high, 2);
        assert!(t.theta_min <= t.theta_night && t.theta_min <= t.theta_high);
    }

    #[test]
    fn missing_strata_are_named() {
        let day_only = vec![rec(DayNight::Day, Confidence::High, 360.0)];
        let stats = category_stats(day_only.iter(), MedianMode::Exact);
        match infer_thresholds(&stats, day_only.iter()) {
            Err(BrightnessError::InsufficientData(s)) => assert_eq!(s, "night"),
            other => panic!("expected InsufficientData(night), got {other:?}"),
        }
        let no_high = vec![rec(DayNight::Night, Confidence::Nominal, 310.0)];
        let stats = category_stats(no_high.iter(), MedianMode::Exact);
        match infer_thresholds(&stats, no_high.iter()) {
            Err(BrightnessError::InsufficientData(s)) => assert_eq!(s, "high"),
            other => panic!("expected InsufficientData(high), got {other:?}"),
        }
    }
}
