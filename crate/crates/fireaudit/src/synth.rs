//! Synthetic FIRMS-format corpora with a built-in ground truth: candidate
//! detections are drawn from configurable brightness models and pushed
//! through the inferred confidence-assignment rule, so every generated file
//! embeds the nighttime constraint by construction. These corpora are the
//! oracle for end-to-end pipeline tests.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use chrono::NaiveDate;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::records::{
    parse_record, Confidence, DayNight, FireDetection, HeaderMap, CANONICAL_COLUMNS,
};
use crate::seeding::{derive_seed, domain};

#[derive(Debug, Clone, PartialEq, Eq, Error, Serialize, Deserialize)]
pub enum SynthError {
    #[error("invalid generator spec: {0}")]
    SpecInvalid(String),
    #[error("I/O error writing synthetic corpus: {0}")]
    Io(String),
}

/// Thresholds of the inferred confidence-assignment rule.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InferredThresholds {
    /// Below this, every candidate is rejected outright.
    pub theta_min: f64,
    /// Below this, nighttime candidates are rejected (the branch that makes
    /// night/low structurally empty).
    pub theta_night: f64,
    /// At or above this, confidence is high regardless of flag.
    pub theta_high: f64,
}

impl Default for InferredThresholds {
    fn default() -> Self {
        InferredThresholds { theta_min: 280.0, theta_night: 295.0, theta_high: 367.0 }
    }
}

impl InferredThresholds {
    pub fn validate(&self) -> Result<(), SynthError> {
        if !(self.theta_min <= self.theta_night && self.theta_night < self.theta_high) {
            return Err(SynthError::SpecInvalid(format!(
                "thresholds must satisfy theta_min <= theta_night < theta_high, got {} / {} / {}",
                self.theta_min, self.theta_night, self.theta_high
            )));
        }
        Ok(())
    }
}

/// Outcome of the inferred assignment rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Assignment {
    /// Candidate discarded; no record is emitted at all.
    Rejected,
    Confidence(Confidence),
}

/// The inferred confidence-assignment rule.
///
/// In order: brightness below `theta_min` rejects; a nighttime candidate
/// below `theta_night` rejects (so night detections are never classified
/// low — they simply do not exist below the cutoff); brightness at or above
/// `theta_high` is high; any remaining nighttime candidate is nominal; a
/// remaining daytime candidate is decided by `day_rule`, the multi-threshold
/// daytime test supplied by the caller.
pub fn classify_inferred(
    brightness: f64,
    daynight: DayNight,
    t: &InferredThresholds,
    day_rule: impl FnOnce(f64) -> Confidence,
) -> Assignment {
    let night = daynight == DayNight::Night;
    if brightness < t.theta_min {
        Assignment::Rejected
    } else if night && brightness < t.theta_night {
        Assignment::Rejected
    } else if brightness >= t.theta_high {
        Assignment::Confidence(Confidence::High)
    } else if night {
        Assignment::Confidence(Confidence::Nominal)
    } else {
        Assignment::Confidence(day_rule(brightness))
    }
}

/// Truncated-normal brightness model: a normal draw clamped into
/// [floor, ceil]. Clamp mass at `ceil` is how saturated (high-confidence)
/// rows arise at night.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BrightnessModel {
    pub mean: f64,
    pub sd: f64,
    pub floor: f64,
    pub ceil: f64,
}

impl BrightnessModel {
    fn draw(&self, rng: &mut ChaCha8Rng, granularity: f64) -> f64 {
        let raw = Normal::new(self.mean, self.sd).expect("validated sd").sample(rng);
        let clamped = raw.clamp(self.floor, self.ceil);
        (clamped / granularity).round() * granularity
    }

    fn validate(&self, name: &str, granularity: f64) -> Result<(), SynthError> {
        if !(self.sd > 0.0) {
            return Err(SynthError::SpecInvalid(format!("{name}: sd must be positive")));
        }
        if !(self.floor < self.ceil) {
            return Err(SynthError::SpecInvalid(format!("{name}: floor must be below ceil")));
        }
        for (what, v) in [("floor", self.floor), ("ceil", self.ceil)] {
            let snapped = (v / granularity).round() * granularity;
            if (snapped - v).abs() > 1e-6 {
                return Err(SynthError::SpecInvalid(format!(
                    "{name}: {what} {v} is not on the {granularity} K granularity grid"
                )));
            }
        }
        Ok(())
    }
}

/// Day-branch confidence marginals for the multi-threshold test.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DayMarginals {
    pub h: f64,
    pub n: f64,
    pub l: f64,
}

/// An axis-aligned lat/lon box; candidates are placed uniformly inside,
/// with boxes weighted by flat (degree × degree) area.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatLonBox {
    pub lat_min: f64,
    pub lat_max: f64,
    pub lon_min: f64,
    pub lon_max: f64,
}

impl LatLonBox {
    fn area(&self) -> f64 {
        (self.lat_max - self.lat_min) * (self.lon_max - self.lon_min)
    }
}

/// Everything the generator needs. Deserializable from a JSON document for
/// the CLI `synth` subcommand.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GeneratorSpec {
    /// Number of accepted records to emit.
    pub n_accepted: u64,
    /// Fraction of *candidates* proposed as daytime. Nighttime candidates
    /// below theta_night are rejected and redrawn, so the accepted day
    /// fraction lands slightly above this value.
    pub day_fraction: f64,
    /// Nighttime candidate brightness. The floor may sit below theta_night;
    /// that is what exercises the rejection branch.
    pub night_brightness: BrightnessModel,
    /// Daytime low-confidence brightness band.
    pub day_low_brightness: BrightnessModel,
    /// Daytime nominal-confidence brightness band. Both day bands must stay
    /// below theta_high so the day marginals are honored exactly.
    pub day_nominal_brightness: BrightnessModel,
    /// Confidence marginals for the daytime branch. Low rows draw from the
    /// low band and nominal rows from the nominal band, which is the
    /// brightness-band correlation the tree learner is expected to find.
    pub day_marginals: DayMarginals,
    pub thresholds: InferredThresholds,
    /// Brightness values land on this grid (kelvin).
    pub granularity: f64,
    pub date_start: NaiveDate,
    pub date_end: NaiveDate,
    pub regions: Vec<LatLonBox>,
    pub satellites: Vec<String>,
    pub instrument: String,
    pub version: String,
    pub master_seed: u64,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            n_accepted: 1_000_000,
            day_fraction: 0.721,
            night_brightness: BrightnessModel { mean: 312.3, sd: 14.0, floor: 280.0, ceil: 367.0 },
            day_low_brightness: BrightnessModel { mean: 318.0, sd: 8.0, floor: 280.0, ceil: 340.0 },
            day_nominal_brightness: BrightnessModel {
                mean: 346.0,
                sd: 8.0,
                floor: 312.0,
                ceil: 366.9,
            },
            day_marginals: DayMarginals { h: 0.0674, n: 0.7723, l: 0.1603 },
            thresholds: InferredThresholds::default(),
            granularity: 0.1,
            date_start: NaiveDate::from_ymd_opt(2023, 1, 17).unwrap(),
            date_end: NaiveDate::from_ymd_opt(2024, 1, 16).unwrap(),
            // 15 of the 18 ten-degree latitude bands, all longitudes.
            regions: vec![LatLonBox { lat_min: -60.0, lat_max: 90.0, lon_min: -180.0, lon_max: 180.0 }],
            satellites: vec!["N".into(), "N20".into()],
            instrument: "VIIRS".into(),
            version: "2.0NRT".into(),
            master_seed: 42,
        }
    }
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<(), SynthError> {
        self.thresholds.validate()?;
        if self.n_accepted == 0 {
            return Err(SynthError::SpecInvalid("n_accepted must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.day_fraction) {
            return Err(SynthError::SpecInvalid("day_fraction must lie in [0, 1]".into()));
        }
        if !(self.granularity > 0.0) {
            return Err(SynthError::SpecInvalid("granularity must be positive".into()));
        }
        self.night_brightness.validate("night_brightness", self.granularity)?;
        self.day_low_brightness.validate("day_low_brightness", self.granularity)?;
        self.day_nominal_brightness.validate("day_nominal_brightness", self.granularity)?;
        let m = self.day_marginals;
        if m.h < 0.0 || m.n < 0.0 || m.l < 0.0 || (m.h + m.n + m.l - 1.0).abs() > 1e-9 {
            return Err(SynthError::SpecInvalid(
                "day_marginals must be non-negative and sum to 1".into(),
            ));
        }
        // Day bands below theta_min would get silently rejected and distort
        // the marginals; at or above theta_high they would get promoted.
        for (name, band) in [
            ("day_low_brightness", &self.day_low_brightness),
            ("day_nominal_brightness", &self.day_nominal_brightness),
        ] {
            if band.floor < self.thresholds.theta_min {
                return Err(SynthError::SpecInvalid(format!(
                    "{name}: floor must not sit below theta_min"
                )));
            }
            if band.ceil >= self.thresholds.theta_high {
                return Err(SynthError::SpecInvalid(format!(
                    "{name}: ceil must stay below theta_high"
                )));
            }
        }
        if self.night_brightness.ceil < self.thresholds.theta_night {
            return Err(SynthError::SpecInvalid(
                "night_brightness: ceil below theta_night rejects every candidate".into(),
            ));
        }
        if self.date_start > self.date_end {
            return Err(SynthError::SpecInvalid("date_start is after date_end".into()));
        }
        if self.regions.is_empty() {
            return Err(SynthError::SpecInvalid("at least one region is required".into()));
        }
        for (i, r) in self.regions.iter().enumerate() {
            if !(r.lat_min < r.lat_max && r.lon_min < r.lon_max) || r.area() <= 0.0 {
                return Err(SynthError::SpecInvalid(format!("region {i} has no area")));
            }
        }
        if self.satellites.is_empty() {
            return Err(SynthError::SpecInvalid("at least one satellite token is required".into()));
        }
        Ok(())
    }
}

const REJECT_LIMIT: u32 = 1_000_000;

/// Draw accepted row `row_index` as canonical CSV fields. Each row has its
/// own derived RNG stream, so generation partitions by row ranges without
/// changing output.
fn draw_row(spec: &GeneratorSpec, row_index: u64) -> [String; 14] {
    let seed = derive_seed(spec.master_seed, domain::SYNTH + row_index);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut attempts = 0u32;
    let (brightness, daynight, confidence) = loop {
        attempts += 1;
        assert!(
            attempts <= REJECT_LIMIT,
            "generator rejected {REJECT_LIMIT} consecutive candidates; \
             the brightness models are inconsistent with the thresholds"
        );
        let daynight =
            if rng.random_bool(spec.day_fraction) { DayNight::Day } else { DayNight::Night };
        let (brightness, proposed) = if daynight == DayNight::Day {
            let u: f64 = rng.random();
            let m = spec.day_marginals;
            if u < m.h {
                // High rows sit at the saturation ceiling.
                (spec.thresholds.theta_high, Confidence::High)
            } else if u < m.h + m.l {
                (spec.day_low_brightness.draw(&mut rng, spec.granularity), Confidence::Low)
            } else {
                (spec.day_nominal_brightness.draw(&mut rng, spec.granularity), Confidence::Nominal)
            }
        } else {
            (spec.night_brightness.draw(&mut rng, spec.granularity), Confidence::Nominal)
        };
        match classify_inferred(brightness, daynight, &spec.thresholds, |_| proposed) {
            Assignment::Rejected => continue,
            Assignment::Confidence(c) => break (brightness, daynight, c),
        }
    };

    let total_area: f64 = spec.regions.iter().map(LatLonBox::area).sum();
    let mut pick: f64 = rng.random_range(0.0..total_area);
    let mut region = &spec.regions[0];
    for r in &spec.regions {
        if pick < r.area() {
            region = r;
            break;
        }
        pick -= r.area();
    }
    let latitude = rng.random_range(region.lat_min..region.lat_max);
    let longitude = rng.random_range(region.lon_min..region.lon_max);

    let span_days = (spec.date_end - spec.date_start).num_days() as u64 + 1;
    let date = spec.date_start + chrono::Days::new(rng.random_range(0..span_days));
    let minutes: u32 = rng.random_range(0..1440);
    let satellite = &spec.satellites[rng.random_range(0..spec.satellites.len())];
    let scan: f64 = rng.random_range(0.3..0.8);
    let track: f64 = rng.random_range(0.3..0.8);
    let frp: f64 = rng.random_range(0.5..120.0);
    let ti5 = brightness - rng.random_range(5.0..15.0);

    [
        format!("{:.5}", latitude),
        format!("{:.5}", longitude),
        format!("{:.2}", brightness),
        format!("{:.2}", scan),
        format!("{:.2}", track),
        date.format("%Y-%m-%d").to_string(),
        format!("{:02}{:02}", minutes / 60, minutes % 60),
        satellite.clone(),
        spec.instrument.clone(),
        confidence.as_str().to_string(),
        spec.version.clone(),
        format!("{:.2}", ti5),
        format!("{:.2}", frp),
        daynight.as_str().to_string(),
    ]
}

const CHUNK: u64 = 65_536;

/// Write a synthetic corpus as FIRMS CSV. Rows are generated in parallel
/// chunks but written in order; output is bit-identical for a fixed seed.
pub fn generate_csv(spec: &GeneratorSpec, path: &Path) -> Result<(), SynthError> {
    spec.validate()?;
    let file = File::create(path).map_err(|e| SynthError::Io(e.to_string()))?;
    let mut w = BufWriter::with_capacity(1 << 20, file);
    writeln!(w, "{}", CANONICAL_COLUMNS.join(",")).map_err(|e| SynthError::Io(e.to_string()))?;
    let mut start = 0u64;
    while start < spec.n_accepted {
        let end = (start + CHUNK).min(spec.n_accepted);
        let lines: Vec<String> =
            (start..end).into_par_iter().map(|i| draw_row(spec, i).join(",")).collect();
        for line in &lines {
            w.write_all(line.as_bytes()).map_err(|e| SynthError::Io(e.to_string()))?;
            w.write_all(b"\n").map_err(|e| SynthError::Io(e.to_string()))?;
        }
        start = end;
    }
    w.flush().map_err(|e| SynthError::Io(e.to_string()))
}

/// Generate the corpus in memory. Rows pass through the records parser, so
/// everything produced here is parseable by construction.
pub fn generate_records(spec: &GeneratorSpec) -> Result<Vec<FireDetection>, SynthError> {
    spec.validate()?;
    let header = HeaderMap::from_header(&CANONICAL_COLUMNS).expect("canonical header is complete");
    let records: Vec<FireDetection> = (0..spec.n_accepted)
        .into_par_iter()
        .map(|i| {
            let fields = draw_row(spec, i);
            let refs: Vec<&str> = fields.iter().map(String::as_str).collect();
            parse_record(&refs, &header).expect("generated rows are canonical")
        })
        .collect();
    Ok(records)
}
