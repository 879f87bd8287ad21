//! Audit orchestration: configuration, the shared single-pass scan, report
//! assembly and rendering.
//!
//! One scan over the input feeds every streaming aggregate (QC, contingency,
//! brightness, grid, monthly, bands). Sections that need repeated access
//! (verification, bootstrap, tree training, threshold supports) work from an
//! in-memory materialization gathered during the same pass. All randomness
//! flows from one master seed recorded in the report.

mod markdown;

use std::collections::BTreeMap;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::brightness::{
    infer_thresholds, BrightnessAccumulator, CategoryStats, MedianMode, ThresholdEstimate,
};
use crate::qc::{QcCheck, QcReport, QcThresholds};
use crate::records::{
    open_dataset, Confidence, DatasetError, DayNight, ErrorPolicy, FireDetection,
    SatelliteVocabulary, SkipCounts,
};
use crate::resample::{bootstrap_count, BootstrapParams};
use crate::spacetime::{BandAccumulator, BandReport, GridAccumulator, GridResult, MonthlyRow};
use crate::stats::{chi_square_test, ContingencyBuilder, ContingencyTable, StatsError};
use crate::tree::{
    evaluate, feature_importances, fit_tree, night_constraint_probe, stratified_split,
    DecisionTree, EvalMetrics, FeatureRow, TreeParams, FEATURE_NAMES,
};
use crate::verify::{verify_count_with_query, CountPredicate, VerificationResult};

pub const TOOL_NAME: &str = "fireaudit";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Error)]
pub enum AuditError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("cannot open `{path}`: {message}")]
    Open { path: String, message: String },
}

/// Which analyses run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct SectionToggles {
    pub qc: bool,
    pub contingency: bool,
    pub verification: bool,
    pub bootstrap: bool,
    pub ml: bool,
    pub brightness: bool,
    pub grid: bool,
    pub monthly: bool,
    pub bands: bool,
}

impl Default for SectionToggles {
    fn default() -> Self {
        SectionToggles {
            qc: true,
            contingency: true,
            verification: true,
            bootstrap: true,
            ml: true,
            brightness: true,
            grid: true,
            monthly: true,
            bands: true,
        }
    }
}

impl SectionToggles {
    pub fn none() -> Self {
        SectionToggles {
            qc: false,
            contingency: false,
            verification: false,
            bootstrap: false,
            ml: false,
            brightness: false,
            grid: false,
            monthly: false,
            bands: false,
        }
    }

    fn any(&self) -> bool {
        self.qc
            || self.contingency
            || self.verification
            || self.bootstrap
            || self.ml
            || self.brightness
            || self.grid
            || self.monthly
            || self.bands
    }

    /// Sections that need the records held in memory.
    fn needs_materialization(&self) -> bool {
        self.verification || self.bootstrap || self.ml || self.brightness
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Json,
    Markdown,
}

/// Full audit configuration; echoed verbatim into the report so any
/// published report is re-derivable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AuditConfig {
    pub inputs: Vec<PathBuf>,
    pub sections: SectionToggles,
    /// Strict mode aborts the scan on the first malformed row and gates the
    /// exit status on QC passing.
    pub strict: bool,
    pub qc_thresholds: QcThresholds,
    pub satellite_vocabulary: SatelliteVocabulary,
    pub cell_size: f64,
    pub band_width: f64,
    pub band_min_count: u64,
    pub bootstrap: BootstrapParams,
    /// Stratum resampled by the bootstrap and the confidence class counted
    /// inside it.
    pub bootstrap_stratum: DayNight,
    pub bootstrap_target: Confidence,
    pub verify_predicate: CountPredicate,
    /// Optional raw query text for verification method 5; defaults to the
    /// canonical rendering of `verify_predicate`.
    pub verify_query: Option<String>,
    pub tree: TreeParams,
    pub test_fraction: f64,
    pub median_mode: MedianMode,
    pub master_seed: u64,
    pub format: OutputFormat,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            inputs: Vec::new(),
            sections: SectionToggles::default(),
            strict: false,
            qc_thresholds: QcThresholds::default(),
            satellite_vocabulary: SatelliteVocabulary::default(),
            cell_size: 10.0,
            band_width: 10.0,
            band_min_count: 100,
            bootstrap: BootstrapParams::default(),
            bootstrap_stratum: DayNight::Night,
            bootstrap_target: Confidence::Low,
            verify_predicate: CountPredicate {
                daynight: DayNight::Night,
                confidence: Confidence::Low,
            },
            verify_query: None,
            tree: TreeParams::default(),
            test_fraction: 0.2,
            median_mode: MedianMode::Exact,
            master_seed: 42,
            format: OutputFormat::Json,
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<(), AuditError> {
        if self.inputs.is_empty() {
            return Err(AuditError::InvalidConfig("no input files".into()));
        }
        if !self.sections.any() {
            return Err(AuditError::InvalidConfig("no analyses enabled".into()));
        }
        if !(0.0..=1.0).contains(&self.test_fraction) {
            return Err(AuditError::InvalidConfig("test_fraction must lie in [0, 1]".into()));
        }
        Ok(())
    }
}

/// Outcome of one enabled analysis. Disabled analyses are `Skipped`;
/// analyses that hit a module error carry it with section attribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Section<T> {
    Ok { data: T },
    Skipped { reason: String },
    Failed { error: String },
}

impl<T> Section<T> {
    pub fn ok(data: T) -> Self {
        Section::Ok { data }
    }

    pub fn skipped(reason: impl Into<String>) -> Self {
        Section::Skipped { reason: reason.into() }
    }

    pub fn failed(error: impl std::fmt::Display) -> Self {
        Section::Failed { error: error.to_string() }
    }

    pub fn data(&self) -> Option<&T> {
        match self {
            Section::Ok { data } => Some(data),
            _ => None,
        }
    }

    pub fn is_failed(&self) -> bool {
        matches!(self, Section::Failed { .. })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IngestSummary {
    pub inputs: Vec<String>,
    pub rows_parsed: u64,
    pub skipped: SkipCounts,
    /// Strict-mode abort message, when the scan stopped early.
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QcSection {
    pub total_rows: u64,
    pub missing_value_rows: u64,
    pub skipped: SkipCounts,
    pub lat_out_of_bounds: u64,
    pub lon_out_of_bounds: u64,
    pub brightness_in_typical_range_fraction: f64,
    pub sample_size_adequate: bool,
    pub unknown_satellite: u64,
    pub checks: Vec<QcCheck>,
    pub passed: bool,
}

impl QcSection {
    fn from_report(report: &QcReport) -> Self {
        QcSection {
            total_rows: report.total_rows,
            missing_value_rows: report.missing_value_rows,
            skipped: report.skipped,
            lat_out_of_bounds: report.lat_out_of_bounds,
            lon_out_of_bounds: report.lon_out_of_bounds,
            brightness_in_typical_range_fraction: report.brightness_in_typical_range_fraction(),
            sample_size_adequate: report.sample_size_adequate(),
            unknown_satellite: report.unknown_satellite,
            checks: report.checks(),
            passed: report.passed(),
        }
    }
}

/// The headline cell: observed nighttime low-confidence count with its
/// expectation under independence and standardized residual.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NightLowFinding {
    pub observed: u64,
    pub expected: f64,
    pub residual: f64,
    pub note: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContingencySection {
    pub table: ContingencyTable,
    pub statistic: f64,
    pub df: usize,
    pub p_value: f64,
    pub log_p: f64,
    pub cramers_v: f64,
    pub expected: Vec<Vec<f64>>,
    pub residuals: Vec<Vec<f64>>,
    pub night_low: Option<NightLowFinding>,
}

/// Marginals of the one-year reference archive, used only to recognize when
/// the audited table *is* that table so the expected-count divergence note
/// can cite the published figures it corrects.
const REFERENCE_ROW_TOTALS: [u64; 3] = [1_112_469, 2_489_710, 17_938_742];
const REFERENCE_COL_TOTALS: [u64; 2] = [15_533_090, 6_007_831];
const REFERENCE_PUBLISHED_EXPECTED: [f64; 2] = [694_908.0, 696_908.0];

fn night_low_finding(section: &ContingencySection) -> Option<NightLowFinding> {
    let t = &section.table;
    let i = t.row_labels.iter().position(|l| l == "l")?;
    let j = t.col_labels.iter().position(|l| l == "N")?;
    let observed = t.counts[i][j];
    let expected = section.expected[i][j];
    let residual = section.residuals[i][j];
    let mut note = format!(
        "Expected count for the night/low cell is the exact evaluation \
         row_total*col_total/grand_total = {expected:.1}; cross-check: residual^2 = {:.1}.",
        residual * residual
    );
    let is_reference = t.row_labels == ["h", "l", "n"]
        && t.col_labels == ["D", "N"]
        && t.row_totals == REFERENCE_ROW_TOTALS
        && t.col_totals == REFERENCE_COL_TOTALS;
    if is_reference {
        let [a, b] = REFERENCE_PUBLISHED_EXPECTED;
        note.push_str(&format!(
            " Previously published figures for this archive ({a:.0} and {b:.0}) \
             diverge from direct evaluation; this report keeps the exact value, \
             which the residual cross-check confirms."
        ));
    }
    Some(NightLowFinding { observed, expected, residual, note })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BootstrapSection {
    pub stratum: DayNight,
    pub target: Confidence,
    pub subset_size: u64,
    pub n_iter: usize,
    pub sample_size: usize,
    pub mean: f64,
    pub sd: f64,
    pub min: u64,
    pub max: u64,
    pub ci95: (u64, u64),
    pub degenerate: bool,
    pub master_seed: u64,
    pub rng_algorithm: String,
    /// Full per-iteration histogram: count value → number of iterations.
    pub histogram: BTreeMap<u64, u64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlSection {
    pub params: TreeParams,
    pub test_fraction: f64,
    pub n_train: usize,
    pub n_test: usize,
    pub metrics: EvalMetrics,
    /// Share of the test set held by its most common class; a floor any
    /// useful model must clear.
    pub majority_class_baseline: f64,
    /// Absent for a single-leaf tree (importances undefined).
    pub importances: Option<BTreeMap<String, f64>>,
    pub night_test_rows: u64,
    pub night_constraint_probe: u64,
    pub tree: DecisionTree,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BrightnessSection {
    pub categories: Vec<CategoryStats>,
    pub thresholds: Option<ThresholdEstimate>,
    /// Why thresholds are absent, when they are.
    pub threshold_error: Option<String>,
    /// Categories whose brightness is constant across every row (the
    /// saturation-ceiling signature).
    pub constant_categories: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Findings {
    pub night_low_observed: Option<u64>,
    pub night_low_expected: Option<f64>,
    pub night_low_residual: Option<f64>,
    pub verification_agreement: Option<bool>,
    pub bootstrap_degenerate: Option<bool>,
    pub night_constraint_probe: Option<u64>,
    pub theta_night: Option<f64>,
    /// "k/12": months where the nighttime low-confidence count is zero.
    pub monthly_pattern: Option<String>,
    /// "h/q": qualifying latitude bands where the pattern holds.
    pub band_pattern: Option<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditReport {
    pub tool: String,
    pub version: String,
    pub config: AuditConfig,
    pub ingest: IngestSummary,
    pub qc: Section<QcSection>,
    pub contingency: Section<ContingencySection>,
    pub verification: Section<VerificationResult>,
    pub bootstrap: Section<BootstrapSection>,
    pub ml: Section<MlSection>,
    pub brightness: Section<BrightnessSection>,
    pub grid: Section<GridResult>,
    pub monthly: Section<Vec<MonthlyRow>>,
    pub bands: Section<BandReport>,
    pub findings: Findings,
}

impl AuditReport {
    /// Exit contract: success means the scan completed, no section errored,
    /// and — in strict mode — QC passed.
    pub fn exit_ok(&self) -> bool {
        if self.ingest.error.is_some() {
            return false;
        }
        let any_failed = self.qc.is_failed()
            || self.contingency.is_failed()
            || self.verification.is_failed()
            || self.bootstrap.is_failed()
            || self.ml.is_failed()
            || self.brightness.is_failed()
            || self.grid.is_failed()
            || self.monthly.is_failed()
            || self.bands.is_failed();
        if any_failed {
            return false;
        }
        if self.config.strict {
            if let Some(qc) = self.qc.data() {
                return qc.passed;
            }
        }
        true
    }
}

/// Everything gathered by the shared scan.
struct ScanState {
    qc: QcReport,
    contingency: ContingencyBuilder,
    brightness: BrightnessAccumulator,
    grid: GridAccumulator,
    monthly: crate::spacetime::MonthlyAccumulator,
    bands: BandAccumulator,
    records: Option<Vec<FireDetection>>,
    rows: u64,
    skips: SkipCounts,
    abort: Option<String>,
}

fn scan(config: &AuditConfig) -> Result<ScanState, AuditError> {
    let policy = if config.strict { ErrorPolicy::Strict } else { ErrorPolicy::SkipAndCount };
    let mut state = ScanState {
        qc: QcReport::new(config.qc_thresholds.clone()),
        contingency: ContingencyBuilder::new(),
        brightness: BrightnessAccumulator::new(config.median_mode),
        grid: GridAccumulator::new(config.cell_size)
            .map_err(|e| AuditError::InvalidConfig(e.to_string()))?,
        monthly: crate::spacetime::MonthlyAccumulator::new(),
        bands: BandAccumulator::new(config.band_width, config.band_min_count)
            .map_err(|e| AuditError::InvalidConfig(e.to_string()))?,
        records: config.sections.needs_materialization().then(Vec::new),
        rows: 0,
        skips: SkipCounts::default(),
        abort: None,
    };

    'files: for path in &config.inputs {
        let mut reader = open_dataset(path, policy).map_err(|e| AuditError::Open {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        for item in &mut reader {
            match item {
                Ok(rec) => {
                    state.rows += 1;
                    state.qc.observe(&rec, &config.satellite_vocabulary);
                    state
                        .contingency
                        .observe(rec.confidence.as_str(), rec.daynight.as_str());
                    state.brightness.observe(&rec);
                    state.grid.observe(&rec);
                    state.monthly.observe(&rec);
                    state.bands.observe(&rec);
                    if let Some(buf) = &mut state.records {
                        buf.push(rec);
                    }
                }
                Err(e) => match e {
                    DatasetError::Parse { .. } => {
                        state.abort = Some(format!("{path:?}: {e}", path = path.display()));
                        break 'files;
                    }
                    other => {
                        state.abort =
                            Some(format!("{path}: {other}", path = path.display()));
                        break 'files;
                    }
                },
            }
        }
        state.skips.merge(&reader.skip_counts());
    }
    state.qc.attach_skips(state.skips);
    Ok(state)
}

fn build_ml_section(config: &AuditConfig, records: &[FireDetection]) -> Section<MlSection> {
    let rows: Vec<FeatureRow> = records.iter().map(FeatureRow::from_record).collect();
    let (train, test) = match stratified_split(&rows, config.test_fraction, config.master_seed) {
        Ok(split) => split,
        Err(e) => return Section::failed(e),
    };
    let tree = match fit_tree(&train, config.tree) {
        Ok(t) => t,
        Err(e) => return Section::failed(e),
    };
    let metrics = match evaluate(&tree, &test) {
        Ok(m) => m,
        Err(e) => return Section::failed(e),
    };
    let majority = {
        let mut counts = [0u64; 3];
        for r in &test {
            counts[r.label.index()] += 1;
        }
        *counts.iter().max().unwrap() as f64 / test.len() as f64
    };
    let importances = feature_importances(&tree).ok().map(|imp| {
        FEATURE_NAMES.iter().zip(imp).map(|(name, v)| (name.to_string(), v)).collect()
    });
    let night_test_rows = test.iter().filter(|r| r.is_night()).count() as u64;
    let probe = night_constraint_probe(&tree, &test);
    Section::ok(MlSection {
        params: config.tree,
        test_fraction: config.test_fraction,
        n_train: train.len(),
        n_test: test.len(),
        metrics,
        majority_class_baseline: majority,
        importances,
        night_test_rows,
        night_constraint_probe: probe,
        tree,
    })
}

fn build_brightness_section(
    acc: &BrightnessAccumulator,
    records: &[FireDetection],
) -> BrightnessSection {
    let categories = acc.finish();
    let (thresholds, threshold_error) = match infer_thresholds(&categories, records.iter()) {
        Ok(t) => (Some(t), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let constant_categories = categories
        .iter()
        .filter(|s| s.count > 1 && s.min == s.max)
        .map(|s| format!("{}-{}", s.daynight.name(), s.confidence.name()))
        .collect();
    BrightnessSection { categories, thresholds, threshold_error, constant_categories }
}

fn assemble_findings(report: &AuditReport) -> Findings {
    let mut findings = Findings {
        night_low_observed: None,
        night_low_expected: None,
        night_low_residual: None,
        verification_agreement: None,
        bootstrap_degenerate: None,
        night_constraint_probe: None,
        theta_night: None,
        monthly_pattern: None,
        band_pattern: None,
        notes: Vec::new(),
    };
    if let Some(c) = report.contingency.data() {
        if let Some(nl) = &c.night_low {
            findings.night_low_observed = Some(nl.observed);
            findings.night_low_expected = Some(nl.expected);
            findings.night_low_residual = Some(nl.residual);
            findings.notes.push(nl.note.clone());
        }
    }
    if let Some(v) = report.verification.data() {
        findings.verification_agreement = Some(v.agreement);
    }
    if let Some(b) = report.bootstrap.data() {
        findings.bootstrap_degenerate = Some(b.degenerate);
    }
    if let Some(m) = report.ml.data() {
        findings.night_constraint_probe = Some(m.night_constraint_probe);
    }
    if let Some(b) = report.brightness.data() {
        findings.theta_night = b.thresholds.as_ref().map(|t| t.theta_night);
        for cat in &b.constant_categories {
            findings
                .notes
                .push(format!("brightness is constant across the {cat} category (saturation ceiling)"));
        }
    }
    if let Some(m) = report.monthly.data() {
        let holds = m.iter().filter(|r| r.pattern_holds).count();
        findings.monthly_pattern = Some(format!("{holds}/12"));
    }
    if let Some(b) = report.bands.data() {
        findings.band_pattern = Some(format!("{}/{}", b.holding, b.qualifying));
    }
    findings
}

/// Run every enabled analysis over the configured inputs.
pub fn run_audit(config: &AuditConfig) -> Result<AuditReport, AuditError> {
    config.validate()?;
    let state = scan(config)?;
    let toggles = config.sections;

    let ingest = IngestSummary {
        inputs: config.inputs.iter().map(|p| p.display().to_string()).collect(),
        rows_parsed: state.rows,
        skipped: state.skips,
        error: state.abort.clone(),
    };

    let aborted = state.abort.is_some();
    let section_or = |enabled: bool, when_aborted: &str| -> Option<String> {
        if !enabled {
            Some("disabled".to_string())
        } else if aborted {
            Some(when_aborted.to_string())
        } else {
            None
        }
    };
    let abort_reason = "aborted: strict-mode ingest failure";

    // QC stays populated on a strict abort: the counters seen so far are the
    // evidence for the failure.
    let qc = if toggles.qc {
        Section::ok(QcSection::from_report(&state.qc))
    } else {
        Section::skipped("disabled")
    };

    let contingency = match section_or(toggles.contingency, abort_reason) {
        Some(reason) => Section::skipped(reason),
        None => match state.contingency.finish().and_then(|t| {
            let r = chi_square_test(&t)?;
            Ok((t, r))
        }) {
            Ok((table, r)) => {
                let mut section = ContingencySection {
                    table,
                    statistic: r.statistic,
                    df: r.df,
                    p_value: r.p_value,
                    log_p: r.log_p,
                    cramers_v: r.cramers_v,
                    expected: r.expected,
                    residuals: r.residuals,
                    night_low: None,
                };
                section.night_low = night_low_finding(&section);
                Section::ok(section)
            }
            Err(e @ StatsError::EmptyDataset) => Section::failed(e),
            Err(e) => Section::failed(e),
        },
    };

    let empty_records: Vec<FireDetection> = Vec::new();
    let records: &[FireDetection] = state.records.as_deref().unwrap_or(&empty_records);

    let verification = match section_or(toggles.verification, abort_reason) {
        Some(reason) => Section::skipped(reason),
        None => {
            let query = config
                .verify_query
                .clone()
                .unwrap_or_else(|| config.verify_predicate.to_query());
            match verify_count_with_query(records, config.verify_predicate, &query) {
                Ok(v) => Section::ok(v),
                Err(e) => Section::failed(e),
            }
        }
    };

    let bootstrap = match section_or(toggles.bootstrap, abort_reason) {
        Some(reason) => Section::skipped(reason),
        None => {
            let subset: Vec<&FireDetection> =
                records.iter().filter(|r| r.daynight == config.bootstrap_stratum).collect();
            let target = config.bootstrap_target;
            match bootstrap_count(
                &subset,
                |r| r.confidence == target,
                config.bootstrap,
                config.master_seed,
            ) {
                Ok(r) => {
                    let mut histogram = BTreeMap::new();
                    for &c in &r.per_iteration_counts {
                        *histogram.entry(c).or_insert(0u64) += 1;
                    }
                    Section::ok(BootstrapSection {
                        stratum: config.bootstrap_stratum,
                        target,
                        subset_size: subset.len() as u64,
                        n_iter: r.n_iter,
                        sample_size: r.sample_size,
                        mean: r.mean,
                        sd: r.sd,
                        min: r.min,
                        max: r.max,
                        ci95: r.ci95,
                        degenerate: r.degenerate,
                        master_seed: r.master_seed,
                        rng_algorithm: r.rng_algorithm,
                        histogram,
                    })
                }
                Err(e) => Section::failed(e),
            }
        }
    };

    let ml = match section_or(toggles.ml, abort_reason) {
        Some(reason) => Section::skipped(reason),
        None => build_ml_section(config, records),
    };

    let brightness = match section_or(toggles.brightness, abort_reason) {
        Some(reason) => Section::skipped(reason),
        None => Section::ok(build_brightness_section(&state.brightness, records)),
    };

    let grid = match section_or(toggles.grid, abort_reason) {
        Some(reason) => Section::skipped(reason),
        None => Section::ok(state.grid.finish()),
    };

    let monthly = match section_or(toggles.monthly, abort_reason) {
        Some(reason) => Section::skipped(reason),
        None => Section::ok(state.monthly.finish()),
    };

    let bands = match section_or(toggles.bands, abort_reason) {
        Some(reason) => Section::skipped(reason),
        None => Section::ok(state.bands.finish()),
    };

    let mut report = AuditReport {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        config: config.clone(),
        ingest,
        qc,
        contingency,
        verification,
        bootstrap,
        ml,
        brightness,
        grid,
        monthly,
        bands,
        findings: Findings {
            night_low_observed: None,
            night_low_expected: None,
            night_low_residual: None,
            verification_agreement: None,
            bootstrap_degenerate: None,
            night_constraint_probe: None,
            theta_night: None,
            monthly_pattern: None,
            band_pattern: None,
            notes: Vec::new(),
        },
    };
    report.findings = assemble_findings(&report);
    Ok(report)
}

/// Which part of the report to render.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ReportScope {
    Full,
    Qc,
    Contingency,
    Verification,
    Bootstrap,
    Ml,
    Brightness,
    Grid,
    Monthly,
    Bands,
}

/// Render the full report.
pub fn render_report(report: &AuditReport, format: OutputFormat) -> String {
    render_scoped(report, format, ReportScope::Full)
}

/// Render the full report or a single section.
pub fn render_scoped(report: &AuditReport, format: OutputFormat, scope: ReportScope) -> String {
    match format {
        OutputFormat::Json => {
            let value = match scope {
                ReportScope::Full => serde_json::to_value(report),
                ReportScope::Qc => serde_json::to_value(&report.qc),
                ReportScope::Contingency => serde_json::to_value(&report.contingency),
                ReportScope::Verification => serde_json::to_value(&report.verification),
                ReportScope::Bootstrap => serde_json::to_value(&report.bootstrap),
                ReportScope::Ml => serde_json::to_value(&report.ml),
                ReportScope::Brightness => serde_json::to_value(&report.brightness),
                ReportScope::Grid => serde_json::to_value(&report.grid),
                ReportScope::Monthly => serde_json::to_value(&report.monthly),
                ReportScope::Bands => serde_json::to_value(&report.bands),
            }
            .expect("report serialization is infallible");
            let mut s = serde_json::to_string_pretty(&value).expect("pretty-print");
            s.push('\n');
            s
        }
        OutputFormat::Markdown => markdown::render(report, scope),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::{generate_csv, GeneratorSpec};
    use std::path::Path;

    fn corpus_file(dir: &Path, n: u64, seed: u64) -> PathBuf {
        let path = dir.join(format!("corpus_{n}_{seed}.csv"));
        let spec = GeneratorSpec { n_accepted: n, master_seed: seed, ..GeneratorSpec::default() };
        generate_csv(&spec, &path).unwrap();
        path
    }

    fn config_for(path: PathBuf) -> AuditConfig {
        AuditConfig {
            inputs: vec![path],
            bootstrap: BootstrapParams { n_iter: 50, sample_size: 500 },
            ..AuditConfig::default()
        }
    }

    #[test]
    fn full_audit_populates_every_section() {
        let dir = tempfile::tempdir().unwrap();
        let config = config_for(corpus_file(dir.path(), 3000, 1));
        let report = run_audit(&config).unwrap();
        assert!(report.qc.data().is_some());
        assert!(report.contingency.data().is_some());
        assert!(report.verification.data().is_some());
        assert!(report.bootstrap.data().is_some());
        assert!(report.ml.data().is_some());
        assert!(report.brightness.data().is_some());
        assert!(report.grid.data().is_some());
        assert!(report.monthly.data().is_some());
        assert!(report.bands.data().is_some());
        assert!(report.exit_ok());
        assert_eq!(report.ingest.rows_parsed, 3000);
        let v = report.verification.data().unwrap();
        assert!(v.agreement);
        assert_eq!(v.counts, vec![0; 5]);
    }

    #[test]
    fn disabled_sections_are_marked_skipped() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = config_for(corpus_file(dir.path(), 500, 2));
        config.sections = SectionToggles { qc: true, ..SectionToggles::none() };
        let report = run_audit(&config).unwrap();
        assert!(report.qc.data().is_some());
        assert!(matches!(report.ml, Section::Skipped { .. }));
        assert!(matches!(report.bootstrap, Section::Skipped { .. }));
    }

    #[test]
    fn same_seed_gives_byte_identical_json() {
        let dir = tempfile::tempdir().unwrap();
        let config = config_for(corpus_file(dir.path(), 2000, 3));
        let a = render_report(&run_audit(&config).unwrap(), OutputFormat::Json);
        let b = render_report(&run_audit(&config).unwrap(), OutputFormat::Json);
        assert_eq!(a, b);
    }

    #[test]
    fn json_round_trip_is_a_fixed_point() {
        let dir = tempfile::tempdir().unwrap();
        let config = config_for(corpus_file(dir.path(), 800, 4));
        let report = run_audit(&config).unwrap();
        let rendered = render_report(&report, OutputFormat::Json);
        let parsed: AuditReport = serde_json::from_str(&rendered).unwrap();
        assert_eq!(parsed, report);
        assert_eq!(render_report(&parsed, OutputFormat::Json), rendered);
    }

    #[test]
    fn strict_mode_aborts_and_skips_downstream_sections() {
        let dir = tempfile::tempdir().unwrap();
        let good = corpus_file(dir.path(), 50, 5);
        let corrupt = dir.path().join("corrupt.csv");
        let mut text = std::fs::read_to_string(&good).unwrap();
        text.push_str("not,a,valid,row\n");
        std::fs::write(&corrupt, text).unwrap();

        let mut config = config_for(corrupt);
        config.strict = true;
        let report = run_audit(&config).unwrap();
        assert!(report.ingest.error.is_some());
        assert!(report.qc.data().is_some(), "QC stays populated on strict abort");
        assert!(matches!(report.contingency, Section::Skipped { .. }));
        assert!(matches!(report.ml, Section::Skipped { .. }));
        assert!(!report.exit_ok());

        // The same fixture under skip-and-count completes.
        let mut lenient = config.clone();
        lenient.strict = false;
        let report = run_audit(&lenient).unwrap();
        assert!(report.ingest.error.is_none());
        assert_eq!(report.ingest.skipped.total(), 1);
        assert!(report.contingency.data().is_some());
    }

    #[test]
    fn markdown_renders_all_and_skipped_banners() {
        let dir = tempfile::tempdir().unwrap();
        let mut config = config_for(corpus_file(dir.path(), 400, 6));
        config.sections.ml = false;
        let report = run_audit(&config).unwrap();
        let md = render_report(&report, OutputFormat::Markdown);
        assert!(md.contains("| Check |"));
        assert!(md.contains("skipped"));
        assert!(md.contains("---")); // empty night/low cells render as dashes
    }

    #[test]
    fn empty_input_fails_contingency_with_attribution() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.csv");
        std::fs::write(&path, format!("{}\n", crate::records::CANONICAL_COLUMNS.join(","))).unwrap();
        let config = config_for(path);
        let report = run_audit(&config).unwrap();
        assert!(report.contingency.is_failed());
        assert!(report.bootstrap.is_failed());
        assert!(!report.exit_ok());
        // QC still reports the empty scan.
        assert_eq!(report.qc.data().unwrap().total_rows, 0);
    }

    #[test]
    fn config_validation_rejects_nonsense() {
        let config = AuditConfig::default();
        assert!(run_audit(&config).is_err(), "no inputs");
        let mut c = AuditConfig { inputs: vec![PathBuf::from("x.csv")], ..Default::default() };
        c.sections = SectionToggles::none();
        assert!(matches!(run_audit(&c), Err(AuditError::InvalidConfig(_))));
    }
}
