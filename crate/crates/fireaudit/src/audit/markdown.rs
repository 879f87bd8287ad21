//! Markdown rendering of audit reports. Table layouts mirror the reference
//! result tables: validation checks, contingency counts, residuals,
//! multi-method verification, per-category brightness statistics and the
//! monthly/latitude consistency tables.

use super::{
    AuditReport, BootstrapSection, BrightnessSection, ContingencySection, MlSection, QcSection,
    ReportScope, Section,
};
use crate::spacetime::{BandReport, GridResult, MonthlyRow};
use crate::tree::FEATURE_NAMES;
use crate::verify::VerificationResult;

const MONTH_NAMES: [&str; 12] = [
    "January",
    "February",
    "March",
    "April",
    "May",
    "June",
    "July",
    "August",
    "September",
    "October",
    "November",
    "December",
];

pub fn render(report: &AuditReport, scope: ReportScope) -> String {
    let mut out = String::new();
    match scope {
        ReportScope::Full => {
            header(&mut out, report);
            section(&mut out, "Data Quality Validation", &report.qc, qc_block);
            section(&mut out, "Contingency Analysis", &report.contingency, contingency_block);
            section(&mut out, "Multi-Method Verification", &report.verification, verification_block);
            section(&mut out, "Bootstrap Resampling", &report.bootstrap, bootstrap_block);
            section(&mut out, "Algorithm Reconstruction", &report.ml, ml_block);
            section(&mut out, "Brightness Temperature", &report.brightness, brightness_block);
            section(&mut out, "Spatial Grid", &report.grid, grid_block);
            section(&mut out, "Monthly Pattern", &report.monthly, monthly_block);
            section(&mut out, "Latitude Bands", &report.bands, bands_block);
            findings_block(&mut out, report);
        }
        ReportScope::Qc => section(&mut out, "Data Quality Validation", &report.qc, qc_block),
        ReportScope::Contingency => {
            section(&mut out, "Contingency Analysis", &report.contingency, contingency_block)
        }
        ReportScope::Verification => {
            section(&mut out, "Multi-Method Verification", &report.verification, verification_block)
        }
        ReportScope::Bootstrap => {
            section(&mut out, "Bootstrap Resampling", &report.bootstrap, bootstrap_block)
        }
        ReportScope::Ml => section(&mut out, "Algorithm Reconstruction", &report.ml, ml_block),
        ReportScope::Brightness => {
            section(&mut out, "Brightness Temperature", &report.brightness, brightness_block)
        }
        ReportScope::Grid => section(&mut out, "Spatial Grid", &report.grid, grid_block),
        ReportScope::Monthly => section(&mut out, "Monthly Pattern", &report.monthly, monthly_block),
        ReportScope::Bands => section(&mut out, "Latitude Bands", &report.bands, bands_block),
    }
    out
}

fn header(out: &mut String, report: &AuditReport) {
    out.push_str(&format!("# {} audit report (v{})\n\n", report.tool, report.version));
    out.push_str(&format!(
        "Inputs: {}. Rows parsed: {}. Rows skipped: {}. Master seed: {}.\n\n",
        report.ingest.inputs.join(", "),
        report.ingest.rows_parsed,
        report.ingest.skipped.total(),
        report.config.master_seed
    ));
    if let Some(err) = &report.ingest.error {
        out.push_str(&format!("**Ingest aborted:** {err}\n\n"));
    }
}

fn section<T>(out: &mut String, title: &str, s: &Section<T>, body: fn(&mut String, &T)) {
    out.push_str(&format!("## {title}\n\n"));
    match s {
        Section::Ok { data } => body(out, data),
        Section::Skipped { reason } => out.push_str(&format!("> skipped: {reason}\n")),
        Section::Failed { error } => out.push_str(&format!("> **failed:** {error}\n")),
    }
    out.push('\n');
}

fn qc_block(out: &mut String, qc: &QcSection) {
    out.push_str("| Check | Result | Status |\n|---|---|---|\n");
    for check in &qc.checks {
        out.push_str(&format!(
            "| {} | {} | {} |\n",
            check.name,
            check.result,
            if check.passed { "pass" } else { "FAIL" }
        ));
    }
    out.push_str(&format!(
        "\nTotal rows: {}. Skipped rows: {}. Unknown satellite tokens: {}.\n",
        qc.total_rows,
        qc.skipped.total(),
        qc.unknown_satellite
    ));
}

fn contingency_block(out: &mut String, c: &ContingencySection) {
    let t = &c.table;
    out.push_str("| Confidence |");
    for col in &t.col_labels {
        out.push_str(&format!(" {col} |"));
    }
    out.push_str(" Total |\n|---|");
    for _ in 0..=t.col_labels.len() {
        out.push_str("---|");
    }
    out.push('\n');
    for (i, row_label) in t.row_labels.iter().enumerate() {
        out.push_str(&format!("| {row_label} |"));
        for j in 0..t.col_labels.len() {
            out.push_str(&format!(" {} |", t.counts[i][j]));
        }
        out.push_str(&format!(" {} |\n", t.row_totals[i]));
    }
    out.push_str("| Total |");
    for j in 0..t.col_labels.len() {
        out.push_str(&format!(" {} |", t.col_totals[j]));
    }
    out.push_str(&format!(" {} |\n", t.grand_total));

    out.push_str(&format!(
        "\nchi-square = {:.2} (df = {}), p = {:.3e} (ln p = {:.3}), Cramer's V = {:.3}\n",
        c.statistic, c.df, c.p_value, c.log_p, c.cramers_v
    ));

    out.push_str("\nStandardized residuals:\n\n| Confidence |");
    for col in &t.col_labels {
        out.push_str(&format!(" {col} |"));
    }
    out.push_str("\n|---|");
    for _ in 0..t.col_labels.len() {
        out.push_str("---|");
    }
    out.push('\n');
    for (i, row_label) in t.row_labels.iter().enumerate() {
        out.push_str(&format!("| {row_label} |"));
        for j in 0..t.col_labels.len() {
            out.push_str(&format!(" {:+.2} |", c.residuals[i][j]));
        }
        out.push('\n');
    }
    if let Some(nl) = &c.night_low {
        out.push_str(&format!(
            "\nNight/low cell: observed {}, expected {:.1}, residual {:+.2}.\n{}\n",
            nl.observed, nl.expected, nl.residual, nl.note
        ));
    }
}

fn verification_block(out: &mut String, v: &VerificationResult) {
    out.push_str(&format!("Predicate: `{}`\n\n", v.predicate_description));
    out.push_str("| Method | Count |\n|---|---|\n");
    for (name, count) in v.method_names.iter().zip(&v.counts) {
        out.push_str(&format!("| {name} | {count} |\n"));
    }
    out.push_str(&format!(
        "\nAgreement: {}\n",
        if v.agreement { "yes (all five methods)" } else { "NO — methods disagree" }
    ));
}

fn bootstrap_block(out: &mut String, b: &BootstrapSection) {
    out.push_str(&format!(
        "Stratum: {} rows with daynight = {}; counting confidence = {}.\n\n",
        b.subset_size,
        b.stratum.as_str(),
        b.target.as_str()
    ));
    out.push_str(&format!(
        "- Iterations: {} x {} samples (with replacement)\n- Mean: {:.2}\n- SD: {:.2}\n\
         - Min: {}\n- Max: {}\n- 95% CI: [{}, {}]\n- Degenerate: {}\n- RNG: {} (seed {})\n",
        b.n_iter,
        b.sample_size,
        b.mean,
        b.sd,
        b.min,
        b.max,
        b.ci95.0,
        b.ci95.1,
        if b.degenerate { "yes (single point mass)" } else { "no" },
        b.rng_algorithm,
        b.master_seed
    ));
}

fn ml_block(out: &mut String, m: &MlSection) {
    out.push_str(&format!(
        "Decision tree (max depth {:?}, min split {}, min leaf {}), test fraction {:.2}.\n\n",
        m.params.max_depth, m.params.min_samples_split, m.params.min_samples_leaf, m.test_fraction
    ));
    out.push_str(&format!(
        "- Training rows: {}\n- Test rows: {}\n- Test accuracy: {:.3}\n- Majority-class baseline: {:.3}\n",
        m.n_train, m.n_test, m.metrics.accuracy, m.majority_class_baseline
    ));
    if let Some(imp) = &m.importances {
        out.push_str("\nFeature importances:\n\n| Feature | Importance |\n|---|---|\n");
        for name in FEATURE_NAMES {
            if let Some(v) = imp.get(name) {
                out.push_str(&format!("| {name} | {v:.3} |\n"));
            }
        }
    } else {
        out.push_str("\nFeature importances: undefined (single-leaf tree).\n");
    }
    out.push_str(&format!(
        "\nNighttime constraint probe: {} of {} night test rows predicted low.\n",
        m.night_constraint_probe, m.night_test_rows
    ));
}

fn brightness_block(out: &mut String, b: &BrightnessSection) {
    out.push_str("| Category | Count | Mean (K) | Median (K) | Min (K) | Max (K) |\n");
    out.push_str("|---|---|---|---|---|---|\n");
    let fmt = |v: Option<f64>| v.map(|x| format!("{x:.1}")).unwrap_or_else(|| "---".into());
    for s in &b.categories {
        out.push_str(&format!(
            "| {}-{} | {} | {} | {} | {} | {} |\n",
            s.daynight.name(),
            s.confidence.name(),
            s.count,
            fmt(s.mean),
            fmt(s.median),
            fmt(s.min),
            fmt(s.max)
        ));
    }
    if b.categories.iter().any(|s| s.median_approximate) {
        out.push_str("\nMedians marked from the histogram sketch are approximate (0.1 K bins).\n");
    }
    match (&b.thresholds, &b.threshold_error) {
        (Some(t), _) => out.push_str(&format!(
            "\nInferred thresholds: theta_min = {:.1} K ({} rows within 1 K), \
             theta_night = {:.1} K ({} rows), theta_high = {:.1} K ({} rows).\n",
            t.theta_min, t.support_min, t.theta_night, t.support_night, t.theta_high, t.support_high
        )),
        (None, Some(err)) => out.push_str(&format!("\nThresholds unavailable: {err}\n")),
        (None, None) => {}
    }
    for cat in &b.constant_categories {
        out.push_str(&format!("\nNote: {cat} brightness is constant (saturation ceiling).\n"));
    }
}

fn grid_block(out: &mut String, g: &GridResult) {
    out.push_str(&format!(
        "{}x{} grid of {}-degree cells: {} occupied, {} with nighttime low-confidence \
         detections, {} detections total.\n",
        g.n_rows,
        g.n_cols,
        g.cell_size,
        g.occupied_cells,
        g.nonzero_cells,
        g.totals.iter().sum::<u64>()
    ));
}

fn monthly_block(out: &mut String, rows: &Vec<MonthlyRow>) {
    out.push_str("| Month | Total Fires | Night Fires | Night Low-Conf | Pattern Holds |\n");
    out.push_str("|---|---|---|---|---|\n");
    for r in rows {
        out.push_str(&format!(
            "| {} | {} | {} | {} | {} |\n",
            MONTH_NAMES[(r.month - 1) as usize],
            r.total_fires,
            r.night_fires,
            r.night_low_conf,
            if r.pattern_holds { "Yes" } else { "No" }
        ));
    }
    let total: u64 = rows.iter().map(|r| r.total_fires).sum();
    let night: u64 = rows.iter().map(|r| r.night_fires).sum();
    let night_low: u64 = rows.iter().map(|r| r.night_low_conf).sum();
    let holds = rows.iter().filter(|r| r.pattern_holds).count();
    out.push_str(&format!(
        "| **Total** | {total} | {night} | {night_low} | {holds}/12 |\n"
    ));
}

fn bands_block(out: &mut String, b: &BandReport) {
    out.push_str(&format!(
        "Band width {} degrees; a band qualifies with more than {} fires.\n\n",
        b.band_width, b.min_count
    ));
    out.push_str("| Band | Latitude | Total Fires | Night Low-Conf | Qualifies | Pattern Holds |\n");
    out.push_str("|---|---|---|---|---|---|\n");
    for row in &b.bands {
        out.push_str(&format!(
            "| {} | [{:.0}, {:.0}) | {} | {} | {} | {} |\n",
            row.band,
            row.lat_min,
            row.lat_max,
            row.total_fires,
            row.night_low_conf,
            if row.qualifies { "yes" } else { "no" },
            if row.pattern_holds { "Yes" } else { "No" }
        ));
    }
    out.push_str(&format!(
        "\nSummary: pattern holds in {}/{} qualifying bands.\n",
        b.holding, b.qualifying
    ));
}

fn findings_block(out: &mut String, report: &AuditReport) {
    out.push_str("## Headline Findings\n\n");
    let f = &report.findings;
    if let (Some(obs), Some(exp), Some(res)) =
        (f.night_low_observed, f.night_low_expected, f.night_low_residual)
    {
        out.push_str(&format!(
            "- Nighttime low-confidence detections: observed {obs}, expected {exp:.1} under \
             independence, residual {res:+.2}\n"
        ));
    }
    if let Some(agree) = f.verification_agreement {
        out.push_str(&format!("- Five-method verification agreement: {agree}\n"));
    }
    if let Some(d) = f.bootstrap_degenerate {
        out.push_str(&format!("- Bootstrap distribution degenerate: {d}\n"));
    }
    if let Some(p) = f.night_constraint_probe {
        out.push_str(&format!("- Tree predicts low for {p} nighttime test rows\n"));
    }
    if let Some(t) = f.theta_night {
        out.push_str(&format!("- Minimum nighttime brightness (theta_night): {t:.1} K\n"));
    }
    if let Some(m) = &f.monthly_pattern {
        out.push_str(&format!("- Monthly pattern holds: {m}\n"));
    }
    if let Some(b) = &f.band_pattern {
        out.push_str(&format!("- Qualifying latitude bands holding: {b}\n"));
    }
    for note in &f.notes {
        out.push_str(&format!("- {note}\n"));
    }
}
