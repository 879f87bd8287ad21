//! Command-line front end for the audit toolkit.

use std::io::{Read, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fireaudit::audit::{
    render_scoped, run_audit, AuditConfig, OutputFormat, ReportScope, SectionToggles,
};
use fireaudit::brightness::MedianMode;
use fireaudit::records::{Confidence, DayNight};
use fireaudit::resample::BootstrapParams;
use fireaudit::synth::{generate_csv, GeneratorSpec};
use fireaudit::tree::TreeParams;
use fireaudit::verify::CountPredicate;

#[derive(Parser)]
#[command(name = "fireaudit", version, about = "Statistical audit toolkit for FIRMS VIIRS fire-detection archives")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Json,
    Markdown,
}

impl From<FormatArg> for OutputFormat {
    fn from(f: FormatArg) -> Self {
        match f {
            FormatArg::Json => OutputFormat::Json,
            FormatArg::Markdown => OutputFormat::Markdown,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum DayNightArg {
    D,
    N,
}

impl From<DayNightArg> for DayNight {
    fn from(v: DayNightArg) -> Self {
        match v {
            DayNightArg::D => DayNight::Day,
            DayNightArg::N => DayNight::Night,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ConfidenceArg {
    H,
    N,
    L,
}

impl From<ConfidenceArg> for Confidence {
    fn from(v: ConfidenceArg) -> Self {
        match v {
            ConfidenceArg::H => Confidence::High,
            ConfidenceArg::N => Confidence::Nominal,
            ConfidenceArg::L => Confidence::Low,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum MedianArg {
    Exact,
    Histogram,
}

#[derive(Args)]
struct IoArgs {
    /// Input CSV path(s); `-` reads standard input.
    #[arg(short, long, required = true)]
    input: Vec<PathBuf>,
    /// Output path; standard output when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value = "json")]
    format: FormatArg,
    /// Abort on the first malformed row and gate the exit status on QC.
    #[arg(long)]
    strict: bool,
    /// Master seed recorded in the report; all randomness derives from it.
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Args)]
struct TreeArgs {
    /// Maximum tree depth; 0 means unlimited.
    #[arg(long, default_value_t = 10)]
    max_depth: usize,
    #[arg(long, default_value_t = 2)]
    min_samples_split: usize,
    #[arg(long, default_value_t = 1)]
    min_samples_leaf: usize,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
}

impl TreeArgs {
    fn params(&self) -> TreeParams {
        TreeParams {
            max_depth: if self.max_depth == 0 { None } else { Some(self.max_depth) },
            min_samples_split: self.min_samples_split,
            min_samples_leaf: self.min_samples_leaf,
        }
    }
}

#[derive(Args)]
struct BootstrapArgs {
    #[arg(long, default_value_t = 1000)]
    iterations: usize,
    #[arg(long, default_value_t = 10_000)]
    sample_size: usize,
    /// Stratum to resample.
    #[arg(long, value_enum, default_value = "n")]
    daynight: DayNightArg,
    /// Confidence class counted within each sample.
    #[arg(long, value_enum, default_value = "l")]
    confidence: ConfidenceArg,
}

#[derive(Subcommand)]
enum Command {
    /// Data-quality validation battery.
    Qc {
        #[command(flatten)]
        io: IoArgs,
        /// Typical brightness range as `lo,hi` kelvin.
        #[arg(long, value_parser = parse_range, default_value = "280,500")]
        brightness_range: (f64, f64),
        /// Sample size adequacy cutoff (adequate when rows exceed it).
        #[arg(long, default_value_t = 1_000_000)]
        adequacy_cutoff: u64,
    },
    /// Confidence x day/night contingency table and chi-square analysis.
    Contingency {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Count one (day/night, confidence) predicate five independent ways.
    Verify {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, value_enum, default_value = "n")]
        daynight: DayNightArg,
        #[arg(long, value_enum, default_value = "l")]
        confidence: ConfidenceArg,
        /// Raw query text for the query-engine method (passed verbatim),
        /// e.g. `daynight == "N" and confidence == "l"`.
        #[arg(long)]
        query: Option<String>,
    },
    /// Bootstrap the predicate count distribution within a stratum.
    Bootstrap {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        params: BootstrapArgs,
    },
    /// Reconstruct the confidence assignment with a decision tree.
    Ml {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        tree: TreeArgs,
    },
    /// Brightness statistics per day/night x confidence category.
    Brightness {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, value_enum, default_value = "exact")]
        median: MedianArg,
    },
    /// Spatial grid aggregation.
    Grid {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, default_value_t = 10.0)]
        cell_size: f64,
        /// Also write the per-cell count matrices as CSV.
        #[arg(long)]
        matrix_out: Option<PathBuf>,
        /// Also write the occupied cells as a GeoJSON feature collection.
        #[arg(long)]
        geojson_out: Option<PathBuf>,
    },
    /// Monthly aggregation.
    Monthly {
        #[command(flatten)]
        io: IoArgs,
    },
    /// Latitude-band consistency.
    Bands {
        #[command(flatten)]
        io: IoArgs,
        #[arg(long, default_value_t = 10.0)]
        band_width: f64,
        /// A band qualifies when its total exceeds this.
        #[arg(long, default_value_t = 100)]
        min_count: u64,
    },
    /// Generate a synthetic FIRMS-format corpus.
    Synth {
        /// Generator spec as a JSON document; defaults apply to omitted fields.
        #[arg(long)]
        spec: Option<PathBuf>,
        /// Override the number of records.
        #[arg(long)]
        rows: Option<u64>,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output CSV path.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run every analysis and emit the full report.
    Audit {
        #[command(flatten)]
        io: IoArgs,
        #[command(flatten)]
        tree: TreeArgs,
        #[command(flatten)]
        bootstrap: BootstrapArgs,
        #[arg(long, default_value_t = 10.0)]
        cell_size: f64,
        #[arg(long, default_value_t = 10.0)]
        band_width: f64,
        #[arg(long, default_value_t = 100)]
        band_min_count: u64,
        #[arg(long, value_enum, default_value = "exact")]
        median: MedianArg,
    },
    /// Download a FIRMS area CSV (needs the FIRMS_MAP_KEY environment variable).
    #[cfg(feature = "fetch")]
    Fetch {
        /// FIRMS product, e.g. VIIRS_SNPP_NRT or VIIRS_NOAA20_NRT.
        #[arg(long, default_value = "VIIRS_SNPP_NRT")]
        source: String,
        /// Bounding box `west,south,east,north` in degrees.
        #[arg(long)]
        area: String,
        /// Day range 1..=10.
        #[arg(long, default_value_t = 1)]
        days: u32,
        /// Range end date YYYY-MM-DD (the latest data when omitted).
        #[arg(long)]
        date: Option<String>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn parse_range(s: &str) -> Result<(f64, f64), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected `lo,hi`".into());
    }
    let lo: f64 = parts[0].trim().parse().map_err(|_| "invalid low bound")?;
    let hi: f64 = parts[1].trim().parse().map_err(|_| "invalid high bound")?;
    if lo >= hi {
        return Err("low bound must be below high bound".into());
    }
    Ok((lo, hi))
}

/// Replace a `-` input with a temp file holding standard input, so the audit
/// can re-open it.
fn resolve_inputs(inputs: &[PathBuf]) -> std::io::Result<(Vec<PathBuf>, Option<tempfile::NamedTempFile>)> {
    let mut resolved = Vec::new();
    let mut stdin_file = None;
    for p in inputs {
        if p.as_os_str() == "-" {
            let mut buf = Vec::new();
            std::io::stdin().read_to_end(&mut buf)?;
            let mut tmp = tempfile::NamedTempFile::new()?;
            tmp.write_all(&buf)?;
            resolved.push(tmp.path().to_path_buf());
            stdin_file = Some(tmp);
        } else {
            resolved.push(p.clone());
        }
    }
    Ok((resolved, stdin_file))
}

fn emit(out: &Option<PathBuf>, content: &str) -> std::io::Result<()> {
    match out {
        Some(path) => std::fs::write(path, content),
        None => {
            std::io::stdout().write_all(content.as_bytes())?;
            Ok(())
        }
    }
}

fn base_config(io: &IoArgs, sections: SectionToggles) -> std::io::Result<(AuditConfig, Option<tempfile::NamedTempFile>)> {
    let (inputs, guard) = resolve_inputs(&io.input)?;
    let config = AuditConfig {
        inputs,
        sections,
        strict: io.strict,
        master_seed: io.seed,
        format: io.format.into(),
        ..AuditConfig::default()
    };
    Ok((config, guard))
}

fn only(section: &str) -> SectionToggles {
    let mut t = SectionToggles::none();
    match section {
        "qc" => t.qc = true,
        "contingency" => t.contingency = true,
        "verification" => t.verification = true,
        "bootstrap" => t.bootstrap = true,
        "ml" => t.ml = true,
        "brightness" => t.brightness = true,
        "grid" => t.grid = true,
        "monthly" => t.monthly = true,
        "bands" => t.bands = true,
        _ => unreachable!(),
    }
    t
}

fn run_and_emit(
    config: &AuditConfig,
    io: &IoArgs,
    scope: ReportScope,
) -> Result<bool, Box<dyn std::error::Error>> {
    let report = run_audit(config)?;
    let rendered = render_scoped(&report, config.format, scope);
    emit(&io.out, &rendered)?;
    Ok(report.exit_ok())
}

fn run(cli: Cli) -> Result<bool, Box<dyn std::error::Error>> {
    match cli.command {
        Command::Qc { io, brightness_range, adequacy_cutoff } => {
            let (mut config, _guard) = base_config(&io, only("qc"))?;
            config.qc_thresholds.brightness_typical = brightness_range;
            config.qc_thresholds.adequacy_cutoff = adequacy_cutoff;
            run_and_emit(&config, &io, ReportScope::Qc)
        }
        Command::Contingency { io } => {
            let (config, _guard) = base_config(&io, only("contingency"))?;
            run_and_emit(&config, &io, ReportScope::Contingency)
        }
        Command::Verify { io, daynight, confidence, query } => {
            let (mut config, _guard) = base_config(&io, only("verification"))?;
            config.verify_predicate =
                CountPredicate { daynight: daynight.into(), confidence: confidence.into() };
            config.verify_query = query;
            run_and_emit(&config, &io, ReportScope::Verification)
        }
        Command::Bootstrap { io, params } => {
            let (mut config, _guard) = base_config(&io, only("bootstrap"))?;
            config.bootstrap =
                BootstrapParams { n_iter: params.iterations, sample_size: params.sample_size };
            config.bootstrap_stratum = params.daynight.into();
            config.bootstrap_target = params.confidence.into();
            run_and_emit(&config, &io, ReportScope::Bootstrap)
        }
        Command::Ml { io, tree } => {
            let (mut config, _guard) = base_config(&io, only("ml"))?;
            config.tree = tree.params();
            config.test_fraction = tree.test_fraction;
            run_and_emit(&config, &io, ReportScope::Ml)
        }
        Command::Brightness { io, median } => {
            let (mut config, _guard) = base_config(&io, only("brightness"))?;
            config.median_mode = match median {
                MedianArg::Exact => MedianMode::Exact,
                MedianArg::Histogram => MedianMode::Histogram,
            };
            run_and_emit(&config, &io, ReportScope::Brightness)
        }
        Command::Grid { io, cell_size, matrix_out, geojson_out } => {
            let (mut config, _guard) = base_config(&io, only("grid"))?;
            config.cell_size = cell_size;
            let report = run_audit(&config)?;
            if let Some(grid) = report.grid.data() {
                if let Some(path) = matrix_out {
                    std::fs::write(path, grid.to_csv_matrix())?;
                }
                if let Some(path) = geojson_out {
                    std::fs::write(path, serde_json::to_string_pretty(&grid.to_geojson_cells())?)?;
                }
            }
            let rendered = render_scoped(&report, config.format, ReportScope::Grid);
            emit(&io.out, &rendered)?;
            Ok(report.exit_ok())
        }
        Command::Monthly { io } => {
            let (config, _guard) = base_config(&io, only("monthly"))?;
            run_and_emit(&config, &io, ReportScope::Monthly)
        }
        Command::Bands { io, band_width, min_count } => {
            let (mut config, _guard) = base_config(&io, only("bands"))?;
            config.band_width = band_width;
            config.band_min_count = min_count;
            run_and_emit(&config, &io, ReportScope::Bands)
        }
        Command::Synth { spec, rows, seed, out } => {
            let mut generator = match spec {
                Some(path) => serde_json::from_str::<GeneratorSpec>(&std::fs::read_to_string(path)?)?,
                None => GeneratorSpec::default(),
            };
            if let Some(n) = rows {
                generator.n_accepted = n;
            }
            if let Some(s) = seed {
                generator.master_seed = s;
            }
            generate_csv(&generator, &out)?;
            eprintln!("wrote {} rows to {}", generator.n_accepted, out.display());
            Ok(true)
        }
        Command::Audit { io, tree, bootstrap, cell_size, band_width, band_min_count, median } => {
            let (mut config, _guard) = base_config(&io, SectionToggles::default())?;
            config.tree = tree.params();
            config.test_fraction = tree.test_fraction;
            config.bootstrap =
                BootstrapParams { n_iter: bootstrap.iterations, sample_size: bootstrap.sample_size };
            config.bootstrap_stratum = bootstrap.daynight.into();
            config.bootstrap_target = bootstrap.confidence.into();
            config.cell_size = cell_size;
            config.band_width = band_width;
            config.band_min_count = band_min_count;
            config.median_mode = match median {
                MedianArg::Exact => MedianMode::Exact,
                MedianArg::Histogram => MedianMode::Histogram,
            };
            run_and_emit(&config, &io, ReportScope::Full)
        }
        #[cfg(feature = "fetch")]
        Command::Fetch { source, area, days, date, out } => {
            let body = fireaudit::fetch::fetch_area_csv(&source, &area, days, date.as_deref())?;
            emit(&out, &body)?;
            Ok(true)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("fireaudit: {e}");
            ExitCode::FAILURE
        }
    }
}
