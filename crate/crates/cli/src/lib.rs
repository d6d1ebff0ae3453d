//! Pipeline stages behind the `unexq` command.
//!
//! Every stage reads the artifacts of earlier stages from the output
//! directory and writes its own, so running the stages one by one produces
//! the same bytes as `run`.

use std::collections::BTreeMap;
use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use unexq_core::corpus::{self, apply_filters, parse_records, summarize_records, TweetRecord};
use unexq_core::synth::{self, SynthConfig};
use unexq_core::textfeat::{self, Lexicons};
use unexq_core::unexpect::{self, PipelineConfig, QuantileScale, Target};
use unexq_core::Error as CoreError;

pub const CORPUS_FILE: &str = "corpus.jsonl";
pub const EXCLUSIONS_FILE: &str = "exclusions.csv";
pub const PARSE_ERRORS_FILE: &str = "parse_errors.csv";
pub const CORPUS_SUMMARY_FILE: &str = "corpus_summary.txt";
pub const FEATURES_FILE: &str = "features.csv";
pub const BASELINES_FILE: &str = "baselines.csv";
pub const SCORES_FILE: &str = "scores.csv";
pub const DISTRIBUTION_TESTS_FILE: &str = "distribution_tests.csv";
pub const DISTRIBUTION_SUMMARY_FILE: &str = "distribution_summary.csv";
pub const MODEL_STATS_FILE: &str = "model_stats.csv";
pub const TAU_ROBUSTNESS_FILE: &str = "tau_robustness.csv";
pub const CV_FILE: &str = "cv_report.csv";
pub const REPORT_FILE: &str = "report.txt";
pub const MANIFEST_FILE: &str = "manifest.json";
/// Wall-clock timings; the only output that differs between identical runs.
pub const TIMINGS_FILE: &str = "timings.json";
pub const SYNTH_FILE: &str = "synthetic.jsonl";

pub const TOOL_NAME: &str = "unexq";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
    #[error("{0}")]
    Numerical(String),
}

impl CliError {
    /// 1 usage/config, 2 data or missing artifact, 3 numerical failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl From<CoreError> for CliError {
    fn from(e: CoreError) -> Self {
        match &e {
            CoreError::Config(_) => CliError::Usage(e.to_string()),
            _ if e.is_numerical() => CliError::Numerical(e.to_string()),
            _ => CliError::Data(e.to_string()),
        }
    }
}

pub type Result<T, E = CliError> = std::result::Result<T, E>;

/// Contents of the TOML config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Line-delimited JSON posts; relative paths resolve against the config file.
    pub input: Option<PathBuf>,
    pub analysis: PipelineConfig,
    pub synth: SynthConfig,
}

/// Command-line values that override the config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub input: Option<PathBuf>,
    pub seed: Option<u64>,
    pub tau: Option<f64>,
    pub min_any: Option<u64>,
    pub quantile_scale: Option<String>,
    pub k: Option<usize>,
    pub n: Option<usize>,
}

/// Resolved configuration and where outputs go.
#[derive(Debug, Clone)]
pub struct Settings {
    pub config: RunConfig,
    pub output: PathBuf,
}

impl Settings {
    pub fn load(config_path: Option<&Path>, output: &Path, overrides: &Overrides) -> Result<Self> {
        let (mut config, base) = match config_path {
            Some(p) => {
                let text = fs::read_to_string(p)
                    .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", p.display())))?;
                let cfg: RunConfig = toml::from_str(&text)
                    .map_err(|e| CliError::Usage(format!("invalid config {}: {e}", p.display())))?;
                (cfg, p.parent().map(Path::to_path_buf).unwrap_or_default())
            }
            None => (RunConfig::default(), PathBuf::new()),
        };
        config.input = config.input.map(|p| if p.is_absolute() { p } else { base.join(p) });
        config.analysis.lexicons = config.analysis.lexicons.resolved(&base);
        if let Some(p) = &overrides.input {
            config.input = Some(p.clone());
        }
        if let Some(seed) = overrides.seed {
            config.analysis.cv_seed = seed;
            config.synth.seed = seed;
        }
        if let Some(tau) = overrides.tau {
            config.analysis.tau = tau;
        }
        if let Some(m) = overrides.min_any {
            config.analysis.robustness_min_any = m;
        }
        if let Some(s) = &overrides.quantile_scale {
            config.analysis.quantile_scale = s.parse::<QuantileScale>()?;
        }
        if let Some(k) = overrides.k {
            config.analysis.cv_k = k;
        }
        if let Some(n) = overrides.n {
            config.synth.n = n;
        }
        config.analysis.validate()?;
        config.synth.validate()?;
        Ok(Self { config, output: output.to_path_buf() })
    }

    fn path(&self, name: &str) -> PathBuf {
        self.output.join(name)
    }
}

/// SHA-256 of the canonical JSON form of the config. Field order is fixed by
/// the config types, so key order in the TOML file does not matter.
pub fn config_hash(cfg: &RunConfig) -> String {
    let json = serde_json::to_string(cfg).expect("config serializes");
    hex::encode(Sha256::digest(json.as_bytes()))
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Data(format!("{}: {e}", path.display()))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| io_err(path, e))
}

fn write_with(path: &Path, f: impl FnOnce(&mut BufWriter<File>) -> unexq_core::Result<()>) -> Result<()> {
    let mut w = create(path)?;
    f(&mut w).map_err(|e| match e {
        CoreError::Io(io) => io_err(path, io),
        other => other.into(),
    })?;
    w.flush().map_err(|e| io_err(path, e))
}

fn open_artifact(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Data(format!("missing upstream artifact {}: {e}", path.display())))
}

fn read_corpus_file(path: &Path) -> Result<Vec<TweetRecord>> {
    let outcome = parse_records(open_artifact(path)?)?;
    if let Some(e) = outcome.errors.first() {
        return Err(CliError::Data(format!("{}: line {}: {}", path.display(), e.line, e.message)));
    }
    Ok(outcome.records)
}

fn lexicons(settings: &Settings) -> Result<Lexicons> {
    Ok(Lexicons::load(&settings.config.analysis.lexicons)?)
}

fn record_timing(settings: &Settings, stage: &str, started: Instant) -> Result<()> {
    let path = settings.path(TIMINGS_FILE);
    let mut timings: BTreeMap<String, f64> =
        fs::read_to_string(&path).ok().and_then(|t| serde_json::from_str(&t).ok()).unwrap_or_default();
    timings.insert(stage.to_string(), started.elapsed().as_secs_f64());
    let json = serde_json::to_string_pretty(&timings).expect("timings serialize");
    let mut w = create(&path)?;
    writeln!(w, "{json}").map_err(|e| io_err(&path, e))?;
    w.flush().map_err(|e| io_err(&path, e))
}

/// Parses and filters the input corpus.
pub fn ingest(settings: &Settings) -> Result<usize> {
    let started = Instant::now();
    let input = settings
        .config
        .input
        .as_ref()
        .ok_or_else(|| CliError::Usage("no input corpus: set `input` in the config or pass --input".into()))?;
    let file = File::open(input).map_err(|e| CliError::Data(format!("cannot read input {}: {e}", input.display())))?;
    let outcome = parse_records(BufReader::new(file))?;
    write_with(&settings.path(PARSE_ERRORS_FILE), |w| {
        let mut out = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        out.write_record(["line", "message"])?;
        for e in &outcome.errors {
            out.write_record([e.line.to_string(), e.message.clone()])?;
        }
        out.flush()?;
        Ok(())
    })?;
    let lex = lexicons(settings)?;
    let snapshot = apply_filters(&outcome.records, &settings.config.analysis.filter, &lex.topics);
    if snapshot.len() < 10 {
        return Err(CliError::Data(format!(
            "only {} records remain after filtering {} parsed records; at least 10 are needed",
            snapshot.len(),
            outcome.records.len()
        )));
    }
    write_with(&settings.path(CORPUS_FILE), |w| corpus::write_records(w, &snapshot.records))?;
    write_with(&settings.path(EXCLUSIONS_FILE), |w| snapshot.provenance.write_exclusions_csv(w))?;
    let stats = summarize_records(&snapshot.records)?;
    write_with(&settings.path(CORPUS_SUMMARY_FILE), |w| {
        writeln!(w, "input_records={}", outcome.records.len() + outcome.errors.len())?;
        writeln!(w, "parse_errors={}", outcome.errors.len())?;
        writeln!(w, "excluded={}", snapshot.provenance.excluded_total())?;
        w.write_all(stats.to_report().as_bytes())?;
        Ok(())
    })?;
    record_timing(settings, "ingest", started)?;
    Ok(snapshot.len())
}

pub fn featurize(settings: &Settings) -> Result<usize> {
    let started = Instant::now();
    let records = read_corpus_file(&settings.path(CORPUS_FILE))?;
    let lex = lexicons(settings)?;
    let features = textfeat::featurize_all(&records, &lex, &settings.config.analysis.sentiment);
    write_with(&settings.path(FEATURES_FILE), |w| textfeat::write_features_csv(w, &features))?;
    record_timing(settings, "featurize", started)?;
    Ok(features.len())
}

/// Fits the baselines, scores every post and compares the quotient distributions.
pub fn score(settings: &Settings) -> Result<usize> {
    let started = Instant::now();
    let cfg = &settings.config.analysis;
    let records = read_corpus_file(&settings.path(CORPUS_FILE))?;
    let counts: Vec<_> = records.iter().map(|r| r.counts).collect();
    let ids: Vec<&str> = records.iter().map(|r| r.id.as_str()).collect();
    let baselines = unexpect::fit_baselines(&counts, cfg.tau, cfg.quantile_scale, &cfg.solver)?;
    let scores = unexpect::score(&ids, &counts, &baselines, cfg.prediction_floor)?;
    let comparison = unexpect::compare_distributions(&scores)?;
    write_with(&settings.path(BASELINES_FILE), |w| baselines.write_csv(w))?;
    write_with(&settings.path(SCORES_FILE), |w| unexpect::write_scores_csv(w, &scores))?;
    write_with(&settings.path(DISTRIBUTION_TESTS_FILE), |w| comparison.write_tests_csv(w))?;
    write_with(&settings.path(DISTRIBUTION_SUMMARY_FILE), |w| comparison.write_summary_csv(w))?;
    record_timing(settings, "score", started)?;
    Ok(scores.len())
}

fn read_features_and_scores(
    settings: &Settings,
) -> Result<(Vec<textfeat::FeatureVector>, Vec<unexpect::UnexpectednessScores>)> {
    let scores = unexpect::read_scores_csv(open_artifact(&settings.path(SCORES_FILE))?)?;
    let features = textfeat::read_features_csv(open_artifact(&settings.path(FEATURES_FILE))?)?;
    Ok((features, scores))
}

/// Determinant regressions for every target, variant and threshold, plus the τ-robustness table.
pub fn analyze(settings: &Settings) -> Result<Vec<String>> {
    let started = Instant::now();
    let cfg = &settings.config.analysis;
    let (features, scores) = read_features_and_scores(settings)?;
    let results = unexpect::determinant_analysis(&features, &scores, cfg)?;
    let mut written = Vec::new();
    for r in &results {
        let name = r.file_name();
        write_with(&settings.path(&name), |w| r.result.write_csv(w))?;
        written.push(name);
    }
    write_with(&settings.path(MODEL_STATS_FILE), |w| unexpect::write_model_stats_csv(w, &results))?;
    let robustness = unexpect::tau_robustness(&features, &scores, cfg)?;
    write_with(&settings.path(TAU_ROBUSTNESS_FILE), |w| robustness.write_csv(w))?;
    record_timing(settings, "analyze", started)?;
    Ok(written)
}

pub fn cv(settings: &Settings) -> Result<()> {
    let started = Instant::now();
    let cfg = &settings.config.analysis;
    let (features, scores) = read_features_and_scores(settings)?;
    let reports = unexpect::cross_validate(&features, &scores, cfg, cfg.cv_k, cfg.cv_seed)?;
    write_with(&settings.path(CV_FILE), |w| unexpect::write_cv_csv(w, &reports))?;
    record_timing(settings, "cv", started)?;
    Ok(())
}

/// Writes a synthetic corpus and returns its path.
pub fn synth(settings: &Settings) -> Result<PathBuf> {
    let started = Instant::now();
    let records = synth::generate(&settings.config.synth)?;
    let path = settings.path(SYNTH_FILE);
    write_with(&path, |w| corpus::write_records(w, &records))?;
    record_timing(settings, "synth", started)?;
    Ok(path)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OutputEntry {
    pub file: String,
    pub bytes: u64,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub config_hash: String,
    /// Normalized config, including every analysis choice.
    pub config: RunConfig,
    /// SHA-256 of each input file, keyed by file name.
    pub inputs: BTreeMap<String, String>,
    /// Every emitted file except this manifest and the timings file, sorted by name.
    pub outputs: Vec<OutputEntry>,
    /// Stage timings live here, outside the deterministic outputs.
    pub timings_file: String,
}

fn sha256_file(path: &Path) -> Result<(u64, String)> {
    let bytes = fs::read(path).map_err(|e| io_err(path, e))?;
    Ok((bytes.len() as u64, hex::encode(Sha256::digest(&bytes))))
}

fn input_digests(settings: &Settings) -> Result<BTreeMap<String, String>> {
    let cfg = &settings.config;
    let lex = &cfg.analysis.lexicons;
    let mut out = BTreeMap::new();
    let files = [&cfg.input, &lex.valence, &lex.subjectivity, &lex.concreteness, &lex.easy_words, &lex.topics];
    for p in files.into_iter().flatten() {
        let name = p.file_name().map_or_else(|| p.display().to_string(), |n| n.to_string_lossy().into_owned());
        out.insert(name, sha256_file(p)?.1);
    }
    Ok(out)
}

fn read_csv_rows(path: &Path) -> Result<Vec<Vec<String>>> {
    let mut rdr = csv::Reader::from_reader(open_artifact(path)?);
    rdr.records().map(|r| r.map(|r| r.iter().map(str::to_string).collect()).map_err(|e| io_err(path, e))).collect()
}

/// Plain-text summary of a finished run.
fn render_report(settings: &Settings) -> Result<String> {
    use std::fmt::Write as _;
    let cfg = &settings.config.analysis;
    let mut s = String::new();
    let _ = writeln!(s, "{TOOL_NAME} {TOOL_VERSION} run report");
    let _ = writeln!(s, "config hash: {}", config_hash(&settings.config));
    let _ = writeln!(s);
    let _ = writeln!(s, "== Analysis choices ==");
    let _ = writeln!(s, "baseline quantile tau: {}", cfg.tau);
    let _ = writeln!(s, "baseline scale: {}", cfg.quantile_scale.name());
    let solver = serde_json::to_value(cfg.solver.method).ok().and_then(|v| v.as_str().map(str::to_string));
    let _ = writeln!(s, "baseline solver: {}", solver.unwrap_or_default());
    let _ = writeln!(s, "prediction floor: {}", cfg.prediction_floor);
    let _ = writeln!(s, "dependent variable: natural log of the quotient");
    let _ = writeln!(s, "log1p-transformed predictors: {}", cfg.log_transform_columns.join(", "));
    let _ = writeln!(s, "standard errors: {}", unexq_core::linmod::SE_FLAVOR);
    let variants: Vec<&str> = cfg.ols_variants.iter().map(|v| v.name()).collect();
    let _ = writeln!(s, "model variants: {}", variants.join(", "));
    let _ = writeln!(s, "thresholds: std (corpus filter), min10 (some count >= {})", cfg.robustness_min_any);
    let taus: Vec<String> = cfg.all_taus().iter().map(|t| t.to_string()).collect();
    let _ = writeln!(s, "robustness taus: {}", taus.join(", "));
    let _ = writeln!(s, "cross-validation: k = {}, seed = {}", cfg.cv_k, cfg.cv_seed);
    let _ = writeln!(s);

    let _ = writeln!(s, "== Corpus ==");
    let summary = fs::read_to_string(settings.path(CORPUS_SUMMARY_FILE))
        .map_err(|e| io_err(&settings.path(CORPUS_SUMMARY_FILE), e))?;
    s.push_str(&summary);
    let _ = writeln!(s);

    let _ = writeln!(s, "== Quotient distributions (ln E) ==");
    for row in read_csv_rows(&settings.path(DISTRIBUTION_SUMMARY_FILE))? {
        let _ = writeln!(
            s,
            "{:<9} mean {:>9} sd {:>9} mean|.| {:>9} share E>1 {:>7}",
            row[0],
            short(&row[1]),
            short(&row[2]),
            short(&row[3]),
            short(&row[9])
        );
    }
    for row in read_csv_rows(&settings.path(DISTRIBUTION_TESTS_FILE))? {
        let _ = writeln!(s, "welch {:<18} t {:>10} df {:>10} p {}", row[0], short(&row[1]), short(&row[2]), row[3]);
    }
    let _ = writeln!(s);

    let _ = writeln!(s, "== Determinant models ==");
    for row in read_csv_rows(&settings.path(MODEL_STATS_FILE))? {
        let _ = writeln!(
            s,
            "{:<9} {:<12} {:<5} n {:>7} R2 {:>8} F {:>10} loglik {}",
            row[0],
            row[1],
            row[2],
            row[3],
            short(&row[4]),
            short(&row[5]),
            short(&row[6])
        );
        if !row[8].is_empty() {
            let _ = writeln!(s, "    dropped constant columns: {}", row[8].replace(';', ", "));
        }
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Significant linear-model terms (p < 0.01, std threshold):");
    for t in Target::ALL {
        let path = settings.path(&format!("coefficients_{t}_linear_std.csv"));
        if !path.exists() {
            continue;
        }
        for row in read_csv_rows(&path)? {
            let p: f64 = row[6].parse().unwrap_or(f64::NAN);
            if row[0] != "intercept" && p < 0.01 {
                let _ = writeln!(s, "  {:<9} {:<32} {:>10} (se {})", t.name(), row[0], short(&row[1]), short(&row[2]));
            }
        }
    }
    let _ = writeln!(s);

    let _ = writeln!(s, "== Output guide ==");
    for (file, what) in [
        (CORPUS_FILE, "filtered posts, sorted by id"),
        (EXCLUSIONS_FILE, "posts removed per filter rule"),
        (PARSE_ERRORS_FILE, "input lines that could not be parsed"),
        (CORPUS_SUMMARY_FILE, "count distributions, correlations and tallies"),
        (FEATURES_FILE, "per-post complexity, valence, topic and author features"),
        (BASELINES_FILE, "quantile baseline coefficients and solver diagnostics"),
        (SCORES_FILE, "observed and predicted counts and quotients per post"),
        (DISTRIBUTION_TESTS_FILE, "pairwise Welch tests on ln E"),
        (DISTRIBUTION_SUMMARY_FILE, "ln E summary statistics per engagement type"),
        ("coefficients_<type>_<variant>_<threshold>.csv", "determinant regression coefficients"),
        (MODEL_STATS_FILE, "R2, F statistic and log-likelihood per model"),
        (TAU_ROBUSTNESS_FILE, "linear-model coefficients under each baseline tau"),
        (CV_FILE, "k-fold coefficient stability"),
        (TIMINGS_FILE, "stage wall-clock times (varies between runs)"),
    ] {
        let _ = writeln!(s, "{file:<48} {what}");
    }
    let _ = writeln!(s);
    let _ = writeln!(s, "Numbers describe this input corpus only; they are not estimates for any other data set.");
    Ok(s)
}

fn short(v: &str) -> String {
    v.parse::<f64>().map_or_else(|_| v.to_string(), |x| format!("{x:.4}"))
}

/// Writes the report and the manifest listing every output file.
pub fn report(settings: &Settings) -> Result<RunManifest> {
    let started = Instant::now();
    for required in [CORPUS_SUMMARY_FILE, DISTRIBUTION_SUMMARY_FILE, DISTRIBUTION_TESTS_FILE, MODEL_STATS_FILE] {
        if !settings.path(required).exists() {
            return Err(CliError::Data(format!("missing upstream artifact {}", settings.path(required).display())));
        }
    }
    let text = render_report(settings)?;
    let path = settings.path(REPORT_FILE);
    let mut w = create(&path)?;
    w.write_all(text.as_bytes()).map_err(|e| io_err(&path, e))?;
    w.flush().map_err(|e| io_err(&path, e))?;

    let mut names: Vec<String> = fs::read_dir(&settings.output)
        .map_err(|e| io_err(&settings.output, e))?
        .filter_map(|e| e.ok())
        .filter(|e| e.path().is_file())
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .filter(|n| n != MANIFEST_FILE && n != TIMINGS_FILE)
        .collect();
    names.sort();
    let outputs = names
        .into_iter()
        .map(|file| {
            let (bytes, sha256) = sha256_file(&settings.path(&file))?;
            Ok(OutputEntry { file, bytes, sha256 })
        })
        .collect::<Result<Vec<_>>>()?;
    let manifest = RunManifest {
        tool: TOOL_NAME.into(),
        version: TOOL_VERSION.into(),
        config_hash: config_hash(&settings.config),
        config: settings.config.clone(),
        inputs: input_digests(settings)?,
        outputs,
        timings_file: TIMINGS_FILE.into(),
    };
    let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
    let mpath = settings.path(MANIFEST_FILE);
    let mut w = create(&mpath)?;
    writeln!(w, "{json}").map_err(|e| io_err(&mpath, e))?;
    w.flush().map_err(|e| io_err(&mpath, e))?;
    record_timing(settings, "report", started)?;
    Ok(manifest)
}

/// All stages in order.
pub fn run(settings: &Settings) -> Result<RunManifest> {
    ingest(settings)?;
    featurize(settings)?;
    score(settings)?;
    analyze(settings)?;
    cv(settings)?;
    report(settings)
}
