//! End-to-end drivers: load, impute, select, cross-validate and report, plus
//! the imputation scaling benchmark. Artifacts are written atomically under
//! fixed names so each stage can be re-run from its predecessor's output.

use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::adtree::{self, AdTree, AdtConfig};
use crate::error::{Error, Result};
use crate::featsel::{select_features, FeatureMask, GaConfig};
use crate::imputation::impute;
use crate::metrics::{
    auc, basic_rates, linear_fit, operating_point, pooled_scores, roc_points, Confusion,
    LinearFit, OperatingPoint, RocCurve, Score, ScorePool,
};
use crate::synth;
use crate::tabular::{inject_missing, load_dataset, stratified_kfold, Dataset, Schema};

pub const REPORT_FILE: &str = "report.json";
pub const ROC_FILE: &str = "roc.csv";
pub const FEATURES_FILE: &str = "features.txt";
pub const IMPUTED_FILE: &str = "imputed.csv";
pub const IMPUTE_LOG_FILE: &str = "impute.log";
pub const TREE_FILE: &str = "tree.txt";
pub const SCHEMA_FILE: &str = "schema.txt";
pub const BENCH_CSV_FILE: &str = "bench.csv";
pub const BENCH_JSON_FILE: &str = "bench.json";

/// Independent random streams derived from one user seed.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stream {
    Selection,
    Folds,
    Tree,
    Data,
    Missing,
}

impl Stream {
    pub fn derive(self, seed: u64) -> u64 {
        let tag = match self {
            Stream::Selection => 1,
            Stream::Folds => 2,
            Stream::Tree => 3,
            Stream::Data => 4,
            Stream::Missing => 5,
        };
        splitmix64(seed ^ splitmix64(tag))
    }
}

fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum SelectionMode {
    /// Select once on the full table, then cross-validate the chosen mask.
    #[default]
    PaperFaithful,
    /// Select inside every outer training fold.
    Nested,
}

impl SelectionMode {
    pub fn as_str(self) -> &'static str {
        match self {
            SelectionMode::PaperFaithful => "paper-faithful",
            SelectionMode::Nested => "nested",
        }
    }
}

impl fmt::Display for SelectionMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SelectionMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "paper-faithful" => Ok(SelectionMode::PaperFaithful),
            "nested" => Ok(SelectionMode::Nested),
            other => Err(Error::arg(format!(
                "unknown mode `{other}` (expected paper-faithful or nested)"
            ))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    Config,
    Load,
    Impute,
    Select,
    Evaluate,
    Write,
    Bench,
}

impl Stage {
    pub fn as_str(self) -> &'static str {
        match self {
            Stage::Config => "config",
            Stage::Load => "load",
            Stage::Impute => "impute",
            Stage::Select => "select",
            Stage::Evaluate => "evaluate",
            Stage::Write => "write",
            Stage::Bench => "bench",
        }
    }
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed")]
pub struct StageError {
    pub stage: Stage,
    #[source]
    pub source: Error,
}

impl StageError {
    pub fn exit_code(&self) -> i32 {
        match self.stage {
            Stage::Config => 2,
            _ => self.source.exit_code(),
        }
    }
}

trait AtStage<T> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError>;
}

impl<T, E: Into<Error>> AtStage<T> for std::result::Result<T, E> {
    fn at(self, stage: Stage) -> std::result::Result<T, StageError> {
        self.map_err(|e| StageError {
            stage,
            source: e.into(),
        })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct PipelineConfig {
    pub data: PathBuf,
    pub schema: PathBuf,
    pub k: usize,
    /// Search parameters; the seed is derived from [`PipelineConfig::seed`].
    pub ga: GaConfig,
    /// Tree parameters; the seed is derived from [`PipelineConfig::seed`].
    pub adt: AdtConfig,
    pub mode: SelectionMode,
    pub seed: u64,
    pub out: PathBuf,
    pub missing_token: String,
    pub quantiles: usize,
}

impl PipelineConfig {
    pub fn new(data: impl Into<PathBuf>, schema: impl Into<PathBuf>, out: impl Into<PathBuf>, seed: u64) -> Self {
        PipelineConfig {
            data: data.into(),
            schema: schema.into(),
            k: 10,
            ga: GaConfig::default(),
            adt: AdtConfig::default(),
            mode: SelectionMode::default(),
            seed,
            out: out.into(),
            missing_token: crate::tabular::DEFAULT_MISSING_TOKEN.to_string(),
            quantiles: 4,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 2 {
            return Err(Error::arg(format!("k must be at least 2, got {}", self.k)));
        }
        if self.quantiles == 0 {
            return Err(Error::arg("quantile count must be positive"));
        }
        if self.adt.rounds == 0 {
            return Err(Error::arg("the number of boosting rounds must be positive"));
        }
        if !(self.adt.epsilon > 0.0 && self.adt.epsilon.is_finite()) {
            return Err(Error::arg(format!(
                "smoothing epsilon must be positive, got {}",
                self.adt.epsilon
            )));
        }
        if self.missing_token.is_empty() {
            return Err(Error::arg("the missing-value token must not be empty"));
        }
        self.ga.validate()
    }

    fn ga_config(&self) -> GaConfig {
        GaConfig {
            seed: Stream::Selection.derive(self.seed),
            ..self.ga
        }
    }
}

/// Tree parameters with the seed derived from a run seed.
pub fn tree_config(adt: &AdtConfig, seed: u64) -> AdtConfig {
    AdtConfig {
        seed: Stream::Tree.derive(seed),
        ..*adt
    }
}

/// Pooled cross-validated performance of one classifier configuration.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Evaluation {
    /// Accuracy, sensitivity and specificity of the margin-sign predictions.
    pub accuracy: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub confusion: Confusion,
    pub auc: f64,
    pub operating_point: OperatingPoint,
    pub fold_accuracies: Vec<f64>,
    #[serde(skip)]
    pub roc: RocCurve,
    #[serde(skip)]
    pub pool: ScorePool,
}

impl Evaluation {
    pub fn from_pool(pool: ScorePool, quantiles: usize) -> Result<Self> {
        let roc = roc_points(&pool, quantiles)?;
        let confusion = pool.confusion()?;
        let rates = basic_rates(&confusion)?;
        Ok(Evaluation {
            accuracy: rates.accuracy,
            sensitivity: rates.sensitivity,
            specificity: rates.specificity,
            confusion,
            auc: auc(&roc),
            operating_point: operating_point(&roc)?,
            fold_accuracies: pool.fold_accuracies(),
            roc,
            pool,
        })
    }
}

/// Cross-validates a tree on the masked columns of a complete table. Folds
/// and tree tie-breaking are derived from `seed` exactly as the pipeline
/// derives them, so an `evaluate` run on pipeline artifacts reproduces the
/// pipeline's figures.
pub fn evaluate_cv(
    data: &Dataset,
    mask: &FeatureMask,
    k: usize,
    adt: &AdtConfig,
    seed: u64,
    quantiles: usize,
) -> Result<Evaluation> {
    if data.missing_count() > 0 {
        return Err(Error::data("evaluation needs a complete table; impute it first"));
    }
    let folds = stratified_kfold(data, k, Stream::Folds.derive(seed))?;
    let projected = data.project(mask.bits())?;
    let pool = pooled_scores(&projected, &folds, &tree_config(adt, seed))?;
    Evaluation::from_pool(pool, quantiles)
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SelectionSummary {
    pub features: Vec<String>,
    pub fitness: f64,
    pub history: Vec<f64>,
    pub evaluations: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub mode: SelectionMode,
    pub seed: u64,
    pub k: usize,
    pub quantiles: usize,
    pub rounds: usize,
    pub epsilon: f64,
    pub population: usize,
    pub generations: usize,
    pub crossover: f64,
    pub mutation: f64,
    pub elitism: usize,
    pub records: usize,
    pub positives: usize,
    pub negatives: usize,
    pub feature_columns: usize,
    pub imputed_cells: usize,
    /// Selection on the full table; this mask also builds the final tree.
    pub selection: SelectionSummary,
    /// Per outer fold, in nested mode.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub fold_selections: Option<Vec<SelectionSummary>>,
    pub evaluation: Evaluation,
}

impl EvalReport {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }
}

/// Everything a pipeline run produces, before it is written out.
#[derive(Clone, Debug)]
pub struct PipelineRun {
    pub report: EvalReport,
    pub imputed: Dataset,
    pub impute_log: String,
    pub mask: FeatureMask,
    pub tree: AdTree,
}

fn summarize(data: &Dataset, sel: &crate::featsel::Selection) -> SelectionSummary {
    SelectionSummary {
        features: sel.mask.names(data),
        fitness: sel.fitness,
        history: sel.history.clone(),
        evaluations: sel.evaluations,
    }
}

/// Runs impute, select and evaluate on an in-memory table.
pub fn run_pipeline(data: &Dataset, cfg: &PipelineConfig) -> std::result::Result<PipelineRun, StageError> {
    cfg.validate().at(Stage::Config)?;
    let (imputed, log) = impute(data).at(Stage::Impute)?;
    let ga = cfg.ga_config();
    let adt = tree_config(&cfg.adt, cfg.seed);

    let selection = select_features(&imputed, &ga, cfg.k, &adt).at(Stage::Select)?;
    let (evaluation, fold_selections) = match cfg.mode {
        SelectionMode::PaperFaithful => (
            evaluate_cv(&imputed, &selection.mask, cfg.k, &cfg.adt, cfg.seed, cfg.quantiles)
                .at(Stage::Evaluate)?,
            None,
        ),
        SelectionMode::Nested => {
            let (eval, per_fold) = nested_cv(&imputed, cfg)?;
            (eval, Some(per_fold))
        }
    };
    let projected = imputed.project(selection.mask.bits()).at(Stage::Evaluate)?;
    let tree = adtree::train(&projected, &adt).at(Stage::Evaluate)?;
    let (positives, negatives) = imputed.class_counts();
    let report = EvalReport {
        mode: cfg.mode,
        seed: cfg.seed,
        k: cfg.k,
        quantiles: cfg.quantiles,
        rounds: cfg.adt.rounds,
        epsilon: cfg.adt.epsilon,
        population: cfg.ga.population,
        generations: cfg.ga.generations,
        crossover: cfg.ga.crossover,
        mutation: cfg.ga.mutation,
        elitism: cfg.ga.elitism,
        records: imputed.n_rows(),
        positives,
        negatives,
        feature_columns: imputed.n_features(),
        imputed_cells: log.len(),
        selection: summarize(&imputed, &selection),
        fold_selections,
        evaluation,
    };
    Ok(PipelineRun {
        report,
        impute_log: log.to_text(data),
        imputed,
        mask: selection.mask,
        tree,
    })
}

/// Outer cross validation with a fresh feature search on every training
/// fold. Inner searches use the same number of folds as the outer loop.
fn nested_cv(
    data: &Dataset,
    cfg: &PipelineConfig,
) -> std::result::Result<(Evaluation, Vec<SelectionSummary>), StageError> {
    let folds = stratified_kfold(data, cfg.k, Stream::Folds.derive(cfg.seed)).at(Stage::Evaluate)?;
    let adt = tree_config(&cfg.adt, cfg.seed);
    let mut pool = ScorePool::default();
    let mut summaries = Vec::with_capacity(cfg.k);
    for fold in 0..cfg.k {
        let train = data.subset(&folds.train_indices(fold));
        let ga = GaConfig {
            seed: Stream::Selection.derive(cfg.seed ^ splitmix64(fold as u64 + 1)),
            ..cfg.ga
        };
        let sel = select_features(&train, &ga, cfg.k, &adt).at(Stage::Select)?;
        let train = train.project(sel.mask.bits()).at(Stage::Evaluate)?;
        let full = data.project(sel.mask.bits()).at(Stage::Evaluate)?;
        let tree = adtree::train(&train, &adt).at(Stage::Evaluate)?;
        for row in folds.test_indices(fold) {
            let margin = tree.margin(&full, row).at(Stage::Evaluate)?;
            pool.scores.push(Score {
                row,
                fold,
                probability: adtree::probability(margin),
                predicted: tree.classify_margin(margin),
                actual: data.is_positive(row),
            });
        }
        summaries.push(summarize(data, &sel));
    }
    pool.scores.sort_by_key(|s| s.row);
    let eval = Evaluation::from_pool(pool, cfg.quantiles).at(Stage::Evaluate)?;
    Ok((eval, summaries))
}

/// Writes `contents` to `dir/name` through a temporary file and a rename.
pub fn write_atomic(dir: &Path, name: &str, contents: &str) -> Result<()> {
    let tmp = dir.join(format!(".{name}.tmp"));
    fs::write(&tmp, contents)?;
    fs::rename(&tmp, dir.join(name))?;
    Ok(())
}

/// Reads a schema file and a CSV file.
pub fn load_inputs(data: &Path, schema: &Path, missing: &str) -> std::result::Result<Dataset, StageError> {
    let schema_text = fs::read_to_string(schema)
        .map_err(|e| Error::arg(format!("cannot read schema {}: {e}", schema.display())))
        .at(Stage::Config)?;
    let schema = Schema::parse(&schema_text).at(Stage::Config)?;
    let csv = fs::read_to_string(data)
        .map_err(|e| Error::arg(format!("cannot read data {}: {e}", data.display())))
        .at(Stage::Config)?;
    load_dataset(&csv, &schema, missing).at(Stage::Load)
}

/// Full pipeline from files to the artifacts in `cfg.out`.
pub fn cmd_pipeline(cfg: &PipelineConfig) -> std::result::Result<EvalReport, StageError> {
    cfg.validate().at(Stage::Config)?;
    let data = load_inputs(&cfg.data, &cfg.schema, &cfg.missing_token)?;
    let run = run_pipeline(&data, cfg)?;
    write_pipeline(&run, &cfg.out, &cfg.missing_token).at(Stage::Write)?;
    Ok(run.report)
}

pub fn write_pipeline(run: &PipelineRun, out: &Path, missing: &str) -> Result<()> {
    fs::create_dir_all(out)?;
    write_atomic(out, IMPUTED_FILE, &run.imputed.to_csv(missing)?)?;
    write_atomic(out, SCHEMA_FILE, &run.imputed.schema().to_text())?;
    write_atomic(out, IMPUTE_LOG_FILE, &run.impute_log)?;
    write_atomic(out, FEATURES_FILE, &run.mask.to_text(&run.imputed))?;
    write_atomic(out, TREE_FILE, &run.tree.to_text())?;
    write_atomic(out, ROC_FILE, &run.report.evaluation.roc.to_csv())?;
    write_atomic(out, REPORT_FILE, &run.report.to_json())
}

#[derive(Clone, Debug, PartialEq)]
pub struct BenchConfig {
    pub sizes: Vec<usize>,
    /// Feature columns per synthetic table.
    pub columns: usize,
    pub missing_rate: f64,
    pub seed: u64,
    /// Timed repetitions per size; the fastest is kept.
    pub repetitions: usize,
}

impl BenchConfig {
    pub fn new(sizes: Vec<usize>, seed: u64) -> Self {
        BenchConfig {
            sizes,
            columns: 8,
            missing_rate: 0.1,
            seed,
            repetitions: 5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sizes.len() < 4 {
            return Err(Error::arg(format!(
                "the benchmark needs at least 4 sizes, got {}",
                self.sizes.len()
            )));
        }
        if self.sizes.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::arg("benchmark sizes must be strictly ascending"));
        }
        if self.sizes[0] < 4 {
            return Err(Error::arg("benchmark sizes must be at least 4 records"));
        }
        if self.columns == 0 {
            return Err(Error::arg("the benchmark needs at least one feature column"));
        }
        if !(0.0..=1.0).contains(&self.missing_rate) {
            return Err(Error::arg(format!(
                "missing rate {} outside [0, 1]",
                self.missing_rate
            )));
        }
        if self.repetitions == 0 {
            return Err(Error::arg("repetitions must be positive"));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchRow {
    pub size: usize,
    pub missing_cells: usize,
    pub seconds: f64,
    /// SHA-256 of the imputed table as CSV.
    pub digest: String,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Machine {
    pub os: String,
    pub arch: String,
    pub cpus: usize,
    pub version: String,
}

impl Machine {
    pub fn current() -> Self {
        Machine {
            os: std::env::consts::OS.to_string(),
            arch: std::env::consts::ARCH.to_string(),
            cpus: std::thread::available_parallelism().map_or(1, |n| n.get()),
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BenchReport {
    pub seed: u64,
    pub columns: usize,
    pub missing_rate: f64,
    pub repetitions: usize,
    pub rows: Vec<BenchRow>,
    /// Seconds against records.
    pub fit: LinearFit,
    pub machine: Machine,
}

impl BenchReport {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("size,missing_cells,seconds,digest\n");
        for r in &self.rows {
            out.push_str(&format!("{},{},{:?},{}\n", r.size, r.missing_cells, r.seconds, r.digest));
        }
        out
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("bench report serializes");
        s.push('\n');
        s
    }
}

fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Times the imputation stage on seeded synthetic tables of each size and
/// fits a line through (size, seconds).
pub fn run_bench(cfg: &BenchConfig) -> Result<BenchReport> {
    cfg.validate()?;
    let mut rows = Vec::with_capacity(cfg.sizes.len());
    for &size in &cfg.sizes {
        let complete = synth::informative_dataset(size, cfg.columns, Stream::Data.derive(cfg.seed));
        let damaged = inject_missing(&complete, cfg.missing_rate, Stream::Missing.derive(cfg.seed))?;
        let mut fastest = f64::INFINITY;
        let mut imputed = None;
        for _ in 0..cfg.repetitions {
            let start = Instant::now();
            let (filled, _) = impute(&damaged)?;
            fastest = fastest.min(start.elapsed().as_secs_f64());
            imputed = Some(filled);
        }
        let imputed = imputed.expect("at least one repetition");
        rows.push(BenchRow {
            size,
            missing_cells: damaged.missing_count(),
            seconds: fastest,
            digest: sha256_hex(imputed.to_csv("?")?.as_bytes()),
        });
    }
    let x: Vec<f64> = rows.iter().map(|r| r.size as f64).collect();
    let y: Vec<f64> = rows.iter().map(|r| r.seconds).collect();
    Ok(BenchReport {
        seed: cfg.seed,
        columns: cfg.columns,
        missing_rate: cfg.missing_rate,
        repetitions: cfg.repetitions,
        rows,
        fit: linear_fit(&x, &y)?,
        machine: Machine::current(),
    })
}

/// Runs the benchmark and writes `bench.csv` and `bench.json` to `out`.
pub fn cmd_bench(cfg: &BenchConfig, out: &Path) -> std::result::Result<BenchReport, StageError> {
    cfg.validate().at(Stage::Config)?;
    let report = run_bench(cfg).at(Stage::Bench)?;
    fs::create_dir_all(out).at(Stage::Write)?;
    write_atomic(out, BENCH_CSV_FILE, &report.to_csv()).at(Stage::Write)?;
    write_atomic(out, BENCH_JSON_FILE, &report.to_json()).at(Stage::Write)?;
    Ok(report)
}
