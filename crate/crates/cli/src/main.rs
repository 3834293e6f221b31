use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use serde_json::json;

use nm_core::adtree::{self, AdtConfig};
use nm_core::featsel::{select_features, FeatureMask, GaConfig};
use nm_core::imputation::{compare_imputers, impute, CompareConfig};
use nm_core::pipeline::{
    cmd_bench, cmd_pipeline, evaluate_cv, load_inputs, tree_config, write_atomic, BenchConfig,
    PipelineConfig, SelectionMode, StageError, Stream, FEATURES_FILE, IMPUTED_FILE,
    IMPUTE_LOG_FILE, REPORT_FILE, ROC_FILE, SCHEMA_FILE, TREE_FILE,
};
use nm_core::tabular::{inject_missing, Dataset, DEFAULT_MISSING_TOKEN};

#[derive(Parser)]
#[command(name = "nm", version, about = "Proximity imputation, ADT classification and ROC evaluation for binary diagnosis tables")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Impute, select features, cross-validate and write every artifact
    Pipeline(PipelineArgs),
    /// Fill missing cells with the class-conditional proximity imputer
    Impute(ImputeArgs),
    /// Blank a fraction of the feature cells of a complete table
    Inject(InjectArgs),
    /// Genetic wrapper search for a feature subset
    Select(SelectArgs),
    /// Train an alternating decision tree on the full table
    Train(TrainArgs),
    /// Cross-validated scores, ROC curve and operating point
    Evaluate(EvaluateArgs),
    /// Compare imputers by downstream accuracy with paired rank tests
    CompareImputers(CompareArgs),
    /// Time the imputation stage over growing synthetic tables
    Bench(BenchArgs),
}

#[derive(Args)]
struct InputArgs {
    /// CSV file with a header row
    #[arg(long)]
    data: PathBuf,
    /// Schema file, one `name:kind` line per column
    #[arg(long)]
    schema: PathBuf,
    #[arg(long, default_value = DEFAULT_MISSING_TOKEN)]
    missing_token: String,
}

impl InputArgs {
    fn load(&self) -> Result<Dataset> {
        Ok(load_inputs(&self.data, &self.schema, &self.missing_token)?)
    }
}

#[derive(Args)]
struct TreeArgs {
    /// Boosting rounds
    #[arg(long, default_value_t = 10)]
    adt_iters: usize,
    /// Smoothing constant for prediction values
    #[arg(long, default_value_t = 1.0)]
    epsilon: f64,
}

impl TreeArgs {
    fn config(&self) -> AdtConfig {
        AdtConfig {
            rounds: self.adt_iters,
            epsilon: self.epsilon,
            ..AdtConfig::default()
        }
    }
}

#[derive(Args)]
struct GaArgs {
    #[arg(long, default_value_t = 20)]
    ga_pop: usize,
    #[arg(long, default_value_t = 20)]
    ga_gens: usize,
}

impl GaArgs {
    fn config(&self) -> GaConfig {
        GaConfig {
            population: self.ga_pop,
            generations: self.ga_gens,
            ..GaConfig::default()
        }
    }
}

#[derive(Args)]
struct PipelineArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tree: TreeArgs,
    #[command(flatten)]
    ga: GaArgs,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long)]
    seed: u64,
    /// paper-faithful or nested
    #[arg(long, default_value = "paper-faithful")]
    mode: SelectionMode,
    #[arg(long, default_value_t = 4)]
    quantiles: usize,
    /// Output directory
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ImputeArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct InjectArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Fraction of feature cells to blank
    #[arg(long)]
    rate: f64,
    #[arg(long)]
    seed: u64,
    /// Output CSV file
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tree: TreeArgs,
    #[command(flatten)]
    ga: GaArgs,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tree: TreeArgs,
    /// Feature list; all features when omitted
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tree: TreeArgs,
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 4)]
    quantiles: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// Complete table to damage
    #[command(flatten)]
    input: InputArgs,
    #[command(flatten)]
    tree: TreeArgs,
    #[arg(long, value_delimiter = ',', required = true)]
    rates: Vec<f64>,
    /// One run per seed and rate; each seed drives injection and folds
    #[arg(long, value_delimiter = ',', required = true)]
    seeds: Vec<u64>,
    #[arg(long, default_value_t = 10)]
    k: usize,
    #[arg(long, default_value_t = 5)]
    knn_k: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "1000,2500,5000,7500,10000")]
    sizes: Vec<usize>,
    /// Feature columns per synthetic table
    #[arg(long, default_value_t = 8)]
    columns: usize,
    #[arg(long, default_value_t = 0.1)]
    missing_rate: f64,
    /// Timed repetitions per size; the fastest is kept
    #[arg(long, default_value_t = 5)]
    reps: usize,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

fn read_mask(data: &Dataset, path: Option<&Path>) -> Result<FeatureMask> {
    match path {
        None => Ok(FeatureMask::all(data.n_features())),
        Some(p) => {
            let text = std::fs::read_to_string(p)
                .map_err(|e| nm_core::Error::InvalidArgument(format!("cannot read {}: {e}", p.display())))?;
            Ok(FeatureMask::parse(data, &text)?)
        }
    }
}

fn ensure_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)
        .map_err(nm_core::Error::from)
        .with_context(|| format!("cannot create {}", dir.display()))
}

fn pipeline(args: PipelineArgs) -> Result<()> {
    let cfg = PipelineConfig {
        k: args.k,
        ga: args.ga.config(),
        adt: args.tree.config(),
        mode: args.mode,
        missing_token: args.input.missing_token.clone(),
        quantiles: args.quantiles,
        ..PipelineConfig::new(&args.input.data, &args.input.schema, &args.out, args.seed)
    };
    let report = cmd_pipeline(&cfg)?;
    let e = &report.evaluation;
    println!("features: {}", report.selection.features.join(", "));
    println!("accuracy: {:.4}", e.accuracy);
    println!("sensitivity: {:.4}", e.sensitivity);
    println!("specificity: {:.4}", e.specificity);
    println!("auc: {:.4}", e.auc);
    println!(
        "operating point: threshold {:.4}, SE {:.4}, SP {:.4}",
        e.operating_point.threshold, e.operating_point.sensitivity, e.operating_point.specificity
    );
    println!("artifacts: {}", args.out.display());
    Ok(())
}

fn impute_cmd(args: ImputeArgs) -> Result<()> {
    let data = args.input.load()?;
    let (filled, log) = impute(&data)?;
    ensure_dir(&args.out)?;
    let missing = &args.input.missing_token;
    write_atomic(&args.out, IMPUTED_FILE, &filled.to_csv(missing)?)?;
    write_atomic(&args.out, SCHEMA_FILE, &filled.schema().to_text())?;
    write_atomic(&args.out, IMPUTE_LOG_FILE, &log.to_text(&data))?;
    println!("imputed {} cells in {} records", log.len(), data.n_rows());
    Ok(())
}

fn inject(args: InjectArgs) -> Result<()> {
    let data = args.input.load()?;
    let damaged = inject_missing(&data, args.rate, args.seed)?;
    let csv = damaged.to_csv(&args.input.missing_token)?;
    let dir = match args.out.parent() {
        Some(p) if !p.as_os_str().is_empty() => p.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let name = args
        .out
        .file_name()
        .and_then(|n| n.to_str())
        .ok_or_else(|| nm_core::Error::InvalidArgument(format!("bad output path {}", args.out.display())))?;
    ensure_dir(&dir)?;
    write_atomic(&dir, name, &csv)?;
    println!("blanked {} cells", damaged.missing_count());
    Ok(())
}

fn select(args: SelectArgs) -> Result<()> {
    let data = args.input.load()?;
    let ga = GaConfig {
        seed: Stream::Selection.derive(args.seed),
        ..args.ga.config()
    };
    let adt = tree_config(&args.tree.config(), args.seed);
    let sel = select_features(&data, &ga, args.k, &adt)?;
    println!("features: {}", sel.mask.names(&data).join(", "));
    println!("fitness: {:.6}", sel.fitness);
    println!("evaluations: {}", sel.evaluations);
    for (g, best) in sel.history.iter().enumerate() {
        println!("generation {g}: {best:.6}");
    }
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_atomic(out, FEATURES_FILE, &sel.mask.to_text(&data))?;
    }
    Ok(())
}

fn train(args: TrainArgs) -> Result<()> {
    let data = args.input.load()?;
    let mask = read_mask(&data, args.features.as_deref())?;
    let projected = data.project(mask.bits())?;
    let tree = adtree::train(&projected, &tree_config(&args.tree.config(), args.seed))?;
    print!("{}", tree.rules());
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_atomic(out, TREE_FILE, &tree.to_text())?;
    }
    Ok(())
}

fn evaluate(args: EvaluateArgs) -> Result<()> {
    let data = args.input.load()?;
    let mask = read_mask(&data, args.features.as_deref())?;
    let adt = args.tree.config();
    let e = evaluate_cv(&data, &mask, args.k, &adt, args.seed, args.quantiles)?;
    println!("accuracy: {:.4}", e.accuracy);
    println!("sensitivity: {:.4}", e.sensitivity);
    println!("specificity: {:.4}", e.specificity);
    println!("auc: {:.4}", e.auc);
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        let report = json!({
            "seed": args.seed,
            "k": args.k,
            "quantiles": args.quantiles,
            "rounds": adt.rounds,
            "epsilon": adt.epsilon,
            "features": mask.names(&data),
            "evaluation": e,
        });
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        write_atomic(out, REPORT_FILE, &text)?;
        write_atomic(out, ROC_FILE, &e.roc.to_csv())?;
    }
    Ok(())
}

fn compare(args: CompareArgs) -> Result<()> {
    let data = args.input.load()?;
    let cfg = CompareConfig {
        folds: args.k,
        adt: args.tree.config(),
        knn_k: args.knn_k,
    };
    let report = compare_imputers(&data, &args.rates, &args.seeds, &cfg)?;
    let table = report.to_table();
    print!("{table}");
    if let Some(out) = &args.out {
        ensure_dir(out)?;
        write_atomic(out, "comparison.csv", &table)?;
        let mut text = serde_json::to_string_pretty(&report)?;
        text.push('\n');
        write_atomic(out, "comparison.json", &text)?;
    }
    Ok(())
}

fn bench(args: BenchArgs) -> Result<()> {
    let cfg = BenchConfig {
        sizes: args.sizes,
        columns: args.columns,
        missing_rate: args.missing_rate,
        seed: args.seed,
        repetitions: args.reps,
    };
    let report = cmd_bench(&cfg, &args.out)?;
    print!("{}", report.to_csv());
    println!(
        "fit: seconds = {:.6e} * records + {:.6e}, r^2 = {:.4}",
        report.fit.slope, report.fit.intercept, report.fit.r_squared
    );
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if let Some(e) = err.downcast_ref::<StageError>() {
        return e.exit_code() as u8;
    }
    if let Some(e) = err.downcast_ref::<nm_core::Error>() {
        return e.exit_code() as u8;
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Pipeline(a) => pipeline(a),
        Command::Impute(a) => impute_cmd(a),
        Command::Inject(a) => inject(a),
        Command::Select(a) => select(a),
        Command::Train(a) => train(a),
        Command::Evaluate(a) => evaluate(a),
        Command::CompareImputers(a) => compare(a),
        Command::Bench(a) => bench(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
