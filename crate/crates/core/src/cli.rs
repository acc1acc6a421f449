//! Command-line driver.
//!
//! Every command that writes outputs also writes a `run.json` record beside
//! them. Exit codes: 0 success, 1 usage error, 2 invalid input or
//! configuration, 3 numerical failure.

use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use serde::Serialize;
use serde_json::json;

use crate::baseline::{rrr_fit_all_with_rule, RadiusRule, RrrConfig, DEFAULT_RADIUS_FOLDS, DEFAULT_RADIUS_MULTIPLIERS};
use crate::dataio::{
    load_dataset_bundle, load_estimates, load_model, save_json, save_model, save_rrr_model, save_simulated,
    write_diagnostics_csv, write_text, RrrModel,
};
use crate::dictlearn::{csc_fit, csc_fit_on_subset, CscConfig, CscModel, ReductionMode};
use crate::encoder::{encode_all, EncoderOptions};
use crate::error::{Error, Result};
use crate::evalkit::{
    default_lambda_grid, diagnostics_report, evaluate, hold_two_out_cv, paired_sign_test, select_lambda,
    HoldoutReport, Metric,
};
use crate::matcore::Matrix;
use crate::simulate::{gen_dataset, Scenario, SimParams};

#[derive(Debug, Parser)]
#[command(name = "csc", version, about = "Conditional sparse coding for grouped multivariate regression")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic dataset with ground truth.
    Simulate(SimulateArgs),
    /// Fit a model.
    #[command(subcommand)]
    Fit(FitCommand),
    /// Encode a dataset against the dictionary of a fitted model.
    Encode(EncodeArgs),
    /// Estimation and prediction error of a fitted model.
    Evaluate(EvaluateArgs),
    /// Choose lambda by K-fold cross-validation.
    CvLambda(CvLambdaArgs),
    /// Hold-two-out pairwise classification.
    Holdout2(Holdout2Args),
    /// Print the per-alternation diagnostics of a fitted model.
    Diagnose(DiagnoseArgs),
}

#[derive(Debug, Subcommand)]
enum FitCommand {
    /// Shared dictionary with sparse per-group codes.
    Csc(FitCscArgs),
    /// Independent nuclear-norm constrained regression per group.
    Rrr(FitRrrArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ScenarioArg {
    Structured,
    Unstructured,
    StructuredSameDesign,
}

impl From<ScenarioArg> for Scenario {
    fn from(s: ScenarioArg) -> Self {
        match s {
            ScenarioArg::Structured => Scenario::Structured,
            ScenarioArg::Unstructured => Scenario::Unstructured,
            ScenarioArg::StructuredSameDesign => Scenario::StructuredSameDesign,
        }
    }
}

#[derive(Debug, Args)]
struct SimulateArgs {
    #[arg(long, value_enum)]
    scenario: ScenarioArg,
    #[arg(long, default_value_t = 20)]
    p: usize,
    #[arg(long, default_value_t = 20)]
    q: usize,
    /// Number of groups.
    #[arg(long, default_value_t = 50)]
    g: usize,
    /// Training samples per group.
    #[arg(long, default_value_t = 40)]
    n: usize,
    #[arg(long, default_value_t = 1000)]
    n_test: usize,
    #[arg(long, default_value_t = 30)]
    dict_size: usize,
    #[arg(long, default_value_t = 3)]
    sparsity: usize,
    #[arg(long, default_value_t = 3)]
    rank: usize,
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReductionArg {
    Ordered,
    Parallel,
}

#[derive(Debug, Args, Clone)]
struct CscArgs {
    #[arg(long, default_value_t = 20)]
    k: usize,
    #[arg(long, default_value_t = 1.0)]
    tau: f64,
    #[arg(long, default_value_t = 200)]
    max_alternations: usize,
    #[arg(long, default_value_t = 1e-6)]
    rtol: f64,
    #[arg(long, default_value_t = 50)]
    max_inner: usize,
    #[arg(long, default_value_t = 1e-8)]
    encoder_tol: f64,
    #[arg(long, default_value_t = 1000)]
    encoder_max_sweeps: usize,
    #[arg(long)]
    no_warm_start: bool,
    #[arg(long, value_enum, default_value = "ordered")]
    reduction: ReductionArg,
}

impl CscArgs {
    fn config(&self, lambda: f64, seed: u64, threads: usize) -> CscConfig {
        CscConfig {
            k: self.k,
            lambda,
            tau: self.tau,
            max_alternations: self.max_alternations,
            objective_rtol: self.rtol,
            encoder: EncoderOptions {
                tol: self.encoder_tol,
                max_sweeps: self.encoder_max_sweeps,
            },
            max_inner_iterations: self.max_inner,
            warm_start: !self.no_warm_start,
            rng_seed: seed,
            threads,
            reduction: match self.reduction {
                ReductionArg::Ordered => ReductionMode::Ordered,
                ReductionArg::Parallel => ReductionMode::Parallel,
            },
        }
    }
}

#[derive(Debug, Args)]
struct FitCscArgs {
    /// Dataset manifest.
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    csc: CscArgs,
    #[arg(long, default_value_t = 0.05)]
    lambda: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    /// Learn the dictionary on this many randomly chosen groups, then encode
    /// every group.
    #[arg(long)]
    groups_subset: Option<usize>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum RadiusRuleArg {
    /// Nuclear norm of the least-squares fit (needs n >= p).
    Ols,
    /// Cross-validated multiples of the least-squares nuclear norm.
    Cv,
    /// `ols` when the design has full row rank, `cv` otherwise.
    Auto,
}

#[derive(Debug, Args, Clone)]
struct RrrArgs {
    /// Fixed nuclear-norm radius; overrides --radius-rule.
    #[arg(long)]
    radius: Option<f64>,
    #[arg(long, value_enum, default_value = "auto")]
    radius_rule: RadiusRuleArg,
    #[arg(long, default_value_t = 2000)]
    rrr_max_iterations: usize,
    #[arg(long, default_value_t = 1e-8)]
    rrr_tol: f64,
}

impl RrrArgs {
    fn rule(&self) -> RadiusRule {
        match (self.radius, self.radius_rule) {
            (Some(r), _) => RadiusRule::Fixed(r),
            (None, RadiusRuleArg::Ols) => RadiusRule::OlsNuclear,
            (None, RadiusRuleArg::Cv) => RadiusRule::CrossValidated {
                multipliers: DEFAULT_RADIUS_MULTIPLIERS.to_vec(),
                n_folds: DEFAULT_RADIUS_FOLDS,
            },
            (None, RadiusRuleArg::Auto) => RadiusRule::Auto,
        }
    }

    fn config(&self, seed: u64) -> RrrConfig {
        RrrConfig {
            radius: self.radius.unwrap_or(1.0),
            max_iterations: self.rrr_max_iterations,
            rtol: self.rrr_tol,
            rng_seed: seed,
        }
    }
}

#[derive(Debug, Args)]
struct FitRrrArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    rrr: RrrArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct EncodeArgs {
    /// Directory of a fitted CSC model.
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Defaults to the lambda the model was fitted with.
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
}

#[derive(Debug, Args)]
struct EvaluateArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Also report estimation error against the manifest's ground truth.
    #[arg(long)]
    truth: bool,
    /// Split used for prediction error; defaults to test when present.
    #[arg(long, value_enum)]
    split: Option<SplitArg>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct CvLambdaArgs {
    #[arg(long)]
    data: PathBuf,
    #[command(flatten)]
    csc: CscArgs,
    /// Comma-separated lambda values; defaults to c * sqrt(log K / n).
    #[arg(long, value_delimiter = ',')]
    grid: Option<Vec<f64>>,
    #[arg(long, default_value_t = 5)]
    folds: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Csc,
    Rrr,
    /// Run both on the same trials and compare them with a sign test.
    Both,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum MetricArg {
    Euclidean,
    Cosine,
}

#[derive(Debug, Args)]
struct Holdout2Args {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, value_enum, default_value = "csc")]
    method: MethodArg,
    #[command(flatten)]
    csc: CscArgs,
    #[arg(long, default_value_t = 0.05)]
    lambda: f64,
    #[command(flatten)]
    rrr: RrrArgs,
    #[arg(long, default_value_t = 60)]
    trials: usize,
    #[arg(long, value_enum, default_value = "euclidean")]
    metric: MetricArg,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    threads: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug, Serialize)]
struct RunRecord {
    command_line: Vec<String>,
    config: serde_json::Value,
    seed: Option<u64>,
    wall_time_seconds: f64,
    outputs: Vec<String>,
    version: String,
}

struct Run {
    argv: Vec<String>,
    start: Instant,
}

impl Run {
    fn finish(&self, dir: &Path, config: serde_json::Value, seed: Option<u64>, outputs: Vec<PathBuf>) -> Result<()> {
        let record = RunRecord {
            command_line: self.argv.clone(),
            config,
            seed,
            wall_time_seconds: self.start.elapsed().as_secs_f64(),
            outputs: outputs.iter().map(|p| p.display().to_string()).collect(),
            version: env!("CARGO_PKG_VERSION").to_string(),
        };
        save_json(&record, dir.join("run.json"))
    }
}

fn to_json<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).unwrap_or(serde_json::Value::Null)
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })
}

fn exit_code(err: &Error) -> i32 {
    if err.is_numerical() {
        3
    } else {
        2
    }
}

/// Writes to stdout, ignoring a closed pipe (for example `| head`).
fn emit(text: &str) {
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

fn init_logging() {
    let env = env_logger::Env::new().filter_or("CSC_LOG", "warn");
    let _ = env_logger::Builder::from_env(env).format_timestamp(None).try_init();
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_cli<I, S>(argv: I) -> i32
where
    I: IntoIterator<Item = S>,
    S: Into<String>,
{
    init_logging();
    let argv: Vec<String> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let run = Run {
        argv,
        start: Instant::now(),
    };
    match dispatch(cli.command, &run) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

fn dispatch(command: Command, run: &Run) -> Result<()> {
    match command {
        Command::Simulate(a) => simulate(a, run),
        Command::Fit(FitCommand::Csc(a)) => fit_csc(a, run),
        Command::Fit(FitCommand::Rrr(a)) => fit_rrr(a, run),
        Command::Encode(a) => encode(a, run),
        Command::Evaluate(a) => evaluate_cmd(a, run),
        Command::CvLambda(a) => cv_lambda(a, run),
        Command::Holdout2(a) => holdout2(a, run),
        Command::Diagnose(a) => diagnose(a, run),
    }
}

fn simulate(a: SimulateArgs, run: &Run) -> Result<()> {
    let params = SimParams {
        scenario: a.scenario.into(),
        p: a.p,
        q: a.q,
        n_train: a.n,
        n_test: a.n_test,
        groups: a.g,
        true_dictionary_size: a.dict_size,
        true_sparsity: a.sparsity,
        true_rank: a.rank,
        noise_sigma: a.sigma,
        rng_seed: a.seed,
    };
    let sim = gen_dataset(&params)?;
    let manifest = save_simulated(&sim, &params, &a.out)?;
    emit(&format!("{}\n", manifest.display()));
    run.finish(&a.out, to_json(&params), Some(a.seed), vec![manifest])
}

/// `count` distinct group indices, sorted, chosen by `seed`.
fn choose_groups(total: usize, count: usize, seed: u64) -> Result<Vec<usize>> {
    if count == 0 || count > total {
        return Err(Error::Config(format!("--groups-subset must lie in 1..={total}, got {count}")));
    }
    let mut idx = sample(&mut ChaCha20Rng::seed_from_u64(seed), total, count).into_vec();
    idx.sort_unstable();
    Ok(idx)
}

fn fit_csc(a: FitCscArgs, run: &Run) -> Result<()> {
    let data = load_dataset_bundle(&a.data)?;
    let config = a.csc.config(a.lambda, a.seed, a.threads);
    let (model, diag, subset) = match a.groups_subset {
        Some(count) => {
            let subset = choose_groups(data.train.num_groups(), count, a.seed)?;
            let (m, d) = csc_fit_on_subset(&data.train, &config, &subset)?;
            (m, d, Some(subset))
        }
        None => {
            let (m, d) = csc_fit(&data.train, &config)?;
            (m, d, None)
        }
    };
    let model_path = save_model(&model, Some(&diag), &a.out)?;
    let diag_path = a.out.join("diagnostics.csv");
    write_diagnostics_csv(&diag, &diag_path)?;
    let report = diagnostics_report(&diag);
    let report_path = a.out.join("diagnostics.txt");
    write_text(&report, &report_path)?;
    emit(&report);
    run.finish(
        &a.out,
        json!({"csc": to_json(&config), "data": a.data, "groups_subset": subset}),
        Some(a.seed),
        vec![model_path, diag_path, report_path],
    )
}

fn fit_rrr(a: FitRrrArgs, run: &Run) -> Result<()> {
    let data = load_dataset_bundle(&a.data)?;
    let base = a.rrr.config(a.seed);
    let fits = rrr_fit_all_with_rule(&data.train, &a.rrr.rule(), &base, a.threads)?;
    let unconverged = fits.iter().filter(|f| !f.converged).count();
    if unconverged > 0 {
        log::warn!("{unconverged} group fits stopped at the iteration budget");
    }
    let model = RrrModel {
        radii: fits.iter().map(|f| f.radius).collect(),
        estimates: fits.into_iter().map(|f| f.estimate).collect(),
        config: base.clone(),
    };
    let path = save_rrr_model(&model, &a.out)?;
    emit(&format!("{}\n", path.display()));
    run.finish(
        &a.out,
        json!({"rrr": to_json(&base), "radius_rule": format!("{:?}", a.rrr.rule()), "data": a.data}),
        Some(a.seed),
        vec![path],
    )
}

fn encode(a: EncodeArgs, run: &Run) -> Result<()> {
    let (model, _) = load_model(&a.model)?;
    let data = load_dataset_bundle(&a.data)?;
    let lambda = a.lambda.unwrap_or(model.config.lambda);
    let encoded = encode_all(&model.dictionary, &data.train, lambda, &model.config.encoder, None, a.threads)?;
    if !encoded.warnings.is_empty() {
        log::warn!("{} groups did not reach the encoder tolerance", encoded.warnings.len());
    }
    let mut config = model.config.clone();
    config.lambda = lambda;
    let fresh = CscModel::new(model.dictionary, encoded.coefficients, config.clone())?;
    let path = save_model(&fresh, None, &a.out)?;
    emit(&format!("{}\n", path.display()));
    run.finish(
        &a.out,
        json!({"model": a.model, "data": a.data, "lambda": lambda}),
        Some(config.rng_seed),
        vec![path],
    )
}

fn evaluate_cmd(a: EvaluateArgs, run: &Run) -> Result<()> {
    let estimates = load_estimates(&a.model)?;
    let data = load_dataset_bundle(&a.data)?;
    let split = match a.split {
        Some(SplitArg::Train) => &data.train,
        Some(SplitArg::Test) => data
            .test
            .as_ref()
            .ok_or_else(|| Error::Validation("manifest has no test split".into()))?,
        None => data.test.as_ref().unwrap_or(&data.train),
    };
    let truth = if a.truth {
        Some(
            data.truth
                .as_ref()
                .ok_or_else(|| Error::Validation("manifest has no ground truth".into()))?
                .b_star
                .as_slice(),
        )
    } else {
        None
    };
    let report = evaluate(&estimates, split, truth)?;
    if let Some(e) = report.estimation_error {
        emit(&format!("estimation_error\t{e:?}\n"));
    }
    emit(&format!("prediction_error\t{:?}\n", report.prediction_error));
    for (g, e) in report.per_group_prediction_error.iter().enumerate() {
        emit(&format!("prediction_error[{g}]\t{e:?}\n"));
    }
    if let Some(out) = &a.out {
        create_dir(out)?;
        let path = out.join("evaluation.json");
        save_json(&report, &path)?;
        run.finish(out, json!({"model": a.model, "data": a.data}), None, vec![path])?;
    }
    Ok(())
}

fn cv_lambda(a: CvLambdaArgs, run: &Run) -> Result<()> {
    let data = load_dataset_bundle(&a.data)?;
    let template = a.csc.config(0.0, a.seed, a.threads);
    let grid = a
        .grid
        .clone()
        .unwrap_or_else(|| default_lambda_grid(template.k, data.train.n()));
    let selection = select_lambda(&data.train, &template, &grid, a.folds, a.seed)?;
    emit("lambda\tcv_error\n");
    for (l, e) in &selection.curve {
        emit(&format!("{l:?}\t{e:?}\n"));
    }
    emit(&format!("best\t{:?}\n", selection.best));
    if let Some(out) = &a.out {
        create_dir(out)?;
        let path = out.join("cv_lambda.json");
        save_json(&selection, &path)?;
        let mut csv = String::from("lambda,cv_error\n");
        for (l, e) in &selection.curve {
            csv.push_str(&format!("{l:?},{e:?}\n"));
        }
        let csv_path = out.join("cv_lambda.csv");
        write_text(&csv, &csv_path)?;
        run.finish(
            out,
            json!({"csc": to_json(&template), "grid": grid, "folds": a.folds, "data": a.data}),
            Some(a.seed),
            vec![path, csv_path],
        )?;
    }
    Ok(())
}

fn holdout_table(name: &str, report: &HoldoutReport) -> String {
    let mut out = format!("{name}: {} trials ({} failed)\ngroup\tacc_2v2\tacc_1v2\tmse\n", report.trials.len(), report.n_failed);
    for (g, r) in report.per_group.iter().enumerate() {
        out.push_str(&format!("{g}\t{:.4}\t{:.4}\t{:.6e}\n", r.acc_2v2, r.acc_1v2, r.mean_squared_error));
    }
    out
}

fn holdout2(a: Holdout2Args, run: &Run) -> Result<()> {
    let data = load_dataset_bundle(&a.data)?;
    let metric = match a.metric {
        MetricArg::Euclidean => Metric::Euclidean,
        MetricArg::Cosine => Metric::CosineDistance,
    };
    // Trials run in parallel; each fit stays single-threaded.
    let csc_config = a.csc.config(a.lambda, a.seed, 1);
    let rrr_base = a.rrr.config(a.seed);
    let rule = a.rrr.rule();
    let csc_fit_fn = |train: &crate::dataset::GroupedDataset| -> Result<Vec<Matrix>> {
        Ok(csc_fit(train, &csc_config)?.0.estimates())
    };
    let rrr_fit_fn = |train: &crate::dataset::GroupedDataset| -> Result<Vec<Matrix>> {
        Ok(rrr_fit_all_with_rule(train, &rule, &rrr_base, 1)?
            .into_iter()
            .map(|f| f.estimate)
            .collect())
    };

    let mut reports = Vec::new();
    if matches!(a.method, MethodArg::Csc | MethodArg::Both) {
        reports.push(("csc", hold_two_out_cv(&data.train, csc_fit_fn, a.trials, metric, a.seed, a.threads)?));
    }
    if matches!(a.method, MethodArg::Rrr | MethodArg::Both) {
        reports.push(("rrr", hold_two_out_cv(&data.train, rrr_fit_fn, a.trials, metric, a.seed, a.threads)?));
    }
    let mut text = String::new();
    for (name, report) in &reports {
        text.push_str(&holdout_table(name, report));
    }
    let mut confidence = Vec::new();
    if let [(_, csc), (_, rrr)] = reports.as_slice() {
        text.push_str("group\tcsc_2v2\trrr_2v2\tconfidence\n");
        for g in 0..data.train.num_groups() {
            // Pair trials that succeeded for both methods.
            let (mut first, mut second) = (Vec::new(), Vec::new());
            for (tc, tr) in csc.trials.iter().zip(&rrr.trials) {
                if let (Some(c), Some(r)) = (tc.groups.get(g), tr.groups.get(g)) {
                    first.push(c.correct_2v2 as u8 as f64);
                    second.push(r.correct_2v2 as u8 as f64);
                }
            }
            let test = paired_sign_test(&first, &second)?;
            text.push_str(&format!(
                "{g}\t{:.4}\t{:.4}\t{}\n",
                csc.per_group[g].acc_2v2,
                rrr.per_group[g].acc_2v2,
                test.confidence_label()
            ));
            confidence.push(test);
        }
    }
    emit(&text);
    if let Some(out) = &a.out {
        create_dir(out)?;
        let mut outputs = Vec::new();
        for (name, report) in &reports {
            let path = out.join(format!("holdout2_{name}.json"));
            save_json(report, &path)?;
            outputs.push(path);
        }
        if !confidence.is_empty() {
            let path = out.join("holdout2_sign_test.json");
            save_json(&confidence, &path)?;
            outputs.push(path);
        }
        let path = out.join("holdout2.txt");
        write_text(&text, &path)?;
        outputs.push(path);
        run.finish(
            out,
            json!({
                "csc": to_json(&csc_config),
                "rrr": to_json(&rrr_base),
                "radius_rule": format!("{rule:?}"),
                "trials": a.trials,
                "metric": to_json(&metric),
                "data": a.data,
            }),
            Some(a.seed),
            outputs,
        )?;
    }
    Ok(())
}

fn diagnose(a: DiagnoseArgs, run: &Run) -> Result<()> {
    let (_, diag) = load_model(&a.model)?;
    let diag = diag.ok_or_else(|| Error::Validation(format!("{} has no fit diagnostics", a.model.display())))?;
    if diag.alternations() == 0 {
        return Err(Error::Validation("diagnostics are empty".into()));
    }
    let report = diagnostics_report(&diag);
    emit(&report);
    if let Some(out) = &a.out {
        create_dir(out)?;
        let csv = out.join("diagnostics.csv");
        write_diagnostics_csv(&diag, &csv)?;
        let txt = out.join("diagnostics.txt");
        write_text(&report, &txt)?;
        run.finish(out, json!({"model": a.model}), None, vec![csv, txt])?;
    }
    Ok(())
}
