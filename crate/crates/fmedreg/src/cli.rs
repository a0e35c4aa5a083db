//! Batch command-line interface.
//!
//! Six subcommands cover the pipeline: `fit` (bandwidth selection report),
//! `predict` (conditional medians for new curves), `ellipse` (confidence
//! ellipsoid at one new curve), `simulate` (synthetic coverage experiment),
//! `benchmark` (learn/test evaluation of the three estimators), and `fpca`
//! (basis inspection). Results go to `--out` (stdout otherwise) as JSON
//! (enveloped with a versioned `"schema": "fmedreg/1"` field) or CSV.
//!
//! Exit codes: 0 success; 2 command-line usage errors; 3 data/configuration
//! errors; 4 numeric failures (empty kernel windows, singular matrices,
//! failed bandwidth selection). Errors print one machine-parsable line on
//! standard error. `FMEDREG_THREADS` caps the worker-thread count.

use crate::bench::{
    evaluate, parse_dataset, parse_matrix_csv, split_learn_test, synthetic_standin, Dataset,
    EvalConfig, ParseOptions, SplitSpec, TransferMode,
};
use crate::error::{Error, Result};
use crate::fda::{fit_fpca, SemiMetricKind};
use crate::inference::{confidence_ellipsoid, ellipsoid_axes, EllipsoidDiagnostics};
use crate::kernel::KernelSpec;
use crate::regression::{
    bandwidth_cv_l1_with, knn_candidates, pairwise_for_model, quantile_h_candidates,
    BandwidthRule, CandidateGrid, CvRecord, FittedModel, Method,
};
use crate::simulation::{coverage_experiment, SimConfig};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use std::path::PathBuf;

/// Entry point for the `fmedreg` binary; returns the process exit code.
pub fn run() -> i32 {
    if let Err(e) = init_threads() {
        report(&e);
        return e.exit_code();
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            report(&e);
            e.exit_code()
        }
    }
}

/// One machine-parsable diagnostic line on standard error.
fn report(e: &Error) {
    let msg = e.to_string().replace('\n', " ");
    eprintln!("fmedreg: error kind={} exit={} msg={}", e.kind(), e.exit_code(), msg);
}

fn init_threads() -> Result<()> {
    if let Ok(raw) = std::env::var("FMEDREG_THREADS") {
        let threads: usize = raw.trim().parse().map_err(|_| {
            Error::Invalid(format!("FMEDREG_THREADS must be a positive integer, got {raw:?}"))
        })?;
        if threads == 0 {
            return Err(Error::Invalid("FMEDREG_THREADS must be at least 1".into()));
        }
        // Ignore "already initialized": only possible in-process in tests.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    Ok(())
}

#[derive(Parser)]
#[command(
    name = "fmedreg",
    version,
    about = "Nonparametric multivariate median regression with curve covariates"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Fit a model and report the cross-validated bandwidth.
    Fit(FitArgs),
    /// Predict conditional medians for new curves.
    Predict(PredictArgs),
    /// Confidence ellipsoid for the conditional median at one new curve.
    Ellipse(EllipseArgs),
    /// Synthetic coverage experiment with Brownian-path covariates.
    Simulate(SimulateArgs),
    /// Learn/test benchmark of the cmm, vccm, and nf estimators.
    Benchmark(BenchmarkArgs),
    /// Functional principal component basis of a curve sample.
    Fpca(FpcaArgs),
}

#[derive(Args)]
struct DataArgs {
    /// Curves CSV: n rows of p numeric columns.
    #[arg(long)]
    curves: PathBuf,
    /// Responses CSV: n rows of d numeric columns, with a header row
    /// naming the components.
    #[arg(long)]
    responses: PathBuf,
    /// The curves file starts with a header row (skipped).
    #[arg(long)]
    header: bool,
    /// Grid abscissae file (one value per line); equispaced [0,1] otherwise.
    #[arg(long)]
    grid: Option<PathBuf>,
}

#[derive(Args)]
struct EstimatorArgs {
    /// Estimator.
    #[arg(long, value_enum, default_value_t = MethodArg::Cmm)]
    method: MethodArg,
    /// Kernel on [0, 1].
    #[arg(long, value_enum, default_value_t = KernelArg::Quadratic)]
    kernel: KernelArg,
    /// With --kernel gauss: use the untruncated Gaussian
    /// (estimation only; inference rejects it).
    #[arg(long = "unsafe-kernel")]
    unsafe_kernel: bool,
    /// Curve distance: deriv2, fpca:Q (e.g. fpca:2), or rawl2.
    /// Ignored by the nf estimator, which uses raw Euclidean distance.
    #[arg(long, default_value = "deriv2")]
    semimetric: String,
    /// Bandwidth policy: cv-knn, cv-h, h:VALUE, or knn:COUNT.
    #[arg(long, default_value = "cv-knn")]
    bandwidth: String,
}

#[derive(Args)]
struct OutputArgs {
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = FormatArg::Json)]
    format: FormatArg,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum MethodArg {
    Cmm,
    Vccm,
    Nf,
}

impl From<MethodArg> for Method {
    fn from(m: MethodArg) -> Method {
        match m {
            MethodArg::Cmm => Method::Cmm,
            MethodArg::Vccm => Method::Vccm,
            MethodArg::Nf => Method::Nf,
        }
    }
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelArg {
    /// 1.5(1 − u²) on [0, 1].
    Quadratic,
    /// Gaussian density truncated to [0, 1].
    Gauss,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FormatArg {
    Json,
    Csv,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SplitArg {
    /// First --n-learn rows in file order.
    #[value(alias = "paper-order")]
    FileOrder,
    /// Seeded shuffle, then first --n-learn rows.
    Seeded,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TransferArg {
    /// Re-predict at each test curve with the nearest learning curve's
    /// resolved bandwidth.
    Bandwidth,
    /// Copy the nearest learning curve's prediction verbatim.
    Prediction,
}

#[derive(Args)]
struct FitArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    est: EstimatorArgs,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct PredictArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    est: EstimatorArgs,
    /// CSV of curves to predict at (same column count as --curves).
    #[arg(long = "new-curves")]
    new_curves: PathBuf,
    /// The new-curves file starts with a header row.
    #[arg(long = "new-header")]
    new_header: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct EllipseArgs {
    #[command(flatten)]
    data: DataArgs,
    #[command(flatten)]
    est: EstimatorArgs,
    /// CSV of query curves; the ellipsoid is built at --row.
    #[arg(long = "new-curves")]
    new_curves: PathBuf,
    /// The new-curves file starts with a header row.
    #[arg(long = "new-header")]
    new_header: bool,
    /// Row of --new-curves to analyze (0-based).
    #[arg(long, default_value_t = 0)]
    row: usize,
    /// Miscoverage level of the ellipsoid.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct SimulateArgs {
    /// Sample size per replication.
    #[arg(long, default_value_t = 200)]
    n: usize,
    /// Grid resolution of the Brownian paths.
    #[arg(long, default_value_t = 100)]
    p: usize,
    /// Number of replications.
    #[arg(long, default_value_t = 50)]
    reps: usize,
    /// Miscoverage level of the ellipsoids.
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    /// Response noise standard deviation.
    #[arg(long = "noise-sd", default_value_t = 1.0)]
    noise_sd: f64,
    /// Master seed (each replication uses its own stream).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Args)]
struct BenchmarkArgs {
    /// Curves CSV; omit (with --responses) to run a seeded synthetic
    /// stand-in with the benchmark's shape.
    #[arg(long, requires = "responses")]
    curves: Option<PathBuf>,
    /// Responses CSV with header row.
    #[arg(long, requires = "curves")]
    responses: Option<PathBuf>,
    /// The curves file starts with a header row.
    #[arg(long)]
    header: bool,
    /// Grid abscissae file (one value per line).
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Comma-separated estimators to run (cmm, vccm, nf).
    #[arg(long, default_value = "cmm,vccm,nf")]
    methods: String,
    /// How to carve out the learning set.
    #[arg(long, value_enum, default_value_t = SplitArg::FileOrder)]
    split: SplitArg,
    /// Learning-set size.
    #[arg(long = "n-learn", default_value_t = 160)]
    n_learn: usize,
    /// Seed for the seeded split and/or the synthetic stand-in.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Kernel on [0, 1].
    #[arg(long, value_enum, default_value_t = KernelArg::Quadratic)]
    kernel: KernelArg,
    /// With --kernel gauss: use the untruncated Gaussian.
    #[arg(long = "unsafe-kernel")]
    unsafe_kernel: bool,
    /// How cross-validated bandwidths reach test curves.
    #[arg(long, value_enum, default_value_t = TransferArg::Bandwidth)]
    transfer: TransferArg,
    /// Also write per-observation records to this CSV path.
    #[arg(long = "obs-out")]
    obs_out: Option<PathBuf>,
    /// Output file; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format (the summary table is CSV by default).
    #[arg(long, value_enum, default_value_t = FormatArg::Csv)]
    format: FormatArg,
}

#[derive(Args)]
struct FpcaArgs {
    /// Curves CSV: n rows of p numeric columns.
    #[arg(long)]
    curves: PathBuf,
    /// The curves file starts with a header row.
    #[arg(long)]
    header: bool,
    /// Grid abscissae file (one value per line).
    #[arg(long)]
    grid: Option<PathBuf>,
    /// Number of components to retain.
    #[arg(long, default_value_t = 2)]
    q: usize,
    #[command(flatten)]
    output: OutputArgs,
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.cmd {
        Cmd::Fit(a) => cmd_fit(a),
        Cmd::Predict(a) => cmd_predict(a),
        Cmd::Ellipse(a) => cmd_ellipse(a),
        Cmd::Simulate(a) => cmd_simulate(a),
        Cmd::Benchmark(a) => cmd_benchmark(a),
        Cmd::Fpca(a) => cmd_fpca(a),
    }
}

// --- shared plumbing ---

fn kernel_from(kernel: KernelArg, unsafe_kernel: bool) -> Result<KernelSpec> {
    match (kernel, unsafe_kernel) {
        (KernelArg::Quadratic, false) => Ok(KernelSpec::Quadratic),
        (KernelArg::Gauss, false) => Ok(KernelSpec::TruncGauss),
        (KernelArg::Gauss, true) => Ok(KernelSpec::UnsafeGauss),
        (KernelArg::Quadratic, true) => Err(Error::Invalid(
            "--unsafe-kernel only applies to --kernel gauss".into(),
        )),
    }
}

fn parse_semimetric(s: &str) -> Result<SemiMetricKind> {
    match s {
        "deriv2" => Ok(SemiMetricKind::Deriv2),
        "rawl2" => Ok(SemiMetricKind::RawL2),
        other => match other.strip_prefix("fpca:") {
            Some(q) => {
                let q: usize = q.parse().map_err(|_| {
                    Error::Invalid(format!("fpca component count must be an integer, got {q:?}"))
                })?;
                Ok(SemiMetricKind::Fpca { q })
            }
            None => Err(Error::Invalid(format!(
                "unknown semimetric {other:?}; expected deriv2, fpca:Q, or rawl2"
            ))),
        },
    }
}

enum BandwidthChoice {
    CvKnn,
    CvH,
    Fixed(f64),
    Knn(usize),
}

fn parse_bandwidth(s: &str) -> Result<BandwidthChoice> {
    match s {
        "cv-knn" => Ok(BandwidthChoice::CvKnn),
        "cv-h" => Ok(BandwidthChoice::CvH),
        other => {
            if let Some(h) = other.strip_prefix("h:") {
                let h: f64 = h.parse().map_err(|_| {
                    Error::Invalid(format!("bandwidth value must be a number, got {h:?}"))
                })?;
                return Ok(BandwidthChoice::Fixed(h));
            }
            if let Some(k) = other.strip_prefix("knn:") {
                let k: usize = k.parse().map_err(|_| {
                    Error::Invalid(format!("neighbour count must be an integer, got {k:?}"))
                })?;
                return Ok(BandwidthChoice::Knn(k));
            }
            Err(Error::Invalid(format!(
                "unknown bandwidth {other:?}; expected cv-knn, cv-h, h:VALUE, or knn:COUNT"
            )))
        }
    }
}

fn parse_methods(s: &str) -> Result<Vec<Method>> {
    let mut out = Vec::new();
    for part in s.split(',') {
        let part = part.trim();
        match part {
            "cmm" => out.push(Method::Cmm),
            "vccm" => out.push(Method::Vccm),
            "nf" => out.push(Method::Nf),
            "" => {}
            other => {
                return Err(Error::Invalid(format!(
                    "unknown method {other:?}; expected cmm, vccm, or nf"
                )))
            }
        }
    }
    if out.is_empty() {
        return Err(Error::Invalid("--methods selected no estimator".into()));
    }
    Ok(out)
}

fn load_grid_file(path: &PathBuf) -> Result<Vec<f64>> {
    let (_, rows) = parse_matrix_csv(path, false)?;
    if rows.len() == 1 {
        return Ok(rows.into_iter().next().unwrap());
    }
    if rows.iter().all(|r| r.len() == 1) {
        return Ok(rows.into_iter().map(|r| r[0]).collect());
    }
    Err(Error::Shape("grid file must be a single row or a single column".into()))
}

fn load_dataset(data: &DataArgs) -> Result<Dataset> {
    let grid = data.grid.as_ref().map(load_grid_file).transpose()?;
    let opts = ParseOptions { curves_header: data.header, grid };
    parse_dataset(&data.curves, &data.responses, &opts)
}

fn load_new_curves(path: &PathBuf, header: bool) -> Result<Vec<Vec<f64>>> {
    let (_, rows) = parse_matrix_csv(path, header)?;
    Ok(rows)
}

struct BuiltModel {
    model: FittedModel,
    cv: Vec<CvRecord>,
    response_names: Vec<String>,
}

fn build_model(data: &DataArgs, est: &EstimatorArgs) -> Result<BuiltModel> {
    let ds = load_dataset(data)?;
    let kernel = kernel_from(est.kernel, est.unsafe_kernel)?;
    let kind = parse_semimetric(&est.semimetric)?;
    let semimetric = kind.realize(&ds.sample)?;
    let choice = parse_bandwidth(&est.bandwidth)?;
    let mut model = FittedModel::new(
        ds.sample,
        ds.responses,
        semimetric,
        kernel,
        BandwidthRule::fixed(1.0)?,
        est.method.into(),
    )?;
    let cv = match choice {
        BandwidthChoice::Fixed(h) => {
            model.set_bandwidth(BandwidthRule::fixed(h)?);
            Vec::new()
        }
        BandwidthChoice::Knn(k) => {
            model.set_bandwidth(BandwidthRule::knn(k)?);
            Vec::new()
        }
        BandwidthChoice::CvKnn => {
            let pairwise = pairwise_for_model(&model)?;
            let grid = CandidateGrid::Knn(knn_candidates(model.n()));
            let (rule, cv) = bandwidth_cv_l1_with(&model, &grid, &pairwise)?;
            model.set_bandwidth(rule);
            cv
        }
        BandwidthChoice::CvH => {
            let pairwise = pairwise_for_model(&model)?;
            let grid = CandidateGrid::FixedH(quantile_h_candidates(&pairwise)?);
            let (rule, cv) = bandwidth_cv_l1_with(&model, &grid, &pairwise)?;
            model.set_bandwidth(rule);
            cv
        }
    };
    Ok(BuiltModel { model, cv, response_names: ds.response_names })
}

// --- output plumbing ---

#[derive(Serialize)]
struct Envelope<T: Serialize> {
    schema: &'static str,
    generated_unix_ms: u128,
    command: &'static str,
    result: T,
}

fn timestamp_ms() -> u128 {
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_millis())
        .unwrap_or(0)
}

fn emit_text(content: String, out: &Option<PathBuf>) -> Result<()> {
    match out {
        Some(path) => std::fs::write(path, content)?,
        None => print!("{content}"),
    }
    Ok(())
}

fn emit_json<T: Serialize>(command: &'static str, result: T, out: &Option<PathBuf>) -> Result<()> {
    let env = Envelope { schema: "fmedreg/1", generated_unix_ms: timestamp_ms(), command, result };
    let mut body = serde_json::to_string_pretty(&env)
        .map_err(|e| Error::Invalid(format!("serialization failed: {e}")))?;
    body.push('\n');
    emit_text(body, out)
}

fn csv_into_string<F>(fill: F) -> Result<String>
where
    F: FnOnce(&mut csv::Writer<Vec<u8>>) -> Result<()>,
{
    let mut w = csv::Writer::from_writer(Vec::new());
    fill(&mut w)?;
    let bytes = w
        .into_inner()
        .map_err(|e| Error::Invalid(format!("csv buffering failed: {e}")))?;
    String::from_utf8(bytes).map_err(|e| Error::Invalid(format!("csv not utf-8: {e}")))
}

fn csv_err(e: csv::Error) -> Error {
    Error::Invalid(format!("csv write failed: {e}"))
}

// --- subcommands ---

#[derive(Serialize)]
struct FitResult {
    method: &'static str,
    kernel: KernelSpec,
    semimetric: String,
    n: usize,
    d: usize,
    selected: BandwidthRule,
    cv: Vec<CvRecord>,
}

fn cmd_fit(a: FitArgs) -> Result<()> {
    let built = build_model(&a.data, &a.est)?;
    let result = FitResult {
        method: built.model.method().tag(),
        kernel: built.model.kernel(),
        semimetric: built.model.semimetric().tag(),
        n: built.model.n(),
        d: built.model.dim(),
        selected: built.model.bandwidth(),
        cv: built.cv,
    };
    match a.output.format {
        FormatArg::Json => emit_json("fit", result, &a.output.out),
        FormatArg::Csv => {
            let body = csv_into_string(|w| {
                w.write_record(["candidate", "score", "empty_folds", "selected"])
                    .map_err(csv_err)?;
                for rec in &result.cv {
                    w.write_record([
                        rec.rule.tag(),
                        rec.score.to_string(),
                        rec.empty_folds.to_string(),
                        (rec.rule == result.selected).to_string(),
                    ])
                    .map_err(csv_err)?;
                }
                if result.cv.is_empty() {
                    w.write_record([result.selected.tag(), String::new(), String::new(), "true".into()])
                        .map_err(csv_err)?;
                }
                Ok(())
            })?;
            emit_text(body, &a.output.out)
        }
    }
}

#[derive(Serialize)]
struct PredictionOut {
    index: usize,
    y_hat: Vec<f64>,
    h_used: f64,
    effective_n: usize,
}

#[derive(Serialize)]
struct PredictResult {
    method: &'static str,
    response_names: Vec<String>,
    bandwidth: BandwidthRule,
    predictions: Vec<PredictionOut>,
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let built = build_model(&a.data, &a.est)?;
    let queries = load_new_curves(&a.new_curves, a.new_header)?;
    let mut predictions = Vec::with_capacity(queries.len());
    for (index, x) in queries.iter().enumerate() {
        let pred = built.model.predict(x)?;
        predictions.push(PredictionOut {
            index,
            y_hat: pred.y_hat.iter().cloned().collect(),
            h_used: pred.h_used,
            effective_n: pred.weights_used.effective_n(),
        });
    }
    let result = PredictResult {
        method: built.model.method().tag(),
        response_names: built.response_names.clone(),
        bandwidth: built.model.bandwidth(),
        predictions,
    };
    match a.output.format {
        FormatArg::Json => emit_json("predict", result, &a.output.out),
        FormatArg::Csv => {
            let body = csv_into_string(|w| {
                let mut header = vec!["index".to_string()];
                header.extend(result.response_names.iter().map(|n| format!("yhat_{n}")));
                header.push("h_used".into());
                header.push("effective_n".into());
                w.write_record(&header).map_err(csv_err)?;
                for p in &result.predictions {
                    let mut row = vec![p.index.to_string()];
                    row.extend(p.y_hat.iter().map(|v| v.to_string()));
                    row.push(p.h_used.to_string());
                    row.push(p.effective_n.to_string());
                    w.write_record(&row).map_err(csv_err)?;
                }
                Ok(())
            })?;
            emit_text(body, &a.output.out)
        }
    }
}

#[derive(Serialize)]
struct EllipseResult {
    response_names: Vec<String>,
    center: Vec<f64>,
    shape_inv: Vec<Vec<f64>>,
    level: f64,
    radius2: f64,
    axes: Vec<f64>,
    diagnostics: EllipsoidDiagnostics,
}

fn cmd_ellipse(a: EllipseArgs) -> Result<()> {
    let built = build_model(&a.data, &a.est)?;
    let queries = load_new_curves(&a.new_curves, a.new_header)?;
    let x = queries.get(a.row).ok_or_else(|| {
        Error::Invalid(format!("--row {} out of range: {} query curves", a.row, queries.len()))
    })?;
    let ell = confidence_ellipsoid(&built.model, x, a.alpha)?;
    let d = ell.center.len();
    let result = EllipseResult {
        response_names: built.response_names.clone(),
        center: ell.center.iter().cloned().collect(),
        shape_inv: (0..d)
            .map(|i| (0..d).map(|j| ell.shape_inv[(i, j)]).collect())
            .collect(),
        level: ell.level,
        radius2: ell.radius2,
        axes: ellipsoid_axes(&ell),
        diagnostics: ell.diagnostics,
    };
    match a.output.format {
        FormatArg::Json => emit_json("ellipse", result, &a.output.out),
        FormatArg::Csv => {
            let body = csv_into_string(|w| {
                w.write_record(["quantity", "row", "col", "value"]).map_err(csv_err)?;
                for (j, v) in result.center.iter().enumerate() {
                    w.write_record(["center", &j.to_string(), "", &v.to_string()])
                        .map_err(csv_err)?;
                }
                for (i, row) in result.shape_inv.iter().enumerate() {
                    for (j, v) in row.iter().enumerate() {
                        w.write_record([
                            "shape_inv",
                            &i.to_string(),
                            &j.to_string(),
                            &v.to_string(),
                        ])
                        .map_err(csv_err)?;
                    }
                }
                for (j, v) in result.axes.iter().enumerate() {
                    w.write_record(["axis", &j.to_string(), "", &v.to_string()])
                        .map_err(csv_err)?;
                }
                w.write_record(["level", "", "", &result.level.to_string()]).map_err(csv_err)?;
                w.write_record(["radius2", "", "", &result.radius2.to_string()])
                    .map_err(csv_err)?;
                Ok(())
            })?;
            emit_text(body, &a.output.out)
        }
    }
}

fn cmd_simulate(a: SimulateArgs) -> Result<()> {
    let cfg = SimConfig::new(a.n, a.p, a.noise_sd, a.seed, a.reps)?;
    let report = coverage_experiment(&cfg, a.alpha)?;
    match a.output.format {
        FormatArg::Json => emit_json("simulate", report, &a.output.out),
        FormatArg::Csv => {
            let body = csv_into_string(|w| {
                w.write_record([
                    "rep",
                    "h",
                    "inside",
                    "statistic",
                    "axis_major",
                    "axis_minor",
                    "effective_n",
                ])
                .map_err(csv_err)?;
                for r in &report.rows {
                    w.write_record([
                        r.rep.to_string(),
                        r.h.to_string(),
                        r.inside.to_string(),
                        r.statistic.to_string(),
                        r.axis_major.to_string(),
                        r.axis_minor.to_string(),
                        r.effective_n.to_string(),
                    ])
                    .map_err(csv_err)?;
                }
                Ok(())
            })?;
            emit_text(body, &a.output.out)
        }
    }
}

#[derive(Serialize)]
struct BenchmarkResult {
    source: String,
    n_learn: usize,
    n_test: usize,
    transfer: TransferMode,
    report: crate::bench::BenchReport,
    correlations: Vec<Vec<f64>>,
}

fn cmd_benchmark(a: BenchmarkArgs) -> Result<()> {
    let (ds, source) = match (&a.curves, &a.responses) {
        (Some(curves), Some(responses)) => {
            let grid = a.grid.as_ref().map(load_grid_file).transpose()?;
            let opts = ParseOptions { curves_header: a.header, grid };
            (parse_dataset(curves, responses, &opts)?, "files".to_string())
        }
        _ => (synthetic_standin(a.seed), format!("synthetic(seed={})", a.seed)),
    };
    let split = match a.split {
        SplitArg::FileOrder => SplitSpec::FileOrder { n_learn: a.n_learn },
        SplitArg::Seeded => SplitSpec::Seeded { n_learn: a.n_learn, seed: a.seed },
    };
    let (learn, test) = split_learn_test(&ds, split)?;
    let cfg = EvalConfig {
        kernel: kernel_from(a.kernel, a.unsafe_kernel)?,
        methods: parse_methods(&a.methods)?,
        transfer: match a.transfer {
            TransferArg::Bandwidth => TransferMode::Bandwidth,
            TransferArg::Prediction => TransferMode::PredictionCopy,
        },
    };
    let report = evaluate(&learn, &test, &cfg)?;
    let corr = crate::bench::correlation_summary(&ds)?;
    let d = corr.nrows();

    if let Some(obs_path) = &a.obs_out {
        let body = csv_into_string(|w| {
            let mut header = vec!["method".to_string(), "index".to_string()];
            for n in &ds.response_names {
                header.push(format!("y_{n}"));
            }
            for n in &ds.response_names {
                header.push(format!("yhat_{n}"));
            }
            for n in &ds.response_names {
                header.push(format!("ae_{n}"));
            }
            header.push("r".into());
            w.write_record(&header).map_err(csv_err)?;
            for mr in &report.methods {
                for rec in &mr.per_observation {
                    let mut row = vec![mr.method.tag().to_string(), rec.index.to_string()];
                    row.extend(rec.y.iter().map(|v| v.to_string()));
                    row.extend(rec.y_hat.iter().map(|v| v.to_string()));
                    row.extend(rec.abs_err.iter().map(|v| v.to_string()));
                    row.push(rec.r.to_string());
                    w.write_record(&row).map_err(csv_err)?;
                }
            }
            Ok(())
        })?;
        std::fs::write(obs_path, body)?;
    }

    let result = BenchmarkResult {
        source,
        n_learn: learn.n(),
        n_test: test.n(),
        transfer: cfg.transfer,
        report,
        correlations: (0..d)
            .map(|i| (0..d).map(|j| corr[(i, j)]).collect())
            .collect(),
    };
    match a.format {
        FormatArg::Json => emit_json("benchmark", result, &a.out),
        FormatArg::Csv => {
            let body = csv_into_string(|w| {
                w.write_record(["method", "bandwidth", "label", "mean", "q25", "q50", "q75"])
                    .map_err(csv_err)?;
                for mr in &result.report.methods {
                    for row in &mr.rows {
                        w.write_record([
                            mr.method.tag().to_string(),
                            mr.bandwidth.tag(),
                            row.label.clone(),
                            row.mean.to_string(),
                            row.q25.to_string(),
                            row.q50.to_string(),
                            row.q75.to_string(),
                        ])
                        .map_err(csv_err)?;
                    }
                }
                Ok(())
            })?;
            emit_text(body, &a.out)
        }
    }
}

#[derive(Serialize)]
struct FpcaResult {
    q: usize,
    eigenvalues: Vec<f64>,
    explained_fraction: Vec<f64>,
    total_variance: f64,
    grid: Vec<f64>,
    mean: Vec<f64>,
    components: Vec<Vec<f64>>,
}

fn cmd_fpca(a: FpcaArgs) -> Result<()> {
    let grid = a.grid.as_ref().map(load_grid_file).transpose()?;
    let (_, rows) = parse_matrix_csv(&a.curves, a.header)?;
    let p = rows[0].len();
    let grid = match grid {
        Some(points) => {
            if points.len() != p {
                return Err(Error::Shape(format!(
                    "grid has {} points but curves have {p} columns",
                    points.len()
                )));
            }
            crate::fda::Grid::new(points)?
        }
        None => crate::fda::Grid::equispaced(p, 0.0, 1.0)?,
    };
    let n = rows.len();
    let values = nalgebra::DMatrix::from_fn(n, p, |i, j| rows[i][j]);
    let sample = crate::fda::FunctionalSample::new(grid, values)?;
    let basis = fit_fpca(&sample, a.q)?;
    let tv = basis.total_variance();
    let result = FpcaResult {
        q: basis.q(),
        eigenvalues: basis.eigenvalues().to_vec(),
        explained_fraction: basis
            .eigenvalues()
            .iter()
            .map(|&l| if tv > 0.0 { l / tv } else { 0.0 })
            .collect(),
        total_variance: tv,
        grid: sample.grid().points().to_vec(),
        mean: basis.mean().iter().cloned().collect(),
        components: (0..basis.q())
            .map(|i| (0..p).map(|j| basis.components()[(i, j)]).collect())
            .collect(),
    };
    match a.output.format {
        FormatArg::Json => emit_json("fpca", result, &a.output.out),
        FormatArg::Csv => {
            let body = csv_into_string(|w| {
                let mut header = vec!["t".to_string(), "mean".to_string()];
                for j in 1..=result.q {
                    header.push(format!("component_{j}"));
                }
                w.write_record(&header).map_err(csv_err)?;
                for k in 0..result.grid.len() {
                    let mut row = vec![result.grid[k].to_string(), result.mean[k].to_string()];
                    for c in &result.components {
                        row.push(c[k].to_string());
                    }
                    w.write_record(&row).map_err(csv_err)?;
                }
                Ok(())
            })?;
            emit_text(body, &a.output.out)
        }
    }
}
