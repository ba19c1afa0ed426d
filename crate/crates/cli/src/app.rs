//! Argument parsing and the subcommands.

use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand, ValueEnum};

use greenroute::bundle::{load_bundle, BundleModel, ModelBundle};
use greenroute::cluster::{
    dbscan_fit, detect_transit_outliers, elbow_select_k, filter_outliers, k_distance_profile, kmeans_fit_with, pca_project,
    write_inertia_csv, write_k_distance_csv, write_pca_scatter_csv, KMeansOptions, OutlierMethod, ELBOW_RESTARTS, NOISE,
};
use greenroute::datagen::{generate, generate_demand, write_demand_csv, GENERATOR_VERSION};
use greenroute::evalx::{compute_metrics, feature_importance, ReportRow};
use greenroute::pipeline::{sha256_hex, FeaturePipeline};
use greenroute::tabular::{fit as fit_recipe, replay, write_csv};
use greenroute::{Error, EvalReport, Family, FittedRecipe, GeneratorSpec, Matrix, Recipe, Task};

use crate::checks;
use crate::server::{serve, Service};
use crate::workflow::{self, cluster_columns, created_at, Source, DEFAULT_N, DEMAND_DAYS, DEMAND_REGIONS, ELBOW_RANGE};

#[derive(Parser, Debug)]
#[command(name = "greenroute", version, about = "Shipment corpus generation, model training and prediction serving")]
pub struct Cli {
    /// Seed for every random choice the command makes.
    #[arg(long, global = true, env = "GREENROUTE_SEED", default_value_t = 7)]
    pub seed: u64,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Write a synthetic shipment (or demand) corpus and its manifest.
    Generate(GenerateArgs),
    /// Fit a preprocessing recipe on a CSV and write the transformed table.
    Preprocess(PreprocessArgs),
    /// Train one family, the whole zoo, or a tuned grid; writes a bundle and a report.
    Train(TrainArgs),
    /// Score a bundle on a CSV.
    Evaluate(EvaluateArgs),
    /// k-means, DBSCAN, elbow or PCA on the route features.
    Cluster(ClusterArgs),
    /// Transit outlier detection; prints flagged row indices.
    Outliers(OutliersArgs),
    /// Serve every bundle in a directory over HTTP.
    Serve(ServeArgs),
    /// Run the full acceptance pipeline and print PASS/FAIL per criterion.
    Repro(ReproArgs),
}

#[derive(Args, Debug)]
pub struct GenerateArgs {
    /// Number of shipment records.
    #[arg(long, default_value_t = DEFAULT_N)]
    pub n: usize,
    #[arg(long)]
    pub out: PathBuf,
    /// Manifest path; defaults to the output with a `.manifest.json` extension.
    #[arg(long)]
    pub manifest: Option<PathBuf>,
    #[arg(long, default_value_t = 0.0)]
    pub outlier_fraction: f64,
    /// Three comma-separated regime probabilities.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    pub regime_mix: Option<Vec<f64>>,
    /// Four comma-separated probabilities for Truck, Air, Rail, Ship.
    #[arg(long, value_delimiter = ',', num_args = 4)]
    pub mode_mix: Option<Vec<f64>>,
    /// Write the daily demand table instead of shipments.
    #[arg(long)]
    pub demand: bool,
    #[arg(long, default_value_t = DEMAND_DAYS)]
    pub days: usize,
    #[arg(long, default_value_t = DEMAND_REGIONS)]
    pub regions: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum TaskArg {
    Emissions,
    Transit,
    Demand,
    Cluster,
}

impl From<TaskArg> for Task {
    fn from(t: TaskArg) -> Task {
        match t {
            TaskArg::Emissions => Task::Emissions,
            TaskArg::Transit => Task::Transit,
            TaskArg::Demand => Task::Demand,
            TaskArg::Cluster => Task::Cluster,
        }
    }
}

#[derive(Args, Debug)]
pub struct PreprocessArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Selects the input schema and, without --recipe, the task's standard recipe.
    #[arg(long, value_enum, default_value = "emissions")]
    pub task: TaskArg,
    /// Recipe JSON to fit.
    #[arg(long, conflicts_with = "replay")]
    pub recipe: Option<PathBuf>,
    /// Fitted recipe JSON to replay without refitting.
    #[arg(long)]
    pub replay: Option<PathBuf>,
    /// Where to write the fitted recipe.
    #[arg(long)]
    pub fitted_out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[arg(long, value_enum)]
    pub task: TaskArg,
    /// A family name, or `all` for the six-family zoo (the best one is bundled).
    #[arg(long, default_value = "all")]
    pub family: String,
    /// Tune each family over its grid with k-fold CV before the final fit.
    #[arg(long)]
    pub grid: bool,
    /// Training CSV; the default corpus for the task is generated when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Report path; defaults to `<out-dir>/<task>.report.json`.
    #[arg(long)]
    pub report: Option<PathBuf>,
    /// Number of clusters for the cluster task; chosen by the elbow when absent.
    #[arg(long)]
    pub k: Option<usize>,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub bundle: PathBuf,
    #[arg(long)]
    pub data: PathBuf,
    /// Score every row instead of the test rows of the stored split.
    #[arg(long)]
    pub all_rows: bool,
    /// Write the report JSON here as well as printing it.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum ClusterMethod {
    Kmeans,
    Dbscan,
    Elbow,
    Pca,
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    #[arg(long, value_enum)]
    pub method: ClusterMethod,
    /// Shipment CSV; the default corpus is generated when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long, default_value_t = ELBOW_RANGE.0)]
    pub k_min: usize,
    #[arg(long, default_value_t = ELBOW_RANGE.1)]
    pub k_max: usize,
    /// DBSCAN radius; the k-distance knee when absent.
    #[arg(long)]
    pub eps: Option<f64>,
    #[arg(long, default_value_t = 4)]
    pub min_pts: usize,
    #[arg(long, default_value_t = 2)]
    pub components: usize,
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
pub enum FilterArg {
    Iqr,
    ZScore,
}

#[derive(Args, Debug)]
pub struct OutliersArgs {
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[arg(long)]
    pub min_pts: Option<usize>,
    #[arg(long)]
    pub eps: Option<f64>,
    /// Flag by a univariate rule on --column instead of DBSCAN.
    #[arg(long, value_enum, requires = "column")]
    pub filter: Option<FilterArg>,
    #[arg(long)]
    pub column: Option<String>,
    #[arg(long)]
    pub threshold: Option<f64>,
    /// JSON report path.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    #[arg(long, default_value = ".")]
    pub bundle_dir: PathBuf,
    #[arg(long, default_value_t = 8080)]
    pub port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    pub host: String,
}

#[derive(Args, Debug)]
pub struct ReproArgs {
    /// Keep the corpus, reports and bundles of the run here.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
}

/// Failure of a command, split by exit code.
#[derive(Debug)]
pub enum Failure {
    /// Bad input or usage: exit 1.
    User(String),
    /// Anything else: exit 2.
    Internal(String),
}

impl Failure {
    pub fn code(&self) -> i32 {
        match self {
            Failure::User(_) => 1,
            Failure::Internal(_) => 2,
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let user = match &e {
            Error::Io(io) => matches!(
                io.kind(),
                std::io::ErrorKind::NotFound | std::io::ErrorKind::PermissionDenied | std::io::ErrorKind::AlreadyExists
            ),
            other => other.is_user_error(),
        };
        if user {
            Failure::User(e.to_string())
        } else {
            Failure::Internal(e.to_string())
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(e: std::io::Error) -> Self {
        Failure::from(Error::Io(e))
    }
}

type Outcome<T = ()> = std::result::Result<T, Failure>;

fn user(msg: impl Into<String>) -> Failure {
    Failure::User(msg.into())
}

/// Parses `argv` (program name first), runs the command and returns the exit code.
pub fn run_cli<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprint!("{}", e.render());
            return 1;
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            let msg = match &f {
                Failure::User(m) | Failure::Internal(m) => m,
            };
            eprintln!("error: {msg}");
            f.code()
        }
    }
}

pub fn run(cli: Cli) -> Outcome<i32> {
    let seed = cli.seed;
    match cli.command {
        Command::Generate(a) => generate_cmd(&a, seed)?,
        Command::Preprocess(a) => preprocess_cmd(&a)?,
        Command::Train(a) => train_cmd(&a, seed)?,
        Command::Evaluate(a) => evaluate_cmd(&a)?,
        Command::Cluster(a) => cluster_cmd(&a, seed)?,
        Command::Outliers(a) => outliers_cmd(&a, seed)?,
        Command::Serve(a) => serve_cmd(&a)?,
        Command::Repro(a) => return repro_cmd(&a, seed),
    }
    Ok(0)
}

fn create(path: &Path) -> Outcome<BufWriter<File>> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Outcome {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(Error::from)?;
    w.write_all(b"\n")?;
    w.flush()?;
    Ok(())
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Outcome<T> {
    let bytes = fs::read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| user(format!("{}: {e}", path.display())))
}

fn manifest_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "corpus".into());
    out.with_file_name(format!("{stem}.manifest.json"))
}

fn generate_cmd(a: &GenerateArgs, seed: u64) -> Outcome {
    let manifest = a.manifest.clone().unwrap_or_else(|| manifest_path(&a.out));
    if a.demand {
        let records = generate_demand(a.days, a.regions, seed)?;
        let mut w = create(&a.out)?;
        write_demand_csv(&records, &mut w)?;
        w.flush()?;
        let m = serde_json::json!({
            "seed": seed,
            "n_days": a.days,
            "n_regions": a.regions,
            "generator_version": GENERATOR_VERSION,
        });
        write_json(&manifest, &m)?;
        eprintln!("wrote {} demand rows to {}", records.len(), a.out.display());
        return Ok(());
    }
    let mut spec = GeneratorSpec::new(a.n, seed);
    spec.outlier_fraction = a.outlier_fraction;
    if let Some(m) = &a.regime_mix {
        spec.regime_mix = [m[0], m[1], m[2]];
    }
    if let Some(m) = &a.mode_mix {
        spec.mode_mix = [m[0], m[1], m[2], m[3]];
    }
    let corpus = generate(&spec)?;
    fs::write(&a.out, corpus.to_csv_bytes()?)?;
    write_json(&manifest, &corpus.manifest())?;
    eprintln!("wrote {} records to {} (manifest {})", corpus.records.len(), a.out.display(), manifest.display());
    Ok(())
}

fn preprocess_cmd(a: &PreprocessArgs) -> Outcome {
    let task = Task::from(a.task);
    let source = Source::read(task, &a.input)?;
    let (fitted, out) = match (&a.replay, &a.recipe) {
        (Some(path), _) => {
            let fitted: FittedRecipe = read_json(path)?;
            let out = replay(&fitted, &source.raw)?;
            (fitted, out)
        }
        (None, Some(path)) => {
            let recipe: Recipe = read_json(path)?;
            fit_recipe(&recipe, &source.raw)?
        }
        (None, None) => {
            let p = FeaturePipeline::fit(task, &source.raw)?;
            let out = replay(&p.recipe, &source.raw)?;
            (p.recipe, out)
        }
    };
    let mut w = create(&a.out)?;
    write_csv(&out, &mut w)?;
    w.flush()?;
    if let Some(path) = &a.fitted_out {
        write_json(path, &fitted)?;
    }
    eprintln!("wrote {} rows x {} columns to {}", out.n_rows(), out.n_cols(), a.out.display());
    Ok(())
}

fn families(name: &str) -> Outcome<Vec<Family>> {
    if name == "all" {
        Ok(Family::ZOO.to_vec())
    } else {
        Ok(vec![Family::parse(name)?])
    }
}

fn train_cmd(a: &TrainArgs, seed: u64) -> Outcome {
    let task = Task::from(a.task);
    let source = Source::load(task, a.data.as_deref(), seed)?;
    fs::create_dir_all(&a.out_dir)?;
    let bundle_path = ModelBundle::default_path(&a.out_dir, task);

    if task == Task::Cluster {
        if a.grid || a.family != "all" {
            return Err(user("the cluster task trains k-means only; drop --family and --grid"));
        }
        let (bundle, elbow) = workflow::train_cluster(&source, a.k, seed, created_at())?;
        bundle.save(&bundle_path)?;
        if let Some(e) = elbow {
            let mut w = create(&a.out_dir.join("inertia.csv"))?;
            write_inertia_csv(&e.curve, &mut w)?;
            w.flush()?;
        }
        if let BundleModel::KMeans(m) = &bundle.model {
            println!("k {}  inertia {}", m.k, m.inertia);
        }
        eprintln!("wrote {}", bundle_path.display());
        return Ok(());
    }
    if a.k.is_some() {
        return Err(user("--k applies to the cluster task only"));
    }

    let fams = families(&a.family)?;
    let trained = workflow::train_regression(task, &source, &fams, a.grid, seed)?;
    let bundle = trained.bundle(None, &source, created_at())?;
    bundle.save(&bundle_path)?;
    let report_path = a.report.clone().unwrap_or_else(|| a.out_dir.join(format!("{task}.report.json")));
    fs::write(&report_path, trained.report.to_json() + "\n")?;
    for (family, g) in &trained.grids {
        write_json(&a.out_dir.join(format!("{task}.{family}.grid.json")), g)?;
    }
    if let Some(m) = trained.model(&bundle.model_id) {
        if let Ok(ranked) = feature_importance(m) {
            let mut w = create(&a.out_dir.join(format!("{task}.importance.csv")))?;
            writeln!(w, "feature,importance")?;
            for (f, v) in ranked {
                writeln!(w, "{f},{v}")?;
            }
            w.flush()?;
        }
    }
    print!("{}", trained.report.to_text());
    eprintln!("wrote {} and {}", bundle_path.display(), report_path.display());
    Ok(())
}

fn evaluate_cmd(a: &EvaluateArgs) -> Outcome {
    let bundle = load_bundle(&a.bundle)?;
    if bundle.task == Task::Cluster {
        return Err(user("evaluate scores regression bundles; this one holds a k-means model"));
    }
    let source = Source::read(bundle.task, &a.data)?;
    let raw = match (&bundle.split, a.all_rows) {
        (Some(split), false) => {
            let covered = split.train_indices.len() + split.valid_indices.len() + split.test_indices.len();
            if covered != source.raw.n_rows() {
                return Err(user(format!(
                    "the bundle's split covers {covered} rows but {} has {}; pass --all-rows to score every row",
                    a.data.display(),
                    source.raw.n_rows()
                )));
            }
            source.raw.select_rows(&split.test_indices)
        }
        _ => source.raw.clone(),
    };
    if source.corpus_hash != bundle.corpus_hash {
        eprintln!("note: {} differs from the training corpus", a.data.display());
    }
    let y = bundle.recipe_with_fitted_stats.target_values(&raw)?;
    let pred = bundle.predict(&raw)?;
    let m = compute_metrics(&y, &pred)?;
    let seed = bundle.training_report.as_ref().map_or(0, |r| r.seed);
    let row = ReportRow {
        model: bundle.model_id.clone(),
        mae: m.mae,
        mse: m.mse,
        r2: m.r2,
    };
    let report = EvalReport::new(bundle.task.as_str(), vec![row], seed, &source.corpus_hash);
    if let Some(path) = &a.out {
        fs::write(path, report.to_json() + "\n")?;
    }
    print!("{}", report.to_text());
    Ok(())
}

fn write_labels(path: &Path, labels: &[i64], extra: Option<(&str, Vec<String>)>) -> Outcome {
    let mut w = create(path)?;
    match &extra {
        Some((name, _)) => writeln!(w, "row,cluster,{name}")?,
        None => writeln!(w, "row,cluster")?,
    }
    for (i, l) in labels.iter().enumerate() {
        match &extra {
            Some((_, v)) => writeln!(w, "{i},{l},{}", v[i])?,
            None => writeln!(w, "{i},{l}")?,
        }
    }
    w.flush()?;
    Ok(())
}

fn scatter(x: &Matrix, labels: &[i64], outlier: &[bool], path: &Path) -> Outcome {
    let p = pca_project(x, 2.min(x.cols()))?;
    let mut w = create(path)?;
    write_pca_scatter_csv(&p.scores, labels, outlier, &mut w)?;
    w.flush()?;
    Ok(())
}

fn cluster_cmd(a: &ClusterArgs, seed: u64) -> Outcome {
    let source = Source::load(Task::Cluster, a.data.as_deref(), seed)?;
    let data = cluster_columns(&source.raw)?;
    let x = FeaturePipeline::fit(Task::Cluster, &data)?.transform(&data)?;
    fs::create_dir_all(&a.out_dir)?;
    let out = |name: &str| a.out_dir.join(name);
    match a.method {
        ClusterMethod::Elbow => {
            let e = elbow_select_k(&x, a.k_min, a.k_max, seed)?;
            let mut w = create(&out("inertia.csv"))?;
            write_inertia_csv(&e.curve, &mut w)?;
            w.flush()?;
            println!("chosen k {}", e.chosen_k);
        }
        ClusterMethod::Kmeans => {
            let k = match a.k {
                Some(k) => k,
                None => elbow_select_k(&x, a.k_min, a.k_max, seed)?.chosen_k,
            };
            let opts = KMeansOptions {
                n_init: ELBOW_RESTARTS,
                ..KMeansOptions::default()
            };
            let m = kmeans_fit_with(&x, k, seed, opts)?;
            let labels: Vec<i64> = m.labels.iter().map(|&l| l as i64).collect();
            write_labels(&out("labels.csv"), &labels, None)?;
            scatter(&x, &labels, &vec![false; labels.len()], &out("pca.csv"))?;
            println!("k {}  inertia {}  iterations {}", m.k, m.inertia, m.iterations_run);
        }
        ClusterMethod::Dbscan => {
            let profile = k_distance_profile(&x, a.min_pts)?;
            let eps = a.eps.unwrap_or(profile.suggested_eps);
            let m = dbscan_fit(&x, eps, a.min_pts)?;
            let classes = m
                .point_class
                .iter()
                .map(|c| serde_json::to_value(c).ok().and_then(|v| v.as_str().map(str::to_string)).unwrap_or_default())
                .collect();
            write_labels(&out("labels.csv"), &m.labels, Some(("class", classes)))?;
            let mut w = create(&out("k_distance.csv"))?;
            write_k_distance_csv(&profile.sorted, &mut w)?;
            w.flush()?;
            let noise: Vec<bool> = m.labels.iter().map(|&l| l == NOISE).collect();
            scatter(&x, &m.labels, &noise, &out("pca.csv"))?;
            println!("eps {eps}  clusters {}  noise {}", m.n_clusters(), m.noise_indices().len());
        }
        ClusterMethod::Pca => {
            let p = pca_project(&x, a.components)?;
            let mut w = create(&out("pca_scores.csv"))?;
            let header: Vec<String> = (1..=a.components).map(|c| format!("pc{c}")).collect();
            writeln!(w, "{}", header.join(","))?;
            for row in p.scores.row_iter() {
                let cells: Vec<String> = row.iter().map(f64::to_string).collect();
                writeln!(w, "{}", cells.join(","))?;
            }
            w.flush()?;
            let total: f64 = x.cols() as f64; // z-scored features: unit variance each
            for (i, v) in p.explained_variance.iter().enumerate() {
                println!("pc{}  variance {v:.4}  share {:.4}", i + 1, v / total);
            }
        }
    }
    Ok(())
}

fn outliers_cmd(a: &OutliersArgs, seed: u64) -> Outcome {
    let source = Source::load(Task::Transit, a.data.as_deref(), seed)?;
    let report = match a.filter {
        Some(f) => {
            let method = match f {
                FilterArg::Iqr => OutlierMethod::Iqr,
                FilterArg::ZScore => OutlierMethod::ZScore,
            };
            let column = a.column.as_deref().expect("clap enforces --column");
            let values = source.raw.numeric_column(column)?;
            let kept = filter_outliers(&values, method, a.threshold)?;
            let mut keep = vec![false; values.len()];
            for i in kept {
                keep[i] = true;
            }
            let flagged: Vec<usize> = (0..values.len()).filter(|&i| !keep[i]).collect();
            serde_json::json!({
                "method": f.to_possible_value().map(|v| v.get_name().to_string()),
                "column": column,
                "threshold": a.threshold.unwrap_or(method.default_threshold()),
                "outlier_indices": flagged,
            })
        }
        None => {
            let r = detect_transit_outliers(&source.raw, a.min_pts, a.eps)?;
            serde_json::json!({
                "method": "dbscan",
                "eps": r.model.eps,
                "min_pts": r.model.min_pts,
                "outlier_indices": r.outlier_indices,
                "severity": r.severity,
            })
        }
    };
    let indices = report["outlier_indices"].as_array().cloned().unwrap_or_default();
    let mut stdout = std::io::stdout().lock();
    for i in &indices {
        writeln!(stdout, "{i}")?;
    }
    if let Some(path) = &a.out {
        write_json(path, &report)?;
    }
    eprintln!("{} of {} rows flagged", indices.len(), source.raw.n_rows());
    Ok(())
}

fn serve_cmd(a: &ServeArgs) -> Outcome {
    let service = Arc::new(Service::from_dir(&a.bundle_dir)?);
    let rt = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| Failure::Internal(e.to_string()))?;
    rt.block_on(async {
        let listener = tokio::net::TcpListener::bind((a.host.as_str(), a.port)).await?;
        let tasks: Vec<&str> = service.tasks().iter().map(|t| t.as_str()).collect();
        eprintln!("serving {} on http://{}", tasks.join(", "), listener.local_addr()?);
        serve(listener, service).await
    })?;
    Ok(())
}

fn repro_cmd(a: &ReproArgs, seed: u64) -> Outcome<i32> {
    let (run, outcomes) = checks::run_all(seed)?;
    if let Some(dir) = &a.out_dir {
        workflow::write_files(dir, &run.files)?;
        let digest: Vec<String> = run.files.iter().map(|(n, b)| format!("{}  {n}", sha256_hex(b))).collect();
        fs::write(dir.join("SHA256SUMS"), digest.join("\n") + "\n")?;
    }
    for o in &outcomes {
        println!("{o}");
    }
    let failed = outcomes.iter().filter(|o| !o.pass).count();
    println!("{} of {} criteria passed", outcomes.len() - failed, outcomes.len());
    Ok(if failed == 0 { 0 } else { 1 })
}
