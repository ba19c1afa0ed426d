//! Training and bundling steps shared by the subcommands and the repro run.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use greenroute::bundle::{BundleModel, ModelBundle};
use greenroute::cluster::{elbow_select_k, kmeans_fit_with, Elbow, KMeansOptions, ELBOW_RESTARTS};
use greenroute::datagen::{generate, generate_demand, write_demand_csv, Corpus};
use greenroute::pipeline::{prepare, sha256_hex, train_zoo, Prepared, CLUSTER_FEATURES};
use greenroute::regress::{default_grid, grid_search_cv, GridResult, SelectionMetric};
use greenroute::tabular::{demand_schema, read_csv_from, shipment_schema};
use greenroute::{Dataset, Error, EvalReport, Family, FeaturePipeline, GeneratorSpec, RegressorModel, Result, Task};

pub const DEFAULT_N: usize = 5000;
pub const DEMAND_DAYS: usize = 365;
pub const DEMAND_REGIONS: usize = 5;
pub const ELBOW_RANGE: (usize, usize) = (1, 8);
pub const CV_FOLDS: usize = 5;

/// Raw rows plus the SHA-256 of the CSV bytes they were read from.
#[derive(Clone, Debug)]
pub struct Source {
    pub raw: Dataset,
    pub corpus_hash: String,
}

impl Source {
    pub fn from_csv_bytes(task: Task, bytes: &[u8]) -> Result<Self> {
        let schema = if task.uses_shipments() { shipment_schema() } else { demand_schema() };
        Ok(Self {
            raw: read_csv_from(bytes, &schema)?,
            corpus_hash: sha256_hex(bytes),
        })
    }

    pub fn read(task: Task, path: &Path) -> Result<Self> {
        Self::from_csv_bytes(task, &std::fs::read(path)?)
    }

    /// The default corpus for a task. Goes through the CSV encoding so a
    /// generated corpus and the same corpus read from disk are identical.
    pub fn generated(task: Task, seed: u64) -> Result<Self> {
        Self::from_csv_bytes(task, &default_corpus_bytes(task, seed)?)
    }

    pub fn load(task: Task, data: Option<&Path>, seed: u64) -> Result<Self> {
        match data {
            Some(p) => Self::read(task, p),
            None => Self::generated(task, seed),
        }
    }
}

pub fn default_corpus(seed: u64) -> Result<Corpus> {
    generate(&GeneratorSpec::new(DEFAULT_N, seed))
}

pub fn default_corpus_bytes(task: Task, seed: u64) -> Result<Vec<u8>> {
    if task.uses_shipments() {
        default_corpus(seed)?.to_csv_bytes()
    } else {
        let mut buf = Vec::new();
        write_demand_csv(&generate_demand(DEMAND_DAYS, DEMAND_REGIONS, seed)?, &mut buf)?;
        Ok(buf)
    }
}

/// `SOURCE_DATE_EPOCH` when set, otherwise the wall clock.
pub fn created_at() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|v| v.trim().parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

#[derive(Clone, Debug)]
pub struct Trained {
    pub prepared: Prepared,
    pub models: Vec<(String, RegressorModel)>,
    pub report: EvalReport,
    /// One entry per family when the grid was searched.
    pub grids: Vec<(Family, GridResult)>,
}

impl Trained {
    pub fn model(&self, name: &str) -> Option<&RegressorModel> {
        self.models.iter().find(|(n, _)| n == name).map(|(_, m)| m)
    }

    /// Bundle holding `name`, or the report's best model when `name` is `None`.
    pub fn bundle(&self, name: Option<&str>, source: &Source, created_at: u64) -> Result<ModelBundle> {
        let name = name.unwrap_or(&self.report.best_model);
        let model = self
            .model(name)
            .ok_or_else(|| Error::Validation {
                field: "family".into(),
                reason: format!("no trained model named {name:?}"),
            })?
            .clone();
        Ok(ModelBundle {
            task: self.prepared.task,
            model_id: name.to_string(),
            recipe_with_fitted_stats: self.prepared.pipeline.clone(),
            feature_names: self.prepared.pipeline.features.clone(),
            model: BundleModel::Regressor(model),
            training_report: Some(self.report.clone()),
            created_at,
            corpus_hash: source.corpus_hash.clone(),
            split: Some(self.prepared.split.clone()),
        })
    }
}

/// Fits `families` on the train split and scores them on the test split.
/// With `tune`, each family's grid is searched by k-fold CV over train+valid
/// and the winner refit on train.
pub fn train_regression(task: Task, source: &Source, families: &[Family], tune: bool, seed: u64) -> Result<Trained> {
    let prepared = prepare(task, &source.raw, seed)?;
    let (models, grids) = if tune {
        let (x, y) = prepared.train_and_valid();
        let mut models = Vec::new();
        let mut grids = Vec::new();
        for &f in families {
            let g = grid_search_cv(&default_grid(f, seed), &x, &y, CV_FOLDS, SelectionMetric::Mae, seed)?;
            models.push((f.to_string(), prepared.fit(&g.best)?));
            grids.push((f, g));
        }
        (models, grids)
    } else {
        (train_zoo(&prepared, families, seed)?, Vec::new())
    };
    let report = prepared.report(&models, seed, &source.corpus_hash)?;
    Ok(Trained {
        prepared,
        models,
        report,
        grids,
    })
}

/// The three clustering inputs as their own dataset, which is also the
/// request schema of the cluster endpoint.
pub fn cluster_columns(raw: &Dataset) -> Result<Dataset> {
    let cols = CLUSTER_FEATURES
        .iter()
        .map(|c| raw.column(c).cloned().ok_or_else(|| Error::UnknownColumn(c.to_string())))
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(cols)
}

/// k-means over the route features; k from the elbow unless given.
pub fn train_cluster(source: &Source, k: Option<usize>, seed: u64, created_at: u64) -> Result<(ModelBundle, Option<Elbow>)> {
    let data = cluster_columns(&source.raw)?;
    let pipeline = FeaturePipeline::fit(Task::Cluster, &data)?;
    let x = pipeline.transform(&data)?;
    let elbow = match k {
        Some(_) => None,
        None => Some(elbow_select_k(&x, ELBOW_RANGE.0, ELBOW_RANGE.1, seed)?),
    };
    let k = k.unwrap_or_else(|| elbow.as_ref().map_or(1, |e| e.chosen_k));
    let opts = KMeansOptions {
        n_init: ELBOW_RESTARTS,
        ..KMeansOptions::default()
    };
    let model = kmeans_fit_with(&x, k, seed, opts)?;
    let bundle = ModelBundle {
        task: Task::Cluster,
        model_id: "kmeans".into(),
        feature_names: pipeline.features.clone(),
        recipe_with_fitted_stats: pipeline,
        model: BundleModel::KMeans(model),
        training_report: None,
        created_at,
        corpus_hash: source.corpus_hash.clone(),
        split: None,
    };
    Ok((bundle, elbow))
}

/// Everything the full pipeline writes, keyed by file name.
pub struct ReproRun {
    pub files: BTreeMap<String, Vec<u8>>,
    pub corpus: Corpus,
    pub emissions: Trained,
    pub transit: Trained,
    pub demand: Trained,
    pub bundles: Vec<ModelBundle>,
}

/// Corpus, three zoo reports and one bundle per task, all from `seed`.
/// Bundles carry `created_at = 0` so reruns are byte-identical.
pub fn repro_pipeline(seed: u64) -> Result<ReproRun> {
    let corpus = default_corpus(seed)?;
    let corpus_bytes = corpus.to_csv_bytes()?;
    let shipments = Source::from_csv_bytes(Task::Emissions, &corpus_bytes)?;
    let demand_src = Source::generated(Task::Demand, seed)?;

    let emissions = train_regression(Task::Emissions, &shipments, &Family::ZOO, false, seed)?;
    let transit = train_regression(Task::Transit, &shipments, &Family::ZOO, false, seed)?;
    let demand = train_regression(Task::Demand, &demand_src, &Family::ZOO, false, seed)?;

    let mut files = BTreeMap::new();
    let mut manifest = serde_json::to_vec_pretty(&corpus.manifest())?;
    manifest.push(b'\n');
    files.insert("corpus.csv".to_string(), corpus_bytes);
    files.insert("corpus.manifest.json".to_string(), manifest);

    let mut bundles = Vec::new();
    for (trained, src) in [(&emissions, &shipments), (&transit, &shipments), (&demand, &demand_src)] {
        let task = trained.prepared.task;
        files.insert(format!("{task}.report.json"), (trained.report.to_json() + "\n").into_bytes());
        bundles.push(trained.bundle(None, src, 0)?);
    }
    bundles.push(train_cluster(&shipments, None, seed, 0)?.0);
    for b in &bundles {
        files.insert(format!("{}.bundle.json", b.task), b.to_bytes()?);
    }
    Ok(ReproRun {
        files,
        corpus,
        emissions,
        transit,
        demand,
        bundles,
    })
}

pub fn write_files(dir: &Path, files: &BTreeMap<String, Vec<u8>>) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, bytes) in files {
        std::fs::write(dir.join(name), bytes)?;
    }
    Ok(())
}
