//! Task definitions and the feature pipelines that turn raw corpora into
//! design matrices.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::evalx::{comparison_report, split_three_way, EvalReport, ModelEntry, SplitPlan, DEFAULT_FRACTIONS};
use crate::linalg::Matrix;
use crate::regress::{default_spec, fit, Family, RegressorModel, RegressorSpec};
use crate::tabular::{fit as fit_recipe, replay, Dataset, DerivedFeature, Encoding, FittedRecipe, Imputation, Recipe, Scaling};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Task {
    Emissions,
    Transit,
    Demand,
    Cluster,
}

impl Task {
    pub const ALL: [Task; 4] = [Task::Emissions, Task::Transit, Task::Demand, Task::Cluster];

    pub fn as_str(self) -> &'static str {
        match self {
            Task::Emissions => "emissions",
            Task::Transit => "transit",
            Task::Demand => "demand",
            Task::Cluster => "cluster",
        }
    }

    pub fn parse(s: &str) -> Result<Task> {
        Task::ALL
            .into_iter()
            .find(|t| t.as_str() == s)
            .ok_or_else(|| Error::invalid("task", format!("unknown task {s:?}")))
    }

    /// Regression target column; `None` for clustering.
    pub fn target(self) -> Option<&'static str> {
        match self {
            Task::Emissions => Some(EMISSIONS_TARGET),
            Task::Transit => Some(TRANSIT_TARGET),
            Task::Demand => Some("deliveries"),
            Task::Cluster => None,
        }
    }

    pub fn uses_shipments(self) -> bool {
        self != Task::Demand
    }
}

impl std::fmt::Display for Task {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const EMISSIONS_TARGET: &str = "estimated_emissions_kg_co2";
pub const TRANSIT_TARGET: &str = "transit_time_days";

/// Raw numeric shipment fields used as model inputs (both targets excluded).
pub const SHIPMENT_NUMERIC_FEATURES: [&str; 9] = [
    "priority",
    "distance_km",
    "avg_speed_kmh",
    "elevation_change_m",
    "traffic_level",
    "traffic_impact_score",
    "fuel_consumed_liters",
    "package_weight_kg",
    "cargo_weight_tons",
];

pub const CLUSTER_FEATURES: [&str; 3] = ["distance_km", "traffic_level", TRANSIT_TARGET];

pub fn shipment_recipe() -> Recipe {
    let numeric = SHIPMENT_NUMERIC_FEATURES.iter().map(|s| s.to_string());
    Recipe {
        impute: numeric.clone().map(|c| (c, Imputation::Mean)).collect(),
        dedupe: false,
        encoding: ["transport_mode", "vehicle_type", "fuel_type"]
            .into_iter()
            .map(|c| (c.to_string(), Encoding::OneHot))
            .collect(),
        scaling: numeric
            .chain(std::iter::once("fuel_efficiency".to_string()))
            .map(|c| (c, Scaling::ZScore))
            .collect(),
        poly_degree: 1,
        interactions: false,
        poly_columns: None,
        derived: vec![DerivedFeature {
            name: "fuel_efficiency".into(),
            numerator: "distance_km".into(),
            denominator: "fuel_consumed_liters".into(),
        }],
    }
}

pub fn demand_recipe() -> Recipe {
    Recipe {
        encoding: ["region_id", "day_of_week"]
            .into_iter()
            .map(|c| (c.to_string(), Encoding::OneHot))
            .collect(),
        ..Recipe::default()
    }
}

pub fn cluster_recipe() -> Recipe {
    Recipe {
        scaling: CLUSTER_FEATURES.iter().map(|c| (c.to_string(), Scaling::ZScore)).collect(),
        ..Recipe::default()
    }
}

/// Fitted recipe plus the ordered model inputs selected from its output.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeaturePipeline {
    pub task: Task,
    pub recipe: FittedRecipe,
    pub features: Vec<String>,
}

/// Dummy columns of `prefix`, minus the first (reference) level.
fn dummies_after_first(columns: &[String], prefix: &str) -> Vec<String> {
    columns.iter().filter(|c| c.starts_with(prefix)).skip(1).cloned().collect()
}

impl FeaturePipeline {
    /// Fits scaling statistics and vocabularies on `train` only.
    ///
    /// Shipment tasks drop every transport_mode dummy (vehicle_type already
    /// determines the mode) and the reference level of each remaining
    /// categorical, so the linear models see a full-rank design.
    pub fn fit(task: Task, train: &Dataset) -> Result<Self> {
        let recipe = match task {
            Task::Emissions | Task::Transit => shipment_recipe(),
            Task::Demand => demand_recipe(),
            Task::Cluster => cluster_recipe(),
        };
        let (fitted, out) = fit_recipe(&recipe, train)?;
        let cols = out.column_names();
        let features = match task {
            Task::Emissions | Task::Transit => {
                let mut f: Vec<String> = SHIPMENT_NUMERIC_FEATURES.iter().map(|s| s.to_string()).collect();
                f.push("fuel_efficiency".into());
                f.extend(dummies_after_first(&cols, "vehicle_type="));
                f.extend(dummies_after_first(&cols, "fuel_type="));
                f
            }
            Task::Demand => {
                let mut f = dummies_after_first(&cols, "region_id=");
                f.extend(dummies_after_first(&cols, "day_of_week="));
                f
            }
            Task::Cluster => CLUSTER_FEATURES.iter().map(|s| s.to_string()).collect(),
        };
        Ok(Self {
            task,
            recipe: fitted,
            features,
        })
    }

    pub fn transform(&self, raw: &Dataset) -> Result<Matrix> {
        replay(&self.recipe, raw)?.to_matrix(&self.features)
    }

    pub fn target_values(&self, raw: &Dataset) -> Result<Vec<f64>> {
        let t = self.task.target().ok_or_else(|| Error::invalid("task", "cluster task has no target"))?;
        raw.numeric_column(t)
    }

    /// Hex SHA-256 of the serialized pipeline.
    pub fn hash(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("pipeline serializes").as_bytes())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Train/valid/test matrices for one task under one split.
#[derive(Clone, Debug)]
pub struct Prepared {
    pub task: Task,
    pub pipeline: FeaturePipeline,
    pub split: SplitPlan,
    pub x_train: Matrix,
    pub y_train: Vec<f64>,
    pub x_valid: Matrix,
    pub y_valid: Vec<f64>,
    pub x_test: Matrix,
    pub y_test: Vec<f64>,
}

pub fn prepare(task: Task, raw: &Dataset, seed: u64) -> Result<Prepared> {
    if task == Task::Cluster {
        return Err(Error::invalid("task", "cluster task is not a regression task"));
    }
    let split = split_three_way(raw.n_rows(), DEFAULT_FRACTIONS, seed)?;
    prepare_with(task, raw, split)
}

pub fn prepare_with(task: Task, raw: &Dataset, split: SplitPlan) -> Result<Prepared> {
    let train = raw.select_rows(&split.train_indices);
    let pipeline = FeaturePipeline::fit(task, &train)?;
    let part = |idx: &[usize]| -> Result<(Matrix, Vec<f64>)> {
        let d = raw.select_rows(idx);
        Ok((pipeline.transform(&d)?, pipeline.target_values(&d)?))
    };
    let (x_train, y_train) = part(&split.train_indices)?;
    let (x_valid, y_valid) = part(&split.valid_indices)?;
    let (x_test, y_test) = part(&split.test_indices)?;
    Ok(Prepared {
        task,
        pipeline,
        split,
        x_train,
        y_train,
        x_valid,
        y_valid,
        x_test,
        y_test,
    })
}

impl Prepared {
    pub fn fit(&self, spec: &RegressorSpec) -> Result<RegressorModel> {
        fit(spec, &self.x_train, &self.y_train, &self.pipeline.features)
    }

    /// Train and validation rows stacked, for cross-validated tuning.
    pub fn train_and_valid(&self) -> (Matrix, Vec<f64>) {
        let p = self.x_train.cols();
        let mut data = self.x_train.as_slice().to_vec();
        data.extend_from_slice(self.x_valid.as_slice());
        let mut y = self.y_train.clone();
        y.extend_from_slice(&self.y_valid);
        (Matrix::new(y.len(), p, data).expect("stacked shape"), y)
    }

    pub fn report(&self, models: &[(String, RegressorModel)], seed: u64, corpus_hash: &str) -> Result<EvalReport> {
        let hash = self.pipeline.hash();
        let entries: Vec<ModelEntry<'_>> = models
            .iter()
            .map(|(name, model)| ModelEntry {
                name,
                model,
                pipeline_hash: &hash,
            })
            .collect();
        comparison_report(self.task.as_str(), &entries, &self.x_test, &self.y_test, seed, corpus_hash)
    }
}

/// Fits every family with frozen defaults, in `Family::ZOO` order.
pub fn train_zoo(prepared: &Prepared, families: &[Family], seed: u64) -> Result<Vec<(String, RegressorModel)>> {
    families
        .par_iter()
        .map(|f| Ok((f.to_string(), prepared.fit(&default_spec(*f, seed))?)))
        .collect()
}
