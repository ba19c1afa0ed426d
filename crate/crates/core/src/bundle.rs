//! Self-describing model files.
//!
//! A bundle file is a JSON envelope
//! `{"bundle_version": .., "checksum": "sha256:<hex>", "payload": {..}}`
//! where the checksum covers the version string, a newline and the exact
//! payload bytes. Floats are written in shortest round-trip form, so a loaded
//! model reproduces the saved doubles exactly.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::value::RawValue;

use crate::cluster::KMeansModel;
use crate::error::{Error, Result};
use crate::evalx::{EvalReport, SplitPlan};
use crate::pipeline::{sha256_hex, FeaturePipeline, Task};
use crate::regress::RegressorModel;
use crate::tabular::Dataset;

pub const BUNDLE_VERSION: &str = "greenroute-bundle/1";
pub const BUNDLE_EXTENSION: &str = ".bundle.json";

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BundleModel {
    Regressor(RegressorModel),
    KMeans(KMeansModel),
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelBundle {
    pub task: Task,
    /// Model identifier reported by the service, e.g. "gbt".
    pub model_id: String,
    pub recipe_with_fitted_stats: FeaturePipeline,
    pub model: BundleModel,
    pub feature_names: Vec<String>,
    pub training_report: Option<EvalReport>,
    /// Unix seconds.
    pub created_at: u64,
    pub corpus_hash: String,
    /// Split used at training time, so evaluation can find the test rows again.
    pub split: Option<SplitPlan>,
}

#[derive(Serialize)]
struct EnvelopeOut<'a> {
    bundle_version: &'a str,
    checksum: String,
    payload: &'a RawValue,
}

#[derive(Deserialize)]
struct EnvelopeIn<'a> {
    bundle_version: String,
    checksum: String,
    #[serde(borrow)]
    payload: &'a RawValue,
}

fn checksum(version: &str, payload: &str) -> String {
    let mut bytes = Vec::with_capacity(version.len() + 1 + payload.len());
    bytes.extend_from_slice(version.as_bytes());
    bytes.push(b'\n');
    bytes.extend_from_slice(payload.as_bytes());
    format!("sha256:{}", sha256_hex(&bytes))
}

impl ModelBundle {
    pub fn to_bytes(&self) -> Result<Vec<u8>> {
        let payload = serde_json::to_string(self)?;
        let raw = RawValue::from_string(payload)?;
        let env = EnvelopeOut {
            bundle_version: BUNDLE_VERSION,
            checksum: checksum(BUNDLE_VERSION, raw.get()),
            payload: &raw,
        };
        let mut out = serde_json::to_vec(&env)?;
        out.push(b'\n');
        Ok(out)
    }

    /// Checksum first (anything unparsable counts as a failed checksum), then
    /// version, then the payload schema.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let env: EnvelopeIn<'_> = serde_json::from_slice(bytes).map_err(|_| Error::Checksum)?;
        if env.checksum != checksum(&env.bundle_version, env.payload.get()) {
            return Err(Error::Checksum);
        }
        if env.bundle_version != BUNDLE_VERSION {
            return Err(Error::BundleVersion(env.bundle_version));
        }
        let de = &mut serde_json::Deserializer::from_str(env.payload.get());
        let bundle: ModelBundle = serde_path_to_error::deserialize(de).map_err(|e| {
            let mut path = match e.path().to_string().as_str() {
                "." => "payload".to_string(),
                p => format!("payload.{p}"),
            };
            let message = e.inner().to_string();
            if let Some(field) = message.strip_prefix("missing field `").and_then(|m| m.split('`').next()) {
                path = format!("{path}.{field}");
            }
            Error::Schema { path, message }
        })?;
        bundle.check()?;
        Ok(bundle)
    }

    fn check(&self) -> Result<()> {
        let schema = |path: &str, message: &str| Error::Schema {
            path: path.into(),
            message: message.into(),
        };
        if self.feature_names != self.recipe_with_fitted_stats.features {
            return Err(schema(
                "payload.feature_names",
                "does not match the features selected by the stored recipe",
            ));
        }
        if self.task != self.recipe_with_fitted_stats.task {
            return Err(schema("payload.task", "does not match the stored recipe's task"));
        }
        match (&self.model, self.task) {
            (BundleModel::KMeans(m), Task::Cluster) if m.centroids.cols() == self.feature_names.len() => Ok(()),
            (BundleModel::Regressor(m), t) if t != Task::Cluster && m.feature_names == self.feature_names => Ok(()),
            _ => Err(schema("payload.model", "model kind or width does not fit the task and features")),
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_bytes()?)?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_bytes(&fs::read(path)?)
    }

    /// `<dir>/<task>.bundle.json`
    pub fn default_path(dir: impl AsRef<Path>, task: Task) -> PathBuf {
        dir.as_ref().join(format!("{}{}", task.as_str(), BUNDLE_EXTENSION))
    }

    /// Raw rows in, predictions out: replay the stored recipe, select the
    /// stored features, apply the model.
    pub fn predict(&self, raw: &Dataset) -> Result<Vec<f64>> {
        let x = self.recipe_with_fitted_stats.transform(raw)?;
        match &self.model {
            BundleModel::Regressor(m) => m.predict(&x),
            BundleModel::KMeans(_) => Err(Error::invalid("task", "cluster bundles assign clusters, use assign()")),
        }
    }

    pub fn assign(&self, raw: &Dataset) -> Result<Vec<usize>> {
        let x = self.recipe_with_fitted_stats.transform(raw)?;
        match &self.model {
            BundleModel::KMeans(m) => Ok(x.row_iter().map(|r| m.predict_row(r)).collect()),
            BundleModel::Regressor(_) => Err(Error::invalid("task", "regression bundles predict, use predict()")),
        }
    }
}

pub fn save_bundle(bundle: &ModelBundle, path: impl AsRef<Path>) -> Result<()> {
    bundle.save(path)
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<ModelBundle> {
    ModelBundle::load(path)
}

/// Every `*.bundle.json` in `dir`, sorted by file name.
pub fn discover_bundles(dir: impl AsRef<Path>) -> Result<Vec<(PathBuf, ModelBundle)>> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.file_name().and_then(|n| n.to_str()).is_some_and(|n| n.ends_with(BUNDLE_EXTENSION)))
        .collect();
    paths.sort();
    paths.into_iter().map(|p| Ok((p.clone(), ModelBundle::load(&p)?))).collect()
}
