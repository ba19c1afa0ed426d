//! Synthetic logistics corpora, tabular preprocessing, a regression zoo,
//! clustering and evaluation for emissions and transit-time modelling.

pub mod bundle;
pub mod cluster;
pub mod datagen;
pub mod error;
pub mod evalx;
pub mod linalg;
pub mod pipeline;
pub mod regress;
pub mod rng;
pub mod tabular;

pub use bundle::{load_bundle, save_bundle, BundleModel, ModelBundle};
pub use cluster::{DbscanModel, KMeansModel, PcaProjection};
pub use datagen::{GeneratorSpec, ShipmentRecord};
pub use error::{Error, Result};
pub use evalx::{EvalReport, Metrics, SplitPlan};
pub use linalg::Matrix;
pub use pipeline::{FeaturePipeline, Task};
pub use regress::{Family, Hyperparams, RegressorModel, RegressorSpec};
pub use rng::SeededRng;
pub use tabular::{Dataset, FittedRecipe, Recipe};
