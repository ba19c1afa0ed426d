//! Shared fixtures for the benchmarks.

use greenroute::cluster::route_features;
use greenroute::datagen::generate;
use greenroute::pipeline::{prepare, Prepared};
use greenroute::{Dataset, GeneratorSpec, Matrix, Task};

pub const SEED: u64 = 7;

pub fn shipments(n: usize) -> Dataset {
    Dataset::from_shipments(&generate(&GeneratorSpec::new(n, SEED)).expect("valid spec").records)
}

pub fn emissions(n: usize) -> Prepared {
    prepare(Task::Emissions, &shipments(n), SEED).expect("emissions split")
}

/// z-scored route features of an `n`-row corpus.
pub fn routes(n: usize) -> Matrix {
    route_features(&shipments(n)).expect("route features").1
}
