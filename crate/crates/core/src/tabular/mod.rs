//! Column-typed datasets, CSV ingestion and the preprocessing recipe.

mod dataset;
mod io;
mod recipe;

pub use dataset::{Column, ColumnData, ColumnKind, Dataset, Schema};
pub use io::{read_csv, read_csv_from, write_csv};
pub use recipe::{
    engineer_features, fit, preprocess, replay, scale, DerivedFeature, Encoding, FittedRecipe, Imputation, Recipe,
    Scaling, Transform,
};

use ColumnKind::{Categorical, Numeric};

/// Corpus CSV header, in file order.
pub const SHIPMENT_COLUMNS: [(&str, ColumnKind); 15] = [
    ("shipment_id", Categorical),
    ("transport_mode", Categorical),
    ("vehicle_type", Categorical),
    ("fuel_type", Categorical),
    ("priority", Numeric),
    ("distance_km", Numeric),
    ("avg_speed_kmh", Numeric),
    ("elevation_change_m", Numeric),
    ("traffic_level", Numeric),
    ("traffic_impact_score", Numeric),
    ("fuel_consumed_liters", Numeric),
    ("estimated_emissions_kg_co2", Numeric),
    ("package_weight_kg", Numeric),
    ("cargo_weight_tons", Numeric),
    ("transit_time_days", Numeric),
];

pub fn shipment_schema() -> Schema {
    SHIPMENT_COLUMNS.iter().map(|(n, k)| (n.to_string(), *k)).collect()
}

pub fn demand_schema() -> Schema {
    vec![
        ("day_index".into(), Numeric),
        ("region_id".into(), Categorical),
        ("day_of_week".into(), Categorical),
        ("deliveries".into(), Numeric),
    ]
}
