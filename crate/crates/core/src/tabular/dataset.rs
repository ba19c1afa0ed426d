use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use super::recipe::Transform;
use crate::datagen::{DemandRecord, ShipmentRecord};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ColumnKind {
    Numeric,
    Categorical,
}

impl ColumnKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ColumnKind::Numeric => "numeric",
            ColumnKind::Categorical => "categorical",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "cells", rename_all = "snake_case")]
pub enum ColumnData {
    Numeric(Vec<Option<f64>>),
    Categorical(Vec<Option<String>>),
}

impl ColumnData {
    pub fn kind(&self) -> ColumnKind {
        match self {
            ColumnData::Numeric(_) => ColumnKind::Numeric,
            ColumnData::Categorical(_) => ColumnKind::Categorical,
        }
    }

    pub fn len(&self) -> usize {
        match self {
            ColumnData::Numeric(v) => v.len(),
            ColumnData::Categorical(v) => v.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn select(&self, idx: &[usize]) -> ColumnData {
        match self {
            ColumnData::Numeric(v) => ColumnData::Numeric(idx.iter().map(|&i| v[i]).collect()),
            ColumnData::Categorical(v) => ColumnData::Categorical(idx.iter().map(|&i| v[i].clone()).collect()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Column {
    pub name: String,
    pub data: ColumnData,
}

impl Column {
    pub fn numeric(name: impl Into<String>, values: Vec<f64>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Numeric(values.into_iter().map(Some).collect()),
        }
    }

    pub fn numeric_opt(name: impl Into<String>, values: Vec<Option<f64>>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Numeric(values),
        }
    }

    pub fn categorical<S: Into<String>>(name: impl Into<String>, values: impl IntoIterator<Item = S>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Categorical(values.into_iter().map(|s| Some(s.into())).collect()),
        }
    }

    pub fn categorical_opt(name: impl Into<String>, values: Vec<Option<String>>) -> Self {
        Self {
            name: name.into(),
            data: ColumnData::Categorical(values),
        }
    }
}

/// Ordered (name, kind) pairs.
pub type Schema = Vec<(String, ColumnKind)>;

/// Column-major table. Every operation returns a new value.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    columns: Vec<Column>,
    n_rows: usize,
    target: Option<String>,
    transform_log: Vec<Transform>,
}

impl Dataset {
    pub fn new(columns: Vec<Column>) -> Result<Self> {
        let n_rows = columns.first().map_or(0, |c| c.data.len());
        let mut seen = HashSet::new();
        for c in &columns {
            if !seen.insert(c.name.as_str()) {
                return Err(Error::invalid("columns", format!("duplicate column name `{}`", c.name)));
            }
            if c.data.len() != n_rows {
                return Err(Error::invalid(
                    "columns",
                    format!("column `{}` has {} cells, expected {n_rows}", c.name, c.data.len()),
                ));
            }
        }
        Ok(Self {
            columns,
            n_rows,
            target: None,
            transform_log: Vec::new(),
        })
    }

    pub fn with_target(mut self, target: &str) -> Result<Self> {
        match self.column(target) {
            Some(c) if c.data.kind() == ColumnKind::Numeric => {
                self.target = Some(target.to_string());
                Ok(self)
            }
            Some(c) => Err(Error::ColumnKind {
                column: target.to_string(),
                expected: "numeric",
                found: c.data.kind().as_str(),
            }),
            None => Err(Error::UnknownColumn(target.to_string())),
        }
    }

    pub fn target(&self) -> Option<&str> {
        self.target.as_deref()
    }

    pub fn transform_log(&self) -> &[Transform] {
        &self.transform_log
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.columns.len()
    }

    pub fn columns(&self) -> &[Column] {
        &self.columns
    }

    pub fn column_names(&self) -> Vec<String> {
        self.columns.iter().map(|c| c.name.clone()).collect()
    }

    pub fn schema(&self) -> Schema {
        self.columns.iter().map(|c| (c.name.clone(), c.data.kind())).collect()
    }

    pub fn column(&self, name: &str) -> Option<&Column> {
        self.columns.iter().find(|c| c.name == name)
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c.name == name)
    }

    pub(crate) fn require(&self, name: &str) -> Result<&Column> {
        self.column(name).ok_or_else(|| Error::UnknownColumn(name.to_string()))
    }

    pub fn numeric_cells(&self, name: &str) -> Result<&[Option<f64>]> {
        match &self.require(name)?.data {
            ColumnData::Numeric(v) => Ok(v),
            ColumnData::Categorical(_) => Err(Error::ColumnKind {
                column: name.to_string(),
                expected: "numeric",
                found: "categorical",
            }),
        }
    }

    pub fn categorical_cells(&self, name: &str) -> Result<&[Option<String>]> {
        match &self.require(name)?.data {
            ColumnData::Categorical(v) => Ok(v),
            ColumnData::Numeric(_) => Err(Error::ColumnKind {
                column: name.to_string(),
                expected: "categorical",
                found: "numeric",
            }),
        }
    }

    /// Numeric column with every cell present.
    pub fn numeric_column(&self, name: &str) -> Result<Vec<f64>> {
        self.numeric_cells(name)?
            .iter()
            .map(|c| c.ok_or_else(|| Error::MissingCells(name.to_string())))
            .collect()
    }

    /// Row-major matrix of the named numeric columns, in the given order.
    pub fn to_matrix(&self, names: &[String]) -> Result<Matrix> {
        let cols = names.iter().map(|n| self.numeric_column(n)).collect::<Result<Vec<_>>>()?;
        if cols.is_empty() {
            return Ok(Matrix::zeros(self.n_rows, 0));
        }
        Ok(Matrix::from_columns(&cols))
    }

    pub fn select_rows(&self, idx: &[usize]) -> Dataset {
        Dataset {
            columns: self
                .columns
                .iter()
                .map(|c| Column {
                    name: c.name.clone(),
                    data: c.data.select(idx),
                })
                .collect(),
            n_rows: idx.len(),
            target: self.target.clone(),
            transform_log: self.transform_log.clone(),
        }
    }

    /// Copy with different columns and one more log entry; row count taken from the columns.
    pub(crate) fn derive(&self, columns: Vec<Column>, step: Transform) -> Dataset {
        let n_rows = columns.first().map_or(self.n_rows, |c| c.data.len());
        let mut log = self.transform_log.clone();
        log.push(step);
        let target = self
            .target
            .clone()
            .filter(|t| columns.iter().any(|c| &c.name == t));
        Dataset {
            columns,
            n_rows,
            target,
            transform_log: log,
        }
    }

    pub fn from_shipments(records: &[ShipmentRecord]) -> Dataset {
        let num = |name: &str, f: fn(&ShipmentRecord) -> f64| Column::numeric(name, records.iter().map(f).collect());
        let cat = |name: &str, f: fn(&ShipmentRecord) -> String| Column::categorical(name, records.iter().map(f));
        Dataset::new(vec![
            cat("shipment_id", |r| r.shipment_id.clone()),
            cat("transport_mode", |r| r.transport_mode.to_string()),
            cat("vehicle_type", |r| r.vehicle_type.to_string()),
            cat("fuel_type", |r| r.fuel_type.to_string()),
            num("priority", |r| f64::from(r.priority)),
            num("distance_km", |r| r.distance_km),
            num("avg_speed_kmh", |r| r.avg_speed_kmh),
            num("elevation_change_m", |r| r.elevation_change_m),
            num("traffic_level", |r| r.traffic_level),
            num("traffic_impact_score", |r| r.traffic_impact_score),
            num("fuel_consumed_liters", |r| r.fuel_consumed_liters),
            num("estimated_emissions_kg_co2", |r| r.estimated_emissions_kg_co2),
            num("package_weight_kg", |r| r.package_weight_kg),
            num("cargo_weight_tons", |r| r.cargo_weight_tons),
            num("transit_time_days", |r| r.transit_time_days),
        ])
        .expect("fixed shipment schema")
    }

    pub fn from_demand(records: &[DemandRecord]) -> Dataset {
        Dataset::new(vec![
            Column::numeric("day_index", records.iter().map(|r| r.day_index as f64).collect()),
            Column::categorical("region_id", records.iter().map(|r| r.region_id.to_string())),
            Column::categorical("day_of_week", records.iter().map(|r| r.day_of_week.to_string())),
            Column::numeric("deliveries", records.iter().map(|r| r.deliveries).collect()),
        ])
        .expect("fixed demand schema")
    }

    /// Row `i` rendered as strings (missing cells are empty).
    pub fn row_strings(&self, i: usize) -> Vec<String> {
        self.columns
            .iter()
            .map(|c| match &c.data {
                ColumnData::Numeric(v) => v[i].map(|x| x.to_string()).unwrap_or_default(),
                ColumnData::Categorical(v) => v[i].clone().unwrap_or_default(),
            })
            .collect()
    }
}
