//! HTTP prediction service over bundles loaded once at startup.

use std::collections::BTreeMap;
use std::path::Path;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde_json::{json, Map, Value};

use greenroute::bundle::{discover_bundles, BUNDLE_VERSION};
use greenroute::datagen::{categories_consistent, FuelType, TransportMode, VehicleType};
use greenroute::pipeline::{CLUSTER_FEATURES, EMISSIONS_TARGET, TRANSIT_TARGET};
use greenroute::tabular::{Column, ColumnKind, SHIPMENT_COLUMNS};
use greenroute::{Dataset, Error, ModelBundle, Result, Task};

/// Immutable after construction; handlers only read.
pub struct Service {
    bundles: BTreeMap<Task, ModelBundle>,
    failures: AtomicU64,
}

impl Service {
    pub fn new(bundles: Vec<ModelBundle>) -> Result<Self> {
        if bundles.is_empty() {
            return Err(Error::Validation {
                field: "bundle_dir".into(),
                reason: "no bundles to serve".into(),
            });
        }
        let mut map = BTreeMap::new();
        for b in bundles {
            let task = b.task;
            if map.insert(task, b).is_some() {
                return Err(Error::Validation {
                    field: "bundle_dir".into(),
                    reason: format!("more than one bundle for task {task}"),
                });
            }
        }
        Ok(Self {
            bundles: map,
            failures: AtomicU64::new(0),
        })
    }

    pub fn from_dir(dir: &Path) -> Result<Self> {
        Self::new(discover_bundles(dir)?.into_iter().map(|(_, b)| b).collect())
    }

    pub fn tasks(&self) -> Vec<Task> {
        self.bundles.keys().copied().collect()
    }

    fn bundle(&self, task: Task) -> std::result::Result<&ModelBundle, ApiError> {
        self.bundles
            .get(&task)
            .ok_or_else(|| ApiError::new(StatusCode::NOT_FOUND, format!("no model loaded for task {task}"), None))
    }

    /// Logs the cause under a fresh id and returns only the id.
    fn internal(&self, err: Error) -> ApiError {
        let id = format!("e{:06}", self.failures.fetch_add(1, Ordering::Relaxed) + 1);
        eprintln!("internal error {id}: {err}");
        ApiError {
            status: StatusCode::INTERNAL_SERVER_ERROR,
            body: json!({ "error": "internal error", "error_id": id }),
        }
    }
}

pub fn router(service: Arc<Service>) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/models", get(models))
        .route("/v1/predict/{task}", post(predict))
        .route("/v1/cluster/assign", post(assign))
        .fallback(|| async { ApiError::new(StatusCode::NOT_FOUND, "no such endpoint".into(), None) })
        .with_state(service)
}

/// Serves until ctrl-c.
pub async fn serve(listener: tokio::net::TcpListener, service: Arc<Service>) -> std::io::Result<()> {
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
}

#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    body: Value,
}

impl ApiError {
    fn new(status: StatusCode, message: String, field: Option<&str>) -> Self {
        let mut body = json!({ "error": message });
        if let Some(f) = field {
            body["field"] = json!(f);
        }
        Self { status, body }
    }

    fn bad(field: &str, message: String) -> Self {
        Self::new(StatusCode::BAD_REQUEST, message, Some(field))
    }

    fn invalid(field: &str, message: String) -> Self {
        Self::new(StatusCode::UNPROCESSABLE_ENTITY, message, Some(field))
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        (self.status, Json(self.body)).into_response()
    }
}

type Reply = std::result::Result<Json<Value>, ApiError>;

async fn health() -> Json<Value> {
    Json(json!({ "status": "ok" }))
}

async fn models(State(s): State<Arc<Service>>) -> Json<Value> {
    let list: Vec<Value> = s
        .bundles
        .values()
        .map(|b| {
            json!({
                "task": b.task,
                "bundle_version": BUNDLE_VERSION,
                "corpus_hash": b.corpus_hash,
                "model": b.model_id,
            })
        })
        .collect();
    Json(Value::Array(list))
}

async fn predict(State(s): State<Arc<Service>>, UrlPath(task): UrlPath<String>, body: Bytes) -> Reply {
    let task = match task.as_str() {
        "emissions" => Task::Emissions,
        "transit" => Task::Transit,
        other => {
            return Err(ApiError::new(StatusCode::NOT_FOUND, format!("unknown task {other:?}"), None));
        }
    };
    let bundle = s.bundle(task)?;
    let row = shipment_row(&object(&body)?)?;
    let pred = bundle.predict(&row).map_err(|e| s.internal(e))?;
    Ok(Json(json!({ "prediction": pred[0], "model": bundle.model_id })))
}

async fn assign(State(s): State<Arc<Service>>, body: Bytes) -> Reply {
    let bundle = s.bundle(Task::Cluster)?;
    let row = route_row(&object(&body)?)?;
    let cluster = bundle.assign(&row).map_err(|e| s.internal(e))?;
    Ok(Json(json!({ "cluster": cluster[0] })))
}

fn object(body: &[u8]) -> std::result::Result<Map<String, Value>, ApiError> {
    match serde_json::from_slice::<Value>(body) {
        Ok(Value::Object(m)) => Ok(m),
        Ok(_) => Err(ApiError::new(StatusCode::BAD_REQUEST, "body must be a JSON object".into(), None)),
        Err(e) => Err(ApiError::new(StatusCode::BAD_REQUEST, format!("malformed JSON: {e}"), None)),
    }
}

fn reject_unknown(obj: &Map<String, Value>, allowed: &[&str]) -> std::result::Result<(), ApiError> {
    match obj.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(ApiError::bad(k, format!("unknown field `{k}`"))),
        None => Ok(()),
    }
}

fn number(obj: &Map<String, Value>, field: &str) -> std::result::Result<f64, ApiError> {
    match obj.get(field) {
        None | Some(Value::Null) => Err(ApiError::bad(field, format!("missing field `{field}`"))),
        Some(v) => v
            .as_f64()
            .ok_or_else(|| ApiError::bad(field, format!("field `{field}` must be a number, got {v}"))),
    }
}

fn text<'a>(obj: &'a Map<String, Value>, field: &str) -> std::result::Result<&'a str, ApiError> {
    match obj.get(field) {
        None | Some(Value::Null) => Err(ApiError::bad(field, format!("missing field `{field}`"))),
        Some(Value::String(s)) => Ok(s),
        Some(v) => Err(ApiError::bad(field, format!("field `{field}` must be a string, got {v}"))),
    }
}

fn require(ok: bool, field: &str, rule: &str) -> std::result::Result<(), ApiError> {
    if ok {
        Ok(())
    } else {
        Err(ApiError::invalid(field, format!("`{field}` {rule}")))
    }
}

fn category<T: std::str::FromStr>(obj: &Map<String, Value>, field: &str) -> std::result::Result<T, ApiError> {
    let s = text(obj, field)?;
    s.parse()
        .map_err(|_| ApiError::invalid(field, format!("`{field}` has unknown value {s:?}")))
}

/// One raw shipment row in CSV column order. Targets may be sent and are ignored;
/// shipment_id is optional since no model reads it.
pub fn shipment_row(obj: &Map<String, Value>) -> std::result::Result<Dataset, ApiError> {
    let names: Vec<&str> = SHIPMENT_COLUMNS.iter().map(|(n, _)| *n).collect();
    reject_unknown(obj, &names)?;

    let mode: TransportMode = category(obj, "transport_mode")?;
    let vehicle: VehicleType = category(obj, "vehicle_type")?;
    let fuel: FuelType = category(obj, "fuel_type")?;
    let priority = match obj.get("priority") {
        None | Some(Value::Null) => return Err(ApiError::bad("priority", "missing field `priority`".into())),
        Some(v) => v
            .as_u64()
            .ok_or_else(|| ApiError::bad("priority", format!("field `priority` must be an integer, got {v}")))?,
    };
    let id = match obj.get("shipment_id") {
        None | Some(Value::Null) => None,
        Some(Value::String(s)) => Some(s.clone()),
        Some(v) => return Err(ApiError::bad("shipment_id", format!("field `shipment_id` must be a string, got {v}"))),
    };

    let mut values = BTreeMap::new();
    for (name, kind) in SHIPMENT_COLUMNS {
        let skip = kind == ColumnKind::Categorical || name == "priority" || name == EMISSIONS_TARGET || name == TRANSIT_TARGET;
        if !skip {
            values.insert(name, number(obj, name)?);
        }
    }
    require((1..=3).contains(&priority), "priority", "must be 1, 2 or 3")?;
    require(values["distance_km"] > 0.0, "distance_km", "must be positive")?;
    require(values["avg_speed_kmh"] > 0.0, "avg_speed_kmh", "must be positive")?;
    require(values["fuel_consumed_liters"] > 0.0, "fuel_consumed_liters", "must be positive")?;
    require((0.0..=1.0).contains(&values["traffic_level"]), "traffic_level", "must lie in [0, 1]")?;
    for f in ["traffic_impact_score", "package_weight_kg", "cargo_weight_tons"] {
        require(values[f] >= 0.0, f, "must be non-negative")?;
    }
    require(
        categories_consistent(mode, vehicle, fuel),
        "vehicle_type",
        &format!("{vehicle} with {fuel} is not a valid {mode} combination"),
    )?;

    let cols = SHIPMENT_COLUMNS
        .iter()
        .map(|&(name, _)| match name {
            "shipment_id" => Column::categorical_opt(name, vec![id.clone()]),
            "transport_mode" => Column::categorical(name, [mode.to_string()]),
            "vehicle_type" => Column::categorical(name, [vehicle.to_string()]),
            "fuel_type" => Column::categorical(name, [fuel.to_string()]),
            "priority" => Column::numeric(name, vec![priority as f64]),
            n if n == EMISSIONS_TARGET || n == TRANSIT_TARGET => Column::numeric_opt(name, vec![None]),
            n => Column::numeric(name, vec![values[n]]),
        })
        .collect();
    Ok(Dataset::new(cols).expect("fixed shipment schema"))
}

/// (distance_km, traffic_level, transit_time_days) as a one-row dataset.
pub fn route_row(obj: &Map<String, Value>) -> std::result::Result<Dataset, ApiError> {
    reject_unknown(obj, &CLUSTER_FEATURES)?;
    let v = CLUSTER_FEATURES
        .iter()
        .map(|f| number(obj, f))
        .collect::<std::result::Result<Vec<_>, _>>()?;
    require(v[0] > 0.0, "distance_km", "must be positive")?;
    require((0.0..=1.0).contains(&v[1]), "traffic_level", "must lie in [0, 1]")?;
    require(v[2] > 0.0, "transit_time_days", "must be positive")?;
    let cols = CLUSTER_FEATURES.iter().zip(v).map(|(f, x)| Column::numeric(*f, vec![x])).collect();
    Ok(Dataset::new(cols).expect("fixed route schema"))
}

impl ApiError {
    pub fn status(&self) -> StatusCode {
        self.status
    }

    pub fn body(&self) -> &Value {
        &self.body
    }
}
