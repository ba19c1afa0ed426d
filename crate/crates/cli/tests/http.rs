use std::io::{Read, Write};
use std::sync::Arc;

use axum::http::StatusCode;
use serde_json::{json, Value};

use greenroute::datagen::generate;
use greenroute::{Family, GeneratorSpec, ModelBundle, ShipmentRecord, Task};
use greenroute_cli::checks::{http_parity, post, request_body, route_body};
use greenroute_cli::server::{router, serve, Service};
use greenroute_cli::workflow::{train_cluster, train_regression, Source};

fn bundles() -> Vec<ModelBundle> {
    let corpus = generate(&GeneratorSpec::new(800, 3)).unwrap();
    let src = Source::from_csv_bytes(Task::Emissions, &corpus.to_csv_bytes().unwrap()).unwrap();
    let mut out = Vec::new();
    for (task, family) in [(Task::Emissions, Family::Gbt), (Task::Transit, Family::Mlp)] {
        out.push(train_regression(task, &src, &[family], false, 3).unwrap().bundle(None, &src, 0).unwrap());
    }
    out.push(train_cluster(&src, Some(3), 3, 0).unwrap().0);
    out
}

fn records(n: usize) -> Vec<ShipmentRecord> {
    generate(&GeneratorSpec::new(n, 99)).unwrap().records
}

fn runtime() -> tokio::runtime::Runtime {
    tokio::runtime::Builder::new_multi_thread().enable_all().build().unwrap()
}

fn call(service: Service, path: &str, body: &Value) -> (StatusCode, Value) {
    let app = router(Arc::new(service));
    runtime().block_on(post(&app, path, body))
}

#[test]
fn online_predictions_equal_offline_bit_for_bit() {
    let (total, mismatches, unstable) = http_parity(&bundles(), &records(100)).unwrap();
    assert_eq!(total, 300);
    assert_eq!(mismatches, 0);
    assert_eq!(unstable, 0);
}

#[test]
fn health_and_model_listing() {
    let app = router(Arc::new(Service::new(bundles()).unwrap()));
    runtime().block_on(async {
        use tower::ServiceExt;
        let req = axum::http::Request::get("/v1/health").body(axum::body::Body::empty()).unwrap();
        let resp = app.clone().oneshot(req).await.unwrap();
        assert_eq!(resp.status(), StatusCode::OK);
        let body = axum::body::to_bytes(resp.into_body(), usize::MAX).await.unwrap();
        assert_eq!(serde_json::from_slice::<Value>(&body).unwrap(), json!({"status": "ok"}));

        let req = axum::http::Request::get("/v1/models").body(axum::body::Body::empty()).unwrap();
        let body = axum::body::to_bytes(app.oneshot(req).await.unwrap().into_body(), usize::MAX).await.unwrap();
        let list: Value = serde_json::from_slice(&body).unwrap();
        let tasks: Vec<&str> = list.as_array().unwrap().iter().map(|m| m["task"].as_str().unwrap()).collect();
        assert_eq!(tasks, ["emissions", "transit", "cluster"]);
        for m in list.as_array().unwrap() {
            assert_eq!(m["bundle_version"], "greenroute-bundle/1");
            assert_eq!(m["corpus_hash"].as_str().unwrap().len(), 64);
        }
    });
}

#[test]
fn missing_field_is_a_400_naming_it() {
    let mut body = request_body(&records(1)[0]);
    body.as_object_mut().unwrap().remove("distance_km");
    let (status, resp) = call(Service::new(bundles()).unwrap(), "/v1/predict/emissions", &body);
    assert_eq!(status, StatusCode::BAD_REQUEST);
    assert_eq!(resp["field"], "distance_km");
    assert!(resp["error"].as_str().unwrap().contains("distance_km"));
}

#[test]
fn mistyped_and_unknown_fields_are_400() {
    let base = request_body(&records(1)[0]);
    for (field, value) in [("priority", json!(1.5)), ("avg_speed_kmh", json!("fast")), ("fuel_type", json!(3)), ("colour", json!("red"))] {
        let mut body = base.clone();
        body[field] = value;
        let (status, resp) = call(Service::new(bundles()).unwrap(), "/v1/predict/transit", &body);
        assert_eq!(status, StatusCode::BAD_REQUEST, "{field}");
        assert_eq!(resp["field"], field);
    }
}

#[test]
fn invariant_violations_are_422() {
    let base = request_body(&records(1)[0]);
    let cases = [
        ("distance_km", json!(-3.0)),
        ("fuel_consumed_liters", json!(0.0)),
        ("traffic_level", json!(1.5)),
        ("priority", json!(7)),
        ("transport_mode", json!("Teleport")),
    ];
    for (field, value) in cases {
        let mut body = base.clone();
        body[field] = value;
        let (status, resp) = call(Service::new(bundles()).unwrap(), "/v1/predict/emissions", &body);
        assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY, "{field}: {resp}");
        assert_eq!(resp["field"], field);
    }
    // each category valid alone, but a ship does not run on electricity
    let mut body = base.clone();
    body["transport_mode"] = json!("Ship");
    body["vehicle_type"] = json!("CargoShip");
    body["fuel_type"] = json!("Electric");
    let (status, _) = call(Service::new(bundles()).unwrap(), "/v1/predict/emissions", &body);
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);

    let (status, _) = call(
        Service::new(bundles()).unwrap(),
        "/v1/cluster/assign",
        &json!({"distance_km": 10.0, "traffic_level": 0.3, "transit_time_days": -1.0}),
    );
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[test]
fn task_without_a_bundle_is_404() {
    let transit_only: Vec<ModelBundle> = bundles().into_iter().filter(|b| b.task == Task::Transit).collect();
    let body = request_body(&records(1)[0]);
    let (status, _) = call(Service::new(transit_only.clone()).unwrap(), "/v1/predict/emissions", &body);
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(Service::new(transit_only.clone()).unwrap(), "/v1/cluster/assign", &route_body(&records(1)[0]));
    assert_eq!(status, StatusCode::NOT_FOUND);
    let (status, _) = call(Service::new(transit_only).unwrap(), "/v1/predict/demand", &body);
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[test]
fn repeated_posts_return_identical_bodies() {
    let app = router(Arc::new(Service::new(bundles()).unwrap()));
    let body = request_body(&records(1)[0]);
    runtime().block_on(async {
        let first = post(&app, "/v1/predict/transit", &body).await;
        for _ in 0..5 {
            assert_eq!(post(&app, "/v1/predict/transit", &body).await, first);
        }
    });
}

#[test]
fn internal_failures_expose_only_an_id() {
    // a demand bundle relabelled as emissions cannot replay a shipment row
    let corpus = generate(&GeneratorSpec::new(300, 4)).unwrap();
    let demand = Source::generated(Task::Demand, 4).unwrap();
    let mut broken = train_regression(Task::Demand, &demand, &[Family::Ols], false, 4).unwrap().bundle(None, &demand, 0).unwrap();
    broken.task = Task::Emissions;
    let (status, resp) = call(Service::new(vec![broken]).unwrap(), "/v1/predict/emissions", &request_body(&corpus.records[0]));
    assert_eq!(status, StatusCode::INTERNAL_SERVER_ERROR);
    let keys: Vec<&String> = resp.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["error", "error_id"]);
    assert_eq!(resp["error"], "internal error");
}

#[test]
fn service_needs_one_bundle_per_task() {
    assert!(Service::new(Vec::new()).is_err());
    let b = bundles().remove(0);
    assert!(Service::new(vec![b.clone(), b]).is_err());
}

#[test]
fn serves_over_tcp() {
    let rt = runtime();
    let service = Arc::new(Service::new(bundles()).unwrap());
    let addr = rt.block_on(async {
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        tokio::spawn(serve(listener, service));
        addr
    });
    let body = serde_json::to_string(&route_body(&records(1)[0])).unwrap();
    let mut stream = std::net::TcpStream::connect(addr).unwrap();
    write!(
        stream,
        "POST /v1/cluster/assign HTTP/1.1\r\nHost: localhost\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    )
    .unwrap();
    let mut reply = String::new();
    stream.read_to_string(&mut reply).unwrap();
    assert!(reply.starts_with("HTTP/1.1 200"), "{reply}");
    let json: Value = serde_json::from_str(reply.split("\r\n\r\n").nth(1).unwrap()).unwrap();
    assert!(json["cluster"].as_u64().unwrap() < 3);
}
