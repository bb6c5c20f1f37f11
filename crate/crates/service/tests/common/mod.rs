#![allow(dead_code)]

use std::net::SocketAddr;
use std::path::Path;
use std::time::Duration;

use polyloop_service::{build, IterationView, ServiceConfig, SessionView};
use reqwest::{multipart, Client, StatusCode};
use serde_json::json;

pub const CUBE: &str = "\
v -1 -1 -1
v 1 -1 -1
v 1 1 -1
v -1 1 -1
v -1 -1 1
v 1 -1 1
v 1 1 1
v -1 1 1
f 1 3 2
f 1 4 3
f 5 6 7
f 5 7 8
f 1 2 6
f 1 6 5
f 2 3 7
f 2 7 6
f 3 4 8
f 3 8 7
f 4 1 5
f 4 5 8
";

pub fn test_config(dir: &Path) -> ServiceConfig {
    ServiceConfig {
        workers: 2,
        quality_resolution: 64,
        ..ServiceConfig::for_data_dir(dir)
    }
}

/// Serves the app in-process on an ephemeral port.
pub async fn spawn(config: ServiceConfig) -> (String, tokio::task::JoinHandle<()>) {
    let (app, _) = build(config).await.unwrap();
    let listener = tokio::net::TcpListener::bind(SocketAddr::from(([127, 0, 0, 1], 0)))
        .await
        .unwrap();
    let addr = listener.local_addr().unwrap();
    let handle = tokio::spawn(async move {
        axum::serve(listener, app).await.unwrap();
    });
    (format!("http://{addr}"), handle)
}

pub async fn upload(client: &Client, base: &str, obj: &str, name: &str) -> reqwest::Response {
    let part = multipart::Part::text(obj.to_string()).file_name(format!("{name}.obj"));
    let form = multipart::Form::new().part("mesh", part).text("seed", "7");
    client
        .post(format!("{base}/sessions"))
        .multipart(form)
        .send()
        .await
        .unwrap()
}

pub async fn create(client: &Client, base: &str, obj: &str) -> SessionView {
    let resp = upload(client, base, obj, "cube").await;
    assert_eq!(resp.status(), StatusCode::CREATED);
    resp.json().await.unwrap()
}

/// Polls until the iteration is available, honouring `Retry-After` loosely.
pub async fn wait_iteration(client: &Client, base: &str, id: &str, k: usize) -> IterationView {
    for _ in 0..600 {
        let resp = client
            .get(format!("{base}/sessions/{id}/iterations/{k}"))
            .send()
            .await
            .unwrap();
        match resp.status() {
            StatusCode::OK => return resp.json().await.unwrap(),
            StatusCode::SERVICE_UNAVAILABLE => {
                assert!(resp.headers().contains_key("retry-after"));
                tokio::time::sleep(Duration::from_millis(50)).await;
            }
            s => panic!("iteration {k}: unexpected status {s}: {}", resp.text().await.unwrap()),
        }
    }
    panic!("iteration {k} never became available");
}

pub async fn rate(client: &Client, base: &str, id: &str, k: usize, ratings: [u8; 4]) -> reqwest::Response {
    client
        .post(format!("{base}/sessions/{id}/ratings"))
        .json(&json!({ "iteration": k, "ratings": ratings }))
        .send()
        .await
        .unwrap()
}

pub async fn terminate(client: &Client, base: &str, id: &str, reason: &str) -> reqwest::Response {
    client
        .post(format!("{base}/sessions/{id}/terminate"))
        .json(&json!({ "reason": reason }))
        .send()
        .await
        .unwrap()
}

pub async fn export(client: &Client, base: &str, query: &str) -> String {
    let resp = client.get(format!("{base}/export{query}")).send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    assert_eq!(resp.headers()["content-type"], "application/x-ndjson");
    resp.text().await.unwrap()
}
