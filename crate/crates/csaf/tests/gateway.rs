use std::path::Path;
use std::time::Duration;

use csaf::artifacts::ARTIFACT_FILES;
use csaf::gateway::{self, SceneView, ServeConfig, SessionView, TelemetryFrame};
use futures::StreamExt;
use reqwest::{Client, StatusCode};
use serde_json::{json, Value};
use tempfile::TempDir;

struct Server {
    base: String,
    client: Client,
    dir: TempDir,
}

impl Server {
    async fn start(scene: &str, time_scale: f64) -> Server {
        let dir = tempfile::tempdir().unwrap();
        let cfg = ServeConfig {
            scene: scene.into(),
            data_dir: dir.path().to_path_buf(),
            telemetry_hz: 50.0,
            time_scale,
        };
        let listener = tokio::net::TcpListener::bind("127.0.0.1:0").await.unwrap();
        let addr = listener.local_addr().unwrap();
        tokio::spawn(gateway::serve(cfg, listener, std::future::pending()));
        Server {
            base: format!("http://{addr}"),
            client: Client::new(),
            dir,
        }
    }

    fn url(&self, path: &str) -> String {
        format!("{}{path}", self.base)
    }

    async fn get(&self, path: &str) -> (StatusCode, Value) {
        let r = self.client.get(self.url(path)).send().await.unwrap();
        let status = r.status();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    async fn send(&self, method: reqwest::Method, path: &str, body: Value) -> (StatusCode, Value) {
        let r = self
            .client
            .request(method, self.url(path))
            .json(&body)
            .send()
            .await
            .unwrap();
        let status = r.status();
        (status, r.json().await.unwrap_or(Value::Null))
    }

    async fn post(&self, path: &str, body: Value) -> (StatusCode, Value) {
        self.send(reqwest::Method::POST, path, body).await
    }

    async fn put(&self, path: &str, body: Value) -> (StatusCode, Value) {
        self.send(reqwest::Method::PUT, path, body).await
    }

    async fn scene(&self) -> SceneView {
        let (s, v) = self.get("/scene").await;
        assert_eq!(s, StatusCode::OK);
        serde_json::from_value(v).unwrap()
    }

    async fn session(&self) -> SessionView {
        let (s, v) = self.get("/session").await;
        assert_eq!(s, StatusCode::OK);
        serde_json::from_value(v).unwrap()
    }
}

fn entity_id(scene: &SceneView, feature: &str) -> u64 {
    scene
        .entities
        .iter()
        .find(|e| e.attachments.iter().any(|a| a.type_id == feature))
        .unwrap()
        .id
        .0
}

fn enabled(scene: &SceneView, id: u64, feature: &str) -> bool {
    let e = scene.entities.iter().find(|e| e.id.0 == id).unwrap();
    e.attachments
        .iter()
        .find(|a| a.type_id == feature)
        .unwrap()
        .enabled
}

/// One minute of exposure, a prompt every 30 s and nobody answering.
fn manual_plan() -> Value {
    json!({
        "name": "manual",
        "phases": [{ "kind": "Exposure", "duration": 60.0 }],
        "motion": { "mode": "static" },
        "fms": { "interval": 30.0 },
        "log_rate": 10.0
    })
}

#[tokio::test]
async fn scene_lists_entities_and_categories() {
    let s = Server::start("forest-simple", 1.0).await;
    let scene = s.scene().await;
    assert_eq!(scene.name, "forest-simple");
    assert!(scene.categories.iter().any(|c| c == "Locomotion"));
    assert_eq!(scene.entities.len(), 6);
    assert_eq!(scene, s.scene().await);
    let (status, types) = s.get("/types").await;
    assert_eq!(status, StatusCode::OK);
    assert!(types
        .as_array()
        .unwrap()
        .iter()
        .any(|t| t["identifier"] == "ReducedFov"));
}

#[tokio::test]
async fn toggle_round_trips() {
    let s = Server::start("forest-simple", 1.0).await;
    let before = s.scene().await;
    let cam = entity_id(&before, "VisionSnapper");
    assert!(!enabled(&before, cam, "VisionSnapper"));

    let (status, _) = s
        .post(
            &format!("/scene/entities/{cam}/toggle"),
            json!({ "type_id": "VisionSnapper", "enabled": true }),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    assert!(enabled(&s.scene().await, cam, "VisionSnapper"));

    s.post(
        &format!("/scene/entities/{cam}/toggle"),
        json!({ "type_id": "VisionSnapper", "enabled": false }),
    )
    .await;
    assert_eq!(s.scene().await, before);

    let (status, _) = s
        .post(
            "/scene/entities/999/toggle",
            json!({ "type_id": "VisionSnapper", "enabled": true }),
        )
        .await;
    assert_eq!(status, StatusCode::NOT_FOUND);
}

#[tokio::test]
async fn preset_crud_and_apply_round_trip() {
    let s = Server::start("forest-simple", 1.0).await;
    let (status, doc) = s
        .put(
            "/presets/PathFollow/gentle",
            json!({ "values": { "speed": 1.25 } }),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(doc["values"]["speed"], 1.25);
    assert!(s
        .dir
        .path()
        .join("presets/PathFollow.gentle.preset.json")
        .is_file());

    let (status, got) = s.get("/presets/PathFollow/gentle").await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(got, doc);
    let (_, listed) = s.get("/presets?type=PathFollow").await;
    assert_eq!(listed, json!([doc]));
    let (_, other) = s.get("/presets?type=SnapTurn").await;
    assert_eq!(other, json!([]));

    let rig = entity_id(&s.scene().await, "PathFollow");
    let (status, _) = s
        .post(
            &format!("/scene/entities/{rig}/apply"),
            json!({ "type_id": "PathFollow", "preset_name": "gentle" }),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    let scene = s.scene().await;
    let e = scene.entities.iter().find(|e| e.id.0 == rig).unwrap();
    let att = e
        .attachments
        .iter()
        .find(|a| a.type_id == "PathFollow")
        .unwrap();
    assert_eq!(
        serde_json::to_value(&att.values["speed"]).unwrap(),
        json!(1.25)
    );

    // Capturing the entity yields the same values back.
    let (status, captured) = s
        .put(
            "/presets/PathFollow/captured",
            json!({ "from_entity": rig }),
        )
        .await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(captured["values"], doc["values"]);

    let r = s
        .client
        .delete(s.url("/presets/PathFollow/gentle"))
        .send()
        .await
        .unwrap();
    assert_eq!(r.status(), StatusCode::NO_CONTENT);
    assert_eq!(
        s.get("/presets/PathFollow/gentle").await.0,
        StatusCode::NOT_FOUND
    );
    assert!(!s
        .dir
        .path()
        .join("presets/PathFollow.gentle.preset.json")
        .exists());

    let (status, _) = s
        .put(
            "/presets/PathFollow/bad",
            json!({ "values": { "speed": "fast" } }),
        )
        .await;
    assert_eq!(status, StatusCode::UNPROCESSABLE_ENTITY);
}

#[tokio::test]
async fn scene_can_be_replaced_while_idle() {
    let s = Server::start("forest-simple", 1.0).await;
    let (status, v) = s.put("/scene", json!({ "name": "city" })).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["name"], "city");
    assert_eq!(s.scene().await.name, "city");
    assert_eq!(
        s.put("/scene", json!({ "name": "atlantis" })).await.0,
        StatusCode::UNPROCESSABLE_ENTITY
    );
}

#[tokio::test]
async fn session_lifecycle_and_fms_rules() {
    let s = Server::start("forest-simple", 1.0).await;
    assert_eq!(s.session().await.status, "idle");
    assert_eq!(
        s.post("/fms", json!({ "rating": 3, "source": "participant" }))
            .await
            .0,
        StatusCode::CONFLICT
    );

    let (status, v) = s
        .post(
            "/session/start",
            json!({ "plan": manual_plan(), "seed": 5 }),
        )
        .await;
    assert_eq!(status, StatusCode::OK, "{v}");
    let view = s.session().await;
    assert_eq!(view.status, "running");
    assert!(view.pending_fms.is_some());
    assert_eq!(
        s.post("/session/start", json!({})).await.0,
        StatusCode::CONFLICT
    );
    assert_eq!(
        s.put("/scene", json!({ "name": "city" })).await.0,
        StatusCode::CONFLICT
    );

    assert_eq!(
        s.post("/fms", json!({ "rating": 21, "source": "participant" }))
            .await
            .0,
        StatusCode::UNPROCESSABLE_ENTITY
    );
    assert_eq!(
        s.post("/fms", json!({ "rating": 3, "source": "robot" }))
            .await
            .0,
        StatusCode::UNPROCESSABLE_ENTITY
    );
    assert_eq!(
        s.post("/fms", json!({ "rating": 3, "source": "experimenter" }))
            .await
            .0,
        StatusCode::OK
    );
    assert_eq!(
        s.post("/fms", json!({ "rating": 4, "source": "participant" }))
            .await
            .0,
        StatusCode::CONFLICT
    );
    let view = s.session().await;
    assert_eq!(view.fms_ratings, [3]);
    let resp = view
        .events
        .iter()
        .find(|e| e.kind.as_str() == "FmsResponse")
        .unwrap();
    assert_eq!(
        serde_json::to_value(&resp.payload["source"]).unwrap(),
        json!("experimenter")
    );

    let (status, v) = s.post("/session/stop", json!({})).await;
    assert_eq!(status, StatusCode::OK);
    assert_eq!(v["status"], "finished");
    let view = s.session().await;
    assert_eq!(view.status, "finished");
    let summary = view.summary.unwrap();
    assert!(!summary.completed);
    assert_eq!(summary.fms_ratings, [3]);
    let dir = view.artifacts_dir.unwrap();
    for f in ARTIFACT_FILES {
        assert!(Path::new(&dir).join(f).is_file(), "{f}");
    }
    assert!(dir.starts_with(s.dir.path().to_str().unwrap()));
    assert_eq!(
        s.post("/session/stop", json!({})).await.0,
        StatusCode::CONFLICT
    );
}

#[tokio::test]
async fn hits_route_to_session() {
    let s = Server::start("forest-simple", 1.0).await;
    let mut plan = manual_plan();
    plan["targets"] = json!([{ "id": "bell", "spawn": 0.0 }]);
    let (status, v) = s.post("/session/start", json!({ "plan": plan })).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(
        s.post("/hit", json!({ "target": "bell" })).await.0,
        StatusCode::OK
    );
    assert_eq!(
        s.post("/hit", json!({ "target": "bell" })).await.0,
        StatusCode::CONFLICT
    );
    assert_eq!(
        s.post("/hit", json!({ "target": "gong" })).await.0,
        StatusCode::NOT_FOUND
    );
}

#[tokio::test]
async fn telemetry_is_monotone_and_sessions_finish() {
    let s = Server::start("forest-simple", 200.0).await;
    let resp = s.client.get(s.url("/events")).send().await.unwrap();
    assert_eq!(resp.status(), StatusCode::OK);
    let mut body = resp.bytes_stream();

    let (status, _) = s
        .post("/session/start", json!({ "plan_ref": "coin-demo" }))
        .await;
    assert_eq!(status, StatusCode::OK);

    let mut frames: Vec<TelemetryFrame> = Vec::new();
    let mut buf = String::new();
    let deadline = tokio::time::Instant::now() + Duration::from_secs(20);
    while frames.last().is_none_or(|f| !f.finished) {
        let chunk = tokio::time::timeout_at(deadline, body.next())
            .await
            .expect("telemetry stalled")
            .unwrap()
            .unwrap();
        buf.push_str(std::str::from_utf8(&chunk).unwrap());
        while let Some(end) = buf.find("\n\n") {
            let event: String = buf.drain(..end + 2).collect();
            if let Some(data) = event.lines().find_map(|l| l.strip_prefix("data: ")) {
                frames.push(serde_json::from_str(data).unwrap());
            }
        }
    }
    assert!(frames.len() > 2);
    for w in frames.windows(2) {
        assert!(w[1].seq > w[0].seq);
        assert!(w[1].t >= w[0].t, "{} then {}", w[0].t, w[1].t);
    }
    let last = frames.last().unwrap();
    assert!((last.t - 150.0).abs() < 1e-6);
    let collected = frames
        .iter()
        .flat_map(|f| &f.events)
        .filter(|e| e.kind.as_str() == "CoinCollected")
        .count();
    assert_eq!(collected, 10);

    // The finished run landed under the data directory.
    let view = s.session().await;
    assert_eq!(view.status, "finished");
    assert!(view.summary.unwrap().completed);
}

#[tokio::test]
async fn experiment_set_advances_through_nodes() {
    let s = Server::start("forest-simple", 1.0).await;
    let plan = manual_plan();
    let dir = s.dir.path();
    std::fs::write(dir.join("manual.plan.json"), plan.to_string()).unwrap();
    let set = json!({
        "nodes": [
            { "id": "first", "plan": "manual.plan.json" },
            { "id": "second", "plan": "manual.plan.json", "scene": "city" }
        ],
        "edges": [{ "from": "first", "to": "second" }],
        "start": "first"
    });
    let (status, v) = s.post("/session/start", json!({ "set": set })).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["set_node"], "first");
    assert_eq!(
        s.post("/set/advance", json!({})).await.0,
        StatusCode::CONFLICT
    );
    s.post("/session/stop", json!({})).await;
    let (status, v) = s.post("/set/advance", json!({})).await;
    assert_eq!(status, StatusCode::OK, "{v}");
    assert_eq!(v["set_node"], "second");
    assert_eq!(s.scene().await.name, "city");
    s.post("/session/stop", json!({})).await;
    let (_, v) = s.post("/set/advance", json!({})).await;
    assert_eq!(v["set_node"], Value::Null);
}
