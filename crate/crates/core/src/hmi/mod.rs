//! Operator-facing HTTP service: pick requests, E-stop, reset, live state,
//! metrics, overlays and an NDJSON event stream over a running cell.

use crate::bus::message::{EStop, HmiEvent, PickRequestMsg};
use crate::bus::Message;
use crate::controller::{CellState, PickRequest, RobotGrasp, TransitionRecord};
use crate::harness::{compute_metrics, CellSim, HarnessError, MetricsSummary, RunConfig};
use crate::perception::{Detection, GraspCandidate};
use axum::body::{Body, Bytes};
use axum::extract::State;
use axum::http::{header, StatusCode};
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::Serialize;
use serde_json::{json, Value};
use std::collections::BTreeMap;
use std::convert::Infallible;
use std::sync::{Arc, Mutex, MutexGuard};
use std::time::Duration;
use thiserror::Error;
use tokio::sync::broadcast;

pub const OVERLAY_PATH: &str = "/api/overlay/latest.png";
pub const DEFAULT_STREAM_BUFFER: usize = 1024;
const KEEPALIVE: Duration = Duration::from_secs(1);

#[derive(Debug, Error)]
pub enum HmiError {
    #[error(transparent)]
    Harness(#[from] HarnessError),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Serialize)]
pub struct GraspView {
    /// Best candidate in raw-frame pixels.
    pub candidate: GraspCandidate,
    pub robot: Option<RobotGrasp>,
    pub overlay: String,
}

/// Everything the panel shows, taken under one lock.
#[derive(Debug, Clone, Serialize)]
pub struct HmiSnapshot {
    /// Sequence number of the last event published before this snapshot.
    pub seq: u64,
    pub sim_time_ms: f64,
    pub cell_state: String,
    pub active_request: PickRequest,
    pub last_detections: Vec<Detection>,
    pub last_grasp: Option<GraspView>,
    pub unavailable: Vec<String>,
    pub metrics: MetricsSummary,
    pub fault: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum StreamEvent {
    Snapshot { snapshot: Box<HmiSnapshot> },
    Transition { seq: u64, record: TransitionRecord },
    Detections { seq: u64, frame_id: u32, detections: Vec<Detection> },
    Grasp { seq: u64, frame_id: u32, grasp: GraspView },
    Notice { seq: u64, event: HmiEvent },
    /// Events this subscriber missed because it fell behind.
    Gap { dropped: u64 },
}

impl StreamEvent {
    pub fn to_line(&self) -> String {
        let mut s = serde_json::to_string(self).expect("stream events serialize");
        s.push('\n');
        s
    }
}

/// The running cell plus publication cursors.
pub struct LiveCell {
    sim: CellSim,
    tx: broadcast::Sender<Arc<str>>,
    seq: u64,
    log_cursor: usize,
    notice_cursor: usize,
    det_frame: u32,
    grasp_frame: u32,
    request_pending: bool,
    request_id: u32,
}

impl LiveCell {
    fn publish(&mut self, ev: StreamEvent) {
        // no receivers is fine
        let _ = self.tx.send(Arc::from(ev.to_line()));
    }

    fn next_seq(&mut self) -> u64 {
        self.seq += 1;
        self.seq
    }

    fn grasp_view(&self) -> Option<GraspView> {
        let p = self.sim.last_plan()?;
        Some(GraspView {
            candidate: GraspCandidate {
                u: p.u,
                v: p.v,
                theta: p.theta,
                z: p.z,
                quality: p.quality,
            },
            robot: self.sim.plc().last_grasp(),
            overlay: OVERLAY_PATH.into(),
        })
    }

    fn publish_new(&mut self) {
        while self.log_cursor < self.sim.log().len() {
            let record = self.sim.log()[self.log_cursor].clone();
            self.log_cursor += 1;
            if record.event == "RequestReceived" || record.state_to == CellState::Halted.name() {
                self.request_pending = false;
            }
            let seq = self.next_seq();
            self.publish(StreamEvent::Transition { seq, record });
        }
        while self.notice_cursor < self.sim.hmi_events().len() {
            let event = self.sim.hmi_events()[self.notice_cursor].clone();
            self.notice_cursor += 1;
            let seq = self.next_seq();
            self.publish(StreamEvent::Notice { seq, event });
        }
        if let Some((frame_id, dets)) = self.sim.latest_detections() {
            if frame_id != self.det_frame {
                self.det_frame = frame_id;
                let detections = dets.to_vec();
                let seq = self.next_seq();
                self.publish(StreamEvent::Detections {
                    seq,
                    frame_id,
                    detections,
                });
            }
        }
        if let Some(grasp) = self.grasp_view() {
            let frame_id = self.sim.plc().frame_id();
            if frame_id != self.grasp_frame {
                self.grasp_frame = frame_id;
                let seq = self.next_seq();
                self.publish(StreamEvent::Grasp { seq, frame_id, grasp });
            }
        }
    }

    /// Advance the simulated clock to `until_us`, publishing as it goes.
    pub fn advance_to(&mut self, until_us: u64) {
        while self.sim.next_event_time().is_some_and(|t| t <= until_us) {
            self.sim.step();
            self.publish_new();
        }
        self.sim.run_live_until(until_us);
    }

    pub fn sim(&self) -> &CellSim {
        &self.sim
    }

    pub fn snapshot(&self) -> HmiSnapshot {
        let plc = self.sim.plc();
        let metrics = compute_metrics(self.sim.log(), self.sim.picks()).unwrap_or_default();
        HmiSnapshot {
            seq: self.seq,
            sim_time_ms: self.sim.now_us() as f64 / 1000.0,
            cell_state: plc.state().name().into(),
            active_request: plc.request().clone(),
            last_detections: self.sim.latest_detections().map(|(_, d)| d.to_vec()).unwrap_or_default(),
            last_grasp: self.grasp_view(),
            unavailable: plc.request().unavailable.iter().cloned().collect(),
            metrics,
            fault: plc.controller.fault().map(|f| format!("{f:?}")),
        }
    }

    fn busy(&self) -> bool {
        let s = self.sim.plc().state();
        self.request_pending || s.is_active() || s == CellState::Halted
    }
}

/// Cheap handle shared by the HTTP handlers and the clock driver.
#[derive(Clone)]
pub struct HmiService {
    cell: Arc<Mutex<LiveCell>>,
    catalog: Arc<Vec<Value>>,
}

impl HmiService {
    pub fn new(cfg: RunConfig, seed: u64) -> Result<Self, HarnessError> {
        Self::with_buffer(cfg, seed, DEFAULT_STREAM_BUFFER)
    }

    /// `buffer` bounds each subscriber's backlog.
    pub fn with_buffer(cfg: RunConfig, seed: u64, buffer: usize) -> Result<Self, HarnessError> {
        let catalog = cfg
            .templates()?
            .iter()
            .map(|t| {
                json!({
                    "label": t.class_label,
                    "length": t.footprint.length(),
                    "width": t.footprint.width(),
                    "height": t.footprint.max_height(),
                })
            })
            .collect();
        let sim = CellSim::new(cfg, seed)?;
        let (tx, _) = broadcast::channel(buffer.max(1));
        Ok(Self {
            cell: Arc::new(Mutex::new(LiveCell {
                sim,
                tx,
                seq: 0,
                log_cursor: 0,
                notice_cursor: 0,
                det_frame: 0,
                grasp_frame: 0,
                request_pending: false,
                request_id: 0,
            })),
            catalog: Arc::new(catalog),
        })
    }

    pub fn lock(&self) -> MutexGuard<'_, LiveCell> {
        self.cell.lock().unwrap_or_else(|e| e.into_inner())
    }

    /// Advance simulated time by `dt_us`.
    pub fn advance(&self, dt_us: u64) {
        let mut c = self.lock();
        let until = c.sim.now_us() + dt_us;
        c.advance_to(until);
    }

    /// Receiver plus the snapshot it starts from.
    pub fn subscribe(&self) -> (broadcast::Receiver<Arc<str>>, HmiSnapshot) {
        let c = self.lock();
        (c.tx.subscribe(), c.snapshot())
    }

    fn catalog_labels(&self) -> impl Iterator<Item = &str> {
        self.catalog.iter().filter_map(|c| c["label"].as_str())
    }

    /// Validate and forward a pick request.
    pub fn submit_request(&self, body: &[u8]) -> (StatusCode, Value) {
        let parsed: Result<BTreeMap<String, Value>, _> = serde_json::from_slice(body);
        let Ok(raw) = parsed else {
            return (StatusCode::BAD_REQUEST, json!({"error": "body must be a JSON object of class counts"}));
        };
        if raw.is_empty() {
            return (StatusCode::BAD_REQUEST, json!({"error": "empty request"}));
        }
        let mut items = BTreeMap::new();
        for (label, v) in raw {
            if !self.catalog_labels().any(|l| l == label) {
                return (StatusCode::BAD_REQUEST, json!({"error": format!("unknown class {label}")}));
            }
            match v.as_u64().filter(|n| (1..=u32::MAX as u64).contains(n)) {
                Some(n) => {
                    items.insert(label, n as u32);
                }
                None => {
                    return (
                        StatusCode::BAD_REQUEST,
                        json!({"error": format!("count for {label} must be a positive integer")}),
                    )
                }
            }
        }
        let mut c = self.lock();
        if c.busy() {
            let state = c.sim.plc().state().name();
            return (StatusCode::CONFLICT, json!({"error": "cell busy", "state": state}));
        }
        c.request_pending = true;
        c.request_id += 1;
        let request_id = c.request_id;
        c.sim.resume();
        c.sim.submit_from_hmi(Message::PickRequest(PickRequestMsg {
            request_id,
            items: items.clone(),
        }));
        (StatusCode::ACCEPTED, json!({"request_id": request_id, "items": items}))
    }

    pub fn estop(&self) -> Value {
        let mut c = self.lock();
        c.sim.submit_from_hmi(Message::EStop(EStop {}));
        json!({"state": c.sim.plc().state().name()})
    }

    pub fn reset(&self) -> Value {
        let mut c = self.lock();
        let state = c.sim.plc().state().name().to_string();
        c.sim.submit_from_hmi(Message::HmiEvent(HmiEvent {
            kind: "Reset".into(),
            state: state.clone(),
            classes: Vec::new(),
        }));
        json!({"state": state})
    }
}

async fn state(State(s): State<HmiService>) -> Json<HmiSnapshot> {
    Json(s.lock().snapshot())
}

async fn catalog(State(s): State<HmiService>) -> Json<Value> {
    Json(json!({"classes": *s.catalog}))
}

async fn request(State(s): State<HmiService>, body: Bytes) -> Response {
    let (code, v) = s.submit_request(&body);
    (code, Json(v)).into_response()
}

async fn estop(State(s): State<HmiService>) -> Json<Value> {
    Json(s.estop())
}

async fn reset(State(s): State<HmiService>) -> Json<Value> {
    Json(s.reset())
}

async fn metrics(State(s): State<HmiService>) -> Json<MetricsSummary> {
    Json(s.lock().snapshot().metrics)
}

async fn overlay(State(s): State<HmiService>) -> Response {
    match s.lock().sim.overlay_png() {
        Some(png) => ([(header::CONTENT_TYPE, "image/png")], png).into_response(),
        None => (StatusCode::NOT_FOUND, Json(json!({"error": "no frame yet"}))).into_response(),
    }
}

async fn events(State(s): State<HmiService>) -> Response {
    let (rx, snap) = s.subscribe();
    let first = StreamEvent::Snapshot {
        snapshot: Box::new(snap),
    }
    .to_line();
    let stream = futures::stream::unfold((rx, s, Some(first)), |(mut rx, s, first)| async move {
        if let Some(line) = first {
            return Some((Ok::<_, Infallible>(Bytes::from(line)), (rx, s, None)));
        }
        let line = match tokio::time::timeout(KEEPALIVE, rx.recv()).await {
            Ok(Ok(line)) => line.to_string(),
            Ok(Err(broadcast::error::RecvError::Lagged(n))) => StreamEvent::Gap { dropped: n }.to_line(),
            Ok(Err(broadcast::error::RecvError::Closed)) => return None,
            Err(_) => StreamEvent::Snapshot {
                snapshot: Box::new(s.lock().snapshot()),
            }
            .to_line(),
        };
        Some((Ok(Bytes::from(line)), (rx, s, None)))
    });
    ([(header::CONTENT_TYPE, "application/x-ndjson")], Body::from_stream(stream)).into_response()
}

pub fn router(service: HmiService) -> Router {
    Router::new()
        .route("/api/state", get(state))
        .route("/api/catalog", get(catalog))
        .route("/api/request", post(request))
        .route("/api/estop", post(estop))
        .route("/api/reset", post(reset))
        .route("/api/metrics", get(metrics))
        .route("/api/events", get(events))
        .route(OVERLAY_PATH, get(overlay))
        .with_state(service)
}

/// Drive the simulated clock from the wall clock, `speed` simulated
/// seconds per real second.
pub fn spawn_clock(service: HmiService, speed: f64) -> tokio::task::JoinHandle<()> {
    tokio::spawn(async move {
        let tick = Duration::from_millis(10);
        let mut interval = tokio::time::interval(tick);
        interval.set_missed_tick_behavior(tokio::time::MissedTickBehavior::Skip);
        let mut last = tokio::time::Instant::now();
        loop {
            interval.tick().await;
            let now = tokio::time::Instant::now();
            let dt = ((now - last).as_secs_f64() * speed * 1e6) as u64;
            last = now;
            let s = service.clone();
            // rendering and planning are CPU work
            if tokio::task::spawn_blocking(move || s.advance(dt)).await.is_err() {
                break;
            }
        }
    })
}

/// Serve the panel API on `port` over a live cell until Ctrl-C.
pub async fn serve(cfg: RunConfig, seed: u64, port: u16, speed: f64) -> Result<(), HmiError> {
    let service = HmiService::new(cfg, seed)?;
    let clock = spawn_clock(service.clone(), speed);
    let listener = tokio::net::TcpListener::bind(("0.0.0.0", port)).await?;
    log::info!("hmi listening on {}", listener.local_addr()?);
    axum::serve(listener, router(service))
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await?;
    clock.abort();
    Ok(())
}
