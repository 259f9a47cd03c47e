//! Sidecar client against an in-process mock HTTP server.

use std::io::{BufRead, BufReader, Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use r2r_core::data::png::{decode_png, encode_png, probe_png};
use r2r_core::pipeline::{Pipeline, ReplayMode, RunConfig};
use r2r_core::replay::sidecar::{GenerateWireRequest, LabelRequest};
use r2r_core::replay::{generate_vlm_replay, label_cluster, LabelMethod, SidecarClient};
use r2r_core::{ImageTensor, Shape3};
use serde_json::{json, Value};

struct Mock {
    url: String,
    requests: Arc<AtomicUsize>,
}

fn read_request(stream: &mut TcpStream) -> Option<(String, String, Vec<u8>)> {
    let mut reader = BufReader::new(stream.try_clone().ok()?);
    let mut line = String::new();
    reader.read_line(&mut line).ok()?;
    let mut parts = line.split_whitespace();
    let method = parts.next()?.to_string();
    let path = parts.next()?.to_string();
    let mut len = 0;
    loop {
        let mut h = String::new();
        reader.read_line(&mut h).ok()?;
        let h = h.trim_end();
        if h.is_empty() {
            break;
        }
        if let Some((k, v)) = h.split_once(':') {
            if k.eq_ignore_ascii_case("content-length") {
                len = v.trim().parse().ok()?;
            }
        }
    }
    let mut body = vec![0; len];
    reader.read_exact(&mut body).ok()?;
    Some((method, path, body))
}

fn respond(stream: &mut TcpStream, status: u16, body: &Value) {
    let body = body.to_string();
    let _ = write!(
        stream,
        "HTTP/1.1 {status} X\r\nContent-Type: application/json\r\nContent-Length: {}\r\nConnection: close\r\n\r\n{body}",
        body.len()
    );
}

/// Mean brightness of the decoded images, compared against a word prior.
fn mock_label(req: &LabelRequest) -> Value {
    let mut total = 0.0;
    for b64 in &req.images {
        let bytes = STANDARD.decode(b64).unwrap();
        let shape = probe_png(&bytes).unwrap();
        total += decode_png(&bytes, shape).unwrap().mean();
    }
    let mean = total / req.images.len() as f64;
    let scores: Vec<f64> = req
        .candidates
        .iter()
        .map(|c| match c.as_str() {
            "dark" | "zeros" => 1.0 - mean,
            "bright" => mean,
            _ => 0.5 - (mean - 0.5).abs() * 0.5,
        })
        .collect();
    let best = (0..scores.len()).fold(0, |b, i| if scores[i] > scores[b] { i } else { b });
    json!({"label": req.candidates[best], "scores": scores})
}

fn mock_generate(req: &GenerateWireRequest) -> Value {
    let level = req.prompt.bytes().map(|b| b as usize).sum::<usize>() % 200;
    let images: Vec<String> = (0..req.count)
        .map(|i| {
            let v = ((level + i) % 256) as f64 / 255.0;
            let img = ImageTensor::filled(Shape3::new(3, req.height, req.width), v);
            STANDARD.encode(encode_png(&img).unwrap())
        })
        .collect();
    json!({ "images": images })
}

fn spawn_mock() -> Mock {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    let requests = Arc::new(AtomicUsize::new(0));
    let counter = requests.clone();
    thread::spawn(move || {
        for stream in listener.incoming() {
            let Ok(mut stream) = stream else { continue };
            let Some((method, path, body)) = read_request(&mut stream) else { continue };
            counter.fetch_add(1, Ordering::SeqCst);
            match (method.as_str(), path.as_str()) {
                ("GET", "/health") => respond(&mut stream, 200, &json!({"status": "ok", "mode": "mock"})),
                ("POST", "/label") => match serde_json::from_slice::<LabelRequest>(&body) {
                    Ok(req) => respond(&mut stream, 200, &mock_label(&req)),
                    Err(_) => respond(&mut stream, 400, &json!({"error": "images"})),
                },
                ("POST", "/generate") => {
                    let req: GenerateWireRequest = serde_json::from_slice(&body).unwrap();
                    respond(&mut stream, 200, &mock_generate(&req))
                }
                _ => respond(&mut stream, 404, &json!({"error": "not found"})),
            }
        }
    });
    Mock { url, requests }
}

fn dead_url() -> String {
    let l = TcpListener::bind("127.0.0.1:0").unwrap();
    format!("http://{}", l.local_addr().unwrap())
}

fn client(url: &str) -> SidecarClient {
    SidecarClient::new(url, Duration::from_secs(5))
}

fn words(ws: &[&str]) -> Vec<String> {
    ws.iter().map(|w| w.to_string()).collect()
}

#[test]
fn health_reports_mock_mode() {
    let mock = spawn_mock();
    let h = client(&mock.url).health().unwrap();
    assert_eq!((h.status.as_str(), h.mode.as_str()), ("ok", "mock"));
}

#[test]
fn labels_dark_representatives_through_the_sidecar() {
    let mock = spawn_mock();
    let c = client(&mock.url);
    let reps = vec![ImageTensor::filled(Shape3::new(1, 8, 8), 0.02); 10];
    let l = label_cluster(&reps, &words(&["dark", "bright"]), Some(&c), 0).unwrap();
    assert_eq!(l.token, "dark");
    assert_eq!(l.method, LabelMethod::Vlm);
    assert!((0.0..=1.0).contains(&l.confidence));
    let single = label_cluster(&reps, &words(&["other"]), Some(&c), 0).unwrap();
    assert_eq!(single.token, "other");
}

#[test]
fn generates_requested_count_at_dataset_shape() {
    let mock = spawn_mock();
    let c = client(&mock.url);
    let shape = Shape3::new(1, 8, 8);
    let batch = generate_vlm_replay(&c, "stripes", 3, shape, 4, 2).unwrap();
    assert_eq!(batch.len(), 3);
    batch.validate(shape).unwrap();
    assert!(batch.samples.iter().all(|s| s.label == "stripes" && s.cluster == 4 && s.task == 2));
    let again = generate_vlm_replay(&c, "stripes", 3, shape, 4, 2).unwrap();
    assert_eq!(batch, again);
}

#[test]
fn zero_count_sends_no_request() {
    let mock = spawn_mock();
    let c = client(&mock.url);
    let before = mock.requests.load(Ordering::SeqCst);
    let batch = generate_vlm_replay(&c, "x", 0, Shape3::new(1, 4, 4), 0, 1).unwrap();
    assert!(batch.is_empty());
    assert_eq!(mock.requests.load(Ordering::SeqCst), before);
}

#[test]
fn unreachable_sidecar_degrades_labeling() {
    let c = client(&dead_url());
    assert!(c.health().is_err());
    let reps = vec![ImageTensor::zeros(Shape3::new(1, 4, 4))];
    let l = label_cluster(&reps, &words(&["cat", "dog"]), Some(&c), 5).unwrap();
    assert_eq!(l.method, LabelMethod::Config);
    assert_eq!(l.token, "dog_5");
    assert!(generate_vlm_replay(&c, "cat", 2, Shape3::new(1, 4, 4), 0, 1).is_err());
}

#[test]
fn silent_sidecar_times_out() {
    let listener = TcpListener::bind("127.0.0.1:0").unwrap();
    let url = format!("http://{}", listener.local_addr().unwrap());
    thread::spawn(move || {
        let held: Vec<_> = listener.incoming().take(4).collect();
        thread::sleep(Duration::from_secs(10));
        drop(held);
    });
    let c = SidecarClient::new(&url, Duration::from_millis(200));
    let start = Instant::now();
    assert!(c.health().is_err());
    assert!(start.elapsed() < Duration::from_secs(5));
}

fn small_config() -> RunConfig {
    RunConfig {
        toy_classes: 4,
        toy_per_class: 30,
        toy_size: 8,
        tasks: 2,
        latent_dim: 4,
        channels: vec![4],
        epochs: 3,
        samples_per_cluster: 15,
        rho: 0.0,
        fine_tune_epochs: 2,
        candidates: words(&["zeros", "stripes", "columns", "checks"]),
        ..RunConfig::default()
    }
}

#[test]
fn pipeline_replays_through_the_sidecar() {
    let mock = spawn_mock();
    let cfg = RunConfig {
        replay: ReplayMode::Vlm,
        sidecar_url: mock.url.clone(),
        ..small_config()
    };
    let ds = r2r_core::pipeline::load_dataset(&cfg).unwrap();
    let report = Pipeline::new(cfg, &ds).unwrap().run().unwrap();
    assert!(report.generation_calls["vlm"] > 0);
    assert_eq!(report.generation_calls["decoder"], 0);
    let per_backend = &report.tasks[0].replay_backend;
    assert_eq!(per_backend.get("vlm").copied().unwrap_or(0), report.tasks[0].replay_samples);
    assert!(report.tasks.iter().all(|t| !t.degraded));
}

#[test]
fn dead_sidecar_falls_back_to_decoder_without_aborting() {
    let cfg = RunConfig {
        replay: ReplayMode::Vlm,
        sidecar_url: dead_url(),
        sidecar_timeout_ms: 300,
        ..small_config()
    };
    let ds = r2r_core::pipeline::load_dataset(&cfg).unwrap();
    let report = Pipeline::new(cfg, &ds).unwrap().run().unwrap();
    assert!(report.completed);
    assert!(report.generation_calls["decoder"] > 0);
    assert_eq!(report.generation_calls["vlm"], report.generation_calls["decoder"]);
    assert!(report.tasks.iter().any(|t| t.degraded));
    assert!(report.replay_samples_total > 0);
}
