//! Client for the optional labeling/generation sidecar (JSON over HTTP).
//!
//! * `POST /label {images: [base64 PNG], candidates: [string]} -> {label, scores}`
//! * `POST /generate {prompt, count, width, height} -> {images: [base64 PNG]}`
//! * `GET /health -> {status, mode}`

use std::time::Duration;

use base64::engine::general_purpose::STANDARD;
use base64::Engine;
use serde::{Deserialize, Serialize};

use super::{BackendId, Capabilities, GenerateRequest, Labeler, ReplayBackend, ReplayBatch, ReplaySample};
use crate::data::png::{decode_png, encode_png};
use crate::error::{R2rError, Result};
use crate::tensor::{ImageTensor, Shape3};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelRequest {
    pub images: Vec<String>,
    pub candidates: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelResponse {
    pub label: String,
    pub scores: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateWireRequest {
    pub prompt: String,
    pub count: usize,
    pub width: usize,
    pub height: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerateResponse {
    pub images: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Health {
    pub status: String,
    pub mode: String,
}

#[derive(Debug, Clone)]
pub struct SidecarClient {
    base: String,
    agent: ureq::Agent,
}

fn sidecar_err(e: impl std::fmt::Display) -> R2rError {
    R2rError::Sidecar(e.to_string())
}

impl SidecarClient {
    pub fn new(url: &str, timeout: Duration) -> Self {
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(timeout))
            .build()
            .into();
        SidecarClient {
            base: url.trim_end_matches('/').to_string(),
            agent,
        }
    }

    pub fn url(&self) -> &str {
        &self.base
    }

    pub fn health(&self) -> Result<Health> {
        self.agent
            .get(format!("{}/health", self.base))
            .call()
            .map_err(sidecar_err)?
            .body_mut()
            .read_json()
            .map_err(sidecar_err)
    }

    fn post<Req: Serialize, Resp: serde::de::DeserializeOwned>(&self, path: &str, body: &Req) -> Result<Resp> {
        self.agent
            .post(format!("{}{path}", self.base))
            .send_json(body)
            .map_err(sidecar_err)?
            .body_mut()
            .read_json()
            .map_err(sidecar_err)
    }

    pub fn label_images(&self, images: &[ImageTensor], candidates: &[String]) -> Result<LabelResponse> {
        let images = images
            .iter()
            .map(|i| encode_png(i).map(|b| STANDARD.encode(b)))
            .collect::<Result<_>>()?;
        let resp: LabelResponse = self.post(
            "/label",
            &LabelRequest {
                images,
                candidates: candidates.to_vec(),
            },
        )?;
        if resp.scores.len() != candidates.len() {
            return Err(R2rError::Sidecar(format!(
                "{} scores for {} candidates",
                resp.scores.len(),
                candidates.len()
            )));
        }
        Ok(resp)
    }

    /// Requests `count` images for `prompt`, converted to `shape`.
    pub fn generate_images(&self, prompt: &str, count: usize, shape: Shape3) -> Result<Vec<ImageTensor>> {
        let resp: GenerateResponse = self.post(
            "/generate",
            &GenerateWireRequest {
                prompt: prompt.to_string(),
                count,
                width: shape.width,
                height: shape.height,
            },
        )?;
        if resp.images.len() != count {
            return Err(R2rError::Sidecar(format!("asked for {count} images, got {}", resp.images.len())));
        }
        resp.images
            .iter()
            .map(|b64| {
                let bytes = STANDARD.decode(b64).map_err(sidecar_err)?;
                decode_png(&bytes, shape)
            })
            .collect()
    }
}

impl Labeler for SidecarClient {
    fn label(&self, images: &[ImageTensor], candidates: &[String]) -> Result<(String, Vec<f64>)> {
        let r = self.label_images(images, candidates)?;
        Ok((r.label, r.scores))
    }
}

/// `count` sidecar-generated images for `prompt`, labeled with the prompt verbatim.
pub fn generate_vlm_replay(
    client: &SidecarClient,
    prompt: &str,
    count: usize,
    shape: Shape3,
    cluster: usize,
    task: usize,
) -> Result<ReplayBatch> {
    if count == 0 {
        return Ok(ReplayBatch::default());
    }
    let samples = client
        .generate_images(prompt, count, shape)?
        .into_iter()
        .map(|image| ReplaySample {
            image,
            label: prompt.to_string(),
            cluster,
            backend: BackendId::Vlm,
            task,
        })
        .collect();
    Ok(ReplayBatch { samples, seed: None })
}

#[derive(Debug)]
pub struct VlmBackend {
    client: SidecarClient,
    shape: Shape3,
    calls: usize,
}

impl VlmBackend {
    pub fn new(client: SidecarClient, shape: Shape3) -> Self {
        VlmBackend { client, shape, calls: 0 }
    }

    pub fn client(&self) -> &SidecarClient {
        &self.client
    }
}

impl ReplayBackend for VlmBackend {
    fn id(&self) -> BackendId {
        BackendId::Vlm
    }

    fn capabilities(&self) -> Capabilities {
        Capabilities {
            generate: true,
            label: true,
        }
    }

    fn generate(&mut self, req: &GenerateRequest) -> Result<ReplayBatch> {
        self.calls += 1;
        generate_vlm_replay(&self.client, &req.label, req.count, self.shape, req.cluster, req.task)
    }

    fn calls(&self) -> usize {
        self.calls
    }
}
