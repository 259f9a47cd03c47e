//! Dense image and latent containers.

use serde::{Deserialize, Serialize};

use crate::error::{R2rError, Result};

/// (channels, height, width)
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape3 {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
}

impl Shape3 {
    pub const fn new(channels: usize, height: usize, width: usize) -> Self {
        Shape3 {
            channels,
            height,
            width,
        }
    }

    pub const fn len(&self) -> usize {
        self.channels * self.height * self.width
    }

    pub const fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl std::fmt::Display for Shape3 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "({}, {}, {})", self.channels, self.height, self.width)
    }
}

/// A channel-major image. Values are in `[0, 1]` once ingested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageTensor {
    shape: Shape3,
    data: Vec<f64>,
}

impl ImageTensor {
    pub fn new(shape: Shape3, data: Vec<f64>) -> Result<Self> {
        if shape.len() != data.len() {
            return Err(R2rError::shape(
                format!("{} values for shape {shape}", shape.len()),
                data.len(),
            ));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(R2rError::invalid("data", format!("non-finite value at index {i}")));
        }
        Ok(ImageTensor { shape, data })
    }

    pub fn zeros(shape: Shape3) -> Self {
        ImageTensor {
            shape,
            data: vec![0.0; shape.len()],
        }
    }

    pub fn filled(shape: Shape3, value: f64) -> Self {
        ImageTensor {
            shape,
            data: vec![value; shape.len()],
        }
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.shape.height + y) * self.shape.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len().max(1) as f64
    }

    pub fn clamp_unit(mut self) -> Self {
        for v in &mut self.data {
            *v = v.clamp(0.0, 1.0);
        }
        self
    }
}

/// A point in latent space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LatentVector(pub Vec<f64>);

impl LatentVector {
    pub fn zeros(dim: usize) -> Self {
        LatentVector(vec![0.0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for LatentVector {
    fn from(v: Vec<f64>) -> Self {
        LatentVector(v)
    }
}

impl AsRef<[f64]> for LatentVector {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Row-major `n x dim` matrix of latent vectors.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct LatentBatch {
    dim: usize,
    data: Vec<f64>,
}

impl LatentBatch {
    pub fn new(dim: usize) -> Self {
        LatentBatch {
            dim,
            data: Vec::new(),
        }
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 || !data.len().is_multiple_of(dim) {
            return Err(R2rError::shape(format!("multiple of {dim}"), data.len()));
        }
        Ok(LatentBatch { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows
            .first()
            .map(|r| r.as_ref().len())
            .ok_or_else(|| R2rError::Empty("latent batch".into()))?;
        let mut batch = LatentBatch::new(dim);
        for r in rows {
            batch.push(r.as_ref())?;
        }
        Ok(batch)
    }

    pub fn push(&mut self, row: &[f64]) -> Result<()> {
        if row.len() != self.dim {
            return Err(R2rError::shape(self.dim, row.len()));
        }
        self.data.extend_from_slice(row);
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len().checked_div(self.dim).unwrap_or(0)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim.max(1))
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Gathers the rows at `indices`, in order.
    pub fn select(&self, indices: &[usize]) -> LatentBatch {
        let mut out = LatentBatch::new(self.dim);
        out.data.reserve(indices.len() * self.dim);
        for &i in indices {
            out.data.extend_from_slice(self.row(i));
        }
        out
    }

    pub fn extend(&mut self, other: &LatentBatch) -> Result<()> {
        if other.is_empty() {
            return Ok(());
        }
        if self.dim != other.dim {
            return Err(R2rError::shape(self.dim, other.dim));
        }
        self.data.extend_from_slice(&other.data);
        Ok(())
    }

    /// Per-dimension mean.
    pub fn mean(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.dim];
        for r in self.rows() {
            for (a, b) in m.iter_mut().zip(r) {
                *a += b;
            }
        }
        let n = self.len().max(1) as f64;
        m.iter_mut().for_each(|v| *v /= n);
        m
    }
}

pub(crate) fn squared_distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}
