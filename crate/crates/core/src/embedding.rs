//! Sinusoidal timestep embeddings and the two ways of adding them to a
//! channels-last feature tensor: one vector broadcast to every location, or
//! one vector per location taken from a timestep raster.

use crate::error::{domain, shape, Result};
use crate::raster::Raster;

pub const DEFAULT_MAX_PERIOD: f64 = 10_000.0;

/// `C` reals: `C/2` sines followed by `C/2` cosines.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }
}

fn check_dim(dim: usize) -> Result<()> {
    if dim < 2 || !dim.is_multiple_of(2) {
        return domain(format!("embedding width must be even and >= 2, got {dim}"));
    }
    Ok(())
}

/// Embeds `t` with frequencies `max_period^(-2i/C)`, `i = 0..C/2`.
pub fn sinusoidal_embed(t: f64, dim: usize, max_period: f64) -> Result<EmbeddingVector> {
    check_dim(dim)?;
    if !(max_period > 0.0) {
        return domain(format!("max period must be positive, got {max_period}"));
    }
    let half = dim / 2;
    let mut out = vec![0.0; dim];
    for i in 0..half {
        let freq = max_period.powf(-2.0 * i as f64 / dim as f64);
        let (s, c) = (t * freq).sin_cos();
        out[i] = s;
        out[half + i] = c;
    }
    Ok(EmbeddingVector(out))
}

/// Dense `H × W × C` tensor, channels last.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTensor {
    height: usize,
    width: usize,
    channels: usize,
    data: Vec<f64>,
}

impl FeatureTensor {
    pub fn new(height: usize, width: usize, channels: usize, data: Vec<f64>) -> Result<Self> {
        if height == 0 || width == 0 || channels == 0 {
            return domain(format!(
                "tensor dimensions must be positive, got {height}x{width}x{channels}"
            ));
        }
        if data.len() != height * width * channels {
            return shape(format!("{} values cannot fill {height}x{width}x{channels}", data.len()));
        }
        Ok(Self {
            height,
            width,
            channels,
            data,
        })
    }

    pub fn zeros(height: usize, width: usize, channels: usize) -> Result<Self> {
        Self::new(height, width, channels, vec![0.0; height * width * channels])
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.height, self.width, self.channels]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// The channel vector at row `y`, column `x`.
    pub fn at(&self, y: usize, x: usize) -> &[f64] {
        let start = (y * self.width + x) * self.channels;
        &self.data[start..start + self.channels]
    }

    fn check_same_shape(&self, other: &FeatureTensor) -> Result<()> {
        if self.shape() != other.shape() {
            return shape(format!("{:?} vs {:?}", self.shape(), other.shape()));
        }
        Ok(())
    }

    pub fn add(&self, other: &FeatureTensor) -> Result<FeatureTensor> {
        self.check_same_shape(other)?;
        let data = self.data.iter().zip(&other.data).map(|(a, b)| a + b).collect();
        Ok(FeatureTensor {
            height: self.height,
            width: self.width,
            channels: self.channels,
            data,
        })
    }
}

/// Per-location embeddings with the same layout as [`FeatureTensor`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMap(FeatureTensor);

impl EmbeddingMap {
    pub fn tensor(&self) -> &FeatureTensor {
        &self.0
    }

    pub fn into_tensor(self) -> FeatureTensor {
        self.0
    }

    pub fn shape(&self) -> [usize; 3] {
        self.0.shape()
    }

    pub fn at(&self, y: usize, x: usize) -> &[f64] {
        self.0.at(y, x)
    }
}

/// Adds `Emb(t)` to every spatial location of `z`.
pub fn inject_unified(z: &FeatureTensor, t: f64, max_period: f64) -> Result<FeatureTensor> {
    let emb = sinusoidal_embed(t, z.channels, max_period)?;
    let data = z
        .data
        .chunks_exact(z.channels)
        .flat_map(|px| px.iter().zip(emb.values()).map(|(a, b)| a + b))
        .collect();
    FeatureTensor::new(z.height, z.width, z.channels, data)
}

/// Embeds each entry of a timestep raster independently.
pub fn build_embedding_map(timesteps: &Raster, dim: usize, max_period: f64) -> Result<EmbeddingMap> {
    check_dim(dim)?;
    let mut data = Vec::with_capacity(timesteps.len() * dim);
    for &t in timesteps.data() {
        data.extend_from_slice(sinusoidal_embed(t, dim, max_period)?.values());
    }
    Ok(EmbeddingMap(FeatureTensor::new(
        timesteps.height(),
        timesteps.width(),
        dim,
        data,
    )?))
}

/// Elementwise `z + emap`.
pub fn inject_spatial(z: &FeatureTensor, emap: &EmbeddingMap) -> Result<FeatureTensor> {
    z.add(&emap.0)
}
