//! Row-major rasters shared by every stage of the pipeline.

use crate::error::{domain, shape, Result};

/// A single-channel, row-major grid of reals.
///
/// Unlike [`ImageRaster`], samples are unconstrained: variance fields,
/// timestep maps and noisy diffusion states all live here.
#[derive(Debug, Clone, PartialEq)]
pub struct Raster {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Raster {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return domain(format!("raster dimensions must be positive, got {width}x{height}"));
        }
        if data.len() != width * height {
            return shape(format!("{} samples cannot fill a {width}x{height} raster", data.len()));
        }
        Ok(Self { width, height, data })
    }

    /// # Panics
    /// If either dimension is zero.
    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds a raster by evaluating `f(x, y)` at every pixel.
    ///
    /// # Panics
    /// If either dimension is zero.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        assert!(width > 0 && height > 0, "raster dimensions must be positive");
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self { width, height, data }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, value: f64) {
        self.data[y * self.width + x] = value;
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn same_dims(&self, other: &Raster) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_same_dims(&self, other: &Raster, what: &str) -> Result<()> {
        if self.same_dims(other) {
            Ok(())
        } else {
            shape(format!(
                "{what}: {}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            ))
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Raster {
        Raster {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Combines two equally sized rasters pixel by pixel.
    pub fn zip_map(&self, other: &Raster, f: impl Fn(f64, f64) -> f64) -> Result<Raster> {
        self.check_same_dims(other, "zip_map")?;
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| f(a, b)).collect();
        Ok(Raster {
            width: self.width,
            height: self.height,
            data,
        })
    }

    pub fn sum(&self) -> f64 {
        self.data.iter().sum()
    }

    pub fn mean(&self) -> f64 {
        self.sum() / self.len() as f64
    }

    /// Population variance of all samples.
    pub fn variance(&self) -> f64 {
        let mean = self.mean();
        self.data.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / self.len() as f64
    }

    pub fn rms(&self) -> f64 {
        (self.data.iter().map(|v| v * v).sum::<f64>() / self.len() as f64).sqrt()
    }

    pub fn min_max(&self) -> (f64, f64) {
        self.data
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            })
    }

    /// Copies the `width`×`height` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Raster> {
        if width == 0 || height == 0 || x0 + width > self.width || y0 + height > self.height {
            return shape(format!(
                "crop {width}x{height}@({x0},{y0}) exceeds {}x{}",
                self.width, self.height
            ));
        }
        let mut data = Vec::with_capacity(width * height);
        for y in y0..y0 + height {
            let row = y * self.width;
            data.extend_from_slice(&self.data[row + x0..row + x0 + width]);
        }
        Ok(Raster { width, height, data })
    }
}

/// An image with 1 or 3 interleaved channels, samples in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRaster {
    width: usize,
    height: usize,
    channels: usize,
    pixels: Vec<f64>,
}

impl ImageRaster {
    pub fn new(width: usize, height: usize, channels: usize, pixels: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return domain(format!("image dimensions must be positive, got {width}x{height}"));
        }
        if channels != 1 && channels != 3 {
            return domain(format!("unsupported channel count {channels}"));
        }
        if pixels.len() != width * height * channels {
            return shape(format!(
                "{} samples cannot fill a {width}x{height}x{channels} image",
                pixels.len()
            ));
        }
        if let Some(bad) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return domain(format!("image sample {bad} outside [0, 1]"));
        }
        Ok(Self {
            width,
            height,
            channels,
            pixels,
        })
    }

    /// Wraps a single-channel raster; samples must already lie in `[0, 1]`.
    pub fn from_gray(raster: Raster) -> Result<Self> {
        let (w, h) = (raster.width(), raster.height());
        Self::new(w, h, 1, raster.into_data())
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }
}
