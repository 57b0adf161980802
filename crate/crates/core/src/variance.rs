//! Local-variance texture maps.
//!
//! The map is built in four stages: luma conversion, windowed population
//! variance, Gaussian smoothing with a kernel of the same size, and min-max
//! normalization. Both windowed stages mirror the raster at its borders
//! (edge samples repeated: `... c b a | a b c ... x y z | z y x ...`).

use rayon::prelude::*;

use crate::error::{domain, Result};
use crate::raster::{ImageRaster, Raster};

/// Window used for both the variance field and the smoothing kernel.
pub const DEFAULT_WINDOW: usize = 33;

/// Luma weights for RGB input.
pub const LUMA: [f64; 3] = [0.299, 0.587, 0.114];

/// Smoothing sigma paired with a window, placing the kernel edge at 3σ.
pub fn default_sigma(window: usize) -> f64 {
    window as f64 / 6.0
}

/// Reflects an out-of-range index back into `0..len`, repeating edge samples.
#[inline]
pub fn mirror_index(i: isize, len: usize) -> usize {
    let n = len as isize;
    let m = i.rem_euclid(2 * n);
    if m < n {
        m as usize
    } else {
        (2 * n - 1 - m) as usize
    }
}

fn check_window(window: usize) -> Result<usize> {
    if window == 0 || window.is_multiple_of(2) {
        return domain(format!("window must be odd and positive, got {window}"));
    }
    Ok(window / 2)
}

/// Grayscale view of an image. RGB is reduced with [`LUMA`] weights.
pub fn to_grayscale(img: &ImageRaster) -> Result<Raster> {
    let (w, h) = (img.width(), img.height());
    match img.channels() {
        1 => Raster::new(w, h, img.pixels().to_vec()),
        3 => {
            let data = img
                .pixels()
                .chunks_exact(3)
                .map(|p| LUMA[0] * p[0] + LUMA[1] * p[1] + LUMA[2] * p[2])
                .collect();
            Raster::new(w, h, data)
        }
        c => domain(format!("unsupported channel count {c}")),
    }
}

/// Sums each `window`-wide horizontal run of `values`, mirrored at the row ends.
fn horizontal_window_sums(src: &Raster, radius: usize, f: impl Fn(f64) -> f64 + Sync) -> Raster {
    let (w, h) = (src.width(), src.height());
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, slot) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for dx in -(radius as isize)..=radius as isize {
                acc += f(src.get(mirror_index(x as isize + dx, w), y));
            }
            *slot = acc;
        }
    });
    Raster::new(w, h, out).expect("dimensions preserved")
}

fn vertical_window_sums(src: &Raster, radius: usize) -> Raster {
    let (w, h) = (src.width(), src.height());
    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, slot) in row.iter_mut().enumerate() {
            let mut acc = 0.0;
            for dy in -(radius as isize)..=radius as isize {
                acc += src.get(x, mirror_index(y as isize + dy, h));
            }
            *slot = acc;
        }
    });
    Raster::new(w, h, out).expect("dimensions preserved")
}

/// Population variance over the `window`×`window` neighbourhood of each pixel.
pub fn local_variance(gray: &Raster, window: usize) -> Result<Raster> {
    let radius = check_window(window)?;
    let count = (window * window) as f64;
    let sums = vertical_window_sums(&horizontal_window_sums(gray, radius, |v| v), radius);
    let squares = vertical_window_sums(&horizontal_window_sums(gray, radius, |v| v * v), radius);
    sums.zip_map(&squares, |s, sq| {
        let mean = s / count;
        (sq / count - mean * mean).max(0.0)
    })
}

/// Normalized 1-D Gaussian taps of length `window`.
pub fn gaussian_kernel(window: usize, sigma: f64) -> Result<Vec<f64>> {
    let radius = check_window(window)? as f64;
    if !(sigma > 0.0) || !sigma.is_finite() {
        return domain(format!("blur sigma must be positive, got {sigma}"));
    }
    let taps: Vec<f64> = (0..window)
        .map(|i| {
            let d = i as f64 - radius;
            (-d * d / (2.0 * sigma * sigma)).exp()
        })
        .collect();
    let norm: f64 = taps.iter().sum();
    Ok(taps.into_iter().map(|v| v / norm).collect())
}

/// Separable Gaussian convolution with a `window`-tap kernel.
pub fn gaussian_blur(src: &Raster, window: usize, sigma: f64) -> Result<Raster> {
    let kernel = gaussian_kernel(window, sigma)?;
    let radius = (window / 2) as isize;
    let (w, h) = (src.width(), src.height());

    let mut rows = vec![0.0; w * h];
    rows.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, slot) in row.iter_mut().enumerate() {
            *slot = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * src.get(mirror_index(x as isize + i as isize - radius, w), y))
                .sum();
        }
    });
    let rows = Raster::new(w, h, rows)?;

    let mut out = vec![0.0; w * h];
    out.par_chunks_mut(w).enumerate().for_each(|(y, row)| {
        for (x, slot) in row.iter_mut().enumerate() {
            *slot = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * rows.get(x, mirror_index(y as isize + i as isize - radius, h)))
                .sum();
        }
    });
    Raster::new(w, h, out)
}

/// Rescales to `[0, 1]`; a constant raster becomes all zeros.
pub fn minmax_normalize(src: &Raster) -> Raster {
    let (lo, hi) = src.min_max();
    let span = hi - lo;
    if !(span > 0.0) {
        return src.map(|_| 0.0);
    }
    src.map(|v| ((v - lo) / span).clamp(0.0, 1.0))
}

/// Smoothed, normalized texture map with values in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarianceMap(Raster);

impl VarianceMap {
    /// Wraps a raster, rejecting samples outside `[0, 1]`.
    pub fn new(raster: Raster) -> Result<Self> {
        if let Some(bad) = raster.data().iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return domain(format!("variance value {bad} outside [0, 1]"));
        }
        Ok(Self(raster))
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Result<Self> {
        Self::new(Raster::filled(width, height, value))
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.0.get(x, y)
    }

    pub fn values(&self) -> &[f64] {
        self.0.data()
    }

    pub fn raster(&self) -> &Raster {
        &self.0
    }

    pub fn into_raster(self) -> Raster {
        self.0
    }
}

/// Window size and smoothing strength for [`variance_map`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VarianceConfig {
    pub window: usize,
    pub sigma: f64,
}

impl Default for VarianceConfig {
    fn default() -> Self {
        Self::with_window(DEFAULT_WINDOW)
    }
}

impl VarianceConfig {
    pub fn with_window(window: usize) -> Self {
        Self {
            window,
            sigma: default_sigma(window),
        }
    }
}

pub fn variance_map(img: &ImageRaster, config: VarianceConfig) -> Result<VarianceMap> {
    let gray = to_grayscale(img)?;
    let raw = local_variance(&gray, config.window)?;
    let smooth = gaussian_blur(&raw, config.window, config.sigma)?;
    VarianceMap::new(minmax_normalize(&smooth))
}
