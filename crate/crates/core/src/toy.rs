//! A deterministic reverse-diffusion harness with an analytic denoiser.
//!
//! The denoiser knows the clean target. Its prediction of `x0` is the target
//! blurred with a Gaussian whose sigma grows linearly with `t`, so high
//! frequencies are only recovered near the end of sampling. With zero blur
//! the denoiser is exact and every schedule lands on the target.

use std::collections::HashMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{domain, Result, TssError};
use crate::freq::{band_masks, band_powers, BandMasks, BandPartition, Fft2Plan, PerBand, Spectrum, Trajectory};
use crate::raster::{ImageRaster, Raster};
use crate::schedule::Schedule;
use crate::spatial::SpatialScheduleMap;
use crate::variance::{gaussian_blur, minmax_normalize};

pub const DEFAULT_BETA_START: f64 = 1e-4;
pub const DEFAULT_BETA_END: f64 = 0.02;
/// Blur sigma (pixels) of the denoiser's `x0` guess at `t = T`.
pub const DEFAULT_MAX_BLUR: f64 = 4.0;

/// Cumulative signal rates `ᾱ_0 = 1 > ᾱ_1 > ... > ᾱ_T`.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSchedule {
    alphas_cumprod: Vec<f64>,
}

impl NoiseSchedule {
    pub fn total_steps(&self) -> u32 {
        (self.alphas_cumprod.len() - 1) as u32
    }

    pub fn alphas_cumprod(&self) -> &[f64] {
        &self.alphas_cumprod
    }

    /// `ᾱ_t`.
    pub fn alpha_bar(&self, t: u32) -> Result<f64> {
        self.alphas_cumprod
            .get(t as usize)
            .copied()
            .ok_or_else(|| TssError::Domain(format!("timestep {t} beyond T={}", self.total_steps())))
    }
}

/// Linear-beta schedule: `β` evenly spaced from `beta_start` to `beta_end`
/// over `t = 1..=T`, `ᾱ_t = Π (1 - β_s)`.
pub fn make_noise_schedule(total_steps: u32, beta_start: f64, beta_end: f64) -> Result<NoiseSchedule> {
    if total_steps == 0 {
        return domain("noise schedule needs at least one step");
    }
    if !(0.0 < beta_start && beta_start < beta_end && beta_end < 1.0) {
        return domain(format!(
            "betas must satisfy 0 < start < end < 1, got ({beta_start}, {beta_end})"
        ));
    }
    let n = total_steps as usize;
    let mut alphas_cumprod = Vec::with_capacity(n + 1);
    alphas_cumprod.push(1.0);
    let mut acc = 1.0;
    for s in 0..n {
        let frac = if n == 1 { 0.0 } else { s as f64 / (n - 1) as f64 };
        let beta = beta_start + (beta_end - beta_start) * frac;
        acc *= 1.0 - beta;
        alphas_cumprod.push(acc);
    }
    Ok(NoiseSchedule { alphas_cumprod })
}

/// `x_t = √ᾱ_t·x0 + √(1-ᾱ_t)·eps`.
pub fn forward_noise(x0: &Raster, t: u32, eps: &Raster, schedule: &NoiseSchedule) -> Result<Raster> {
    let ab = schedule.alpha_bar(t)?;
    let (signal, noise) = (ab.sqrt(), (1.0 - ab).sqrt());
    x0.zip_map(eps, |x, e| signal * x + noise * e)
}

/// Standard-normal raster from a seeded stream.
pub fn gaussian_noise(width: usize, height: usize, seed: u64) -> Raster {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Raster::from_fn(width, height, |_, _| StandardNormal.sample(&mut rng))
}

#[inline]
fn predict_eps(x: f64, x0: f64, ab: f64) -> f64 {
    (x - ab.sqrt() * x0) / (1.0 - ab).sqrt()
}

#[inline]
fn ddim_update(x: f64, eps: f64, ab_from: f64, ab_to: f64) -> f64 {
    let x0_hat = (x - (1.0 - ab_from).sqrt() * eps) / ab_from.sqrt();
    ab_to.sqrt() * x0_hat + (1.0 - ab_to).sqrt() * eps
}

/// Clean-image oracle degraded by a `t`-dependent blur.
#[derive(Debug, Clone, PartialEq)]
pub struct AnalyticDenoiser {
    pub clean: Raster,
    /// Blur sigma at `t = T`; zero makes the denoiser exact.
    pub max_blur: f64,
}

impl AnalyticDenoiser {
    pub fn new(clean: Raster, max_blur: f64) -> Result<Self> {
        if !(max_blur >= 0.0) || !max_blur.is_finite() {
            return domain(format!("blur strength must be finite and >= 0, got {max_blur}"));
        }
        Ok(Self { clean, max_blur })
    }

    pub fn perfect(clean: Raster) -> Self {
        Self { clean, max_blur: 0.0 }
    }

    /// Blur sigma used at timestep `t`: `max_blur · t / T`.
    pub fn blur_sigma(&self, t: u32, total_steps: u32) -> f64 {
        self.max_blur * t as f64 / total_steps as f64
    }

    /// The denoiser's estimate of the clean image at timestep `t`.
    pub fn predict_clean(&self, t: u32, total_steps: u32) -> Result<Raster> {
        let sigma = self.blur_sigma(t, total_steps);
        if sigma < 1e-6 {
            return Ok(self.clean.clone());
        }
        let window = 2 * (3.0 * sigma).ceil() as usize + 1;
        gaussian_blur(&self.clean, window, sigma)
    }
}

/// Noise estimate `(x_t - √ᾱ_t·x̃0)/√(1-ᾱ_t)` for the blurred oracle `x̃0`.
pub fn analytic_denoiser(
    x_t: &Raster,
    t: u32,
    denoiser: &AnalyticDenoiser,
    schedule: &NoiseSchedule,
) -> Result<Raster> {
    if t == 0 {
        return domain("the denoiser is not defined at t = 0");
    }
    x_t.check_same_dims(&denoiser.clean, "denoiser input")?;
    let ab = schedule.alpha_bar(t)?;
    let x0 = denoiser.predict_clean(t, schedule.total_steps())?;
    x_t.zip_map(&x0, |x, c| predict_eps(x, c, ab))
}

/// Deterministic DDIM move from `t_from` down to `t_to`.
pub fn ddim_step(x_t: &Raster, t_from: u32, t_to: u32, eps_hat: &Raster, schedule: &NoiseSchedule) -> Result<Raster> {
    if t_to >= t_from {
        return domain(format!("DDIM step must decrease t, got {t_from} -> {t_to}"));
    }
    let (ab_from, ab_to) = (schedule.alpha_bar(t_from)?, schedule.alpha_bar(t_to)?);
    x_t.zip_map(eps_hat, |x, e| ddim_update(x, e, ab_from, ab_to))
}

/// Runs the sampler along `schedule` in reverse, finishing at `t = 0`.
///
/// Records the starting state and every intermediate state. Repeated
/// timesteps (from quantization) are carried over unchanged.
pub fn run_sampler(
    x_start: &Raster,
    schedule: &Schedule,
    denoiser: &AnalyticDenoiser,
    noise: &NoiseSchedule,
) -> Result<Trajectory> {
    if schedule.is_empty() {
        return domain("cannot sample with an empty schedule");
    }
    x_start.check_same_dims(&denoiser.clean, "sampler start")?;
    let mut steps = schedule.denoising_order();
    steps.push(0);
    let mut x = x_start.clone();
    let mut frames = vec![x.clone()];
    for pair in steps.windows(2) {
        let (from, to) = (pair[0], pair[1]);
        if to < from {
            let ab_from = noise.alpha_bar(from)?;
            let ab_to = noise.alpha_bar(to)?;
            let x0 = denoiser.predict_clean(from, noise.total_steps())?;
            for (xi, &ci) in x.data_mut().iter_mut().zip(x0.data()) {
                let eps = predict_eps(*xi, ci, ab_from);
                *xi = ddim_update(*xi, eps, ab_from, ab_to);
            }
        }
        frames.push(x.clone());
    }
    Trajectory::new(frames, steps)
}

/// Lockstep per-pixel sampler: at each iteration every pixel moves from its
/// own current timestep to its own next one, with `ᾱ` and the denoiser's
/// blur evaluated at that pixel's timestep.
///
/// Frames are labelled with the largest per-pixel timestep they sit at.
pub fn run_sampler_spatial(
    x_start: &Raster,
    map: &SpatialScheduleMap,
    denoiser: &AnalyticDenoiser,
    noise: &NoiseSchedule,
) -> Result<Trajectory> {
    if map.width() != x_start.width() || map.height() != x_start.height() {
        return Err(TssError::Shape(format!(
            "schedule map is {}x{}, state is {}x{}",
            map.width(),
            map.height(),
            x_start.width(),
            x_start.height()
        )));
    }
    x_start.check_same_dims(&denoiser.clean, "sampler start")?;
    let iterations = map.steps_per_pixel();
    let zeros = vec![0u32; x_start.len()];

    let mut x = x_start.clone();
    let mut current = map.quantized_timestep_at(iterations)?;
    let mut frames = vec![x.clone()];
    let mut labels = vec![current.iter().copied().max().unwrap_or(0)];

    for k in (0..iterations).rev() {
        let next = if k == 0 {
            zeros.clone()
        } else {
            map.quantized_timestep_at(k)?
        };
        let mut predictions: HashMap<u32, Raster> = HashMap::new();
        for &t in &current {
            if t > 0 && !predictions.contains_key(&t) {
                predictions.insert(t, denoiser.predict_clean(t, noise.total_steps())?);
            }
        }
        for (p, xi) in x.data_mut().iter_mut().enumerate() {
            let (from, to) = (current[p], next[p]);
            if to < from {
                let ab_from = noise.alpha_bar(from)?;
                let ab_to = noise.alpha_bar(to)?;
                let eps = predict_eps(*xi, predictions[&from].data()[p], ab_from);
                *xi = ddim_update(*xi, eps, ab_from, ab_to);
            }
        }
        frames.push(x.clone());
        labels.push(next.iter().copied().max().unwrap_or(0));
        current = next;
    }
    Trajectory::new(frames, labels)
}

/// Synthetic clean image with controlled energy in each frequency band,
/// normalized to unit RMS.
#[derive(Debug, Clone, PartialEq)]
pub struct ToyTarget {
    pub clean: Raster,
}

/// White noise reshaped so band `b` carries `energies[b]` of mean-square power.
fn shaped_noise(width: usize, height: usize, energies: PerBand, seed: u64) -> Result<Raster> {
    if energies.iter().any(|e| !(*e >= 0.0)) || energies.iter().sum::<f64>() <= 0.0 {
        return domain(format!("band energies must be >= 0 and not all zero, got {energies:?}"));
    }
    let white = gaussian_noise(width, height, seed);
    let plan = Fft2Plan::new(width, height);
    let masks = band_masks(width, height, &BandPartition::default());
    let mut spectrum = plan.forward(&white)?;
    let measured = band_powers(&spectrum, &masks);
    let gains = [0, 1, 2].map(|b| {
        if measured[b] > 0.0 {
            (energies[b] / measured[b]).sqrt()
        } else {
            0.0
        }
    });
    spectrum = scale_bands(spectrum, &masks, gains);
    plan.inverse(&spectrum)
}

fn scale_bands(spectrum: Spectrum, masks: &BandMasks, gains: PerBand) -> Spectrum {
    let (w, h) = (spectrum.width(), spectrum.height());
    let bins: Vec<_> = spectrum
        .bins()
        .iter()
        .zip(masks.labels())
        .map(|(c, band)| c * gains[band.index()])
        .collect();
    Spectrum::from_bins(w, h, bins)
}

fn unit_rms(r: Raster) -> Raster {
    let rms = r.rms();
    r.map(|v| v / rms)
}

impl ToyTarget {
    /// Stationary texture whose low/medium/high band powers follow `energies`.
    pub fn band_limited(width: usize, height: usize, energies: PerBand, seed: u64) -> Result<Self> {
        Ok(Self {
            clean: unit_rms(shaped_noise(width, height, energies, seed)?),
        })
    }

    /// Left half carries only low frequencies, right half all three bands equally.
    pub fn split(width: usize, height: usize, seed: u64) -> Result<Self> {
        let smooth = unit_rms(shaped_noise(width, height, [1.0, 0.0, 0.0], seed)?);
        let textured = unit_rms(shaped_noise(width, height, [1.0, 1.0, 1.0], seed.wrapping_add(1))?);
        let clean = Raster::from_fn(width, height, |x, y| {
            if 2 * x < width {
                smooth.get(x, y)
            } else {
                textured.get(x, y)
            }
        });
        Ok(Self { clean: unit_rms(clean) })
    }

    /// The target rescaled into `[0, 1]` as a grayscale image.
    pub fn as_image(&self) -> Result<ImageRaster> {
        ImageRaster::from_gray(minmax_normalize(&self.clean))
    }
}
