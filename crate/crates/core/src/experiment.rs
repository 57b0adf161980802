//! Uniform vs TDS vs TSS on the analytic toy process.
//!
//! All three strategies start from the same noised state and are scored by
//! band SNR of their final output against the clean target, overall and per
//! texture class of the target's patches.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};
use crate::freq::{band_masks, band_snr, classify_patches, BandPartition, PerBand, TextureClass, Trajectory};
use crate::raster::Raster;
use crate::schedule::{build_tds_schedule, uniform_schedule, Preset, ResampleKind, SamplerParams};
use crate::spatial::{build_spatial_schedule, ProjectionBounds};
use crate::toy::{
    forward_noise, gaussian_noise, make_noise_schedule, run_sampler, run_sampler_spatial, AnalyticDenoiser, ToyTarget,
    DEFAULT_BETA_END, DEFAULT_BETA_START, DEFAULT_MAX_BLUR,
};
use crate::variance::{variance_map, VarianceConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fixture {
    /// Smooth left half, textured right half.
    Split,
    /// Stationary texture with the configured band energies.
    Bands,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
#[allow(non_snake_case)]
pub struct ExperimentConfig {
    /// Overrides the command-line seed when present.
    pub seed: Option<u64>,
    pub T: u32,
    pub T_prime: u32,
    pub preset: String,
    /// Blur of the denoiser's clean prediction at `t = T`; 0 makes it perfect.
    pub blur: f64,
    pub fixture: Fixture,
    pub band_energies: PerBand,
    pub size: usize,
    pub patch: usize,
    pub window: usize,
    pub low_cut: f64,
    pub high_cut: f64,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        let part = BandPartition::default();
        Self {
            seed: None,
            T: 1000,
            T_prime: 7,
            preset: "supir".to_string(),
            blur: DEFAULT_MAX_BLUR,
            fixture: Fixture::Split,
            band_energies: [1.0, 1.0, 1.0],
            size: 128,
            patch: 32,
            window: 33,
            low_cut: part.low_cut,
            high_cut: part.high_cut,
        }
    }
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: Self = serde_json::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.T == 0 || self.T_prime == 0 || self.T_prime > self.T {
            return domain(format!(
                "need 0 < T_prime <= T, got T={} T_prime={}",
                self.T, self.T_prime
            ));
        }
        if !(self.blur >= 0.0) || !self.blur.is_finite() {
            return domain(format!("blur must be finite and >= 0, got {}", self.blur));
        }
        if self.patch == 0 || self.size < self.patch {
            return domain(format!(
                "size {} must hold at least one {}-pixel patch",
                self.size, self.patch
            ));
        }
        if self.window == 0 || self.window.is_multiple_of(2) {
            return domain(format!("window must be odd, got {}", self.window));
        }
        Preset::load(&self.preset)?;
        BandPartition::new(self.low_cut, self.high_cut)?;
        Ok(())
    }

    fn seed_or(&self, fallback: u64) -> u64 {
        self.seed.unwrap_or(fallback)
    }
}

/// One sampling strategy's run.
#[derive(Debug, Clone)]
pub struct StrategyOutcome {
    pub name: &'static str,
    pub trajectory: Trajectory,
    /// Band SNR of the final output against the clean target.
    pub snr_db: PerBand,
    /// High-band SNR per texture class, averaged in dB over the class's patches.
    pub high_snr_by_class: [f64; 3],
}

impl StrategyOutcome {
    pub fn output(&self) -> &Raster {
        self.trajectory.reference()
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub seed: u64,
    pub clean: Raster,
    pub strategies: Vec<StrategyOutcome>,
}

pub const COMPARISON_HEADER: [&str; 8] = [
    "strategy",
    "steps",
    "snr_low_db",
    "snr_medium_db",
    "snr_high_db",
    "high_snr_smooth_db",
    "high_snr_medium_db",
    "high_snr_high_db",
];

impl ExperimentOutcome {
    pub fn strategy(&self, name: &str) -> Option<&StrategyOutcome> {
        self.strategies.iter().find(|s| s.name == name)
    }

    pub fn write_comparison_csv<W: Write>(&self, out: W, steps: u32) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(COMPARISON_HEADER)?;
        for s in &self.strategies {
            let mut rec = vec![s.name.to_string(), steps.to_string()];
            rec.extend(s.snr_db.iter().map(|v| v.to_string()));
            rec.extend(s.high_snr_by_class.iter().map(|v| v.to_string()));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn score(
    output: &Raster,
    clean: &Raster,
    cfg: &ExperimentConfig,
    partition: &BandPartition,
) -> Result<(PerBand, [f64; 3])> {
    let full = band_masks(clean.width(), clean.height(), partition);
    let snr = band_snr(output, clean, &full)?;
    let patch_masks = band_masks(cfg.patch, cfg.patch, partition);
    let patches = classify_patches(clean, cfg.patch)?;
    let mut sums = [0.0; 3];
    let mut counts = [0usize; 3];
    for p in &patches {
        let c = TextureClass::ALL
            .iter()
            .position(|&c| c == p.label)
            .expect("known class");
        let a = output.crop(p.x, p.y, p.size, p.size)?;
        let b = clean.crop(p.x, p.y, p.size, p.size)?;
        sums[c] += band_snr(&a, &b, &patch_masks)?[2];
        counts[c] += 1;
    }
    let by_class = [0, 1, 2].map(|c| {
        if counts[c] > 0 {
            sums[c] / counts[c] as f64
        } else {
            f64::NAN
        }
    });
    Ok((snr, by_class))
}

/// Runs the three strategies. `fallback_seed` is used when the config has none.
pub fn run_experiment(cfg: &ExperimentConfig, fallback_seed: u64) -> Result<ExperimentOutcome> {
    cfg.validate()?;
    let seed = cfg.seed_or(fallback_seed);
    let partition = BandPartition::new(cfg.low_cut, cfg.high_cut)?;
    let target = match cfg.fixture {
        Fixture::Split => ToyTarget::split(cfg.size, cfg.size, seed)?,
        Fixture::Bands => ToyTarget::band_limited(cfg.size, cfg.size, cfg.band_energies, seed)?,
    };
    let clean = target.clean.clone();
    let noise = make_noise_schedule(cfg.T, DEFAULT_BETA_START, DEFAULT_BETA_END)?;
    let eps = gaussian_noise(cfg.size, cfg.size, seed.wrapping_add(0x5eed));
    let x_start = forward_noise(&clean, cfg.T, &eps, &noise)?;
    let denoiser = AnalyticDenoiser::new(clean.clone(), cfg.blur)?;
    let preset = Preset::load(&cfg.preset)?;

    let uniform = uniform_schedule(cfg.T, cfg.T_prime)?;
    let tds = build_tds_schedule(&SamplerParams::from_preset(&preset, cfg.T, cfg.T_prime))?;
    let vmap = variance_map(&target.as_image()?, VarianceConfig::with_window(cfg.window))?;
    let smap = build_spatial_schedule(
        &vmap,
        &ProjectionBounds::from(preset),
        cfg.T,
        cfg.T_prime,
        ResampleKind::Polynomial,
    )?;

    let runs = [
        ("uniform", run_sampler(&x_start, &uniform, &denoiser, &noise)?),
        ("tds", run_sampler(&x_start, &tds, &denoiser, &noise)?),
        ("tss", run_sampler_spatial(&x_start, &smap, &denoiser, &noise)?),
    ];
    let mut strategies = Vec::with_capacity(3);
    for (name, trajectory) in runs {
        let (snr_db, high_snr_by_class) = score(trajectory.reference(), &clean, cfg, &partition)?;
        strategies.push(StrategyOutcome {
            name,
            trajectory,
            snr_db,
            high_snr_by_class,
        });
    }
    Ok(ExperimentOutcome {
        seed,
        clean,
        strategies,
    })
}
