//! Frequency-band analysis of denoising trajectories.
//!
//! Frames are compared against the trajectory's final frame. Spectra are
//! split into three radial bands (low, medium, high). Band SNR is the ratio of
//! reference band power to residual band power in decibels. Noise deltas
//! track how the residual band power changes from one step to the next.

use std::fmt;
use std::io::Write;
use std::sync::Arc;

use rustfft::num_complex::Complex;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, TssError};
use crate::raster::Raster;

/// Unnormalized 2-D spectrum in natural (unshifted) bin order.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    width: usize,
    height: usize,
    data: Vec<Complex<f64>>,
}

impl Spectrum {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bins(&self) -> &[Complex<f64>] {
        &self.data
    }

    /// # Panics
    /// If `bins.len() != width * height`.
    pub fn from_bins(width: usize, height: usize, bins: Vec<Complex<f64>>) -> Self {
        assert_eq!(bins.len(), width * height, "bin count does not match dimensions");
        Self {
            width,
            height,
            data: bins,
        }
    }

    pub fn get(&self, u: usize, v: usize) -> Complex<f64> {
        self.data[v * self.width + u]
    }
}

/// Planned row and column transforms for one raster size.
pub struct Fft2Plan {
    width: usize,
    height: usize,
    row_fwd: Arc<dyn Fft<f64>>,
    col_fwd: Arc<dyn Fft<f64>>,
    row_inv: Arc<dyn Fft<f64>>,
    col_inv: Arc<dyn Fft<f64>>,
}

fn transpose(src: &[Complex<f64>], width: usize, height: usize) -> Vec<Complex<f64>> {
    let mut out = vec![Complex::default(); src.len()];
    for y in 0..height {
        for x in 0..width {
            out[x * height + y] = src[y * width + x];
        }
    }
    out
}

impl Fft2Plan {
    pub fn new(width: usize, height: usize) -> Self {
        let mut planner = FftPlanner::new();
        Self {
            width,
            height,
            row_fwd: planner.plan_fft_forward(width),
            col_fwd: planner.plan_fft_forward(height),
            row_inv: planner.plan_fft_inverse(width),
            col_inv: planner.plan_fft_inverse(height),
        }
    }

    fn run(&self, mut buf: Vec<Complex<f64>>, rows: &dyn Fft<f64>, cols: &dyn Fft<f64>) -> Vec<Complex<f64>> {
        rows.process(&mut buf);
        let mut t = transpose(&buf, self.width, self.height);
        cols.process(&mut t);
        transpose(&t, self.height, self.width)
    }

    pub fn forward(&self, raster: &Raster) -> Result<Spectrum> {
        if raster.width() != self.width || raster.height() != self.height {
            return Err(TssError::Shape(format!(
                "plan is {}x{}, raster is {}x{}",
                self.width,
                self.height,
                raster.width(),
                raster.height()
            )));
        }
        let buf = raster.data().iter().map(|&v| Complex::new(v, 0.0)).collect();
        let data = self.run(buf, self.row_fwd.as_ref(), self.col_fwd.as_ref());
        Ok(Spectrum {
            width: self.width,
            height: self.height,
            data,
        })
    }

    /// Inverse transform scaled by `1/N`; returns the real part.
    pub fn inverse(&self, spectrum: &Spectrum) -> Result<Raster> {
        if spectrum.width != self.width || spectrum.height != self.height {
            return Err(TssError::Shape("spectrum does not match plan".into()));
        }
        let data = self.run(spectrum.data.clone(), self.row_inv.as_ref(), self.col_inv.as_ref());
        let scale = 1.0 / data.len() as f64;
        Raster::new(self.width, self.height, data.iter().map(|c| c.re * scale).collect())
    }
}

/// Forward 2-D DFT without normalization.
pub fn fft2(raster: &Raster) -> Spectrum {
    Fft2Plan::new(raster.width(), raster.height())
        .forward(raster)
        .expect("plan matches raster")
}

/// Inverse of [`fft2`].
pub fn ifft2(spectrum: &Spectrum) -> Raster {
    Fft2Plan::new(spectrum.width, spectrum.height)
        .inverse(spectrum)
        .expect("plan matches spectrum")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Band {
    Low,
    Medium,
    High,
}

impl Band {
    pub const ALL: [Band; 3] = [Band::Low, Band::Medium, Band::High];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Band::Low => "low",
            Band::Medium => "medium",
            Band::High => "high",
        }
    }
}

impl fmt::Display for Band {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// One value per band, indexed by [`Band::index`].
pub type PerBand = [f64; 3];

/// Radial cut-offs as fractions of the Nyquist radius.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandPartition {
    pub low_cut: f64,
    pub high_cut: f64,
}

impl Default for BandPartition {
    fn default() -> Self {
        Self {
            low_cut: 1.0 / 3.0,
            high_cut: 2.0 / 3.0,
        }
    }
}

impl BandPartition {
    pub fn new(low_cut: f64, high_cut: f64) -> Result<Self> {
        if !(0.0 < low_cut && low_cut < high_cut && high_cut < 1.0) {
            return domain(format!(
                "band cuts must satisfy 0 < low < high < 1, got ({low_cut}, {high_cut})"
            ));
        }
        Ok(Self { low_cut, high_cut })
    }
}

/// Signed frequency index of bin `i` in an `n`-point DFT (Nyquist negative).
fn signed_frequency(i: usize, n: usize) -> f64 {
    if 2 * i < n {
        i as f64
    } else {
        i as f64 - n as f64
    }
}

/// Radius of bin `(u, v)` relative to the Nyquist radius along each axis.
pub fn normalized_radius(u: usize, v: usize, width: usize, height: usize) -> f64 {
    let fx = signed_frequency(u, width) / (width as f64 / 2.0);
    let fy = signed_frequency(v, height) / (height as f64 / 2.0);
    (fx * fx + fy * fy).sqrt()
}

/// Band label of every spectrum bin, in natural bin order.
#[derive(Debug, Clone, PartialEq)]
pub struct BandMasks {
    width: usize,
    height: usize,
    labels: Vec<Band>,
}

impl BandMasks {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn band_of(&self, u: usize, v: usize) -> Band {
        self.labels[v * self.width + u]
    }

    pub fn labels(&self) -> &[Band] {
        &self.labels
    }

    /// Boolean raster of the bins belonging to `band`.
    pub fn mask(&self, band: Band) -> Vec<bool> {
        self.labels.iter().map(|&b| b == band).collect()
    }

    pub fn population(&self, band: Band) -> usize {
        self.labels.iter().filter(|&&b| b == band).count()
    }
}

pub fn band_masks(width: usize, height: usize, partition: &BandPartition) -> BandMasks {
    let mut labels = Vec::with_capacity(width * height);
    for v in 0..height {
        for u in 0..width {
            let r = normalized_radius(u, v, width, height);
            labels.push(if r <= partition.low_cut {
                Band::Low
            } else if r <= partition.high_cut {
                Band::Medium
            } else {
                Band::High
            });
        }
    }
    BandMasks { width, height, labels }
}

fn check_masks(raster: &Raster, masks: &BandMasks) -> Result<()> {
    if raster.width() != masks.width || raster.height() != masks.height {
        return Err(TssError::Shape(format!(
            "masks are {}x{}, raster is {}x{}",
            masks.width,
            masks.height,
            raster.width(),
            raster.height()
        )));
    }
    Ok(())
}

/// Spectral power of each band, scaled by `1/N²` so the bands sum to the
/// mean square of the raster.
pub fn band_powers(spectrum: &Spectrum, masks: &BandMasks) -> PerBand {
    let n = spectrum.data.len() as f64;
    let mut out = [0.0; 3];
    for (c, band) in spectrum.data.iter().zip(&masks.labels) {
        out[band.index()] += c.norm_sqr();
    }
    out.map(|p| p / (n * n))
}

fn snr_db(signal: f64, noise: f64) -> f64 {
    if noise == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (signal / noise).log10()
    }
}

/// Per-band SNR of `frame` against `reference`; `+∞` marks a noise-free band.
pub fn band_snr(frame: &Raster, reference: &Raster, masks: &BandMasks) -> Result<PerBand> {
    frame.check_same_dims(reference, "band_snr")?;
    check_masks(reference, masks)?;
    let plan = Fft2Plan::new(masks.width, masks.height);
    let (signal, noise) = signal_and_noise(&plan, frame, reference, masks)?;
    Ok([0, 1, 2].map(|b| snr_db(signal[b], noise[b])))
}

fn signal_and_noise(
    plan: &Fft2Plan,
    frame: &Raster,
    reference: &Raster,
    masks: &BandMasks,
) -> Result<(PerBand, PerBand)> {
    let signal = band_powers(&plan.forward(reference)?, masks);
    let residual = reference.zip_map(frame, |r, f| r - f)?;
    let noise = band_powers(&plan.forward(&residual)?, masks);
    Ok((signal, noise))
}

/// Frames of a denoising run, noisiest first; the last frame is the reference.
#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    frames: Vec<Raster>,
    timesteps: Vec<u32>,
}

impl Trajectory {
    pub fn new(frames: Vec<Raster>, timesteps: Vec<u32>) -> Result<Self> {
        if frames.len() < 2 {
            return domain(format!("a trajectory needs at least 2 frames, got {}", frames.len()));
        }
        if frames.len() != timesteps.len() {
            return Err(TssError::Shape(format!(
                "{} frames but {} timesteps",
                frames.len(),
                timesteps.len()
            )));
        }
        for f in &frames[1..] {
            f.check_same_dims(&frames[0], "trajectory frame")?;
        }
        if timesteps.windows(2).any(|w| w[1] > w[0]) {
            return domain("trajectory timesteps must be non-increasing");
        }
        Ok(Self { frames, timesteps })
    }

    pub fn frames(&self) -> &[Raster] {
        &self.frames
    }

    pub fn timesteps(&self) -> &[u32] {
        &self.timesteps
    }

    pub fn len(&self) -> usize {
        self.frames.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frames.is_empty()
    }

    pub fn reference(&self) -> &Raster {
        self.frames.last().expect("at least two frames")
    }

    /// The same window cut out of every frame.
    pub fn crop(&self, x0: usize, y0: usize, width: usize, height: usize) -> Result<Trajectory> {
        let frames = self
            .frames
            .iter()
            .map(|f| f.crop(x0, y0, width, height))
            .collect::<Result<_>>()?;
        Ok(Trajectory {
            frames,
            timesteps: self.timesteps.clone(),
        })
    }
}

/// One `(step, band)` row of a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BandSnrRow {
    pub step: u32,
    pub band: Band,
    pub snr_db: f64,
    pub noise_power: f64,
    /// Change in residual power to the next non-final step; absent on the
    /// last non-final step.
    pub delta_noise: Option<f64>,
}

/// Band statistics for every non-final frame of a trajectory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct BandSnrReport {
    pub rows: Vec<BandSnrRow>,
}

impl BandSnrReport {
    /// Row for frame `step_index` (0-based over non-final frames) and `band`.
    pub fn row(&self, step_index: usize, band: Band) -> &BandSnrRow {
        &self.rows[step_index * 3 + band.index()]
    }

    pub fn steps(&self) -> usize {
        self.rows.len() / 3
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["step", "band", "snr_db", "noise_power", "delta_noise"])?;
        for r in &self.rows {
            wtr.write_record(row_fields(r))?;
        }
        wtr.flush()?;
        Ok(())
    }
}

fn row_fields(r: &BandSnrRow) -> [String; 5] {
    [
        r.step.to_string(),
        r.band.to_string(),
        r.snr_db.to_string(),
        r.noise_power.to_string(),
        r.delta_noise.map(|d| d.to_string()).unwrap_or_default(),
    ]
}

fn assemble_report(timesteps: &[u32], signal: &[PerBand], noise: &[PerBand]) -> BandSnrReport {
    let steps = signal.len();
    let mut rows = Vec::with_capacity(steps * 3);
    for i in 0..steps {
        for band in Band::ALL {
            let b = band.index();
            rows.push(BandSnrRow {
                step: timesteps[i],
                band,
                snr_db: snr_db(signal[i][b], noise[i][b]),
                noise_power: noise[i][b],
                delta_noise: (i + 1 < steps).then(|| noise[i + 1][b] - noise[i][b]),
            });
        }
    }
    BandSnrReport { rows }
}

fn trajectory_powers(traj: &Trajectory, masks: &BandMasks) -> Result<(Vec<PerBand>, Vec<PerBand>)> {
    check_masks(traj.reference(), masks)?;
    let plan = Fft2Plan::new(masks.width, masks.height);
    let reference = traj.reference();
    let n = traj.len() - 1;
    let mut signal = Vec::with_capacity(n);
    let mut noise = Vec::with_capacity(n);
    for frame in &traj.frames[..n] {
        let (s, e) = signal_and_noise(&plan, frame, reference, masks)?;
        signal.push(s);
        noise.push(e);
    }
    Ok((signal, noise))
}

/// SNR, residual power and noise delta for each non-final frame and band.
pub fn analyze_trajectory(traj: &Trajectory, masks: &BandMasks) -> Result<BandSnrReport> {
    let (signal, noise) = trajectory_powers(traj, masks)?;
    Ok(assemble_report(&traj.timesteps, &signal, &noise))
}

/// Stepwise change in residual band power, `noise[i+1] - noise[i]`, over
/// consecutive non-final frames.
pub fn noise_delta_series(traj: &Trajectory, masks: &BandMasks) -> Result<Vec<PerBand>> {
    if traj.len() < 3 {
        return domain(format!("noise deltas need at least 3 frames, got {}", traj.len()));
    }
    let (_, noise) = trajectory_powers(traj, masks)?;
    Ok(noise.windows(2).map(|w| [0, 1, 2].map(|b| w[1][b] - w[0][b])).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TextureClass {
    Smooth,
    Medium,
    High,
}

impl TextureClass {
    pub const ALL: [TextureClass; 3] = [TextureClass::Smooth, TextureClass::Medium, TextureClass::High];

    pub fn as_str(self) -> &'static str {
        match self {
            TextureClass::Smooth => "smooth",
            TextureClass::Medium => "medium",
            TextureClass::High => "high",
        }
    }
}

impl fmt::Display for TextureClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A non-overlapping square patch and its texture class.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchClass {
    pub label: TextureClass,
    pub x: usize,
    pub y: usize,
    pub size: usize,
    pub variance: f64,
}

/// Linear-interpolation quantile of sorted data.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Splits the image into `patch`-sized tiles (partial edge tiles dropped) and
/// labels them by variance tercile. Ties go to the lower class.
pub fn classify_patches(img: &Raster, patch: usize) -> Result<Vec<PatchClass>> {
    if patch == 0 || img.width() < patch || img.height() < patch {
        return domain(format!(
            "image {}x{} is smaller than one {patch}x{patch} patch",
            img.width(),
            img.height()
        ));
    }
    let mut patches = Vec::new();
    for py in 0..img.height() / patch {
        for px in 0..img.width() / patch {
            let (x, y) = (px * patch, py * patch);
            let variance = img.crop(x, y, patch, patch)?.variance();
            patches.push(PatchClass {
                label: TextureClass::Smooth,
                x,
                y,
                size: patch,
                variance,
            });
        }
    }
    let mut sorted: Vec<f64> = patches.iter().map(|p| p.variance).collect();
    sorted.sort_by(f64::total_cmp);
    let (t1, t2) = (quantile(&sorted, 1.0 / 3.0), quantile(&sorted, 2.0 / 3.0));
    for p in &mut patches {
        p.label = if p.variance <= t1 {
            TextureClass::Smooth
        } else if p.variance <= t2 {
            TextureClass::Medium
        } else {
            TextureClass::High
        };
    }
    Ok(patches)
}

/// Per-class band statistics. SNR (dB) and residual power are averaged over
/// the class's patches; deltas come from the averaged residual power.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct StratifiedReport {
    pub classes: Vec<(TextureClass, BandSnrReport)>,
}

impl StratifiedReport {
    pub fn get(&self, class: TextureClass) -> Option<&BandSnrReport> {
        self.classes.iter().find(|(c, _)| *c == class).map(|(_, r)| r)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["class", "step", "band", "snr_db", "noise_power", "delta_noise"])?;
        for (class, report) in &self.classes {
            for r in &report.rows {
                let [a, b, c, d, e] = row_fields(r);
                wtr.write_record([class.to_string(), a, b, c, d, e])?;
            }
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Band statistics per texture class; `masks` must match the patch size.
/// Classes without patches produce no rows.
pub fn stratified_band_snr(traj: &Trajectory, classes: &[PatchClass], masks: &BandMasks) -> Result<StratifiedReport> {
    let mut out = StratifiedReport::default();
    for class in TextureClass::ALL {
        let members: Vec<&PatchClass> = classes.iter().filter(|p| p.label == class).collect();
        if members.is_empty() {
            continue;
        }
        let steps = traj.len() - 1;
        let mut snr_sum = vec![[0.0; 3]; steps];
        let mut noise_sum = vec![[0.0; 3]; steps];
        for p in &members {
            if p.size != masks.width || p.size != masks.height {
                return Err(TssError::Shape(format!("patch size {} does not match masks", p.size)));
            }
            let sub = traj.crop(p.x, p.y, p.size, p.size)?;
            let (signal, noise) = trajectory_powers(&sub, masks)?;
            for i in 0..steps {
                for b in 0..3 {
                    snr_sum[i][b] += snr_db(signal[i][b], noise[i][b]);
                    noise_sum[i][b] += noise[i][b];
                }
            }
        }
        let count = members.len() as f64;
        let noise_mean: Vec<PerBand> = noise_sum.iter().map(|n| n.map(|v| v / count)).collect();
        let mut report = assemble_report(&traj.timesteps, &vec![[0.0; 3]; steps], &noise_mean);
        for (i, chunk) in report.rows.chunks_mut(3).enumerate() {
            for r in chunk {
                r.snr_db = snr_sum[i][r.band.index()] / count;
            }
        }
        out.classes.push((class, report));
    }
    Ok(out)
}
