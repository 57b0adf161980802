//! The `tss` command line.
//!
//! Exit codes: 0 on success, 1 for I/O failures and malformed inputs, 2 for
//! usage, domain and configuration errors.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::embedding::{build_embedding_map, DEFAULT_MAX_PERIOD};
use crate::error::{Result, TssError};
use crate::experiment::{run_experiment, ExperimentConfig};
use crate::freq::{
    analyze_trajectory, band_masks, classify_patches, noise_delta_series, stratified_band_snr, BandPartition,
    Trajectory,
};
use crate::io;
use crate::raster::Raster;
use crate::schedule::{build_tds_schedule, uniform_schedule, Preset, ResampleKind, SamplerParams, DEFAULT_EXP_SLOPE};
use crate::spatial::{build_spatial_schedule, resize_variance_to_grid, spatial_timestep_at, ProjectionBounds};
use crate::variance::{default_sigma, variance_map, VarianceConfig, DEFAULT_WINDOW};

pub const EXIT_OK: i32 = 0;
pub const EXIT_IO: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(name = "tss", version, about = "Time-spatial-aware timestep scheduling")]
pub struct Cli {
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    pub out: PathBuf,

    /// Overwrite existing output files.
    #[arg(long, global = true)]
    pub force: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a global schedule and write schedule.json and schedule.csv.
    Schedule(ScheduleArgs),
    /// Texture map of an image, written as variance.npy and variance.png.
    Variance(VarianceArgs),
    /// Per-pixel schedules, written as spatial_schedule.npy plus a JSON sidecar.
    SpatialSchedule(SpatialArgs),
    /// Per-location timestep embeddings for one iteration, written as embedding.npy.
    Embed(EmbedArgs),
    /// Band SNR reports for a denoising trajectory.
    Analyze(AnalyzeArgs),
    /// Uniform vs TDS vs TSS on the toy diffusion process.
    Simulate(SimulateArgs),
}

#[derive(Debug, Args)]
pub struct ScheduleArgs {
    /// Training timesteps.
    #[arg(long = "T", default_value_t = 1000)]
    pub total_steps: u32,
    /// Inference steps.
    #[arg(long)]
    pub steps: u32,
    /// Use the midpoint of a backbone preset (stablesr, pasd, supir).
    #[arg(long, conflicts_with_all = ["kind", "n", "a_frac", "k"])]
    pub preset: Option<String>,
    #[arg(long, default_value = "polynomial")]
    pub kind: ResampleKind,
    /// Power factor.
    #[arg(long, default_value_t = 1.0)]
    pub n: f64,
    /// Transition point as a fraction of T.
    #[arg(long, default_value_t = 0.5)]
    pub a_frac: f64,
    /// Slope of the exponential curve.
    #[arg(long, default_value_t = DEFAULT_EXP_SLOPE)]
    pub k: f64,
}

#[derive(Debug, Args)]
pub struct VarianceArgs {
    /// PNG, PGM or PPM image.
    pub input: PathBuf,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
    /// Gaussian sigma; defaults to window / 6.
    #[arg(long)]
    pub sigma: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SpatialArgs {
    /// PNG, PGM or PPM image.
    pub input: PathBuf,
    #[arg(long, conflicts_with = "bounds")]
    pub preset: Option<String>,
    /// Projection bounds as n_min,n_max,a_min,a_max.
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub bounds: Option<Vec<f64>>,
    #[arg(long = "T", default_value_t = 1000)]
    pub total_steps: u32,
    #[arg(long)]
    pub steps: u32,
    /// Schedule grid as WxH; defaults to the image size.
    #[arg(long, value_parser = parse_grid)]
    pub grid: Option<(usize, usize)>,
    #[arg(long, default_value = "polynomial")]
    pub kind: ResampleKind,
    #[arg(long, default_value_t = DEFAULT_WINDOW)]
    pub window: usize,
}

#[derive(Debug, Args)]
pub struct EmbedArgs {
    /// A spatial_schedule.npy with its JSON sidecar next to it.
    pub schedule: PathBuf,
    /// Iteration, 1-based.
    #[arg(long)]
    pub k: usize,
    /// Embedding channels.
    #[arg(long)]
    pub dim: usize,
    #[arg(long, default_value_t = DEFAULT_MAX_PERIOD)]
    pub max_period: f64,
    /// Embed the real-valued timesteps instead of rounding them first.
    #[arg(long)]
    pub exact: bool,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    /// Directory of frame_<t>.png files, or an (N, H, W) .npy stack.
    pub frames: PathBuf,
    /// Timestep labels for an NPY stack, largest first.
    #[arg(long, value_delimiter = ',')]
    pub timesteps: Option<Vec<u32>>,
    #[arg(long, default_value_t = 1.0 / 3.0)]
    pub low_cut: f64,
    #[arg(long, default_value_t = 2.0 / 3.0)]
    pub high_cut: f64,
    /// Patch size for texture stratification.
    #[arg(long, default_value_t = 32)]
    pub patch: usize,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    /// Experiment configuration (JSON). Omitted keys take their defaults.
    pub config: Option<PathBuf>,
}

fn parse_grid(s: &str) -> std::result::Result<(usize, usize), String> {
    let (w, h) = s
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("expected WxH, got `{s}`"))?;
    let w: usize = w.trim().parse().map_err(|e| format!("bad width: {e}"))?;
    let h: usize = h.trim().parse().map_err(|e| format!("bad height: {e}"))?;
    if w == 0 || h == 0 {
        return Err("grid dimensions must be positive".into());
    }
    Ok((w, h))
}

/// Maps an error to its exit code.
pub fn exit_code(err: &TssError) -> i32 {
    match err {
        TssError::Io(_) | TssError::Image(_) | TssError::Format(_) | TssError::Csv(_) | TssError::Json(_) => EXIT_IO,
        TssError::Domain(_) | TssError::Shape(_) | TssError::UnknownPreset(_) | TssError::IndexOutOfRange { .. } => {
            EXIT_USAGE
        }
    }
}

/// Parses `args` (program name first), runs the command and returns the exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli) {
        Ok(()) => EXIT_OK,
        Err(Failure { code, err }) => {
            eprintln!("error: {err}");
            code
        }
    }
}

struct Failure {
    code: i32,
    err: TssError,
}

impl From<TssError> for Failure {
    fn from(err: TssError) -> Self {
        Self {
            code: exit_code(&err),
            err,
        }
    }
}

fn execute(cli: &Cli) -> std::result::Result<(), Failure> {
    let out = Output {
        dir: &cli.out,
        force: cli.force,
    };
    match &cli.command {
        Command::Schedule(a) => cmd_schedule(a, &out)?,
        Command::Variance(a) => cmd_variance(a, &out)?,
        Command::SpatialSchedule(a) => cmd_spatial_schedule(a, &out)?,
        Command::Embed(a) => cmd_embed(a, &out)?,
        Command::Analyze(a) => cmd_analyze(a, &out)?,
        Command::Simulate(a) => cmd_simulate(a, cli.seed, &out)?,
    }
    Ok(())
}

struct Output<'a> {
    dir: &'a Path,
    force: bool,
}

impl Output<'_> {
    /// Resolves output names, refusing to clobber any of them without `--force`.
    fn prepare<const N: usize>(&self, names: [&str; N]) -> Result<[PathBuf; N]> {
        fs::create_dir_all(self.dir)?;
        let paths = names.map(|n| self.dir.join(n));
        for p in &paths {
            io::ensure_writable(p, self.force)?;
        }
        Ok(paths)
    }
}

fn cmd_schedule(a: &ScheduleArgs, out: &Output) -> Result<()> {
    let schedule = match (&a.preset, a.kind) {
        (Some(name), _) => build_tds_schedule(&SamplerParams::from_preset(
            &Preset::load(name)?,
            a.total_steps,
            a.steps,
        ))?,
        (None, ResampleKind::Uniform) => uniform_schedule(a.total_steps, a.steps)?,
        (None, kind) => build_tds_schedule(
            &SamplerParams::new(a.total_steps, a.steps, kind)
                .with_power(a.n)
                .with_transition(a.a_frac)
                .with_exp_slope(a.k),
        )?,
    };
    let [json, csv] = out.prepare(["schedule.json", "schedule.csv"])?;
    fs::write(&json, schedule.to_json()?)?;
    io::write_with(&csv, |w| schedule.write_csv(w))?;

    let t = a.total_steps as f64;
    let (lo, hi) = (0.2 * t, 0.8 * t);
    println!("kind: {}", schedule.kind);
    println!("steps: {:?}", schedule.quantized);
    println!(
        "early/late density: {} of {} steps in [0, {lo}] or [{hi}, {t}]",
        schedule.count_in_extremes(lo, hi),
        schedule.len()
    );
    log::info!("wrote {} and {}", json.display(), csv.display());
    Ok(())
}

fn cmd_variance(a: &VarianceArgs, out: &Output) -> Result<()> {
    let img = io::read_image(&a.input)?;
    let config = VarianceConfig {
        window: a.window,
        sigma: a.sigma.unwrap_or_else(|| default_sigma(a.window)),
    };
    let vmap = variance_map(&img, config)?;
    let [npy, png] = out.prepare(["variance.npy", "variance.png"])?;
    io::write_raster_npy(&npy, vmap.raster())?;
    io::write_png_gray(&png, vmap.raster())?;
    let (min, max) = vmap.raster().min_max();
    println!("variance map {}x{}, range [{min}, {max}]", vmap.width(), vmap.height());
    Ok(())
}

fn cmd_spatial_schedule(a: &SpatialArgs, out: &Output) -> Result<()> {
    let bounds = match (&a.preset, &a.bounds) {
        (Some(name), _) => ProjectionBounds::from(Preset::load(name)?),
        (None, Some(b)) => match b[..] {
            [n_min, n_max, a_min, a_max] => ProjectionBounds::new(n_min, n_max, a_min, a_max)?,
            _ => return Err(TssError::Domain(format!("--bounds takes 4 values, got {}", b.len()))),
        },
        (None, None) => ProjectionBounds::from(Preset::SUPIR),
    };
    let img = io::read_image(&a.input)?;
    let mut vmap = variance_map(&img, VarianceConfig::with_window(a.window))?;
    if let Some((w, h)) = a.grid {
        vmap = resize_variance_to_grid(&vmap, w, h)?;
    }
    let map = build_spatial_schedule(&vmap, &bounds, a.total_steps, a.steps, a.kind)?;
    let [npy, _] = out.prepare(["spatial_schedule.npy", "spatial_schedule.json"])?;
    io::write_spatial_schedule(&npy, &map)?;
    let [h, w, s] = map.shape();
    println!("spatial schedule {h}x{w}x{s}");
    Ok(())
}

fn cmd_embed(a: &EmbedArgs, out: &Output) -> Result<()> {
    let map = io::read_spatial_schedule(&a.schedule)?;
    let timesteps = if a.exact {
        spatial_timestep_at(&map, a.k)?
    } else {
        let q = map.quantized_timestep_at(a.k)?;
        Raster::new(map.width(), map.height(), q.into_iter().map(f64::from).collect())?
    };
    let emap = build_embedding_map(&timesteps, a.dim, a.max_period)?;
    let [npy] = out.prepare(["embedding.npy"])?;
    io::write_embedding_npy(&npy, &emap)?;
    let [h, w, c] = emap.shape();
    println!("embedding map {h}x{w}x{c} for iteration {}", a.k);
    Ok(())
}

fn load_trajectory(a: &AnalyzeArgs) -> Result<Trajectory> {
    if a.frames.is_dir() {
        io::read_frame_dir(&a.frames)
    } else {
        io::read_frame_stack(&a.frames, a.timesteps.clone())
    }
}

fn cmd_analyze(a: &AnalyzeArgs, out: &Output) -> Result<()> {
    let partition = BandPartition::new(a.low_cut, a.high_cut)?;
    if a.patch == 0 {
        return Err(TssError::Domain("patch size must be positive".into()));
    }
    let traj = load_trajectory(a)?;
    let reference = traj.reference();
    let masks = band_masks(reference.width(), reference.height(), &partition);
    let report = analyze_trajectory(&traj, &masks)?;

    let [snr_csv, delta_csv, strat_csv] = out.prepare(["band_snr.csv", "noise_delta.csv", "stratified_snr.csv"])?;
    io::write_with(&snr_csv, |w| report.write_csv(w))?;

    io::write_with(&delta_csv, |w| {
        let mut wtr = csv::Writer::from_writer(w);
        wtr.write_record(["step_from", "step_to", "delta_low", "delta_medium", "delta_high"])?;
        if traj.len() >= 3 {
            let ts = traj.timesteps();
            for (i, d) in noise_delta_series(&traj, &masks)?.iter().enumerate() {
                let mut rec = vec![ts[i].to_string(), ts[i + 1].to_string()];
                rec.extend(d.iter().map(|v| v.to_string()));
                wtr.write_record(&rec)?;
            }
        }
        wtr.flush()?;
        Ok(())
    })?;

    let stratified = if reference.width() >= a.patch && reference.height() >= a.patch {
        let classes = classify_patches(reference, a.patch)?;
        stratified_band_snr(&traj, &classes, &band_masks(a.patch, a.patch, &partition))?
    } else {
        log::warn!(
            "frames are smaller than one {0}x{0} patch; stratified report left empty",
            a.patch
        );
        Default::default()
    };
    io::write_with(&strat_csv, |w| stratified.write_csv(w))?;

    println!("analyzed {} frames ({} reported steps)", traj.len(), report.steps());
    Ok(())
}

fn cmd_simulate(a: &SimulateArgs, seed: u64, out: &Output) -> std::result::Result<(), Failure> {
    let cfg = match &a.config {
        Some(path) => {
            let text = fs::read_to_string(path).map_err(TssError::from)?;
            ExperimentConfig::from_json(&text).map_err(|err| Failure { code: EXIT_USAGE, err })?
        }
        None => ExperimentConfig::default(),
    };
    let outcome = run_experiment(&cfg, seed).map_err(|err| Failure { code: EXIT_USAGE, err })?;

    let names: Vec<String> = outcome
        .strategies
        .iter()
        .flat_map(|s| [format!("trajectory_{}.npy", s.name), format!("band_snr_{}.csv", s.name)])
        .collect();
    let [comparison, clean] = out.prepare(["comparison.csv", "clean.npy"])?;
    let mut artifacts = Vec::with_capacity(names.len());
    for n in &names {
        let [p] = out.prepare([n.as_str()])?;
        artifacts.push(p);
    }

    io::write_raster_npy(&clean, &outcome.clean)?;
    let masks = band_masks(cfg.size, cfg.size, &BandPartition::new(cfg.low_cut, cfg.high_cut)?);
    for (s, paths) in outcome.strategies.iter().zip(artifacts.chunks(2)) {
        io::write_frame_stack(&paths[0], &s.trajectory)?;
        let report = analyze_trajectory(&s.trajectory, &masks)?;
        io::write_with(&paths[1], |w| report.write_csv(w))?;
    }
    io::write_with(&comparison, |w| outcome.write_comparison_csv(w, cfg.T_prime))?;

    println!("seed {}, T={}, T'={}", outcome.seed, cfg.T, cfg.T_prime);
    for s in &outcome.strategies {
        println!(
            "{:<8} snr low {:>8.3} dB  medium {:>8.3} dB  high {:>8.3} dB",
            s.name, s.snr_db[0], s.snr_db[1], s.snr_db[2]
        );
    }
    Ok(())
}
