//! Uniform timestep schedules and the non-uniform resampling functions that
//! concentrate inference steps near both ends of the diffusion trajectory.
//!
//! Schedules are stored ascending (`t_1 < ... < t_T'`); samplers walk them in
//! reverse. The transition point is always given as a fraction of `T` and
//! converted to an absolute timestep internally.

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, TssError};

/// Slope of the logistic resampling curve when none is given.
pub const DEFAULT_EXP_SLOPE: f64 = 0.004;

/// Which resampling curve maps uniform steps onto the final schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ResampleKind {
    Uniform,
    Polynomial,
    Trigonometric,
    Exponential,
}

impl ResampleKind {
    pub const ALL: [ResampleKind; 4] = [
        ResampleKind::Uniform,
        ResampleKind::Polynomial,
        ResampleKind::Trigonometric,
        ResampleKind::Exponential,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ResampleKind::Uniform => "uniform",
            ResampleKind::Polynomial => "polynomial",
            ResampleKind::Trigonometric => "trigonometric",
            ResampleKind::Exponential => "exponential",
        }
    }
}

impl fmt::Display for ResampleKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for ResampleKind {
    type Err = TssError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "uniform" => Ok(ResampleKind::Uniform),
            "polynomial" | "poly" => Ok(ResampleKind::Polynomial),
            "trigonometric" | "trig" => Ok(ResampleKind::Trigonometric),
            "exponential" | "exp" => Ok(ResampleKind::Exponential),
            other => domain(format!("unknown schedule kind `{other}`")),
        }
    }
}

/// Parameters of a resampled schedule.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SamplerParams {
    /// Number of training timesteps `T`.
    pub total_steps: u32,
    /// Number of inference steps `T'`.
    pub inference_steps: u32,
    /// Power factor `n`; 1 reproduces the uniform schedule.
    pub power: f64,
    /// Transition point between the early and late stages, as a fraction of `T`.
    pub transition: f64,
    pub kind: ResampleKind,
    /// Slope `k` of the exponential curve.
    pub exp_slope: f64,
}

impl SamplerParams {
    pub fn new(total_steps: u32, inference_steps: u32, kind: ResampleKind) -> Self {
        Self {
            total_steps,
            inference_steps,
            power: 1.0,
            transition: 0.5,
            kind,
            exp_slope: DEFAULT_EXP_SLOPE,
        }
    }

    /// Polynomial parameters at the midpoint of a preset's `(n, a)` box.
    pub fn from_preset(preset: &Preset, total_steps: u32, inference_steps: u32) -> Self {
        let (power, transition) = preset.midpoint();
        Self::new(total_steps, inference_steps, ResampleKind::Polynomial)
            .with_power(power)
            .with_transition(transition)
    }

    pub fn with_power(mut self, power: f64) -> Self {
        self.power = power;
        self
    }

    pub fn with_transition(mut self, transition: f64) -> Self {
        self.transition = transition;
        self
    }

    pub fn with_exp_slope(mut self, slope: f64) -> Self {
        self.exp_slope = slope;
        self
    }

    pub fn with_kind(mut self, kind: ResampleKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn validate(&self) -> Result<()> {
        check_step_counts(self.total_steps, self.inference_steps)?;
        if !(self.power >= 1.0) || !self.power.is_finite() {
            return domain(format!("power n must be a finite value >= 1, got {}", self.power));
        }
        if !(0.0..=1.0).contains(&self.transition) {
            return domain(format!(
                "transition fraction must lie in [0, 1], got {}",
                self.transition
            ));
        }
        if !(self.exp_slope > 0.0) || !self.exp_slope.is_finite() {
            return domain(format!("exponential slope must be positive, got {}", self.exp_slope));
        }
        Ok(())
    }

    /// The transition point as an absolute timestep.
    pub fn transition_step(&self) -> f64 {
        self.transition * self.total_steps as f64
    }
}

/// An ascending list of timesteps together with its integer quantization.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Schedule {
    #[serde(rename = "T")]
    pub total_steps: u32,
    #[serde(rename = "T_prime")]
    pub inference_steps: u32,
    pub kind: ResampleKind,
    #[serde(rename = "n")]
    pub power: f64,
    #[serde(rename = "a_frac")]
    pub transition: f64,
    /// Logistic slope, present only for exponential schedules.
    #[serde(rename = "k", default, skip_serializing_if = "Option::is_none")]
    pub exp_slope: Option<f64>,
    #[serde(rename = "steps_real")]
    pub steps: Vec<f64>,
    #[serde(rename = "steps_int")]
    pub quantized: Vec<u32>,
}

impl Schedule {
    fn from_real(params: &SamplerParams, steps: Vec<f64>) -> Self {
        let quantized = steps.iter().map(|&s| quantize_step(s)).collect();
        Self {
            total_steps: params.total_steps,
            inference_steps: params.inference_steps,
            kind: params.kind,
            power: params.power,
            transition: params.transition,
            exp_slope: (params.kind == ResampleKind::Exponential).then_some(params.exp_slope),
            steps,
            quantized,
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// Integer steps in denoising order, largest first.
    pub fn denoising_order(&self) -> Vec<u32> {
        self.quantized.iter().rev().copied().collect()
    }

    /// Number of real steps in `[0, lo·T] ∪ [hi·T, T]`.
    pub fn count_in_extremes(&self, lo: f64, hi: f64) -> usize {
        let total = self.total_steps as f64;
        self.steps
            .iter()
            .filter(|&&s| s <= lo * total || s >= hi * total)
            .count()
    }

    /// Fraction of real steps in `[0, lo·T] ∪ [hi·T, T]`.
    pub fn extreme_fraction(&self, lo: f64, hi: f64) -> f64 {
        self.count_in_extremes(lo, hi) as f64 / self.len() as f64
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Writes `index,step_real,step_int` rows, index counting from 1.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut wtr = csv::Writer::from_writer(out);
        wtr.write_record(["index", "step_real", "step_int"])?;
        for (i, (real, int)) in self.steps.iter().zip(&self.quantized).enumerate() {
            wtr.write_record([(i + 1).to_string(), real.to_string(), int.to_string()])?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Rounds a real timestep to the nearest integer (halves away from zero).
pub fn quantize_step(step: f64) -> u32 {
    step.round().max(0.0) as u32
}

fn check_step_counts(total: u32, inference: u32) -> Result<()> {
    if total == 0 || inference == 0 {
        return domain(format!("step counts must be positive, got T={total}, T'={inference}"));
    }
    if inference > total {
        return domain(format!(
            "inference steps T'={inference} exceed training steps T={total}"
        ));
    }
    Ok(())
}

fn check_timestep(t: f64, total: u32) -> Result<()> {
    if !(0.0..=total as f64).contains(&t) {
        return domain(format!("timestep {t} outside [0, {total}]"));
    }
    Ok(())
}

fn check_transition(a: f64, total: u32) -> Result<()> {
    if !(0.0..=total as f64).contains(&a) {
        return domain(format!("transition point {a} outside [0, {total}]"));
    }
    Ok(())
}

/// Whether `t` falls on the early-stage branch. A transition point at `T`
/// selects the early branch everywhere and one at 0 the late branch.
fn early_branch(t: f64, a: f64, total: f64) -> bool {
    if a >= total {
        true
    } else if a <= 0.0 {
        false
    } else {
        t < a
    }
}

/// Evenly spaced steps `floor(k·T/T')` for `k = 1..=T'`.
pub fn uniform_schedule(total_steps: u32, inference_steps: u32) -> Result<Schedule> {
    check_step_counts(total_steps, inference_steps)?;
    let steps = (1..=inference_steps as u64)
        .map(|k| (k * total_steps as u64 / inference_steps as u64) as f64)
        .collect();
    let params = SamplerParams::new(total_steps, inference_steps, ResampleKind::Uniform);
    Ok(Schedule::from_real(&params, steps))
}

/// Two-stage power curve: `t^n / a^(n-1)` below `a`, mirrored above it.
pub fn resample_polynomial(t: f64, a: f64, n: f64, total_steps: u32) -> Result<f64> {
    check_timestep(t, total_steps)?;
    check_transition(a, total_steps)?;
    if !(n >= 1.0) || !n.is_finite() {
        return domain(format!("power n must be a finite value >= 1, got {n}"));
    }
    let total = total_steps as f64;
    let value = if early_branch(t, a, total) {
        t.powf(n) / a.powf(n - 1.0)
    } else {
        total - (total - t).powf(n) / (total - a).powf(n - 1.0)
    };
    Ok(value.clamp(0.0, total))
}

/// Quarter-wave curve: `a - a·cos(πt/2a)` below `a`, `T - a·sin(π(t-a)/2(T-a))` from `a` on.
///
/// The two branches do not meet at `t = a` (the lower one tends to `a`, the
/// upper one starts at `T`), and the upper branch decreases towards `T - a`.
pub fn resample_trigonometric(t: f64, a: f64, total_steps: u32) -> Result<f64> {
    check_timestep(t, total_steps)?;
    check_transition(a, total_steps)?;
    let total = total_steps as f64;
    let half_pi = std::f64::consts::FRAC_PI_2;
    let value = if early_branch(t, a, total) {
        -a * (half_pi * t / a).cos() + a
    } else {
        -a * (half_pi * (t - a) / (total - a)).sin() + total
    };
    Ok(value.clamp(0.0, total))
}

/// Logistic curve `T / (1 + exp(-k(t - T/2)))`.
pub fn resample_exponential(t: f64, slope: f64, total_steps: u32) -> Result<f64> {
    check_timestep(t, total_steps)?;
    if !(slope > 0.0) || !slope.is_finite() {
        return domain(format!("exponential slope must be positive, got {slope}"));
    }
    let total = total_steps as f64;
    Ok(total / (1.0 + (-slope * (t - total / 2.0)).exp()))
}

/// Maps every uniform step through the curve selected by `params.kind`.
///
/// Resampled values are sorted ascending, which only reorders anything for
/// the trigonometric curve.
pub fn build_tds_schedule(params: &SamplerParams) -> Result<Schedule> {
    params.validate()?;
    let uniform = uniform_schedule(params.total_steps, params.inference_steps)?;
    let total = params.total_steps;
    let a = params.transition_step();
    let mut steps = uniform
        .steps
        .iter()
        .map(|&t| match params.kind {
            ResampleKind::Uniform => Ok(t),
            ResampleKind::Polynomial => resample_polynomial(t, a, params.power, total),
            ResampleKind::Trigonometric => resample_trigonometric(t, a, total),
            ResampleKind::Exponential => resample_exponential(t, params.exp_slope, total),
        })
        .collect::<Result<Vec<_>>>()?;
    steps.sort_by(f64::total_cmp);
    Ok(Schedule::from_real(params, steps))
}

/// Per-backbone `(n, a)` ranges used as spatial projection bounds.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Preset {
    pub name: &'static str,
    pub n_min: f64,
    pub n_max: f64,
    pub a_min: f64,
    pub a_max: f64,
}

impl Preset {
    pub const STABLESR: Preset = Preset {
        name: "stablesr",
        n_min: 1.0,
        n_max: 1.2,
        a_min: 0.45,
        a_max: 0.65,
    };
    pub const PASD: Preset = Preset {
        name: "pasd",
        n_min: 1.0,
        n_max: 2.0,
        a_min: 0.4,
        a_max: 0.6,
    };
    pub const SUPIR: Preset = Preset {
        name: "supir",
        n_min: 2.2,
        n_max: 2.5,
        a_min: 0.58,
        a_max: 0.63,
    };

    pub const ALL: [Preset; 3] = [Preset::STABLESR, Preset::PASD, Preset::SUPIR];

    /// Looks a preset up by name, ignoring case.
    pub fn load(name: &str) -> Result<Preset> {
        Preset::ALL
            .into_iter()
            .find(|p| p.name.eq_ignore_ascii_case(name))
            .ok_or_else(|| TssError::UnknownPreset(name.to_string()))
    }

    /// Centre of the `(n, a)` box.
    pub fn midpoint(&self) -> (f64, f64) {
        ((self.n_min + self.n_max) / 2.0, (self.a_min + self.a_max) / 2.0)
    }
}

impl FromStr for Preset {
    type Err = TssError;

    fn from_str(s: &str) -> Result<Self> {
        Preset::load(s)
    }
}
