//! Time-spatial-aware timestep scheduling for diffusion samplers.
//!
//! The crate covers four pieces:
//!
//! * [`schedule`]: uniform schedules and the non-uniform resampling curves
//!   that concentrate steps near the start and end of denoising.
//! * [`variance`] and [`spatial`]: a texture map of the input image, and
//!   per-pixel schedules whose non-uniformity follows it.
//! * [`embedding`]: sinusoidal timestep embeddings, broadcast or per-location.
//! * [`freq`]: FFT band decomposition and band SNR along a trajectory.
//!
//! [`toy`] and [`experiment`] provide an analytic diffusion process for
//! running schedules end to end. [`io`] reads and writes the NPY, PNG, JSON
//! and CSV artifacts, and [`cli`] backs the `tss` binary.

// Negated float comparisons below are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod cli;
pub mod embedding;
pub mod error;
pub mod experiment;
pub mod freq;
pub mod io;
pub mod raster;
pub mod schedule;
pub mod spatial;
pub mod toy;
pub mod variance;

pub use error::{Result, TssError};
pub use raster::{ImageRaster, Raster};
pub use schedule::{build_tds_schedule, uniform_schedule, Preset, ResampleKind, SamplerParams, Schedule};
pub use spatial::{build_spatial_schedule, ProjectionBounds, SpatialScheduleMap};
pub use variance::{variance_map, VarianceConfig, VarianceMap};
