//! Per-pixel schedules driven by the variance map.
//!
//! Each location gets its own resampled schedule whose power and transition
//! point are linear in the local variance. All pixels advance in lockstep: at
//! iteration `k` every pixel uses the `k`-th entry of its own schedule.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{domain, Result, TssError};
use crate::raster::Raster;
use crate::schedule::{build_tds_schedule, quantize_step, Preset, ResampleKind, SamplerParams};
use crate::variance::VarianceMap;

/// Ranges the variance is projected onto: power `n` and transition fraction `a`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ProjectionBounds {
    pub n_min: f64,
    pub n_max: f64,
    pub a_min: f64,
    pub a_max: f64,
}

impl ProjectionBounds {
    pub fn new(n_min: f64, n_max: f64, a_min: f64, a_max: f64) -> Result<Self> {
        let bounds = Self {
            n_min,
            n_max,
            a_min,
            a_max,
        };
        bounds.validate()?;
        Ok(bounds)
    }

    /// Degenerate bounds that reproduce a single global schedule.
    pub fn fixed(n: f64, a: f64) -> Result<Self> {
        Self::new(n, n, a, a)
    }

    pub fn validate(&self) -> Result<()> {
        let all_finite = [self.n_min, self.n_max, self.a_min, self.a_max]
            .iter()
            .all(|v| v.is_finite());
        if !all_finite || !(self.n_min >= 1.0) || self.n_min > self.n_max {
            return domain(format!(
                "power bounds must satisfy 1 <= n_min <= n_max, got [{}, {}]",
                self.n_min, self.n_max
            ));
        }
        if !(self.a_min >= 0.0) || self.a_min > self.a_max || self.a_max > 1.0 {
            return domain(format!(
                "transition bounds must satisfy 0 <= a_min <= a_max <= 1, got [{}, {}]",
                self.a_min, self.a_max
            ));
        }
        Ok(())
    }
}

impl From<Preset> for ProjectionBounds {
    fn from(p: Preset) -> Self {
        Self {
            n_min: p.n_min,
            n_max: p.n_max,
            a_min: p.a_min,
            a_max: p.a_max,
        }
    }
}

/// Linear projection of a variance value onto `(n, a_frac)`.
pub fn project_params(v: f64, bounds: &ProjectionBounds) -> Result<(f64, f64)> {
    if !(0.0..=1.0).contains(&v) {
        return domain(format!("variance {v} outside [0, 1]"));
    }
    let n = v * (bounds.n_max - bounds.n_min) + bounds.n_min;
    let a = v * (bounds.a_max - bounds.a_min) + bounds.a_min;
    Ok((n, a))
}

/// Dense `H × W × T'` tensor of per-pixel timesteps, stored as `f32`.
#[derive(Debug, Clone, PartialEq)]
pub struct SpatialScheduleMap {
    width: usize,
    height: usize,
    steps_per_pixel: usize,
    total_steps: u32,
    kind: ResampleKind,
    bounds: ProjectionBounds,
    data: Vec<f32>,
}

/// JSON sidecar written next to the tensor.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialSidecar {
    #[serde(rename = "T")]
    pub total_steps: u32,
    #[serde(rename = "T_prime")]
    pub steps_per_pixel: usize,
    pub bounds: ProjectionBounds,
    pub kind: ResampleKind,
    pub width: usize,
    pub height: usize,
}

impl SpatialScheduleMap {
    /// Reassembles a map from a tensor and its sidecar, checking invariants.
    pub fn from_parts(sidecar: &SpatialSidecar, data: Vec<f32>) -> Result<Self> {
        let SpatialSidecar {
            total_steps,
            steps_per_pixel,
            bounds,
            kind,
            width,
            height,
        } = *sidecar;
        if width * height * steps_per_pixel != data.len() || steps_per_pixel == 0 {
            return Err(TssError::Shape(format!(
                "{} values do not fill {height}x{width}x{steps_per_pixel}",
                data.len()
            )));
        }
        let total = total_steps as f32;
        for slice in data.chunks_exact(steps_per_pixel) {
            if slice.iter().any(|&t| !(0.0..=total).contains(&t)) || slice.windows(2).any(|p| p[0] > p[1]) {
                return Err(TssError::Format(
                    "per-pixel schedule not ascending within [0, T]".into(),
                ));
            }
        }
        Ok(Self {
            width,
            height,
            steps_per_pixel,
            total_steps,
            kind,
            bounds,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn steps_per_pixel(&self) -> usize {
        self.steps_per_pixel
    }

    pub fn total_steps(&self) -> u32 {
        self.total_steps
    }

    pub fn kind(&self) -> ResampleKind {
        self.kind
    }

    pub fn bounds(&self) -> ProjectionBounds {
        self.bounds
    }

    /// Flat `(H, W, T')` row-major data.
    pub fn data(&self) -> &[f32] {
        &self.data
    }

    pub fn shape(&self) -> [usize; 3] {
        [self.height, self.width, self.steps_per_pixel]
    }

    /// The ascending schedule of pixel `(x, y)`.
    pub fn slice(&self, x: usize, y: usize) -> &[f32] {
        let start = (y * self.width + x) * self.steps_per_pixel;
        &self.data[start..start + self.steps_per_pixel]
    }

    pub fn sidecar(&self) -> SpatialSidecar {
        SpatialSidecar {
            total_steps: self.total_steps,
            steps_per_pixel: self.steps_per_pixel,
            bounds: self.bounds,
            kind: self.kind,
            width: self.width,
            height: self.height,
        }
    }

    fn check_iteration(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.steps_per_pixel {
            return Err(TssError::IndexOutOfRange {
                index: k,
                len: self.steps_per_pixel,
            });
        }
        Ok(())
    }

    /// Integer timesteps at iteration `k`, rounded like [`quantize_step`].
    pub fn quantized_timestep_at(&self, k: usize) -> Result<Vec<u32>> {
        self.check_iteration(k)?;
        Ok(self
            .data
            .chunks_exact(self.steps_per_pixel)
            .map(|s| quantize_step(s[k - 1] as f64))
            .collect())
    }
}

/// Builds one resampled schedule per variance-map location.
pub fn build_spatial_schedule(
    vmap: &VarianceMap,
    bounds: &ProjectionBounds,
    total_steps: u32,
    inference_steps: u32,
    kind: ResampleKind,
) -> Result<SpatialScheduleMap> {
    bounds.validate()?;
    let base = SamplerParams::new(total_steps, inference_steps, kind);
    base.validate()?;

    let slices = vmap
        .values()
        .par_iter()
        .map(|&v| {
            let (n, a) = project_params(v, bounds)?;
            let schedule = build_tds_schedule(&base.with_power(n).with_transition(a))?;
            Ok(schedule.steps.iter().map(|&s| s as f32).collect::<Vec<f32>>())
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(SpatialScheduleMap {
        width: vmap.width(),
        height: vmap.height(),
        steps_per_pixel: inference_steps as usize,
        total_steps,
        kind,
        bounds: *bounds,
        data: slices.concat(),
    })
}

/// The `H × W` raster of timesteps used at iteration `k` (1-based).
pub fn spatial_timestep_at(map: &SpatialScheduleMap, k: usize) -> Result<Raster> {
    map.check_iteration(k)?;
    let data = map
        .data
        .chunks_exact(map.steps_per_pixel)
        .map(|s| s[k - 1] as f64)
        .collect();
    Raster::new(map.width, map.height, data)
}

/// Bilinear resampling with corner alignment, so border samples map to
/// border samples and a linear ramp keeps its endpoints.
pub fn resize_variance_to_grid(vmap: &VarianceMap, width: usize, height: usize) -> Result<VarianceMap> {
    if width == 0 || height == 0 {
        return domain(format!("grid dimensions must be positive, got {width}x{height}"));
    }
    if width == vmap.width() && height == vmap.height() {
        return Ok(vmap.clone());
    }
    let src = vmap.raster();
    let coord = |i: usize, dst: usize, src_len: usize| -> (usize, usize, f64) {
        let pos = if dst == 1 {
            (src_len - 1) as f64 / 2.0
        } else {
            i as f64 * (src_len - 1) as f64 / (dst - 1) as f64
        };
        let lo = (pos.floor() as usize).min(src_len - 1);
        let hi = (lo + 1).min(src_len - 1);
        (lo, hi, pos - lo as f64)
    };
    let out = Raster::from_fn(width, height, |x, y| {
        let (x0, x1, fx) = coord(x, width, src.width());
        let (y0, y1, fy) = coord(y, height, src.height());
        let top = src.get(x0, y0) + (src.get(x1, y0) - src.get(x0, y0)) * fx;
        let bottom = src.get(x0, y1) + (src.get(x1, y1) - src.get(x0, y1)) * fx;
        (top + (bottom - top) * fy).clamp(0.0, 1.0)
    });
    VarianceMap::new(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::build_tds_schedule;
    use approx::assert_abs_diff_eq;

    fn pasd() -> ProjectionBounds {
        Preset::PASD.into()
    }

    #[test]
    fn projection_endpoints() {
        let supir: ProjectionBounds = Preset::SUPIR.into();
        assert_eq!(project_params(0.0, &supir).unwrap(), (2.2, 0.58));
        let (n, a) = project_params(1.0, &supir).unwrap();
        assert_abs_diff_eq!(n, 2.5, epsilon = 1e-12);
        assert_abs_diff_eq!(a, 0.63, epsilon = 1e-12);
        let (n, a) = project_params(0.5, &pasd()).unwrap();
        assert_abs_diff_eq!(n, 1.5, epsilon = 1e-12);
        assert_abs_diff_eq!(a, 0.5, epsilon = 1e-12);
        assert!(project_params(1.01, &pasd()).is_err());
        assert!(project_params(-0.01, &pasd()).is_err());
    }

    #[test]
    fn bounds_validation() {
        assert!(ProjectionBounds::new(2.0, 1.0, 0.4, 0.6).is_err());
        assert!(ProjectionBounds::new(0.5, 1.0, 0.4, 0.6).is_err());
        assert!(ProjectionBounds::new(1.0, 2.0, 0.6, 0.4).is_err());
        assert!(ProjectionBounds::new(1.0, 2.0, 0.4, 1.2).is_err());
        assert!(ProjectionBounds::new(1.0, 2.0, f64::NAN, 0.6).is_err());
    }

    #[test]
    fn constant_zero_map_uses_lower_bounds() {
        let vmap = VarianceMap::constant(5, 4, 0.0).unwrap();
        let map = build_spatial_schedule(&vmap, &pasd(), 1000, 10, ResampleKind::Polynomial).unwrap();
        let params = SamplerParams::new(1000, 10, ResampleKind::Polynomial)
            .with_power(1.0)
            .with_transition(0.4);
        let want: Vec<f32> = build_tds_schedule(&params)
            .unwrap()
            .steps
            .iter()
            .map(|&s| s as f32)
            .collect();
        for y in 0..4 {
            for x in 0..5 {
                assert_eq!(map.slice(x, y), want.as_slice());
            }
        }
    }

    #[test]
    fn two_pixel_map_hits_endpoints() {
        let vmap = VarianceMap::new(Raster::new(2, 1, vec![0.0, 1.0]).unwrap()).unwrap();
        let b: ProjectionBounds = Preset::SUPIR.into();
        let map = build_spatial_schedule(&vmap, &b, 1000, 7, ResampleKind::Polynomial).unwrap();
        for (x, (n, a)) in [(0, (2.2, 0.58)), (1, (2.5, 0.63))] {
            let p = SamplerParams::new(1000, 7, ResampleKind::Polynomial)
                .with_power(n)
                .with_transition(a);
            let want: Vec<f32> = build_tds_schedule(&p)
                .unwrap()
                .steps
                .iter()
                .map(|&s| s as f32)
                .collect();
            assert_eq!(map.slice(x, 0), want.as_slice());
        }
    }

    #[test]
    fn last_iteration_is_t_everywhere() {
        let vmap = VarianceMap::new(Raster::from_fn(6, 6, |x, y| ((x * 7 + y * 3) % 11) as f64 / 10.0)).unwrap();
        let map = build_spatial_schedule(&vmap, &pasd(), 1000, 9, ResampleKind::Polynomial).unwrap();
        let last = spatial_timestep_at(&map, 9).unwrap();
        assert!(last.data().iter().all(|&t| t == 1000.0));
        assert!(matches!(
            spatial_timestep_at(&map, 0),
            Err(TssError::IndexOutOfRange { .. })
        ));
        assert!(matches!(
            spatial_timestep_at(&map, 10),
            Err(TssError::IndexOutOfRange { .. })
        ));
    }

    #[test]
    fn constant_map_gives_constant_rasters() {
        let vmap = VarianceMap::constant(3, 3, 0.37).unwrap();
        let map = build_spatial_schedule(&vmap, &pasd(), 1000, 5, ResampleKind::Polynomial).unwrap();
        for k in 1..=5 {
            let r = spatial_timestep_at(&map, k).unwrap();
            let (lo, hi) = r.min_max();
            assert_eq!(lo, hi);
        }
    }

    #[test]
    fn resize_identity_and_constant() {
        let vmap = VarianceMap::new(Raster::from_fn(7, 5, |x, y| (x + y) as f64 / 10.0)).unwrap();
        assert_eq!(resize_variance_to_grid(&vmap, 7, 5).unwrap(), vmap);
        let c = VarianceMap::constant(9, 6, 0.25).unwrap();
        let r = resize_variance_to_grid(&c, 4, 13).unwrap();
        assert!(r.values().iter().all(|&v| (v - 0.25).abs() < 1e-15));
        assert!(resize_variance_to_grid(&c, 0, 3).is_err());
    }

    #[test]
    fn resize_ramp_keeps_endpoints() {
        let vmap = VarianceMap::new(Raster::from_fn(64, 8, |x, _| x as f64 / 63.0)).unwrap();
        let r = resize_variance_to_grid(&vmap, 32, 4).unwrap();
        for y in 0..4 {
            assert_abs_diff_eq!(r.get(0, y), 0.0, epsilon = 1e-6);
            assert_abs_diff_eq!(r.get(31, y), 1.0, epsilon = 1e-6);
            for x in 0..32 {
                assert_abs_diff_eq!(r.get(x, y), x as f64 / 31.0, epsilon = 1e-6);
            }
        }
    }

    #[test]
    fn sidecar_roundtrip_validates() {
        let vmap = VarianceMap::constant(2, 2, 0.5).unwrap();
        let map = build_spatial_schedule(&vmap, &pasd(), 100, 4, ResampleKind::Polynomial).unwrap();
        let again = SpatialScheduleMap::from_parts(&map.sidecar(), map.data().to_vec()).unwrap();
        assert_eq!(again, map);
        assert!(SpatialScheduleMap::from_parts(&map.sidecar(), vec![0.0; 3]).is_err());
        let mut bad = map.data().to_vec();
        bad[0] = 90.0;
        assert!(SpatialScheduleMap::from_parts(&map.sidecar(), bad).is_err());
    }
}
