//! Per-pixel schedules driven by a texture map: smooth pixels follow the
//! preset's lower (n, a) corner, textured pixels its upper corner.
//!
//! cargo run --example spatial_schedule

use tss::spatial::{resize_variance_to_grid, spatial_timestep_at};
use tss::{build_spatial_schedule, Preset, ProjectionBounds, Raster, ResampleKind, VarianceMap};

fn main() -> tss::Result<()> {
    // horizontal ramp from flat (0) to highly textured (1)
    let vmap = VarianceMap::new(Raster::from_fn(64, 32, |x, _| x as f64 / 63.0))?;
    let grid = resize_variance_to_grid(&vmap, 8, 4)?;
    let bounds = ProjectionBounds::from(Preset::PASD);
    let map = build_spatial_schedule(&grid, &bounds, 1000, 7, ResampleKind::Polynomial)?;
    let [h, w, steps] = map.shape();
    println!("schedule tensor {h}x{w}x{steps}, bounds {bounds:?}");

    for x in [0, w / 2, w - 1] {
        let slice: Vec<String> = map.slice(x, 0).iter().map(|t| format!("{t:7.1}")).collect();
        println!("  v={:.2}  {}", grid.get(x, 0), slice.join(""));
    }
    for k in 1..=steps {
        let t = spatial_timestep_at(&map, k)?;
        let (lo, hi) = t.min_max();
        println!("  iteration {k}: timesteps span [{lo:.1}, {hi:.1}]");
    }
    Ok(())
}
