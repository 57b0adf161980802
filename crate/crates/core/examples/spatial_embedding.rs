//! Per-location timestep embeddings added to a feature map, next to the
//! single broadcast embedding they replace.
//!
//! cargo run --example spatial_embedding

use tss::embedding::{build_embedding_map, inject_spatial, inject_unified, FeatureTensor, DEFAULT_MAX_PERIOD};
use tss::spatial::spatial_timestep_at;
use tss::{build_spatial_schedule, Preset, Raster, ResampleKind, VarianceMap};

fn main() -> tss::Result<()> {
    let (h, w, c) = (4, 6, 16);
    let vmap = VarianceMap::new(Raster::from_fn(w, h, |x, y| {
        ((x + y) as f64 / (w + h - 2) as f64).min(1.0)
    }))?;
    let map = build_spatial_schedule(&vmap, &Preset::SUPIR.into(), 1000, 7, ResampleKind::Polynomial)?;
    let z = FeatureTensor::zeros(h, w, c)?;

    let k = 3;
    let timesteps = spatial_timestep_at(&map, k)?;
    let emap = build_embedding_map(&timesteps, c, DEFAULT_MAX_PERIOD)?;
    let spatial = inject_spatial(&z, &emap)?;
    println!("iteration {k}: per-pixel timesteps");
    for y in 0..h {
        let row: Vec<String> = (0..w).map(|x| format!("{:6.1}", timesteps.get(x, y))).collect();
        println!("  {}", row.join(""));
    }
    println!("embedding at (0,0):  {:?}", &spatial.at(0, 0)[..4]);
    println!("embedding at (5,3):  {:?}", &spatial.at(3, 5)[..4]);

    let mean = timesteps.mean();
    let unified = inject_unified(&z, mean, DEFAULT_MAX_PERIOD)?;
    println!("unified at t={mean:.1}: {:?}", &unified.at(0, 0)[..4]);
    Ok(())
}
