//! Texture map of an image, or of a synthetic half-smooth, half-textured one.
//!
//! cargo run --example variance_map -- [image.png] [out.png]

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tss::{io, variance_map, ImageRaster, Raster, VarianceConfig};

fn synthetic() -> ImageRaster {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let gray = Raster::from_fn(128, 96, |x, y| {
        let smooth = 0.5 + 0.3 * ((x + y) as f64 / 80.0).sin();
        if x < 64 {
            smooth
        } else {
            (smooth + 0.4 * rng.gen_range(-1.0..1.0)).clamp(0.0, 1.0)
        }
    });
    ImageRaster::from_gray(gray).expect("values in [0, 1]")
}

fn main() -> tss::Result<()> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let img = match args.first() {
        Some(path) => io::read_image(Path::new(path))?,
        None => synthetic(),
    };
    let vmap = variance_map(&img, VarianceConfig::default())?;

    let cols = 8;
    let rows = 6;
    println!(
        "variance map {}x{}, sampled on a {cols}x{rows} grid:",
        vmap.width(),
        vmap.height()
    );
    for r in 0..rows {
        let y = r * (vmap.height() - 1) / (rows - 1);
        let line: Vec<String> = (0..cols)
            .map(|c| format!("{:.2}", vmap.get(c * (vmap.width() - 1) / (cols - 1), y)))
            .collect();
        println!("  {}", line.join(" "));
    }
    if let Some(out) = args.get(1) {
        io::write_png_gray(Path::new(out), vmap.raster())?;
        println!("wrote {out}");
    }
    Ok(())
}
