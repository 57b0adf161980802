//! Artifact formats: NPY tensors, PNG/PGM/PPM images, frame directories and
//! the JSON sidecar of spatial schedules.

use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use image::{DynamicImage, GrayImage};
use npyz::WriterBuilder;

use crate::embedding::EmbeddingMap;
use crate::error::{Result, TssError};
use crate::freq::Trajectory;
use crate::raster::{ImageRaster, Raster};
use crate::spatial::{SpatialScheduleMap, SpatialSidecar};
use crate::variance::VarianceMap;

/// A C-order array read from an NPY file, widened to `f64`.
#[derive(Debug, Clone, PartialEq)]
pub struct NpyArray {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

/// Serializes a little-endian `f32` array in C order.
pub fn encode_npy_f32(shape: &[usize], data: &[f32]) -> Result<Vec<u8>> {
    let expected: usize = shape.iter().product();
    if expected != data.len() {
        return Err(TssError::Shape(format!("{} values for shape {shape:?}", data.len())));
    }
    let shape_u64: Vec<u64> = shape.iter().map(|&d| d as u64).collect();
    let mut buf = Vec::new();
    let mut writer = npyz::WriteOptions::<f32>::new()
        .default_dtype()
        .shape(&shape_u64)
        .writer(&mut buf)
        .begin_nd()?;
    writer.extend(data.iter().copied())?;
    writer.finish()?;
    Ok(buf)
}

/// Parses an NPY byte buffer holding `f4` or `f8` data in C order.
pub fn decode_npy(bytes: &[u8]) -> Result<NpyArray> {
    let npy = npyz::NpyFile::new(bytes)?;
    if npy.order() != npyz::Order::C {
        return Err(TssError::Format("Fortran-order NPY arrays are not supported".into()));
    }
    let shape: Vec<usize> = npy.shape().iter().map(|&d| d as usize).collect();
    let descr = match npy.dtype() {
        npyz::DType::Plain(ts) => ts.to_string(),
        other => return Err(TssError::Format(format!("unsupported NPY dtype {other:?}"))),
    };
    let data = if descr.ends_with("f4") {
        npy.into_vec::<f32>()?.into_iter().map(f64::from).collect()
    } else if descr.ends_with("f8") {
        npy.into_vec::<f64>()?
    } else {
        return Err(TssError::Format(format!("unsupported NPY dtype {descr}")));
    };
    Ok(NpyArray { shape, data })
}

pub fn write_npy_f32(path: &Path, shape: &[usize], data: &[f32]) -> Result<()> {
    fs::write(path, encode_npy_f32(shape, data)?)?;
    Ok(())
}

pub fn read_npy(path: &Path) -> Result<NpyArray> {
    decode_npy(&fs::read(path)?)
}

fn to_f32(values: &[f64]) -> Vec<f32> {
    values.iter().map(|&v| v as f32).collect()
}

/// Saves a `(H, W)` single-precision array.
pub fn write_raster_npy(path: &Path, raster: &Raster) -> Result<()> {
    write_npy_f32(path, &[raster.height(), raster.width()], &to_f32(raster.data()))
}

pub fn read_raster_npy(path: &Path) -> Result<Raster> {
    let arr = read_npy(path)?;
    match arr.shape[..] {
        [h, w] => Raster::new(w, h, arr.data),
        _ => Err(TssError::Format(format!(
            "expected a 2-D array, got shape {:?}",
            arr.shape
        ))),
    }
}

/// Loads a variance map saved as a `(H, W)` array; values must lie in `[0, 1]`.
pub fn read_variance_npy(path: &Path) -> Result<VarianceMap> {
    VarianceMap::new(read_raster_npy(path)?).map_err(|e| TssError::Format(e.to_string()))
}

/// JSON sidecar path for a tensor file: `x.npy` becomes `x.json`.
pub fn sidecar_path(npy_path: &Path) -> PathBuf {
    npy_path.with_extension("json")
}

/// Writes the `(H, W, T')` tensor and its JSON sidecar.
pub fn write_spatial_schedule(npy_path: &Path, map: &SpatialScheduleMap) -> Result<()> {
    write_npy_f32(npy_path, &map.shape(), map.data())?;
    fs::write(sidecar_path(npy_path), serde_json::to_string_pretty(&map.sidecar())?)?;
    Ok(())
}

/// Reads a tensor written by [`write_spatial_schedule`] together with its sidecar.
pub fn read_spatial_schedule(npy_path: &Path) -> Result<SpatialScheduleMap> {
    let sidecar: SpatialSidecar = serde_json::from_str(&fs::read_to_string(sidecar_path(npy_path))?)?;
    let bytes = fs::read(npy_path)?;
    let npy = npyz::NpyFile::new(&bytes[..])?;
    let shape: Vec<usize> = npy.shape().iter().map(|&d| d as usize).collect();
    if shape != [sidecar.height, sidecar.width, sidecar.steps_per_pixel] {
        return Err(TssError::Format(format!(
            "tensor shape {shape:?} disagrees with sidecar"
        )));
    }
    SpatialScheduleMap::from_parts(&sidecar, npy.into_vec::<f32>()?).map_err(|e| TssError::Format(e.to_string()))
}

pub fn write_embedding_npy(path: &Path, emap: &EmbeddingMap) -> Result<()> {
    write_npy_f32(path, &emap.shape(), &to_f32(emap.tensor().data()))
}

/// Decodes PNG, PGM or PPM. Gray inputs give one channel, anything else three.
pub fn read_image(path: &Path) -> Result<ImageRaster> {
    let img = image::open(path)?;
    let (w, h) = (img.width() as usize, img.height() as usize);
    let is_gray = matches!(
        img,
        DynamicImage::ImageLuma8(_)
            | DynamicImage::ImageLumaA8(_)
            | DynamicImage::ImageLuma16(_)
            | DynamicImage::ImageLumaA16(_)
    );
    if is_gray {
        let data = img
            .to_luma16()
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 65535.0)
            .collect();
        ImageRaster::new(w, h, 1, data)
    } else {
        let data = img
            .to_rgb16()
            .into_raw()
            .into_iter()
            .map(|v| v as f64 / 65535.0)
            .collect();
        ImageRaster::new(w, h, 3, data)
    }
}

/// 8-bit grayscale rendering of a raster in `[0, 1]` (values × 255, rounded).
pub fn write_png_gray(path: &Path, raster: &Raster) -> Result<()> {
    let bytes = raster
        .data()
        .iter()
        .map(|&v| (v.clamp(0.0, 1.0) * 255.0).round() as u8)
        .collect();
    let img =
        GrayImage::from_raw(raster.width() as u32, raster.height() as u32, bytes).expect("buffer sized from raster");
    img.save(path)?;
    Ok(())
}

/// Reads `frame_<timestep>.png` files, ordered from the largest timestep down.
pub fn read_frame_dir(dir: &Path) -> Result<Trajectory> {
    let mut entries = Vec::new();
    for entry in fs::read_dir(dir)? {
        let path = entry?.path();
        let Some(name) = path.file_name().and_then(|n| n.to_str()) else {
            continue;
        };
        let Some(stem) = name.strip_prefix("frame_").and_then(|s| s.strip_suffix(".png")) else {
            continue;
        };
        let t: u32 = stem
            .parse()
            .map_err(|_| TssError::Format(format!("cannot read a timestep from `{name}`")))?;
        entries.push((t, path));
    }
    entries.sort_by_key(|e| std::cmp::Reverse(e.0));
    let mut frames = Vec::with_capacity(entries.len());
    for (_, path) in &entries {
        let img = read_image(path)?;
        frames.push(crate::variance::to_grayscale(&img)?);
    }
    Trajectory::new(frames, entries.into_iter().map(|(t, _)| t).collect()).map_err(|e| TssError::Format(e.to_string()))
}

/// Reads an `(N, H, W)` stack. Without labels, frames are numbered `N-1` down to 0.
pub fn read_frame_stack(path: &Path, timesteps: Option<Vec<u32>>) -> Result<Trajectory> {
    let arr = read_npy(path)?;
    let [n, h, w] = arr.shape[..] else {
        return Err(TssError::Format(format!(
            "expected an (N, H, W) stack, got shape {:?}",
            arr.shape
        )));
    };
    if n == 0 || h == 0 || w == 0 {
        return Err(TssError::Format("empty frame stack".into()));
    }
    let frames = arr
        .data
        .chunks_exact(h * w)
        .map(|c| Raster::new(w, h, c.to_vec()))
        .collect::<Result<Vec<_>>>()?;
    let labels = timesteps.unwrap_or_else(|| (0..n as u32).rev().collect());
    Trajectory::new(frames, labels).map_err(|e| TssError::Format(e.to_string()))
}

pub fn write_frame_stack(path: &Path, traj: &Trajectory) -> Result<()> {
    let first = &traj.frames()[0];
    let data: Vec<f32> = traj.frames().iter().flat_map(|f| to_f32(f.data())).collect();
    write_npy_f32(path, &[traj.len(), first.height(), first.width()], &data)
}

/// Fails with `AlreadyExists` unless `force` is set or `path` is free.
pub fn ensure_writable(path: &Path, force: bool) -> Result<()> {
    if !force && path.exists() {
        return Err(TssError::Io(io::Error::new(
            io::ErrorKind::AlreadyExists,
            format!("{} exists (pass --force to overwrite)", path.display()),
        )));
    }
    Ok(())
}

/// Creates `path` and hands a buffered writer to `f`.
pub fn write_with<F>(path: &Path, f: F) -> Result<()>
where
    F: FnOnce(&mut BufWriter<fs::File>) -> Result<()>,
{
    let mut out = BufWriter::new(fs::File::create(path)?);
    f(&mut out)?;
    out.flush()?;
    Ok(())
}
