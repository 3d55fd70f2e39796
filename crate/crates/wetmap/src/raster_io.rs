//! PNG rasters with ESRI world-file sidecars.
//!
//! Maps are 8-bit RGB or grayscale. Probability rasters are 16-bit
//! grayscale with `value / 65535` the probability. Mask and agreement
//! rasters are written for inspection in GIS tools.

use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use png::{BitDepth, ColorType, Transformations};
use wetmap_core::geo::{GeoRaster, GeoTransform, Mask, RasterKind};
use wetmap_core::metrics::AgreementMap;

use crate::error::{format_err, io_err, Error, Result};

/// Sidecar world file next to a PNG: `map.png` → `map.pgw`.
pub fn world_file_path(image: &Path) -> PathBuf {
    image.with_extension("pgw")
}

pub fn read_world_file(path: &Path, crs: &str) -> Result<GeoTransform> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    let mut params = [0.0f64; 6];
    let mut n = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let bad = |msg: String| Error::WorldFile {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        if n == 6 {
            return Err(bad("more than 6 values".into()));
        }
        params[n] = line.parse().map_err(|_| bad(format!("not a number: {line:?}")))?;
        if !params[n].is_finite() {
            return Err(bad(format!("not finite: {line:?}")));
        }
        n += 1;
    }
    if n != 6 {
        return Err(Error::WorldFile {
            path: path.to_path_buf(),
            line: text.lines().count(),
            msg: format!("expected 6 values, found {n}"),
        });
    }
    GeoTransform::from_world_params(params, crs).map_err(|source| Error::Geo {
        path: path.to_path_buf(),
        source,
    })
}

pub fn write_world_file(path: &Path, transform: &GeoTransform) -> Result<()> {
    let text: String = transform.world_params().iter().map(|v| format!("{v}\n")).collect();
    fs::write(path, text).map_err(io_err(path))
}

struct Decoded {
    width: usize,
    height: usize,
    color: ColorType,
    depth: BitDepth,
    data: Vec<u8>,
}

fn decode(path: &Path, transformations: Transformations) -> Result<Decoded> {
    let file = File::open(path).map_err(io_err(path))?;
    let mut decoder = png::Decoder::new(BufReader::new(file));
    decoder.set_transformations(transformations);
    let png_err = |e: png::DecodingError| format_err(path, format!("PNG decode: {e}"));
    let mut reader = decoder.read_info().map_err(png_err)?;
    let mut data = vec![0u8; reader.output_buffer_size()];
    let info = reader.next_frame(&mut data).map_err(png_err)?;
    data.truncate(info.buffer_size());
    Ok(Decoded {
        width: info.width as usize,
        height: info.height as usize,
        color: info.color_type,
        depth: info.bit_depth,
        data,
    })
}

fn encode(
    path: &Path,
    (width, height): (usize, usize),
    color: ColorType,
    depth: BitDepth,
    palette: Option<Vec<u8>>,
    data: &[u8],
) -> Result<()> {
    let png_err = |e: png::EncodingError| format_err(path, format!("PNG encode: {e}"));
    let file = File::create(path).map_err(io_err(path))?;
    let mut out = BufWriter::new(file);
    let mut encoder = png::Encoder::new(&mut out, width as u32, height as u32);
    encoder.set_color(color);
    encoder.set_depth(depth);
    if let Some(p) = palette {
        encoder.set_palette(p);
    }
    let mut writer = encoder.write_header().map_err(png_err)?;
    writer.write_image_data(data).map_err(png_err)?;
    writer.finish().map_err(png_err)?;
    out.flush().map_err(io_err(path))
}

fn geo_err(path: &Path) -> impl FnOnce(wetmap_core::geo::GeoError) -> Error + '_ {
    move |source| Error::Geo {
        path: path.to_path_buf(),
        source,
    }
}

/// Planar (channel-major) values from interleaved samples.
fn deinterleave(samples: impl Iterator<Item = f32>, channels: usize, pixels: usize) -> Vec<f32> {
    let mut out = vec![0.0f32; channels * pixels];
    for (i, v) in samples.enumerate() {
        out[(i % channels) * pixels + i / channels] = v;
    }
    out
}

/// Read an 8-bit RGB or grayscale map. Palette and sub-byte images are
/// expanded to 8 bits first.
pub fn read_raster(image: &Path, world: &Path, crs: &str) -> Result<GeoRaster> {
    let d = decode(image, Transformations::EXPAND)?;
    let channels = match (d.color, d.depth) {
        (ColorType::Rgb, BitDepth::Eight) => 3,
        (ColorType::Grayscale, BitDepth::Eight) => 1,
        (c, b) => {
            return Err(format_err(
                image,
                format!(
                    "unsupported PNG format {c:?} at {} bits; expected 8-bit RGB or grayscale",
                    b as u8
                ),
            ))
        }
    };
    let transform = read_world_file(world, crs)?;
    let values = deinterleave(d.data.iter().map(|&b| b as f32), channels, d.width * d.height);
    GeoRaster::new(channels, d.height, d.width, values, transform, RasterKind::Image).map_err(geo_err(image))
}

pub fn write_raster(image: &Path, world: &Path, raster: &GeoRaster) -> Result<()> {
    if raster.kind() != RasterKind::Image {
        return Err(format_err(image, "only image rasters are written as 8-bit PNG"));
    }
    let (c, n) = (raster.channels(), raster.rows() * raster.cols());
    let v = raster.values();
    let data: Vec<u8> = (0..n * c).map(|i| v[(i % c) * n + i / c].round() as u8).collect();
    let color = if c == 3 { ColorType::Rgb } else { ColorType::Grayscale };
    encode(
        image,
        (raster.cols(), raster.rows()),
        color,
        BitDepth::Eight,
        None,
        &data,
    )?;
    write_world_file(world, &raster.transform)
}

/// Dimensions and transform of any PNG with a world file, without decoding pixels.
pub fn read_grid(image: &Path, world: &Path, crs: &str) -> Result<(usize, usize, GeoTransform)> {
    let file = File::open(image).map_err(io_err(image))?;
    let reader = png::Decoder::new(BufReader::new(file))
        .read_info()
        .map_err(|e| format_err(image, format!("PNG decode: {e}")))?;
    let (w, h) = reader.info().size();
    Ok((h as usize, w as usize, read_world_file(world, crs)?))
}

/// Replicate a grayscale map into three channels; RGB passes through.
pub fn to_rgb(raster: GeoRaster) -> GeoRaster {
    if raster.channels() == 3 {
        return raster;
    }
    let values = raster.values().repeat(3);
    GeoRaster::new(
        3,
        raster.rows(),
        raster.cols(),
        values,
        raster.transform.clone(),
        raster.kind(),
    )
    .expect("same values in three channels")
}

/// Quantize a probability so that `p > 0.5` survives the round trip:
/// ties at half a step round down.
fn quantize(p: f32) -> u16 {
    let x = p as f64 * 65535.0;
    (x - 0.5).ceil().clamp(0.0, 65535.0) as u16
}

pub fn read_probability(image: &Path, world: &Path, crs: &str) -> Result<GeoRaster> {
    let d = decode(image, Transformations::IDENTITY)?;
    if (d.color, d.depth) != (ColorType::Grayscale, BitDepth::Sixteen) {
        return Err(format_err(
            image,
            format!(
                "probability raster must be 16-bit grayscale, got {:?} at {} bits",
                d.color, d.depth as u8
            ),
        ));
    }
    let transform = read_world_file(world, crs)?;
    let values = d
        .data
        .chunks_exact(2)
        .map(|b| u16::from_be_bytes([b[0], b[1]]) as f32 / 65535.0)
        .collect();
    GeoRaster::new(1, d.height, d.width, values, transform, RasterKind::Probability).map_err(geo_err(image))
}

pub fn write_probability(image: &Path, world: &Path, raster: &GeoRaster) -> Result<()> {
    if raster.kind() != RasterKind::Probability || raster.channels() != 1 {
        return Err(format_err(image, "expected a single-channel probability raster"));
    }
    let data: Vec<u8> = raster
        .values()
        .iter()
        .flat_map(|&p| quantize(p).to_be_bytes())
        .collect();
    encode(
        image,
        (raster.cols(), raster.rows()),
        ColorType::Grayscale,
        BitDepth::Sixteen,
        None,
        &data,
    )?;
    write_world_file(world, &raster.transform)
}

/// 8-bit grayscale, 255 where set.
pub fn write_mask(image: &Path, world: &Path, mask: &Mask, transform: &GeoTransform) -> Result<()> {
    let data: Vec<u8> = mask.bits().iter().map(|&b| if b { 255 } else { 0 }).collect();
    encode(
        image,
        (mask.cols(), mask.rows()),
        ColorType::Grayscale,
        BitDepth::Eight,
        None,
        &data,
    )?;
    write_world_file(world, transform)
}

/// Palette indices follow [`wetmap_core::metrics::Agreement`].
pub const AGREEMENT_PALETTE: [[u8; 3]; 5] = [
    [46, 139, 87],   // agree
    [255, 105, 180], // false positive, pink
    [255, 140, 0],   // false negative, orange
    [255, 255, 255], // background
    [160, 160, 160], // no data
];

pub fn write_agreement(image: &Path, world: &Path, map: &AgreementMap, transform: &GeoTransform) -> Result<()> {
    let data: Vec<u8> = map.cells.iter().map(|&c| c as u8).collect();
    let palette = AGREEMENT_PALETTE.concat();
    encode(
        image,
        (map.cols, map.rows),
        ColorType::Indexed,
        BitDepth::Eight,
        Some(palette),
        &data,
    )?;
    write_world_file(world, transform)
}
