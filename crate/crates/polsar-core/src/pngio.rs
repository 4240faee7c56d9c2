//! Thin PNG writers. Fixed encoder settings keep outputs byte-stable
//! across runs, which the CLI determinism contract relies on.

use std::fs::File;
use std::io::BufWriter;
use std::path::Path;

use crate::error::CoreError;
use crate::render::Rgb8Raster;

fn encoder<'a>(
    file: BufWriter<File>,
    width: u32,
    height: u32,
) -> png::Encoder<'a, BufWriter<File>> {
    let mut enc = png::Encoder::new(file, width, height);
    enc.set_compression(png::Compression::Default);
    enc.set_filter(png::FilterType::NoFilter);
    enc.set_depth(png::BitDepth::Eight);
    enc
}

pub fn write_rgb_png(path: &Path, raster: &Rgb8Raster) -> Result<(), CoreError> {
    let file = BufWriter::new(File::create(path)?);
    let mut enc = encoder(file, raster.width as u32, raster.height as u32);
    enc.set_color(png::ColorType::Rgb);
    let mut writer = enc.write_header().map_err(png_err)?;
    writer.write_image_data(&raster.data).map_err(png_err)?;
    Ok(())
}

pub fn write_gray_png(path: &Path, width: usize, height: usize, data: &[u8]) -> Result<(), CoreError> {
    if data.len() != width * height {
        return Err(CoreError::DimensionMismatch(format!(
            "gray png: expected {} bytes, got {}",
            width * height,
            data.len()
        )));
    }
    let file = BufWriter::new(File::create(path)?);
    let mut enc = encoder(file, width as u32, height as u32);
    enc.set_color(png::ColorType::Grayscale);
    let mut writer = enc.write_header().map_err(png_err)?;
    writer.write_image_data(data).map_err(png_err)?;
    Ok(())
}

/// Palette-indexed PNG; `indices` are one byte per pixel into `palette`.
pub fn write_indexed_png(
    path: &Path,
    width: usize,
    height: usize,
    palette: &[[u8; 3]],
    indices: &[u8],
) -> Result<(), CoreError> {
    if indices.len() != width * height {
        return Err(CoreError::DimensionMismatch(format!(
            "indexed png: expected {} bytes, got {}",
            width * height,
            indices.len()
        )));
    }
    let flat: Vec<u8> = palette.iter().flatten().copied().collect();
    let file = BufWriter::new(File::create(path)?);
    let mut enc = encoder(file, width as u32, height as u32);
    enc.set_color(png::ColorType::Indexed);
    enc.set_palette(flat);
    let mut writer = enc.write_header().map_err(png_err)?;
    writer.write_image_data(indices).map_err(png_err)?;
    Ok(())
}

/// Read an 8-bit PNG back as interleaved RGB (indexed and grayscale
/// images are expanded).
pub fn read_rgb_png(path: &Path) -> Result<Rgb8Raster, CoreError> {
    let file = File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CoreError::Missing(path.to_path_buf())
        } else {
            CoreError::Io(e)
        }
    })?;
    let mut decoder = png::Decoder::new(std::io::BufReader::new(file));
    decoder.set_transformations(png::Transformations::EXPAND);
    let mut reader = decoder
        .read_info()
        .map_err(|e| CoreError::InvalidField(format!("png decoding: {e}")))?;
    let mut buf = vec![0; reader.output_buffer_size()];
    let info = reader
        .next_frame(&mut buf)
        .map_err(|e| CoreError::InvalidField(format!("png decoding: {e}")))?;
    let (width, height) = (info.width as usize, info.height as usize);
    buf.truncate(info.buffer_size());
    let data = match info.color_type {
        png::ColorType::Rgb => buf,
        png::ColorType::Rgba => buf
            .chunks_exact(4)
            .flat_map(|px| [px[0], px[1], px[2]])
            .collect(),
        png::ColorType::Grayscale => buf.iter().flat_map(|&v| [v, v, v]).collect(),
        png::ColorType::GrayscaleAlpha => buf
            .chunks_exact(2)
            .flat_map(|px| [px[0], px[0], px[0]])
            .collect(),
        other => {
            return Err(CoreError::InvalidField(format!(
                "unsupported png color type {other:?}"
            )))
        }
    };
    Ok(Rgb8Raster {
        width,
        height,
        data,
    })
}

fn png_err(e: png::EncodingError) -> CoreError {
    match e {
        png::EncodingError::IoError(io) => CoreError::Io(io),
        other => CoreError::InvalidField(format!("png encoding: {other}")),
    }
}
