//! MVD1 indexed raster container (bit-exact layout):
//!
//!   magic  `MVD1`            4 bytes
//!   width  u16 little-endian
//!   height u16 little-endian
//!   class count u8
//!   palette: class-count x 3 bytes (r, g, b)
//!   payload: width x height class bytes, row-major
//!
//! The payload is exactly one byte per pixel, which is where the MVD
//! storage advantage over float feature stacks comes from.

use std::fs;
use std::path::Path;

use crate::raster::{LegendEntry, MvdRaster};
use crate::MvdError;

pub const MVD1_MAGIC: &[u8; 4] = b"MVD1";

pub fn write_mvd1(path: &Path, mvd: &MvdRaster) -> Result<(), MvdError> {
    if mvd.class_count() > 255 {
        return Err(MvdError::TooManyClasses(mvd.class_count()));
    }
    if mvd.width > u16::MAX as usize || mvd.height > u16::MAX as usize {
        return Err(MvdError::DimensionMismatch(format!(
            "{}x{} exceeds the u16 dimension fields",
            mvd.width, mvd.height
        )));
    }
    let mut bytes =
        Vec::with_capacity(4 + 2 + 2 + 1 + mvd.class_count() * 3 + mvd.class_index.len());
    bytes.extend_from_slice(MVD1_MAGIC);
    bytes.extend_from_slice(&(mvd.width as u16).to_le_bytes());
    bytes.extend_from_slice(&(mvd.height as u16).to_le_bytes());
    bytes.push(mvd.class_count() as u8);
    for rgb in &mvd.palette {
        bytes.extend_from_slice(rgb);
    }
    bytes.extend_from_slice(&mvd.class_index);
    fs::write(path, bytes).map_err(polsar_core::CoreError::Io)?;
    Ok(())
}

/// Read an MVD1 container. The legend is not part of the container;
/// entries are reconstructed with generic names.
pub fn read_mvd1(path: &Path) -> Result<MvdRaster, MvdError> {
    let bytes = fs::read(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            MvdError::Core(polsar_core::CoreError::Missing(path.to_path_buf()))
        } else {
            MvdError::Core(polsar_core::CoreError::Io(e))
        }
    })?;
    if bytes.len() < 9 {
        return Err(MvdError::BadContainer("truncated header".into()));
    }
    if &bytes[0..4] != MVD1_MAGIC {
        return Err(MvdError::BadMagic);
    }
    let width = u16::from_le_bytes([bytes[4], bytes[5]]) as usize;
    let height = u16::from_le_bytes([bytes[6], bytes[7]]) as usize;
    let classes = bytes[8] as usize;
    let palette_end = 9 + classes * 3;
    let expected = palette_end + width * height;
    if bytes.len() != expected {
        return Err(MvdError::BadContainer(format!(
            "expected {expected} bytes, found {}",
            bytes.len()
        )));
    }
    let palette: Vec<[u8; 3]> = bytes[9..palette_end]
        .chunks_exact(3)
        .map(|c| [c[0], c[1], c[2]])
        .collect();
    let class_index = bytes[palette_end..].to_vec();
    if let Some(&bad) = class_index.iter().find(|&&c| c as usize >= classes) {
        return Err(MvdError::BadContainer(format!(
            "pixel references class {bad} of {classes}"
        )));
    }
    let legend = palette
        .iter()
        .enumerate()
        .map(|(i, &rgb)| LegendEntry {
            index: i as u8,
            name: format!("class_{i}"),
            primary: String::new(),
            tier: None,
            rgb,
        })
        .collect();
    Ok(MvdRaster {
        width,
        height,
        class_index,
        palette,
        legend,
    })
}

/// Interoperable palette-indexed PNG of the same raster.
pub fn write_indexed_png(path: &Path, mvd: &MvdRaster) -> Result<(), MvdError> {
    polsar_core::pngio::write_indexed_png(
        path,
        mvd.width,
        mvd.height,
        &mvd.palette,
        &mvd.class_index,
    )?;
    Ok(())
}
