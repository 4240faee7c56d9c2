//! Grid tiling. Partial edge tiles are dropped rather than padded, so
//! labels never contain fabricated pixels.

use crate::DatasetError;

/// Tile origins (x, y) for a scene, row-major. A tile at (x, y) covers
/// x..x+size, y..y+size and must fit entirely inside the scene.
pub fn tile_grid(
    width: u32,
    height: u32,
    size: u32,
    stride: u32,
) -> Result<Vec<(u32, u32)>, DatasetError> {
    if size == 0 || size > width || size > height {
        return Err(DatasetError::BadTileSize {
            size,
            width,
            height,
        });
    }
    if stride == 0 {
        return Err(DatasetError::BadStride);
    }
    let mut origins = Vec::new();
    let mut y = 0;
    while y + size <= height {
        let mut x = 0;
        while x + size <= width {
            origins.push((x, y));
            x += stride;
        }
        y += stride;
    }
    Ok(origins)
}
