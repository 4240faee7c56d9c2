//! Geographic splits: contiguous bands of whole tile columns (or rows)
//! sized by ceiling-of-cumulative-quota rounding, so tiles from one
//! geographic band always land in the same set and no tile straddles a
//! boundary.

use serde::{Deserialize, Serialize};

use crate::manifest::TileRecord;
use crate::DatasetError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitAxis {
    X,
    Y,
}

impl std::str::FromStr for SplitAxis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "x" => Ok(SplitAxis::X),
            "y" => Ok(SplitAxis::Y),
            other => Err(format!("split axis must be x or y, got {other}")),
        }
    }
}

/// Split names: 2 ratios -> train/val, 3 -> train/val/test, otherwise
/// split0, split1, ...
pub fn split_names(n: usize) -> Vec<String> {
    match n {
        2 => vec!["train".into(), "val".into()],
        3 => vec!["train".into(), "val".into(), "test".into()],
        _ => (0..n).map(|i| format!("split{i}")).collect(),
    }
}

/// Band index for each of `n_cols` grid columns.
///
/// Boundaries sit at ceil(n_cols * cumulative_ratio); with ratios
/// (6, 2, 2) over 10 columns that is exactly 6/2/2.
pub fn split_bands(n_cols: usize, ratios: &[u32]) -> Result<Vec<usize>, DatasetError> {
    if ratios.is_empty() || ratios.contains(&0) {
        return Err(DatasetError::BadRatios);
    }
    if n_cols < ratios.len() {
        return Err(DatasetError::TooFewColumns {
            columns: n_cols,
            splits: ratios.len(),
        });
    }
    let total: u64 = ratios.iter().map(|&r| r as u64).sum();
    let mut boundaries = Vec::with_capacity(ratios.len());
    let mut cum = 0u64;
    for &r in ratios {
        cum += r as u64;
        // ceil(n_cols * cum / total) in integer arithmetic
        boundaries.push(((n_cols as u64 * cum).div_ceil(total)) as usize);
    }
    let mut bands = vec![0usize; n_cols];
    let mut band = 0usize;
    for (col, slot) in bands.iter_mut().enumerate() {
        while col >= boundaries[band] {
            band += 1;
        }
        *slot = band;
    }
    Ok(bands)
}

/// Tag tiles with split names by contiguous bands along the chosen
/// axis. Returns (per-tile split name, per-tile band index).
pub fn split_geographic(
    tiles: &mut [TileRecord],
    ratios: &[u32],
    axis: SplitAxis,
) -> Result<(), DatasetError> {
    let coord = |t: &TileRecord| match axis {
        SplitAxis::X => t.x,
        SplitAxis::Y => t.y,
    };
    let mut columns: Vec<u32> = tiles.iter().map(&coord).collect();
    columns.sort_unstable();
    columns.dedup();
    let bands = split_bands(columns.len(), ratios)?;
    let names = split_names(ratios.len());
    for tile in tiles.iter_mut() {
        let col = columns.binary_search(&coord(tile)).expect("own coordinate");
        tile.split = names[bands[col]].clone();
    }
    Ok(())
}
