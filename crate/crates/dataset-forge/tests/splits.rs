//! Split invariants: exhaustiveness, disjointness, geographic
//! integrity.

use dataset_forge::{split_geographic, tile_grid, SplitAxis, TileRecord};
use proptest::prelude::*;

fn records_for(width: u32, height: u32, size: u32) -> Vec<TileRecord> {
    tile_grid(width, height, size, size)
        .unwrap()
        .into_iter()
        .map(|(x, y)| TileRecord {
            id: format!("{x}_{y}"),
            scene: "scene".into(),
            x,
            y,
            split: String::new(),
            paths: Default::default(),
        })
        .collect()
}

#[test]
fn ten_columns_six_two_two_by_name() {
    let mut tiles = records_for(10 * 64, 2 * 64, 64);
    split_geographic(&mut tiles, &[6, 2, 2], SplitAxis::X).unwrap();
    for tile in &tiles {
        let col = tile.x / 64;
        let expected = if col < 6 {
            "train"
        } else if col < 8 {
            "val"
        } else {
            "test"
        };
        assert_eq!(tile.split, expected, "column {col}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn splits_are_exhaustive_disjoint_and_geographic(
        cols in 3u32..24,
        rows in 1u32..6,
        r1 in 1u32..9,
        r2 in 1u32..9,
        r3 in 1u32..9,
    ) {
        let size = 32;
        let mut tiles = records_for(cols * size, rows * size, size);
        split_geographic(&mut tiles, &[r1, r2, r3], SplitAxis::X).unwrap();
        // every tile has exactly one split tag
        for t in &tiles {
            prop_assert!(["train", "val", "test"].contains(&t.split.as_str()));
        }
        // geographic integrity: equal origin-x implies equal split
        for a in &tiles {
            for b in &tiles {
                if a.x == b.x {
                    prop_assert_eq!(&a.split, &b.split);
                }
            }
        }
        // bands are contiguous along x
        let mut last_band = 0usize;
        let order = ["train", "val", "test"];
        for col in 0..cols {
            let tile = tiles.iter().find(|t| t.x == col * size).unwrap();
            let band = order.iter().position(|&n| n == tile.split).unwrap();
            prop_assert!(band >= last_band);
            last_band = band;
        }
    }
}
