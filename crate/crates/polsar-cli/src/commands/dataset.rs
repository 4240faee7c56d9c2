//! Stage 3: tile aligned raster pairs, split geographically, filter
//! near-single-class tiles, write tiles + manifest.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::str::FromStr;

use dataset_forge::{
    compute_histogram, filter_pure_class, split_geographic, tile_grid, write_manifest,
    DatasetManifest, LabelScene, SplitAxis, TileRecord, MANIFEST_VERSION,
};
use mvd_codec::{read_mvd1, write_mvd1, MvdRaster};
use polsar_core::pngio::{read_rgb_png, write_rgb_png};
use polsar_core::render::Rgb8Raster;

use crate::config::PipelineConfig;
use crate::error::CliError;

fn crop_rgb(src: &Rgb8Raster, x: u32, y: u32, size: u32) -> Rgb8Raster {
    let mut out = Rgb8Raster::new(size as usize, size as usize);
    for yy in 0..size as usize {
        for xx in 0..size as usize {
            let s = ((y as usize + yy) * src.width + x as usize + xx) * 3;
            let d = (yy * size as usize + xx) * 3;
            out.data[d..d + 3].copy_from_slice(&src.data[s..s + 3]);
        }
    }
    out
}

fn crop_mvd(src: &MvdRaster, x: u32, y: u32, size: u32) -> MvdRaster {
    let mut class_index = Vec::with_capacity((size * size) as usize);
    for yy in 0..size as usize {
        let row = (y as usize + yy) * src.width + x as usize;
        class_index.extend_from_slice(&src.class_index[row..row + size as usize]);
    }
    MvdRaster {
        width: size as usize,
        height: size as usize,
        class_index,
        palette: src.palette.clone(),
        legend: src.legend.clone(),
    }
}

pub fn run(config: &PipelineConfig, pseudo: &Path, mvd_path: &Path) -> Result<(), CliError> {
    let pseudo_raster = read_rgb_png(pseudo)?;
    let mvd = read_mvd1(mvd_path)?;
    if pseudo_raster.width != mvd.width || pseudo_raster.height != mvd.height {
        return Err(CliError::Validation(format!(
            "misaligned pair: pseudo {}x{} vs MVD {}x{}",
            pseudo_raster.width, pseudo_raster.height, mvd.width, mvd.height
        )));
    }
    let scene = pseudo
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "scene".into());
    let size = config.tile_size;
    let stride = config.stride.unwrap_or(size);
    let origins = tile_grid(mvd.width as u32, mvd.height as u32, size, stride)?;

    let tiles_dir = config.out.join("tiles");
    fs::create_dir_all(&tiles_dir)?;

    let mut tiles: Vec<TileRecord> = origins
        .iter()
        .map(|&(x, y)| TileRecord {
            id: format!("{scene}_{x}_{y}"),
            scene: scene.clone(),
            x,
            y,
            split: String::new(),
            paths: BTreeMap::new(),
        })
        .collect();
    let axis = SplitAxis::from_str(&config.split_axis).map_err(CliError::Validation)?;
    split_geographic(&mut tiles, &config.ratios, axis)?;

    let mut manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        tile_size: size,
        stride,
        split_axis: axis,
        split_ratios: config.ratios.clone(),
        tiles,
        class_histogram: BTreeMap::new(),
    };

    let labels = BTreeMap::from([(
        scene.clone(),
        LabelScene {
            width: mvd.width as u32,
            height: mvd.height as u32,
            data: mvd.class_index.clone(),
            classes: mvd.class_count() as u8,
        },
    )]);

    if let Some(class) = config.purity_class {
        manifest = filter_pure_class(&manifest, &labels, class, config.purity)?;
        if manifest.tiles.is_empty() {
            eprintln!("warning: purity filter removed every tile");
        }
    } else {
        manifest.class_histogram = compute_histogram(&manifest, &labels)?;
    }

    // write the retained tile crops and record their paths
    for tile in manifest.tiles.iter_mut() {
        let png_rel = format!("tiles/{}.png", tile.id);
        let mvd_rel = format!("tiles/{}.mvd", tile.id);
        write_rgb_png(
            &config.out.join(&png_rel),
            &crop_rgb(&pseudo_raster, tile.x, tile.y, size),
        )?;
        write_mvd1(
            &config.out.join(&mvd_rel),
            &crop_mvd(&mvd, tile.x, tile.y, size),
        )?;
        tile.paths.insert("pseudo".into(), png_rel);
        tile.paths.insert("mvd".into(), mvd_rel);
    }

    write_manifest(&config.out.join("manifest.json"), &manifest)?;
    let counts = manifest.split_counts();
    println!(
        "dataset: {} tiles ({}) -> {}",
        manifest.tiles.len(),
        counts
            .iter()
            .map(|(k, v)| format!("{k}: {v}"))
            .collect::<Vec<_>>()
            .join(", "),
        config.out.display()
    );
    Ok(())
}
