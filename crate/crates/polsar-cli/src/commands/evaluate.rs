//! Evaluate predicted label rasters against ground truth: summed
//! confusion matrix, per-category IoU table, mAcc / mF1 / mIoU.

use std::fs;
use std::path::Path;

use mvd_codec::read_mvd1;
use polsar_core::label::LabelRaster;
use seg_metrics::{confusion, format_table, metrics, ConfusionMatrix};

use crate::config::PipelineConfig;
use crate::error::CliError;

fn mvd_files(dir: &Path) -> Result<Vec<String>, CliError> {
    let mut names = Vec::new();
    for entry in fs::read_dir(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))? {
        let entry = entry?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".mvd") {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

fn to_labels(path: &Path) -> Result<(LabelRaster, usize), CliError> {
    let mvd = read_mvd1(path)?;
    let classes = mvd.class_count();
    let n = mvd.len();
    let raster = LabelRaster::new(
        mvd.width,
        mvd.height,
        mvd.class_index,
        vec![true; n],
        classes as u8,
    )?;
    Ok((raster, classes))
}

pub fn run(config: &PipelineConfig, pred_dir: &Path, gt_dir: &Path) -> Result<(), CliError> {
    let names = mvd_files(gt_dir)?;
    if names.is_empty() {
        return Err(CliError::Validation(format!(
            "no .mvd rasters in {}",
            gt_dir.display()
        )));
    }

    // first pass fixes the class count
    let mut k = 0usize;
    let mut pairs = Vec::new();
    for name in &names {
        let pred_path = pred_dir.join(name);
        if !pred_path.exists() {
            return Err(CliError::Validation(format!(
                "prediction missing for {name}"
            )));
        }
        let (pred, pk) = to_labels(&pred_path)?;
        let (gt, gk) = to_labels(&gt_dir.join(name))?;
        k = k.max(pk).max(gk);
        pairs.push((pred, gt));
    }

    let mut total = ConfusionMatrix::new(k);
    for (pred, gt) in &pairs {
        total = total + confusion(pred, gt, k)?;
    }
    let report = metrics(&total)?;
    let class_names: Vec<String> = (0..k).map(|c| format!("class_{c}")).collect();
    let table = format_table(&report, &class_names);

    fs::create_dir_all(&config.out)?;
    let json = serde_json::to_string_pretty(&report)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    fs::write(config.out.join("report.json"), json + "\n")?;
    fs::write(config.out.join("report.txt"), &table)?;
    print!("{table}");
    Ok(())
}
