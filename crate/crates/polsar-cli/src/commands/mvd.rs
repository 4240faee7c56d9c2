//! Stage 2: coherency -> zone seeding -> Wishart clustering -> primary
//! typing -> SPAN sub-classing -> MVD raster + legend.

use std::fs;

use eigen_decomp::analyze;
use mvd_codec::{recluster, render_legend, write_indexed_png, write_mvd1, ReclusterOptions};
use polsar_core::pngio::write_rgb_png;
use polsar_core::span;
use scatter_cluster::{
    ambiguity_ratio, classify_primary, init_zones, subclass_by_span, wishart_iterate,
    wishart::write_model, write_labels, IterateOptions,
};

use crate::commands::decompose::{coherency_base, read_coherency};
use crate::config::PipelineConfig;
use crate::error::CliError;

pub fn run(config: &PipelineConfig) -> Result<(), CliError> {
    let coh_manifest = coherency_base(&config.out).with_extension("json");
    if !coh_manifest.exists() {
        return Err(CliError::Validation(format!(
            "missing decompose outputs in {} (run `decompose` first)",
            config.out.display()
        )));
    }
    let coh = read_coherency(&coh_manifest)?;
    let eig = analyze(&coh)?;

    let mut init = init_zones(&eig);
    if let Some(k) = config.k {
        // deterministic zone merge keeps a configurable cluster count
        for (label, valid) in init.label.iter_mut().zip(&init.validity) {
            if *valid {
                *label %= k as u8;
            }
        }
        init.classes = k as u8;
    }

    let (mut model, labels) = wishart_iterate(
        &coh,
        &init,
        IterateOptions {
            max_iter: config.max_iter,
            rel_tol: config.rel_tol,
        },
    )?;
    classify_primary(&mut model, &eig, &labels)?;

    let span_field = span(&coh);
    let (sub_labels, layout) = subclass_by_span(&labels, &model, &span_field, config.n_sub)?;
    let ambiguity = ambiguity_ratio(&coh, &model);
    let mvd = recluster(
        &sub_labels,
        &layout,
        Some(&ambiguity),
        None,
        ReclusterOptions {
            mixed_threshold: config.mixed_threshold,
        },
    )?;

    fs::create_dir_all(&config.out)?;
    let class_names: Vec<String> = layout
        .classes
        .iter()
        .map(|c| match c.tier {
            Some(t) => format!("{:?}_t{}", c.primary, t + 1).to_lowercase(),
            None => format!("{:?}", c.primary).to_lowercase(),
        })
        .collect();
    write_labels(&config.out.join("labels"), &sub_labels, &class_names)?;
    write_mvd1(&config.out.join("mvd.mvd"), &mvd)?;
    write_indexed_png(&config.out.join("mvd.png"), &mvd)?;
    let (legend_json, swatch) = render_legend(&mvd);
    fs::write(config.out.join("legend.json"), legend_json)?;
    write_rgb_png(&config.out.join("legend.png"), &swatch)?;
    write_model(&config.out.join("cluster_model.json"), &model)?;

    println!(
        "mvd: {} clusters -> {} classes, objective {:.6} -> {}",
        model.k(),
        mvd.class_count(),
        model.objective,
        config.out.display()
    );
    Ok(())
}
