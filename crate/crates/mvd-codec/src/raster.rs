//! The MVD raster itself: class indices, palette, legend.

use std::collections::BTreeMap;

use polsar_core::label::LabelRaster;
use polsar_core::render::Rgb8Raster;
use serde::{Deserialize, Serialize};

use scatter_cluster::{PrimaryType, SubclassLayout};

use crate::palette::{palette_color, MIXED_RGB, OTHER_RGB};
use crate::MvdError;

pub const MIXED_NAME: &str = "mixed";
pub const OTHER_NAME: &str = "other";

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LegendEntry {
    pub index: u8,
    pub name: String,
    /// "odd" | "double" | "volume" | "mixed" | "other"
    pub primary: String,
    pub tier: Option<u8>,
    pub rgb: [u8; 3],
}

#[derive(Clone, Debug, PartialEq)]
pub struct MvdRaster {
    pub width: usize,
    pub height: usize,
    pub class_index: Vec<u8>,
    pub palette: Vec<[u8; 3]>,
    pub legend: Vec<LegendEntry>,
}

impl MvdRaster {
    pub fn class_count(&self) -> usize {
        self.palette.len()
    }

    pub fn len(&self) -> usize {
        self.width * self.height
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Expand class indices through the palette.
    pub fn encode_palette(&self) -> Rgb8Raster {
        let mut out = Rgb8Raster::new(self.width, self.height);
        for (i, &c) in self.class_index.iter().enumerate() {
            let rgb = self.palette[c as usize];
            out.data[i * 3] = rgb[0];
            out.data[i * 3 + 1] = rgb[1];
            out.data[i * 3 + 2] = rgb[2];
        }
        out
    }
}

#[derive(Clone, Copy, Debug)]
pub struct ReclusterOptions {
    /// Pixels whose best/second-best Wishart distance ratio exceeds
    /// this are flagged 'mixed'.
    pub mixed_threshold: f64,
}

impl Default for ReclusterOptions {
    fn default() -> Self {
        ReclusterOptions {
            mixed_threshold: 0.98,
        }
    }
}

fn primary_name(p: PrimaryType) -> &'static str {
    match p {
        PrimaryType::Odd => "odd",
        PrimaryType::Double => "double",
        PrimaryType::Volume => "volume",
    }
}

/// Re-cluster sub-classed scattering labels into MVD classes.
///
/// The default mapping keeps the odd/double/volume tier structure and
/// appends 'mixed' (when an ambiguity map is supplied) and 'other'
/// (invalid pixels). An explicit `merge_map` (source class -> group)
/// overrides the grouping; groups are emitted in ascending target id
/// order and inherit the layout entry of their first source class.
pub fn recluster(
    labels: &LabelRaster,
    layout: &SubclassLayout,
    ambiguity: Option<&[f64]>,
    merge_map: Option<&BTreeMap<u8, u8>>,
    opts: ReclusterOptions,
) -> Result<MvdRaster, MvdError> {
    let source_classes = layout.class_count();
    if labels.classes as usize != source_classes {
        return Err(MvdError::DimensionMismatch(format!(
            "labels declare {} classes, layout has {}",
            labels.classes, source_classes
        )));
    }
    if let Some(amb) = ambiguity {
        if amb.len() != labels.len() {
            return Err(MvdError::DimensionMismatch(
                "ambiguity map does not match raster size".into(),
            ));
        }
    }

    // source class -> output class, plus the legend skeleton
    let n_tiers = layout
        .classes
        .iter()
        .filter(|c| c.primary == PrimaryType::Odd)
        .count()
        .max(1);
    let mut source_to_out = vec![0u8; source_classes];
    let mut legend: Vec<LegendEntry> = Vec::new();

    match merge_map {
        None => {
            for (src, info) in layout.classes.iter().enumerate() {
                let index = src as u8;
                source_to_out[src] = index;
                let name = match info.tier {
                    Some(t) => format!("{}_t{}", primary_name(info.primary), t + 1),
                    None => primary_name(info.primary).to_string(),
                };
                legend.push(LegendEntry {
                    index,
                    name,
                    primary: primary_name(info.primary).into(),
                    tier: info.tier,
                    rgb: palette_color(info.primary, info.tier, n_tiers),
                });
            }
        }
        Some(map) => {
            for &src in map.keys() {
                if src as usize >= source_classes {
                    return Err(MvdError::UnknownSourceClass(src));
                }
            }
            // groups ordered by target id
            let mut groups: BTreeMap<u8, Vec<u8>> = BTreeMap::new();
            for (src, &target) in map {
                groups.entry(target).or_default().push(*src);
            }
            // unmapped sources keep identity grouping after the mapped ones
            let mapped: Vec<bool> = (0..source_classes)
                .map(|s| map.contains_key(&(s as u8)))
                .collect();
            let mut next_out = 0u8;
            for sources in groups.values() {
                for &s in sources {
                    source_to_out[s as usize] = next_out;
                }
                let first = layout.classes[sources[0] as usize].clone();
                let name = if sources.len() == 1 {
                    match first.tier {
                        Some(t) => format!("{}_t{}", primary_name(first.primary), t + 1),
                        None => primary_name(first.primary).to_string(),
                    }
                } else {
                    format!("group_{next_out}")
                };
                legend.push(LegendEntry {
                    index: next_out,
                    name,
                    primary: primary_name(first.primary).into(),
                    tier: first.tier,
                    rgb: palette_color(first.primary, first.tier, n_tiers),
                });
                next_out += 1;
            }
            for (src, info) in layout.classes.iter().enumerate() {
                if !mapped[src] {
                    source_to_out[src] = next_out;
                    let name = match info.tier {
                        Some(t) => format!("{}_t{}", primary_name(info.primary), t + 1),
                        None => primary_name(info.primary).to_string(),
                    };
                    legend.push(LegendEntry {
                        index: next_out,
                        name,
                        primary: primary_name(info.primary).into(),
                        tier: info.tier,
                        rgb: palette_color(info.primary, info.tier, n_tiers),
                    });
                    next_out += 1;
                }
            }
        }
    }

    // mixed (only when ambiguity data exists) then other, always last
    let mixed_class = ambiguity.map(|_| {
        let index = legend.len() as u8;
        legend.push(LegendEntry {
            index,
            name: MIXED_NAME.into(),
            primary: MIXED_NAME.into(),
            tier: None,
            rgb: MIXED_RGB,
        });
        index
    });
    let other_class = legend.len() as u8;
    legend.push(LegendEntry {
        index: other_class,
        name: OTHER_NAME.into(),
        primary: OTHER_NAME.into(),
        tier: None,
        rgb: OTHER_RGB,
    });

    if legend.len() > 255 {
        return Err(MvdError::TooManyClasses(legend.len()));
    }

    let class_index: Vec<u8> = (0..labels.len())
        .map(|i| {
            if !labels.validity[i] {
                return other_class;
            }
            if let (Some(amb), Some(mixed)) = (ambiguity, mixed_class) {
                if amb[i] > opts.mixed_threshold {
                    return mixed;
                }
            }
            source_to_out[labels.label[i] as usize]
        })
        .collect();

    let palette: Vec<[u8; 3]> = legend.iter().map(|e| e.rgb).collect();
    Ok(MvdRaster {
        width: labels.width,
        height: labels.height,
        class_index,
        palette,
        legend,
    })
}

/// Legend document (JSON text) plus a swatch image, one 16-pixel band
/// per class in legend order.
pub fn render_legend(mvd: &MvdRaster) -> (String, Rgb8Raster) {
    let json = serde_json::to_string_pretty(&mvd.legend).expect("legend serializes");
    let band = 16usize;
    let width = 64usize;
    let mut swatch = Rgb8Raster::new(width, band * mvd.class_count());
    for (c, entry) in mvd.legend.iter().enumerate() {
        for y in c * band..(c + 1) * band {
            for x in 0..width {
                let i = (y * width + x) * 3;
                swatch.data[i] = entry.rgb[0];
                swatch.data[i + 1] = entry.rgb[1];
                swatch.data[i + 2] = entry.rgb[2];
            }
        }
    }
    (json + "\n", swatch)
}
