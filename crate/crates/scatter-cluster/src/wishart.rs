//! Complex-Wishart k-means over coherency matrices.
//!
//! Distance d(T, V) = ln det(V) + tr(V^-1 T), the log-likelihood
//! dissimilarity under the complex Wishart model. Assignment and
//! center updates alternate; the mean of the member matrices is the
//! exact minimizer of the within-cluster distance sum, so the
//! objective is non-increasing.

use std::fs;
use std::path::Path;

use polsar_core::cmat3::{CMat3, C64};
use polsar_core::label::{LabelRaster, INVALID_LABEL};
use polsar_core::CoherencyField;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use eigen_decomp::EigenFeatures;

use crate::ClusterError;

/// Relative factor for center regularization: eps = 1e-6 * mean trace.
pub const CENTER_EPS_REL: f64 = 1e-6;

/// Primary-type thresholds on cluster-mean alpha, degrees.
pub const ODD_ALPHA_MAX: f64 = 42.5;
pub const DOUBLE_ALPHA_MIN: f64 = 47.5;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PrimaryType {
    Odd,
    Double,
    Volume,
}

#[derive(Clone, Debug)]
pub struct ClusterModel {
    /// Hermitian PSD cluster centers.
    pub centers: Vec<CMat3>,
    /// Member pixels per cluster.
    pub counts: Vec<usize>,
    /// Primary scattering type, set by [`classify_primary`].
    pub primary: Vec<Option<PrimaryType>>,
    /// Final sum of within-cluster Wishart distances.
    pub objective: f64,
    /// Objective after every iteration, first entry included.
    pub objective_history: Vec<f64>,
}

impl ClusterModel {
    pub fn k(&self) -> usize {
        self.centers.len()
    }

    /// Regularization shift used with these centers.
    pub fn epsilon(&self) -> f64 {
        let mean_trace: f64 =
            self.centers.iter().map(|c| c.trace_re()).sum::<f64>() / self.k().max(1) as f64;
        CENTER_EPS_REL * mean_trace
    }
}

struct PreparedCenter {
    log_det: f64,
    inverse: CMat3,
}

fn prepare_center(v: &CMat3, eps: f64, idx: usize) -> Result<PreparedCenter, ClusterError> {
    let mut reg = *v;
    for i in 0..3 {
        reg.m[i][i] += C64::new(eps, 0.0);
    }
    let det = reg.det().re;
    if !(det.is_finite() && det > 0.0) {
        return Err(ClusterError::SingularCenter(idx));
    }
    let inverse = reg.inverse().ok_or(ClusterError::SingularCenter(idx))?;
    Ok(PreparedCenter {
        log_det: det.ln(),
        inverse,
    })
}

fn distance_prepared(t: &CMat3, c: &PreparedCenter) -> f64 {
    let mut tr = 0.0;
    for i in 0..3 {
        for k in 0..3 {
            tr += (c.inverse.m[i][k] * t.m[k][i]).re;
        }
    }
    c.log_det + tr
}

/// Wishart distance between a sample coherency matrix and a center,
/// with the center regularized as V + eps I before inversion.
pub fn wishart_distance(t: &CMat3, v: &CMat3, eps: f64) -> Result<f64, ClusterError> {
    let prepared = prepare_center(v, eps, 0)?;
    Ok(distance_prepared(t, &prepared))
}

#[derive(Clone, Copy, Debug)]
pub struct IterateOptions {
    pub max_iter: usize,
    pub rel_tol: f64,
}

impl Default for IterateOptions {
    fn default() -> Self {
        IterateOptions {
            max_iter: 30,
            rel_tol: 1e-6,
        }
    }
}

/// Alternate center updates and argmin reassignment starting from an
/// initial labeling. Empty classes are dropped, never reseeded; ties
/// in the argmin go to the lowest cluster index.
pub fn wishart_iterate(
    coh: &CoherencyField,
    init: &LabelRaster,
    opts: IterateOptions,
) -> Result<(ClusterModel, LabelRaster), ClusterError> {
    if coh.width != init.width || coh.height != init.height {
        return Err(ClusterError::DimensionMismatch(format!(
            "coherency {}x{} vs labels {}x{}",
            coh.width, coh.height, init.width, init.height
        )));
    }
    let n = coh.len();
    let valid: Vec<bool> = init.validity.clone();
    if !valid.iter().any(|&v| v) {
        return Err(ClusterError::AllInvalid);
    }

    // compact initial classes to the ones that actually hold pixels,
    // in ascending label order
    let mut present = [false; 256];
    for i in 0..n {
        if valid[i] {
            present[init.label[i] as usize] = true;
        }
    }
    let mut remap = [usize::MAX; 256];
    let mut k = 0usize;
    for (lbl, &p) in present.iter().enumerate() {
        if p {
            remap[lbl] = k;
            k += 1;
        }
    }

    let mut assign: Vec<usize> = (0..n)
        .map(|i| {
            if valid[i] {
                remap[init.label[i] as usize]
            } else {
                usize::MAX
            }
        })
        .collect();

    let mut centers = compute_centers(coh, &assign, &valid, k);
    let mut counts = member_counts(&assign, &valid, k);
    // drop any class that lost all members (cannot happen on entry,
    // but reassignment below can starve a class)
    let mut history = Vec::new();
    let mut objective = f64::INFINITY;

    for _iter in 0..opts.max_iter {
        let eps = centers_epsilon(&centers);
        let prepared: Vec<PreparedCenter> = centers
            .iter()
            .enumerate()
            .map(|(idx, c)| prepare_center(c, eps, idx))
            .collect::<Result<_, _>>()?;

        // assignment: per-pixel argmin, lowest index wins ties
        let new_assign: Vec<usize> = (0..n)
            .into_par_iter()
            .map(|i| {
                if !valid[i] {
                    return usize::MAX;
                }
                let mut best = 0usize;
                let mut best_d = f64::INFINITY;
                for (m, c) in prepared.iter().enumerate() {
                    let d = distance_prepared(&coh.t[i], c);
                    if d < best_d {
                        best_d = d;
                        best = m;
                    }
                }
                best
            })
            .collect();

        let new_objective: f64 = (0..n)
            .filter(|&i| valid[i])
            .map(|i| distance_prepared(&coh.t[i], &prepared[new_assign[i]]))
            .sum();

        let changed = assign != new_assign;
        assign = new_assign;
        counts = member_counts(&assign, &valid, k);

        // drop starved clusters and renumber
        if counts.contains(&0) {
            let mut squeeze = vec![usize::MAX; k];
            let mut next = 0usize;
            for (m, &c) in counts.iter().enumerate() {
                if c > 0 {
                    squeeze[m] = next;
                    next += 1;
                }
            }
            for a in assign.iter_mut() {
                if *a != usize::MAX {
                    *a = squeeze[*a];
                }
            }
            k = next;
        }

        centers = compute_centers(coh, &assign, &valid, k);
        counts = member_counts(&assign, &valid, k);

        history.push(new_objective);
        let rel_change = if objective.is_finite() {
            (objective - new_objective).abs() / objective.abs().max(f64::MIN_POSITIVE)
        } else {
            f64::INFINITY
        };
        objective = new_objective;
        if !changed || rel_change < opts.rel_tol {
            break;
        }
    }

    let labels = LabelRaster {
        width: coh.width,
        height: coh.height,
        label: assign
            .iter()
            .map(|&a| if a == usize::MAX { INVALID_LABEL } else { a as u8 })
            .collect(),
        validity: valid,
        classes: k as u8,
    };
    let model = ClusterModel {
        centers,
        counts,
        primary: vec![None; k],
        objective,
        objective_history: history,
    };
    Ok((model, labels))
}

fn centers_epsilon(centers: &[CMat3]) -> f64 {
    let mean_trace: f64 =
        centers.iter().map(|c| c.trace_re()).sum::<f64>() / centers.len().max(1) as f64;
    CENTER_EPS_REL * mean_trace
}

/// Fixed accumulation order (pixel index) keeps runs bit-reproducible.
fn compute_centers(coh: &CoherencyField, assign: &[usize], valid: &[bool], k: usize) -> Vec<CMat3> {
    let mut sums = vec![CMat3::zeros(); k];
    let mut counts = vec![0usize; k];
    for i in 0..assign.len() {
        if valid[i] && assign[i] != usize::MAX {
            sums[assign[i]].add_assign(&coh.t[i]);
            counts[assign[i]] += 1;
        }
    }
    for m in 0..k {
        if counts[m] > 0 {
            sums[m] = sums[m].scale(1.0 / counts[m] as f64).hermitize();
        }
    }
    sums
}

fn member_counts(assign: &[usize], valid: &[bool], k: usize) -> Vec<usize> {
    let mut counts = vec![0usize; k];
    for i in 0..assign.len() {
        if valid[i] && assign[i] != usize::MAX {
            counts[assign[i]] += 1;
        }
    }
    counts
}

/// Assign a primary scattering type to every cluster from the mean
/// alpha angle of its members: odd below 42.5 deg, double above
/// 47.5 deg, volume in between.
pub fn classify_primary(
    model: &mut ClusterModel,
    eig: &EigenFeatures,
    labels: &LabelRaster,
) -> Result<(), ClusterError> {
    if eig.len() != labels.len() {
        return Err(ClusterError::DimensionMismatch(
            "eigen features and labels differ in size".into(),
        ));
    }
    let k = model.k();
    let mut alpha_sum = vec![0.0f64; k];
    let mut counts = vec![0usize; k];
    for i in 0..labels.len() {
        if labels.validity[i] {
            let m = labels.label[i] as usize;
            if m < k {
                alpha_sum[m] += eig.alpha[i];
                counts[m] += 1;
            }
        }
    }
    for m in 0..k {
        if counts[m] == 0 {
            return Err(ClusterError::EmptyCluster(m));
        }
        let mean_alpha = alpha_sum[m] / counts[m] as f64;
        model.primary[m] = Some(if mean_alpha < ODD_ALPHA_MAX {
            PrimaryType::Odd
        } else if mean_alpha > DOUBLE_ALPHA_MIN {
            PrimaryType::Double
        } else {
            PrimaryType::Volume
        });
    }
    Ok(())
}

/// Per-pixel best/second-best Wishart distance ratio, the ambiguity
/// measure behind the MVD 'mixed' class. Pixels that are invalid, have
/// fewer than two candidate centers, or sit at non-positive distances
/// report 0 (unambiguous).
pub fn ambiguity_ratio(coh: &CoherencyField, model: &ClusterModel) -> Vec<f64> {
    let eps = model.epsilon();
    let prepared: Vec<PreparedCenter> = model
        .centers
        .iter()
        .enumerate()
        .filter_map(|(idx, c)| prepare_center(c, eps, idx).ok())
        .collect();
    coh.t
        .par_iter()
        .map(|t| {
            if prepared.len() < 2 {
                return 0.0;
            }
            let mut best = f64::INFINITY;
            let mut second = f64::INFINITY;
            for c in &prepared {
                let d = distance_prepared(t, c);
                if d < best {
                    second = best;
                    best = d;
                } else if d < second {
                    second = d;
                }
            }
            if best > 0.0 && second > 0.0 {
                best / second
            } else {
                0.0
            }
        })
        .collect()
}

#[derive(Serialize, Deserialize)]
struct ModelDocument {
    version: u32,
    k: usize,
    /// 18 reals per center: the 3x3 entries row-major as (re, im) pairs.
    centers: Vec<Vec<f64>>,
    counts: Vec<usize>,
    primary: Vec<Option<PrimaryType>>,
    objective: f64,
}

pub fn write_model(path: &Path, model: &ClusterModel) -> Result<(), ClusterError> {
    let doc = ModelDocument {
        version: 1,
        k: model.k(),
        centers: model
            .centers
            .iter()
            .map(|c| {
                let mut flat = Vec::with_capacity(18);
                for i in 0..3 {
                    for j in 0..3 {
                        flat.push(c.m[i][j].re);
                        flat.push(c.m[i][j].im);
                    }
                }
                flat
            })
            .collect(),
        counts: model.counts.clone(),
        primary: model.primary.clone(),
        objective: model.objective,
    };
    let json = serde_json::to_string_pretty(&doc).map_err(|e| ClusterError::BadModel(e.to_string()))?;
    fs::write(path, json + "\n").map_err(polsar_core::CoreError::Io)?;
    Ok(())
}

pub fn read_model(path: &Path) -> Result<ClusterModel, ClusterError> {
    let text = fs::read_to_string(path).map_err(polsar_core::CoreError::Io)?;
    let doc: ModelDocument =
        serde_json::from_str(&text).map_err(|e| ClusterError::BadModel(e.to_string()))?;
    if doc.centers.len() != doc.k || doc.counts.len() != doc.k || doc.primary.len() != doc.k {
        return Err(ClusterError::BadModel("inconsistent cluster count".into()));
    }
    let mut centers = Vec::with_capacity(doc.k);
    for flat in &doc.centers {
        if flat.len() != 18 {
            return Err(ClusterError::BadModel(format!(
                "center must hold 18 reals, got {}",
                flat.len()
            )));
        }
        let mut c = CMat3::zeros();
        for i in 0..3 {
            for j in 0..3 {
                c.m[i][j] = C64::new(flat[(i * 3 + j) * 2], flat[(i * 3 + j) * 2 + 1]);
            }
        }
        centers.push(c.hermitize());
    }
    Ok(ClusterModel {
        centers,
        counts: doc.counts,
        primary: doc.primary,
        objective: doc.objective,
        objective_history: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_distance() {
        let d = wishart_distance(&CMat3::identity(), &CMat3::identity(), 0.0).unwrap();
        assert!((d - 3.0).abs() < 1e-12);
    }

    #[test]
    fn diag_center_distance() {
        let d = wishart_distance(&CMat3::identity(), &CMat3::diag([2.0, 1.0, 1.0]), 0.0).unwrap();
        assert!((d - (2.0f64.ln() + 2.5)).abs() < 1e-12);
    }

    #[test]
    fn self_distance_is_logdet_plus_three() {
        let v = CMat3::diag([2.0, 0.7, 0.4]);
        let d = wishart_distance(&v, &v, 0.0).unwrap();
        assert!((d - (v.det().re.ln() + 3.0)).abs() < 1e-12);
    }

    #[test]
    fn singular_center_rejected() {
        let err = wishart_distance(&CMat3::identity(), &CMat3::diag([1.0, 1.0, 0.0]), 0.0);
        assert!(matches!(err, Err(ClusterError::SingularCenter(_))));
    }

    #[test]
    fn distance_increasing_in_trace_term() {
        let v = CMat3::diag([1.5, 1.0, 0.5]);
        let d1 = wishart_distance(&CMat3::identity(), &v, 0.0).unwrap();
        let d2 = wishart_distance(&CMat3::identity().scale(2.0), &v, 0.0).unwrap();
        assert!(d2 > d1);
    }

    fn uniform_coh(mats: Vec<CMat3>, w: usize, h: usize) -> CoherencyField {
        CoherencyField {
            width: w,
            height: h,
            t: mats,
            looks: 1,
        }
    }

    #[test]
    fn k1_converges_to_field_mean() {
        let mats = vec![
            CMat3::diag([1.0, 0.2, 0.1]),
            CMat3::diag([2.0, 0.4, 0.3]),
            CMat3::diag([3.0, 0.6, 0.2]),
            CMat3::diag([4.0, 0.8, 0.4]),
        ];
        let mean = mats
            .iter()
            .fold(CMat3::zeros(), |acc, m| acc.add(m))
            .scale(0.25);
        let coh = uniform_coh(mats, 2, 2);
        let init = LabelRaster::filled(2, 2, 1);
        let (model, labels) = wishart_iterate(&coh, &init, IterateOptions::default()).unwrap();
        assert_eq!(model.k(), 1);
        assert!(model.centers[0].sub(&mean).frob_norm() < 1e-12);
        assert!(labels.label.iter().all(|&l| l == 0));
    }

    #[test]
    fn fixed_point_is_stable() {
        // two well-separated diagonal populations, init at the truth
        let mut mats = Vec::new();
        let mut label = Vec::new();
        for i in 0..16 {
            if i % 2 == 0 {
                mats.push(CMat3::diag([1.0, 0.01, 0.01]));
                label.push(0u8);
            } else {
                mats.push(CMat3::diag([0.01, 0.01, 1.0]));
                label.push(1u8);
            }
        }
        let coh = uniform_coh(mats, 4, 4);
        let init = LabelRaster::new(4, 4, label.clone(), vec![true; 16], 2).unwrap();
        let (model, labels) = wishart_iterate(&coh, &init, IterateOptions::default()).unwrap();
        assert_eq!(labels.label, label);
        assert_eq!(model.counts, vec![8, 8]);
    }

    #[test]
    fn objective_non_increasing_and_argmin_consistent() {
        let mut rng = polsar_core::rng::SplitMix64::new(314);
        let n = 24 * 24;
        let mut mats = Vec::with_capacity(n);
        for i in 0..n {
            // two noisy populations
            let base: [f64; 3] = if i % 3 == 0 {
                [1.0, 0.05, 0.05]
            } else {
                [0.05, 0.05, 1.0]
            };
            let mut t = CMat3::zeros();
            for _ in 0..4 {
                let k = [
                    C64::new(
                        rng.next_normal() * base[0].sqrt(),
                        rng.next_normal() * base[0].sqrt(),
                    ),
                    C64::new(
                        rng.next_normal() * base[1].sqrt(),
                        rng.next_normal() * base[1].sqrt(),
                    ),
                    C64::new(
                        rng.next_normal() * base[2].sqrt(),
                        rng.next_normal() * base[2].sqrt(),
                    ),
                ];
                t.add_assign(&CMat3::outer(&k));
            }
            mats.push(t.scale(1.0 / 8.0).hermitize());
        }
        let coh = uniform_coh(mats, 24, 24);
        // seed from a deliberately poor split: left half vs right half
        let label: Vec<u8> = (0..n).map(|i| ((i % 24) >= 12) as u8).collect();
        let init = LabelRaster::new(24, 24, label, vec![true; n], 2).unwrap();
        let (model, labels) = wishart_iterate(&coh, &init, IterateOptions::default()).unwrap();

        for w in model.objective_history.windows(2) {
            assert!(
                w[1] <= w[0] + 1e-9 * w[0].abs(),
                "objective increased: {} -> {}",
                w[0],
                w[1]
            );
        }

        // converged assignment equals brute-force argmin re-scan
        let eps = model.epsilon();
        for i in 0..n {
            let mut best = 0usize;
            let mut best_d = f64::INFINITY;
            for (m, v) in model.centers.iter().enumerate() {
                let d = wishart_distance(&coh.t[i], v, eps).unwrap();
                if d < best_d {
                    best_d = d;
                    best = m;
                }
            }
            assert_eq!(labels.label[i] as usize, best, "pixel {i}");
        }

        // centers are the member means
        let mut sums = vec![CMat3::zeros(); model.k()];
        let mut counts = vec![0usize; model.k()];
        for i in 0..n {
            sums[labels.label[i] as usize].add_assign(&coh.t[i]);
            counts[labels.label[i] as usize] += 1;
        }
        for m in 0..model.k() {
            let mean = sums[m].scale(1.0 / counts[m] as f64);
            assert!(
                model.centers[m].sub(&mean).frob_norm() <= 1e-9 * mean.frob_norm(),
                "center {m} is not the member mean"
            );
        }
    }

    #[test]
    fn all_invalid_rejected() {
        let coh = uniform_coh(vec![CMat3::identity(); 4], 2, 2);
        let init = LabelRaster::new(2, 2, vec![INVALID_LABEL; 4], vec![false; 4], 1).unwrap();
        assert!(matches!(
            wishart_iterate(&coh, &init, IterateOptions::default()),
            Err(ClusterError::AllInvalid)
        ));
    }

    #[test]
    fn classify_primary_types() {
        // three clusters of textbook mechanisms
        let mats = vec![
            CMat3::diag([1.0, 0.0, 0.0]), // alpha = 0 => odd
            CMat3::diag([0.0, 1.0, 0.0]), // alpha = 90 => double
            CMat3::diag([2.0, 1.0, 1.0]), // alpha = 45 => volume
        ];
        let coh = uniform_coh(mats, 3, 1);
        let eig = eigen_decomp::analyze(&coh).unwrap();
        let labels = LabelRaster::new(3, 1, vec![0, 1, 2], vec![true; 3], 3).unwrap();
        let mut model = ClusterModel {
            centers: coh.t.clone(),
            counts: vec![1; 3],
            primary: vec![None; 3],
            objective: 0.0,
            objective_history: vec![],
        };
        classify_primary(&mut model, &eig, &labels).unwrap();
        assert_eq!(model.primary[0], Some(PrimaryType::Odd));
        assert_eq!(model.primary[1], Some(PrimaryType::Double));
        assert_eq!(model.primary[2], Some(PrimaryType::Volume));
    }

    #[test]
    fn classify_primary_rejects_empty_cluster() {
        let coh = uniform_coh(vec![CMat3::diag([1.0, 0.0, 0.0])], 1, 1);
        let eig = eigen_decomp::analyze(&coh).unwrap();
        let labels = LabelRaster::new(1, 1, vec![0], vec![true], 2).unwrap();
        // cluster 1 declared but never assigned
        let mut model = ClusterModel {
            centers: vec![CMat3::identity(); 2],
            counts: vec![1, 0],
            primary: vec![None; 2],
            objective: 0.0,
            objective_history: vec![],
        };
        assert!(matches!(
            classify_primary(&mut model, &eig, &labels),
            Err(ClusterError::EmptyCluster(1))
        ));
    }

    #[test]
    fn model_io_roundtrip() {
        let model = ClusterModel {
            centers: vec![CMat3::diag([1.0, 0.5, 0.25]), CMat3::identity()],
            counts: vec![10, 20],
            primary: vec![Some(PrimaryType::Odd), None],
            objective: -12.5,
            objective_history: vec![],
        };
        let mut path = std::env::temp_dir();
        path.push(format!("wishart-model-{}.json", std::process::id()));
        write_model(&path, &model).unwrap();
        let back = read_model(&path).unwrap();
        assert_eq!(back.k(), 2);
        assert_eq!(back.counts, model.counts);
        assert_eq!(back.primary, model.primary);
        for (a, b) in back.centers.iter().zip(&model.centers) {
            assert!(a.sub(b).frob_norm() < 1e-12);
        }
        std::fs::remove_file(&path).ok();
    }
}
