//! Recovery of known synthetic populations.

use polsar_core::cmat3::{CMat3, C64};
use polsar_core::label::LabelRaster;
use polsar_core::rng::SplitMix64;
use polsar_core::CoherencyField;
use scatter_cluster::{wishart_iterate, IterateOptions};

/// Multilooked Wishart sample with mean diag(sigma), L looks.
fn wishart_sample(rng: &mut SplitMix64, sigma: [f64; 3], looks: usize) -> CMat3 {
    let mut t = CMat3::zeros();
    for _ in 0..looks {
        let k = [
            C64::new(rng.next_normal(), rng.next_normal()) * (sigma[0] / 2.0).sqrt(),
            C64::new(rng.next_normal(), rng.next_normal()) * (sigma[1] / 2.0).sqrt(),
            C64::new(rng.next_normal(), rng.next_normal()) * (sigma[2] / 2.0).sqrt(),
        ];
        t.add_assign(&CMat3::outer(&k));
    }
    t.scale(1.0 / looks as f64).hermitize()
}

#[test]
fn two_separated_populations_recovered() {
    let eps = 0.02;
    let (w, h) = (64, 64);
    let n = w * h;
    let mut rng = SplitMix64::new(9000);
    let mut mats = Vec::with_capacity(n);
    let mut truth = Vec::with_capacity(n);
    for y in 0..h {
        for _x in 0..w {
            let pop = (y < h / 2) as usize;
            let sigma = if pop == 0 {
                [1.0, eps, eps]
            } else {
                [eps, eps, 1.0]
            };
            mats.push(wishart_sample(&mut rng, sigma, 6));
            truth.push(pop);
        }
    }
    let coh = CoherencyField {
        width: w,
        height: h,
        t: mats,
        looks: 6,
    };
    // seed from a deliberately wrong vertical split
    let init_label: Vec<u8> = (0..n).map(|i| ((i % w) >= w / 2) as u8).collect();
    let init = LabelRaster::new(w, h, init_label, vec![true; n], 2).unwrap();
    let (model, labels) = wishart_iterate(&coh, &init, IterateOptions::default()).unwrap();
    assert_eq!(model.k(), 2);

    // clusters may come out in either order; align by majority vote
    let mut votes = [[0usize; 2]; 2];
    for i in 0..n {
        votes[labels.label[i] as usize][truth[i]] += 1;
    }
    let mapping = if votes[0][0] + votes[1][1] >= votes[0][1] + votes[1][0] {
        [0usize, 1]
    } else {
        [1usize, 0]
    };
    let correct: usize = (0..n)
        .filter(|&i| mapping[labels.label[i] as usize] == truth[i])
        .count();
    let agreement = correct as f64 / n as f64;
    assert!(
        agreement >= 0.99,
        "pixel agreement {agreement} below 0.99"
    );
}
