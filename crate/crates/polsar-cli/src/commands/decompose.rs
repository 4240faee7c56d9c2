//! Stage 1: SLC -> Pauli RGB, multilooked coherency, eigen features,
//! and the requested feature stacks, all with sidecar manifests.

use std::fs;
use std::path::Path;
use std::str::FromStr;

use eigen_decomp::{analyze, feature_stack, stack::write_stack, EigenFeatures, StackKind};
use polsar_core::payload::{write_payload, PayloadManifest, PAYLOAD_VERSION};
use polsar_core::pngio::write_rgb_png;
use polsar_core::{coherency, load_slc, pauli_rgb, pauli_vector, CoherencyField};

use crate::config::PipelineConfig;
use crate::error::CliError;

pub fn coherency_base(out: &Path) -> std::path::PathBuf {
    out.join("coherency")
}

pub fn eigen_base(out: &Path) -> std::path::PathBuf {
    out.join("eigen")
}

const COHERENCY_CHANNELS: [&str; 9] = [
    "T11", "T22", "T33", "ReT12", "ImT12", "ReT13", "ImT13", "ReT23", "ImT23",
];

pub fn write_coherency(base: &Path, coh: &CoherencyField) -> Result<(), CliError> {
    let n = coh.len();
    let mut data = vec![0.0f64; 9 * n];
    for (i, t) in coh.t.iter().enumerate() {
        data[i] = t.m[0][0].re;
        data[n + i] = t.m[1][1].re;
        data[2 * n + i] = t.m[2][2].re;
        data[3 * n + i] = t.m[0][1].re;
        data[4 * n + i] = t.m[0][1].im;
        data[5 * n + i] = t.m[0][2].re;
        data[6 * n + i] = t.m[0][2].im;
        data[7 * n + i] = t.m[1][2].re;
        data[8 * n + i] = t.m[1][2].im;
    }
    let manifest = PayloadManifest {
        version: PAYLOAD_VERSION,
        width: coh.width,
        height: coh.height,
        channels: COHERENCY_CHANNELS.iter().map(|s| s.to_string()).collect(),
        dtype: "f32le".into(),
        payload: String::new(),
        extra: std::collections::BTreeMap::from([(
            "looks".to_string(),
            coh.looks.to_string(),
        )]),
    };
    write_payload(base, manifest, &data)?;
    Ok(())
}

pub fn read_coherency(manifest_path: &Path) -> Result<CoherencyField, CliError> {
    let (manifest, data) = polsar_core::payload::read_payload(manifest_path)?;
    if manifest.channels.len() != 9 {
        return Err(CliError::Validation(format!(
            "coherency payload must carry 9 channels, found {}",
            manifest.channels.len()
        )));
    }
    let n = manifest.width * manifest.height;
    let looks: usize = manifest
        .extra
        .get("looks")
        .and_then(|v| v.parse().ok())
        .unwrap_or(1);
    let mut t = vec![polsar_core::CMat3::zeros(); n];
    for (i, m) in t.iter_mut().enumerate() {
        use polsar_core::cmat3::C64;
        m.m[0][0] = C64::new(data[i], 0.0);
        m.m[1][1] = C64::new(data[n + i], 0.0);
        m.m[2][2] = C64::new(data[2 * n + i], 0.0);
        m.m[0][1] = C64::new(data[3 * n + i], data[4 * n + i]);
        m.m[1][0] = m.m[0][1].conj();
        m.m[0][2] = C64::new(data[5 * n + i], data[6 * n + i]);
        m.m[2][0] = m.m[0][2].conj();
        m.m[1][2] = C64::new(data[7 * n + i], data[8 * n + i]);
        m.m[2][1] = m.m[1][2].conj();
    }
    Ok(CoherencyField {
        width: manifest.width,
        height: manifest.height,
        t,
        looks,
    })
}

fn write_eigen(base: &Path, eig: &EigenFeatures) -> Result<(), CliError> {
    let n = eig.len();
    let channels = ["H", "A", "alpha_norm", "lambda1", "lambda2", "lambda3", "valid"];
    let mut data = vec![0.0f64; channels.len() * n];
    for i in 0..n {
        data[i] = eig.entropy[i];
        data[n + i] = eig.anisotropy[i];
        data[2 * n + i] = eig.alpha[i] / 90.0;
        data[3 * n + i] = eig.lambda[i][0];
        data[4 * n + i] = eig.lambda[i][1];
        data[5 * n + i] = eig.lambda[i][2];
        data[6 * n + i] = if eig.valid[i] { 1.0 } else { 0.0 };
    }
    let manifest = PayloadManifest {
        version: PAYLOAD_VERSION,
        width: eig.width,
        height: eig.height,
        channels: channels.iter().map(|s| s.to_string()).collect(),
        dtype: "f32le".into(),
        payload: String::new(),
        extra: Default::default(),
    };
    write_payload(base, manifest, &data)?;
    Ok(())
}

pub fn run(config: &PipelineConfig) -> Result<(), CliError> {
    let input = config.require_input()?;
    let field = load_slc(input)?;
    fs::create_dir_all(&config.out)?;

    let pauli = pauli_vector(&field);
    let rgb = pauli_rgb(&pauli, config.clip_lo, config.clip_hi)?;
    write_rgb_png(&config.out.join("pauli.png"), &rgb)?;

    let coh = coherency(&pauli, config.window)?;
    write_coherency(&coherency_base(&config.out), &coh)?;

    let eig = analyze(&coh)?;
    write_eigen(&eigen_base(&config.out), &eig)?;

    for kind_name in &config.stacks {
        let kind = StackKind::from_str(kind_name).map_err(CliError::Validation)?;
        let stack = feature_stack(&coh, &eig, kind)?;
        write_stack(&config.out.join(format!("stack_{}", kind.tag())), &stack)?;
    }

    println!(
        "decompose: {}x{} scene, window {} -> {}",
        field.width,
        field.height,
        config.window,
        config.out.display()
    );
    Ok(())
}
