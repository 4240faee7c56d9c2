//! Bit-exact SLC container: a text header line `PSLC1 <width> <height>`
//! terminated by `\n`, followed by the HH, HV, VV channel payloads.
//! Each payload holds width x height little-endian f32 (real, imag)
//! pairs in row-major order.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::cmat3::C64;
use crate::error::CoreError;
use crate::field::ScatteringField;

const MAGIC: &str = "PSLC";
const VERSION: &str = "1";

pub fn load_slc(path: &Path) -> Result<ScatteringField, CoreError> {
    let file = File::open(path).map_err(|e| {
        if e.kind() == std::io::ErrorKind::NotFound {
            CoreError::Missing(path.to_path_buf())
        } else {
            CoreError::Io(e)
        }
    })?;
    let mut reader = BufReader::new(file);

    let header = read_header_line(&mut reader)?;
    let mut parts = header.split_ascii_whitespace();
    let tag = parts.next().ok_or_else(|| CoreError::BadHeader("empty header".into()))?;
    if !tag.starts_with(MAGIC) {
        return Err(CoreError::BadMagic);
    }
    let version = &tag[MAGIC.len()..];
    if version != VERSION {
        return Err(CoreError::UnsupportedVersion(tag.to_string()));
    }
    let width: usize = parse_dim(parts.next(), "width")?;
    let height: usize = parse_dim(parts.next(), "height")?;
    if parts.next().is_some() {
        return Err(CoreError::BadHeader("trailing header fields".into()));
    }

    let n = width
        .checked_mul(height)
        .ok_or_else(|| CoreError::BadHeader("dimensions overflow".into()))?;
    let expected = (n as u64) * 8 * 3;
    let mut payload = Vec::new();
    reader.read_to_end(&mut payload)?;
    if payload.len() as u64 != expected {
        return Err(CoreError::SizeMismatch {
            expected,
            found: payload.len() as u64,
        });
    }

    let mut channels = payload.chunks_exact(n * 8);
    let s_hh = decode_channel(channels.next().unwrap());
    let s_hv = decode_channel(channels.next().unwrap());
    let s_vv = decode_channel(channels.next().unwrap());
    ScatteringField::new(width, height, s_hh, s_hv, s_vv)
}

pub fn write_slc(path: &Path, field: &ScatteringField) -> Result<(), CoreError> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    writeln!(writer, "{MAGIC}{VERSION} {} {}", field.width, field.height)?;
    encode_channel(&mut writer, &field.s_hh)?;
    encode_channel(&mut writer, &field.s_hv)?;
    encode_channel(&mut writer, &field.s_vv)?;
    writer.flush()?;
    Ok(())
}

fn read_header_line<R: Read>(reader: &mut R) -> Result<String, CoreError> {
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        let got = reader.read(&mut byte)?;
        if got == 0 {
            return Err(CoreError::BadHeader("missing newline".into()));
        }
        if byte[0] == b'\n' {
            break;
        }
        if line.len() > 128 {
            return Err(CoreError::BadHeader("header line too long".into()));
        }
        line.push(byte[0]);
    }
    String::from_utf8(line).map_err(|_| CoreError::BadHeader("non-utf8 header".into()))
}

fn parse_dim(field: Option<&str>, name: &str) -> Result<usize, CoreError> {
    field
        .ok_or_else(|| CoreError::BadHeader(format!("missing {name}")))?
        .parse()
        .map_err(|_| CoreError::BadHeader(format!("unparsable {name}")))
}

fn decode_channel(bytes: &[u8]) -> Vec<C64> {
    bytes
        .chunks_exact(8)
        .map(|c| {
            let re = f32::from_le_bytes([c[0], c[1], c[2], c[3]]) as f64;
            let im = f32::from_le_bytes([c[4], c[5], c[6], c[7]]) as f64;
            C64::new(re, im)
        })
        .collect()
}

fn encode_channel<W: Write>(writer: &mut W, channel: &[C64]) -> Result<(), CoreError> {
    for v in channel {
        writer.write_all(&(v.re as f32).to_le_bytes())?;
        writer.write_all(&(v.im as f32).to_le_bytes())?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::SplitMix64;
    use std::fs;

    fn temp_path(name: &str) -> std::path::PathBuf {
        let mut p = std::env::temp_dir();
        p.push(format!("pslc-test-{}-{}", std::process::id(), name));
        p
    }

    #[test]
    fn zero_scene_roundtrip() {
        let path = temp_path("zero.slc");
        let field = ScatteringField::zeros(2, 2);
        write_slc(&path, &field).unwrap();
        let back = load_slc(&path).unwrap();
        assert_eq!(back.width, 2);
        assert_eq!(back.height, 2);
        assert!(back.s_hh.iter().all(|v| v.re == 0.0 && v.im == 0.0));
        assert!(back.s_hv.iter().all(|v| v.re == 0.0 && v.im == 0.0));
        assert!(back.s_vv.iter().all(|v| v.re == 0.0 && v.im == 0.0));
        fs::remove_file(&path).ok();
    }

    #[test]
    fn random_field_roundtrip_is_bit_identical() {
        // Values are generated at f32 precision so the container holds
        // them exactly.
        let path = temp_path("rand.slc");
        let mut rng = SplitMix64::new(99);
        let mut gen = || {
            (0..5 * 4)
                .map(|_| {
                    C64::new(
                        rng.uniform(-2.0, 2.0) as f32 as f64,
                        rng.uniform(-2.0, 2.0) as f32 as f64,
                    )
                })
                .collect::<Vec<_>>()
        };
        let field = ScatteringField::new(5, 4, gen(), gen(), gen()).unwrap();
        write_slc(&path, &field).unwrap();
        let back = load_slc(&path).unwrap();
        assert_eq!(field.s_hh, back.s_hh);
        assert_eq!(field.s_hv, back.s_hv);
        assert_eq!(field.s_vv, back.s_vv);
        fs::remove_file(&path).ok();
    }

    #[test]
    fn size_mismatch_reported() {
        let path = temp_path("short.slc");
        // header declares 4x4 but payload holds 3x3 worth of samples
        let mut bytes = b"PSLC1 4 4\n".to_vec();
        bytes.extend(std::iter::repeat_n(0u8, 3 * 3 * 8 * 3));
        fs::write(&path, &bytes).unwrap();
        match load_slc(&path) {
            Err(CoreError::SizeMismatch { expected, found }) => {
                assert_eq!(expected, 4 * 4 * 8 * 3);
                assert_eq!(found, 3 * 3 * 8 * 3);
            }
            other => panic!("expected size mismatch, got {other:?}"),
        }
        fs::remove_file(&path).ok();
    }

    #[test]
    fn missing_file_reported_distinctly() {
        let err = load_slc(Path::new("/nonexistent/really-not-here.slc")).unwrap_err();
        assert!(matches!(err, CoreError::Missing(_)));
    }

    #[test]
    fn unsupported_version_reported_distinctly() {
        let path = temp_path("v2.slc");
        fs::write(&path, b"PSLC2 1 1\n").unwrap();
        assert!(matches!(
            load_slc(&path),
            Err(CoreError::UnsupportedVersion(_))
        ));
        fs::remove_file(&path).ok();
    }

    #[test]
    fn foreign_magic_rejected() {
        let path = temp_path("foreign.slc");
        fs::write(&path, b"TIFF 1 1\n").unwrap();
        assert!(matches!(load_slc(&path), Err(CoreError::BadMagic)));
        fs::remove_file(&path).ok();
    }
}
