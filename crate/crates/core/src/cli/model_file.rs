//! Binary containers for models and cached feature matrices.
//!
//! ```text
//! magic         4 bytes   "ADL1" (model) or "ADLF" (feature matrix)
//! header_len    u32 LE
//! header        header_len bytes of UTF-8 JSON
//! payload       f64 LE values, column-major
//! checksum      u32 LE, CRC-32 (IEEE) of the payload bytes
//! ```
//!
//! A model payload holds the `C` dictionaries (`m x k` each) concatenated in
//! label order.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::classifier::{ClassDictionary, Model, Provenance};
use crate::dict_update::Dictionary;
use crate::error::{AdlError, Result};
use crate::features::FeatureConfig;
use crate::linalg::Mat;
use crate::trainer::Algorithm;

pub const MODEL_MAGIC: &[u8; 4] = b"ADL1";
pub const FEATURE_MAGIC: &[u8; 4] = b"ADLF";
pub const FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct ModelHeader {
    format_version: u32,
    m: usize,
    k: usize,
    classes: usize,
    labels: Vec<String>,
    sparsity: usize,
    rho: f64,
    algorithm: Algorithm,
    seed: u64,
    feature_config: FeatureConfig,
    max_outer_iters: usize,
    sweeps: usize,
    conv_tol: f64,
    sample_rate: Option<u32>,
    patch_layout: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureHeader {
    pub format_version: u32,
    pub rows: usize,
    pub cols: usize,
    pub feature_config: FeatureConfig,
    pub source: String,
    pub sample_rate: u32,
}

const PATCH_LAYOUT: &str = "frame-major";

fn encode_container(magic: &[u8; 4], header: &[u8], payload: &[f64]) -> Vec<u8> {
    let mut out = Vec::with_capacity(12 + header.len() + payload.len() * 8);
    out.extend_from_slice(magic);
    out.extend_from_slice(&(header.len() as u32).to_le_bytes());
    out.extend_from_slice(header);
    let start = out.len();
    for v in payload {
        out.extend_from_slice(&v.to_le_bytes());
    }
    let crc = crc32fast::hash(&out[start..]);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

/// Splits a container into its header text and raw payload values, checking
/// magic, declared payload length and checksum.
fn decode_container<'a>(
    bytes: &'a [u8],
    magic: &[u8; 4],
    payload_len: impl FnOnce(&str) -> Result<usize>,
) -> Result<(&'a str, Vec<f64>)> {
    let err = |msg: String| AdlError::ModelFile(msg);
    if bytes.len() < 8 {
        return Err(err("truncated: missing header".into()));
    }
    if &bytes[..4] != magic {
        return Err(err(format!(
            "bad magic {:?}, expected {:?}",
            String::from_utf8_lossy(&bytes[..4]),
            String::from_utf8_lossy(magic)
        )));
    }
    let header_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
    let header_end = 8usize
        .checked_add(header_len)
        .filter(|&e| e <= bytes.len())
        .ok_or_else(|| err("truncated: header".into()))?;
    let header = std::str::from_utf8(&bytes[8..header_end])
        .map_err(|e| err(format!("header is not UTF-8: {e}")))?;
    let values = payload_len(header)?;
    let payload_end = values
        .checked_mul(8)
        .and_then(|n| n.checked_add(header_end))
        .ok_or_else(|| err("declared payload size overflows".into()))?;
    if bytes.len() < payload_end + 4 {
        return Err(err(format!(
            "truncated: expected {} payload bytes plus checksum, file has {}",
            values * 8,
            bytes.len() - header_end
        )));
    }
    if bytes.len() > payload_end + 4 {
        return Err(err("trailing bytes after checksum".into()));
    }
    let payload = &bytes[header_end..payload_end];
    let stored = u32::from_le_bytes(bytes[payload_end..payload_end + 4].try_into().unwrap());
    let actual = crc32fast::hash(payload);
    if stored != actual {
        return Err(err(format!(
            "checksum mismatch (stored {stored:08x}, computed {actual:08x})"
        )));
    }
    let data = payload
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, data))
}

fn check_version(v: u32) -> Result<()> {
    if v != FORMAT_VERSION {
        return Err(AdlError::ModelFile(format!(
            "unsupported format version {v} (this build reads {FORMAT_VERSION})"
        )));
    }
    Ok(())
}

/// Serializes a model to bytes.
pub fn encode_model(model: &Model) -> Vec<u8> {
    let p = &model.provenance;
    let header = ModelHeader {
        format_version: FORMAT_VERSION,
        m: model.dim(),
        k: model.atoms(),
        classes: model.num_classes(),
        labels: model.labels(),
        sparsity: model.sparsity,
        rho: model.rho,
        algorithm: p.algorithm,
        seed: p.seed,
        feature_config: model.feature_config.clone(),
        max_outer_iters: p.max_outer_iters,
        sweeps: p.sweeps,
        conv_tol: p.conv_tol,
        sample_rate: p.sample_rate,
        patch_layout: PATCH_LAYOUT.into(),
    };
    let header = serde_json::to_vec(&header).expect("header serializes");
    let mut payload = Vec::with_capacity(model.num_classes() * model.dim() * model.atoms());
    for c in model.classes() {
        payload.extend_from_slice(c.dictionary.atoms().as_slice());
    }
    encode_container(MODEL_MAGIC, &header, &payload)
}

/// Parses bytes produced by [`encode_model`].
pub fn decode_model(bytes: &[u8]) -> Result<Model> {
    let mut parsed: Option<ModelHeader> = None;
    let (_, payload) = decode_container(bytes, MODEL_MAGIC, |text| {
        let h: ModelHeader = serde_json::from_str(text)
            .map_err(|e| AdlError::ModelFile(format!("bad header: {e}")))?;
        check_version(h.format_version)?;
        if h.labels.len() != h.classes {
            return Err(AdlError::ModelFile(format!(
                "header lists {} labels for {} classes",
                h.labels.len(),
                h.classes
            )));
        }
        if h.patch_layout != PATCH_LAYOUT {
            return Err(AdlError::ModelFile(format!("unknown patch layout {:?}", h.patch_layout)));
        }
        let n = h
            .classes
            .checked_mul(h.m)
            .and_then(|v| v.checked_mul(h.k))
            .ok_or_else(|| AdlError::ModelFile("declared shape overflows".into()))?;
        parsed = Some(h);
        Ok(n)
    })?;
    let h = parsed.expect("header parsed");
    let block = h.m * h.k;
    let classes = h
        .labels
        .iter()
        .enumerate()
        .map(|(c, label)| {
            let atoms = Mat::from_col_major(h.m, h.k, payload[c * block..(c + 1) * block].to_vec())?;
            let dictionary = Dictionary::new(atoms)
                .map_err(|e| AdlError::ModelFile(format!("class {label:?}: {e}")))?;
            Ok(ClassDictionary {
                label: label.clone(),
                dictionary,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let provenance = Provenance {
        algorithm: h.algorithm,
        seed: h.seed,
        max_outer_iters: h.max_outer_iters,
        sweeps: h.sweeps,
        conv_tol: h.conv_tol,
        sample_rate: h.sample_rate,
    };
    Model::new(classes, h.feature_config, h.sparsity, h.rho, provenance)
        .map_err(|e| AdlError::ModelFile(e.to_string()))
}

/// Writes `bytes` through a temporary sibling file and a rename.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = path.parent().filter(|p| !p.as_os_str().is_empty()).unwrap_or(Path::new("."));
    let name = path
        .file_name()
        .ok_or_else(|| AdlError::InvalidInput(format!("{} is not a file path", path.display())))?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    let result = (|| {
        let mut f = fs::File::create(&tmp)?;
        f.write_all(bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    result.map_err(AdlError::from)
}

pub fn save_model(model: &Model, path: &Path) -> Result<()> {
    write_atomic(path, &encode_model(model))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let bytes = fs::read(path)?;
    decode_model(&bytes).map_err(|e| match e {
        AdlError::ModelFile(msg) => AdlError::ModelFile(format!("{}: {msg}", path.display())),
        other => other,
    })
}

/// Serializes a feature matrix (one patch per column).
pub fn encode_features(header: &FeatureHeader, patches: &Mat) -> Vec<u8> {
    let header = serde_json::to_vec(header).expect("header serializes");
    encode_container(FEATURE_MAGIC, &header, patches.as_slice())
}

pub fn decode_features(bytes: &[u8]) -> Result<(FeatureHeader, Mat)> {
    let mut parsed: Option<FeatureHeader> = None;
    let (_, payload) = decode_container(bytes, FEATURE_MAGIC, |text| {
        let h: FeatureHeader = serde_json::from_str(text)
            .map_err(|e| AdlError::ModelFile(format!("bad header: {e}")))?;
        check_version(h.format_version)?;
        let n = h
            .rows
            .checked_mul(h.cols)
            .ok_or_else(|| AdlError::ModelFile("declared shape overflows".into()))?;
        parsed = Some(h);
        Ok(n)
    })?;
    let h = parsed.expect("header parsed");
    let m = Mat::from_col_major(h.rows, h.cols, payload)?;
    Ok((h, m))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::trainer::TrainConfig;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sample_model(c: usize, m: usize, k: usize) -> Model {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let classes = (0..c)
            .map(|i| ClassDictionary {
                label: format!("class-{i}"),
                dictionary: crate::synthetic::random_dictionary(&mut rng, m, k),
            })
            .collect();
        Model::new(
            classes,
            FeatureConfig::default(),
            2,
            1e-3,
            Provenance::from_config(&TrainConfig::default(), Some(22050)),
        )
        .unwrap()
    }

    #[test]
    fn round_trip_is_exact_and_idempotent() {
        let model = sample_model(3, 10, 4);
        let bytes = encode_model(&model);
        let back = decode_model(&bytes).unwrap();
        assert_eq!(back, model);
        assert_eq!(encode_model(&back), bytes);
    }

    #[test]
    fn payload_length_matches_shape() {
        let model = sample_model(4, 2500, 64);
        let bytes = encode_model(&model);
        let header_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;
        assert_eq!(bytes.len() - 8 - header_len - 4, 4 * 64 * 2500 * 8);
    }

    #[test]
    fn corruption_is_detected() {
        let model = sample_model(2, 6, 3);
        let bytes = encode_model(&model);
        let header_len = u32::from_le_bytes(bytes[4..8].try_into().unwrap()) as usize;

        let mut flipped = bytes.clone();
        flipped[8 + header_len + 5] ^= 0x01;
        let err = decode_model(&flipped).unwrap_err();
        assert!(err.to_string().contains("checksum"), "{err}");

        let mut magic = bytes.clone();
        magic[0] = b'X';
        assert!(decode_model(&magic).unwrap_err().to_string().contains("magic"));

        assert!(decode_model(&bytes[..bytes.len() - 9])
            .unwrap_err()
            .to_string()
            .contains("truncated"));

        let text = String::from_utf8(bytes[8..8 + header_len].to_vec()).unwrap();
        let bumped = text.replace("\"format_version\":1", "\"format_version\":7");
        let payload: Vec<f64> = model
            .classes()
            .iter()
            .flat_map(|c| c.dictionary.atoms().as_slice().to_vec())
            .collect();
        let rebuilt = encode_container(MODEL_MAGIC, bumped.as_bytes(), &payload);
        assert!(decode_model(&rebuilt).unwrap_err().to_string().contains("version"));
    }

    #[test]
    fn feature_container_round_trip() {
        let patches = Mat::from_rows(&[&[1.0, 2.0], &[3.5, -4.0], &[0.0, 1e-300]]).unwrap();
        let header = FeatureHeader {
            format_version: FORMAT_VERSION,
            rows: 3,
            cols: 2,
            feature_config: FeatureConfig::default(),
            source: "x.wav".into(),
            sample_rate: 8000,
        };
        let bytes = encode_features(&header, &patches);
        let (h, m) = decode_features(&bytes).unwrap();
        assert_eq!(h, header);
        assert_eq!(m, patches);
        assert!(decode_model(&bytes).is_err());
    }
}
