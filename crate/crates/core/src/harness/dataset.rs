//! Dataset ingestion: IDX files, raw grayscale directories and synthetic tensors.

use std::fs;
use std::path::{Path, PathBuf};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::models::{init_random, reconstruct, Family, ModelSpec, ParamVector};
use crate::tensor::DenseTensor;

/// IDX magic for rank-3 unsigned bytes.
pub const IDX_U8_RANK3: u32 = 0x0000_0803;
/// IDX magic for rank-3 big-endian doubles.
pub const IDX_F64_RANK3: u32 = 0x0000_0E03;

/// Where a dataset comes from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "source", rename_all = "SCREAMING_SNAKE_CASE")]
pub enum DatasetSource {
    IdxFile {
        path: PathBuf,
    },
    /// Directory of `width * height` 8-bit images described by `manifest.json`.
    RawGrayDir {
        path: PathBuf,
    },
    Synthetic {
        dims: [usize; 3],
        family: Family,
        true_rank: usize,
        #[serde(default)]
        noise_sigma: f64,
        #[serde(default)]
        seed: u64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetSpec {
    pub name: String,
    #[serde(flatten)]
    pub source: DatasetSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub batch_size: Option<usize>,
}

/// Batch sizes used for the usual image sets: 64 for 28-32 pixel images, 32 for 64 pixel ones.
pub fn default_batch_size(name: &str) -> Option<usize> {
    let key: String = name
        .chars()
        .filter(|c| c.is_ascii_alphanumeric())
        .collect::<String>()
        .to_ascii_lowercase();
    match key.as_str() {
        "mnist" | "fashionmnist" | "cifar10" | "cifar100" => Some(64),
        "coco" | "lfw" => Some(32),
        _ => None,
    }
}

impl DatasetSpec {
    /// Explicit batch size, else the known-name default, else the whole tensor.
    pub fn batch_size(&self) -> Option<usize> {
        self.batch_size.or_else(|| default_batch_size(&self.name))
    }

    pub fn load(&self) -> Result<DenseTensor> {
        match &self.source {
            DatasetSource::IdxFile { path } => load_idx(path),
            DatasetSource::RawGrayDir { path } => load_raw_gray_dir(path),
            DatasetSource::Synthetic {
                dims,
                family,
                true_rank,
                noise_sigma,
                seed,
            } => Ok(synthesize_tensor(*dims, *family, *true_rank, *noise_sigma, *seed)?.0),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.batch_size == Some(0) {
            return Err(Error::Config(format!("dataset '{}': batch_size must be positive", self.name)));
        }
        if let DatasetSource::Synthetic { dims, family, true_rank, noise_sigma, .. } = &self.source {
            ModelSpec::new(*family, *dims, *true_rank, *true_rank)
                .map_err(|e| Error::Config(format!("dataset '{}': {e}", self.name)))?;
            if !(*noise_sigma >= 0.0) {
                return Err(Error::Config(format!("dataset '{}': noise_sigma must be non-negative", self.name)));
            }
        }
        Ok(())
    }
}

pub fn load_idx(path: impl AsRef<Path>) -> Result<DenseTensor> {
    parse_idx(&fs::read(path)?)
}

/// Parses a rank-3 IDX image file into a `count x rows x cols` tensor.
///
/// Unsigned-byte payloads are scaled to `[0, 1]`; double payloads are
/// taken as is.
pub fn parse_idx(bytes: &[u8]) -> Result<DenseTensor> {
    let word = |at: usize| -> Result<u32> {
        bytes
            .get(at..at + 4)
            .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| Error::format(at as u64, format!("truncated header: file has {} bytes", bytes.len())))
    };
    let magic = word(0)?;
    let width = match magic {
        IDX_U8_RANK3 => 1,
        IDX_F64_RANK3 => 8,
        _ => {
            return Err(Error::format(
                0,
                format!("bad magic 0x{magic:08X}, expected 0x{IDX_U8_RANK3:08X} or 0x{IDX_F64_RANK3:08X}"),
            ))
        }
    };
    let dims = [word(4)? as usize, word(8)? as usize, word(12)? as usize];
    let count = dims
        .iter()
        .try_fold(1usize, |acc, &d| acc.checked_mul(d))
        .and_then(|n| n.checked_mul(width))
        .ok_or_else(|| Error::format(4, "dimension sizes overflow"))?;
    let payload = &bytes[16..];
    if payload.len() < count {
        return Err(Error::format(
            (16 + payload.len()) as u64,
            format!("truncated payload: expected {count} bytes after the header, found {}", payload.len()),
        ));
    }
    if payload.len() > count {
        return Err(Error::format((16 + count) as u64, "trailing bytes after payload"));
    }
    let data: Vec<f64> = if width == 1 {
        payload.iter().map(|&b| b as f64 / 255.0).collect()
    } else {
        payload
            .chunks_exact(8)
            .map(|c| f64::from_be_bytes(c.try_into().expect("chunk of 8")))
            .collect()
    };
    DenseTensor::new(dims.to_vec(), data)
}

fn idx_header(magic: u32, dims: &[usize]) -> Result<Vec<u8>> {
    if dims.len() != 3 {
        return Err(Error::shape(format!("IDX images need a third-order tensor, got {dims:?}")));
    }
    let mut out = magic.to_be_bytes().to_vec();
    for &d in dims {
        let d = u32::try_from(d).map_err(|_| Error::shape(format!("dimension {d} too large for IDX")))?;
        out.extend(d.to_be_bytes());
    }
    Ok(out)
}

/// Encodes raw bytes as an unsigned-byte rank-3 IDX file.
pub fn encode_idx_u8(dims: [usize; 3], pixels: &[u8]) -> Result<Vec<u8>> {
    if pixels.len() != dims.iter().product::<usize>() {
        return Err(Error::shape("pixel count does not match dims"));
    }
    let mut out = idx_header(IDX_U8_RANK3, &dims)?;
    out.extend_from_slice(pixels);
    Ok(out)
}

/// Encodes a tensor losslessly as a double-precision rank-3 IDX file.
pub fn encode_idx_f64(t: &DenseTensor) -> Result<Vec<u8>> {
    let mut out = idx_header(IDX_F64_RANK3, t.dims())?;
    for v in t.data() {
        out.extend(v.to_be_bytes());
    }
    Ok(out)
}

pub fn write_idx_f64(path: impl AsRef<Path>, t: &DenseTensor) -> Result<()> {
    fs::write(path, encode_idx_f64(t)?)?;
    Ok(())
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawManifest {
    width: usize,
    height: usize,
    #[serde(default)]
    files: Option<Vec<String>>,
}

/// Reads a directory of headerless 8-bit grayscale images.
///
/// `manifest.json` gives `width`, `height` and optionally the ordered list
/// of `files`; without the list every `*.gray` file is read in name order.
pub fn load_raw_gray_dir(dir: impl AsRef<Path>) -> Result<DenseTensor> {
    let dir = dir.as_ref();
    let manifest_path = dir.join("manifest.json");
    let text = fs::read_to_string(&manifest_path)?;
    let manifest: RawManifest = serde_json::from_str(&text).map_err(|e| {
        Error::format(0, format!("{}: {e}", manifest_path.display()))
    })?;
    let files = match manifest.files {
        Some(f) => f,
        None => {
            let mut names: Vec<String> = fs::read_dir(dir)?
                .filter_map(|e| e.ok())
                .map(|e| e.file_name().to_string_lossy().into_owned())
                .filter(|n| n.ends_with(".gray"))
                .collect();
            names.sort();
            names
        }
    };
    if files.is_empty() {
        return Err(Error::format(0, format!("{}: no images", dir.display())));
    }
    let size = manifest.width * manifest.height;
    let mut data = Vec::with_capacity(files.len() * size);
    for name in &files {
        let bytes = fs::read(dir.join(name))?;
        if bytes.len() != size {
            return Err(Error::format(
                bytes.len().min(size) as u64,
                format!("{name}: expected {size} bytes, found {}", bytes.len()),
            ));
        }
        data.extend(bytes.iter().map(|&b| b as f64 / 255.0));
    }
    DenseTensor::new(vec![files.len(), manifest.height, manifest.width], data)
}

/// Exact-rank tensor from seeded uniform factors plus Gaussian noise.
///
/// PARATUCK2 uses `P = Q = rank`. The noise comes from a separate stream
/// of the same seed, so the ground truth does not depend on `noise_sigma`.
pub fn synthesize_tensor(
    dims: [usize; 3],
    family: Family,
    rank: usize,
    noise_sigma: f64,
    seed: u64,
) -> Result<(DenseTensor, ParamVector)> {
    let spec = ModelSpec::new(family, dims, rank, rank)?;
    let truth = init_random(&spec, seed);
    let clean = reconstruct(&truth);
    if noise_sigma == 0.0 {
        return Ok((clean, truth));
    }
    let normal = Normal::new(0.0, noise_sigma)
        .map_err(|e| Error::Config(format!("noise_sigma {noise_sigma}: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    let data = clean.data().iter().map(|v| v + normal.sample(&mut rng)).collect();
    Ok((DenseTensor::new(clean.dims().to_vec(), data)?, truth))
}

/// Splits along the first mode into consecutive batches of at most `batch_size`.
pub fn batch_dataset(t: &DenseTensor, batch_size: usize) -> Result<Vec<DenseTensor>> {
    if batch_size == 0 {
        return Err(Error::Config("batch size must be positive".into()));
    }
    let count = t.dims()[0];
    (0..count)
        .step_by(batch_size)
        .map(|start| t.slice_first_mode(start, (start + batch_size).min(count)))
        .collect()
}

/// Arranges a `count x rows x cols` batch for a decomposition family.
///
/// DEDICOM needs square frontal slices; when the first two modes differ
/// but the last two agree the batch becomes `rows x cols x count`.
pub fn decomposition_target(batch: &DenseTensor, family: Family) -> Result<DenseTensor> {
    let d = batch.dims();
    if d.len() != 3 {
        return Err(Error::shape(format!("expected a third-order tensor, got {d:?}")));
    }
    if family != Family::Dedicom || d[0] == d[1] {
        return Ok(batch.clone());
    }
    if d[1] == d[2] {
        return batch.permute(&[1, 2, 0]);
    }
    Err(Error::shape(format!("DEDICOM needs two equal modes, got {d:?}")))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::loss;

    #[test]
    fn single_pixel_idx() {
        let bytes = encode_idx_u8([1, 1, 1], &[255]).unwrap();
        assert_eq!(bytes.len(), 17);
        let t = parse_idx(&bytes).unwrap();
        assert_eq!(t.dims(), &[1, 1, 1]);
        assert_eq!(t.data(), &[1.0]);
    }

    #[test]
    fn label_file_is_rejected() {
        let mut bytes = vec![0, 0, 8, 1, 0, 0, 0, 1];
        bytes.push(3);
        match parse_idx(&bytes) {
            Err(Error::Format { offset: 0, .. }) => {}
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn empty_and_truncated_files() {
        assert!(matches!(parse_idx(&[]), Err(Error::Format { offset: 0, .. })));
        let short_header = [0, 0, 8, 3, 0, 0, 0, 2, 0, 0];
        assert!(matches!(parse_idx(&short_header), Err(Error::Format { offset: 8, .. })));
        let mut short_payload = encode_idx_u8([1, 2, 2], &[1, 2, 3, 4]).unwrap();
        short_payload.pop();
        assert!(matches!(parse_idx(&short_payload), Err(Error::Format { offset: 19, .. })));
    }

    #[test]
    fn double_idx_round_trip() {
        let t = DenseTensor::from_fn(&[2, 3, 2], |i| i[0] as f64 - 0.1 * i[1] as f64 + 1e-9 * i[2] as f64).unwrap();
        assert_eq!(parse_idx(&encode_idx_f64(&t).unwrap()).unwrap(), t);
    }

    #[test]
    fn raw_gray_directory() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("manifest.json"), r#"{"width": 3, "height": 2}"#).unwrap();
        fs::write(dir.path().join("b.gray"), [0u8, 51, 102, 153, 204, 255]).unwrap();
        fs::write(dir.path().join("a.gray"), [255u8; 6]).unwrap();
        fs::write(dir.path().join("notes.txt"), "ignored").unwrap();
        let t = load_raw_gray_dir(dir.path()).unwrap();
        assert_eq!(t.dims(), &[2, 2, 3]);
        assert_eq!(t.get(&[0, 1, 2]), 1.0);
        assert!((t.get(&[1, 1, 0]) - 0.6).abs() < 1e-15);

        fs::write(dir.path().join("a.gray"), [1u8; 5]).unwrap();
        assert!(matches!(load_raw_gray_dir(dir.path()), Err(Error::Format { .. })));
    }

    #[test]
    fn batches_of_four() {
        let t = DenseTensor::from_fn(&[10, 2, 2], |i| (i[0] * 4 + i[1] * 2 + i[2]) as f64).unwrap();
        let b = batch_dataset(&t, 4).unwrap();
        let sizes: Vec<usize> = b.iter().map(|x| x.dims()[0]).collect();
        assert_eq!(sizes, vec![4, 4, 2]);
        assert_eq!(DenseTensor::concat_first_mode(&b).unwrap(), t);
        assert_eq!(batch_dataset(&t, 10).unwrap().len(), 1);
        assert_eq!(batch_dataset(&t, 99).unwrap()[0], t);
    }

    #[test]
    fn noiseless_synthesis_is_exact_and_seeded() {
        for family in Family::ALL {
            let (t, truth) = synthesize_tensor([4, 4, 3], family, 2, 0.0, 8).unwrap();
            assert_eq!(loss(&truth, &t).unwrap(), 0.0);
            assert_eq!(synthesize_tensor([4, 4, 3], family, 2, 0.0, 8).unwrap().0, t);
        }
    }

    #[test]
    fn noise_has_the_requested_scale() {
        let (clean, _) = synthesize_tensor([8, 8, 8], Family::Cp, 3, 0.0, 5).unwrap();
        let (noisy, _) = synthesize_tensor([8, 8, 8], Family::Cp, 3, 0.1, 5).unwrap();
        let n = noisy.sub(&clean).unwrap().frobenius_norm();
        let expected = 0.1 * 512f64.sqrt();
        assert!((n - expected).abs() <= 0.3 * expected, "{n}");
    }

    #[test]
    fn dedicom_targets_get_square_slices() {
        let batch = DenseTensor::zeros(&[5, 4, 4]).unwrap();
        assert_eq!(decomposition_target(&batch, Family::Dedicom).unwrap().dims(), &[4, 4, 5]);
        assert_eq!(decomposition_target(&batch, Family::Cp).unwrap().dims(), &[5, 4, 4]);
        assert!(decomposition_target(&DenseTensor::zeros(&[2, 3, 4]).unwrap(), Family::Dedicom).is_err());
    }

    #[test]
    fn known_names_get_default_batch_sizes() {
        assert_eq!(default_batch_size("CIFAR-10"), Some(64));
        assert_eq!(default_batch_size("mnist"), Some(64));
        assert_eq!(default_batch_size("LFW"), Some(32));
        assert_eq!(default_batch_size("mine"), None);
    }

    #[test]
    fn dataset_spec_json() {
        let spec: DatasetSpec = serde_json::from_str(
            r#"{"name": "toy", "source": "SYNTHETIC", "dims": [4, 4, 4], "family": "CP", "true_rank": 2}"#,
        )
        .unwrap();
        assert_eq!(spec.batch_size(), None);
        assert_eq!(spec.load().unwrap().dims(), &[4, 4, 4]);
        let idx: DatasetSpec = serde_json::from_str(r#"{"name": "MNIST", "source": "IDX_FILE", "path": "x.idx"}"#).unwrap();
        assert_eq!(idx.batch_size(), Some(64));
    }
}
