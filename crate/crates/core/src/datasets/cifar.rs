//! CIFAR-10 binary batches: records of one label byte followed by 3072
//! pixel bytes, channel-planar (1024 R, 1024 G, 1024 B), each plane 32x32
//! row-major.

use std::fs;
use std::path::Path;

use super::{split_from_path, Dataset};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const SIDE: usize = 32;
const PLANE: usize = SIDE * SIDE;
pub const RECORD_LEN: usize = 1 + 3 * PLANE;
const N_CLASSES: usize = 10;

/// Append the records in `bytes` to `images` (HWC, scaled) and `labels`.
fn parse_batch(bytes: &[u8], path: &Path, images: &mut Vec<f64>, labels: &mut Vec<usize>) -> Result<()> {
    if bytes.is_empty() || !bytes.len().is_multiple_of(RECORD_LEN) {
        return Err(Error::TruncatedFile {
            path: path.into(),
            detail: format!("length {} is not a positive multiple of {RECORD_LEN}", bytes.len()),
        });
    }
    for record in bytes.chunks_exact(RECORD_LEN) {
        let label = record[0] as usize;
        if label >= N_CLASSES {
            return Err(Error::LabelOutOfRange {
                label,
                n_classes: N_CLASSES,
            });
        }
        labels.push(label);
        let planes = &record[1..];
        for p in 0..PLANE {
            for c in 0..3 {
                images.push(f64::from(planes[c * PLANE + p]) / 255.0);
            }
        }
    }
    Ok(())
}

/// Load and concatenate CIFAR-10 binary batch files.
pub fn load_cifar10<P: AsRef<Path>>(batch_paths: &[P]) -> Result<Dataset> {
    if batch_paths.is_empty() {
        return Err(Error::InvalidArgument("no CIFAR-10 batch files given".into()));
    }
    let mut images = Vec::new();
    let mut labels = Vec::new();
    for p in batch_paths {
        let p = p.as_ref();
        let bytes = fs::read(p).map_err(|e| Error::io(p, e))?;
        parse_batch(&bytes, p, &mut images, &mut labels)?;
    }
    let n = labels.len();
    let split = split_from_path(batch_paths[0].as_ref());
    Dataset::new(Tensor::new(vec![n, SIDE, SIDE, 3], images)?, labels, N_CLASSES, split)
}

/// Serialise a 32x32x3 dataset into one binary batch.
pub fn to_cifar_bytes(ds: &Dataset) -> Result<Vec<u8>> {
    let [n, h, w, c] = ds.dims();
    if (h, w, c) != (SIDE, SIDE, 3) {
        return Err(Error::InvalidArgument(format!(
            "CIFAR records are 32x32x3, dataset is {h}x{w}x{c}"
        )));
    }
    let mut out = Vec::with_capacity(n * RECORD_LEN);
    for i in 0..n {
        out.push(ds.labels[i] as u8);
        let img = ds.images.row(i);
        for ch in 0..3 {
            out.extend((0..PLANE).map(|p| super::to_byte(img[p * 3 + ch])));
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_record_is_black_class_zero() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("data_batch_1.bin");
        fs::write(&p, vec![0u8; RECORD_LEN]).unwrap();
        let ds = load_cifar10(&[&p]).unwrap();
        assert_eq!(ds.images.shape(), &[1, 32, 32, 3]);
        assert_eq!(ds.labels, vec![0]);
        assert!(ds.images.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn planar_to_hwc() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("b.bin");
        let mut rec = vec![0u8; RECORD_LEN];
        rec[0] = 7;
        rec[1 + 33] = 255; // R at (y=1, x=1)
        rec[1 + PLANE + 33] = 51; // G at (1, 1)
        fs::write(&p, &rec).unwrap();
        let ds = load_cifar10(&[&p]).unwrap();
        let px = &ds.images.row(0)[(SIDE + 1) * 3..][..3];
        assert_eq!(px, &[1.0, 0.2, 0.0]);
        assert_eq!(ds.labels, vec![7]);
        assert_eq!(to_cifar_bytes(&ds).unwrap(), rec);
    }

    #[test]
    fn short_file_and_bad_label() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("short.bin");
        fs::write(&p, vec![0u8; RECORD_LEN - 1]).unwrap();
        assert!(matches!(load_cifar10(&[&p]), Err(Error::TruncatedFile { .. })));
        let mut rec = vec![0u8; RECORD_LEN];
        rec[0] = 10;
        fs::write(&p, rec).unwrap();
        assert!(matches!(
            load_cifar10(&[&p]),
            Err(Error::LabelOutOfRange { label: 10, .. })
        ));
    }
}
