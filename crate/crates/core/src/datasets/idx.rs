//! IDX container (MNIST, Fashion-MNIST): big-endian header, unsigned bytes.

use std::fs;
use std::path::Path;

use super::{split_from_path, Dataset};
use crate::error::{Error, Result};
use crate::tensor::Tensor;

pub const IMAGE_MAGIC: u32 = 0x0000_0803;
pub const LABEL_MAGIC: u32 = 0x0000_0801;
const N_CLASSES: usize = 10;

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn be_u32(bytes: &[u8], at: usize, path: &Path) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::TruncatedFile {
            path: path.into(),
            detail: format!("header needs {} bytes, file has {}", at + 4, bytes.len()),
        })
}

fn check_magic(bytes: &[u8], expected: u32, path: &Path) -> Result<()> {
    let found = be_u32(bytes, 0, path)?;
    if found != expected {
        return Err(Error::BadMagic {
            path: path.into(),
            found,
            expected,
        });
    }
    Ok(())
}

fn body<'a>(bytes: &'a [u8], header: usize, len: usize, path: &Path) -> Result<&'a [u8]> {
    let have = bytes.len() - header;
    if have < len {
        return Err(Error::TruncatedFile {
            path: path.into(),
            detail: format!("expected {len} data bytes, found {have}"),
        });
    }
    if have > len {
        return Err(Error::TrailingBytes {
            path: path.into(),
            extra: have - len,
        });
    }
    Ok(&bytes[header..])
}

/// Parse raw IDX image bytes into `(count, rows, cols, pixels)`.
pub fn parse_images(bytes: &[u8], path: &Path) -> Result<(usize, usize, usize, Vec<u8>)> {
    check_magic(bytes, IMAGE_MAGIC, path)?;
    let n = be_u32(bytes, 4, path)? as usize;
    let rows = be_u32(bytes, 8, path)? as usize;
    let cols = be_u32(bytes, 12, path)? as usize;
    let pixels = body(bytes, 16, n * rows * cols, path)?;
    Ok((n, rows, cols, pixels.to_vec()))
}

pub fn parse_labels(bytes: &[u8], path: &Path) -> Result<Vec<u8>> {
    check_magic(bytes, LABEL_MAGIC, path)?;
    let n = be_u32(bytes, 4, path)? as usize;
    Ok(body(bytes, 8, n, path)?.to_vec())
}

/// Load an IDX image/label pair. Pixels are scaled by 1/255.
pub fn load_idx(images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<Dataset> {
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    let (n, rows, cols, pixels) = parse_images(&read(ip)?, ip)?;
    let labels = parse_labels(&read(lp)?, lp)?;
    if labels.len() != n {
        return Err(Error::CountMismatch {
            images: n,
            labels: labels.len(),
        });
    }
    if n == 0 || rows == 0 || cols == 0 {
        return Err(Error::TruncatedFile {
            path: ip.into(),
            detail: "no image data".into(),
        });
    }
    let labels: Vec<usize> = labels.into_iter().map(usize::from).collect();
    if let Some(&label) = labels.iter().find(|&&l| l >= N_CLASSES) {
        return Err(Error::LabelOutOfRange {
            label,
            n_classes: N_CLASSES,
        });
    }
    let data = pixels.into_iter().map(|b| f64::from(b) / 255.0).collect();
    let images = Tensor::new(vec![n, rows, cols, 1], data)?;
    Dataset::new(images, labels, N_CLASSES, split_from_path(ip))
}

/// Serialise a single-channel dataset back into IDX image and label bytes.
pub fn to_idx_bytes(ds: &Dataset) -> Result<(Vec<u8>, Vec<u8>)> {
    let [n, h, w, c] = ds.dims();
    if c != 1 {
        return Err(Error::InvalidArgument(format!(
            "IDX images are single-channel, dataset has {c}"
        )));
    }
    let mut images = Vec::with_capacity(16 + n * h * w);
    for v in [IMAGE_MAGIC, n as u32, h as u32, w as u32] {
        images.extend_from_slice(&v.to_be_bytes());
    }
    images.extend(ds.images.data().iter().map(|&v| super::to_byte(v)));
    let mut labels = Vec::with_capacity(8 + n);
    labels.extend_from_slice(&LABEL_MAGIC.to_be_bytes());
    labels.extend_from_slice(&(n as u32).to_be_bytes());
    labels.extend(ds.labels.iter().map(|&l| l as u8));
    Ok((images, labels))
}

pub fn write_idx(ds: &Dataset, images_path: impl AsRef<Path>, labels_path: impl AsRef<Path>) -> Result<()> {
    let (images, labels) = to_idx_bytes(ds)?;
    let (ip, lp) = (images_path.as_ref(), labels_path.as_ref());
    fs::write(ip, images).map_err(|e| Error::io(ip, e))?;
    fs::write(lp, labels).map_err(|e| Error::io(lp, e))
}
