//! Filter bank images (binary PGM / PPM) and JSON-lines parameter logs.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::Serialize;

use super::gabor::GaborParams;
use crate::error::{Error, Result};
use crate::tensor::Tensor;

/// Map a filter's values affinely onto 0..=255; constant filters go to 128.
fn to_gray_levels(values: &[f64]) -> Vec<u8> {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if hi - lo <= 0.0 {
        return vec![128; values.len()];
    }
    values
        .iter()
        .map(|v| ((v - lo) / (hi - lo) * 255.0).round() as u8)
        .collect()
}

/// Write every filter of a `(out, in, fw, fw)` conv weight tensor as
/// `filter_NNN.pgm` (one input channel) or `filter_NNN.ppm` (three).
pub fn write_filter_bank(dir: &Path, weights: &Tensor) -> Result<Vec<PathBuf>> {
    let s = weights.shape();
    let [out, in_c, fh, fw] = match s {
        &[a, b, c, d] => [a, b, c, d],
        _ => {
            return Err(Error::InvalidArgument(format!(
                "expected conv weights, got shape {s:?}"
            )))
        }
    };
    if in_c != 1 && in_c != 3 {
        return Err(Error::InvalidArgument(format!("cannot render {in_c}-channel filters")));
    }
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let plane = fh * fw;
    let mut paths = Vec::with_capacity(out);
    for o in 0..out {
        let filter = &weights.data()[o * in_c * plane..][..in_c * plane];
        let levels = to_gray_levels(filter);
        let (ext, magic, pixels) = if in_c == 1 {
            ("pgm", "P5", levels)
        } else {
            // planar channels -> interleaved RGB
            let rgb = (0..plane)
                .flat_map(|p| (0..3).map(move |c| (c, p)))
                .map(|(c, p)| levels[c * plane + p])
                .collect();
            ("ppm", "P6", rgb)
        };
        let path = dir.join(format!("filter_{o:03}.{ext}"));
        let mut bytes = format!("{magic}\n{fw} {fh}\n255\n").into_bytes();
        bytes.extend_from_slice(&pixels);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        paths.push(path);
    }
    Ok(paths)
}

#[derive(Serialize)]
struct ParamsLine<'a> {
    filter: usize,
    #[serde(flatten)]
    params: &'a GaborParams,
}

/// One JSON object per filter, in filter order.
pub fn write_params_log(path: &Path, filters: &[GaborParams]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for (i, p) in filters.iter().enumerate() {
        serde_json::to_writer(&mut w, &ParamsLine { filter: i, params: p })?;
        w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}
