//! Image classification datasets and class-aware sampling.

mod cifar;
mod idx;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use cifar::{load_cifar10, to_cifar_bytes, RECORD_LEN as CIFAR_RECORD_LEN};
pub use idx::{load_idx, parse_images, parse_labels, to_idx_bytes, write_idx, IMAGE_MAGIC, LABEL_MAGIC};

use crate::error::{Error, Result};
use crate::rng::SeededRng;
use crate::tensor::Tensor;

/// Fashion-MNIST class indices.
pub mod fashion {
    pub const TROUSER: usize = 1;
    pub const SHIRT: usize = 6;
}

/// CIFAR-10 class indices.
pub mod cifar10 {
    pub const AUTOMOBILE: usize = 1;
    pub const BIRD: usize = 2;
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Dataset {
    /// (N, H, W, C), values in [0, 1].
    pub images: Tensor,
    pub labels: Vec<usize>,
    pub n_classes: usize,
    pub split: String,
}

pub(crate) fn to_byte(v: f64) -> u8 {
    (v * 255.0).round().clamp(0.0, 255.0) as u8
}

pub(crate) fn split_from_path(p: &Path) -> String {
    let name = p
        .file_name()
        .map(|s| s.to_string_lossy().to_lowercase())
        .unwrap_or_default();
    if name.contains("t10k") || name.contains("test") {
        "test".into()
    } else {
        "train".into()
    }
}

impl Dataset {
    pub fn new(images: Tensor, labels: Vec<usize>, n_classes: usize, split: impl Into<String>) -> Result<Self> {
        if images.shape().len() != 4 {
            return Err(Error::InvalidArgument(format!(
                "images must be (N, H, W, C), got {:?}",
                images.shape()
            )));
        }
        if images.shape()[0] != labels.len() {
            return Err(Error::CountMismatch {
                images: images.shape()[0],
                labels: labels.len(),
            });
        }
        if let Some(&label) = labels.iter().find(|&&l| l >= n_classes) {
            return Err(Error::LabelOutOfRange { label, n_classes });
        }
        if images.data().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidArgument("pixel values must lie in [0, 1]".into()));
        }
        Ok(Self {
            images,
            labels,
            n_classes,
            split: split.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// (N, H, W, C)
    pub fn dims(&self) -> [usize; 4] {
        let s = self.images.shape();
        [s[0], s[1], s[2], s[3]]
    }

    pub fn image_shape(&self) -> [usize; 3] {
        let [_, h, w, c] = self.dims();
        [h, w, c]
    }

    /// Example indices of each class, ascending.
    pub fn class_indices(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n_classes];
        for (i, &l) in self.labels.iter().enumerate() {
            out[l].push(i);
        }
        out
    }

    pub fn subset(&self, indices: &[usize]) -> Dataset {
        Dataset {
            images: self.images.select_rows(indices),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            n_classes: self.n_classes,
            split: self.split.clone(),
        }
    }

    /// Stratified sample of about `total` examples, keeping class proportions
    /// (largest-remainder rounding) and original order.
    pub fn stratified_subsample(&self, rng: &mut SeededRng, total: usize) -> Result<Dataset> {
        if total >= self.len() {
            return Ok(self.clone());
        }
        let by_class = self.class_indices();
        let n = self.len() as f64;
        let quotas: Vec<f64> = by_class.iter().map(|c| c.len() as f64 * total as f64 / n).collect();
        let mut take: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
        let mut short = total - take.iter().sum::<usize>();
        let mut order: Vec<usize> = (0..quotas.len()).collect();
        order.sort_by(|&a, &b| {
            let (ra, rb) = (quotas[a] - quotas[a].floor(), quotas[b] - quotas[b].floor());
            rb.total_cmp(&ra).then(a.cmp(&b))
        });
        for &c in &order {
            if short == 0 {
                break;
            }
            if take[c] < by_class[c].len() {
                take[c] += 1;
                short -= 1;
            }
        }
        let mut chosen = Vec::with_capacity(total);
        for (c, idx) in by_class.into_iter().enumerate() {
            let mut idx = idx;
            rng.child_indexed("class", c).shuffle(&mut idx);
            chosen.extend_from_slice(&idx[..take[c]]);
        }
        chosen.sort_unstable();
        Ok(self.subset(&chosen))
    }
}

/// A fixed number of exemplar images per class, drawn from training data.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassExemplars {
    /// One (n, H, W, C) tensor per class.
    pub per_class: Vec<Tensor>,
    /// Source indices into the dataset, per class.
    pub indices: Vec<Vec<usize>>,
}

impl ClassExemplars {
    pub fn n_classes(&self) -> usize {
        self.per_class.len()
    }

    pub fn per_class_count(&self) -> usize {
        self.indices.first().map_or(0, Vec::len)
    }
}

/// Stratified sample of `n_per_class` distinct images from every class.
pub fn sample_exemplars(rng: &mut SeededRng, dataset: &Dataset, n_per_class: usize) -> Result<ClassExemplars> {
    if n_per_class == 0 {
        return Err(Error::InvalidArgument("need at least one exemplar per class".into()));
    }
    let mut per_class = Vec::with_capacity(dataset.n_classes);
    let mut indices = Vec::with_capacity(dataset.n_classes);
    for (c, mut idx) in dataset.class_indices().into_iter().enumerate() {
        if idx.len() < n_per_class {
            return Err(Error::InsufficientClassExamples {
                class: c,
                available: idx.len(),
                requested: n_per_class,
            });
        }
        rng.child_indexed("class", c).shuffle(&mut idx);
        idx.truncate(n_per_class);
        per_class.push(dataset.images.select_rows(&idx));
        indices.push(idx);
    }
    Ok(ClassExemplars { per_class, indices })
}

/// Balanced two-class task: the first `n_per_class` examples of each class,
/// relabelled `class_a -> 0`, `class_b -> 1`, in original order.
pub fn binary_subset(dataset: &Dataset, class_a: usize, class_b: usize, n_per_class: usize) -> Result<Dataset> {
    if class_a == class_b {
        return Err(Error::InvalidTask(format!("both classes are {class_a}")));
    }
    for c in [class_a, class_b] {
        if c >= dataset.n_classes {
            return Err(Error::LabelOutOfRange {
                label: c,
                n_classes: dataset.n_classes,
            });
        }
    }
    let by_class = dataset.class_indices();
    for c in [class_a, class_b] {
        if by_class[c].len() < n_per_class {
            return Err(Error::InsufficientClassExamples {
                class: c,
                available: by_class[c].len(),
                requested: n_per_class,
            });
        }
    }
    let mut chosen: Vec<usize> = by_class[class_a][..n_per_class]
        .iter()
        .chain(&by_class[class_b][..n_per_class])
        .copied()
        .collect();
    chosen.sort_unstable();
    let images = dataset.images.select_rows(&chosen);
    let labels = chosen
        .iter()
        .map(|&i| usize::from(dataset.labels[i] == class_b))
        .collect();
    Dataset::new(images, labels, 2, dataset.split.clone())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toy(labels: &[usize], n_classes: usize) -> Dataset {
        let n = labels.len();
        let data = (0..n * 4).map(|i| (i % 256) as f64 / 255.0).collect();
        Dataset::new(
            Tensor::new(vec![n, 2, 2, 1], data).unwrap(),
            labels.to_vec(),
            n_classes,
            "train",
        )
        .unwrap()
    }

    #[test]
    fn exemplars_are_stratified_and_distinct() {
        let labels: Vec<usize> = (0..60).map(|i| i % 3).collect();
        let ds = toy(&labels, 3);
        let mut rng = SeededRng::new(4, "ex");
        let ex = sample_exemplars(&mut rng, &ds, 5).unwrap();
        assert_eq!(ex.n_classes(), 3);
        for (c, idx) in ex.indices.iter().enumerate() {
            assert_eq!(idx.len(), 5);
            let mut s = idx.clone();
            s.sort_unstable();
            s.dedup();
            assert_eq!(s.len(), 5);
            assert!(idx.iter().all(|&i| ds.labels[i] == c));
        }
        let again = sample_exemplars(&mut SeededRng::new(4, "ex"), &ds, 5).unwrap();
        assert_eq!(again.indices, ex.indices);
    }

    #[test]
    fn one_per_class() {
        let ds = toy(&[0, 1, 1, 0, 2], 3);
        let ex = sample_exemplars(&mut SeededRng::new(1, "e"), &ds, 1).unwrap();
        assert!(ex.indices.iter().all(|v| v.len() == 1));
        assert!(matches!(
            sample_exemplars(&mut SeededRng::new(1, "e"), &ds, 2),
            Err(Error::InsufficientClassExamples { class: 2, .. })
        ));
    }

    #[test]
    fn binary_subset_relabels() {
        let ds = toy(&[3, 1, 3, 2, 1, 3, 1], 4);
        let b = binary_subset(&ds, 1, 3, 2).unwrap();
        assert_eq!(b.n_classes, 2);
        assert_eq!(b.labels, vec![1, 0, 1, 0]);
        assert!(matches!(binary_subset(&ds, 1, 1, 1), Err(Error::InvalidTask(_))));
        assert!(binary_subset(&ds, 1, 2, 2).is_err());
    }

    #[test]
    fn stratified_subsample_keeps_proportions() {
        let labels: Vec<usize> = (0..100).map(|i| usize::from(i % 4 == 0)).collect();
        let ds = toy(&labels, 2);
        let s = ds.stratified_subsample(&mut SeededRng::new(2, "s"), 20).unwrap();
        assert_eq!(s.len(), 20);
        assert_eq!(s.labels.iter().filter(|&&l| l == 1).count(), 5);
    }
}
