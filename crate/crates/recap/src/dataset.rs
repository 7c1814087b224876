//! Labelled image sets with a stable order digest.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use rand::seq::index;
use recap_core::corruptions::{ImageBatch, Provenance};
use recap_core::rng;
use sha2::{Digest, Sha256};

use crate::error::{data, Result};
use crate::{idx, npy};

const SUBSET_TAG: u64 = 0x5355_4253_4554; // "SUBSET"

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Split::Train => "train",
            Split::Test => "test",
        })
    }
}

/// First 8 bytes of a SHA-256, little-endian.
pub fn digest64(bytes: &[u8]) -> u64 {
    let h = Sha256::digest(bytes);
    u64::from_le_bytes(h[..8].try_into().unwrap())
}

/// Images in a fixed order plus the position each image had in its source
/// file. Flattening is row-major, so image `i` is the `h*w` slice starting at
/// `i*h*w`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    images: ImageBatch,
    split: Split,
    source_index: Vec<u64>,
    digest: u64,
}

fn order_digest(source_index: &[u64], labels: &[u8]) -> u64 {
    let mut h = Sha256::new();
    for (i, l) in source_index.iter().zip(labels) {
        h.update(i.to_le_bytes());
        h.update([*l]);
    }
    u64::from_le_bytes(h.finalize()[..8].try_into().unwrap())
}

impl Dataset {
    pub fn new(images: ImageBatch, split: Split) -> Self {
        let source_index = (0..images.len() as u64).collect();
        Self::with_indices(images, split, source_index)
    }

    fn with_indices(images: ImageBatch, split: Split, source_index: Vec<u64>) -> Self {
        let digest = order_digest(&source_index, images.labels());
        Dataset {
            images,
            split,
            source_index,
            digest,
        }
    }

    pub fn images(&self) -> &ImageBatch {
        &self.images
    }

    pub fn into_images(self) -> ImageBatch {
        self.images
    }

    pub fn split(&self) -> Split {
        self.split
    }

    pub fn source_index(&self) -> &[u64] {
        &self.source_index
    }

    /// Hash of the `(source index, label)` sequence.
    pub fn digest(&self) -> u64 {
        self.digest
    }

    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    pub fn labels(&self) -> &[u8] {
        self.images.labels()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&[f32], usize)> + '_ {
        self.images.images().zip(self.images.labels()).map(|(x, &y)| (x, y as usize))
    }

    pub fn class_counts(&self) -> BTreeMap<u8, usize> {
        let mut counts = BTreeMap::new();
        for &l in self.labels() {
            *counts.entry(l).or_insert(0) += 1;
        }
        counts
    }

    /// Keeps `n_per_class` images of every class, chosen by `seed`, in their
    /// original relative order.
    pub fn subset(&self, n_per_class: usize, seed: u64) -> Result<Dataset> {
        if n_per_class == 0 {
            return Err(crate::Error::Config("subset size must be at least 1".into()));
        }
        let mut by_class: BTreeMap<u8, Vec<usize>> = BTreeMap::new();
        for (i, &l) in self.labels().iter().enumerate() {
            by_class.entry(l).or_default().push(i);
        }
        let mut keep = Vec::with_capacity(n_per_class * by_class.len());
        for (&class, members) in &by_class {
            if members.len() < n_per_class {
                return Err(data(format!(
                    "class {class} has {} samples, fewer than the requested {n_per_class}",
                    members.len()
                )));
            }
            let mut r = rng::stream(seed, SUBSET_TAG, class as u64);
            let picks = index::sample(&mut r, members.len(), n_per_class);
            keep.extend(picks.into_iter().map(|p| members[p]));
        }
        keep.sort_unstable();
        let images = self.images.select(&keep);
        let source_index = keep.iter().map(|&k| self.source_index[k]).collect();
        Ok(Self::with_indices(images, self.split, source_index))
    }

    /// First `n` images.
    pub fn head(&self, n: usize) -> Dataset {
        let keep: Vec<usize> = (0..n.min(self.len())).collect();
        let images = self.images.select(&keep);
        Self::with_indices(images, self.split, self.source_index[..keep.len()].to_vec())
    }
}

/// Loads an IDX image/label pair; pixels are scaled by `1/255`.
pub fn load_idx(images_path: &Path, labels_path: &Path, split: Split) -> Result<Dataset> {
    let images = idx::read_images(images_path)?;
    let labels = idx::read_labels(labels_path)?;
    if images.count != labels.len() {
        return Err(data(format!(
            "{} images but {} labels",
            images.count,
            labels.len()
        )));
    }
    let batch = ImageBatch::from_bytes(images.rows, images.cols, &images.pixels, labels, Provenance::Clean)?;
    Ok(Dataset::new(batch, split))
}

/// Loads either an NPY batch (labels from the companion file, or `labels`
/// when given) or an IDX pair, chosen by extension.
pub fn load_any(images_path: &Path, labels_path: Option<&Path>, split: Split) -> Result<Dataset> {
    let is_npy = images_path.extension().is_some_and(|e| e == "npy");
    if is_npy {
        let arr = npy::read_file(images_path)?;
        let lp = labels_path.map(Path::to_path_buf).unwrap_or_else(|| npy::labels_path(images_path));
        let labels = if lp.extension().is_some_and(|e| e == "npy") {
            npy::labels_from_array(&npy::read_file(&lp)?)?
        } else {
            idx::read_labels(&lp)?
        };
        Ok(Dataset::new(npy::images_from_array(&arr, labels, Provenance::Clean)?, split))
    } else {
        let lp = labels_path.ok_or_else(|| crate::Error::Config("IDX images need a labels path".into()))?;
        load_idx(images_path, lp, split)
    }
}
