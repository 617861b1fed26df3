//! MNIST in IDX format.
//!
//! The canonical file names are `train-images-idx3-ubyte`,
//! `train-labels-idx1-ubyte`, `t10k-images-idx3-ubyte` and
//! `t10k-labels-idx1-ubyte` (uncompressed).

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::nn::{Shape, Tensor4};
use crate::{Error, Result};

pub const IMAGES_MAGIC: u32 = 0x0000_0803;
pub const LABELS_MAGIC: u32 = 0x0000_0801;
pub const CLASSES: usize = 10;

/// Bounded number of redraws when a subset misses the class-balance tolerance.
pub const SUBSET_RETRIES: u32 = 10_000;
/// Per-class counts must stay within this fraction of `n / CLASSES`.
pub const BALANCE_TOLERANCE: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn file_names(self) -> (&'static str, &'static str) {
        match self {
            Split::Train => ("train-images-idx3-ubyte", "train-labels-idx1-ubyte"),
            Split::Test => ("t10k-images-idx3-ubyte", "t10k-labels-idx1-ubyte"),
        }
    }
}

/// Decoded image file. `is_mnist_size` is false when the images are not 28x28.
#[derive(Debug, Clone)]
pub struct IdxImages {
    pub images: Tensor4,
    pub rows: usize,
    pub cols: usize,
    pub is_mnist_size: bool,
}

fn read_u32(bytes: &[u8], at: usize) -> Result<u32> {
    bytes
        .get(at..at + 4)
        .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
        .ok_or_else(|| Error::format(format!("header truncated: {} bytes", bytes.len())))
}

fn read_file(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

pub fn parse_idx_images(bytes: &[u8]) -> Result<IdxImages> {
    let magic = read_u32(bytes, 0)?;
    if magic != IMAGES_MAGIC {
        return Err(Error::format(format!(
            "image file magic {magic:#010x}, expected {IMAGES_MAGIC:#010x}"
        )));
    }
    let n = read_u32(bytes, 4)? as usize;
    let rows = read_u32(bytes, 8)? as usize;
    let cols = read_u32(bytes, 12)? as usize;
    let expected = n * rows * cols;
    let payload = &bytes[16..];
    if payload.len() < expected {
        return Err(Error::format(format!(
            "image payload truncated: expected {expected} bytes, found {}",
            payload.len()
        )));
    }
    let data = payload[..expected].iter().map(|&b| f64::from(b) / 255.0).collect();
    Ok(IdxImages {
        images: Tensor4::from_parts(Shape::new(n, 1, rows, cols), data),
        rows,
        cols,
        is_mnist_size: rows == 28 && cols == 28,
    })
}

pub fn parse_idx_labels(bytes: &[u8]) -> Result<Vec<u8>> {
    let magic = read_u32(bytes, 0)?;
    if magic != LABELS_MAGIC {
        return Err(Error::format(format!(
            "label file magic {magic:#010x}, expected {LABELS_MAGIC:#010x}"
        )));
    }
    let n = read_u32(bytes, 4)? as usize;
    let payload = &bytes[8..];
    if payload.len() < n {
        return Err(Error::format(format!(
            "label payload truncated: expected {n} bytes, found {}",
            payload.len()
        )));
    }
    let labels = payload[..n].to_vec();
    if let Some((i, l)) = labels.iter().enumerate().find(|(_, &l)| l as usize >= CLASSES) {
        return Err(Error::format(format!("label {l} at index {i} is not a digit")));
    }
    Ok(labels)
}

pub fn load_idx_images(path: impl AsRef<Path>) -> Result<IdxImages> {
    let path = path.as_ref();
    parse_idx_images(&read_file(path)?).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<u8>> {
    let path = path.as_ref();
    parse_idx_labels(&read_file(path)?).map_err(|e| match e {
        Error::Format(m) => Error::Format(format!("{}: {m}", path.display())),
        other => other,
    })
}

/// Images (N x 1 x H x W, values in [0, 1]) with their digit labels.
#[derive(Debug, Clone)]
pub struct MnistSet {
    images: Tensor4,
    labels: Vec<u8>,
}

impl MnistSet {
    pub fn new(images: Tensor4, labels: Vec<u8>) -> Result<Self> {
        let shape = images.shape();
        if shape.n != labels.len() {
            return Err(Error::Consistency(format!(
                "{} images but {} labels",
                shape.n,
                labels.len()
            )));
        }
        if shape.c != 1 {
            return Err(Error::Consistency(format!("expected 1 channel, got {}", shape.c)));
        }
        if labels.iter().any(|&l| l as usize >= CLASSES) {
            return Err(Error::Consistency("label outside 0..=9".into()));
        }
        if images.as_slice().iter().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::Consistency("pixel outside [0, 1]".into()));
        }
        Ok(Self { images, labels })
    }

    pub fn load(images: impl AsRef<Path>, labels: impl AsRef<Path>) -> Result<Self> {
        Self::new(load_idx_images(images)?.images, load_idx_labels(labels)?)
    }

    /// Loads one split from a directory holding the canonical file names.
    pub fn load_dir(dir: impl AsRef<Path>, split: Split) -> Result<Self> {
        let dir = dir.as_ref();
        let (img, lbl) = split.file_names();
        let paths: [PathBuf; 2] = [dir.join(img), dir.join(lbl)];
        let missing: Vec<&str> = paths
            .iter()
            .zip([img, lbl])
            .filter(|(p, _)| !p.is_file())
            .map(|(_, name)| name)
            .collect();
        if !missing.is_empty() {
            return Err(Error::io(
                dir,
                std::io::Error::new(
                    std::io::ErrorKind::NotFound,
                    format!("missing MNIST files: {}", missing.join(", ")),
                ),
            ));
        }
        Self::load(&paths[0], &paths[1])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn images(&self) -> &Tensor4 {
        &self.images
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn class_counts(&self) -> [usize; CLASSES] {
        class_counts(self.labels.iter().copied())
    }

    /// Gathers the samples at `indices` into a batch.
    pub fn batch(&self, indices: &[usize]) -> (Tensor4, Vec<u8>) {
        let shape = self.images.shape();
        let mut data = Vec::with_capacity(indices.len() * shape.sample());
        for &i in indices {
            data.extend_from_slice(self.images.sample(i));
        }
        let labels = indices.iter().map(|&i| self.labels[i]).collect();
        (Tensor4::from_parts(shape.with_batch(indices.len()), data), labels)
    }

    /// Seeded sample of `n` items without replacement, class-balanced to
    /// within [`BALANCE_TOLERANCE`] (see [`subset_indices`]).
    pub fn subset(&self, n: usize, seed: u64) -> Result<Self> {
        let idx = subset_indices(&self.labels, n, seed)?;
        let (images, labels) = self.batch(&idx);
        Ok(Self { images, labels })
    }
}

fn class_counts(labels: impl Iterator<Item = u8>) -> [usize; CLASSES] {
    let mut counts = [0; CLASSES];
    labels.for_each(|l| counts[l as usize] += 1);
    counts
}

/// Indices of a seeded draw of `n` labels without replacement.
///
/// Draws are repeated (up to [`SUBSET_RETRIES`] times, each from the same
/// seeded stream) until every class count lies within
/// `n / 10 * (1 +- BALANCE_TOLERANCE)`. Taking the whole set skips the check
/// and returns a permutation.
pub fn subset_indices(labels: &[u8], n: usize, seed: u64) -> Result<Vec<usize>> {
    let total = labels.len();
    if n > total {
        return Err(Error::invalid(format!("subset of {n} from a set of {total}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    if n == total {
        return Ok(sample(&mut rng, total, n).into_vec());
    }
    let target = n as f64 / CLASSES as f64;
    let (lo, hi) = (target * (1.0 - BALANCE_TOLERANCE), target * (1.0 + BALANCE_TOLERANCE));
    for _ in 0..SUBSET_RETRIES {
        let idx = sample(&mut rng, total, n).into_vec();
        let counts = class_counts(idx.iter().map(|&i| labels[i]));
        if counts.iter().all(|&c| (lo..=hi).contains(&(c as f64))) {
            return Ok(idx);
        }
    }
    Err(Error::Consistency(format!(
        "no class-balanced subset of {n} found in {SUBSET_RETRIES} draws"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn image_file(n: u32, rows: u32, cols: u32, fill: u8) -> Vec<u8> {
        let mut b = Vec::new();
        for v in [IMAGES_MAGIC, n, rows, cols] {
            b.extend_from_slice(&v.to_be_bytes());
        }
        b.resize(16 + (n * rows * cols) as usize, fill);
        b
    }

    #[test]
    fn parses_image_header_and_scales() {
        let bytes = image_file(2, 28, 28, 255);
        assert_eq!(&bytes[..16], &[0, 0, 8, 3, 0, 0, 0, 2, 0, 0, 0, 0x1c, 0, 0, 0, 0x1c]);
        assert_eq!(bytes.len(), 16 + 1568);
        let parsed = parse_idx_images(&bytes).unwrap();
        assert_eq!(parsed.images.shape(), Shape::new(2, 1, 28, 28));
        assert!(parsed.is_mnist_size);
        assert!(parsed.images.as_slice().iter().all(|v| *v == 1.0));

        let odd = parse_idx_images(&image_file(1, 5, 4, 0)).unwrap();
        assert!(!odd.is_mnist_size);
        assert_eq!(odd.images.shape(), Shape::new(1, 1, 5, 4));
    }

    #[test]
    fn image_errors() {
        let mut bytes = image_file(2, 28, 28, 0);
        bytes.truncate(16 + 1000);
        match parse_idx_images(&bytes) {
            Err(Error::Format(m)) => assert!(m.contains("1568") && m.contains("1000"), "{m}"),
            other => panic!("{other:?}"),
        }
        let mut bad = image_file(1, 2, 2, 0);
        bad[3] = 0x01;
        assert!(matches!(parse_idx_images(&bad), Err(Error::Format(_))));
        assert!(matches!(parse_idx_images(&bad[..6]), Err(Error::Format(_))));
    }

    #[test]
    fn labels() {
        let bytes = [0, 0, 8, 1, 0, 0, 0, 3, 7, 2, 1];
        assert_eq!(parse_idx_labels(&bytes).unwrap(), vec![7, 2, 1]);
        let bad = [0, 0, 8, 1, 0, 0, 0, 2, 7, 0x0a];
        assert!(matches!(parse_idx_labels(&bad), Err(Error::Format(_))));
        assert!(matches!(parse_idx_labels(&bytes[..9]), Err(Error::Format(_))));
        assert!(matches!(
            parse_idx_labels(&[0, 0, 8, 3, 0, 0, 0, 0]),
            Err(Error::Format(_))
        ));
    }

    #[test]
    fn set_consistency() {
        let images = parse_idx_images(&image_file(3, 28, 28, 10)).unwrap().images;
        assert!(matches!(
            MnistSet::new(images.clone(), vec![1, 2]),
            Err(Error::Consistency(_))
        ));
        let set = MnistSet::new(images, vec![1, 2, 3]).unwrap();
        assert_eq!(set.len(), 3);
        let (b, l) = set.batch(&[2, 0]);
        assert_eq!(b.shape().n, 2);
        assert_eq!(l, vec![3, 1]);
    }

    fn balanced_labels(n: usize) -> Vec<u8> {
        (0..n).map(|i| ((i * 7 + i / 13) % CLASSES) as u8).collect()
    }

    #[test]
    fn subset_is_seeded_and_balanced() {
        let labels = balanced_labels(4000);
        let a = subset_indices(&labels, 2000, 0).unwrap();
        assert_eq!(a, subset_indices(&labels, 2000, 0).unwrap());
        assert_ne!(a, subset_indices(&labels, 2000, 1).unwrap());
        let counts = class_counts(a.iter().map(|&i| labels[i]));
        assert!(counts.iter().all(|c| (160..=240).contains(c)), "{counts:?}");
        let mut sorted = a.clone();
        sorted.sort_unstable();
        sorted.dedup();
        assert_eq!(sorted.len(), 2000);

        let full = subset_indices(&labels, 4000, 3).unwrap();
        let mut sorted = full.clone();
        sorted.sort_unstable();
        assert_eq!(sorted, (0..4000).collect::<Vec<_>>());

        assert!(matches!(
            subset_indices(&labels, 4001, 0),
            Err(Error::InvalidArgument(_))
        ));
    }

    #[test]
    fn load_dir_names_missing_files() {
        let dir = tempfile::tempdir().unwrap();
        fs::write(dir.path().join("train-images-idx3-ubyte"), image_file(1, 28, 28, 0)).unwrap();
        let err = MnistSet::load_dir(dir.path(), Split::Train).unwrap_err().to_string();
        assert!(err.contains("train-labels-idx1-ubyte"), "{err}");
        assert!(!err.contains("train-images"), "{err}");
    }
}
