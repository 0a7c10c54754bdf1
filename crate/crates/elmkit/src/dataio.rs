//! Dataset loading: MNIST IDX binaries and the iris/wine/abalone CSV files
//! in their raw UCI layouts, plus target encoding, bias augmentation and
//! stratified splitting.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::seeding::{self, TAG_SPLIT};

const IDX_IMAGE_MAGIC: u32 = 0x0000_0803;
const IDX_LABEL_MAGIC: u32 = 0x0000_0801;

/// A labeled feature matrix. `labels[i]` is the class id of row `i`,
/// always in `[0, class_count)`, and every class has at least one sample.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub features: Matrix,
    pub labels: Vec<usize>,
    pub class_count: usize,
    pub name: String,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Vec<usize>,
        class_count: usize,
        name: impl Into<String>,
    ) -> Result<Self> {
        if features.rows() != labels.len() {
            return Err(Error::DimMismatch {
                op: "dataset",
                left: features.shape(),
                right: (labels.len(), 1),
            });
        }
        let mut seen = vec![0usize; class_count];
        for &l in &labels {
            if l >= class_count {
                return Err(Error::LabelOutOfRange {
                    label: l,
                    classes: class_count,
                });
            }
            seen[l] += 1;
        }
        if let Some(missing) = seen.iter().position(|&c| c == 0) {
            return Err(Error::InvalidArgument(format!(
                "class {missing} has no samples"
            )));
        }
        Ok(Dataset {
            features,
            labels,
            class_count,
            name: name.into(),
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Samples per class, indexed by class id.
    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0usize; self.class_count];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    /// Row indices belonging to `class`, in dataset order.
    pub fn class_indices(&self, class: usize) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, &l)| l == class)
            .map(|(i, _)| i)
            .collect()
    }
}

/// One-hot class targets: `n x C`, exactly one 1.0 per row.
#[derive(Debug, Clone)]
pub struct TargetEncoding {
    pub matrix: Matrix,
}

/// Encodes labels as one-hot rows. Errors on a label outside `[0, C)`.
pub fn one_hot(labels: &[usize], class_count: usize) -> Result<TargetEncoding> {
    let mut m = Matrix::zeros(labels.len(), class_count);
    for (i, &l) in labels.iter().enumerate() {
        if l >= class_count {
            return Err(Error::LabelOutOfRange {
                label: l,
                classes: class_count,
            });
        }
        m.set(i, l, 1.0);
    }
    Ok(TargetEncoding { matrix: m })
}

/// Appends a constant 1.0 column. Not idempotent by design; the caller
/// owns the pipeline order (bias goes on after standardization, which
/// would otherwise zero it out).
pub fn append_bias(a: &Matrix) -> Matrix {
    Matrix::from_fn(a.rows(), a.cols() + 1, |i, j| {
        if j == a.cols() {
            1.0
        } else {
            a.get(i, j)
        }
    })
}

fn read_be_u32(buf: &[u8], off: usize, path: &Path) -> Result<u32> {
    let bytes: [u8; 4] = buf
        .get(off..off + 4)
        .and_then(|s| s.try_into().ok())
        .ok_or_else(|| Error::FileFormat {
            path: path.to_owned(),
            reason: format!("truncated header at byte {off}"),
        })?;
    Ok(u32::from_be_bytes(bytes))
}

/// Reads an IDX image file: big-endian magic `0x00000803`, then count,
/// rows, cols, then one unsigned byte per pixel. Pixels are mapped to
/// `[0, 1]` by dividing by 255; images are flattened row-major.
pub fn load_idx_images(path: impl AsRef<Path>) -> Result<Matrix> {
    let path = path.as_ref();
    let buf = fs::read(path)?;
    let magic = read_be_u32(&buf, 0, path)?;
    if magic != IDX_IMAGE_MAGIC {
        return Err(Error::FileFormat {
            path: path.to_owned(),
            reason: format!("bad image magic {magic:#010x}, expected {IDX_IMAGE_MAGIC:#010x}"),
        });
    }
    let count = read_be_u32(&buf, 4, path)? as usize;
    let rows = read_be_u32(&buf, 8, path)? as usize;
    let cols = read_be_u32(&buf, 12, path)? as usize;
    let pixels = rows * cols;
    let expected = 16 + count * pixels;
    if buf.len() != expected {
        return Err(Error::FileFormat {
            path: path.to_owned(),
            reason: format!(
                "file has {} bytes, header promises {} ({} images of {}x{})",
                buf.len(),
                expected,
                count,
                rows,
                cols
            ),
        });
    }
    let data = buf[16..].iter().map(|&b| f64::from(b) / 255.0).collect();
    Matrix::from_vec(count, pixels, data)
}

/// Reads an IDX label file: big-endian magic `0x00000801`, count, then one
/// unsigned byte per label.
pub fn load_idx_labels(path: impl AsRef<Path>) -> Result<Vec<usize>> {
    let path = path.as_ref();
    let buf = fs::read(path)?;
    let magic = read_be_u32(&buf, 0, path)?;
    if magic != IDX_LABEL_MAGIC {
        return Err(Error::FileFormat {
            path: path.to_owned(),
            reason: format!("bad label magic {magic:#010x}, expected {IDX_LABEL_MAGIC:#010x}"),
        });
    }
    let count = read_be_u32(&buf, 4, path)? as usize;
    if buf.len() != 8 + count {
        return Err(Error::FileFormat {
            path: path.to_owned(),
            reason: format!(
                "file has {} bytes, header promises {}",
                buf.len(),
                8 + count
            ),
        });
    }
    Ok(buf[8..].iter().map(|&b| b as usize).collect())
}

/// Loads an MNIST-style image/label pair into a dataset with ten classes.
pub fn load_idx_dataset(
    images: impl AsRef<Path>,
    labels: impl AsRef<Path>,
    name: impl Into<String>,
) -> Result<Dataset> {
    let images_path = images.as_ref().to_owned();
    let features = load_idx_images(&images_path)?;
    let labels = load_idx_labels(labels)?;
    if features.rows() != labels.len() {
        return Err(Error::FileFormat {
            path: images_path,
            reason: format!(
                "{} images but {} labels",
                features.rows(),
                labels.len()
            ),
        });
    }
    Dataset::new(features, labels, 10, name)
}

/// CSV schemas for the supported UCI datasets, selected by name.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CsvSchema {
    /// 4 numeric columns then the species name (`Iris-...`). 3 classes.
    Iris,
    /// Class label 1..=3 first, then 13 numeric columns. 3 classes.
    Wine,
    /// Sex (M/F/I, one-hot to 3 columns), 7 numeric columns, then the ring
    /// count, binned 1-8 / 9-10 / 11+ into 3 age classes.
    Abalone,
}

impl CsvSchema {
    pub fn dataset_name(&self) -> &'static str {
        match self {
            CsvSchema::Iris => "iris",
            CsvSchema::Wine => "wine",
            CsvSchema::Abalone => "abalone",
        }
    }
}

const IRIS_SPECIES: [&str; 3] = ["Iris-setosa", "Iris-versicolor", "Iris-virginica"];

fn parse_field(field: &str, path: &Path, line: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::CsvRow {
        path: path.to_owned(),
        line,
        reason: format!("cannot parse numeric field {field:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::CsvRow {
            path: path.to_owned(),
            line,
            reason: format!("non-finite value {field:?}"),
        });
    }
    Ok(v)
}

fn csv_row_error(path: &Path, line: usize, reason: impl Into<String>) -> Error {
    Error::CsvRow {
        path: path.to_owned(),
        line,
        reason: reason.into(),
    }
}

/// Binning convention for abalone ring counts.
pub fn abalone_ring_bin(rings: u32) -> usize {
    match rings {
        0..=8 => 0,
        9..=10 => 1,
        _ => 2,
    }
}

/// Loads one of the UCI CSV files in its raw archive layout. Rows are
/// comma-separated; quoting is not supported and is rejected.
pub fn load_csv(path: impl AsRef<Path>, schema: CsvSchema) -> Result<Dataset> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)?;
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut labels: Vec<usize> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.contains('"') {
            return Err(csv_row_error(path, line, "quoted fields are not supported"));
        }
        let fields: Vec<&str> = trimmed.split(',').collect();
        match schema {
            CsvSchema::Iris => {
                if fields.len() != 5 {
                    return Err(csv_row_error(
                        path,
                        line,
                        format!("expected 5 fields, got {}", fields.len()),
                    ));
                }
                let mut feats = Vec::with_capacity(4);
                for f in &fields[..4] {
                    feats.push(parse_field(f, path, line)?);
                }
                let species = fields[4].trim();
                let class = IRIS_SPECIES
                    .iter()
                    .position(|s| *s == species)
                    .ok_or_else(|| {
                        csv_row_error(path, line, format!("unknown species {species:?}"))
                    })?;
                rows.push(feats);
                labels.push(class);
            }
            CsvSchema::Wine => {
                if fields.len() != 14 {
                    return Err(csv_row_error(
                        path,
                        line,
                        format!("expected 14 fields, got {}", fields.len()),
                    ));
                }
                let class: u32 = fields[0].trim().parse().map_err(|_| {
                    csv_row_error(path, line, format!("bad class label {:?}", fields[0]))
                })?;
                if !(1..=3).contains(&class) {
                    return Err(csv_row_error(
                        path,
                        line,
                        format!("class label {class} outside 1..=3"),
                    ));
                }
                let mut feats = Vec::with_capacity(13);
                for f in &fields[1..] {
                    feats.push(parse_field(f, path, line)?);
                }
                rows.push(feats);
                labels.push(class as usize - 1);
            }
            CsvSchema::Abalone => {
                if fields.len() != 9 {
                    return Err(csv_row_error(
                        path,
                        line,
                        format!("expected 9 fields, got {}", fields.len()),
                    ));
                }
                let sex = match fields[0].trim() {
                    "M" => [1.0, 0.0, 0.0],
                    "F" => [0.0, 1.0, 0.0],
                    "I" => [0.0, 0.0, 1.0],
                    other => {
                        return Err(csv_row_error(
                            path,
                            line,
                            format!("unknown sex category {other:?}"),
                        ))
                    }
                };
                let mut feats = Vec::with_capacity(10);
                feats.extend_from_slice(&sex);
                for f in &fields[1..8] {
                    feats.push(parse_field(f, path, line)?);
                }
                let rings: u32 = fields[8].trim().parse().map_err(|_| {
                    csv_row_error(path, line, format!("bad ring count {:?}", fields[8]))
                })?;
                rows.push(feats);
                labels.push(abalone_ring_bin(rings));
            }
        }
    }

    let features = Matrix::from_rows(&rows)?;
    Dataset::new(features, labels, 3, schema.dataset_name()).map_err(|e| match e {
        Error::InvalidArgument(msg) => Error::FileFormat {
            path: path.to_owned(),
            reason: format!("{msg} (empty class)"),
        },
        other => other,
    })
}

/// Splits per class with largest-remainder rounding so the train side gets
/// `round(fraction * n)` samples overall while every class stays within
/// one sample of its proportional share. Both sides keep at least one
/// sample of every class. Deterministic in `seed`.
pub fn stratified_split(
    ds: &Dataset,
    train_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "train fraction must be in (0, 1), got {train_fraction}"
        )));
    }
    let counts = ds.class_counts();
    for (class, &count) in counts.iter().enumerate() {
        if count < 2 {
            return Err(Error::ClassTooSmall {
                class,
                count,
                fraction: train_fraction,
            });
        }
    }

    // Per-class train quotas: floor, then distribute the remainder by
    // largest fractional part (ties by class id), then clamp so each side
    // keeps a sample and repair the total.
    let total_train = (train_fraction * ds.len() as f64).round() as usize;
    let quotas: Vec<f64> = counts
        .iter()
        .map(|&c| train_fraction * c as f64)
        .collect();
    let mut take: Vec<usize> = quotas.iter().map(|q| q.floor() as usize).collect();
    let mut remainder = total_train.saturating_sub(take.iter().sum::<usize>());
    let mut order: Vec<usize> = (0..counts.len()).collect();
    order.sort_by(|&a, &b| {
        let fa = quotas[a] - quotas[a].floor();
        let fb = quotas[b] - quotas[b].floor();
        fb.partial_cmp(&fa).unwrap().then(a.cmp(&b))
    });
    for &c in order.iter().cycle().take(counts.len() * 2) {
        if remainder == 0 {
            break;
        }
        if take[c] + 1 <= counts[c] - 1 {
            take[c] += 1;
            remainder -= 1;
        }
    }
    for (c, t) in take.iter_mut().enumerate() {
        *t = (*t).clamp(1, counts[c] - 1);
    }

    let mut train_idx = Vec::new();
    let mut test_idx = Vec::new();
    for class in 0..ds.class_count {
        let mut idx = ds.class_indices(class);
        let mut rng = seeding::rng_from(seeding::mix(seed, &[TAG_SPLIT, class as u64]));
        shuffle(&mut idx, &mut rng);
        train_idx.extend_from_slice(&idx[..take[class]]);
        test_idx.extend_from_slice(&idx[take[class]..]);
    }

    let train = Dataset::new(
        ds.features.select_rows(&train_idx),
        train_idx.iter().map(|&i| ds.labels[i]).collect(),
        ds.class_count,
        ds.name.clone(),
    )?;
    let test = Dataset::new(
        ds.features.select_rows(&test_idx),
        test_idx.iter().map(|&i| ds.labels[i]).collect(),
        ds.class_count,
        ds.name.clone(),
    )?;
    Ok((train, test))
}

/// Fisher-Yates with our seeded RNG; `rand`'s slice shuffle would work the
/// same but this keeps the exact index stream under our versioning rules.
fn shuffle(idx: &mut [usize], rng: &mut rand_chacha::ChaCha8Rng) {
    use rand::Rng;
    for i in (1..idx.len()).rev() {
        let j = rng.random_range(0..=i);
        idx.swap(i, j);
    }
}

/// Returns the canonical file names for the four MNIST files under `dir`.
pub fn mnist_paths(dir: impl AsRef<Path>) -> [PathBuf; 4] {
    let dir = dir.as_ref();
    [
        dir.join("train-images-idx3-ubyte"),
        dir.join("train-labels-idx1-ubyte"),
        dir.join("t10k-images-idx3-ubyte"),
        dir.join("t10k-labels-idx1-ubyte"),
    ]
}
