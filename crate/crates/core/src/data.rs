//! Dataset ingestion: BN sample streams, IDX image files, binarization,
//! two-class filtering and deterministic splits.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::Path;

use flate2::read::GzDecoder;
use thiserror::Error;

use crate::bn::BayesNet;
use crate::tm::LiteralVector;

pub const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
pub const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
pub const DEFAULT_BINARIZE_THRESHOLD: u8 = 75;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{features} feature rows but {labels} labels")]
    RowMismatch { features: usize, labels: usize },
    #[error("row {row} has {found} columns, expected {expected}")]
    Ragged { row: usize, expected: usize, found: usize },
    #[error("row {row} column {col} holds {value}, expected 0 or 1")]
    NotBinary { row: usize, col: usize, value: u8 },
    #[error("{names} feature names for {columns} columns")]
    NameCount { names: usize, columns: usize },
    #[error("bad IDX magic {found:#010x}, expected {expected:#010x}")]
    BadMagic { expected: u32, found: u32 },
    #[error("IDX file truncated: {0}")]
    Truncated(String),
    #[error("{images} images but {labels} labels")]
    CountMismatch { images: usize, labels: usize },
    #[error("classes must differ, got {0} twice")]
    SameClass(u8),
    #[error("no rows of class {0} or {1}")]
    EmptyResult(u8, u8),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Bit matrix with one label per row.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    features: Vec<Vec<u8>>,
    labels: Vec<bool>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(features: Vec<Vec<u8>>, labels: Vec<bool>, feature_names: Option<Vec<String>>) -> Result<Self, DataError> {
        if features.len() != labels.len() {
            return Err(DataError::RowMismatch {
                features: features.len(),
                labels: labels.len(),
            });
        }
        let width = features.first().map_or(0, Vec::len);
        for (row, f) in features.iter().enumerate() {
            if f.len() != width {
                return Err(DataError::Ragged {
                    row,
                    expected: width,
                    found: f.len(),
                });
            }
            if let Some(col) = f.iter().position(|&b| b > 1) {
                return Err(DataError::NotBinary { row, col, value: f[col] });
            }
        }
        if let Some(n) = &feature_names {
            if !features.is_empty() && n.len() != width {
                return Err(DataError::NameCount {
                    names: n.len(),
                    columns: width,
                });
            }
        }
        Ok(Self {
            features,
            labels,
            feature_names,
        })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn width(&self) -> usize {
        match (&self.features.first(), &self.feature_names) {
            (Some(f), _) => f.len(),
            (None, Some(n)) => n.len(),
            (None, None) => 0,
        }
    }

    pub fn features(&self) -> &[Vec<u8>] {
        &self.features
    }

    pub fn labels(&self) -> &[bool] {
        &self.labels
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    /// Names, defaulting to `X1..XF`.
    pub fn names_or_default(&self) -> Vec<String> {
        self.feature_names
            .clone()
            .unwrap_or_else(|| (1..=self.width()).map(|i| format!("X{i}")).collect())
    }

    pub fn literal_vectors(&self) -> Vec<LiteralVector> {
        self.features.iter().map(|f| LiteralVector::from_bits(f)).collect()
    }

    /// First `n` rows.
    pub fn limit(&self, n: usize) -> Dataset {
        let n = n.min(self.len());
        Dataset {
            features: self.features[..n].to_vec(),
            labels: self.labels[..n].to_vec(),
            feature_names: self.feature_names.clone(),
        }
    }

    /// Rows `[0, at)` and `[at, len)`.
    pub fn split_at(&self, at: usize) -> (Dataset, Dataset) {
        let at = at.min(self.len());
        let part = |r: std::ops::Range<usize>| Dataset {
            features: self.features[r.clone()].to_vec(),
            labels: self.labels[r].to_vec(),
            feature_names: self.feature_names.clone(),
        };
        (part(0..at), part(at..self.len()))
    }

    /// BN sample text format with a trailing `label` column.
    pub fn to_text(&self) -> String {
        let mut names = self.names_or_default();
        names.push("label".into());
        let mut out = names.join(" ");
        out.push('\n');
        for (f, &y) in self.features.iter().zip(&self.labels) {
            for b in f {
                out.push(if *b == 1 { '1' } else { '0' });
                out.push(' ');
            }
            out.push(if y { '1' } else { '0' });
            out.push('\n');
        }
        out
    }
}

/// Samples `count` rows; features are the non-target nodes in declaration
/// order, the label is the target.
pub fn bn_dataset(net: &BayesNet, count: usize, seed: u64) -> Dataset {
    let t = net.target();
    let names: Vec<String> = net.names().enumerate().filter(|&(i, _)| i != t).map(|(_, n)| n.to_string()).collect();
    let mut features = Vec::with_capacity(count);
    let mut labels = Vec::with_capacity(count);
    for a in net.sample(count, seed) {
        let v = a.values();
        features.push(v.iter().enumerate().filter(|&(i, _)| i != t).map(|(_, &b)| u8::from(b)).collect());
        labels.push(v[t]);
    }
    Dataset {
        features,
        labels,
        feature_names: Some(names),
    }
}

/// Grayscale images with integer labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawImages {
    pub rows: usize,
    pub cols: usize,
    pub pixels: Vec<Vec<u8>>,
    pub labels: Vec<u8>,
}

impl RawImages {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

fn read_all(path: &Path) -> Result<Vec<u8>, DataError> {
    let mut buf = Vec::new();
    let mut file = BufReader::new(File::open(path)?);
    if path.extension().is_some_and(|e| e == "gz") {
        GzDecoder::new(file).read_to_end(&mut buf)?;
    } else {
        file.read_to_end(&mut buf)?;
    }
    Ok(buf)
}

fn be_u32(buf: &[u8], at: usize, what: &str) -> Result<u32, DataError> {
    buf.get(at..at + 4)
        .map(|b| u32::from_be_bytes(b.try_into().expect("four bytes")))
        .ok_or_else(|| DataError::Truncated(what.into()))
}

/// Parses an IDX image file: magic, count, rows, cols, then pixels.
pub fn parse_idx_images(buf: &[u8]) -> Result<(usize, usize, Vec<Vec<u8>>), DataError> {
    let magic = be_u32(buf, 0, "image magic")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(DataError::BadMagic {
            expected: IDX_IMAGES_MAGIC,
            found: magic,
        });
    }
    let count = be_u32(buf, 4, "image count")? as usize;
    let rows = be_u32(buf, 8, "row count")? as usize;
    let cols = be_u32(buf, 12, "column count")? as usize;
    let size = rows * cols;
    let body = &buf[16..];
    if body.len() != count * size {
        return Err(DataError::Truncated(format!("expected {} pixel bytes, found {}", count * size, body.len())));
    }
    let pixels = if size == 0 { vec![Vec::new(); count] } else { body.chunks(size).map(<[u8]>::to_vec).collect() };
    Ok((rows, cols, pixels))
}

pub fn parse_idx_labels(buf: &[u8]) -> Result<Vec<u8>, DataError> {
    let magic = be_u32(buf, 0, "label magic")?;
    if magic != IDX_LABELS_MAGIC {
        return Err(DataError::BadMagic {
            expected: IDX_LABELS_MAGIC,
            found: magic,
        });
    }
    let count = be_u32(buf, 4, "label count")? as usize;
    let body = &buf[8..];
    if body.len() != count {
        return Err(DataError::Truncated(format!("expected {count} labels, found {}", body.len())));
    }
    Ok(body.to_vec())
}

/// Loads an image/label file pair; `.gz` files are decompressed.
pub fn load_idx(images: &Path, labels: &Path) -> Result<RawImages, DataError> {
    let (rows, cols, pixels) = parse_idx_images(&read_all(images)?)?;
    let labels = parse_idx_labels(&read_all(labels)?)?;
    if pixels.len() != labels.len() {
        return Err(DataError::CountMismatch {
            images: pixels.len(),
            labels: labels.len(),
        });
    }
    Ok(RawImages {
        rows,
        cols,
        pixels,
        labels,
    })
}

pub fn write_idx_images<W: Write>(w: &mut W, rows: usize, cols: usize, pixels: &[Vec<u8>]) -> std::io::Result<()> {
    for v in [IDX_IMAGES_MAGIC, pixels.len() as u32, rows as u32, cols as u32] {
        w.write_all(&v.to_be_bytes())?;
    }
    for p in pixels {
        w.write_all(p)?;
    }
    Ok(())
}

pub fn write_idx_labels<W: Write>(w: &mut W, labels: &[u8]) -> std::io::Result<()> {
    w.write_all(&IDX_LABELS_MAGIC.to_be_bytes())?;
    w.write_all(&(labels.len() as u32).to_be_bytes())?;
    w.write_all(labels)
}

/// Bit is 1 iff pixel > threshold.
pub fn binarize(pixels: &[Vec<u8>], threshold: u8) -> Vec<Vec<u8>> {
    pixels.iter().map(|img| img.iter().map(|&p| u8::from(p > threshold)).collect()).collect()
}

/// Keeps rows of `class_a` (label 1) and `class_b` (label 0), binarized.
pub fn filter_classes(raw: &RawImages, class_a: u8, class_b: u8, threshold: u8) -> Result<Dataset, DataError> {
    if class_a == class_b {
        return Err(DataError::SameClass(class_a));
    }
    let mut features = Vec::new();
    let mut labels = Vec::new();
    for (img, &l) in raw.pixels.iter().zip(&raw.labels) {
        if l == class_a || l == class_b {
            features.push(img.iter().map(|&p| u8::from(p > threshold)).collect());
            labels.push(l == class_a);
        }
    }
    if labels.is_empty() {
        return Err(DataError::EmptyResult(class_a, class_b));
    }
    Dataset::new(features, labels, None)
}
