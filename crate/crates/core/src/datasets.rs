//! Benchmark loaders, binary sub-sampling and angle encoding.
//!
//! File formats:
//! * Iris / Wine: comma-separated with a header row; every column but the
//!   last is a numeric feature, the last (`class`) an integer label.
//! * Titanic: the Kaggle `train.csv` schema (`PassengerId, Survived, Pclass,
//!   Name, Sex, Age, SibSp, Parch, Ticket, Fare, Cabin, Embarked`).
//! * MNIST: a directory holding `train-images-idx3-ubyte` and
//!   `train-labels-idx1-ubyte`, raw or gzip-compressed (`.gz`).
//!
//! Empty CSV fields load as `NaN` and are imputed with the training-split
//! median when the encoder is fitted.

use std::cmp::Ordering;
use std::collections::BTreeSet;
use std::f64::consts::PI;
use std::fmt;
use std::fs::File;
use std::io::{BufReader, Read};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use flate2::read::GzDecoder;
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::ansatz::EncodedSample;
use crate::error::{Error, Result};
use crate::regularize::{rng_stream, stream_id};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DatasetName {
    Iris,
    Wine,
    Titanic,
    Mnist,
}

/// Reference size of a benchmark: instances, original features, classes
/// and the train/valid/test split of the binary subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DatasetInfo {
    pub instances: usize,
    pub features: usize,
    pub classes: usize,
    pub splits: (usize, usize, usize),
}

impl DatasetName {
    pub const ALL: [DatasetName; 4] = [
        DatasetName::Iris,
        DatasetName::Wine,
        DatasetName::Titanic,
        DatasetName::Mnist,
    ];

    pub fn info(self) -> DatasetInfo {
        let (instances, features, classes, splits) = match self {
            DatasetName::Iris => (150, 4, 3, (60, 20, 20)),
            DatasetName::Wine => (178, 13, 3, (80, 20, 30)),
            DatasetName::Titanic => (891, 11, 2, (320, 80, 179)),
            DatasetName::Mnist => (60_000, 784, 10, (320, 80, 400)),
        };
        DatasetInfo {
            instances,
            features,
            classes,
            splits,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DatasetName::Iris => "iris",
            DatasetName::Wine => "wine",
            DatasetName::Titanic => "titanic",
            DatasetName::Mnist => "mnist",
        }
    }
}

impl fmt::Display for DatasetName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DatasetName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let key = s.trim().to_ascii_lowercase();
        DatasetName::ALL
            .into_iter()
            .find(|d| d.as_str() == key)
            .ok_or_else(|| Error::Dataset {
                name: s.to_string(),
                msg: "unknown dataset".into(),
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RawDataset {
    pub name: DatasetName,
    /// Feature columns in the source file, before any preprocessing.
    pub original_features: usize,
    /// Preprocessed numeric features, one row per instance.
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u32>,
}

impl RawDataset {
    pub fn n_instances(&self) -> usize {
        self.labels.len()
    }

    pub fn n_classes(&self) -> usize {
        self.labels.iter().collect::<BTreeSet<_>>().len()
    }

    fn check_info(&self) -> Result<()> {
        let info = self.name.info();
        let got = (self.n_instances(), self.original_features, self.n_classes());
        let want = (info.instances, info.features, info.classes);
        if got != want {
            return Err(Error::Dataset {
                name: self.name.to_string(),
                msg: format!(
                    "expected {} instances × {} features, {} classes; found {} × {}, {}",
                    want.0, want.1, want.2, got.0, got.1, got.2
                ),
            });
        }
        Ok(())
    }
}

/// Loads a benchmark and checks it against its reference dimensions.
pub fn load(name: DatasetName, path: &Path) -> Result<RawDataset> {
    let raw = match name {
        DatasetName::Iris | DatasetName::Wine => load_numeric_csv(name, path)?,
        DatasetName::Titanic => load_titanic(path)?,
        DatasetName::Mnist => load_mnist(path)?,
    };
    raw.check_info()?;
    Ok(raw)
}

fn open_csv(path: &Path) -> Result<csv::Reader<File>> {
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    Ok(csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file))
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse {
        path: path.to_path_buf(),
        line,
        msg: msg.into(),
    }
}

fn parse_field(path: &Path, line: usize, column: &str, raw: &str) -> Result<f64> {
    let raw = raw.trim();
    if raw.is_empty() {
        return Ok(f64::NAN);
    }
    raw.parse::<f64>().map_err(|_| {
        parse_err(
            path,
            line,
            format!("column `{column}`: `{raw}` is not a number"),
        )
    })
}

/// Reads all records, checking each has as many fields as the header.
/// Header plus (line number, record) pairs.
type Records = (Vec<String>, Vec<(usize, csv::StringRecord)>);

fn read_records(path: &Path) -> Result<Records> {
    let mut rdr = open_csv(path)?;
    let headers: Vec<String> = rdr
        .headers()
        .map_err(|e| parse_err(path, 1, e.to_string()))?
        .iter()
        .map(|h| h.trim().to_string())
        .collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(parse_err(path, 1, "missing header row"));
    }
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            parse_err(path, line, e.to_string())
        })?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != headers.len() {
            return Err(parse_err(
                path,
                line,
                format!("expected {} fields, found {}", headers.len(), rec.len()),
            ));
        }
        rows.push((line, rec));
    }
    Ok((headers, rows))
}

fn parse_label(path: &Path, line: usize, raw: &str) -> Result<u32> {
    let raw = raw.trim();
    raw.parse::<u32>()
        .or_else(|_| {
            // accept "1.0"-style integral labels
            raw.parse::<f64>()
                .ok()
                .filter(|v| v.fract() == 0.0 && *v >= 0.0)
                .map(|v| v as u32)
                .ok_or(())
        })
        .map_err(|_| parse_err(path, line, format!("label `{raw}` is not a class index")))
}

fn load_numeric_csv(name: DatasetName, path: &Path) -> Result<RawDataset> {
    let (headers, rows) = read_records(path)?;
    let n_feat = headers.len() - 1;
    let mut features = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (line, rec) in rows {
        let row = (0..n_feat)
            .map(|j| parse_field(path, line, &headers[j], &rec[j]))
            .collect::<Result<Vec<_>>>()?;
        labels.push(parse_label(path, line, &rec[n_feat])?);
        features.push(row);
    }
    Ok(RawDataset {
        name,
        original_features: n_feat,
        features,
        labels,
    })
}

const TITANIC_COLUMNS: [&str; 12] = [
    "PassengerId",
    "Survived",
    "Pclass",
    "Name",
    "Sex",
    "Age",
    "SibSp",
    "Parch",
    "Ticket",
    "Fare",
    "Cabin",
    "Embarked",
];

/// Kept Titanic columns, in output order.
pub const TITANIC_FEATURES: [&str; 7] =
    ["Pclass", "Sex", "Age", "SibSp", "Parch", "Fare", "Embarked"];

fn load_titanic(path: &Path) -> Result<RawDataset> {
    let (headers, rows) = read_records(path)?;
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(path, 1, format!("missing column `{name}`")))
    };
    for c in TITANIC_COLUMNS {
        col(c)?;
    }
    let label_col = col("Survived")?;
    let idx: Vec<usize> = TITANIC_FEATURES
        .iter()
        .map(|c| col(c))
        .collect::<Result<_>>()?;
    let mut features = Vec::with_capacity(rows.len());
    let mut labels = Vec::with_capacity(rows.len());
    for (line, rec) in rows {
        let mut row = Vec::with_capacity(idx.len());
        for (&j, &name) in idx.iter().zip(TITANIC_FEATURES.iter()) {
            let raw = rec[j].trim();
            let v = match name {
                "Sex" => match raw.to_ascii_lowercase().as_str() {
                    "male" => 0.0,
                    "female" => 1.0,
                    "" => f64::NAN,
                    other => return Err(parse_err(path, line, format!("unknown sex `{other}`"))),
                },
                "Embarked" => match raw.to_ascii_uppercase().as_str() {
                    "S" => 0.0,
                    "C" => 1.0,
                    "Q" => 2.0,
                    "" => f64::NAN,
                    other => return Err(parse_err(path, line, format!("unknown port `{other}`"))),
                },
                _ => parse_field(path, line, name, raw)?,
            };
            row.push(v);
        }
        labels.push(parse_label(path, line, &rec[label_col])?);
        features.push(row);
    }
    Ok(RawDataset {
        name: DatasetName::Titanic,
        original_features: headers.len() - 1,
        features,
        labels,
    })
}

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;

fn find_idx(dir: &Path, stems: &[&str]) -> Result<PathBuf> {
    for stem in stems {
        for suffix in ["", ".gz"] {
            let p = dir.join(format!("{stem}{suffix}"));
            if p.is_file() {
                return Ok(p);
            }
        }
    }
    Err(Error::Io {
        path: dir.join(stems[0]),
        source: std::io::Error::new(std::io::ErrorKind::NotFound, "IDX file not found"),
    })
}

/// Reads a whole IDX file, transparently inflating gzip input.
fn read_idx_bytes(path: &Path) -> Result<Vec<u8>> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut raw = Vec::new();
    BufReader::new(File::open(path).map_err(io_err)?)
        .read_to_end(&mut raw)
        .map_err(io_err)?;
    if raw.starts_with(&[0x1f, 0x8b]) {
        let mut out = Vec::new();
        GzDecoder::new(raw.as_slice())
            .read_to_end(&mut out)
            .map_err(io_err)?;
        Ok(out)
    } else {
        Ok(raw)
    }
}

/// Parses an IDX buffer with the given magic, returning `(dims, payload)`.
pub fn parse_idx(bytes: &[u8], magic: u32, path: &Path) -> Result<(Vec<usize>, Vec<u8>)> {
    let bad = |msg: String| parse_err(path, 0, msg);
    let word = |i: usize| -> Result<u32> {
        bytes
            .get(4 * i..4 * i + 4)
            .map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
            .ok_or_else(|| bad("truncated IDX header".into()))
    };
    let found = word(0)?;
    if found != magic {
        return Err(bad(format!(
            "IDX magic {found:#010x}, expected {magic:#010x}"
        )));
    }
    let n_dims = (magic & 0xff) as usize;
    let dims = (1..=n_dims)
        .map(|i| word(i).map(|d| d as usize))
        .collect::<Result<Vec<_>>>()?;
    let header = 4 * (n_dims + 1);
    let expected: usize = dims.iter().product();
    let payload = &bytes[header.min(bytes.len())..];
    if payload.len() != expected {
        return Err(bad(format!(
            "IDX payload has {} bytes, dimensions {dims:?} need {expected}",
            payload.len()
        )));
    }
    Ok((dims, payload.to_vec()))
}

fn load_mnist(dir: &Path) -> Result<RawDataset> {
    let img_path = find_idx(dir, &["train-images-idx3-ubyte", "train-images.idx3-ubyte"])?;
    let lbl_path = find_idx(dir, &["train-labels-idx1-ubyte", "train-labels.idx1-ubyte"])?;
    let (dims, pixels) = parse_idx(&read_idx_bytes(&img_path)?, IDX_IMAGES_MAGIC, &img_path)?;
    let (ldims, labels) = parse_idx(&read_idx_bytes(&lbl_path)?, IDX_LABELS_MAGIC, &lbl_path)?;
    if ldims[0] != dims[0] {
        return Err(Error::Dataset {
            name: "mnist".into(),
            msg: format!("{} images but {} labels", dims[0], ldims[0]),
        });
    }
    let width = dims[1] * dims[2];
    let features = pixels
        .chunks_exact(width)
        .map(|c| c.iter().map(|&p| p as f64).collect())
        .collect();
    Ok(RawDataset {
        name: DatasetName::Mnist,
        original_features: width,
        features,
        labels: labels.into_iter().map(u32::from).collect(),
    })
}

/// Feature rows with binary labels.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub features: Vec<Vec<f64>>,
    pub labels: Vec<u8>,
}

impl Split {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    fn push(&mut self, features: Vec<f64>, label: u8) {
        self.features.push(features);
        self.labels.push(label);
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub name: String,
    pub train: Split,
    pub valid: Split,
    pub test: Split,
}

/// Keeps the two smallest class labels (relabelled 0 / 1), shuffles with
/// `seed` and cuts the reference train / valid / test splits.
pub fn binarize_and_split(raw: &RawDataset, seed: u64) -> Result<SplitDataset> {
    let (n_train, n_valid, n_test) = raw.name.info().splits;
    let classes: Vec<u32> = raw
        .labels
        .iter()
        .copied()
        .collect::<BTreeSet<_>>()
        .into_iter()
        .take(2)
        .collect();
    if classes.len() < 2 {
        return Err(Error::Dataset {
            name: raw.name.to_string(),
            msg: "fewer than two classes".into(),
        });
    }
    let mut kept: Vec<usize> = (0..raw.n_instances())
        .filter(|&i| classes.contains(&raw.labels[i]))
        .collect();
    let needed = n_train + n_valid + n_test;
    if kept.len() < needed {
        return Err(Error::Dataset {
            name: raw.name.to_string(),
            msg: format!("{} binary instances, {needed} required", kept.len()),
        });
    }
    kept.shuffle(&mut rng_stream(seed, stream_id(&[0x5b17])));
    let mut out = SplitDataset {
        name: raw.name.to_string(),
        train: Split::default(),
        valid: Split::default(),
        test: Split::default(),
    };
    for (pos, &i) in kept.iter().take(needed).enumerate() {
        let label = u8::from(raw.labels[i] == classes[1]);
        let row = raw.features[i].clone();
        if pos < n_train {
            out.train.push(row, label);
        } else if pos < n_train + n_valid {
            out.valid.push(row, label);
        } else {
            out.test.push(row, label);
        }
    }
    Ok(out)
}

/// Principal-component projection fitted on training rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Pca {
    pub mean: Vec<f64>,
    /// Orthonormal principal directions, largest variance first.
    pub components: Vec<Vec<f64>>,
}

impl Pca {
    pub fn fit(rows: &[Vec<f64>], k: usize) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if n == 0 || d == 0 {
            return Err(Error::Shape("PCA on empty data".into()));
        }
        let mean: Vec<f64> = (0..d)
            .map(|j| rows.iter().map(|r| r[j]).sum::<f64>() / n as f64)
            .collect();
        let centered = DMatrix::from_fn(n, d, |i, j| rows[i][j] - mean[j]);
        let svd = centered.svd(false, true);
        let v_t = svd
            .v_t
            .ok_or_else(|| Error::Shape("SVD did not converge".into()))?;
        let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
        order.sort_by(|&a, &b| {
            svd.singular_values[b]
                .partial_cmp(&svd.singular_values[a])
                .unwrap_or(Ordering::Equal)
        });
        let mut components = Vec::with_capacity(k);
        for &r in order.iter().take(k) {
            let mut c: Vec<f64> = v_t.row(r).iter().copied().collect();
            // fix the sign so the largest-magnitude entry is positive
            let pivot = c
                .iter()
                .copied()
                .fold(0.0f64, |acc, x| if x.abs() > acc.abs() { x } else { acc });
            if pivot < 0.0 {
                c.iter_mut().for_each(|x| *x = -*x);
            }
            components.push(c);
        }
        // rank-deficient data: fill with zero directions so the width is stable
        while components.len() < k {
            components.push(vec![0.0; d]);
        }
        Ok(Self { mean, components })
    }

    pub fn project(&self, row: &[f64]) -> Vec<f64> {
        self.components
            .iter()
            .map(|c| {
                c.iter()
                    .zip(row.iter().zip(&self.mean))
                    .map(|(ci, (x, m))| ci * (x - m))
                    .sum()
            })
            .collect()
    }

    pub fn reconstruct(&self, coords: &[f64]) -> Vec<f64> {
        let mut out = self.mean.clone();
        for (c, &z) in self.components.iter().zip(coords) {
            for (o, ci) in out.iter_mut().zip(c) {
                *o += z * ci;
            }
        }
        out
    }
}

/// Fitted imputation, reduction and scaling. Depends on training rows only.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Encoder {
    pub impute: Vec<f64>,
    pub pca: Option<Pca>,
    pub min: Vec<f64>,
    pub max: Vec<f64>,
}

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(|a, b| a.partial_cmp(b).unwrap_or(Ordering::Equal));
    let m = v.len() / 2;
    if v.len().is_multiple_of(2) {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

impl Encoder {
    pub fn fit(train: &[Vec<f64>], n_qubits: usize) -> Result<Self> {
        if n_qubits == 0 {
            return Err(Error::Dimensions("encoder needs at least one qubit".into()));
        }
        let d = train.first().map_or(0, Vec::len);
        if train.is_empty() || d == 0 {
            return Err(Error::Shape("encoder fitted on empty data".into()));
        }
        if train.iter().any(|r| r.len() != d) {
            return Err(Error::Shape("ragged training rows".into()));
        }
        let impute: Vec<f64> = (0..d)
            .map(|j| median(train.iter().map(|r| r[j]).filter(|v| !v.is_nan()).collect()))
            .collect();
        let filled: Vec<Vec<f64>> = train.iter().map(|r| fill(r, &impute)).collect();
        let pca = if d > n_qubits {
            Some(Pca::fit(&filled, n_qubits)?)
        } else {
            None
        };
        let reduced: Vec<Vec<f64>> = match &pca {
            Some(p) => filled.iter().map(|r| p.project(r)).collect(),
            None => filled,
        };
        let width = reduced[0].len();
        let min = (0..width)
            .map(|j| reduced.iter().map(|r| r[j]).fold(f64::INFINITY, f64::min))
            .collect();
        let max = (0..width)
            .map(|j| {
                reduced
                    .iter()
                    .map(|r| r[j])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        Ok(Self {
            impute,
            pca,
            min,
            max,
        })
    }

    /// Encoded width, `min(original features, n_qubits)`.
    pub fn width(&self) -> usize {
        self.min.len()
    }

    /// Maps a row to angles in `[0, π]`; values outside the training range
    /// are clipped, constant training columns map to 0.
    pub fn encode_row(&self, row: &[f64]) -> Result<Vec<f64>> {
        if row.len() != self.impute.len() {
            return Err(Error::Shape(format!(
                "row of {} features for an encoder fitted on {}",
                row.len(),
                self.impute.len()
            )));
        }
        let filled = fill(row, &self.impute);
        let reduced = match &self.pca {
            Some(p) => p.project(&filled),
            None => filled,
        };
        Ok(reduced
            .iter()
            .zip(self.min.iter().zip(&self.max))
            .map(|(&x, (&lo, &hi))| {
                if hi > lo {
                    (PI * (x - lo) / (hi - lo)).clamp(0.0, PI)
                } else {
                    0.0
                }
            })
            .collect())
    }

    pub fn encode(&self, rows: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        rows.iter().map(|r| self.encode_row(r)).collect()
    }
}

fn fill(row: &[f64], impute: &[f64]) -> Vec<f64> {
    row.iter()
        .zip(impute)
        .map(|(&x, &m)| if x.is_nan() { m } else { x })
        .collect()
}

/// Splits whose features are already encoded angles.
#[derive(Debug, Clone, PartialEq)]
pub struct EncodedDataset {
    pub name: String,
    pub train: Split,
    pub valid: Split,
    pub test: Split,
    pub encoder: Option<Encoder>,
}

impl EncodedDataset {
    pub fn encode(data: &SplitDataset, n_qubits: usize) -> Result<Self> {
        let encoder = Encoder::fit(&data.train.features, n_qubits)?;
        let enc = |s: &Split| -> Result<Split> {
            Ok(Split {
                features: encoder.encode(&s.features)?,
                labels: s.labels.clone(),
            })
        };
        Ok(Self {
            name: data.name.clone(),
            train: enc(&data.train)?,
            valid: enc(&data.valid)?,
            test: enc(&data.test)?,
            encoder: Some(encoder),
        })
    }

    pub fn width(&self) -> usize {
        self.train.features.first().map_or(0, Vec::len)
    }

    /// All encoded training values, flattened, for prior fitting.
    pub fn train_values(&self) -> Vec<f64> {
        self.train.features.iter().flatten().copied().collect()
    }
}

/// Zero-padded circuit inputs for every row of `split`.
pub fn to_samples(split: &Split, n_qubits: usize) -> Result<Vec<EncodedSample>> {
    split
        .features
        .iter()
        .zip(&split.labels)
        .map(|(f, &l)| EncodedSample::padded(f, n_qubits, l))
        .collect()
}
