//! Dataset ingestion (MNIST IDX files, synthetic fallback) and metrics
//! persistence.
//!
//! The IDX parser is strict and bit-exact: every header field is validated
//! and failures name the offending field together with the byte offset at
//! which parsing stopped. Metrics are written as CSV with floats rendered at
//! 17 significant digits so a reload reproduces every value bit for bit.

use std::fmt::Write as _;
use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::numerics::{all_finite, Matrix, Seed};

// ======================================================================
// Dataset
// ======================================================================

/// A labelled classification dataset: one input column per sample.
#[derive(Debug, Clone)]
pub struct Dataset {
    /// `feature_dim x n`; column `j` is sample `j`.
    inputs: Matrix,
    /// Class index per sample, each in `[0, num_classes)`.
    labels: Vec<usize>,
    num_classes: usize,
}

impl Dataset {
    /// Bundle inputs and labels; panics on inconsistent shapes, out-of-range
    /// labels, or non-finite inputs (programmer errors).
    pub fn new(inputs: Matrix, labels: Vec<usize>, num_classes: usize) -> Dataset {
        assert_eq!(
            inputs.cols(),
            labels.len(),
            "dataset: {} input columns but {} labels",
            inputs.cols(),
            labels.len()
        );
        assert!(num_classes >= 2, "dataset: need at least 2 classes");
        assert!(
            labels.iter().all(|&l| l < num_classes),
            "dataset: label out of range for {num_classes} classes"
        );
        assert!(all_finite(inputs.data()), "dataset: non-finite input");
        Dataset {
            inputs,
            labels,
            num_classes,
        }
    }

    /// Number of samples.
    pub fn n(&self) -> usize {
        self.labels.len()
    }

    /// Input dimensionality.
    pub fn feature_dim(&self) -> usize {
        self.inputs.rows()
    }

    /// Number of classes.
    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    /// `feature_dim x n` input matrix, one column per sample.
    pub fn inputs(&self) -> &Matrix {
        &self.inputs
    }

    /// Class index per sample.
    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    /// The first `n` samples as a new dataset. Panics if `n` exceeds the
    /// dataset size or is zero.
    pub fn truncated(&self, n: usize) -> Dataset {
        assert!(
            n >= 1 && n <= self.n(),
            "truncated: need 1 <= n <= {}, got {n}",
            self.n()
        );
        let dim = self.feature_dim();
        let mut inputs = Matrix::zeros(dim, n);
        for i in 0..dim {
            for j in 0..n {
                inputs[(i, j)] = self.inputs[(i, j)];
            }
        }
        Dataset {
            inputs,
            labels: self.labels[..n].to_vec(),
            num_classes: self.num_classes,
        }
    }
}

// ======================================================================
// IDX loading
// ======================================================================

const IDX_IMAGES_MAGIC: u32 = 0x0000_0803;
const IDX_LABELS_MAGIC: u32 = 0x0000_0801;
const MNIST_SIDE: usize = 28;
const MNIST_CLASSES: usize = 10;

/// Cursor over a fully loaded IDX file that reports truncation with the
/// exact byte offset at which the read failed.
struct IdxCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
    path: &'a Path,
}

impl<'a> IdxCursor<'a> {
    fn read_u32(&mut self, field: &'static str) -> Result<u32> {
        if self.bytes.len() < self.pos + 4 {
            return Err(Error::DatasetParse {
                path: self.path.to_path_buf(),
                field,
                offset: self.bytes.len() as u64,
                message: format!(
                    "truncated header: expected 4 bytes at offset {}, file has {} bytes",
                    self.pos,
                    self.bytes.len()
                ),
            });
        }
        let raw: [u8; 4] = self.bytes[self.pos..self.pos + 4].try_into().unwrap();
        self.pos += 4;
        Ok(u32::from_be_bytes(raw))
    }
}

/// Check that an IDX payload has exactly the expected length (header plus
/// all records); reports both byte counts otherwise.
fn expect_exact_len(
    bytes: &[u8],
    header: usize,
    records: usize,
    path: &Path,
    field: &'static str,
) -> Result<()> {
    let expected = header + records;
    if bytes.len() != expected {
        return Err(Error::DatasetParse {
            path: path.to_path_buf(),
            field,
            offset: bytes.len().min(expected) as u64,
            message: format!(
                "expected {expected} bytes total, found {} bytes",
                bytes.len()
            ),
        });
    }
    Ok(())
}

/// Load an MNIST-style IDX image/label file pair.
///
/// Big-endian format: the image file carries magic `0x00000803` and
/// dimensions `[n, 28, 28]` followed by `n * 784` pixel bytes; the label
/// file carries magic `0x00000801` and `[n]` followed by `n` label bytes.
/// Pixels are scaled to `[0, 1]` by `/255` and flattened to 784 features;
/// labels must lie in `0..=9`.
pub fn load_idx(images_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let images = fs::read(images_path).map_err(|e| Error::io(images_path, e))?;
    let labels_raw = fs::read(labels_path).map_err(|e| Error::io(labels_path, e))?;

    // ---- image header ----
    let mut cur = IdxCursor {
        bytes: &images,
        pos: 0,
        path: images_path,
    };
    let magic = cur.read_u32("images magic")?;
    if magic != IDX_IMAGES_MAGIC {
        return Err(Error::DatasetParse {
            path: images_path.to_path_buf(),
            field: "images magic",
            offset: 0,
            message: format!("bad magic 0x{magic:08x}, expected 0x{IDX_IMAGES_MAGIC:08x}"),
        });
    }
    let n_images = cur.read_u32("image count")? as usize;
    let rows = cur.read_u32("image rows")? as usize;
    if rows != MNIST_SIDE {
        return Err(Error::DatasetParse {
            path: images_path.to_path_buf(),
            field: "image rows",
            offset: 8,
            message: format!("expected {MNIST_SIDE} rows, got {rows}"),
        });
    }
    let cols = cur.read_u32("image cols")? as usize;
    if cols != MNIST_SIDE {
        return Err(Error::DatasetParse {
            path: images_path.to_path_buf(),
            field: "image cols",
            offset: 12,
            message: format!("expected {MNIST_SIDE} columns, got {cols}"),
        });
    }
    let pixels_per_image = MNIST_SIDE * MNIST_SIDE;
    expect_exact_len(
        &images,
        16,
        n_images * pixels_per_image,
        images_path,
        "images data",
    )?;

    // ---- label header ----
    let mut cur = IdxCursor {
        bytes: &labels_raw,
        pos: 0,
        path: labels_path,
    };
    let magic = cur.read_u32("labels magic")?;
    if magic != IDX_LABELS_MAGIC {
        return Err(Error::DatasetParse {
            path: labels_path.to_path_buf(),
            field: "labels magic",
            offset: 0,
            message: format!("bad magic 0x{magic:08x}, expected 0x{IDX_LABELS_MAGIC:08x}"),
        });
    }
    let n_labels = cur.read_u32("label count")? as usize;
    if n_labels != n_images {
        return Err(Error::DatasetParse {
            path: labels_path.to_path_buf(),
            field: "label count",
            offset: 4,
            message: format!("label count {n_labels} does not match image count {n_images}"),
        });
    }
    expect_exact_len(&labels_raw, 8, n_labels, labels_path, "labels data")?;

    // ---- payloads ----
    let mut labels = Vec::with_capacity(n_labels);
    for (i, &b) in labels_raw[8..].iter().enumerate() {
        let label = b as usize;
        if label >= MNIST_CLASSES {
            return Err(Error::DatasetParse {
                path: labels_path.to_path_buf(),
                field: "label value",
                offset: (8 + i) as u64,
                message: format!("label {label} out of range for {MNIST_CLASSES} classes"),
            });
        }
        labels.push(label);
    }

    let mut inputs = Matrix::zeros(pixels_per_image, n_images);
    for j in 0..n_images {
        let start = 16 + j * pixels_per_image;
        for p in 0..pixels_per_image {
            inputs[(p, j)] = images[start + p] as f64 / 255.0;
        }
    }

    Ok(Dataset::new(inputs, labels, MNIST_CLASSES))
}

// ======================================================================
// Synthetic fallback
// ======================================================================

/// The fixed per-class blob centers used by [`synthetic_classification`]:
/// unit-norm Gaussian directions, one per class, deterministic per seed.
pub fn synthetic_class_means(seed: Seed, dim: usize, classes: usize) -> Vec<Vec<f64>> {
    assert!(classes >= 2, "synthetic data: need at least 2 classes");
    assert!(dim >= 1, "synthetic data: need at least 1 feature");
    let mut rng = seed.derive(0x6d65616e).rng();
    (0..classes)
        .map(|_| {
            let mut mean: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
            let norm = mean.iter().map(|x| x * x).sum::<f64>().sqrt();
            assert!(norm > 1e-12, "synthetic data: degenerate class mean");
            for x in mean.iter_mut() {
                *x /= norm;
            }
            mean
        })
        .collect()
}

/// Deterministic Gaussian class blobs: round-robin labels, per-class
/// unit-norm mean directions, isotropic noise of standard deviation 0.3.
///
/// The blobs are separable enough that a small MLP can drive the training
/// loss to near zero, which is all the offline fallback has to support.
pub fn synthetic_classification(seed: Seed, n: usize, dim: usize, classes: usize) -> Dataset {
    assert!(n >= 1, "synthetic data: need at least 1 sample");
    let means = synthetic_class_means(seed, dim, classes);
    let mut rng = seed.derive(0x626c6f62).rng();
    let mut inputs = Matrix::zeros(dim, n);
    let mut labels = Vec::with_capacity(n);
    for j in 0..n {
        let class = j % classes;
        labels.push(class);
        for i in 0..dim {
            let noise: f64 = rng.sample(StandardNormal);
            inputs[(i, j)] = means[class][i] + 0.3 * noise;
        }
    }
    Dataset::new(inputs, labels, classes)
}

// ======================================================================
// Metrics CSV
// ======================================================================

/// Column header of every metrics CSV.
pub const METRICS_HEADER: &str = "run_id,step,epoch,batch_loss,effective_lr,lmin,wallclock_ms";

/// One logged training step.
///
/// `effective_lr` and `lmin` are populated by the loss-adaptive optimizers
/// and left empty for baselines, whose learning rate is a constant of the
/// configuration rather than a per-step quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsRow {
    pub run_id: String,
    pub step: u64,
    pub epoch: u64,
    pub batch_loss: f64,
    pub effective_lr: Option<f64>,
    pub lmin: Option<f64>,
    pub wallclock_ms: f64,
}

/// Render a float with 17 significant digits so parsing it back restores
/// the exact bit pattern.
fn fmt_float(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_float).unwrap_or_default()
}

fn render_row(row: &MetricsRow) -> String {
    assert!(
        !row.run_id.contains(',') && !row.run_id.contains('\n'),
        "run_id {:?} would corrupt the CSV",
        row.run_id
    );
    format!(
        "{},{},{},{},{},{},{}",
        row.run_id,
        row.step,
        row.epoch,
        fmt_float(row.batch_loss),
        fmt_opt(row.effective_lr),
        fmt_opt(row.lmin),
        fmt_float(row.wallclock_ms)
    )
}

/// Streaming metrics writer: header on creation, one line per row.
pub struct MetricsWriter {
    out: BufWriter<fs::File>,
    path: PathBuf,
}

impl MetricsWriter {
    /// Create (truncate) the file and write the header.
    pub fn create(path: impl Into<PathBuf>) -> Result<MetricsWriter> {
        let path = path.into();
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        writeln!(out, "{METRICS_HEADER}").map_err(|e| Error::io(&path, e))?;
        Ok(MetricsWriter { out, path })
    }

    /// Append one row.
    pub fn write_row(&mut self, row: &MetricsRow) -> Result<()> {
        writeln!(self.out, "{}", render_row(row)).map_err(|e| Error::io(&self.path, e))
    }

    /// Flush and close.
    pub fn finish(mut self) -> Result<()> {
        self.out.flush().map_err(|e| Error::io(&self.path, e))
    }
}

/// Write a complete metrics file in one call (header plus `rows`).
pub fn write_metrics(rows: &[MetricsRow], path: &Path) -> Result<()> {
    let mut text = String::with_capacity(64 * (rows.len() + 1));
    text.push_str(METRICS_HEADER);
    text.push('\n');
    for row in rows {
        let _ = writeln!(text, "{}", render_row(row));
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn parse_u64(field: &str, value: &str, line: usize) -> Result<u64> {
    value.parse().map_err(|_| Error::MetricsParse {
        line,
        message: format!("{field}: expected an integer, got {value:?}"),
    })
}

fn parse_f64(field: &str, value: &str, line: usize) -> Result<f64> {
    value.parse().map_err(|_| Error::MetricsParse {
        line,
        message: format!("{field}: expected a float, got {value:?}"),
    })
}

fn parse_opt_f64(field: &str, value: &str, line: usize) -> Result<Option<f64>> {
    if value.is_empty() {
        Ok(None)
    } else {
        parse_f64(field, value, line).map(Some)
    }
}

/// Parse a metrics CSV written by [`write_metrics`] / [`MetricsWriter`].
pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRow>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, header)) if header == METRICS_HEADER => {}
        Some((_, header)) => {
            return Err(Error::MetricsParse {
                line: 1,
                message: format!("bad header {header:?}, expected {METRICS_HEADER:?}"),
            })
        }
        None => {
            return Err(Error::MetricsParse {
                line: 1,
                message: "empty file".into(),
            })
        }
    }
    let mut rows = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(Error::MetricsParse {
                line: line_no,
                message: format!("expected 7 fields, got {}", fields.len()),
            });
        }
        rows.push(MetricsRow {
            run_id: fields[0].to_string(),
            step: parse_u64("step", fields[1], line_no)?,
            epoch: parse_u64("epoch", fields[2], line_no)?,
            batch_loss: parse_f64("batch_loss", fields[3], line_no)?,
            effective_lr: parse_opt_f64("effective_lr", fields[4], line_no)?,
            lmin: parse_opt_f64("lmin", fields[5], line_no)?,
            wallclock_ms: parse_f64("wallclock_ms", fields[6], line_no)?,
        });
    }
    Ok(rows)
}

// ======================================================================
// Tests
// ======================================================================
