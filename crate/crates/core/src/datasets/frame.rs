use std::io::{Read, Write};
use std::path::Path;

use crate::autodiff::Tensor;
use crate::error::{Error, Result};

/// Points, optional latent coordinates and integer labels for each row.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingFrame {
    pub x: Tensor<f64>,
    pub z: Option<Tensor<f64>>,
    pub labels: Vec<i64>,
    /// Header names of the columns of `x`.
    pub columns: Vec<String>,
    /// Label legend, indexed by label value when labels are small non-negative integers.
    pub names: Vec<String>,
}

impl EmbeddingFrame {
    pub fn new(x: Tensor<f64>, labels: Vec<i64>) -> Result<Self> {
        if x.rank() != 2 || labels.len() != x.rows() {
            return Err(Error::shape(
                "frame",
                format!("{} labels for data {:?}", labels.len(), x.shape()),
            ));
        }
        let columns = (0..x.cols()).map(|j| format!("x{j}")).collect();
        Ok(Self {
            x,
            z: None,
            labels,
            columns,
            names: Vec::new(),
        })
    }

    pub fn with_latent(mut self, z: Tensor<f64>) -> Result<Self> {
        if z.rank() != 2 || z.rows() != self.x.rows() {
            return Err(Error::shape(
                "frame",
                format!("latent {:?} for {} rows", z.shape(), self.x.rows()),
            ));
        }
        self.z = Some(z);
        Ok(self)
    }

    pub fn len(&self) -> usize {
        self.x.rows()
    }

    pub fn is_empty(&self) -> bool {
        self.x.rows() == 0
    }

    pub fn label_name(&self, label: i64) -> Option<&str> {
        usize::try_from(label)
            .ok()
            .and_then(|l| self.names.get(l))
            .map(String::as_str)
    }
}

/// Column used for labels when reading and writing.
pub const LABEL_COLUMN: &str = "label";

/// Reads a numeric CSV with a header row. The column named `label_column`,
/// if present, becomes the labels (integers); every other column is data.
pub fn read_csv<R: Read>(reader: R, label_column: &str) -> Result<EmbeddingFrame> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(reader);
    let headers: Vec<String> = rdr.headers()?.iter().map(|h| h.trim().to_string()).collect();
    if headers.is_empty() || headers.iter().all(String::is_empty) {
        return Err(Error::Parse {
            line: 1,
            detail: "missing header row".into(),
        });
    }
    let label_idx = headers.iter().position(|h| h == label_column);
    let columns: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|(i, _)| Some(*i) != label_idx)
        .map(|(_, h)| h.clone())
        .collect();
    if columns.is_empty() {
        return Err(Error::Parse {
            line: 1,
            detail: "no data columns".into(),
        });
    }
    let mut data = Vec::new();
    let mut labels = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let line = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != headers.len() {
            return Err(Error::Parse {
                line,
                detail: format!("expected {} fields, found {}", headers.len(), rec.len()),
            });
        }
        for (i, field) in rec.iter().enumerate() {
            let field = field.trim();
            if Some(i) == label_idx {
                let l = field.parse::<i64>().map_err(|_| Error::Parse {
                    line,
                    detail: format!("label {field:?} is not an integer"),
                })?;
                labels.push(l);
                continue;
            }
            let v = field.parse::<f64>().map_err(|_| Error::Parse {
                line,
                detail: format!("column {:?}: {field:?} is not a number", headers[i]),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    detail: format!("column {:?}: non-finite value {field:?}", headers[i]),
                });
            }
            data.push(v);
        }
        if label_idx.is_none() {
            labels.push(0);
        }
    }
    let rows = labels.len();
    let x = Tensor::matrix(rows, columns.len(), data)?;
    let mut frame = EmbeddingFrame::new(x, labels)?;
    frame.columns = columns;
    Ok(frame)
}

pub fn load_csv(path: impl AsRef<Path>) -> Result<EmbeddingFrame> {
    let file = std::fs::File::open(path)?;
    read_csv(std::io::BufReader::new(file), LABEL_COLUMN)
}

/// Writes `x` and the labels. Floats use the shortest representation that
/// parses back to the same bits.
pub fn write_csv_to<W: Write>(w: W, frame: &EmbeddingFrame) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    let mut header = frame.columns.clone();
    header.push(LABEL_COLUMN.to_string());
    wtr.write_record(&header)?;
    for i in 0..frame.len() {
        let mut rec: Vec<String> = frame.x.row(i).iter().map(|v| format!("{v:?}")).collect();
        rec.push(frame.labels[i].to_string());
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

pub fn write_csv(path: impl AsRef<Path>, frame: &EmbeddingFrame) -> Result<()> {
    let file = std::fs::File::create(path)?;
    write_csv_to(std::io::BufWriter::new(file), frame)
}

/// Writes latent coordinates as columns `z0, z1, …` plus labels.
pub fn write_latent_csv(path: impl AsRef<Path>, z: &Tensor<f64>, labels: &[i64]) -> Result<()> {
    let mut frame = EmbeddingFrame::new(z.clone(), labels.to_vec())?;
    frame.columns = (0..z.cols()).map(|j| format!("z{j}")).collect();
    write_csv(path, &frame)
}

/// Result of [`standardize`].
#[derive(Debug, Clone, PartialEq)]
pub struct Standardized {
    pub frame: EmbeddingFrame,
    /// Indices of constant input columns that were removed.
    pub dropped: Vec<usize>,
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

/// Per-column `(x − μ) / σ` with population standard deviation. Constant
/// columns are removed and reported.
pub fn standardize(frame: &EmbeddingFrame) -> Result<Standardized> {
    let (m, n) = (frame.x.rows(), frame.x.cols());
    if m == 0 {
        return Err(Error::Invalid("cannot standardize an empty frame".into()));
    }
    let mut keep = Vec::new();
    let mut dropped = Vec::new();
    let mut means = Vec::new();
    let mut stds = Vec::new();
    for j in 0..n {
        let col: Vec<f64> = (0..m).map(|i| frame.x.get2(i, j)).collect();
        let mu = col.iter().sum::<f64>() / m as f64;
        let var = col.iter().map(|v| (v - mu) * (v - mu)).sum::<f64>() / m as f64;
        let sd = var.sqrt();
        if sd > 0.0 && sd > 1e-12 * mu.abs() {
            keep.push(j);
            means.push(mu);
            stds.push(sd);
        } else {
            dropped.push(j);
        }
    }
    if keep.is_empty() {
        return Err(Error::Degenerate("every column is constant".into()));
    }
    let mut data = Vec::with_capacity(m * keep.len());
    for i in 0..m {
        for (k, &j) in keep.iter().enumerate() {
            data.push((frame.x.get2(i, j) - means[k]) / stds[k]);
        }
    }
    let mut out = frame.clone();
    out.x = Tensor::matrix(m, keep.len(), data)?;
    out.columns = keep.iter().map(|&j| frame.columns[j].clone()).collect();
    Ok(Standardized {
        frame: out,
        dropped,
        mean: means,
        std: stds,
    })
}
