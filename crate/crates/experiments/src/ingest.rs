//! Reading datasets from CSV files and IDX image/label pairs.

use std::path::Path;

use symsearch_core::invariance::RegressionDataset;

use crate::ExperimentError;

fn data_err(msg: impl Into<String>) -> ExperimentError {
    ExperimentError::Data(msg.into())
}

/// Reads a CSV with a header row. `response` names the response column;
/// by default a column named `y`, else the last column. All other columns are
/// features.
pub fn read_csv(path: &Path, response: Option<&str>) -> Result<RegressionDataset, ExperimentError> {
    let file = std::fs::File::open(path).map_err(|e| data_err(format!("{}: {e}", path.display())))?;
    parse_csv(file, response)
}

pub fn parse_csv<R: std::io::Read>(reader: R, response: Option<&str>) -> Result<RegressionDataset, ExperimentError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).from_reader(reader);
    let headers = rdr.headers().map_err(|e| data_err(format!("bad header: {e}")))?.clone();
    if headers.len() < 2 {
        return Err(data_err("header must name at least one feature and one response column"));
    }
    let target = match response {
        Some(name) => headers
            .iter()
            .position(|h| h.trim() == name)
            .ok_or_else(|| data_err(format!("no column named '{name}'")))?,
        None => headers.iter().position(|h| h.trim() == "y").unwrap_or(headers.len() - 1),
    };
    let mut x = Vec::new();
    let mut y = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(|e| data_err(format!("malformed row: {e}")))?;
        let line = record.position().map_or(0, |p| p.line());
        for (col, cell) in record.iter().enumerate() {
            let v: f64 = cell.trim().parse().map_err(|_| {
                data_err(format!("line {line}, column '{}': '{cell}' is not a number", &headers[col]))
            })?;
            if col == target {
                y.push(v);
            } else {
                x.push(v);
            }
        }
    }
    RegressionDataset::from_flat(x, headers.len() - 1, y).map_err(|e| data_err(e.to_string()))
}

/// An IDX array: dimensions and values converted to `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct IdxArray {
    pub dims: Vec<usize>,
    pub values: Vec<f64>,
    /// Whether the element type was unsigned bytes.
    pub unsigned_bytes: bool,
}

fn take<'a>(bytes: &'a [u8], at: usize, len: usize, what: &str) -> Result<&'a [u8], ExperimentError> {
    bytes
        .get(at..at + len)
        .ok_or_else(|| data_err(format!("truncated IDX data at byte offset {at}: expected {len} bytes of {what}, file has {}", bytes.len())))
}

/// Parses the big-endian IDX layout: two zero bytes, a type code, the number
/// of dimensions, one `u32` per dimension, then the values.
pub fn parse_idx(bytes: &[u8]) -> Result<IdxArray, ExperimentError> {
    let magic = take(bytes, 0, 4, "magic number")?;
    if magic[0] != 0 || magic[1] != 0 {
        return Err(data_err(format!(
            "bad IDX magic at byte offset 0: {:02x}{:02x}",
            magic[0], magic[1]
        )));
    }
    let (code, ndims) = (magic[2], magic[3] as usize);
    let width = match code {
        0x08 | 0x09 => 1,
        0x0B => 2,
        0x0C | 0x0D => 4,
        0x0E => 8,
        other => return Err(data_err(format!("unknown IDX type code 0x{other:02x} at byte offset 2"))),
    };
    if ndims == 0 {
        return Err(data_err("IDX file declares zero dimensions at byte offset 3"));
    }
    let mut dims = Vec::with_capacity(ndims);
    for k in 0..ndims {
        let raw = take(bytes, 4 + 4 * k, 4, "dimension sizes")?;
        dims.push(u32::from_be_bytes(raw.try_into().expect("4 bytes")) as usize);
    }
    let start = 4 + 4 * ndims;
    let count = dims.iter().try_fold(1usize, |a, &d| a.checked_mul(d)).ok_or_else(|| data_err("IDX dimensions overflow"))?;
    let body = take(bytes, start, count * width, "values")?;
    if bytes.len() > start + count * width {
        return Err(data_err(format!("trailing bytes after offset {}", start + count * width)));
    }
    let values = body
        .chunks_exact(width)
        .map(|c| match code {
            0x08 => f64::from(c[0]),
            0x09 => f64::from(c[0] as i8),
            0x0B => f64::from(i16::from_be_bytes([c[0], c[1]])),
            0x0C => f64::from(i32::from_be_bytes([c[0], c[1], c[2], c[3]])),
            0x0D => f64::from(f32::from_be_bytes([c[0], c[1], c[2], c[3]])),
            _ => f64::from_be_bytes(c.try_into().expect("8 bytes")),
        })
        .collect();
    Ok(IdxArray {
        dims,
        values,
        unsigned_bytes: code == 0x08,
    })
}

/// Pairs an IDX image file (`n x rows x cols`, or `n x d`) with an IDX label
/// file of length `n`. Unsigned-byte pixels are rescaled to `[0, 1]`.
pub fn idx_dataset(images: &[u8], labels: &[u8]) -> Result<RegressionDataset, ExperimentError> {
    let img = parse_idx(images)?;
    let lab = parse_idx(labels)?;
    if img.dims.len() < 2 {
        return Err(data_err("image file needs at least two dimensions"));
    }
    if lab.dims.len() != 1 {
        return Err(data_err("label file must be one-dimensional"));
    }
    if img.dims[0] != lab.dims[0] {
        return Err(data_err(format!(
            "image file has {} items but label file has {}",
            img.dims[0], lab.dims[0]
        )));
    }
    let d: usize = img.dims[1..].iter().product();
    let scale = if img.unsigned_bytes { 1.0 / 255.0 } else { 1.0 };
    let x = img.values.into_iter().map(|v| v * scale).collect();
    RegressionDataset::from_flat(x, d, lab.values).map_err(|e| data_err(e.to_string()))
}

pub fn read_idx(images: &Path, labels: &Path) -> Result<RegressionDataset, ExperimentError> {
    let read = |p: &Path| std::fs::read(p).map_err(|e| data_err(format!("{}: {e}", p.display())));
    idx_dataset(&read(images)?, &read(labels)?)
}
