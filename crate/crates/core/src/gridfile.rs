//! `.grid` files: a small little-endian container for scalar images, vector
//! fields and label maps.
//!
//! ```text
//! offset  size     field
//! 0       4        magic "GRID"
//! 4       2        version (u16) = 1
//! 6       1        dtype (u8): 0 scalar, 1 vector, 2 label
//! 7       1        d (u8), 1..=3
//! 8       4 d      dims (u32 each)
//! 8+4d    4 d      spacing (f32 each)
//! 8+8d    4 n      payload (f32), row-major with the last axis fastest;
//!                  vector fields store all of component 0, then 1, ...
//! ```
//!
//! `n` is `prod(dims)`, times `d` for vector fields. Label values are stored
//! as exact small integers in f32.

use std::fs;
use std::path::Path;

use crate::error::{AtlasError, Result};
use crate::grid::{GridShape, Image, VectorField};
use crate::metrics::LabelMap;

pub const MAGIC: &[u8; 4] = b"GRID";
pub const VERSION: u16 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
#[repr(u8)]
pub enum DType {
    Scalar = 0,
    Vector = 1,
    Label = 2,
}

/// Largest integer label that f32 holds exactly.
const MAX_LABEL: u32 = 1 << 24;

/// Decoded file contents.
#[derive(Clone, Debug, PartialEq)]
pub enum GridData {
    Scalar(Image),
    Vector { field: VectorField, spacing: Vec<f64> },
    Label { labels: LabelMap, spacing: Vec<f64> },
}

impl GridData {
    pub fn dtype(&self) -> DType {
        match self {
            GridData::Scalar(_) => DType::Scalar,
            GridData::Vector { .. } => DType::Vector,
            GridData::Label { .. } => DType::Label,
        }
    }

    pub fn shape(&self) -> &GridShape {
        match self {
            GridData::Scalar(im) => im.shape(),
            GridData::Vector { field, .. } => field.shape(),
            GridData::Label { labels, .. } => labels.shape(),
        }
    }
}

pub fn encode(data: &GridData) -> Vec<u8> {
    let shape = data.shape();
    let d = shape.ndim();
    let (spacing, payload): (&[f64], Vec<f32>) = match data {
        GridData::Scalar(im) => (im.spacing(), im.data().iter().map(|&x| x as f32).collect()),
        GridData::Vector { field, spacing } => (
            spacing,
            field.comps().iter().flatten().map(|&x| x as f32).collect(),
        ),
        GridData::Label { labels, spacing } => {
            (spacing, labels.labels().iter().map(|&l| l as f32).collect())
        }
    };
    let mut out = Vec::with_capacity(8 + 8 * d + 4 * payload.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(data.dtype() as u8);
    out.push(d as u8);
    for &n in shape.dims() {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    for &s in spacing {
        out.extend_from_slice(&(s as f32).to_le_bytes());
    }
    for x in payload {
        out.extend_from_slice(&x.to_le_bytes());
    }
    out
}

/// Parses a buffer; `path` only labels errors.
pub fn decode(bytes: &[u8], path: &Path) -> Result<GridData> {
    let bad = |reason: String| AtlasError::GridFormat {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < 8 {
        return Err(bad(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(bad(format!("bad magic {:?}", &bytes[..4])));
    }
    let version = u16::from_le_bytes([bytes[4], bytes[5]]);
    if version != VERSION {
        return Err(bad(format!("unsupported version {version}")));
    }
    let dtype = match bytes[6] {
        0 => DType::Scalar,
        1 => DType::Vector,
        2 => DType::Label,
        t => return Err(bad(format!("unknown dtype tag {t}"))),
    };
    let d = bytes[7] as usize;
    if !(1..=3).contains(&d) {
        return Err(bad(format!("dimension {d} outside 1..=3")));
    }
    let header = 8 + 8 * d;
    if bytes.len() < header {
        return Err(bad("truncated header".into()));
    }
    let word = |i: usize| -> [u8; 4] { bytes[i..i + 4].try_into().expect("4-byte slice") };
    let dims: Vec<usize> = (0..d).map(|a| u32::from_le_bytes(word(8 + 4 * a)) as usize).collect();
    let spacing: Vec<f64> = (0..d)
        .map(|a| f32::from_le_bytes(word(8 + 4 * d + 4 * a)) as f64)
        .collect();
    let shape = GridShape::new(&dims).map_err(|e| bad(e.to_string()))?;
    let count = shape.len() * if dtype == DType::Vector { d } else { 1 };
    let expected = header + 4 * count;
    if bytes.len() != expected {
        return Err(bad(format!(
            "payload holds {} bytes, dims {:?} need {}",
            bytes.len() - header,
            dims,
            expected - header
        )));
    }
    let values: Vec<f32> = (0..count).map(|i| f32::from_le_bytes(word(header + 4 * i))).collect();
    let wrap = |r: Result<GridData>| r.map_err(|e| bad(e.to_string()));
    match dtype {
        DType::Scalar => wrap(
            Image::with_spacing(shape, spacing, values.into_iter().map(f64::from).collect())
                .map(GridData::Scalar),
        ),
        DType::Vector => {
            let comps = values
                .chunks(shape.len())
                .map(|c| c.iter().map(|&x| x as f64).collect())
                .collect();
            wrap(VectorField::new(shape, comps).map(|field| GridData::Vector { field, spacing }))
        }
        DType::Label => {
            let mut labels = Vec::with_capacity(count);
            for x in values {
                if !(x >= 0.0 && x.fract() == 0.0 && x <= MAX_LABEL as f32) {
                    return Err(bad(format!("label value {x} is not a small non-negative integer")));
                }
                labels.push(x as u32);
            }
            wrap(LabelMap::new(shape, labels).map(|labels| GridData::Label { labels, spacing }))
        }
    }
}

pub fn write_grid(path: &Path, data: &GridData) -> Result<()> {
    fs::write(path, encode(data)).map_err(|e| AtlasError::io(path, e))
}

pub fn read_grid(path: &Path) -> Result<GridData> {
    let bytes = fs::read(path).map_err(|e| AtlasError::io(path, e))?;
    decode(&bytes, path)
}

pub fn write_image(path: &Path, img: &Image) -> Result<()> {
    write_grid(path, &GridData::Scalar(img.clone()))
}

pub fn read_image(path: &Path) -> Result<Image> {
    match read_grid(path)? {
        GridData::Scalar(im) => Ok(im),
        other => Err(AtlasError::GridFormat {
            path: path.to_path_buf(),
            reason: format!("expected a scalar image, found {:?} data", other.dtype()),
        }),
    }
}

pub fn write_labels(path: &Path, labels: &LabelMap) -> Result<()> {
    write_grid(
        path,
        &GridData::Label {
            labels: labels.clone(),
            spacing: vec![1.0; labels.shape().ndim()],
        },
    )
}

pub fn read_labels(path: &Path) -> Result<LabelMap> {
    match read_grid(path)? {
        GridData::Label { labels, .. } => Ok(labels),
        other => Err(AtlasError::GridFormat {
            path: path.to_path_buf(),
            reason: format!("expected a label map, found {:?} data", other.dtype()),
        }),
    }
}

pub fn write_vector(path: &Path, field: &VectorField) -> Result<()> {
    write_grid(
        path,
        &GridData::Vector {
            field: field.clone(),
            spacing: vec![1.0; field.shape().ndim()],
        },
    )
}

pub fn read_vector(path: &Path) -> Result<VectorField> {
    match read_grid(path)? {
        GridData::Vector { field, .. } => Ok(field),
        other => Err(AtlasError::GridFormat {
            path: path.to_path_buf(),
            reason: format!("expected a vector field, found {:?} data", other.dtype()),
        }),
    }
}
