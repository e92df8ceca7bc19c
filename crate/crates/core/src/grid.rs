//! Regular grids: shape bookkeeping plus the scalar and vector images that
//! live on them. Storage is row-major with the last axis fastest.

use crate::error::{AtlasError, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct GridShape {
    dims: Vec<usize>,
}

impl GridShape {
    pub fn new(dims: &[usize]) -> Result<Self> {
        if dims.is_empty() || dims.len() > 3 {
            return Err(AtlasError::invalid(
                "dims",
                format!("expected 1 to 3 axes, got {}", dims.len()),
            ));
        }
        if dims.iter().any(|&n| n == 0) {
            return Err(AtlasError::invalid("dims", "zero-length axis"));
        }
        Ok(Self {
            dims: dims.to_vec(),
        })
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn len(&self) -> usize {
        self.dims.iter().product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn strides(&self) -> Vec<usize> {
        strides_of(&self.dims)
    }

    pub fn unravel(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0usize; 3];
        for axis in (0..self.dims.len()).rev() {
            out[axis] = idx % self.dims[axis];
            idx /= self.dims[axis];
        }
        out
    }

    pub fn ravel(&self, pos: &[usize]) -> usize {
        pos.iter()
            .zip(&self.dims)
            .fold(0, |acc, (&p, &n)| acc * n + p)
    }
}

pub(crate) fn strides_of(dims: &[usize]) -> Vec<usize> {
    let mut strides = vec![1usize; dims.len()];
    for axis in (0..dims.len().saturating_sub(1)).rev() {
        strides[axis] = strides[axis + 1] * dims[axis + 1];
    }
    strides
}

/// Scalar intensity image with voxel spacing.
#[derive(Clone, Debug, PartialEq)]
pub struct Image {
    shape: GridShape,
    spacing: Vec<f64>,
    data: Vec<f64>,
}

impl Image {
    pub fn new(shape: GridShape, data: Vec<f64>) -> Result<Self> {
        let spacing = vec![1.0; shape.ndim()];
        Self::with_spacing(shape, spacing, data)
    }

    pub fn with_spacing(shape: GridShape, spacing: Vec<f64>, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(AtlasError::Shape(format!(
                "image payload has {} values, grid needs {}",
                data.len(),
                shape.len()
            )));
        }
        if spacing.len() != shape.ndim() || spacing.iter().any(|s| !(s.is_finite() && *s > 0.0)) {
            return Err(AtlasError::invalid("spacing", "one positive value per axis"));
        }
        if let Some(i) = data.iter().position(|v| !v.is_finite()) {
            return Err(AtlasError::Domain(format!("non-finite intensity at voxel {i}")));
        }
        Ok(Self {
            shape,
            spacing,
            data,
        })
    }

    pub fn zeros(shape: GridShape) -> Self {
        let n = shape.len();
        let spacing = vec![1.0; shape.ndim()];
        Self {
            shape,
            spacing,
            data: vec![0.0; n],
        }
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub(crate) fn same_grid(&self, other: &Image) -> Result<()> {
        if self.shape != other.shape {
            return Err(AtlasError::Shape(format!(
                "grid {:?} vs {:?}",
                self.shape.dims(),
                other.shape.dims()
            )));
        }
        Ok(())
    }

    /// Sum of squared intensity differences.
    pub fn squared_distance(&self, other: &Image) -> Result<f64> {
        self.same_grid(other)?;
        Ok(self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum())
    }

    /// Voxelwise mean of a non-empty image collection.
    pub fn mean_of(images: &[Image]) -> Result<Image> {
        let first = images
            .first()
            .ok_or_else(|| AtlasError::Dataset("no images to average".into()))?;
        let mut acc = vec![0.0; first.len()];
        for img in images {
            first.same_grid(img)?;
            for (a, v) in acc.iter_mut().zip(&img.data) {
                *a += v;
            }
        }
        let n = images.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        Ok(Image {
            shape: first.shape.clone(),
            spacing: first.spacing.clone(),
            data: acc,
        })
    }
}

/// Real vector field with one component per spatial axis.
#[derive(Clone, Debug, PartialEq)]
pub struct VectorField {
    shape: GridShape,
    comps: Vec<Vec<f64>>,
}

impl VectorField {
    pub fn new(shape: GridShape, comps: Vec<Vec<f64>>) -> Result<Self> {
        if comps.len() != shape.ndim() || comps.iter().any(|c| c.len() != shape.len()) {
            return Err(AtlasError::Shape(format!(
                "vector field needs {} components of {} values",
                shape.ndim(),
                shape.len()
            )));
        }
        Ok(Self { shape, comps })
    }

    pub fn zeros(shape: GridShape) -> Self {
        let comps = vec![vec![0.0; shape.len()]; shape.ndim()];
        Self { shape, comps }
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn comps(&self) -> &[Vec<f64>] {
        &self.comps
    }

    pub fn comps_mut(&mut self) -> &mut [Vec<f64>] {
        &mut self.comps
    }

    pub fn into_comps(self) -> Vec<Vec<f64>> {
        self.comps
    }

    /// Largest Euclidean vector length over the grid.
    pub fn max_norm(&self) -> f64 {
        (0..self.shape.len())
            .map(|i| self.comps.iter().map(|c| c[i] * c[i]).sum::<f64>().sqrt())
            .fold(0.0, f64::max)
    }
}
