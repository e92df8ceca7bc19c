//! Evaluation: patch sharpness of an atlas, Dice overlap, and label
//! propagation through deformations.

use std::collections::{BTreeMap, BTreeSet};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{AtlasError, Result};
use crate::geodesic::DeformationField;
use crate::grid::{GridShape, Image};

/// Integer labels on a grid together with the label set they are drawn from.
#[derive(Clone, Debug, PartialEq)]
pub struct LabelMap {
    shape: GridShape,
    labels: Vec<u32>,
    label_set: BTreeSet<u32>,
}

impl LabelMap {
    /// Label set inferred from the data.
    pub fn new(shape: GridShape, labels: Vec<u32>) -> Result<Self> {
        let set = labels.iter().copied().collect();
        Self::with_label_set(shape, labels, set)
    }

    pub fn with_label_set(shape: GridShape, labels: Vec<u32>, label_set: BTreeSet<u32>) -> Result<Self> {
        if labels.len() != shape.len() {
            return Err(AtlasError::Shape(format!(
                "{} labels for a grid of {} voxels",
                labels.len(),
                shape.len()
            )));
        }
        if let Some(l) = labels.iter().find(|l| !label_set.contains(l)) {
            return Err(AtlasError::invalid("labels", format!("label {l} is not in the label set")));
        }
        Ok(Self {
            shape,
            labels,
            label_set,
        })
    }

    pub fn shape(&self) -> &GridShape {
        &self.shape
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn label_set(&self) -> &BTreeSet<u32> {
        &self.label_set
    }

    pub fn count(&self, label: u32) -> usize {
        self.labels.iter().filter(|&&l| l == label).count()
    }

    fn check_same_grid(&self, other: &LabelMap) -> Result<()> {
        if self.shape != other.shape {
            return Err(AtlasError::Shape(format!(
                "label maps on {:?} and {:?}",
                self.shape.dims(),
                other.shape.dims()
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SharpnessReport {
    pub patch_size: usize,
    /// Patches that produced a score.
    pub n_patches: usize,
    /// Patches dropped because their mean was zero.
    pub skipped: usize,
    pub scores: Vec<f64>,
    pub mean: f64,
    pub std: f64,
}

/// Mean over random `w`-sided patches of `sd / |mean|` (population sd).
/// Patches lie fully inside the image and may overlap.
pub fn sharpness(img: &Image, w: usize, n_patches: usize, seed: u64) -> Result<SharpnessReport> {
    if w < 2 {
        return Err(AtlasError::invalid("patch_size", format!("must be at least 2, got {w}")));
    }
    if n_patches == 0 {
        return Err(AtlasError::invalid("n_patches", "need at least one patch"));
    }
    let dims = img.shape().dims();
    if let Some(&n) = dims.iter().find(|&&n| n < w) {
        return Err(AtlasError::invalid(
            "patch_size",
            format!("patch of side {w} does not fit an axis of {n} voxels"),
        ));
    }
    let d = dims.len();
    let strides = img.shape().strides();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut scores = Vec::with_capacity(n_patches);
    let mut skipped = 0;
    let patch_len = w.pow(d as u32);
    for _ in 0..n_patches {
        let corner: Vec<usize> = dims.iter().map(|&n| rng.random_range(0..=n - w)).collect();
        let (mut sum, mut sum2) = (0.0, 0.0);
        for k in 0..patch_len {
            let mut rem = k;
            let mut idx = 0;
            for axis in (0..d).rev() {
                idx += (corner[axis] + rem % w) * strides[axis];
                rem /= w;
            }
            let x = img.data()[idx];
            sum += x;
            sum2 += x * x;
        }
        let n = patch_len as f64;
        let mean = sum / n;
        if mean.abs() <= f64::EPSILON * (sum2 / n).sqrt() {
            skipped += 1;
            continue;
        }
        let var = (sum2 / n - mean * mean).max(0.0);
        scores.push(var.sqrt() / mean.abs());
    }
    if skipped > 0 {
        log::warn!("sharpness skipped {skipped} zero-mean patches");
    }
    if scores.is_empty() {
        return Err(AtlasError::Numeric("every sampled patch has zero mean".into()));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let std = (scores.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / n).sqrt();
    Ok(SharpnessReport {
        patch_size: w,
        n_patches: scores.len(),
        skipped,
        scores,
        mean,
        std,
    })
}

/// `2 |A n B| / (|A| + |B|)` for one label; 1 when both are empty.
pub fn dice(a: &LabelMap, b: &LabelMap, label: u32) -> Result<f64> {
    a.check_same_grid(b)?;
    let (mut both, mut na, mut nb) = (0usize, 0usize, 0usize);
    for (&x, &y) in a.labels.iter().zip(&b.labels) {
        let (ia, ib) = (x == label, y == label);
        na += ia as usize;
        nb += ib as usize;
        both += (ia && ib) as usize;
    }
    if na + nb == 0 {
        return Ok(1.0);
    }
    Ok(2.0 * both as f64 / (na + nb) as f64)
}

/// Dice for every label in either map.
pub fn dice_per_label(a: &LabelMap, b: &LabelMap) -> Result<Vec<(u32, f64)>> {
    a.label_set
        .union(&b.label_set)
        .map(|&l| Ok((l, dice(a, b, l)?)))
        .collect()
}

/// `seg o phi` by nearest-neighbour lookup, clamped at the boundary.
pub fn propagate_segmentation(seg: &LabelMap, phi: &DeformationField) -> Result<LabelMap> {
    if seg.shape() != phi.shape() {
        return Err(AtlasError::Shape(format!(
            "labels on {:?}, deformation on {:?}",
            seg.shape().dims(),
            phi.shape().dims()
        )));
    }
    let dims = seg.shape().dims();
    let strides = seg.shape().strides();
    let labels = (0..seg.labels.len())
        .map(|idx| {
            let p = phi.position(idx);
            let src: usize = dims
                .iter()
                .enumerate()
                .map(|(a, &n)| (p[a].round().clamp(0.0, (n - 1) as f64) as usize) * strides[a])
                .sum();
            seg.labels[src]
        })
        .collect();
    LabelMap::with_label_set(seg.shape.clone(), labels, seg.label_set.clone())
}

/// Voxelwise most frequent label; ties go to the smaller label.
pub fn majority_vote(maps: &[LabelMap]) -> Result<LabelMap> {
    let first = maps
        .first()
        .ok_or_else(|| AtlasError::invalid("maps", "nothing to vote on"))?;
    for m in &maps[1..] {
        first.check_same_grid(m)?;
    }
    let set: BTreeSet<u32> = maps.iter().flat_map(|m| m.label_set.iter().copied()).collect();
    let mut counts = BTreeMap::new();
    let labels = (0..first.labels.len())
        .map(|idx| {
            counts.clear();
            for m in maps {
                *counts.entry(m.labels[idx]).or_insert(0usize) += 1;
            }
            let best = counts.values().copied().max().unwrap_or(0);
            *counts
                .iter()
                .find(|(_, &c)| c == best)
                .map(|(l, _)| l)
                .expect("at least one map")
        })
        .collect();
    LabelMap::with_label_set(first.shape.clone(), labels, set)
}

/// Atlas-space labels: every subject segmentation pulled back through its
/// inverse maps, then a majority vote.
pub fn atlas_segmentation(segs: &[LabelMap], inverses: &[Vec<DeformationField>]) -> Result<LabelMap> {
    if segs.len() != inverses.len() {
        return Err(AtlasError::invalid("inverses", "need one list of maps per segmentation"));
    }
    let mut pulled = Vec::new();
    for (seg, maps) in segs.iter().zip(inverses) {
        for phi_inv in maps {
            pulled.push(propagate_segmentation(seg, phi_inv)?);
        }
    }
    majority_vote(&pulled)
}
