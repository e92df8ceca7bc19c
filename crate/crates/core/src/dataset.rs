//! A population on disk: a directory of `<name>.grid` scalar images with
//! optional `<name>_seg.grid` label companions. Subdirectories are ignored.

use std::fs;
use std::path::{Path, PathBuf};

use crate::error::{AtlasError, Result};
use crate::gridfile::{read_image, read_labels, write_image, write_labels};
use crate::grid::Image;
use crate::metrics::LabelMap;

const EXT: &str = "grid";
const SEG_SUFFIX: &str = "_seg";

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub names: Vec<String>,
    pub images: Vec<Image>,
    pub segmentations: Vec<Option<LabelMap>>,
}

impl Dataset {
    pub fn len(&self) -> usize {
        self.images.len()
    }

    pub fn is_empty(&self) -> bool {
        self.images.is_empty()
    }

    /// All segmentations, if every image has one.
    pub fn all_segmentations(&self) -> Option<Vec<LabelMap>> {
        self.segmentations.iter().cloned().collect()
    }
}

fn image_stems(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let entries = fs::read_dir(dir).map_err(|e| AtlasError::io(dir, e))?;
    let mut out = Vec::new();
    for entry in entries {
        let path = entry.map_err(|e| AtlasError::io(dir, e))?.path();
        if !path.is_file() || path.extension().and_then(|e| e.to_str()) != Some(EXT) {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        if stem.ends_with(SEG_SUFFIX) {
            continue;
        }
        out.push((stem.to_string(), path));
    }
    out.sort();
    Ok(out)
}

/// Loads every image in `dir` in file-name order. Fails without returning
/// anything if any file is malformed or the grids disagree.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let stems = image_stems(dir)?;
    if stems.is_empty() {
        return Err(AtlasError::Dataset(format!("no images (*.{EXT}) in {}", dir.display())));
    }
    let mut names = Vec::with_capacity(stems.len());
    let mut images = Vec::with_capacity(stems.len());
    let mut segmentations = Vec::with_capacity(stems.len());
    for (stem, path) in stems {
        let img = read_image(&path)?;
        let seg_path = dir.join(format!("{stem}{SEG_SUFFIX}.{EXT}"));
        let seg = if seg_path.is_file() {
            let seg = read_labels(&seg_path)?;
            if seg.shape() != img.shape() {
                return Err(AtlasError::Dataset(format!(
                    "{} is {:?} but its image is {:?}",
                    seg_path.display(),
                    seg.shape().dims(),
                    img.shape().dims()
                )));
            }
            Some(seg)
        } else {
            None
        };
        names.push(stem);
        images.push(img);
        segmentations.push(seg);
    }
    let reference = images[0].shape().dims().to_vec();
    let offenders: Vec<String> = names
        .iter()
        .zip(&images)
        .filter(|(_, im)| im.shape().dims() != reference.as_slice())
        .map(|(n, im)| format!("{n} {:?}", im.shape().dims()))
        .collect();
    if !offenders.is_empty() {
        return Err(AtlasError::Dataset(format!(
            "inconsistent dimensions: {} is {:?}, but {}",
            names[0],
            reference,
            offenders.join(", ")
        )));
    }
    Ok(Dataset {
        names,
        images,
        segmentations,
    })
}

/// Writes images (and segmentations) under `dir`, creating it if needed.
pub fn save_dataset(dir: &Path, data: &Dataset) -> Result<()> {
    if data.names.len() != data.images.len() || data.segmentations.len() != data.images.len() {
        return Err(AtlasError::invalid("dataset", "names, images and segmentations differ in length"));
    }
    fs::create_dir_all(dir).map_err(|e| AtlasError::io(dir, e))?;
    for ((name, img), seg) in data.names.iter().zip(&data.images).zip(&data.segmentations) {
        write_image(&dir.join(format!("{name}.{EXT}")), img)?;
        if let Some(seg) = seg {
            write_labels(&dir.join(format!("{name}{SEG_SUFFIX}.{EXT}")), seg)?;
        }
    }
    Ok(())
}
