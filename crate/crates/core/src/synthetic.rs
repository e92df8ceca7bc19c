//! Synthetic populations with known deformations.
//!
//! A template (bull's-eye or blob) is deformed by shooting velocities drawn
//! from the prior, each subject with its own smoothness weight. Every draw
//! is checked for a positive Jacobian determinant and redrawn otherwise.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::Dataset;
use crate::error::{AtlasError, Result};
use crate::fourier_field::{FrequencyLattice, OperatorCoeffs, SpectralVelocity, C64};
use crate::geodesic::{jacobian_determinant, warp_image, DeformationField, ShootingContext};
use crate::grid::{GridShape, Image};
use crate::metrics::{propagate_segmentation, LabelMap};

const BACKGROUND: f64 = 0.1;
/// Ring period and disc radius of the bull's-eye, as fractions of the
/// smallest image side.
const RING_PERIOD: f64 = 0.16;
const RING_OUTER: f64 = 0.36;
const EDGE_WIDTH: f64 = 0.7;
const MAX_REDRAWS: usize = 50;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ShapeFamily {
    /// Concentric rings: central spot (label 2) inside a ringed disc
    /// (label 1).
    BullsEye,
    /// A single Gaussian blob (label 1).
    Blob,
}

impl std::str::FromStr for ShapeFamily {
    type Err = AtlasError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "bullseye" | "bulls-eye" => Ok(ShapeFamily::BullsEye),
            "blob" => Ok(ShapeFamily::Blob),
            _ => Err(AtlasError::invalid("family", format!("unknown shape family `{s}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    pub family: ShapeFamily,
    pub dims: Vec<usize>,
    pub subjects: usize,
    /// Scale applied to every prior draw; 0 gives identical subjects.
    pub magnitude: f64,
    pub seed: u64,
    pub lattice_extent: usize,
    /// Subject weights are log-uniform on this range.
    pub alpha_range: (f64, f64),
    pub time_steps: usize,
    /// Standard deviation of additive Gaussian intensity noise.
    pub noise: f64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            family: ShapeFamily::BullsEye,
            dims: vec![64, 64],
            subjects: 10,
            magnitude: 0.15,
            seed: 1,
            lattice_extent: 15,
            alpha_range: (2.0, 16.0),
            time_steps: crate::geodesic::DEFAULT_STEPS,
            noise: 0.0,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<()> {
        if self.subjects < 2 {
            return Err(AtlasError::invalid("subjects", "need at least two subjects"));
        }
        if !(self.magnitude.is_finite() && self.magnitude >= 0.0) {
            return Err(AtlasError::invalid("magnitude", "must be finite and non-negative"));
        }
        if !(self.noise.is_finite() && self.noise >= 0.0) {
            return Err(AtlasError::invalid("noise", "must be finite and non-negative"));
        }
        let (lo, hi) = self.alpha_range;
        if !(lo > 0.0 && hi >= lo && hi.is_finite()) {
            return Err(AtlasError::invalid("alpha_range", format!("need 0 < lo <= hi, got ({lo}, {hi})")));
        }
        GridShape::new(&self.dims)?;
        Ok(())
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticDataset {
    pub template: Image,
    pub template_seg: LabelMap,
    pub dataset: Dataset,
    pub lattice: FrequencyLattice,
    pub alphas: Vec<f64>,
    pub velocities: Vec<SpectralVelocity>,
    /// `phi_n`, with `I_n = template o phi_n` before noise.
    pub transforms: Vec<DeformationField>,
    pub inverses: Vec<DeformationField>,
}

fn logistic(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Template image and labels centred on the grid.
pub fn template(family: ShapeFamily, shape: &GridShape) -> Result<(Image, LabelMap)> {
    let dims = shape.dims();
    let size = *dims.iter().filter(|&&n| n > 1).min().unwrap_or(&1) as f64;
    let mut data = Vec::with_capacity(shape.len());
    let mut labels = Vec::with_capacity(shape.len());
    for idx in 0..shape.len() {
        let p = shape.unravel(idx);
        let r = dims
            .iter()
            .enumerate()
            .map(|(a, &n)| (p[a] as f64 - (n as f64 - 1.0) / 2.0).powi(2))
            .sum::<f64>()
            .sqrt();
        let (value, label) = match family {
            ShapeFamily::BullsEye => {
                // concentric rings inside a disc; labels mark the central
                // spot and the ringed annulus
                let period = RING_PERIOD * size;
                let (core, outer) = (0.5 * period, RING_OUTER * size);
                let rings = 0.5 + 0.5 * (2.0 * PI * r / period).cos();
                let v = BACKGROUND + 0.8 * logistic((outer - r) / EDGE_WIDTH) * rings;
                (v, if r < core { 2 } else if r < outer { 1 } else { 0 })
            }
            ShapeFamily::Blob => {
                let s = 0.15 * size;
                let v = BACKGROUND + 0.9 * (-0.5 * (r / s).powi(2)).exp();
                (v, u32::from(r < 1.2 * s))
            }
        };
        data.push(value);
        labels.push(label);
    }
    let set = match family {
        ShapeFamily::BullsEye => [0, 1, 2].into(),
        ShapeFamily::Blob => [0, 1].into(),
    };
    Ok((
        Image::new(shape.clone(), data)?,
        LabelMap::with_label_set(shape.clone(), labels, set)?,
    ))
}

/// A draw from the velocity prior: independent complex Gaussians with
/// `E|v(xi)|^2 = 1 / L(xi)^2` per component, Hermitian by construction.
pub fn sample_prior_velocity<R: Rng>(op: &OperatorCoeffs, rng: &mut R) -> SpectralVelocity {
    let lat = op.lattice();
    let mut v = SpectralVelocity::zero_velocity(lat);
    let std = Normal::new(0.0, 1.0).expect("unit normal");
    for comp in v.comps_mut() {
        for idx in 0..lat.len() {
            let mirror = lat.mirror(idx);
            if idx > mirror {
                continue;
            }
            let sd = 1.0 / op.l()[idx];
            if idx == mirror {
                comp[idx] = C64::new(sd * std.sample(rng), 0.0);
            } else {
                let s = sd / 2f64.sqrt();
                let z = C64::new(s * std.sample(rng), s * std.sample(rng));
                comp[idx] = z;
                comp[mirror] = z.conj();
            }
        }
    }
    v
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    spec.validate()?;
    let shape = GridShape::new(&spec.dims)?;
    let lattice = FrequencyLattice::isotropic(spec.lattice_extent, &spec.dims)?;
    let ctx = ShootingContext::new(&lattice, spec.time_steps)?;
    let (tmpl, tmpl_seg) = template(spec.family, &shape)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let noise = Normal::new(0.0, spec.noise).map_err(|e| AtlasError::invalid("noise", e.to_string()))?;
    let (ln_lo, ln_hi) = (spec.alpha_range.0.ln(), spec.alpha_range.1.ln());

    let mut out = SyntheticDataset {
        template: tmpl.clone(),
        template_seg: tmpl_seg.clone(),
        dataset: Dataset {
            names: Vec::new(),
            images: Vec::new(),
            segmentations: Vec::new(),
        },
        lattice: lattice.clone(),
        alphas: Vec::new(),
        velocities: Vec::new(),
        transforms: Vec::new(),
        inverses: Vec::new(),
    };
    for n in 0..spec.subjects {
        let alpha = (ln_lo + (ln_hi - ln_lo) * rng.random::<f64>()).exp();
        let op = ctx.operator(alpha)?;
        let mut accepted = None;
        for _ in 0..MAX_REDRAWS {
            let v = sample_prior_velocity(&op, &mut rng).scaled(spec.magnitude);
            let shot = match ctx.shoot(&v, &op) {
                Ok(s) => s,
                Err(e) if e.is_numeric() => continue,
                Err(e) => return Err(e),
            };
            let phi = ctx.deformation(&shot.displacement)?;
            if jacobian_determinant(&phi).iter().all(|&j| j > 0.0) {
                let phi_inv = ctx.deformation(&ctx.integrate_inverse_flow(&shot.trajectory)?)?;
                accepted = Some((v, phi, phi_inv));
                break;
            }
        }
        let (v, phi, phi_inv) = accepted.ok_or_else(|| {
            AtlasError::invalid(
                "magnitude",
                format!("no diffeomorphic draw for subject {n} in {MAX_REDRAWS} attempts"),
            )
        })?;
        let mut img = warp_image(&tmpl, &phi)?;
        if spec.noise > 0.0 {
            img.data_mut().iter_mut().for_each(|x| *x += noise.sample(&mut rng));
        }
        out.dataset.names.push(format!("subject_{n:02}"));
        out.dataset.images.push(img);
        out.dataset
            .segmentations
            .push(Some(propagate_segmentation(&tmpl_seg, &phi)?));
        out.alphas.push(alpha);
        out.velocities.push(v);
        out.transforms.push(phi);
        out.inverses.push(phi_inv);
    }
    Ok(out)
}
