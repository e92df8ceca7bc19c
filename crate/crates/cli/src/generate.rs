//! `generate`: a synthetic population plus its ground truth.
//!
//! ```text
//! <out>/subject_NN.grid, subject_NN_seg.grid   the dataset
//! <out>/truth/template.grid, template_seg.grid
//! <out>/truth/subject_NN_velocity.grid         initial velocity, voxels
//! <out>/truth/subject_NN_phi.grid              phi(x) - x
//! <out>/truth/subject_NN_phi_inv.grid          phi^-1(x) - x
//! <out>/truth/alphas.csv                       subject,alpha
//! ```

use std::fs;
use std::path::Path;

use bayes_atlas::dataset::save_dataset;
use bayes_atlas::fourier_field::spectral_to_spatial;
use bayes_atlas::gridfile::{write_image, write_labels, write_vector};
use bayes_atlas::synthetic::{generate_synthetic, SyntheticDataset, SyntheticSpec};

use crate::{csv_writer, CliError, Result};

pub fn write_synthetic(out: &Path, syn: &SyntheticDataset) -> Result<()> {
    save_dataset(out, &syn.dataset)?;
    let truth = out.join("truth");
    fs::create_dir_all(&truth).map_err(|e| CliError::output(&truth, e))?;
    write_image(&truth.join("template.grid"), &syn.template)?;
    write_labels(&truth.join("template_seg.grid"), &syn.template_seg)?;
    for (n, name) in syn.dataset.names.iter().enumerate() {
        let v = spectral_to_spatial(&syn.velocities[n])?;
        write_vector(&truth.join(format!("{name}_velocity.grid")), &v)?;
        write_vector(&truth.join(format!("{name}_phi.grid")), &syn.transforms[n].displacement())?;
        write_vector(&truth.join(format!("{name}_phi_inv.grid")), &syn.inverses[n].displacement())?;
    }
    let path = truth.join("alphas.csv");
    let mut w = csv_writer(&path)?;
    let err = |e| CliError::csv(&path, e);
    w.write_record(["subject", "alpha"]).map_err(err)?;
    for (name, a) in syn.dataset.names.iter().zip(&syn.alphas) {
        w.write_record([name.as_str(), &a.to_string()]).map_err(err)?;
    }
    w.flush().map_err(|e| CliError::output(&path, e))
}

pub fn generate(out: &Path, spec: &SyntheticSpec) -> Result<SyntheticDataset> {
    let syn = generate_synthetic(spec)?;
    write_synthetic(out, &syn)?;
    log::info!(
        "wrote {} subjects of {:?} to {}",
        syn.dataset.len(),
        spec.dims,
        out.display()
    );
    Ok(syn)
}
