//! `run`: estimate an atlas and write every artifact under the output
//! directory.
//!
//! ```text
//! config.toml                     the resolved configuration
//! history.csv                     one row per EM iteration, written live
//! alpha_samples.csv               iteration,subject,draw,alpha
//! checkpoints/iter_NNNN_atlas.grid
//! atlas.grid
//! subjects.csv                    subject,alpha_mean,alpha_sd,accept_rate
//! subjects/<name>_velocity.grid   mean initial velocity, voxels
//! subjects/<name>_phi.grid        phi(x) - x under the mean velocity
//! subjects/<name>_phi_inv.grid
//! sharpness_vs_w.csv              w,image,sharpness,std
//! atlas_seg.grid, dice.csv        only when every image has labels
//! manifest.csv
//! ```

use std::fs;
use std::path::{Path, PathBuf};

use bayes_atlas::dataset::{load_dataset, Dataset};
use bayes_atlas::fourier_field::{spectral_to_spatial, FrequencyLattice};
use bayes_atlas::geodesic::{DeformationField, ShootingContext};
use bayes_atlas::grid::Image;
use bayes_atlas::gridfile::{write_image, write_labels, write_vector};
use bayes_atlas::mcem::{
    check_population, mean_maps, run_mcem, sample_maps, IterationRecord, McemConfig, McemOutcome,
    ModelState,
};
use bayes_atlas::metrics::{atlas_segmentation, dice_per_label, propagate_segmentation, sharpness};
use bayes_atlas::AtlasError;

use crate::config::{ConfigError, RunConfig};
use crate::manifest::{self, Status};
use crate::{csv_writer, CliError, Result};

/// Everything a run needs, loaded and checked.
pub struct Prepared {
    pub dataset: Dataset,
    pub lattice: FrequencyLattice,
    pub mcem: McemConfig,
}

pub fn prepare(cfg: &RunConfig) -> Result<Prepared> {
    let dataset = load_dataset(&cfg.data.dataset)?;
    let dims = dataset.images[0].shape().dims().to_vec();
    let lattice = cfg.lattice(&dims)?;
    check_population(&dataset.images, &lattice)?;
    let smallest = *dims.iter().min().expect("at least one axis");
    if let Some(&w) = cfg.metrics.patch_sizes.iter().find(|&&w| w < 2 || w > smallest) {
        return Err(ConfigError::Invalid(format!(
            "metrics.patch_sizes: {w} does not fit images of {dims:?}"
        ))
        .into());
    }
    let mcem = cfg.mcem_config();
    mcem.validate()?;
    Ok(Prepared {
        dataset,
        lattice,
        mcem,
    })
}

/// One-line description of what a run would do.
pub fn describe(cfg: &RunConfig, p: &Prepared) -> String {
    format!(
        "{} images of {:?}, lattice {:?}, {} EM iterations x {} draws, output {}",
        p.dataset.len(),
        p.dataset.images[0].shape().dims(),
        p.lattice.dims(),
        cfg.em.iterations,
        cfg.hmc.samples,
        cfg.data.output.display()
    )
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub output: PathBuf,
    pub iterations: usize,
    pub converged: bool,
    pub files: usize,
}

/// Live per-iteration output.
struct Progress {
    root: PathBuf,
    names: Vec<String>,
    history: csv::Writer<fs::File>,
    samples: csv::Writer<fs::File>,
}

impl Progress {
    fn start(root: &Path, names: &[String]) -> Result<Self> {
        let checkpoints = root.join("checkpoints");
        fs::create_dir_all(&checkpoints).map_err(|e| CliError::output(&checkpoints, e))?;
        let hpath = root.join("history.csv");
        let mut history = csv_writer(&hpath)?;
        let mut header: Vec<String> = [
            "iteration",
            "q",
            "q_stderr",
            "sigma2",
            "k",
            "beta",
            "mean_accept",
            "stuck_chains",
            "clamped_voxels",
        ]
        .iter()
        .map(|s| s.to_string())
        .collect();
        header.extend(names.iter().map(|n| format!("alpha_{n}")));
        header.extend(names.iter().map(|n| format!("accept_{n}")));
        history.write_record(&header).map_err(|e| CliError::csv(&hpath, e))?;
        let spath = root.join("alpha_samples.csv");
        let mut samples = csv_writer(&spath)?;
        samples
            .write_record(["iteration", "subject", "draw", "alpha"])
            .map_err(|e| CliError::csv(&spath, e))?;
        Ok(Self {
            root: root.to_path_buf(),
            names: names.to_vec(),
            history,
            samples,
        })
    }

    fn record(&mut self, r: &IterationRecord, state: &ModelState) -> Result<()> {
        let hpath = self.root.join("history.csv");
        let mut row = vec![
            r.iteration.to_string(),
            r.q.to_string(),
            r.q_stderr.to_string(),
            r.sigma2.to_string(),
            r.k.to_string(),
            r.beta.to_string(),
            r.mean_accept.to_string(),
            r.stuck_chains.to_string(),
            r.clamped_voxels.to_string(),
        ];
        row.extend(r.mean_alpha.iter().map(|a| a.to_string()));
        row.extend(state.alpha_samples.iter().map(|c| c.accept_rate().to_string()));
        self.history.write_record(&row).map_err(|e| CliError::csv(&hpath, e))?;
        self.history.flush().map_err(|e| CliError::output(&hpath, e))?;

        let spath = self.root.join("alpha_samples.csv");
        for (name, chain) in self.names.iter().zip(&state.alpha_samples) {
            for (j, a) in chain.samples.iter().enumerate() {
                self.samples
                    .write_record([&r.iteration.to_string(), name, &j.to_string(), &a.to_string()])
                    .map_err(|e| CliError::csv(&spath, e))?;
            }
        }
        self.samples.flush().map_err(|e| CliError::output(&spath, e))?;

        let ckpt = self
            .root
            .join("checkpoints")
            .join(format!("iter_{:04}_atlas.grid", r.iteration));
        write_image(&ckpt, &state.atlas)?;
        Ok(())
    }
}

fn write_rows(path: &Path, header: &[&str], rows: &[Vec<String>]) -> Result<()> {
    let mut w = csv_writer(path)?;
    w.write_record(header).map_err(|e| CliError::csv(path, e))?;
    for r in rows {
        w.write_record(r).map_err(|e| CliError::csv(path, e))?;
    }
    w.flush().map_err(|e| CliError::output(path, e))
}

fn sd(x: &[f64]) -> f64 {
    let n = x.len() as f64;
    if x.len() < 2 {
        return 0.0;
    }
    let m = x.iter().sum::<f64>() / n;
    (x.iter().map(|a| (a - m).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn write_results(cfg: &RunConfig, p: &Prepared, outcome: &McemOutcome) -> Result<()> {
    let root = &cfg.data.output;
    let state = &outcome.state;
    let names = &p.dataset.names;
    write_image(&root.join("atlas.grid"), &state.atlas)?;

    let ctx = ShootingContext::new(&p.lattice, p.mcem.time_steps)?;
    let summary = mean_maps(&ctx, state)?;
    let subjects = root.join("subjects");
    fs::create_dir_all(&subjects).map_err(|e| CliError::output(&subjects, e))?;
    for (n, name) in names.iter().enumerate() {
        let v = spectral_to_spatial(&state.mean_velocities[n])?;
        write_vector(&subjects.join(format!("{name}_velocity.grid")), &v)?;
        write_vector(&subjects.join(format!("{name}_phi.grid")), &summary[n].phi.displacement())?;
        write_vector(&subjects.join(format!("{name}_phi_inv.grid")), &summary[n].phi_inv.displacement())?;
    }
    let rows: Vec<Vec<String>> = names
        .iter()
        .zip(&state.alpha_samples)
        .map(|(name, c)| {
            vec![
                name.clone(),
                c.mean().to_string(),
                sd(&c.samples).to_string(),
                c.accept_rate().to_string(),
            ]
        })
        .collect();
    write_rows(&root.join("subjects.csv"), &["subject", "alpha_mean", "alpha_sd", "accept_rate"], &rows)?;

    let mean_img = Image::mean_of(&p.dataset.images)?;
    let mut rows = Vec::new();
    for &w in &cfg.metrics.patch_sizes {
        for (label, img) in [("atlas", &state.atlas), ("mean_image", &mean_img)] {
            let s = sharpness(img, w, cfg.metrics.n_patches, cfg.metrics.seed)?;
            rows.push(vec![w.to_string(), label.to_string(), s.mean.to_string(), s.std.to_string()]);
        }
    }
    write_rows(&root.join("sharpness_vs_w.csv"), &["w", "image", "sharpness", "std"], &rows)?;

    if let Some(segs) = p.dataset.all_segmentations() {
        let inverses: Vec<Vec<DeformationField>> = sample_maps(&ctx, state)?
            .into_iter()
            .map(|m| m.into_iter().map(|s| s.phi_inv).collect())
            .collect();
        let atlas_seg = atlas_segmentation(&segs, &inverses)?;
        write_labels(&root.join("atlas_seg.grid"), &atlas_seg)?;
        let mut rows = Vec::new();
        for ((name, seg), maps) in names.iter().zip(&segs).zip(&summary) {
            let propagated = propagate_segmentation(&atlas_seg, &maps.phi)?;
            for (label, d) in dice_per_label(&propagated, seg)? {
                rows.push(vec![name.clone(), label.to_string(), d.to_string()]);
            }
        }
        write_rows(&root.join("dice.csv"), &["subject", "label", "dice"], &rows)?;
    }
    Ok(())
}

/// Runs the estimation and writes all artifacts. On failure whatever was
/// written stays on disk and the manifest marks it `partial`.
pub fn run(cfg: &RunConfig) -> Result<RunSummary> {
    let p = prepare(cfg)?;
    let root = &cfg.data.output;
    fs::create_dir_all(root).map_err(|e| CliError::output(root, e))?;
    let cpath = root.join("config.toml");
    fs::write(&cpath, cfg.to_toml()).map_err(|e| CliError::output(&cpath, e))?;
    log::info!("{}", describe(cfg, &p));

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.em.workers)
        .build()
        .map_err(|e| ConfigError::Invalid(format!("em.workers: {e}")))?;
    let mut progress = Progress::start(root, &p.dataset.names)?;
    let mut write_error = None;
    let outcome = pool.install(|| {
        run_mcem(&p.dataset.images, &p.lattice, &p.mcem, |record, state| {
            progress.record(record, state).map_err(|e| {
                let msg = e.to_string();
                write_error = Some(e);
                AtlasError::Dataset(msg)
            })
        })
    });
    let result = match outcome {
        Ok(o) => pool.install(|| write_results(cfg, &p, &o)).map(|()| o),
        Err(f) => {
            log::error!("{f}");
            Err(write_error.take().unwrap_or(CliError::Atlas(f.error)))
        }
    };
    let status = if result.is_ok() { Status::Complete } else { Status::Partial };
    let entries = manifest::write(root, status);
    let outcome = result?;
    let entries = entries?;
    if !outcome.converged {
        log::warn!(
            "stopped after {} iterations without meeting tolerance {}",
            outcome.history.records.len(),
            cfg.em.tolerance
        );
    }
    Ok(RunSummary {
        output: root.clone(),
        iterations: outcome.history.records.len(),
        converged: outcome.converged,
        files: entries.len(),
    })
}
