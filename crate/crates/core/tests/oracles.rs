//! Model quantities checked against direct, independent computations.

mod common;

use std::f64::consts::PI;

use bayes_atlas::bayes_model::{log_hyperprior, log_likelihood, log_prior, GammaHyper, NoiseModel};
use bayes_atlas::fourier_field::{build_operator, laplacian_symbol, FrequencyLattice};
use bayes_atlas::geodesic::DeformationField;
use bayes_atlas::grid::{GridShape, Image};
use bayes_atlas::hmc_sampler::{potential, potential_grad};
use bayes_atlas::special::{digamma, trigamma};
use common::{bumps, lanczos_ln_gamma, random_hermitian, rng};

#[test]
fn likelihood_is_a_sum_of_voxel_gaussians() {
    let shape = GridShape::new(&[6, 5]).unwrap();
    let a = bumps(&shape, 1);
    let b = bumps(&shape, 2);
    let sigma2 = 0.03;
    let noise = NoiseModel::new(sigma2, shape.len()).unwrap();
    let ll = log_likelihood(&a, &b, &DeformationField::identity(&shape), &noise).unwrap();
    let expected: f64 = a
        .data()
        .iter()
        .zip(b.data())
        .map(|(x, y)| {
            let density = (-(x - y).powi(2) / (2.0 * sigma2)).exp() / (2.0 * PI * sigma2).sqrt();
            density.ln()
        })
        .sum();
    assert!((ll - expected).abs() < 1e-10 * expected.abs(), "{ll} vs {expected}");
}

#[test]
fn prior_matches_a_dense_gaussian() {
    // L is diagonal in frequency: its log determinant and quadratic form
    // are built here entry by entry from the raw symbol.
    let lat = FrequencyLattice::new(&[5, 3], &[10, 8]).unwrap();
    let alpha = 0.7;
    let op = build_operator(&lat, alpha).unwrap();
    let v = random_hermitian(&lat, 2, 0.3, &mut rng(5));
    let a = laplacian_symbol(&lat);
    let mut log_det = 0.0;
    let mut quad = 0.0;
    for idx in 0..lat.len() {
        let l = (alpha * a[idx] + 1.0).powi(3);
        log_det += l.ln();
        for c in v.comps() {
            quad += l * l * c[idx].norm_sqr();
        }
    }
    let expected = 0.5 * log_det - 0.5 * quad;
    let got = log_prior(&v, &op).unwrap();
    assert!((got - expected).abs() < 1e-12 * expected.abs().max(1.0), "{got} vs {expected}");
}

#[test]
fn hyperprior_against_lanczos_gamma() {
    let hyper = GammaHyper::new(9.0, 0.1).unwrap();
    let alpha: f64 = 0.9;
    let expected = 8.0 * alpha.ln() - alpha / 0.1 - 9.0 * 0.1f64.ln() - lanczos_ln_gamma(9.0);
    let got = log_hyperprior(alpha, &hyper).unwrap();
    assert!((got - expected).abs() < 1e-12, "{got} vs {expected}");
    // ln Gamma(9) = ln 40320
    assert!((lanczos_ln_gamma(9.0) - 40320f64.ln()).abs() < 1e-12);
}

#[test]
fn hyperprior_is_flat_at_its_mode() {
    let hyper = GammaHyper::new(9.0, 0.1).unwrap();
    let mode = 8.0 * 0.1;
    let h = 1e-5;
    let slope = (log_hyperprior(mode + h, &hyper).unwrap() - log_hyperprior(mode - h, &hyper).unwrap()) / (2.0 * h);
    assert!(slope.abs() < 1e-8, "{slope}");
}

#[test]
fn digamma_against_statrs() {
    for &x in &[0.05, 0.5, 1.0, 1.5, 3.7, 9.0, 42.0, 1e4] {
        let want = statrs::function::gamma::digamma(x);
        assert!((digamma(x) - want).abs() < 1e-10 * want.abs().max(1.0), "x = {x}");
    }
}

#[test]
fn trigamma_is_the_derivative_of_digamma() {
    for &x in &[0.3, 1.0, 2.5, 9.0, 100.0] {
        let h = 1e-5 * x;
        let fd = (digamma(x + h) - digamma(x - h)) / (2.0 * h);
        assert!((trigamma(x) - fd).abs() < 1e-6 * trigamma(x), "x = {x}");
    }
    // trigamma(1) = pi^2 / 6
    assert!((trigamma(1.0) - PI * PI / 6.0).abs() < 1e-12);
}

#[test]
fn potential_is_minus_the_alpha_dependent_log_posterior() {
    // U(a1) - U(a2) must equal the change in -(log prior + log hyperprior)
    let lat = FrequencyLattice::new(&[7, 7], &[16, 16]).unwrap();
    let v = random_hermitian(&lat, 2, 0.01, &mut rng(8));
    let hyper = GammaHyper::new(9.0, 0.1).unwrap();
    let neg_log_post = |a: f64| {
        let op = build_operator(&lat, a).unwrap();
        -(log_prior(&v, &op).unwrap() + log_hyperprior(a, &hyper).unwrap())
    };
    let (a1, a2) = (0.4, 1.3);
    let du = potential(a1, &v, &hyper).unwrap() - potential(a2, &v, &hyper).unwrap();
    let dp = neg_log_post(a1) - neg_log_post(a2);
    assert!((du - dp).abs() < 1e-9 * dp.abs().max(1.0), "{du} vs {dp}");

    let h = 1e-6;
    let fd = (neg_log_post(a1 + h) - neg_log_post(a1 - h)) / (2.0 * h);
    let g = potential_grad(a1, &v, &hyper).unwrap();
    assert!((g - fd).abs() < 1e-5 * fd.abs().max(1.0), "{g} vs {fd}");
}

#[test]
fn image_mean_is_voxelwise() {
    let shape = GridShape::new(&[3, 4]).unwrap();
    let imgs: Vec<Image> = (0..3).map(|s| bumps(&shape, s)).collect();
    let mean = Image::mean_of(&imgs).unwrap();
    for i in 0..shape.len() {
        let m = imgs.iter().map(|im| im.data()[i]).sum::<f64>() / 3.0;
        assert!((mean.data()[i] - m).abs() < 1e-15);
    }
}
