//! Random inputs for the property suites: feasible transmit covariances and
//! valid mixture priors.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::prior::{GaussianMixturePrior, MixtureComponent, SUPPORT_SIGMAS};
use crate::{Complex64, ComplexMatrix};

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(re, im)
}

/// `B B^H` for an `n × rank` complex Gaussian `B`, rescaled to trace `trace`.
pub fn random_psd<R: Rng + ?Sized>(rng: &mut R, n: usize, rank: usize, trace: f64) -> ComplexMatrix {
    let b = ComplexMatrix::from_fn(n, rank, |_, _| complex_gaussian(rng));
    let mut r = &b * b.adjoint();
    let t = r.trace().re;
    r *= Complex64::new(trace / t, 0.0);
    hermitize(&mut r);
    r
}

/// Random feasible covariance: rank uniform in `1..=n`, trace uniform in
/// `(0, power]`.
pub fn random_feasible_covariance<R: Rng + ?Sized>(rng: &mut R, n: usize, power: f64) -> ComplexMatrix {
    let rank = rng.random_range(1..=n);
    let trace = power * (1.0 - rng.random::<f64>());
    random_psd(rng, n, rank, trace)
}

/// Random covariance of rank at least two. Such designs have no exact null
/// direction, which keeps the average-CRB integrand finite.
pub fn random_spread_covariance<R: Rng + ?Sized>(rng: &mut R, n: usize, power: f64) -> ComplexMatrix {
    let rank = rng.random_range(2.min(n)..=n);
    let trace = power * (1.0 - rng.random::<f64>());
    random_psd(rng, n, rank, trace)
}

/// Random valid mixture with `k` components: standard deviations in
/// `[0.005, 0.05]` rad, means anywhere that keeps the ±8σ window in `[0, 2π)`.
pub fn random_mixture<R: Rng + ?Sized>(rng: &mut R, k: usize) -> GaussianMixturePrior {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    let components = raw
        .iter()
        .map(|w| {
            let sigma: f64 = rng.random_range(0.005..0.05);
            let margin = SUPPORT_SIGMAS * sigma + 1e-3;
            let mean = rng.random_range(margin..(2.0 * PI - margin));
            MixtureComponent::new(w / total, mean, sigma * sigma)
        })
        .collect();
    GaussianMixturePrior::new(components).expect("generated mixture is valid")
}

/// Forces exact Hermitian symmetry by averaging with the adjoint.
pub fn hermitize(m: &mut ComplexMatrix) {
    let adj = m.adjoint();
    *m += adj;
    *m *= Complex64::new(0.5, 0.0);
}
