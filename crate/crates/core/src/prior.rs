//! Gaussian-mixture prior over the target angle.
//!
//! ```text
//! p(θ) = Σ_k p_k N(θ; θ_k, σ_k²)
//! ```
//!
//! Every component must keep its ±8σ window inside `[0, 2π)`, so the mass
//! that would wrap around the circle is negligible and the prior can be
//! treated as a density on the real line.

use alloc::vec::Vec;
use core::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::quadrature::{merge_intervals, simpson_multi, QuadratureSpec};

/// Half-width, in standard deviations, of a component's effective support.
pub const SUPPORT_SIGMAS: f64 = 8.0;

/// Densities below this are treated as zero by the score integrals.
pub const DENSITY_FLOOR: f64 = 1e-300;

const TWO_PI: f64 = 2.0 * PI;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MixtureComponent {
    pub weight: f64,
    pub mean: f64,
    pub variance: f64,
}

impl MixtureComponent {
    pub fn new(weight: f64, mean: f64, variance: f64) -> Self {
        Self {
            weight,
            mean,
            variance,
        }
    }

    pub fn std_dev(&self) -> f64 {
        libm::sqrt(self.variance)
    }

    fn ln_density(&self, theta: f64) -> f64 {
        let d = theta - self.mean;
        libm::log(self.weight) - 0.5 * libm::log(TWO_PI * self.variance) - d * d / (2.0 * self.variance)
    }

    /// `∂/∂θ ln N(θ; θ_k, σ_k²)`.
    fn score(&self, theta: f64) -> f64 {
        -(theta - self.mean) / self.variance
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianMixturePrior {
    components: Vec<MixtureComponent>,
}

/// Prior Fisher information `E[(∂ ln p/∂θ)²]`, and the mixing penalty `ρ`
/// such that `value = Σ p_k/σ_k² - ρ`.
///
/// `value` and `rho` come from two separate integrands, so
/// `value + rho - Σ p_k/σ_k²` measures the quadrature error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PriorFisherResult {
    pub value: f64,
    pub rho: f64,
    pub quad_error_estimate: f64,
}

impl GaussianMixturePrior {
    pub fn new(components: Vec<MixtureComponent>) -> Result<Self> {
        if components.is_empty() {
            return Err(Error::InvalidConfig("prior needs at least one component"));
        }
        let mut total = 0.0;
        for c in &components {
            if !(0.0..=1.0).contains(&c.weight) {
                return Err(Error::InvalidConfig("component weight must lie in [0, 1]"));
            }
            if !(c.variance > 0.0 && c.variance.is_finite()) {
                return Err(Error::InvalidConfig("component variance must be positive"));
            }
            if !(0.0..TWO_PI).contains(&c.mean) {
                return Err(Error::InvalidConfig("component mean must lie in [0, 2π)"));
            }
            let half = SUPPORT_SIGMAS * c.std_dev();
            if c.mean - half < 0.0 || c.mean + half >= TWO_PI {
                return Err(Error::InvalidConfig(
                    "component support (mean ± 8σ) must lie inside [0, 2π)",
                ));
            }
            total += c.weight;
        }
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidConfig("component weights must sum to 1"));
        }
        Ok(Self { components })
    }

    /// Single Gaussian prior.
    pub fn gaussian(mean: f64, variance: f64) -> Result<Self> {
        Self::new(alloc::vec![MixtureComponent::new(1.0, mean, variance)])
    }

    pub fn components(&self) -> &[MixtureComponent] {
        &self.components
    }

    pub fn sigma_min(&self) -> f64 {
        self.components
            .iter()
            .map(MixtureComponent::std_dev)
            .fold(f64::INFINITY, f64::min)
    }

    /// `Σ_k p_k / σ_k²`, the prior information if the components did not mix.
    pub fn information_sum(&self) -> f64 {
        self.components.iter().map(|c| c.weight / c.variance).sum()
    }

    /// Union of `[θ_k - wσ_k, θ_k + wσ_k]`, merged and sorted.
    pub fn support_intervals(&self, half_width_sigmas: f64) -> Vec<(f64, f64)> {
        merge_intervals(
            self.components
                .iter()
                .map(|c| {
                    let h = half_width_sigmas * c.std_dev();
                    (c.mean - h, c.mean + h)
                })
                .collect(),
        )
    }

    pub fn effective_support(&self) -> Vec<(f64, f64)> {
        self.support_intervals(SUPPORT_SIGMAS)
    }

    pub fn pdf(&self, theta: f64) -> f64 {
        self.components
            .iter()
            .filter(|c| c.weight > 0.0)
            .map(|c| libm::exp(c.ln_density(theta)))
            .sum()
    }

    /// `ln p(θ)`, stable far into the tails.
    pub fn ln_pdf(&self, theta: f64) -> f64 {
        let max = self.max_ln_term(theta);
        if max == f64::NEG_INFINITY {
            return max;
        }
        let s: f64 = self
            .components
            .iter()
            .filter(|c| c.weight > 0.0)
            .map(|c| libm::exp(c.ln_density(theta) - max))
            .sum();
        max + libm::log(s)
    }

    fn max_ln_term(&self, theta: f64) -> f64 {
        self.components
            .iter()
            .filter(|c| c.weight > 0.0)
            .map(|c| c.ln_density(theta))
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Posterior component responsibilities `p_k f_k(θ) / p(θ)` into `out`.
    fn responsibilities(&self, theta: f64, out: &mut Vec<f64>) {
        out.clear();
        let max = self.max_ln_term(theta);
        let mut total = 0.0;
        for c in &self.components {
            let r = if c.weight > 0.0 {
                libm::exp(c.ln_density(theta) - max)
            } else {
                0.0
            };
            total += r;
            out.push(r);
        }
        for r in out.iter_mut() {
            *r /= total;
        }
    }

    /// `∂ ln p(θ) / ∂θ`.
    pub fn score(&self, theta: f64) -> Result<f64> {
        if self.pdf(theta) < DENSITY_FLOOR {
            return Err(Error::OutsideSupport { theta });
        }
        let mut resp = Vec::with_capacity(self.components.len());
        self.responsibilities(theta, &mut resp);
        Ok(self
            .components
            .iter()
            .zip(&resp)
            .map(|(c, r)| r * c.score(theta))
            .sum())
    }

    /// Prior Fisher information by composite Simpson over the effective
    /// support. `value` integrates `score² p` and `rho` integrates the
    /// pairwise mixing term
    /// `Σ_{k<l} p_k p_l f_k f_l (u_k - u_l)² / p` with `u_k = (θ-θ_k)/σ_k²`.
    pub fn prior_fisher(&self, quad: &QuadratureSpec) -> Result<PriorFisherResult> {
        let step = self.sigma_min() / quad.simpson_divisor;
        let mut resp = Vec::with_capacity(self.components.len());
        let [value, rho] = simpson_multi(&self.effective_support(), step, |theta| {
            let p = self.pdf(theta);
            if p < DENSITY_FLOOR {
                return [0.0, 0.0];
            }
            self.responsibilities(theta, &mut resp);
            let mut score = 0.0;
            let mut mixing = 0.0;
            for (k, ck) in self.components.iter().enumerate() {
                let uk = ck.score(theta);
                score += resp[k] * uk;
                for (l, cl) in self.components.iter().enumerate().skip(k + 1) {
                    let d = uk - cl.score(theta);
                    mixing += resp[k] * resp[l] * d * d;
                }
            }
            [score * score * p, mixing * p]
        });
        let scale = self.information_sum();
        let estimate = value.error_estimate.max(rho.error_estimate);
        let tolerance = quad.simpson_tolerance * scale;
        if !(estimate <= tolerance) {
            return Err(Error::QuadratureNotConverged {
                estimate: estimate / scale,
                tolerance: quad.simpson_tolerance,
            });
        }
        Ok(PriorFisherResult {
            value: value.value,
            rho: rho.value,
            quad_error_estimate: estimate,
        })
    }

    /// Draws a component by weight, then a Gaussian angle from it.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.sample_with_component(rng).1
    }

    /// Like [`sample`](Self::sample), also returning the drawn component index.
    pub fn sample_with_component<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, f64) {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut chosen = self.components.len() - 1;
        for (k, c) in self.components.iter().enumerate() {
            acc += c.weight;
            if u < acc {
                chosen = k;
                break;
            }
        }
        let c = &self.components[chosen];
        let z: f64 = StandardNormal.sample(rng);
        (chosen, c.mean + c.std_dev() * z)
    }
}
