//! Monte Carlo validation: synthetic echoes, a MAP angle estimator and the
//! empirical MSE.
//!
//! The estimator treats the reflection gain as unknown. For fixed `θ` the
//! least-squares gain is
//!
//! ```text
//! α̂(θ) = bᴴ Z a / (N_r aᴴ S a),   Z = Y Xᴴ,  S = X Xᴴ
//! ```
//!
//! and substituting it back leaves the concentrated log posterior
//! `|bᴴ Z a|² / (σ² N_r aᴴ S a) + ln p(θ)`, which is maximized on a grid and
//! then refined by golden section.

use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::array::{steering_rx, steering_tx, ArrayConfig, SceneConfig};
use crate::error::{Error, Result};
use crate::fim::NULL_TOLERANCE;
use crate::optimizer::TransmitDesign;
use crate::prior::GaussianMixturePrior;
use crate::quadrature::golden_section_max;
use crate::{Complex64, ComplexMatrix, ComplexVector};

/// Half-width of each component's search window, in standard deviations.
pub const GRID_HALF_WIDTH_SIGMAS: f64 = 6.0;
/// Grid points per mixture component.
pub const GRID_POINTS_PER_COMPONENT: usize = 400;
/// Bracket width at which golden-section refinement stops, radians.
pub const REFINE_TOLERANCE: f64 = 1e-7;
/// Smallest trial count accepted by [`empirical_mse`].
pub const MIN_TRIALS: usize = 100;

/// One realization of the received block.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    /// `Y`, `n_rx × L`.
    pub y: ComplexMatrix,
    pub theta_true: f64,
    pub alpha_true: Complex64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EstimateResult {
    pub theta_hat: f64,
    pub alpha_hat: Complex64,
    /// Concentrated log posterior at `theta_hat`, up to a constant.
    pub log_posterior: f64,
}

/// Search grid as a list of uniformly sampled segments `(lo, hi, points)`.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    segments: Vec<(f64, f64, usize)>,
}

impl GridSpec {
    pub fn new(segments: Vec<(f64, f64, usize)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(Error::InvalidConfig("grid needs at least one segment"));
        }
        for &(lo, hi, n) in &segments {
            if !(lo.is_finite() && hi.is_finite() && lo < hi) || n < 2 {
                return Err(Error::InvalidConfig("grid segment needs lo < hi and at least two points"));
            }
        }
        Ok(Self { segments })
    }

    /// `±6σ_k` around every component mean, 400 points each.
    pub fn from_prior(prior: &GaussianMixturePrior) -> Self {
        let segments = prior
            .components()
            .iter()
            .map(|c| {
                let half = GRID_HALF_WIDTH_SIGMAS * c.std_dev();
                (c.mean - half, c.mean + half, GRID_POINTS_PER_COMPONENT)
            })
            .collect();
        Self { segments }
    }

    pub fn segments(&self) -> &[(f64, f64, usize)] {
        &self.segments
    }

    pub fn len(&self) -> usize {
        self.segments.iter().map(|s| s.2).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.segments.is_empty()
    }
}

fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, std: f64) -> Complex64 {
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    Complex64::new(std * re, std * im)
}

/// `Y = α b(θ) aᴴ(θ) X + N`, with `N` circularly symmetric Gaussian of
/// per-entry variance `scene.noise_power`. A zero noise power gives the
/// noiseless echo.
pub fn generate<R: Rng + ?Sized>(
    design: &TransmitDesign,
    theta_true: f64,
    scene: &SceneConfig,
    cfg: &ArrayConfig,
    rng: &mut R,
) -> Observation {
    let a = steering_tx(theta_true, cfg);
    let b = steering_rx(theta_true, cfg) * scene.reflection_gain;
    // aᴴX as a 1 × L row
    let beam = a.adjoint() * &design.waveform;
    let mut y = &b * beam;
    let std = libm::sqrt(scene.noise_power / 2.0);
    if std > 0.0 {
        for z in y.iter_mut() {
            *z += complex_gaussian(rng, std);
        }
    }
    Observation {
        y,
        theta_true,
        alpha_true: scene.reflection_gain,
    }
}

/// MAP estimator with the design- and grid-dependent quantities precomputed,
/// so that each trial costs one `Y Xᴴ` product plus a bilinear form per grid
/// point.
#[derive(Debug, Clone)]
pub struct MapEstimator<'a> {
    prior: &'a GaussianMixturePrior,
    cfg: ArrayConfig,
    waveform_adj: ComplexMatrix,
    gram: ComplexMatrix,
    noise_power: f64,
    null_floor: f64,
    /// Union of all segment points, sorted by angle.
    points: Vec<GridPoint>,
}

#[derive(Debug, Clone)]
struct GridPoint {
    theta: f64,
    a: ComplexVector,
    b: ComplexVector,
    /// `aᴴ S a`
    gain: f64,
    ln_prior: f64,
    /// Grid step of the segment this point came from.
    step: f64,
}

impl<'a> MapEstimator<'a> {
    /// `noise_power` is the `σ²` the estimator assumes. With `σ² = 0` the
    /// likelihood dominates any prior and the estimator reduces to maximum
    /// likelihood over the grid.
    pub fn new(
        design: &TransmitDesign,
        prior: &'a GaussianMixturePrior,
        noise_power: f64,
        cfg: &ArrayConfig,
        grid: &GridSpec,
    ) -> Result<Self> {
        cfg.validate()?;
        if design.waveform.nrows() != cfg.n_tx {
            return Err(Error::DimensionMismatch {
                expected: cfg.n_tx,
                got: design.waveform.nrows(),
            });
        }
        if !(noise_power >= 0.0 && noise_power.is_finite()) {
            return Err(Error::InvalidConfig("estimator noise power must be finite and nonnegative"));
        }
        let waveform_adj = design.waveform.adjoint();
        let gram = &design.waveform * &waveform_adj;
        let null_floor = NULL_TOLERANCE * cfg.n_tx as f64 * gram.trace().re.abs();
        let mut points: Vec<GridPoint> = Vec::with_capacity(grid.len());
        for &(lo, hi, n) in grid.segments() {
            let step = (hi - lo) / (n - 1) as f64;
            for i in 0..n {
                let theta = lo + i as f64 * step;
                let a = steering_tx(theta, cfg);
                let gain = a.dotc(&(&gram * &a)).re;
                points.push(GridPoint {
                    theta,
                    b: steering_rx(theta, cfg),
                    a,
                    gain,
                    ln_prior: prior.ln_pdf(theta),
                    step,
                });
            }
        }
        points.sort_by(|x, y| x.theta.total_cmp(&y.theta));
        Ok(Self {
            prior,
            cfg: *cfg,
            waveform_adj,
            gram,
            noise_power,
            null_floor,
            points,
        })
    }

    /// Concentrated log posterior and profiled gain at one angle, or `None`
    /// where the design radiates nothing.
    fn objective(&self, z: &ComplexMatrix, a: &ComplexVector, b: &ComplexVector, gain: f64, ln_prior: f64) -> Option<(f64, Complex64)> {
        if !(gain > self.null_floor) {
            return None;
        }
        let u = b.dotc(&(z * a));
        let nr = self.cfg.n_rx as f64;
        let alpha = u / (nr * gain);
        let fit = u.norm_sqr() / (nr * gain);
        let value = if self.noise_power > 0.0 {
            fit / self.noise_power + ln_prior
        } else {
            fit
        };
        Some((value, alpha))
    }

    /// Concentrated log posterior and least-squares gain of `obs` at one
    /// angle, or `None` if the design radiates nothing toward `theta`.
    pub fn profile(&self, obs: &Observation, theta: f64) -> Option<(f64, Complex64)> {
        self.objective_at(&(&obs.y * &self.waveform_adj), theta)
    }

    fn objective_at(&self, z: &ComplexMatrix, theta: f64) -> Option<(f64, Complex64)> {
        let a = steering_tx(theta, &self.cfg);
        let b = steering_rx(theta, &self.cfg);
        let gain = a.dotc(&(&self.gram * &a)).re;
        self.objective(z, &a, &b, gain, self.prior.ln_pdf(theta))
    }

    pub fn estimate(&self, obs: &Observation) -> Result<EstimateResult> {
        if obs.y.nrows() != self.cfg.n_rx {
            return Err(Error::DimensionMismatch {
                expected: self.cfg.n_rx,
                got: obs.y.nrows(),
            });
        }
        if obs.y.ncols() != self.waveform_adj.nrows() {
            return Err(Error::DimensionMismatch {
                expected: self.waveform_adj.nrows(),
                got: obs.y.ncols(),
            });
        }
        let z = &obs.y * &self.waveform_adj;

        // (index, value, alpha)
        let mut best: Option<(usize, f64, Complex64)> = None;
        for (i, p) in self.points.iter().enumerate() {
            if let Some((v, alpha)) = self.objective(&z, &p.a, &p.b, p.gain, p.ln_prior) {
                if best.is_none_or(|b| v > b.1) {
                    best = Some((i, v, alpha));
                }
            }
        }
        let (i, value, alpha) = best.ok_or(Error::NoCoverage)?;

        // refine between grid neighbours, never across a gap in the grid
        let p = &self.points[i];
        let adjacent = |q: &GridPoint| (q.theta - p.theta).abs() <= p.step.max(q.step) * (1.0 + 1e-9);
        let lo = match i.checked_sub(1).map(|j| &self.points[j]) {
            Some(q) if adjacent(q) => q.theta,
            _ => p.theta,
        };
        let hi = match self.points.get(i + 1) {
            Some(q) if adjacent(q) => q.theta,
            _ => p.theta,
        };
        let (theta, refined) = golden_section_max(lo, hi, REFINE_TOLERANCE, |t| {
            self.objective_at(&z, t).map_or(f64::NEG_INFINITY, |o| o.0)
        });
        if refined > value {
            if let Some((v, a)) = self.objective_at(&z, theta) {
                return Ok(EstimateResult {
                    theta_hat: theta,
                    alpha_hat: a,
                    log_posterior: v,
                });
            }
        }
        Ok(EstimateResult {
            theta_hat: p.theta,
            alpha_hat: alpha,
            log_posterior: value,
        })
    }
}

/// One-shot MAP estimate. Build a [`MapEstimator`] instead when estimating
/// many observations with the same design.
pub fn map_estimate(
    obs: &Observation,
    design: &TransmitDesign,
    prior: &GaussianMixturePrior,
    noise_power: f64,
    cfg: &ArrayConfig,
    grid: &GridSpec,
) -> Result<EstimateResult> {
    MapEstimator::new(design, prior, noise_power, cfg, grid)?.estimate(obs)
}

/// Seed of trial `index` under `master`, independent of execution order.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    // splitmix64 finalizer over a golden-ratio stride
    let mut z = master.wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Squared angle error of trial `index`: draws `θ` from the prior, synthesizes
/// an echo and estimates it.
pub fn mse_trial(
    estimator: &MapEstimator<'_>,
    design: &TransmitDesign,
    scene: &SceneConfig,
    master_seed: u64,
    index: u64,
) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(master_seed, index));
    let theta = estimator.prior.sample(&mut rng);
    let obs = generate(design, theta, scene, &estimator.cfg, &mut rng);
    let est = estimator.estimate(&obs)?;
    let err = est.theta_hat - theta;
    Ok(err * err)
}

/// Mean squared error with its jackknife standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MseEstimate {
    pub mse: f64,
    pub std_err: f64,
    pub trials: usize,
}

/// Jackknife over leave-one-out means of the squared errors.
pub fn summarize_squared_errors(errors: &[f64]) -> MseEstimate {
    let n = errors.len();
    let total: f64 = errors.iter().sum();
    let mse = total / n as f64;
    if n < 2 {
        return MseEstimate {
            mse,
            std_err: f64::INFINITY,
            trials: n,
        };
    }
    let m = (n - 1) as f64;
    let spread: f64 = errors
        .iter()
        .map(|e| {
            let d = (total - e) / m - mse;
            d * d
        })
        .sum();
    MseEstimate {
        mse,
        std_err: libm::sqrt(m / n as f64 * spread),
        trials: n,
    }
}

/// Monte Carlo MSE of the MAP estimator over `n_trials` prior draws, using
/// the default grid and the scene's noise power.
pub fn empirical_mse(
    design: &TransmitDesign,
    prior: &GaussianMixturePrior,
    scene: &SceneConfig,
    cfg: &ArrayConfig,
    n_trials: usize,
    master_seed: u64,
) -> Result<MseEstimate> {
    if n_trials < MIN_TRIALS {
        return Err(Error::InvalidConfig("at least 100 Monte Carlo trials are required"));
    }
    let estimator = MapEstimator::new(design, prior, scene.noise_power, cfg, &GridSpec::from_prior(prior))?;
    let errors = (0..n_trials as u64)
        .map(|i| mse_trial(&estimator, design, scene, master_seed, i))
        .collect::<Result<Vec<f64>>>()?;
    Ok(summarize_squared_errors(&errors))
}
