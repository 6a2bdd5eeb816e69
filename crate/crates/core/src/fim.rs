//! Fisher information for the angle `θ` with nuisance reflection gain
//! `α = α_R + jα_I`, and the resulting bounds.
//!
//! All observation information is linear in the transmit covariance `R` and
//! only reaches the prior through four steering moments
//!
//! ```text
//! A1 = E[‖ḃ‖² a aᴴ]    A2 = E[ȧ ȧᴴ]    A3 = E[ȧ aᴴ]    A4 = E[a aᴴ]
//! ```
//!
//! With `c = σ²/(2|α|²L)` and `t_i = tr(A_i R)`:
//!
//! ```text
//! PCRB   = c / (c·F_p + t1 + N_r·t2 - N_r·|t3|²/t4)
//! PCRB_U = c / (c·F_p + t1)
//! CRB(θ) = c / (‖ḃ(θ)‖² · aᴴ(θ) R a(θ))
//! ```
//!
//! and `E[CRB(θ)] ≥ PCRB_U ≥ PCRB`.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::Matrix3;

use crate::array::{beam_gain, rx_deriv_norm_sq, steering_rx_deriv, steering_tx, steering_tx_deriv, ArrayConfig, SceneConfig};
use crate::error::{Error, Result};
use crate::prior::{GaussianMixturePrior, DENSITY_FLOOR};
use crate::quadrature::{golden_section_max, simpson_multi, GaussHermite, QuadratureSpec};
use crate::random::hermitize;
use crate::{Complex64, ComplexMatrix};

/// Relative slack on the Hermitian, PSD and power checks of a covariance.
pub const COVARIANCE_TOLERANCE: f64 = 1e-9;

/// Sample count `L` and transmit power budget `P` (watts).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RunConfig {
    pub num_samples: usize,
    pub power: f64,
}

impl RunConfig {
    pub fn new(num_samples: usize, power: f64) -> Result<Self> {
        let run = Self { num_samples, power };
        run.validate()?;
        Ok(run)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_samples == 0 {
            return Err(Error::InvalidConfig("num_samples must be at least 1"));
        }
        if !(self.power > 0.0 && self.power.is_finite()) {
            return Err(Error::InvalidConfig("power must be positive"));
        }
        Ok(())
    }
}

/// Receive SNR `P|α|²L/σ²`.
pub fn snr(scene: &SceneConfig, run: &RunConfig) -> f64 {
    run.power * scene.gain_sq() * run.num_samples as f64 / scene.noise_power
}

/// `σ²/(2|α|²L)`, the common numerator of every bound.
pub fn noise_scale(scene: &SceneConfig, run: &RunConfig) -> f64 {
    scene.noise_power / (2.0 * scene.gain_sq() * run.num_samples as f64)
}

/// Prior-weighted steering moments.
#[derive(Debug, Clone, PartialEq)]
pub struct SpectralMoments {
    pub a1: ComplexMatrix,
    pub a2: ComplexMatrix,
    pub a3: ComplexMatrix,
    pub a4: ComplexMatrix,
    /// Receive antenna count the moments were built for (`A1` depends on it).
    pub n_rx: usize,
    /// Largest relative Frobenius change between the working and the
    /// reference Gauss-Hermite rule.
    pub quad_error_estimate: f64,
}

/// `tr(A_i R)` for the four moments.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentTraces {
    pub t1: f64,
    pub t2: f64,
    pub t3: Complex64,
    pub t4: f64,
}

/// `tr(A B)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> Complex64 {
    let n = a.nrows();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..n {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc
}

fn moments_with_rule(prior: &GaussianMixturePrior, cfg: &ArrayConfig, rule: &GaussHermite) -> [ComplexMatrix; 4] {
    let n = cfg.n_tx;
    let mut acc: [ComplexMatrix; 4] = core::array::from_fn(|_| ComplexMatrix::zeros(n, n));
    for comp in prior.components().iter().filter(|c| c.weight > 0.0) {
        for (theta, w) in rule.gaussian_points(comp.mean, comp.variance) {
            let weight = comp.weight * w;
            let a = steering_tx(theta, cfg);
            let ad = steering_tx_deriv(theta, cfg);
            let bd_sq = steering_rx_deriv(theta, cfg).norm_squared();
            let aa = &a * a.adjoint();
            acc[0] += &aa * Complex64::new(weight * bd_sq, 0.0);
            acc[1] += (&ad * ad.adjoint()) * Complex64::new(weight, 0.0);
            acc[2] += (&ad * a.adjoint()) * Complex64::new(weight, 0.0);
            acc[3] += aa * Complex64::new(weight, 0.0);
        }
    }
    for i in [0, 1, 3] {
        hermitize(&mut acc[i]);
    }
    acc
}

fn relative_change(working: &ComplexMatrix, reference: &ComplexMatrix) -> f64 {
    let diff = (working - reference).norm();
    let scale = reference.norm();
    if scale > 0.0 {
        diff / scale
    } else {
        diff
    }
}

/// Moments by per-component Gauss-Hermite quadrature. The working rule is
/// checked against the larger reference rule of `quad`.
pub fn compute_moments(prior: &GaussianMixturePrior, cfg: &ArrayConfig, quad: &QuadratureSpec) -> Result<SpectralMoments> {
    cfg.validate()?;
    let working = moments_with_rule(prior, cfg, &GaussHermite::new(quad.hermite_nodes));
    let reference = moments_with_rule(prior, cfg, &GaussHermite::new(quad.hermite_check_nodes));
    let estimate = working
        .iter()
        .zip(&reference)
        .map(|(w, r)| relative_change(w, r))
        .fold(0.0, f64::max);
    if !(estimate <= quad.moment_tolerance) {
        return Err(Error::QuadratureNotConverged {
            estimate,
            tolerance: quad.moment_tolerance,
        });
    }
    let [a1, a2, a3, a4] = working;
    Ok(SpectralMoments {
        a1,
        a2,
        a3,
        a4,
        n_rx: cfg.n_rx,
        quad_error_estimate: estimate,
    })
}

impl SpectralMoments {
    pub fn n_tx(&self) -> usize {
        self.a1.nrows()
    }

    pub fn traces(&self, r_x: &ComplexMatrix) -> MomentTraces {
        MomentTraces {
            t1: trace_product(&self.a1, r_x).re,
            t2: trace_product(&self.a2, r_x).re,
            t3: trace_product(&self.a3, r_x),
            t4: trace_product(&self.a4, r_x).re,
        }
    }
}

/// Checks that `r_x` is an `n × n` Hermitian PSD matrix within the power
/// budget.
pub fn validate_covariance(r_x: &ComplexMatrix, n: usize, power: f64) -> Result<()> {
    if r_x.nrows() != n || r_x.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: if r_x.nrows() != n { r_x.nrows() } else { r_x.ncols() },
        });
    }
    let scale = r_x.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let asym = (r_x - r_x.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if asym > COVARIANCE_TOLERANCE * scale.max(f64::MIN_POSITIVE) {
        return Err(Error::NotHermitian(asym));
    }
    let trace = r_x.trace().re;
    if trace > power * (1.0 + COVARIANCE_TOLERANCE) {
        return Err(Error::PowerExceeded { trace, power });
    }
    if n > 0 && scale > 0.0 {
        let mut sym = r_x.clone();
        hermitize(&mut sym);
        let min = sym.symmetric_eigenvalues().min();
        if min < -COVARIANCE_TOLERANCE * trace.abs().max(scale) {
            return Err(Error::NotPsd(min));
        }
    }
    Ok(())
}

/// Blocks of the total Fisher information over `ζ = [θ, α_R, α_I]`:
///
/// ```text
/// F = [ j_tt + fp11   j_ta          ]
///     [ j_taᵀ         j_aa · I₂     ]
/// ```
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FimBlocks {
    pub j_tt: f64,
    pub j_ta: [f64; 2],
    pub j_aa_scalar: f64,
    pub fp11: f64,
}

impl FimBlocks {
    /// The full real 3×3 Fisher matrix.
    pub fn assembled(&self) -> Matrix3<f64> {
        let [u, v] = self.j_ta;
        Matrix3::new(
            self.j_tt + self.fp11, u, v, //
            u, self.j_aa_scalar, 0.0, //
            v, 0.0, self.j_aa_scalar,
        )
    }
}

/// Observation Fisher blocks for covariance `r_x`, plus the prior term
/// `fp11`.
///
/// `tr(A3 R)` is complex; its real part couples `θ` to the `[α_R, α_I]`
/// direction and its imaginary part to `[α_I, -α_R]`, so `‖j_ta‖²` carries the
/// full `|tr(A3 R)|²`.
pub fn fim_observation(
    m: &SpectralMoments,
    r_x: &ComplexMatrix,
    scene: &SceneConfig,
    run: &RunConfig,
    fp11: f64,
) -> Result<FimBlocks> {
    validate_covariance(r_x, m.n_tx(), run.power)?;
    Ok(fim_blocks_unchecked(m, r_x, scene, run, fp11))
}

fn fim_blocks_unchecked(m: &SpectralMoments, r_x: &ComplexMatrix, scene: &SceneConfig, run: &RunConfig, fp11: f64) -> FimBlocks {
    let t = m.traces(r_x);
    let n_rx = m.n_rx as f64;
    let k = 2.0 * run.num_samples as f64 / scene.noise_power;
    let alpha = scene.reflection_gain;
    let coupling = k * n_rx;
    FimBlocks {
        j_tt: k * scene.gain_sq() * (t.t1 + n_rx * t.t2),
        j_ta: [
            coupling * (t.t3.re * alpha.re + t.t3.im * alpha.im),
            coupling * (t.t3.re * alpha.im - t.t3.im * alpha.re),
        ],
        j_aa_scalar: coupling * t.t4,
        fp11,
    }
}

/// Angle PCRB `[F⁻¹]₁₁ = 1/S`, with `S` the Schur complement of the gain
/// block. A zero gain block with zero coupling contributes nothing.
pub fn pcrb_exact(blocks: &FimBlocks) -> Result<f64> {
    let [u, v] = blocks.j_ta;
    let coupling_sq = u * u + v * v;
    let schur_term = if blocks.j_aa_scalar > 0.0 {
        coupling_sq / blocks.j_aa_scalar
    } else if coupling_sq == 0.0 {
        0.0
    } else {
        return Err(Error::SingularFisher);
    };
    let s = blocks.j_tt + blocks.fp11 - schur_term;
    if !(s > 0.0) {
        return Err(Error::SingularFisher);
    }
    Ok(1.0 / s)
}

/// Tractable upper bound `c / (c·fp11 + tr(A1 R))`.
pub fn pcrb_upper(m: &SpectralMoments, r_x: &ComplexMatrix, scene: &SceneConfig, run: &RunConfig, fp11: f64) -> Result<f64> {
    validate_covariance(r_x, m.n_tx(), run.power)?;
    Ok(pcrb_upper_from_trace(trace_product(&m.a1, r_x).re, scene, run, fp11))
}

/// [`pcrb_upper`] from a precomputed `tr(A1 R)`.
pub fn pcrb_upper_from_trace(t1: f64, scene: &SceneConfig, run: &RunConfig, fp11: f64) -> f64 {
    let c = noise_scale(scene, run);
    let denom = c * fp11 + t1;
    if denom > 0.0 {
        c / denom
    } else {
        f64::INFINITY
    }
}

/// Beam gains at or below `NULL_TOLERANCE · n_tx · tr(R)` count as nulls.
pub const NULL_TOLERANCE: f64 = 1e-15;

fn null_floor(r_x: &ComplexMatrix, cfg: &ArrayConfig) -> f64 {
    NULL_TOLERANCE * cfg.n_tx as f64 * r_x.trace().re.abs()
}

/// Angle of an exact beam null inside the prior's effective support, if any.
///
/// Scans `aᴴRa` on a grid of step `step` and refines every local minimum by
/// golden section. Near a null the gain is quadratic in `θ - θ₀`, so the
/// per-angle CRB is not integrable against any density positive there.
pub fn beam_null_in_support(prior: &GaussianMixturePrior, r_x: &ComplexMatrix, cfg: &ArrayConfig, step: f64) -> Option<f64> {
    let floor = null_floor(r_x, cfg);
    for (lo, hi) in prior.effective_support() {
        let n = (libm::ceil((hi - lo) / step) as usize).max(2);
        let h = (hi - lo) / n as f64;
        let gains: Vec<f64> = (0..=n).map(|i| beam_gain(lo + i as f64 * h, r_x, cfg)).collect();
        for i in 0..=n {
            let left = if i > 0 { gains[i - 1] } else { f64::INFINITY };
            let right = if i < n { gains[i + 1] } else { f64::INFINITY };
            if gains[i] > left || gains[i] > right {
                continue;
            }
            let a = lo + i.saturating_sub(1) as f64 * h;
            let b = lo + (i + 1).min(n) as f64 * h;
            let (theta, neg) = golden_section_max(a, b, 1e-13, |t| -beam_gain(t, r_x, cfg));
            if -neg <= floor && prior.pdf(theta) >= DENSITY_FLOOR {
                return Some(theta);
            }
        }
    }
    None
}

/// Per-angle CRB without prior information.
///
/// The denominator keeps only the `‖ḃ‖² aᴴRa` term, which is exact for
/// rank-one `R` and an upper bound on the per-angle CRB otherwise. Returns
/// `+∞` where the receive derivative or the beam gain vanishes.
pub fn crb_at(theta: f64, r_x: &ComplexMatrix, scene: &SceneConfig, run: &RunConfig, cfg: &ArrayConfig) -> f64 {
    let cos = libm::cos(theta);
    // |cos θ| below 1e-14 is endfire up to rounding of θ
    if cos * cos < 1e-28 {
        return f64::INFINITY;
    }
    let bd_sq = rx_deriv_norm_sq(theta, cfg);
    let gain = beam_gain(theta, r_x, cfg);
    if !(gain > null_floor(r_x, cfg)) {
        return f64::INFINITY;
    }
    noise_scale(scene, run) / (bd_sq * gain)
}

/// Extra step halvings `crb_average` may take when a sharp but finite beam
/// minimum keeps the default grid from converging.
pub const MAX_STEP_HALVINGS: usize = 8;

/// `E_θ[CRB(θ)]` by composite Simpson over the prior's effective support.
///
/// Returns `+∞` when the support contains endfire or an exact beam null,
/// where the integrand has a non-integrable singularity.
pub fn crb_average(
    prior: &GaussianMixturePrior,
    r_x: &ComplexMatrix,
    scene: &SceneConfig,
    run: &RunConfig,
    cfg: &ArrayConfig,
    quad: &QuadratureSpec,
) -> Result<f64> {
    let step = prior.sigma_min() / quad.simpson_divisor;
    let endfire = [PI / 2.0, 3.0 * PI / 2.0];
    if prior
        .effective_support()
        .iter()
        .any(|&(lo, hi)| endfire.iter().any(|&t| lo <= t && t <= hi && prior.pdf(t) >= DENSITY_FLOOR))
    {
        return Ok(f64::INFINITY);
    }
    if beam_null_in_support(prior, r_x, cfg, step / 2.0).is_some() {
        return Ok(f64::INFINITY);
    }
    let support = prior.effective_support();
    let mut step = step;
    let mut last = 0.0;
    for _ in 0..=MAX_STEP_HALVINGS {
        let mut infinite = false;
        let [avg] = simpson_multi(&support, step, |theta| {
            let p = prior.pdf(theta);
            if infinite || p < DENSITY_FLOOR {
                return [0.0];
            }
            let crb = crb_at(theta, r_x, scene, run, cfg);
            if crb.is_infinite() {
                infinite = true;
                return [0.0];
            }
            [crb * p]
        });
        if infinite {
            return Ok(f64::INFINITY);
        }
        if avg.error_estimate <= quad.simpson_tolerance * avg.value {
            return Ok(avg.value);
        }
        last = avg.error_estimate / avg.value;
        step /= 2.0;
    }
    Err(Error::QuadratureNotConverged {
        estimate: last,
        tolerance: quad.simpson_tolerance,
    })
}

/// `tr(A2 R)·tr(A4 R) - |tr(A3 R)|²`, nonnegative for every PSD `R`.
pub fn moment_inequality_gap(m: &SpectralMoments, r_x: &ComplexMatrix) -> f64 {
    let t = m.traces(r_x);
    t.t2 * t.t4 - t.t3.norm_sqr()
}
