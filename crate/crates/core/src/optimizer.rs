//! Transmit covariance designs.
//!
//! Minimizing the PCRB upper bound under `tr(R) ≤ P` is the same as
//! maximizing `tr(A1 R)`, a linear objective over a spectraplex. The optimum
//! puts all power on the principal eigenvector of `A1`: `R* = P q₁q₁ᴴ`,
//! realized by sending `√P q₁` in every sample.

use alloc::vec::Vec;

use crate::array::{steering_tx, ArrayConfig, SceneConfig};
use crate::error::{Error, Result};
use crate::fim::{noise_scale, RunConfig, SpectralMoments};
use crate::prior::GaussianMixturePrior;
use crate::quadrature::golden_section_max;
use crate::random::hermitize;
use crate::{Complex64, ComplexMatrix, ComplexVector};

/// Eigenvalues closer than this (relative to `λ₁`) are treated as tied.
pub const TIE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DesignKind {
    /// Principal eigenvector of `A1`.
    Proposed,
    /// All power on the first antenna.
    Heuristic,
    /// Matched beam toward the prior mode.
    PeakAngle,
}

impl DesignKind {
    pub const ALL: [DesignKind; 3] = [DesignKind::Proposed, DesignKind::PeakAngle, DesignKind::Heuristic];

    pub fn label(&self) -> &'static str {
        match self {
            DesignKind::Proposed => "proposed",
            DesignKind::Heuristic => "heuristic",
            DesignKind::PeakAngle => "peak-angle",
        }
    }
}

/// A sample covariance together with a waveform realizing it.
#[derive(Debug, Clone, PartialEq)]
pub struct TransmitDesign {
    /// `R_X`, `n_tx × n_tx`.
    pub covariance: ComplexMatrix,
    /// `X`, `n_tx × L`, with `X Xᴴ / L = R_X`.
    pub waveform: ComplexMatrix,
    pub kind: DesignKind,
    /// Beam direction for [`DesignKind::PeakAngle`].
    pub steer_angle: Option<f64>,
}

impl TransmitDesign {
    /// Constant waveform `x_l = w` for all `L` samples.
    pub fn constant(kind: DesignKind, w: &ComplexVector, num_samples: usize) -> Self {
        let covariance = w * w.adjoint();
        let waveform = ComplexMatrix::from_fn(w.len(), num_samples, |i, _| w[i]);
        Self {
            covariance,
            waveform,
            kind,
            steer_angle: None,
        }
    }

    pub fn num_samples(&self) -> usize {
        self.waveform.ncols()
    }
}

/// Hermitian eigendecomposition, eigenvalues sorted descending.
#[derive(Debug, Clone, PartialEq)]
pub struct EvdResult {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors as columns, in eigenvalue order. The first
    /// entry of modulus above 1e-8 in each column is real and nonnegative.
    pub eigenvectors: ComplexMatrix,
}

fn normalize_phase(v: &mut [Complex64]) {
    if let Some(pivot) = v.iter().find(|z| z.norm() > 1e-8).copied() {
        let rot = pivot.conj() / pivot.norm();
        for z in v.iter_mut() {
            *z *= rot;
        }
    }
}

pub fn hermitian_evd(a: &ComplexMatrix) -> Result<EvdResult> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            got: a.ncols(),
        });
    }
    let scale = a.iter().map(|z| z.norm()).fold(0.0, f64::max);
    let asym = (a - a.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max);
    if asym > 1e-8 * scale.max(1.0) {
        return Err(Error::NotHermitian(asym));
    }
    let mut sym = a.clone();
    hermitize(&mut sym);
    let trace = sym.trace().re.abs();
    let eig = sym.symmetric_eigen();

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));

    let mut eigenvalues = Vec::with_capacity(n);
    let mut eigenvectors = ComplexMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        let mut lambda = eig.eigenvalues[src];
        if lambda < 0.0 && lambda >= -1e-9 * trace {
            lambda = 0.0;
        }
        eigenvalues.push(lambda);
        let mut col: Vec<Complex64> = eig.eigenvectors.column(src).iter().copied().collect();
        normalize_phase(&mut col);
        for (i, z) in col.into_iter().enumerate() {
            eigenvectors[(i, dst)] = z;
        }
    }
    Ok(EvdResult {
        eigenvalues,
        eigenvectors,
    })
}

impl EvdResult {
    /// Unit eigenvector for the largest eigenvalue. Inside a tied cluster the
    /// choice is the normalized projection of the lowest-index basis vector
    /// `e_j` with a non-negligible projection onto the cluster.
    pub fn principal_vector(&self) -> ComplexVector {
        let n = self.eigenvalues.len();
        let top = self.eigenvalues[0];
        let cluster = self
            .eigenvalues
            .iter()
            .take_while(|&&l| top - l <= TIE_TOLERANCE * top.abs())
            .count()
            .max(1);
        if cluster == 1 {
            return self.eigenvectors.column(0).into_owned();
        }
        let basis = self.eigenvectors.columns(0, cluster);
        for j in 0..n {
            // Q_c Q_cᴴ e_j
            let coeffs = basis.row(j).adjoint();
            let mut v: ComplexVector = basis * coeffs;
            let norm = v.norm();
            if norm > 1e-6 {
                v /= Complex64::new(norm, 0.0);
                normalize_phase(v.as_mut_slice());
                return v;
            }
        }
        self.eigenvectors.column(0).into_owned()
    }
}

/// `R* = P q₁q₁ᴴ` with the constant waveform `√P q₁`.
pub fn optimal_design(m: &SpectralMoments, run: &RunConfig) -> Result<TransmitDesign> {
    let q1 = hermitian_evd(&m.a1)?.principal_vector();
    let w = q1 * Complex64::new(libm::sqrt(run.power), 0.0);
    Ok(TransmitDesign::constant(DesignKind::Proposed, &w, run.num_samples))
}

/// `R = diag{P, 0, …, 0}`.
pub fn benchmark_heuristic(cfg: &ArrayConfig, run: &RunConfig) -> TransmitDesign {
    let mut w = ComplexVector::zeros(cfg.n_tx);
    w[0] = Complex64::new(libm::sqrt(run.power), 0.0);
    TransmitDesign::constant(DesignKind::Heuristic, &w, run.num_samples)
}

/// Mode of the prior density. Scans the effective support on a grid of step
/// `σ_min/50`, then refines the best cell by golden section. Exact ties keep
/// the smallest angle.
pub fn peak_angle(prior: &GaussianMixturePrior) -> f64 {
    let step = prior.sigma_min() / 50.0;
    let mut best = (f64::NAN, f64::NEG_INFINITY, 0.0, 0.0);
    for (lo, hi) in prior.effective_support() {
        let n = libm::ceil((hi - lo) / step) as usize;
        let h = (hi - lo) / n as f64;
        for i in 0..=n {
            let theta = lo + i as f64 * h;
            let v = prior.ln_pdf(theta);
            if v > best.1 {
                best = (theta, v, (theta - h).max(lo), (theta + h).min(hi));
            }
        }
    }
    let (theta, value, lo, hi) = best;
    let (refined, refined_value) = golden_section_max(lo, hi, 1e-12, |t| prior.ln_pdf(t));
    if refined_value >= value {
        refined
    } else {
        theta
    }
}

/// `R = (P/N_t) a(θ_max) aᴴ(θ_max)` at the prior mode.
pub fn benchmark_peak_angle(prior: &GaussianMixturePrior, cfg: &ArrayConfig, run: &RunConfig) -> TransmitDesign {
    let theta_max = peak_angle(prior);
    let a = steering_tx(theta_max, cfg);
    let w = a * Complex64::new(libm::sqrt(run.power / cfg.n_tx as f64), 0.0);
    let mut design = TransmitDesign::constant(DesignKind::PeakAngle, &w, run.num_samples);
    design.steer_angle = Some(theta_max);
    design
}

/// Minimum of the PCRB upper bound, `1/(fp11 + (2P|α|²L/σ²) q₁ᴴA1q₁)`.
pub fn optimal_pcrb_upper_value(m: &SpectralMoments, scene: &SceneConfig, run: &RunConfig, fp11: f64) -> Result<f64> {
    let q1 = hermitian_evd(&m.a1)?.principal_vector();
    let rayleigh = q1.dotc(&(&m.a1 * &q1)).re;
    Ok(1.0 / (fp11 + run.power * rayleigh / noise_scale(scene, run)))
}
