//! Uniform linear array response.
//!
//! Antenna `i` (0-based) of an `n`-element array carries the phase factor
//! `n - 2i - 1`, i.e. the 1-based factor `n - 2i + 1` shifted down one slot:
//!
//! ```text
//! a_i(θ) = exp(-jπ (d/λ) (n - 2i - 1) sin θ),   i = 0..n
//! ```
//!
//! The array is centred, so every steering vector is conjugate-symmetric and
//! orthogonal to its own angle derivative.

use core::f64::consts::PI;

use crate::error::{Error, Result};
use crate::{Complex64, ComplexMatrix, ComplexVector};

/// Geometry of the co-located transmit and receive ULAs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayConfig {
    pub n_tx: usize,
    pub n_rx: usize,
    /// Element spacing over wavelength, `d/λ`.
    pub spacing_ratio: f64,
}

impl ArrayConfig {
    pub fn new(n_tx: usize, n_rx: usize, spacing_ratio: f64) -> Result<Self> {
        let cfg = Self {
            n_tx,
            n_rx,
            spacing_ratio,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_tx == 0 {
            return Err(Error::InvalidConfig("n_tx must be at least 1"));
        }
        if self.n_rx == 0 {
            return Err(Error::InvalidConfig("n_rx must be at least 1"));
        }
        if !(self.spacing_ratio > 0.0 && self.spacing_ratio.is_finite()) {
            return Err(Error::InvalidConfig("spacing_ratio must be positive"));
        }
        Ok(())
    }
}

/// Target reflection and receiver noise.
///
/// `path_gain` is the two-way channel gain `β₀/r²`; it only feeds the
/// radiated power pattern; every bound works from `reflection_gain`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SceneConfig {
    /// `α = (β₀/r²)·ψ`.
    pub reflection_gain: Complex64,
    pub path_gain: f64,
    /// Receiver noise power `σ²` in watts.
    pub noise_power: f64,
}

impl SceneConfig {
    /// Scene with the reflection gain given directly. The path gain is taken
    /// as `|α|`, i.e. a unit-modulus RCS.
    pub fn new(reflection_gain: Complex64, noise_power: f64) -> Result<Self> {
        let scene = Self {
            reflection_gain,
            path_gain: reflection_gain.norm(),
            noise_power,
        };
        scene.validate()?;
        Ok(scene)
    }

    /// Scene built from the reference power `β₀` at 1 m, the range `r` and the
    /// RCS coefficient `ψ`.
    pub fn from_path_loss(
        ref_power: f64,
        range_m: f64,
        rcs: Complex64,
        noise_power: f64,
    ) -> Result<Self> {
        if !(ref_power > 0.0 && ref_power.is_finite()) {
            return Err(Error::InvalidConfig("ref_power must be positive"));
        }
        if !(range_m > 0.0 && range_m.is_finite()) {
            return Err(Error::InvalidConfig("range_m must be positive"));
        }
        Self::from_path_gain(ref_power / (range_m * range_m), rcs, noise_power)
    }

    /// Scene built from the two-way path gain `β₀/r²` and the RCS `ψ`.
    pub fn from_path_gain(path_gain: f64, rcs: Complex64, noise_power: f64) -> Result<Self> {
        if !(path_gain > 0.0 && path_gain.is_finite()) {
            return Err(Error::InvalidConfig("path gain must be positive"));
        }
        let scene = Self {
            reflection_gain: rcs * path_gain,
            path_gain,
            noise_power,
        };
        scene.validate()?;
        Ok(scene)
    }

    pub fn validate(&self) -> Result<()> {
        let g = self.reflection_gain;
        if !(g.re.is_finite() && g.im.is_finite()) || g.norm_sqr() == 0.0 {
            return Err(Error::InvalidConfig("reflection gain must be finite and nonzero"));
        }
        if !(self.noise_power > 0.0 && self.noise_power.is_finite()) {
            return Err(Error::InvalidConfig("noise power must be positive"));
        }
        Ok(())
    }

    /// `|α|²`.
    pub fn gain_sq(&self) -> f64 {
        self.reflection_gain.norm_sqr()
    }

    /// Copy with the reflection gain rescaled so that `|α|² = gain_sq`,
    /// keeping its phase.
    pub fn with_gain_sq(&self, gain_sq: f64) -> Self {
        let scale = libm::sqrt(gain_sq / self.gain_sq());
        Self {
            reflection_gain: self.reflection_gain * scale,
            ..*self
        }
    }
}

#[inline]
fn phase_factor(n: usize, i: usize) -> f64 {
    n as f64 - 2.0 * i as f64 - 1.0
}

fn steering(n: usize, spacing_ratio: f64, theta: f64) -> ComplexVector {
    let s = libm::sin(theta);
    ComplexVector::from_fn(n, |i, _| {
        let phi = -PI * spacing_ratio * phase_factor(n, i) * s;
        Complex64::new(libm::cos(phi), libm::sin(phi))
    })
}

fn steering_deriv(n: usize, spacing_ratio: f64, theta: f64) -> ComplexVector {
    let s = libm::sin(theta);
    let c = libm::cos(theta);
    ComplexVector::from_fn(n, |i, _| {
        let k = PI * spacing_ratio * phase_factor(n, i);
        let phi = -k * s;
        // d/dθ exp(-jk sin θ) = -jk cos θ · exp(-jk sin θ)
        Complex64::new(libm::cos(phi), libm::sin(phi)) * Complex64::new(0.0, -k * c)
    })
}

/// Transmit steering vector `a(θ)`.
pub fn steering_tx(theta: f64, cfg: &ArrayConfig) -> ComplexVector {
    steering(cfg.n_tx, cfg.spacing_ratio, theta)
}

/// Receive steering vector `b(θ)`.
pub fn steering_rx(theta: f64, cfg: &ArrayConfig) -> ComplexVector {
    steering(cfg.n_rx, cfg.spacing_ratio, theta)
}

/// `ȧ(θ) = ∂a/∂θ`.
pub fn steering_tx_deriv(theta: f64, cfg: &ArrayConfig) -> ComplexVector {
    steering_deriv(cfg.n_tx, cfg.spacing_ratio, theta)
}

/// `ḃ(θ) = ∂b/∂θ`.
pub fn steering_rx_deriv(theta: f64, cfg: &ArrayConfig) -> ComplexVector {
    steering_deriv(cfg.n_rx, cfg.spacing_ratio, theta)
}

/// `‖ḃ(θ)‖²` in closed form: `(π d/λ)² cos²θ Σ_m (n_r - 2m - 1)²`.
pub fn rx_deriv_norm_sq(theta: f64, cfg: &ArrayConfig) -> f64 {
    let n = cfg.n_rx as f64;
    // Σ (n - 2m - 1)² over m = 0..n equals n(n² - 1)/3.
    let sum_sq = n * (n * n - 1.0) / 3.0;
    let k = PI * cfg.spacing_ratio * libm::cos(theta);
    k * k * sum_sq
}

/// Rank-one target channel `G(θ) = α b(θ) a^H(θ)`, `n_rx × n_tx`.
pub fn channel(theta: f64, scene: &SceneConfig, cfg: &ArrayConfig) -> ComplexMatrix {
    let a = steering_tx(theta, cfg);
    let b = steering_rx(theta, cfg);
    (b * a.adjoint()) * scene.reflection_gain
}

/// `a^H(θ) R a(θ)`: transmit power radiated toward `θ` by covariance `R`.
pub fn beam_gain(theta: f64, covariance: &ComplexMatrix, cfg: &ArrayConfig) -> f64 {
    let a = steering_tx(theta, cfg);
    a.dotc(&(covariance * &a)).re
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn cfg(n_tx: usize, n_rx: usize) -> ArrayConfig {
        ArrayConfig::new(n_tx, n_rx, 0.5).unwrap()
    }

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol
    }

    #[test]
    fn broadside_is_all_ones() {
        let c = cfg(7, 5);
        assert!(steering_tx(0.0, &c).iter().all(|z| close(*z, Complex64::new(1.0, 0.0), 1e-15)));
        assert!(steering_rx(0.0, &c).iter().all(|z| close(*z, Complex64::new(1.0, 0.0), 1e-15)));
    }

    #[test]
    fn endfire_two_elements() {
        // i=1: exponent -jπ·0.5·1 → -j; i=2: exponent +jπ/2 → +j
        let c = cfg(2, 2);
        for v in [steering_tx(PI / 2.0, &c), steering_rx(PI / 2.0, &c)] {
            assert!(close(v[0], Complex64::new(0.0, -1.0), 1e-15));
            assert!(close(v[1], Complex64::new(0.0, 1.0), 1e-15));
        }
    }

    #[test]
    fn derivative_at_broadside_two_elements() {
        let c = cfg(2, 2);
        let d = steering_tx_deriv(0.0, &c);
        assert!(close(d[0], Complex64::new(0.0, -PI / 2.0), 1e-15));
        assert!(close(d[1], Complex64::new(0.0, PI / 2.0), 1e-15));
    }

    #[test]
    fn derivative_vanishes_at_endfire() {
        let c = cfg(10, 12);
        assert!(steering_tx_deriv(PI / 2.0, &c).norm() < 1e-12);
        assert!(steering_rx_deriv(PI / 2.0, &c).norm() < 1e-12);
        assert!(rx_deriv_norm_sq(PI / 2.0, &c) < 1e-25);
    }

    #[test]
    fn rx_derivative_norm_two_elements() {
        let c = cfg(2, 2);
        for theta in [0.0, 0.3, 1.1, 2.9] {
            let expected = PI * PI / 2.0 * libm::cos(theta).powi(2);
            let got = steering_rx_deriv(theta, &c).norm_squared();
            assert!((got - expected).abs() <= 1e-10 * expected.max(1e-300));
            assert!((rx_deriv_norm_sq(theta, &c) - expected).abs() <= 1e-12 * expected.max(1.0));
        }
    }

    #[test]
    fn channel_at_broadside_is_all_ones() {
        let c = cfg(3, 4);
        let scene = SceneConfig::new(Complex64::new(1.0, 0.0), 1.0).unwrap();
        let g = channel(0.0, &scene, &c);
        assert_eq!(g.shape(), (4, 3));
        assert!(g.iter().all(|z| close(*z, Complex64::new(1.0, 0.0), 1e-15)));
    }

    #[test]
    fn scene_validation() {
        assert!(SceneConfig::new(Complex64::new(0.0, 0.0), 1.0).is_err());
        assert!(SceneConfig::new(Complex64::new(1.0, 0.0), 0.0).is_err());
        let s = SceneConfig::from_path_loss(4.0, 2.0, Complex64::new(0.0, 2.0), 1.0).unwrap();
        assert!(close(s.reflection_gain, Complex64::new(0.0, 2.0), 1e-15));
        assert_eq!(s.path_gain, 1.0);
        assert!(ArrayConfig::new(0, 1, 0.5).is_err());
        assert!(ArrayConfig::new(1, 1, 0.0).is_err());
    }

    #[test]
    fn central_difference_converges_second_order() {
        let c = cfg(10, 12);
        for theta in [0.2, 0.82, 2.6] {
            let exact = steering_tx_deriv(theta, &c);
            let err = |h: f64| {
                let fd = (steering_tx(theta + h, &c) - steering_tx(theta - h, &c)) / Complex64::new(2.0 * h, 0.0);
                (fd - &exact).norm()
            };
            let (e3, e4) = (err(1e-3), err(1e-4));
            // second order: a 10x smaller step gives ~100x smaller error
            assert!(e4 < e3 / 50.0, "theta={theta}: {e3:e} vs {e4:e}");
            assert!(e3 < 1e-3 * 1e-3 * 1e3);
        }
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(1000))]

        #[test]
        fn unit_modulus_and_orthogonality(theta in 0.0..(2.0 * PI)) {
            let c = cfg(10, 12);
            let a = steering_tx(theta, &c);
            let b = steering_rx(theta, &c);
            prop_assert!(a.iter().chain(b.iter()).all(|z| (z.norm() - 1.0).abs() <= 1e-12));
            let ad = steering_tx_deriv(theta, &c);
            let bd = steering_rx_deriv(theta, &c);
            prop_assert!(a.dotc(&ad).norm() <= 1e-10 * a.norm() * ad.norm().max(1.0));
            prop_assert!(b.dotc(&bd).norm() <= 1e-10 * b.norm() * bd.norm().max(1.0));
        }

        #[test]
        fn rx_entries_are_conjugate_mirrored(theta in 0.0..(2.0 * PI), n in 1usize..16) {
            let b = steering_rx(theta, &cfg(1, n));
            for m in 0..n {
                prop_assert!((b[m] - b[n - 1 - m].conj()).norm() <= 1e-12);
            }
        }

        #[test]
        fn channel_is_rank_one_with_known_energy(
            theta in 0.0..(2.0 * PI),
            re in -3.0f64..3.0,
            im in 0.1f64..3.0,
        ) {
            let c = cfg(6, 5);
            let scene = SceneConfig::new(Complex64::new(re, im), 1.0).unwrap();
            let g = channel(theta, &scene, &c);
            let energy = g.norm_squared();
            let expected = scene.gain_sq() * 30.0;
            prop_assert!((energy - expected).abs() <= 1e-10 * expected);
            let sv = g.singular_values();
            let mut s: alloc::vec::Vec<f64> = sv.iter().copied().collect();
            s.sort_by(|a, b| b.partial_cmp(a).unwrap());
            prop_assert!(s[1] <= 1e-10 * s[0]);
        }
    }
}
