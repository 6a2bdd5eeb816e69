//! Posterior Cramér-Rao bounds for MIMO radar angle estimation under a
//! Gaussian-mixture angle prior, and the closed-form transmit covariance that
//! minimizes the tractable upper bound.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is a pure
//! function of its inputs; file formats, the experiment driver and the CLI
//! live in the companion `pcrb` crate.
//!
//! Module map:
//!
//! * [`array`]: uniform linear array steering vectors and the target channel.
//! * [`prior`]: the mixture prior, its score and its Fisher information.
//! * [`fim`]: steering moment matrices, Fisher blocks and the bound family.
//! * [`optimizer`]: Hermitian EVD, the optimal design and the two benchmarks.
//! * [`sim`]: received-signal synthesis and MAP estimation for Monte Carlo.
//! * [`quadrature`]: Gauss-Hermite and composite Simpson rules.
//! * [`random`]: random feasible covariances and mixtures for property checks.
//!
//! Angles are radians and powers are watts throughout.

#![cfg_attr(not(test), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

extern crate alloc;

pub mod array;
pub mod error;
pub mod fim;
pub mod optimizer;
pub mod prior;
pub mod quadrature;
pub mod random;
pub mod sim;

pub use num_complex::Complex64;

pub use array::{ArrayConfig, SceneConfig};
pub use error::{Error, Result};
pub use fim::{FimBlocks, RunConfig, SpectralMoments};
pub use optimizer::{DesignKind, EvdResult, TransmitDesign};
pub use prior::{GaussianMixturePrior, MixtureComponent, PriorFisherResult};
pub use quadrature::QuadratureSpec;

/// Dense complex column vector.
pub type ComplexVector = nalgebra::DVector<Complex64>;
/// Dense complex matrix.
pub type ComplexMatrix = nalgebra::DMatrix<Complex64>;

/// Converts a power in dBm to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    libm::pow(10.0, (dbm - 30.0) / 10.0)
}

/// Converts a power in watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * libm::log10(watts) + 30.0
}

/// Converts a power ratio in dB to a linear factor.
pub fn db_to_linear(db: f64) -> f64 {
    libm::pow(10.0, db / 10.0)
}


#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dbm_round_trip() {
        for dbm in [-120.0, -30.0, 0.0, 30.0, 47.5] {
            let back = watts_to_dbm(dbm_to_watts(dbm));
            assert!((back - dbm).abs() <= 1e-12 * dbm.abs().max(1.0));
        }
        assert!((dbm_to_watts(30.0) - 1.0).abs() < 1e-15);
        assert!((dbm_to_watts(-120.0) - 1e-15).abs() < 1e-27);
    }
}
