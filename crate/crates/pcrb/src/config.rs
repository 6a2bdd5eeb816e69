//! JSON experiment configuration.
//!
//! A config carries the physical scenario (array, prior, scene, power, noise,
//! sample count) and exactly one experiment. Powers are given in dBm and
//! converted to watts only when the scenario is built.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;

use pcrb_core::prior::SUPPORT_SIGMAS;
use pcrb_core::{dbm_to_watts, Complex64};
use serde::{Deserialize, Serialize};

/// A config problem, tied to the offending field path.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{field}: {message}")]
pub struct ConfigError {
    pub field: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self {
            field: field.into(),
            message: message.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ArraySpec {
    pub n_tx: usize,
    pub n_rx: usize,
    /// Element spacing over wavelength.
    pub spacing_ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComponentSpec {
    pub weight: f64,
    /// Radians.
    pub mean: f64,
    /// Radians squared.
    pub variance: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ComplexSpec {
    pub re: f64,
    pub im: f64,
}

impl From<ComplexSpec> for Complex64 {
    fn from(c: ComplexSpec) -> Self {
        Complex64::new(c.re, c.im)
    }
}

/// Target reflection: the complex gain `α` directly, or built from the
/// path loss and the RCS coefficient `ψ`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SceneSpec {
    Direct {
        reflection_gain: ComplexSpec,
    },
    /// `α = (β₀/r²)·ψ` with `β₀` the reference gain at 1 m.
    PathLoss {
        ref_gain_db: f64,
        range_m: f64,
        rcs: ComplexSpec,
    },
    /// `α = (β₀/r²)·ψ` with `β₀/r²` given in dB.
    PathGain {
        path_gain_db: f64,
        rcs: ComplexSpec,
    },
}

/// Uniform angle grid, inclusive of both ends.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AngleGrid {
    pub start: f64,
    pub stop: f64,
    pub count: usize,
}

impl AngleGrid {
    pub fn angles(&self) -> Vec<f64> {
        let h = (self.stop - self.start) / (self.count - 1) as f64;
        (0..self.count).map(|i| self.start + i as f64 * h).collect()
    }
}

/// Trial counts of the property suite.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PropertyTrials {
    pub moment_gap: usize,
    pub bound_chain: usize,
    pub rank_one_dominance: usize,
    pub schur_inverse: usize,
    pub prior_decomposition: usize,
    pub upper_above_exact: usize,
}

impl Default for PropertyTrials {
    fn default() -> Self {
        Self {
            moment_gap: 10_000,
            bound_chain: 200,
            rank_one_dominance: 10_000,
            schur_inverse: 500,
            prior_decomposition: 200,
            upper_above_exact: 500,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum Experiment {
    PowerPattern {
        angles: AngleGrid,
    },
    PcrbVsSnr {
        snr_db: Vec<f64>,
    },
    MseValidation {
        snr_db: Vec<f64>,
        trials: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
    PropertySuite {
        #[serde(default)]
        trials: PropertyTrials,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        seed: Option<u64>,
    },
}

impl Experiment {
    pub fn kind(&self) -> &'static str {
        match self {
            Experiment::PowerPattern { .. } => "power-pattern",
            Experiment::PcrbVsSnr { .. } => "pcrb-vs-snr",
            Experiment::MseValidation { .. } => "mse-validation",
            Experiment::PropertySuite { .. } => "property-suite",
        }
    }

    pub fn seed(&self) -> Option<u64> {
        match self {
            Experiment::MseValidation { seed, .. } | Experiment::PropertySuite { seed, .. } => *seed,
            _ => None,
        }
    }

    /// Replaces the seed of seeded experiments; a no-op for the others.
    pub fn set_seed(&mut self, value: u64) {
        if let Experiment::MseValidation { seed, .. } | Experiment::PropertySuite { seed, .. } = self {
            *seed = Some(value);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub array: ArraySpec,
    pub prior: Vec<ComponentSpec>,
    pub scene: SceneSpec,
    pub power_dbm: f64,
    pub noise_dbm: f64,
    pub num_samples: usize,
    pub experiment: Experiment,
}

/// Sweep used by the default configs, in dB of `P|α|²L/σ²`.
pub fn default_snr_sweep() -> Vec<f64> {
    (0..9).map(|i| -10.0 + 5.0 * i as f64).collect()
}

impl ExperimentConfig {
    /// The reference scenario with the given experiment attached: a 10 × 12
    /// half-wavelength array, a five-component prior, 1 W transmit power,
    /// -120 dBm noise, -20 dB path gain and 25 samples.
    pub fn reference(experiment: Experiment) -> Self {
        let prior = [
            (0.15, 0.52, 1e-4),
            (0.32, 0.82, 1e-4),
            (0.17, 0.87, 1e-3),
            (0.20, 2.6, 1e-3),
            (0.16, 2.7, 1e-4),
        ]
        .into_iter()
        .map(|(weight, mean, variance)| ComponentSpec { weight, mean, variance })
        .collect();
        Self {
            array: ArraySpec {
                n_tx: 10,
                n_rx: 12,
                spacing_ratio: 0.5,
            },
            prior,
            scene: SceneSpec::PathGain {
                path_gain_db: -20.0,
                rcs: ComplexSpec { re: 1.0, im: 0.0 },
            },
            power_dbm: 30.0,
            noise_dbm: -120.0,
            num_samples: 25,
            experiment,
        }
    }

    /// Reference scenario for each experiment kind, as shipped in `configs/`.
    pub fn reference_for(kind: &str) -> Option<Self> {
        let experiment = match kind {
            "power-pattern" => Experiment::PowerPattern {
                angles: AngleGrid {
                    start: 0.0,
                    stop: PI,
                    count: 3601,
                },
            },
            "pcrb-vs-snr" => Experiment::PcrbVsSnr {
                snr_db: default_snr_sweep(),
            },
            "mse-validation" => Experiment::MseValidation {
                snr_db: default_snr_sweep(),
                trials: 1000,
                seed: Some(20240601),
            },
            "property-suite" => Experiment::PropertySuite {
                trials: PropertyTrials::default(),
                seed: Some(7),
            },
            _ => return None,
        };
        Some(Self::reference(experiment))
    }

    pub fn from_json(text: &str) -> Result<Self, ConfigError> {
        let config: Self = serde_json::from_str(text).map_err(|e| {
            let field = match e.classify() {
                serde_json::error::Category::Syntax | serde_json::error::Category::Eof => "json",
                _ => "config",
            };
            ConfigError::new(field, format!("{e}"))
        })?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::new("path", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json_pretty(&self) -> String {
        serde_json::to_string_pretty(self).expect("config serializes")
    }

    /// Compact serialization used for hashing and the CSV echo.
    pub fn to_json_compact(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    /// Field-level checks. The physical scenario is checked again when it is
    /// built, which catches the cross-field constraints.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let a = &self.array;
        if a.n_tx == 0 {
            return Err(ConfigError::new("array.n_tx", "must be at least 1"));
        }
        if a.n_rx == 0 {
            return Err(ConfigError::new("array.n_rx", "must be at least 1"));
        }
        if !(a.spacing_ratio > 0.0 && a.spacing_ratio.is_finite()) {
            return Err(ConfigError::new("array.spacing_ratio", "must be positive and finite"));
        }
        if self.prior.is_empty() {
            return Err(ConfigError::new("prior", "needs at least one component"));
        }
        for (k, c) in self.prior.iter().enumerate() {
            if !(c.weight.is_finite() && (0.0..=1.0).contains(&c.weight)) {
                return Err(ConfigError::new(format!("prior[{k}].weight"), "must lie in [0, 1]"));
            }
            if !(c.variance > 0.0 && c.variance.is_finite()) {
                return Err(ConfigError::new(format!("prior[{k}].variance"), "must be positive and finite"));
            }
            if !(c.mean.is_finite() && (0.0..2.0 * PI).contains(&c.mean)) {
                return Err(ConfigError::new(format!("prior[{k}].mean"), "must lie in [0, 2π)"));
            }
            let half = SUPPORT_SIGMAS * c.variance.sqrt();
            if c.mean - half < 0.0 || c.mean + half >= 2.0 * PI {
                return Err(ConfigError::new(
                    format!("prior[{k}]"),
                    format!("mean ± {SUPPORT_SIGMAS}σ must stay inside [0, 2π)"),
                ));
            }
        }
        let total: f64 = self.prior.iter().map(|c| c.weight).sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(ConfigError::new("prior", format!("weights sum to {total}, not 1")));
        }
        self.validate_scene()?;
        if !self.power_dbm.is_finite() {
            return Err(ConfigError::new("power_dbm", "must be finite"));
        }
        if !self.noise_dbm.is_finite() {
            return Err(ConfigError::new("noise_dbm", "must be finite"));
        }
        if self.num_samples == 0 {
            return Err(ConfigError::new("num_samples", "must be at least 1"));
        }
        self.validate_experiment()
    }

    fn validate_scene(&self) -> Result<(), ConfigError> {
        let finite = |c: &ComplexSpec| c.re.is_finite() && c.im.is_finite() && (c.re != 0.0 || c.im != 0.0);
        match &self.scene {
            SceneSpec::Direct { reflection_gain } => {
                if !finite(reflection_gain) {
                    return Err(ConfigError::new("scene.reflection_gain", "must be finite and nonzero"));
                }
            }
            SceneSpec::PathLoss { ref_gain_db, range_m, rcs } => {
                if !ref_gain_db.is_finite() {
                    return Err(ConfigError::new("scene.ref_gain_db", "must be finite"));
                }
                if !(*range_m > 0.0 && range_m.is_finite()) {
                    return Err(ConfigError::new("scene.range_m", "must be positive and finite"));
                }
                if !finite(rcs) {
                    return Err(ConfigError::new("scene.rcs", "must be finite and nonzero"));
                }
            }
            SceneSpec::PathGain { path_gain_db, rcs } => {
                if !path_gain_db.is_finite() {
                    return Err(ConfigError::new("scene.path_gain_db", "must be finite"));
                }
                if !finite(rcs) {
                    return Err(ConfigError::new("scene.rcs", "must be finite and nonzero"));
                }
            }
        }
        Ok(())
    }

    fn validate_experiment(&self) -> Result<(), ConfigError> {
        let sweep = |snr: &[f64]| {
            if snr.is_empty() {
                return Err(ConfigError::new("experiment.snr_db", "needs at least one point"));
            }
            if let Some(i) = snr.iter().position(|s| !s.is_finite()) {
                return Err(ConfigError::new(format!("experiment.snr_db[{i}]"), "must be finite"));
            }
            Ok(())
        };
        match &self.experiment {
            Experiment::PowerPattern { angles } => {
                if angles.count < 2 {
                    return Err(ConfigError::new("experiment.angles.count", "must be at least 2"));
                }
                if !(angles.start.is_finite() && angles.stop.is_finite() && angles.start < angles.stop) {
                    return Err(ConfigError::new("experiment.angles", "needs finite start < stop"));
                }
            }
            Experiment::PcrbVsSnr { snr_db } => sweep(snr_db)?,
            Experiment::MseValidation { snr_db, trials, .. } => {
                sweep(snr_db)?;
                if *trials < pcrb_core::sim::MIN_TRIALS {
                    return Err(ConfigError::new(
                        "experiment.trials",
                        format!("must be at least {}", pcrb_core::sim::MIN_TRIALS),
                    ));
                }
            }
            Experiment::PropertySuite { trials, .. } => {
                let counts = [
                    ("moment_gap", trials.moment_gap),
                    ("bound_chain", trials.bound_chain),
                    ("rank_one_dominance", trials.rank_one_dominance),
                    ("schur_inverse", trials.schur_inverse),
                    ("prior_decomposition", trials.prior_decomposition),
                    ("upper_above_exact", trials.upper_above_exact),
                ];
                if let Some((name, _)) = counts.iter().find(|c| c.1 == 0) {
                    return Err(ConfigError::new(format!("experiment.trials.{name}"), "must be at least 1"));
                }
            }
        }
        Ok(())
    }

    pub fn power_watts(&self) -> f64 {
        dbm_to_watts(self.power_dbm)
    }

    pub fn noise_watts(&self) -> f64 {
        dbm_to_watts(self.noise_dbm)
    }
}

impl fmt::Display for ExperimentConfig {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_json_compact())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const KINDS: [&str; 4] = ["power-pattern", "pcrb-vs-snr", "mse-validation", "property-suite"];

    #[test]
    fn round_trip_is_identical() {
        for kind in KINDS {
            let config = ExperimentConfig::reference_for(kind).unwrap();
            let text = config.to_json_pretty();
            let back = ExperimentConfig::from_json(&text).unwrap();
            assert_eq!(back, config);
            assert_eq!(back.to_json_pretty(), text);
        }
    }

    #[test]
    fn all_scene_forms_parse() {
        let mut config = ExperimentConfig::reference_for("pcrb-vs-snr").unwrap();
        for scene in [
            SceneSpec::Direct {
                reflection_gain: ComplexSpec { re: 0.01, im: -0.002 },
            },
            SceneSpec::PathLoss {
                ref_gain_db: -30.0,
                range_m: 0.3,
                rcs: ComplexSpec { re: 0.0, im: 1.0 },
            },
        ] {
            config.scene = scene;
            let back = ExperimentConfig::from_json(&config.to_json_compact()).unwrap();
            assert_eq!(back.scene, scene);
        }
    }

    #[test]
    fn errors_name_the_field() {
        let base = ExperimentConfig::reference_for("mse-validation").unwrap();
        let mut c = base.clone();
        c.prior[2].variance = -1.0;
        assert_eq!(c.validate().unwrap_err().field, "prior[2].variance");
        let mut c = base.clone();
        c.prior[0].weight = 0.2;
        assert_eq!(c.validate().unwrap_err().field, "prior");
        let mut c = base.clone();
        c.noise_dbm = f64::NAN;
        assert_eq!(c.validate().unwrap_err().field, "noise_dbm");
        let mut c = base.clone();
        c.experiment = Experiment::MseValidation {
            snr_db: vec![0.0],
            trials: 10,
            seed: None,
        };
        assert_eq!(c.validate().unwrap_err().field, "experiment.trials");
        let mut c = base;
        c.array.n_rx = 0;
        assert_eq!(c.validate().unwrap_err().field, "array.n_rx");
    }

    #[test]
    fn malformed_json_reports_position() {
        let err = ExperimentConfig::from_json("{\"array\": ").unwrap_err();
        assert_eq!(err.field, "json");
        assert!(err.message.contains("line 1"), "{}", err.message);
        let err = ExperimentConfig::from_json("{\"bogus\": 1}").unwrap_err();
        assert!(err.message.contains("bogus"), "{}", err.message);
    }

    #[test]
    fn unknown_experiment_fields_are_rejected() {
        let mut value: serde_json::Value = serde_json::from_str(&ExperimentConfig::reference_for("pcrb-vs-snr").unwrap().to_json_compact()).unwrap();
        value["experiment"]["trials"] = serde_json::json!(5);
        assert!(ExperimentConfig::from_json(&value.to_string()).is_err());
    }

    #[test]
    fn seed_override() {
        let mut c = ExperimentConfig::reference_for("mse-validation").unwrap();
        c.experiment.set_seed(99);
        assert_eq!(c.experiment.seed(), Some(99));
        let mut p = ExperimentConfig::reference_for("pcrb-vs-snr").unwrap();
        p.experiment.set_seed(99);
        assert_eq!(p.experiment.seed(), None);
    }

    #[test]
    fn dbm_round_trip() {
        for dbm in [-150.0, -120.0, -3.7, 0.0, 30.0, 47.25] {
            let w = dbm_to_watts(dbm);
            let back = pcrb_core::watts_to_dbm(w);
            assert!((back - dbm).abs() <= 1e-12 * dbm.abs().max(1.0));
        }
        let c = ExperimentConfig::reference_for("pcrb-vs-snr").unwrap();
        assert!((c.power_watts() - 1.0).abs() < 1e-15);
        assert!((c.noise_watts() - 1e-15).abs() < 1e-28);
    }
}
