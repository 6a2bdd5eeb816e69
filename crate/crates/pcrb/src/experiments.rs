//! The experiment runners behind `pcrb run`.

use pcrb_core::array::beam_gain;
use pcrb_core::fim::{compute_moments, crb_average, fim_observation, pcrb_exact, pcrb_upper};
use pcrb_core::optimizer::{benchmark_heuristic, benchmark_peak_angle, hermitian_evd, optimal_design};
use pcrb_core::prior::PriorFisherResult;
use pcrb_core::sim::{mse_trial, summarize_squared_errors, GridSpec, MapEstimator, MseEstimate};
use pcrb_core::{
    db_to_linear, watts_to_dbm, ArrayConfig, DesignKind, GaussianMixturePrior, MixtureComponent, QuadratureSpec,
    RunConfig, SceneConfig, SpectralMoments, TransmitDesign,
};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::config::{ConfigError, Experiment, ExperimentConfig, SceneSpec};
use crate::properties::run_property_suite;
use crate::table::ResultTable;
use crate::RunError;

/// Physical scenario of a config with everything the experiments share
/// precomputed.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub array: ArrayConfig,
    pub prior: GaussianMixturePrior,
    pub scene: SceneConfig,
    pub run: RunConfig,
    pub quad: QuadratureSpec,
    pub moments: SpectralMoments,
    pub prior_fisher: PriorFisherResult,
}

fn scenario_error(field: &str) -> impl Fn(pcrb_core::Error) -> RunError + '_ {
    move |e| RunError::Config(ConfigError::new(field, e.to_string()))
}

impl Scenario {
    pub fn from_config(config: &ExperimentConfig) -> Result<Self, RunError> {
        config.validate()?;
        let a = &config.array;
        let array = ArrayConfig::new(a.n_tx, a.n_rx, a.spacing_ratio).map_err(scenario_error("array"))?;
        let components = config
            .prior
            .iter()
            .map(|c| MixtureComponent::new(c.weight, c.mean, c.variance))
            .collect();
        let prior = GaussianMixturePrior::new(components).map_err(scenario_error("prior"))?;
        let noise = config.noise_watts();
        let scene = match config.scene {
            SceneSpec::Direct { reflection_gain } => SceneConfig::new(reflection_gain.into(), noise),
            SceneSpec::PathLoss {
                ref_gain_db,
                range_m,
                rcs,
            } => SceneConfig::from_path_loss(db_to_linear(ref_gain_db), range_m, rcs.into(), noise),
            SceneSpec::PathGain { path_gain_db, rcs } => SceneConfig::from_path_gain(db_to_linear(path_gain_db), rcs.into(), noise),
        }
        .map_err(scenario_error("scene"))?;
        let run = RunConfig::new(config.num_samples, config.power_watts()).map_err(scenario_error("power_dbm"))?;
        let quad = QuadratureSpec::default();
        let moments = compute_moments(&prior, &array, &quad)?;
        let prior_fisher = prior.prior_fisher(&quad)?;
        Ok(Self {
            array,
            prior,
            scene,
            run,
            quad,
            moments,
            prior_fisher,
        })
    }

    /// The three designs in reporting order: proposed, peak-angle, heuristic.
    pub fn designs(&self) -> Result<[TransmitDesign; 3], RunError> {
        Ok([
            optimal_design(&self.moments, &self.run)?,
            benchmark_peak_angle(&self.prior, &self.array, &self.run),
            benchmark_heuristic(&self.array, &self.run),
        ])
    }

    /// Scene with `|α|²` set so that `P|α|²L/σ²` equals `snr_db`.
    pub fn scene_at_snr(&self, snr_db: f64) -> SceneConfig {
        let gain_sq = db_to_linear(snr_db) * self.scene.noise_power / (self.run.power * self.run.num_samples as f64);
        self.scene.with_gain_sq(gain_sq)
    }

    pub fn fp11(&self) -> f64 {
        self.prior_fisher.value
    }

    pub fn pcrb_exact(&self, design: &TransmitDesign, scene: &SceneConfig) -> Result<f64, RunError> {
        let blocks = fim_observation(&self.moments, &design.covariance, scene, &self.run, self.fp11())?;
        Ok(pcrb_exact(&blocks)?)
    }

    pub fn pcrb_upper(&self, design: &TransmitDesign, scene: &SceneConfig) -> Result<f64, RunError> {
        Ok(pcrb_upper(&self.moments, &design.covariance, scene, &self.run, self.fp11())?)
    }

    /// Radiated power pattern `(β₀/r²)·aᴴRa` toward `theta`, in dBm.
    pub fn pattern_dbm(&self, design: &TransmitDesign, theta: f64) -> f64 {
        watts_to_dbm(self.scene.path_gain * beam_gain(theta, &design.covariance, &self.array))
    }
}

fn column_name(prefix: &str, kind: DesignKind) -> String {
    format!("{prefix}_{}", kind.label().replace('-', "_"))
}

/// SHA-256 of the compact config JSON, hex encoded.
pub fn config_hash(config: &ExperimentConfig) -> String {
    let digest = Sha256::digest(config.to_json_compact().as_bytes());
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

fn stamp(table: &mut ResultTable, config: &ExperimentConfig) {
    let mut meta = vec![
        ("tool".to_string(), format!("pcrb {}", env!("CARGO_PKG_VERSION"))),
        ("experiment".to_string(), config.experiment.kind().to_string()),
        ("config_sha256".to_string(), config_hash(config)),
        (
            "seed".to_string(),
            config.experiment.seed().map_or("none".to_string(), |s| s.to_string()),
        ),
        ("config".to_string(), config.to_json_compact()),
    ];
    meta.append(&mut table.metadata);
    table.metadata = meta;
}

/// Runs the experiment a config names.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ResultTable, RunError> {
    let scenario = Scenario::from_config(config)?;
    let mut table = match &config.experiment {
        Experiment::PowerPattern { angles } => run_power_pattern(&scenario, &angles.angles())?,
        Experiment::PcrbVsSnr { snr_db } => run_pcrb_vs_snr(&scenario, snr_db)?,
        Experiment::MseValidation { snr_db, trials, seed } => {
            let seed = seed.ok_or_else(|| ConfigError::new("experiment.seed", "mse-validation needs a seed"))?;
            run_mse_validation(&scenario, snr_db, *trials, seed)?
        }
        Experiment::PropertySuite { trials, seed } => run_property_suite(&scenario, trials, seed.unwrap_or(0))?,
    };
    stamp(&mut table, config);
    Ok(table)
}

/// Beam pattern of every design plus the prior density, one row per angle.
pub fn run_power_pattern(sc: &Scenario, angles: &[f64]) -> Result<ResultTable, RunError> {
    let designs = sc.designs()?;
    let mut columns = vec!["theta".to_string(), "prior_pdf".to_string()];
    for kind in [DesignKind::Proposed, DesignKind::Heuristic, DesignKind::PeakAngle] {
        columns.push(column_name("pattern_dbm", kind));
    }
    let mut table = ResultTable::new(columns);
    let by_kind = |k: DesignKind| designs.iter().find(|d| d.kind == k).expect("all kinds present");
    for &theta in angles {
        let mut row = vec![theta, sc.prior.pdf(theta)];
        for kind in [DesignKind::Proposed, DesignKind::Heuristic, DesignKind::PeakAngle] {
            row.push(sc.pattern_dbm(by_kind(kind), theta));
        }
        table.push(row);
    }
    table.sort_rows();
    if let Some(theta_max) = by_kind(DesignKind::PeakAngle).steer_angle {
        table.meta("peak_angle_rad", theta_max);
    }
    table.meta("peak_angle_tie_rule", "smallest angle among equal prior maxima");
    Ok(table)
}

/// Exact PCRB of all designs, plus the upper bound, the bound ratio and the
/// average CRB of the proposed design, one row per SNR.
pub fn run_pcrb_vs_snr(sc: &Scenario, snr_db: &[f64]) -> Result<ResultTable, RunError> {
    let designs = sc.designs()?;
    let mut columns = vec!["snr_db".to_string()];
    columns.extend(designs.iter().map(|d| column_name("pcrb", d.kind)));
    columns.extend(["pcrb_upper_proposed", "upper_ratio_proposed", "crb_average_proposed"].map(String::from));
    let rows = snr_db
        .par_iter()
        .map(|&snr| {
            let scene = sc.scene_at_snr(snr);
            let mut row = vec![snr];
            for d in &designs {
                row.push(sc.pcrb_exact(d, &scene)?);
            }
            let upper = sc.pcrb_upper(&designs[0], &scene)?;
            row.push(upper);
            row.push(upper / row[1]);
            row.push(crb_average(&sc.prior, &designs[0].covariance, &scene, &sc.run, &sc.array, &sc.quad)?);
            Ok(row)
        })
        .collect::<Result<Vec<_>, RunError>>()?;
    let mut table = ResultTable::new(columns);
    for row in rows {
        table.push(row);
    }
    table.sort_rows();
    table.meta("prior_fisher", sc.fp11());
    table.meta("prior_only_pcrb", 1.0 / sc.fp11());
    table.meta("a1_top_eigenvalue", hermitian_evd(&sc.moments.a1)?.eigenvalues[0]);
    if let Some(theta_max) = designs[1].steer_angle {
        table.meta("peak_angle_rad", theta_max);
    }
    Ok(table)
}

/// Squared angle errors of `trials` Monte Carlo trials of one design, spread
/// over the rayon pool. Trial `i` always uses the stream
/// `trial_seed(seed, i)`, so the result does not depend on the thread count,
/// and designs evaluated with the same seed see the same angles and noise.
pub fn monte_carlo_errors(sc: &Scenario, design: &TransmitDesign, scene: &SceneConfig, trials: usize, seed: u64) -> Result<Vec<f64>, RunError> {
    let estimator = MapEstimator::new(design, &sc.prior, scene.noise_power, &sc.array, &GridSpec::from_prior(&sc.prior))?;
    Ok((0..trials as u64)
        .into_par_iter()
        .map(|i| mse_trial(&estimator, design, scene, seed, i))
        .collect::<Result<Vec<f64>, _>>()?)
}

pub fn monte_carlo_mse(sc: &Scenario, design: &TransmitDesign, scene: &SceneConfig, trials: usize, seed: u64) -> Result<MseEstimate, RunError> {
    Ok(summarize_squared_errors(&monte_carlo_errors(sc, design, scene, trials, seed)?))
}

/// Per SNR and design: MSE, its standard error, the exact PCRB and their
/// ratio.
pub fn run_mse_validation(sc: &Scenario, snr_db: &[f64], trials: usize, seed: u64) -> Result<ResultTable, RunError> {
    let designs = sc.designs()?;
    let mut columns = vec!["snr_db".to_string()];
    for d in &designs {
        for prefix in ["mse", "std_err", "pcrb", "ratio"] {
            columns.push(column_name(prefix, d.kind));
        }
    }
    let mut table = ResultTable::new(columns);
    let mut sorted = snr_db.to_vec();
    sorted.sort_by(f64::total_cmp);
    for snr in sorted {
        let scene = sc.scene_at_snr(snr);
        let mut row = vec![snr];
        for d in &designs {
            let mse = monte_carlo_mse(sc, d, &scene, trials, seed)?;
            let bound = sc.pcrb_exact(d, &scene)?;
            row.extend([mse.mse, mse.std_err, bound, mse.mse / bound]);
        }
        table.push(row);
    }
    table.meta("trials", trials);
    table.meta("estimator", "MAP with least-squares gain, ±6σ grid of 400 points per component, golden-section refinement");
    Ok(table)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn scenario() -> Scenario {
        Scenario::from_config(&ExperimentConfig::reference_for("pcrb-vs-snr").unwrap()).unwrap()
    }

    #[test]
    fn reference_scene_values() {
        let sc = scenario();
        assert!((sc.scene.gain_sq() - 1e-4).abs() < 1e-18);
        assert!((sc.scene.path_gain - 0.01).abs() < 1e-16);
        assert!((sc.run.power - 1.0).abs() < 1e-15);
        let scene = sc.scene_at_snr(20.0);
        let snr = sc.run.power * scene.gain_sq() * 25.0 / scene.noise_power;
        assert!((snr - 100.0).abs() < 1e-9);
        assert_eq!(scene.reflection_gain.im, 0.0);
    }

    #[test]
    fn heuristic_pattern_is_flat_and_peak_is_coherent() {
        let sc = scenario();
        let angles: Vec<f64> = (0..50).map(|i| 0.1 + 0.06 * i as f64).collect();
        let t = run_power_pattern(&sc, &angles).unwrap();
        let flat = t.column("pattern_dbm_heuristic").unwrap();
        // (β₀/r²)·P = 0.01 W = 10 dBm
        assert!(flat.iter().all(|v| (v - 10.0).abs() < 1e-9));
        let d = benchmark_peak_angle(&sc.prior, &sc.array, &sc.run);
        let peak = sc.pattern_dbm(&d, d.steer_angle.unwrap());
        assert!((peak - watts_to_dbm(0.01 * 10.0)).abs() < 1e-9);
        assert!(t.meta_value("peak_angle_rad").is_some());
    }

    #[test]
    fn low_snr_rows_collapse_to_prior_bound() {
        let sc = scenario();
        let t = run_pcrb_vs_snr(&sc, &[-200.0, 0.0]).unwrap();
        let prior_only = 1.0 / sc.fp11();
        for col in ["pcrb_proposed", "pcrb_peak_angle", "pcrb_heuristic"] {
            assert!((t.column(col).unwrap()[0] - prior_only).abs() <= 1e-12 * prior_only);
        }
        assert_eq!(t.column("crb_average_proposed").unwrap()[1], f64::INFINITY);
    }

    #[test]
    fn rows_are_sorted() {
        let sc = scenario();
        let t = run_pcrb_vs_snr(&sc, &[10.0, -5.0, 0.0]).unwrap();
        assert_eq!(t.column("snr_db").unwrap(), vec![-5.0, 0.0, 10.0]);
    }
}
