//! Randomized checks of the library's invariants on a configured scenario.
//!
//! Every property draws `trials` random inputs, measures a quantity oriented
//! so that larger is worse, and counts the trials above the tolerance.

use pcrb_core::fim::{crb_average, fim_observation, moment_inequality_gap, pcrb_exact, pcrb_upper, trace_product};
use pcrb_core::optimizer::optimal_design;
use pcrb_core::random::{random_feasible_covariance, random_mixture};
use pcrb_core::sim::trial_seed;
use pcrb_core::SceneConfig;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::PropertyTrials;
use crate::experiments::Scenario;
use crate::table::ResultTable;
use crate::RunError;

#[derive(Debug, Clone, PartialEq)]
pub struct PropertyOutcome {
    pub name: &'static str,
    pub trials: usize,
    pub failures: usize,
    /// Largest measured value; `-inf` if every trial measured nothing.
    pub worst: f64,
    pub tolerance: f64,
}

impl PropertyOutcome {
    pub fn passed(&self) -> bool {
        self.failures == 0
    }
}

/// Runs `measure` on `trials` independent streams derived from `seed` and
/// `salt`, in parallel.
fn check<F>(name: &'static str, trials: usize, tolerance: f64, seed: u64, salt: u64, measure: F) -> PropertyOutcome
where
    F: Fn(&mut ChaCha8Rng) -> f64 + Sync,
{
    let values: Vec<f64> = (0..trials as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(trial_seed(seed ^ salt, i));
            measure(&mut rng)
        })
        .collect();
    PropertyOutcome {
        name,
        trials,
        // NaN counts as a failure
        failures: values.iter().filter(|v| v.is_nan() || **v > tolerance).count(),
        worst: values.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        tolerance,
    }
}

fn relative_excess(smaller: f64, larger: f64) -> f64 {
    (smaller - larger) / larger.abs()
}

/// `tr(A2R)tr(A4R) - |tr(A3R)|² ≥ 0`, measured as `-gap / (t2 t4)`.
pub fn moment_gap(sc: &Scenario, trials: usize, seed: u64) -> PropertyOutcome {
    check("moment_gap", trials, 1e-9, seed, 0x01, |rng| {
        let r = random_feasible_covariance(rng, sc.array.n_tx, sc.run.power);
        let t = sc.moments.traces(&r);
        let scale = t.t2 * t.t4;
        if scale > 0.0 {
            -moment_inequality_gap(&sc.moments, &r) / scale
        } else {
            0.0
        }
    })
}

/// `crb_average ≥ pcrb_upper ≥ pcrb_exact`, measured as the larger relative
/// violation of the two inequalities.
pub fn bound_chain(sc: &Scenario, trials: usize, seed: u64) -> PropertyOutcome {
    check("bound_chain", trials, 1e-9, seed, 0x02, |rng| {
        let r = random_feasible_covariance(rng, sc.array.n_tx, sc.run.power);
        let fp = sc.fp11();
        let Ok(blocks) = fim_observation(&sc.moments, &r, &sc.scene, &sc.run, fp) else {
            return f64::INFINITY;
        };
        let (Ok(exact), Ok(upper)) = (pcrb_exact(&blocks), pcrb_upper(&sc.moments, &r, &sc.scene, &sc.run, fp)) else {
            return f64::INFINITY;
        };
        let Ok(avg) = crb_average(&sc.prior, &r, &sc.scene, &sc.run, &sc.array, &sc.quad) else {
            return f64::INFINITY;
        };
        let upper_vs_avg = if avg.is_infinite() { f64::NEG_INFINITY } else { relative_excess(upper, avg) };
        relative_excess(exact, upper).max(upper_vs_avg)
    })
}

/// `tr(A1 R*) ≥ tr(A1 R)` for feasible `R`, measured relative to the optimum.
pub fn rank_one_dominance(sc: &Scenario, trials: usize, seed: u64) -> Result<PropertyOutcome, RunError> {
    let best = optimal_design(&sc.moments, &sc.run)?;
    let top = trace_product(&sc.moments.a1, &best.covariance).re;
    Ok(check("rank_one_dominance", trials, 1e-12, seed, 0x03, |rng| {
        let r = random_feasible_covariance(rng, sc.array.n_tx, sc.run.power);
        relative_excess(trace_product(&sc.moments.a1, &r).re, top)
    }))
}

/// Scalar Schur complement against `[F⁻¹]₁₁` by direct inversion, over random
/// covariances, gains and prior information.
pub fn schur_inverse(sc: &Scenario, trials: usize, seed: u64) -> PropertyOutcome {
    check("schur_inverse", trials, 1e-10, seed, 0x04, |rng| {
        let r = random_feasible_covariance(rng, sc.array.n_tx, sc.run.power);
        let gain_sq = sc.scene.noise_power * 10f64.powf(rng.random_range(-3.0..3.0)) / (sc.run.power * sc.run.num_samples as f64);
        let phase = rng.random_range(0.0..std::f64::consts::TAU);
        let scene = SceneConfig {
            reflection_gain: pcrb_core::Complex64::from_polar(gain_sq.sqrt(), phase),
            ..sc.scene
        };
        let fp = sc.fp11() * rng.random_range(0.1..10.0);
        let Ok(blocks) = fim_observation(&sc.moments, &r, &scene, &sc.run, fp) else {
            return f64::INFINITY;
        };
        let Ok(schur) = pcrb_exact(&blocks) else {
            return f64::INFINITY;
        };
        match blocks.assembled().try_inverse() {
            Some(inv) => (schur - inv[(0, 0)]).abs() / inv[(0, 0)].abs(),
            None => f64::INFINITY,
        }
    })
}

/// `F_p + ρ = Σ p_k/σ_k²` on the configured prior (trial 0) and random
/// mixtures of one to five components.
pub fn prior_decomposition(sc: &Scenario, trials: usize, seed: u64) -> PropertyOutcome {
    let measure = |prior: &pcrb_core::GaussianMixturePrior| match prior.prior_fisher(&sc.quad) {
        Ok(f) => {
            let target = prior.information_sum();
            (f.value + f.rho - target).abs() / target
        }
        Err(_) => f64::INFINITY,
    };
    let first = measure(&sc.prior);
    let mut outcome = check("prior_decomposition", trials.saturating_sub(1), 1e-6, seed, 0x05, |rng| {
        let k = rng.random_range(1..=5);
        measure(&random_mixture(rng, k))
    });
    outcome.trials += 1;
    outcome.failures += usize::from(first.is_nan() || first > 1e-6);
    outcome.worst = outcome.worst.max(first);
    outcome
}

/// `pcrb_upper ≥ pcrb_exact` over random covariances.
pub fn upper_above_exact(sc: &Scenario, trials: usize, seed: u64) -> PropertyOutcome {
    check("upper_above_exact", trials, 1e-9, seed, 0x06, |rng| {
        let r = random_feasible_covariance(rng, sc.array.n_tx, sc.run.power);
        let fp = sc.fp11();
        let exact = fim_observation(&sc.moments, &r, &sc.scene, &sc.run, fp).and_then(|b| pcrb_exact(&b));
        let upper = pcrb_upper(&sc.moments, &r, &sc.scene, &sc.run, fp);
        match (exact, upper) {
            (Ok(e), Ok(u)) => relative_excess(e, u),
            _ => f64::INFINITY,
        }
    })
}

/// All properties, one row each. Property names are listed in the metadata
/// as `property_<id>`.
pub fn run_property_suite(sc: &Scenario, trials: &PropertyTrials, seed: u64) -> Result<ResultTable, RunError> {
    let outcomes = [
        moment_gap(sc, trials.moment_gap, seed),
        bound_chain(sc, trials.bound_chain, seed),
        rank_one_dominance(sc, trials.rank_one_dominance, seed)?,
        schur_inverse(sc, trials.schur_inverse, seed),
        prior_decomposition(sc, trials.prior_decomposition, seed),
        upper_above_exact(sc, trials.upper_above_exact, seed),
    ];
    let mut table = ResultTable::new(["property_id", "trials", "failures", "worst", "tolerance"]);
    for (id, o) in outcomes.iter().enumerate() {
        table.push(vec![id as f64, o.trials as f64, o.failures as f64, o.worst, o.tolerance]);
        table.meta(format!("property_{id}"), o.name);
    }
    let failed: usize = outcomes.iter().map(|o| o.failures).sum();
    table.meta("total_failures", failed);
    Ok(table)
}

/// Total failure count recorded by [`run_property_suite`].
pub fn suite_failures(table: &ResultTable) -> usize {
    table.column("failures").map_or(0, |f| f.iter().sum::<f64>() as usize)
}
