//! Random-walk Metropolis sampling and posterior-predictive statistics.
//!
//! Each step perturbs every coordinate with an independent zero-mean Gaussian
//! and accepts the candidate with probability `min(1, p_new / p_old)`. Step
//! sizes may be tuned multiplicatively during burn-in; they are frozen for the
//! retained phase so the retained states target the exact posterior.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam::{BeamGeometry, UpdatingParameters};
use crate::error::{Error, Result};
use crate::objective::{LogDensity, MeasuredModalData};
use crate::predict::{predict, SamplePrediction};

/// Window length (steps) between step-size adjustments during burn-in.
pub const ADAPT_WINDOW: usize = 50;
const ADAPT_UP: f64 = 1.05;
const ADAPT_DOWN: f64 = 0.95;
const POSITIVE_RETRIES: usize = 100;
const POSITIVE_FLOOR: f64 = 1e-6;

/// Where a parameter vector is allowed to live.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Support {
    Real,
    #[default]
    Positive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ChainConfig {
    pub burn_in: usize,
    pub retained: usize,
    /// Per-parameter proposal standard deviations; `None` means the beam defaults.
    pub step_sizes: Option<Vec<f64>>,
    pub seed: u64,
    pub target_acceptance: f64,
    pub adapt_during_burn_in: bool,
    pub support: Support,
}

impl Default for ChainConfig {
    fn default() -> Self {
        ChainConfig {
            burn_in: 2000,
            retained: 1000,
            step_sizes: None,
            seed: 1,
            target_acceptance: 0.3,
            adapt_during_burn_in: true,
            support: Support::Positive,
        }
    }
}

impl ChainConfig {
    /// 0.02 for density, modulus and well-known sections; 0.05 for the drilled group.
    pub fn beam_step_sizes(groups: &[Vec<usize>], n_params: usize) -> Vec<f64> {
        let mut steps = vec![0.02; n_params];
        if groups.len() >= 4 {
            for &i in &groups[3] {
                if i < n_params {
                    steps[i] = 0.05;
                }
            }
        }
        steps
    }

    pub fn validate(&self, n_params: usize) -> Result<()> {
        if self.retained < 1 {
            return Err(Error::config("chain.retained", "at least one retained state is required"));
        }
        if !(self.target_acceptance > 0.1 && self.target_acceptance < 0.9) {
            return Err(Error::config("chain.target_acceptance", "must lie in (0.1, 0.9)"));
        }
        let steps = self
            .step_sizes
            .as_ref()
            .ok_or_else(|| Error::config("chain.step_sizes", "not resolved"))?;
        if steps.len() != n_params {
            return Err(Error::config(
                "chain.step_sizes",
                format!("{} entries for {n_params} parameters", steps.len()),
            ));
        }
        if let Some(s) = steps.iter().find(|s| !(**s > 0.0 && s.is_finite())) {
            return Err(Error::config("chain.step_sizes", format!("{s} is not positive")));
        }
        Ok(())
    }
}

/// Retained Metropolis states.
#[derive(Debug, Clone, PartialEq)]
pub struct Chain {
    pub samples: Vec<Vec<f64>>,
    pub log_posteriors: Vec<f64>,
    /// Accepted transitions over retained-phase transitions.
    pub acceptance_rate: f64,
    pub burn_in_acceptance_rate: f64,
    /// Candidates rejected because their log-density was not finite.
    pub rejected_non_finite: usize,
    /// Step sizes used during the retained phase.
    pub final_step_sizes: Vec<f64>,
    pub seed: u64,
}

impl Chain {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn parameters(&self, i: usize) -> Result<UpdatingParameters> {
        UpdatingParameters::from_slice(&self.samples[i])
    }

    pub fn mean_log_posterior(&self) -> f64 {
        self.log_posteriors.iter().sum::<f64>() / self.log_posteriors.len() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Decision {
    Accepted,
    Rejected,
    /// Candidate density was NaN or infinite; never accepted.
    RejectedNonFinite,
}

impl Decision {
    pub fn is_accepted(self) -> bool {
        self == Decision::Accepted
    }
}

/// Gaussian random-walk candidate.
///
/// Under [`Support::Positive`] a non-positive coordinate is redrawn, up to a
/// bounded number of times, then clamped to a small positive floor.
pub fn propose<R: Rng + ?Sized>(current: &[f64], step_sizes: &[f64], support: Support, rng: &mut R) -> Vec<f64> {
    current
        .iter()
        .zip(step_sizes)
        .map(|(&x, &s)| {
            let z: f64 = rng.sample(StandardNormal);
            let mut y = x + s * z;
            if support == Support::Positive && y <= 0.0 {
                let mut tries = 1;
                while y <= 0.0 && tries < POSITIVE_RETRIES {
                    let z: f64 = rng.sample(StandardNormal);
                    y = x + s * z;
                    tries += 1;
                }
                if y <= 0.0 {
                    y = POSITIVE_FLOOR;
                }
            }
            y
        })
        .collect()
}

/// Metropolis acceptance on log-densities.
pub fn accept<R: Rng + ?Sized>(log_p_new: f64, log_p_old: f64, rng: &mut R) -> Decision {
    if !log_p_new.is_finite() {
        return Decision::RejectedNonFinite;
    }
    let log_ratio = log_p_new - log_p_old;
    if log_ratio >= 0.0 {
        return Decision::Accepted;
    }
    let u: f64 = rng.random();
    if u < log_ratio.exp() {
        Decision::Accepted
    } else {
        Decision::Rejected
    }
}

/// Run `burn_in + retained` Metropolis steps from `initial`.
pub fn run_chain<T: LogDensity + ?Sized>(initial: &[f64], target: &T, config: &ChainConfig) -> Result<Chain> {
    config.validate(initial.len())?;
    let mut steps = config.step_sizes.clone().unwrap_or_default();
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut current = initial.to_vec();
    let mut current_lp = target.log_density(&current);
    if !current_lp.is_finite() {
        return Err(Error::Diagnostic(format!(
            "log-density at the initial state is {current_lp}; start from a valid point"
        )));
    }

    let mut non_finite = 0usize;
    let mut burn_accepted = 0usize;
    let mut window_accepted = 0usize;
    for step in 0..config.burn_in {
        let candidate = propose(&current, &steps, config.support, &mut rng);
        let lp = target.log_density(&candidate);
        match accept(lp, current_lp, &mut rng) {
            Decision::Accepted => {
                current = candidate;
                current_lp = lp;
                burn_accepted += 1;
                window_accepted += 1;
            }
            Decision::Rejected => {}
            Decision::RejectedNonFinite => non_finite += 1,
        }
        if config.adapt_during_burn_in && (step + 1) % ADAPT_WINDOW == 0 {
            let rate = window_accepted as f64 / ADAPT_WINDOW as f64;
            let factor = if rate > config.target_acceptance { ADAPT_UP } else { ADAPT_DOWN };
            steps.iter_mut().for_each(|s| *s *= factor);
            window_accepted = 0;
        }
    }
    if config.burn_in > 0 && burn_accepted == 0 {
        return Err(Error::Diagnostic(format!(
            "no proposal accepted during {} burn-in steps; reduce the step sizes",
            config.burn_in
        )));
    }

    let mut samples = Vec::with_capacity(config.retained);
    let mut log_posteriors = Vec::with_capacity(config.retained);
    let mut accepted = 0usize;
    for _ in 0..config.retained {
        let candidate = propose(&current, &steps, config.support, &mut rng);
        let lp = target.log_density(&candidate);
        match accept(lp, current_lp, &mut rng) {
            Decision::Accepted => {
                current = candidate;
                current_lp = lp;
                accepted += 1;
            }
            Decision::Rejected => {}
            Decision::RejectedNonFinite => non_finite += 1,
        }
        samples.push(current.clone());
        log_posteriors.push(current_lp);
    }

    Ok(Chain {
        samples,
        log_posteriors,
        acceptance_rate: accepted as f64 / config.retained as f64,
        burn_in_acceptance_rate: if config.burn_in > 0 {
            burn_accepted as f64 / config.burn_in as f64
        } else {
            0.0
        },
        rejected_non_finite: non_finite,
        final_step_sizes: steps,
        seed: config.seed,
    })
}

/// Per-mode predictive mean and standard deviation.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictiveStats {
    pub mean_frequencies_hz: Vec<f64>,
    pub std_frequencies_hz: Vec<f64>,
    pub mean_mac_diagonal: Vec<f64>,
    pub std_mac_diagonal: Vec<f64>,
}

/// Posterior-predictive output: the statistics, plus every per-sample prediction.
#[derive(Debug, Clone)]
pub struct Predictive {
    pub stats: PredictiveStats,
    pub samples: Vec<SamplePrediction>,
    /// Chain states whose model could not be solved.
    pub skipped: usize,
}

impl Predictive {
    /// Shape coordinate `coordinate` of paired mode `mode` across samples.
    pub fn shape_coordinate(&self, mode: usize, coordinate: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.shapes[(coordinate, mode)]).collect()
    }

    pub fn frequency(&self, mode: usize) -> Vec<f64> {
        self.samples.iter().map(|s| s.frequencies_hz[mode]).collect()
    }
}

/// Largest tolerated share of unsolvable chain states.
pub const MAX_SKIPPED_FRACTION: f64 = 0.01;

/// Solve the updated model for every retained state and average the
/// predictions paired to the measured modes.
pub fn posterior_predictive(
    samples: &[Vec<f64>],
    geometry: &BeamGeometry,
    data: &MeasuredModalData,
) -> Result<Predictive> {
    if samples.is_empty() {
        return Err(Error::Size("chain has no samples".into()));
    }
    let results: Vec<Result<SamplePrediction>> = samples
        .par_iter()
        .map(|x| {
            let params = UpdatingParameters::from_slice(x)?;
            predict(&params, geometry, data)
        })
        .collect();
    let total = results.len();
    let predictions: Vec<SamplePrediction> = results.into_iter().filter_map(|r| r.ok()).collect();
    let skipped = total - predictions.len();
    if skipped as f64 > MAX_SKIPPED_FRACTION * total as f64 {
        return Err(Error::Numerical(format!(
            "{skipped} of {total} chain states could not be solved"
        )));
    }
    let stats = summarize(&predictions, data.mode_count());
    Ok(Predictive {
        stats,
        samples: predictions,
        skipped,
    })
}

fn summarize(predictions: &[SamplePrediction], n_modes: usize) -> PredictiveStats {
    let column = |f: &dyn Fn(&SamplePrediction) -> f64| -> (f64, f64) { mean_std(predictions.iter().map(f)) };
    let mut out = PredictiveStats {
        mean_frequencies_hz: Vec::with_capacity(n_modes),
        std_frequencies_hz: Vec::with_capacity(n_modes),
        mean_mac_diagonal: Vec::with_capacity(n_modes),
        std_mac_diagonal: Vec::with_capacity(n_modes),
    };
    for m in 0..n_modes {
        let (mf, sf) = column(&|p| p.frequencies_hz[m]);
        let (mm, sm) = column(&|p| p.mac[m]);
        out.mean_frequencies_hz.push(mf);
        out.std_frequencies_hz.push(sf);
        out.mean_mac_diagonal.push(mm);
        out.std_mac_diagonal.push(sm);
    }
    out
}

/// Arithmetic mean and sample (n − 1) standard deviation; zero spread for one value.
pub fn mean_std(values: impl Iterator<Item = f64>) -> (f64, f64) {
    let v: Vec<f64> = values.collect();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Sample covariance of a set of vectors (used by diagnostics and tests).
pub fn sample_covariance(samples: &[Vec<f64>]) -> DMatrix<f64> {
    let d = samples.first().map_or(0, Vec::len);
    let n = samples.len() as f64;
    let mut mean = vec![0.0; d];
    for s in samples {
        for (m, x) in mean.iter_mut().zip(s) {
            *m += x / n;
        }
    }
    let mut cov = DMatrix::zeros(d, d);
    for s in samples {
        for i in 0..d {
            for j in 0..d {
                cov[(i, j)] += (s[i] - mean[i]) * (s[j] - mean[j]) / (n - 1.0);
            }
        }
    }
    cov
}
