//! Real-coded genetic algorithm for maximum-likelihood updating.
//!
//! Tournament selection (size 2), blend crossover (BLX-α with α = 0.5),
//! per-gene Gaussian mutation with clipping to bounds, and elitism. Fitness
//! evaluations within a generation run in parallel; results are collected in
//! population order, so the outcome depends only on the seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beam::UpdatingParameters;
use crate::error::{Error, Result};
use crate::objective::LogDensity;

const BLEND_ALPHA: f64 = 0.5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GaConfig {
    pub population_size: usize,
    pub generations: usize,
    pub crossover_rate: f64,
    pub mutation_rate: f64,
    /// Per-parameter mutation standard deviation; `None` means 0.05 everywhere.
    pub mutation_sigma: Option<Vec<f64>>,
    /// Per-parameter `[low, high]`; `None` means `[0.5, 1.5]` everywhere.
    pub bounds: Option<Vec<[f64; 2]>>,
    pub elitism_count: usize,
    pub seed: u64,
}

impl Default for GaConfig {
    fn default() -> Self {
        GaConfig {
            population_size: 50,
            generations: 300,
            crossover_rate: 0.9,
            mutation_rate: 0.1,
            mutation_sigma: None,
            bounds: None,
            elitism_count: 2,
            seed: 1,
        }
    }
}

impl GaConfig {
    /// Fill `None` fields with the per-parameter defaults.
    pub fn resolve(&mut self, n_params: usize) {
        if self.mutation_sigma.is_none() {
            self.mutation_sigma = Some(vec![0.05; n_params]);
        }
        if self.bounds.is_none() {
            self.bounds = Some(vec![[0.5, 1.5]; n_params]);
        }
    }

    pub fn validate(&self, n_params: usize) -> Result<()> {
        if self.population_size < 4 {
            return Err(Error::config("ga.population_size", "must be at least 4"));
        }
        if self.elitism_count < 1 || self.elitism_count >= self.population_size {
            return Err(Error::config("ga.elitism_count", "must lie in [1, population_size)"));
        }
        for (name, r) in [("ga.crossover_rate", self.crossover_rate), ("ga.mutation_rate", self.mutation_rate)] {
            if !(0.0..=1.0).contains(&r) {
                return Err(Error::config(name, format!("{r} is not in [0, 1]")));
            }
        }
        let bounds = self.bounds.as_ref().ok_or_else(|| Error::config("ga.bounds", "not resolved"))?;
        if bounds.len() != n_params {
            return Err(Error::config("ga.bounds", format!("{} entries for {n_params} parameters", bounds.len())));
        }
        if let Some((i, b)) = bounds.iter().enumerate().find(|(_, b)| !(b[0] < b[1])) {
            return Err(Error::config(format!("ga.bounds[{i}]"), format!("low {} is not below high {}", b[0], b[1])));
        }
        let sigma = self
            .mutation_sigma
            .as_ref()
            .ok_or_else(|| Error::config("ga.mutation_sigma", "not resolved"))?;
        if sigma.len() != n_params {
            return Err(Error::config("ga.mutation_sigma", format!("{} entries for {n_params} parameters", sigma.len())));
        }
        if sigma.iter().any(|s| !(*s >= 0.0)) {
            return Err(Error::config("ga.mutation_sigma", "entries must be non-negative"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaResult {
    pub best: Vec<f64>,
    pub best_log_likelihood: f64,
    /// Best fitness of each generation, the initial population first.
    pub history: Vec<f64>,
}

impl GaResult {
    pub fn best_params(&self) -> Result<UpdatingParameters> {
        UpdatingParameters::from_slice(&self.best)
    }
}

/// Maximize `objective` within the configured bounds.
///
/// `nominal` seeds the first individual of the initial population; the rest
/// are drawn uniformly within the bounds.
pub fn ga_optimize<T: LogDensity + ?Sized>(objective: &T, nominal: &[f64], config: &GaConfig) -> Result<GaResult> {
    let d = nominal.len();
    config.validate(d)?;
    let bounds = config.bounds.as_deref().unwrap_or_default();
    let sigma = config.mutation_sigma.as_deref().unwrap_or_default();
    for (i, (x, b)) in nominal.iter().zip(bounds).enumerate() {
        if !(b[0] <= *x && *x <= b[1]) {
            return Err(Error::config(format!("ga.bounds[{i}]"), format!("does not contain the nominal value {x}")));
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let mut population: Vec<Vec<f64>> = Vec::with_capacity(config.population_size);
    population.push(nominal.to_vec());
    while population.len() < config.population_size {
        population.push(bounds.iter().map(|b| rng.random_range(b[0]..b[1])).collect());
    }
    let mut fitness = evaluate(objective, &population);
    if fitness.iter().all(|f| !f.is_finite()) {
        return Err(Error::Diagnostic(
            "objective is non-finite on the entire initial population; review the bounds".into(),
        ));
    }

    let mut history = Vec::with_capacity(config.generations + 1);
    history.push(best_of(&fitness).1);

    for _ in 0..config.generations {
        let ranked = rank(&fitness);
        let mut next: Vec<Vec<f64>> = Vec::with_capacity(config.population_size);
        let mut next_fitness: Vec<Option<f64>> = Vec::with_capacity(config.population_size);
        for &i in ranked.iter().take(config.elitism_count) {
            next.push(population[i].clone());
            next_fitness.push(Some(fitness[i]));
        }
        while next.len() < config.population_size {
            let a = tournament(&fitness, &mut rng);
            let b = tournament(&fitness, &mut rng);
            let mut child = if rng.random::<f64>() < config.crossover_rate {
                blend(&population[a], &population[b], bounds, &mut rng)
            } else {
                population[a].clone()
            };
            for ((x, s), bd) in child.iter_mut().zip(sigma).zip(bounds) {
                if rng.random::<f64>() < config.mutation_rate {
                    let z: f64 = rng.sample(StandardNormal);
                    *x = (*x + s * z).clamp(bd[0], bd[1]);
                }
            }
            next.push(child);
            next_fitness.push(None);
        }
        let fresh: Vec<usize> = (0..next.len()).filter(|&i| next_fitness[i].is_none()).collect();
        let values: Vec<f64> = fresh.par_iter().map(|&i| sanitize(objective.log_density(&next[i]))).collect();
        for (&i, v) in fresh.iter().zip(values) {
            next_fitness[i] = Some(v);
        }
        population = next;
        fitness = next_fitness.into_iter().map(|f| f.unwrap_or(f64::NEG_INFINITY)).collect();
        history.push(best_of(&fitness).1);
    }

    let (best_idx, best_value) = best_of(&fitness);
    Ok(GaResult {
        best: population[best_idx].clone(),
        best_log_likelihood: best_value,
        history,
    })
}

fn sanitize(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        f64::NEG_INFINITY
    }
}

fn evaluate<T: LogDensity + ?Sized>(objective: &T, population: &[Vec<f64>]) -> Vec<f64> {
    population.par_iter().map(|x| sanitize(objective.log_density(x))).collect()
}

/// Indices sorted by descending fitness, ties to the lower index.
fn rank(fitness: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..fitness.len()).collect();
    idx.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
    idx
}

fn best_of(fitness: &[f64]) -> (usize, f64) {
    let i = rank(fitness)[0];
    (i, fitness[i])
}

fn tournament<R: Rng>(fitness: &[f64], rng: &mut R) -> usize {
    let a = rng.random_range(0..fitness.len());
    let b = rng.random_range(0..fitness.len());
    match fitness[a].total_cmp(&fitness[b]) {
        std::cmp::Ordering::Greater => a,
        std::cmp::Ordering::Less => b,
        std::cmp::Ordering::Equal => a.min(b),
    }
}

fn blend<R: Rng>(a: &[f64], b: &[f64], bounds: &[[f64; 2]], rng: &mut R) -> Vec<f64> {
    a.iter()
        .zip(b)
        .zip(bounds)
        .map(|((&x, &y), bd)| {
            let lo = x.min(y);
            let hi = x.max(y);
            let span = hi - lo;
            let u: f64 = rng.random();
            (lo - BLEND_ALPHA * span + u * (1.0 + 2.0 * BLEND_ALPHA) * span).clamp(bd[0], bd[1])
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bowl_config(seed: u64) -> GaConfig {
        GaConfig {
            population_size: 50,
            generations: 200,
            bounds: Some(vec![[0.0, 1.0]; 5]),
            mutation_sigma: Some(vec![0.05; 5]),
            seed,
            ..GaConfig::default()
        }
    }

    #[test]
    fn finds_bowl_optimum() {
        let bowl = |x: &[f64]| -x.iter().map(|v| (v - 0.5).powi(2)).sum::<f64>();
        let r = ga_optimize(&bowl, &[0.1; 5], &bowl_config(3)).unwrap();
        for x in &r.best {
            assert!((x - 0.5).abs() < 0.02, "{:?}", r.best);
        }
        assert!(r.history.windows(2).all(|w| w[1] >= w[0]));
        assert_eq!(r.history.len(), 201);
    }

    #[test]
    fn deterministic_and_in_bounds() {
        use std::sync::Mutex;
        let seen = Mutex::new(Vec::new());
        let f = |x: &[f64]| {
            seen.lock().unwrap().push(x.to_vec());
            -(x[0] - 0.3).abs() - (x[1] - 0.9).abs()
        };
        let mut cfg = bowl_config(5);
        cfg.bounds = Some(vec![[0.0, 1.0], [0.5, 1.0]]);
        cfg.mutation_sigma = Some(vec![0.5, 0.5]);
        cfg.generations = 30;
        let a = ga_optimize(&f, &[0.5, 0.75], &cfg).unwrap();
        let b = ga_optimize(&f, &[0.5, 0.75], &cfg).unwrap();
        assert_eq!(a, b);
        for x in seen.into_inner().unwrap() {
            assert!((0.0..=1.0).contains(&x[0]) && (0.5..=1.0).contains(&x[1]));
        }
    }

    #[test]
    fn nominal_is_never_lost() {
        let f = |x: &[f64]| if x[0] == 0.25 { 0.0 } else { -1.0 - x[0] };
        let mut cfg = bowl_config(1);
        cfg.bounds = Some(vec![[0.0, 1.0]]);
        cfg.mutation_sigma = Some(vec![0.1]);
        cfg.generations = 20;
        let r = ga_optimize(&f, &[0.25], &cfg).unwrap();
        assert_eq!(r.best_log_likelihood, 0.0);
        assert_eq!(r.best, vec![0.25]);
    }

    #[test]
    fn rejects_bad_setups() {
        let nothing = |_: &[f64]| f64::NAN;
        assert!(matches!(
            ga_optimize(&nothing, &[0.5; 5], &bowl_config(1)),
            Err(Error::Diagnostic(_))
        ));
        let ok = |_: &[f64]| 0.0;
        assert!(ga_optimize(&ok, &[2.0; 5], &bowl_config(1)).is_err());
        let mut cfg = bowl_config(1);
        cfg.population_size = 3;
        assert!(ga_optimize(&ok, &[0.5; 5], &cfg).is_err());
        let mut cfg = bowl_config(1);
        cfg.bounds = Some(vec![[1.0, 1.0]; 5]);
        assert!(ga_optimize(&ok, &[1.0; 5], &cfg).is_err());
    }
}
