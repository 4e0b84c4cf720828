//! The generational loop: random initialization, offspring from a backend,
//! elitist survivor selection over parents plus offspring, and stagnation
//! driven temperature increases.

use std::cmp::Ordering;
use std::time::Instant;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::{generate, BackendSpec, OffspringBackend, OffspringRequest};
use crate::population::Population;
use crate::prompt::{PromptMode, PROMPT_TEMPLATE_VERSION};
use crate::runlog::{GenerationRecord, RunLog, RunStatus};
use crate::seed::{derive_seed, rng_from_seed};
use crate::tsp::{
    approx_eq, canonical_order, strictly_less, validate_tour, Instance, ScoredTour, Tour,
    TourViolation,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EvolveError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("offspring {index} is not a valid tour: {violation}")]
    InvalidOffspring {
        index: usize,
        violation: TourViolation,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct EvolveConfig {
    pub population_size: usize,
    pub generations: usize,
    /// Non-improving generations tolerated before the temperature rises.
    pub stagnation_window: usize,
    pub alpha: f64,
    pub temp0: f64,
    pub temp_max: f64,
    pub mode: PromptMode,
    pub self_adapt: bool,
    /// Reset the stagnation counter after each temperature increase. When
    /// false the temperature keeps rising every generation until an
    /// improvement.
    pub reset_after_increase: bool,
    pub seed: u64,
    pub backend: BackendSpec,
}

impl Default for EvolveConfig {
    fn default() -> Self {
        EvolveConfig {
            population_size: 16,
            generations: 250,
            stagnation_window: 20,
            alpha: 0.1,
            temp0: 1.0,
            temp_max: 2.0,
            mode: PromptMode::Lmea,
            self_adapt: true,
            reset_after_increase: true,
            seed: 0,
            backend: BackendSpec::default(),
        }
    }
}

impl EvolveConfig {
    pub fn validate(&self) -> Result<(), EvolveError> {
        let fail = |m: String| Err(EvolveError::Config(m));
        if self.population_size < 2 {
            return fail(format!("population size {} below 2", self.population_size));
        }
        if self.generations < 1 {
            return fail("at least one generation is required".into());
        }
        if self.stagnation_window < 1 {
            return fail("stagnation window must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return fail(format!("alpha {} must be positive", self.alpha));
        }
        if !(self.temp0 > 0.0 && self.temp0 <= self.temp_max && self.temp_max.is_finite()) {
            return fail(format!(
                "need 0 < temp0 <= temp_max, got {} and {}",
                self.temp0, self.temp_max
            ));
        }
        Ok(())
    }
}

/// Total order used for populations: length, then canonical cycle.
fn rank(a: &ScoredTour, a_canon: &[usize], b: &ScoredTour, b_canon: &[usize]) -> Ordering {
    a.length
        .total_cmp(&b.length)
        .then_with(|| a_canon.cmp(b_canon))
}

/// `n` seeded uniformly random permutations, scored and sorted.
pub fn init_population(instance: &Instance, size: usize, seed: u64) -> Population {
    let mut rng = rng_from_seed(seed);
    let n = instance.n();
    let mut members: Vec<(ScoredTour, Vec<usize>)> = (0..size)
        .map(|_| {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let canon = canonical_order(&order);
            (
                ScoredTour::score_unchecked(instance, Tour::from_vec_unchecked(order)),
                canon,
            )
        })
        .collect();
    members.sort_by(|(a, ac), (b, bc)| rank(a, ac, b, bc));
    Population::from_sorted(members.into_iter().map(|(m, _)| m).collect())
}

/// The best `current.len()` tours of `current` plus `offspring`.
///
/// Sorted by length, then canonical form, then incumbents before offspring.
/// Duplicates are kept.
pub fn survivor_select(
    current: Population,
    offspring: Vec<ScoredTour>,
) -> Result<Population, EvolveError> {
    let capacity = current.len();
    if let Some(first) = current.members().first() {
        let n = first.tour.len();
        for (index, child) in offspring.iter().enumerate() {
            validate_tour(n, child.tour.as_slice())
                .map_err(|violation| EvolveError::InvalidOffspring { index, violation })?;
        }
    }
    let mut pool: Vec<(ScoredTour, Vec<usize>, usize)> = current
        .into_members()
        .into_iter()
        .map(|m| (m, 0))
        .chain(offspring.into_iter().map(|m| (m, 1)))
        .map(|(m, origin)| {
            let canon = canonical_order(m.tour.as_slice());
            (m, canon, origin)
        })
        .collect();
    // Stable sort keeps the original order among exact ties.
    pool.sort_by(|(a, ac, ao), (b, bc, bo)| rank(a, ac, b, bc).then(ao.cmp(bo)));
    pool.truncate(capacity);
    Ok(Population::from_sorted(
        pool.into_iter().map(|(m, _, _)| m).collect(),
    ))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TemperatureState {
    pub temperature: f64,
    pub stagnation_counter: usize,
}

// Snaps to a 1e-12 grid so repeated increments land on the expected decimal
// values (1.0 + 0.1 + 0.1 == 1.2).
fn snap(t: f64) -> f64 {
    (t * 1e12).round() / 1e12
}

/// Stagnation rule: an improvement resets the counter; otherwise the counter
/// grows and, on reaching the window, the temperature rises by `alpha`
/// (capped at `temp_max`).
pub fn update_temperature(
    state: TemperatureState,
    improved: bool,
    config: &EvolveConfig,
) -> TemperatureState {
    if improved {
        return TemperatureState {
            temperature: state.temperature,
            stagnation_counter: 0,
        };
    }
    let counter = state.stagnation_counter + 1;
    if counter < config.stagnation_window {
        return TemperatureState {
            temperature: state.temperature,
            stagnation_counter: counter,
        };
    }
    TemperatureState {
        temperature: snap(state.temperature + config.alpha).min(config.temp_max),
        stagnation_counter: if config.reset_after_increase {
            0
        } else {
            counter
        },
    }
}

/// Runs the loop for exactly `config.generations` generations.
///
/// `known_optimum`, when given, is only used to record the first generation
/// whose best tour matches it; the search never sees it. A fatal backend
/// error ends the run early with [`RunStatus::Aborted`].
pub fn evolve(
    instance: &Instance,
    config: &EvolveConfig,
    backend: &mut dyn OffspringBackend,
    known_optimum: Option<f64>,
) -> Result<RunLog, EvolveError> {
    config.validate()?;
    let started = Instant::now();
    let size = config.population_size;
    let mut population = init_population(instance, size, derive_seed(config.seed, "init"));
    let mut fill_rng = rng_from_seed(derive_seed(config.seed, "fill"));
    let mut best = population.best().expect("population is nonempty").clone();
    let at_optimum = |len: f64| known_optimum.is_some_and(|o| len <= o || approx_eq(len, o));
    let mut generations_to_optimum = at_optimum(best.length).then_some(0);
    let initial_mean = population.mean_length();
    let initial_best = best.length;

    let mut state = TemperatureState {
        temperature: config.temp0,
        stagnation_counter: 0,
    };
    let mut evaluations = size;
    let mut records = Vec::with_capacity(config.generations);
    let mut transcript = Vec::new();
    let mut status = RunStatus::Complete;

    for gen in 1..=config.generations {
        let request = OffspringRequest {
            instance,
            population: &population,
            count: size,
            temperature: state.temperature,
            mode: config.mode,
        };
        let report = match generate(backend, &request, &mut fill_rng) {
            Ok(r) => r,
            Err(e) => {
                log::error!("generation {gen}: backend {} failed: {e}", backend.name());
                status = RunStatus::Aborted {
                    generation: gen,
                    reason: e.to_string(),
                };
                break;
            }
        };
        let used_temperature = state.temperature;
        transcript.extend(report.exchanges);
        let offspring: Vec<ScoredTour> = report
            .offspring
            .into_iter()
            .map(|t| ScoredTour::score_unchecked(instance, t))
            .collect();
        evaluations += offspring.len();
        population = survivor_select(population, offspring)?;

        let gen_best = population.best().expect("population is nonempty");
        let improved = strictly_less(gen_best.length, best.length);
        if improved {
            best = gen_best.clone();
        }
        state = if config.self_adapt {
            update_temperature(state, improved, config)
        } else {
            TemperatureState {
                temperature: state.temperature,
                stagnation_counter: if improved {
                    0
                } else {
                    state.stagnation_counter + 1
                },
            }
        };
        if generations_to_optimum.is_none() && at_optimum(best.length) {
            generations_to_optimum = Some(gen);
        }
        records.push(GenerationRecord {
            gen,
            best_length: gen_best.length,
            mean_length: population.mean_length(),
            population_size: population.len(),
            temperature: used_temperature,
            valid_offspring: size - report.fallback_filled,
            invalid_offspring: report.invalid_count,
            fallback_filled: report.fallback_filled,
            retries: report.retries_used,
            improved,
            stagnation_counter: state.stagnation_counter,
        });
    }

    Ok(RunLog {
        config: config.clone(),
        instance_id: instance.id().to_string(),
        n: instance.n(),
        prompt_template: PROMPT_TEMPLATE_VERSION.to_string(),
        known_optimum,
        initial_best_length: initial_best,
        initial_mean_length: initial_mean,
        records,
        best,
        generations_to_optimum,
        evaluations,
        status,
        wall_time_secs: started.elapsed().as_secs_f64(),
        transcript,
    })
}
