//! Classical permutation GA standing in for a language model offline.
//!
//! Temperature scales the mutation probability: `min(1, p_m * temperature)`.

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{BackendError, BackendReport, Exchange, OffspringBackend, OffspringRequest};
use crate::population::Population;
use crate::prompt::{build_prompt, render_response, PromptMode};
use crate::seed::{rng_from_seed, Rng};
use crate::tsp::Tour;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MutationKind {
    /// Exchange two positions.
    Swap,
    /// Reverse a contiguous segment.
    #[default]
    TwoOpt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct BuiltinConfig {
    pub tournament_size: usize,
    pub mutation: MutationKind,
    pub mutation_probability: f64,
    pub seed: u64,
}

impl Default for BuiltinConfig {
    fn default() -> Self {
        BuiltinConfig {
            tournament_size: 2,
            mutation: MutationKind::TwoOpt,
            mutation_probability: 0.5,
            seed: 0,
        }
    }
}

/// Order crossover: `child[a..b]` comes from `p1`; the remaining slots are
/// filled with `p2`'s other nodes in `p2` order, both starting at `b` and
/// wrapping around.
pub fn order_crossover(p1: &[usize], p2: &[usize], cut: (usize, usize)) -> Vec<usize> {
    let n = p1.len();
    let (a, b) = cut;
    assert!(
        a < b && b <= n && p2.len() == n,
        "bad crossover cut {cut:?} for {n} nodes"
    );
    let mut child = vec![usize::MAX; n];
    let mut taken = vec![false; n];
    for k in a..b {
        child[k] = p1[k];
        taken[p1[k]] = true;
    }
    let mut slot = b % n;
    for k in 0..n {
        let v = p2[(b + k) % n];
        if taken[v] {
            continue;
        }
        child[slot] = v;
        slot = (slot + 1) % n;
    }
    child
}

/// Applies one mutation of `kind` in place.
pub fn mutate(order: &mut [usize], kind: MutationKind, rng: &mut Rng) {
    let n = order.len();
    if n < 2 {
        return;
    }
    let i = rng.random_range(0..n - 1);
    let j = rng.random_range(i + 1..n);
    match kind {
        MutationKind::Swap => order.swap(i, j),
        MutationKind::TwoOpt => order[i..=j].reverse(),
    }
}

pub struct BuiltinBackend {
    config: BuiltinConfig,
    rng: Rng,
}

impl BuiltinBackend {
    pub fn new(config: BuiltinConfig) -> Self {
        let rng = rng_from_seed(config.seed);
        BuiltinBackend { config, rng }
    }

    pub fn config(&self) -> &BuiltinConfig {
        &self.config
    }

    /// Index of the tournament winner; members are sorted, so the lowest
    /// drawn index wins.
    fn tournament(&mut self, population: &Population) -> usize {
        let len = population.len();
        (0..self.config.tournament_size.max(1))
            .map(|_| self.rng.random_range(0..len))
            .min()
            .expect("tournament size at least 1")
    }

    fn offspring(
        &mut self,
        population: &Population,
        temperature: f64,
        mode: PromptMode,
    ) -> Vec<usize> {
        let members = population.members();
        let n = members[0].tour.len();
        let mut child = match mode {
            PromptMode::Lmea => {
                let p1 = self.tournament(population);
                let p2 = self.tournament(population);
                let a = self.rng.random_range(0..n);
                let b = self.rng.random_range(a + 1..=n);
                order_crossover(
                    members[p1].tour.as_slice(),
                    members[p2].tour.as_slice(),
                    (a, b),
                )
            }
            // No selection or crossover: a uniformly drawn member, mutated.
            PromptMode::Opro => {
                let p = self.rng.random_range(0..members.len());
                members[p].tour.as_slice().to_vec()
            }
        };
        let p_mut = (self.config.mutation_probability * temperature).min(1.0);
        if self.rng.random_bool(p_mut) {
            mutate(&mut child, self.config.mutation, &mut self.rng);
        }
        child
    }
}

impl OffspringBackend for BuiltinBackend {
    fn name(&self) -> &str {
        "builtin"
    }

    fn propose(&mut self, request: &OffspringRequest<'_>) -> Result<BackendReport, BackendError> {
        let offspring: Vec<Tour> = (0..request.count)
            .map(|_| {
                let child = self.offspring(request.population, request.temperature, request.mode);
                Tour::from_vec_unchecked(child)
            })
            .collect();
        // A synthetic exchange keeps builtin runs replayable through the
        // scripted backend.
        let prompt = build_prompt(
            request.instance,
            request.population,
            request.count,
            request.mode,
        )?;
        let exchange = Exchange {
            prompt: prompt.text,
            response: render_response(&offspring),
            temperature: request.temperature,
        };
        Ok(BackendReport {
            offspring,
            exchanges: vec![exchange],
            ..Default::default()
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::init_population;
    use crate::generator::gen_rue;
    use crate::tsp::validate_tour;

    #[test]
    fn ox_reference_child() {
        let child = order_crossover(&[0, 1, 2, 3, 4, 5], &[5, 4, 3, 2, 1, 0], (2, 4));
        assert_eq!(child, vec![5, 4, 2, 3, 1, 0]);
    }

    #[test]
    fn ox_identical_parents() {
        let p = [3, 0, 4, 1, 2];
        for a in 0..5 {
            for b in a + 1..=5 {
                assert_eq!(order_crossover(&p, &p, (a, b)), p.to_vec());
            }
        }
    }

    #[test]
    fn mutations_keep_permutations() {
        let mut rng = rng_from_seed(1);
        for kind in [MutationKind::Swap, MutationKind::TwoOpt] {
            let mut order: Vec<usize> = (0..9).collect();
            for _ in 0..100 {
                let before = order.clone();
                mutate(&mut order, kind, &mut rng);
                assert_ne!(order, before);
                assert!(validate_tour(9, &order).is_ok());
            }
        }
    }

    #[test]
    fn zero_temperature_without_mutation_copies_identical_parents() {
        let inst = gen_rue(7, 2).unwrap();
        let pop = init_population(&inst, 1, 3);
        let mut backend = BuiltinBackend::new(BuiltinConfig::default());
        let req = OffspringRequest {
            instance: &inst,
            population: &pop,
            count: 5,
            temperature: 0.0,
            mode: PromptMode::Lmea,
        };
        let report = backend.propose(&req).unwrap();
        for child in &report.offspring {
            assert_eq!(child, &pop.members()[0].tour);
        }
    }

    #[test]
    fn deterministic_for_equal_seed() {
        let inst = gen_rue(10, 2).unwrap();
        let pop = init_population(&inst, 8, 3);
        let run = || {
            let mut backend = BuiltinBackend::new(BuiltinConfig {
                seed: 17,
                ..Default::default()
            });
            let req = OffspringRequest {
                instance: &inst,
                population: &pop,
                count: 8,
                temperature: 1.0,
                mode: PromptMode::Lmea,
            };
            backend.propose(&req).unwrap()
        };
        assert_eq!(run(), run());
    }
}
