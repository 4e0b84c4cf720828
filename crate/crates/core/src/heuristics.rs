//! Construction heuristics used as baselines: nearest neighbor and the
//! farthest, nearest and random insertion variants.
//!
//! All ties are broken toward the lowest node index, then the earliest tour
//! position, so every heuristic is a pure function of its inputs.

use std::fmt;

use rand::Rng as _;
use serde::{Deserialize, Serialize};

use crate::seed::rng_from_seed;
use crate::tsp::{Instance, ScoredTour, Tour, TspError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Variant {
    #[serde(rename = "NN")]
    NearestNeighbor,
    #[serde(rename = "FI")]
    FarthestInsertion,
    #[serde(rename = "NI")]
    NearestInsertion,
    #[serde(rename = "RI")]
    RandomInsertion,
}

impl Variant {
    pub const ALL: [Variant; 4] = [
        Variant::NearestNeighbor,
        Variant::FarthestInsertion,
        Variant::NearestInsertion,
        Variant::RandomInsertion,
    ];

    pub fn label(self) -> &'static str {
        match self {
            Variant::NearestNeighbor => "NN",
            Variant::FarthestInsertion => "FI",
            Variant::NearestInsertion => "NI",
            Variant::RandomInsertion => "RI",
        }
    }

    /// Whether repeated runs with different seeds can differ.
    pub fn is_randomized(self) -> bool {
        matches!(self, Variant::NearestNeighbor | Variant::RandomInsertion)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StartRule {
    Fixed(usize),
    Random,
}

/// Which heuristic to run and how its randomness is seeded.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct HeuristicSpec {
    pub variant: Variant,
    pub start: StartRule,
    pub seed: u64,
}

impl HeuristicSpec {
    pub fn new(variant: Variant, seed: u64) -> Self {
        HeuristicSpec {
            variant,
            start: StartRule::Random,
            seed,
        }
    }

    pub fn run(&self, instance: &Instance) -> Result<ScoredTour, TspError> {
        match self.variant {
            Variant::NearestNeighbor => {
                let start = match self.start {
                    StartRule::Fixed(s) => s,
                    StartRule::Random => rng_from_seed(self.seed).random_range(0..instance.n()),
                };
                nearest_neighbor(instance, start)
            }
            v => Ok(insertion(instance, v, self.seed)),
        }
    }
}

/// Greedy tour from `start`, always moving to the closest unvisited node.
pub fn nearest_neighbor(instance: &Instance, start: usize) -> Result<ScoredTour, TspError> {
    let n = instance.n();
    if start >= n {
        return Err(TspError::IndexOutOfRange { index: start, n });
    }
    let mut visited = vec![false; n];
    let mut order = Vec::with_capacity(n);
    visited[start] = true;
    order.push(start);
    let mut last = start;
    for _ in 1..n {
        let mut best: Option<(usize, f64)> = None;
        for k in (0..n).filter(|&k| !visited[k]) {
            let d = instance.d(last, k);
            if best.is_none_or(|(_, bd)| d < bd) {
                best = Some((k, d));
            }
        }
        let (next, _) = best.expect("an unvisited node remains");
        visited[next] = true;
        order.push(next);
        last = next;
    }
    Ok(ScoredTour::score_unchecked(
        instance,
        Tour::from_vec_unchecked(order),
    ))
}

/// Cost of inserting `k` between adjacent tour nodes `i` and `j`.
pub fn insertion_cost(instance: &Instance, i: usize, j: usize, k: usize) -> Result<f64, TspError> {
    let n = instance.n();
    for index in [i, j, k] {
        if index >= n {
            return Err(TspError::IndexOutOfRange { index, n });
        }
    }
    if i == j || j == k || i == k {
        return Err(TspError::NonDistinctNodes(i, j, k));
    }
    // Collinear triples can round a hair below zero.
    Ok(raw_cost(instance, i, j, k).max(0.0))
}

#[inline]
fn raw_cost(instance: &Instance, i: usize, j: usize, k: usize) -> f64 {
    instance.d(i, k) + instance.d(k, j) - instance.d(i, j)
}

/// One insertion step: `node` was placed after `position` in `tour_before`.
#[derive(Debug, Clone, PartialEq)]
pub struct InsertionStep {
    pub tour_before: Vec<usize>,
    pub node: usize,
    pub position: usize,
}

/// Runs an insertion variant. `seed` only matters for random insertion.
///
/// # Panics
///
/// On [`Variant::NearestNeighbor`], which is not an insertion heuristic.
pub fn insertion(instance: &Instance, variant: Variant, seed: u64) -> ScoredTour {
    insertion_impl(instance, variant, seed, None)
}

/// Like [`insertion`] but also returns every intermediate step.
pub fn insertion_with_steps(
    instance: &Instance,
    variant: Variant,
    seed: u64,
) -> (ScoredTour, Vec<InsertionStep>) {
    let mut steps = Vec::new();
    let tour = insertion_impl(instance, variant, seed, Some(&mut steps));
    (tour, steps)
}

fn insertion_impl(
    instance: &Instance,
    variant: Variant,
    seed: u64,
    mut steps: Option<&mut Vec<InsertionStep>>,
) -> ScoredTour {
    assert!(
        variant != Variant::NearestNeighbor,
        "nearest neighbor is not an insertion heuristic"
    );
    let n = instance.n();
    let mut rng = rng_from_seed(seed);
    let (a, b) = match variant {
        Variant::FarthestInsertion => extreme_pair(instance, |d, best| d > best),
        Variant::NearestInsertion => extreme_pair(instance, |d, best| d < best),
        _ => {
            let a = rng.random_range(0..n);
            let mut b = rng.random_range(0..n - 1);
            if b >= a {
                b += 1;
            }
            (a, b)
        }
    };

    let mut tour = vec![a, b];
    let mut in_tour = vec![false; n];
    in_tour[a] = true;
    in_tour[b] = true;
    // Distance from each node to the closest tour node.
    let mut to_tour: Vec<f64> = (0..n)
        .map(|k| instance.d(k, a).min(instance.d(k, b)))
        .collect();

    while tour.len() < n {
        let node = match variant {
            Variant::FarthestInsertion => select_by(&to_tour, &in_tour, |d, best| d > best),
            Variant::NearestInsertion => select_by(&to_tour, &in_tour, |d, best| d < best),
            _ => {
                let free: Vec<usize> = (0..n).filter(|&k| !in_tour[k]).collect();
                free[rng.random_range(0..free.len())]
            }
        };
        let position = best_position(instance, &tour, node);
        if let Some(steps) = steps.as_deref_mut() {
            steps.push(InsertionStep {
                tour_before: tour.clone(),
                node,
                position,
            });
        }
        tour.insert(position + 1, node);
        in_tour[node] = true;
        for (k, d) in to_tour.iter_mut().enumerate() {
            *d = d.min(instance.d(k, node));
        }
    }
    ScoredTour::score_unchecked(instance, Tour::from_vec_unchecked(tour))
}

fn extreme_pair(instance: &Instance, better: impl Fn(f64, f64) -> bool) -> (usize, usize) {
    let n = instance.n();
    let mut best = (0, 1);
    let mut best_d = instance.d(0, 1);
    for i in 0..n {
        for j in (i + 1)..n {
            let d = instance.d(i, j);
            if better(d, best_d) {
                best = (i, j);
                best_d = d;
            }
        }
    }
    best
}

fn select_by(to_tour: &[f64], in_tour: &[bool], better: impl Fn(f64, f64) -> bool) -> usize {
    let mut chosen: Option<usize> = None;
    for k in (0..to_tour.len()).filter(|&k| !in_tour[k]) {
        if chosen.is_none_or(|c| better(to_tour[k], to_tour[c])) {
            chosen = Some(k);
        }
    }
    chosen.expect("an unvisited node remains")
}

/// Index `p` minimizing the cost of inserting `node` between `tour[p]` and
/// its successor.
pub(crate) fn best_position(instance: &Instance, tour: &[usize], node: usize) -> usize {
    let len = tour.len();
    let mut best = 0;
    let mut best_cost = f64::INFINITY;
    for p in 0..len {
        let cost = raw_cost(instance, tour[p], tour[(p + 1) % len], node);
        if cost < best_cost {
            best = p;
            best_cost = cost;
        }
    }
    best
}

/// Shortest tour among the three insertion variants (random insertion with
/// seed 0).
pub fn best_insertion(instance: &Instance) -> ScoredTour {
    [
        Variant::FarthestInsertion,
        Variant::NearestInsertion,
        Variant::RandomInsertion,
    ]
    .into_iter()
    .map(|v| insertion(instance, v, 0))
    .reduce(|best, t| if t.length < best.length { t } else { best })
    .expect("three candidates")
}
