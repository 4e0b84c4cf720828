//! Seeded generators for uniform (`rue`) and clustered (`clu`) instances.
//!
//! Points live on the integer grid `{0, ..., 100}^2`. Duplicate grid points
//! are rejected and redrawn.

use std::collections::HashSet;

use rand::Rng as _;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::seed::{rng_from_seed, Rng};
use crate::tsp::{Instance, InstanceKind, Point, TspError};

/// Version tag written into instance files next to [`crate::seed::RNG_ID`].
pub const GENERATOR_VERSION: &str = "lmea-gen/1";

/// Default cluster spread for `clu` instances.
pub const DEFAULT_SIGMA: f64 = 5.0;

const GRID_SIDE: usize = 101;
const MAX_REDRAWS: usize = 100_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GenError {
    #[error("need at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("{0} nodes cannot be placed without duplicates on a 101x101 grid")]
    TooManyNodes(usize),
    #[error("cluster count must be in 1..={n}, got {clusters}")]
    BadClusterCount { clusters: usize, n: usize },
    #[error("cluster sigma must be positive, got {0}")]
    BadSigma(f64),
    #[error("could not place node {0} without a duplicate; sigma too small?")]
    PlacementFailed(usize),
    #[error(transparent)]
    Instance(#[from] TspError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CluParams {
    pub num_clusters: usize,
    pub sigma: f64,
}

impl CluParams {
    /// `ceil(n / 5)` clusters with sigma 5.
    pub fn default_for(n: usize) -> Self {
        CluParams {
            num_clusters: n.div_ceil(5).max(1),
            sigma: DEFAULT_SIGMA,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenSpec {
    pub kind: InstanceKind,
    pub n: usize,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub clu: Option<CluParams>,
}

impl GenSpec {
    pub fn rue(n: usize, seed: u64) -> Self {
        GenSpec {
            kind: InstanceKind::Rue,
            n,
            seed,
            clu: None,
        }
    }

    pub fn clu(n: usize, seed: u64, params: CluParams) -> Self {
        GenSpec {
            kind: InstanceKind::Clu,
            n,
            seed,
            clu: Some(params),
        }
    }

    pub fn generate(&self) -> Result<Instance, GenError> {
        match self.kind {
            InstanceKind::Rue => gen_rue(self.n, self.seed),
            InstanceKind::Clu => {
                let p = self.clu.unwrap_or_else(|| CluParams::default_for(self.n));
                gen_clu(self.n, self.seed, p.num_clusters, p.sigma)
            }
        }
    }
}

fn check_size(n: usize) -> Result<(), GenError> {
    if n < 3 {
        return Err(GenError::TooFewNodes(n));
    }
    if n > GRID_SIDE * GRID_SIDE {
        return Err(GenError::TooManyNodes(n));
    }
    Ok(())
}

fn grid_point(rng: &mut Rng) -> (i32, i32) {
    (rng.random_range(0..=100), rng.random_range(0..=100))
}

fn to_points(cells: Vec<(i32, i32)>) -> Vec<Point> {
    cells
        .into_iter()
        .map(|(x, y)| Point::new(f64::from(x), f64::from(y)))
        .collect()
}

/// `n` distinct points drawn uniformly from the grid.
pub fn gen_rue(n: usize, seed: u64) -> Result<Instance, GenError> {
    check_size(n)?;
    let mut rng = rng_from_seed(seed);
    let mut seen = HashSet::with_capacity(n);
    let mut cells = Vec::with_capacity(n);
    while cells.len() < n {
        let cell = grid_point(&mut rng);
        if seen.insert(cell) {
            cells.push(cell);
        }
    }
    let id = format!("rue-{n}-s{seed}");
    Ok(Instance::new(
        id,
        InstanceKind::Rue,
        seed,
        to_points(cells),
    )?)
}

/// `n` distinct points scattered around `num_clusters` uniform centers.
///
/// Node `i` belongs to center `i % num_clusters` and is offset by an
/// independent `N(0, sigma^2)` draw per axis, clamped to the square and
/// rounded to the grid.
pub fn gen_clu(n: usize, seed: u64, num_clusters: usize, sigma: f64) -> Result<Instance, GenError> {
    check_size(n)?;
    if num_clusters == 0 || num_clusters > n {
        return Err(GenError::BadClusterCount {
            clusters: num_clusters,
            n,
        });
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(GenError::BadSigma(sigma));
    }
    let mut rng = rng_from_seed(seed);
    let centers: Vec<(i32, i32)> = (0..num_clusters).map(|_| grid_point(&mut rng)).collect();
    let offset = Normal::new(0.0, sigma).map_err(|_| GenError::BadSigma(sigma))?;
    let snap = |v: f64| v.clamp(0.0, 100.0).round() as i32;

    let mut seen = HashSet::with_capacity(n);
    let mut cells = Vec::with_capacity(n);
    for i in 0..n {
        let (cx, cy) = centers[i % num_clusters];
        let mut placed = false;
        for _ in 0..MAX_REDRAWS {
            let x = snap(f64::from(cx) + offset.sample(&mut rng));
            let y = snap(f64::from(cy) + offset.sample(&mut rng));
            if seen.insert((x, y)) {
                cells.push((x, y));
                placed = true;
                break;
            }
        }
        if !placed {
            return Err(GenError::PlacementFailed(i));
        }
    }
    let id = format!("clu-{n}-s{seed}");
    Ok(Instance::new(
        id,
        InstanceKind::Clu,
        seed,
        to_points(cells),
    )?)
}

/// Mean over nodes of the distance to the nearest other node.
pub fn mean_nearest_neighbor_distance(instance: &Instance) -> f64 {
    let n = instance.n();
    let total: f64 = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i)
                .map(|j| instance.d(i, j))
                .fold(f64::INFINITY, f64::min)
        })
        .sum();
    total / n as f64
}
