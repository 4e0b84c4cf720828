//! Euclidean TSP domain types: instances, tours, tour arithmetic and the
//! optimality-gap metric.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Relative tolerance used for every length comparison.
pub const EPS: f64 = 1e-9;

/// Lower and upper bound of every coordinate.
pub const COORD_MIN: f64 = 0.0;
pub const COORD_MAX: f64 = 100.0;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum TspError {
    #[error("node index {index} out of range for instance of {n} nodes")]
    IndexOutOfRange { index: usize, n: usize },
    #[error("instance needs at least 3 nodes, got {0}")]
    TooFewNodes(usize),
    #[error("coordinate ({x}, {y}) of node {index} outside [0, 100]")]
    CoordinateOutOfRange { index: usize, x: f64, y: f64 },
    #[error("nodes {first} and {second} share the point ({x}, {y})")]
    DuplicatePoint {
        first: usize,
        second: usize,
        x: f64,
        y: f64,
    },
    #[error("invalid tour: {0}")]
    InvalidTour(#[from] TourViolation),
    #[error("tour covers {tour} nodes but instance has {instance}")]
    SizeMismatch { tour: usize, instance: usize },
    #[error("insertion cost needs three distinct nodes, got ({0}, {1}, {2})")]
    NonDistinctNodes(usize, usize, usize),
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GapError {
    #[error("optimal length must be positive, got {0}")]
    NonPositiveOptimum(f64),
    #[error("found length {found} is below the optimum {optimal}")]
    BelowOptimum { found: f64, optimal: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InstanceKind {
    /// Uniformly random nodes.
    Rue,
    /// Nodes clustered around random centers.
    Clu,
}

impl InstanceKind {
    pub fn as_str(self) -> &'static str {
        match self {
            InstanceKind::Rue => "rue",
            InstanceKind::Clu => "clu",
        }
    }
}

impl fmt::Display for InstanceKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for InstanceKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "rue" => Ok(InstanceKind::Rue),
            "clu" => Ok(InstanceKind::Clu),
            other => Err(format!(
                "unknown instance kind `{other}` (expected rue or clu)"
            )),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub const fn new(x: f64, y: f64) -> Self {
        Point { x, y }
    }

    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// A Euclidean TSP instance. The full distance matrix is computed once at
/// construction.
#[derive(Clone)]
pub struct Instance {
    id: String,
    kind: InstanceKind,
    seed: u64,
    coords: Vec<Point>,
    dist: Vec<f64>,
}

impl Instance {
    pub fn new(
        id: impl Into<String>,
        kind: InstanceKind,
        seed: u64,
        coords: Vec<Point>,
    ) -> Result<Self, TspError> {
        let n = coords.len();
        if n < 3 {
            return Err(TspError::TooFewNodes(n));
        }
        for (index, p) in coords.iter().enumerate() {
            let in_range = |v: f64| (COORD_MIN..=COORD_MAX).contains(&v);
            if !in_range(p.x) || !in_range(p.y) {
                return Err(TspError::CoordinateOutOfRange {
                    index,
                    x: p.x,
                    y: p.y,
                });
            }
        }
        for second in 1..n {
            for first in 0..second {
                if coords[first] == coords[second] {
                    let Point { x, y } = coords[second];
                    return Err(TspError::DuplicatePoint {
                        first,
                        second,
                        x,
                        y,
                    });
                }
            }
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in (i + 1)..n {
                let d = coords[i].distance(&coords[j]);
                dist[i * n + j] = d;
                dist[j * n + i] = d;
            }
        }
        Ok(Instance {
            id: id.into(),
            kind,
            seed,
            coords,
            dist,
        })
    }

    /// Same instance under a different label.
    pub fn with_id(mut self, id: impl Into<String>) -> Self {
        self.id = id.into();
        self
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn kind(&self) -> InstanceKind {
        self.kind
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Point] {
        &self.coords
    }

    /// Checked Euclidean distance between two nodes.
    pub fn distance(&self, i: usize, j: usize) -> Result<f64, TspError> {
        let n = self.n();
        for index in [i, j] {
            if index >= n {
                return Err(TspError::IndexOutOfRange { index, n });
            }
        }
        Ok(self.d(i, j))
    }

    /// Unchecked distance lookup for hot loops. Panics on out-of-range
    /// indices.
    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n() + j]
    }

    /// Length of the closed cycle visiting `tour` in order.
    pub fn tour_length(&self, tour: &Tour) -> Result<f64, TspError> {
        if tour.len() != self.n() {
            return Err(TspError::SizeMismatch {
                tour: tour.len(),
                instance: self.n(),
            });
        }
        Ok(self.cycle_length(tour.as_slice()))
    }

    /// Cycle length of an already validated order.
    ///
    /// Edges are summed along the canonical form so that every rotation and
    /// reflection of a cycle yields a bit-identical length.
    pub(crate) fn cycle_length(&self, order: &[usize]) -> f64 {
        let canon = canonical_order(order);
        self.path_sum(&canon) + self.d(canon[canon.len() - 1], canon[0])
    }

    fn path_sum(&self, order: &[usize]) -> f64 {
        order.windows(2).map(|w| self.d(w[0], w[1])).sum()
    }
}

impl PartialEq for Instance {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
            && self.kind == other.kind
            && self.seed == other.seed
            && self.coords == other.coords
    }
}

impl fmt::Debug for Instance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Instance")
            .field("id", &self.id)
            .field("kind", &self.kind)
            .field("seed", &self.seed)
            .field("coords", &self.coords)
            .finish()
    }
}

/// Why an index sequence is not a permutation of `0..n`.
#[derive(Debug, Error, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "violation", rename_all = "snake_case")]
pub enum TourViolation {
    #[error("wrong length: expected {expected} indices, found {found}")]
    WrongLength { expected: usize, found: usize },
    #[error("duplicate index {index}")]
    DuplicateIndex { index: usize },
    #[error("index {index} out of range 0..{n}")]
    OutOfRange { index: usize, n: usize },
}

/// A permutation of `0..n`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Tour(Vec<usize>);

impl Tour {
    /// Validates `order` against `n` nodes.
    pub fn new(n: usize, order: Vec<usize>) -> Result<Tour, TourViolation> {
        validate_tour(n, &order)?;
        Ok(Tour(order))
    }

    /// The identity tour `0, 1, ..., n-1`.
    pub fn identity(n: usize) -> Tour {
        Tour((0..n).collect())
    }

    pub(crate) fn from_vec_unchecked(order: Vec<usize>) -> Tour {
        debug_assert!(validate_tour(order.len(), &order).is_ok());
        Tour(order)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<usize> {
        self.0
    }

    pub fn canonical(&self) -> Tour {
        canonicalize(self)
    }
}

impl AsRef<[usize]> for Tour {
    fn as_ref(&self) -> &[usize] {
        &self.0
    }
}

impl fmt::Display for Tour {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{v}")?;
        }
        Ok(())
    }
}

/// Checks that `order` is a permutation of `0..n`, reporting the first
/// violation found.
pub fn validate_tour(n: usize, order: &[usize]) -> Result<(), TourViolation> {
    if order.len() != n {
        return Err(TourViolation::WrongLength {
            expected: n,
            found: order.len(),
        });
    }
    let mut seen = vec![false; n];
    for &index in order {
        if index >= n {
            return Err(TourViolation::OutOfRange { index, n });
        }
        if std::mem::replace(&mut seen[index], true) {
            return Err(TourViolation::DuplicateIndex { index });
        }
    }
    Ok(())
}

/// Rotates the tour so node 0 comes first and orients it so the second entry
/// is the smaller neighbor of node 0.
pub fn canonicalize(tour: &Tour) -> Tour {
    Tour(canonical_order(tour.as_slice()))
}

pub(crate) fn canonical_order(order: &[usize]) -> Vec<usize> {
    let n = order.len();
    let Some(zero) = order.iter().position(|&v| v == 0) else {
        return order.to_vec();
    };
    let next = order[(zero + 1) % n];
    let prev = order[(zero + n - 1) % n];
    if next <= prev {
        (0..n).map(|k| order[(zero + k) % n]).collect()
    } else {
        (0..n).map(|k| order[(zero + n - k) % n]).collect()
    }
}

/// A tour paired with its cycle length on the owning instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoredTour {
    pub tour: Tour,
    pub length: f64,
}

impl ScoredTour {
    pub fn score(instance: &Instance, tour: Tour) -> Result<ScoredTour, TspError> {
        let length = instance.tour_length(&tour)?;
        Ok(ScoredTour { tour, length })
    }

    pub(crate) fn score_unchecked(instance: &Instance, tour: Tour) -> ScoredTour {
        let length = instance.cycle_length(tour.as_slice());
        ScoredTour { tour, length }
    }
}

/// `a` and `b` are equal within [`EPS`] relative tolerance.
pub fn approx_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= EPS * a.abs().max(b.abs()).max(1.0)
}

/// `a` is strictly shorter than `b` beyond tolerance.
pub fn strictly_less(a: f64, b: f64) -> bool {
    a < b && !approx_eq(a, b)
}

/// Relative optimality gap `(found - opt) / opt` as a fraction.
///
/// Values below the optimum by less than [`EPS`] are reported as zero; larger
/// undershoots indicate a wrong optimum and are rejected.
pub fn optimality_gap(found: f64, optimal: f64) -> Result<f64, GapError> {
    if optimal.is_nan() || optimal <= 0.0 {
        return Err(GapError::NonPositiveOptimum(optimal));
    }
    if found < optimal {
        if approx_eq(found, optimal) {
            return Ok(0.0);
        }
        return Err(GapError::BelowOptimum { found, optimal });
    }
    Ok((found - optimal) / optimal)
}

/// [`optimality_gap`] in percent.
pub fn gap_percent(found: f64, optimal: f64) -> Result<f64, GapError> {
    optimality_gap(found, optimal).map(|g| g * 100.0)
}
