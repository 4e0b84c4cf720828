//! Exact solvers: exhaustive enumeration, Held-Karp dynamic programming and
//! depth-first branch-and-bound with a spanning-tree bound.
//!
//! Every solver returns its tour in canonical form. Lengths are recomputed
//! with [`Instance::tour_length`] so all methods report identical values for
//! identical cycles.

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::heuristics::best_insertion;
use crate::tsp::{canonical_order, strictly_less, Instance, Tour};

pub const BRUTE_FORCE_MAX_N: usize = 10;
pub const HELD_KARP_MAX_N: usize = 20;
pub const BRANCH_BOUND_MAX_N: usize = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Brute,
    HeldKarp,
    BranchBound,
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Brute => "brute",
            Method::HeldKarp => "held_karp",
            Method::BranchBound => "branch_bound",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SolverError {
    #[error("{method} supports at most {max} nodes, instance has {n}{hint}")]
    TooLarge {
        method: Method,
        n: usize,
        max: usize,
        hint: &'static str,
    },
    #[error("no tour is at most the supplied upper bound {0}")]
    UpperBoundBelowOptimum(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactResult {
    pub optimal_length: f64,
    pub optimal_tour: Tour,
    pub method: Method,
    /// Search nodes visited (branch-and-bound only).
    pub nodes_expanded: u64,
    /// Times the incumbent was replaced (branch-and-bound only).
    pub improvements: u32,
}

impl ExactResult {
    fn new(instance: &Instance, order: Vec<usize>, method: Method) -> Self {
        let tour = Tour::from_vec_unchecked(canonical_order(&order));
        let optimal_length = instance.cycle_length(tour.as_slice());
        ExactResult {
            optimal_length,
            optimal_tour: tour,
            method,
            nodes_expanded: 0,
            improvements: 0,
        }
    }
}

/// Held-Karp up to [`HELD_KARP_MAX_N`] nodes, branch-and-bound above.
pub fn solve_exact(instance: &Instance) -> Result<ExactResult, SolverError> {
    if instance.n() <= HELD_KARP_MAX_N {
        held_karp(instance)
    } else {
        branch_bound(instance, None)
    }
}

/// Enumerates every cycle with node 0 first and `second < last`.
pub fn brute_force(instance: &Instance) -> Result<ExactResult, SolverError> {
    let n = instance.n();
    if n > BRUTE_FORCE_MAX_N {
        return Err(SolverError::TooLarge {
            method: Method::Brute,
            n,
            max: BRUTE_FORCE_MAX_N,
            hint: "",
        });
    }
    let mut best: Option<(f64, Vec<usize>)> = None;
    let mut path = vec![0];
    let mut used = vec![false; n];
    used[0] = true;
    enumerate(instance, &mut path, &mut used, &mut best);
    let (_, order) = best.expect("n >= 3 has at least one cycle");
    Ok(ExactResult::new(instance, order, Method::Brute))
}

// Children are visited in ascending index order, so full sequences arrive in
// lexicographic order and the first of several tied optima is kept.
fn enumerate(
    instance: &Instance,
    path: &mut Vec<usize>,
    used: &mut [bool],
    best: &mut Option<(f64, Vec<usize>)>,
) {
    let n = used.len();
    if path.len() == n {
        if path[1] > path[n - 1] {
            return;
        }
        let len = instance.cycle_length(path);
        if best.as_ref().is_none_or(|(b, _)| strictly_less(len, *b)) {
            *best = Some((len, path.clone()));
        }
        return;
    }
    for k in 1..n {
        if used[k] {
            continue;
        }
        used[k] = true;
        path.push(k);
        enumerate(instance, path, used, best);
        path.pop();
        used[k] = false;
    }
}

/// Subset dynamic program over node sets; node 0 is the fixed start.
pub fn held_karp(instance: &Instance) -> Result<ExactResult, SolverError> {
    let n = instance.n();
    if n > HELD_KARP_MAX_N {
        return Err(SolverError::TooLarge {
            method: Method::HeldKarp,
            n,
            max: HELD_KARP_MAX_N,
            hint: "; use branch_bound",
        });
    }
    // Bit b of a mask stands for node b + 1.
    let m = n - 1;
    let full = (1usize << m) - 1;
    let mut cost = vec![f64::INFINITY; (full + 1) * m];
    let mut parent = vec![u8::MAX; (full + 1) * m];
    for j in 0..m {
        cost[(1 << j) * m + j] = instance.d(0, j + 1);
    }
    for mask in 1..=full {
        for j in 0..m {
            if mask & (1 << j) == 0 {
                continue;
            }
            let here = cost[mask * m + j];
            if here == f64::INFINITY {
                continue;
            }
            for k in 0..m {
                if mask & (1 << k) != 0 {
                    continue;
                }
                let next = mask | (1 << k);
                let candidate = here + instance.d(j + 1, k + 1);
                let slot = next * m + k;
                if candidate < cost[slot] {
                    cost[slot] = candidate;
                    parent[slot] = j as u8;
                }
            }
        }
    }
    let mut last = 0;
    let mut best = f64::INFINITY;
    for j in 0..m {
        let total = cost[full * m + j] + instance.d(j + 1, 0);
        if total < best {
            best = total;
            last = j;
        }
    }
    let mut order = Vec::with_capacity(n);
    let mut mask = full;
    let mut j = last;
    loop {
        order.push(j + 1);
        let p = parent[mask * m + j];
        mask &= !(1 << j);
        if mask == 0 {
            break;
        }
        j = p as usize;
    }
    order.push(0);
    order.reverse();
    Ok(ExactResult::new(instance, order, Method::HeldKarp))
}

/// Weight of a minimum spanning tree over `nodes` (Prim, quadratic).
pub fn mst_weight(instance: &Instance, nodes: &[usize]) -> f64 {
    let k = nodes.len();
    if k < 2 {
        return 0.0;
    }
    let mut in_tree = [false; 64];
    let mut key = [f64::INFINITY; 64];
    assert!(k <= 64, "spanning tree over at most 64 nodes");
    key[0] = 0.0;
    let mut total = 0.0;
    for _ in 0..k {
        let mut u = usize::MAX;
        let mut best = f64::INFINITY;
        for v in 0..k {
            if !in_tree[v] && key[v] < best {
                best = key[v];
                u = v;
            }
        }
        in_tree[u] = true;
        total += best;
        for v in 0..k {
            if !in_tree[v] {
                let d = instance.d(nodes[u], nodes[v]);
                if d < key[v] {
                    key[v] = d;
                }
            }
        }
    }
    total
}

/// Lower bound on any tour that starts with `path` (which must begin at node
/// 0): the path length plus a spanning tree over the unvisited nodes and both
/// path endpoints.
pub fn completion_lower_bound(instance: &Instance, path: &[usize]) -> f64 {
    let n = instance.n();
    let walked: f64 = path.windows(2).map(|w| instance.d(w[0], w[1])).sum();
    let mut nodes: Vec<usize> = (0..n).filter(|v| !path.contains(v)).collect();
    if nodes.is_empty() {
        return walked + instance.d(path[path.len() - 1], path[0]);
    }
    nodes.push(path[0]);
    if path.len() > 1 {
        nodes.push(path[path.len() - 1]);
    }
    walked + mst_weight(instance, &nodes)
}

struct Search<'a> {
    instance: &'a Instance,
    best_len: f64,
    best_order: Vec<usize>,
    upper_hint: Option<f64>,
    nodes_expanded: u64,
    improvements: u32,
    scratch: Vec<usize>,
}

impl Search<'_> {
    fn prune(&self, bound: f64) -> bool {
        !strictly_less(bound, self.best_len)
            || self.upper_hint.is_some_and(|u| strictly_less(u, bound))
    }

    fn dfs(&mut self, path: &mut Vec<usize>, visited: u64, walked: f64) {
        self.nodes_expanded += 1;
        let n = self.instance.n();
        let last = *path.last().expect("path starts at node 0");
        let mut children: Vec<usize> = (0..n).filter(|&v| visited & (1 << v) == 0).collect();
        children.sort_by(|&a, &b| {
            self.instance
                .d(last, a)
                .total_cmp(&self.instance.d(last, b))
                .then(a.cmp(&b))
        });
        // For every child c the bound's tree spans (unvisited \ {c}) + {c, 0},
        // which is the same set for all children.
        let tree = if path.len() + 1 < n {
            self.scratch.clear();
            self.scratch.extend_from_slice(&children);
            self.scratch.push(0);
            mst_weight(self.instance, &self.scratch)
        } else {
            0.0
        };
        for c in children {
            let step = walked + self.instance.d(last, c);
            path.push(c);
            if path.len() == n {
                let total = step + self.instance.d(c, 0);
                if strictly_less(total, self.best_len) {
                    let order = path.clone();
                    self.best_len = self.instance.cycle_length(&order);
                    self.best_order = order;
                    self.improvements += 1;
                }
            } else if self.prune(step + tree) {
                // Children are sorted by step cost, so the rest prune too.
                path.pop();
                break;
            } else {
                self.dfs(path, visited | (1 << c), step);
            }
            path.pop();
        }
    }
}

/// Depth-first branch-and-bound from node 0.
///
/// The incumbent starts as the best insertion-heuristic tour. An
/// `initial_upper_bound` tighter than that tour prunes more aggressively;
/// if it is below the true optimum no tour can be certified and an error is
/// returned.
pub fn branch_bound(
    instance: &Instance,
    initial_upper_bound: Option<f64>,
) -> Result<ExactResult, SolverError> {
    let n = instance.n();
    if n > BRANCH_BOUND_MAX_N {
        return Err(SolverError::TooLarge {
            method: Method::BranchBound,
            n,
            max: BRANCH_BOUND_MAX_N,
            hint: "",
        });
    }
    let seed = best_insertion(instance);
    let upper_hint = initial_upper_bound.filter(|&u| strictly_less(u, seed.length));
    let mut search = Search {
        instance,
        best_len: seed.length,
        best_order: seed.tour.into_vec(),
        upper_hint,
        nodes_expanded: 0,
        improvements: 0,
        scratch: Vec::with_capacity(n + 2),
    };
    let mut path = Vec::with_capacity(n);
    path.push(0);
    search.dfs(&mut path, 1, 0.0);
    if let Some(u) = upper_hint {
        if search.improvements == 0 {
            return Err(SolverError::UpperBoundBelowOptimum(u));
        }
    }
    let mut result = ExactResult::new(instance, search.best_order, Method::BranchBound);
    result.nodes_expanded = search.nodes_expanded;
    result.improvements = search.improvements;
    Ok(result)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tsp::{InstanceKind, Point};

    fn inst(points: &[(f64, f64)]) -> Instance {
        let coords = points.iter().map(|&(x, y)| Point::new(x, y)).collect();
        Instance::new("t", InstanceKind::Rue, 0, coords).unwrap()
    }

    fn unit_square() -> Instance {
        inst(&[(0.0, 0.0), (0.0, 1.0), (1.0, 1.0), (1.0, 0.0)])
    }

    #[test]
    fn unit_square_all_methods() {
        let sq = unit_square();
        let b = brute_force(&sq).unwrap();
        assert_eq!(b.optimal_length, 4.0);
        assert_eq!(b.optimal_tour.as_slice(), &[0, 1, 2, 3]);
        assert_eq!(held_karp(&sq).unwrap().optimal_length, 4.0);
        let bb = branch_bound(&sq, Some(4.0)).unwrap();
        assert_eq!(bb.optimal_length, 4.0);
        assert_eq!(bb.improvements, 0);
    }

    #[test]
    fn triangle() {
        let tri = inst(&[(0.0, 0.0), (3.0, 0.0), (0.0, 4.0)]);
        assert_eq!(brute_force(&tri).unwrap().optimal_length, 12.0);
        assert_eq!(held_karp(&tri).unwrap().optimal_length, 12.0);
        assert_eq!(branch_bound(&tri, None).unwrap().optimal_length, 12.0);
    }

    #[test]
    fn size_limits() {
        let big = crate::generator::gen_rue(31, 1).unwrap();
        assert!(matches!(
            brute_force(&big),
            Err(SolverError::TooLarge {
                method: Method::Brute,
                ..
            })
        ));
        let err = held_karp(&big).unwrap_err();
        assert!(err.to_string().contains("branch_bound"), "{err}");
        assert!(matches!(
            branch_bound(&big, None),
            Err(SolverError::TooLarge { .. })
        ));
    }

    #[test]
    fn bound_below_optimum_is_reported() {
        let sq = unit_square();
        assert_eq!(
            branch_bound(&sq, Some(3.5)),
            Err(SolverError::UpperBoundBelowOptimum(3.5))
        );
    }

    #[test]
    fn tight_external_bound_still_finds_tour() {
        let inst = crate::generator::gen_rue(9, 5).unwrap();
        let opt = held_karp(&inst).unwrap();
        let heur = best_insertion(&inst);
        let bb = branch_bound(&inst, Some(opt.optimal_length)).unwrap();
        assert_eq!(bb.optimal_length, opt.optimal_length);
        if strictly_less(opt.optimal_length, heur.length) {
            assert!(bb.improvements >= 1);
        }
    }

    #[test]
    fn mst_of_line() {
        let line = inst(&[(0.0, 0.0), (1.0, 0.0), (3.0, 0.0), (6.0, 0.0)]);
        assert_eq!(mst_weight(&line, &[0, 1, 2, 3]), 6.0);
        assert_eq!(mst_weight(&line, &[2]), 0.0);
    }
}
