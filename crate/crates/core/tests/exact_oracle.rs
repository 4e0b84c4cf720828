use lmea::exact::completion_lower_bound;
use lmea::heuristics::best_insertion;
use lmea::{
    branch_bound, brute_force, gen_clu, gen_rue, held_karp, insertion, nearest_neighbor,
    solve_exact, Instance, Method, Variant,
};

fn rel_eq(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs())
}

fn small_instances() -> Vec<Instance> {
    let mut out = Vec::new();
    for k in 0..30u64 {
        let n = 5 + (k % 6) as usize;
        let inst = if k % 2 == 0 {
            gen_rue(n, 100 + k).unwrap()
        } else {
            gen_clu(n, 100 + k, 2, 5.0).unwrap()
        };
        out.push(inst);
    }
    out
}

#[test]
fn three_methods_agree_on_small_instances() {
    for inst in small_instances() {
        let brute = brute_force(&inst).unwrap();
        let hk = held_karp(&inst).unwrap();
        let bb = branch_bound(&inst, None).unwrap();
        assert!(
            rel_eq(brute.optimal_length, hk.optimal_length),
            "{}",
            inst.id()
        );
        assert!(
            rel_eq(brute.optimal_length, bb.optimal_length),
            "{}",
            inst.id()
        );
        for r in [&brute, &hk, &bb] {
            let len = inst.tour_length(&r.optimal_tour).unwrap();
            assert_eq!(len, r.optimal_length);
            assert_eq!(r.optimal_tour.canonical(), r.optimal_tour);
        }
    }
}

#[test]
fn held_karp_and_branch_bound_agree_at_fifteen() {
    for seed in 0..10u64 {
        let inst = gen_rue(15, 500 + seed).unwrap();
        let hk = held_karp(&inst).unwrap();
        let bb = branch_bound(&inst, None).unwrap();
        assert!(
            rel_eq(hk.optimal_length, bb.optimal_length),
            "{}",
            inst.id()
        );
        assert_eq!(bb.method, Method::BranchBound);
    }
}

#[test]
fn optimum_at_twenty_beats_every_heuristic() {
    for seed in [1u64, 3] {
        let inst = gen_rue(20, seed).unwrap();
        let opt = solve_exact(&inst).unwrap();
        assert_eq!(opt.method, Method::HeldKarp);
        let bb = branch_bound(&inst, None).unwrap();
        assert!(rel_eq(opt.optimal_length, bb.optimal_length));
        for start in 0..20 {
            assert!(opt.optimal_length <= nearest_neighbor(&inst, start).unwrap().length);
        }
        for v in [
            Variant::FarthestInsertion,
            Variant::NearestInsertion,
            Variant::RandomInsertion,
        ] {
            assert!(opt.optimal_length <= insertion(&inst, v, seed).length);
        }
    }
}

#[test]
fn solve_exact_switches_to_branch_bound_above_twenty() {
    let inst = gen_rue(21, 3).unwrap();
    let r = solve_exact(&inst).unwrap();
    assert_eq!(r.method, Method::BranchBound);
    assert!(r.optimal_length <= best_insertion(&inst).length);
}

/// Shortest cycle extending `path` through every remaining node.
fn best_completion(inst: &Instance, path: &mut Vec<usize>, used: &mut [bool]) -> f64 {
    let n = inst.n();
    if path.len() == n {
        let mut len = 0.0;
        for k in 0..n {
            len += inst.d(path[k], path[(k + 1) % n]);
        }
        return len;
    }
    let mut best = f64::INFINITY;
    for v in 0..n {
        if !used[v] {
            used[v] = true;
            path.push(v);
            best = best.min(best_completion(inst, path, used));
            path.pop();
            used[v] = false;
        }
    }
    best
}

#[test]
fn spanning_tree_bound_is_admissible() {
    for seed in 0..12u64 {
        let n = 5 + (seed % 5) as usize;
        let inst = gen_rue(n, 900 + seed).unwrap();
        // Prefixes 0, 0-1, 0-1-2, ... and their reversals of the tail.
        for len in 1..n {
            for prefix in [
                (0..len).collect::<Vec<_>>(),
                std::iter::once(0)
                    .chain((1..len).rev().map(|k| n - k))
                    .collect(),
            ] {
                let mut used = vec![false; n];
                for &v in &prefix {
                    used[v] = true;
                }
                let mut path = prefix.clone();
                let best = best_completion(&inst, &mut path, &mut used);
                let bound = completion_lower_bound(&inst, &prefix);
                assert!(
                    bound <= best * (1.0 + 1e-12),
                    "{} prefix {prefix:?}: bound {bound} > best {best}",
                    inst.id()
                );
            }
        }
    }
}
