use lmea::{canonicalize, gap_percent, gen_rue, optimality_gap, validate_tour, Tour};
use proptest::prelude::*;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn shuffled(n: usize, seed: u64) -> Tour {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    Tour::new(n, order).unwrap()
}

fn rotated(t: &Tour, k: usize) -> Tour {
    let mut v = t.as_slice().to_vec();
    let len = v.len();
    v.rotate_left(k % len);
    Tour::new(len, v).unwrap()
}

fn reversed(t: &Tour) -> Tour {
    let mut v = t.as_slice().to_vec();
    v.reverse();
    Tour::new(v.len(), v).unwrap()
}

proptest! {
    #[test]
    fn length_ignores_rotation_and_direction(n in 3usize..40, seed in any::<u64>(), k in 0usize..40) {
        let inst = gen_rue(n, seed % 1000).unwrap();
        let t = shuffled(n, seed);
        let len = inst.tour_length(&t).unwrap();
        prop_assert_eq!(inst.tour_length(&rotated(&t, k)).unwrap().to_bits(), len.to_bits());
        prop_assert_eq!(inst.tour_length(&reversed(&t)).unwrap().to_bits(), len.to_bits());
    }

    #[test]
    fn canonical_form_is_idempotent_and_shared(n in 3usize..40, seed in any::<u64>(), k in 0usize..40) {
        let t = shuffled(n, seed);
        let c = canonicalize(&t);
        prop_assert_eq!(canonicalize(&c), c.clone());
        prop_assert_eq!(canonicalize(&rotated(&t, k)), c.clone());
        prop_assert_eq!(canonicalize(&reversed(&t)), c.clone());
        prop_assert_eq!(c.as_slice()[0], 0);
        prop_assert!(c.as_slice()[1] < c.as_slice()[n - 1]);
        prop_assert!(validate_tour(n, c.as_slice()).is_ok());
    }

    #[test]
    fn gap_is_monotone(opt in 1.0f64..1e6, a in 0.0f64..10.0, b in 0.0f64..10.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let g_lo = optimality_gap(opt * (1.0 + lo), opt).unwrap();
        let g_hi = optimality_gap(opt * (1.0 + hi), opt).unwrap();
        prop_assert!(g_lo >= 0.0);
        prop_assert!(g_lo <= g_hi);
        prop_assert_eq!(gap_percent(opt, opt).unwrap(), 0.0);
    }

    #[test]
    fn validation_accepts_exactly_permutations(order in prop::collection::vec(0usize..12, 0..14)) {
        let n = 10;
        let mut sorted = order.clone();
        sorted.sort_unstable();
        let is_perm = sorted == (0..n).collect::<Vec<_>>();
        prop_assert_eq!(validate_tour(n, &order).is_ok(), is_perm);
        prop_assert_eq!(Tour::new(n, order).is_ok(), is_perm);
    }
}
