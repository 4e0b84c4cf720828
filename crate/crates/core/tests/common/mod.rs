#![allow(dead_code)]

use lmea::{RunLog, Tour};

/// Best length never rises and every generation keeps exactly `size` members.
pub fn assert_elitist(log: &RunLog, size: usize) {
    let mut previous = log.initial_best_length;
    for r in &log.records {
        assert!(
            r.best_length <= previous,
            "gen {}: best rose from {previous} to {}",
            r.gen,
            r.best_length
        );
        assert_eq!(r.population_size, size, "gen {}", r.gen);
        previous = r.best_length;
    }
    assert_eq!(log.best.length, previous);
}

pub fn tour(order: &[usize]) -> Tour {
    Tour::new(order.len(), order.to_vec()).expect("test tour is a permutation")
}
