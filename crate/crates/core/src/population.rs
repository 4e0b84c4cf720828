use serde::{Deserialize, Serialize};

use crate::tsp::ScoredTour;

/// Scored tours of one generation, kept sorted by ascending length.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Population {
    members: Vec<ScoredTour>,
}

impl Population {
    /// Wraps members that are already sorted ascending.
    pub(crate) fn from_sorted(members: Vec<ScoredTour>) -> Self {
        debug_assert!(members.windows(2).all(|w| w[0].length <= w[1].length));
        Population { members }
    }

    pub fn members(&self) -> &[ScoredTour] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    pub fn best(&self) -> Option<&ScoredTour> {
        self.members.first()
    }

    pub fn worst(&self) -> Option<&ScoredTour> {
        self.members.last()
    }

    pub fn mean_length(&self) -> f64 {
        if self.members.is_empty() {
            return f64::NAN;
        }
        self.members.iter().map(|m| m.length).sum::<f64>() / self.members.len() as f64
    }

    pub fn into_members(self) -> Vec<ScoredTour> {
        self.members
    }
}
