//! TOML harness configuration. Every field is optional; command-line flags
//! override file values.
//!
//! ```toml
//! seed = 1
//! workers = 4
//! runs = 1
//! repetitions = 10
//!
//! [evolve]
//! population_size = 16
//! generations = 250
//! stagnation_window = 20
//! alpha = 0.1
//!
//! [evolve.backend]
//! kind = "remote"
//! model = "gpt-3.5-turbo-0613"
//! requests_per_minute = 60
//! ```

use std::fs;
use std::path::Path;

use anyhow::{Context, Result};
use lmea::EvolveConfig;
use serde::{Deserialize, Serialize};

pub const DEFAULT_SEED: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HarnessConfig {
    /// Master seed; every task seed is derived from it.
    pub seed: u64,
    /// Worker threads; `None` uses all cores.
    pub workers: Option<usize>,
    /// Evolutionary runs per instance.
    pub runs: usize,
    /// Seeded repetitions of randomized heuristics per instance.
    pub repetitions: usize,
    /// Template for every run; `seed` is replaced per task.
    pub evolve: EvolveConfig,
}

impl Default for HarnessConfig {
    fn default() -> Self {
        HarnessConfig {
            seed: DEFAULT_SEED,
            workers: None,
            runs: 1,
            repetitions: 10,
            evolve: EvolveConfig::default(),
        }
    }
}

impl HarnessConfig {
    pub fn load(path: &Path) -> Result<HarnessConfig> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))
    }

    pub fn load_or_default(path: Option<&Path>) -> Result<HarnessConfig> {
        path.map_or_else(|| Ok(HarnessConfig::default()), Self::load)
    }

    pub fn thread_pool(&self) -> Result<rayon::ThreadPool> {
        let mut builder = rayon::ThreadPoolBuilder::new();
        if let Some(w) = self.workers {
            builder = builder.num_threads(w.max(1));
        }
        Ok(builder.build()?)
    }
}
