//! Certified optimum cache (`optima.jsonl`), one entry per instance.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::Path;

use anyhow::{bail, Context, Result};
use lmea::tsp::approx_eq;
use lmea::{solve_exact, Instance, Method, Tour};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::manifest::LoadedInstance;

pub const OPTIMA_FILE: &str = "optima.jsonl";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimumEntry {
    pub instance_id: String,
    pub n: usize,
    pub instance_seed: u64,
    pub optimal_length: f64,
    pub optimal_tour: Tour,
    pub method: Method,
}

impl OptimumEntry {
    /// True when the entry belongs to `instance` and its tour reproduces the
    /// recorded length.
    pub fn certifies(&self, instance: &Instance) -> bool {
        self.instance_id == instance.id()
            && self.n == instance.n()
            && self.instance_seed == instance.seed()
            && instance
                .tour_length(&self.optimal_tour)
                .is_ok_and(|len| approx_eq(len, self.optimal_length))
    }
}

pub type OptimaCache = BTreeMap<String, OptimumEntry>;

pub fn load_cache(path: &Path) -> Result<OptimaCache> {
    let mut cache = OptimaCache::new();
    if !path.exists() {
        return Ok(cache);
    }
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    for (k, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let entry: OptimumEntry =
            serde_json::from_str(line).with_context(|| format!("{}:{}", path.display(), k + 1))?;
        cache.insert(entry.instance_id.clone(), entry);
    }
    Ok(cache)
}

pub fn save_cache(path: &Path, cache: &OptimaCache) -> Result<()> {
    let mut out = Vec::new();
    for entry in cache.values() {
        serde_json::to_writer(&mut out, entry)?;
        out.write_all(b"\n")?;
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SolveSummary {
    pub solved: usize,
    pub cached: usize,
}

/// Solves every instance without a valid cache entry and rewrites the cache.
/// Must be called inside the harness thread pool.
pub fn solve_all(
    instances: &[LoadedInstance],
    cache_path: &Path,
) -> Result<(OptimaCache, SolveSummary)> {
    let mut cache = load_cache(cache_path)?;
    let todo: Vec<&Instance> = instances
        .iter()
        .map(|l| &l.instance)
        .filter(|i| !cache.get(i.id()).is_some_and(|e| e.certifies(i)))
        .collect();
    let summary = SolveSummary {
        solved: todo.len(),
        cached: instances.len() - todo.len(),
    };
    let solved: Vec<Result<OptimumEntry>> = todo
        .par_iter()
        .map(|inst| {
            log::info!("solving {} (n = {})", inst.id(), inst.n());
            let r = solve_exact(inst).with_context(|| format!("solving {}", inst.id()))?;
            Ok(OptimumEntry {
                instance_id: inst.id().to_string(),
                n: inst.n(),
                instance_seed: inst.seed(),
                optimal_length: r.optimal_length,
                optimal_tour: r.optimal_tour,
                method: r.method,
            })
        })
        .collect();
    for entry in solved {
        let entry = entry?;
        cache.insert(entry.instance_id.clone(), entry);
    }
    save_cache(cache_path, &cache)?;
    Ok((cache, summary))
}

/// Looks up the certified optimum for every instance.
pub fn require_optima(instances: &[LoadedInstance], cache: &OptimaCache) -> Result<Vec<f64>> {
    instances
        .iter()
        .map(|l| match cache.get(l.instance.id()) {
            Some(e) if e.certifies(&l.instance) => Ok(e.optimal_length),
            Some(_) => bail!(
                "cached optimum for {} does not match the instance; rerun solve",
                l.instance.id()
            ),
            None => bail!("no cached optimum for {}; run solve first", l.instance.id()),
        })
        .collect()
}
