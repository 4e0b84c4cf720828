//! The five harness commands. Each takes an output directory laid out as
//!
//! ```text
//! manifest.json  instances/  optima.jsonl
//! results/{baselines,evolve-<mode>}.json
//! runs/<mode>/<instance>-r<run>.jsonl
//! transcripts/<mode>/<instance>-r<run>.jsonl
//! convergence/<mode>/<instance>-r<run>.csv
//! convergence/summary/<mode>-<set>.csv
//! timings/<mode>.json
//! tables/results.{csv,txt}
//! ```
//!
//! Everything except `timings/` is a pure function of the inputs and seeds.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use lmea::backend::{write_transcript, RateLimiter};
use lmea::seed::derive_seed;
use lmea::{
    evolve, BackendSpec, BuiltinConfig, EvolveConfig, HeuristicSpec, InstanceKind, PromptMode,
    RunLog, Variant,
};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::manifest::{LoadedInstance, Manifest, MANIFEST_FILE};
use crate::optima::{load_cache, require_optima, solve_all, SolveSummary, OPTIMA_FILE};
use crate::results::{gap_of, Fragment, ResultRow, ResultTable};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvolveMode {
    /// Crossover and mutation instructions, self-adaptive temperature.
    Lmea,
    /// Direct generation from the population.
    Opro,
    /// As lmea with the temperature held at its initial value.
    #[value(name = "lmea_star")]
    LmeaStar,
}

impl EvolveMode {
    pub fn label(self) -> &'static str {
        match self {
            EvolveMode::Lmea => "LMEA",
            EvolveMode::Opro => "OPRO",
            EvolveMode::LmeaStar => "LMEA*",
        }
    }

    pub fn stem(self) -> &'static str {
        match self {
            EvolveMode::Lmea => "lmea",
            EvolveMode::Opro => "opro",
            EvolveMode::LmeaStar => "lmea_star",
        }
    }

    pub fn apply(self, mut config: EvolveConfig) -> EvolveConfig {
        match self {
            EvolveMode::Lmea => {
                config.mode = PromptMode::Lmea;
            }
            EvolveMode::Opro => {
                config.mode = PromptMode::Opro;
            }
            EvolveMode::LmeaStar => {
                config.mode = PromptMode::Lmea;
                config.self_adapt = false;
            }
        }
        config
    }
}

pub fn manifest_path(out: &Path, manifest: Option<&Path>) -> PathBuf {
    manifest.map_or_else(|| out.join(MANIFEST_FILE), Path::to_path_buf)
}

fn load(manifest: &Path) -> Result<(Manifest, Vec<LoadedInstance>)> {
    let m = Manifest::load(manifest)?;
    let instances = m.load_instances(manifest)?;
    Ok((m, instances))
}

pub fn cmd_gen(
    out: &Path,
    kinds: &[InstanceKind],
    sizes: &[usize],
    per_set: usize,
    seed: u64,
) -> Result<Manifest> {
    if per_set == 0 || kinds.is_empty() || sizes.is_empty() {
        bail!("need at least one kind, one size and one instance per set");
    }
    let manifest = Manifest::plan(kinds, sizes, per_set, seed);
    manifest.materialize(out)?;
    Ok(manifest)
}

pub fn cmd_solve(manifest: &Path, out: &Path, pool: &rayon::ThreadPool) -> Result<SolveSummary> {
    let (_, instances) = load(manifest)?;
    fs::create_dir_all(out)?;
    let (_, summary) = pool.install(|| solve_all(&instances, &out.join(OPTIMA_FILE)))?;
    Ok(summary)
}

fn optima_for(instances: &[LoadedInstance], out: &Path) -> Result<Vec<f64>> {
    let cache = load_cache(&out.join(OPTIMA_FILE))?;
    require_optima(instances, &cache)
}

/// Runs the four construction heuristics. Randomized ones are repeated
/// `repetitions` times per instance; each row holds the mean gap over the
/// repetitions.
pub fn cmd_baselines(
    manifest: &Path,
    out: &Path,
    repetitions: usize,
    pool: &rayon::ThreadPool,
) -> Result<Fragment> {
    let (m, instances) = load(manifest)?;
    let optima = optima_for(&instances, out)?;
    let repetitions = repetitions.max(1);
    let tasks: Vec<(usize, Variant)> = (0..instances.len())
        .flat_map(|k| Variant::ALL.into_iter().map(move |v| (k, v)))
        .collect();
    let rows: Vec<Result<ResultRow>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(k, variant)| {
                let loaded = &instances[k];
                let id = loaded.instance.id();
                let reps = if variant.is_randomized() {
                    repetitions
                } else {
                    1
                };
                let mut gaps = Vec::with_capacity(reps);
                for r in 0..reps {
                    let seed = derive_seed(m.master_seed, &format!("baselines/{variant}/{id}/{r}"));
                    let tour = HeuristicSpec::new(variant, seed).run(&loaded.instance)?;
                    gaps.push(gap_of(tour.length, optima[k])?);
                }
                let gap = gaps.iter().sum::<f64>() / reps as f64;
                Ok(ResultRow {
                    set: loaded.set.clone(),
                    algorithm: variant.label().to_string(),
                    instance_id: id.to_string(),
                    run: 0,
                    gap_percent: gap,
                    generations_to_optimum: None,
                    success: gap == 0.0,
                    complete: true,
                })
            })
            .collect()
    });
    let fragment = Fragment::new(rows.into_iter().collect::<Result<_>>()?);
    let dir = out.join("results");
    fs::create_dir_all(&dir)?;
    fragment.save(&dir.join("baselines.json"))?;
    Ok(fragment)
}

#[derive(Debug, Clone)]
pub struct EvolveOptions {
    pub mode: EvolveMode,
    pub runs: usize,
    /// Template; mode and per-task seed are applied on top.
    pub config: EvolveConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Timing {
    instance_id: String,
    run: usize,
    wall_time_secs: f64,
}

#[derive(Debug, Clone, Serialize)]
struct ConvergenceRow {
    generation: usize,
    best_gap: f64,
    mean_gap: f64,
}

fn write_convergence(path: &Path, rows: &[(usize, f64, f64)]) -> Result<()> {
    let mut w =
        csv::Writer::from_path(path).with_context(|| format!("writing {}", path.display()))?;
    for &(generation, best_gap, mean_gap) in rows {
        w.serialize(ConvergenceRow {
            generation,
            best_gap,
            mean_gap,
        })?;
    }
    w.flush()?;
    Ok(())
}

/// The builtin backend takes the task seed. A scripted backend pointing at a
/// directory replays `<dir>/<mode>/<instance>-r<run>.jsonl`, the layout
/// `evolve` writes.
fn backend_for_task(spec: &BackendSpec, mode: EvolveMode, stem: &str, seed: u64) -> BackendSpec {
    match spec {
        BackendSpec::Builtin(b) => BackendSpec::Builtin(BuiltinConfig { seed, ..b.clone() }),
        BackendSpec::Scripted {
            transcript,
            retry_budget,
        } if transcript.is_dir() => BackendSpec::Scripted {
            transcript: transcript.join(mode.stem()).join(format!("{stem}.jsonl")),
            retry_budget: *retry_budget,
        },
        other => other.clone(),
    }
}

pub fn cmd_evolve(
    manifest: &Path,
    out: &Path,
    options: &EvolveOptions,
    pool: &rayon::ThreadPool,
) -> Result<Fragment> {
    let (m, instances) = load(manifest)?;
    let optima = optima_for(&instances, out)?;
    let mode = options.mode;
    let template = mode.apply(options.config.clone());
    template.validate()?;
    let limiter = match &template.backend {
        BackendSpec::Remote(r) => r.requests_per_minute.map(RateLimiter::per_minute),
        _ => None,
    };
    let dirs = ["runs", "transcripts", "convergence"].map(|d| out.join(d).join(mode.stem()));
    for d in &dirs {
        fs::create_dir_all(d)?;
    }
    let tasks: Vec<(usize, usize)> = (0..instances.len())
        .flat_map(|k| (0..options.runs.max(1)).map(move |r| (k, r)))
        .collect();
    let outcomes: Vec<Result<(ResultRow, Timing)>> = pool.install(|| {
        tasks
            .par_iter()
            .map(|&(k, run)| {
                let loaded = &instances[k];
                let id = loaded.instance.id();
                let stem = format!("{id}-r{run}");
                let seed =
                    derive_seed(m.master_seed, &format!("evolve/{}/{id}/{run}", mode.stem()));
                let config = EvolveConfig {
                    seed,
                    backend: backend_for_task(&template.backend, mode, &stem, seed),
                    ..template.clone()
                };
                let mut backend = config
                    .backend
                    .build(seed, limiter.clone())
                    .with_context(|| format!("backend for {stem}"))?;
                log::info!("evolving {stem} ({})", mode.label());
                let log = evolve(&loaded.instance, &config, &mut backend, Some(optima[k]))?;
                if !log.is_complete() {
                    log::warn!("{stem}: run ended early: {:?}", log.status);
                }
                persist_run(&dirs, &stem, &log, optima[k])?;
                let gap = gap_of(log.best.length, optima[k])?;
                Ok((
                    ResultRow {
                        set: loaded.set.clone(),
                        algorithm: mode.label().to_string(),
                        instance_id: id.to_string(),
                        run,
                        gap_percent: gap,
                        generations_to_optimum: log.generations_to_optimum,
                        success: log.generations_to_optimum.is_some(),
                        complete: log.is_complete(),
                    },
                    Timing {
                        instance_id: id.to_string(),
                        run,
                        wall_time_secs: log.wall_time_secs,
                    },
                ))
            })
            .collect()
    });
    let mut rows = Vec::new();
    let mut timings = Vec::new();
    for o in outcomes {
        let (row, timing) = o?;
        rows.push(row);
        timings.push(timing);
    }
    let fragment = Fragment::new(rows);
    let results = out.join("results");
    fs::create_dir_all(&results)?;
    fragment.save(&results.join(format!("evolve-{}.json", mode.stem())))?;
    let timing_dir = out.join("timings");
    fs::create_dir_all(&timing_dir)?;
    fs::write(
        timing_dir.join(format!("{}.json", mode.stem())),
        serde_json::to_string_pretty(&timings)? + "\n",
    )?;
    Ok(fragment)
}

fn persist_run(dirs: &[PathBuf; 3], stem: &str, log: &RunLog, optimum: f64) -> Result<()> {
    let [runs, transcripts, convergence] = dirs;
    fs::write(runs.join(format!("{stem}.jsonl")), log.to_jsonl())?;
    write_transcript(transcripts.join(format!("{stem}.jsonl")), &log.transcript)?;
    let mut rows = log.convergence(optimum)?;
    for r in &mut rows {
        // Gaps within the length tolerance are zero, as in the tables.
        if r.1.abs() < 1e-7 {
            r.1 = 0.0;
        }
        if r.2.abs() < 1e-7 {
            r.2 = 0.0;
        }
    }
    write_convergence(&convergence.join(format!("{stem}.csv")), &rows)
}

#[derive(Debug, Clone, Deserialize)]
struct ConvergenceIn {
    generation: usize,
    best_gap: f64,
    mean_gap: f64,
}

#[derive(Debug, Clone, Serialize)]
struct SummaryRow {
    generation: usize,
    runs: usize,
    best_gap: f64,
    mean_gap: f64,
}

/// Averages per-run convergence series into one series per (mode, set).
fn summarize_convergence(out: &Path, fragment: &Fragment) -> Result<usize> {
    let mut sets: BTreeMap<String, String> = BTreeMap::new();
    for r in &fragment.rows {
        sets.insert(r.instance_id.clone(), r.set.clone());
    }
    let summary_dir = out.join("convergence").join("summary");
    let mut written = 0;
    for mode in EvolveMode::value_variants() {
        let dir = out.join("convergence").join(mode.stem());
        if !dir.is_dir() {
            continue;
        }
        let mut files: Vec<PathBuf> = fs::read_dir(&dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        files.sort();
        // set -> generation -> (runs, best sum, mean sum)
        let mut acc: BTreeMap<String, BTreeMap<usize, (usize, f64, f64)>> = BTreeMap::new();
        for file in files {
            let stem = file
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default();
            let Some((id, _)) = stem.rsplit_once("-r") else {
                continue;
            };
            let Some(set) = sets.get(id) else { continue };
            let mut reader = csv::Reader::from_path(&file)?;
            let series = acc.entry(set.clone()).or_default();
            for row in reader.deserialize() {
                let row: ConvergenceIn =
                    row.with_context(|| format!("reading {}", file.display()))?;
                let slot = series.entry(row.generation).or_insert((0, 0.0, 0.0));
                slot.0 += 1;
                slot.1 += row.best_gap;
                slot.2 += row.mean_gap;
            }
        }
        for (set, series) in acc {
            fs::create_dir_all(&summary_dir)?;
            let path = summary_dir.join(format!("{}-{set}.csv", mode.stem()));
            let mut w = csv::Writer::from_path(&path)?;
            for (generation, (runs, best, mean)) in series {
                w.serialize(SummaryRow {
                    generation,
                    runs,
                    best_gap: best / runs as f64,
                    mean_gap: mean / runs as f64,
                })?;
            }
            w.flush()?;
            written += 1;
        }
    }
    Ok(written)
}

/// Merges fragments (all of `results/` when `fragments` is empty) and writes
/// the tables and averaged convergence series.
pub fn cmd_report(out: &Path, fragments: &[PathBuf]) -> Result<ResultTable> {
    let paths: Vec<PathBuf> = if fragments.is_empty() {
        let dir = out.join("results");
        let mut found: Vec<PathBuf> = fs::read_dir(&dir)
            .with_context(|| format!("reading {}", dir.display()))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "json"))
            .collect();
        found.sort();
        found
    } else {
        fragments.to_vec()
    };
    if paths.is_empty() {
        bail!("no result fragments found; run baselines or evolve first");
    }
    let merged = Fragment::merge(
        paths
            .iter()
            .map(|p| Fragment::load(p))
            .collect::<Result<Vec<_>>>()?,
    )?;
    for r in &merged.rows {
        if r.gap_percent < 0.0 {
            bail!(
                "negative gap for {} / {}; the optimum cache is broken",
                r.set,
                r.instance_id
            );
        }
    }
    let table = ResultTable::from_rows(&merged.rows);
    let tables = out.join("tables");
    fs::create_dir_all(&tables)?;
    fs::write(tables.join("results.csv"), table.to_csv()?)?;
    fs::write(tables.join("results.txt"), table.to_text())?;
    summarize_convergence(out, &merged)?;
    Ok(table)
}
