//! Per-generation telemetry and the JSONL run-log format.
//!
//! A log file is one `header` line, one `generation` line per generation and
//! a `trailer` line. Wall-clock time is deliberately not part of the file so
//! identical runs produce identical bytes.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::backend::Exchange;
use crate::engine::EvolveConfig;
use crate::seed::RNG_ID;
use crate::tsp::{gap_percent, GapError, ScoredTour, Tour};

pub const RUNLOG_VERSION: &str = "lmea-runlog/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GenerationRecord {
    /// 1-based generation index.
    pub gen: usize,
    pub best_length: f64,
    pub mean_length: f64,
    /// Population size after survivor selection.
    pub population_size: usize,
    /// Temperature the offspring of this generation were requested with.
    pub temperature: f64,
    pub valid_offspring: usize,
    pub invalid_offspring: usize,
    pub fallback_filled: usize,
    pub retries: u32,
    pub improved: bool,
    /// Counter value after this generation's update.
    pub stagnation_counter: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "state", rename_all = "snake_case")]
pub enum RunStatus {
    Complete,
    Aborted { generation: usize, reason: String },
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunLog {
    pub config: EvolveConfig,
    pub instance_id: String,
    pub n: usize,
    pub prompt_template: String,
    pub known_optimum: Option<f64>,
    pub initial_best_length: f64,
    pub initial_mean_length: f64,
    pub records: Vec<GenerationRecord>,
    pub best: ScoredTour,
    /// First generation whose best matched `known_optimum`; 0 when the
    /// initial population already contained it.
    pub generations_to_optimum: Option<usize>,
    /// Tours scored, initial population included.
    pub evaluations: usize,
    pub status: RunStatus,
    /// Not serialized.
    pub wall_time_secs: f64,
    /// Not serialized; written separately as a transcript.
    pub transcript: Vec<Exchange>,
}

impl RunLog {
    pub fn is_complete(&self) -> bool {
        self.status == RunStatus::Complete
    }

    /// `(generation, best gap %, mean population gap %)` rows, starting with
    /// generation 0 for the initial population.
    pub fn convergence(&self, optimum: f64) -> Result<Vec<(usize, f64, f64)>, GapError> {
        let mut rows = vec![(
            0,
            gap_percent(self.initial_best_length, optimum)?,
            gap_percent(self.initial_mean_length, optimum)?,
        )];
        for r in &self.records {
            rows.push((
                r.gen,
                gap_percent(r.best_length, optimum)?,
                gap_percent(r.mean_length, optimum)?,
            ));
        }
        Ok(rows)
    }

    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        let mut push = |line: &LogLine| {
            out.push_str(&serde_json::to_string(line).expect("log lines serialize"));
            out.push('\n');
        };
        push(&LogLine::Header(Box::new(Header {
            format: RUNLOG_VERSION.to_string(),
            crate_version: env!("CARGO_PKG_VERSION").to_string(),
            rng: RNG_ID.to_string(),
            prompt_template: self.prompt_template.clone(),
            instance_id: self.instance_id.clone(),
            n: self.n,
            known_optimum: self.known_optimum,
            initial_best_length: self.initial_best_length,
            initial_mean_length: self.initial_mean_length,
            config: self.config.clone(),
        })));
        for r in &self.records {
            push(&LogLine::Generation(r.clone()));
        }
        push(&LogLine::Trailer(Trailer {
            best_tour: self.best.tour.clone(),
            best_length: self.best.length,
            generations_to_optimum: self.generations_to_optimum,
            evaluations: self.evaluations,
            status: self.status.clone(),
        }));
        out
    }

    pub fn from_jsonl(text: &str) -> Result<RunLog, RunLogError> {
        let mut header: Option<Header> = None;
        let mut trailer: Option<Trailer> = None;
        let mut records = Vec::new();
        for (k, line) in text.lines().enumerate() {
            if line.trim().is_empty() {
                continue;
            }
            let parsed: LogLine = serde_json::from_str(line).map_err(|e| RunLogError::Line {
                line: k + 1,
                message: e.to_string(),
            })?;
            match parsed {
                LogLine::Header(h) if header.is_none() => header = Some(*h),
                LogLine::Generation(r) if header.is_some() && trailer.is_none() => records.push(r),
                LogLine::Trailer(t) if header.is_some() && trailer.is_none() => trailer = Some(t),
                _ => {
                    return Err(RunLogError::Line {
                        line: k + 1,
                        message: "line out of order".into(),
                    })
                }
            }
        }
        let header = header.ok_or(RunLogError::Missing("header"))?;
        let trailer = trailer.ok_or(RunLogError::Missing("trailer"))?;
        Ok(RunLog {
            config: header.config,
            instance_id: header.instance_id,
            n: header.n,
            prompt_template: header.prompt_template,
            known_optimum: header.known_optimum,
            initial_best_length: header.initial_best_length,
            initial_mean_length: header.initial_mean_length,
            records,
            best: ScoredTour {
                tour: trailer.best_tour,
                length: trailer.best_length,
            },
            generations_to_optimum: trailer.generations_to_optimum,
            evaluations: trailer.evaluations,
            status: trailer.status,
            wall_time_secs: 0.0,
            transcript: Vec::new(),
        })
    }
}

#[derive(Debug, Error)]
pub enum RunLogError {
    #[error("run log line {line}: {message}")]
    Line { line: usize, message: String },
    #[error("run log has no {0} line")]
    Missing(&'static str),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Header {
    format: String,
    crate_version: String,
    rng: String,
    prompt_template: String,
    instance_id: String,
    n: usize,
    known_optimum: Option<f64>,
    initial_best_length: f64,
    initial_mean_length: f64,
    config: EvolveConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Trailer {
    best_tour: Tour,
    best_length: f64,
    generations_to_optimum: Option<usize>,
    evaluations: usize,
    status: RunStatus,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
enum LogLine {
    Header(Box<Header>),
    Generation(GenerationRecord),
    Trailer(Trailer),
}
