//! Offspring generation backends.
//!
//! The evolutionary loop only ever sees a [`BackendReport`]. Backends propose
//! tours; [`generate`] re-validates every proposal at the boundary and fills
//! any shortfall so each generation receives exactly the requested number of
//! offspring.

mod builtin;
mod chat;
mod remote;

use std::path::PathBuf;
use std::sync::Arc;

use rand::Rng as _;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use builtin::{mutate, order_crossover, BuiltinBackend, BuiltinConfig, MutationKind};
pub use chat::{
    read_transcript, scripted_backend, write_transcript, ChatBackend, ChatTransport,
    ScriptedTransport,
};
pub use remote::{remote_chat_backend, HttpTransport, RateLimiter, RemoteConfig};

use crate::population::Population;
use crate::prompt::{PromptError, PromptMode};
use crate::seed::Rng;
use crate::tsp::{validate_tour, Instance, Tour};

#[derive(Debug, Error)]
pub enum BackendError {
    #[error("transport failure after {attempts} attempts: {message}")]
    Transport { attempts: u32, message: String },
    #[error("authentication failed: {0}")]
    Auth(String),
    #[error("service returned HTTP {status}: {body}")]
    Http { status: u16, body: String },
    #[error("malformed service payload: {0}")]
    MalformedPayload(String),
    #[error("script exhausted after {consumed} responses")]
    ScriptUnderrun { consumed: usize },
    #[error("cannot load transcript: {0}")]
    Script(String),
    #[error("invalid offspring request: {0}")]
    InvalidRequest(String),
    #[error(transparent)]
    Prompt(#[from] PromptError),
}

/// What the loop asks a backend for in one generation.
#[derive(Debug, Clone, Copy)]
pub struct OffspringRequest<'a> {
    pub instance: &'a Instance,
    pub population: &'a Population,
    pub count: usize,
    pub temperature: f64,
    pub mode: PromptMode,
}

impl OffspringRequest<'_> {
    fn check(&self) -> Result<(), BackendError> {
        if self.count == 0 {
            return Err(BackendError::InvalidRequest(
                "count must be at least 1".into(),
            ));
        }
        if self.population.is_empty() {
            return Err(BackendError::InvalidRequest("population is empty".into()));
        }
        if !(self.temperature.is_finite() && self.temperature >= 0.0) {
            return Err(BackendError::InvalidRequest(format!(
                "temperature {} is not a nonnegative number",
                self.temperature
            )));
        }
        Ok(())
    }
}

/// One prompt/response pair, persisted as a JSONL line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Exchange {
    pub prompt: String,
    pub response: String,
    pub temperature: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BackendReport {
    pub offspring: Vec<Tour>,
    pub exchanges: Vec<Exchange>,
    /// Proposals that failed validation.
    pub invalid_count: usize,
    /// Extra completions requested beyond the first.
    pub retries_used: u32,
    /// Offspring created by the shortfall fill.
    pub fallback_filled: usize,
}

pub trait OffspringBackend {
    fn name(&self) -> &str;

    /// Proposes offspring. May return fewer (or more) than `request.count`
    /// tours and need not validate them.
    fn propose(&mut self, request: &OffspringRequest<'_>) -> Result<BackendReport, BackendError>;
}

impl<B: OffspringBackend + ?Sized> OffspringBackend for Box<B> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn propose(&mut self, request: &OffspringRequest<'_>) -> Result<BackendReport, BackendError> {
        (**self).propose(request)
    }
}

/// Asks `backend` for offspring and returns exactly `request.count` valid
/// tours.
///
/// Invalid proposals are dropped and counted, surplus is truncated, and each
/// missing slot is filled with a swap mutation of a uniformly chosen
/// population member drawn from `fill_rng`.
pub fn generate(
    backend: &mut dyn OffspringBackend,
    request: &OffspringRequest<'_>,
    fill_rng: &mut Rng,
) -> Result<BackendReport, BackendError> {
    request.check()?;
    let mut report = backend.propose(request)?;
    let n = request.instance.n();
    let before = report.offspring.len();
    report
        .offspring
        .retain(|t| validate_tour(n, t.as_slice()).is_ok());
    report.invalid_count += before - report.offspring.len();
    report.offspring.truncate(request.count);

    let members = request.population.members();
    while report.offspring.len() < request.count {
        let source = &members[fill_rng.random_range(0..members.len())];
        let mut order = source.tour.as_slice().to_vec();
        mutate(&mut order, MutationKind::Swap, fill_rng);
        report.offspring.push(Tour::from_vec_unchecked(order));
        report.fallback_filled += 1;
    }
    Ok(report)
}

/// Serializable backend choice.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BackendSpec {
    Builtin(BuiltinConfig),
    Remote(RemoteConfig),
    Scripted {
        transcript: PathBuf,
        #[serde(default)]
        retry_budget: u32,
    },
}

impl Default for BackendSpec {
    fn default() -> Self {
        BackendSpec::Builtin(BuiltinConfig::default())
    }
}

impl BackendSpec {
    pub fn label(&self) -> &'static str {
        match self {
            BackendSpec::Builtin(_) => "builtin",
            BackendSpec::Remote(_) => "remote",
            BackendSpec::Scripted { .. } => "scripted",
        }
    }

    /// Instantiates the backend. `seed` replaces the builtin backend's seed;
    /// remote clients share `limiter` when given.
    pub fn build(
        &self,
        seed: u64,
        limiter: Option<Arc<RateLimiter>>,
    ) -> Result<Box<dyn OffspringBackend + Send>, BackendError> {
        Ok(match self {
            BackendSpec::Builtin(config) => Box::new(BuiltinBackend::new(BuiltinConfig {
                seed,
                ..config.clone()
            })),
            BackendSpec::Remote(config) => {
                let mut backend = remote_chat_backend(config.clone())?;
                if let Some(limiter) = limiter {
                    backend.transport_mut().set_rate_limiter(limiter);
                }
                Box::new(backend)
            }
            BackendSpec::Scripted {
                transcript,
                retry_budget,
            } => Box::new(scripted_backend(transcript, *retry_budget)?),
        })
    }
}
