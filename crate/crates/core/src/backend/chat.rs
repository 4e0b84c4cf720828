use std::collections::VecDeque;
use std::fs;
use std::io::Write as _;
use std::path::Path;

use super::{BackendError, BackendReport, Exchange, OffspringBackend, OffspringRequest};
use crate::prompt::{build_prompt, parse_response};

/// Something that answers a prompt with text.
pub trait ChatTransport {
    fn complete(&mut self, prompt: &str, temperature: f64) -> Result<String, BackendError>;
}

/// Backend driven by a text-completion transport: one prompt per
/// generation, with fresh completions while fewer than `count` valid
/// tours have been collected and retries remain.
pub struct ChatBackend<T> {
    name: String,
    transport: T,
    retry_budget: u32,
}

impl<T: ChatTransport> ChatBackend<T> {
    pub fn new(name: impl Into<String>, transport: T, retry_budget: u32) -> Self {
        ChatBackend {
            name: name.into(),
            transport,
            retry_budget,
        }
    }

    pub fn transport(&self) -> &T {
        &self.transport
    }

    pub fn transport_mut(&mut self) -> &mut T {
        &mut self.transport
    }

    pub fn retry_budget(&self) -> u32 {
        self.retry_budget
    }
}

impl<T: ChatTransport> OffspringBackend for ChatBackend<T> {
    fn name(&self) -> &str {
        &self.name
    }

    fn propose(&mut self, request: &OffspringRequest<'_>) -> Result<BackendReport, BackendError> {
        let prompt = build_prompt(
            request.instance,
            request.population,
            request.count,
            request.mode,
        )?;
        let n = request.instance.n();
        let mut report = BackendReport::default();
        loop {
            let response = self.transport.complete(&prompt.text, request.temperature)?;
            let parsed = parse_response(&response, n);
            log::debug!(
                "{}: {} offspring, {} rejected, {} selections",
                self.name,
                parsed.offspring.len(),
                parsed.rejected.len(),
                parsed.selections.len()
            );
            report.exchanges.push(Exchange {
                prompt: prompt.text.clone(),
                response,
                temperature: request.temperature,
            });
            report.offspring.extend(parsed.offspring);
            report.invalid_count += parsed.rejected.len();
            if report.offspring.len() >= request.count || report.retries_used >= self.retry_budget {
                break;
            }
            report.retries_used += 1;
        }
        Ok(report)
    }
}

/// Replays recorded responses in order.
#[derive(Debug, Clone, Default)]
pub struct ScriptedTransport {
    responses: VecDeque<String>,
    consumed: usize,
}

impl ScriptedTransport {
    pub fn new(responses: impl IntoIterator<Item = String>) -> Self {
        ScriptedTransport {
            responses: responses.into_iter().collect(),
            consumed: 0,
        }
    }

    pub fn from_exchanges(exchanges: &[Exchange]) -> Self {
        Self::new(exchanges.iter().map(|e| e.response.clone()))
    }

    pub fn remaining(&self) -> usize {
        self.responses.len()
    }
}

impl ChatTransport for ScriptedTransport {
    fn complete(&mut self, _prompt: &str, _temperature: f64) -> Result<String, BackendError> {
        let next = self
            .responses
            .pop_front()
            .ok_or(BackendError::ScriptUnderrun {
                consumed: self.consumed,
            })?;
        self.consumed += 1;
        Ok(next)
    }
}

/// Scripted backend reading a JSONL transcript (one [`Exchange`] per line).
pub fn scripted_backend(
    transcript: impl AsRef<Path>,
    retry_budget: u32,
) -> Result<ChatBackend<ScriptedTransport>, BackendError> {
    let exchanges = read_transcript(transcript)?;
    Ok(ChatBackend::new(
        "scripted",
        ScriptedTransport::from_exchanges(&exchanges),
        retry_budget,
    ))
}

pub fn read_transcript(path: impl AsRef<Path>) -> Result<Vec<Exchange>, BackendError> {
    let path = path.as_ref();
    let text = fs::read_to_string(path)
        .map_err(|e| BackendError::Script(format!("{}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(k, l)| {
            serde_json::from_str(l)
                .map_err(|e| BackendError::Script(format!("{}:{}: {e}", path.display(), k + 1)))
        })
        .collect()
}

pub fn write_transcript(path: impl AsRef<Path>, exchanges: &[Exchange]) -> std::io::Result<()> {
    let mut file = std::io::BufWriter::new(fs::File::create(path)?);
    for e in exchanges {
        serde_json::to_writer(&mut file, e)?;
        file.write_all(b"\n")?;
    }
    file.flush()
}
