//! Prompt construction and response parsing for language-model backends.
//!
//! A prompt has three sections: the problem (coordinates and what makes a
//! valid, good tour), in-context examples (population tours with lengths,
//! worst first), and task instructions with a strict output format. See
//! `docs/wire-protocol.md` for the response grammar.

use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::population::Population;
use crate::tsp::{validate_tour, Instance, Tour, TourViolation};

/// Bumped whenever the wording of any template changes; recorded in run logs.
pub const PROMPT_TEMPLATE_VERSION: &str = "lmea-tsp-prompt/1";

pub const RES_OPEN: &str = "<res>";
pub const RES_CLOSE: &str = "</res>";
pub const SELECTION_OPEN: &str = "<selection>";
pub const SELECTION_CLOSE: &str = "</selection>";
pub const TRACE_OPEN: &str = "<trace>";
pub const TRACE_CLOSE: &str = "</trace>";

const FRAGMENT_LIMIT: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PromptMode {
    /// Parent selection, crossover and mutation instructions.
    #[default]
    Lmea,
    /// Direct generation of new solutions from the examples.
    Opro,
}

impl fmt::Display for PromptMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            PromptMode::Lmea => "lmea",
            PromptMode::Opro => "opro",
        })
    }
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("cannot build a prompt from an empty population")]
    EmptyPopulation,
    #[error("offspring count must be at least 1")]
    ZeroOffspring,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub text: String,
    pub mode: PromptMode,
    pub expected_offspring: usize,
    pub instance_id: String,
    pub example_count: usize,
}

pub fn build_prompt(
    instance: &Instance,
    population: &Population,
    offspring_count: usize,
    mode: PromptMode,
) -> Result<PromptBundle, PromptError> {
    if population.is_empty() {
        return Err(PromptError::EmptyPopulation);
    }
    if offspring_count == 0 {
        return Err(PromptError::ZeroOffspring);
    }
    let mut text = problem_section(instance);
    text.push('\n');
    text.push_str(&examples_section(population));
    text.push('\n');
    match mode {
        PromptMode::Lmea => lmea_instructions(&mut text, instance.n(), offspring_count),
        PromptMode::Opro => opro_instructions(&mut text, instance.n(), offspring_count),
    }
    Ok(PromptBundle {
        text,
        mode,
        expected_offspring: offspring_count,
        instance_id: instance.id().to_string(),
        example_count: population.len(),
    })
}

pub fn build_lmea_prompt(
    instance: &Instance,
    population: &Population,
    offspring_count: usize,
) -> Result<PromptBundle, PromptError> {
    build_prompt(instance, population, offspring_count, PromptMode::Lmea)
}

pub fn build_opro_prompt(
    instance: &Instance,
    population: &Population,
    offspring_count: usize,
) -> Result<PromptBundle, PromptError> {
    build_prompt(instance, population, offspring_count, PromptMode::Opro)
}

fn problem_section(instance: &Instance) -> String {
    let n = instance.n();
    let mut s = String::from("You are given a list of points with coordinates below:\n");
    for (i, p) in instance.coords().iter().enumerate() {
        if i > 0 {
            s.push_str(", ");
        }
        let _ = write!(s, "({i}): ({}, {})", p.x, p.y);
    }
    s.push_str(".\n\n");
    let _ = writeln!(
        s,
        "Your task is to find a trace with the shortest possible length that traverses each \
         point exactly once and returns to the starting point. A trace is a list of the point \
         indices 0 to {} in visiting order. Shorter lengths are preferable.",
        n - 1
    );
    s
}

/// Population tours with lengths, worst to best.
pub fn examples_section(population: &Population) -> String {
    let mut s = String::from(
        "Below are some previous traces and their lengths. The traces are arranged in \
         descending order based on their lengths, where lower values are better.\n\n",
    );
    for member in population.members().iter().rev() {
        let _ = writeln!(s, "{TRACE_OPEN}{}{TRACE_CLOSE}", member.tour);
        let _ = writeln!(s, "length: {:.2}", member.length);
        s.push('\n');
    }
    s
}

fn format_rules(s: &mut String, n: usize) {
    let _ = writeln!(
        s,
        "- Put each new trace between {RES_OPEN} and {RES_CLOSE}, e.g. {RES_OPEN}i1,i2,...,i{n}{RES_CLOSE}."
    );
    let _ = writeln!(
        s,
        "- Each new trace must contain every index from 0 to {} exactly once, separated by commas.",
        n - 1
    );
}

fn lmea_instructions(s: &mut String, n: usize, count: usize) {
    s.push_str(
        "Please follow the instructions step-by-step to generate new traces from the traces above:\n",
    );
    s.push_str("1. Select two traces from the above traces as parents.\n");
    s.push_str("2. Crossover the two selected parents to generate a new trace.\n");
    s.push_str("3. Mutate the trace generated in step 2 to generate a mutated trace.\n");
    let _ = writeln!(
        s,
        "4. Repeat steps 1, 2 and 3 until {count} mutated traces are generated."
    );
    s.push('\n');
    s.push_str("Output format:\n");
    let _ = writeln!(
        s,
        "- Put each pair of selected parents between {SELECTION_OPEN} and {SELECTION_CLOSE}, \
         the two traces separated by a semicolon."
    );
    format_rules(s, n);
    let _ = writeln!(
        s,
        "- Output exactly {count} selections and {count} new traces, without any explanation."
    );
}

fn opro_instructions(s: &mut String, n: usize, count: usize) {
    let _ = writeln!(
        s,
        "Give me {count} new traces that are different from all traces above and have a length \
         lower than any of the above."
    );
    s.push('\n');
    s.push_str("Output format:\n");
    format_rules(s, n);
    let _ = writeln!(
        s,
        "- Output exactly {count} new traces, without any explanation."
    );
}

/// Why a result block did not yield a tour.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RejectReason {
    /// Opening tag without a matching closing tag.
    Unterminated,
    /// Content is not an index list.
    Syntax { detail: String },
    /// An index list that is not a permutation.
    Invalid { violation: TourViolation },
}

impl fmt::Display for RejectReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RejectReason::Unterminated => f.write_str("unterminated block"),
            RejectReason::Syntax { detail } => write!(f, "syntax: {detail}"),
            RejectReason::Invalid { violation } => write!(f, "{violation}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rejected {
    pub fragment: String,
    pub reason: RejectReason,
}

/// Parent traces named in one selection block.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Selection {
    pub parents: Vec<Vec<usize>>,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParsedResponse {
    pub selections: Vec<Selection>,
    pub offspring: Vec<Tour>,
    pub rejected: Vec<Rejected>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Block<'a> {
    Closed(&'a str),
    Unterminated(&'a str),
}

/// Every `open ... close` block in order. Each opening tag pairs with the
/// first closing tag after it; stray closing tags are skipped.
fn blocks<'a>(raw: &'a str, open: &str, close: &str) -> Vec<Block<'a>> {
    let mut out = Vec::new();
    let mut rest = raw;
    while let Some(start) = rest.find(open) {
        let body = &rest[start + open.len()..];
        match body.find(close) {
            Some(end) => {
                out.push(Block::Closed(&body[..end]));
                rest = &body[end + close.len()..];
            }
            None => {
                out.push(Block::Unterminated(body));
                break;
            }
        }
    }
    out
}

/// Contents of every closed `open ... close` block.
pub fn extract_tagged<'a>(raw: &'a str, open: &str, close: &str) -> Vec<&'a str> {
    blocks(raw, open, close)
        .into_iter()
        .filter_map(|b| match b {
            Block::Closed(s) => Some(s),
            Block::Unterminated(_) => None,
        })
        .collect()
}

/// Parses `0,3,1,2`, `0 3 1 2` or `[0, 3, 1, 2]`.
pub fn parse_index_list(text: &str) -> Result<Vec<usize>, String> {
    let trimmed = text.trim();
    let inner = trimmed
        .strip_prefix('[')
        .and_then(|t| t.strip_suffix(']'))
        .unwrap_or(trimmed);
    let mut out = Vec::new();
    for token in inner.split(|c: char| c == ',' || c.is_whitespace()) {
        if token.is_empty() {
            continue;
        }
        let v = token
            .parse::<usize>()
            .map_err(|_| format!("non-numeric token `{}`", clip(token, 20)))?;
        out.push(v);
    }
    if out.is_empty() {
        return Err("empty index list".to_string());
    }
    Ok(out)
}

fn clip(s: &str, limit: usize) -> String {
    match s.char_indices().nth(limit) {
        Some((cut, _)) => format!("{}...", &s[..cut]),
        None => s.to_string(),
    }
}

/// Extracts result and selection blocks from arbitrary text. Never fails;
/// every returned offspring is a valid tour on `n` nodes.
pub fn parse_response(raw: &str, n: usize) -> ParsedResponse {
    let mut parsed = ParsedResponse::default();
    for block in blocks(raw, RES_OPEN, RES_CLOSE) {
        let (fragment, reason) = match block {
            Block::Unterminated(rest) => (rest, RejectReason::Unterminated),
            Block::Closed(body) => match parse_index_list(body) {
                Ok(order) => match validate_tour(n, &order) {
                    Ok(()) => {
                        parsed.offspring.push(Tour::from_vec_unchecked(order));
                        continue;
                    }
                    Err(violation) => (body, RejectReason::Invalid { violation }),
                },
                Err(detail) => (body, RejectReason::Syntax { detail }),
            },
        };
        parsed.rejected.push(Rejected {
            fragment: clip(fragment, FRAGMENT_LIMIT),
            reason,
        });
    }
    for body in extract_tagged(raw, SELECTION_OPEN, SELECTION_CLOSE) {
        let parents: Result<Vec<_>, _> = body
            .split([';', '|', '\n'])
            .filter(|p| !p.trim().is_empty())
            .map(parse_index_list)
            .collect();
        if let Ok(parents) = parents {
            if !parents.is_empty() {
                parsed.selections.push(Selection { parents });
            }
        }
    }
    parsed
}

/// Renders tours the way a well-behaved backend answers.
pub fn render_response(tours: &[Tour]) -> String {
    let mut s = String::new();
    for t in tours {
        let _ = writeln!(s, "{RES_OPEN}{t}{RES_CLOSE}");
    }
    s
}
