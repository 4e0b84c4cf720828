//! Reading and writing the TSPLIB subset used for instance files.
//!
//! ```text
//! NAME: rue-10-0
//! COMMENT: kind=rue
//! COMMENT: seed=7
//! COMMENT: generator=lmea-gen/1 rng=chacha8/rand-0.9
//! TYPE: TSP
//! DIMENSION: 10
//! EDGE_WEIGHT_TYPE: EUC_2D
//! NODE_COORD_SECTION
//! 1 12 40
//! ...
//! EOF
//! ```
//!
//! Indices are 1-based on disk and 0-based in memory.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use thiserror::Error;

use crate::generator::GENERATOR_VERSION;
use crate::seed::RNG_ID;
use crate::tsp::{Instance, InstanceKind, Point, COORD_MAX, COORD_MIN};

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("{0}")]
    Structure(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn syntax(line: usize, message: impl Into<String>) -> LoadError {
    LoadError::Syntax {
        line,
        message: message.into(),
    }
}

/// Renders an instance in the on-disk format.
pub fn to_tsplib(instance: &Instance) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "NAME: {}", instance.id());
    let _ = writeln!(out, "COMMENT: kind={}", instance.kind());
    let _ = writeln!(out, "COMMENT: seed={}", instance.seed());
    let _ = writeln!(out, "COMMENT: generator={GENERATOR_VERSION} rng={RNG_ID}");
    out.push_str("TYPE: TSP\n");
    let _ = writeln!(out, "DIMENSION: {}", instance.n());
    out.push_str("EDGE_WEIGHT_TYPE: EUC_2D\n");
    out.push_str("NODE_COORD_SECTION\n");
    for (i, p) in instance.coords().iter().enumerate() {
        let _ = writeln!(out, "{} {} {}", i + 1, p.x, p.y);
    }
    out.push_str("EOF\n");
    out
}

pub fn write_instance(instance: &Instance, path: impl AsRef<Path>) -> Result<(), std::io::Error> {
    fs::write(path, to_tsplib(instance))
}

pub fn read_instance(path: impl AsRef<Path>) -> Result<Instance, LoadError> {
    parse_tsplib(&fs::read_to_string(path)?)
}

/// Parses the on-disk format. Files without provenance comments load as
/// `rue` with seed 0.
pub fn parse_tsplib(text: &str) -> Result<Instance, LoadError> {
    let mut name: Option<String> = None;
    let mut kind = InstanceKind::Rue;
    let mut seed = 0u64;
    let mut dimension: Option<usize> = None;
    let mut coords: Vec<Option<(Point, usize)>> = Vec::new();
    let mut in_coords = false;
    let mut saw_eof = false;

    for (k, raw) in text.lines().enumerate() {
        let line_no = k + 1;
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if line == "EOF" {
            saw_eof = true;
            break;
        }
        if in_coords {
            let n = dimension.expect("dimension checked before coordinate section");
            let fields: Vec<&str> = line.split_whitespace().collect();
            let [index, x, y] = fields[..] else {
                return Err(syntax(
                    line_no,
                    format!("expected `index x y`, got `{line}`"),
                ));
            };
            let index: usize = index
                .parse()
                .map_err(|_| syntax(line_no, format!("bad node index `{index}`")))?;
            if index == 0 || index > n {
                return Err(syntax(
                    line_no,
                    format!("node index {index} outside 1..={n}"),
                ));
            }
            let parse_coord = |s: &str| -> Result<f64, LoadError> {
                let v: f64 = s
                    .parse()
                    .map_err(|_| syntax(line_no, format!("bad coordinate `{s}`")))?;
                if !(COORD_MIN..=COORD_MAX).contains(&v) {
                    return Err(syntax(line_no, format!("coordinate {v} outside [0, 100]")));
                }
                Ok(v)
            };
            let p = Point::new(parse_coord(x)?, parse_coord(y)?);
            let slot = &mut coords[index - 1];
            if slot.is_some() {
                return Err(syntax(line_no, format!("node {index} listed twice")));
            }
            if let Some((_, other)) = coords.iter().flatten().find(|(q, _)| *q == p) {
                return Err(syntax(
                    line_no,
                    format!("duplicate point ({}, {}) already on line {other}", p.x, p.y),
                ));
            }
            coords[index - 1] = Some((p, line_no));
            continue;
        }
        if line == "NODE_COORD_SECTION" {
            let n =
                dimension.ok_or_else(|| syntax(line_no, "NODE_COORD_SECTION before DIMENSION"))?;
            coords = vec![None; n];
            in_coords = true;
            continue;
        }
        let Some((key, value)) = line.split_once(':') else {
            return Err(syntax(
                line_no,
                format!("expected `KEY: value`, got `{line}`"),
            ));
        };
        let value = value.trim();
        match key.trim() {
            "NAME" => name = Some(value.to_string()),
            "TYPE" if value == "TSP" => {}
            "TYPE" => return Err(syntax(line_no, format!("unsupported TYPE `{value}`"))),
            "EDGE_WEIGHT_TYPE" if value == "EUC_2D" => {}
            "EDGE_WEIGHT_TYPE" => {
                return Err(syntax(
                    line_no,
                    format!("unsupported EDGE_WEIGHT_TYPE `{value}`"),
                ))
            }
            "DIMENSION" => {
                let n: usize = value
                    .parse()
                    .map_err(|_| syntax(line_no, format!("bad DIMENSION `{value}`")))?;
                if n < 3 {
                    return Err(syntax(line_no, format!("DIMENSION {n} below 3")));
                }
                dimension = Some(n);
            }
            "COMMENT" => {
                if let Some(v) = value.strip_prefix("kind=") {
                    kind = v.parse().map_err(|e: String| syntax(line_no, e))?;
                } else if let Some(v) = value.strip_prefix("seed=") {
                    seed = v
                        .parse()
                        .map_err(|_| syntax(line_no, format!("bad seed `{v}`")))?;
                }
            }
            other => return Err(syntax(line_no, format!("unsupported header `{other}`"))),
        }
    }

    if !in_coords {
        return Err(LoadError::Structure("missing NODE_COORD_SECTION".into()));
    }
    if !saw_eof {
        return Err(LoadError::Structure("missing EOF marker".into()));
    }
    let n = coords.len();
    let present = coords.iter().flatten().count();
    if present != n {
        return Err(LoadError::Structure(format!(
            "DIMENSION is {n} but {present} coordinate lines were found"
        )));
    }
    let points = coords.into_iter().flatten().map(|(p, _)| p).collect();
    let name = name.unwrap_or_else(|| "unnamed".to_string());
    Instance::new(name, kind, seed, points).map_err(|e| LoadError::Structure(e.to_string()))
}
