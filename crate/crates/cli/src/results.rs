//! Per-instance result rows, fragment files and the aggregated table.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};
use lmea::tsp::approx_eq;
use lmea::{gap_percent, InstanceKind};
use serde::{Deserialize, Serialize};

pub const FRAGMENT_VERSION: &str = "lmea-results/1";

/// Column order of the rendered table.
pub const ALGORITHM_ORDER: [&str; 7] = ["NN", "FI", "NI", "RI", "OPRO", "LMEA*", "LMEA"];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRow {
    pub set: String,
    pub algorithm: String,
    pub instance_id: String,
    pub run: usize,
    pub gap_percent: f64,
    /// `None` for construction heuristics and for runs that missed the
    /// optimum.
    pub generations_to_optimum: Option<usize>,
    pub success: bool,
    /// False for evolutionary runs that ended early.
    #[serde(default = "yes")]
    pub complete: bool,
}

fn yes() -> bool {
    true
}

impl ResultRow {
    fn key(&self) -> (SetKey, usize, String, usize) {
        (
            SetKey::parse(&self.set),
            algorithm_rank(&self.algorithm),
            self.instance_id.clone(),
            self.run,
        )
    }

    pub fn is_evolutionary(&self) -> bool {
        is_evolutionary(&self.algorithm)
    }
}

pub fn is_evolutionary(algorithm: &str) -> bool {
    matches!(algorithm, "OPRO" | "LMEA*" | "LMEA")
}

fn algorithm_rank(algorithm: &str) -> usize {
    ALGORITHM_ORDER
        .iter()
        .position(|&a| a == algorithm)
        .unwrap_or(ALGORITHM_ORDER.len())
}

/// Sort key for set names: rue before clu, then by size.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
struct SetKey(u8, usize, String);

impl SetKey {
    fn parse(name: &str) -> SetKey {
        let (kind, n) = name.rsplit_once('-').unwrap_or((name, ""));
        let rank = match kind.parse::<InstanceKind>() {
            Ok(InstanceKind::Rue) => 0,
            Ok(InstanceKind::Clu) => 1,
            Err(_) => 2,
        };
        SetKey(rank, n.parse().unwrap_or(usize::MAX), name.to_string())
    }
}

/// Gap in percent, exactly 0 within the comparison tolerance.
pub fn gap_of(length: f64, optimum: f64) -> Result<f64> {
    if approx_eq(length, optimum) {
        return Ok(0.0);
    }
    Ok(gap_percent(length, optimum)?)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fragment {
    pub format: String,
    pub rows: Vec<ResultRow>,
}

impl Fragment {
    pub fn new(mut rows: Vec<ResultRow>) -> Fragment {
        rows.sort_by_key(ResultRow::key);
        Fragment {
            format: FRAGMENT_VERSION.to_string(),
            rows,
        }
    }

    pub fn load(path: &Path) -> Result<Fragment> {
        let text =
            fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let f: Fragment =
            serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        if f.format != FRAGMENT_VERSION {
            bail!(
                "{}: unsupported fragment format {}",
                path.display(),
                f.format
            );
        }
        Ok(f)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let mut text = serde_json::to_string_pretty(self)?;
        text.push('\n');
        fs::write(path, text).with_context(|| format!("writing {}", path.display()))
    }

    /// Union of fragments. Identical duplicate rows collapse; conflicting
    /// rows for the same (set, algorithm, instance, run) are an error.
    pub fn merge(fragments: impl IntoIterator<Item = Fragment>) -> Result<Fragment> {
        let mut rows: BTreeMap<(SetKey, usize, String, usize, String), ResultRow> = BTreeMap::new();
        for f in fragments {
            for row in f.rows {
                let (s, a, i, r) = row.key();
                let key = (s, a, i, r, row.algorithm.clone());
                match rows.get(&key) {
                    Some(existing) if *existing != row => bail!(
                        "conflicting results for {} / {} / {} run {}",
                        row.set,
                        row.algorithm,
                        row.instance_id,
                        row.run
                    ),
                    Some(_) => {}
                    None => {
                        rows.insert(key, row);
                    }
                }
            }
        }
        Ok(Fragment::new(rows.into_values().collect()))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

/// Mean and sample standard deviation; a single value has deviation 0.
pub fn mean_std(values: &[f64]) -> Option<MeanStd> {
    if values.is_empty() {
        return None;
    }
    let k = values.len() as f64;
    let mean = values.iter().sum::<f64>() / k;
    let std = if values.len() < 2 {
        0.0
    } else {
        (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (k - 1.0)).sqrt()
    };
    Some(MeanStd { mean, std })
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub set: String,
    pub algorithm: String,
    pub rows: usize,
    pub gap: MeanStd,
    /// Over successful runs only.
    pub generations: Option<MeanStd>,
    pub successes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ResultTable {
    pub sets: Vec<String>,
    pub algorithms: Vec<String>,
    pub cells: Vec<Cell>,
}

pub fn fmt_mean_std(m: MeanStd) -> String {
    format!("{:.2} ± {:.2}", m.mean, m.std)
}

impl ResultTable {
    pub fn from_rows(rows: &[ResultRow]) -> ResultTable {
        let mut groups: BTreeMap<(SetKey, usize, String), Vec<&ResultRow>> = BTreeMap::new();
        for r in rows {
            groups
                .entry((
                    SetKey::parse(&r.set),
                    algorithm_rank(&r.algorithm),
                    r.algorithm.clone(),
                ))
                .or_default()
                .push(r);
        }
        let mut sets: Vec<SetKey> = Vec::new();
        let mut algorithms: Vec<(usize, String)> = Vec::new();
        let mut cells = Vec::new();
        for ((set, rank, algorithm), group) in groups {
            if !sets.contains(&set) {
                sets.push(set.clone());
            }
            if !algorithms.contains(&(rank, algorithm.clone())) {
                algorithms.push((rank, algorithm.clone()));
            }
            let gaps: Vec<f64> = group.iter().map(|r| r.gap_percent).collect();
            let gens: Vec<f64> = group
                .iter()
                .filter_map(|r| r.generations_to_optimum.map(|g| g as f64))
                .collect();
            cells.push(Cell {
                set: set.2.clone(),
                algorithm,
                rows: group.len(),
                gap: mean_std(&gaps).expect("group is nonempty"),
                generations: mean_std(&gens),
                successes: group.iter().filter(|r| r.success).count(),
            });
        }
        sets.sort();
        algorithms.sort();
        ResultTable {
            sets: sets.into_iter().map(|s| s.2).collect(),
            algorithms: algorithms.into_iter().map(|a| a.1).collect(),
            cells,
        }
    }

    pub fn cell(&self, set: &str, algorithm: &str) -> Option<&Cell> {
        self.cells
            .iter()
            .find(|c| c.set == set && c.algorithm == algorithm)
    }

    /// Algorithms whose rounded mean gap is the smallest in `set`.
    pub fn best_in_set(&self, set: &str) -> Vec<&str> {
        let rounded: Vec<(&str, String)> = self
            .cells
            .iter()
            .filter(|c| c.set == set)
            .map(|c| (c.algorithm.as_str(), format!("{:.2}", c.gap.mean)))
            .collect();
        let best = rounded
            .iter()
            .map(|(_, g)| g.parse::<f64>().expect("formatted number"))
            .fold(f64::INFINITY, f64::min);
        let best = format!("{best:.2}");
        rounded
            .into_iter()
            .filter(|(_, g)| *g == best)
            .map(|(a, _)| a)
            .collect()
    }

    fn generations_text(cell: &Cell) -> String {
        match cell.generations {
            Some(g) if cell.successes > 0 => format!("{} ({})", fmt_mean_std(g), cell.successes),
            _ => format!("N/A ({})", cell.successes),
        }
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "set",
            "algorithm",
            "runs",
            "mean_gap",
            "std_gap",
            "mean_generations",
            "std_generations",
            "successes",
            "best_in_set",
        ])?;
        for set in &self.sets {
            let best = self.best_in_set(set);
            for algorithm in &self.algorithms {
                let Some(c) = self.cell(set, algorithm) else {
                    continue;
                };
                let (mg, sg) = match (c.generations, is_evolutionary(algorithm)) {
                    (Some(g), true) => (format!("{:.2}", g.mean), format!("{:.2}", g.std)),
                    (None, true) => ("N/A".to_string(), "N/A".to_string()),
                    (_, false) => (String::new(), String::new()),
                };
                w.write_record([
                    set.clone(),
                    algorithm.clone(),
                    c.rows.to_string(),
                    format!("{:.2}", c.gap.mean),
                    format!("{:.2}", c.gap.std),
                    mg,
                    sg,
                    c.successes.to_string(),
                    best.contains(&algorithm.as_str()).to_string(),
                ])?;
            }
        }
        Ok(String::from_utf8(w.into_inner()?)?)
    }

    /// Aligned text: one row per set, a gap column per algorithm and a
    /// generations column per evolutionary algorithm. `*` marks the best gap
    /// in each row.
    pub fn to_text(&self) -> String {
        let mut header = vec!["set".to_string()];
        for a in &self.algorithms {
            header.push(a.clone());
            if is_evolutionary(a) {
                header.push(format!("{a} #gen"));
            }
        }
        let mut lines = vec![header];
        for set in &self.sets {
            let best = self.best_in_set(set);
            let mut line = vec![set.clone()];
            for a in &self.algorithms {
                let cell = self.cell(set, a);
                line.push(match cell {
                    Some(c) => {
                        let mark = if best.contains(&a.as_str()) { "*" } else { " " };
                        format!("{}{mark}", fmt_mean_std(c.gap))
                    }
                    None => "-".to_string(),
                });
                if is_evolutionary(a) {
                    line.push(cell.map_or("-".to_string(), Self::generations_text));
                }
            }
            lines.push(line);
        }
        let cols = lines[0].len();
        let widths: Vec<usize> = (0..cols)
            .map(|k| {
                lines
                    .iter()
                    .map(|l| l[k].chars().count())
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let mut out = String::new();
        for line in &lines {
            let mut text = String::new();
            for (k, field) in line.iter().enumerate() {
                let pad = widths[k] - field.chars().count();
                if k == 0 {
                    let _ = write!(text, "{field}{}", " ".repeat(pad));
                } else {
                    let _ = write!(text, "  {}{field}", " ".repeat(pad));
                }
            }
            out.push_str(text.trim_end());
            out.push('\n');
        }
        out.push_str(
            "\nGap: mean ± sample std of the optimality gap (%). * marks the best gap per set.\n",
        );
        if self.algorithms.iter().any(|a| is_evolutionary(a)) {
            out.push_str(
                "#gen: generations to the optimum over successful runs (success count).\n",
            );
        }
        out
    }
}
