//! Line-oriented text format for datasets.
//!
//! ```text
//! mufasa-dataset 1
//! spec <DatasetSpec as compact JSON>
//! stats <NormStats as compact JSON>
//! columns split id label context codes notes raw_values
//! <one tab-separated row per example>
//! ```
//!
//! Within a row, `context` is a comma list of reals. `codes`, `notes` and
//! `raw_values` hold one group per bag separated by `|`, with items separated
//! by `,`; a missing continuous value is written `NA`. Rows are ordered
//! train, validation, test. Reals use the shortest representation that
//! reads back to the same value, so regeneration from the same spec is
//! byte-identical and loading restores the dataset exactly. Normalized
//! values are not stored; loading recomputes them from the raw values and
//! the stored statistics.

use crate::data::generate::{normalize, Dataset, DatasetSpec, Example};
use crate::data::preprocess::NormStats;
use crate::error::{Error, Result};
use std::fmt::Write as _;

const HEADER: &str = "mufasa-dataset 1";
const COLUMNS: &str = "columns split id label context codes notes raw_values";
const SPLITS: [&str; 3] = ["train", "validation", "test"];

fn join<T>(items: &[T], sep: &str, f: impl Fn(&T) -> String) -> String {
    items.iter().map(f).collect::<Vec<_>>().join(sep)
}

pub fn to_text(ds: &Dataset) -> String {
    let mut out = String::new();
    out.push_str(HEADER);
    out.push('\n');
    let _ = writeln!(out, "spec {}", serde_json::to_string(&ds.spec).expect("spec serializes"));
    let _ = writeln!(out, "stats {}", serde_json::to_string(&ds.stats).expect("stats serialize"));
    out.push_str(COLUMNS);
    out.push('\n');
    for (name, split) in SPLITS.iter().zip(ds.splits()) {
        for e in split {
            let ints = |bags: &Vec<Vec<usize>>| join(bags, "|", |b| join(b, ",", |x| x.to_string()));
            let raw = join(&e.raw_values, "|", |b| {
                join(b, ",", |v| v.map(|x| x.to_string()).unwrap_or_else(|| "NA".into()))
            });
            let _ = writeln!(
                out,
                "{name}\t{}\t{}\t{}\t{}\t{}\t{}",
                e.id,
                e.label,
                join(&e.context, ",", |x| x.to_string()),
                ints(&e.codes),
                ints(&e.notes),
                raw
            );
        }
    }
    out
}

fn bad(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Format(format!("dataset line {line}: {msg}"))
}

fn groups<T>(s: &str, line: usize, item: impl Fn(&str) -> Result<T>) -> Result<Vec<Vec<T>>> {
    s.split('|')
        .map(|g| if g.is_empty() { Ok(Vec::new()) } else { g.split(',').map(&item).collect() })
        .collect::<Result<_>>()
        .map_err(|e| bad(line, e))
}

pub fn from_text(text: &str) -> Result<Dataset> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let mut next = |what: &str| lines.next().ok_or_else(|| Error::Format(format!("dataset missing {what}")));
    let (n, l) = next("header")?;
    if l != HEADER {
        return Err(bad(n, "not a dataset file"));
    }
    let (n, l) = next("spec")?;
    let spec: DatasetSpec =
        serde_json::from_str(l.strip_prefix("spec ").ok_or_else(|| bad(n, "expected spec"))?)?;
    let (n, l) = next("stats")?;
    let stats: NormStats =
        serde_json::from_str(l.strip_prefix("stats ").ok_or_else(|| bad(n, "expected stats"))?)?;
    let (n, l) = next("columns")?;
    if l != COLUMNS {
        return Err(bad(n, "unexpected column list"));
    }
    let mut splits: [Vec<Example>; 3] = Default::default();
    let int = |s: &str| s.parse::<usize>().map_err(|e| Error::Format(e.to_string()));
    let real = |s: &str| s.parse::<f64>().map_err(|e| Error::Format(e.to_string()));
    for (n, l) in lines {
        let cols: Vec<&str> = l.split('\t').collect();
        if cols.len() != 7 {
            return Err(bad(n, format!("expected 7 columns, found {}", cols.len())));
        }
        let which = SPLITS.iter().position(|&s| s == cols[0]).ok_or_else(|| bad(n, "unknown split"))?;
        let context = if cols[3].is_empty() {
            Vec::new()
        } else {
            cols[3].split(',').map(real).collect::<Result<_>>().map_err(|e| bad(n, e))?
        };
        let raw_values = groups(cols[6], n, |s| if s == "NA" { Ok(None) } else { real(s).map(Some) })?;
        let mut e = Example {
            id: int(cols[1]).map_err(|e| bad(n, e))?,
            label: int(cols[2]).map_err(|e| bad(n, e))?,
            context,
            codes: groups(cols[4], n, int)?,
            notes: groups(cols[5], n, int)?,
            raw_values,
            values: Vec::new(),
        };
        if e.raw_values.iter().any(|r| r.len() != stats.mean.len()) {
            return Err(bad(n, "continuous feature count differs from the statistics"));
        }
        normalize(&mut e, &stats);
        splits[which].push(e);
    }
    let [train, validation, test] = splits;
    Ok(Dataset { spec, stats, train, validation, test })
}

pub fn save(ds: &Dataset, path: &std::path::Path) -> Result<()> {
    std::fs::write(path, to_text(ds))?;
    Ok(())
}

pub fn load(path: &std::path::Path) -> Result<Dataset> {
    from_text(&std::fs::read_to_string(path)?)
}
