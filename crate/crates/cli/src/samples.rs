//! Sample files: an optional `# tvdist samples family=<f> n=<n>` header, then
//! one whitespace-separated row per line (symbols, spins, or floats).

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{CliError, CliResult, Kind};
use crate::model::Family;

#[derive(Debug, Clone, PartialEq)]
pub enum Rows {
    Discrete(Vec<Vec<usize>>),
    Spins(Vec<Vec<i8>>),
    Real(Vec<Vec<f64>>),
}

impl Rows {
    pub fn width(&self) -> usize {
        match self {
            Rows::Discrete(r) => r.first().map_or(0, Vec::len),
            Rows::Spins(r) => r.first().map_or(0, Vec::len),
            Rows::Real(r) => r.first().map_or(0, Vec::len),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SampleFile {
    pub family: Option<Family>,
    pub rows: Rows,
}

fn join<T: ToString>(row: &[T]) -> String {
    row.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}

pub fn render(family: Family, rows: &Rows) -> String {
    let mut out = format!("# tvdist samples family={} n={}\n", family.name(), rows.width());
    let mut push = |line: String| {
        let _ = writeln!(out, "{line}");
    };
    match rows {
        Rows::Discrete(r) => r.iter().for_each(|x| push(join(x))),
        Rows::Spins(r) => r.iter().for_each(|x| push(join(x))),
        Rows::Real(r) => r.iter().for_each(|x| push(join(x))),
    }
    out
}

fn header_family(line: &str) -> CliResult<Option<Family>> {
    for field in line.trim_start_matches('#').split_whitespace() {
        if let Some(name) = field.strip_prefix("family=") {
            return Family::parse(name)
                .map(Some)
                .ok_or_else(|| CliError::invalid(format!("unknown family {name:?} in sample header")));
        }
    }
    Ok(None)
}

/// Parses a sample file; `expected` fills in the family when the header lacks one.
pub fn parse(text: &str, expected: Option<Family>) -> CliResult<SampleFile> {
    let mut family = None;
    let mut body = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        if line.starts_with('#') {
            if family.is_none() {
                family = header_family(line)?;
            }
            continue;
        }
        body.push((no + 1, line));
    }
    if let (Some(found), Some(want)) = (family, expected) {
        if found != want {
            return Err(CliError::new(
                Kind::FamilyMismatch,
                format!("sample file holds {} rows, expected {}", found.name(), want.name()),
            ));
        }
    }
    let kind = family.or(expected).ok_or_else(|| CliError::invalid("sample file has no family header; pass --family"))?;
    let bad = |no: usize, tok: &str| CliError::invalid(format!("line {no}: cannot parse {tok:?}"));
    let rows = match kind {
        Family::Bayesnet | Family::Causal => Rows::Discrete(
            body.iter()
                .map(|(no, l)| l.split_whitespace().map(|t| t.parse().map_err(|_| bad(*no, t))).collect())
                .collect::<CliResult<_>>()?,
        ),
        Family::Ising => Rows::Spins(
            body.iter()
                .map(|(no, l)| {
                    l.split_whitespace()
                        .map(|t| match t {
                            "1" | "+1" => Ok(1),
                            "-1" => Ok(-1),
                            _ => Err(bad(*no, t)),
                        })
                        .collect()
                })
                .collect::<CliResult<_>>()?,
        ),
        Family::Gaussian => Rows::Real(
            body.iter()
                .map(|(no, l)| l.split_whitespace().map(|t| t.parse().map_err(|_| bad(*no, t))).collect())
                .collect::<CliResult<_>>()?,
        ),
    };
    let width = rows.width();
    let ragged = match &rows {
        Rows::Discrete(r) => r.iter().position(|x| x.len() != width),
        Rows::Spins(r) => r.iter().position(|x| x.len() != width),
        Rows::Real(r) => r.iter().position(|x| x.len() != width),
    };
    if let Some(i) = ragged {
        return Err(CliError::invalid(format!("line {}: row length differs from the first row", body[i].0)));
    }
    Ok(SampleFile { family: Some(kind), rows })
}

pub fn load(path: &Path, expected: Option<Family>) -> CliResult<SampleFile> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::new(Kind::Io, format!("{}: {e}", path.display())))?;
    parse(&text, expected).map_err(|e| CliError::new(e.kind, format!("{}: {}", path.display(), e.message)))
}
