//! Headers, sinks and small parsers shared by the subcommands.

use std::fs::File;
use std::io::{self, BufWriter, Read, Write};
use std::ops::RangeInclusive;
use std::path::Path;

use anyhow::{bail, Context, Result};
use serde::Serialize;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// Buffered file or stdout.
pub fn sink(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(
            File::create(p).with_context(|| format!("cannot create {}", p.display()))?,
        )),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

pub fn source(path: Option<&Path>) -> Result<String> {
    let mut text = String::new();
    match path {
        Some(p) => {
            File::open(p)
                .with_context(|| format!("cannot open {}", p.display()))?
                .read_to_string(&mut text)?;
        }
        None => {
            io::stdin().read_to_string(&mut text)?;
        }
    }
    Ok(text)
}

/// `# smolyak <version> <command>` and `# config <json>` lines heading every
/// CSV output.
pub fn write_header<C: Serialize>(out: &mut dyn Write, command: &str, config: &C) -> Result<()> {
    writeln!(out, "# smolyak {VERSION} {command}")?;
    writeln!(out, "# config {}", serde_json::to_string(config)?)?;
    Ok(())
}

/// JSON document with version and config alongside the result.
pub fn write_json<C: Serialize, R: Serialize>(out: &mut dyn Write, command: &str, config: &C, result: &R) -> Result<()> {
    #[derive(Serialize)]
    struct Doc<'a, C, R> {
        version: &'a str,
        command: &'a str,
        config: &'a C,
        result: &'a R,
    }
    let doc = Doc {
        version: VERSION,
        command,
        config,
        result,
    };
    serde_json::to_writer_pretty(&mut *out, &doc)?;
    writeln!(out)?;
    Ok(())
}

/// Rows of a numeric CSV, skipping `#` comments and an optional
/// non-numeric header row.
pub fn read_points(text: &str) -> Result<Vec<Vec<f64>>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows = Vec::new();
    for (n, record) in reader.records().enumerate() {
        let record = record?;
        let parsed: std::result::Result<Vec<f64>, _> = record.iter().map(str::parse::<f64>).collect();
        match parsed {
            Ok(row) => rows.push(row),
            Err(_) if n == 0 => continue,
            Err(e) => bail!("row {}: {e}", n + 1),
        }
    }
    if let Some(w) = rows.first().map(Vec::len) {
        if let Some(bad) = rows.iter().position(|r| r.len() != w) {
            bail!("row {} has {} columns, expected {w}", bad + 1, rows[bad].len());
        }
    }
    Ok(rows)
}

/// `"1,0,2"` into entries.
pub fn parse_list<T: std::str::FromStr>(text: &str, what: &str) -> Result<Vec<T>>
where
    T::Err: std::fmt::Display,
{
    text.split(',')
        .map(|v| v.trim().parse::<T>().map_err(|e| anyhow::anyhow!("bad {what} entry `{v}`: {e}")))
        .collect()
}

/// `"3..9"` into `3..=9`.
pub fn parse_levels(text: &str) -> Result<RangeInclusive<u32>> {
    let Some((lo, hi)) = text.split_once("..") else {
        bail!("levels must look like Lmin..Lmax, got `{text}`");
    };
    let lo: u32 = lo.trim().parse().context("bad Lmin")?;
    let hi: u32 = hi.trim_start_matches('=').trim().parse().context("bad Lmax")?;
    if lo > hi {
        bail!("empty level range {lo}..{hi}");
    }
    Ok(lo..=hi)
}

/// Space-separated entries, for multi-indices inside one CSV field.
pub fn joined<T: std::fmt::Display>(values: &[T]) -> String {
    values.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")
}
