//! Channel-spec files: a JSON object with `nx, ns, ny, nz, x0, P_S, law,
//! cost, budget, key_rate_bits`. `law` is nested `[s][x][y][z]`; a `null`
//! budget means unconstrained cost.
//!
//! The canonical form written by [`canonical_json`] sorts keys, prints every
//! real with 17 significant digits and ends with a newline, so saving a
//! loaded canonical file reproduces it byte for byte.

use std::fmt::Write as _;
use std::path::Path;

use covert_core::channel::{RawChannel, ValidationReport};
use covert_core::{Error, StateDmc};
use serde::{Deserialize, Deserializer};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ChannelDoc {
    nx: usize,
    ns: usize,
    ny: usize,
    nz: usize,
    x0: usize,
    #[serde(rename = "P_S")]
    p_s: Vec<f64>,
    law: Vec<Vec<Vec<Vec<f64>>>>,
    cost: Vec<f64>,
    #[serde(deserialize_with = "nullable")]
    budget: Option<f64>,
    key_rate_bits: f64,
}

fn nullable<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    Option::<f64>::deserialize(d)
}

/// A channel read from disk.
#[derive(Debug, Clone)]
pub struct LoadedChannel {
    pub channel: StateDmc,
    pub report: ValidationReport,
    /// Hex SHA-256 of the file bytes.
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn flatten_law(doc: &ChannelDoc) -> CliResult<Vec<f64>> {
    let shape = |what: String| CliError::Parse(format!("field `law`: {what}"));
    if doc.law.len() != doc.ns {
        return Err(shape(format!("has {} state blocks, ns = {}", doc.law.len(), doc.ns)));
    }
    let mut flat = Vec::with_capacity(doc.ns * doc.nx * doc.ny * doc.nz);
    for (s, by_x) in doc.law.iter().enumerate() {
        if by_x.len() != doc.nx {
            return Err(shape(format!("law[{s}] has {} input rows, nx = {}", by_x.len(), doc.nx)));
        }
        for (x, by_y) in by_x.iter().enumerate() {
            if by_y.len() != doc.ny {
                return Err(shape(format!("law[{s}][{x}] has {} receiver rows, ny = {}", by_y.len(), doc.ny)));
            }
            for (y, row) in by_y.iter().enumerate() {
                if row.len() != doc.nz {
                    return Err(shape(format!("law[{s}][{x}][{y}] has {} entries, nz = {}", row.len(), doc.nz)));
                }
                flat.extend_from_slice(row);
            }
        }
    }
    Ok(flat)
}

/// Parses channel JSON into unchecked form. Syntax, type and missing-field
/// errors carry the line and column; shape errors name the field.
pub fn parse_raw(text: &str) -> CliResult<RawChannel> {
    let doc: ChannelDoc = serde_json::from_str(text).map_err(|e| CliError::Parse(format!("channel file: {e}")))?;
    let law = flatten_law(&doc)?;
    Ok(RawChannel {
        nx: doc.nx,
        ns: doc.ns,
        ny: doc.ny,
        nz: doc.nz,
        x0: doc.x0,
        p_s: doc.p_s,
        law,
        cost: doc.cost,
        budget: doc.budget.unwrap_or(f64::INFINITY),
        key_rate_bits: doc.key_rate_bits,
    })
}

/// Semantic check of a parsed file. Shape problems are parse errors.
pub fn check_raw(raw: &RawChannel) -> CliResult<ValidationReport> {
    raw.validate().map_err(|e| match e {
        Error::Shape(m) => CliError::Parse(format!("channel file: {m}")),
        other => CliError::Compute(other.to_string()),
    })
}

/// Parses, validates and builds. Semantic violations become
/// [`CliError::Semantic`] listing every offending row.
pub fn parse_channel(text: &str) -> CliResult<(StateDmc, ValidationReport)> {
    let raw = parse_raw(text)?;
    let report = check_raw(&raw)?;
    if report.has_semantic_errors() {
        return Err(CliError::Semantic(report.lines().join("\n")));
    }
    StateDmc::from_raw(&raw).map_err(|e| CliError::Semantic(e.to_string()))
}

pub fn load_channel(path: &Path) -> CliResult<LoadedChannel> {
    let bytes = std::fs::read(path).map_err(|e| CliError::read(path, e))?;
    let text =
        std::str::from_utf8(&bytes).map_err(|e| CliError::Parse(format!("{}: not UTF-8 ({e})", path.display())))?;
    let (channel, report) = parse_channel(text)?;
    Ok(LoadedChannel { channel, report, sha256: sha256_hex(&bytes) })
}

pub fn save_channel(ch: &StateDmc, path: &Path) -> CliResult<()> {
    std::fs::write(path, canonical_json(&ch.to_raw())).map_err(|e| CliError::write(path, e))
}

/// 17 significant digits in scientific notation.
pub fn fmt_real(v: f64) -> String {
    format!("{v:.16e}")
}

fn fmt_list(vals: &[f64]) -> String {
    let items: Vec<String> = vals.iter().map(|&v| fmt_real(v)).collect();
    format!("[{}]", items.join(", "))
}

pub fn canonical_json(raw: &RawChannel) -> String {
    let mut out = String::from("{\n");
    let _ = writeln!(out, "  \"P_S\": {},", fmt_list(&raw.p_s));
    let budget = if raw.budget.is_finite() { fmt_real(raw.budget) } else { "null".into() };
    let _ = writeln!(out, "  \"budget\": {budget},");
    let _ = writeln!(out, "  \"cost\": {},", fmt_list(&raw.cost));
    let _ = writeln!(out, "  \"key_rate_bits\": {},", fmt_real(raw.key_rate_bits));
    out.push_str("  \"law\": [\n");
    let row = raw.ny * raw.nz;
    for s in 0..raw.ns {
        out.push_str("    [\n");
        for x in 0..raw.nx {
            let block = &raw.law[(s * raw.nx + x) * row..(s * raw.nx + x + 1) * row];
            let ys: Vec<String> = block.chunks(raw.nz).map(fmt_list).collect();
            let sep = if x + 1 < raw.nx { "," } else { "" };
            let _ = writeln!(out, "      [{}]{sep}", ys.join(", "));
        }
        let sep = if s + 1 < raw.ns { "," } else { "" };
        let _ = writeln!(out, "    ]{sep}");
    }
    out.push_str("  ],\n");
    let _ = writeln!(out, "  \"ns\": {},", raw.ns);
    let _ = writeln!(out, "  \"nx\": {},", raw.nx);
    let _ = writeln!(out, "  \"ny\": {},", raw.ny);
    let _ = writeln!(out, "  \"nz\": {},", raw.nz);
    let _ = writeln!(out, "  \"x0\": {}", raw.x0);
    out.push_str("}\n");
    out
}
