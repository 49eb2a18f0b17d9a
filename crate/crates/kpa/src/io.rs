//! Array file format.
//!
//! Header comment lines carry metadata, then one permutation per line as
//! space-separated integers. Lines beginning with `#` are comments.
//!
//! ```text
//! # n=6 d=3 provenance=expand
//! 0 1 2 3 5 4
//! 0 1 2 4 5 3
//! ```
//!
//! Symbols are 0-based internally. Files written 1-based (no symbol 0, symbol
//! `n` present) are normalized on read.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::Error;
use crate::perm::Permutation;
use crate::verifier::PermArray;

pub fn parse_array(text: &str) -> Result<PermArray, Error> {
    let mut claimed_d: Option<u32> = None;
    let mut restriction_m: Option<usize> = None;
    let mut provenance = String::from("file");
    let mut rows: Vec<(usize, Vec<u8>)> = Vec::new();

    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            for token in comment.split_whitespace() {
                if let Some((key, value)) = token.split_once('=') {
                    match key {
                        "d" => claimed_d = value.parse().ok(),
                        "m" => restriction_m = value.parse().ok(),
                        "provenance" => provenance = value.to_string(),
                        _ => {}
                    }
                }
            }
            continue;
        }
        let mut symbols = Vec::new();
        for token in line.split_whitespace() {
            let v: u16 = token.parse().map_err(|_| Error::Parse {
                line: lineno + 1,
                msg: format!("bad symbol {token:?}"),
            })?;
            if v > 255 {
                return Err(Error::Parse {
                    line: lineno + 1,
                    msg: format!("symbol {v} out of range"),
                });
            }
            symbols.push(v as u8);
        }
        rows.push((lineno + 1, symbols));
    }

    if rows.is_empty() {
        return Err(Error::EmptyArray);
    }
    let n = rows[0].1.len();
    // 1-based files contain symbol n but never 0.
    let one_based = rows
        .iter()
        .all(|(_, r)| !r.contains(&0) && r.iter().any(|&s| s as usize == n));
    let mut perms = Vec::with_capacity(rows.len());
    for (lineno, mut row) in rows {
        if one_based {
            for s in row.iter_mut() {
                *s -= 1;
            }
        }
        perms.push(Permutation::new(row).map_err(|e| Error::Parse {
            line: lineno,
            msg: e.to_string(),
        })?);
    }
    let mut arr = PermArray::new(perms, provenance)?;
    arr.claimed_d = claimed_d;
    arr.restriction_m = restriction_m;
    Ok(arr)
}

pub fn read_array(path: &Path) -> Result<PermArray, Error> {
    parse_array(&std::fs::read_to_string(path)?)
}

/// Renders an array file. `extra_header` lines are emitted verbatim as
/// comments (tool version, command line, seeds).
pub fn format_array(a: &PermArray, extra_header: &[String]) -> String {
    let mut out = String::new();
    let mut meta = format!("# n={}", a.n());
    if let Some(d) = a.claimed_d {
        let _ = write!(meta, " d={d}");
    }
    if let Some(m) = a.restriction_m {
        let _ = write!(meta, " m={m}");
    }
    let _ = writeln!(out, "{meta} provenance={}", a.provenance);
    for line in extra_header {
        let _ = writeln!(out, "# {line}");
    }
    for p in a.perms() {
        let _ = writeln!(out, "{p}");
    }
    out
}

pub fn write_array(path: &Path, a: &PermArray, extra_header: &[String]) -> Result<(), Error> {
    std::fs::write(path, format_array(a, extra_header))?;
    Ok(())
}
