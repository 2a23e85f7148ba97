//! Flat `key=value` config files merged under the command line.
//!
//! Config entries are spliced in as ordinary flags right after the
//! subcommand name; every argument overrides itself, so anything given on
//! the real command line later wins.

use std::ffi::OsString;
use std::fs;
use std::path::Path;

use anyhow::{bail, Context, Result};

/// Reads `key = value` lines. Blank lines and lines starting with `#` are
/// skipped.
pub fn read_pairs(path: &Path) -> Result<Vec<(String, String)>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading config file {}", path.display()))?;
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            bail!("{}:{}: expected key=value, got {line:?}", path.display(), lineno + 1);
        };
        let key = key.trim().trim_start_matches('-').replace('_', "-");
        if key.is_empty() {
            bail!("{}:{}: empty key", path.display(), lineno + 1);
        }
        pairs.push((key, value.trim().to_string()));
    }
    Ok(pairs)
}

fn as_flags(pairs: &[(String, String)]) -> Vec<OsString> {
    let mut out = Vec::new();
    for (key, value) in pairs {
        let flag = if key.len() == 1 {
            format!("-{key}")
        } else {
            format!("--{key}")
        };
        match value.as_str() {
            "true" => out.push(flag.into()),
            "false" => {}
            _ => {
                out.push(flag.into());
                out.push(value.into());
            }
        }
    }
    out
}

/// Finds `--config FILE` / `--config=FILE` anywhere in `args`.
fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut iter = args.iter();
    while let Some(arg) = iter.next() {
        let text = arg.to_string_lossy();
        if text == "--config" {
            return iter.next().cloned();
        }
        if let Some(path) = text.strip_prefix("--config=") {
            return Some(path.into());
        }
    }
    None
}

/// Returns `args` with the config file's flags inserted after the first
/// token that names a subcommand.
pub fn merge(args: Vec<OsString>, subcommands: &[&str]) -> Result<Vec<OsString>> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let pairs = read_pairs(Path::new(&path))?;
    let Some(at) = args.iter().position(|a| subcommands.iter().any(|s| a == s)) else {
        return Ok(args);
    };
    let mut merged = args[..=at].to_vec();
    merged.extend(as_flags(&pairs));
    merged.extend_from_slice(&args[at + 1..]);
    Ok(merged)
}
