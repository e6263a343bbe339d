//! Flat `key = value` configuration files.
//!
//! Keys are long flag names without the dashes. The file's entries are spliced
//! in right after the subcommand, so any flag given on the command line comes
//! later and overrides them.

use std::ffi::OsString;
use std::path::Path;

use crate::error::CliError;

/// Parses the file into `--key value` pairs. `true`/`false` values become bare
/// switches or are dropped.
pub fn parse(text: &str) -> Result<Vec<OsString>, CliError> {
    let mut out = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(CliError::Usage(format!("config line {}: expected `key = value`", lineno + 1)));
        };
        let key = key.trim().trim_start_matches("--");
        let value = value.trim().trim_matches('"');
        if key.is_empty() || key == "config" {
            return Err(CliError::Usage(format!("config line {}: invalid key `{key}`", lineno + 1)));
        }
        match value {
            "true" => out.push(format!("--{key}").into()),
            "false" => {}
            v => {
                out.push(format!("--{key}").into());
                out.push(v.into());
            }
        }
    }
    Ok(out)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(v) = s.strip_prefix("--config=") {
            return Some(v.into());
        }
    }
    None
}

/// Inserts the entries of `--config FILE`, if present, after the subcommand name.
pub fn splice(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = std::fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::Io(format!("cannot read config {}: {e}", Path::new(&path).display())))?;
    let entries = parse(&text)?;
    // argv[0], then the subcommand: the first argument not starting with '-'
    let Some(sub) = args.iter().skip(1).position(|a| !a.to_string_lossy().starts_with('-')) else {
        return Ok(args);
    };
    let at = sub + 2;
    let mut out = args[..at].to_vec();
    out.extend(entries);
    out.extend_from_slice(&args[at..]);
    Ok(out)
}
