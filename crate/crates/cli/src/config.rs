//! `--config` files: flat `key=value` lines, `#` comments, keys named after
//! the long flags. File values are spliced in right after the subcommand so
//! any flag given on the command line overrides them.

use crate::args::{Cli, SUBCOMMANDS};
use crate::error::CliError;
use clap::CommandFactory;
use std::ffi::OsString;
use std::fs;
use std::path::Path;

const BOOL_KEYS: &[&str] = &["quiet", "raw"];

pub fn parse_config(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut pairs = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("config line {}: expected key=value", lineno + 1)))?;
        let key = k.trim().trim_start_matches("--").replace('_', "-");
        pairs.push((key, v.trim().to_owned()));
    }
    Ok(pairs)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter().skip(1);
    while let Some(a) = it.next() {
        let s = a.to_string_lossy();
        if s == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = s.strip_prefix("--config=") {
            return Some(p.into());
        }
    }
    None
}

/// Long flag names accepted after `sub`, including global ones.
fn known_flags(sub: &str) -> Vec<String> {
    let cmd = Cli::command();
    let global = cmd.get_arguments().filter_map(|a| a.get_long()).map(str::to_owned);
    let local: Vec<String> = cmd
        .find_subcommand(sub)
        .map(|s| s.get_arguments().filter_map(|a| a.get_long()).map(str::to_owned).collect())
        .unwrap_or_default();
    global.chain(local).collect()
}

/// Returns `args` with the config file's settings inserted.
pub fn merge_config(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let text = fs::read_to_string(Path::new(&path))
        .map_err(|e| CliError::Usage(format!("cannot read config {}: {e}", path.to_string_lossy())))?;
    let pairs = parse_config(&text)?;
    let Some(pos) = args
        .iter()
        .position(|a| SUBCOMMANDS.contains(&a.to_string_lossy().as_ref()))
    else {
        return Ok(args);
    };
    let sub = args[pos].to_string_lossy().into_owned();
    let known = known_flags(&sub);
    let mut injected = Vec::new();
    for (key, value) in pairs {
        if key == "config" {
            continue;
        }
        if !known.contains(&key) {
            log::warn!("config key `{key}` does not apply to `{sub}`, ignored");
            continue;
        }
        if BOOL_KEYS.contains(&key.as_str()) {
            match value.as_str() {
                "true" | "1" | "yes" => injected.push(OsString::from(format!("--{key}"))),
                "false" | "0" | "no" => {}
                _ => return Err(CliError::Usage(format!("config key `{key}` expects true or false"))),
            }
        } else {
            injected.push(OsString::from(format!("--{key}={value}")));
        }
    }
    let mut merged = args[..=pos].to_vec();
    merged.extend(injected);
    merged.extend_from_slice(&args[pos + 1..]);
    Ok(merged)
}
