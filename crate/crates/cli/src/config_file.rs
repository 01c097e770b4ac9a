//! Flat `key=value` option files.
//!
//! Each entry becomes `--key value` inserted right after the subcommand, so
//! explicit flags later on the command line override it. Entries whose
//! `OMT_<KEY>` variable is set are dropped so the environment wins too.

use std::ffi::OsString;
use std::path::Path;

use clap::CommandFactory;

use crate::args::Cli;
use crate::CliError;

/// Parses `key=value` lines; blank lines and `#` comments are skipped.
pub fn parse(text: &str) -> Result<Vec<(String, String)>, CliError> {
    let mut entries = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line.split_once('=').ok_or_else(|| {
            CliError::Usage(format!("config line {}: expected key=value, got {line:?}", i + 1))
        })?;
        let key = key.trim().replace('_', "-");
        if key.is_empty() {
            return Err(CliError::Usage(format!("config line {}: empty key", i + 1)));
        }
        entries.push((key, value.trim().to_string()));
    }
    Ok(entries)
}

fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.to_str().and_then(|s| s.strip_prefix("--config=")) {
            return Some(p.into());
        }
    }
    None
}

fn env_name(key: &str) -> String {
    format!("OMT_{}", key.replace('-', "_").to_uppercase())
}

/// Returns `args` with the option file's entries spliced in.
pub fn expand(args: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&args) else {
        return Ok(args);
    };
    let cmd = Cli::command();
    let Some(pos) = args
        .iter()
        .position(|a| a.to_str().is_some_and(|s| cmd.find_subcommand(s).is_some()))
    else {
        return Ok(args);
    };
    let sub = cmd.find_subcommand(args[pos].to_str().unwrap()).unwrap();
    let text = std::fs::read_to_string(Path::new(&path))?;
    let mut injected: Vec<OsString> = Vec::new();
    for (key, value) in parse(&text)? {
        let arg = sub
            .get_arguments()
            .chain(cmd.get_arguments())
            .find(|a| a.get_long() == Some(key.as_str()) && a.get_long() != Some("config"))
            .ok_or_else(|| CliError::Usage(format!("config: unknown key {key:?}")))?;
        if std::env::var_os(env_name(&key)).is_some() {
            continue;
        }
        let is_switch = matches!(arg.get_action(), clap::ArgAction::SetTrue);
        if is_switch {
            match value.as_str() {
                "true" | "1" | "yes" => injected.push(format!("--{key}").into()),
                "false" | "0" | "no" => {}
                other => {
                    return Err(CliError::Usage(format!(
                        "config: {key} expects true or false, got {other:?}"
                    )))
                }
            }
        } else {
            injected.push(format!("--{key}={value}").into());
        }
    }
    let mut out = args;
    out.splice(pos + 1..pos + 1, injected);
    Ok(out)
}
