//! `key = value` config files merged under the command line.

use std::ffi::OsString;
use std::path::Path;

use anyhow::{bail, Context, Result};
use clap::parser::ValueSource;
use clap::{ArgMatches, Command};

/// Parse `key = value` lines; `#` starts a comment. Keys may use `_` or `-`.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key = value", n + 1);
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() {
            bail!("config line {}: empty key", n + 1);
        }
        if out.iter().any(|(seen, _)| *seen == key) {
            bail!("config line {}: duplicate key {key}", n + 1);
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

/// The innermost subcommand and its matches.
fn leaf<'a>(cmd: &'a Command, matches: &'a ArgMatches) -> (&'a Command, &'a ArgMatches) {
    match matches.subcommand() {
        Some((name, sub)) => {
            let sub_cmd = cmd.find_subcommand(name).expect("matched subcommand exists");
            leaf(sub_cmd, sub)
        }
        None => (cmd, matches),
    }
}

/// Extra arguments contributed by the config file: one per key the user
/// did not already give on the command line.
pub fn extra_args(cmd: &Command, matches: &ArgMatches, path: &Path) -> Result<Vec<OsString>> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading config {}", path.display()))?;
    let (leaf_cmd, leaf_matches) = leaf(cmd, matches);
    let mut args = Vec::new();
    for (key, value) in parse(&text)? {
        let Some(arg) = leaf_cmd
            .get_arguments()
            .find(|a| a.get_long() == Some(key.as_str()))
        else {
            bail!("unknown config key {key} for `{}`", leaf_cmd.get_name());
        };
        if key == "config" {
            bail!("a config file cannot name another config file");
        }
        let given = [leaf_matches, matches]
            .iter()
            .filter(|m| m.ids().any(|id| id == arg.get_id()))
            .any(|m| m.value_source(arg.get_id().as_str()) == Some(ValueSource::CommandLine));
        if given {
            continue;
        }
        if arg.get_num_args().is_some_and(|n| n.takes_values()) {
            args.push(OsString::from(format!("--{key}={value}")));
        } else {
            match value.as_str() {
                "true" => args.push(OsString::from(format!("--{key}"))),
                "false" => {}
                other => bail!("config key {key} expects true or false, got {other}"),
            }
        }
    }
    Ok(args)
}
