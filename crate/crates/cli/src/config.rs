//! `--config` files: one `key = value` per line, `#` starts a comment. Keys
//! are long flag names with or without the leading dashes; underscores and
//! dashes are interchangeable. Flags given on the command line win.

use std::ffi::OsString;
use std::fs;

use clap::CommandFactory;

use crate::Cli;

fn normalize(key: &str) -> String {
    key.trim().trim_start_matches("--").replace('_', "-")
}

pub fn parse(text: &str) -> Result<Vec<(String, String)>, String> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line.split_once('=').ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
        let key = normalize(k);
        if key.is_empty() {
            return Err(format!("line {}: empty key", i + 1));
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

fn flag_names(subcommand: Option<&str>) -> Vec<String> {
    let cmd = Cli::command();
    let mut names: Vec<String> = cmd.get_arguments().filter_map(|a| a.get_long().map(String::from)).collect();
    if let Some(sub) = subcommand.and_then(|s| cmd.find_subcommand(s)) {
        names.extend(sub.get_arguments().filter_map(|a| a.get_long().map(String::from)));
    }
    names
}

/// Appends the config file's settings to `args` for every flag not already given.
pub fn expand_args(mut args: Vec<OsString>) -> Result<Vec<OsString>, String> {
    let strs: Vec<String> = args.iter().map(|a| a.to_string_lossy().into_owned()).collect();
    let mut path = None;
    for (i, a) in strs.iter().enumerate() {
        if a == "--config" {
            path = strs.get(i + 1).cloned();
        } else if let Some(p) = a.strip_prefix("--config=") {
            path = Some(p.to_string());
        }
    }
    let Some(path) = path else {
        return Ok(args);
    };
    let text = fs::read_to_string(&path).map_err(|e| format!("cannot read `{path}`: {e}"))?;
    let entries = parse(&text)?;
    let subcommands: Vec<String> = Cli::command().get_subcommands().map(|s| s.get_name().to_string()).collect();
    let sub = strs.iter().skip(1).find(|a| subcommands.contains(a)).map(String::as_str);
    let known = flag_names(sub);
    let given: Vec<String> = strs
        .iter()
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    for (key, value) in entries {
        if key == "config" || !known.contains(&key) {
            return Err(format!("unknown key `{key}`"));
        }
        if given.contains(&key) {
            continue;
        }
        args.push(format!("--{key}={value}").into());
    }
    Ok(args)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_lines() {
        let e = parse("# c\nkappa = 16\n--t_sigma=256  # x\n\n").unwrap();
        assert_eq!(e, vec![("kappa".into(), "16".into()), ("t-sigma".into(), "256".into())]);
        assert!(parse("novalue").unwrap_err().contains("line 1"));
    }
}
