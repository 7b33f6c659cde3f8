//! `key = value` config files that mirror command-line flags.
//!
//! Each entry becomes `--key value` (`--key` alone for `true`, nothing for
//! `false`). The entries are placed ahead of the user's own flags so that
//! flags given on the command line win.

use std::path::Path;

use anyhow::{bail, Context, Result};

/// Entries in file order. Blank lines and `#` comments are skipped.
pub fn parse_config(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            bail!("config line {}: expected key = value, got {line:?}", no + 1);
        };
        let key = k.trim().replace('_', "-");
        if key.is_empty() || key == "config" {
            bail!("config line {}: invalid key {:?}", no + 1, k.trim());
        }
        out.push((key, v.trim().to_string()));
    }
    Ok(out)
}

pub fn config_flags(entries: &[(String, String)]) -> Vec<String> {
    let mut flags = Vec::new();
    for (k, v) in entries {
        match v.as_str() {
            "true" => flags.push(format!("--{k}")),
            "false" => {}
            _ => {
                flags.push(format!("--{k}"));
                flags.push(v.clone());
            }
        }
    }
    flags
}

/// Value of `--config` in `argv`, if any.
pub fn config_path(argv: &[String]) -> Option<String> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        if a == "--config" {
            return it.next().cloned();
        }
        if let Some(p) = a.strip_prefix("--config=") {
            return Some(p.to_string());
        }
    }
    None
}

/// Rewrite `argv` as `prog subcommand <config flags> <user flags>`.
pub fn splice_config(argv: Vec<String>, subcommands: &[&str]) -> Result<Vec<String>> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let text = std::fs::read_to_string(Path::new(&path)).with_context(|| format!("reading config {path}"))?;
    let flags = config_flags(&parse_config(&text)?);
    let mut rest: Vec<String> = argv[1..].to_vec();
    let mut out = vec![argv[0].clone()];
    if let Some(pos) = rest.iter().position(|a| subcommands.contains(&a.as_str())) {
        out.push(rest.remove(pos));
    }
    out.extend(flags);
    out.extend(rest);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn entries_and_flags() {
        let e = parse_config("# run\nseed = 7\nnoise_multiplier=5\nboost = true\nhalve=false\n").unwrap();
        assert_eq!(config_flags(&e), ["--seed", "7", "--noise-multiplier", "5", "--boost"]);
        assert!(parse_config("seed 7").is_err());
    }

    #[test]
    fn config_flags_come_before_user_flags() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.conf");
        std::fs::write(&p, "eps = 0.5\nm = 10\n").unwrap();
        let argv: Vec<String> =
            ["upriv", "--eps", "2", "uniformity-test", "--config", p.to_str().unwrap()].map(String::from).to_vec();
        let out = splice_config(argv, &["uniformity-test"]).unwrap();
        assert_eq!(&out[..6], ["upriv", "uniformity-test", "--eps", "0.5", "--m", "10"]);
        assert_eq!(&out[6..8], ["--eps", "2"]);
    }
}
