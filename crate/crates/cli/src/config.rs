//! `key=value` config files merged into the argument list.

use std::ffi::OsString;

use hitree::{Error, Result};

/// Parses `key = value` lines; `#` starts a comment.
pub fn parse(text: &str) -> Result<Vec<(String, String)>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((k, v)) = line.split_once('=') else {
            return Err(Error::Parse {
                line: i + 1,
                message: "expected key=value".into(),
            });
        };
        let k = k.trim().trim_start_matches("--");
        if k.is_empty() {
            return Err(Error::Parse {
                line: i + 1,
                message: "empty key".into(),
            });
        }
        out.push((k.to_string(), v.trim().to_string()));
    }
    Ok(out)
}

/// Value of `--config` in `args`, if present.
pub fn config_path(args: &[OsString]) -> Option<OsString> {
    let mut it = args.iter();
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

fn given(args: &[OsString], key: &str) -> bool {
    let flag = format!("--{key}");
    let prefix = format!("--{key}=");
    args.iter().any(|a| {
        let s = a.to_string_lossy();
        s == flag || s.starts_with(&prefix)
    })
}

/// Appends entries not already on the command line; `true`/`false` values toggle switches.
pub fn merge(mut args: Vec<OsString>, entries: &[(String, String)]) -> Vec<OsString> {
    let mut extra = Vec::new();
    for (k, v) in entries {
        if k == "config" || given(&args, k) {
            continue;
        }
        match v.as_str() {
            "true" => extra.push(OsString::from(format!("--{k}"))),
            "false" => {}
            _ => extra.push(OsString::from(format!("--{k}={v}"))),
        }
    }
    let at = args.iter().position(|a| a == "--").unwrap_or(args.len());
    args.splice(at..at, extra);
    args
}

#[cfg(test)]
mod tests {
    use super::*;

    fn os(v: &[&str]) -> Vec<OsString> {
        v.iter().map(OsString::from).collect()
    }

    #[test]
    fn parse_entries() {
        let e = parse("# run\nseed = 7\n--trials=10 # inline\n\ntiming=true\n").unwrap();
        assert_eq!(
            e,
            vec![
                ("seed".to_string(), "7".to_string()),
                ("trials".into(), "10".into()),
                ("timing".into(), "true".into())
            ]
        );
        assert!(matches!(parse("oops\n"), Err(Error::Parse { line: 1, .. })));
    }

    #[test]
    fn flags_override_file() {
        let args = os(&["hitree", "pac", "--trials", "3"]);
        let merged = merge(
            args,
            &parse("trials=10\nseed=4\ntiming=true\nverbose=false").unwrap(),
        );
        assert_eq!(
            merged,
            os(&["hitree", "pac", "--trials", "3", "--seed=4", "--timing"])
        );
    }

    #[test]
    fn finds_config_path() {
        assert_eq!(
            config_path(&os(&["x", "--config", "a.cfg"])),
            Some("a.cfg".into())
        );
        assert_eq!(
            config_path(&os(&["x", "--config=b.cfg"])),
            Some("b.cfg".into())
        );
        assert_eq!(config_path(&os(&["x"])), None);
    }
}
