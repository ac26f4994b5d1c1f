//! `--config` files: flat key-value tables whose entries become flags unless
//! the same flag is already on the command line.

use std::ffi::OsString;
use std::path::{Path, PathBuf};

use serde_json::Value;

use crate::error::CliError;

fn config_path(argv: &[OsString]) -> Option<PathBuf> {
    let mut it = argv.iter().skip(1);
    while let Some(a) = it.next() {
        let a = a.to_string_lossy();
        if a == "--config" {
            return it.next().map(PathBuf::from);
        }
        if let Some(rest) = a.strip_prefix("--config=") {
            return Some(PathBuf::from(rest));
        }
    }
    None
}

fn load(path: &Path) -> Result<serde_json::Map<String, Value>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    let bad = |e: String| CliError::Usage(format!("config {}: {e}", path.display()));
    let value: Value = if path.extension().is_some_and(|x| x == "json") {
        serde_json::from_str(&text).map_err(|e| bad(e.to_string()))?
    } else {
        let table: toml::Table = toml::from_str(&text).map_err(|e| bad(e.to_string()))?;
        serde_json::to_value(table).map_err(|e| bad(e.to_string()))?
    };
    match value {
        Value::Object(map) => Ok(map),
        _ => Err(bad("expected a table of flags".into())),
    }
}

fn scalar(v: &Value) -> Option<String> {
    match v {
        Value::String(s) => Some(s.clone()),
        Value::Number(n) => Some(n.to_string()),
        _ => None,
    }
}

/// Appends flags from the config file named on the command line, if any.
pub fn splice(mut argv: Vec<OsString>) -> Result<Vec<OsString>, CliError> {
    let Some(path) = config_path(&argv) else {
        return Ok(argv);
    };
    let present: Vec<String> = argv
        .iter()
        .filter_map(|a| a.to_str())
        .filter_map(|a| a.strip_prefix("--"))
        .map(|a| a.split('=').next().unwrap_or(a).to_string())
        .collect();
    for (key, value) in load(&path)? {
        let flag = key.replace('_', "-");
        if flag == "config" || present.contains(&flag) {
            continue;
        }
        let text = match &value {
            Value::Bool(true) => {
                argv.push(format!("--{flag}").into());
                continue;
            }
            Value::Bool(false) | Value::Null => continue,
            Value::Array(items) => items
                .iter()
                .map(|v| scalar(v).ok_or_else(|| CliError::Usage(format!("config key {key}: unsupported list entry"))))
                .collect::<Result<Vec<_>, _>>()?
                .join(","),
            v => scalar(v).ok_or_else(|| CliError::Usage(format!("config key {key}: nested tables are not flags")))?,
        };
        argv.push(format!("--{flag}").into());
        argv.push(text.into());
    }
    Ok(argv)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_line_wins_over_file() {
        let dir = std::env::temp_dir().join(format!("phaselim-config-{}", std::process::id()));
        std::fs::create_dir_all(&dir).unwrap();
        let path = dir.join("c.toml");
        std::fs::write(&path, "k = 3\np = 9\njson = true\nn_grid = [1, 2]\n").unwrap();
        let argv: Vec<OsString> = [
            "phaselim",
            "thresholds",
            "--p",
            "20",
            "--config",
            path.to_str().unwrap(),
        ]
        .iter()
        .map(OsString::from)
        .collect();
        let out: Vec<String> = splice(argv)
            .unwrap()
            .into_iter()
            .map(|s| s.into_string().unwrap())
            .collect();
        assert!(out.windows(2).any(|w| w[0] == "--k" && w[1] == "3"));
        assert!(out.windows(2).any(|w| w[0] == "--n-grid" && w[1] == "1,2"));
        assert!(out.contains(&"--json".to_string()));
        assert_eq!(out.iter().filter(|a| *a == "--p").count(), 1);
        std::fs::remove_dir_all(dir).unwrap();
    }
}
