//! `--config` files: a flat JSON object whose keys are the long flag names
//! of the chosen subcommand. The file is expanded into flags placed before
//! the real command line, so explicit flags win.

use crate::CliError;
use clap::CommandFactory;
use serde_json::Value;
use std::path::Path;

/// Command-line spelling of a JSON value; `None` for null.
pub fn flag_value(v: &Value) -> Option<String> {
    match v {
        Value::Null => None,
        Value::String(s) => Some(s.clone()),
        Value::Bool(b) => Some(b.to_string()),
        Value::Number(n) => Some(n.to_string()),
        Value::Array(items) => Some(
            items
                .iter()
                .map(|i| flag_value(i).unwrap_or_default())
                .collect::<Vec<_>>()
                .join(","),
        ),
        Value::Object(_) => Some(v.to_string()),
    }
}

/// Turns the JSON document into `--key value` pairs, rejecting keys that
/// are not flags of `subcommand`.
pub fn expand(text: &str, subcommand: &str, source: &Path) -> Result<Vec<String>, CliError> {
    let doc: Value = serde_json::from_str(text)
        .map_err(|e| CliError::Usage(format!("config {}: {e}", source.display())))?;
    let Value::Object(map) = doc else {
        return Err(CliError::Usage(format!(
            "config {}: expected a JSON object",
            source.display()
        )));
    };
    let cli = crate::args::Cli::command();
    let sub = cli
        .find_subcommand(subcommand)
        .expect("subcommand names come from the parser");
    let known: Vec<&str> = sub
        .get_arguments()
        .filter_map(|a| a.get_long())
        .filter(|l| !matches!(*l, "help" | "config"))
        .collect();
    let mut out = Vec::new();
    for (key, value) in &map {
        let flag = key.replace('_', "-");
        if !known.contains(&flag.as_str()) {
            return Err(CliError::Usage(format!(
                "config {}: unknown key {key:?} for {subcommand}",
                source.display()
            )));
        }
        if let Value::Object(_) = value {
            return Err(CliError::Usage(format!(
                "config {}: key {key:?} must not be an object",
                source.display()
            )));
        }
        if let Some(text) = flag_value(value) {
            out.push(format!("--{flag}"));
            out.push(text);
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keys_become_flags() {
        let args = expand(
            r#"{"operator": "sobel3d", "width": 320, "octree": false, "light": [1, 2.5, -3], "clip_lo": null}"#,
            "render",
            Path::new("c.json"),
        )
        .unwrap();
        let pairs: Vec<_> = args.chunks(2).map(|p| (p[0].as_str(), p[1].as_str())).collect();
        assert!(pairs.contains(&("--operator", "sobel3d")));
        assert!(pairs.contains(&("--width", "320")));
        assert!(pairs.contains(&("--octree", "false")));
        assert!(pairs.contains(&("--light", "1,2.5,-3")));
        assert_eq!(pairs.len(), 4);
    }

    #[test]
    fn unknown_and_malformed_documents_are_usage_errors() {
        for (text, sub) in [
            (r#"{"colour": "red"}"#, "render"),
            (r#"{"resolutions": "512x384"}"#, "render"),
            (r#"{"config": "other.json"}"#, "render"),
            (r#"{"light": {"x": 1}}"#, "render"),
            ("[1, 2]", "bench"),
            ("{", "bench"),
        ] {
            assert!(
                matches!(expand(text, sub, Path::new("c.json")), Err(CliError::Usage(_))),
                "{text}"
            );
        }
    }
}
