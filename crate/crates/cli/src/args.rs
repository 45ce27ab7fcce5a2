//! Turns `--key value` pairs into one JSON argument document.

use std::io::Read;

use serde_json::{Map, Value};

use crate::CliError;

/// Options shared by every verb, after merging flags from either side of the
/// group/verb words.
#[derive(Debug, Clone, Default)]
pub struct Globals {
    pub seed: Option<u64>,
    pub grid: Option<u64>,
    pub depth: Option<u64>,
    pub scale: Option<String>,
    pub format: Option<String>,
    pub json: Option<String>,
}

const GLOBAL_KEYS: [&str; 6] = ["seed", "grid", "depth", "scale", "format", "json"];

/// A bare value is read as JSON when it parses and as a string otherwise, so
/// `--l 4` is a number and `--op add` is the string `"add"`.
fn literal(text: &str) -> Value {
    serde_json::from_str(text).unwrap_or_else(|_| Value::String(text.to_string()))
}

pub fn split(tokens: &[String], globals: &mut Globals) -> Result<Map<String, Value>, CliError> {
    let mut doc = Map::new();
    let mut i = 0;
    while i < tokens.len() {
        let Some(key) = tokens[i].strip_prefix("--") else {
            return Err(CliError::Usage(format!("unexpected argument {:?}", tokens[i])));
        };
        let (key, inline) = match key.split_once('=') {
            Some((k, v)) => (k.to_string(), Some(v.to_string())),
            None => (key.to_string(), None),
        };
        let value = match inline {
            Some(v) => v,
            None if i + 1 < tokens.len() && !is_flag(&tokens[i + 1]) => {
                i += 1;
                tokens[i].clone()
            }
            None => "true".to_string(),
        };
        i += 1;
        if GLOBAL_KEYS.contains(&key.as_str()) {
            set_global(globals, &key, &value)?;
        } else if doc.insert(key.clone(), literal(&value)).is_some() {
            return Err(CliError::Usage(format!("--{key} given twice")));
        }
    }
    Ok(doc)
}

fn is_flag(token: &str) -> bool {
    token.starts_with("--") && token.len() > 2
}

fn set_global(g: &mut Globals, key: &str, value: &str) -> Result<(), CliError> {
    let number = |v: &str| {
        v.parse::<u64>()
            .map_err(|_| CliError::Usage(format!("--{key} expects a nonnegative integer, got {v:?}")))
    };
    match key {
        "seed" => g.seed = Some(number(value)?),
        "grid" => g.grid = Some(number(value)?),
        "depth" => g.depth = Some(number(value)?),
        "scale" => g.scale = Some(value.to_string()),
        "format" => g.format = Some(value.to_string()),
        "json" => g.json = Some(value.to_string()),
        _ => unreachable!("checked against GLOBAL_KEYS"),
    }
    Ok(())
}

/// Reads the `--json` document (a path, or `-` for stdin) and overlays the
/// inline arguments on it.
pub fn document(json: Option<&str>, inline: Map<String, Value>) -> Result<Value, CliError> {
    let mut base = match json {
        None => Map::new(),
        Some(source) => {
            let text = if source == "-" {
                let mut buf = String::new();
                std::io::stdin()
                    .read_to_string(&mut buf)
                    .map_err(|e| CliError::Usage(format!("reading stdin: {e}")))?;
                buf
            } else {
                std::fs::read_to_string(source).map_err(|e| CliError::Usage(format!("reading {source}: {e}")))?
            };
            match serde_json::from_str(&text)? {
                Value::Object(m) => m,
                other => {
                    return Err(CliError::Usage(format!(
                        "the --json document must be an object, got {other}"
                    )))
                }
            }
        }
    };
    base.extend(inline);
    Ok(Value::Object(base))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn toks(s: &[&str]) -> Vec<String> {
        s.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn values_are_typed() {
        let mut g = Globals::default();
        let doc = split(&toks(&["--l", "4", "--op", "add", "--S", r#"[[2,"inf"]]"#, "--seed", "9"]), &mut g).unwrap();
        assert_eq!(doc["l"], Value::from(4));
        assert_eq!(doc["op"], Value::from("add"));
        assert!(doc["S"].is_array());
        assert_eq!(g.seed, Some(9));
    }

    #[test]
    fn negative_numbers_are_values() {
        let mut g = Globals::default();
        let doc = split(&toks(&["--m", "-3", "--flag", "--k=-1"]), &mut g).unwrap();
        assert_eq!(doc["m"], Value::from(-3));
        assert_eq!(doc["flag"], Value::from(true));
        assert_eq!(doc["k"], Value::from(-1));
    }

    #[test]
    fn rejects_strays_and_repeats() {
        let mut g = Globals::default();
        assert!(split(&toks(&["oops"]), &mut g).is_err());
        assert!(split(&toks(&["--a", "1", "--a", "2"]), &mut g).is_err());
        assert!(split(&toks(&["--seed", "x"]), &mut g).is_err());
    }
}
