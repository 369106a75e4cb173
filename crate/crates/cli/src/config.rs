use std::path::Path;

use ering_core::{Error, Result, SourceConfig};

/// Defaults, then the file (if any), then `KEY=VALUE` overrides. Parse
/// errors in the file report its line numbers.
pub fn load(path: Option<&Path>, overrides: &[String]) -> Result<SourceConfig> {
    let text = match path {
        Some(p) => std::fs::read_to_string(p).map_err(|e| Error::Format {
            line: None,
            msg: format!("cannot read config {}: {e}", p.display()),
        })?,
        None => String::new(),
    };
    let cfg = SourceConfig::from_toml_str(&text)?;
    if overrides.is_empty() {
        return Ok(cfg);
    }
    let mut table: toml::Table = toml::from_str(&cfg.to_toml_string()).expect("own output parses");
    for item in overrides {
        let (key, value) = item.split_once('=').ok_or_else(|| Error::Format {
            line: None,
            msg: format!("--set expects KEY=VALUE, got {item:?}"),
        })?;
        let value: f64 = value.trim().parse().map_err(|_| Error::Format {
            line: None,
            msg: format!("--set {key}: {value:?} is not a number"),
        })?;
        table.insert(key.trim().to_string(), toml::Value::Float(value));
    }
    SourceConfig::from_toml_str(&toml::to_string(&table).expect("table of floats serializes")).map_err(|e| match e {
        Error::Format { msg, .. } => Error::Format {
            line: None,
            msg: format!("--set: {msg}"),
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn overrides_replace_file_values() {
        let cfg = load(None, &["visibility=0.9".into(), "R=0.2".into()]).unwrap();
        assert_eq!(cfg.visibility, 0.9);
        assert_eq!(cfg.mirror_radius, 0.2);
    }

    #[test]
    fn unknown_override_key_is_rejected() {
        assert!(matches!(load(None, &["nope=1".into()]), Err(Error::Format { .. })));
        assert!(matches!(load(None, &["visibility".into()]), Err(Error::Format { .. })));
    }
}
