//! Plain `key=value` configuration files.
//!
//! Keys are [`TrainConfig`](crate::trainer::TrainConfig) field names, one
//! per line; blank lines and `#` comments are ignored. Values take the type
//! of the field's default, so unknown keys and ill-typed values are errors.

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;
use serde_json::{Map, Number, Value};

use crate::{Error, Result};

fn object<T: Serialize>(value: &T) -> Map<String, Value> {
    match serde_json::to_value(value) {
        Ok(Value::Object(m)) => m,
        _ => unreachable!("configuration types serialize to objects"),
    }
}

/// One `key=value` line per field, in declaration order.
pub fn to_key_values<T: Serialize>(value: &T) -> Vec<String> {
    object(value)
        .into_iter()
        .map(|(k, v)| match v {
            Value::String(s) => format!("{k}={s}"),
            Value::Number(n) => match n.as_f64() {
                Some(f) if !n.is_u64() && !n.is_i64() => format!("{k}={f:?}"),
                _ => format!("{k}={n}"),
            },
            other => format!("{k}={other}"),
        })
        .collect()
}

fn parse_like(template: &Value, raw: &str) -> std::result::Result<Value, String> {
    let bad = || format!("cannot parse `{raw}`");
    Ok(match template {
        Value::Bool(_) => Value::Bool(raw.parse().map_err(|_| bad())?),
        Value::Number(n) if n.is_u64() => Value::Number(raw.parse::<u64>().map_err(|_| bad())?.into()),
        Value::Number(_) => {
            let f: f64 = raw.parse().map_err(|_| bad())?;
            Value::Number(Number::from_f64(f).ok_or_else(|| format!("`{raw}` is not finite"))?)
        }
        _ => Value::String(raw.to_string()),
    })
}

/// Applies `key=value` lines on top of `base`.
pub fn from_key_values<'a, T>(lines: impl IntoIterator<Item = &'a str>, base: T) -> Result<T>
where
    T: Serialize + DeserializeOwned,
{
    let mut map = object(&base);
    for (k, line) in lines.into_iter().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, raw) = line
            .split_once('=')
            .ok_or_else(|| Error::invalid(format!("line {}: expected key=value", k + 1)))?;
        let (key, raw) = (key.trim(), raw.trim());
        let template = map
            .get(key)
            .ok_or_else(|| Error::invalid(format!("line {}: unknown key `{key}`", k + 1)))?;
        let v = parse_like(template, raw).map_err(|m| Error::invalid(format!("line {}: {key}: {m}", k + 1)))?;
        map.insert(key.to_string(), v);
    }
    serde_json::from_value(Value::Object(map)).map_err(|e| Error::invalid(e.to_string()))
}

pub fn load<T: Serialize + DeserializeOwned>(path: impl AsRef<Path>, base: T) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    from_key_values(text.lines(), base).map_err(|e| Error::invalid(format!("{}: {e}", path.display())))
}

pub fn save<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<()> {
    let path = path.as_ref();
    let mut text = to_key_values(value).join("\n");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::augment::Variant;
    use crate::trainer::TrainConfig;

    #[test]
    fn round_trip_is_exact() {
        let cfg = TrainConfig {
            lambda2: 1.0 / 3.0,
            lr: 0.1 + 0.2,
            tau: 1.0,
            variant: Variant::NoKga,
            seed: u64::MAX,
            ..TrainConfig::default()
        };
        let lines = to_key_values(&cfg);
        assert!(lines.contains(&"tau=1.0".to_string()));
        assert!(lines.contains(&"variant=no-kga".to_string()));
        let back: TrainConfig = from_key_values(lines.iter().map(String::as_str), TrainConfig::default()).unwrap();
        assert_eq!(back, cfg);
    }

    #[test]
    fn overrides_and_errors() {
        let cfg: TrainConfig =
            from_key_values(["# comment", "", "epochs = 7", "p_k=0.25", "transe=false"], TrainConfig::default()).unwrap();
        assert_eq!((cfg.epochs, cfg.p_k, cfg.transe), (7, 0.25, false));
        assert!(from_key_values(["epoch=7"], TrainConfig::default()).is_err());
        assert!(from_key_values(["epochs=-1"], TrainConfig::default()).is_err());
        assert!(from_key_values(["variant=none"], TrainConfig::default()).is_err());
        assert!(from_key_values(["tau"], TrainConfig::default()).is_err());
    }
}
