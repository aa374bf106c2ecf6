//! Flat `key = value` benchmark configuration.

use std::collections::BTreeMap;

use metapool_core::{BenchmarkConfig, Method, PresetVariant};

use crate::error::CliError;

pub const SEED_ENV: &str = "METAPOOL_SEED";

const KEYS: [&str; 7] = ["settings", "m", "reps", "seed", "alpha", "methods", "variant"];

pub fn parse_config(text: &str) -> Result<BenchmarkConfig, CliError> {
    let mut seen = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| CliError::Config(format!("line {}: expected key = value", i + 1)))?;
        let key = key.trim();
        if !KEYS.contains(&key) {
            return Err(CliError::Config(format!("line {}: unknown key `{key}`", i + 1)));
        }
        if seen.insert(key.to_string(), value.trim().to_string()).is_some() {
            return Err(CliError::Config(format!("line {}: duplicate key `{key}`", i + 1)));
        }
    }
    let mut cfg = BenchmarkConfig::default();
    for (key, value) in &seen {
        let bad = |e: String| CliError::Config(format!("{key}: {e}"));
        match key.as_str() {
            "settings" => cfg.settings = list(value).map_err(bad)?,
            "m" => cfg.m_values = list(value).map_err(bad)?,
            "reps" => cfg.n_reps = scalar(value).map_err(bad)?,
            "seed" => cfg.master_seed = scalar(value).map_err(bad)?,
            "alpha" => cfg.alpha = scalar(value).map_err(bad)?,
            "methods" => cfg.methods = parse_methods(value)?,
            "variant" => cfg.variant = value.parse::<PresetVariant>().map_err(|e| bad(e.to_string()))?,
            _ => unreachable!("keys are checked above"),
        }
    }
    cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
    Ok(cfg)
}

/// Seed precedence: explicit flag, then `METAPOOL_SEED`, then the fallback.
pub fn resolve_seed(flag: Option<u64>, env: Option<&str>, fallback: u64) -> Result<u64, CliError> {
    if let Some(s) = flag {
        return Ok(s);
    }
    match env {
        Some(v) => v
            .trim()
            .parse()
            .map_err(|_| CliError::Config(format!("{SEED_ENV} must be an unsigned integer, got `{v}`"))),
        None => Ok(fallback),
    }
}

pub fn parse_methods(value: &str) -> Result<Vec<Method>, CliError> {
    let methods = value
        .split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| s.parse::<Method>().map_err(|e| CliError::Config(e.to_string())))
        .collect::<Result<Vec<_>, _>>()?;
    if methods.is_empty() {
        return Err(CliError::Config("methods must not be empty".into()));
    }
    Ok(methods)
}

fn scalar<T: std::str::FromStr>(v: &str) -> Result<T, String> {
    v.parse().map_err(|_| format!("cannot parse `{v}`"))
}

fn list<T: std::str::FromStr>(v: &str) -> Result<Vec<T>, String> {
    v.split(',').map(|s| scalar(s.trim())).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn full_config() {
        let cfg = parse_config(
            "# replica\nsettings = 1,2\nm = 10, 20\nreps = 5\nseed = 9\nalpha = 0.1\nmethods = dl,BD\nvariant = reported\n",
        )
        .unwrap();
        assert_eq!(cfg.settings, vec![1, 2]);
        assert_eq!(cfg.m_values, vec![10, 20]);
        assert_eq!((cfg.n_reps, cfg.master_seed, cfg.alpha), (5, 9, 0.1));
        assert_eq!(cfg.methods, vec![Method::DL, Method::BD]);
        assert_eq!(cfg.variant, PresetVariant::Reported);
    }

    #[test]
    fn defaults_fill_missing_keys() {
        assert_eq!(parse_config("").unwrap(), BenchmarkConfig::default());
    }

    #[test]
    fn rejects_bad_input() {
        for text in ["reps = x", "colour = red", "reps = 1\nreps = 2", "no equals", "settings = 7", "methods = XX", "reps = 0"] {
            assert!(matches!(parse_config(text), Err(CliError::Config(_))), "{text}");
        }
    }

    #[test]
    fn seed_precedence() {
        assert_eq!(resolve_seed(Some(3), Some("5"), 1).unwrap(), 3);
        assert_eq!(resolve_seed(None, Some("5"), 1).unwrap(), 5);
        assert_eq!(resolve_seed(None, None, 1).unwrap(), 1);
        assert!(resolve_seed(None, Some("-2"), 1).is_err());
    }
}
