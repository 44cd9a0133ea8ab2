//! Reading experiment files.

use std::path::Path;

use promot::config::ExperimentConfig;

use crate::failure::ConfigError;

/// Parses and validates a TOML (or `.json`) experiment file. Errors carry
/// the dotted path of the offending key.
pub fn load_config(path: &Path) -> Result<ExperimentConfig, ConfigError> {
    let file = path.display().to_string();
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::new(format!("cannot read file: {e}")).in_file(&file))?;
    let cfg = parse_config(&text, path.extension().is_some_and(|e| e == "json")).map_err(|e| e.in_file(&file))?;
    cfg.validate().map_err(|e| ConfigError::from(e).in_file(&file))?;
    Ok(cfg)
}

pub fn parse_config(text: &str, json: bool) -> Result<ExperimentConfig, ConfigError> {
    if json {
        let mut de = serde_json::Deserializer::from_str(text);
        return serde_path_to_error::deserialize(&mut de).map_err(|e| located(e.path().to_string(), e.inner()));
    }
    let de = toml::Deserializer::parse(text).map_err(|e| ConfigError::new(e.to_string()))?;
    serde_path_to_error::deserialize(de).map_err(|e| located(e.path().to_string(), e.inner()))
}

fn located(path: String, inner: &dyn std::fmt::Display) -> ConfigError {
    let mut e = ConfigError::new(inner.to_string().trim().to_string());
    if path != "." && !path.is_empty() {
        e.path = Some(path);
    }
    e
}
