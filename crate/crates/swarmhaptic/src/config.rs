//! JSON scenario configuration. The file mirrors
//! [`SimConfig`](swarmhaptic_core::engine::SimConfig) field for field;
//! omitted optional fields take their defaults.

use std::path::Path;

use sha2::{Digest, Sha256};
use swarmhaptic_core::engine::SimConfig;

use crate::error::{IoError, Result};

/// Parse and validate a config file.
pub fn load_config(path: &Path) -> Result<SimConfig> {
    let text = std::fs::read_to_string(path).map_err(|e| IoError::io(path, e))?;
    let config = parse_config(path, &text)?;
    config.validate().map_err(|source| IoError::Invalid {
        path: path.into(),
        source,
    })?;
    Ok(config)
}

/// Parse without validating. Errors name the JSON path of the offending
/// field and its line.
pub fn parse_config(path: &Path, text: &str) -> Result<SimConfig> {
    let mut de = serde_json::Deserializer::from_str(text);
    let config: SimConfig = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let field = e.path().to_string();
        let inner = e.into_inner();
        let message = if field == "." {
            inner.to_string()
        } else {
            format!("field `{field}`: {inner}")
        };
        IoError::parse(path, inner.line(), message)
    })?;
    de.end()
        .map_err(|e| IoError::parse(path, e.line(), e.to_string()))?;
    Ok(config)
}

/// Canonical serialization: compact JSON of the resolved config.
pub fn config_json(config: &SimConfig) -> String {
    serde_json::to_string(config).expect("config serializes")
}

/// SHA-256 of [`config_json`], hex encoded.
pub fn config_hash(config: &SimConfig) -> String {
    format!("{:x}", Sha256::digest(config_json(config).as_bytes()))
}

pub fn write_config(path: &Path, config: &SimConfig) -> Result<()> {
    let mut text = serde_json::to_string_pretty(config).expect("config serializes");
    text.push('\n');
    std::fs::write(path, text).map_err(|e| IoError::io(path, e))
}
