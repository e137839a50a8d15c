//! TOML persistence for [`SystemDefinition`].
//!
//! ```toml
//! name = "lorenz"
//!
//! [[state_variables]]
//! name = "x"
//! rhs = "sigma*(y-x)"
//! bounds = [-60.0, 60.0]
//!
//! [[parameters]]
//! name = "sigma"
//! default = 10.0
//! min = 0.0
//! max = 50.0
//!
//! [[techniques]]
//! id = "xyz"
//! projection = "3d"
//! axes = ["x", "y", "z"]
//! color = { mode = "position" }
//!
//! [[groups]]
//! count = 100000
//! technique = "xyz"
//! direction = "forward"
//! ic = { x = [-10.0, 10.0], y = [-30.0, 30.0], z = [0.0, 50.0] }
//! ```

use thiserror::Error;

use super::{validate_system, SystemDefinition, ValidationReport};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LoadError {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("schema error: {0}")]
    Schema(String),
    #[error("invalid system:\n{0}")]
    Invalid(ValidationReport),
}

/// Parse and validate a system document.
pub fn load_system(doc: &str) -> Result<SystemDefinition, LoadError> {
    let table: toml::Table = doc
        .parse()
        .map_err(|e: toml::de::Error| LoadError::Syntax(e.to_string().trim_end().to_string()))?;
    let def: SystemDefinition = table
        .try_into()
        .map_err(|e: toml::de::Error| LoadError::Schema(e.to_string().trim_end().to_string()))?;
    let report = validate_system(&def);
    if !report.is_valid() {
        return Err(LoadError::Invalid(report));
    }
    Ok(def)
}

/// Serialize a definition. Output is deterministic: fields appear in schema
/// order and initial conditions in insertion order.
pub fn save_system(def: &SystemDefinition) -> String {
    toml::to_string(def).expect("system definitions always serialize")
}
