//! Declarative description of an ODE system: state variables with their
//! right-hand sides and bounds, parameters, render techniques and particle
//! groups.

mod document;
mod validate;

use indexmap::IndexMap;
use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use document::{load_system, save_system, LoadError};
pub use validate::{validate_system, ValidationIssue, ValidationReport};

use crate::expr::{parse, Expr, ParseError};

/// Closed real interval `[lo, hi]`, stored in documents as `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const fn new(lo: f64, hi: f64) -> Self {
        Interval { lo, hi }
    }

    pub fn width(&self) -> f64 {
        self.hi - self.lo
    }

    /// True when `lo < hi` and both ends are finite.
    pub fn is_proper(&self) -> bool {
        self.lo.is_finite() && self.hi.is_finite() && self.lo < self.hi
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn contains_interval(&self, other: &Interval) -> bool {
        self.lo <= other.lo && other.hi <= self.hi
    }
}

impl From<[f64; 2]> for Interval {
    fn from([lo, hi]: [f64; 2]) -> Self {
        Interval { lo, hi }
    }
}

impl From<Interval> for [f64; 2] {
    fn from(i: Interval) -> Self {
        [i.lo, i.hi]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StateVariable {
    pub name: String,
    /// Time derivative, in the expression language.
    pub rhs: String,
    /// Particles leaving these bounds are reset.
    pub bounds: Interval,
}

impl StateVariable {
    pub fn new(name: impl Into<String>, rhs: impl Into<String>, bounds: Interval) -> Self {
        StateVariable {
            name: name.into(),
            rhs: rhs.into(),
            bounds,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Parameter {
    pub name: String,
    pub default: f64,
    pub min: f64,
    pub max: f64,
}

impl Parameter {
    pub fn new(name: impl Into<String>, default: f64, min: f64, max: f64) -> Self {
        Parameter {
            name: name.into(),
            default,
            min,
            max,
        }
    }

    pub fn clamp(&self, value: f64) -> f64 {
        value.clamp(self.min, self.max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Projection {
    #[serde(rename = "2d")]
    Planar2D,
    #[serde(rename = "3d")]
    Perspective3D,
}

impl Projection {
    pub fn dims(self) -> usize {
        match self {
            Projection::Planar2D => 2,
            Projection::Perspective3D => 3,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", rename_all = "lowercase", deny_unknown_fields)]
pub enum ColorMode {
    Fixed { rgb: [f64; 3] },
    /// Each rendered axis maps linearly onto one colour channel.
    Position,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RenderTechnique {
    pub id: String,
    pub projection: Projection,
    pub axes: Vec<String>,
    pub color: ColorMode,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

impl Direction {
    /// +1 for forward time, -1 for backward.
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Backward => -1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParticleGroup {
    pub count: usize,
    pub technique: String,
    pub direction: Direction,
    /// Initial-condition interval per state variable. Together these form
    /// the cube that fresh particles are drawn from.
    pub ic: IndexMap<String, Interval>,
    /// Particles older than this (in simulated time) are reset. `None` is
    /// unbounded.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub max_age: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemDefinition {
    pub name: String,
    pub state_variables: Vec<StateVariable>,
    #[serde(default)]
    pub parameters: Vec<Parameter>,
    #[serde(default)]
    pub techniques: Vec<RenderTechnique>,
    #[serde(default)]
    pub groups: Vec<ParticleGroup>,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ModelError {
    #[error("unknown parameter '{0}'")]
    UnknownParameter(String),
    #[error("unknown state variable '{0}'")]
    UnknownStateVariable(String),
    #[error("cannot parse {var}.rhs: {source}")]
    Rhs { var: String, source: ParseError },
    #[error("system is invalid:\n{0}")]
    Invalid(ValidationReport),
}

impl SystemDefinition {
    pub fn dims(&self) -> usize {
        self.state_variables.len()
    }

    /// Sum of all group counts.
    pub fn particle_count(&self) -> usize {
        self.groups.iter().map(|g| g.count).sum()
    }

    pub fn state_index(&self, name: &str) -> Option<usize> {
        self.state_variables.iter().position(|v| v.name == name)
    }

    pub fn param_index(&self, name: &str) -> Option<usize> {
        self.parameters.iter().position(|p| p.name == name)
    }

    pub fn parameter(&self, name: &str) -> Option<&Parameter> {
        self.parameters.iter().find(|p| p.name == name)
    }

    pub fn technique(&self, id: &str) -> Option<&RenderTechnique> {
        self.techniques.iter().find(|t| t.id == id)
    }

    pub fn default_params(&self) -> Vec<f64> {
        self.parameters.iter().map(|p| p.default).collect()
    }

    /// Parsed right-hand sides in state-variable order.
    pub fn parsed_rhs(&self) -> Result<Vec<Expr>, ModelError> {
        self.state_variables
            .iter()
            .map(|v| {
                parse(&v.rhs).map_err(|source| ModelError::Rhs {
                    var: v.name.clone(),
                    source,
                })
            })
            .collect()
    }

    /// Fails with the full report when the definition is not valid.
    pub fn ensure_valid(&self) -> Result<(), ModelError> {
        let report = validate_system(self);
        if report.is_valid() {
            Ok(())
        } else {
            Err(ModelError::Invalid(report))
        }
    }

    /// Replace every group's count, distributing `total` in proportion to the
    /// existing counts. The remainder goes to the first group.
    pub fn with_particle_count(mut self, total: usize) -> Self {
        let old = self.particle_count().max(1);
        let mut assigned = 0;
        for g in &mut self.groups {
            g.count = ((g.count as u128 * total as u128) / old as u128) as usize;
            assigned += g.count;
        }
        if let Some(first) = self.groups.first_mut() {
            first.count += total - assigned;
        }
        self
    }

    /// Override a parameter's default value.
    pub fn with_default(mut self, name: &str, value: f64) -> Result<Self, ModelError> {
        let p = self
            .parameters
            .iter_mut()
            .find(|p| p.name == name)
            .ok_or_else(|| ModelError::UnknownParameter(name.to_string()))?;
        p.default = value;
        Ok(self)
    }
}

/// Turn a parameter into a state variable with zero derivative, so each
/// particle carries its own fixed value of it. Every group draws the new
/// variable's initial value from `ic`.
pub fn lift_parameter(
    def: &SystemDefinition,
    param: &str,
    ic: Interval,
    bounds: Interval,
) -> Result<SystemDefinition, ModelError> {
    let idx = def
        .param_index(param)
        .ok_or_else(|| ModelError::UnknownParameter(param.to_string()))?;
    let mut out = def.clone();
    out.parameters.remove(idx);
    out.state_variables
        .push(StateVariable::new(param, "0", bounds));
    for g in &mut out.groups {
        g.ic.insert(param.to_string(), ic);
    }
    Ok(out)
}
