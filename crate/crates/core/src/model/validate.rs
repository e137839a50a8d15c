use std::collections::HashSet;
use std::fmt;

use thiserror::Error;

use super::{ColorMode, SystemDefinition};
use crate::expr::{parse, Constant, ParseError};

/// One violated invariant, naming the object it was found on.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum ValidationIssue {
    #[error("system has no state variables")]
    NoStateVariables,
    #[error("'{0}' is not a valid identifier")]
    InvalidIdentifier(String),
    #[error("'{0}' is a predefined constant and cannot be redefined")]
    ReservedName(String),
    #[error("duplicate name '{0}'")]
    DuplicateName(String),
    #[error("empty bounds for state variable {0}")]
    EmptyBounds(String),
    #[error("cannot parse {var}.rhs: {error}")]
    RhsSyntax { var: String, error: ParseError },
    #[error("unknown identifier {ident} in {var}.rhs")]
    UnknownIdentifier { ident: String, var: String },
    #[error("parameter {0} has min > max or non-finite range")]
    ParameterRange(String),
    #[error("parameter {name} default {default} lies outside [{min}, {max}]")]
    ParameterDefault {
        name: String,
        default: f64,
        min: f64,
        max: f64,
    },
    #[error("duplicate technique id '{0}'")]
    DuplicateTechnique(String),
    #[error("technique {id} needs {expected} axes, has {found}")]
    AxisCount {
        id: String,
        expected: usize,
        found: usize,
    },
    #[error("technique {id} uses unknown axis '{axis}'")]
    UnknownAxis { id: String, axis: String },
    #[error("technique {0} has a colour channel outside [0, 1]")]
    ColorRange(String),
    #[error("group {group} refers to unknown technique '{technique}'")]
    UnknownTechnique { group: usize, technique: String },
    #[error("group {0} has zero particles")]
    EmptyGroup(usize),
    #[error("group {group}: missing initial-condition interval for {var}")]
    MissingInitialCondition { group: usize, var: String },
    #[error("group {group}: initial condition for unknown variable '{var}'")]
    UnknownInitialCondition { group: usize, var: String },
    #[error("group {group}: empty initial-condition interval for {var}")]
    EmptyInitialCondition { group: usize, var: String },
    #[error("group {group}: initial-condition interval for {var} exceeds its bounds")]
    InitialConditionOutOfBounds { group: usize, var: String },
    #[error("group {0}: max_age must be positive")]
    MaxAge(usize),
}

/// Every invariant violated by a definition; empty means valid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<ValidationIssue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                writeln!(f)?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

pub(crate) fn is_identifier(name: &str) -> bool {
    let mut chars = name.chars();
    match chars.next() {
        Some(c) if c == '_' || c.is_ascii_alphabetic() => {}
        _ => return false,
    }
    chars.all(|c| c == '_' || c.is_ascii_alphanumeric())
}

/// Check every invariant of `def`. Never fails; problems are returned as data.
pub fn validate_system(def: &SystemDefinition) -> ValidationReport {
    let mut issues = Vec::new();

    if def.state_variables.is_empty() {
        issues.push(ValidationIssue::NoStateVariables);
    }

    let mut seen = HashSet::new();
    let names = def
        .state_variables
        .iter()
        .map(|v| &v.name)
        .chain(def.parameters.iter().map(|p| &p.name));
    for name in names {
        if !is_identifier(name) {
            issues.push(ValidationIssue::InvalidIdentifier(name.clone()));
        } else if Constant::from_name(name).is_some() {
            issues.push(ValidationIssue::ReservedName(name.clone()));
        }
        if !seen.insert(name.as_str()) {
            issues.push(ValidationIssue::DuplicateName(name.clone()));
        }
    }

    for v in &def.state_variables {
        if !v.bounds.is_proper() {
            issues.push(ValidationIssue::EmptyBounds(v.name.clone()));
        }
        match parse(&v.rhs) {
            Err(error) => issues.push(ValidationIssue::RhsSyntax {
                var: v.name.clone(),
                error,
            }),
            Ok(ast) => {
                for ident in ast.free_identifiers() {
                    if !seen.contains(ident.as_str()) {
                        issues.push(ValidationIssue::UnknownIdentifier {
                            ident,
                            var: v.name.clone(),
                        });
                    }
                }
            }
        }
    }

    for p in &def.parameters {
        if !(p.min.is_finite() && p.max.is_finite() && p.min <= p.max) {
            issues.push(ValidationIssue::ParameterRange(p.name.clone()));
        } else if !(p.min <= p.default && p.default <= p.max) {
            issues.push(ValidationIssue::ParameterDefault {
                name: p.name.clone(),
                default: p.default,
                min: p.min,
                max: p.max,
            });
        }
    }

    let mut technique_ids = HashSet::new();
    for t in &def.techniques {
        if !technique_ids.insert(t.id.as_str()) {
            issues.push(ValidationIssue::DuplicateTechnique(t.id.clone()));
        }
        if t.axes.len() != t.projection.dims() {
            issues.push(ValidationIssue::AxisCount {
                id: t.id.clone(),
                expected: t.projection.dims(),
                found: t.axes.len(),
            });
        }
        for axis in &t.axes {
            if def.state_index(axis).is_none() {
                issues.push(ValidationIssue::UnknownAxis {
                    id: t.id.clone(),
                    axis: axis.clone(),
                });
            }
        }
        if let ColorMode::Fixed { rgb } = t.color {
            if rgb.iter().any(|c| !(0.0..=1.0).contains(c)) {
                issues.push(ValidationIssue::ColorRange(t.id.clone()));
            }
        }
    }

    for (gi, g) in def.groups.iter().enumerate() {
        if !technique_ids.contains(g.technique.as_str()) {
            issues.push(ValidationIssue::UnknownTechnique {
                group: gi,
                technique: g.technique.clone(),
            });
        }
        if g.count == 0 {
            issues.push(ValidationIssue::EmptyGroup(gi));
        }
        if let Some(age) = g.max_age {
            if age.is_nan() || age <= 0.0 {
                issues.push(ValidationIssue::MaxAge(gi));
            }
        }
        for v in &def.state_variables {
            match g.ic.get(&v.name) {
                None => issues.push(ValidationIssue::MissingInitialCondition {
                    group: gi,
                    var: v.name.clone(),
                }),
                Some(range) if !range.is_proper() => {
                    issues.push(ValidationIssue::EmptyInitialCondition {
                        group: gi,
                        var: v.name.clone(),
                    })
                }
                Some(range) if !v.bounds.contains_interval(range) => {
                    issues.push(ValidationIssue::InitialConditionOutOfBounds {
                        group: gi,
                        var: v.name.clone(),
                    })
                }
                Some(_) => {}
            }
        }
        for var in g.ic.keys() {
            if def.state_index(var).is_none() {
                issues.push(ValidationIssue::UnknownInitialCondition {
                    group: gi,
                    var: var.clone(),
                });
            }
        }
    }

    ValidationReport { issues }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Interval;
    use crate::systems;

    fn messages(def: &SystemDefinition) -> Vec<String> {
        validate_system(def)
            .issues
            .iter()
            .map(|i| i.to_string())
            .collect()
    }

    #[test]
    fn builtins_validate() {
        assert!(validate_system(&systems::lorenz()).is_valid());
        assert!(validate_system(&systems::stn_gpe()).is_valid());
        assert!(validate_system(&systems::hh_ring(3).unwrap()).is_valid());
    }

    #[test]
    fn unknown_identifier_names_the_variable() {
        let mut d = systems::lorenz();
        d.state_variables[0].rhs = "sigma*(y-q)".into();
        assert_eq!(messages(&d), vec!["unknown identifier q in x.rhs"]);
    }

    #[test]
    fn inverted_ic_interval() {
        let mut d = systems::stn_gpe();
        d.groups[0].ic.insert("x".into(), Interval::new(0.5, 0.2));
        let m = messages(&d);
        assert_eq!(m.len(), 1);
        assert!(m[0].contains("empty initial-condition interval"), "{m:?}");
    }

    #[test]
    fn zero_width_ic_interval_is_rejected() {
        let mut d = systems::stn_gpe();
        d.groups[1].ic.insert("y".into(), Interval::new(0.3, 0.3));
        assert!(messages(&d)[0].contains("empty initial-condition interval"));
    }

    #[test]
    fn shadowing_and_reserved_names() {
        let mut d = systems::lorenz();
        d.parameters[0].name = "x".into();
        d.state_variables[2].name = "pi".into();
        let m = messages(&d);
        assert!(m.iter().any(|s| s == "duplicate name 'x'"), "{m:?}");
        assert!(m.iter().any(|s| s.contains("predefined constant")), "{m:?}");
    }

    #[test]
    fn reports_every_problem() {
        let mut d = systems::lorenz();
        d.state_variables[1].rhs = "x +".into();
        d.state_variables[2].bounds = Interval::new(1.0, -1.0);
        d.parameters[1].default = 1000.0;
        d.techniques[0].axes.pop();
        d.groups[0].count = 0;
        d.groups[0].technique = "missing".into();
        let m = messages(&d);
        // z's ic is now outside its (inverted) bounds too
        assert_eq!(m.len(), 7, "{m:#?}");
        assert!(m.iter().any(|s| s.starts_with("cannot parse y.rhs")));
    }

    #[test]
    fn ic_outside_bounds() {
        let mut d = systems::lorenz();
        d.groups[0].ic.insert("x".into(), Interval::new(-100.0, 0.0));
        assert_eq!(
            messages(&d),
            vec!["group 0: initial-condition interval for x exceeds its bounds"]
        );
    }

    #[test]
    fn identifiers() {
        assert!(is_identifier("w_ss"));
        assert!(is_identifier("_a1"));
        assert!(!is_identifier("1a"));
        assert!(!is_identifier("a-b"));
        assert!(!is_identifier(""));
    }

    #[test]
    fn empty_definition_is_reported_not_panicking() {
        let d = SystemDefinition {
            name: String::new(),
            state_variables: vec![],
            parameters: vec![],
            techniques: vec![],
            groups: vec![],
        };
        assert_eq!(messages(&d), vec!["system has no state variables"]);
    }
}
