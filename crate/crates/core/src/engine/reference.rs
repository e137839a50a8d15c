//! Double-precision RK4 over the expression tree, used as the oracle the
//! single-precision backends are checked against.

use std::collections::HashMap;

use crate::expr::{eval, Bindings, EvalError, Expr};
use crate::model::{ModelError, SystemDefinition};

/// A system's right-hand side prepared for repeated f64 evaluation.
#[derive(Debug, Clone)]
pub struct ReferenceSystem {
    rhs: Vec<Expr>,
    state_names: Vec<String>,
    param_names: Vec<String>,
}

struct PointBindings<'a> {
    names: &'a [String],
    values: &'a [f64],
    params: &'a dyn Bindings,
}

impl Bindings for PointBindings<'_> {
    fn lookup(&self, name: &str) -> Option<f64> {
        match self.names.iter().position(|n| n == name) {
            Some(i) => Some(self.values[i]),
            None => self.params.lookup(name),
        }
    }
}

impl ReferenceSystem {
    pub fn new(def: &SystemDefinition) -> Result<Self, ModelError> {
        Ok(ReferenceSystem {
            rhs: def.parsed_rhs()?,
            state_names: def.state_variables.iter().map(|v| v.name.clone()).collect(),
            param_names: def.parameters.iter().map(|p| p.name.clone()).collect(),
        })
    }

    pub fn dims(&self) -> usize {
        self.rhs.len()
    }

    /// Parameter values in declaration order as name bindings.
    pub fn param_map(&self, values: &[f64]) -> HashMap<String, f64> {
        self.param_names.iter().cloned().zip(values.iter().copied()).collect()
    }

    pub fn derivative(
        &self,
        point: &[f64],
        params: &(impl Bindings + ?Sized),
    ) -> Result<Vec<f64>, EvalError> {
        assert_eq!(point.len(), self.dims(), "point has wrong dimension");
        let b = PointBindings {
            names: &self.state_names,
            values: point,
            params: &Dyn(params),
        };
        self.rhs.iter().map(|e| eval(e, &b)).collect()
    }

    /// One classical RK4 step of signed size `h`.
    pub fn rk4_step(
        &self,
        point: &[f64],
        params: &(impl Bindings + ?Sized),
        h: f64,
    ) -> Result<Vec<f64>, EvalError> {
        let shifted = |k: &[f64], s: f64| -> Vec<f64> {
            point.iter().zip(k).map(|(x, k)| x + s * k).collect()
        };
        let k1 = self.derivative(point, params)?;
        let k2 = self.derivative(&shifted(&k1, 0.5 * h), params)?;
        let k3 = self.derivative(&shifted(&k2, 0.5 * h), params)?;
        let k4 = self.derivative(&shifted(&k3, h), params)?;
        Ok((0..point.len())
            .map(|d| point[d] + h / 6.0 * (k1[d] + 2.0 * k2[d] + 2.0 * k3[d] + k4[d]))
            .collect())
    }
}

// Adapter so a `?Sized` bindings reference can sit behind `&dyn Bindings`.
struct Dyn<'a, B: ?Sized>(&'a B);

impl<B: Bindings + ?Sized> Bindings for Dyn<'_, B> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.0.lookup(name)
    }
}

/// One RK4 step of `def` from `point`, in double precision.
pub fn rk4_step_reference(
    def: &SystemDefinition,
    point: &[f64],
    params: &(impl Bindings + ?Sized),
    h: f64,
) -> Result<Vec<f64>, super::EngineError> {
    let sys = ReferenceSystem::new(def)?;
    Ok(sys.rk4_step(point, params, h)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Interval, StateVariable};

    fn decay() -> SystemDefinition {
        SystemDefinition {
            name: "decay".into(),
            state_variables: vec![StateVariable::new("x", "-k*x", Interval::new(-10.0, 10.0))],
            parameters: vec![crate::model::Parameter::new("k", 1.0, 0.0, 5.0)],
            techniques: vec![],
            groups: vec![],
        }
    }

    #[test]
    fn single_step_matches_hand_stages() {
        let x = rk4_step_reference(&decay(), &[1.0], &[("k", 1.0)], 0.1).unwrap();
        // k1=-1, k2=-0.95, k3=-0.9525, k4=-0.90475
        let by_hand = 1.0 + 0.1 / 6.0 * (-1.0 + 2.0 * -0.95 + 2.0 * -0.9525 + -0.90475);
        assert!((x[0] - by_hand).abs() < 1e-15);
        assert!((x[0] - 0.9048375).abs() < 1e-9);
    }

    #[test]
    fn negative_step_runs_backward() {
        let x = rk4_step_reference(&decay(), &[1.0], &[("k", 1.0)], -0.1).unwrap();
        assert!((x[0] - 0.1f64.exp()).abs() < 1e-6);
    }

    #[test]
    fn zero_field_is_fixed() {
        let x = rk4_step_reference(&decay(), &[3.25], &[("k", 0.0)], 0.7).unwrap();
        assert_eq!(x[0], 3.25);
    }

    #[test]
    fn unbound_parameter_is_an_error() {
        let empty: [(&str, f64); 0] = [];
        assert!(rk4_step_reference(&decay(), &[1.0], &empty, 0.1).is_err());
    }
}
