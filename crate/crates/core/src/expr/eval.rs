use std::collections::{BTreeMap, HashMap};

use thiserror::Error;

use super::ast::{BinOp, Expr, Func};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EvalError {
    #[error("unbound identifier '{0}'")]
    Unbound(String),
}

/// Name lookup used by [`eval`].
pub trait Bindings {
    fn lookup(&self, name: &str) -> Option<f64>;
}

impl Bindings for HashMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Bindings for HashMap<&str, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Bindings for BTreeMap<String, f64> {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.get(name).copied()
    }
}

impl Bindings for [(&str, f64)] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.iter().find(|(n, _)| *n == name).map(|(_, v)| *v)
    }
}

impl<const K: usize> Bindings for [(&str, f64); K] {
    fn lookup(&self, name: &str) -> Option<f64> {
        self.as_slice().lookup(name)
    }
}

/// Adapts a closure into [`Bindings`].
pub struct FnBindings<F>(pub F);

impl<F: Fn(&str) -> Option<f64>> Bindings for FnBindings<F> {
    fn lookup(&self, name: &str) -> Option<f64> {
        (self.0)(name)
    }
}

pub(crate) fn sigmoid(u: f64) -> f64 {
    1.0 / (1.0 + (-u).exp())
}

pub(crate) fn apply_func(func: Func, a: f64, b: f64) -> f64 {
    match func {
        Func::Exp => a.exp(),
        Func::Log => a.ln(),
        Func::Sin => a.sin(),
        Func::Cos => a.cos(),
        Func::Tan => a.tan(),
        Func::Tanh => a.tanh(),
        Func::Sqrt => a.sqrt(),
        Func::Abs => a.abs(),
        Func::Pow => a.powf(b),
        Func::Min => a.min(b),
        Func::Max => a.max(b),
        Func::Sigmoid => sigmoid(a),
    }
}

/// Evaluate in double precision with IEEE semantics: division by zero and
/// logs of non-positive values produce infinities or NaN rather than errors.
pub fn eval(expr: &Expr, bindings: &(impl Bindings + ?Sized)) -> Result<f64, EvalError> {
    Ok(match expr {
        Expr::Number(v) => *v,
        Expr::Const(c) => c.value(),
        Expr::Var(name) => bindings
            .lookup(name)
            .ok_or_else(|| EvalError::Unbound(name.clone()))?,
        Expr::Neg(inner) => -eval(inner, bindings)?,
        Expr::Binary(op, l, r) => {
            let a = eval(l, bindings)?;
            let b = eval(r, bindings)?;
            match op {
                BinOp::Add => a + b,
                BinOp::Sub => a - b,
                BinOp::Mul => a * b,
                BinOp::Div => a / b,
                BinOp::Pow => a.powf(b),
            }
        }
        Expr::Call(func, args) => {
            let a = eval(&args[0], bindings)?;
            let b = match args.get(1) {
                Some(arg) => eval(arg, bindings)?,
                None => 0.0,
            };
            apply_func(*func, a, b)
        }
    })
}
