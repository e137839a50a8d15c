//! The right-hand-side expression language: parsing, double-precision
//! evaluation, compiled single-precision CPU programs and WGSL code
//! generation.

mod ast;
pub mod codegen;
mod eval;
mod fastmath;
mod parser;
pub mod program;

pub use ast::{BinOp, Constant, Expr, Func};
pub use codegen::{emit_kernel_source, CodegenError, KernelSource};
pub use eval::{eval, Bindings, EvalError, FnBindings};
pub use parser::{parse, ParseError, ParseErrorKind};
