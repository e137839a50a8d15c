//! Generation of WGSL compute kernels from a system definition.
//!
//! The kernel is a fixed template: read one particle's position, take one
//! classical RK4 step, write it back. Only the derivative function is
//! generated from the system; it is straight-line arithmetic with every
//! right-hand side inlined. Parameters live in a storage buffer so the host
//! can change them without recompiling.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use thiserror::Error;

use super::ast::{BinOp, Expr, Func};
use crate::layout::Layout;
use crate::model::{ModelError, SystemDefinition};

const TEMPLATE: &str = include_str!("kernel.wgsl");

pub const ENTRY_POINT: &str = "rk4_step";
pub const WORKGROUP_SIZE: u32 = 256;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum CodegenError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("unknown identifier '{0}'")]
    UnknownIdentifier(String),
    #[error("literal {0} is not representable in single precision")]
    LiteralOutOfRange(f64),
}

/// Generated kernel source plus the facts a backend needs to run it.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct KernelSource {
    pub source: String,
    pub entry_point: &'static str,
    pub layout: Layout,
    pub workgroup_size: u32,
}

impl KernelSource {
    /// Parse and validate the source with naga, the same front end the GPU
    /// backend uses.
    #[cfg(feature = "gpu")]
    pub fn validate(&self) -> Result<(), String> {
        let module = naga::front::wgsl::parse_str(&self.source)
            .map_err(|e| e.emit_to_string(&self.source))?;
        naga::valid::Validator::new(
            naga::valid::ValidationFlags::all(),
            naga::valid::Capabilities::empty(),
        )
        .validate(&module)
        .map_err(|e| e.emit_to_string(&self.source))?;
        Ok(())
    }
}

/// A control-flow keyword found in generated source.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ControlFlowSite {
    pub line: usize,
    pub keyword: String,
    pub text: String,
}

const CONTROL_KEYWORDS: [&str; 10] = [
    "if", "else", "switch", "case", "loop", "for", "while", "select", "break", "continue",
];

/// Every control-flow keyword (and `select`) in a WGSL source, line by line.
pub fn control_flow_sites(source: &str) -> Vec<ControlFlowSite> {
    let mut out = Vec::new();
    for (i, line) in source.lines().enumerate() {
        let code = line.split("//").next().unwrap_or("");
        for word in code.split(|c: char| !(c == '_' || c.is_ascii_alphanumeric())) {
            if CONTROL_KEYWORDS.contains(&word) {
                out.push(ControlFlowSite {
                    line: i + 1,
                    keyword: word.to_string(),
                    text: line.trim().to_string(),
                });
            }
        }
    }
    out
}

/// The one branch the template contains: the invocation-range guard, which
/// depends only on the invocation index and never on particle data.
pub const RANGE_GUARD: &str = "if (index >= dispatch.count) {";

struct Emitter<'a> {
    def: &'a SystemDefinition,
    used_params: BTreeSet<usize>,
    powers: BTreeSet<u32>,
}

fn literal(v: f64) -> Result<String, CodegenError> {
    let f = v as f32;
    if !f.is_finite() {
        return Err(CodegenError::LiteralOutOfRange(v));
    }
    let mut s = format!("{f:?}");
    if !s.contains(['.', 'e', 'E']) {
        s.push_str(".0");
    }
    Ok(s)
}

impl Emitter<'_> {
    fn emit(&mut self, e: &Expr, out: &mut String) -> Result<(), CodegenError> {
        match e {
            Expr::Number(v) => out.push_str(&literal(*v)?),
            Expr::Const(c) => out.push_str(&literal(c.value())?),
            Expr::Var(name) => {
                if let Some(i) = self.def.state_index(name) {
                    write!(out, "s[{i}]").unwrap();
                } else if let Some(j) = self.def.param_index(name) {
                    self.used_params.insert(j);
                    write!(out, "p{j}").unwrap();
                } else {
                    return Err(CodegenError::UnknownIdentifier(name.clone()));
                }
            }
            Expr::Neg(inner) => {
                out.push_str("(-");
                self.emit(inner, out)?;
                out.push(')');
            }
            Expr::Binary(BinOp::Pow, base, exponent) => self.power(base, exponent, out)?,
            Expr::Binary(op, l, r) => {
                out.push('(');
                self.emit(l, out)?;
                write!(out, " {} ", op.symbol()).unwrap();
                self.emit(r, out)?;
                out.push(')');
            }
            Expr::Call(Func::Pow, args) => self.power(&args[0], &args[1], out)?,
            Expr::Call(Func::Sigmoid, args) => {
                out.push_str("(1.0 / (1.0 + exp((-");
                self.emit(&args[0], out)?;
                out.push_str("))))");
            }
            Expr::Call(func, args) => {
                write!(out, "{}(", func.name()).unwrap();
                for (i, a) in args.iter().enumerate() {
                    if i > 0 {
                        out.push_str(", ");
                    }
                    self.emit(a, out)?;
                }
                out.push(')');
            }
        }
        Ok(())
    }

    /// Small integer exponents become left-to-right products so negative
    /// bases behave like the CPU backend; WGSL `pow` is undefined for them.
    fn power(&mut self, base: &Expr, exponent: &Expr, out: &mut String) -> Result<(), CodegenError> {
        match exponent.small_integer() {
            Some(0) => out.push_str("1.0"),
            Some(1) => self.emit(base, out)?,
            Some(-1) => {
                out.push_str("(1.0 / ");
                self.emit(base, out)?;
                out.push(')');
            }
            Some(n) => {
                let k = n.unsigned_abs();
                self.powers.insert(k);
                if n < 0 {
                    out.push_str("(1.0 / ");
                }
                write!(out, "ipow{k}(").unwrap();
                self.emit(base, out)?;
                out.push(')');
                if n < 0 {
                    out.push(')');
                }
            }
            None => {
                out.push_str("pow(");
                self.emit(base, out)?;
                out.push_str(", ");
                self.emit(exponent, out)?;
                out.push(')');
            }
        }
        Ok(())
    }
}

/// Instantiate the RK4 kernel template for `def` in single precision.
pub fn emit_kernel_source(
    def: &SystemDefinition,
    layout: Layout,
) -> Result<KernelSource, CodegenError> {
    def.ensure_valid()?;
    let rhs = def.parsed_rhs()?;
    let n = def.dims();

    let mut em = Emitter {
        def,
        used_params: BTreeSet::new(),
        powers: BTreeSet::new(),
    };
    let mut body = String::new();
    for (i, (e, var)) in rhs.iter().zip(&def.state_variables).enumerate() {
        writeln!(body, "    // d{}/dt", var.name).unwrap();
        write!(body, "    d[{i}] = ").unwrap();
        em.emit(e, &mut body)?;
        body.push_str(";\n");
    }

    let mut param_loads = String::new();
    for j in &em.used_params {
        writeln!(param_loads, "    let p{j} = params[{j}u]; // {}", def.parameters[*j].name).unwrap();
    }

    let mut helpers = String::new();
    for k in &em.powers {
        let product = vec!["b"; *k as usize].join(" * ");
        write!(helpers, "\nfn ipow{k}(b: f32) -> f32 {{\n    return {product};\n}}\n").unwrap();
    }

    let per_dim = |f: &dyn Fn(usize) -> String| -> String {
        (0..n).map(f).collect::<Vec<_>>().join("\n")
    };
    let load = per_dim(&|d| format!("    x[{d}] = positions[slot(particle, {d}u)];"));
    let stage = |k: &str, scale: &str| {
        per_dim(&|d| format!("    t[{d}] = x[{d}] + {scale} * {k}[{d}];"))
    };
    let store = per_dim(&|d| {
        format!(
            "    positions[slot(particle, {d}u)] = x[{d}] + sixth_h * (k1[{d}] + 2.0 * k2[{d}] + 2.0 * k3[{d}] + k4[{d}]);"
        )
    });
    let slot_expr = match layout {
        Layout::RowMajor => format!("particle * {n}u + dim"),
        Layout::ColumnMajor => "dim * dispatch.total + particle".to_string(),
    };

    let source = TEMPLATE
        .replace("{{SYSTEM_NAME}}", &sanitize_comment(&def.name))
        .replace("{{DIMS}}", &n.to_string())
        .replace("{{PARAM_COUNT}}", &def.parameters.len().to_string())
        .replace("{{LAYOUT_NAME}}", layout.name())
        .replace("{{SLOT_EXPR}}", &slot_expr)
        .replace("{{HELPERS}}", &helpers)
        .replace("{{PARAM_LOADS}}", &param_loads)
        .replace("{{DERIVATIVE_BODY}}", &body)
        .replace("{{WORKGROUP_SIZE}}", &WORKGROUP_SIZE.to_string())
        .replace("{{ENTRY_POINT}}", ENTRY_POINT)
        .replace("{{LOAD}}", &load)
        .replace("{{STAGE2}}", &stage("k1", "half_h"))
        .replace("{{STAGE3}}", &stage("k2", "half_h"))
        .replace("{{STAGE4}}", &stage("k3", "h"))
        .replace("{{STORE}}", &store);

    Ok(KernelSource {
        source,
        entry_point: ENTRY_POINT,
        layout,
        workgroup_size: WORKGROUP_SIZE,
    })
}

fn sanitize_comment(s: &str) -> String {
    s.chars()
        .map(|c| if c.is_control() { ' ' } else { c })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{lift_parameter, Interval};
    use crate::systems;

    #[test]
    fn lorenz_derivative_lines() {
        let k = emit_kernel_source(&systems::lorenz(), Layout::RowMajor).unwrap();
        assert!(k.source.contains("d[0] = (p0 * (s[1] - s[0]));"), "{}", k.source);
        assert!(k.source.contains("d[1] = ((s[0] * (p1 - s[2])) - s[1]);"));
        assert!(k.source.contains("d[2] = ((s[0] * s[1]) - (p2 * s[2]));"));
        assert!(k.source.contains("let p0 = params[0u]; // sigma"));
        assert!(k.source.contains("particle * 3u + dim"));
        assert!(!k.source.contains("{{"));
    }

    #[test]
    fn layout_changes_only_indexing() {
        let row = emit_kernel_source(&systems::lorenz(), Layout::RowMajor).unwrap();
        let col = emit_kernel_source(&systems::lorenz(), Layout::ColumnMajor).unwrap();
        assert!(col.source.contains("dim * dispatch.total + particle"));
        assert_eq!(col.layout, Layout::ColumnMajor);
        let diff = row
            .source
            .lines()
            .zip(col.source.lines())
            .filter(|(a, b)| a != b)
            .count();
        assert_eq!(diff, 2);
    }

    #[test]
    fn zero_rhs_update_is_identity() {
        let lifted = lift_parameter(
            &systems::lorenz(),
            "r",
            Interval::new(0.0, 110.0),
            Interval::new(0.0, 120.0),
        )
        .unwrap();
        let k = emit_kernel_source(&lifted, Layout::ColumnMajor).unwrap();
        assert!(k.source.contains("d[3] = 0.0;"));
    }

    #[test]
    fn emission_is_deterministic() {
        let d = systems::hh_ring(3).unwrap();
        let a = emit_kernel_source(&d, Layout::ColumnMajor).unwrap();
        let b = emit_kernel_source(&d, Layout::ColumnMajor).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn only_the_range_guard_branches() {
        for def in [systems::lorenz(), systems::stn_gpe(), systems::hh_ring(3).unwrap()] {
            for layout in [Layout::RowMajor, Layout::ColumnMajor] {
                let k = emit_kernel_source(&def, layout).unwrap();
                let sites = control_flow_sites(&k.source);
                assert_eq!(sites.len(), 1, "{sites:?}");
                assert_eq!(sites[0].text, RANGE_GUARD);
            }
        }
    }

    #[test]
    fn scanner_finds_branches() {
        let sites = control_flow_sites("let a = select(1.0, 2.0, x > 0.0);\nif (a) {}\n// if comment\n");
        assert_eq!(sites.len(), 2);
        assert_eq!(sites[1].line, 2);
    }

    #[test]
    fn integer_powers_use_helpers() {
        let k = emit_kernel_source(&systems::hh_ring(1).unwrap(), Layout::RowMajor).unwrap();
        assert!(k.source.contains("fn ipow3(b: f32) -> f32 {\n    return b * b * b;\n}"));
        assert!(k.source.contains("fn ipow4"));
        assert!(!k.source.contains("pow("));
    }

    #[test]
    fn literals_are_wgsl_floats() {
        assert_eq!(literal(10.0).unwrap(), "10.0");
        assert_eq!(literal(8.0 / 3.0).unwrap(), "2.6666667");
        assert_eq!(literal(1e-7).unwrap(), "1e-7");
        assert!(literal(1e300).is_err());
    }

    #[cfg(feature = "gpu")]
    #[test]
    fn generated_kernels_pass_naga_validation() {
        let lifted = lift_parameter(
            &systems::stn_gpe(),
            "w_ss",
            Interval::new(0.0, 15.0),
            Interval::new(0.0, 15.0),
        )
        .unwrap();
        for def in [systems::lorenz(), systems::stn_gpe(), systems::hh_ring(3).unwrap(), lifted] {
            for layout in [Layout::RowMajor, Layout::ColumnMajor] {
                let k = emit_kernel_source(&def, layout).unwrap();
                k.validate().unwrap_or_else(|e| panic!("{}:\n{e}\n{}", def.name, k.source));
            }
        }
    }
}
