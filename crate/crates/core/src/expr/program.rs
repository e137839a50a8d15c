//! Straight-line register programs for evaluating a whole system's
//! derivative on the CPU in single precision.
//!
//! A [`Program`] is compiled once from the right-hand sides of a system and
//! evaluated over [`LANES`] particles at a time. Every instruction writes a
//! fresh register (SSA), identical subexpressions share a register, and each
//! instruction runs as a tight loop over a fixed-width lane array so the
//! compiler can vectorize the arithmetic.

use std::collections::HashMap;

use super::ast::{BinOp, Expr, Func};
use super::fastmath;

/// Number of particles evaluated together.
pub const LANES: usize = 64;

pub type Lane = [f32; LANES];

type Reg = u32;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum Op {
    Neg(Reg),
    Add(Reg, Reg),
    Sub(Reg, Reg),
    Mul(Reg, Reg),
    Div(Reg, Reg),
    Powf(Reg, Reg),
    Min(Reg, Reg),
    Max(Reg, Reg),
    Unary(UnaryFn, Reg),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum UnaryFn {
    Exp,
    Log,
    Sin,
    Cos,
    Tan,
    Tanh,
    Sqrt,
    Abs,
    Sigmoid,
}

impl UnaryFn {
    fn of(func: Func) -> Option<UnaryFn> {
        Some(match func {
            Func::Exp => UnaryFn::Exp,
            Func::Log => UnaryFn::Log,
            Func::Sin => UnaryFn::Sin,
            Func::Cos => UnaryFn::Cos,
            Func::Tan => UnaryFn::Tan,
            Func::Tanh => UnaryFn::Tanh,
            Func::Sqrt => UnaryFn::Sqrt,
            Func::Abs => UnaryFn::Abs,
            Func::Sigmoid => UnaryFn::Sigmoid,
            Func::Pow | Func::Min | Func::Max => return None,
        })
    }

    #[inline(always)]
    fn apply(self, x: f32) -> f32 {
        match self {
            UnaryFn::Exp => fastmath::exp(x),
            UnaryFn::Log => x.ln(),
            UnaryFn::Sin => x.sin(),
            UnaryFn::Cos => x.cos(),
            UnaryFn::Tan => x.tan(),
            UnaryFn::Tanh => fastmath::tanh(x),
            UnaryFn::Sqrt => x.sqrt(),
            UnaryFn::Abs => x.abs(),
            UnaryFn::Sigmoid => fastmath::sigmoid(x),
        }
    }
}

/// Where a free identifier lives in the register file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Slot {
    State(usize),
    Param(usize),
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("identifier '{0}' has no slot")]
pub struct UnresolvedIdentifier(pub String);

/// Compiled derivative of an N-dimensional system with M parameters.
#[derive(Debug, Clone)]
pub struct Program {
    dims: usize,
    params: usize,
    consts: Vec<f32>,
    instrs: Vec<Op>,
    outputs: Vec<Reg>,
}

struct Builder<'a, R> {
    dims: usize,
    params: usize,
    resolve: &'a R,
    consts: Vec<f32>,
    const_index: HashMap<u32, usize>,
    // Instructions are numbered after the consts are known, so registers are
    // provisional until `finish`.
    instrs: Vec<Op>,
    instr_index: HashMap<Op, Reg>,
}

// Provisional register encoding during building: inputs are 0..dims+params,
// constants are tagged with CONST_TAG, instruction results with INSTR_TAG.
const CONST_TAG: Reg = 1 << 30;
const INSTR_TAG: Reg = 1 << 31;

impl<R: Fn(&str) -> Option<Slot>> Builder<'_, R> {
    fn constant(&mut self, v: f32) -> Reg {
        let bits = v.to_bits();
        let idx = match self.const_index.get(&bits) {
            Some(&i) => i,
            None => {
                self.consts.push(v);
                self.const_index.insert(bits, self.consts.len() - 1);
                self.consts.len() - 1
            }
        };
        CONST_TAG | idx as Reg
    }

    fn push(&mut self, op: Op) -> Reg {
        if let Some(&r) = self.instr_index.get(&op) {
            return r;
        }
        self.instrs.push(op);
        let r = INSTR_TAG | (self.instrs.len() - 1) as Reg;
        self.instr_index.insert(op, r);
        r
    }

    fn power(&mut self, base: Reg, exponent: &Expr) -> Result<Reg, UnresolvedIdentifier> {
        if let Some(n) = exponent.small_integer() {
            return Ok(self.integer_power(base, n));
        }
        let e = self.compile(exponent)?;
        Ok(self.push(Op::Powf(base, e)))
    }

    /// `b^n` as the left-to-right product `((b*b)*b)...`, matching the
    /// device code generator.
    fn integer_power(&mut self, base: Reg, n: i32) -> Reg {
        if n == 0 {
            return self.constant(1.0);
        }
        let mut acc = base;
        for _ in 1..n.unsigned_abs() {
            acc = self.push(Op::Mul(acc, base));
        }
        if n < 0 {
            let one = self.constant(1.0);
            acc = self.push(Op::Div(one, acc));
        }
        acc
    }

    fn compile(&mut self, e: &Expr) -> Result<Reg, UnresolvedIdentifier> {
        Ok(match e {
            Expr::Number(v) => self.constant(*v as f32),
            Expr::Const(c) => self.constant(c.value() as f32),
            Expr::Var(name) => match (self.resolve)(name) {
                Some(Slot::State(i)) if i < self.dims => i as Reg,
                Some(Slot::Param(j)) if j < self.params => (self.dims + j) as Reg,
                _ => return Err(UnresolvedIdentifier(name.clone())),
            },
            Expr::Neg(inner) => {
                let a = self.compile(inner)?;
                self.push(Op::Neg(a))
            }
            Expr::Binary(BinOp::Pow, l, r) => {
                let b = self.compile(l)?;
                self.power(b, r)?
            }
            Expr::Binary(op, l, r) => {
                let a = self.compile(l)?;
                let b = self.compile(r)?;
                self.push(match op {
                    BinOp::Add => Op::Add(a, b),
                    BinOp::Sub => Op::Sub(a, b),
                    BinOp::Mul => Op::Mul(a, b),
                    BinOp::Div => Op::Div(a, b),
                    BinOp::Pow => unreachable!(),
                })
            }
            Expr::Call(Func::Pow, args) => {
                let b = self.compile(&args[0])?;
                self.power(b, &args[1])?
            }
            Expr::Call(func @ (Func::Min | Func::Max), args) => {
                let a = self.compile(&args[0])?;
                let b = self.compile(&args[1])?;
                self.push(if *func == Func::Min {
                    Op::Min(a, b)
                } else {
                    Op::Max(a, b)
                })
            }
            Expr::Call(func, args) => {
                let a = self.compile(&args[0])?;
                let f = UnaryFn::of(*func).expect("binary functions handled above");
                self.push(Op::Unary(f, a))
            }
        })
    }
}

impl Program {
    /// Compile one expression per state variable. `resolve` maps each free
    /// identifier to a state or parameter slot.
    pub fn compile<R: Fn(&str) -> Option<Slot>>(
        rhs: &[Expr],
        params: usize,
        resolve: R,
    ) -> Result<Program, UnresolvedIdentifier> {
        let dims = rhs.len();
        let mut b = Builder {
            dims,
            params,
            resolve: &resolve,
            consts: Vec::new(),
            const_index: HashMap::new(),
            instrs: Vec::new(),
            instr_index: HashMap::new(),
        };
        let provisional: Vec<Reg> = rhs
            .iter()
            .map(|e| b.compile(e))
            .collect::<Result<_, _>>()?;

        let n_inputs = (dims + params) as Reg;
        let n_consts = b.consts.len() as Reg;
        let fix = |r: Reg| -> Reg {
            if r & INSTR_TAG != 0 {
                n_inputs + n_consts + (r & !INSTR_TAG)
            } else if r & CONST_TAG != 0 {
                n_inputs + (r & !CONST_TAG)
            } else {
                r
            }
        };
        let instrs = b
            .instrs
            .iter()
            .map(|op| match *op {
                Op::Neg(a) => Op::Neg(fix(a)),
                Op::Add(a, c) => Op::Add(fix(a), fix(c)),
                Op::Sub(a, c) => Op::Sub(fix(a), fix(c)),
                Op::Mul(a, c) => Op::Mul(fix(a), fix(c)),
                Op::Div(a, c) => Op::Div(fix(a), fix(c)),
                Op::Powf(a, c) => Op::Powf(fix(a), fix(c)),
                Op::Min(a, c) => Op::Min(fix(a), fix(c)),
                Op::Max(a, c) => Op::Max(fix(a), fix(c)),
                Op::Unary(f, a) => Op::Unary(f, fix(a)),
            })
            .collect();
        Ok(Program {
            dims,
            params,
            consts: b.consts,
            instrs,
            outputs: provisional.into_iter().map(fix).collect(),
        })
    }

    pub fn dims(&self) -> usize {
        self.dims
    }

    pub fn param_count(&self) -> usize {
        self.params
    }

    pub fn instruction_count(&self) -> usize {
        self.instrs.len()
    }

    fn first_result(&self) -> usize {
        self.dims + self.params + self.consts.len()
    }

    /// Fresh register file with constants loaded and parameters zeroed.
    pub fn scratch(&self) -> Scratch {
        let mut regs = vec![[0.0f32; LANES]; self.first_result() + self.instrs.len()];
        for (i, c) in self.consts.iter().enumerate() {
            regs[self.dims + self.params + i] = [*c; LANES];
        }
        Scratch { regs }
    }

    pub fn load_params(&self, scratch: &mut Scratch, values: &[f32]) {
        debug_assert_eq!(values.len(), self.params);
        for (j, v) in values.iter().enumerate() {
            scratch.regs[self.dims + j] = [*v; LANES];
        }
    }

    /// Evaluate all instructions; state inputs must already be in
    /// `scratch.state_mut()`.
    pub fn run(&self, scratch: &mut Scratch) {
        #[cfg(target_arch = "x86_64")]
        if std::arch::is_x86_feature_detected!("avx2") {
            // SAFETY: the feature was detected at runtime.
            unsafe { self.run_avx2(scratch) };
            return;
        }
        self.run_lanes(scratch);
    }

    // Same body compiled for 256-bit vectors. FMA stays off so results are
    // bit-identical to the baseline build.
    #[cfg(target_arch = "x86_64")]
    #[target_feature(enable = "avx2")]
    unsafe fn run_avx2(&self, scratch: &mut Scratch) {
        self.run_lanes(scratch);
    }

    #[inline(always)]
    fn run_lanes(&self, scratch: &mut Scratch) {
        let base = self.first_result();
        let regs = &mut scratch.regs;
        for (k, op) in self.instrs.iter().enumerate() {
            let (src, rest) = regs.split_at_mut(base + k);
            let out = &mut rest[0];
            match *op {
                Op::Neg(a) => {
                    let a = &src[a as usize];
                    for i in 0..LANES {
                        out[i] = -a[i];
                    }
                }
                Op::Add(a, b) => zip(out, &src[a as usize], &src[b as usize], |x, y| x + y),
                Op::Sub(a, b) => zip(out, &src[a as usize], &src[b as usize], |x, y| x - y),
                Op::Mul(a, b) => zip(out, &src[a as usize], &src[b as usize], |x, y| x * y),
                Op::Div(a, b) => zip(out, &src[a as usize], &src[b as usize], |x, y| x / y),
                Op::Min(a, b) => zip(out, &src[a as usize], &src[b as usize], f32::min),
                Op::Max(a, b) => zip(out, &src[a as usize], &src[b as usize], f32::max),
                Op::Powf(a, b) => zip(out, &src[a as usize], &src[b as usize], f32::powf),
                Op::Unary(f, a) => {
                    let a = &src[a as usize];
                    // one loop per function so each body vectorizes on its own
                    match f {
                        UnaryFn::Exp => map(out, a, |x| UnaryFn::Exp.apply(x)),
                        UnaryFn::Tanh => map(out, a, |x| UnaryFn::Tanh.apply(x)),
                        UnaryFn::Sigmoid => map(out, a, |x| UnaryFn::Sigmoid.apply(x)),
                        UnaryFn::Abs => map(out, a, f32::abs),
                        UnaryFn::Sqrt => map(out, a, f32::sqrt),
                        other => map(out, a, |x| other.apply(x)),
                    }
                }
            }
        }
    }

    /// Derivative lane array for state variable `i` after [`Program::run`].
    pub fn output<'s>(&self, scratch: &'s Scratch, i: usize) -> &'s Lane {
        &scratch.regs[self.outputs[i] as usize]
    }

    /// Convenience single-point evaluation (lane 0 only).
    pub fn eval_point(&self, state: &[f32], params: &[f32]) -> Vec<f32> {
        let mut s = self.scratch();
        self.load_params(&mut s, params);
        for (d, v) in state.iter().enumerate() {
            s.regs[d] = [*v; LANES];
        }
        self.run(&mut s);
        (0..self.dims).map(|i| self.output(&s, i)[0]).collect()
    }
}

#[inline(always)]
fn map(out: &mut Lane, a: &Lane, f: impl Fn(f32) -> f32) {
    for i in 0..LANES {
        out[i] = f(a[i]);
    }
}

#[inline(always)]
fn zip(out: &mut Lane, a: &Lane, b: &Lane, f: impl Fn(f32, f32) -> f32) {
    for i in 0..LANES {
        out[i] = f(a[i], b[i]);
    }
}

/// Register file for one [`Program`].
#[derive(Debug, Clone)]
pub struct Scratch {
    regs: Vec<Lane>,
}

impl Scratch {
    /// The first `dims` registers: state-variable inputs.
    pub fn state_mut(&mut self, dims: usize) -> &mut [Lane] {
        &mut self.regs[..dims]
    }
}
