//! Numeric evaluation: bindings, arbitrary-function tables, a compiled
//! stack-machine evaluator for grid sweeps, and randomized zero testing.

use super::{Expr, ExprError, ExprNode, JetVar, Var};
use num::complex::Complex64;
use num::traits::ToPrimitive;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::sync::Arc;

/// Seed for every randomized check, fixed by the `LSL_SEED` environment
/// variable for reproducible runs.
pub fn lsl_seed() -> u64 {
    std::env::var("LSL_SEED")
        .ok()
        .and_then(|s| s.parse::<u64>().ok())
        .unwrap_or(0x4c53_4c00)
}

/// Values for free atoms (variables, parameters, jet variables, ansatz
/// derivatives), keyed by the atom expression itself.
#[derive(Clone, Default)]
pub struct Bindings {
    map: HashMap<Expr, Complex64>,
}

impl Bindings {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn set(&mut self, atom: Expr, value: impl Into<Complex64>) -> &mut Self {
        self.map.insert(atom, value.into());
        self
    }

    pub fn set_var(&mut self, v: Var, value: impl Into<Complex64>) -> &mut Self {
        self.set(Expr::var(v), value)
    }

    pub fn set_param(&mut self, name: &str, value: impl Into<Complex64>) -> &mut Self {
        self.set(Expr::param(name), value)
    }

    pub fn set_jet(&mut self, j: JetVar, value: impl Into<Complex64>) -> &mut Self {
        self.set(Expr::jet_var(j), value)
    }

    pub fn get(&self, atom: &Expr) -> Option<Complex64> {
        self.map.get(atom).copied()
    }
}

type DynFn = Arc<dyn Fn(u32, Complex64) -> Complex64 + Send + Sync>;

/// Callables for arbitrary unary functions. Each entry receives the
/// derivative order and the argument.
#[derive(Clone, Default)]
pub struct FnTable {
    map: HashMap<String, DynFn>,
}

impl FnTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(
        &mut self,
        name: &str,
        f: impl Fn(u32, Complex64) -> Complex64 + Send + Sync + 'static,
    ) -> &mut Self {
        self.map.insert(name.to_string(), Arc::new(f));
        self
    }

    /// Registers `name` as exp(-z^2/4) with derivatives computed to the
    /// orders the toolkit needs (up to 4).
    pub fn insert_gauss_quarter(&mut self, name: &str) -> &mut Self {
        self.insert(name, gauss_quarter)
    }

    pub fn get(&self, name: &str) -> Option<&DynFn> {
        self.map.get(name)
    }
}

/// exp(-z^2/4) and its first four derivatives.
pub fn gauss_quarter(order: u32, z: Complex64) -> Complex64 {
    let g = (-z * z / 4.0).exp();
    match order {
        0 => g,
        1 => -z / 2.0 * g,
        2 => (z * z - 2.0) / 4.0 * g,
        3 => -(z * z * z - 6.0 * z) / 8.0 * g,
        4 => (z * z * z * z - 12.0 * z * z + 12.0) / 16.0 * g,
        _ => panic!("gauss_quarter derivative order {order} not implemented"),
    }
}

fn free_atoms(e: &Expr) -> Vec<Expr> {
    let mut set = std::collections::BTreeSet::new();
    e.visit(&mut |n| match n.node() {
        ExprNode::Param(_) | ExprNode::Var(_) | ExprNode::Jet(_) | ExprNode::Ansatz(..) => {
            set.insert(n.clone());
        }
        _ => {}
    });
    set.into_iter().collect()
}

fn func_names(e: &Expr) -> Vec<String> {
    let mut set = std::collections::BTreeSet::new();
    e.visit(&mut |n| {
        if let ExprNode::Func { name, .. } = n.node() {
            set.insert(name.clone());
        }
    });
    set.into_iter().collect()
}

impl Expr {
    /// IEEE double-precision complex evaluation. Every free symbol, jet
    /// variable and function name must be bound.
    pub fn eval_numeric(&self, b: &Bindings, fns: &FnTable) -> Result<Complex64, ExprError> {
        let mut missing: Vec<String> = free_atoms(self)
            .into_iter()
            .filter(|a| b.get(a).is_none())
            .map(|a| a.to_string())
            .collect();
        missing.extend(
            func_names(self)
                .into_iter()
                .filter(|n| fns.get(n).is_none()),
        );
        if !missing.is_empty() {
            return Err(ExprError::UnboundSymbols(missing));
        }
        Ok(eval_rec(self, b, fns))
    }
}

fn eval_rec(e: &Expr, b: &Bindings, fns: &FnTable) -> Complex64 {
    match e.node() {
        ExprNode::Num(q) => Complex64::new(q.to_f64().expect("rational fits f64"), 0.0),
        ExprNode::ImagUnit => Complex64::new(0.0, 1.0),
        ExprNode::Pi => Complex64::new(std::f64::consts::PI, 0.0),
        ExprNode::Param(_) | ExprNode::Var(_) | ExprNode::Jet(_) | ExprNode::Ansatz(..) => {
            b.get(e).expect("checked bound")
        }
        ExprNode::Func { name, order, arg } => {
            let z = eval_rec(arg, b, fns);
            (fns.get(name).expect("checked bound"))(*order, z)
        }
        ExprNode::Exp(arg) => eval_rec(arg, b, fns).exp(),
        ExprNode::Pow(base, r) => {
            let v = eval_rec(base, b, fns);
            match r.to_integer().to_i32() {
                Some(k) if r.is_integer() => v.powi(k),
                _ => v.powf(r.to_f64().expect("exponent fits f64")),
            }
        }
        ExprNode::Prod(fs) => fs
            .iter()
            .fold(Complex64::new(1.0, 0.0), |acc, f| acc * eval_rec(f, b, fns)),
        ExprNode::Sum(ts) => ts
            .iter()
            .fold(Complex64::new(0.0, 0.0), |acc, t| acc + eval_rec(t, b, fns)),
    }
}

// ----- compiled evaluator -----

#[derive(Debug, Clone)]
enum Instr {
    Const(Complex64),
    Slot(usize),
    Add(usize),
    Mul(usize),
    PowI(i32),
    PowF(f64),
    Exp,
    Call { func: usize, order: u32 },
}

/// An expression flattened to a stack program over a fixed atom layout,
/// for fast repeated evaluation on grids.
pub struct CompiledExpr {
    instrs: Vec<Instr>,
    atoms: Vec<Expr>,
    funcs: Vec<String>,
    max_stack: usize,
}

impl CompiledExpr {
    pub fn compile(e: &Expr) -> CompiledExpr {
        let atoms = free_atoms(e);
        let funcs = func_names(e);
        let mut c = CompiledExpr {
            instrs: Vec::new(),
            atoms,
            funcs,
            max_stack: 0,
        };
        let depth = c.emit(e, 0);
        c.max_stack = depth.max(1);
        c
    }

    /// The atoms, in slot order; callers fill a slot buffer in this order.
    pub fn atoms(&self) -> &[Expr] {
        &self.atoms
    }

    pub fn slot_of(&self, atom: &Expr) -> Option<usize> {
        self.atoms.iter().position(|a| a == atom)
    }

    /// Resolves the function table once so the hot loop avoids hash lookups.
    pub fn bind_fns(&self, fns: &FnTable) -> Result<Vec<DynFn>, ExprError> {
        self.funcs
            .iter()
            .map(|n| {
                fns.get(n)
                    .cloned()
                    .ok_or_else(|| ExprError::UnboundSymbols(vec![n.clone()]))
            })
            .collect()
    }

    fn emit(&mut self, e: &Expr, depth: usize) -> usize {
        match e.node() {
            ExprNode::Num(q) => {
                self.instrs.push(Instr::Const(Complex64::new(
                    q.to_f64().expect("rational fits f64"),
                    0.0,
                )));
                depth + 1
            }
            ExprNode::ImagUnit => {
                self.instrs.push(Instr::Const(Complex64::new(0.0, 1.0)));
                depth + 1
            }
            ExprNode::Pi => {
                self.instrs
                    .push(Instr::Const(Complex64::new(std::f64::consts::PI, 0.0)));
                depth + 1
            }
            ExprNode::Param(_) | ExprNode::Var(_) | ExprNode::Jet(_) | ExprNode::Ansatz(..) => {
                let slot = self.slot_of(e).expect("atom registered");
                self.instrs.push(Instr::Slot(slot));
                depth + 1
            }
            ExprNode::Func { name, order, arg } => {
                let d = self.emit(arg, depth);
                let func = self
                    .funcs
                    .iter()
                    .position(|n| n == name)
                    .expect("function registered");
                self.instrs.push(Instr::Call {
                    func,
                    order: *order,
                });
                d
            }
            ExprNode::Exp(arg) => {
                let d = self.emit(arg, depth);
                self.instrs.push(Instr::Exp);
                d
            }
            ExprNode::Pow(b, r) => {
                let d = self.emit(b, depth);
                if r.is_integer() {
                    if let Some(k) = r.to_integer().to_i32() {
                        self.instrs.push(Instr::PowI(k));
                        return d;
                    }
                }
                self.instrs
                    .push(Instr::PowF(r.to_f64().expect("exponent fits f64")));
                d
            }
            ExprNode::Prod(fs) => {
                let mut d = depth;
                let mut peak = depth;
                for f in fs {
                    d = self.emit(f, d);
                    peak = peak.max(d);
                }
                self.instrs.push(Instr::Mul(fs.len()));
                self.max_stack = self.max_stack.max(peak);
                depth + 1
            }
            ExprNode::Sum(ts) => {
                let mut d = depth;
                let mut peak = depth;
                for t in ts {
                    d = self.emit(t, d);
                    peak = peak.max(d);
                }
                self.instrs.push(Instr::Add(ts.len()));
                self.max_stack = self.max_stack.max(peak);
                depth + 1
            }
        }
    }

    /// Evaluates with atom values in `slots` (ordered as [`Self::atoms`])
    /// and resolved functions from [`Self::bind_fns`].
    pub fn eval(&self, slots: &[Complex64], fns: &[DynFn]) -> Complex64 {
        debug_assert_eq!(slots.len(), self.atoms.len());
        let mut stack: Vec<Complex64> = Vec::with_capacity(self.max_stack + 4);
        for ins in &self.instrs {
            match ins {
                Instr::Const(c) => stack.push(*c),
                Instr::Slot(k) => stack.push(slots[*k]),
                Instr::Add(n) => {
                    let mut acc = Complex64::new(0.0, 0.0);
                    for _ in 0..*n {
                        acc += stack.pop().expect("stack underflow");
                    }
                    stack.push(acc);
                }
                Instr::Mul(n) => {
                    let mut acc = Complex64::new(1.0, 0.0);
                    for _ in 0..*n {
                        acc *= stack.pop().expect("stack underflow");
                    }
                    stack.push(acc);
                }
                Instr::PowI(k) => {
                    let v = stack.pop().expect("stack underflow");
                    stack.push(v.powi(*k));
                }
                Instr::PowF(r) => {
                    let v = stack.pop().expect("stack underflow");
                    stack.push(v.powf(*r));
                }
                Instr::Exp => {
                    let v = stack.pop().expect("stack underflow");
                    stack.push(v.exp());
                }
                Instr::Call { func, order } => {
                    let v = stack.pop().expect("stack underflow");
                    stack.push(fns[*func](*order, v));
                }
            }
        }
        stack.pop().expect("program leaves one value")
    }
}

// ----- zero certification -----

/// Outcome of a zero test. `Exact` means the canonical form is the zero
/// expression; `Probabilistic` means randomized evaluation stayed below the
/// cutoff at every sample point.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub enum ZeroCertificate {
    Exact,
    Probabilistic { points: usize, cutoff: f64 },
    NonZero { max_relative: f64 },
}

impl ZeroCertificate {
    pub fn is_zero(&self) -> bool {
        !matches!(self, ZeroCertificate::NonZero { .. })
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, ZeroCertificate::Exact)
    }
}

pub const ZERO_TEST_POINTS: usize = 32;
pub const ZERO_TEST_CUTOFF: f64 = 1e-9;

/// Canonical form first; if the expression is not structurally zero,
/// evaluates at randomized points. Arbitrary functions are replaced by
/// deterministic pseudo-random cubic polynomials, independent per
/// (name, derivative order), so only identities that hold for arbitrary
/// functions certify.
pub fn certify_zero(e: &Expr, seed: u64) -> ZeroCertificate {
    if e.is_zero() {
        return ZeroCertificate::Exact;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let atoms = free_atoms(e);
    let names = func_names(e);
    let mut fns = FnTable::new();
    for name in &names {
        let name_hash = name.bytes().fold(seed, |h, b| {
            h.wrapping_mul(1099511628211).wrapping_add(b as u64)
        });
        fns.insert(name, move |order, z| pseudo_cubic(name_hash, order, z));
    }
    let mut worst: f64 = 0.0;
    for _ in 0..ZERO_TEST_POINTS {
        let mut b = Bindings::new();
        for a in &atoms {
            let v = match a.node() {
                ExprNode::Param(_) => Complex64::new(rng.random_range(0.5..2.0), 0.0),
                ExprNode::Var(_) => Complex64::new(rng.random_range(-2.0..2.0), 0.0),
                _ => Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
            };
            b.set(a.clone(), v);
        }
        let mut total = Complex64::new(0.0, 0.0);
        let mut scale: f64 = 1.0;
        for t in e.terms() {
            let v = t
                .eval_numeric(&b, &fns)
                .expect("all atoms bound for zero test");
            total += v;
            scale += v.norm();
        }
        worst = worst.max(total.norm() / scale);
        if worst > ZERO_TEST_CUTOFF {
            return ZeroCertificate::NonZero {
                max_relative: worst,
            };
        }
    }
    ZeroCertificate::Probabilistic {
        points: ZERO_TEST_POINTS,
        cutoff: ZERO_TEST_CUTOFF,
    }
}

/// Deterministic cubic polynomial standing in for one derivative order of an
/// opaque function during randomized zero tests.
fn pseudo_cubic(name_hash: u64, order: u32, z: Complex64) -> Complex64 {
    let mut rng =
        ChaCha8Rng::seed_from_u64(name_hash ^ (order as u64 + 1).wrapping_mul(0x9e3779b97f4a7c15));
    let mut acc = Complex64::new(0.0, 0.0);
    let mut zp = Complex64::new(1.0, 0.0);
    for _ in 0..4 {
        let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        acc += c * zp;
        zp *= z;
    }
    acc
}
