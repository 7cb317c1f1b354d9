//! Immutable symbolic expression kernel.
//!
//! Expressions are reference-counted trees over exact rationals, the named
//! constants pi and the imaginary unit, positive real parameters, independent
//! variables, jet variables, opaque ansatz-function derivatives, arbitrary
//! unary functions, exponentials, rational powers, n-ary sums and products.
//!
//! Construction always canonicalizes: sums and products are flattened,
//! numeric content is merged, integer powers of sums and products are
//! expanded, exponential factors are combined, the imaginary unit is reduced
//! modulo i^2 = -1, and siblings are kept in a fixed total order. Structural
//! equality of canonical forms therefore decides equality for the polynomial
//! fragment (in jet variables, variables and parameters) with exponential
//! factors of polynomial arguments.

mod atoms;
pub mod calculus;
pub mod eval;

pub use atoms::{
    AnsatzAxis, AnsatzFn, AnsatzIndex, Dep, JetIndex, JetVar, Var, ALL_ANSATZ, ALL_VARS,
    MAX_JET_ORDER,
};

use num::bigint::BigInt;
use num::rational::BigRational;
use num::traits::{One, Signed, ToPrimitive, Zero};
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::hash::{Hash, Hasher};
use std::sync::Arc;
use thiserror::Error;

/// Errors raised by expression calculus.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ExprError {
    #[error("jet order overflow: derivative of {0} with respect to {1} exceeds order {max}", max = MAX_JET_ORDER)]
    OrderOverflow(String, String),
    #[error("substitution pattern must be a variable, parameter or jet variable, got {0}")]
    InvalidPattern(String),
    #[error("replacement contains the substitution pattern {0}; rewrite would not terminate")]
    RecursiveReplacement(String),
    #[error("on-shell substitution requires a first-order time-derivative jet pattern, got {0}")]
    NotTimeJet(String),
    #[error("unbound symbols in numeric evaluation: {0:?}")]
    UnboundSymbols(Vec<String>),
    #[error("{0}")]
    Invalid(String),
}

/// Expression node. Fields obey the canonical-form invariants documented on
/// the module; nodes are only built through the canonicalizing constructors.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub enum ExprNode {
    Num(BigRational),
    ImagUnit,
    Pi,
    Param(String),
    Var(Var),
    Jet(JetVar),
    Ansatz(AnsatzFn, AnsatzIndex),
    /// `order`-th derivative of the arbitrary unary function `name`,
    /// applied to `arg`.
    Func {
        name: String,
        order: u32,
        arg: Expr,
    },
    Exp(Expr),
    Pow(Expr, BigRational),
    Prod(Vec<Expr>),
    Sum(Vec<Expr>),
}

/// An immutable, canonically simplified symbolic expression.
#[derive(Clone, Debug)]
pub struct Expr(Arc<ExprNode>);

impl PartialEq for Expr {
    fn eq(&self, other: &Self) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0 == other.0
    }
}

impl Eq for Expr {}

impl PartialOrd for Expr {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Expr {
    fn cmp(&self, other: &Self) -> Ordering {
        if Arc::ptr_eq(&self.0, &other.0) {
            return Ordering::Equal;
        }
        self.0.cmp(&other.0)
    }
}

impl Hash for Expr {
    fn hash<H: Hasher>(&self, state: &mut H) {
        self.0.hash(state)
    }
}

fn rat(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

impl Expr {
    fn mk(node: ExprNode) -> Expr {
        Expr(Arc::new(node))
    }

    pub fn node(&self) -> &ExprNode {
        &self.0
    }

    // ----- atoms -----

    pub fn zero() -> Expr {
        Expr::mk(ExprNode::Num(BigRational::zero()))
    }

    pub fn one() -> Expr {
        Expr::mk(ExprNode::Num(BigRational::one()))
    }

    pub fn int(n: i64) -> Expr {
        Expr::mk(ExprNode::Num(BigRational::from(BigInt::from(n))))
    }

    pub fn ratio(n: i64, d: i64) -> Expr {
        assert!(d != 0, "zero denominator");
        Expr::mk(ExprNode::Num(rat(n, d)))
    }

    pub fn num(q: BigRational) -> Expr {
        Expr::mk(ExprNode::Num(q))
    }

    pub fn imag() -> Expr {
        Expr::mk(ExprNode::ImagUnit)
    }

    pub fn pi() -> Expr {
        Expr::mk(ExprNode::Pi)
    }

    pub fn param(name: &str) -> Expr {
        Expr::mk(ExprNode::Param(name.to_string()))
    }

    pub fn var(v: Var) -> Expr {
        Expr::mk(ExprNode::Var(v))
    }

    pub fn jet(dep: Dep, vars: &[Var]) -> Expr {
        Expr::mk(ExprNode::Jet(JetVar::new(dep, vars)))
    }

    pub fn jet_var(j: JetVar) -> Expr {
        Expr::mk(ExprNode::Jet(j))
    }

    pub fn ansatz(f: AnsatzFn, index: AnsatzIndex) -> Expr {
        Expr::mk(ExprNode::Ansatz(f, index))
    }

    /// `order`-th derivative of arbitrary function `name` applied to `arg`.
    pub fn func_deriv(name: &str, order: u32, arg: Expr) -> Expr {
        Expr::mk(ExprNode::Func {
            name: name.to_string(),
            order,
            arg,
        })
    }

    pub fn func(name: &str, arg: Expr) -> Expr {
        Expr::func_deriv(name, 0, arg)
    }

    // ----- canonicalizing constructors -----

    pub fn sum<I: IntoIterator<Item = Expr>>(terms: I) -> Expr {
        let mut acc: BTreeMap<Expr, BigRational> = BTreeMap::new();
        let mut stack: Vec<Expr> = terms.into_iter().collect();
        stack.reverse();
        while let Some(t) = stack.pop() {
            match t.node() {
                ExprNode::Sum(parts) => stack.extend(parts.iter().rev().cloned()),
                _ => {
                    let (c, key) = t.split_coeff();
                    if !c.is_zero() {
                        let entry = acc.entry(key).or_insert_with(BigRational::zero);
                        *entry += c;
                    }
                }
            }
        }
        let mut out: Vec<Expr> = Vec::with_capacity(acc.len());
        for (key, c) in acc {
            if c.is_zero() {
                continue;
            }
            out.push(Expr::monomial(c, key));
        }
        match out.len() {
            0 => Expr::zero(),
            1 => out.pop().unwrap(),
            _ => Expr::mk(ExprNode::Sum(out)),
        }
    }

    pub fn product<I: IntoIterator<Item = Expr>>(factors: I) -> Expr {
        let mut m = MonomialBuilder::one();
        for f in factors {
            m.mul_expr(&f);
        }
        m.finish()
    }

    pub fn add2(a: Expr, b: Expr) -> Expr {
        Expr::sum([a, b])
    }

    pub fn mul2(a: Expr, b: Expr) -> Expr {
        Expr::product([a, b])
    }

    pub fn neg_of(e: Expr) -> Expr {
        Expr::product([Expr::int(-1), e])
    }

    pub fn sub2(a: Expr, b: Expr) -> Expr {
        Expr::sum([a, Expr::neg_of(b)])
    }

    pub fn div2(a: Expr, b: Expr) -> Expr {
        Expr::product([a, Expr::powr(b, -BigRational::one())])
    }

    pub fn powi(base: Expr, k: i64) -> Expr {
        Expr::powr(base, BigRational::from(BigInt::from(k)))
    }

    pub fn powr(base: Expr, r: BigRational) -> Expr {
        if r.is_zero() {
            return Expr::one();
        }
        if r.is_one() {
            return base;
        }
        match base.node() {
            ExprNode::Num(q) => {
                if let Some(k) = rational_to_i32(&r) {
                    if q.is_zero() {
                        if k > 0 {
                            return Expr::zero();
                        }
                        // division by exact zero: keep the node; numeric
                        // evaluation will surface it
                        return Expr::mk(ExprNode::Pow(base.clone(), r));
                    }
                    return Expr::num(q.pow(k));
                }
                if q.is_zero() && r.is_positive() {
                    return Expr::zero();
                }
                if q.is_one() {
                    return Expr::one();
                }
                Expr::mk(ExprNode::Pow(base, r))
            }
            ExprNode::ImagUnit => {
                if r.is_integer() {
                    let mut m = MonomialBuilder::one();
                    m.ipow += rational_to_i64(&r).expect("i exponent fits i64");
                    m.finish()
                } else {
                    Expr::mk(ExprNode::Pow(base, r))
                }
            }
            ExprNode::Exp(arg) => {
                if r.is_integer() {
                    Expr::exp(Expr::product([arg.clone(), Expr::num(r)]))
                } else {
                    Expr::mk(ExprNode::Pow(base, r))
                }
            }
            ExprNode::Pow(inner, r2) => {
                if r.is_integer() || inner.is_known_positive() {
                    Expr::powr(inner.clone(), r2 * &r)
                } else {
                    Expr::mk(ExprNode::Pow(base.clone(), r))
                }
            }
            ExprNode::Prod(_) => {
                let distribute = r.is_integer()
                    || match base.node() {
                        ExprNode::Prod(fs) => fs.iter().all(|f| f.is_known_positive()),
                        _ => unreachable!(),
                    };
                if distribute {
                    if let ExprNode::Prod(fs) = base.node() {
                        return Expr::product(fs.iter().map(|f| Expr::powr(f.clone(), r.clone())));
                    }
                }
                Expr::mk(ExprNode::Pow(base, r))
            }
            ExprNode::Sum(_) => {
                if r.is_integer() && r.is_positive() {
                    let k = rational_to_i64(&r).expect("sum exponent fits i64");
                    let mut acc = Expr::one();
                    for _ in 0..k {
                        acc = Expr::mul2(acc, base.clone());
                    }
                    acc
                } else {
                    Expr::mk(ExprNode::Pow(base, r))
                }
            }
            _ => Expr::mk(ExprNode::Pow(base, r)),
        }
    }

    pub fn exp(arg: Expr) -> Expr {
        if arg.is_zero() {
            return Expr::one();
        }
        Expr::mk(ExprNode::Exp(arg))
    }

    // ----- canonical-form helpers -----

    /// Split a non-sum term into (numeric coefficient, monomial key).
    /// Pure numbers map to (value, 1).
    fn split_coeff(&self) -> (BigRational, Expr) {
        match self.node() {
            ExprNode::Num(q) => (q.clone(), Expr::one()),
            ExprNode::Prod(fs) => {
                if let ExprNode::Num(q) = fs[0].node() {
                    let rest: Vec<Expr> = fs[1..].to_vec();
                    let key = if rest.len() == 1 {
                        rest.into_iter().next().unwrap()
                    } else {
                        Expr::mk(ExprNode::Prod(rest))
                    };
                    (q.clone(), key)
                } else {
                    (BigRational::one(), self.clone())
                }
            }
            _ => (BigRational::one(), self.clone()),
        }
    }

    /// Rebuild a monomial from a coefficient and a coefficient-free key.
    fn monomial(c: BigRational, key: Expr) -> Expr {
        if c.is_zero() {
            return Expr::zero();
        }
        if key.is_one() {
            return Expr::num(c);
        }
        if c.is_one() {
            return key;
        }
        let mut fs = Vec::new();
        fs.push(Expr::num(c));
        match key.node() {
            ExprNode::Prod(parts) => fs.extend(parts.iter().cloned()),
            _ => fs.push(key),
        }
        Expr::mk(ExprNode::Prod(fs))
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.node(), ExprNode::Num(q) if q.is_zero())
    }

    pub fn is_one(&self) -> bool {
        matches!(self.node(), ExprNode::Num(q) if q.is_one())
    }

    pub fn as_num(&self) -> Option<&BigRational> {
        match self.node() {
            ExprNode::Num(q) => Some(q),
            _ => None,
        }
    }

    /// Conservative positivity: true only for atoms declared positive real
    /// (parameters, pi, positive numbers) and products/powers thereof.
    pub fn is_known_positive(&self) -> bool {
        match self.node() {
            ExprNode::Num(q) => q.is_positive(),
            ExprNode::Pi | ExprNode::Param(_) => true,
            ExprNode::Pow(b, _) => b.is_known_positive(),
            ExprNode::Prod(fs) => fs.iter().all(|f| f.is_known_positive()),
            _ => false,
        }
    }

    /// Full bottom-up re-canonicalization. Construction already yields
    /// canonical trees, so this is the identity on kernel-built values; it
    /// exists as the public simplifier and as the idempotence witness.
    pub fn simplify(&self) -> Expr {
        match self.node() {
            ExprNode::Num(_)
            | ExprNode::ImagUnit
            | ExprNode::Pi
            | ExprNode::Param(_)
            | ExprNode::Var(_)
            | ExprNode::Jet(_)
            | ExprNode::Ansatz(..) => self.clone(),
            ExprNode::Func { name, order, arg } => Expr::func_deriv(name, *order, arg.simplify()),
            ExprNode::Exp(arg) => Expr::exp(arg.simplify()),
            ExprNode::Pow(b, r) => Expr::powr(b.simplify(), r.clone()),
            ExprNode::Prod(fs) => Expr::product(fs.iter().map(|f| f.simplify())),
            ExprNode::Sum(ts) => Expr::sum(ts.iter().map(|t| t.simplify())),
        }
    }

    /// Terms of the expression viewed as a sum.
    pub fn terms(&self) -> Vec<Expr> {
        match self.node() {
            ExprNode::Sum(ts) => ts.clone(),
            _ => vec![self.clone()],
        }
    }

    /// Numeric coefficient and key of a non-sum term (public variant).
    pub fn coeff_and_key(&self) -> (BigRational, Expr) {
        self.split_coeff()
    }

    /// Walks all nodes, calling `f` on each.
    pub fn visit(&self, f: &mut impl FnMut(&Expr)) {
        f(self);
        match self.node() {
            ExprNode::Func { arg, .. } => arg.visit(f),
            ExprNode::Exp(a) => a.visit(f),
            ExprNode::Pow(b, _) => b.visit(f),
            ExprNode::Prod(fs) => fs.iter().for_each(|e| e.visit(f)),
            ExprNode::Sum(ts) => ts.iter().for_each(|e| e.visit(f)),
            _ => {}
        }
    }

    /// Rebuilds the tree, replacing every node for which `f` returns `Some`.
    /// Replacement is not re-applied inside replaced subtrees.
    pub fn replace(&self, f: &impl Fn(&Expr) -> Option<Expr>) -> Expr {
        if let Some(r) = f(self) {
            return r;
        }
        match self.node() {
            ExprNode::Func { name, order, arg } => Expr::func_deriv(name, *order, arg.replace(f)),
            ExprNode::Exp(a) => Expr::exp(a.replace(f)),
            ExprNode::Pow(b, r) => Expr::powr(b.replace(f), r.clone()),
            ExprNode::Prod(fs) => Expr::product(fs.iter().map(|e| e.replace(f))),
            ExprNode::Sum(ts) => Expr::sum(ts.iter().map(|e| e.replace(f))),
            _ => self.clone(),
        }
    }

    /// Fallible variant of [`Expr::replace`].
    pub fn try_replace(
        &self,
        f: &impl Fn(&Expr) -> Option<Result<Expr, ExprError>>,
    ) -> Result<Expr, ExprError> {
        if let Some(r) = f(self) {
            return r;
        }
        Ok(match self.node() {
            ExprNode::Func { name, order, arg } => {
                Expr::func_deriv(name, *order, arg.try_replace(f)?)
            }
            ExprNode::Exp(a) => Expr::exp(a.try_replace(f)?),
            ExprNode::Pow(b, r) => Expr::powr(b.try_replace(f)?, r.clone()),
            ExprNode::Prod(fs) => {
                let fs: Result<Vec<_>, _> = fs.iter().map(|e| e.try_replace(f)).collect();
                Expr::product(fs?)
            }
            ExprNode::Sum(ts) => {
                let ts: Result<Vec<_>, _> = ts.iter().map(|e| e.try_replace(f)).collect();
                Expr::sum(ts?)
            }
            _ => self.clone(),
        })
    }

    pub fn contains(&self, atom: &Expr) -> bool {
        let mut found = false;
        self.visit(&mut |e| {
            if e == atom {
                found = true;
            }
        });
        found
    }

    /// All jet variables occurring in the tree.
    pub fn jet_vars(&self) -> Vec<JetVar> {
        let mut set = std::collections::BTreeSet::new();
        self.visit(&mut |e| {
            if let ExprNode::Jet(j) = e.node() {
                set.insert(*j);
            }
        });
        set.into_iter().collect()
    }

    pub fn max_jet_order(&self) -> u32 {
        self.jet_vars().iter().map(|j| j.order()).max().unwrap_or(0)
    }

    /// Divides out the common numeric content and the common monomial factor
    /// of all terms, then normalizes the leading sign. Used to present
    /// reduced equations with minimal integer coefficients.
    pub fn primitive_normalized(&self) -> Expr {
        let terms = self.terms();
        if self.is_zero() {
            return self.clone();
        }
        // numeric content: gcd of numerators over lcm of denominators
        use num::Integer;
        let mut num_gcd: Option<BigInt> = None;
        let mut den_lcm: Option<BigInt> = None;
        // common factor exponents
        let mut common: Option<BTreeMap<Expr, BigRational>> = None;
        for t in &terms {
            let (c, key) = t.coeff_and_key();
            let n = c.numer().abs();
            let d = c.denom().abs();
            num_gcd = Some(match num_gcd {
                None => n,
                Some(g) => g.gcd(&n),
            });
            den_lcm = Some(match den_lcm {
                None => d,
                Some(l) => l.lcm(&d),
            });
            let mut powers: BTreeMap<Expr, BigRational> = BTreeMap::new();
            let factors: Vec<Expr> = match key.node() {
                ExprNode::Prod(fs) => fs.clone(),
                _ if key.is_one() => Vec::new(),
                _ => vec![key.clone()],
            };
            for f in factors {
                match f.node() {
                    ExprNode::Pow(b, r) => {
                        powers.insert(b.clone(), r.clone());
                    }
                    _ => {
                        powers.insert(f.clone(), BigRational::one());
                    }
                }
            }
            common = Some(match common {
                None => powers,
                Some(mut acc) => {
                    acc.retain(|base, r| {
                        if let Some(r2) = powers.get(base) {
                            if r2 < r {
                                *r = r2.clone();
                            }
                            true
                        } else {
                            false
                        }
                    });
                    acc
                }
            });
        }
        let content = BigRational::new(
            num_gcd.unwrap_or_else(BigInt::one),
            den_lcm.unwrap_or_else(BigInt::one),
        );
        let mut divisor_factors: Vec<Expr> = vec![Expr::num(content)];
        for (base, r) in common.unwrap_or_default() {
            divisor_factors.push(Expr::powr(base, -r));
        }
        let mut out = Expr::product(std::iter::once(self.clone()).chain(
            divisor_factors.into_iter().map(|f| match f.node() {
                ExprNode::Num(q) => Expr::num(BigRational::one() / q),
                _ => f.clone(),
            }),
        ));
        // leading-sign normalization
        if let Some(first) = out.terms().first() {
            let (c, _) = first.coeff_and_key();
            if c.is_negative() {
                out = -out;
            }
        }
        out
    }
}

fn rational_to_i64(r: &BigRational) -> Option<i64> {
    if r.is_integer() {
        r.to_integer().to_i64()
    } else {
        None
    }
}

fn rational_to_i32(r: &BigRational) -> Option<i32> {
    if r.is_integer() {
        r.to_integer().to_i32()
    } else {
        None
    }
}

/// Accumulator used by [`Expr::product`]: numeric coefficient, power of the
/// imaginary unit, exponential-argument terms, base -> exponent map, and a
/// queue of sum bases awaiting multinomial expansion.
struct MonomialBuilder {
    coeff: BigRational,
    ipow: i64,
    exp_args: Vec<Expr>,
    bases: BTreeMap<Expr, BigRational>,
    zero: bool,
}

impl MonomialBuilder {
    fn one() -> Self {
        MonomialBuilder {
            coeff: BigRational::one(),
            ipow: 0,
            exp_args: Vec::new(),
            bases: BTreeMap::new(),
            zero: false,
        }
    }

    fn mul_expr(&mut self, e: &Expr) {
        if self.zero {
            return;
        }
        match e.node() {
            ExprNode::Num(q) => {
                if q.is_zero() {
                    self.zero = true;
                } else {
                    self.coeff *= q;
                }
            }
            ExprNode::ImagUnit => self.ipow += 1,
            ExprNode::Exp(arg) => self.exp_args.push(arg.clone()),
            ExprNode::Prod(fs) => fs.iter().for_each(|f| self.mul_expr(f)),
            ExprNode::Pow(b, r) => self.insert_base(b.clone(), r.clone()),
            _ => self.insert_base(e.clone(), BigRational::one()),
        }
    }

    fn insert_base(&mut self, base: Expr, r: BigRational) {
        if self.zero || r.is_zero() {
            return;
        }
        match base.node() {
            ExprNode::Num(q) => {
                if let Some(k) = rational_to_i32(&r) {
                    if q.is_zero() {
                        if k > 0 {
                            self.zero = true;
                        } else {
                            self.add_base(base.clone(), r);
                        }
                    } else {
                        self.coeff *= q.pow(k);
                    }
                } else if !q.is_one() {
                    self.add_base(base.clone(), r);
                }
            }
            ExprNode::ImagUnit => {
                if let Some(k) = rational_to_i64(&r) {
                    self.ipow += k;
                } else {
                    self.add_base(base.clone(), r);
                }
            }
            ExprNode::Exp(arg) => {
                if r.is_integer() {
                    self.exp_args
                        .push(Expr::product([arg.clone(), Expr::num(r)]));
                } else {
                    self.add_base(base.clone(), r);
                }
            }
            ExprNode::Pow(inner, r2) => {
                if r.is_integer() || inner.is_known_positive() {
                    let inner = inner.clone();
                    let merged = r2 * &r;
                    self.insert_base(inner, merged);
                } else {
                    self.add_base(base.clone(), r);
                }
            }
            ExprNode::Prod(fs) => {
                if r.is_integer() || fs.iter().all(|f| f.is_known_positive()) {
                    for f in fs.clone() {
                        match f.node() {
                            ExprNode::Pow(b, r2) => self.insert_base(b.clone(), r2 * &r),
                            _ => self.insert_base(f.clone(), r.clone()),
                        }
                    }
                } else {
                    self.add_base(base.clone(), r);
                }
            }
            _ => self.add_base(base, r),
        }
    }

    fn add_base(&mut self, base: Expr, r: BigRational) {
        let entry = self.bases.entry(base).or_insert_with(BigRational::zero);
        *entry += r;
    }

    fn finish(mut self) -> Expr {
        if self.zero || self.coeff.is_zero() {
            return Expr::zero();
        }
        // reduce i^k
        let m = self.ipow.rem_euclid(4);
        let mut keep_i = false;
        match m {
            0 => {}
            1 => keep_i = true,
            2 => self.coeff = -self.coeff,
            3 => {
                self.coeff = -self.coeff;
                keep_i = true;
            }
            _ => unreachable!(),
        }
        // exponential factor
        let exp_factor = {
            let arg = Expr::sum(std::mem::take(&mut self.exp_args));
            if arg.is_zero() {
                None
            } else {
                Some(Expr::exp(arg))
            }
        };
        // split sum bases that need multinomial expansion
        let mut factors: Vec<Expr> = Vec::new();
        let mut expansions: Vec<(Expr, i64)> = Vec::new();
        for (base, r) in std::mem::take(&mut self.bases) {
            if r.is_zero() {
                continue;
            }
            if matches!(base.node(), ExprNode::Sum(_)) && r.is_integer() && r.is_positive() {
                expansions.push((base, rational_to_i64(&r).expect("small exponent")));
                continue;
            }
            if r.is_one() {
                factors.push(base);
            } else {
                factors.push(Expr::mk(ExprNode::Pow(base, r)));
            }
        }
        if keep_i {
            factors.push(Expr::imag());
        }
        if let Some(ef) = exp_factor {
            factors.push(ef);
        }
        factors.sort();
        let monomial = {
            let key = match factors.len() {
                0 => Expr::one(),
                1 => factors.pop().unwrap(),
                _ => Expr::mk(ExprNode::Prod(factors)),
            };
            Expr::monomial(self.coeff.clone(), key)
        };
        if expansions.is_empty() {
            return monomial;
        }
        // polynomial expansion: multiply the collected monomial by each sum
        // base the required number of times
        let mut poly: Vec<Expr> = vec![monomial];
        for (sum, k) in expansions {
            let sum_terms = sum.terms();
            for _ in 0..k {
                let mut next: Vec<Expr> = Vec::with_capacity(poly.len() * sum_terms.len());
                for p in &poly {
                    for s in &sum_terms {
                        let mut mb = MonomialBuilder::one();
                        mb.mul_expr(p);
                        mb.mul_expr(s);
                        next.push(mb.finish());
                    }
                }
                poly = next;
            }
        }
        Expr::sum(poly)
    }
}

// ----- operator overloads -----

macro_rules! impl_binop {
    ($trait:ident, $method:ident, $ctor:path) => {
        impl std::ops::$trait for Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(self, rhs)
            }
        }
        impl std::ops::$trait<&Expr> for Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(self, rhs.clone())
            }
        }
        impl std::ops::$trait<Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: Expr) -> Expr {
                $ctor(self.clone(), rhs)
            }
        }
        impl std::ops::$trait<&Expr> for &Expr {
            type Output = Expr;
            fn $method(self, rhs: &Expr) -> Expr {
                $ctor(self.clone(), rhs.clone())
            }
        }
    };
}

impl_binop!(Add, add, Expr::add2);
impl_binop!(Sub, sub, Expr::sub2);
impl_binop!(Mul, mul, Expr::mul2);
impl_binop!(Div, div, Expr::div2);

impl std::ops::Neg for Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg_of(self)
    }
}

impl std::ops::Neg for &Expr {
    type Output = Expr;
    fn neg(self) -> Expr {
        Expr::neg_of(self.clone())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&crate::lang::print_expr(self))
    }
}

/// Common parameter names of the model.
pub mod params {
    pub const MASS: &str = "m";
    pub const GAMMA: &str = "g";
    pub const KB: &str = "kB";
    pub const TEMP: &str = "T";
    pub const PLANCK: &str = "h";
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x() -> Expr {
        Expr::var(Var::X)
    }
    fn y() -> Expr {
        Expr::var(Var::Y)
    }

    #[test]
    fn imaginary_unit_squares_to_minus_one() {
        let i = Expr::imag();
        assert_eq!(&i * &i, Expr::int(-1));
        assert_eq!(Expr::powi(i.clone(), 4), Expr::one());
        assert_eq!(Expr::powi(i.clone(), 3), -&i);
        assert_eq!(Expr::powi(i, -1), -Expr::imag());
    }

    #[test]
    fn sums_merge_like_terms() {
        let e = &x() + &y() + &x();
        assert_eq!(e, Expr::int(2) * x() + y());
        assert_eq!(&x() - &x(), Expr::zero());
    }

    #[test]
    fn binomial_square_expands_and_recollects() {
        let d = &y() - &x();
        let sq = Expr::powi(d.clone(), 2);
        let manual = Expr::powi(y(), 2) - Expr::int(2) * x() * y() + Expr::powi(x(), 2);
        assert_eq!(sq, manual);
        assert_eq!(sq.simplify(), sq);
        assert_eq!(sq.simplify().simplify(), sq.simplify());
    }

    #[test]
    fn powers_of_sums_cancel_against_inverses() {
        let d = &y() - &x();
        // exponents on an unexpanded sum base merge before expansion
        let e = Expr::product([Expr::powi(d.clone(), -1), d.clone(), d.clone()]);
        assert_eq!(e, d);
        let f = Expr::powi(d.clone(), -1) * d;
        assert_eq!(f, Expr::one());
    }

    #[test]
    fn exponentials_merge_in_products() {
        let a = Expr::exp(x());
        let b = Expr::exp(y());
        assert_eq!(&a * &b, Expr::exp(&x() + &y()));
        assert_eq!(a.clone() * Expr::exp(-&x()), Expr::one());
        assert_eq!(Expr::powi(a, 2), Expr::exp(Expr::int(2) * x()));
        assert_eq!(Expr::exp(Expr::zero()), Expr::one());
    }

    #[test]
    fn division_produces_negative_powers() {
        let h = Expr::param(params::PLANCK);
        let e = Expr::div2(x(), Expr::powi(h.clone(), 2));
        assert_eq!(e, x() * Expr::powi(h, -2));
    }

    #[test]
    fn numeric_power_folding() {
        assert_eq!(Expr::powi(Expr::int(2), 10), Expr::int(1024));
        assert_eq!(Expr::powi(Expr::int(2), -2), Expr::ratio(1, 4));
        assert_eq!(Expr::powi(Expr::ratio(3, 4), 2), Expr::ratio(9, 16));
    }

    #[test]
    fn deep_power_merge_on_positive_bases() {
        let h = Expr::param(params::PLANCK);
        let e = Expr::powr(Expr::powi(h.clone(), 2), rat(1, 2));
        assert_eq!(e, h);
        // sign-unknown bases must not merge under fractional outer powers
        let f = Expr::powr(Expr::powi(x(), 2), rat(1, 2));
        assert!(matches!(f.node(), ExprNode::Pow(_, _)));
    }

    #[test]
    fn canonical_order_oracle_eq2_residual_permutations() {
        // 4*pi*m*h^2*rho_t + i*h^3*(rho_yy - rho_xx) + 32*pi^3*m^2*g*kB*T*(y-x)^2*rho
        let pi = Expr::pi;
        let m = || Expr::param(params::MASS);
        let g = || Expr::param(params::GAMMA);
        let kb = || Expr::param(params::KB);
        let tt = || Expr::param(params::TEMP);
        let h = || Expr::param(params::PLANCK);
        let rho_t = Expr::jet(Dep::Rho, &[Var::T]);
        let rho_xx = Expr::jet(Dep::Rho, &[Var::X, Var::X]);
        let rho_yy = Expr::jet(Dep::Rho, &[Var::Y, Var::Y]);
        let rho = Expr::jet(Dep::Rho, &[]);

        let t1 = Expr::product([Expr::int(4), pi(), m(), Expr::powi(h(), 2), rho_t.clone()]);
        let t2 = Expr::imag() * Expr::powi(h(), 3) * (&rho_yy - &rho_xx);
        let t3 = Expr::product([
            Expr::int(32),
            Expr::powi(pi(), 3),
            Expr::powi(m(), 2),
            g(),
            kb(),
            tt(),
            Expr::powi(&y() - &x(), 2),
            rho.clone(),
        ]);
        let forward = Expr::sum([t1.clone(), t2.clone(), t3.clone()]);

        let u2 = (&rho_yy - &rho_xx) * Expr::powi(h(), 3) * Expr::imag();
        let u3 = Expr::product([
            Expr::powi(&y() - &x(), 2),
            tt(),
            kb(),
            g(),
            Expr::powi(m(), 2),
            Expr::powi(pi(), 3),
            Expr::int(32),
            rho,
        ]);
        let u1 = Expr::product([rho_t, Expr::powi(h(), 2), m(), pi(), Expr::int(4)]);
        let permuted = Expr::sum([u3, u1, u2]);

        assert_eq!(forward, permuted);
        assert!((forward - permuted).is_zero());
    }

    #[test]
    fn rationals_fold_with_pi_kept_symbolic() {
        let e = Expr::int(2) * Expr::pi() + Expr::int(3) * Expr::pi();
        assert_eq!(e, Expr::int(5) * Expr::pi());
        let f = Expr::pi() * Expr::pi();
        assert_eq!(f, Expr::powi(Expr::pi(), 2));
    }
}
