//! Deterministic canonical-order pretty printer. Output re-parses to the
//! same tree and is byte-stable.

use crate::expr::{Expr, ExprNode};
use num::rational::BigRational;
use num::traits::{One, Signed};

pub fn print_expr(e: &Expr) -> String {
    match e.node() {
        ExprNode::Sum(terms) => {
            let mut out = String::new();
            for (k, t) in terms.iter().enumerate() {
                let (c, key) = t.coeff_and_key();
                if k == 0 {
                    if c.is_negative() {
                        out.push('-');
                    }
                } else if c.is_negative() {
                    out.push_str(" - ");
                } else {
                    out.push_str(" + ");
                }
                out.push_str(&print_monomial(&c.abs(), &key));
            }
            out
        }
        _ => {
            let (c, key) = e.coeff_and_key();
            if c.is_negative() {
                format!("-{}", print_monomial(&c.abs(), &key))
            } else {
                print_monomial(&c, &key)
            }
        }
    }
}

fn rational_str(q: &BigRational) -> String {
    if q.is_integer() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

/// Prints `coeff * key` with a nonnegative coefficient, splitting factors
/// with negative exponents into a denominator chain.
fn print_monomial(coeff: &BigRational, key: &Expr) -> String {
    let factors: Vec<Expr> = match key.node() {
        ExprNode::Prod(fs) => fs.clone(),
        _ if key.is_one() => Vec::new(),
        _ => vec![key.clone()],
    };
    let mut numer: Vec<String> = Vec::new();
    let mut denom: Vec<String> = Vec::new();
    for f in &factors {
        match f.node() {
            ExprNode::Pow(base, r) if r.is_negative() => {
                denom.push(print_power(base, &(-r.clone())));
            }
            _ => numer.push(print_factor(f)),
        }
    }
    let mut out = String::new();
    if numer.is_empty() {
        out.push_str(&rational_str(coeff));
    } else {
        if !coeff.is_one() {
            out.push_str(&rational_str(coeff));
            out.push('*');
        }
        out.push_str(&numer.join("*"));
    }
    for d in denom {
        out.push('/');
        out.push_str(&d);
    }
    out
}

fn print_factor(e: &Expr) -> String {
    match e.node() {
        ExprNode::Pow(base, r) => print_power(base, r),
        _ => print_atom(e),
    }
}

fn print_power(base: &Expr, r: &BigRational) -> String {
    let b = print_atom(base);
    if r.is_one() {
        return b;
    }
    if r.is_integer() && r.is_positive() {
        format!("{b}^{}", r.numer())
    } else {
        format!("{b}^({})", rational_str(r))
    }
}

/// Prints a non-product, non-power node, parenthesizing where the grammar
/// needs it as a factor.
fn print_atom(e: &Expr) -> String {
    match e.node() {
        ExprNode::Num(q) => {
            if q.is_integer() && !q.is_negative() {
                rational_str(q)
            } else {
                format!("({})", rational_str(q))
            }
        }
        ExprNode::ImagUnit => "I".to_string(),
        ExprNode::Pi => "pi".to_string(),
        ExprNode::Param(name) => name.clone(),
        ExprNode::Var(v) => v.name().to_string(),
        ExprNode::Jet(j) => j.to_string(),
        ExprNode::Ansatz(f, ix) => {
            if ix.order() == 0 {
                f.name().to_string()
            } else {
                format!("{}[{}]", f.name(), ix.axis_names().join(","))
            }
        }
        ExprNode::Func { name, order, arg } => {
            let primes: String = "'".repeat(*order as usize);
            format!("{name}{primes}({})", print_expr(arg))
        }
        ExprNode::Exp(arg) => format!("exp({})", print_expr(arg)),
        ExprNode::Sum(_) | ExprNode::Prod(_) | ExprNode::Pow(..) => {
            format!("({})", print_expr(e))
        }
    }
}
