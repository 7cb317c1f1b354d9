//! Formal partial derivatives, total derivatives, and substitution.

use super::{AnsatzAxis, Dep, Expr, ExprError, ExprNode, JetVar, Var};
use num::rational::BigRational;
use num::traits::One;
use std::collections::BTreeMap;

impl Expr {
    /// Formal partial derivative with respect to an atom `s` (independent
    /// variable, parameter, or jet variable). Jet variables are mutually
    /// independent symbols; arbitrary functions follow the chain rule.
    pub fn partial_wrt(&self, s: &Expr) -> Expr {
        debug_assert!(
            matches!(
                s.node(),
                ExprNode::Var(_) | ExprNode::Param(_) | ExprNode::Jet(_) | ExprNode::Ansatz(..)
            ),
            "partial_wrt target must be an atomic symbol"
        );
        if self == s {
            return Expr::one();
        }
        match self.node() {
            ExprNode::Num(_)
            | ExprNode::ImagUnit
            | ExprNode::Pi
            | ExprNode::Param(_)
            | ExprNode::Var(_)
            | ExprNode::Jet(_)
            | ExprNode::Ansatz(..) => Expr::zero(),
            ExprNode::Func { name, order, arg } => {
                let outer = Expr::func_deriv(name, order + 1, arg.clone());
                outer * arg.partial_wrt(s)
            }
            ExprNode::Exp(arg) => self.clone() * arg.partial_wrt(s),
            ExprNode::Pow(b, r) => {
                let down = Expr::powr(b.clone(), r - BigRational::one());
                Expr::num(r.clone()) * down * b.partial_wrt(s)
            }
            ExprNode::Prod(fs) => {
                let mut terms = Vec::with_capacity(fs.len());
                for (k, fk) in fs.iter().enumerate() {
                    let dk = fk.partial_wrt(s);
                    if dk.is_zero() {
                        continue;
                    }
                    let mut rest: Vec<Expr> = Vec::with_capacity(fs.len());
                    rest.extend(fs.iter().take(k).cloned());
                    rest.push(dk);
                    rest.extend(fs.iter().skip(k + 1).cloned());
                    terms.push(Expr::product(rest));
                }
                Expr::sum(terms)
            }
            ExprNode::Sum(ts) => Expr::sum(ts.iter().map(|t| t.partial_wrt(s))),
        }
    }

    /// Total derivative D_v: raises jet orders by one, differentiates
    /// arbitrary-function applications by the chain rule, and treats ansatz
    /// functions as functions of (x, y, t, rho).
    pub fn total_derivative(&self, v: Var) -> Result<Expr, ExprError> {
        match self.node() {
            ExprNode::Num(_) | ExprNode::ImagUnit | ExprNode::Pi | ExprNode::Param(_) => {
                Ok(Expr::zero())
            }
            ExprNode::Var(u) => Ok(if *u == v { Expr::one() } else { Expr::zero() }),
            ExprNode::Jet(j) => {
                let raised = j.index.raised(v).ok_or_else(|| {
                    ExprError::OrderOverflow(self.to_string(), v.name().to_string())
                })?;
                Ok(Expr::jet_var(JetVar {
                    dep: j.dep,
                    index: raised,
                }))
            }
            ExprNode::Ansatz(f, ix) => {
                let base = ix.raised(AnsatzAxis::Base(v)).ok_or_else(|| {
                    ExprError::OrderOverflow(self.to_string(), v.name().to_string())
                })?;
                let mut out = Expr::ansatz(*f, base);
                // chain through the dependent slot: d/dv F(x,y,t,rho)
                // picks up rho_v * dF/drho
                if matches!(v, Var::X | Var::Y | Var::T) {
                    let rho_slot = ix.raised(AnsatzAxis::Rho).ok_or_else(|| {
                        ExprError::OrderOverflow(self.to_string(), "rho".to_string())
                    })?;
                    out = out + Expr::jet(Dep::Rho, &[v]) * Expr::ansatz(*f, rho_slot);
                }
                Ok(out)
            }
            ExprNode::Func { name, order, arg } => {
                let outer = Expr::func_deriv(name, order + 1, arg.clone());
                Ok(outer * arg.total_derivative(v)?)
            }
            ExprNode::Exp(arg) => Ok(self.clone() * arg.total_derivative(v)?),
            ExprNode::Pow(b, r) => {
                let down = Expr::powr(b.clone(), r - BigRational::one());
                Ok(Expr::num(r.clone()) * down * b.total_derivative(v)?)
            }
            ExprNode::Prod(fs) => {
                let mut terms = Vec::with_capacity(fs.len());
                for (k, fk) in fs.iter().enumerate() {
                    let dk = fk.total_derivative(v)?;
                    if dk.is_zero() {
                        continue;
                    }
                    let mut rest: Vec<Expr> = Vec::with_capacity(fs.len());
                    rest.extend(fs.iter().take(k).cloned());
                    rest.push(dk);
                    rest.extend(fs.iter().skip(k + 1).cloned());
                    terms.push(Expr::product(rest));
                }
                Ok(Expr::sum(terms))
            }
            ExprNode::Sum(ts) => {
                let ts: Result<Vec<_>, _> = ts.iter().map(|t| t.total_derivative(v)).collect();
                Ok(Expr::sum(ts?))
            }
        }
    }

    /// Iterated total derivative over a list of variables.
    pub fn total_derivative_multi(&self, vs: &[Var]) -> Result<Expr, ExprError> {
        let mut e = self.clone();
        for &v in vs {
            e = e.total_derivative(v)?;
        }
        Ok(e)
    }

    /// Substitutes `replacement` for the atomic `pattern`. With `on_shell`
    /// set, the pattern must be a first-order time-derivative jet u_t, and
    /// every higher jet of the same dependent variable containing a
    /// t-derivative is rewritten by total derivatives of the replacement
    /// before substitution.
    pub fn substitute(
        &self,
        pattern: &Expr,
        replacement: &Expr,
        on_shell: bool,
    ) -> Result<Expr, ExprError> {
        match pattern.node() {
            ExprNode::Var(_) | ExprNode::Param(_) | ExprNode::Jet(_) => {}
            _ => return Err(ExprError::InvalidPattern(pattern.to_string())),
        }
        if replacement.contains(pattern) {
            return Err(ExprError::RecursiveReplacement(pattern.to_string()));
        }
        if !on_shell {
            return Ok(self.replace(&|e| {
                if e == pattern {
                    Some(replacement.clone())
                } else {
                    None
                }
            }));
        }
        let (dep, rhs) = match pattern.node() {
            ExprNode::Jet(j) if j.index.count(Var::T) == 1 && j.order() == 1 => {
                (j.dep, replacement.clone())
            }
            _ => return Err(ExprError::NotTimeJet(pattern.to_string())),
        };
        eliminate_time_jets(self, dep, &rhs)
    }
}

/// Repeatedly rewrites every jet of `dep` carrying at least one t-derivative
/// as a total derivative of `rhs` (the solved form of u_t) until none remain.
/// Each pass strictly lowers the maximal t-count, so this terminates.
pub(crate) fn eliminate_time_jets(e: &Expr, dep: Dep, rhs: &Expr) -> Result<Expr, ExprError> {
    let mut cur = e.clone();
    loop {
        let targets: Vec<JetVar> = cur
            .jet_vars()
            .into_iter()
            .filter(|j| j.dep == dep && j.index.count(Var::T) >= 1)
            .collect();
        if targets.is_empty() {
            return Ok(cur);
        }
        let mut map: BTreeMap<JetVar, Expr> = BTreeMap::new();
        for j in targets {
            let lowered = j
                .index
                .lowered(Var::T)
                .expect("jet has a t-derivative by construction");
            let d = rhs.total_derivative_multi(&lowered.vars())?;
            map.insert(j, d);
        }
        cur = cur.replace(&|node| {
            if let ExprNode::Jet(j) = node.node() {
                map.get(j).cloned()
            } else {
                None
            }
        });
    }
}

/// Substitutes an expression for a dependent variable: every jet of `dep`
/// becomes the corresponding total derivative of `value`. Fails if `value`
/// is too shallow in jet headroom for the orders present.
pub fn substitute_dependent(e: &Expr, dep: Dep, value: &Expr) -> Result<Expr, ExprError> {
    let jets = e.jet_vars();
    let mut map: BTreeMap<JetVar, Expr> = BTreeMap::new();
    for j in jets.into_iter().filter(|j| j.dep == dep) {
        map.insert(j, value.total_derivative_multi(&j.index.vars())?);
    }
    Ok(e.replace(&|node| {
        if let ExprNode::Jet(j) = node.node() {
            map.get(j).cloned()
        } else {
            None
        }
    }))
}

/// Renames every jet of `from` into the same jet of `to`.
pub fn rename_dependent(e: &Expr, from: Dep, to: Dep) -> Expr {
    e.replace(&|node| {
        if let ExprNode::Jet(j) = node.node() {
            if j.dep == from {
                return Some(Expr::jet_var(JetVar {
                    dep: to,
                    index: j.index,
                }));
            }
        }
        None
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::params;

    fn x() -> Expr {
        Expr::var(Var::X)
    }
    fn y() -> Expr {
        Expr::var(Var::Y)
    }
    fn rho() -> Expr {
        Expr::jet(Dep::Rho, &[])
    }

    #[test]
    fn linear_coefficient_extraction() {
        // d/d(rho_xx) of i*h^3*(rho_yy - rho_xx) = -i*h^3
        let h = Expr::param(params::PLANCK);
        let rho_xx = Expr::jet(Dep::Rho, &[Var::X, Var::X]);
        let rho_yy = Expr::jet(Dep::Rho, &[Var::Y, Var::Y]);
        let e = Expr::imag() * Expr::powi(h.clone(), 3) * (rho_yy - rho_xx.clone());
        assert_eq!(e.partial_wrt(&rho_xx), -(Expr::imag() * Expr::powi(h, 3)));
    }

    #[test]
    fn partial_of_potential_term() {
        // d/d(rho) of C*(y-x)^2*rho = C*(y-x)^2, and d/dx gives -2C(y-x)rho
        let c = Expr::param("C");
        let e = &c * Expr::powi(&y() - &x(), 2) * rho();
        assert_eq!(e.partial_wrt(&rho()), &c * Expr::powi(&y() - &x(), 2));
        assert_eq!(
            e.partial_wrt(&x()),
            Expr::int(-2) * &c * (&y() - &x()) * rho()
        );
    }

    #[test]
    fn total_derivative_raises_jets() {
        assert_eq!(
            rho().total_derivative(Var::X).unwrap(),
            Expr::jet(Dep::Rho, &[Var::X])
        );
        // Leibniz: D_x((y-x)^2 rho) = -2(y-x)rho + (y-x)^2 rho_x
        let e = Expr::powi(&y() - &x(), 2) * rho();
        let expected = Expr::int(-2) * (&y() - &x()) * rho()
            + Expr::powi(&y() - &x(), 2) * Expr::jet(Dep::Rho, &[Var::X]);
        assert_eq!(e.total_derivative(Var::X).unwrap(), expected);
    }

    #[test]
    fn total_derivative_order_overflow() {
        let j = Expr::jet(Dep::Rho, &[Var::X, Var::X, Var::Y, Var::T]);
        assert!(matches!(
            j.total_derivative(Var::X),
            Err(ExprError::OrderOverflow(..))
        ));
    }

    #[test]
    fn arbitrary_function_chain_rule() {
        // D_x w(y - x) = -w'(y - x)
        let w = Expr::func("w", &y() - &x());
        let expected = -Expr::func_deriv("w", 1, &y() - &x());
        assert_eq!(w.total_derivative(Var::X).unwrap(), expected);
    }

    #[test]
    fn mixed_total_derivatives_commute() {
        let w = Expr::func("w", &y() - &x());
        let e = w * Expr::exp(Expr::powi(&y() - &x(), 2) * Expr::var(Var::T));
        let dxy = e
            .total_derivative(Var::X)
            .unwrap()
            .total_derivative(Var::Y)
            .unwrap();
        let dyx = e
            .total_derivative(Var::Y)
            .unwrap()
            .total_derivative(Var::X)
            .unwrap();
        assert_eq!(dxy, dyx);
    }

    #[test]
    fn plain_substitution() {
        let rho_t = Expr::jet(Dep::Rho, &[Var::T]);
        let e = &rho_t + &rho();
        let out = e.substitute(&rho_t, &-rho(), false).unwrap();
        assert!(out.is_zero());
    }

    #[test]
    fn substitution_rejects_recursive_replacement() {
        let rho_t = Expr::jet(Dep::Rho, &[Var::T]);
        let r = &rho_t + rho();
        assert!(matches!(
            rho().substitute(&rho_t, &r, false),
            Err(ExprError::RecursiveReplacement(_))
        ));
    }

    #[test]
    fn on_shell_rewrites_higher_time_jets() {
        // with rho_t -> -rho, rho_tx must become -rho_x and rho_tt -> +rho
        let rho_t = Expr::jet(Dep::Rho, &[Var::T]);
        let rho_tx = Expr::jet(Dep::Rho, &[Var::T, Var::X]);
        let rho_tt = Expr::jet(Dep::Rho, &[Var::T, Var::T]);
        let minus_rho = -rho();
        let e = &rho_tx + &rho_tt;
        let out = e.substitute(&rho_t, &minus_rho, true).unwrap();
        assert_eq!(out, -Expr::jet(Dep::Rho, &[Var::X]) + rho());
    }

    #[test]
    fn dependent_substitution_applies_chain() {
        // substituting rho := x^2*t into rho_xt yields 2x
        let e = Expr::jet(Dep::Rho, &[Var::X, Var::T]);
        let val = Expr::powi(x(), 2) * Expr::var(Var::T);
        let out = substitute_dependent(&e, Dep::Rho, &val).unwrap();
        assert_eq!(out, Expr::int(2) * x());
    }
}
