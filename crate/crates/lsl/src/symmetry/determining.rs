//! Determining-system generation: the invariance condition with opaque
//! ansatz coefficients, reduced on-shell and split by jet monomials. The
//! system is generated and exported; solving it is out of scope.

use super::{symmetry_residual, SymmetryError, VectorField};
use crate::expr::{AnsatzFn, AnsatzIndex, Dep, Expr, ExprNode, Var};
use crate::model::PdeSystem;
use std::collections::BTreeMap;

/// One linear determining equation: the given coefficient must vanish for
/// every occurrence of the jet monomial.
#[derive(Debug, Clone, PartialEq)]
pub struct DeterminingEquation {
    /// Product of jet variables of order >= 1 (the number 1 for the
    /// jet-free part).
    pub monomial: Expr,
    /// Coefficient in x, y, t, rho, parameters, and ansatz derivatives.
    pub coefficient: Expr,
}

/// Builds the determining system for point symmetries of `p`. The ansatz
/// coefficients are the opaque functions xi_x, xi_y, xi_t, eta of
/// (x, y, t, rho); the invariance condition is reduced on-shell and the
/// coefficients of distinct monomials in the remaining jet variables are
/// returned.
pub fn determining_system(p: &PdeSystem) -> Result<Vec<DeterminingEquation>, SymmetryError> {
    assert_eq!(
        p.dep(),
        Dep::Rho,
        "the determining ansatz is defined over (x, y, t, rho)"
    );
    let generic = VectorField::new(
        Expr::ansatz(AnsatzFn::XiX, AnsatzIndex::empty()),
        Expr::ansatz(AnsatzFn::XiY, AnsatzIndex::empty()),
        Expr::ansatz(AnsatzFn::XiT, AnsatzIndex::empty()),
        Expr::ansatz(AnsatzFn::Eta, AnsatzIndex::empty()),
    );
    let condition = symmetry_residual(&generic, p)?;

    let mut groups: BTreeMap<Expr, Expr> = BTreeMap::new();
    for term in condition.terms() {
        let (c, key) = term.coeff_and_key();
        let factors: Vec<Expr> = match key.node() {
            ExprNode::Prod(fs) => fs.clone(),
            _ if key.is_one() => Vec::new(),
            _ => vec![key.clone()],
        };
        let mut jet_part: Vec<Expr> = Vec::new();
        let mut coeff_part: Vec<Expr> = vec![Expr::num(c)];
        for f in factors {
            let base = match f.node() {
                ExprNode::Pow(b, _) => b.clone(),
                _ => f.clone(),
            };
            let is_jet = matches!(base.node(), ExprNode::Jet(j) if j.order() >= 1);
            if is_jet {
                jet_part.push(f);
            } else {
                coeff_part.push(f);
            }
        }
        let mkey = Expr::product(jet_part);
        let entry = groups.entry(mkey).or_insert_with(Expr::zero);
        *entry = entry.clone() + Expr::product(coeff_part);
    }
    groups.retain(|_, v| !v.is_zero());
    Ok(groups
        .into_iter()
        .map(|(monomial, coefficient)| DeterminingEquation {
            monomial,
            coefficient,
        })
        .collect())
}

/// Substitutes a concrete generator into an expression over ansatz
/// derivatives: each `xi[..]`/`eta[..]` atom becomes the corresponding
/// iterated partial derivative of the generator's coefficient.
pub fn instantiate_ansatz(e: &Expr, v: &VectorField) -> Expr {
    e.replace(&|node| {
        if let ExprNode::Ansatz(f, ix) = node.node() {
            let coeff = match f {
                AnsatzFn::XiX => &v.xi_x,
                AnsatzFn::XiY => &v.xi_y,
                AnsatzFn::XiT => &v.xi_t,
                AnsatzFn::Eta => &v.eta,
            };
            let mut out = coeff.clone();
            for axis in ix.axis_names() {
                let s = match axis {
                    "x" => Expr::var(Var::X),
                    "y" => Expr::var(Var::Y),
                    "t" => Expr::var(Var::T),
                    "rho" => Expr::jet(Dep::Rho, &[]),
                    _ => unreachable!(),
                };
                out = out.partial_wrt(&s);
            }
            Some(out)
        } else {
            None
        }
    })
}
