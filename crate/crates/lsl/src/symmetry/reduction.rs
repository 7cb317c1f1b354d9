//! Group-invariant reduction: invariants from the characteristic system,
//! rewriting the equation in invariant coordinates, and the closed-form
//! invariant solution for first-order reduced equations.

use super::{SymmetryError, VectorField};
use crate::expr::{Dep, Expr, ExprNode, Var};
use crate::model::{ConventionFlag, PdeSystem};
use crate::reference::{structural_diff, DiffVerdict};
use num::rational::BigRational;
use num::traits::{One, Zero};

/// Invariants of a generator: the two invariant coordinates, the invariant
/// dependent combination, and the rectifying chart used by [`reduce`].
#[derive(Debug, Clone)]
pub struct Invariants {
    pub mu: Expr,
    pub nu: Expr,
    pub phi: Expr,
    /// coefficients of (x, y, t) in mu and nu
    mu_coeffs: [BigRational; 3],
    nu_coeffs: [BigRational; 3],
    /// x, y, t expressed in (mu, nu, s) where s is the rectifying coordinate
    x_of: Expr,
    y_of: Expr,
    t_of: Expr,
}

impl Invariants {
    pub fn as_list(&self) -> [Expr; 3] {
        [self.mu.clone(), self.nu.clone(), self.phi.clone()]
    }
}

fn as_rational(e: &Expr) -> Option<BigRational> {
    e.as_num().cloned()
}

fn aux_s() -> Expr {
    Expr::param("_s")
}

/// Functionally independent invariants from the characteristic system.
/// Supported class: constant translation-type generators (numeric xi
/// coefficients, eta = 0). Other generators, including affine ones, raise
/// an unsupported-class error naming the offending coefficient.
pub fn invariants_of(p: &PdeSystem, v: &VectorField) -> Result<Invariants, SymmetryError> {
    if !v.eta.is_zero() {
        return Err(SymmetryError::UnsupportedClass(format!(
            "eta = {} (only eta = 0 generators are reduced)",
            v.eta
        )));
    }
    let a = as_rational(&v.xi_x).ok_or_else(|| {
        SymmetryError::UnsupportedClass(format!("xi_x = {} is not a numeric constant", v.xi_x))
    })?;
    let b = as_rational(&v.xi_y).ok_or_else(|| {
        SymmetryError::UnsupportedClass(format!("xi_y = {} is not a numeric constant", v.xi_y))
    })?;
    let c = as_rational(&v.xi_t).ok_or_else(|| {
        SymmetryError::UnsupportedClass(format!("xi_t = {} is not a numeric constant", v.xi_t))
    })?;
    if a.is_zero() && b.is_zero() && c.is_zero() {
        return Err(SymmetryError::UnsupportedClass(
            "the zero field has no reduction".into(),
        ));
    }

    // linear forms annihilated by a d/dx + b d/dy + c d/dt, plus a
    // rectifying form s with v(s) = 1
    let (mu_c, nu_c, s_c): ([BigRational; 3], [BigRational; 3], [BigRational; 3]) =
        if a.is_zero() && b.is_zero() {
            // pure time translation: invariants x and y
            (
                [BigRational::one(), BigRational::zero(), BigRational::zero()],
                [BigRational::zero(), BigRational::one(), BigRational::zero()],
                [
                    BigRational::zero(),
                    BigRational::zero(),
                    BigRational::one() / &c,
                ],
            )
        } else {
            // mu = a y - b x
            let mu = [-b.clone(), a.clone(), BigRational::zero()];
            let (nu, s) = if c.is_zero() {
                // nu = t; s rectifies along the nonzero spatial direction
                let s = if !a.is_zero() {
                    [
                        BigRational::one() / &a,
                        BigRational::zero(),
                        BigRational::zero(),
                    ]
                } else {
                    [
                        BigRational::zero(),
                        BigRational::one() / &b,
                        BigRational::zero(),
                    ]
                };
                (
                    [BigRational::zero(), BigRational::zero(), BigRational::one()],
                    s,
                )
            } else {
                let nu = if !a.is_zero() {
                    [c.clone(), BigRational::zero(), -a.clone()]
                } else {
                    [BigRational::zero(), c.clone(), -b.clone()]
                };
                (
                    nu,
                    [
                        BigRational::zero(),
                        BigRational::zero(),
                        BigRational::one() / &c,
                    ],
                )
            };
            (mu, nu, s)
        };

    let form = |coeffs: &[BigRational; 3]| {
        Expr::num(coeffs[0].clone()) * Expr::var(Var::X)
            + Expr::num(coeffs[1].clone()) * Expr::var(Var::Y)
            + Expr::num(coeffs[2].clone()) * Expr::var(Var::T)
    };
    let mu = form(&mu_c);
    let nu = form(&nu_c);

    // invert the chart (mu, nu, s) -> (x, y, t)
    let m = [mu_c.clone(), nu_c.clone(), s_c];
    let inv = invert3(&m)
        .ok_or_else(|| SymmetryError::UnsupportedClass("degenerate invariant chart".to_string()))?;
    let targets = [Expr::var(Var::Mu), Expr::var(Var::Nu), aux_s()];
    let back = |row: &[BigRational; 3]| {
        Expr::sum(
            row.iter()
                .zip(&targets)
                .map(|(q, t)| Expr::num(q.clone()) * t.clone()),
        )
    };

    Ok(Invariants {
        mu,
        nu,
        phi: Expr::jet(p.dep(), &[]),
        mu_coeffs: mu_c,
        nu_coeffs: nu_c,
        x_of: back(&inv[0]),
        y_of: back(&inv[1]),
        t_of: back(&inv[2]),
    })
}

#[allow(clippy::needless_range_loop)]
fn invert3(m: &[[BigRational; 3]; 3]) -> Option<[[BigRational; 3]; 3]> {
    let mut a: Vec<Vec<BigRational>> = (0..3)
        .map(|r| {
            let mut row: Vec<BigRational> = m[r].to_vec();
            for k in 0..3 {
                row.push(if k == r {
                    BigRational::one()
                } else {
                    BigRational::zero()
                });
            }
            row
        })
        .collect();
    for col in 0..3 {
        let pivot = (col..3).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        let p = a[col][col].clone();
        for k in 0..6 {
            a[col][k] = &a[col][k] / &p;
        }
        for r in 0..3 {
            if r == col || a[r][col].is_zero() {
                continue;
            }
            let f = a[r][col].clone();
            for k in 0..6 {
                let sub = &f * &a[col][k];
                a[r][k] = &a[r][k] - sub;
            }
        }
    }
    let mut out = [
        [
            BigRational::zero(),
            BigRational::zero(),
            BigRational::zero(),
        ],
        [
            BigRational::zero(),
            BigRational::zero(),
            BigRational::zero(),
        ],
        [
            BigRational::zero(),
            BigRational::zero(),
            BigRational::zero(),
        ],
    ];
    for r in 0..3 {
        for k in 0..3 {
            out[r][k] = a[r][3 + k].clone();
        }
    }
    Some(out)
}

/// Result of rewriting a system in invariant coordinates.
#[derive(Debug, Clone)]
pub struct Reduction {
    pub system: PdeSystem,
    pub invariants: Invariants,
    pub flags: Vec<ConventionFlag>,
}

/// Rewrites the residual in the invariants of `v`. Jets become chain-rule
/// combinations of Phi(mu, nu) derivatives; base variables are replaced
/// through the inverse chart; the result must not depend on the rectifying
/// coordinate, or the invariant set is reported as incomplete.
pub fn reduce(p: &PdeSystem, v: &VectorField) -> Result<Reduction, SymmetryError> {
    let inv = invariants_of(p, v)?;
    let delta = p.residual();
    for j in delta.jet_vars() {
        if j.dep != p.dep() {
            return Err(SymmetryError::UnsupportedClass(format!(
                "residual involves a second dependent variable {}",
                j.dep
            )));
        }
    }
    // chain rule with constant-coefficient invariant forms
    let var_slot = |w: Var| match w {
        Var::X => 0,
        Var::Y => 1,
        Var::T => 2,
        _ => unreachable!("base system variables"),
    };
    let reduced_jet = |j: &crate::expr::JetVar| -> Result<Expr, SymmetryError> {
        let mut e = Expr::jet(Dep::Phi, &[]);
        for w in j.index.vars() {
            let slot = var_slot(w);
            let dmu = e.total_derivative(Var::Mu)?;
            let dnu = e.total_derivative(Var::Nu)?;
            e = Expr::num(inv.mu_coeffs[slot].clone()) * dmu
                + Expr::num(inv.nu_coeffs[slot].clone()) * dnu;
        }
        Ok(e)
    };
    let mut jet_map: Vec<(crate::expr::JetVar, Expr)> = Vec::new();
    for j in delta.jet_vars() {
        jet_map.push((j, reduced_jet(&j)?));
    }
    let with_jets = delta.replace(&|e| {
        if let ExprNode::Jet(j) = e.node() {
            return jet_map.iter().find(|(k, _)| k == j).map(|(_, v)| v.clone());
        }
        None
    });
    let substituted = with_jets.replace(&|e| match e.node() {
        ExprNode::Var(Var::X) => Some(inv.x_of.clone()),
        ExprNode::Var(Var::Y) => Some(inv.y_of.clone()),
        ExprNode::Var(Var::T) => Some(inv.t_of.clone()),
        _ => None,
    });
    if substituted.contains(&aux_s()) {
        return Err(SymmetryError::IncompleteInvariants(
            "the rectifying coordinate".to_string(),
        ));
    }
    let normalized = substituted.primitive_normalized();
    let mut flags = Vec::new();
    if let DiffVerdict::MatchModuloConstants { diff } =
        structural_diff(&normalized, &crate::reference::reduced_equation())
    {
        flags.push(ConventionFlag {
            context: "reduced equation".to_string(),
            detail: format!(
                "matches the reference form only after erasing powers of m and h \
                 (derived coefficient carries m, the reference prints m^2; \
                 difference: {diff})"
            ),
        });
    }
    let system = PdeSystem::new(
        vec![Var::Mu, Var::Nu],
        Dep::Phi,
        Var::Nu,
        normalized,
        p.positive_params().to_vec(),
    )?;
    Ok(Reduction {
        system,
        invariants: inv,
        flags,
    })
}

/// A group-invariant closed-form solution mapped back to base coordinates.
#[derive(Debug, Clone)]
pub struct InvariantSolution {
    pub solution: Expr,
    /// c(mu) with Phi_nu = c(mu) Phi, still in reduced coordinates.
    pub decay_coefficient: Expr,
    pub reduction: Reduction,
    pub flags: Vec<ConventionFlag>,
}

fn invertible_coefficient(e: &Expr) -> bool {
    match e.node() {
        ExprNode::Num(q) => !q.is_zero(),
        ExprNode::ImagUnit | ExprNode::Pi | ExprNode::Param(_) | ExprNode::Var(_) => true,
        ExprNode::Pow(b, _) => invertible_coefficient(b),
        ExprNode::Prod(fs) => fs.iter().all(invertible_coefficient),
        _ => false,
    }
}

/// Solves a first-order linear homogeneous reduced equation
/// `A(mu) Phi_nu + B(mu) Phi = 0` as `Phi = f(mu) exp(-(B/A) nu)` and maps
/// back to (x, y, t). The arbitrary function is named `varrho` for the
/// density system and `w` for the adjoint variable.
pub fn invariant_solution(
    p: &PdeSystem,
    v: &VectorField,
) -> Result<InvariantSolution, SymmetryError> {
    let red = reduce(p, v)?;
    let res = red.system.residual().clone();
    let phi_nu = Expr::jet(Dep::Phi, &[Var::Nu]);
    let phi = Expr::jet(Dep::Phi, &[]);
    let a = res.partial_wrt(&phi_nu);
    let b = res.partial_wrt(&phi);
    let recomposed = &a * &phi_nu + &b * &phi;
    if !(res.clone() - recomposed).is_zero()
        || !a.jet_vars().is_empty()
        || !b.jet_vars().is_empty()
        || a.is_zero()
    {
        return Err(SymmetryError::NotFirstOrder(res.to_string()));
    }
    if !invertible_coefficient(&a) {
        return Err(SymmetryError::NotFirstOrder(format!(
            "cannot divide by the Phi_nu coefficient {a}"
        )));
    }
    let c = -(b / &a);
    if c.contains(&Expr::var(Var::Nu)) {
        return Err(SymmetryError::NotFirstOrder(format!(
            "decay coefficient {c} depends on nu"
        )));
    }
    let fname = match p.dep() {
        Dep::Rho => "varrho",
        Dep::Theta => "w",
        _ => "f",
    };
    let reduced_solution =
        Expr::func(fname, Expr::var(Var::Mu)) * Expr::exp(&c * Expr::var(Var::Nu));
    let solution = reduced_solution.replace(&|e| match e.node() {
        ExprNode::Var(Var::Mu) => Some(red.invariants.mu.clone()),
        ExprNode::Var(Var::Nu) => Some(red.invariants.nu.clone()),
        _ => None,
    });
    let mut flags = red.flags.clone();
    let reference = match p.dep() {
        Dep::Rho => Some(crate::reference::closed_form_solution()),
        Dep::Theta => Some(crate::reference::adjoint_invariant_solution()),
        _ => None,
    };
    if let Some(r) = reference {
        if let DiffVerdict::MatchModuloConstants { .. } = structural_diff(&solution, &r) {
            flags.push(ConventionFlag {
                context: "invariant solution".to_string(),
                detail: "exponent matches the reference only after erasing powers of m \
                         and h (derived m/h^2, reference m^2/hbar^2)"
                    .to_string(),
            });
        }
    }
    Ok(InvariantSolution {
        solution,
        decay_coefficient: c,
        reduction: red,
        flags,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::params;
    use crate::model::canonical_model;
    use crate::symmetry::catalog;

    fn g(label: &str) -> VectorField {
        catalog()
            .into_iter()
            .find(|e| e.label == label)
            .unwrap()
            .field
    }

    #[test]
    fn invariants_of_space_translation() {
        let p = canonical_model();
        let inv = invariants_of(&p, &g("G3")).unwrap();
        assert_eq!(inv.mu, Expr::var(Var::Y) - Expr::var(Var::X));
        assert_eq!(inv.nu, Expr::var(Var::T));
        assert_eq!(inv.phi, Expr::jet(Dep::Rho, &[]));
    }

    #[test]
    fn invariants_of_time_translation() {
        let p = canonical_model();
        let inv = invariants_of(&p, &g("G1")).unwrap();
        assert_eq!(inv.as_list()[0], Expr::var(Var::X));
        assert_eq!(inv.as_list()[1], Expr::var(Var::Y));
    }

    #[test]
    fn invariants_are_annihilated_by_the_field() {
        let p = canonical_model();
        for label in ["G1", "G3"] {
            let v = g(label);
            let inv = invariants_of(&p, &v).unwrap();
            for i in inv.as_list() {
                assert!(v.apply(&i, Dep::Rho).is_zero(), "{label} fails on {i}");
            }
        }
    }

    #[test]
    fn scaling_field_is_reported_unsupported() {
        let p = canonical_model();
        assert!(matches!(
            invariants_of(&p, &g("G5")),
            Err(SymmetryError::UnsupportedClass(_))
        ));
    }

    #[test]
    fn reduction_along_diagonal_translation() {
        let p = canonical_model();
        let red = reduce(&p, &g("G3")).unwrap();
        // h^2 Phi_nu + 8 pi^2 m g kB T mu^2 Phi, with the mass to the first power
        let expected = Expr::powi(Expr::param(params::PLANCK), 2) * Expr::jet(Dep::Phi, &[Var::Nu])
            + Expr::int(8)
                * Expr::powi(Expr::pi(), 2)
                * Expr::param(params::MASS)
                * Expr::param(params::GAMMA)
                * Expr::param(params::KB)
                * Expr::param(params::TEMP)
                * Expr::powi(Expr::var(Var::Mu), 2)
                * Expr::jet(Dep::Phi, &[]);
        assert_eq!(red.system.residual(), &expected);
        // no second derivative in mu survives
        assert!(!red
            .system
            .residual()
            .contains(&Expr::jet(Dep::Phi, &[Var::Mu, Var::Mu])));
        // the m-power discrepancy is flagged, not absorbed
        assert_eq!(red.flags.len(), 1);
    }

    #[test]
    fn trivial_reduction_of_autonomous_equation() {
        // rho_t = 0 reduced along the time translation collapses to 0 = 0
        let p = PdeSystem::new(
            vec![Var::X, Var::Y, Var::T],
            Dep::Rho,
            Var::T,
            Expr::jet(Dep::Rho, &[Var::T]),
            vec![],
        )
        .unwrap();
        let red = reduce(&p, &g("G1")).unwrap();
        assert!(red.system.residual().is_zero());
    }

    #[test]
    fn closed_form_solution_and_residual_check() {
        let p = canonical_model();
        let sol = invariant_solution(&p, &g("G3")).unwrap();
        // varrho(y-x) * exp(-8 pi^2 m g kB T (y-x)^2 t / h^2)
        let s = Expr::var(Var::Y) - Expr::var(Var::X);
        let coeff = Expr::int(8)
            * Expr::powi(Expr::pi(), 2)
            * Expr::param(params::MASS)
            * Expr::param(params::GAMMA)
            * Expr::param(params::KB)
            * Expr::param(params::TEMP)
            / Expr::powi(Expr::param(params::PLANCK), 2);
        let expected = Expr::func("varrho", s.clone())
            * Expr::exp(-coeff * Expr::powi(s, 2) * Expr::var(Var::T));
        assert_eq!(sol.solution, expected);
        // substitution back into the residual gives exact symbolic zero for
        // arbitrary varrho
        let resid = p.apply_to(&sol.solution).unwrap();
        assert!(resid.is_zero());
    }

    #[test]
    fn substituting_invariants_back_recovers_base_coordinates() {
        // replacing mu -> y - x, nu -> t and mapping the reduced unknown
        // onto the density turns the reduced equation into the ridge
        // restriction of the model: h^2 rho_t + 8 pi^2 m g kB T (y-x)^2 rho
        let p = canonical_model();
        let red = reduce(&p, &g("G3")).unwrap();
        let back = red
            .system
            .residual()
            .replace(&|e| match e.node() {
                crate::expr::ExprNode::Var(Var::Mu) => Some(red.invariants.mu.clone()),
                crate::expr::ExprNode::Var(Var::Nu) => Some(red.invariants.nu.clone()),
                crate::expr::ExprNode::Jet(j) if j.dep == Dep::Phi => {
                    Some(Expr::jet_var(crate::expr::JetVar {
                        dep: Dep::Rho,
                        index: j.index,
                    }))
                }
                _ => None,
            })
            .replace(&|e| match e.node() {
                // reduced time derivatives live on nu; rename onto t
                crate::expr::ExprNode::Jet(j)
                    if j.dep == Dep::Rho && j.index.count(Var::Nu) > 0 =>
                {
                    let mut vars: Vec<Var> = j
                        .index
                        .vars()
                        .into_iter()
                        .map(|v| if v == Var::Nu { Var::T } else { v })
                        .collect();
                    vars.sort();
                    Some(Expr::jet(Dep::Rho, &vars))
                }
                _ => None,
            });
        assert!(back.contains(&Expr::var(Var::X)));
        assert!(back.contains(&Expr::var(Var::Y)));
        let lead = Expr::int(4) * Expr::pi() * Expr::param(params::MASS);
        let spatial_part = Expr::imag()
            * Expr::powi(Expr::param(params::PLANCK), 3)
            * (Expr::jet(Dep::Rho, &[Var::Y, Var::Y]) - Expr::jet(Dep::Rho, &[Var::X, Var::X]));
        let expected = (p.residual().clone() - spatial_part) / lead;
        assert_eq!(back, expected);
    }

    #[test]
    fn flow_of_a_verified_symmetry_preserves_the_solution_family() {
        // first-order flow rho + eps * W[rho] of a verified generator
        // applied to the closed-form family: the residual must grow no
        // faster than eps^2 (for this linear model it stays at rounding
        // noise on the sample grid)
        use crate::expr::eval::{Bindings, FnTable};
        let p = canonical_model();
        let sol = invariant_solution(&p, &g("G3")).unwrap().solution;
        let eps = 1e-6;
        for label in ["G1", "G4", "G5"] {
            let v = g(label);
            // W[sol] = eta[sol] - xi_x sol_x - xi_y sol_y - xi_t sol_t
            let w = crate::expr::calculus::substitute_dependent(
                &v.characteristic(Dep::Rho),
                Dep::Rho,
                &sol,
            )
            .unwrap();
            let flowed = &sol + Expr::ratio(1, 1_000_000) * w;
            let residual = p.apply_to(&flowed).unwrap();
            // numeric bound on a sample grid
            let mut fns = FnTable::new();
            fns.insert_gauss_quarter("varrho");
            let mut worst: f64 = 0.0;
            for &(x, y, t) in &[(0.3, 0.9, 0.2), (-0.7, 0.4, 0.5), (0.0, 1.1, 0.8)] {
                let mut b = Bindings::new();
                b.set_var(Var::X, x).set_var(Var::Y, y).set_var(Var::T, t);
                for (name, val) in crate::numeric::reference_parameter_binding() {
                    b.set_param(name, val);
                }
                worst = worst.max(residual.eval_numeric(&b, &fns).unwrap().norm());
            }
            assert!(
                worst < 10.0 * eps * eps,
                "{label}: first-order flow residual {worst:.3e} exceeds O(eps^2)"
            );
        }
    }

    #[test]
    fn no_dissipation_means_time_independent_solution() {
        let p = canonical_model();
        let sol = invariant_solution(&p, &g("G3")).unwrap();
        let frozen = sol
            .solution
            .substitute(&Expr::param(params::GAMMA), &Expr::zero(), false)
            .unwrap();
        let s = Expr::var(Var::Y) - Expr::var(Var::X);
        assert_eq!(frozen, Expr::func("varrho", s));
    }
}
