//! Point-symmetry machinery: prolongation, invariance residuals, the
//! generator catalog with conjectured repairs, determining-system export,
//! Lie-algebra structure, and group-invariant reduction.

pub mod algebra;
pub mod determining;
pub mod reduction;

pub use algebra::{commutator, jacobi_defect, structure_constants, StructureConstants};
pub use determining::{determining_system, instantiate_ansatz, DeterminingEquation};
pub use reduction::{
    invariant_solution, invariants_of, reduce, InvariantSolution, Invariants, Reduction,
};

use crate::expr::{params, Dep, Expr, ExprError, ExprNode, JetVar, Var};
use crate::model::{ModelError, PdeSystem};
use thiserror::Error;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum SymmetryError {
    #[error("unsupported generator class: {0}")]
    UnsupportedClass(String),
    #[error("invariants do not close: reduced residual still depends on {0}")]
    IncompleteInvariants(String),
    #[error("reduced equation is not a first-order linear homogeneous ODE: {0}")]
    NotFirstOrder(String),
    #[error("basis fields are linearly dependent")]
    DependentBasis,
    #[error("cannot express bracket in the basis: {0}")]
    NotExpressible(String),
    #[error("generator coefficient contains the dependent variable: {0}")]
    DependentCoefficient(String),
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Model(#[from] ModelError),
}

/// A point-symmetry generator on (x, y, t, u)-space: coefficients of the
/// partial derivatives in x, y, t and the dependent variable.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorField {
    pub xi_x: Expr,
    pub xi_y: Expr,
    pub xi_t: Expr,
    pub eta: Expr,
    pub label: Option<String>,
}

impl VectorField {
    pub fn new(xi_x: Expr, xi_y: Expr, xi_t: Expr, eta: Expr) -> VectorField {
        VectorField {
            xi_x,
            xi_y,
            xi_t,
            eta,
            label: None,
        }
    }

    pub fn labeled(self, label: &str) -> VectorField {
        VectorField {
            label: Some(label.to_string()),
            ..self
        }
    }

    pub fn zero() -> VectorField {
        VectorField::new(Expr::zero(), Expr::zero(), Expr::zero(), Expr::zero())
    }

    pub fn is_zero(&self) -> bool {
        self.xi_x.is_zero() && self.xi_y.is_zero() && self.xi_t.is_zero() && self.eta.is_zero()
    }

    pub fn xi(&self, v: Var) -> &Expr {
        match v {
            Var::X => &self.xi_x,
            Var::Y => &self.xi_y,
            Var::T => &self.xi_t,
            Var::Mu | Var::Nu => panic!("point fields live on (x, y, t, u)"),
        }
    }

    /// Applies the field to a function of (x, y, t, u):
    /// `xi_x f_x + xi_y f_y + xi_t f_t + eta f_u`.
    pub fn apply(&self, f: &Expr, dep: Dep) -> Expr {
        self.xi_x.clone() * f.partial_wrt(&Expr::var(Var::X))
            + self.xi_y.clone() * f.partial_wrt(&Expr::var(Var::Y))
            + self.xi_t.clone() * f.partial_wrt(&Expr::var(Var::T))
            + self.eta.clone() * f.partial_wrt(&Expr::jet(dep, &[]))
    }

    /// Componentwise linear combination `a*self + b*other`.
    pub fn linear_combination(
        a: &Expr,
        v1: &VectorField,
        b: &Expr,
        v2: &VectorField,
    ) -> VectorField {
        VectorField::new(
            a * &v1.xi_x + b * &v2.xi_x,
            a * &v1.xi_y + b * &v2.xi_y,
            a * &v1.xi_t + b * &v2.xi_t,
            a * &v1.eta + b * &v2.eta,
        )
    }

    /// The characteristic `W = eta - xi_t u_t - xi_x u_x - xi_y u_y`.
    pub fn characteristic(&self, dep: Dep) -> Expr {
        self.eta.clone()
            - &self.xi_t * Expr::jet(dep, &[Var::T])
            - &self.xi_x * Expr::jet(dep, &[Var::X])
            - &self.xi_y * Expr::jet(dep, &[Var::Y])
    }

    pub fn display_label(&self) -> String {
        self.label.clone().unwrap_or_else(|| "field".to_string())
    }
}

impl std::fmt::Display for VectorField {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&crate::lang::print_vectorfield(self))
    }
}

/// A generator together with its second-order prolongation coefficients.
/// The mixed coefficient zeta_xy is carried even though the model contains
/// no u_xy: generic residuals and the current machinery need it.
#[derive(Debug, Clone)]
pub struct ProlongedField {
    pub field: VectorField,
    zeta1: Vec<(Var, Expr)>,
    zeta2: Vec<((Var, Var), Expr)>,
}

impl ProlongedField {
    pub fn zeta1(&self, v: Var) -> Option<&Expr> {
        self.zeta1.iter().find(|(u, _)| *u == v).map(|(_, e)| e)
    }

    pub fn zeta2(&self, a: Var, b: Var) -> Option<&Expr> {
        let key = if a <= b { (a, b) } else { (b, a) };
        self.zeta2.iter().find(|(k, _)| *k == key).map(|(_, e)| e)
    }

    /// Prolongation coefficient for an arbitrary jet of order <= 2
    /// (order 0 gives eta).
    pub fn coefficient(&self, j: &JetVar) -> Option<&Expr> {
        match j.order() {
            0 => Some(&self.field.eta),
            1 => self.zeta1(j.index.vars()[0]),
            2 => {
                let vs = j.index.vars();
                self.zeta2(vs[0], vs[1])
            }
            _ => None,
        }
    }
}

/// Second-order prolongation by the total-derivative recursions
/// `zeta_i = D_i(eta) - sum_j D_i(xi^j) u_j` and
/// `zeta_ij = D_j(zeta_i) - sum_k D_j(xi^k) u_ik`.
pub fn prolong(v: &VectorField, dep: Dep) -> Result<ProlongedField, SymmetryError> {
    let base_vars = [Var::X, Var::Y, Var::T];
    let mut zeta1: Vec<(Var, Expr)> = Vec::new();
    for i in base_vars {
        let mut z = v.eta.total_derivative(i)?;
        for j in base_vars {
            z = z - v.xi(j).total_derivative(i)? * Expr::jet(dep, &[j]);
        }
        zeta1.push((i, z));
    }
    let mut zeta2: Vec<((Var, Var), Expr)> = Vec::new();
    for (a, i) in base_vars.iter().copied().enumerate() {
        for j in base_vars.iter().copied().skip(a) {
            let zi = zeta1
                .iter()
                .find(|(u, _)| *u == i)
                .map(|(_, e)| e.clone())
                .expect("first-order coefficient present");
            let mut z = zi.total_derivative(j)?;
            for k in base_vars {
                z = z - v.xi(k).total_derivative(j)? * Expr::jet(dep, &[i, k]);
            }
            zeta2.push(((i, j), z));
        }
    }
    Ok(ProlongedField {
        field: v.clone(),
        zeta1,
        zeta2,
    })
}

/// Applies the prolonged field to the residual, reduces on-shell and
/// canonicalizes. A zero result certifies the generator as a point symmetry.
/// Generators whose eta involves the generic-solution symbol are reduced
/// modulo that symbol's own copy of the equation as well.
pub fn symmetry_residual(v: &VectorField, p: &PdeSystem) -> Result<Expr, SymmetryError> {
    let pr = prolong(v, p.dep())?;
    let delta = p.residual();
    let mut acc = Expr::zero();
    for var in [Var::X, Var::Y, Var::T] {
        acc = acc + v.xi(var).clone() * delta.partial_wrt(&Expr::var(var));
    }
    for jet in delta.jet_vars() {
        if jet.dep != p.dep() {
            continue;
        }
        let coeff = pr.coefficient(&jet).ok_or_else(|| {
            SymmetryError::UnsupportedClass(format!("residual contains jet {jet} above order 2"))
        })?;
        acc = acc + coeff.clone() * delta.partial_wrt(&Expr::jet_var(jet));
    }
    let mut reduced = p.on_shell(&acc)?;
    if reduced.contains(&Expr::jet(Dep::Sigma, &[Var::T]))
        || !reduced
            .jet_vars()
            .iter()
            .all(|j| j.dep != Dep::Sigma || j.index.count(Var::T) == 0)
    {
        reduced = p.for_dependent(Dep::Sigma).on_shell(&reduced)?;
    }
    Ok(reduced)
}

/// One catalog generator with its label.
#[derive(Debug, Clone)]
pub struct CatalogEntry {
    pub label: String,
    pub field: VectorField,
    /// Whether the entry is expected to verify exactly (the remaining
    /// entries carry known constant-convention defects and are reported
    /// with their residuals).
    pub expected_exact: bool,
}

fn rho0() -> Expr {
    Expr::jet(Dep::Rho, &[])
}

fn x() -> Expr {
    Expr::var(Var::X)
}
fn y() -> Expr {
    Expr::var(Var::Y)
}
fn t() -> Expr {
    Expr::var(Var::T)
}

/// The published seven-generator catalog, exactly as printed.
pub fn catalog() -> Vec<CatalogEntry> {
    let m = Expr::param(params::MASS);
    let h = Expr::param(params::PLANCK);
    let kb = Expr::param(params::KB);
    let temp = Expr::param(params::TEMP);
    let i = Expr::imag();

    let g1 = VectorField::new(Expr::zero(), Expr::zero(), Expr::one(), Expr::zero());
    let g2 = VectorField::new(Expr::zero(), Expr::zero(), rho0(), Expr::zero());
    let g3 = VectorField::new(Expr::one(), Expr::one(), Expr::zero(), Expr::zero());
    let boost_eta = Expr::int(2) * Expr::pi() * &i * &m / &h * (x() - y()) * rho0();
    let g4 = VectorField::new(t(), t(), Expr::zero(), boost_eta);
    let g5 = VectorField::new(
        (x() + Expr::int(2) * y()) / Expr::int(2),
        (Expr::int(2) * x() + y()) / Expr::int(2),
        t(),
        -rho0() / Expr::int(2),
    );
    let beta = &i * &h / (Expr::int(4) * Expr::pi() * &kb * &temp);
    let g6 = VectorField::new(
        Expr::powi(t(), 2) - beta.clone(),
        Expr::powi(t(), 2),
        Expr::zero(),
        Expr::int(4) * Expr::pi() * &i * &m / &h * t() * (x() - y()) * rho0(),
    );
    let g7 = VectorField::new(
        Expr::powi(t(), 3) - Expr::int(3) * &beta * t(),
        Expr::powi(t(), 3),
        Expr::zero(),
        rho0()
            * (&m * x() / (&kb * &temp)
                + Expr::int(6) * Expr::pi() * &i * &m / &h * Expr::powi(t(), 2) * (x() - y())),
    );

    vec![
        CatalogEntry {
            label: "G1".into(),
            field: g1.labeled("G1"),
            expected_exact: true,
        },
        CatalogEntry {
            label: "G2".into(),
            field: g2.labeled("G2"),
            expected_exact: false,
        },
        CatalogEntry {
            label: "G3".into(),
            field: g3.labeled("G3"),
            expected_exact: true,
        },
        CatalogEntry {
            label: "G4".into(),
            field: g4.labeled("G4"),
            expected_exact: true,
        },
        CatalogEntry {
            label: "G5".into(),
            field: g5.labeled("G5"),
            expected_exact: true,
        },
        CatalogEntry {
            label: "G6".into(),
            field: g6.labeled("G6"),
            expected_exact: false,
        },
        CatalogEntry {
            label: "G7".into(),
            field: g7.labeled("G7"),
            expected_exact: false,
        },
    ]
}

/// The infinite family `Sigma(x, y, t) d/drho`. `sigma` may be a concrete
/// expression or the opaque generic-solution symbol; it must not involve
/// the dependent variable.
pub fn make_gamma_inf(sigma: Expr) -> Result<VectorField, SymmetryError> {
    let mut bad = false;
    sigma.visit(&mut |e| {
        if let ExprNode::Jet(j) = e.node() {
            if j.dep == Dep::Rho {
                bad = true;
            }
        }
    });
    if bad {
        return Err(SymmetryError::DependentCoefficient(sigma.to_string()));
    }
    Ok(VectorField::new(Expr::zero(), Expr::zero(), Expr::zero(), sigma).labeled("Ginf"))
}

/// A conjectured correction for a catalog entry that fails verification.
/// Candidates are offered only when the engine verifies them exactly.
#[derive(Debug, Clone)]
pub struct RepairCandidate {
    pub replaces: String,
    pub label: String,
    pub field: VectorField,
    pub note: String,
}

/// Candidate corrections for the catalog entries that fail as printed.
pub fn repair_candidates() -> Vec<RepairCandidate> {
    let m = Expr::param(params::MASS);
    let h = Expr::param(params::PLANCK);
    let g = Expr::param(params::GAMMA);
    let kb = Expr::param(params::KB);
    let temp = Expr::param(params::TEMP);
    let i = Expr::imag();
    let beta_g = &i * &h / (Expr::int(4) * Expr::pi() * &g * &kb * &temp);

    let g2 = VectorField::new(Expr::zero(), Expr::zero(), Expr::zero(), rho0());
    let g6 = VectorField::new(
        Expr::powi(t(), 2) - beta_g.clone(),
        Expr::powi(t(), 2),
        Expr::zero(),
        Expr::int(4) * Expr::pi() * &i * &m / &h * t() * (x() - y()) * rho0(),
    );
    let g7_gamma = VectorField::new(
        Expr::powi(t(), 3) - Expr::int(3) * &beta_g * t(),
        Expr::powi(t(), 3),
        Expr::zero(),
        rho0()
            * (&m * x() / (&kb * &temp)
                + Expr::int(6) * Expr::pi() * &i * &m / &h * Expr::powi(t(), 2) * (x() - y())),
    );
    let g7_full = VectorField::new(
        Expr::powi(t(), 3) - Expr::int(3) * &beta_g * t(),
        Expr::powi(t(), 3),
        Expr::zero(),
        rho0()
            * (Expr::ratio(3, 2) * &m * x() / (&g * &kb * &temp)
                + Expr::int(6) * Expr::pi() * &i * &m / &h * Expr::powi(t(), 2) * (x() - y())),
    );

    vec![
        RepairCandidate {
            replaces: "G2".into(),
            label: "G2'".into(),
            field: g2.labeled("G2'"),
            note: "one-token repair: the linear-superposition scaling rho d/drho \
                   instead of rho d/dt"
                .into(),
        },
        RepairCandidate {
            replaces: "G6".into(),
            label: "G6'".into(),
            field: g6.labeled("G6'"),
            note: "one-token repair: dissipation parameter g restored in the xi_x \
                   denominator"
                .into(),
        },
        RepairCandidate {
            replaces: "G7".into(),
            label: "G7'".into(),
            field: g7_gamma.labeled("G7'"),
            note: "one-token repair attempt: g restored in the xi_x denominator only".into(),
        },
        RepairCandidate {
            replaces: "G7".into(),
            label: "G7''".into(),
            field: g7_full.labeled("G7''"),
            note: "two-site correction: g restored in xi_x and the first eta term \
                   rescaled to 3m x/(2 g kB T)"
                .into(),
        },
    ]
}

/// Verdict of running [`symmetry_residual`] on one generator.
#[derive(Debug, Clone)]
pub struct GeneratorVerdict {
    pub label: String,
    pub residual: Expr,
    pub passes: bool,
    pub repairs: Vec<RepairCandidate>,
}

/// Verifies a list of generators and, for failures, attaches every repair
/// candidate that itself verifies exactly.
pub fn verify_generators(
    fields: &[(String, VectorField)],
    p: &PdeSystem,
) -> Result<Vec<GeneratorVerdict>, SymmetryError> {
    let candidates = repair_candidates();
    let mut out = Vec::new();
    for (label, field) in fields {
        let residual = symmetry_residual(field, p)?;
        let passes = residual.is_zero();
        let mut repairs = Vec::new();
        if !passes {
            for c in candidates.iter().filter(|c| &c.replaces == label) {
                if symmetry_residual(&c.field, p)?.is_zero() {
                    repairs.push(c.clone());
                }
            }
        }
        out.push(GeneratorVerdict {
            label: label.clone(),
            residual,
            passes,
            repairs,
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::canonical_model;

    fn by_label(label: &str) -> VectorField {
        catalog()
            .into_iter()
            .find(|e| e.label == label)
            .unwrap()
            .field
    }

    #[test]
    fn constant_fields_have_zero_prolongation() {
        for label in ["G1", "G3"] {
            let pr = prolong(&by_label(label), Dep::Rho).unwrap();
            for v in [Var::X, Var::Y, Var::T] {
                assert!(pr.zeta1(v).unwrap().is_zero(), "{label} zeta_{v}");
            }
            for (a, b) in [
                (Var::X, Var::X),
                (Var::X, Var::Y),
                (Var::Y, Var::Y),
                (Var::T, Var::T),
            ] {
                assert!(pr.zeta2(a, b).unwrap().is_zero(), "{label} zeta_{a}{b}");
            }
        }
    }

    #[test]
    fn boost_zeta_t_matches_hand_expansion() {
        // for G4 (xi_x = xi_y = t, eta = k (x-y) rho with k = 2 pi I m / h):
        // zeta_t = D_t(eta) - D_t(xi_x) rho_x - D_t(xi_y) rho_y - D_t(xi_t) rho_t
        //        = k (x-y) rho_t - rho_x - rho_y
        let g4 = by_label("G4");
        let pr = prolong(&g4, Dep::Rho).unwrap();
        let k = Expr::int(2) * Expr::pi() * Expr::imag() * Expr::param(params::MASS)
            / Expr::param(params::PLANCK);
        let expected = k * (x() - y()) * Expr::jet(Dep::Rho, &[Var::T])
            - Expr::jet(Dep::Rho, &[Var::X])
            - Expr::jet(Dep::Rho, &[Var::Y]);
        assert_eq!(pr.zeta1(Var::T).unwrap(), &expected);
    }

    #[test]
    fn prolongation_is_linear() {
        let g4 = by_label("G4");
        let g5 = by_label("G5");
        let a = Expr::int(3);
        let b = Expr::ratio(-2, 7);
        let combo = VectorField::linear_combination(&a, &g4, &b, &g5);
        let pr_combo = prolong(&combo, Dep::Rho).unwrap();
        let pr4 = prolong(&g4, Dep::Rho).unwrap();
        let pr5 = prolong(&g5, Dep::Rho).unwrap();
        for v in [Var::X, Var::Y, Var::T] {
            let want = &a * pr4.zeta1(v).unwrap() + &b * pr5.zeta1(v).unwrap();
            assert_eq!(pr_combo.zeta1(v).unwrap(), &want);
        }
        for (p, q) in [(Var::X, Var::X), (Var::X, Var::Y), (Var::Y, Var::Y)] {
            let want = &a * pr4.zeta2(p, q).unwrap() + &b * pr5.zeta2(p, q).unwrap();
            assert_eq!(pr_combo.zeta2(p, q).unwrap(), &want);
        }
    }

    #[test]
    fn translations_are_exact_symmetries() {
        let p = canonical_model();
        assert!(symmetry_residual(&by_label("G1"), &p).unwrap().is_zero());
        assert!(symmetry_residual(&by_label("G3"), &p).unwrap().is_zero());
    }

    #[test]
    fn boost_and_scaling_are_exact_symmetries() {
        let p = canonical_model();
        assert!(symmetry_residual(&by_label("G4"), &p).unwrap().is_zero());
        assert!(symmetry_residual(&by_label("G5"), &p).unwrap().is_zero());
    }

    #[test]
    fn printed_g2_g6_g7_fail_with_nonzero_residuals() {
        let p = canonical_model();
        for label in ["G2", "G6", "G7"] {
            let r = symmetry_residual(&by_label(label), &p).unwrap();
            assert!(!r.is_zero(), "{label} unexpectedly verified");
        }
    }

    #[test]
    fn repaired_g2_and_g6_verify_exactly() {
        let p = canonical_model();
        let reps = repair_candidates();
        let g2p = &reps.iter().find(|r| r.label == "G2'").unwrap().field;
        let g6p = &reps.iter().find(|r| r.label == "G6'").unwrap().field;
        assert!(symmetry_residual(g2p, &p).unwrap().is_zero());
        assert!(symmetry_residual(g6p, &p).unwrap().is_zero());
    }

    #[test]
    fn gamma_inf_with_zero_is_zero_field() {
        let v = make_gamma_inf(Expr::zero()).unwrap();
        assert!(v.is_zero());
        assert!(make_gamma_inf(rho0()).is_err());
    }

    #[test]
    fn gamma_inf_with_opaque_solution_symbol_verifies() {
        let p = canonical_model();
        let v = make_gamma_inf(Expr::jet(Dep::Sigma, &[])).unwrap();
        assert!(symmetry_residual(&v, &p).unwrap().is_zero());
    }

    #[test]
    fn gamma_inf_with_closed_form_verifies() {
        let p = canonical_model();
        let sol = invariant_solution(&p, &by_label("G3")).unwrap().solution;
        let v = make_gamma_inf(sol).unwrap();
        assert!(symmetry_residual(&v, &p).unwrap().is_zero());
    }

    #[test]
    fn catalog_matches_published_coefficient_strings() {
        let g4 = by_label("G4");
        let eta = crate::lang::parse_expr("(2*pi*I*m/h)*(x-y)*rho").unwrap();
        assert_eq!(g4.eta, eta);
        let g5 = by_label("G5");
        assert_eq!(g5.xi_x, crate::lang::parse_expr("(x+2*y)/2").unwrap());
        assert_eq!(g5.xi_y, crate::lang::parse_expr("(2*x+y)/2").unwrap());
        assert_eq!(g5.eta, crate::lang::parse_expr("-rho/2").unwrap());
    }
}
