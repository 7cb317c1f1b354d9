//! The non-Noetherian conservation pipeline: formal Lagrangian,
//! Euler-Lagrange derivative, adjoint equation and its invariant solution,
//! conserved-vector assembly from the Noether-operator expansion, and
//! on-shell divergence certification.

use crate::expr::calculus::substitute_dependent;
use crate::expr::eval::{certify_zero, lsl_seed, ZeroCertificate};
use crate::expr::{Dep, Expr, ExprError, Var};
use crate::model::{ConventionFlag, ModelError, PdeSystem};
use crate::reference::{structural_diff, DiffVerdict};
use crate::symmetry::{invariant_solution, InvariantSolution, SymmetryError, VectorField};
use thiserror::Error;

#[derive(Debug, Clone, Error)]
pub enum ConservationError {
    #[error("supplied adjoint solution does not solve the adjoint equation; residual = {0}")]
    AdjointCheckFailed(String),
    #[error("divergence certificate failed; residual = {0}")]
    CertificateFailed(String),
    #[error("expression exceeds the order-{max} Lagrangian truncation", max = EL_MAX_ORDER)]
    OrderAboveTruncation,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Symmetry(#[from] SymmetryError),
}

/// The formal Lagrangian `L = theta * Delta` with the adjoint dependent
/// variable it introduces.
#[derive(Debug, Clone)]
pub struct FormalLagrangian {
    pub expr: Expr,
    pub adjoint_dep: Dep,
}

pub fn formal_lagrangian(p: &PdeSystem) -> FormalLagrangian {
    FormalLagrangian {
        expr: Expr::jet(Dep::Theta, &[]) * p.residual().clone(),
        adjoint_dep: Dep::Theta,
    }
}

/// Highest jet order the variational derivative handles.
pub const EL_MAX_ORDER: u32 = 3;

/// The Euler-Lagrange (variational) derivative
/// `delta e / delta u = sum_J (-1)^|J| D_J (de/du_J)` over jet multi-indices
/// up to order 3.
pub fn euler_lagrange(e: &Expr, dep: Dep) -> Result<Expr, ConservationError> {
    let mut acc = Expr::zero();
    for j in e.jet_vars().into_iter().filter(|j| j.dep == dep) {
        if j.order() > EL_MAX_ORDER {
            return Err(ConservationError::OrderAboveTruncation);
        }
        let partial = e.partial_wrt(&Expr::jet_var(j));
        let driven = partial.total_derivative_multi(&j.index.vars())?;
        let sign = if j.order() % 2 == 0 { 1 } else { -1 };
        acc = acc + Expr::int(sign) * driven;
    }
    Ok(acc)
}

/// The adjoint system: residual `delta L / delta rho`, solved for theta_t.
pub fn adjoint(p: &PdeSystem) -> Result<PdeSystem, ConservationError> {
    let lag = formal_lagrangian(p);
    let residual = euler_lagrange(&lag.expr, p.dep())?;
    let sys = PdeSystem::new(
        p.vars().to_vec(),
        Dep::Theta,
        p.time_var(),
        residual,
        p.positive_params().to_vec(),
    )?;
    Ok(sys.with_flag(
        "adjoint equation",
        "matches the reference form only after erasing m (the reference drops m on \
         the theta_t term)",
    ))
}

/// Invariant solution of the adjoint equation under the diagonal
/// translation `d/dx + d/dy`: `w(y-x) exp(+8 pi^2 m g kB T (y-x)^2 t / h^2)`.
pub fn adjoint_invariant_solution(p: &PdeSystem) -> Result<InvariantSolution, ConservationError> {
    let adj = adjoint(p)?;
    let translation = VectorField::new(Expr::one(), Expr::one(), Expr::zero(), Expr::zero())
        .labeled("adjoint G3");
    Ok(invariant_solution(&adj, &translation)?)
}

/// A conserved current triple with its provenance and divergence
/// certificate.
#[derive(Debug, Clone)]
pub struct ConservedVector {
    pub label: String,
    pub phi_t: Expr,
    pub phi_x: Expr,
    pub phi_y: Expr,
    /// generator label and adjoint-solution choice
    pub provenance: String,
    pub certificate: ZeroCertificate,
}

impl ConservedVector {
    pub fn component(&self, v: Var) -> &Expr {
        match v {
            Var::T => &self.phi_t,
            Var::X => &self.phi_x,
            Var::Y => &self.phi_y,
            _ => panic!("currents live on (t, x, y)"),
        }
    }

    /// Copy with one component scaled; used by mutation controls.
    pub fn with_scaled_component(&self, v: Var, factor: i64) -> ConservedVector {
        let mut out = self.clone();
        let scale = |e: &Expr| Expr::int(factor) * e;
        match v {
            Var::T => out.phi_t = scale(&self.phi_t),
            Var::X => out.phi_x = scale(&self.phi_x),
            Var::Y => out.phi_y = scale(&self.phi_y),
            _ => panic!("currents live on (t, x, y)"),
        }
        out.label = format!("{} (component {} scaled by {})", self.label, v, factor);
        out
    }
}

fn multiplicity(index: &[Var]) -> i64 {
    let mut counts = std::collections::BTreeMap::new();
    for v in index {
        *counts.entry(*v).or_insert(0u64) += 1;
    }
    let fact = |n: u64| (1..=n).product::<u64>().max(1);
    let total = fact(index.len() as u64);
    let rep: u64 = counts.values().map(|&c| fact(c)).product();
    (total / rep) as i64
}

/// Einstein-convention partial of the Lagrangian with respect to the jet
/// with the given ordered index: the symmetric-storage partial divided by
/// the number of orderings of the index.
fn einstein_partial(lagrangian: &Expr, dep: Dep, index: &[Var]) -> Expr {
    let jet = Expr::jet(dep, index);
    let p = lagrangian.partial_wrt(&jet);
    if p.is_zero() {
        return p;
    }
    let m = multiplicity(index);
    p / Expr::int(m)
}

/// Assembles the three currents of the Noether-operator expansion for a
/// point generator, truncated at third-order Lagrangians:
///
/// `phi_i = L xi_i + W [dL/du_i - D_j P_ij + D_j D_k P_ijk]
///          + D_j(W) [P_ij - D_k P_ijk] + D_j D_k (W) P_ijk`
///
/// with `W = eta - xi_t u_t - xi_x u_x - xi_y u_y` and Einstein sums over
/// the base variables. Returned in the order (phi_t, phi_x, phi_y), with
/// the adjoint variable still symbolic.
pub fn noether_currents(
    v: &VectorField,
    lagrangian: &Expr,
    dep: Dep,
) -> Result<[Expr; 3], ConservationError> {
    let base = [Var::X, Var::Y, Var::T];
    let w = v.characteristic(dep);
    let mut out = Vec::with_capacity(3);
    for i in [Var::T, Var::X, Var::Y] {
        let mut acc = lagrangian.clone() * v.xi(i).clone();

        // W-coefficient: dL/du_i - sum_j D_j P_ij + sum_{jk} D_j D_k P_ijk
        let mut wcoeff = lagrangian.partial_wrt(&Expr::jet(dep, &[i]));
        for j in base {
            let p_ij = einstein_partial(lagrangian, dep, &[i, j]);
            if !p_ij.is_zero() {
                wcoeff = wcoeff - p_ij.total_derivative(j)?;
            }
            for k in base {
                let p_ijk = einstein_partial(lagrangian, dep, &[i, j, k]);
                if !p_ijk.is_zero() {
                    wcoeff = wcoeff + p_ijk.total_derivative(j)?.total_derivative(k)?;
                }
            }
        }
        acc = acc + &w * wcoeff;

        // D_j(W)-coefficients: P_ij - sum_k D_k P_ijk
        for j in base {
            let mut coeff = einstein_partial(lagrangian, dep, &[i, j]);
            for k in base {
                let p_ijk = einstein_partial(lagrangian, dep, &[i, j, k]);
                if !p_ijk.is_zero() {
                    coeff = coeff - p_ijk.total_derivative(k)?;
                }
            }
            if !coeff.is_zero() {
                acc = acc + w.total_derivative(j)? * coeff;
            }
        }

        // D_j D_k(W)-coefficients: P_ijk
        for j in base {
            for k in base {
                let p_ijk = einstein_partial(lagrangian, dep, &[i, j, k]);
                if !p_ijk.is_zero() {
                    acc = acc + w.total_derivative(j)?.total_derivative(k)? * p_ijk;
                }
            }
        }
        out.push(acc);
    }
    Ok([out[0].clone(), out[1].clone(), out[2].clone()])
}

/// How the adjoint variable is handled during divergence reduction.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ThetaHandling {
    /// theta was already replaced by an explicit solution; nothing to do.
    Explicit,
    /// eliminate theta time-jets through the adjoint solved form.
    SolvedForm,
}

/// On-shell total divergence `D_t phi_t + D_x phi_x + D_y phi_y` with the
/// zero certificate of the result.
pub fn divergence(
    c: &ConservedVector,
    p: &PdeSystem,
    adjoint_p: &PdeSystem,
    theta: ThetaHandling,
) -> Result<(Expr, ZeroCertificate), ConservationError> {
    let raw = c.phi_t.total_derivative(Var::T)?
        + c.phi_x.total_derivative(Var::X)?
        + c.phi_y.total_derivative(Var::Y)?;
    let mut reduced = p.on_shell(&raw)?;
    if theta == ThetaHandling::SolvedForm {
        reduced = adjoint_p.on_shell(&reduced)?;
    }
    let cert = certify_zero(&reduced, lsl_seed());
    Ok((reduced, cert))
}

/// Certification policy: reproducing the catalog demands exact structural
/// zeros; user-supplied generators may accept the randomized certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CertPolicy {
    RequireExact,
    AllowProbabilistic,
}

/// Builds the conserved vector of a generator for the given Lagrangian and
/// adjoint solution. The adjoint solution is checked first (randomized
/// certificate accepted); the divergence certificate must pass the policy
/// or the construction aborts with the offending residual.
pub fn conserved_vector(
    v: &VectorField,
    lagrangian: &FormalLagrangian,
    theta: &Expr,
    p: &PdeSystem,
    adjoint_p: &PdeSystem,
    policy: CertPolicy,
) -> Result<ConservedVector, ConservationError> {
    let adj_residual = adjoint_p.apply_to(theta)?;
    if !certify_zero(&adj_residual, lsl_seed()).is_zero() {
        return Err(ConservationError::AdjointCheckFailed(
            adj_residual.to_string(),
        ));
    }
    let sym = noether_currents(v, &lagrangian.expr, p.dep())?;
    let subst = |e: &Expr| substitute_dependent(e, lagrangian.adjoint_dep, theta);
    let mut out = ConservedVector {
        label: v.display_label(),
        phi_t: subst(&sym[0])?,
        phi_x: subst(&sym[1])?,
        phi_y: subst(&sym[2])?,
        provenance: format!(
            "generator {}; adjoint invariant solution with arbitrary w",
            v.display_label()
        ),
        certificate: ZeroCertificate::Exact,
    };
    let (residual, cert) = divergence(&out, p, adjoint_p, ThetaHandling::Explicit)?;
    let ok = match policy {
        CertPolicy::RequireExact => cert.is_exact(),
        CertPolicy::AllowProbabilistic => cert.is_zero(),
    };
    if !ok {
        return Err(ConservationError::CertificateFailed(residual.to_string()));
    }
    out.certificate = cert;
    Ok(out)
}

/// Outcome of one catalog triplet: the currents always assemble; the
/// certificate may fail (and then carries the offending residual), which is
/// reported rather than hidden.
#[derive(Debug, Clone)]
pub struct CurrentEntry {
    pub vector: ConservedVector,
    pub certified: bool,
    pub failure_residual: Option<Expr>,
    /// structural diff of (phi_t, phi_x, phi_y) against the printed triplet
    pub reference_diff: Option<[DiffVerdict; 3]>,
    pub flags: Vec<ConventionFlag>,
}

/// The three published triplets, generated from the printed generators
/// (time translation, the rho-d/dt entry, diagonal translation) with the
/// adjoint invariant solution, each with its certificate and a structural
/// diff against the printed components. A fourth, clearly-labeled entry
/// carries the triplet of the conjectured correction rho-d/drho.
pub fn catalog_currents(p: &PdeSystem) -> Result<Vec<CurrentEntry>, ConservationError> {
    let lag = formal_lagrangian(p);
    let adjoint_p = adjoint(p)?;
    let theta = adjoint_invariant_solution(p)?.solution;
    let printed = crate::reference::printed_currents();

    let generators: Vec<(VectorField, Option<usize>)> = {
        let cat = crate::symmetry::catalog();
        let find = |l: &str| cat.iter().find(|e| e.label == l).unwrap().field.clone();
        let g2_repair = crate::symmetry::repair_candidates()
            .into_iter()
            .find(|r| r.label == "G2'")
            .unwrap()
            .field;
        vec![
            (find("G1"), Some(0)),
            (find("G2"), Some(1)),
            (find("G3"), Some(2)),
            (g2_repair, None),
        ]
    };

    let mut out = Vec::new();
    for (field, printed_idx) in generators {
        let sym = noether_currents(&field, &lag.expr, p.dep())?;
        let subst = |e: &Expr| substitute_dependent(e, lag.adjoint_dep, &theta);
        let mut vector = ConservedVector {
            label: field.display_label(),
            phi_t: subst(&sym[0])?,
            phi_x: subst(&sym[1])?,
            phi_y: subst(&sym[2])?,
            provenance: format!(
                "generator {}; adjoint invariant solution with arbitrary w",
                field.display_label()
            ),
            certificate: ZeroCertificate::Exact,
        };
        let (residual, cert) = divergence(&vector, p, &adjoint_p, ThetaHandling::Explicit)?;
        vector.certificate = cert.clone();
        let certified = cert.is_exact();
        let reference_diff = printed_idx.map(|k| {
            [
                structural_diff(&vector.phi_t, &printed[k][0]),
                structural_diff(&vector.phi_x, &printed[k][1]),
                structural_diff(&vector.phi_y, &printed[k][2]),
            ]
        });
        let mut flags = Vec::new();
        if let Some(diffs) = &reference_diff {
            if diffs
                .iter()
                .any(|d| matches!(d, DiffVerdict::MatchModuloConstants { .. }))
            {
                flags.push(ConventionFlag {
                    context: format!("currents of {}", vector.label),
                    detail: "components match the printed forms only after erasing powers \
                             of m and h"
                        .to_string(),
                });
            }
        }
        out.push(CurrentEntry {
            vector,
            certified,
            failure_residual: if certified { None } else { Some(residual) },
            reference_diff,
            flags,
        });
    }
    Ok(out)
}

/// Structural reproduction of the printed general-current formulas by the
/// generic Noether-operator assembly: builds the currents for the opaque
/// ansatz generator and diffs them against the reference forms.
pub fn general_current_reproduction(p: &PdeSystem) -> Result<[DiffVerdict; 3], ConservationError> {
    use crate::expr::{AnsatzFn, AnsatzIndex};
    let generic = VectorField::new(
        Expr::ansatz(AnsatzFn::XiX, AnsatzIndex::empty()),
        Expr::ansatz(AnsatzFn::XiY, AnsatzIndex::empty()),
        Expr::ansatz(AnsatzFn::XiT, AnsatzIndex::empty()),
        Expr::ansatz(AnsatzFn::Eta, AnsatzIndex::empty()),
    );
    let lag = formal_lagrangian(p);
    let derived = noether_currents(&generic, &lag.expr, p.dep())?;
    let w = generic.characteristic(p.dep());
    let reference = crate::reference::general_currents(
        &lag.expr,
        &generic.xi_x,
        &generic.xi_y,
        &generic.xi_t,
        &w,
    )?;
    Ok([
        structural_diff(&derived[0], &reference[0]),
        structural_diff(&derived[1], &reference[1]),
        structural_diff(&derived[2], &reference[2]),
    ])
}

/// Convenience: number of derivative orders of `w` appearing in an
/// expression (used to confirm that certificates hold with the arbitrary
/// function kept symbolic).
pub fn arbitrary_function_orders(e: &Expr, name: &str) -> Vec<u32> {
    let mut orders = std::collections::BTreeSet::new();
    e.visit(&mut |n| {
        if let crate::expr::ExprNode::Func { name: f, order, .. } = n.node() {
            if f == name {
                orders.insert(*order);
            }
        }
    });
    orders.into_iter().collect()
}

/// Scaled-component mutation sweep: returns, for every triplet component,
/// whether the doubled component breaks the certificate (nonzero on-shell
/// divergence).
pub fn mutation_sweep(
    entries: &[CurrentEntry],
    p: &PdeSystem,
    adjoint_p: &PdeSystem,
) -> Result<Vec<(String, bool)>, ConservationError> {
    let mut out = Vec::new();
    for entry in entries {
        for comp in [Var::T, Var::X, Var::Y] {
            let mutated = entry.vector.with_scaled_component(comp, 2);
            let (_, cert) = divergence(&mutated, p, adjoint_p, ThetaHandling::Explicit)?;
            out.push((mutated.label.clone(), !cert.is_zero()));
        }
    }
    Ok(out)
}
