//! Reference forms: the published presentations of the reduced equation,
//! the closed-form solution, the formal Lagrangian, the adjoint equation and
//! its invariant solution, and the three conserved-current triplets. The
//! toolkit derives everything from the model and diffs the results against
//! these forms; the reference carries known constant-convention
//! inconsistencies (hbar vs h, stray powers of m), so diffs are reported as
//! a three-way verdict instead of being silently absorbed.

use crate::expr::{params, Dep, Expr, Var};
use serde::Serialize;

/// Verdict of a structural comparison between a derived expression and its
/// reference form.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", content = "detail")]
pub enum DiffVerdict {
    /// Canonical forms are identical.
    Match,
    /// Identical after erasing all powers of m and h: the difference is a
    /// constant-convention flag, not structure.
    MatchModuloConstants { diff: String },
    /// Structurally different beyond constant conventions; carries the
    /// residual after constant normalization as the mismatch location.
    Mismatch {
        diff: String,
        normalized_diff: String,
    },
}

impl DiffVerdict {
    pub fn is_match(&self) -> bool {
        matches!(self, DiffVerdict::Match)
    }

    pub fn matches_modulo_constants(&self) -> bool {
        matches!(
            self,
            DiffVerdict::Match | DiffVerdict::MatchModuloConstants { .. }
        )
    }
}

/// Erases the constant-convention degrees of freedom: every power of the
/// mass and Planck parameters becomes 1.
pub fn normalize_constants(e: &Expr) -> Expr {
    e.substitute(&Expr::param(params::MASS), &Expr::one(), false)
        .and_then(|e| e.substitute(&Expr::param(params::PLANCK), &Expr::one(), false))
        .expect("parameter substitution is total")
}

/// Three-way structural comparison used for every reference diff.
pub fn structural_diff(derived: &Expr, reference: &Expr) -> DiffVerdict {
    let diff = derived - reference;
    if diff.is_zero() {
        return DiffVerdict::Match;
    }
    let normalized = normalize_constants(derived) - normalize_constants(reference);
    if normalized.is_zero() {
        DiffVerdict::MatchModuloConstants {
            diff: diff.to_string(),
        }
    } else {
        DiffVerdict::Mismatch {
            diff: diff.to_string(),
            normalized_diff: normalized.to_string(),
        }
    }
}

fn m() -> Expr {
    Expr::param(params::MASS)
}
fn g() -> Expr {
    Expr::param(params::GAMMA)
}
fn kb() -> Expr {
    Expr::param(params::KB)
}
fn temp() -> Expr {
    Expr::param(params::TEMP)
}
fn h() -> Expr {
    Expr::param(params::PLANCK)
}
fn s() -> Expr {
    Expr::var(Var::Y) - Expr::var(Var::X)
}
fn rho(vars: &[Var]) -> Expr {
    Expr::jet(Dep::Rho, vars)
}
fn theta(vars: &[Var]) -> Expr {
    Expr::jet(Dep::Theta, vars)
}

/// 32 pi^3 m^2 g kB T (x-y)^2, the reference potential coefficient.
fn potential() -> Expr {
    Expr::int(32)
        * Expr::powi(Expr::pi(), 3)
        * Expr::powi(m(), 2)
        * g()
        * kb()
        * temp()
        * Expr::powi(s(), 2)
}

/// The reference reduced equation: `hbar^2 Phi_nu + 8 pi^2 m^2 g kB T mu^2 Phi = 0`
/// (hbar written as h; note the squared mass).
pub fn reduced_equation() -> Expr {
    Expr::powi(h(), 2) * Expr::jet(Dep::Phi, &[Var::Nu])
        + Expr::int(8)
            * Expr::powi(Expr::pi(), 2)
            * Expr::powi(m(), 2)
            * g()
            * kb()
            * temp()
            * Expr::powi(Expr::var(Var::Mu), 2)
            * Expr::jet(Dep::Phi, &[])
}

/// Exponent coefficient `8 pi^2 m^2 g kB T / h^2` as printed in the
/// closed-form solution and the adjoint invariant solution.
fn printed_exponent_coefficient() -> Expr {
    Expr::int(8) * Expr::powi(Expr::pi(), 2) * Expr::powi(m(), 2) * g() * kb() * temp()
        / Expr::powi(h(), 2)
}

/// The reference closed-form solution
/// `varrho(y-x) * exp[-8 pi^2 m^2 g kB T (y-x)^2 t / hbar^2]`.
pub fn closed_form_solution() -> Expr {
    Expr::func("varrho", s())
        * Expr::exp(-printed_exponent_coefficient() * Expr::powi(s(), 2) * Expr::var(Var::T))
}

/// The reference formal Lagrangian (note the missing m in the first term):
/// `theta * [4 pi h^2 rho_t + i h^3 (rho_yy - rho_xx) + 32 pi^3 m^2 g kB T (y-x)^2 rho]`.
pub fn formal_lagrangian() -> Expr {
    theta(&[])
        * (Expr::int(4) * Expr::pi() * Expr::powi(h(), 2) * rho(&[Var::T])
            + Expr::imag() * Expr::powi(h(), 3) * (rho(&[Var::Y, Var::Y]) - rho(&[Var::X, Var::X]))
            + potential() * rho(&[]))
}

/// The reference adjoint equation (again without m on the theta_t term):
/// `i h^3 (theta_yy - theta_xx) - 4 pi h^2 theta_t + 32 pi^3 m^2 kB T (y-x)^2 g theta`.
pub fn adjoint_equation() -> Expr {
    Expr::imag() * Expr::powi(h(), 3) * (theta(&[Var::Y, Var::Y]) - theta(&[Var::X, Var::X]))
        - Expr::int(4) * Expr::pi() * Expr::powi(h(), 2) * theta(&[Var::T])
        + potential() * theta(&[])
}

/// The reference adjoint invariant solution
/// `w(y-x) * exp[+8 pi^2 m^2 g kB T (y-x)^2 t / h^2]`.
pub fn adjoint_invariant_solution() -> Expr {
    Expr::func("w", s())
        * Expr::exp(printed_exponent_coefficient() * Expr::powi(s(), 2) * Expr::var(Var::T))
}

/// The reference general currents, written for a generic point field with
/// characteristic `W` (the three return values correspond to phi_t, phi_x,
/// phi_y). `lagrangian` is whatever Lagrangian the caller pairs them with.
/// Note the t-current prints `4 pi h^2` where the derived coefficient is
/// `4 pi m h^2`.
pub fn general_currents(
    lagrangian: &Expr,
    xi_x: &Expr,
    xi_y: &Expr,
    xi_t: &Expr,
    w: &Expr,
) -> Result<[Expr; 3], crate::expr::ExprError> {
    let ih3 = Expr::imag() * Expr::powi(h(), 3);
    let phi_t = lagrangian * xi_t + Expr::int(4) * Expr::pi() * Expr::powi(h(), 2) * w * theta(&[]);
    let phi_x = lagrangian * xi_x + &ih3 * w * theta(&[Var::X])
        - &ih3 * w.total_derivative(Var::X)? * theta(&[]);
    let phi_y = lagrangian * xi_y - &ih3 * w * theta(&[Var::Y])
        + &ih3 * w.total_derivative(Var::Y)? * theta(&[]);
    Ok([phi_t, phi_x, phi_y])
}

/// The exponential prefactor shared by the printed triplets:
/// `exp[+8 pi^2 m^2 g kB T (y-x)^2 t / h^2]`.
fn printed_growth() -> Expr {
    Expr::exp(printed_exponent_coefficient() * Expr::powi(s(), 2) * Expr::var(Var::T))
}

fn wfn(order: u32) -> Expr {
    Expr::func_deriv("w", order, s())
}

/// The nine printed current components, exactly as published (including the
/// inconsistencies the diff machinery is expected to surface): triplet 1 is
/// the energy law, triplet 2 and 3 the two non-trivial laws.
pub fn printed_currents() -> [[Expr; 3]; 3] {
    let e = printed_growth();
    let i = Expr::imag();
    let sixteen = Expr::int(16)
        * Expr::powi(Expr::pi(), 2)
        * Expr::powi(m(), 2)
        * g()
        * kb()
        * temp()
        * Expr::var(Var::T)
        * (Expr::var(Var::X) - Expr::var(Var::Y));

    // triplet 1
    let phi1_t = wfn(0)
        * &e
        * (potential()
            + &i * Expr::powi(h(), 2) * (rho(&[Var::Y, Var::Y]) - rho(&[Var::X, Var::X])));
    let phi1_x = &i
        * h()
        * &e
        * (Expr::powi(h(), 2) * wfn(1) * rho(&[Var::T])
            + wfn(0) * (Expr::powi(h(), 2) * rho(&[Var::T, Var::X]) - &sixteen * rho(&[Var::T])));
    let phi1_y = -(&i * h())
        * &e
        * (-Expr::powi(h(), 2) * wfn(1) * rho(&[Var::T])
            + wfn(0) * (Expr::powi(h(), 2) * rho(&[Var::T, Var::Y]) + &sixteen * rho(&[Var::T])));

    // triplet 2
    let phi2_t = rho(&[])
        * wfn(0)
        * &e
        * (potential() * rho(&[])
            + &i * Expr::powi(h(), 3) * (rho(&[Var::Y, Var::Y]) - rho(&[Var::X, Var::X])));
    let phi2_x = &i
        * h()
        * &e
        * (Expr::powi(h(), 2) * rho(&[]) * wfn(1) * rho(&[Var::T])
            + wfn(0)
                * (Expr::powi(h(), 2) * rho(&[Var::T]) * rho(&[Var::X])
                    + Expr::powi(h(), 2) * rho(&[]) * rho(&[Var::T, Var::X])
                    - &sixteen * rho(&[]) * rho(&[Var::T])));
    let phi2_y = -(&i * h())
        * &e
        * (-Expr::powi(h(), 2) * rho(&[]) * wfn(1) * rho(&[Var::T])
            + wfn(0)
                * (rho(&[Var::T]) * rho(&[Var::Y])
                    + Expr::powi(h(), 2) * rho(&[]) * rho(&[Var::T, Var::Y])
                    + &sixteen * rho(&[]) * rho(&[Var::T])));

    // triplet 3
    let grad_sum = rho(&[Var::X]) + rho(&[Var::Y]);
    let bracket = potential() * rho(&[])
        + Expr::int(4) * Expr::pi() * Expr::powi(h(), 2) * rho(&[Var::T])
        + &i * Expr::powi(h(), 3) * (rho(&[Var::Y, Var::Y]) - rho(&[Var::X, Var::X]));
    let phi3_t = -(Expr::int(4) * Expr::pi() * Expr::powi(h(), 2)) * &e * wfn(0) * &grad_sum;
    let phi3_x = &e
        * (&i * h() * (Expr::powi(h(), 2) * wfn(1) + &sixteen * wfn(0)) * &grad_sum
            + wfn(0) * &bracket
            + &i * Expr::powi(h(), 3) * (rho(&[Var::X, Var::Y]) + rho(&[Var::X, Var::X])));
    let phi3_y = &e
        * (&i * h() * (Expr::powi(h(), 2) * wfn(1) + &sixteen * wfn(0)) * &grad_sum
            - &i * Expr::powi(h(), 3) * wfn(0) * (rho(&[Var::X, Var::Y]) + rho(&[Var::Y, Var::Y]))
            + wfn(0) * &bracket);

    [
        [phi1_t, phi1_x, phi1_y],
        [phi2_t, phi2_x, phi2_y],
        [phi3_t, phi3_x, phi3_y],
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diff_verdict_three_way() {
        let a = Expr::param(params::MASS) * Expr::var(Var::X);
        let b = Expr::powi(Expr::param(params::MASS), 2) * Expr::var(Var::X);
        assert_eq!(structural_diff(&a, &a), DiffVerdict::Match);
        assert!(matches!(
            structural_diff(&a, &b),
            DiffVerdict::MatchModuloConstants { .. }
        ));
        let c = Expr::var(Var::Y);
        assert!(matches!(
            structural_diff(&a, &c),
            DiffVerdict::Mismatch { .. }
        ));
    }

    #[test]
    fn reference_forms_build() {
        assert!(!reduced_equation().is_zero());
        assert!(!closed_form_solution().is_zero());
        let cur = printed_currents();
        for triplet in &cur {
            for c in triplet {
                assert!(!c.is_zero());
            }
        }
    }
}
