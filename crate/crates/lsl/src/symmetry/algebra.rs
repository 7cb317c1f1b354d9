//! Lie brackets, structure constants, and algebra-closure reporting.

use super::{SymmetryError, VectorField};
use crate::expr::eval::{Bindings, FnTable};
use crate::expr::{Dep, Expr, ExprNode, Var};
use num::complex::Complex64;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, BTreeSet};

/// Coefficient-wise Lie bracket `[v1, v2]`: each output coefficient is
/// `v1(coeff of v2) - v2(coeff of v1)`.
pub fn commutator(v1: &VectorField, v2: &VectorField) -> VectorField {
    let dep = Dep::Rho;
    VectorField::new(
        v1.apply(&v2.xi_x, dep) - v2.apply(&v1.xi_x, dep),
        v1.apply(&v2.xi_y, dep) - v2.apply(&v1.xi_y, dep),
        v1.apply(&v2.xi_t, dep) - v2.apply(&v1.xi_t, dep),
        v1.apply(&v2.eta, dep) - v2.apply(&v1.eta, dep),
    )
}

/// `[v1,[v2,v3]] + [v2,[v3,v1]] + [v3,[v1,v2]]`; identically the zero field
/// for any smooth coefficients.
pub fn jacobi_defect(v1: &VectorField, v2: &VectorField, v3: &VectorField) -> VectorField {
    let a = commutator(v1, &commutator(v2, v3));
    let b = commutator(v2, &commutator(v3, v1));
    let c = commutator(v3, &commutator(v1, v2));
    VectorField::new(
        a.xi_x + b.xi_x + c.xi_x,
        a.xi_y + b.xi_y + c.xi_y,
        a.xi_t + b.xi_t + c.xi_t,
        a.eta + b.eta + c.eta,
    )
}

/// One bracket of the table: either an expansion in the basis with scalar
/// (parameter-expression) coefficients, or the bracket itself when it lies
/// outside the span.
#[derive(Debug, Clone)]
pub struct BracketEntry {
    pub i: usize,
    pub j: usize,
    /// Nonzero expansion coefficients (basis index, scalar).
    pub expansion: Option<Vec<(usize, Expr)>>,
    /// The bracket field when no expansion exists.
    pub outside: Option<VectorField>,
}

#[derive(Debug, Clone)]
pub struct StructureConstants {
    pub labels: Vec<String>,
    pub entries: Vec<BracketEntry>,
}

impl StructureConstants {
    /// Stable text rendering used for golden locking and reports.
    pub fn render(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            let lhs = format!("[{},{}]", self.labels[e.i], self.labels[e.j]);
            match (&e.expansion, &e.outside) {
                (Some(coeffs), _) => {
                    if coeffs.is_empty() {
                        out.push_str(&format!("{lhs} = 0\n"));
                    } else {
                        let rhs: Vec<String> = coeffs
                            .iter()
                            .map(|(k, c)| format!("({}) {}", c, self.labels[*k]))
                            .collect();
                        out.push_str(&format!("{lhs} = {}\n", rhs.join(" + ")));
                    }
                }
                (None, Some(v)) => {
                    out.push_str(&format!("{lhs} = outside span: {v}\n"));
                }
                _ => unreachable!(),
            }
        }
        out
    }
}

/// Computes the full bracket table over a basis, expanding each bracket in
/// the basis where an exact expansion exists and reporting non-closure
/// otherwise. The basis must be linearly independent (checked numerically
/// at random points).
pub fn structure_constants(
    basis: &[(String, VectorField)],
    seed: u64,
) -> Result<StructureConstants, SymmetryError> {
    if !independent_numerically(basis, seed) {
        return Err(SymmetryError::DependentBasis);
    }
    let labels: Vec<String> = basis.iter().map(|(l, _)| l.clone()).collect();
    let mut entries = Vec::new();
    for i in 0..basis.len() {
        for j in (i + 1)..basis.len() {
            let bracket = commutator(&basis[i].1, &basis[j].1);
            let entry = match expand_in_basis(&bracket, basis)? {
                Some(coeffs) => BracketEntry {
                    i,
                    j,
                    expansion: Some(coeffs),
                    outside: None,
                },
                None => BracketEntry {
                    i,
                    j,
                    expansion: None,
                    outside: Some(bracket),
                },
            };
            entries.push(entry);
        }
    }
    Ok(StructureConstants { labels, entries })
}

/// Samples the four coefficient functions at random points and rank-checks
/// the resulting complex matrix.
fn independent_numerically(basis: &[(String, VectorField)], seed: u64) -> bool {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x616c6762);
    let samples = basis.len() + 3;
    let fns = FnTable::new();
    let mut rows: Vec<Vec<Complex64>> = vec![Vec::new(); basis.len()];
    for _ in 0..samples {
        let mut b = Bindings::new();
        for v in [Var::X, Var::Y, Var::T] {
            b.set_var(v, rng.random_range(-2.0..2.0));
        }
        b.set_jet(
            crate::expr::JetVar::new(Dep::Rho, &[]),
            Complex64::new(rng.random_range(-2.0..2.0), rng.random_range(-1.0..1.0)),
        );
        for p in ["m", "g", "kB", "T", "h"] {
            b.set_param(p, rng.random_range(0.5..2.0));
        }
        for (k, (_, f)) in basis.iter().enumerate() {
            for c in [&f.xi_x, &f.xi_y, &f.xi_t, &f.eta] {
                match c.eval_numeric(&b, &fns) {
                    Ok(v) => rows[k].push(v),
                    Err(_) => return false,
                }
            }
        }
    }
    rank(&mut rows) == basis.len()
}

#[allow(clippy::needless_range_loop)]
fn rank(rows: &mut [Vec<Complex64>]) -> usize {
    let nrows = rows.len();
    if nrows == 0 {
        return 0;
    }
    let ncols = rows[0].len();
    let mut r = 0;
    for c in 0..ncols {
        if r == nrows {
            break;
        }
        let (mut pivot, mut best) = (None, 1e-9);
        for k in r..nrows {
            let mag = rows[k][c].norm();
            if mag > best {
                best = mag;
                pivot = Some(k);
            }
        }
        let Some(p) = pivot else { continue };
        rows.swap(r, p);
        for k in 0..nrows {
            if k == r {
                continue;
            }
            let f = rows[k][c] / rows[r][c];
            for cc in c..ncols {
                let sub = f * rows[r][cc];
                rows[k][cc] -= sub;
            }
        }
        r += 1;
    }
    r
}

/// Splits a polynomial coefficient function into
/// geometric-monomial -> scalar-coefficient pairs, where the geometric part
/// is built from x, y, t and the order-0 dependent variable and the scalar
/// part from numbers, pi, i and parameters.
fn split_poly(e: &Expr) -> Result<BTreeMap<Expr, Expr>, SymmetryError> {
    let mut out: BTreeMap<Expr, Expr> = BTreeMap::new();
    for term in e.terms() {
        let (c, key) = term.coeff_and_key();
        let factors: Vec<Expr> = match key.node() {
            ExprNode::Prod(fs) => fs.clone(),
            _ if key.is_one() => Vec::new(),
            _ => vec![key.clone()],
        };
        let mut geom: Vec<Expr> = Vec::new();
        let mut scalar: Vec<Expr> = vec![Expr::num(c)];
        for f in factors {
            let base = match f.node() {
                ExprNode::Pow(b, _) => b.clone(),
                _ => f.clone(),
            };
            let is_geom = match base.node() {
                ExprNode::Var(_) => true,
                ExprNode::Jet(j) if j.order() == 0 => true,
                ExprNode::Jet(j) => {
                    return Err(SymmetryError::NotExpressible(format!(
                        "coefficient contains jet {j}"
                    )))
                }
                ExprNode::ImagUnit | ExprNode::Pi | ExprNode::Param(_) | ExprNode::Num(_) => false,
                _ => {
                    return Err(SymmetryError::NotExpressible(format!(
                        "coefficient contains non-polynomial factor {f}"
                    )))
                }
            };
            if is_geom {
                geom.push(f);
            } else {
                scalar.push(f);
            }
        }
        let gkey = Expr::product(geom);
        let sval = Expr::product(scalar);
        let entry = out.entry(gkey).or_insert_with(Expr::zero);
        *entry = entry.clone() + sval;
    }
    out.retain(|_, v| !v.is_zero());
    Ok(out)
}

fn invertible_scalar(e: &Expr) -> bool {
    match e.node() {
        ExprNode::Num(q) => !num::traits::Zero::is_zero(q),
        ExprNode::ImagUnit | ExprNode::Pi | ExprNode::Param(_) => true,
        ExprNode::Pow(b, _) => invertible_scalar(b),
        ExprNode::Prod(fs) => fs.iter().all(invertible_scalar),
        _ => false,
    }
}

/// Attempts to write `bracket = sum_k c_k basis_k` with scalar
/// parameter-expression coefficients by matching geometric monomials in all
/// four components and solving the resulting exact linear system.
/// Returns `None` when the system is inconsistent (bracket outside the
/// span); errors only if a pivot falls outside the invertible scalar class.
#[allow(clippy::needless_range_loop)]
fn expand_in_basis(
    bracket: &VectorField,
    basis: &[(String, VectorField)],
) -> Result<Option<Vec<(usize, Expr)>>, SymmetryError> {
    let comps = |v: &VectorField| {
        [
            v.xi_x.clone(),
            v.xi_y.clone(),
            v.xi_t.clone(),
            v.eta.clone(),
        ]
    };

    // collect every geometric monomial appearing anywhere
    let bsplit: Vec<BTreeMap<Expr, Expr>> = comps(bracket)
        .iter()
        .map(split_poly)
        .collect::<Result<_, _>>()?;
    let ksplit: Vec<Vec<BTreeMap<Expr, Expr>>> = basis
        .iter()
        .map(|(_, f)| comps(f).iter().map(split_poly).collect::<Result<_, _>>())
        .collect::<Result<_, _>>()?;

    let mut rows: Vec<(Vec<Expr>, Expr)> = Vec::new();
    for comp in 0..4 {
        let mut monomials: BTreeSet<Expr> = BTreeSet::new();
        monomials.extend(bsplit[comp].keys().cloned());
        for ks in &ksplit {
            monomials.extend(ks[comp].keys().cloned());
        }
        for m in monomials {
            let a: Vec<Expr> = ksplit
                .iter()
                .map(|ks| ks[comp].get(&m).cloned().unwrap_or_else(Expr::zero))
                .collect();
            let b = bsplit[comp].get(&m).cloned().unwrap_or_else(Expr::zero);
            rows.push((a, b));
        }
    }

    // exact Gauss-Jordan elimination; division only by invertible scalars
    let n = basis.len();
    let mut pivots: Vec<Option<usize>> = vec![None; n];
    let mut row_cursor = 0usize;
    for col in 0..n {
        let mut pivot_row = None;
        for r in row_cursor..rows.len() {
            if rows[r].0[col].is_zero() {
                continue;
            }
            if invertible_scalar(&rows[r].0[col]) {
                pivot_row = Some(r);
                break;
            }
        }
        let Some(pr) = pivot_row else {
            // ensure the column is fully eliminated or unused
            if rows[row_cursor..].iter().any(|(a, _)| !a[col].is_zero()) {
                return Err(SymmetryError::NotExpressible(format!(
                    "no invertible pivot in column {col}"
                )));
            }
            continue;
        };
        rows.swap(row_cursor, pr);
        let pivot_val = rows[row_cursor].0[col].clone();
        for r in 0..rows.len() {
            if r == row_cursor || rows[r].0[col].is_zero() {
                continue;
            }
            let f = &rows[r].0[col] / &pivot_val;
            for c in 0..n {
                let sub = &f * &rows[row_cursor].0[c];
                rows[r].0[c] = &rows[r].0[c] - sub;
            }
            let sub = &f * &rows[row_cursor].1;
            rows[r].1 = &rows[r].1 - sub;
        }
        pivots[col] = Some(row_cursor);
        row_cursor += 1;
    }
    // consistency of the eliminated system
    for (a, b) in rows.iter().skip(row_cursor) {
        if a.iter().all(|e| e.is_zero()) && !b.is_zero() {
            return Ok(None);
        }
    }
    let mut coeffs: Vec<(usize, Expr)> = Vec::new();
    let mut solution: Vec<Expr> = vec![Expr::zero(); n];
    for (col, pivot) in pivots.iter().enumerate() {
        if let Some(r) = pivot {
            let c = &rows[*r].1 / &rows[*r].0[col];
            solution[col] = c.clone();
            if !c.is_zero() {
                coeffs.push((col, c));
            }
        }
    }
    // verify the expansion exactly
    let mut rebuilt = VectorField::zero();
    for (k, c) in &coeffs {
        rebuilt = VectorField::linear_combination(&Expr::one(), &rebuilt, c, &basis[*k].1);
    }
    let same = rebuilt.xi_x == bracket.xi_x
        && rebuilt.xi_y == bracket.xi_y
        && rebuilt.xi_t == bracket.xi_t
        && rebuilt.eta == bracket.eta;
    if same {
        Ok(Some(coeffs))
    } else {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::eval::lsl_seed;
    use crate::symmetry::catalog;

    fn by_label(label: &str) -> VectorField {
        catalog()
            .into_iter()
            .find(|e| e.label == label)
            .unwrap()
            .field
    }

    #[test]
    fn constant_fields_commute() {
        let b = commutator(&by_label("G1"), &by_label("G3"));
        assert!(b.is_zero());
    }

    #[test]
    fn time_translation_bracket_boost_gives_space_translation() {
        let b = commutator(&by_label("G1"), &by_label("G4"));
        let g3 = by_label("G3");
        assert_eq!(b.xi_x, g3.xi_x);
        assert_eq!(b.xi_y, g3.xi_y);
        assert_eq!(b.xi_t, g3.xi_t);
        assert_eq!(b.eta, g3.eta);
    }

    #[test]
    fn space_translation_commutes_with_boost() {
        let b = commutator(&by_label("G3"), &by_label("G4"));
        assert!(b.is_zero());
    }

    #[test]
    fn antisymmetry_over_catalog() {
        let fields: Vec<VectorField> = catalog().into_iter().map(|e| e.field).collect();
        for a in &fields {
            for b in &fields {
                let ab = commutator(a, b);
                let ba = commutator(b, a);
                assert!((ab.xi_x + ba.xi_x).is_zero());
                assert!((ab.xi_y + ba.xi_y).is_zero());
                assert!((ab.xi_t + ba.xi_t).is_zero());
                assert!((ab.eta + ba.eta).is_zero());
            }
        }
    }

    #[test]
    fn jacobi_identity_over_catalog() {
        let fields: Vec<VectorField> = catalog().into_iter().map(|e| e.field).collect();
        for i in 0..fields.len() {
            for j in (i + 1)..fields.len() {
                for k in (j + 1)..fields.len() {
                    let d = jacobi_defect(&fields[i], &fields[j], &fields[k]);
                    assert!(d.is_zero(), "jacobi fails at ({i},{j},{k})");
                }
            }
        }
    }

    #[test]
    fn abelian_sublist_has_all_zero_constants() {
        let basis = vec![
            ("G1".to_string(), by_label("G1")),
            ("G3".to_string(), by_label("G3")),
        ];
        let t = structure_constants(&basis, lsl_seed()).unwrap();
        for e in &t.entries {
            assert_eq!(e.expansion.as_deref(), Some(&[][..]));
        }
    }

    #[test]
    fn dependent_basis_is_rejected() {
        let basis = vec![
            ("G3".to_string(), by_label("G3")),
            ("G3b".to_string(), by_label("G3")),
        ];
        assert!(matches!(
            structure_constants(&basis, lsl_seed()),
            Err(SymmetryError::DependentBasis)
        ));
    }

    #[test]
    fn full_catalog_table_contains_known_entries() {
        let basis: Vec<(String, VectorField)> = catalog()
            .into_iter()
            .map(|e| (e.label.clone(), e.field))
            .collect();
        let t = structure_constants(&basis, lsl_seed()).unwrap();
        let find = |i: usize, j: usize| t.entries.iter().find(|e| e.i == i && e.j == j).unwrap();
        // [G1,G4] = G3
        assert_eq!(
            find(0, 3).expansion.as_deref(),
            Some(&[(2, Expr::one())][..])
        );
        // [G1,G5] = G1
        assert_eq!(
            find(0, 4).expansion.as_deref(),
            Some(&[(0, Expr::one())][..])
        );
        // [G1,G6] = 2 G4
        assert_eq!(
            find(0, 5).expansion.as_deref(),
            Some(&[(3, Expr::int(2))][..])
        );
        // [G1,G7] = 3 G6
        assert_eq!(
            find(0, 6).expansion.as_deref(),
            Some(&[(5, Expr::int(3))][..])
        );
        // [G3,G5] = 3/2 G3
        assert_eq!(
            find(2, 4).expansion.as_deref(),
            Some(&[(2, Expr::ratio(3, 2))][..])
        );
        // [G4,G6] lands on rho d/drho, outside the printed span
        assert!(find(3, 5).outside.is_some());
    }
}
