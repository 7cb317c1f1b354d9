//! The commutator table of the generator catalog: expansions in the basis
//! where they exist, non-closure otherwise, plus the antisymmetry and
//! Jacobi checks.
//!
//! Run with: cargo run --example algebra_structure

use lsl::expr::eval::lsl_seed;
use lsl::symmetry::{catalog, commutator, jacobi_defect, structure_constants};

fn main() {
    let basis: Vec<_> = catalog().into_iter().map(|e| (e.label, e.field)).collect();

    let table = structure_constants(&basis, lsl_seed()).expect("catalog basis is independent");
    println!("{}", table.render());

    // antisymmetry and the Jacobi identity hold structurally
    let mut anti = true;
    for a in &basis {
        for b in &basis {
            let ab = commutator(&a.1, &b.1);
            let ba = commutator(&b.1, &a.1);
            anti &= (ab.xi_x + ba.xi_x).is_zero()
                && (ab.xi_y + ba.xi_y).is_zero()
                && (ab.xi_t + ba.xi_t).is_zero()
                && (ab.eta + ba.eta).is_zero();
        }
    }
    let mut jacobi = true;
    for i in 0..basis.len() {
        for j in (i + 1)..basis.len() {
            for k in (j + 1)..basis.len() {
                jacobi &= jacobi_defect(&basis[i].1, &basis[j].1, &basis[k].1).is_zero();
            }
        }
    }
    println!("antisymmetry: {anti}");
    println!("jacobi identity: {jacobi}");
}
