//! Exports the determining system for point symmetries: the invariance
//! condition with opaque ansatz coefficients, split by jet monomials.
//! Solving the system is out of scope; generating and checking against
//! known generators is not.
//!
//! Run with: cargo run --example determining_equations

use lsl::model::canonical_model;
use lsl::symmetry::{catalog, determining_system, instantiate_ansatz};

fn main() {
    let model = canonical_model();
    let sys = determining_system(&model).expect("system generates");
    println!("{} determining equations\n", sys.len());
    for eq in sys.iter().take(6) {
        println!("[{}]  {} = 0", eq.monomial, eq.coefficient);
    }
    if sys.len() > 6 {
        println!("... ({} more)", sys.len() - 6);
    }

    // consistency: a verified symmetry satisfies every entry, a failing
    // catalog entry violates at least one
    for label in ["G1", "G4", "G2"] {
        let field = catalog()
            .into_iter()
            .find(|e| e.label == label)
            .unwrap()
            .field;
        let violations = sys
            .iter()
            .filter(|eq| !instantiate_ansatz(&eq.coefficient, &field).is_zero())
            .count();
        println!("{label}: {violations} violated equations");
    }
}
