//! Verifies every catalog generator against the model and shows the
//! conjectured corrections for the entries that fail as printed.
//!
//! Run with: cargo run --example verify_symmetries

use lsl::model::canonical_model;
use lsl::symmetry::{catalog, verify_generators};

fn main() {
    let model = canonical_model();
    println!("model: {} = 0\n", model.residual());

    let fields: Vec<_> = catalog().into_iter().map(|e| (e.label, e.field)).collect();
    let verdicts = verify_generators(&fields, &model).expect("verification runs");

    for v in &verdicts {
        if v.passes {
            println!("{:<4} symmetry residual = 0 (exact)", v.label);
        } else {
            println!("{:<4} FAILS with residual:", v.label);
            println!("     {}", v.residual);
            for r in &v.repairs {
                println!("     conjectured correction {}: {}", r.label, r.note);
                println!("       {}", r.field);
            }
        }
    }

    // the infinite family: any solution of the equation, added to rho,
    // is again a symmetry direction
    let sol = lsl::symmetry::invariant_solution(&model, &fields[2].1)
        .expect("diagonal reduction")
        .solution;
    let ginf = lsl::symmetry::make_gamma_inf(sol).expect("closed form is rho-free");
    let r = lsl::symmetry::symmetry_residual(&ginf, &model).expect("residual computes");
    println!("\nGinf with the closed-form solution: residual = {r}");
}
