//! The formal Lagrangian, both variational derivatives, the adjoint
//! equation, and its invariant solution under the diagonal translation.
//!
//! Run with: cargo run --example adjoint_pipeline

use lsl::conservation::{adjoint, adjoint_invariant_solution, euler_lagrange, formal_lagrangian};
use lsl::expr::Dep;
use lsl::model::canonical_model;
use lsl::reference::{adjoint_equation, structural_diff};

fn main() {
    let model = canonical_model();
    let lag = formal_lagrangian(&model);
    println!("formal Lagrangian: L = {}", lag.expr);

    // variation in theta recovers the equation of motion
    let back = euler_lagrange(&lag.expr, Dep::Theta).expect("order fits the truncation");
    println!(
        "\ndelta L / delta theta = original residual: {}",
        (&back - model.residual()).is_zero()
    );

    // variation in rho yields the adjoint equation
    let adj = adjoint(&model).expect("adjoint derives");
    println!("adjoint equation: {} = 0", adj.residual());
    println!(
        "diff against the reference adjoint form: {:?}",
        structural_diff(adj.residual(), &adjoint_equation())
    );

    // double adjoint comes back to the original residual
    let lag2 = lsl::expr::Expr::jet(Dep::Rho, &[]) * adj.residual().clone();
    let double = euler_lagrange(&lag2, Dep::Theta).expect("order fits");
    println!(
        "double adjoint recovers the residual: {}",
        (&double - model.residual()).is_zero()
    );

    let theta = adjoint_invariant_solution(&model).expect("adjoint reduction solves");
    println!("\nadjoint invariant solution: theta = {}", theta.solution);
    println!("reduced decay coefficient: {}", theta.decay_coefficient);
    for f in &theta.flags {
        println!("flag [{}]: {}", f.context, f.detail);
    }
}
