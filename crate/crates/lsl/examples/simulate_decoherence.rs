//! Integrates the dimensionless equation from the diagonal-ridge profile,
//! compares against the closed-form family, and fits the off-diagonal
//! decay rates -D s^2 (the decoherence signature).
//!
//! Run with: cargo run --example simulate_decoherence
//! (use --release for the full reference grid)

use lsl::numeric::{
    compare_to_closed_form, decoherence_metric, integrate, sample_closed_form, Boundary, GridSpec,
};

fn main() {
    // a quarter-size grid keeps the debug-build run short; the acceptance
    // suite drives the full 129-point reference configuration
    let grid = GridSpec::new(65, 8.0, 2e-3, 500, 1.0, 1.0).expect("valid grid");
    let init = sample_closed_form(&grid, 0.0);
    let traj = integrate(&grid, &init, Boundary::Natural, 25).expect("stable run");

    let exact = sample_closed_form(&grid, traj.final_state().time);
    let err = compare_to_closed_form(traj.final_state(), &exact, 1e-3);
    println!(
        "integrated to tau = {} on a {}x{} grid; max mixed-relative error vs the closed form: {err:.3e}",
        traj.final_state().time,
        grid.n,
        grid.n
    );

    println!("\noff-diagonal decay fits (expected rate -D s^2):");
    let fits = decoherence_metric(&traj, &[0.0, 0.5, 1.0, 2.0]).expect("fits converge");
    for f in &fits {
        println!(
            "  s = {:<4} fitted rate {:>12.6}  expected {:>8.3}",
            f.s, f.rate, f.expected
        );
    }
    let r1 = fits[2].rate;
    let r2 = fits[3].rate;
    println!(
        "  rate(s=2)/rate(s=1) = {:.4} (quadratic in separation)",
        r2 / r1
    );
}
