//! Deterministic random expression generator for round-trip and property
//! suites. All values flow through the canonicalizing constructors, so
//! generated trees are canonical by construction.

use crate::expr::{Dep, Expr, Var};
use rand::Rng;

pub fn random_expr(rng: &mut impl Rng, depth: u32) -> Expr {
    if depth == 0 {
        return random_atom(rng);
    }
    match rng.random_range(0..10) {
        0..=3 => Expr::sum((0..rng.random_range(2..4)).map(|_| random_expr(rng, depth - 1))),
        4..=7 => Expr::product((0..rng.random_range(2..4)).map(|_| random_expr(rng, depth - 1))),
        8 => {
            let exps: [(i64, i64); 6] = [(2, 1), (3, 1), (-1, 1), (-2, 1), (1, 2), (-3, 2)];
            let (n, d) = exps[rng.random_range(0..exps.len())];
            Expr::powr(
                random_atom(rng),
                num::rational::BigRational::new(n.into(), d.into()),
            )
        }
        _ => Expr::exp(random_polynomial(rng)),
    }
}

fn random_atom(rng: &mut impl Rng) -> Expr {
    match rng.random_range(0..12) {
        0 => Expr::int(rng.random_range(-9..10)),
        1 => Expr::ratio(rng.random_range(1..12), rng.random_range(1..12)),
        2 => Expr::pi(),
        3 => Expr::imag(),
        4 => Expr::param(["m", "g", "kB", "T", "h"][rng.random_range(0..5)]),
        5 => Expr::var([Var::X, Var::Y, Var::T][rng.random_range(0..3)]),
        6 => Expr::jet(Dep::Rho, &[]),
        7 => Expr::jet(Dep::Rho, &[Var::X]),
        8 => Expr::jet(Dep::Rho, &[Var::X, Var::Y]),
        9 => Expr::jet(Dep::Theta, &[Var::T]),
        10 => Expr::func_deriv(
            ["w", "varrho"][rng.random_range(0..2)],
            rng.random_range(0..3),
            Expr::var(Var::Y) - Expr::var(Var::X),
        ),
        _ => Expr::jet(Dep::Rho, &[Var::Y, Var::Y]),
    }
}

fn random_polynomial(rng: &mut impl Rng) -> Expr {
    Expr::sum((0..rng.random_range(1..3)).map(|_| {
        Expr::int(rng.random_range(-4..5))
            * Expr::powi(
                Expr::var([Var::X, Var::Y, Var::T][rng.random_range(0..3)]),
                rng.random_range(1..3),
            )
    }))
}
