//! Property suites for the symbolic kernel: derivation rules, canonical
//! soundness, and simplifier idempotence over randomly generated trees.

use lsl::expr::eval::{Bindings, FnTable};
use lsl::expr::{Dep, Expr, ExprNode, Var};
use lsl::lang::testgen::random_expr;
use num::complex::Complex64;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn gen(seed: u64, depth: u32) -> Expr {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    random_expr(&mut rng, depth)
}

/// Rebuilds a tree through the constructors with child order shuffled;
/// canonicalization must erase the permutation.
fn permuted_rebuild(e: &Expr, rng: &mut ChaCha8Rng) -> Expr {
    use rand::seq::SliceRandom;
    match e.node() {
        ExprNode::Sum(ts) => {
            let mut parts: Vec<Expr> = ts.iter().map(|t| permuted_rebuild(t, rng)).collect();
            parts.shuffle(rng);
            Expr::sum(parts)
        }
        ExprNode::Prod(fs) => {
            let mut parts: Vec<Expr> = fs.iter().map(|f| permuted_rebuild(f, rng)).collect();
            parts.shuffle(rng);
            Expr::product(parts)
        }
        ExprNode::Pow(b, r) => Expr::powr(permuted_rebuild(b, rng), r.clone()),
        ExprNode::Exp(a) => Expr::exp(permuted_rebuild(a, rng)),
        ExprNode::Func { name, order, arg } => {
            Expr::func_deriv(name, *order, permuted_rebuild(arg, rng))
        }
        _ => e.clone(),
    }
}

fn random_bindings(seed: u64, atoms: &[Expr]) -> Bindings {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = Bindings::new();
    for a in atoms {
        let v = match a.node() {
            ExprNode::Param(_) => Complex64::new(rng.random_range(0.5..1.5), 0.0),
            ExprNode::Var(_) => Complex64::new(rng.random_range(-1.5..1.5), 0.0),
            _ => Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)),
        };
        b.set(a.clone(), v);
    }
    b
}

fn free_atoms(e: &Expr) -> Vec<Expr> {
    let mut set = std::collections::BTreeSet::new();
    e.visit(&mut |n| {
        if matches!(
            n.node(),
            ExprNode::Param(_) | ExprNode::Var(_) | ExprNode::Jet(_) | ExprNode::Ansatz(..)
        ) {
            set.insert(n.clone());
        }
    });
    set.into_iter().collect()
}

fn smooth_fns() -> FnTable {
    let mut fns = FnTable::new();
    fns.insert_gauss_quarter("w");
    fns.insert_gauss_quarter("varrho");
    fns
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn total_derivative_is_linear(seed in any::<u64>()) {
        let e1 = gen(seed, 2);
        let e2 = gen(seed.wrapping_add(1), 2);
        let a = Expr::ratio(3, 7);
        let b = Expr::int(-4);
        for v in [Var::X, Var::Y, Var::T] {
            let lhs = (&a * &e1 + &b * &e2).total_derivative(v);
            let rhs = e1.total_derivative(v).and_then(|d1| {
                e2.total_derivative(v).map(|d2| &a * d1 + &b * d2)
            });
            // order overflow may strike either route; that is fine
            if let (Ok(l), Ok(r)) = (lhs, rhs) {
                prop_assert_eq!(l, r);
            }
        }
    }

    #[test]
    fn total_derivative_satisfies_leibniz(seed in any::<u64>()) {
        let e1 = gen(seed, 2);
        let e2 = gen(seed.wrapping_mul(7919).wrapping_add(13), 2);
        for v in [Var::X, Var::Y] {
            let prod = &e1 * &e2;
            let lhs = prod.total_derivative(v);
            let rhs = e1.total_derivative(v).and_then(|d1| {
                e2.total_derivative(v).map(|d2| d1 * &e2 + &e1 * d2)
            });
            if let (Ok(l), Ok(r)) = (lhs, rhs) {
                prop_assert_eq!(l, r);
            }
        }
    }

    #[test]
    fn mixed_total_derivatives_commute(seed in any::<u64>()) {
        let e = gen(seed, 2);
        let xy = e.total_derivative(Var::X).and_then(|d| d.total_derivative(Var::Y));
        let yx = e.total_derivative(Var::Y).and_then(|d| d.total_derivative(Var::X));
        if let (Ok(a), Ok(b)) = (xy, yx) {
            prop_assert_eq!(a, b);
        }
    }

    #[test]
    fn simplify_is_idempotent(seed in any::<u64>()) {
        let e = gen(seed, 3);
        let once = e.simplify();
        prop_assert_eq!(once.clone(), e.clone());
        prop_assert_eq!(once.simplify(), once);
    }

    #[test]
    fn canonicalization_is_sound_numerically(seed in any::<u64>()) {
        // a permuted rebuild cancels structurally, and structural equality
        // implies numeric equality at random bindings
        let e1 = gen(seed, 3);
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcdef);
        let e2 = permuted_rebuild(&e1, &mut rng);
        prop_assert_eq!((&e1 - &e2).simplify(), Expr::zero());
        let atoms = free_atoms(&e1);
        let fns = smooth_fns();
        for k in 0..4u64 {
            let b = random_bindings(seed.wrapping_add(k), &atoms);
            let v1 = e1.eval_numeric(&b, &fns).unwrap();
            let v2 = e2.eval_numeric(&b, &fns).unwrap();
            let scale = v1.norm().max(v2.norm()).max(1.0);
            prop_assert!((v1 - v2).norm() / scale < 1e-10,
                "eval mismatch {v1} vs {v2} for {e1}");
        }
    }
}

/// Jet-free smooth expressions of the base variables: polynomial blocks,
/// exponentials of polynomials, and arbitrary-function applications.
fn smooth_expr(rng: &mut ChaCha8Rng) -> Expr {
    use rand::Rng;
    let poly = |rng: &mut ChaCha8Rng| {
        Expr::sum((0..rng.random_range(1..4)).map(|_| {
            Expr::int(rng.random_range(-3..4))
                * Expr::powi(
                    Expr::var([Var::X, Var::Y, Var::T][rng.random_range(0..3)]),
                    rng.random_range(1..3),
                )
        }))
    };
    let mut factors = vec![poly(rng)];
    if rng.random_bool(0.5) {
        factors.push(Expr::exp(poly(rng) * Expr::ratio(1, 4)));
    }
    if rng.random_bool(0.4) {
        factors.push(Expr::func_deriv(
            "w",
            rng.random_range(0..3),
            Expr::var(Var::Y) - Expr::var(Var::X),
        ));
    }
    Expr::product(factors) + poly(rng)
}

/// Numeric/symbolic consistency: the symbolic x-derivative matches a
/// central finite difference for smooth expressions of the base variables.
#[test]
fn symbolic_derivative_matches_finite_difference() {
    let fns = smooth_fns();
    let mut checked = 0;
    for seed in 0..200u64 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_mul(0x9e37));
        let e = smooth_expr(&mut rng);
        if !e.contains(&Expr::var(Var::X)) {
            continue;
        }
        let d = match e.total_derivative(Var::X) {
            Ok(d) => d,
            Err(_) => continue,
        };
        let atoms = free_atoms(&e);
        let b = random_bindings(seed ^ 0x55, &atoms);
        let x0 = b.get(&Expr::var(Var::X)).unwrap();
        let h = 1e-5;
        let eval_at = |xv: Complex64| {
            let mut bb = b.clone();
            bb.set_var(Var::X, xv);
            e.eval_numeric(&bb, &fns).unwrap()
        };
        let fd = (eval_at(x0 + h) - eval_at(x0 - h)) / (2.0 * h);
        let sym = d.eval_numeric(&b, &fns).unwrap();
        let scale = sym.norm().max(1.0);
        if !sym.is_finite() || !fd.is_finite() || scale > 1e6 {
            continue;
        }
        assert!(
            (fd - sym).norm() / scale < 1e-6,
            "seed {seed}: fd {fd} vs symbolic {sym} for {e}"
        );
        checked += 1;
    }
    assert!(checked > 100, "only {checked} expressions exercised");
}

/// Jet variables are mutually independent symbols for partial derivatives.
#[test]
fn jets_are_independent_symbols() {
    let rho_x = Expr::jet(Dep::Rho, &[Var::X]);
    let rho_y = Expr::jet(Dep::Rho, &[Var::Y]);
    let e = &rho_x * &rho_x * &rho_y;
    assert_eq!(e.partial_wrt(&rho_x), Expr::int(2) * &rho_x * &rho_y);
    assert!(e.partial_wrt(&Expr::var(Var::X)).is_zero());
}
