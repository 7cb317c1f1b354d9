//! Round-trip and stability suites for the grammar: parse of print is the
//! identity on canonical trees, printing is byte-stable and injective.

use lsl::lang::testgen::random_expr;
use lsl::lang::{parse_expr, print_expr};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeSet, HashMap};

#[test]
fn five_hundred_tree_round_trip() {
    let mut rng = ChaCha8Rng::seed_from_u64(lsl::expr::eval::lsl_seed());
    for k in 0..500 {
        let e = random_expr(&mut rng, 3);
        let printed = print_expr(&e);
        let back = parse_expr(&printed)
            .unwrap_or_else(|err| panic!("tree {k} failed to reparse: {err}\n  {printed}"));
        assert_eq!(back, e, "round trip changed tree {k}: {printed}");
        // print stability: byte-identical output on the second pass
        assert_eq!(print_expr(&back), printed, "unstable print for tree {k}");
    }
}

#[test]
fn printing_is_injective_on_distinct_trees() {
    let mut rng = ChaCha8Rng::seed_from_u64(lsl::expr::eval::lsl_seed() ^ 0x1234);
    let mut seen: BTreeSet<lsl::expr::Expr> = BTreeSet::new();
    let mut strings: HashMap<String, lsl::expr::Expr> = HashMap::new();
    let mut distinct = 0;
    while distinct < 500 {
        let e = random_expr(&mut rng, 3);
        if !seen.insert(e.clone()) {
            continue;
        }
        distinct += 1;
        let printed = print_expr(&e);
        if let Some(prev) = strings.insert(printed.clone(), e.clone()) {
            panic!("two distinct trees print identically:\n  {prev:?}\n  {e:?}\n  {printed}");
        }
    }
}

#[test]
fn fixture_documents_parse() {
    let pde =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/eq2.pde")).unwrap();
    let doc = lsl::lang::parse_pde(&pde).unwrap();
    assert_eq!(&doc.residual, lsl::model::canonical_model().residual());

    let vf =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/g4.vf")).unwrap();
    let field = lsl::lang::parse_vectorfield(&vf).unwrap();
    let g4 = lsl::symmetry::catalog()
        .into_iter()
        .find(|e| e.label == "G4")
        .unwrap()
        .field;
    assert_eq!(field.eta, g4.eta);
    assert_eq!(field.xi_x, g4.xi_x);

    let vf =
        std::fs::read_to_string(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/g3.vf")).unwrap();
    let field = lsl::lang::parse_vectorfield(&vf).unwrap();
    let g3 = lsl::symmetry::catalog()
        .into_iter()
        .find(|e| e.label == "G3")
        .unwrap()
        .field;
    assert_eq!(field.xi_x, g3.xi_x);
    assert_eq!(field.xi_y, g3.xi_y);
    assert!(field.xi_t.is_zero() && field.eta.is_zero());
}
