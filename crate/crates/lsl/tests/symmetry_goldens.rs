//! Golden locks for the derived symbolic artifacts: generator verdicts and
//! residuals, the boost prolongation coefficient, the structure-constant
//! table, the determining-system shape, and the current-triplet diff
//! verdicts. Regenerate with LSL_REGEN_GOLDEN=1 after auditing changes.

use lsl::conservation::catalog_currents;
use lsl::expr::eval::lsl_seed;
use lsl::expr::{Dep, Var};
use lsl::model::canonical_model;
use lsl::reference::DiffVerdict;
use lsl::symmetry::{catalog, determining_system, prolong, structure_constants, verify_generators};
use std::path::PathBuf;

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

fn check_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var("LSL_REGEN_GOLDEN").is_ok() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|_| panic!("missing golden {name}; run with LSL_REGEN_GOLDEN=1"));
    assert_eq!(
        actual, expected,
        "golden {name} drifted; audit and regenerate if the change is intended"
    );
}

#[test]
fn generator_verdicts_and_residuals() {
    let p = canonical_model();
    let fields: Vec<_> = catalog().into_iter().map(|e| (e.label, e.field)).collect();
    let verdicts = verify_generators(&fields, &p).unwrap();
    let mut out = String::new();
    for v in &verdicts {
        if v.passes {
            out.push_str(&format!("{} pass\n", v.label));
        } else {
            out.push_str(&format!("{} fail residual = {}\n", v.label, v.residual));
            for r in &v.repairs {
                out.push_str(&format!("  verified repair {}: {}\n", r.label, r.field));
            }
        }
    }
    check_golden("generator_verdicts.txt", &out);
}

#[test]
fn boost_prolongation_zeta_t() {
    // hand-expanded once from the first-order recursion; locked thereafter
    let g4 = catalog()
        .into_iter()
        .find(|e| e.label == "G4")
        .unwrap()
        .field;
    let pr = prolong(&g4, Dep::Rho).unwrap();
    let out = format!("zeta_t(G4) = {}\n", pr.zeta1(Var::T).unwrap());
    check_golden("zeta_t_g4.txt", &out);
}

#[test]
fn structure_constant_table() {
    let basis: Vec<_> = catalog().into_iter().map(|e| (e.label, e.field)).collect();
    let table = structure_constants(&basis, lsl_seed()).unwrap();
    check_golden("structure_constants.txt", &table.render());
}

#[test]
fn determining_system_shape() {
    let p = canonical_model();
    let sys = determining_system(&p).unwrap();
    let mut out = format!("{} equations\n", sys.len());
    for eq in &sys {
        out.push_str(&format!("{}\n", eq.monomial));
    }
    check_golden("determining_monomials.txt", &out);
}

#[test]
fn current_triplet_verdicts() {
    let p = canonical_model();
    let entries = catalog_currents(&p).unwrap();
    let mut out = String::new();
    for e in &entries {
        let verdicts = match &e.reference_diff {
            None => "-".to_string(),
            Some(d) => d
                .iter()
                .map(|v| match v {
                    DiffVerdict::Match => "match",
                    DiffVerdict::MatchModuloConstants { .. } => "match-modulo-constants",
                    DiffVerdict::Mismatch { .. } => "mismatch",
                })
                .collect::<Vec<_>>()
                .join(","),
        };
        out.push_str(&format!(
            "{} certificate={} diffs=[{}]\n",
            e.vector.label,
            if e.certified { "exact" } else { "failed" },
            verdicts
        ));
        if let Some(r) = &e.failure_residual {
            out.push_str(&format!("  failure residual = {r}\n"));
        }
    }
    check_golden("current_verdicts.txt", &out);
}
