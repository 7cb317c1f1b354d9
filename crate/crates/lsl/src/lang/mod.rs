//! Text grammar, parser, and pretty-printer for expressions, PDE
//! definitions, vector fields, and numeric-lab run configs. All formats are
//! newline-delimited UTF-8 with `#` comments; Greek aliases are accepted on
//! input and normalized to ASCII names.

mod lexer;
mod parser;
mod printer;
pub mod testgen;

pub use printer::print_expr;

use crate::expr::{Dep, Expr, ExprNode, Var};
use crate::symmetry::VectorField;
use std::collections::BTreeMap;
use std::collections::BTreeSet;
use std::fmt;
use thiserror::Error;

/// Line/column of a token, 1-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Pos {
    pub line: u32,
    pub col: u32,
}

impl fmt::Display for Pos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Error, PartialEq)]
pub enum LangError {
    #[error("syntax error at {pos}: {message}")]
    Syntax { pos: Pos, message: String },
    #[error("unknown {role} '{name}' at {pos}")]
    UnknownIdentifier {
        pos: Pos,
        name: String,
        role: &'static str,
    },
    #[error("missing coefficient '{0}' in vector-field document")]
    MissingCoefficient(&'static str),
    #[error("vector-field coefficient {name} is not a point-symmetry coefficient: {reason}")]
    NotPointCoefficient { name: &'static str, reason: String },
    #[error("invalid document: {0}")]
    InvalidDocument(String),
}

/// Declared symbols for strict parsing. Bare-expression parsing uses the
/// lenient context, which auto-declares unknown identifiers (as parameters,
/// or as functions when applied).
#[derive(Debug, Clone)]
pub struct SymbolContext {
    params: BTreeSet<String>,
    funcs: BTreeSet<String>,
    lenient: bool,
}

impl SymbolContext {
    pub fn lenient() -> Self {
        SymbolContext {
            params: Self::default_params(),
            funcs: Self::default_funcs(),
            lenient: true,
        }
    }

    pub fn strict() -> Self {
        SymbolContext {
            params: Self::default_params(),
            funcs: Self::default_funcs(),
            lenient: false,
        }
    }

    pub fn empty_strict() -> Self {
        SymbolContext {
            params: BTreeSet::new(),
            funcs: BTreeSet::new(),
            lenient: false,
        }
    }

    fn default_params() -> BTreeSet<String> {
        ["m", "g", "kB", "T", "h", "alpha", "D"]
            .iter()
            .map(|s| s.to_string())
            .collect()
    }

    fn default_funcs() -> BTreeSet<String> {
        ["varrho", "w"].iter().map(|s| s.to_string()).collect()
    }

    pub fn declare_param(&mut self, name: &str) -> &mut Self {
        self.params.insert(name.to_string());
        self
    }

    pub fn declare_function(&mut self, name: &str) -> &mut Self {
        self.funcs.insert(name.to_string());
        self
    }

    fn is_parameter(&self, name: &str) -> bool {
        self.lenient || self.params.contains(name)
    }

    fn is_function(&self, name: &str) -> bool {
        self.lenient || self.funcs.contains(name)
    }
}

/// Parses one expression in the lenient default context.
pub fn parse_expr(text: &str) -> Result<Expr, LangError> {
    parser::Parser::new(text, &SymbolContext::lenient())?.parse_full_expr()
}

/// Parses one expression against declared symbols only.
pub fn parse_expr_with(text: &str, ctx: &SymbolContext) -> Result<Expr, LangError> {
    parser::Parser::new(text, ctx)?.parse_full_expr()
}

// ----- vector-field documents -----

/// Parses the four-coefficient vector-field form
/// `xi_x=...; xi_y=...; xi_t=...; eta=...`.
pub fn parse_vectorfield(text: &str) -> Result<VectorField, LangError> {
    let ctx = SymbolContext::lenient();
    let mut seen: BTreeMap<&'static str, Expr> = BTreeMap::new();
    for raw in text.split([';', '\n']) {
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let (key, value) = stripped.split_once('=').ok_or_else(|| {
            LangError::InvalidDocument(format!("expected 'name = expression', got '{stripped}'"))
        })?;
        let name: &'static str = match key.trim() {
            "xi_x" => "xi_x",
            "xi_y" => "xi_y",
            "xi_t" => "xi_t",
            "eta" => "eta",
            other => {
                return Err(LangError::InvalidDocument(format!(
                    "unknown vector-field coefficient '{other}'"
                )))
            }
        };
        let e = parse_expr_with(value, &ctx)?;
        validate_point_coefficient(name, &e)?;
        seen.insert(name, e);
    }
    let take = |seen: &BTreeMap<&'static str, Expr>, k: &'static str| {
        seen.get(k).cloned().ok_or(LangError::MissingCoefficient(k))
    };
    Ok(VectorField::new(
        take(&seen, "xi_x")?,
        take(&seen, "xi_y")?,
        take(&seen, "xi_t")?,
        take(&seen, "eta")?,
    ))
}

/// Point-symmetry coefficients live on (x, y, t, rho): jet variables of
/// order >= 1, foreign dependent variables, reduced variables and ansatz
/// symbols are all rejected.
fn validate_point_coefficient(name: &'static str, e: &Expr) -> Result<(), LangError> {
    let mut bad: Option<String> = None;
    e.visit(&mut |n| {
        if bad.is_some() {
            return;
        }
        match n.node() {
            ExprNode::Jet(j) if j.order() >= 1 => {
                bad = Some(format!("contains jet variable {j}"));
            }
            ExprNode::Jet(j) if j.dep != Dep::Rho => {
                bad = Some(format!("contains dependent variable {}", j.dep));
            }
            ExprNode::Var(v) if matches!(v, Var::Mu | Var::Nu) => {
                bad = Some(format!("contains reduced variable {v}"));
            }
            ExprNode::Ansatz(..) => {
                bad = Some("contains an ansatz symbol".to_string());
            }
            _ => {}
        }
    });
    match bad {
        Some(reason) => Err(LangError::NotPointCoefficient { name, reason }),
        None => Ok(()),
    }
}

pub fn print_vectorfield(v: &VectorField) -> String {
    format!(
        "xi_x = {}; xi_y = {}; xi_t = {}; eta = {}",
        print_expr(&v.xi_x),
        print_expr(&v.xi_y),
        print_expr(&v.xi_t),
        print_expr(&v.eta)
    )
}

// ----- .pde documents -----

/// A parsed `.pde` document: `vars x y t; dep rho; params m g kB T h;
/// eq <expr> = 0;`
#[derive(Debug, Clone)]
pub struct PdeDoc {
    pub vars: Vec<Var>,
    pub dep: Dep,
    pub params: Vec<String>,
    pub residual: Expr,
}

pub fn parse_pde(text: &str) -> Result<PdeDoc, LangError> {
    let mut vars: Vec<Var> = Vec::new();
    let mut dep: Option<Dep> = None;
    let mut params: Vec<String> = Vec::new();
    let mut residual: Option<Expr> = None;
    let mut ctx = SymbolContext::empty_strict();

    for raw in text.split([';', '\n']) {
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let (head, rest) = stripped
            .split_once(char::is_whitespace)
            .unwrap_or((stripped, ""));
        match head {
            "vars" => {
                for name in rest.split_whitespace() {
                    let v = Var::from_name(name).ok_or_else(|| {
                        LangError::InvalidDocument(format!("unknown variable '{name}'"))
                    })?;
                    vars.push(v);
                }
            }
            "dep" => {
                let name = rest.trim();
                dep = Some(Dep::from_name(name).ok_or_else(|| {
                    LangError::InvalidDocument(format!("unknown dependent variable '{name}'"))
                })?);
            }
            "params" => {
                for name in rest.split_whitespace() {
                    params.push(name.to_string());
                    ctx.declare_param(name);
                }
            }
            "eq" => {
                let (lhs, rhs) = rest.split_once('=').ok_or_else(|| {
                    LangError::InvalidDocument("eq statement needs '<expr> = 0'".to_string())
                })?;
                if rhs.trim() != "0" {
                    return Err(LangError::InvalidDocument(
                        "right-hand side of an eq statement must be 0".to_string(),
                    ));
                }
                residual = Some(parse_expr_with(lhs, &ctx)?);
            }
            other => {
                return Err(LangError::InvalidDocument(format!(
                    "unknown statement '{other}'"
                )))
            }
        }
    }

    Ok(PdeDoc {
        vars,
        dep: dep.ok_or_else(|| LangError::InvalidDocument("missing dep statement".into()))?,
        params,
        residual: residual
            .ok_or_else(|| LangError::InvalidDocument("missing eq statement".into()))?,
    })
}

/// Writes a system back to the `.pde` document form.
pub fn print_pde(p: &crate::model::PdeSystem) -> String {
    let vars: Vec<&str> = p.vars().iter().map(|v| v.name()).collect();
    format!(
        "vars {}; dep {}; params {};\neq {} = 0;\n",
        vars.join(" "),
        p.dep().name(),
        p.positive_params().join(" "),
        print_expr(p.residual())
    )
}

// ----- .cfg documents -----

/// Flat `key = value` configuration for numeric-lab runs.
#[derive(Debug, Clone, Default)]
pub struct CfgDoc {
    entries: BTreeMap<String, String>,
}

impl CfgDoc {
    pub fn parse(text: &str) -> Result<CfgDoc, LangError> {
        let mut entries = BTreeMap::new();
        for raw in text.lines() {
            let stripped = raw.split('#').next().unwrap_or("").trim();
            if stripped.is_empty() {
                continue;
            }
            let (k, v) = stripped.split_once('=').ok_or_else(|| {
                LangError::InvalidDocument(format!("expected 'key = value', got '{stripped}'"))
            })?;
            entries.insert(k.trim().to_string(), v.trim().to_string());
        }
        Ok(CfgDoc { entries })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries.get(key).map(|s| s.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, LangError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<f64>().map(Some).map_err(|_| {
                LangError::InvalidDocument(format!("'{key}' must be a number, got '{v}'"))
            }),
        }
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, LangError> {
        match self.entries.get(key) {
            None => Ok(None),
            Some(v) => v.parse::<usize>().map(Some).map_err(|_| {
                LangError::InvalidDocument(format!("'{key}' must be an integer, got '{v}'"))
            }),
        }
    }

    pub fn keys(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(|s| s.as_str())
    }
}

// ----- generic documents -----

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DocKind {
    Expression,
    Pde,
    VectorField,
    Config,
}

/// A parsed source document together with its raw text.
#[derive(Debug, Clone)]
pub enum SourceDoc {
    Expression(Expr),
    Pde(PdeDoc),
    VectorField(VectorField),
    Config(CfgDoc),
}

pub fn parse_document(kind: DocKind, text: &str) -> Result<SourceDoc, LangError> {
    Ok(match kind {
        DocKind::Expression => SourceDoc::Expression(parse_expr(text)?),
        DocKind::Pde => SourceDoc::Pde(parse_pde(text)?),
        DocKind::VectorField => SourceDoc::VectorField(parse_vectorfield(text)?),
        DocKind::Config => SourceDoc::Config(CfgDoc::parse(text)?),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::params;

    #[test]
    fn parses_zero() {
        assert!(parse_expr("0").unwrap().is_zero());
    }

    #[test]
    fn parses_model_residual_string() {
        let text = "4*pi*m*h^2*rho[t] + I*h^3*(rho[y,y]-rho[x,x]) \
                    + 32*pi^3*m^2*g*kB*T*(y-x)^2*rho";
        let parsed = parse_expr(text).unwrap();
        assert_eq!(parsed, crate::model::canonical_model().residual().clone());
    }

    #[test]
    fn whitespace_and_comments_ignored() {
        let a = parse_expr("x + y # trailing comment").unwrap();
        let b = parse_expr("  x+y ").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn greek_aliases_accepted() {
        let a = parse_expr("γ*ρ + ϖ'(y-x)").unwrap();
        let b = parse_expr("g*rho + w'(y-x)").unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn print_then_parse_is_identity_on_samples() {
        let samples = [
            "x + y",
            "3/4*x/h^2",
            "exp(-(y-x)^2*t)*w(y-x)",
            "I*h^3*rho[x,y]",
            "2*pi*I*m*x*rho/h",
            "xi_x[x,rho]*rho[x]",
            "(y-x)^(-1)",
        ];
        for s in samples {
            let e = parse_expr(s).unwrap();
            let printed = print_expr(&e);
            let back = parse_expr(&printed).unwrap();
            assert_eq!(e, back, "round trip failed for {s} -> {printed}");
            assert_eq!(printed, print_expr(&back));
        }
    }

    #[test]
    fn normalization_example() {
        let e = parse_expr("x+y").unwrap();
        assert_eq!(print_expr(&e), "x + y");
    }

    #[test]
    fn syntax_errors_carry_positions() {
        let err = parse_expr("x + * y").unwrap_err();
        match err {
            LangError::Syntax { pos, .. } => {
                assert_eq!(pos.line, 1);
                assert_eq!(pos.col, 5);
            }
            other => panic!("expected syntax error, got {other:?}"),
        }
    }

    #[test]
    fn strict_context_rejects_unknowns() {
        let ctx = SymbolContext::empty_strict();
        assert!(matches!(
            parse_expr_with("q + 1", &ctx),
            Err(LangError::UnknownIdentifier { .. })
        ));
    }

    #[test]
    fn vectorfield_document_roundtrip() {
        let vf = parse_vectorfield("xi_x=0; xi_y=0; xi_t=1; eta=0").unwrap();
        assert!(vf.xi_x.is_zero() && vf.xi_y.is_zero());
        assert!(vf.xi_t.is_one());
        let printed = print_vectorfield(&vf);
        let back = parse_vectorfield(&printed).unwrap();
        assert_eq!(vf.xi_t, back.xi_t);
    }

    #[test]
    fn vectorfield_rejects_jet_coefficients() {
        let err = parse_vectorfield("xi_x=0; xi_y=0; xi_t=0; eta=rho[x]").unwrap_err();
        assert!(matches!(
            err,
            LangError::NotPointCoefficient { name: "eta", .. }
        ));
    }

    #[test]
    fn vectorfield_requires_all_coefficients() {
        let err = parse_vectorfield("xi_x=0; xi_y=0; xi_t=1").unwrap_err();
        assert!(matches!(err, LangError::MissingCoefficient("eta")));
    }

    #[test]
    fn pde_document_parses_model() {
        let text = "vars x y t; dep rho; params m g kB T h;\n\
                    eq 4*pi*m*h^2*rho[t] + I*h^3*(rho[y,y]-rho[x,x]) \
                    + 32*pi^3*m^2*g*kB*T*(y-x)^2*rho = 0;";
        let doc = parse_pde(text).unwrap();
        assert_eq!(doc.dep, Dep::Rho);
        assert_eq!(doc.vars, vec![Var::X, Var::Y, Var::T]);
        assert!(doc.params.contains(&params::PLANCK.to_string()));
        assert_eq!(
            doc.residual,
            crate::model::canonical_model().residual().clone()
        );
    }

    #[test]
    fn pde_documents_round_trip() {
        let p = crate::model::canonical_model();
        let text = print_pde(&p);
        let doc = parse_pde(&text).unwrap();
        assert_eq!(&doc.residual, p.residual());
        assert_eq!(doc.dep, p.dep());
        assert_eq!(doc.vars, p.vars());
    }

    #[test]
    fn cfg_document_types() {
        let cfg = CfgDoc::parse("n = 129\nlx = 8\ndtau = 0.001 # step\ninit = exp(-(y-x)^2/4)\n")
            .unwrap();
        assert_eq!(cfg.get_usize("n").unwrap(), Some(129));
        assert_eq!(cfg.get_f64("dtau").unwrap(), Some(0.001));
        assert_eq!(cfg.get("init"), Some("exp(-(y-x)^2/4)"));
        assert!(cfg.get("absent").is_none());
    }
}
