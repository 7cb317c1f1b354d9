//! Recursive-descent parser for the expression grammar.
//!
//! Infix arithmetic with `^` for rational powers, `exp(...)` builtin, `I`
//! and `pi` reserved, jet variables as `rho[x,y]`, ansatz derivatives as
//! `xi_x[x,rho]`, and arbitrary unary functions applied with parentheses
//! plus `'` for derivative orders.

use super::lexer::{Lexer, Tok};
use super::{LangError, SymbolContext};
use crate::expr::{AnsatzFn, AnsatzIndex, Dep, Expr, Var, MAX_JET_ORDER};
use num::bigint::BigInt;
use num::rational::BigRational;

pub struct Parser<'c> {
    lx: Lexer,
    ctx: &'c SymbolContext,
}

impl<'c> Parser<'c> {
    pub fn new(text: &str, ctx: &'c SymbolContext) -> Result<Self, LangError> {
        Ok(Parser {
            lx: Lexer::new(text)?,
            ctx,
        })
    }

    pub fn parse_full_expr(mut self) -> Result<Expr, LangError> {
        let e = self.expr()?;
        if !self.lx.at_eof() {
            return Err(LangError::Syntax {
                pos: self.lx.pos(),
                message: format!("unexpected trailing token '{}'", self.lx.peek()),
            });
        }
        Ok(e)
    }

    fn expr(&mut self) -> Result<Expr, LangError> {
        let mut acc = self.term()?;
        loop {
            match self.lx.peek() {
                Tok::Plus => {
                    self.lx.next();
                    acc = acc + self.term()?;
                }
                Tok::Minus => {
                    self.lx.next();
                    acc = acc - self.term()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, LangError> {
        let mut acc = self.unary()?;
        loop {
            match self.lx.peek() {
                Tok::Star => {
                    self.lx.next();
                    acc = acc * self.unary()?;
                }
                Tok::Slash => {
                    self.lx.next();
                    acc = acc / self.unary()?;
                }
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<Expr, LangError> {
        let mut negate = false;
        loop {
            match self.lx.peek() {
                Tok::Minus => {
                    self.lx.next();
                    negate = !negate;
                }
                Tok::Plus => {
                    self.lx.next();
                }
                _ => break,
            }
        }
        let p = self.power()?;
        Ok(if negate { -p } else { p })
    }

    fn power(&mut self) -> Result<Expr, LangError> {
        let base = self.primary()?;
        if matches!(self.lx.peek(), Tok::Caret) {
            self.lx.next();
            let r = self.exponent()?;
            return Ok(Expr::powr(base, r));
        }
        Ok(base)
    }

    /// Exponent: `INT`, `-INT`, or a parenthesized signed rational.
    fn exponent(&mut self) -> Result<BigRational, LangError> {
        let pos = self.lx.pos();
        match self.lx.next() {
            (Tok::Int(n), _) => Ok(BigRational::from(n)),
            (Tok::Minus, _) => match self.lx.next() {
                (Tok::Int(n), _) => Ok(-BigRational::from(n)),
                (got, pos) => Err(LangError::Syntax {
                    pos,
                    message: format!("expected integer exponent, got '{got}'"),
                }),
            },
            (Tok::LParen, _) => {
                let mut neg = false;
                if matches!(self.lx.peek(), Tok::Minus) {
                    self.lx.next();
                    neg = true;
                }
                let numer = match self.lx.next() {
                    (Tok::Int(n), _) => n,
                    (got, pos) => {
                        return Err(LangError::Syntax {
                            pos,
                            message: format!("expected integer in exponent, got '{got}'"),
                        })
                    }
                };
                let denom = if matches!(self.lx.peek(), Tok::Slash) {
                    self.lx.next();
                    match self.lx.next() {
                        (Tok::Int(n), _) => n,
                        (got, pos) => {
                            return Err(LangError::Syntax {
                                pos,
                                message: format!("expected denominator, got '{got}'"),
                            })
                        }
                    }
                } else {
                    BigInt::from(1)
                };
                self.lx.expect(&Tok::RParen)?;
                let mut r = BigRational::new(numer, denom);
                if neg {
                    r = -r;
                }
                Ok(r)
            }
            (got, _) => Err(LangError::Syntax {
                pos,
                message: format!("expected exponent, got '{got}'"),
            }),
        }
    }

    fn primary(&mut self) -> Result<Expr, LangError> {
        match self.lx.next() {
            (Tok::Int(n), _) => Ok(Expr::num(BigRational::from(n))),
            (Tok::LParen, _) => {
                let e = self.expr()?;
                self.lx.expect(&Tok::RParen)?;
                Ok(e)
            }
            (Tok::Ident(name), pos) => self.identifier(&name, pos),
            (got, pos) => Err(LangError::Syntax {
                pos,
                message: format!("expected expression, got '{got}'"),
            }),
        }
    }

    fn identifier(&mut self, name: &str, pos: super::Pos) -> Result<Expr, LangError> {
        match name {
            "I" => return Ok(Expr::imag()),
            "pi" => return Ok(Expr::pi()),
            "exp" => {
                self.lx.expect(&Tok::LParen)?;
                let arg = self.expr()?;
                self.lx.expect(&Tok::RParen)?;
                return Ok(Expr::exp(arg));
            }
            _ => {}
        }

        // derivative primes followed by an application
        let mut order: u32 = 0;
        while matches!(self.lx.peek(), Tok::Prime) {
            self.lx.next();
            order += 1;
        }
        if order > 0 || matches!(self.lx.peek(), Tok::LParen) {
            if !self.ctx.is_function(name) {
                return Err(LangError::UnknownIdentifier {
                    pos,
                    name: name.to_string(),
                    role: "function",
                });
            }
            self.lx.expect(&Tok::LParen)?;
            let arg = self.expr()?;
            self.lx.expect(&Tok::RParen)?;
            return Ok(Expr::func_deriv(name, order, arg));
        }

        // bracketed index: jet variable or ansatz derivative
        if matches!(self.lx.peek(), Tok::LBracket) {
            let names = self.index_names()?;
            if let Some(dep) = Dep::from_name(name) {
                let mut vars = Vec::new();
                for n in &names {
                    match Var::from_name(n) {
                        Some(v) => vars.push(v),
                        None => {
                            return Err(LangError::Syntax {
                                pos,
                                message: format!("'{n}' is not an independent variable"),
                            })
                        }
                    }
                }
                if vars.len() as u32 > MAX_JET_ORDER {
                    return Err(LangError::Syntax {
                        pos,
                        message: format!(
                            "jet order {} exceeds the maximum {MAX_JET_ORDER}",
                            vars.len()
                        ),
                    });
                }
                return Ok(Expr::jet(dep, &vars));
            }
            if let Some(f) = AnsatzFn::from_name(name) {
                let name_refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
                let ix = AnsatzIndex::of_names(&name_refs).ok_or_else(|| LangError::Syntax {
                    pos,
                    message: format!("invalid ansatz index [{}]", names.join(",")),
                })?;
                return Ok(Expr::ansatz(f, ix));
            }
            return Err(LangError::Syntax {
                pos,
                message: format!("'{name}' does not take a derivative index"),
            });
        }

        if let Some(v) = Var::from_name(name) {
            return Ok(Expr::var(v));
        }
        if let Some(dep) = Dep::from_name(name) {
            return Ok(Expr::jet(dep, &[]));
        }
        if let Some(f) = AnsatzFn::from_name(name) {
            return Ok(Expr::ansatz(f, AnsatzIndex::empty()));
        }
        if self.ctx.is_parameter(name) {
            return Ok(Expr::param(name));
        }
        Err(LangError::UnknownIdentifier {
            pos,
            name: name.to_string(),
            role: "symbol",
        })
    }

    fn index_names(&mut self) -> Result<Vec<String>, LangError> {
        self.lx.expect(&Tok::LBracket)?;
        let mut names = Vec::new();
        if matches!(self.lx.peek(), Tok::RBracket) {
            self.lx.next();
            return Ok(names);
        }
        loop {
            match self.lx.next() {
                (Tok::Ident(n), _) => names.push(n),
                (got, pos) => {
                    return Err(LangError::Syntax {
                        pos,
                        message: format!("expected index variable, got '{got}'"),
                    })
                }
            }
            match self.lx.next() {
                (Tok::Comma, _) => continue,
                (Tok::RBracket, _) => return Ok(names),
                (got, pos) => {
                    return Err(LangError::Syntax {
                        pos,
                        message: format!("expected ',' or ']', got '{got}'"),
                    })
                }
            }
        }
    }
}
