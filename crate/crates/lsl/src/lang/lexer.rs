//! Tokenizer for the expression and document grammars. Tracks line/column
//! positions; `#` starts a comment to end of line.

use super::{LangError, Pos};
use num::bigint::BigInt;

#[derive(Debug, Clone, PartialEq)]
pub enum Tok {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Comma,
    Semi,
    Equals,
    Prime,
    Eof,
}

impl std::fmt::Display for Tok {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tok::Int(n) => write!(f, "{n}"),
            Tok::Ident(s) => write!(f, "{s}"),
            Tok::Plus => write!(f, "+"),
            Tok::Minus => write!(f, "-"),
            Tok::Star => write!(f, "*"),
            Tok::Slash => write!(f, "/"),
            Tok::Caret => write!(f, "^"),
            Tok::LParen => write!(f, "("),
            Tok::RParen => write!(f, ")"),
            Tok::LBracket => write!(f, "["),
            Tok::RBracket => write!(f, "]"),
            Tok::Comma => write!(f, ","),
            Tok::Semi => write!(f, ";"),
            Tok::Equals => write!(f, "="),
            Tok::Prime => write!(f, "'"),
            Tok::Eof => write!(f, "<eof>"),
        }
    }
}

/// Greek aliases accepted in input; canonical ASCII names are produced.
fn alias(name: &str) -> &str {
    match name {
        "ρ" => "rho",
        "ϑ" | "θ" => "theta",
        "Φ" => "Phi",
        "Σ" => "Sigma",
        "μ" => "mu",
        "ν" => "nu",
        "γ" => "g",
        "ϖ" => "w",
        "ϱ" => "varrho",
        "π" => "pi",
        _ => name,
    }
}

pub struct Lexer {
    toks: Vec<(Tok, Pos)>,
    at: usize,
}

impl Lexer {
    pub fn new(text: &str) -> Result<Lexer, LangError> {
        let mut toks = Vec::new();
        let mut line = 1u32;
        let mut col = 1u32;
        let mut chars = text.chars().peekable();
        while let Some(&c) = chars.peek() {
            let pos = Pos { line, col };
            match c {
                '\n' => {
                    chars.next();
                    line += 1;
                    col = 1;
                }
                c if c.is_whitespace() => {
                    chars.next();
                    col += 1;
                }
                '#' => {
                    while let Some(&c) = chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        chars.next();
                        col += 1;
                    }
                }
                '0'..='9' => {
                    let mut digits = String::new();
                    while let Some(&d) = chars.peek() {
                        if d.is_ascii_digit() {
                            digits.push(d);
                            chars.next();
                            col += 1;
                        } else {
                            break;
                        }
                    }
                    let n: BigInt = digits.parse().expect("digits parse");
                    toks.push((Tok::Int(n), pos));
                }
                c if c.is_alphabetic() || c == '_' => {
                    let mut name = String::new();
                    while let Some(&d) = chars.peek() {
                        if d.is_alphanumeric() || d == '_' {
                            name.push(d);
                            chars.next();
                            col += 1;
                        } else {
                            break;
                        }
                    }
                    toks.push((Tok::Ident(alias(&name).to_string()), pos));
                }
                _ => {
                    let tok = match c {
                        '+' => Tok::Plus,
                        '-' => Tok::Minus,
                        '*' => Tok::Star,
                        '/' => Tok::Slash,
                        '^' => Tok::Caret,
                        '(' => Tok::LParen,
                        ')' => Tok::RParen,
                        '[' => Tok::LBracket,
                        ']' => Tok::RBracket,
                        ',' => Tok::Comma,
                        ';' => Tok::Semi,
                        '=' => Tok::Equals,
                        '\'' => Tok::Prime,
                        other => {
                            return Err(LangError::Syntax {
                                pos,
                                message: format!("unexpected character '{other}'"),
                            })
                        }
                    };
                    chars.next();
                    col += 1;
                    toks.push((tok, pos));
                }
            }
        }
        toks.push((Tok::Eof, Pos { line, col }));
        Ok(Lexer { toks, at: 0 })
    }

    pub fn peek(&self) -> &Tok {
        &self.toks[self.at].0
    }

    pub fn pos(&self) -> Pos {
        self.toks[self.at].1
    }

    pub fn next(&mut self) -> (Tok, Pos) {
        let item = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        item
    }

    pub fn expect(&mut self, want: &Tok) -> Result<(), LangError> {
        let pos = self.pos();
        let (got, _) = self.next();
        if &got == want {
            Ok(())
        } else {
            Err(LangError::Syntax {
                pos,
                message: format!("expected '{want}', got '{got}'"),
            })
        }
    }

    pub fn at_eof(&self) -> bool {
        matches!(self.peek(), Tok::Eof)
    }
}
