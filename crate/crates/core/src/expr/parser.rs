//! Recursive-descent parser.
//!
//! Precedence, loosest first: `+ -`, `* /`, unary `-`, `^`. All binary
//! operators associate to the left. An exponent may carry its own unary minus
//! (`x^-1`).

use super::{BinOp, Expr, Func, Symbol, Var};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(Symbol),
    Op(char),
    End,
}

#[derive(Debug, Clone)]
struct Token {
    tok: Tok,
    pos: usize,
    /// whether whitespace separates this token from the previous one
    spaced: bool,
}

fn syntax(position: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        position,
        message: message.into(),
    }
}

fn lex(text: &str) -> Result<Vec<Token>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    let mut spaced = false;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            spaced = true;
            i += 1;
            continue;
        }
        let start = i;
        let tok = if c.is_ascii_digit() || (c == '.' && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit()) {
            while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                i += 1;
            }
            if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                let mut j = i + 1;
                if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                    j += 1;
                }
                if j < bytes.len() && bytes[j].is_ascii_digit() {
                    while j < bytes.len() && bytes[j].is_ascii_digit() {
                        j += 1;
                    }
                    i = j;
                }
            }
            let lit = &text[start..i];
            let v: f64 = lit
                .parse()
                .map_err(|_| syntax(start, format!("malformed number `{lit}`")))?;
            Tok::Num(v)
        } else if c.is_ascii_alphabetic() || c == '_' {
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            let word = &text[start..i];
            match component_symbol(word) {
                Some(component) => {
                    let mut order = 0;
                    while i < bytes.len() && bytes[i] == b'\'' {
                        order += 1;
                        i += 1;
                    }
                    Tok::Sym(Symbol::new(component, order))
                }
                None => Tok::Ident(word.to_string()),
            }
        } else if "+-*/^(),".contains(c) {
            i += 1;
            Tok::Op(c)
        } else if c == '\'' {
            return Err(syntax(i, "derivative tick must follow a component symbol"));
        } else {
            return Err(syntax(i, format!("unexpected character `{c}`")));
        };
        out.push(Token {
            tok,
            pos: start,
            spaced,
        });
        spaced = false;
    }
    out.push(Token {
        tok: Tok::End,
        pos: text.len(),
        spaced,
    });
    Ok(out)
}

fn component_symbol(word: &str) -> Option<usize> {
    let digits = word.strip_prefix('u')?;
    if digits.is_empty() || !digits.bytes().all(|b| b.is_ascii_digit()) {
        return None;
    }
    digits.parse().ok().filter(|&i: &usize| i >= 1)
}

struct Parser {
    toks: Vec<Token>,
    at: usize,
}

impl Parser {
    fn peek(&self) -> &Token {
        &self.toks[self.at]
    }

    fn bump(&mut self) -> Token {
        let t = self.toks[self.at].clone();
        if self.at + 1 < self.toks.len() {
            self.at += 1;
        }
        t
    }

    fn eat(&mut self, op: char) -> bool {
        if self.peek().tok == Tok::Op(op) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, op: char) -> Result<()> {
        if self.eat(op) {
            Ok(())
        } else {
            let t = self.peek();
            Err(syntax(t.pos, format!("expected `{op}`")))
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op('+') => BinOp::Add,
                Tok::Op('-') => BinOp::Sub,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.term()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek().tok {
                Tok::Op('*') => BinOp::Mul,
                Tok::Op('/') => BinOp::Div,
                _ => return Ok(lhs),
            };
            self.bump();
            let rhs = self.unary()?;
            lhs = Expr::bin(op, lhs, rhs);
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.unary()?)));
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let mut base = self.primary()?;
        while self.eat('^') {
            let exponent = self.exponent()?;
            base = Expr::bin(BinOp::Pow, base, exponent);
        }
        Ok(base)
    }

    fn exponent(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(Expr::Neg(Box::new(self.exponent()?)));
        }
        self.primary()
    }

    fn primary(&mut self) -> Result<Expr> {
        let t = self.bump();
        match t.tok {
            Tok::Num(v) => Ok(Expr::Num(v)),
            Tok::Op('(') => {
                let e = self.expr()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Sym(sym) => {
                let next = self.peek();
                if next.tok == Tok::Op('(') && !next.spaced {
                    let open = next.pos;
                    self.bump();
                    let arg = self.expr()?;
                    self.expect(')')?;
                    let c = constant_value(&arg)
                        .ok_or_else(|| syntax(open, "point evaluation needs a constant argument"))?;
                    if !(0.0..=1.0).contains(&c) {
                        return Err(syntax(open, format!("evaluation point {c} outside [0, 1]")));
                    }
                    Ok(Expr::PointEval(sym, c))
                } else {
                    Ok(Expr::Sym(sym))
                }
            }
            Tok::Ident(name) => match name.as_str() {
                "t" => Ok(Expr::Var(Var::T)),
                "s" => Ok(Expr::Var(Var::S)),
                "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                "e" => Ok(Expr::Num(std::f64::consts::E)),
                "int" => {
                    self.expect('(')?;
                    let body = self.expr()?;
                    self.expect(')')?;
                    Ok(Expr::Int(Box::new(body)))
                }
                other => match Func::from_name(other) {
                    Some(func) => {
                        self.expect('(')?;
                        let arg = self.expr()?;
                        self.expect(')')?;
                        Ok(Expr::Call(func, Box::new(arg)))
                    }
                    None => Err(Error::UnknownIdentifier {
                        name: other.to_string(),
                        position: t.pos,
                    }),
                },
            },
            Tok::End => Err(syntax(t.pos, "unexpected end of input")),
            Tok::Op(c) => Err(syntax(t.pos, format!("unexpected `{c}`"))),
        }
    }
}

/// Fold a variable-free expression to a number.
fn constant_value(e: &Expr) -> Option<f64> {
    if e.uses_var(Var::T) || e.uses_var(Var::S) || !e.symbols().is_empty() || e.has_integral() {
        return None;
    }
    e.eval_ts(0.0, 0.0).ok()
}

/// Parse expression text into an AST.
pub fn parse(text: &str) -> Result<Expr> {
    if text.trim().is_empty() {
        return Err(syntax(0, "empty expression"));
    }
    let toks = lex(text)?;
    let mut p = Parser { toks, at: 0 };
    let e = p.expr()?;
    let rest = p.peek();
    if rest.tok != Tok::End {
        return Err(syntax(rest.pos, "trailing input"));
    }
    Ok(e)
}
