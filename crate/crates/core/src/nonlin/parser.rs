//! Recursive-descent parser for the nonlinearity language.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := factor (('*' | '/') factor)*
//! factor := '-' factor | base ('^' '-'? integer)?
//! base   := number | ident | '(' expr ')' | func '(' expr ')'
//! func   := sin | cos | exp
//! ident  := x | phi_1 .. phi_9 | z0 | z1 | z2 | z3
//! ```

use super::ast::{Expr, Var};
use crate::error::{Error, Result};

/// Parses `text` into an expression tree.
pub fn parse(text: &str) -> Result<Expr> {
    let mut p = Parser { src: text, bytes: text.as_bytes(), pos: 0 };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.bytes.len() {
        return Err(p.syntax(format!("unexpected '{}'", p.bytes[p.pos] as char)));
    }
    Ok(e)
}

struct Parser<'a> {
    src: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn syntax(&self, msg: impl Into<String>) -> Error {
        Error::Syntax { pos: self.pos, msg: msg.into() }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<Expr> {
        let mut lhs = self.term()?;
        loop {
            if self.eat(b'+') {
                lhs = Expr::add(lhs, self.term()?);
            } else if self.eat(b'-') {
                lhs = Expr::sub(lhs, self.term()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn term(&mut self) -> Result<Expr> {
        let mut lhs = self.factor()?;
        loop {
            if self.eat(b'*') {
                lhs = Expr::mul(lhs, self.factor()?);
            } else if self.eat(b'/') {
                lhs = Expr::div(lhs, self.factor()?);
            } else {
                return Ok(lhs);
            }
        }
    }

    fn factor(&mut self) -> Result<Expr> {
        if self.eat(b'-') {
            return Ok(Expr::neg(self.factor()?));
        }
        let base = self.base()?;
        if !self.eat(b'^') {
            return Ok(base);
        }
        let start = self.peek().map(|_| self.pos).unwrap_or(self.pos);
        let neg = self.eat(b'-');
        self.skip_ws();
        let digits = self.take_while(|c| c.is_ascii_digit());
        let rest = self.take_while(|c| c.is_ascii_alphanumeric() || c == b'.' || c == b'_');
        if digits.is_empty() || !rest.is_empty() {
            if digits.is_empty() && rest.is_empty() && self.peek() != Some(b'(') {
                return Err(Error::Syntax { pos: start, msg: "expected integer exponent".into() });
            }
            return Err(Error::NonIntegerExponent { pos: start });
        }
        let n: i32 = digits.parse().map_err(|_| Error::Syntax { pos: start, msg: "exponent out of range".into() })?;
        Ok(Expr::pow(base, if neg { -n } else { n }))
    }

    fn take_while(&mut self, f: impl Fn(u8) -> bool) -> &'a str {
        let start = self.pos;
        while self.pos < self.bytes.len() && f(self.bytes[self.pos]) {
            self.pos += 1;
        }
        &self.src[start..self.pos]
    }

    fn base(&mut self) -> Result<Expr> {
        let Some(c) = self.peek() else {
            return Err(self.syntax("unexpected end of input"));
        };
        let start = self.pos;
        if c == b'(' {
            self.pos += 1;
            let e = self.expr()?;
            if !self.eat(b')') {
                return Err(Error::Syntax { pos: start, msg: "unbalanced parenthesis".into() });
            }
            return Ok(e);
        }
        if c.is_ascii_digit() || c == b'.' {
            return self.number();
        }
        if c.is_ascii_alphabetic() || c == b'_' {
            let name = self.take_while(|c| c.is_ascii_alphanumeric() || c == b'_');
            let func = match name {
                "sin" => Some(Expr::Sin as fn(Box<Expr>) -> Expr),
                "cos" => Some(Expr::Cos as fn(Box<Expr>) -> Expr),
                "exp" => Some(Expr::Exp as fn(Box<Expr>) -> Expr),
                _ => None,
            };
            if let Some(func) = func {
                let open = self.peek().map(|_| self.pos).unwrap_or(self.pos);
                if !self.eat(b'(') {
                    return Err(self.syntax(format!("expected '(' after {name}")));
                }
                let arg = self.expr()?;
                if !self.eat(b')') {
                    return Err(Error::Syntax { pos: open, msg: "unbalanced parenthesis".into() });
                }
                return Ok(func(Box::new(arg)));
            }
            return ident(name).map(Expr::var).ok_or(Error::UnknownIdentifier { pos: start, name: name.to_string() });
        }
        Err(self.syntax(format!("unexpected '{}'", c as char)))
    }

    fn number(&mut self) -> Result<Expr> {
        let start = self.pos;
        self.take_while(|c| c.is_ascii_digit() || c == b'.');
        if matches!(self.bytes.get(self.pos), Some(b'e' | b'E')) {
            let save = self.pos;
            self.pos += 1;
            if matches!(self.bytes.get(self.pos), Some(b'+' | b'-')) {
                self.pos += 1;
            }
            if self.take_while(|c| c.is_ascii_digit()).is_empty() {
                self.pos = save;
            }
        }
        let text = &self.src[start..self.pos];
        text.parse::<f64>()
            .map(Expr::num)
            .map_err(|_| Error::Syntax { pos: start, msg: format!("malformed number '{text}'") })
    }
}

fn ident(name: &str) -> Option<Var> {
    match name {
        "x" => Some(Var::X),
        "z0" => Some(Var::Z(0)),
        "z1" => Some(Var::Z(1)),
        "z2" => Some(Var::Z(2)),
        "z3" => Some(Var::Z(3)),
        _ => {
            let k: usize = name.strip_prefix("phi_")?.parse().ok()?;
            (1..=9).contains(&k).then(|| Var::Phi(k - 1))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_unary_minus() {
        let e = parse("-z0^2 + 2*z1*z3").unwrap();
        assert_eq!(e.to_string(), "-z0^2 + 2*z1*z3");
        assert_eq!(parse("2^-1").unwrap(), Expr::pow(Expr::num(2.0), -1));
        assert_eq!(parse("1.5e-3*x").unwrap(), Expr::mul(Expr::num(1.5e-3), Expr::var(Var::X)));
    }

    #[test]
    fn errors_carry_positions() {
        match parse("cos(phi_1) * (1 + z1") {
            Err(Error::Syntax { pos, .. }) => assert_eq!(pos, 13),
            other => panic!("{other:?}"),
        }
        assert!(matches!(parse("z0 + w"), Err(Error::UnknownIdentifier { pos: 5, .. })));
        assert!(matches!(parse("phi_0"), Err(Error::UnknownIdentifier { .. })));
        assert!(matches!(parse("z0^2.5"), Err(Error::NonIntegerExponent { pos: 3 })));
        assert!(matches!(parse("z0^x"), Err(Error::NonIntegerExponent { .. })));
        assert!(matches!(parse("z0 +"), Err(Error::Syntax { .. })));
        assert!(matches!(parse("z0 z1"), Err(Error::Syntax { pos: 3, .. })));
    }
}
