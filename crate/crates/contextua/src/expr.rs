//! Real-valued arithmetic expressions for exact ray coordinates.
//!
//! Accepts decimal literals, `pi`, `+ - * / ^`, parentheses and `sqrt(..)`,
//! so that entries such as `"1/sqrt(3)"` or `"sqrt(2+sqrt(2))/2"` can be
//! written as they appear in the literature.

use std::iter::Peekable;
use std::str::Chars;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("{message} at offset {offset}")]
pub struct ExprError {
    pub offset: usize,
    pub message: String,
}

pub fn evaluate(text: &str) -> Result<f64, ExprError> {
    let mut p = Parser { chars: text.chars().peekable(), offset: 0 };
    let v = p.expr()?;
    p.skip_ws();
    if p.chars.peek().is_some() {
        return Err(p.error("unexpected trailing input"));
    }
    if !v.is_finite() {
        return Err(p.error("value is not finite"));
    }
    Ok(v)
}

struct Parser<'a> {
    chars: Peekable<Chars<'a>>,
    offset: usize,
}

impl Parser<'_> {
    fn error(&self, message: &str) -> ExprError {
        ExprError { offset: self.offset, message: message.to_string() }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next();
        if c.is_some() {
            self.offset += 1;
        }
        c
    }

    fn skip_ws(&mut self) {
        while self.chars.peek().is_some_and(|c| c.is_whitespace()) {
            self.bump();
        }
    }

    fn eat(&mut self, want: char) -> bool {
        self.skip_ws();
        if self.chars.peek() == Some(&want) {
            self.bump();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<f64, ExprError> {
        let mut v = self.term()?;
        loop {
            if self.eat('+') {
                v += self.term()?;
            } else if self.eat('-') {
                v -= self.term()?;
            } else {
                return Ok(v);
            }
        }
    }

    fn term(&mut self) -> Result<f64, ExprError> {
        let mut v = self.unary()?;
        loop {
            if self.eat('*') {
                v *= self.unary()?;
            } else if self.eat('/') {
                let d = self.unary()?;
                if d == 0.0 {
                    return Err(self.error("division by zero"));
                }
                v /= d;
            } else {
                return Ok(v);
            }
        }
    }

    fn unary(&mut self) -> Result<f64, ExprError> {
        if self.eat('-') {
            return Ok(-self.unary()?);
        }
        if self.eat('+') {
            return self.unary();
        }
        let base = self.primary()?;
        if self.eat('^') {
            let e = self.unary()?;
            return Ok(base.powf(e));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<f64, ExprError> {
        self.skip_ws();
        match self.chars.peek().copied() {
            Some('(') => {
                self.bump();
                let v = self.expr()?;
                if !self.eat(')') {
                    return Err(self.error("expected ')'"));
                }
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => {
                let mut name = String::new();
                while let Some(&c) = self.chars.peek() {
                    if !c.is_ascii_alphanumeric() {
                        break;
                    }
                    name.push(c);
                    self.bump();
                }
                match name.as_str() {
                    "pi" => Ok(std::f64::consts::PI),
                    "sqrt" => {
                        if !self.eat('(') {
                            return Err(self.error("expected '(' after sqrt"));
                        }
                        let v = self.expr()?;
                        if !self.eat(')') {
                            return Err(self.error("expected ')'"));
                        }
                        if v < 0.0 {
                            return Err(self.error("sqrt of a negative number"));
                        }
                        Ok(v.sqrt())
                    }
                    _ => Err(self.error(&format!("unknown name '{name}'"))),
                }
            }
            Some(_) => Err(self.error("unexpected character")),
            None => Err(self.error("unexpected end of input")),
        }
    }

    fn number(&mut self) -> Result<f64, ExprError> {
        let start = self.offset;
        let mut s = String::new();
        while let Some(&c) = self.chars.peek() {
            let exponent_sign = (c == '-' || c == '+') && s.ends_with(['e', 'E']);
            if c.is_ascii_digit() || c == '.' || c == 'e' || c == 'E' || exponent_sign {
                s.push(c);
                self.bump();
            } else {
                break;
            }
        }
        s.parse::<f64>().map_err(|_| ExprError { offset: start, message: format!("bad number '{s}'") })
    }
}
