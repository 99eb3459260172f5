//! Arithmetic expressions over `x`, `y` used for exponent fields and masks.
//!
//! Grammar: numbers, `x`, `y`, `e`, `pi`, binary `+ - * / ^` (`^` is right
//! associative and binds tighter than unary minus), parentheses, and the
//! two-argument functions `min` and `max`.

use std::fmt;

use crate::error::{LogdpError, Result};

#[derive(Debug, Clone, PartialEq)]
pub enum Expr {
    Num(f64),
    X,
    Y,
    Neg(Box<Expr>),
    Bin(Op, Box<Expr>, Box<Expr>),
    Min(Box<Expr>, Box<Expr>),
    Max(Box<Expr>, Box<Expr>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Op {
    Add,
    Sub,
    Mul,
    Div,
    Pow,
}

impl Op {
    fn symbol(self) -> char {
        match self {
            Op::Add => '+',
            Op::Sub => '-',
            Op::Mul => '*',
            Op::Div => '/',
            Op::Pow => '^',
        }
    }
}

impl Expr {
    pub fn parse(src: &str) -> Result<Expr> {
        let mut p = Parser { src, toks: tokenize(src)?, pos: 0 };
        let e = p.sum()?;
        match p.peek() {
            None => Ok(e),
            Some((at, t)) => Err(LogdpError::Expr { pos: at, msg: format!("unexpected {t}") }),
        }
    }

    pub fn eval(&self, x: f64, y: f64) -> f64 {
        match self {
            Expr::Num(c) => *c,
            Expr::X => x,
            Expr::Y => y,
            Expr::Neg(a) => -a.eval(x, y),
            Expr::Bin(op, a, b) => {
                let (a, b) = (a.eval(x, y), b.eval(x, y));
                match op {
                    Op::Add => a + b,
                    Op::Sub => a - b,
                    Op::Mul => a * b,
                    Op::Div => a / b,
                    Op::Pow => a.powf(b),
                }
            }
            Expr::Min(a, b) => a.eval(x, y).min(b.eval(x, y)),
            Expr::Max(a, b) => a.eval(x, y).max(b.eval(x, y)),
        }
    }

    /// The value when the expression does not involve `x` or `y`.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            Expr::Num(c) => Some(*c),
            Expr::X | Expr::Y => None,
            Expr::Neg(a) => a.as_constant().map(|v| -v),
            Expr::Bin(..) | Expr::Min(..) | Expr::Max(..) => {
                if self.uses_coordinates() {
                    None
                } else {
                    Some(self.eval(0.0, 0.0))
                }
            }
        }
    }

    fn uses_coordinates(&self) -> bool {
        match self {
            Expr::Num(_) => false,
            Expr::X | Expr::Y => true,
            Expr::Neg(a) => a.uses_coordinates(),
            Expr::Bin(_, a, b) | Expr::Min(a, b) | Expr::Max(a, b) => a.uses_coordinates() || b.uses_coordinates(),
        }
    }
}

/// Fully parenthesised output that parses back to the same tree.
impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Num(c) if *c < 0.0 || (*c == 0.0 && c.is_sign_negative()) => write!(f, "(-{:?})", -c),
            Expr::Num(c) => write!(f, "{c:?}"),
            Expr::X => f.write_str("x"),
            Expr::Y => f.write_str("y"),
            Expr::Neg(a) => write!(f, "(-{a})"),
            Expr::Bin(op, a, b) => write!(f, "({a} {} {b})", op.symbol()),
            Expr::Min(a, b) => write!(f, "min({a}, {b})"),
            Expr::Max(a, b) => write!(f, "max({a}, {b})"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(f64),
    Ident(String),
    Sym(char),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Num(v) => write!(f, "number {v}"),
            Tok::Ident(s) => write!(f, "'{s}'"),
            Tok::Sym(c) => write!(f, "'{c}'"),
        }
    }
}

fn tokenize(src: &str) -> Result<Vec<(usize, Tok)>> {
    let b = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < b.len() {
        let c = b[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if c.is_ascii_digit() || c == '.' {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_digit() || b[i] == b'.') {
                i += 1;
            }
            if i < b.len() && (b[i] == b'e' || b[i] == b'E') {
                let mut j = i + 1;
                if j < b.len() && (b[j] == b'+' || b[j] == b'-') {
                    j += 1;
                }
                if j < b.len() && b[j].is_ascii_digit() {
                    i = j;
                    while i < b.len() && b[i].is_ascii_digit() {
                        i += 1;
                    }
                }
            }
            let text = &src[start..i];
            let v = text
                .parse::<f64>()
                .map_err(|_| LogdpError::Expr { pos: start, msg: format!("bad number '{text}'") })?;
            out.push((start, Tok::Num(v)));
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < b.len() && ((b[i] as char).is_ascii_alphanumeric() || b[i] == b'_') {
                i += 1;
            }
            out.push((start, Tok::Ident(src[start..i].to_string())));
        } else if "+-*/^(),".contains(c) {
            out.push((i, Tok::Sym(c)));
            i += 1;
        } else {
            return Err(LogdpError::Expr { pos: i, msg: format!("unexpected character '{c}'") });
        }
    }
    Ok(out)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(usize, Tok)>,
    pos: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<(usize, &Tok)> {
        self.toks.get(self.pos).map(|(at, t)| (*at, t))
    }

    fn eat(&mut self, c: char) -> bool {
        if matches!(self.peek(), Some((_, Tok::Sym(s))) if *s == c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(format!("expected '{c}'")))
        }
    }

    fn error(&self, msg: String) -> LogdpError {
        let pos = self.peek().map(|(at, _)| at).unwrap_or(self.src.len());
        LogdpError::Expr { pos, msg }
    }

    fn sum(&mut self) -> Result<Expr> {
        let mut lhs = self.product()?;
        loop {
            let op = if self.eat('+') {
                Op::Add
            } else if self.eat('-') {
                Op::Sub
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.product()?));
        }
    }

    fn product(&mut self) -> Result<Expr> {
        let mut lhs = self.unary()?;
        loop {
            let op = if self.eat('*') {
                Op::Mul
            } else if self.eat('/') {
                Op::Div
            } else {
                return Ok(lhs);
            };
            lhs = Expr::Bin(op, Box::new(lhs), Box::new(self.unary()?));
        }
    }

    fn unary(&mut self) -> Result<Expr> {
        if self.eat('-') {
            return Ok(match self.unary()? {
                Expr::Num(c) => Expr::Num(-c),
                e => Expr::Neg(Box::new(e)),
            });
        }
        if self.eat('+') {
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expr> {
        let base = self.atom()?;
        if self.eat('^') {
            let exp = self.unary()?;
            return Ok(Expr::Bin(Op::Pow, Box::new(base), Box::new(exp)));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<Expr> {
        let Some((_, tok)) = self.peek() else {
            return Err(self.error("unexpected end of expression".into()));
        };
        match tok.clone() {
            Tok::Num(v) => {
                self.pos += 1;
                Ok(Expr::Num(v))
            }
            Tok::Sym('(') => {
                self.pos += 1;
                let e = self.sum()?;
                self.expect(')')?;
                Ok(e)
            }
            Tok::Ident(name) => {
                self.pos += 1;
                match name.as_str() {
                    "x" => Ok(Expr::X),
                    "y" => Ok(Expr::Y),
                    "e" => Ok(Expr::Num(std::f64::consts::E)),
                    "pi" => Ok(Expr::Num(std::f64::consts::PI)),
                    "min" | "max" => {
                        self.expect('(')?;
                        let a = self.sum()?;
                        self.expect(',')?;
                        let b = self.sum()?;
                        self.expect(')')?;
                        let (a, b) = (Box::new(a), Box::new(b));
                        Ok(if name == "min" { Expr::Min(a, b) } else { Expr::Max(a, b) })
                    }
                    _ => {
                        self.pos -= 1;
                        Err(self.error(format!("unknown name '{name}'")))
                    }
                }
            }
            t => Err(self.error(format!("unexpected {t}"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn precedence_and_functions() {
        let e = Expr::parse("1 + 2*x^2 - max(y, 0.5)/2").unwrap();
        assert_eq!(e.eval(3.0, 0.1), 1.0 + 18.0 - 0.25);
        assert_eq!(Expr::parse("-2^2").unwrap().eval(0.0, 0.0), -4.0);
        assert_eq!(Expr::parse("2^3^2").unwrap().eval(0.0, 0.0), 512.0);
        assert_eq!(Expr::parse("min(e, pi)").unwrap().eval(0.0, 0.0), std::f64::consts::E);
        assert_eq!(Expr::parse("1.5e-1*2").unwrap().as_constant(), Some(0.3));
        assert_eq!(Expr::parse("x - x").unwrap().as_constant(), None);
    }

    #[test]
    fn errors_carry_positions() {
        match Expr::parse("1 + foo") {
            Err(LogdpError::Expr { pos, .. }) => assert_eq!(pos, 4),
            other => panic!("{other:?}"),
        }
        assert!(Expr::parse("(1 + 2").is_err());
        assert!(Expr::parse("1 2").is_err());
        assert!(Expr::parse("max(1)").is_err());
        assert!(Expr::parse("2 # 3").is_err());
        assert!(Expr::parse("").is_err());
    }

    #[test]
    fn display_round_trips() {
        for src in ["2.6 + 0.1*x", "-(x - 0.5)^2 + min(y, -3)", "max(1e-3, -0.0)", "1/3"] {
            let e = Expr::parse(src).unwrap();
            assert_eq!(Expr::parse(&e.to_string()).unwrap(), e, "{src} -> {e}");
        }
    }
}
