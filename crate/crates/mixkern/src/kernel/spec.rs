//! Text form of kernel expressions.
//!
//! ```text
//! kernel := term [ "+" "nugget(" num ")" ]
//! term   := "matern(" num "," num "," num ")"      σ², α, ν
//!         | "rbf(" num "," num ")"                 σ², α
//!         | "mix(" num "*" term { "," num "*" term } ")"
//!         | "sep(" matrix "," term ")"
//! matrix := "[" row { "," row } "]"
//! row    := "[" num { "," num } "]"
//! ```
//!
//! Mixture weights only need to be nonnegative here; a warning is logged
//! when they do not sum to one.

use std::fmt;

use super::{KernelExpr, Leaf};
use crate::error::{Error, Result};
use crate::linalg::Matrix;

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Ident(String),
    Number(f64),
    Punct(char),
}

struct Parser<'a> {
    src: &'a str,
    tokens: Vec<(usize, Token)>,
    pos: usize,
}

fn tokenize(src: &str) -> std::result::Result<Vec<(usize, Token)>, String> {
    let bytes = src.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        if c.is_ascii_whitespace() {
            i += 1;
        } else if "()[],*+".contains(c) {
            out.push((i, Token::Punct(c)));
            i += 1;
        } else if c.is_ascii_alphabetic() || c == '_' {
            let start = i;
            while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                i += 1;
            }
            out.push((start, Token::Ident(src[start..i].to_ascii_lowercase())));
        } else if c.is_ascii_digit() || c == '.' || c == '-' {
            let start = i;
            i += 1;
            while i < bytes.len() {
                let b = bytes[i];
                let exp_sign = (b == b'-' || b == b'+') && matches!(bytes[i - 1], b'e' | b'E');
                if b.is_ascii_digit() || b == b'.' || b == b'e' || b == b'E' || exp_sign {
                    i += 1;
                } else {
                    break;
                }
            }
            let text = &src[start..i];
            let v: f64 = text
                .parse()
                .map_err(|_| format!("malformed number `{text}` at offset {start}"))?;
            out.push((start, Token::Number(v)));
        } else {
            return Err(format!("unexpected character `{c}` at offset {i}"));
        }
    }
    Ok(out)
}

impl<'a> Parser<'a> {
    fn error(&self, message: impl Into<String>) -> Error {
        Error::InvalidKernelSpec {
            spec: self.src.to_string(),
            message: message.into(),
        }
    }

    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.pos).map(|(_, t)| t)
    }

    fn offset(&self) -> usize {
        self.tokens
            .get(self.pos)
            .map_or(self.src.len(), |(o, _)| *o)
    }

    fn next(&mut self) -> Option<Token> {
        let t = self.tokens.get(self.pos).map(|(_, t)| t.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, c: char) -> Result<()> {
        let at = self.offset();
        match self.next() {
            Some(Token::Punct(p)) if p == c => Ok(()),
            Some(t) => Err(self.error(format!("expected `{c}` at offset {at}, found {t:?}"))),
            None => Err(self.error(format!("expected `{c}`, found end of input"))),
        }
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(&Token::Punct(c)) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn number(&mut self) -> Result<f64> {
        let at = self.offset();
        match self.next() {
            Some(Token::Number(v)) => Ok(v),
            Some(t) => Err(self.error(format!("expected a number at offset {at}, found {t:?}"))),
            None => Err(self.error("expected a number, found end of input")),
        }
    }

    fn ident(&mut self) -> Result<String> {
        let at = self.offset();
        match self.next() {
            Some(Token::Ident(s)) => Ok(s),
            Some(t) => Err(self.error(format!(
                "expected a kernel name at offset {at}, found {t:?}"
            ))),
            None => Err(self.error("expected a kernel name, found end of input")),
        }
    }

    fn args(&mut self, n: usize) -> Result<Vec<f64>> {
        self.expect('(')?;
        let mut v = Vec::with_capacity(n);
        for i in 0..n {
            if i > 0 {
                self.expect(',')?;
            }
            v.push(self.number()?);
        }
        self.expect(')')?;
        Ok(v)
    }

    fn wrap(&self, r: Result<KernelExpr>) -> Result<KernelExpr> {
        r.map_err(|e| match e {
            e @ Error::InvalidKernelSpec { .. } => e,
            other => self.error(other.to_string()),
        })
    }

    fn kernel(&mut self) -> Result<KernelExpr> {
        let k = self.term()?;
        if self.eat('+') {
            let name = self.ident()?;
            if name != "nugget" {
                return Err(self.error(format!("only `nugget(...)` may be added, found `{name}`")));
            }
            let t = self.args(1)?[0];
            let k = self.wrap(k.with_nugget(t))?;
            return Ok(k);
        }
        Ok(k)
    }

    fn term(&mut self) -> Result<KernelExpr> {
        let name = self.ident()?;
        match name.as_str() {
            "matern" => {
                let a = self.args(3)?;
                self.wrap(KernelExpr::matern(a[0], a[1], a[2]))
            }
            "rbf" => {
                let a = self.args(2)?;
                self.wrap(KernelExpr::rbf(a[0], a[1]))
            }
            "mix" => {
                self.expect('(')?;
                let mut weights = Vec::new();
                let mut comps = Vec::new();
                loop {
                    weights.push(self.number()?);
                    self.expect('*')?;
                    comps.push(self.term()?);
                    if !self.eat(',') {
                        break;
                    }
                }
                self.expect(')')?;
                self.wrap(KernelExpr::mixture_unnormalized(weights, comps))
            }
            "sep" => {
                self.expect('(')?;
                let a = self.matrix()?;
                self.expect(',')?;
                let base = self.term()?;
                self.expect(')')?;
                self.wrap(KernelExpr::separable(a, base))
            }
            "nugget" => Err(self.error("a nugget must follow a kernel term")),
            other => Err(self.error(format!("unknown kernel `{other}`"))),
        }
    }

    fn matrix(&mut self) -> Result<Matrix> {
        self.expect('[')?;
        let mut rows: Vec<Vec<f64>> = Vec::new();
        loop {
            self.expect('[')?;
            let mut row = vec![self.number()?];
            while self.eat(',') {
                row.push(self.number()?);
            }
            self.expect(']')?;
            rows.push(row);
            if !self.eat(',') {
                break;
            }
        }
        self.expect(']')?;
        Matrix::from_rows(&rows).map_err(|e| self.error(e.to_string()))
    }
}

/// Parses the text form of a kernel expression.
pub fn parse_kernel(src: &str) -> Result<KernelExpr> {
    let tokens = tokenize(src).map_err(|message| Error::InvalidKernelSpec {
        spec: src.to_string(),
        message,
    })?;
    let mut p = Parser {
        src,
        tokens,
        pos: 0,
    };
    let k = p.kernel()?;
    if p.pos < p.tokens.len() {
        let at = p.offset();
        return Err(p.error(format!("trailing input at offset {at}")));
    }
    Ok(k)
}

impl std::str::FromStr for KernelExpr {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        parse_kernel(s)
    }
}

impl fmt::Display for Leaf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Leaf::Matern(m) => write!(f, "matern({}, {}, {})", m.sigma2, m.alpha, m.nu),
            Leaf::Rbf(r) => write!(f, "rbf({}, {})", r.sigma2, r.alpha),
        }
    }
}

impl fmt::Display for KernelExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            KernelExpr::Matern(m) => Leaf::Matern(*m).fmt(f),
            KernelExpr::Rbf(r) => Leaf::Rbf(*r).fmt(f),
            KernelExpr::Mixture(m) => {
                f.write_str("mix(")?;
                for (i, (w, c)) in m.weights().iter().zip(m.components()).enumerate() {
                    if i > 0 {
                        f.write_str(", ")?;
                    }
                    write!(f, "{w}*{c}")?;
                }
                f.write_str(")")
            }
            KernelExpr::Separable(s) => {
                f.write_str("sep([")?;
                for r in 0..s.outputs() {
                    if r > 0 {
                        f.write_str(", ")?;
                    }
                    f.write_str("[")?;
                    for (c, v) in s.a().row(r).iter().enumerate() {
                        if c > 0 {
                            f.write_str(", ")?;
                        }
                        write!(f, "{v}")?;
                    }
                    f.write_str("]")?;
                }
                write!(f, "], {})", s.base())
            }
            KernelExpr::Nugget(n) => write!(f, "{} + nugget({})", n.base(), n.tau2()),
        }
    }
}
