//! The expression mini-language and the file formats it pulls in.
//!
//! Grammar (documented in the README):
//!
//! ```text
//! expr    := name '(' args? ')'
//! name    := id | const | log1m | inner | mobius | pow1m | blaschke
//!          | besov | sum | product | scale
//! args    := arg (',' arg)*
//! arg     := number | expr | path
//! ```
//!
//! `sum` and `product` are n-ary and fold left. `scale(c, e)` and
//! `scale(re, im, e)` multiply by a scalar. `mobius(re [, im])` places the
//! atom. `blaschke(FILE)` reads a zeros file (one point per line, `re im`
//! or `gap_log theta g`); `besov(FILE)` reads a JSON atom-sum description.

use num_complex::Complex64;
use serde::Deserialize;

use crate::disc::DiscPoint;
use crate::error::{Error, Result};
use crate::expr::{besov_assemble, FunctionExpr};

pub fn parse_expr(src: &str) -> Result<FunctionExpr> {
    let mut p = Parser {
        src: src.as_bytes(),
        pos: 0,
    };
    let e = p.expr()?;
    p.skip_ws();
    if p.pos != p.src.len() {
        return Err(Error::Parse(format!(
            "trailing input at byte {}: {:?}",
            p.pos,
            &src[p.pos..]
        )));
    }
    e.validate()?;
    Ok(e)
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.src.len() && self.src[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn expect(&mut self, b: u8) -> Result<()> {
        if self.peek() == Some(b) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::Parse(format!(
                "expected {:?} at byte {}",
                b as char, self.pos
            )))
        }
    }

    fn ident(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.src.len()
            && (self.src[self.pos].is_ascii_alphanumeric() || self.src[self.pos] == b'_')
        {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(Error::Parse(format!("expected a name at byte {start}")));
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .to_string())
    }

    /// Raw argument token: everything up to the next ',' or ')' at depth 0.
    fn raw_arg(&mut self) -> Result<String> {
        self.skip_ws();
        let start = self.pos;
        let mut depth = 0usize;
        while self.pos < self.src.len() {
            match self.src[self.pos] {
                b'(' => depth += 1,
                b')' if depth == 0 => break,
                b')' => depth -= 1,
                b',' if depth == 0 => break,
                _ => {}
            }
            self.pos += 1;
        }
        Ok(std::str::from_utf8(&self.src[start..self.pos])
            .unwrap()
            .trim()
            .to_string())
    }

    fn expr(&mut self) -> Result<FunctionExpr> {
        let name = self.ident()?;
        self.expect(b'(')?;
        let mut args: Vec<Arg> = Vec::new();
        if self.peek() != Some(b')') {
            loop {
                args.push(self.arg()?);
                match self.peek() {
                    Some(b',') => {
                        self.pos += 1;
                    }
                    _ => break,
                }
            }
        }
        self.expect(b')')?;
        build(&name, args)
    }

    fn arg(&mut self) -> Result<Arg> {
        self.skip_ws();
        // lookahead: a nested expression is a name followed by '('
        let save = self.pos;
        if self
            .src
            .get(self.pos)
            .is_some_and(|b| b.is_ascii_alphabetic() || *b == b'_')
        {
            if let Ok(name) = self.ident() {
                if self.peek() == Some(b'(') {
                    self.pos = save;
                    return Ok(Arg::Expr(self.expr()?));
                }
                self.pos = save;
                let _ = name;
            }
        }
        let tok = self.raw_arg()?;
        if tok.is_empty() {
            return Err(Error::Parse(format!("empty argument at byte {}", self.pos)));
        }
        if let Ok(x) = tok.parse::<f64>() {
            return Ok(Arg::Num(x));
        }
        Ok(Arg::Text(tok.trim_matches('"').to_string()))
    }
}

enum Arg {
    Num(f64),
    Text(String),
    Expr(FunctionExpr),
}

fn num(a: &Arg, what: &str) -> Result<f64> {
    match a {
        Arg::Num(x) => Ok(*x),
        _ => Err(Error::Parse(format!("{what} expects a numeric argument"))),
    }
}

fn build(name: &str, mut args: Vec<Arg>) -> Result<FunctionExpr> {
    match name {
        "id" => {
            expect_arity(name, &args, 0)?;
            Ok(FunctionExpr::Identity)
        }
        "log1m" => {
            expect_arity(name, &args, 0)?;
            Ok(FunctionExpr::LogOneMinus)
        }
        "const" => match args.len() {
            1 => Ok(FunctionExpr::constant(num(&args[0], name)?)),
            2 => Ok(FunctionExpr::constant_c(Complex64::new(
                num(&args[0], name)?,
                num(&args[1], name)?,
            ))),
            n => Err(Error::Parse(format!("const takes 1 or 2 numbers, got {n}"))),
        },
        "inner" => {
            expect_arity(name, &args, 1)?;
            let c = num(&args[0], name)?;
            if !(c > 0.0) {
                return Err(Error::Parse(format!("inner mass must be positive, got {c}")));
            }
            Ok(FunctionExpr::AtomicInner { c })
        }
        "pow1m" => {
            expect_arity(name, &args, 1)?;
            let k = num(&args[0], name)?;
            if k < 1.0 || k.fract() != 0.0 {
                return Err(Error::Parse(format!("pow1m takes a positive integer, got {k}")));
            }
            Ok(FunctionExpr::PowOneMinus { k: k as u32 })
        }
        "mobius" => {
            let (re, im) = match args.len() {
                1 => (num(&args[0], name)?, 0.0),
                2 => (num(&args[0], name)?, num(&args[1], name)?),
                n => return Err(Error::Parse(format!("mobius takes 1 or 2 numbers, got {n}"))),
            };
            Ok(FunctionExpr::MobiusAtom {
                a: DiscPoint::from_cartesian(re, im)?,
            })
        }
        "blaschke" => {
            expect_arity(name, &args, 1)?;
            let path = text(&args[0], name)?;
            let zeros = read_zeros_file(&path)?;
            Ok(FunctionExpr::blaschke(zeros))
        }
        "besov" => {
            expect_arity(name, &args, 1)?;
            let path = text(&args[0], name)?;
            read_besov_file(&path)
        }
        "sum" | "product" => {
            if args.len() < 2 {
                return Err(Error::Parse(format!("{name} takes at least 2 expressions")));
            }
            let mut exprs = Vec::with_capacity(args.len());
            for a in args {
                match a {
                    Arg::Expr(e) => exprs.push(e),
                    Arg::Num(x) => exprs.push(FunctionExpr::constant(x)),
                    Arg::Text(t) => {
                        return Err(Error::Parse(format!("{name}: unexpected argument {t:?}")))
                    }
                }
            }
            let fold = if name == "sum" {
                FunctionExpr::sum
            } else {
                FunctionExpr::product
            };
            Ok(exprs.into_iter().reduce(fold).unwrap())
        }
        "scale" => {
            let e = match args.pop() {
                Some(Arg::Expr(e)) => e,
                _ => return Err(Error::Parse("scale: last argument must be an expression".into())),
            };
            let c = match args.len() {
                1 => Complex64::new(num(&args[0], name)?, 0.0),
                2 => Complex64::new(num(&args[0], name)?, num(&args[1], name)?),
                n => return Err(Error::Parse(format!("scale takes 1 or 2 scalars, got {n}"))),
            };
            Ok(FunctionExpr::scale(c, e))
        }
        other => Err(Error::Parse(format!("unknown function {other:?}"))),
    }
}

fn expect_arity(name: &str, args: &[Arg], n: usize) -> Result<()> {
    if args.len() != n {
        return Err(Error::Parse(format!(
            "{name} takes {n} argument(s), got {}",
            args.len()
        )));
    }
    Ok(())
}

fn text(a: &Arg, what: &str) -> Result<String> {
    match a {
        Arg::Text(t) => Ok(t.clone()),
        Arg::Num(x) => Ok(x.to_string()),
        Arg::Expr(_) => Err(Error::Parse(format!("{what} expects a file path"))),
    }
}

/// Zeros file: one point per line, either `re im` or `gap_log theta g`.
/// Blank lines and lines starting with '#' are skipped.
pub fn read_zeros_file(path: &str) -> Result<Vec<DiscPoint>> {
    let body = std::fs::read_to_string(path)?;
    parse_zeros(&body)
}

pub fn parse_zeros(body: &str) -> Result<Vec<DiscPoint>> {
    let mut out = Vec::new();
    for (lineno, line) in body.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let parts: Vec<&str> = line.split_whitespace().collect();
        let bad = |msg: &str| {
            Error::Parse(format!("zeros file line {}: {msg}: {line:?}", lineno + 1))
        };
        match parts.as_slice() {
            [re, im] => {
                let re: f64 = re.parse().map_err(|_| bad("bad number"))?;
                let im: f64 = im.parse().map_err(|_| bad("bad number"))?;
                out.push(DiscPoint::from_cartesian(re, im)?);
            }
            [gap, theta, tag] if *tag == "g" => {
                let gap: f64 = gap.parse().map_err(|_| bad("bad number"))?;
                let theta: f64 = theta.parse().map_err(|_| bad("bad number"))?;
                out.push(DiscPoint::from_gap(gap, theta)?);
            }
            _ => return Err(bad("expected `re im` or `gap_log theta g`")),
        }
    }
    if out.is_empty() {
        return Err(Error::Parse("zeros file holds no points".into()));
    }
    Ok(out)
}

#[derive(Deserialize)]
struct BesovFile {
    #[serde(default)]
    lambda0: Option<ComplexIn>,
    weights: Vec<ComplexIn>,
    atoms: Vec<DiscPoint>,
}

#[derive(Deserialize)]
#[serde(untagged)]
enum ComplexIn {
    Re(f64),
    Pair([f64; 2]),
    Parts { re: f64, im: f64 },
}

impl ComplexIn {
    fn to_c(&self) -> Complex64 {
        match self {
            ComplexIn::Re(x) => Complex64::new(*x, 0.0),
            ComplexIn::Pair([re, im]) => Complex64::new(*re, *im),
            ComplexIn::Parts { re, im } => Complex64::new(*re, *im),
        }
    }
}

/// Besov file: JSON `{"lambda0": c?, "weights": [c...], "atoms": [point...]}`
/// where a scalar c is a number, `[re, im]` or `{"re":..,"im":..}`.
pub fn read_besov_file(path: &str) -> Result<FunctionExpr> {
    let body = std::fs::read_to_string(path)?;
    let spec: BesovFile = serde_json::from_str(&body)?;
    besov_assemble(
        spec.lambda0.map_or(Complex64::new(0.0, 0.0), |c| c.to_c()),
        spec.weights.iter().map(|c| c.to_c()).collect(),
        spec.atoms,
    )
}

/// Load an expression from JSON AST text, validating invariants.
pub fn expr_from_json(body: &str) -> Result<FunctionExpr> {
    let e: FunctionExpr = serde_json::from_str(body)?;
    let e = e.canonicalized();
    e.validate()?;
    Ok(e)
}
