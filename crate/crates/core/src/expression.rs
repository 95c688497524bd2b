//! Expression trees extracted from DAGs.
//!
//! Canonical string grammar (whitespace is insignificant):
//!
//! ```text
//! expr    = "-" "(" expr ")"            (* negation *)
//!         | "-" number                   (* negative literal *)
//!         | postfix ;
//! postfix = atom { "^2" } ;
//! atom    = number | "pi" | "e" | var
//!         | ident "(" expr { "," expr } ")"
//!         | "(" expr [ binop expr ] ")" ;
//! binop   = "+" | "-" | "*" | "/" ;
//! var     = "x" digit { digit } ;
//! ```
//!
//! `ident` is the lowercase call name of a basis (`sin`, `if_leq`, `add4`, ...).
//! Rendering always emits this form, e.g. `sin((x0 + 1))^2`, and parsing a
//! rendered expression gives back the same tree.

use std::f64::consts::{E, PI};
use std::fmt;
use std::str::FromStr;

use crate::bases::{Basis, SENTINEL};
use crate::data::Range;
use crate::error::{Error, Result};
use crate::network::{Network, Source};
use crate::sampler::SampledDag;

#[derive(Debug, Clone, PartialEq)]
pub enum Expression {
    Input(usize),
    Constant(f64),
    Apply(Basis, Vec<Expression>),
}

impl Expression {
    pub fn apply(basis: Basis, children: Vec<Expression>) -> Result<Expression> {
        if children.len() != basis.arity() {
            return Err(Error::Arity {
                name: basis.name(),
                expected: basis.arity(),
                got: children.len(),
            });
        }
        Ok(Expression::Apply(basis, children))
    }

    /// Tree-interpreter evaluation at one point.
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            Expression::Input(i) => x.get(*i).copied().unwrap_or(SENTINEL),
            Expression::Constant(c) => *c,
            Expression::Apply(b, children) => {
                let mut args = [0.0; 9];
                for (slot, c) in args.iter_mut().zip(children) {
                    *slot = c.eval(x);
                }
                b.apply(&args[..children.len()])
            }
        }
    }

    /// One more than the largest input index referenced (0 for constant trees).
    pub fn input_dimension(&self) -> usize {
        match self {
            Expression::Input(i) => i + 1,
            Expression::Constant(_) => 0,
            Expression::Apply(_, c) => c.iter().map(Expression::input_dimension).max().unwrap_or(0),
        }
    }

    pub fn is_constant_only(&self) -> bool {
        self.input_dimension() == 0
    }

    pub fn node_count(&self) -> usize {
        match self {
            Expression::Apply(_, c) => 1 + c.iter().map(Expression::node_count).sum::<usize>(),
            _ => 1,
        }
    }

    pub fn parse(s: &str) -> Result<Expression> {
        let mut p = Parser { src: s, pos: 0 };
        let e = p.expr()?;
        p.skip_ws();
        if p.pos != s.len() {
            return Err(p.error("trailing input"));
        }
        Ok(e)
    }
}

impl fmt::Display for Expression {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&render(self))
    }
}

impl FromStr for Expression {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Expression::parse(s)
    }
}

fn render(e: &Expression) -> String {
    match e {
        Expression::Input(i) => format!("x{i}"),
        Expression::Constant(c) => render_constant(*c),
        Expression::Apply(b, children) => {
            let args: Vec<String> = children.iter().map(render).collect();
            b.render(&args)
        }
    }
}

fn render_constant(c: f64) -> String {
    if c == PI {
        "pi".into()
    } else if c == E {
        "e".into()
    } else {
        // `Display` for f64 is the shortest string that parses back exactly.
        format!("{c}")
    }
}

struct Parser<'a> {
    src: &'a str,
    pos: usize,
}

impl Parser<'_> {
    fn error(&self, msg: &str) -> Error {
        Error::Parse {
            offset: self.pos,
            message: msg.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.peek().is_some_and(char::is_whitespace) {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.src[self.pos..].chars().next()
    }

    fn eat(&mut self, c: char) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += c.len_utf8();
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: char) -> Result<()> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(self.error(&format!("expected `{c}`")))
        }
    }

    fn expr(&mut self) -> Result<Expression> {
        self.skip_ws();
        if self.eat('-') {
            self.skip_ws();
            return match self.peek() {
                Some('(') => {
                    self.pos += 1;
                    let inner = self.expr()?;
                    self.expect(')')?;
                    Ok(Expression::Apply(Basis::Neg, vec![inner]))
                }
                Some(c) if c.is_ascii_digit() || c == '.' => Ok(Expression::Constant(-self.number()?)),
                _ => Err(self.error("expected `(` or a number after unary minus")),
            };
        }
        self.postfix()
    }

    fn postfix(&mut self) -> Result<Expression> {
        let mut e = self.atom()?;
        loop {
            self.skip_ws();
            if self.src[self.pos..].starts_with("^2") {
                self.pos += 2;
                e = Expression::Apply(Basis::Square, vec![e]);
            } else {
                return Ok(e);
            }
        }
    }

    fn atom(&mut self) -> Result<Expression> {
        self.skip_ws();
        match self.peek() {
            None => Err(self.error("unexpected end of input")),
            Some('(') => {
                self.pos += 1;
                let lhs = self.expr()?;
                self.skip_ws();
                let op = match self.peek() {
                    Some('+') => Basis::Add,
                    Some('-') => Basis::Sub,
                    Some('*') => Basis::Mul,
                    Some('/') => Basis::Div,
                    Some(')') => {
                        self.pos += 1;
                        return Ok(lhs);
                    }
                    _ => return Err(self.error("expected operator or `)`")),
                };
                self.pos += 1;
                let rhs = self.expr()?;
                self.expect(')')?;
                Ok(Expression::Apply(op, vec![lhs, rhs]))
            }
            Some(c) if c.is_ascii_digit() || c == '.' => Ok(Expression::Constant(self.number()?)),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => {
                let start = self.pos;
                while self.peek().is_some_and(|c| c.is_ascii_alphanumeric() || c == '_') {
                    self.pos += 1;
                }
                let ident = &self.src[start..self.pos];
                if let Some(digits) = ident.strip_prefix('x') {
                    if !digits.is_empty() && digits.bytes().all(|b| b.is_ascii_digit()) {
                        let i = digits.parse().map_err(|_| self.error("bad input index"))?;
                        return Ok(Expression::Input(i));
                    }
                }
                match ident {
                    "pi" => return Ok(Expression::Constant(PI)),
                    "e" => return Ok(Expression::Constant(E)),
                    _ => {}
                }
                let basis = Basis::from_call_name(ident).ok_or_else(|| Error::UnknownBasis(ident.to_string()))?;
                self.expect('(')?;
                let mut args = vec![self.expr()?];
                while self.eat(',') {
                    args.push(self.expr()?);
                }
                self.expect(')')?;
                Expression::apply(basis, args).map_err(|e| Error::Parse {
                    offset: start,
                    message: e.to_string(),
                })
            }
            Some(c) => Err(self.error(&format!("unexpected character `{c}`"))),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        let bytes = self.src.as_bytes();
        while self.pos < bytes.len() && (bytes[self.pos].is_ascii_digit() || bytes[self.pos] == b'.') {
            self.pos += 1;
        }
        // optional exponent, only when digits follow
        if self.pos < bytes.len() && (bytes[self.pos] == b'e' || bytes[self.pos] == b'E') {
            let mut q = self.pos + 1;
            if q < bytes.len() && (bytes[q] == b'+' || bytes[q] == b'-') {
                q += 1;
            }
            if q < bytes.len() && bytes[q].is_ascii_digit() {
                while q < bytes.len() && bytes[q].is_ascii_digit() {
                    q += 1;
                }
                self.pos = q;
            }
        }
        self.src[start..self.pos]
            .parse::<f64>()
            .map_err(|_| Error::Parse {
                offset: start,
                message: format!("bad number `{}`", &self.src[start..self.pos]),
            })
    }
}

/// Backtrack from `output` and unfold the DAG into a tree; shared subgraphs are
/// duplicated.
pub fn dag_to_expression(net: &Network, dag: &SampledDag, output: usize) -> Expression {
    let cfg = net.config();
    let row = net.output_row_id(output);
    source_expression(net, dag, net.source(cfg.depth, dag.choice(row)))
}

fn source_expression(net: &Network, dag: &SampledDag, src: Source) -> Expression {
    let cfg = net.config();
    match src {
        Source::Input(k) if k < cfg.input_count => Expression::Input(k),
        Source::Input(k) => Expression::Constant(cfg.constants[k - cfg.input_count]),
        Source::Image { layer, node } => {
            let children = net
                .argument_rows(node)
                .map(|r| {
                    let id = net.hidden_row_id(layer, r);
                    source_expression(net, dag, net.source(layer, dag.choice(id)))
                })
                .collect();
            Expression::Apply(cfg.bases[node], children)
        }
    }
}

/// Value-preserving cleanup: constant folding and identity elimination.
pub fn simplify(expr: &Expression) -> Expression {
    let Expression::Apply(b, children) = expr else {
        return expr.clone();
    };
    let children: Vec<Expression> = children.iter().map(simplify).collect();
    let consts: Option<Vec<f64>> = children
        .iter()
        .map(|c| match c {
            Expression::Constant(v) => Some(*v),
            _ => None,
        })
        .collect();
    if let Some(vals) = consts {
        let v = b.apply(&vals);
        if v.is_finite() {
            return Expression::Constant(v);
        }
    }
    let is = |e: &Expression, k: f64| matches!(e, Expression::Constant(v) if *v == k);
    match (b, children.as_slice()) {
        (Basis::Id, [e]) => e.clone(),
        (Basis::Neg, [Expression::Apply(Basis::Neg, inner)]) => inner[0].clone(),
        (Basis::Add, [e, z]) | (Basis::Add, [z, e]) if is(z, 0.0) => e.clone(),
        (Basis::Sub, [e, z]) if is(z, 0.0) => e.clone(),
        (Basis::Mul, [e, one]) | (Basis::Mul, [one, e]) if is(one, 1.0) => e.clone(),
        (Basis::Div, [e, one]) if is(one, 1.0) => e.clone(),
        _ => Expression::Apply(*b, children),
    }
}

/// Deterministic low-discrepancy points covering `domain`.
///
/// Continuous dimensions use an additive recurrence with the generalized
/// golden ratio, which never lands on the interval endpoints or on simple
/// rationals inside them. A fully discrete domain small enough is enumerated.
pub fn quasi_uniform_points(domain: &[Range], n: usize) -> Vec<Vec<f64>> {
    let all_discrete = domain.iter().all(|r| matches!(r, Range::Discrete(_)));
    if all_discrete {
        let total: usize = domain
            .iter()
            .map(|r| match r {
                Range::Discrete(v) => v.len(),
                Range::Interval(..) => unreachable!(),
            })
            .product();
        if total <= n {
            return enumerate_discrete(domain);
        }
    }
    let d = domain.len();
    // root of x^(d+1) = x + 1
    let mut phi = 2.0f64;
    for _ in 0..64 {
        phi = (1.0 + phi).powf(1.0 / (d as f64 + 1.0));
    }
    let alpha: Vec<f64> = (1..=d).map(|k| phi.powi(-(k as i32))).collect();
    (0..n)
        .map(|i| {
            domain
                .iter()
                .zip(&alpha)
                .map(|(r, a)| {
                    let u = (0.5 + a * (i as f64 + 1.0)).fract();
                    r.at_fraction(u)
                })
                .collect()
        })
        .collect()
}

fn enumerate_discrete(domain: &[Range]) -> Vec<Vec<f64>> {
    let mut points = vec![vec![]];
    for r in domain {
        let Range::Discrete(values) = r else { unreachable!() };
        points = points
            .into_iter()
            .flat_map(|p| {
                values.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push(*v);
                    q
                })
            })
            .collect();
    }
    points
}

/// Share of sample points where both sides must agree on being defined.
pub const DEFINED_AGREEMENT: f64 = 0.99;

/// Numeric equivalence on `n` quasi-uniform points of `domain`.
///
/// True when `|a - b| <= tol·max(1, |b|)` wherever both are finite, and both
/// sides are finite (or both sentinel) on at least 99% of the points.
pub fn numeric_equivalent(a: &Expression, b: &Expression, domain: &[Range], tol: f64, n: usize) -> Result<bool> {
    let fa = |x: &[f64]| a.eval(x);
    let fb = |x: &[f64]| b.eval(x);
    functions_equivalent(&fa, &fb, domain, tol, n)
}

/// [`numeric_equivalent`] over arbitrary scalar functions.
pub fn functions_equivalent(
    a: &dyn Fn(&[f64]) -> f64,
    b: &dyn Fn(&[f64]) -> f64,
    domain: &[Range],
    tol: f64,
    n: usize,
) -> Result<bool> {
    if domain.is_empty() || domain.iter().any(Range::is_degenerate) {
        return Err(Error::Contract("equivalence domain is empty".into()));
    }
    if n < 100 {
        return Err(Error::Contract(format!("need at least 100 sample points, got {n}")));
    }
    let points = quasi_uniform_points(domain, n);
    let mut agree = 0usize;
    for x in &points {
        let (va, vb) = (a(x), b(x));
        match (va.is_finite(), vb.is_finite()) {
            (true, true) => {
                agree += 1;
                if (va - vb).abs() > tol * vb.abs().max(1.0) {
                    return Ok(false);
                }
            }
            (false, false) => agree += 1,
            _ => {}
        }
    }
    Ok(agree as f64 >= DEFINED_AGREEMENT * points.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NetworkConfig;

    fn x(i: usize) -> Expression {
        Expression::Input(i)
    }
    fn c(v: f64) -> Expression {
        Expression::Constant(v)
    }
    fn ap(b: Basis, ch: Vec<Expression>) -> Expression {
        Expression::Apply(b, ch)
    }

    fn small_net() -> Network {
        // sources: x0 1 | ADD SIN
        Network::build(NetworkConfig {
            depth: 1,
            bases: vec![Basis::Add, Basis::Sin],
            input_count: 1,
            constants: vec![1.0],
            output_count: 1,
            temperature: 1.0,
            last_temperature: 1.0,
            skip_connections: true,
        })
        .unwrap()
    }

    #[test]
    fn dag_unfolds_to_tree() {
        let net = small_net();
        let dag = SampledDag::from_choices(&net, vec![0, 1, 0, 2]).unwrap();
        let e = dag_to_expression(&net, &dag, 0);
        assert_eq!(e.to_string(), "(x0 + 1)");
        let dag = SampledDag::from_choices(&net, vec![0, 1, 1, 3]).unwrap();
        assert_eq!(dag_to_expression(&net, &dag, 0).to_string(), "sin(1)");
        assert_eq!(simplify(&dag_to_expression(&net, &dag, 0)), c(1f64.sin()));
    }

    #[test]
    fn render_round_trip_examples() {
        let e = ap(Basis::Square, vec![ap(Basis::Sin, vec![ap(Basis::Add, vec![x(0), c(1.0)])])]);
        assert_eq!(e.to_string(), "sin((x0 + 1))^2");
        assert_eq!(Expression::parse("sin((x0 + 1))^2").unwrap(), e);
        let n = ap(Basis::Neg, vec![c(1.0)]);
        assert_eq!(n.to_string(), "-(1)");
        assert_eq!(Expression::parse("-(1)").unwrap(), n);
        assert_eq!(Expression::parse("-1").unwrap(), c(-1.0));
        assert_eq!(Expression::parse("pi").unwrap(), c(PI));
        let sq2 = ap(Basis::Square, vec![ap(Basis::Square, vec![x(0)])]);
        assert_eq!(Expression::parse(&sq2.to_string()).unwrap(), sq2);
        let iff = ap(Basis::IfLeq, vec![x(0), c(2.0), x(1), ap(Basis::Neg, vec![x(1)])]);
        assert_eq!(iff.to_string(), "if_leq(x0, 2, x1, -(x1))");
        assert_eq!(Expression::parse(&iff.to_string()).unwrap(), iff);
    }

    #[test]
    fn parse_errors() {
        assert!(Expression::parse("sin(x0").is_err());
        assert!(Expression::parse("foo(x0)").is_err());
        assert!(Expression::parse("add(x0)").is_err());
        assert!(Expression::parse("(x0 + 1) junk").is_err());
    }

    #[test]
    fn simplify_examples() {
        let e = ap(Basis::Add, vec![ap(Basis::Mul, vec![x(0), c(1.0)]), c(0.0)]);
        assert_eq!(simplify(&e), x(0));
        let e = ap(Basis::Mul, vec![c(2.0), ap(Basis::Square, vec![c(2.0)])]);
        assert_eq!(simplify(&e), c(8.0));
        let e = ap(Basis::Sin, vec![ap(Basis::Add, vec![x(0), c(1.0)])]);
        assert_eq!(simplify(&e), e);
        let e = ap(Basis::Neg, vec![ap(Basis::Neg, vec![ap(Basis::Id, vec![x(2)])])]);
        assert_eq!(simplify(&e), x(2));
        // sentinel-valued constant subtree is left alone
        let e = ap(Basis::Div, vec![c(1.0), c(0.0)]);
        assert_eq!(simplify(&e), e);
    }

    #[test]
    fn equivalence_examples() {
        let dom = [Range::Interval(-10.0, 10.0)];
        let a = ap(Basis::Add, vec![x(0), c(1.0)]);
        let b = ap(Basis::Add, vec![c(1.0), x(0)]);
        assert!(numeric_equivalent(&a, &b, &dom, 1e-6, 1000).unwrap());
        let sq = ap(Basis::Square, vec![x(0)]);
        let mm = ap(Basis::Mul, vec![x(0), x(0)]);
        assert!(numeric_equivalent(&sq, &mm, &dom, 1e-6, 1000).unwrap());

        // (x^2 + x) / (x + 2) only approaches x + 1 - ... for large |x|
        let rational = Expression::parse("(((x0 * x0) + x0) / (x0 + 2))").unwrap();
        let dom6 = [Range::Interval(-6.0, 6.0)];
        assert!(!numeric_equivalent(&a, &rational, &dom6, 1e-6, 1000).unwrap());

        assert!(numeric_equivalent(&a, &b, &[], 1e-6, 1000).is_err());
        assert!(numeric_equivalent(&a, &b, &dom, 1e-6, 10).is_err());
    }

    #[test]
    fn discrete_domains_are_enumerated() {
        let dom = vec![Range::Discrete(vec![0.0, 1.0]); 4];
        let pts = quasi_uniform_points(&dom, 100);
        assert_eq!(pts.len(), 16);
        let xor = ap(Basis::Xor, vec![x(0), x(3)]);
        let alt = Expression::parse("xor(x3, x0)").unwrap();
        assert!(numeric_equivalent(&xor, &alt, &dom, 0.0, 100).unwrap());
        let wrong = Expression::parse("xor(x2, x0)").unwrap();
        assert!(!numeric_equivalent(&xor, &wrong, &dom, 0.0, 100).unwrap());
    }
}
