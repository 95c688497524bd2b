//! Primitive functions that networks compose.
//!
//! Every basis is total over finite inputs: a domain violation or overflow
//! yields the sentinel `NaN` instead of panicking, and a non-finite argument
//! always yields the sentinel (including for `MIN`/`MAX`/`IF_LEQ`, which would
//! otherwise swallow a `NaN`).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The value produced by undefined operations.
pub const SENTINEL: f64 = f64::NAN;

/// Denominators smaller than this in magnitude produce the sentinel.
pub const DIV_GUARD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Basis {
    Add,
    Sub,
    Mul,
    Div,
    Sin,
    Square,
    Neg,
    Id,
    /// `IF_LEQ(a, b, c, d)` is `c` when `a <= b`, else `d`.
    IfLeq,
    Min,
    Max,
    /// Exclusive or of the two inputs thresholded at 0.5.
    Xor,
    Sigmoid,
    Tanh,
    /// `sigmoid(10 x)`.
    Sigmoid10,
    /// `tanh(10 x)`.
    Tanh10,
    Add4,
    Add9,
    Min4,
    Max4,
    Min9,
    Max9,
}

impl Basis {
    pub const ALL: [Basis; 22] = [
        Basis::Add,
        Basis::Sub,
        Basis::Mul,
        Basis::Div,
        Basis::Sin,
        Basis::Square,
        Basis::Neg,
        Basis::Id,
        Basis::IfLeq,
        Basis::Min,
        Basis::Max,
        Basis::Xor,
        Basis::Sigmoid,
        Basis::Tanh,
        Basis::Sigmoid10,
        Basis::Tanh10,
        Basis::Add4,
        Basis::Add9,
        Basis::Min4,
        Basis::Max4,
        Basis::Min9,
        Basis::Max9,
    ];

    /// Stable identifier used in config files.
    pub fn name(self) -> &'static str {
        match self {
            Basis::Add => "ADD",
            Basis::Sub => "SUB",
            Basis::Mul => "MUL",
            Basis::Div => "DIV",
            Basis::Sin => "SIN",
            Basis::Square => "SQUARE",
            Basis::Neg => "NEG",
            Basis::Id => "ID",
            Basis::IfLeq => "IF_LEQ",
            Basis::Min => "MIN",
            Basis::Max => "MAX",
            Basis::Xor => "XOR",
            Basis::Sigmoid => "SIGMOID",
            Basis::Tanh => "TANH",
            Basis::Sigmoid10 => "SIGMOID10",
            Basis::Tanh10 => "TANH10",
            Basis::Add4 => "ADD4",
            Basis::Add9 => "ADD9",
            Basis::Min4 => "MIN4",
            Basis::Max4 => "MAX4",
            Basis::Min9 => "MIN9",
            Basis::Max9 => "MAX9",
        }
    }

    pub fn arity(self) -> usize {
        match self {
            Basis::Sin
            | Basis::Square
            | Basis::Neg
            | Basis::Id
            | Basis::Sigmoid
            | Basis::Tanh
            | Basis::Sigmoid10
            | Basis::Tanh10 => 1,
            Basis::Add | Basis::Sub | Basis::Mul | Basis::Div | Basis::Min | Basis::Max | Basis::Xor => 2,
            Basis::IfLeq | Basis::Add4 | Basis::Min4 | Basis::Max4 => 4,
            Basis::Add9 | Basis::Min9 | Basis::Max9 => 9,
        }
    }

    /// Informational only; training never differentiates through a basis.
    pub fn differentiable_hint(self) -> bool {
        !matches!(
            self,
            Basis::IfLeq | Basis::Min | Basis::Max | Basis::Xor | Basis::Min4 | Basis::Max4 | Basis::Min9 | Basis::Max9
        )
    }

    /// Name used for call-style rendering, e.g. `sin(x0)`. Infix and postfix
    /// operators are rendered specially; see [`Basis::render`].
    pub fn call_name(self) -> &'static str {
        match self {
            Basis::Add => "add",
            Basis::Sub => "sub",
            Basis::Mul => "mul",
            Basis::Div => "div",
            Basis::Sin => "sin",
            Basis::Square => "square",
            Basis::Neg => "neg",
            Basis::Id => "id",
            Basis::IfLeq => "if_leq",
            Basis::Min => "min",
            Basis::Max => "max",
            Basis::Xor => "xor",
            Basis::Sigmoid => "sigmoid",
            Basis::Tanh => "tanh",
            Basis::Sigmoid10 => "sigmoid10",
            Basis::Tanh10 => "tanh10",
            Basis::Add4 => "add4",
            Basis::Add9 => "add9",
            Basis::Min4 => "min4",
            Basis::Max4 => "max4",
            Basis::Min9 => "min9",
            Basis::Max9 => "max9",
        }
    }

    pub(crate) fn infix_symbol(self) -> Option<&'static str> {
        match self {
            Basis::Add => Some("+"),
            Basis::Sub => Some("-"),
            Basis::Mul => Some("*"),
            Basis::Div => Some("/"),
            _ => None,
        }
    }

    /// Checked scalar evaluation.
    pub fn eval(self, args: &[f64]) -> Result<f64> {
        if args.len() != self.arity() {
            return Err(Error::Arity {
                name: self.name(),
                expected: self.arity(),
                got: args.len(),
            });
        }
        Ok(self.apply(args))
    }

    /// Scalar evaluation without the arity check. `args.len()` must equal the arity.
    #[inline]
    pub fn apply(self, args: &[f64]) -> f64 {
        if args.iter().any(|a| !a.is_finite()) {
            return SENTINEL;
        }
        finite_or_sentinel(self.raw(args))
    }

    #[inline]
    fn raw(self, a: &[f64]) -> f64 {
        match self {
            Basis::Add => a[0] + a[1],
            Basis::Sub => a[0] - a[1],
            Basis::Mul => a[0] * a[1],
            Basis::Div => div(a[0], a[1]),
            Basis::Sin => a[0].sin(),
            Basis::Square => a[0] * a[0],
            Basis::Neg => -a[0],
            Basis::Id => a[0],
            Basis::IfLeq => {
                if a[0] <= a[1] {
                    a[2]
                } else {
                    a[3]
                }
            }
            Basis::Min => a[0].min(a[1]),
            Basis::Max => a[0].max(a[1]),
            Basis::Xor => xor(a[0], a[1]),
            Basis::Sigmoid => sigmoid(a[0]),
            Basis::Tanh => a[0].tanh(),
            Basis::Sigmoid10 => sigmoid(10.0 * a[0]),
            Basis::Tanh10 => (10.0 * a[0]).tanh(),
            Basis::Add4 | Basis::Add9 => a.iter().fold(0.0, |s, x| s + x),
            Basis::Min4 | Basis::Min9 => a.iter().copied().fold(f64::INFINITY, f64::min),
            Basis::Max4 | Basis::Max9 => a.iter().copied().fold(f64::NEG_INFINITY, f64::max),
        }
    }

    /// Column-wise evaluation: `args[k][i]` is argument `k` of row `i`.
    ///
    /// Produces exactly the same values as calling [`Basis::apply`] row by row.
    pub fn eval_columns(self, args: &[&[f64]], out: &mut [f64]) {
        debug_assert_eq!(args.len(), self.arity());
        debug_assert!(args.iter().all(|c| c.len() == out.len()));
        match self {
            Basis::Add => map2(args, out, |x, y| x + y),
            Basis::Sub => map2(args, out, |x, y| x - y),
            Basis::Mul => map2(args, out, |x, y| x * y),
            Basis::Div => map2(args, out, div),
            Basis::Min => map2(args, out, f64::min),
            Basis::Max => map2(args, out, f64::max),
            Basis::Xor => map2(args, out, xor),
            Basis::Sin => map1(args[0], out, f64::sin),
            Basis::Square => map1(args[0], out, |x| x * x),
            Basis::Neg => map1(args[0], out, |x| -x),
            Basis::Id => map1(args[0], out, |x| x),
            Basis::Sigmoid => map1(args[0], out, sigmoid),
            Basis::Tanh => map1(args[0], out, f64::tanh),
            Basis::Sigmoid10 => map1(args[0], out, |x| sigmoid(10.0 * x)),
            Basis::Tanh10 => map1(args[0], out, |x| (10.0 * x).tanh()),
            _ => {
                let mut row = [0.0; 9];
                let arity = self.arity();
                for (i, o) in out.iter_mut().enumerate() {
                    for k in 0..arity {
                        row[k] = args[k][i];
                    }
                    *o = self.apply(&row[..arity]);
                }
            }
        }
    }

    /// Symbolic rendering in the canonical infix grammar.
    pub fn render(self, args: &[String]) -> String {
        debug_assert_eq!(args.len(), self.arity());
        if let Some(op) = self.infix_symbol() {
            return format!("({} {} {})", args[0], op, args[1]);
        }
        match self {
            Basis::Square => {
                if is_atomic(&args[0]) {
                    format!("{}^2", args[0])
                } else {
                    format!("({})^2", args[0])
                }
            }
            Basis::Neg => format!("-({})", args[0]),
            _ => format!("{}({})", self.call_name(), args.join(", ")),
        }
    }

    pub fn from_call_name(name: &str) -> Option<Basis> {
        Basis::ALL.iter().copied().find(|b| b.call_name() == name)
    }
}

/// A rendered operand is atomic when a trailing `^2` binds to all of it.
fn is_atomic(s: &str) -> bool {
    let word = |t: &str| t.chars().all(|c| c.is_ascii_alphanumeric() || c == '_' || c == '.');
    if s.is_empty() || s.starts_with('-') || s.ends_with("^2") {
        return false;
    }
    if word(s) {
        return true;
    }
    match s.find('(') {
        Some(open) if word(&s[..open]) => matching_close(s, open) == Some(s.len() - 1),
        _ => false,
    }
}

fn matching_close(s: &str, open: usize) -> Option<usize> {
    let mut depth = 0usize;
    for (i, c) in s.char_indices().skip(open) {
        match c {
            '(' => depth += 1,
            ')' => {
                depth -= 1;
                if depth == 0 {
                    return Some(i);
                }
            }
            _ => {}
        }
    }
    None
}

impl fmt::Display for Basis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Basis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase();
        Basis::ALL
            .iter()
            .copied()
            .find(|b| b.name() == upper)
            .ok_or_else(|| Error::UnknownBasis(s.to_string()))
    }
}

impl TryFrom<String> for Basis {
    type Error = Error;

    fn try_from(s: String) -> Result<Self> {
        s.parse()
    }
}

impl From<Basis> for String {
    fn from(b: Basis) -> String {
        b.name().to_string()
    }
}

/// Every built-in basis. Names are stable identifiers.
pub fn builtin_registry() -> &'static [Basis] {
    &Basis::ALL
}

pub fn lookup(name: &str) -> Result<Basis> {
    name.parse()
}

#[inline]
fn finite_or_sentinel(v: f64) -> f64 {
    if v.is_finite() {
        v
    } else {
        SENTINEL
    }
}

#[inline]
fn div(x: f64, y: f64) -> f64 {
    if y.abs() < DIV_GUARD {
        SENTINEL
    } else {
        x / y
    }
}

#[inline]
fn xor(x: f64, y: f64) -> f64 {
    if (x > 0.5) != (y > 0.5) {
        1.0
    } else {
        0.0
    }
}

#[inline]
fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

#[inline]
fn map1(a: &[f64], out: &mut [f64], f: impl Fn(f64) -> f64) {
    for (o, &x) in out.iter_mut().zip(a) {
        *o = if x.is_finite() { finite_or_sentinel(f(x)) } else { SENTINEL };
    }
}

#[inline]
fn map2(args: &[&[f64]], out: &mut [f64], f: impl Fn(f64, f64) -> f64) {
    for ((o, &x), &y) in out.iter_mut().zip(args[0]).zip(args[1]) {
        *o = if x.is_finite() && y.is_finite() {
            finite_or_sentinel(f(x, y))
        } else {
            SENTINEL
        };
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn trivial_values() {
        assert_eq!(Basis::Add.eval(&[2.0, 3.0]).unwrap(), 5.0);
        assert_eq!(Basis::Sin.eval(&[0.0]).unwrap(), 0.0);
        assert!(Basis::Div.eval(&[1.0, 0.0]).unwrap().is_nan());
        assert!(Basis::Div.eval(&[1.0, 1e-13]).unwrap().is_nan());
        assert_eq!(Basis::Div.eval(&[1.0, 4.0]).unwrap(), 0.25);
    }

    #[test]
    fn if_leq_truth_table() {
        // Oracle: enumerate orderings of (a, b) and check the selected branch.
        for (a, b, expect) in [(1.0, 2.0, 10.0), (2.0, 2.0, 10.0), (3.0, 2.0, 20.0)] {
            assert_eq!(Basis::IfLeq.eval(&[a, b, 10.0, 20.0]).unwrap(), expect);
        }
    }

    #[test]
    fn xor_truth_table() {
        let rows = [((0.0, 0.0), 0.0), ((0.0, 1.0), 1.0), ((1.0, 0.0), 1.0), ((1.0, 1.0), 0.0)];
        for ((a, b), y) in rows {
            assert_eq!(Basis::Xor.eval(&[a, b]).unwrap(), y);
        }
    }

    #[test]
    fn scaled_activations() {
        let v = lookup("TANH10").unwrap().eval(&[0.2]).unwrap();
        assert!((v - 2.0f64.tanh()).abs() < 1e-15);
        assert!((v - 0.96403).abs() < 1e-5);
        let s = lookup("SIGMOID10").unwrap().eval(&[0.0]).unwrap();
        assert_eq!(s, 0.5);
    }

    #[test]
    fn registry_contents() {
        let expected = [
            ("ADD", 2),
            ("SUB", 2),
            ("MUL", 2),
            ("DIV", 2),
            ("SIN", 1),
            ("SQUARE", 1),
            ("NEG", 1),
            ("ID", 1),
            ("IF_LEQ", 4),
            ("MIN", 2),
            ("MAX", 2),
            ("XOR", 2),
            ("SIGMOID", 1),
            ("TANH", 1),
            ("SIGMOID10", 1),
            ("TANH10", 1),
            ("ADD4", 4),
            ("ADD9", 9),
            ("MIN4", 4),
            ("MAX4", 4),
            ("MIN9", 9),
            ("MAX9", 9),
        ];
        for (name, arity) in expected {
            let b = lookup(name).unwrap();
            assert_eq!(b.arity(), arity, "{name}");
            assert!(builtin_registry().contains(&b));
        }
        assert!(matches!(lookup("NOPE"), Err(Error::UnknownBasis(_))));
        assert_eq!(lookup("sin").unwrap(), Basis::Sin);
    }

    #[test]
    fn arity_mismatch_is_an_error() {
        let err = Basis::Add.eval(&[1.0]).unwrap_err();
        assert!(matches!(err, Error::Arity { expected: 2, got: 1, .. }));
    }

    #[test]
    fn sentinel_propagates_through_selectors() {
        for b in [Basis::Min, Basis::Max] {
            assert!(b.eval(&[f64::NAN, 1.0]).unwrap().is_nan());
        }
        assert!(Basis::IfLeq.eval(&[0.0, 1.0, 2.0, f64::NAN]).unwrap().is_nan());
        assert!(Basis::Mul.eval(&[1e200, 1e200]).unwrap().is_nan());
    }

    #[test]
    fn fuzz_never_aborts() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut args = [0.0; 9];
        for i in 0..100_000 {
            let b = Basis::ALL[i % Basis::ALL.len()];
            for a in args.iter_mut().take(b.arity()) {
                let exponent: f64 = rng.gen_range(-300.0..300.0);
                *a = rng.gen_range(-1.0..1.0) * 10f64.powf(exponent);
            }
            let v = b.eval(&args[..b.arity()]).unwrap();
            assert!(v.is_finite() || v.is_nan());
        }
    }

    #[test]
    fn columns_match_scalar() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let n = 64;
        for b in Basis::ALL {
            let cols: Vec<Vec<f64>> = (0..b.arity())
                .map(|_| (0..n).map(|_| rng.gen_range(-3.0..3.0)).collect())
                .collect();
            let refs: Vec<&[f64]> = cols.iter().map(|c| c.as_slice()).collect();
            let mut out = vec![0.0; n];
            b.eval_columns(&refs, &mut out);
            for i in 0..n {
                let row: Vec<f64> = cols.iter().map(|c| c[i]).collect();
                let s = b.apply(&row);
                assert!(s == out[i] || (s.is_nan() && out[i].is_nan()), "{b}");
            }
        }
    }
}
