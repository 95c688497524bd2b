//! Target specifications, dataset generation and IDX ingestion.

use std::fmt::Write as _;
use std::io::Write;
use std::path::Path;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::expression::{functions_equivalent, Expression};
use crate::network::Network;
use crate::sampler::{evaluate, Batch, SampledDag};

/// One input dimension: a closed interval or a finite set of values.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RangeRepr", into = "RangeRepr")]
pub enum Range {
    Interval(f64, f64),
    Discrete(Vec<f64>),
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum RangeRepr {
    Pair([f64; 2]),
    Set { values: Vec<f64> },
}

impl TryFrom<RangeRepr> for Range {
    type Error = Error;

    fn try_from(r: RangeRepr) -> Result<Range> {
        let range = match r {
            RangeRepr::Pair([a, b]) => Range::Interval(a, b),
            RangeRepr::Set { values } => Range::Discrete(values),
        };
        if range.is_degenerate() {
            return Err(Error::config(format!("degenerate range {range:?}")));
        }
        Ok(range)
    }
}

impl From<Range> for RangeRepr {
    fn from(r: Range) -> RangeRepr {
        match r {
            Range::Interval(a, b) => RangeRepr::Pair([a, b]),
            Range::Discrete(values) => RangeRepr::Set { values },
        }
    }
}

impl Range {
    pub fn is_degenerate(&self) -> bool {
        match self {
            Range::Interval(a, b) => !(a.is_finite() && b.is_finite() && a < b),
            Range::Discrete(v) => v.is_empty() || v.iter().any(|x| !x.is_finite()),
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Range::Interval(a, b) => rng.gen_range(*a..=*b),
            Range::Discrete(v) => v[rng.gen_range(0..v.len())],
        }
    }

    /// Map `u` in [0, 1) onto the range.
    pub fn at_fraction(&self, u: f64) -> f64 {
        match self {
            Range::Interval(a, b) => a + (b - a) * u,
            Range::Discrete(v) => v[((u * v.len() as f64) as usize).min(v.len() - 1)],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum TargetKind {
    /// `y_o = outputs[o](x)`.
    Explicit { outputs: Vec<Expression> },
    /// Points on the curve `x_last = solve(x_free)`, all mapped to `value`.
    Implicit { solve: Expression, value: f64 },
    /// `y = step^∘depth(x)` for a single-input step function.
    Recurrent { step: Expression, depth: usize },
    /// Loaded from IDX files; `classes` are the retained digit labels.
    Classification { classes: Vec<u8> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct TargetSpec {
    pub name: String,
    pub kind: TargetKind,
    /// Ranges of the sampled inputs. For implicit targets these cover only the
    /// free inputs; the last input is derived.
    pub ranges: Vec<Range>,
}

impl TargetSpec {
    pub fn explicit(name: &str, outputs: &[&str], ranges: Vec<Range>) -> Result<TargetSpec> {
        let outputs = outputs.iter().map(|s| Expression::parse(s)).collect::<Result<_>>()?;
        let spec = TargetSpec {
            name: name.into(),
            kind: TargetKind::Explicit { outputs },
            ranges,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if let Some(r) = self.ranges.iter().find(|r| r.is_degenerate()) {
            return Err(Error::config(format!("target `{}`: degenerate range {r:?}", self.name)));
        }
        let dims = self.ranges.len();
        match &self.kind {
            TargetKind::Explicit { outputs } => {
                if outputs.is_empty() {
                    return Err(Error::config("explicit target needs at least one output"));
                }
                if dims == 0 {
                    return Err(Error::config("explicit target needs at least one input range"));
                }
                if let Some(e) = outputs.iter().find(|e| e.input_dimension() > dims) {
                    return Err(Error::config(format!("target `{e}` uses more inputs than the {dims} ranges given")));
                }
            }
            TargetKind::Implicit { solve, value } => {
                if dims == 0 || solve.input_dimension() > dims || !value.is_finite() {
                    return Err(Error::config("implicit target needs free ranges covering `solve` and a finite value"));
                }
            }
            TargetKind::Recurrent { step, depth } => {
                if dims != 1 {
                    return Err(Error::config("recurrent targets must have exactly one input and one output"));
                }
                if *depth == 0 || step.input_dimension() > 1 {
                    return Err(Error::config("recurrent target needs depth >= 1 and a single-input step"));
                }
            }
            TargetKind::Classification { classes } => {
                if classes.len() < 2 {
                    return Err(Error::config("classification needs at least two classes"));
                }
            }
        }
        Ok(())
    }

    pub fn input_count(&self) -> usize {
        match &self.kind {
            TargetKind::Implicit { .. } => self.ranges.len() + 1,
            TargetKind::Classification { .. } => 0,
            _ => self.ranges.len(),
        }
    }

    pub fn output_count(&self) -> usize {
        match &self.kind {
            TargetKind::Explicit { outputs } => outputs.len(),
            TargetKind::Implicit { .. } | TargetKind::Recurrent { .. } => 1,
            TargetKind::Classification { classes } => classes.len(),
        }
    }

    /// Complete a draw of the sampled dimensions into a full input vector.
    fn complete(&self, free: &[f64]) -> Vec<f64> {
        let mut x = free.to_vec();
        if let TargetKind::Implicit { solve, .. } = &self.kind {
            x.push(solve.eval(free));
        }
        x
    }

    /// Target values at a full input vector. Non-finite entries mark points
    /// outside the target's domain.
    pub fn reference(&self, x: &[f64]) -> Vec<f64> {
        match &self.kind {
            TargetKind::Explicit { outputs } => outputs.iter().map(|e| e.eval(x)).collect(),
            TargetKind::Implicit { value, .. } => vec![*value],
            TargetKind::Recurrent { step, depth } => {
                let mut v = x[0];
                for _ in 0..*depth {
                    v = step.eval(&[v]);
                }
                vec![v]
            }
            TargetKind::Classification { .. } => vec![],
        }
    }

    /// Numeric equivalence of a candidate output to the target's output `o`
    /// over the target's domain.
    pub fn equivalent(&self, o: usize, candidate: &dyn Fn(&[f64]) -> f64, tol: f64, n: usize) -> Result<bool> {
        let target = |free: &[f64]| self.reference(&self.complete(free))[o];
        let cand = |free: &[f64]| candidate(&self.complete(free));
        functions_equivalent(&cand, &target, &self.ranges, tol, n)
    }

    /// True for targets whose outputs are exact {0,1} programs.
    pub fn is_boolean(&self) -> bool {
        matches!(&self.kind, TargetKind::Explicit { .. })
            && self
                .ranges
                .iter()
                .all(|r| matches!(r, Range::Discrete(v) if v.iter().all(|x| *x == 0.0 || *x == 1.0)))
    }
}

fn interval(a: f64, b: f64) -> Range {
    Range::Interval(a, b)
}

/// Named benchmark targets.
pub fn builtin_target(name: &str) -> Result<TargetSpec> {
    let explicit = |outs: &[&str], ranges: Vec<Range>| TargetSpec::explicit(name, outs, ranges);
    let bits = || Range::Discrete(vec![0.0, 1.0]);
    match name {
        "2x2_plus_3x" => explicit(&["((2 * x0^2) + (3 * x0))"], vec![interval(-10.0, 10.0)]),
        "sin_3x_plus_2" => explicit(&["sin(((3 * x0) + 2))"], vec![interval(-10.0, 10.0)]),
        "sum_sin" => explicit(&["((sin(x0) + sin((2 * x0))) + sin((3 * x0)))"], vec![interval(-20.0, 20.0)]),
        "rational" => explicit(&["((x0^2 + x0) / (x0 + 2))"], vec![interval(-6.0, 6.0)]),
        "rational_2d" => explicit(
            &["((x0^2 * (x0 + 1)) / (x1^2 * (x1^2 * x1)))"],
            vec![interval(-10.0, 10.0), interval(0.1, 3.0)],
        ),
        "paraboloid" => explicit(
            &["((x0^2 / 2) + ((x1 + 1)^2 / 2))"],
            vec![interval(-20.0, -2.0), interval(2.0, 20.0)],
        ),
        "hyperbola" => {
            let spec = TargetSpec {
                name: name.into(),
                kind: TargetKind::Implicit {
                    solve: Expression::parse("(1 / x0)")?,
                    value: 1.0,
                },
                ranges: vec![interval(0.5, 2.0)],
            };
            spec.validate()?;
            Ok(spec)
        }
        "3x_or_x" => explicit(&["if_leq(x0, 0, x0, (3 * x0))"], vec![interval(-20.0, 20.0)]),
        "x2_or_neg_x" => explicit(&["if_leq(x0, 0, -(x0), x0^2)"], vec![interval(-20.0, 20.0)]),
        "x_or_sin" => explicit(&["if_leq(x0, 0, sin(x0), x0)"], vec![interval(-20.0, 20.0)]),
        "sort3" => explicit(
            &[
                "min(min(x0, x1), x2)",
                "max(min(x0, x1), min(max(x0, x1), x2))",
                "max(max(x0, x1), x2)",
            ],
            vec![interval(-50.0, 50.0); 3],
        ),
        "lfsr4" => explicit(&["xor(x2, x3)", "x0", "x1", "x2"], vec![bits(); 4]),
        "piecewise_2d" => explicit(
            &["if_leq(2, x0, -(x1), x1)", "if_leq(0, x1, x1^2, x0)"],
            vec![interval(-5.0, 5.0); 2],
        ),
        "recurrent_square_half" => recurrent(name, "if_leq(2, x0, (x0 / 2), x0^2)", 4, interval(-8.0, 8.0)),
        "recurrent_shift" => recurrent(name, "if_leq(2, x0, (x0 - 1), (x0 + 2))", 2, interval(-3.0, 6.0)),
        "mnist_binary" => Ok(TargetSpec {
            name: name.into(),
            kind: TargetKind::Classification { classes: vec![0, 7] },
            ranges: vec![],
        }),
        "mnist_trinary" => Ok(TargetSpec {
            name: name.into(),
            kind: TargetKind::Classification { classes: vec![0, 1, 2] },
            ranges: vec![],
        }),
        _ => Err(Error::config(format!("unknown builtin target `{name}`"))),
    }
}

pub const BUILTIN_TARGETS: &[&str] = &[
    "2x2_plus_3x",
    "sin_3x_plus_2",
    "sum_sin",
    "rational",
    "rational_2d",
    "paraboloid",
    "hyperbola",
    "3x_or_x",
    "x2_or_neg_x",
    "x_or_sin",
    "sort3",
    "lfsr4",
    "piecewise_2d",
    "recurrent_square_half",
    "recurrent_shift",
    "mnist_binary",
    "mnist_trinary",
];

fn recurrent(name: &str, step: &str, depth: usize, range: Range) -> Result<TargetSpec> {
    let spec = TargetSpec {
        name: name.into(),
        kind: TargetKind::Recurrent {
            step: Expression::parse(step)?,
            depth,
        },
        ranges: vec![range],
    };
    spec.validate()?;
    Ok(spec)
}

/// Column-major samples: `inputs[k][row]`, `targets[o][row]`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub inputs: Vec<Vec<f64>>,
    pub targets: Vec<Vec<f64>>,
    pub seed: Option<u64>,
}

impl Dataset {
    pub fn new(inputs: Vec<Vec<f64>>, targets: Vec<Vec<f64>>) -> Result<Dataset> {
        let len = targets.first().map_or(0, Vec::len);
        if inputs.iter().chain(&targets).any(|c| c.len() != len) {
            return Err(Error::Contract("dataset columns differ in length".into()));
        }
        if inputs.iter().chain(&targets).flatten().any(|v| !v.is_finite()) {
            return Err(Error::Contract("dataset contains non-finite entries".into()));
        }
        Ok(Dataset { inputs, targets, seed: None })
    }

    pub fn len(&self) -> usize {
        self.targets.first().map_or(0, Vec::len)
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn input_count(&self) -> usize {
        self.inputs.len()
    }

    pub fn output_count(&self) -> usize {
        self.targets.len()
    }

    pub fn input_row(&self, i: usize) -> Vec<f64> {
        self.inputs.iter().map(|c| c[i]).collect()
    }

    pub fn target_row(&self, i: usize) -> Vec<f64> {
        self.targets.iter().map(|c| c[i]).collect()
    }

    /// Rows at `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset {
        let pick = |cols: &[Vec<f64>]| cols.iter().map(|c| indices.iter().map(|&i| c[i]).collect()).collect();
        Dataset {
            inputs: pick(&self.inputs),
            targets: pick(&self.targets),
            seed: self.seed,
        }
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        let header: Vec<String> = (0..self.input_count())
            .map(|k| format!("x{k}"))
            .chain((0..self.output_count()).map(|o| format!("y{o}")))
            .collect();
        out.push_str(&header.join(","));
        out.push('\n');
        for i in 0..self.len() {
            let cells: Vec<String> = self.input_row(i).into_iter().chain(self.target_row(i)).map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", cells.join(","));
        }
        out
    }

    pub fn write_csv(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut f = std::fs::File::create(path)?;
        f.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    /// Network input batch (constants appended from `net`'s config).
    pub fn batch(&self, net: &Network) -> Result<Batch> {
        Batch::from_columns(net.config(), self.inputs.clone())
    }
}

const MAX_DRAWS_PER_ROW: usize = 1000;

/// Draw `n` rows from `spec`. Draws whose target is non-finite are redrawn.
pub fn generate<R: Rng + ?Sized>(spec: &TargetSpec, n: usize, rng: &mut R) -> Result<Dataset> {
    spec.validate()?;
    if n == 0 {
        return Err(Error::config("dataset size must be at least 1"));
    }
    if matches!(spec.kind, TargetKind::Classification { .. }) {
        return Err(Error::config(format!("target `{}` is loaded from IDX files, not generated", spec.name)));
    }
    let mut inputs = vec![Vec::with_capacity(n); spec.input_count()];
    let mut targets = vec![Vec::with_capacity(n); spec.output_count()];
    let mut budget = n * MAX_DRAWS_PER_ROW;
    let mut free = vec![0.0; spec.ranges.len()];
    while targets[0].len() < n {
        if budget == 0 {
            return Err(Error::config(format!("target `{}` is undefined on almost all of its range", spec.name)));
        }
        budget -= 1;
        for (slot, r) in free.iter_mut().zip(&spec.ranges) {
            *slot = r.sample(rng);
        }
        let x = spec.complete(&free);
        let y = spec.reference(&x);
        if x.iter().chain(&y).all(|v| v.is_finite()) {
            for (col, v) in inputs.iter_mut().zip(x) {
                col.push(v);
            }
            for (col, v) in targets.iter_mut().zip(y) {
                col.push(v);
            }
        }
    }
    Ok(Dataset { inputs, targets, seed: None })
}

pub const IDX_IMAGE_MAGIC: u32 = 2051;
pub const IDX_LABEL_MAGIC: u32 = 2049;

fn read_u32(bytes: &[u8], at: usize) -> Option<u32> {
    bytes.get(at..at + 4).map(|b| u32::from_be_bytes([b[0], b[1], b[2], b[3]]))
}

fn idx_header(path: &Path, bytes: &[u8], magic: u32, dims: usize) -> Result<Vec<usize>> {
    let header = 4 * (1 + dims);
    // magic first so a swapped pair reports the wrong file type
    if let Some(found) = read_u32(bytes, 0).filter(|&m| m != magic) {
        return Err(Error::Magic {
            path: path.into(),
            found,
            expected: magic,
        });
    }
    if bytes.len() < header {
        return Err(Error::Truncated {
            path: path.into(),
            expected: header,
            found: bytes.len(),
        });
    }
    let shape: Vec<usize> = (0..dims).map(|d| read_u32(bytes, 4 + 4 * d).unwrap_or(0) as usize).collect();
    let expected = header + shape.iter().product::<usize>();
    if bytes.len() < expected {
        return Err(Error::Truncated {
            path: path.into(),
            expected,
            found: bytes.len(),
        });
    }
    Ok(shape)
}

/// Load an IDX image/label pair, keeping rows whose label is in `classes`.
/// Pixels are scaled to [0, 1]; targets are one-hot in `classes` order.
pub fn load_idx(images: impl AsRef<Path>, labels: impl AsRef<Path>, classes: &[u8]) -> Result<Dataset> {
    let (images, labels) = (images.as_ref(), labels.as_ref());
    let read = |p: &Path| std::fs::read(p).map_err(|e| Error::load(p, e.to_string()));
    let img = read(images)?;
    let lab = read(labels)?;
    let ishape = idx_header(images, &img, IDX_IMAGE_MAGIC, 3)?;
    let lshape = idx_header(labels, &lab, IDX_LABEL_MAGIC, 1)?;
    if ishape[0] != lshape[0] {
        return Err(Error::CountMismatch {
            images: ishape[0],
            labels: lshape[0],
        });
    }
    let pixels = ishape[1] * ishape[2];
    let keep: Vec<(usize, usize)> = lab[8..8 + lshape[0]]
        .iter()
        .enumerate()
        .filter_map(|(i, l)| classes.iter().position(|c| c == l).map(|class| (i, class)))
        .collect();
    let mut inputs = vec![Vec::with_capacity(keep.len()); pixels];
    let mut targets = vec![Vec::with_capacity(keep.len()); classes.len()];
    for &(i, class) in &keep {
        let row = &img[16 + i * pixels..16 + (i + 1) * pixels];
        for (col, &p) in inputs.iter_mut().zip(row) {
            col.push(p as f64 / 255.0);
        }
        for (o, col) in targets.iter_mut().enumerate() {
            col.push(if o == class { 1.0 } else { 0.0 });
        }
    }
    Ok(Dataset { inputs, targets, seed: None })
}

/// Seeded shuffle split; the test part has `floor(len·test_fraction)` rows.
pub fn split<R: Rng + ?Sized>(data: &Dataset, test_fraction: f64, rng: &mut R) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::config(format!("test fraction {test_fraction} outside (0, 1)")));
    }
    let mut idx: Vec<usize> = (0..data.len()).collect();
    idx.shuffle(rng);
    let test_len = (data.len() as f64 * test_fraction).floor() as usize;
    let (test, train) = idx.split_at(test_len);
    Ok((data.select(train), data.select(test)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AccuracyRule {
    /// Every output thresholded must equal the one-hot label.
    Threshold(f64),
    /// Largest output must sit on the labelled class.
    Argmax,
}

impl Default for AccuracyRule {
    fn default() -> Self {
        AccuracyRule::Threshold(0.5)
    }
}

/// Fraction of rows classified correctly from per-output prediction columns.
pub fn accuracy_from_outputs(outputs: &[Vec<f64>], targets: &[Vec<f64>], rule: AccuracyRule) -> f64 {
    let rows = targets.first().map_or(0, Vec::len);
    if rows == 0 {
        return 0.0;
    }
    let correct = (0..rows)
        .filter(|&i| match rule {
            AccuracyRule::Threshold(t) => outputs
                .iter()
                .zip(targets)
                .all(|(out, lab)| (out[i] > t) == (lab[i] > 0.5)),
            AccuracyRule::Argmax => {
                let best = outputs
                    .iter()
                    .enumerate()
                    .filter(|(_, c)| c[i].is_finite())
                    .max_by(|a, b| a.1[i].total_cmp(&b.1[i]))
                    .map(|(o, _)| o);
                best.is_some_and(|o| targets[o][i] > 0.5)
            }
        })
        .count();
    correct as f64 / rows as f64
}

pub fn classification_accuracy(net: &Network, dag: &SampledDag, test: &Dataset, rule: AccuracyRule) -> Result<f64> {
    let outputs = evaluate(net, dag, &test.batch(net)?);
    Ok(accuracy_from_outputs(&outputs, &test.targets, rule))
}
