//! Reference implementations used as test oracles. Nothing here calls into the
//! library's routing, softmax or evaluation code.

#![allow(dead_code)]

use rand::Rng;
use symreg_core::{Basis, NetworkConfig};

/// Architecture arithmetic derived straight from the layer description.
pub struct Layout {
    pub u: usize,
    pub n: usize,
    pub m: usize,
    pub depth: usize,
    pub outputs: usize,
    pub skip: bool,
    pub arities: Vec<usize>,
    pub arg_start: Vec<usize>,
    /// (offset, width) per row, hidden rows first.
    pub rows: Vec<(usize, usize)>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Src {
    Leaf(usize),
    Node(usize, usize),
}

impl Layout {
    pub fn new(c: &NetworkConfig) -> Layout {
        let u = c.input_count + c.constants.len();
        let n = c.bases.len();
        let arities: Vec<usize> = c.bases.iter().map(|b| b.arity()).collect();
        let mut arg_start = vec![0];
        for a in &arities {
            arg_start.push(arg_start.last().unwrap() + a);
        }
        let m = *arg_start.last().unwrap();
        let mut rows = vec![];
        let mut off = 0;
        let width = |l: usize| match (c.skip_connections, l) {
            (true, l) => u + l * n,
            (false, 0) => u,
            (false, _) => n,
        };
        for l in 0..c.depth {
            for _ in 0..m {
                rows.push((off, width(l)));
                off += width(l);
            }
        }
        for _ in 0..c.output_count {
            rows.push((off, width(c.depth)));
            off += width(c.depth);
        }
        Layout {
            u,
            n,
            m,
            depth: c.depth,
            outputs: c.output_count,
            skip: c.skip_connections,
            arities,
            arg_start,
            rows,
        }
    }

    pub fn total(&self) -> usize {
        self.rows.iter().map(|r| r.1).sum()
    }

    pub fn layer_of(&self, row: usize) -> usize {
        (row / self.m).min(self.depth)
    }

    pub fn output_row(&self, o: usize) -> usize {
        self.depth * self.m + o
    }

    pub fn resolve(&self, layer: usize, s: usize) -> Src {
        if self.skip {
            if s < self.u {
                Src::Leaf(s)
            } else {
                Src::Node((s - self.u) / self.n, (s - self.u) % self.n)
            }
        } else if layer == 0 {
            Src::Leaf(s)
        } else {
            Src::Node(layer - 1, s)
        }
    }

    /// Rows read by image node (layer, node).
    pub fn arg_rows(&self, layer: usize, node: usize) -> Vec<usize> {
        (self.arg_start[node]..self.arg_start[node + 1])
            .map(|r| layer * self.m + r)
            .collect()
    }

    /// Rows that become reachable when `row` picks `choice`.
    pub fn children(&self, row: usize, choice: usize) -> Vec<usize> {
        match self.resolve(self.layer_of(row), choice) {
            Src::Leaf(_) => vec![],
            Src::Node(l, i) => self.arg_rows(l, i),
        }
    }

    pub fn reachable(&self, choices: &[usize], outputs: &[usize]) -> Vec<usize> {
        let mut seen = vec![false; self.rows.len()];
        let mut stack: Vec<usize> = outputs.iter().map(|&o| self.output_row(o)).collect();
        while let Some(r) = stack.pop() {
            if !seen[r] {
                seen[r] = true;
                stack.extend(self.children(r, choices[r]));
            }
        }
        (0..seen.len()).filter(|&r| seen[r]).collect()
    }

    pub fn temperature(&self, c: &NetworkConfig, row: usize) -> f64 {
        if row >= self.depth * self.m {
            c.last_temperature
        } else {
            c.temperature
        }
    }

    /// Row probabilities from raw weights.
    pub fn probs(&self, c: &NetworkConfig, weights: &[f64], row: usize) -> Vec<f64> {
        let (off, w) = self.rows[row];
        let t = self.temperature(c, row);
        let z: Vec<f64> = weights[off..off + w].iter().map(|x| x / t).collect();
        let mx = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|v| (v - mx).exp()).collect();
        let s: f64 = e.iter().sum();
        e.iter().map(|v| v / s).collect()
    }

    pub fn log_q(&self, c: &NetworkConfig, weights: &[f64], choices: &[usize], outputs: &[usize]) -> f64 {
        self.reachable(choices, outputs)
            .into_iter()
            .map(|r| self.probs(c, weights, r)[choices[r]].ln())
            .sum()
    }

    /// Tree-interpreter evaluation of output `o` at raw input `x`.
    pub fn eval(&self, c: &NetworkConfig, choices: &[usize], x: &[f64], o: usize) -> f64 {
        let row = self.output_row(o);
        self.eval_src(c, choices, x, self.resolve(self.depth, choices[row]))
    }

    fn eval_src(&self, c: &NetworkConfig, choices: &[usize], x: &[f64], s: Src) -> f64 {
        match s {
            Src::Leaf(k) if k < c.input_count => x[k],
            Src::Leaf(k) => c.constants[k - c.input_count],
            Src::Node(l, i) => {
                let args: Vec<f64> = self
                    .arg_rows(l, i)
                    .into_iter()
                    .map(|r| self.eval_src(c, choices, x, self.resolve(l, choices[r])))
                    .collect();
                reference_basis(c.bases[i], &args)
            }
        }
    }
}

/// Independent basis semantics for the oracle vocabulary.
pub fn reference_basis(b: Basis, a: &[f64]) -> f64 {
    if a.iter().any(|v| !v.is_finite()) {
        return f64::NAN;
    }
    let r = match b {
        Basis::Add => a[0] + a[1],
        Basis::Sub => a[0] - a[1],
        Basis::Mul => a[0] * a[1],
        Basis::Div => {
            if a[1].abs() < 1e-12 {
                f64::NAN
            } else {
                a[0] / a[1]
            }
        }
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
        Basis::Tanh => a[0].tanh(),
        Basis::Sigmoid => 1.0 / (1.0 + (-a[0]).exp()),
        Basis::Add4 | Basis::Add9 => a.iter().sum(),
        other => panic!("oracle does not cover {other:?}"),
    };
    if r.is_finite() {
        r
    } else {
        f64::NAN
    }
}

pub const ORACLE_BASES: &[Basis] = &[
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
    Basis::Tanh,
    Basis::Add4,
];

pub struct Limits {
    pub max_depth: usize,
    pub max_bases: usize,
    pub max_inputs: usize,
    pub max_constants: usize,
    pub max_outputs: usize,
    pub bases: &'static [Basis],
}

pub fn random_config<R: Rng>(rng: &mut R, lim: &Limits) -> NetworkConfig {
    let inputs = rng.gen_range(1..=lim.max_inputs);
    let constants = (0..rng.gen_range(0..=lim.max_constants))
        .map(|_| rng.gen_range(-3.0..3.0f64).round())
        .collect();
    NetworkConfig {
        depth: rng.gen_range(1..=lim.max_depth),
        bases: (0..rng.gen_range(1..=lim.max_bases))
            .map(|_| lim.bases[rng.gen_range(0..lim.bases.len())])
            .collect(),
        input_count: inputs,
        constants,
        output_count: rng.gen_range(1..=lim.max_outputs),
        temperature: rng.gen_range(0.5..2.0),
        last_temperature: rng.gen_range(0.5..3.0),
        skip_connections: rng.gen_bool(0.7),
    }
}

pub fn random_weights<R: Rng>(rng: &mut R, len: usize) -> Vec<f64> {
    (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect()
}

pub fn random_choices<R: Rng>(rng: &mut R, layout: &Layout) -> Vec<usize> {
    layout.rows.iter().map(|&(_, w)| rng.gen_range(0..w)).collect()
}

pub fn configs_dir() -> std::path::PathBuf {
    std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}
