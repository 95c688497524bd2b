//! Sampling function-specifying DAGs and evaluating them.
//!
//! A [`SampledDag`] fixes one source index for every row of the network, even
//! rows that no output reaches. Probabilities are computed by backtracking from
//! the requested outputs, so unreachable choices are marginalized out and the
//! result is a distribution over reachable-edge configurations.

use std::fmt::Write as _;

use rand::Rng;

use crate::bases::SENTINEL;
use crate::error::{Error, Result};
use crate::network::{Network, NetworkConfig, Source};

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SampledDag {
    /// Hidden rows (layer-major) followed by the output rows.
    choices: Vec<usize>,
    hidden: usize,
}

impl SampledDag {
    pub fn from_choices(net: &Network, choices: Vec<usize>) -> Result<SampledDag> {
        if choices.len() != net.row_count() {
            return Err(Error::Contract(format!(
                "dag has {} choices, network has {} rows",
                choices.len(),
                net.row_count()
            )));
        }
        for (id, (&c, row)) in choices.iter().zip(net.rows()).enumerate() {
            if c >= row.len {
                return Err(Error::Contract(format!(
                    "row {id} chooses source {c} of {}",
                    row.len
                )));
            }
        }
        Ok(SampledDag {
            hidden: net.row_count() - net.config().output_count,
            choices,
        })
    }

    /// Choice of every row, indexed like [`Network::rows`].
    pub fn choices(&self) -> &[usize] {
        &self.choices
    }

    pub fn hidden_choices(&self) -> &[usize] {
        &self.choices[..self.hidden]
    }

    pub fn output_choices(&self) -> &[usize] {
        &self.choices[self.hidden..]
    }

    pub fn choice(&self, row_id: usize) -> usize {
        self.choices[row_id]
    }

    /// Text form: one `layer row index` triple per line; output rows use
    /// `layer == depth`.
    pub fn to_text(&self, net: &Network) -> String {
        let mut s = String::new();
        for (spec, c) in net.rows().iter().zip(&self.choices) {
            let _ = writeln!(s, "{} {} {}", spec.layer, spec.row, c);
        }
        s
    }

    pub fn from_text(net: &Network, text: &str) -> Result<SampledDag> {
        let mut choices = vec![usize::MAX; net.row_count()];
        for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
            let parts: Vec<usize> = line
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|_| Error::Parse {
                    offset: n,
                    message: format!("bad triple `{line}`"),
                })?;
            let [layer, row, index] = parts[..] else {
                return Err(Error::Parse {
                    offset: n,
                    message: format!("expected 3 fields in `{line}`"),
                });
            };
            let id = net
                .rows()
                .iter()
                .position(|r| r.layer == layer && r.row == row)
                .ok_or_else(|| Error::Parse {
                    offset: n,
                    message: format!("no row ({layer}, {row})"),
                })?;
            choices[id] = index;
        }
        SampledDag::from_choices(net, choices)
    }
}

/// Draw a DAG from `q(·|W)`.
pub fn sample<R: Rng + ?Sized>(net: &Network, rng: &mut R) -> SampledDag {
    sample_with(net, &net.probabilities(), rng)
}

/// Draw a DAG given precomputed row probabilities ([`Network::probabilities`]).
pub fn sample_with<R: Rng + ?Sized>(net: &Network, probs: &[f64], rng: &mut R) -> SampledDag {
    let choices = net
        .rows()
        .iter()
        .map(|r| categorical(&probs[r.offset..r.offset + r.len], rng))
        .collect();
    SampledDag {
        choices,
        hidden: net.row_count() - net.config().output_count,
    }
}

fn categorical<R: Rng + ?Sized>(p: &[f64], rng: &mut R) -> usize {
    let u: f64 = rng.gen();
    let mut acc = 0.0;
    for (i, &pi) in p.iter().enumerate() {
        acc += pi;
        if u < acc {
            return i;
        }
    }
    // Rounding left `u` above the running sum; take the last non-zero entry.
    p.iter().rposition(|&pi| pi > 0.0).unwrap_or(p.len() - 1)
}

/// Per-row argmax, ties to the lowest index.
pub fn most_likely_dag(net: &Network) -> SampledDag {
    let choices = (0..net.row_count())
        .map(|id| {
            let w = net.row_weights(id);
            let mut best = 0;
            for (i, &x) in w.iter().enumerate() {
                if x > w[best] {
                    best = i;
                }
            }
            best
        })
        .collect();
    SampledDag {
        choices,
        hidden: net.row_count() - net.config().output_count,
    }
}

/// Rows reachable backward from `outputs`, sorted, each listed once.
pub fn reachable_rows(net: &Network, dag: &SampledDag, outputs: &[usize]) -> Vec<usize> {
    let mut seen = vec![false; net.row_count()];
    let mut stack: Vec<usize> = outputs.iter().map(|&o| net.output_row_id(o)).collect();
    while let Some(id) = stack.pop() {
        if std::mem::replace(&mut seen[id], true) {
            continue;
        }
        let layer = net.rows()[id].layer;
        if let Source::Image { layer: l, node } = net.source(layer, dag.choices[id]) {
            for r in net.argument_rows(node) {
                let child = net.hidden_row_id(l, r);
                if !seen[child] {
                    stack.push(child);
                }
            }
        }
    }
    seen.iter()
        .enumerate()
        .filter_map(|(i, &s)| s.then_some(i))
        .collect()
}

fn all_outputs(net: &Network) -> Vec<usize> {
    (0..net.config().output_count).collect()
}

/// `log q` of the DAG restricted to the rows reachable from `outputs`
/// (all outputs when `None`).
pub fn log_probability(net: &Network, dag: &SampledDag, outputs: Option<&[usize]>) -> f64 {
    log_probability_with(net, &net.probabilities(), dag, outputs)
}

pub fn log_probability_with(
    net: &Network,
    probs: &[f64],
    dag: &SampledDag,
    outputs: Option<&[usize]>,
) -> f64 {
    let owned;
    let outputs = match outputs {
        Some(o) => o,
        None => {
            owned = all_outputs(net);
            &owned
        }
    };
    reachable_rows(net, dag, outputs)
        .into_iter()
        .map(|id| probs[net.rows()[id].offset + dag.choices[id]].ln())
        .sum()
}

/// Key identifying the reachable part of a DAG; equal keys evaluate identically.
pub fn structure_key(net: &Network, dag: &SampledDag) -> Vec<u32> {
    let mut key = vec![u32::MAX; net.row_count()];
    for id in reachable_rows(net, dag, &all_outputs(net)) {
        key[id] = dag.choices[id] as u32;
    }
    key
}

/// Column-major inputs with the network's constants appended.
#[derive(Debug, Clone)]
pub struct Batch {
    columns: Vec<Vec<f64>>,
    len: usize,
}

impl Batch {
    /// `inputs[k]` is the column of raw input `k`.
    pub fn from_columns(config: &NetworkConfig, inputs: Vec<Vec<f64>>) -> Result<Batch> {
        let len = inputs.first().map_or(0, Vec::len);
        Batch::with_len(config, inputs, len)
    }

    pub fn from_rows(config: &NetworkConfig, rows: &[Vec<f64>]) -> Result<Batch> {
        if rows.iter().any(|r| r.len() != config.input_count) {
            return Err(Error::Contract("input row length mismatch".into()));
        }
        let cols = (0..config.input_count)
            .map(|k| rows.iter().map(|r| r[k]).collect())
            .collect();
        Batch::with_len(config, cols, rows.len())
    }

    fn with_len(config: &NetworkConfig, inputs: Vec<Vec<f64>>, len: usize) -> Result<Batch> {
        if inputs.len() != config.input_count {
            return Err(Error::Contract(format!(
                "batch has {} input columns, network expects {}",
                inputs.len(),
                config.input_count
            )));
        }
        if inputs.iter().any(|c| c.len() != len) {
            return Err(Error::Contract("ragged input columns".into()));
        }
        let mut columns = inputs;
        columns.extend(config.constants.iter().map(|&c| vec![c; len]));
        Ok(Batch { columns, len })
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Column `k` of the inputs-then-constants source block.
    pub fn column(&self, k: usize) -> &[f64] {
        &self.columns[k]
    }
}

/// Evaluate every output of `dag` over `batch`. Returns one column per output.
///
/// Only images reachable from the outputs are computed.
pub fn evaluate(net: &Network, dag: &SampledDag, batch: &Batch) -> Vec<Vec<f64>> {
    let cfg = net.config();
    let n = cfg.image_count();
    let outputs = all_outputs(net);
    let mut needed = vec![false; cfg.depth * n];
    for id in reachable_rows(net, dag, &outputs) {
        let spec = net.rows()[id];
        if let Source::Image { layer, node } = net.source(spec.layer, dag.choices[id]) {
            needed[layer * n + node] = true;
        }
    }

    let mut images: Vec<Option<Vec<f64>>> = vec![None; cfg.depth * n];
    for layer in 0..cfg.depth {
        for node in 0..n {
            if !needed[layer * n + node] {
                continue;
            }
            let basis = cfg.bases[node];
            let mut out = vec![0.0; batch.len()];
            let arg_cols: Vec<&[f64]> = net
                .argument_rows(node)
                .map(|r| {
                    let id = net.hidden_row_id(layer, r);
                    column(batch, &images, n, net.source(layer, dag.choices[id]))
                })
                .collect();
            basis.eval_columns(&arg_cols, &mut out);
            images[layer * n + node] = Some(out);
        }
    }

    outputs
        .iter()
        .map(|&o| {
            let id = net.output_row_id(o);
            column(batch, &images, n, net.source(cfg.depth, dag.choices[id])).to_vec()
        })
        .collect()
}

fn column<'a>(batch: &'a Batch, images: &'a [Option<Vec<f64>>], n: usize, src: Source) -> &'a [f64] {
    match src {
        Source::Input(k) => batch.column(k),
        Source::Image { layer, node } => images[layer * n + node]
            .as_deref()
            .expect("image evaluated before use"),
    }
}

/// Evaluate `f, f∘f, …, f^∘depth` by feeding outputs back as inputs.
///
/// Requires `output_count == input_count`. Once any output of a row is the
/// sentinel, every later depth is the sentinel for that row.
pub fn evaluate_recurrent(net: &Network, dag: &SampledDag, batch: &Batch, depth: usize) -> Result<Vec<Vec<Vec<f64>>>> {
    let cfg = net.config();
    if cfg.output_count != cfg.input_count {
        return Err(Error::Contract(format!(
            "recurrence needs as many outputs ({}) as inputs ({})",
            cfg.output_count, cfg.input_count
        )));
    }
    if depth == 0 {
        return Err(Error::Contract("recurrence depth must be at least 1".into()));
    }
    let mut results = Vec::with_capacity(depth);
    let mut dead = vec![false; batch.len()];
    let mut current = evaluate(net, dag, batch);
    loop {
        for (i, d) in dead.iter_mut().enumerate() {
            if *d || current.iter().any(|col| !col[i].is_finite()) {
                *d = true;
                for col in current.iter_mut() {
                    col[i] = SENTINEL;
                }
            }
        }
        results.push(current);
        if results.len() == depth {
            break;
        }
        let next_in = Batch::from_columns(cfg, results.last().cloned().unwrap_or_default())?;
        current = evaluate(net, dag, &next_in);
    }
    Ok(results)
}
