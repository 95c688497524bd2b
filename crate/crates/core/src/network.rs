//! Layered architecture: argument rows choosing among visible sources, image
//! nodes applying a basis to consecutive argument rows, and output rows.
//!
//! Sources visible to hidden layer `l` (0-based):
//!
//! * with skip connections: the `u` inputs and constants, then the images of
//!   layers `0..l` in order, `u + l·N` sources in total;
//! * without: the inputs and constants at layer 0, only the images of layer
//!   `l - 1` afterwards.
//!
//! Output rows see `u + L·N` sources with skips, or the `N` final images
//! without. All weights live in one flat row-major vector so the optimizer can
//! treat them as a single parameter block.

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bases::Basis;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkConfig {
    /// Number of hidden layers `L`.
    pub depth: usize,
    /// Basis occurrences of one layer, reused at every layer. Repeats are allowed.
    pub bases: Vec<Basis>,
    /// Raw input dimension, constants excluded.
    pub input_count: usize,
    pub constants: Vec<f64>,
    pub output_count: usize,
    pub temperature: f64,
    pub last_temperature: f64,
    pub skip_connections: bool,
}

impl NetworkConfig {
    pub fn validate(&self) -> Result<()> {
        if self.depth == 0 {
            return Err(Error::config("depth must be at least 1"));
        }
        if self.output_count == 0 {
            return Err(Error::config("output_count must be at least 1"));
        }
        if self.bases.is_empty() {
            return Err(Error::config("basis list is empty"));
        }
        if !(self.temperature > 0.0 && self.temperature.is_finite()) {
            return Err(Error::config("temperature must be positive"));
        }
        if !(self.last_temperature > 0.0 && self.last_temperature.is_finite()) {
            return Err(Error::config("last_temperature must be positive"));
        }
        if self.source_width() == 0 {
            return Err(Error::config("network has neither inputs nor constants"));
        }
        if self.constants.iter().any(|c| !c.is_finite()) {
            return Err(Error::config("constants must be finite"));
        }
        Ok(())
    }

    /// `u`: inputs plus constants.
    pub fn source_width(&self) -> usize {
        self.input_count + self.constants.len()
    }

    /// `N`: image nodes per layer.
    pub fn image_count(&self) -> usize {
        self.bases.len()
    }

    /// `M`: argument rows per layer.
    pub fn argument_count(&self) -> usize {
        self.bases.iter().map(|b| b.arity()).sum()
    }

    /// Sources visible to the argument rows of hidden layer `layer` (0-based).
    pub fn hidden_sources(&self, layer: usize) -> usize {
        let (u, n) = (self.source_width(), self.image_count());
        if self.skip_connections {
            u + layer * n
        } else if layer == 0 {
            u
        } else {
            n
        }
    }

    pub fn output_sources(&self) -> usize {
        if self.skip_connections {
            self.source_width() + self.depth * self.image_count()
        } else {
            self.image_count()
        }
    }
}

/// What a source index at some layer refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Source {
    /// Input column; indices at or past `input_count` are constants.
    Input(usize),
    Image { layer: usize, node: usize },
}

/// Location of one softmax row in the flat weight vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RowSpec {
    /// Hidden layer index, or `depth` for output rows.
    pub layer: usize,
    /// Row index within the layer (argument row or output index).
    pub row: usize,
    pub offset: usize,
    pub len: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Network {
    config: NetworkConfig,
    /// `arg_offsets[i]..arg_offsets[i + 1]` are the argument rows of image `i`.
    arg_offsets: Vec<usize>,
    rows: Vec<RowSpec>,
    weights: Vec<f64>,
}

pub const INITIAL_WEIGHT: f64 = 1.0;

impl Network {
    pub fn build(config: NetworkConfig) -> Result<Network> {
        config.validate()?;
        let mut arg_offsets = Vec::with_capacity(config.bases.len() + 1);
        let mut acc = 0;
        arg_offsets.push(0);
        for b in &config.bases {
            acc += b.arity();
            arg_offsets.push(acc);
        }
        let m = config.argument_count();
        let mut rows = Vec::with_capacity(config.depth * m + config.output_count);
        let mut offset = 0;
        for layer in 0..config.depth {
            let len = config.hidden_sources(layer);
            for row in 0..m {
                rows.push(RowSpec { layer, row, offset, len });
                offset += len;
            }
        }
        let len = config.output_sources();
        for row in 0..config.output_count {
            rows.push(RowSpec {
                layer: config.depth,
                row,
                offset,
                len,
            });
            offset += len;
        }
        Ok(Network {
            config,
            arg_offsets,
            rows,
            weights: vec![INITIAL_WEIGHT; offset],
        })
    }

    pub fn config(&self) -> &NetworkConfig {
        &self.config
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub fn rows(&self) -> &[RowSpec] {
        &self.rows
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn parameter_total(&self) -> usize {
        self.weights.len()
    }

    pub fn hidden_row_id(&self, layer: usize, row: usize) -> usize {
        debug_assert!(layer < self.config.depth);
        layer * self.config.argument_count() + row
    }

    pub fn output_row_id(&self, output: usize) -> usize {
        self.config.depth * self.config.argument_count() + output
    }

    pub fn row_weights(&self, id: usize) -> &[f64] {
        let r = self.rows[id];
        &self.weights[r.offset..r.offset + r.len]
    }

    pub fn row_temperature(&self, id: usize) -> f64 {
        if self.rows[id].layer == self.config.depth {
            self.config.last_temperature
        } else {
            self.config.temperature
        }
    }

    pub fn set_temperatures(&mut self, hidden: f64, last: f64) {
        self.config.temperature = hidden;
        self.config.last_temperature = last;
    }

    /// Argument rows (within a layer) feeding image `node`.
    pub fn argument_rows(&self, node: usize) -> std::ops::Range<usize> {
        self.arg_offsets[node]..self.arg_offsets[node + 1]
    }

    /// Resolve source `index` of a row at `layer` (`depth` means output rows).
    pub fn source(&self, layer: usize, index: usize) -> Source {
        let u = self.config.source_width();
        let n = self.config.image_count();
        if self.config.skip_connections {
            if index < u {
                Source::Input(index)
            } else {
                let k = index - u;
                Source::Image {
                    layer: k / n,
                    node: k % n,
                }
            }
        } else if layer == 0 {
            Source::Input(index)
        } else {
            Source::Image {
                layer: layer - 1,
                node: index,
            }
        }
    }

    /// Softmax probabilities of every row, flat and aligned with [`Network::weights`].
    pub fn probabilities(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.weights.len()];
        for (id, r) in self.rows.iter().enumerate() {
            let p = softmax_row(self.row_weights(id), self.row_temperature(id));
            out[r.offset..r.offset + r.len].copy_from_slice(&p);
        }
        out
    }

    pub fn row_probabilities(&self, id: usize) -> Vec<f64> {
        softmax_row(self.row_weights(id), self.row_temperature(id))
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_text())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Network> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path)?;
        Network::from_text(&text).map_err(|e| match e {
            Error::Load { message, .. } => Error::load(path, message),
            other => Error::load(path, other.to_string()),
        })
    }

    /// Versioned text serialization: config echo, then one weight per line.
    pub fn to_text(&self) -> String {
        let c = &self.config;
        let mut s = String::new();
        let _ = writeln!(s, "{WEIGHTS_MAGIC} v{WEIGHTS_VERSION}");
        let _ = writeln!(s, "depth = {}", c.depth);
        let names: Vec<&str> = c.bases.iter().map(|b| b.name()).collect();
        let _ = writeln!(s, "bases = {}", names.join(" "));
        let _ = writeln!(s, "inputs = {}", c.input_count);
        let consts: Vec<String> = c.constants.iter().map(|v| format!("{v:?}")).collect();
        let _ = writeln!(s, "constants = {}", consts.join(" "));
        let _ = writeln!(s, "outputs = {}", c.output_count);
        let _ = writeln!(s, "temperature = {:?}", c.temperature);
        let _ = writeln!(s, "last_temperature = {:?}", c.last_temperature);
        let _ = writeln!(s, "skip_connections = {}", c.skip_connections);
        let _ = writeln!(s, "weights {}", self.weights.len());
        for w in &self.weights {
            let _ = writeln!(s, "{w:?}");
        }
        s.push_str("end\n");
        s
    }

    pub fn from_text(text: &str) -> Result<Network> {
        let bad = |m: String| Error::load("<weights>", m);
        let mut lines = text.lines();
        let header = lines.next().ok_or_else(|| bad("empty file".into()))?;
        let expected = format!("{WEIGHTS_MAGIC} v{WEIGHTS_VERSION}");
        if header.trim() != expected {
            return Err(bad(format!("unsupported header `{header}`, expected `{expected}`")));
        }
        let mut field = |key: &str| -> Result<String> {
            let line = lines.next().ok_or_else(|| bad(format!("truncated before `{key}`")))?;
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("malformed line `{line}`")))?;
            if k.trim() != key {
                return Err(bad(format!("expected `{key}`, found `{}`", k.trim())));
            }
            Ok(v.trim().to_string())
        };
        let num = |v: String, what: &str| -> Result<f64> {
            v.parse::<f64>().map_err(|_| bad(format!("bad number for {what}: `{v}`")))
        };
        let int = |v: String, what: &str| -> Result<usize> {
            v.parse::<usize>().map_err(|_| bad(format!("bad integer for {what}: `{v}`")))
        };
        let depth = int(field("depth")?, "depth")?;
        let bases = field("bases")?
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<Vec<Basis>>>()?;
        let input_count = int(field("inputs")?, "inputs")?;
        let constants = field("constants")?
            .split_whitespace()
            .map(|t| num(t.to_string(), "constant"))
            .collect::<Result<Vec<f64>>>()?;
        let output_count = int(field("outputs")?, "outputs")?;
        let temperature = num(field("temperature")?, "temperature")?;
        let last_temperature = num(field("last_temperature")?, "last_temperature")?;
        let skip_connections = match field("skip_connections")?.as_str() {
            "true" => true,
            "false" => false,
            other => return Err(bad(format!("bad boolean `{other}`"))),
        };
        let config = NetworkConfig {
            depth,
            bases,
            input_count,
            constants,
            output_count,
            temperature,
            last_temperature,
            skip_connections,
        };
        let mut net = Network::build(config)?;
        let count_line = lines.next().ok_or_else(|| bad("truncated before weights".into()))?;
        let count = count_line
            .strip_prefix("weights ")
            .and_then(|c| c.trim().parse::<usize>().ok())
            .ok_or_else(|| bad(format!("malformed weight count line `{count_line}`")))?;
        if count != net.weights.len() {
            return Err(bad(format!(
                "weight count {count} does not match architecture ({})",
                net.weights.len()
            )));
        }
        for (i, w) in net.weights.iter_mut().enumerate() {
            let line = lines
                .next()
                .ok_or_else(|| bad(format!("truncated after {i} of {count} weights")))?;
            *w = num(line.trim().to_string(), "weight")?;
        }
        match lines.next() {
            Some("end") => Ok(net),
            _ => Err(bad("missing end marker".into())),
        }
    }
}

const WEIGHTS_MAGIC: &str = "symreg-weights";
const WEIGHTS_VERSION: u32 = 1;

/// Temperature softmax with max subtraction; never `NaN` for finite input.
pub fn softmax_row(weights: &[f64], temperature: f64) -> Vec<f64> {
    let max = weights.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = weights.iter().map(|w| ((w - max) / temperature).exp()).collect();
    let total: f64 = out.iter().sum();
    for p in &mut out {
        *p /= total;
    }
    out
}

/// Weight count of the network [`Network::build`] produces for `config`.
pub fn parameter_count(config: &NetworkConfig) -> usize {
    let (u, n, m, v, l) = (
        config.source_width(),
        config.image_count(),
        config.argument_count(),
        config.output_count,
        config.depth,
    );
    if config.skip_connections {
        m * (0..l).map(|i| u + i * n).sum::<usize>() + v * (u + l * n)
    } else {
        m * (u + (l - 1) * n) + v * n
    }
}

/// The closed form `M·Σ_{i<L}(u + (i+1)N) + v(u + (L+1)N)`.
///
/// This counts one more block of `N` image sources per row than the skip
/// architecture built here exposes, so it exceeds [`parameter_count`] by
/// `(M·L + v)·N`.
pub fn shifted_parameter_count(config: &NetworkConfig) -> usize {
    let (u, n, m, v, l) = (
        config.source_width(),
        config.image_count(),
        config.argument_count(),
        config.output_count,
        config.depth,
    );
    m * (0..l).map(|i| u + (i + 1) * n).sum::<usize>() + v * (u + (l + 1) * n)
}
