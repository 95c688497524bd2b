//! Fitness kernel, score-function gradient, truncation selection and the
//! training loop.

use std::collections::{BTreeMap, VecDeque};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::data::{generate, Dataset, TargetSpec};
use crate::error::{Error, Result};
use crate::network::{Network, Source};
use crate::rng::{label, stream};
use crate::sampler::{evaluate, evaluate_recurrent, reachable_rows, sample_with, structure_key, Batch, SampledDag};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RankOrder {
    /// Best candidate keeps full weight, the i-th best is divided by i.
    #[default]
    Decreasing,
    /// Worst candidate keeps full weight.
    Increasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthWeighting {
    /// A depth-d candidate contributes `d·log q`.
    #[default]
    Scaled,
    /// Every depth contributes `log q`.
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BatchPolicy {
    /// Fresh points every epoch (a random subset for loaded datasets).
    #[default]
    Resample,
    /// One batch drawn up front and reused.
    Fixed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    /// R, DAGs sampled per epoch.
    pub sample_count: usize,
    /// λ, candidates reinforced per output.
    pub truncation: usize,
    /// σ² of the fitness kernel.
    pub variance: f64,
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    pub patience: usize,
    pub recurrence_depth: usize,
    pub rank_reweight: bool,
    pub rank_order: RankOrder,
    pub depth_weighting: DepthWeighting,
    pub batch_size: usize,
    pub batch_policy: BatchPolicy,
    /// Give zero fitness to candidates that ignore every input.
    pub reject_input_free: bool,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            sample_count: 100,
            truncation: 5,
            variance: 0.01,
            learning_rate: 0.005,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_epochs: 2000,
            patience: 30,
            recurrence_depth: 1,
            rank_reweight: false,
            rank_order: RankOrder::Decreasing,
            depth_weighting: DepthWeighting::Scaled,
            batch_size: 1000,
            batch_policy: BatchPolicy::Resample,
            reject_input_free: false,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let pos = |v: usize, name: &str| {
            if v == 0 {
                Err(Error::config(format!("{name} must be positive")))
            } else {
                Ok(())
            }
        };
        pos(self.sample_count, "sample_count")?;
        pos(self.truncation, "truncation")?;
        pos(self.max_epochs, "max_epochs")?;
        pos(self.patience, "patience")?;
        pos(self.recurrence_depth, "recurrence_depth")?;
        pos(self.batch_size, "batch_size")?;
        if self.truncation > self.sample_count * self.recurrence_depth {
            return Err(Error::config(format!(
                "truncation {} exceeds the {} candidates per epoch",
                self.truncation,
                self.sample_count * self.recurrence_depth
            )));
        }
        if !(self.variance > 0.0 && self.variance.is_finite()) {
            return Err(Error::config("variance must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::config("learning_rate must be positive"));
        }
        if !(0.0..1.0).contains(&self.beta1) || !(0.0..1.0).contains(&self.beta2) || self.epsilon <= 0.0 {
            return Err(Error::config("adam parameters need 0 <= beta < 1 and epsilon > 0"));
        }
        Ok(())
    }
}

/// Sum over the batch of the normalized Gaussian similarity; sentinel
/// predictions contribute nothing.
pub fn fitness(outputs: &[f64], targets: &[f64], variance: f64) -> f64 {
    let norm = (2.0 * std::f64::consts::PI * variance).sqrt().recip();
    let scale = -0.5 / variance;
    outputs
        .iter()
        .zip(targets)
        .filter(|(f, _)| f.is_finite())
        .map(|(f, y)| {
            let d = f - y;
            norm * (scale * d * d).exp()
        })
        .sum()
}

/// Add `coeff·∇(−log q_outputs)` into `grad`, where only rows reachable from
/// `outputs` take part.
pub fn accumulate_gradient(net: &Network, probs: &[f64], dag: &SampledDag, outputs: &[usize], coeff: f64, grad: &mut [f64]) {
    if coeff == 0.0 {
        return;
    }
    for id in reachable_rows(net, dag, outputs) {
        let spec = net.rows()[id];
        let scale = coeff / net.row_temperature(id);
        let j = dag.choice(id);
        for i in 0..spec.len {
            let delta = if i == j { 1.0 } else { 0.0 };
            grad[spec.offset + i] -= scale * (delta - probs[spec.offset + i]);
        }
    }
}

/// `−K·∇_W log q_output(dag|W)`.
pub fn loss_gradient(net: &Network, dag: &SampledDag, k: f64, output: usize) -> Vec<f64> {
    let mut grad = vec![0.0; net.parameter_total()];
    accumulate_gradient(net, &net.probabilities(), dag, &[output], k, &mut grad);
    grad
}

/// The λ best `(candidate, fitness)` pairs of one output, best first, ties to
/// the lower candidate index.
pub fn select_top(fitness: &[f64], lambda: usize) -> Result<Vec<(usize, f64)>> {
    if lambda > fitness.len() {
        return Err(Error::config(format!(
            "truncation {lambda} exceeds {} candidates",
            fitness.len()
        )));
    }
    let mut idx: Vec<usize> = (0..fitness.len()).collect();
    idx.sort_by(|&a, &b| fitness[b].total_cmp(&fitness[a]).then(a.cmp(&b)));
    Ok(idx[..lambda].iter().map(|&i| (i, fitness[i])).collect())
}

/// Divide the i-th ranked fitness by i. The result is in ranked order.
pub fn rank_reweight(selected: &[f64], order: RankOrder) -> Vec<f64> {
    let mut sorted = selected.to_vec();
    match order {
        RankOrder::Decreasing => sorted.sort_by(|a, b| b.total_cmp(a)),
        RankOrder::Increasing => sorted.sort_by(|a, b| a.total_cmp(b)),
    }
    sorted.iter().enumerate().map(|(i, k)| k / (i + 1) as f64).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub step: u64,
}

impl AdamState {
    pub fn new(len: usize) -> Self {
        AdamState {
            m: vec![0.0; len],
            v: vec![0.0; len],
            step: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct AdamParams {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl From<&TrainConfig> for AdamParams {
    fn from(c: &TrainConfig) -> Self {
        AdamParams {
            learning_rate: c.learning_rate,
            beta1: c.beta1,
            beta2: c.beta2,
            epsilon: c.epsilon,
        }
    }
}

/// One bias-corrected Adam descent step on `weights`.
pub fn adam_step(weights: &mut [f64], grad: &[f64], state: &mut AdamState, p: AdamParams) {
    assert_eq!(weights.len(), grad.len(), "gradient shape");
    assert_eq!(weights.len(), state.m.len(), "moment shape");
    state.step += 1;
    let t = state.step as i32;
    let c1 = 1.0 - p.beta1.powi(t);
    let c2 = 1.0 - p.beta2.powi(t);
    for i in 0..weights.len() {
        let g = grad[i];
        state.m[i] = p.beta1 * state.m[i] + (1.0 - p.beta1) * g;
        state.v[i] = p.beta2 * state.v[i] + (1.0 - p.beta2) * g * g;
        let m_hat = state.m[i] / c1;
        let v_hat = state.v[i] / c2;
        weights[i] -= p.learning_rate * m_hat / (v_hat.sqrt() + p.epsilon);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Converged,
    MaxEpochsExhausted,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Converged => "converged",
            Verdict::MaxEpochsExhausted => "max_epochs_exhausted",
        }
    }
}

#[derive(Debug, Clone)]
pub struct TrainRun {
    pub network: Network,
    pub adam: AdamState,
    /// Raw top-λ fitness per output for the most recent epochs.
    pub history: VecDeque<Vec<Vec<f64>>>,
    pub epoch: usize,
    /// Consecutive epochs satisfying the stop criterion.
    pub streak: usize,
    pub verdict: Option<Verdict>,
    pub converged_epoch: Option<usize>,
}

impl TrainRun {
    pub fn new(network: Network) -> Self {
        let adam = AdamState::new(network.parameter_total());
        TrainRun {
            network,
            adam,
            history: VecDeque::new(),
            epoch: 0,
            streak: 0,
            verdict: None,
            converged_epoch: None,
        }
    }

    /// Epochs run at termination.
    pub fn t_c(&self) -> usize {
        self.epoch
    }
}

#[derive(Debug, Clone)]
pub struct EpochStats {
    pub epoch: usize,
    /// Best raw fitness per output.
    pub best: Vec<f64>,
    /// Mean raw fitness of the selected candidates per output.
    pub mean_selected: Vec<f64>,
    /// Recurrence depth (1-based) of the best candidate per output.
    pub best_depth: Vec<usize>,
    pub streak: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Candidate {
    sample: usize,
    depth: usize,
}

fn uses_input(net: &Network, dag: &SampledDag) -> bool {
    let raw = net.config().input_count;
    reachable_rows(net, dag, &(0..net.config().output_count).collect::<Vec<_>>())
        .into_iter()
        .any(|id| matches!(net.source(net.rows()[id].layer, dag.choice(id)), Source::Input(k) if k < raw))
}

/// Fitness per depth per output for one DAG.
fn score(net: &Network, dag: &SampledDag, batch: &Batch, targets: &[Vec<f64>], cfg: &TrainConfig) -> Vec<Vec<f64>> {
    if cfg.reject_input_free && !uses_input(net, dag) {
        return vec![vec![0.0; targets.len()]; cfg.recurrence_depth];
    }
    let per_depth = if cfg.recurrence_depth == 1 {
        vec![evaluate(net, dag, batch)]
    } else {
        evaluate_recurrent(net, dag, batch, cfg.recurrence_depth).expect("recurrent shape checked at validation")
    };
    per_depth
        .iter()
        .map(|outs| {
            outs.iter()
                .zip(targets)
                .map(|(f, y)| fitness(f, y, cfg.variance))
                .collect()
        })
        .collect()
}

/// One epoch on a prepared batch: sample, score, select, update.
pub fn train_epoch(run: &mut TrainRun, batch: &Batch, targets: &[Vec<f64>], cfg: &TrainConfig) -> Result<EpochStats> {
    let net = &run.network;
    let v = net.config().output_count;
    if targets.len() != v {
        return Err(Error::Contract(format!("{} target columns for {v} outputs", targets.len())));
    }
    let probs = net.probabilities();
    let epoch = run.epoch;
    let dags: Vec<SampledDag> = (0..cfg.sample_count)
        .into_par_iter()
        .map(|i| sample_with(net, &probs, &mut stream(cfg.seed, &[label::SAMPLE, epoch as u64, i as u64])))
        .collect();

    // Identical reachable structure gives identical outputs: score each once.
    let mut unique: BTreeMap<Vec<u32>, usize> = BTreeMap::new();
    let mut slot = Vec::with_capacity(dags.len());
    let mut reps = Vec::new();
    for (i, dag) in dags.iter().enumerate() {
        let next = reps.len();
        let s = *unique.entry(structure_key(net, dag)).or_insert(next);
        if s == next {
            reps.push(i);
        }
        slot.push(s);
    }
    let scores: Vec<Vec<Vec<f64>>> = reps
        .par_iter()
        .map(|&i| score(net, &dags[i], batch, targets, cfg))
        .collect();

    let depth = cfg.recurrence_depth;
    let candidates: Vec<Candidate> = (0..cfg.sample_count)
        .flat_map(|sample| (0..depth).map(move |d| Candidate { sample, depth: d + 1 }))
        .collect();

    let mut grad = vec![0.0; net.parameter_total()];
    let mut top = Vec::with_capacity(v);
    let mut stats = EpochStats {
        epoch: epoch + 1,
        best: Vec::with_capacity(v),
        mean_selected: Vec::with_capacity(v),
        best_depth: Vec::with_capacity(v),
        streak: 0,
    };
    for o in 0..v {
        let column: Vec<f64> = candidates
            .iter()
            .map(|c| scores[slot[c.sample]][c.depth - 1][o])
            .collect();
        let selected = select_top(&column, cfg.truncation)?;
        let raw: Vec<f64> = selected.iter().map(|s| s.1).collect();
        let weights = if cfg.rank_reweight {
            rank_reweight(&raw, cfg.rank_order)
        } else {
            raw.clone()
        };
        // `selected` is already sorted best-first; increasing order reverses it.
        let order: Vec<usize> = match (cfg.rank_reweight, cfg.rank_order) {
            (true, RankOrder::Increasing) => (0..selected.len()).rev().collect(),
            _ => (0..selected.len()).collect(),
        };
        let mut contributions: Vec<(Candidate, f64)> = order
            .iter()
            .zip(&weights)
            .map(|(&rank, &w)| (candidates[selected[rank].0], w))
            .collect();
        contributions.sort_by(|a, b| a.0.cmp(&b.0));
        for (c, w) in contributions {
            let mult = match cfg.depth_weighting {
                DepthWeighting::Scaled => c.depth as f64,
                DepthWeighting::Constant => 1.0,
            };
            accumulate_gradient(net, &probs, &dags[c.sample], &[o], w * mult, &mut grad);
        }
        stats.best.push(raw[0]);
        stats.mean_selected.push(raw.iter().sum::<f64>() / raw.len() as f64);
        stats.best_depth.push(candidates[selected[0].0].depth);
        top.push(raw);
    }

    adam_step(run.network.weights_mut(), &grad, &mut run.adam, AdamParams::from(cfg));
    run.epoch += 1;
    run.streak = next_streak(run.streak, run.history.back(), &top);
    run.history.push_back(top);
    while run.history.len() > cfg.patience {
        run.history.pop_front();
    }
    stats.streak = run.streak;
    Ok(stats)
}

/// Relative tolerance for comparing top-λ fitness across epochs.
pub const CROSS_EPOCH_RTOL: f64 = 1e-12;

/// Common top-λ value per output if every output's selection is uniform
/// (exact equality) and positive.
fn common_values(top: &[Vec<f64>]) -> Option<Vec<f64>> {
    top.iter()
        .map(|sel| {
            let first = sel[0];
            (first > 0.0 && sel.iter().all(|&k| k == first)).then_some(first)
        })
        .collect()
}

fn next_streak(streak: usize, previous: Option<&Vec<Vec<f64>>>, top: &[Vec<f64>]) -> usize {
    let Some(now) = common_values(top) else {
        return 0;
    };
    let continues = streak > 0
        && previous.and_then(|p| common_values(p)).is_some_and(|prev| {
            prev.iter()
                .zip(&now)
                .all(|(a, b)| (a - b).abs() <= CROSS_EPOCH_RTOL * a.abs().max(b.abs()))
        });
    if continues {
        streak + 1
    } else {
        1
    }
}

/// Where training batches come from.
#[derive(Debug, Clone, Copy)]
pub enum TrainingData<'a> {
    Target(&'a TargetSpec),
    Dataset(&'a Dataset),
}

fn draw_batch(net: &Network, data: TrainingData<'_>, cfg: &TrainConfig, epoch: usize) -> Result<(Batch, Vec<Vec<f64>>)> {
    let key = match cfg.batch_policy {
        BatchPolicy::Resample => epoch as u64,
        BatchPolicy::Fixed => 0,
    };
    let mut rng = stream(cfg.seed, &[label::BATCH, key]);
    let d = match data {
        TrainingData::Target(spec) => generate(spec, cfg.batch_size, &mut rng)?,
        TrainingData::Dataset(d) if cfg.batch_policy == BatchPolicy::Fixed || d.len() <= cfg.batch_size => d.clone(),
        TrainingData::Dataset(d) => {
            let idx = rand::seq::index::sample(&mut rng, d.len(), cfg.batch_size).into_vec();
            d.select(&idx)
        }
    };
    Ok((d.batch(net)?, d.targets))
}

/// Train until the stop criterion holds or `max_epochs` pass. `observer` sees
/// every epoch together with the updated network.
pub fn train(
    network: Network,
    data: TrainingData<'_>,
    cfg: &TrainConfig,
    mut observer: impl FnMut(&EpochStats, &Network),
) -> Result<TrainRun> {
    cfg.validate()?;
    let nc = network.config();
    if cfg.recurrence_depth > 1 && nc.output_count != nc.input_count {
        return Err(Error::config("recurrence needs as many outputs as inputs"));
    }
    if cfg.recurrence_depth > 1 && nc.output_count != 1 {
        return Err(Error::config("multi-output recurrent targets are not supported"));
    }
    let mut run = TrainRun::new(network);
    let mut fixed = None;
    while run.epoch < cfg.max_epochs {
        let (batch, targets) = match (&fixed, cfg.batch_policy) {
            (Some(b), BatchPolicy::Fixed) => Clone::clone(b),
            _ => {
                let b = draw_batch(&run.network, data, cfg, run.epoch)?;
                if cfg.batch_policy == BatchPolicy::Fixed {
                    fixed = Some(b.clone());
                }
                b
            }
        };
        let stats = train_epoch(&mut run, &batch, &targets, cfg)?;
        observer(&stats, &run.network);
        if run.streak >= cfg.patience {
            run.verdict = Some(Verdict::Converged);
            run.converged_epoch = Some(run.epoch);
            return Ok(run);
        }
    }
    run.verdict = Some(Verdict::MaxEpochsExhausted);
    Ok(run)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bases::Basis;
    use crate::network::NetworkConfig;
    use crate::sampler::log_probability;

    fn toy(u: usize) -> Network {
        Network::build(NetworkConfig {
            depth: 1,
            bases: vec![Basis::Sin],
            input_count: u,
            constants: vec![],
            output_count: 1,
            temperature: 1.0,
            last_temperature: 1.0,
            skip_connections: true,
        })
        .unwrap()
    }

    #[test]
    fn fitness_examples() {
        let c = (2.0 * std::f64::consts::PI).sqrt().recip();
        assert!((fitness(&[1.0, 2.0], &[1.0, 2.0], 1.0) - 2.0 * c).abs() < 1e-15);
        assert!((fitness(&[1.0], &[2.0], 1.0) - c * (-0.5f64).exp()).abs() < 1e-15);
        assert!((fitness(&[1.0], &[2.0], 1.0) - 0.24197).abs() < 1e-5);
        assert_eq!(fitness(&[f64::NAN, f64::NAN], &[1.0, 2.0], 1.0), 0.0);
    }

    #[test]
    fn gradient_single_row() {
        // chain: one SIN arg row over 2 sources plus an output row
        let net = toy(2);
        let dag = SampledDag::from_choices(&net, vec![0, 2]).unwrap();
        let g = loss_gradient(&net, &dag, 1.0, 0);
        assert_eq!(&g[0..2], &[-0.5, 0.5]);
        assert!(loss_gradient(&net, &dag, 0.0, 0).iter().all(|&x| x == 0.0));
        // output reads x0 directly: the SIN row is unreachable
        let dag = SampledDag::from_choices(&net, vec![1, 0]).unwrap();
        let g = loss_gradient(&net, &dag, 1.0, 0);
        assert_eq!(&g[0..2], &[0.0, 0.0]);
    }

    #[test]
    fn selection_rules() {
        let s = select_top(&[0.1, 0.9, 0.5], 2).unwrap();
        assert_eq!(s.iter().map(|x| x.0).collect::<Vec<_>>(), vec![1, 2]);
        let s = select_top(&[1.0; 5], 3).unwrap();
        assert_eq!(s.iter().map(|x| x.0).collect::<Vec<_>>(), vec![0, 1, 2]);
        assert!(select_top(&[1.0], 2).is_err());
    }

    #[test]
    fn rank_reweight_examples() {
        let r = rank_reweight(&[5.0, 3.0, 1.0], RankOrder::Decreasing);
        assert_eq!(r[..2], [5.0, 1.5]);
        assert!((r[2] - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(rank_reweight(&[4.0], RankOrder::Decreasing), vec![4.0]);
        let r = rank_reweight(&[2.0, 2.0, 2.0], RankOrder::Decreasing);
        assert!((r[2] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(rank_reweight(&[5.0, 3.0, 1.0], RankOrder::Increasing)[..2], [1.0, 1.5]);
    }

    #[test]
    fn adam_examples() {
        let p = AdamParams {
            learning_rate: 0.1,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        };
        let mut w = vec![1.0, 1.0];
        let mut s = AdamState::new(2);
        adam_step(&mut w, &[0.0, 0.0], &mut s, p);
        assert_eq!(w, vec![1.0, 1.0]);
        assert_eq!(s.step, 1);
        let mut s = AdamState::new(2);
        adam_step(&mut w, &[3.0, -0.01], &mut s, p);
        assert!((w[0] - 0.9).abs() < 1e-6 && (w[1] - 1.1).abs() < 1e-4);
        let mut prev = w[0];
        for _ in 0..10 {
            adam_step(&mut w, &[3.0, -0.01], &mut s, p);
            assert!(w[0] < prev);
            prev = w[0];
        }
    }

    #[test]
    fn positive_step_raises_probability() {
        let mut net = toy(3);
        let dag = SampledDag::from_choices(&net, vec![2, 3]).unwrap();
        let before = log_probability(&net, &dag, None);
        let g = loss_gradient(&net, &dag, 2.0, 0);
        let mut s = AdamState::new(g.len());
        adam_step(net.weights_mut(), &g, &mut s, AdamParams::from(&TrainConfig::default()));
        assert!(log_probability(&net, &dag, None) > before);
    }

    #[test]
    fn streak_rules() {
        let a = vec![vec![2.0, 2.0]];
        assert_eq!(next_streak(0, None, &a), 1);
        assert_eq!(next_streak(1, Some(&a), &a), 2);
        assert_eq!(next_streak(3, Some(&vec![vec![1.0, 1.0]]), &a), 1);
        assert_eq!(next_streak(3, Some(&a), &vec![vec![2.0, 1.9]]), 0);
        assert_eq!(next_streak(3, Some(&a), &vec![vec![0.0, 0.0]]), 0);
    }

    #[test]
    fn degenerate_data_converges_quickly() {
        // every point identical; the route to x0 fits exactly
        let net = toy(1);
        let d = Dataset::new(vec![vec![0.3; 20]], vec![vec![0.3; 20]]).unwrap();
        let cfg = TrainConfig {
            sample_count: 20,
            truncation: 2,
            learning_rate: 0.1,
            max_epochs: 500,
            patience: 10,
            ..TrainConfig::default()
        };
        let run = train(net, TrainingData::Dataset(&d), &cfg, |_, _| {}).unwrap();
        assert_eq!(run.verdict, Some(Verdict::Converged));
        assert!(run.t_c() < 100, "took {}", run.t_c());
    }

    #[test]
    fn training_is_deterministic() {
        let d = Dataset::new(vec![vec![0.1, 0.5, 0.9]], vec![vec![0.1f64.sin(), 0.5f64.sin(), 0.9f64.sin()]]).unwrap();
        let cfg = TrainConfig {
            sample_count: 10,
            truncation: 2,
            max_epochs: 20,
            ..TrainConfig::default()
        };
        let a = train(toy(1), TrainingData::Dataset(&d), &cfg, |_, _| {}).unwrap();
        let b = train(toy(1), TrainingData::Dataset(&d), &cfg, |_, _| {}).unwrap();
        assert_eq!(a.network.weights(), b.network.weights());
    }
}
