//! Experiment configs, multi-trial runs and reports.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bases::Basis;
use crate::data::{builtin_target, generate, load_idx, split, AccuracyRule, Dataset, Range, TargetKind, TargetSpec};
use crate::error::{Error, Result};
use crate::expression::{dag_to_expression, simplify, Expression};
use crate::network::{Network, NetworkConfig};
use crate::rng::{derive_seed, label, stream};
use crate::sampler::{evaluate_recurrent, most_likely_dag, SampledDag};
use crate::trainer::{fitness, train, TrainConfig, TrainingData, Verdict};

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TargetSection {
    /// Builtin benchmark name; the other fields then only override ranges.
    pub name: Option<String>,
    /// explicit | implicit | recurrent | classification
    pub kind: Option<String>,
    pub expressions: Vec<String>,
    pub step: Option<String>,
    pub depth: Option<usize>,
    pub solve: Option<String>,
    pub value: Option<f64>,
    pub ranges: Option<Vec<Range>>,
    pub classes: Vec<u8>,
    /// Directory holding the IDX training files; falls back to `$MNIST_DIR`.
    pub data_dir: Option<PathBuf>,
    pub images: Option<String>,
    pub labels: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    pub depth: usize,
    pub bases: Vec<Basis>,
    pub constants: Vec<f64>,
    pub temperature: f64,
    pub last_temperature: f64,
    pub skip_connections: bool,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            depth: 1,
            bases: vec![],
            constants: vec![],
            temperature: 1.0,
            last_temperature: 1.0,
            skip_connections: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentSection {
    pub trials: usize,
    pub seed: u64,
    pub out: Option<PathBuf>,
    /// Relative tolerance of the equivalence check (0 for boolean targets).
    pub tolerance: f64,
    pub check_points: usize,
    pub parallel_trials: bool,
    pub test_fraction: f64,
    pub accuracy_rule: AccuracyRule,
    /// Only run under `bench --extended`.
    pub extended: bool,
    /// Reference values echoed in bench summaries.
    pub reference_eta: Option<String>,
    pub reference_tc: Option<f64>,
}

impl Default for ExperimentSection {
    fn default() -> Self {
        ExperimentSection {
            trials: 10,
            seed: 0,
            out: None,
            tolerance: 1e-6,
            check_points: 1000,
            parallel_trials: false,
            test_fraction: 0.1,
            accuracy_rule: AccuracyRule::default(),
            extended: false,
            reference_eta: None,
            reference_tc: None,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub target: TargetSection,
    pub network: NetworkSection,
    pub training: TrainConfig,
    pub experiment: ExperimentSection,
    /// Set from the file stem when loaded from disk.
    #[serde(skip)]
    pub name: String,
}

/// Command-line overrides applied on top of a config file.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub trials: Option<usize>,
    pub out: Option<PathBuf>,
    pub max_epochs: Option<usize>,
    pub parallel_trials: bool,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<ExperimentConfig> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<ExperimentConfig> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::load(path, e.to_string()))?;
        let mut cfg = ExperimentConfig::from_toml(&text)?;
        cfg.name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.experiment.seed = s;
        }
        if let Some(t) = o.trials {
            self.experiment.trials = t;
        }
        if let Some(p) = &o.out {
            self.experiment.out = Some(p.clone());
        }
        if let Some(m) = o.max_epochs {
            self.training.max_epochs = m;
        }
        if o.parallel_trials {
            self.experiment.parallel_trials = true;
        }
    }

    pub fn target_spec(&self) -> Result<TargetSpec> {
        let t = &self.target;
        let parse = |s: &Option<String>, what: &str| -> Result<Expression> {
            Expression::parse(s.as_deref().ok_or_else(|| Error::config(format!("target needs `{what}`")))?)
        };
        let mut spec = match (&t.name, t.kind.as_deref()) {
            (Some(name), None) => builtin_target(name)?,
            (None, Some(kind)) => {
                let kind = match kind {
                    "explicit" => TargetKind::Explicit {
                        outputs: t.expressions.iter().map(|s| Expression::parse(s)).collect::<Result<_>>()?,
                    },
                    "implicit" => TargetKind::Implicit {
                        solve: parse(&t.solve, "solve")?,
                        value: t.value.unwrap_or(1.0),
                    },
                    "recurrent" => TargetKind::Recurrent {
                        step: parse(&t.step, "step")?,
                        depth: t.depth.unwrap_or(1),
                    },
                    "classification" => TargetKind::Classification { classes: t.classes.clone() },
                    other => return Err(Error::config(format!("unknown target kind `{other}`"))),
                };
                TargetSpec {
                    name: self.name.clone(),
                    kind,
                    ranges: vec![],
                }
            }
            (Some(_), Some(_)) => return Err(Error::config("target takes either `name` or `kind`, not both")),
            (None, None) => return Err(Error::config("target needs `name` or `kind`")),
        };
        if let Some(r) = &t.ranges {
            spec.ranges = r.clone();
        }
        spec.validate()?;
        Ok(spec)
    }

    fn network_config(&self, spec: &TargetSpec, dataset: Option<&Dataset>) -> NetworkConfig {
        let n = &self.network;
        NetworkConfig {
            depth: n.depth,
            bases: n.bases.clone(),
            input_count: dataset.map_or(spec.input_count(), Dataset::input_count),
            constants: n.constants.clone(),
            output_count: spec.output_count(),
            temperature: n.temperature,
            last_temperature: n.last_temperature,
            skip_connections: n.skip_connections,
        }
    }

    /// Full validation, without touching data files.
    pub fn validate(&self) -> Result<TargetSpec> {
        let spec = self.target_spec()?;
        if self.experiment.trials == 0 {
            return Err(Error::config("trials must be at least 1"));
        }
        if self.experiment.check_points < 100 {
            return Err(Error::config("check_points must be at least 100"));
        }
        self.training.validate()?;
        let mut nc = self.network_config(&spec, None);
        if matches!(spec.kind, TargetKind::Classification { .. }) {
            nc.input_count = 1;
        }
        nc.validate()?;
        let recurrent = matches!(spec.kind, TargetKind::Recurrent { .. });
        if self.training.recurrence_depth > 1 && !recurrent {
            return Err(Error::config("recurrence_depth > 1 needs a recurrent target"));
        }
        if recurrent && nc.output_count != nc.input_count {
            return Err(Error::config("recurrent target needs as many outputs as inputs"));
        }
        Ok(spec)
    }

    fn idx_paths(&self) -> Result<(PathBuf, PathBuf)> {
        let t = &self.target;
        let dir = t
            .data_dir
            .clone()
            .or_else(|| std::env::var_os("MNIST_DIR").map(PathBuf::from))
            .ok_or_else(|| Error::config("classification target needs `data_dir` or $MNIST_DIR"))?;
        let images = dir.join(t.images.as_deref().unwrap_or("train-images-idx3-ubyte"));
        let labels = dir.join(t.labels.as_deref().unwrap_or("train-labels-idx1-ubyte"));
        Ok((images, labels))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub trial: usize,
    pub seed: u64,
    pub verdict: Verdict,
    #[serde(rename = "T_c")]
    pub t_c: usize,
    pub expressions: Vec<String>,
    /// Recurrence depth picked for the extracted function.
    pub depth: Option<usize>,
    pub equivalent: Option<bool>,
    pub constant_only: bool,
    pub accuracy: Option<f64>,
}

impl TrialRecord {
    pub fn success(&self) -> bool {
        self.verdict == Verdict::Converged && self.equivalent != Some(false)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub eta: f64,
    #[serde(rename = "median_Tc")]
    pub median_tc: Option<f64>,
    pub median_accuracy: Option<f64>,
    pub trials: Vec<TrialRecord>,
}

impl Report {
    pub fn successes(&self) -> usize {
        self.trials.iter().filter(|t| t.success()).count()
    }

    pub fn eta_fraction(&self) -> String {
        format!("{}/{}", self.successes(), self.trials.len())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("trial,seed,verdict,T_c,expression,equivalent\n");
        for t in &self.trials {
            let eq = t.equivalent.map_or(String::new(), |b| b.to_string());
            let _ = writeln!(
                s,
                "{},{},{},{},{},{}",
                t.trial,
                t.seed,
                t.verdict.as_str(),
                t.t_c,
                csv_quote(&t.expressions.join("; ")),
                eq
            );
        }
        s
    }

    /// JSON summary with a wall-clock timestamp in its own field.
    pub fn to_json(&self) -> String {
        let timestamp = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map_or(0, |d| d.as_secs());
        let mut v = serde_json::to_value(self).expect("report serializes");
        v["timestamp"] = timestamp.into();
        serde_json::to_string_pretty(&v).expect("report serializes")
    }
}

fn csv_quote(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    Some(if n % 2 == 1 { v[n / 2] } else { 0.5 * (v[n / 2 - 1] + v[n / 2]) })
}

/// Simplified most-likely expression per output.
pub fn extract_expressions(net: &Network) -> Vec<Expression> {
    let dag = most_likely_dag(net);
    (0..net.config().output_count)
        .map(|o| simplify(&dag_to_expression(net, &dag, o)))
        .collect()
}

/// Load a weights file and render its most-likely expressions.
pub fn extract(path: impl AsRef<Path>) -> Result<Vec<String>> {
    let net = Network::load(path)?;
    Ok(extract_expressions(&net).iter().map(ToString::to_string).collect())
}

/// Compose a single-output expression with itself `depth` times.
fn iterate(e: &Expression, depth: usize, x: &[f64]) -> f64 {
    let mut v = x[0];
    for _ in 0..depth {
        v = e.eval(&[v]);
        if !v.is_finite() {
            return v;
        }
    }
    v
}

/// Depth whose recurrence of `dag` fits the check data best, ties to the
/// shallower depth.
fn best_depth(net: &Network, dag: &SampledDag, check: &Dataset, max_depth: usize, variance: f64) -> Result<usize> {
    let per_depth = evaluate_recurrent(net, dag, &check.batch(net)?, max_depth)?;
    let mut best = (1, f64::NEG_INFINITY);
    for (d, outs) in per_depth.iter().enumerate() {
        let k = fitness(&outs[0], &check.targets[0], variance);
        if k > best.1 {
            best = (d + 1, k);
        }
    }
    Ok(best.0)
}

struct Prepared {
    spec: TargetSpec,
    train: Option<Dataset>,
    test: Option<Dataset>,
}

fn prepare(cfg: &ExperimentConfig) -> Result<Prepared> {
    let spec = cfg.validate()?;
    if !matches!(spec.kind, TargetKind::Classification { .. }) {
        return Ok(Prepared {
            spec,
            train: None,
            test: None,
        });
    }
    let TargetKind::Classification { classes } = &spec.kind else { unreachable!() };
    let (images, labels) = cfg.idx_paths()?;
    let all = load_idx(images, labels, classes)?;
    let (train, test) = split(&all, cfg.experiment.test_fraction, &mut stream(cfg.experiment.seed, &[label::SPLIT]))?;
    Ok(Prepared {
        spec,
        train: Some(train),
        test: Some(test),
    })
}

/// Output of one trial besides its record.
pub struct TrialArtifacts {
    pub weights: String,
    pub log: String,
}

fn run_trial(cfg: &ExperimentConfig, p: &Prepared, trial: usize) -> Result<(TrialRecord, TrialArtifacts)> {
    let seed = derive_seed(cfg.experiment.seed, &[label::TRIAL, trial as u64]);
    let mut tc = cfg.training.clone();
    tc.seed = seed;
    let net = Network::build(cfg.network_config(&p.spec, p.train.as_ref()))?;
    let v = net.config().output_count;

    let mut log = String::from("epoch");
    for o in 0..v {
        let _ = write!(log, ",best_{o},mean_selected_{o}");
    }
    log.push_str(",streak,expression\n");
    let data = match &p.train {
        Some(d) => TrainingData::Dataset(d),
        None => TrainingData::Target(&p.spec),
    };
    let run = train(net, data, &tc, |s, net| {
        let _ = write!(log, "{}", s.epoch);
        for (b, m) in s.best.iter().zip(&s.mean_selected) {
            let _ = write!(log, ",{b},{m}");
        }
        let expr: Vec<String> = extract_expressions(net).iter().map(ToString::to_string).collect();
        let _ = writeln!(log, ",{},{}", s.streak, csv_quote(&expr.join("; ")));
    })?;

    let net = &run.network;
    let exprs = extract_expressions(net);
    let dag = most_likely_dag(net);
    let mut record = TrialRecord {
        trial,
        seed,
        verdict: run.verdict.unwrap_or(Verdict::MaxEpochsExhausted),
        t_c: run.t_c(),
        expressions: exprs.iter().map(ToString::to_string).collect(),
        depth: None,
        equivalent: None,
        constant_only: exprs.iter().all(Expression::is_constant_only),
        accuracy: None,
    };
    let tol = if p.spec.is_boolean() { 0.0 } else { cfg.experiment.tolerance };
    let n = cfg.experiment.check_points;
    match &p.spec.kind {
        TargetKind::Classification { .. } => {
            let test = p.test.as_ref().expect("classification data loaded");
            record.accuracy = Some(crate::data::classification_accuracy(net, &dag, test, cfg.experiment.accuracy_rule)?);
        }
        TargetKind::Recurrent { .. } => {
            let check = generate(&p.spec, n, &mut stream(seed, &[label::CHECK]))?;
            let d = best_depth(net, &dag, &check, tc.recurrence_depth, tc.variance)?;
            let f = &exprs[0];
            record.depth = Some(d);
            record.equivalent = Some(p.spec.equivalent(0, &|x| iterate(f, d, x), tol, n)?);
        }
        TargetKind::Implicit { .. } => {
            // A constant answer satisfies the constraint trivially and does not count.
            let ok = !record.constant_only && p.spec.equivalent(0, &|x| exprs[0].eval(x), tol, n)?;
            record.equivalent = Some(ok);
        }
        TargetKind::Explicit { .. } => {
            let mut ok = true;
            for (o, e) in exprs.iter().enumerate() {
                ok &= p.spec.equivalent(o, &|x| e.eval(x), tol, n)?;
            }
            record.equivalent = Some(ok);
        }
    }
    Ok((
        record,
        TrialArtifacts {
            weights: run.network.to_text(),
            log,
        },
    ))
}

/// Run every trial; writes artifacts when `experiment.out` is set.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let p = prepare(cfg)?;
    let trials: Vec<usize> = (0..cfg.experiment.trials).collect();
    let results: Vec<(TrialRecord, TrialArtifacts)> = if cfg.experiment.parallel_trials {
        trials.par_iter().map(|&t| run_trial(cfg, &p, t)).collect::<Result<_>>()?
    } else {
        trials.iter().map(|&t| run_trial(cfg, &p, t)).collect::<Result<_>>()?
    };
    let records: Vec<TrialRecord> = results.iter().map(|r| r.0.clone()).collect();
    let report = Report {
        name: if cfg.name.is_empty() { p.spec.name.clone() } else { cfg.name.clone() },
        eta: records.iter().filter(|t| t.success()).count() as f64 / records.len() as f64,
        median_tc: median(
            records
                .iter()
                .filter(|t| t.verdict == Verdict::Converged)
                .map(|t| t.t_c as f64)
                .collect(),
        ),
        median_accuracy: median(records.iter().filter_map(|t| t.accuracy).collect()),
        trials: records,
    };
    if let Some(out) = &cfg.experiment.out {
        write_artifacts(out, &report, &results)?;
    }
    Ok(report)
}

fn write_artifacts(out: &Path, report: &Report, results: &[(TrialRecord, TrialArtifacts)]) -> Result<()> {
    std::fs::create_dir_all(out.join("weights"))?;
    std::fs::create_dir_all(out.join("logs"))?;
    std::fs::write(out.join("trials.csv"), report.to_csv())?;
    std::fs::write(out.join("summary.json"), report.to_json())?;
    for (rec, art) in results {
        std::fs::write(out.join("weights").join(format!("trial_{}.txt", rec.trial)), &art.weights)?;
        std::fs::write(out.join("logs").join(format!("trial_{}.csv", rec.trial)), &art.log)?;
    }
    Ok(())
}

/// Generate a dataset for the config's target and return it.
pub fn gen_data(cfg: &ExperimentConfig, rows: usize) -> Result<Dataset> {
    let spec = cfg.validate()?;
    let mut d = generate(&spec, rows, &mut stream(cfg.experiment.seed, &[label::DATA]))?;
    d.seed = Some(cfg.experiment.seed);
    Ok(d)
}

/// Config files in `dir`, sorted by name.
pub fn config_files(dir: impl AsRef<Path>) -> Result<Vec<PathBuf>> {
    let dir = dir.as_ref();
    let mut files: Vec<PathBuf> = std::fs::read_dir(dir)
        .map_err(|e| Error::load(dir, e.to_string()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "toml"))
        .collect();
    files.sort();
    Ok(files)
}

/// One row of a bench summary.
#[derive(Debug, Clone)]
pub struct BenchRow {
    pub name: String,
    pub report: Report,
    pub reference_eta: Option<String>,
    pub reference_tc: Option<f64>,
}

pub fn bench_table(rows: &[BenchRow]) -> String {
    let mut s = format!(
        "{:<24} {:>8} {:>10} {:>10} {:>10} {:>10}\n",
        "target", "eta", "median_Tc", "accuracy", "ref_eta", "ref_Tc"
    );
    let opt = |v: Option<f64>, prec: usize| v.map_or("-".into(), |x| format!("{x:.prec$}"));
    for r in rows {
        let _ = writeln!(
            s,
            "{:<24} {:>8} {:>10} {:>10} {:>10} {:>10}",
            r.name,
            r.report.eta_fraction(),
            opt(r.report.median_tc, 0),
            opt(r.report.median_accuracy, 3),
            r.reference_eta.as_deref().unwrap_or("-"),
            opt(r.reference_tc, 0),
        );
    }
    s
}
