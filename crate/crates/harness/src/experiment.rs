//! Replicated experiment drivers with JSON and CSV reports.
//!
//! Every replicate derives its generator seed from the configuration seed
//! and its position in the sweep, so reports are reproducible regardless of
//! how replicates are scheduled across threads.

use std::path::{Path, PathBuf};
use std::time::Instant;

use igm_core::clustering::{classification_error, ebms, em_mixture, kmeans, EbmsOptions, EmOptions, KMeansOptions, ScaleRule};
use igm_core::consensus::Searcher;
use igm_core::estimation::{fit_general_theta, fit_single_theta, FitOptions};
use igm_core::rankings::{inversions, kendall_topt};
use igm_core::{CentralOrdering, SuffStats64, ThetaVector64, TopTOrdering};
use rand::{Rng, RngCore};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::synth::{default_universe, generate_synthetic, ComponentSpec, GeneratorSpec, ThetaSpec};

/// Consensus searcher named in configs and on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum SearcherName {
    Bbound,
    Greedy,
    Sortrows,
    #[default]
    Auto,
}

impl SearcherName {
    pub fn searcher(self, node_budget: Option<usize>) -> Searcher {
        match self {
            SearcherName::Bbound => Searcher::BranchBound {
                node_budget: node_budget.unwrap_or(1_000_000),
            },
            SearcherName::Greedy => Searcher::Greedy,
            SearcherName::Sortrows => Searcher::SortRows,
            SearcherName::Auto => match node_budget {
                Some(b) => Searcher::BranchBound { node_budget: b },
                None => Searcher::default(),
            },
        }
    }
}

impl std::str::FromStr for SearcherName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "bbound" => Ok(Self::Bbound),
            "greedy" => Ok(Self::Greedy),
            "sortrows" => Ok(Self::Sortrows),
            "auto" => Ok(Self::Auto),
            other => Err(format!("unknown searcher '{other}' (expected bbound, greedy, sortrows or auto)")),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct OutputPaths {
    pub json: Option<PathBuf>,
    pub csv: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentConfig {
    Table1(Table1Config),
    Fig4(Fig4Config),
    Table3(Table3Config),
}

impl ExperimentConfig {
    pub fn output(&self) -> &OutputPaths {
        match self {
            ExperimentConfig::Table1(c) => &c.output,
            ExperimentConfig::Fig4(c) => &c.output,
            ExperimentConfig::Table3(c) => &c.output,
        }
    }

    pub fn from_json_file(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(HarnessError::io(path))?;
        Ok(serde_json::from_str(&text)?)
    }
}

fn ln2() -> f64 {
    std::f64::consts::LN_2
}

/// Single-θ estimation sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Config {
    #[serde(default = "table1_thetas")]
    pub thetas: Vec<f64>,
    #[serde(default = "table1_ts")]
    pub ts: Vec<usize>,
    #[serde(default = "table1_ns")]
    pub ns: Vec<usize>,
    #[serde(default = "table1_replicates")]
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_universe")]
    pub universe: usize,
    #[serde(default)]
    pub searcher: SearcherName,
    #[serde(default)]
    pub record_timings: bool,
    #[serde(default)]
    pub output: OutputPaths,
}

fn table1_thetas() -> Vec<f64> {
    vec![ln2(), 2.0 * ln2()]
}
fn table1_ts() -> Vec<usize> {
    vec![2, 4, 8]
}
fn table1_ns() -> Vec<usize> {
    vec![200, 500, 2000]
}
fn table1_replicates() -> usize {
    25
}

impl Table1Config {
    pub fn new(seed: u64) -> Self {
        Self {
            thetas: table1_thetas(),
            ts: table1_ts(),
            ns: table1_ns(),
            replicates: table1_replicates(),
            seed,
            universe: default_universe(),
            searcher: SearcherName::Auto,
            record_timings: false,
            output: OutputPaths::default(),
        }
    }
}

/// Decaying-θ, fully parameterized estimation sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4Config {
    #[serde(default = "fig4_theta1")]
    pub theta1: f64,
    #[serde(default = "fig4_t")]
    pub t: usize,
    #[serde(default = "fig4_ns")]
    pub ns: Vec<usize>,
    #[serde(default = "fig4_replicates")]
    pub replicates: usize,
    pub seed: u64,
    #[serde(default = "default_universe")]
    pub universe: usize,
    #[serde(default)]
    pub searcher: SearcherName,
    #[serde(default)]
    pub record_timings: bool,
    #[serde(default)]
    pub output: OutputPaths,
}

fn fig4_theta1() -> f64 {
    0.69
}
fn fig4_t() -> usize {
    8
}
fn fig4_ns() -> Vec<usize> {
    vec![200, 2000]
}
fn fig4_replicates() -> usize {
    50
}

impl Fig4Config {
    pub fn new(seed: u64) -> Self {
        Self {
            theta1: fig4_theta1(),
            t: fig4_t(),
            ns: fig4_ns(),
            replicates: fig4_replicates(),
            seed,
            universe: default_universe(),
            searcher: SearcherName::Auto,
            record_timings: false,
            output: OutputPaths::default(),
        }
    }
}

/// Kernel scale rule for the blurring experiments.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum ScaleName {
    #[default]
    Literal,
    CountWeighted,
    Fixed(f64),
}

impl ScaleName {
    pub fn rule(self) -> ScaleRule {
        match self {
            ScaleName::Literal => ScaleRule::Literal,
            ScaleName::CountWeighted => ScaleRule::CountWeighted,
            ScaleName::Fixed(th) => ScaleRule::Fixed(th),
        }
    }
}

/// Mixture clustering sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table3Config {
    #[serde(default = "table3_thetas")]
    pub thetas: Vec<f64>,
    #[serde(default = "table3_per_cluster")]
    pub per_cluster: usize,
    #[serde(default = "table3_outliers")]
    pub outliers: usize,
    #[serde(default = "table3_ts")]
    pub ts: Vec<usize>,
    #[serde(default = "table3_runs")]
    pub runs: usize,
    pub seed: u64,
    #[serde(default = "default_universe")]
    pub universe: usize,
    #[serde(default = "table3_ks")]
    pub ks: Vec<usize>,
    #[serde(default)]
    pub scale: ScaleName,
    #[serde(default)]
    pub record_timings: bool,
    #[serde(default)]
    pub output: OutputPaths,
}

fn table3_thetas() -> Vec<f64> {
    vec![1.5, 1.0, 0.7]
}
fn table3_per_cluster() -> usize {
    150
}
fn table3_outliers() -> usize {
    50
}
fn table3_ts() -> Vec<usize> {
    vec![4, 6, 8]
}
fn table3_runs() -> usize {
    10
}
fn table3_ks() -> Vec<usize> {
    vec![3, 4, 5]
}

impl Table3Config {
    pub fn new(seed: u64) -> Self {
        Self {
            thetas: table3_thetas(),
            per_cluster: table3_per_cluster(),
            outliers: table3_outliers(),
            ts: table3_ts(),
            runs: table3_runs(),
            seed,
            universe: default_universe(),
            ks: table3_ks(),
            scale: ScaleName::Literal,
            record_timings: false,
            output: OutputPaths::default(),
        }
    }
}

/// Seed of replicate `rep` in sweep cell `cell`.
pub fn replicate_seed(base: u64, cell: usize, rep: usize) -> u64 {
    let mut rng = ChaCha8Rng::seed_from_u64(base);
    rng.set_stream(((cell as u64) << 32) | rep as u64);
    rng.next_u64()
}

fn elapsed_ms(start: Instant, record: bool) -> Option<f64> {
    record.then(|| start.elapsed().as_secs_f64() * 1e3)
}

/// Mean and sample standard deviation.
pub fn mean_sd(v: &[f64]) -> (f64, f64) {
    if v.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    if v.len() < 2 {
        return (mean, 0.0);
    }
    let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Quantile with linear interpolation between order statistics.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = p * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Inversions between an estimated prefix and the truth, over the items the
/// estimate lists.
fn ordering_error(estimate: &CentralOrdering, truth: &CentralOrdering) -> u64 {
    let mut by_truth = estimate.prefix().to_vec();
    by_truth.sort_by_key(|&i| truth.rank(i));
    inversions(estimate.prefix(), &by_truth)
}

/// `kendall_topt` between the true and estimated top-t prefixes.
fn prefix_error(estimate: &CentralOrdering, truth: &CentralOrdering, t: usize) -> u64 {
    kendall_topt(&estimate.top(t), &truth.top(t))
}

fn ids(o: &TopTOrdering) -> Vec<u32> {
    o.items().iter().map(|i| i.0).collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Replicate {
    pub theta: f64,
    pub t: usize,
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub theta_hat: Option<f64>,
    pub exact_sigma: Option<bool>,
    pub degenerate: Option<bool>,
    pub n_items: Option<usize>,
    /// Distance between true and estimated top-t prefixes.
    pub prefix_error: Option<u64>,
    /// Inversions w.r.t. the truth over all observed items.
    pub ordering_error: Option<u64>,
    pub sigma_top: Option<Vec<u32>>,
    pub elapsed_ms: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table1Cell {
    pub theta: f64,
    pub t: usize,
    pub n: usize,
    pub replicates: usize,
    pub mean: f64,
    pub sd: f64,
    pub prefix_exact: f64,
    pub ordering_error_0: f64,
    pub ordering_error_1: f64,
    pub ordering_error_2plus: f64,
}

pub fn run_table1(cfg: &Table1Config) -> Result<(Vec<Table1Replicate>, Vec<Table1Cell>)> {
    let mut cells = Vec::new();
    for &theta in &cfg.thetas {
        for &t in &cfg.ts {
            for &n in &cfg.ns {
                cells.push((theta, t, n));
            }
        }
    }
    let options = FitOptions {
        searcher: cfg.searcher.searcher(None),
        ..Default::default()
    };
    let jobs: Vec<(usize, usize)> = (0..cells.len()).flat_map(|c| (0..cfg.replicates).map(move |r| (c, r))).collect();
    let reps: Vec<Table1Replicate> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let (theta, t, n) = cells[c];
            let seed = replicate_seed(cfg.seed, c, r);
            let start = Instant::now();
            let mut rep = Table1Replicate {
                theta,
                t,
                n,
                replicate: r,
                seed,
                theta_hat: None,
                exact_sigma: None,
                degenerate: None,
                n_items: None,
                prefix_error: None,
                ordering_error: None,
                sigma_top: None,
                elapsed_ms: None,
                error: None,
            };
            let spec = GeneratorSpec {
                universe: cfg.universe,
                t,
                components: vec![ComponentSpec {
                    theta: ThetaSpec::Constant(theta),
                    n,
                }],
                outliers: 0,
                seed,
            };
            let outcome = generate_synthetic(&spec).and_then(|(ds, truth)| {
                let stats = SuffStats64::accumulate(&ds.rankings)?;
                let fit = fit_single_theta(&stats, &options)?;
                Ok((stats.n_items(), fit, truth))
            });
            match outcome {
                Ok((n_items, fit, truth)) => {
                    let sigma = &fit.params.sigma;
                    rep.theta_hat = Some(fit.params.theta.at(1));
                    rep.exact_sigma = Some(fit.exact_sigma);
                    rep.degenerate = Some(fit.degenerate);
                    rep.n_items = Some(n_items);
                    rep.prefix_error = Some(prefix_error(sigma, &truth.params[0].sigma, t));
                    rep.ordering_error = Some(ordering_error(sigma, &truth.params[0].sigma));
                    rep.sigma_top = Some(ids(&sigma.top(t)));
                }
                Err(e) => rep.error = Some(e.to_string()),
            }
            rep.elapsed_ms = elapsed_ms(start, cfg.record_timings);
            rep
        })
        .collect();

    let summary = cells
        .iter()
        .map(|&(theta, t, n)| {
            let these: Vec<&Table1Replicate> = reps
                .iter()
                .filter(|r| r.theta == theta && r.t == t && r.n == n && r.error.is_none())
                .collect();
            let th: Vec<f64> = these.iter().filter_map(|r| r.theta_hat).collect();
            let (mean, sd) = mean_sd(&th);
            let k = these.len().max(1) as f64;
            let frac = |f: &dyn Fn(&Table1Replicate) -> bool| these.iter().filter(|r| f(r)).count() as f64 / k;
            Table1Cell {
                theta,
                t,
                n,
                replicates: these.len(),
                mean,
                sd,
                prefix_exact: frac(&|r| r.prefix_error == Some(0)),
                ordering_error_0: frac(&|r| r.ordering_error == Some(0)),
                ordering_error_1: frac(&|r| r.ordering_error == Some(1)),
                ordering_error_2plus: frac(&|r| r.ordering_error.is_some_and(|e| e >= 2)),
            }
        })
        .collect();
    Ok((reps, summary))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitTrace {
    pub init: Vec<f64>,
    pub theta_hat: Vec<f64>,
    pub neg_log_lik: f64,
    pub iterations: usize,
    pub converged: bool,
    /// `J` never increased between iterations (within 1e-12).
    pub monotone: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4Replicate {
    pub n: usize,
    pub replicate: usize,
    pub seed: u64,
    pub n_items: Option<usize>,
    /// Fit started from θ_j = 1.
    pub fit: Option<FitTrace>,
    /// Fit started from a random θ.
    pub alt_fit: Option<FitTrace>,
    pub prefix_error: Option<u64>,
    pub elapsed_ms: Option<f64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4Box {
    pub n: usize,
    pub j: usize,
    pub truth: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    pub mean: f64,
}

fn trace_of(init: &ThetaVector64, fit: &igm_core::estimation::FitResult<f64>, t: usize) -> FitTrace {
    FitTrace {
        init: (1..=t).map(|j| init.at(j)).collect(),
        theta_hat: (1..=t).map(|j| fit.params.theta.at(j)).collect(),
        neg_log_lik: fit.neg_log_lik,
        iterations: fit.iterations,
        converged: fit.converged,
        monotone: fit.j_trace.windows(2).all(|w| w[1] <= w[0] + 1e-12),
    }
}

pub fn run_fig4(cfg: &Fig4Config) -> Result<(Vec<Fig4Replicate>, Vec<Fig4Box>)> {
    let truth_theta = ThetaSpec::Decay(cfg.theta1).to_theta(cfg.t)?;
    let options = FitOptions {
        searcher: cfg.searcher.searcher(None),
        ..Default::default()
    };
    let jobs: Vec<(usize, usize)> = (0..cfg.ns.len()).flat_map(|c| (0..cfg.replicates).map(move |r| (c, r))).collect();
    let reps: Vec<Fig4Replicate> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let n = cfg.ns[c];
            let seed = replicate_seed(cfg.seed, c, r);
            let start = Instant::now();
            let mut rep = Fig4Replicate {
                n,
                replicate: r,
                seed,
                n_items: None,
                fit: None,
                alt_fit: None,
                prefix_error: None,
                elapsed_ms: None,
                error: None,
            };
            let spec = GeneratorSpec {
                universe: cfg.universe,
                t: cfg.t,
                components: vec![ComponentSpec {
                    theta: ThetaSpec::Decay(cfg.theta1),
                    n,
                }],
                outliers: 0,
                seed,
            };
            let outcome = (|| -> Result<_> {
                let (ds, truth) = generate_synthetic(&spec)?;
                let stats = SuffStats64::accumulate(&ds.rankings)?;
                let unit = ThetaVector64::new(vec![1.0; cfg.t])?;
                let fit = fit_general_theta(&stats, Some(&unit), &options)?;
                let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
                let random = ThetaVector64::new((0..cfg.t).map(|_| rng.random_range(0.05..2.0)).collect())?;
                let alt = fit_general_theta(&stats, Some(&random), &options)?;
                Ok((stats.n_items(), trace_of(&unit, &fit, cfg.t), trace_of(&random, &alt, cfg.t), prefix_error(&fit.params.sigma, &truth.params[0].sigma, cfg.t)))
            })();
            match outcome {
                Ok((n_items, fit, alt, perr)) => {
                    rep.n_items = Some(n_items);
                    rep.fit = Some(fit);
                    rep.alt_fit = Some(alt);
                    rep.prefix_error = Some(perr);
                }
                Err(e) => rep.error = Some(e.to_string()),
            }
            rep.elapsed_ms = elapsed_ms(start, cfg.record_timings);
            rep
        })
        .collect();

    let mut boxes = Vec::new();
    for &n in &cfg.ns {
        for j in 1..=cfg.t {
            let mut v: Vec<f64> = reps
                .iter()
                .filter(|r| r.n == n)
                .filter_map(|r| r.fit.as_ref().map(|f| f.theta_hat[j - 1]))
                .collect();
            v.sort_by(f64::total_cmp);
            boxes.push(Fig4Box {
                n,
                j,
                truth: truth_theta.at(j),
                min: v.first().copied().unwrap_or(f64::NAN),
                q1: quantile(&v, 0.25),
                median: quantile(&v, 0.5),
                q3: quantile(&v, 0.75),
                max: v.last().copied().unwrap_or(f64::NAN),
                mean: mean_sd(&v).0,
            });
        }
    }
    Ok((reps, boxes))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PerK {
    pub k: usize,
    pub error: Option<f64>,
    pub message: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table3Run {
    pub t: usize,
    pub run: usize,
    pub seed: u64,
    pub ebms_error: Option<f64>,
    pub ebms_iterations: Option<usize>,
    pub ebms_clusters: Option<usize>,
    pub ebms_converged: Option<bool>,
    /// Kernel scale used in every round and whether it was clamped.
    pub ebms_scales: Vec<(f64, bool)>,
    pub kmeans: Vec<PerK>,
    pub em: Vec<PerK>,
    /// Mean max-responsibility of outliers and of cluster points under the
    /// best EM fit.
    pub em_outlier_confidence: Option<f64>,
    pub em_member_confidence: Option<f64>,
    pub elapsed_ms: Option<f64>,
    pub error: Option<String>,
}

fn best(per_k: &[PerK]) -> Option<(usize, f64)> {
    per_k
        .iter()
        .filter_map(|p| p.error.map(|e| (p.k, e)))
        .min_by(|a, b| a.1.total_cmp(&b.1).then(a.0.cmp(&b.0)))
}

impl Table3Run {
    pub fn kmeans_best(&self) -> Option<(usize, f64)> {
        best(&self.kmeans)
    }

    pub fn em_best(&self) -> Option<(usize, f64)> {
        best(&self.em)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table3Cell {
    pub t: usize,
    pub method: String,
    pub runs: usize,
    pub mean: f64,
    pub sd: f64,
}

type Metric = fn(&Table3Run) -> Option<f64>;

pub fn run_table3(cfg: &Table3Config) -> Result<(Vec<Table3Run>, Vec<Table3Cell>)> {
    if cfg.ks.is_empty() {
        return Err(HarnessError::Config("ks must not be empty".into()));
    }
    let jobs: Vec<(usize, usize)> = (0..cfg.ts.len()).flat_map(|c| (0..cfg.runs).map(move |r| (c, r))).collect();
    let runs: Vec<Table3Run> = jobs
        .par_iter()
        .map(|&(c, r)| {
            let t = cfg.ts[c];
            let seed = replicate_seed(cfg.seed, c, r);
            let start = Instant::now();
            let mut run = Table3Run {
                t,
                run: r,
                seed,
                ebms_error: None,
                ebms_iterations: None,
                ebms_clusters: None,
                ebms_converged: None,
                ebms_scales: Vec::new(),
                kmeans: Vec::new(),
                em: Vec::new(),
                em_outlier_confidence: None,
                em_member_confidence: None,
                elapsed_ms: None,
                error: None,
            };
            let spec = GeneratorSpec {
                universe: cfg.universe,
                t,
                components: cfg
                    .thetas
                    .iter()
                    .map(|&th| ComponentSpec {
                        theta: ThetaSpec::Constant(th),
                        n: cfg.per_cluster,
                    })
                    .collect(),
                outliers: cfg.outliers,
                seed,
            };
            let (ds, truth) = match generate_synthetic(&spec) {
                Ok(x) => x,
                Err(e) => {
                    run.error = Some(e.to_string());
                    return run;
                }
            };
            let members = cfg.thetas.len() * cfg.per_cluster;
            let data = &ds.rankings;
            match ebms(data, &EbmsOptions { scale: cfg.scale.rule(), ..Default::default() }) {
                Ok(out) => {
                    run.ebms_error = classification_error(&out.clustering.assignment, &truth.labels).ok();
                    run.ebms_iterations = Some(out.iterations);
                    run.ebms_clusters = Some(out.clustering.num_clusters());
                    run.ebms_converged = Some(out.converged);
                    run.ebms_scales = out.rounds.iter().map(|x| (x.theta, x.clamped)).collect();
                }
                Err(e) => run.error = Some(format!("ebms: {e}")),
            }
            let mut best_em: Option<(f64, f64, f64)> = None;
            for &k in &cfg.ks {
                run.kmeans.push(match kmeans(data, k, seed, &KMeansOptions::default()) {
                    Ok(km) => PerK {
                        k,
                        error: classification_error(&km.clustering.assignment, &truth.labels).ok(),
                        message: None,
                    },
                    Err(e) => PerK { k, error: None, message: Some(e.to_string()) },
                });
                run.em.push(match em_mixture(data, k, seed, &EmOptions::default()) {
                    Ok(em) => {
                        let err = classification_error(&em.clustering.assignment, &truth.labels).ok();
                        let conf = |range: std::ops::Range<usize>| {
                            let len = range.len().max(1) as f64;
                            range
                                .map(|i| em.responsibilities[i].iter().copied().fold(0.0, f64::max))
                                .sum::<f64>()
                                / len
                        };
                        if let Some(e) = err {
                            if best_em.is_none_or(|b| e < b.0) {
                                best_em = Some((e, conf(members..data.len()), conf(0..members)));
                            }
                        }
                        PerK { k, error: err, message: None }
                    }
                    Err(e) => PerK { k, error: None, message: Some(e.to_string()) },
                });
            }
            if let Some((_, out, inn)) = best_em {
                run.em_outlier_confidence = Some(out);
                run.em_member_confidence = Some(inn);
            }
            run.elapsed_ms = elapsed_ms(start, cfg.record_timings);
            run
        })
        .collect();

    let mut summary = Vec::new();
    for &t in &cfg.ts {
        let these: Vec<&Table3Run> = runs.iter().filter(|r| r.t == t).collect();
        let methods: [(&str, Metric); 3] = [
            ("ebms", |r| r.ebms_error),
            ("kmeans", |r| r.kmeans_best().map(|b| b.1)),
            ("em", |r| r.em_best().map(|b| b.1)),
        ];
        for (name, f) in methods.iter() {
            let v: Vec<f64> = these.iter().filter_map(|r| f(r)).collect();
            let (mean, sd) = mean_sd(&v);
            summary.push(Table3Cell {
                t,
                method: name.to_string(),
                runs: v.len(),
                mean,
                sd,
            });
        }
    }
    Ok((runs, summary))
}

/// Full report of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "experiment", rename_all = "snake_case")]
pub enum ExperimentReport {
    Table1 {
        config: Table1Config,
        replicates: Vec<Table1Replicate>,
        summary: Vec<Table1Cell>,
    },
    Fig4 {
        config: Fig4Config,
        replicates: Vec<Fig4Replicate>,
        summary: Vec<Fig4Box>,
    },
    Table3 {
        config: Table3Config,
        runs: Vec<Table3Run>,
        summary: Vec<Table3Cell>,
    },
}

impl ExperimentReport {
    /// Summary rows as CSV.
    pub fn summary_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        match self {
            ExperimentReport::Table1 { summary, .. } => summary.iter().try_for_each(|r| w.serialize(r))?,
            ExperimentReport::Fig4 { summary, .. } => summary.iter().try_for_each(|r| w.serialize(r))?,
            ExperimentReport::Table3 { summary, .. } => summary.iter().try_for_each(|r| w.serialize(r))?,
        }
        let bytes = w.into_inner().map_err(|e| HarnessError::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }

    /// Summary rows as JSON.
    pub fn summary_json(&self) -> serde_json::Value {
        match self {
            ExperimentReport::Table1 { summary, .. } => serde_json::json!({ "experiment": "table1", "summary": summary }),
            ExperimentReport::Fig4 { summary, .. } => serde_json::json!({ "experiment": "fig4", "summary": summary }),
            ExperimentReport::Table3 { summary, .. } => serde_json::json!({ "experiment": "table3", "summary": summary }),
        }
    }
}

pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    Ok(match config {
        ExperimentConfig::Table1(c) => {
            let (replicates, summary) = run_table1(c)?;
            ExperimentReport::Table1 {
                config: c.clone(),
                replicates,
                summary,
            }
        }
        ExperimentConfig::Fig4(c) => {
            let (replicates, summary) = run_fig4(c)?;
            ExperimentReport::Fig4 {
                config: c.clone(),
                replicates,
                summary,
            }
        }
        ExperimentConfig::Table3(c) => {
            let (runs, summary) = run_table3(c)?;
            ExperimentReport::Table3 {
                config: c.clone(),
                runs,
                summary,
            }
        }
    })
}

/// Runs `config` and writes the report files it names.
pub fn run_and_write(config: &ExperimentConfig) -> Result<ExperimentReport> {
    let report = run_experiment(config)?;
    let out = config.output();
    if let Some(path) = &out.json {
        let text = serde_json::to_string_pretty(&report)?;
        std::fs::write(path, text).map_err(HarnessError::io(path))?;
    }
    if let Some(path) = &out.csv {
        std::fs::write(path, report.summary_csv()?).map_err(HarnessError::io(path))?;
    }
    Ok(report)
}
