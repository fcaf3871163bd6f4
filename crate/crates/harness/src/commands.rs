//! Command implementations behind the `igm` binary. Each returns a
//! serializable report; the binary only parses arguments and prints.

use std::str::FromStr;

use igm_core::bayes::{posterior_summary, posterior_update, sample_theta, sigma_log_score, theta_mode, validate_prior, PriorDocument};
use igm_core::clustering::{ebms, em_mixture, kmeans, Clustering, EbmsOptions, EmOptions, KMeansOptions};
use igm_core::consensus::{view_from_counts, Searcher};
use igm_core::estimation::{bic_select, fit_general_theta, fit_single_theta, fit_tied, FitOptions, FitResult};
use igm_core::model::sample;
use igm_core::{CentralOrdering, IgmParams64, PrecedenceCounts, SuffStats64, ThetaVector64};
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dataset::RankingDataset;
use crate::error::{HarnessError, Result};
use crate::experiment::{ScaleName, SearcherName};
use crate::synth::random_center;

/// Dispersion structure to fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelSpec {
    Single,
    General,
    /// Free `θ_1..θ_{r−1}`, shared tail from rank `r`.
    Tied(usize),
    /// Tied models `r = 1..=t` compared by BIC.
    Bic,
}

impl FromStr for ModelSpec {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "single" => Ok(Self::Single),
            "general" => Ok(Self::General),
            "bic" => Ok(Self::Bic),
            _ => match s.strip_prefix("tied:").map(str::parse::<usize>) {
                Some(Ok(r)) if r >= 1 => Ok(Self::Tied(r)),
                _ => Err(format!("unknown model '{s}' (expected single, general, tied:R or bic)")),
            },
        }
    }
}

/// Clustering method.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ClusterMethod {
    Ebms,
    KMeans(usize),
    Em(usize),
}

impl FromStr for ClusterMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let k = |rest: &str| rest.parse::<usize>().ok().filter(|&k| k >= 1);
        if s == "ebms" {
            return Ok(Self::Ebms);
        }
        if let Some(k) = s.strip_prefix("kmeans:").and_then(k) {
            return Ok(Self::KMeans(k));
        }
        if let Some(k) = s.strip_prefix("em:").and_then(k) {
            return Ok(Self::Em(k));
        }
        Err(format!("unknown method '{s}' (expected ebms, kmeans:K or em:K)"))
    }
}

impl FromStr for ScaleName {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "literal" => Ok(Self::Literal),
            "count_weighted" => Ok(Self::CountWeighted),
            other => parse_theta_value(other)
                .map(Self::Fixed)
                .map_err(|_| format!("unknown scale '{other}' (expected literal, count_weighted or a θ value)")),
        }
    }
}

/// Parses `0.7`, `ln2`, `ln(4)`.
pub fn parse_theta_value(s: &str) -> std::result::Result<f64, String> {
    let s = s.trim();
    let v = match s.strip_prefix("ln") {
        Some(arg) => {
            let arg = arg.trim_start_matches('(').trim_end_matches(')');
            arg.parse::<f64>().map_err(|_| format!("bad θ '{s}'"))?.ln()
        }
        None => s.parse::<f64>().map_err(|_| format!("bad θ '{s}'"))?,
    };
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(format!("θ must be positive and finite, got '{s}'"))
    }
}

/// Comma-separated θ list; one value means constant θ.
pub fn parse_theta_list(s: &str) -> Result<ThetaVector64> {
    let values = s
        .split(',')
        .map(parse_theta_value)
        .collect::<std::result::Result<Vec<_>, _>>()
        .map_err(HarnessError::Config)?;
    Ok(match values.as_slice() {
        [th] => ThetaVector64::constant(*th)?,
        _ => ThetaVector64::new(values)?,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct CandidateReport {
    pub r: usize,
    pub bic: f64,
    pub neg_log_lik: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub model: String,
    pub n: usize,
    pub items: usize,
    pub t_max: usize,
    /// Estimated θ for ranks `1..=t_max`.
    pub theta: Vec<f64>,
    /// Estimated central ordering as tokens.
    pub sigma: Vec<String>,
    /// Groups of consecutive σ positions with indistinguishable order.
    pub tie_groups: Vec<Vec<String>>,
    pub display: String,
    pub log_likelihood: f64,
    pub neg_log_lik: f64,
    pub iterations: usize,
    pub converged: bool,
    pub exact_sigma: bool,
    pub degenerate: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub candidates: Vec<CandidateReport>,
}

fn nonempty(ds: &RankingDataset) -> Result<SuffStats64> {
    if ds.is_empty() {
        return Err(igm_core::Error::EmptyData.into());
    }
    Ok(SuffStats64::accumulate(&ds.rankings)?)
}

fn token_display(ds: &RankingDataset, sigma: &CentralOrdering) -> String {
    let mut groups = sigma.tie_groups().iter().peekable();
    let mut parts = Vec::new();
    let mut k = 0;
    let prefix = sigma.prefix();
    while k < prefix.len() {
        match groups.peek() {
            Some(g) if g.start == k => {
                parts.push(format!("{{{}}}", ds.tokens_of(&prefix[(*g).clone()]).join(",")));
                k = g.end;
                groups.next();
            }
            _ => {
                parts.push(ds.token(prefix[k]));
                k += 1;
            }
        }
    }
    parts.push("...".into());
    format!("({})", parts.join(","))
}

pub fn fit(ds: &RankingDataset, model: ModelSpec, searcher: Searcher) -> Result<FitReport> {
    let stats = nonempty(ds)?;
    let options = FitOptions { searcher, ..Default::default() };
    let t = stats.t_max();
    let mut candidates = Vec::new();
    let mut chosen = 1;
    let result: FitResult<f64> = match model {
        ModelSpec::Single => fit_single_theta(&stats, &options)?,
        ModelSpec::General => fit_general_theta(&stats, None, &options)?,
        ModelSpec::Tied(r) => fit_tied(&stats, r, None, &options)?,
        ModelSpec::Bic => {
            let sel = bic_select(&stats, &(1..=t).collect::<Vec<_>>(), &options)?;
            candidates = sel
                .fits
                .iter()
                .map(|(r, bic, f)| CandidateReport {
                    r: *r,
                    bic: *bic,
                    neg_log_lik: f.neg_log_lik,
                })
                .collect();
            chosen = sel.chosen;
            sel.chosen_fit().clone()
        }
    };
    let model = match model {
        ModelSpec::Single => "single".to_owned(),
        ModelSpec::General => "general".to_owned(),
        ModelSpec::Tied(r) => format!("tied:{r}"),
        ModelSpec::Bic => format!("bic(tied:{chosen})"),
    };
    let sigma = &result.params.sigma;
    Ok(FitReport {
        model,
        n: ds.len(),
        items: stats.n_items(),
        t_max: t,
        theta: (1..=t).map(|j| result.params.theta.at(j)).collect(),
        sigma: ds.tokens_of(sigma.prefix()),
        tie_groups: sigma.tie_group_items().iter().map(|g| ds.tokens_of(g)).collect(),
        display: token_display(ds, sigma),
        log_likelihood: result.log_likelihood(),
        neg_log_lik: result.neg_log_lik,
        iterations: result.iterations,
        converged: result.converged,
        exact_sigma: result.exact_sigma,
        degenerate: result.degenerate,
        candidates,
    })
}

/// Samples `n` top-`t` orderings. The center is the identity ordering, or a
/// random ordering of `1..=universe` when `universe` is given.
pub fn sample_dataset(theta: &ThetaVector64, t: usize, n: usize, seed: u64, universe: Option<usize>) -> Result<RankingDataset> {
    if t == 0 {
        return Err(HarnessError::Config("t must be positive".into()));
    }
    theta.check_covers(t)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let sigma = match universe {
        Some(m) if m < t => return Err(HarnessError::Config("universe must hold at least t items".into())),
        Some(m) => random_center(m, &mut rng),
        None => CentralOrdering::identity(),
    };
    let params = IgmParams64::new(sigma, theta.clone());
    let rankings = (0..n).map(|_| sample(&params, t, &mut rng)).collect::<igm_core::Result<Vec<_>>>()?;
    Ok(RankingDataset::from_ids(rankings))
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsensusReport {
    pub ordering: Vec<String>,
    pub tie_groups: Vec<Vec<String>>,
    pub display: String,
    /// Total pairwise disagreement cost of the ordering.
    pub cost: f64,
    pub optimal: bool,
    pub expansions: usize,
}

pub fn consensus(ds: &RankingDataset, searcher: Searcher) -> Result<ConsensusReport> {
    let stats = nonempty(ds)?;
    let items: Vec<_> = stats.items().iter().copied().collect();
    let view = view_from_counts(stats.aggregate(), &items, FitOptions::<f64>::default().dense_limit);
    let out = searcher.run(view.as_ref());
    Ok(ConsensusReport {
        ordering: ds.tokens_of(out.sigma.prefix()),
        tie_groups: out.sigma.tie_group_items().iter().map(|g| ds.tokens_of(g)).collect(),
        display: token_display(ds, &out.sigma),
        cost: out.cost,
        optimal: out.optimal,
        expansions: out.expansions,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterSummary {
    pub label: usize,
    pub size: usize,
    pub representative: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClusterReport {
    pub method: String,
    pub clusters: Vec<ClusterSummary>,
    pub assignment: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub weights: Option<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub objective: Option<u64>,
}

fn summarize(ds: &RankingDataset, c: &Clustering) -> Vec<ClusterSummary> {
    c.sizes()
        .into_iter()
        .zip(&c.representatives)
        .enumerate()
        .map(|(label, (size, rep))| ClusterSummary {
            label,
            size,
            representative: ds.tokens_of(rep.items()),
        })
        .collect()
}

pub fn cluster(ds: &RankingDataset, method: ClusterMethod, seed: u64, scale: ScaleName) -> Result<ClusterReport> {
    if ds.is_empty() {
        return Err(igm_core::Error::EmptyData.into());
    }
    let data = &ds.rankings;
    Ok(match method {
        ClusterMethod::Ebms => {
            let out = ebms(data, &EbmsOptions { scale: scale.rule(), ..Default::default() })?;
            ClusterReport {
                method: "ebms".into(),
                clusters: summarize(ds, &out.clustering),
                assignment: out.clustering.assignment.clone(),
                iterations: out.iterations,
                converged: out.converged,
                theta: Some(out.rounds.iter().map(|r| r.theta).collect()),
                weights: None,
                objective: None,
            }
        }
        ClusterMethod::KMeans(k) => {
            let out = kmeans(data, k, seed, &KMeansOptions::default())?;
            ClusterReport {
                method: format!("kmeans:{k}"),
                clusters: summarize(ds, &out.clustering),
                assignment: out.clustering.assignment.clone(),
                iterations: out.iterations,
                converged: true,
                theta: None,
                weights: None,
                objective: Some(out.objective),
            }
        }
        ClusterMethod::Em(k) => {
            let out = em_mixture(data, k, seed, &EmOptions::default())?;
            ClusterReport {
                method: format!("em:{k}"),
                clusters: summarize(ds, &out.clustering),
                assignment: out.clustering.assignment.clone(),
                iterations: out.iterations,
                converged: out.converged,
                theta: Some(out.params.iter().map(|p| p.theta.at(1)).collect()),
                weights: Some(out.weights.clone()),
                objective: None,
            }
        }
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct PosteriorReport {
    pub prior_violations: Vec<String>,
    pub posterior: Option<PriorDocument>,
    /// Ordering minimizing the summed posterior location cost.
    pub sigma: Vec<String>,
    pub s_star: Vec<f64>,
    pub strength: f64,
    /// Mode of each θ_j conditional on `sigma`, when it exists.
    pub theta_mode: Vec<Option<f64>>,
    /// One draw of each θ_j conditional on `sigma`; `None` for ranks whose
    /// conditional is improper (`S_j* = 0`).
    pub theta_draw: Option<Vec<Option<f64>>>,
    /// `Σ_j ln B(S_j*, strength + 1)`, `None` when improper.
    pub sigma_log_score: Option<f64>,
}

/// Validates the prior, updates it with the data and summarizes the
/// posterior around its location consensus. An invalid prior yields a report
/// listing every violation and no posterior.
pub fn posterior(doc: &PriorDocument, ds: &RankingDataset, seed: Option<u64>) -> Result<PosteriorReport> {
    let mut dict = ds.dictionary.clone();
    let prior = doc.to_prior::<f64>(&mut dict)?;
    let violations = validate_prior(&prior);
    if !violations.is_empty() {
        return Ok(PosteriorReport {
            prior_violations: violations.iter().map(ToString::to_string).collect(),
            posterior: None,
            sigma: Vec::new(),
            s_star: Vec::new(),
            strength: prior.nu,
            theta_mode: Vec::new(),
            theta_draw: None,
            sigma_log_score: None,
        });
    }
    let stats = nonempty(ds)?;
    let post = posterior_update(&prior, &stats)?;
    let mut location = PrecedenceCounts::default();
    for j in 1..=post.t() {
        location.add_scaled(&post.location(j)?, 1.0);
    }
    let mut items: Vec<_> = location.q.keys().copied().collect();
    items.extend(location.pairs.keys().flat_map(|&(a, b)| [a, b]));
    items.sort_unstable();
    items.dedup();
    let view = view_from_counts(&location, &items, FitOptions::<f64>::default().dense_limit);
    let sigma = Searcher::default().run(view.as_ref()).sigma;
    let summary = posterior_summary(&post, None, &sigma)?;
    let score = sigma_log_score(&sigma, &post, None)?;
    let theta_draw = match seed {
        Some(seed) => Some(
            summary
                .s_star
                .iter()
                .enumerate()
                .map(|(j, &s)| {
                    (s > 0.0)
                        .then(|| sample_theta(s, summary.strength, seed.wrapping_add(j as u64)))
                        .transpose()
                })
                .collect::<igm_core::Result<Vec<_>>>()?,
        ),
        None => None,
    };
    let ds_view = RankingDataset {
        dictionary: dict.clone(),
        ..Default::default()
    };
    Ok(PosteriorReport {
        prior_violations: Vec::new(),
        posterior: Some(PriorDocument::from_prior(&post, &dict)?),
        sigma: ds_view.tokens_of(sigma.prefix()),
        theta_mode: summary.s_star.iter().map(|&s| theta_mode(s, summary.strength)).collect(),
        s_star: summary.s_star,
        strength: summary.strength,
        theta_draw,
        sigma_log_score: (!score.improper).then_some(score.score),
    })
}

pub fn searcher_from(name: SearcherName, node_budget: Option<usize>) -> Searcher {
    name.searcher(node_budget)
}
