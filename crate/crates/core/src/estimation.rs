//! Maximum-likelihood estimation of `(σ, θ)`.
//!
//! For fixed σ the dispersion parameters have closed forms; for fixed θ the
//! σ-step is a consensus search on `R_θ = Σ_j θ_j R_j`. The general and
//! tied models alternate the two steps, which never increases the negative
//! log-likelihood `J(θ, σ) = Σ_j [θ_j L_σ(R_j) + N_j ln ψ(θ_j)]`.

use crate::consensus::{order_in_view, search_with_warm_start, view_from_counts, SearchOutcome, Searcher};
use crate::error::{Error, Result};
use crate::model::{ln_psi, IgmParams, ThetaVector};
use crate::rankings::{CentralOrdering, ItemId};
use crate::scalar::Real;
use crate::suff_stats::{RankSelector, SuffStats};

/// Tuning shared by all fits.
#[derive(Debug, Clone, Copy)]
pub struct FitOptions<F> {
    pub searcher: Searcher,
    /// Value used for θ when its estimate is `+∞` (no observed disagreement).
    pub theta_cap: F,
    /// Relative change in `J` below which the alternation stops.
    pub tol: F,
    pub max_iter: usize,
    /// Item counts up to this use a dense cost table.
    pub dense_limit: usize,
}

impl<F: Real> Default for FitOptions<F> {
    fn default() -> Self {
        Self {
            searcher: Searcher::default(),
            theta_cap: F::of(50.0),
            tol: F::of(1e-8),
            max_iter: 200,
            dense_limit: 2_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct FitResult<F> {
    pub params: IgmParams<F>,
    /// `J(θ, σ)` at `params`.
    pub neg_log_lik: F,
    pub iterations: usize,
    pub converged: bool,
    /// The final σ-step was certified optimal.
    pub exact_sigma: bool,
    /// Some θ hit the cap because its cost term was zero.
    pub degenerate: bool,
    /// `J` after every iteration.
    pub j_trace: Vec<F>,
}

impl<F: Real> FitResult<F> {
    pub fn log_likelihood(&self) -> F {
        -self.neg_log_lik
    }
}

/// `ln(1 + n / l)`, or `(cap, true)` when `l` is zero.
pub fn theta_mle<F: Real>(n: F, l: F, cap: F) -> (F, bool) {
    if l <= F::zero() {
        return (cap, true);
    }
    let theta = (n / l).ln_1p();
    if theta > cap {
        (cap, true)
    } else {
        (theta, false)
    }
}

/// `J(θ, σ)` from per-rank costs and counts.
fn objective<F: Real>(costs: &[F], counts: &[F], theta: &ThetaVector<F>) -> F {
    costs
        .iter()
        .zip(counts)
        .enumerate()
        .map(|(k, (&l, &n))| {
            let th = theta.at(k + 1);
            th * l + n * ln_psi(th)
        })
        .sum()
}

/// `J(θ, σ)` for arbitrary parameters.
pub fn neg_log_lik<F: Real>(stats: &SuffStats<F>, params: &IgmParams<F>) -> Result<F> {
    params.theta.check_covers(stats.t_max())?;
    let costs = stats.per_rank_costs(&params.sigma)?;
    let counts = rank_counts(stats);
    Ok(objective(&costs, &counts, &params.theta))
}

fn rank_counts<F: Real>(stats: &SuffStats<F>) -> Vec<F> {
    (1..=stats.t_max()).map(|j| stats.n_at(j)).collect()
}

fn sorted_items<F: Real>(stats: &SuffStats<F>) -> Vec<ItemId> {
    stats.items().iter().copied().collect()
}

/// Minimizes `L_σ(R_θ)`; `R` itself when θ is uniform over the observed ranks.
fn sigma_step<F: Real>(
    stats: &SuffStats<F>,
    theta: Option<&ThetaVector<F>>,
    warm: Option<&CentralOrdering>,
    options: &FitOptions<F>,
) -> Result<SearchOutcome<F>> {
    let items = sorted_items(stats);
    let counts = match theta {
        Some(th) if !th.is_uniform_over(stats.t_max()) => stats.counts(RankSelector::Weighted(th))?,
        _ => stats.aggregate().clone(),
    };
    let view = view_from_counts(&counts, &items, options.dense_limit);
    let warm_order = warm.map(|s| order_in_view(view.as_ref(), s));
    Ok(search_with_warm_start(options.searcher, view.as_ref(), warm_order.as_deref()))
}

/// Single dispersion parameter: σ minimizes `L_σ(R)`, then
/// `θ = ln(1 + T / L_σ(R))`.
pub fn fit_single_theta<F: Real>(stats: &SuffStats<F>, options: &FitOptions<F>) -> Result<FitResult<F>> {
    if stats.t_max() == 0 {
        return Err(Error::EmptyData);
    }
    let found = sigma_step(stats, None, None, options)?;
    let total = stats.total();
    let (theta, degenerate) = theta_mle(total, found.cost, options.theta_cap);
    let theta = ThetaVector::constant(theta)?;
    let j = theta.at(1) * found.cost + total * ln_psi(theta.at(1));
    Ok(FitResult {
        params: IgmParams::new(found.sigma, theta),
        neg_log_lik: j,
        iterations: 1,
        converged: true,
        exact_sigma: found.optimal,
        degenerate,
        j_trace: vec![j],
    })
}

/// θ-step for the first `r − 1` free ranks plus one pooled parameter for
/// ranks `r..`.
fn theta_step<F: Real>(costs: &[F], counts: &[F], r: usize, cap: F) -> (Vec<F>, bool) {
    let mut degenerate = false;
    let mut values = Vec::with_capacity(r);
    for j in 0..r - 1 {
        let (th, d) = theta_mle(counts[j], costs[j], cap);
        degenerate |= d;
        values.push(th);
    }
    let n: F = counts[r - 1..].iter().copied().sum();
    let l: F = costs[r - 1..].iter().copied().sum();
    let (th, d) = theta_mle(n, l, cap);
    values.push(th);
    (values, degenerate || d)
}

fn make_theta<F: Real>(values: Vec<F>, r: usize, t_max: usize) -> Result<ThetaVector<F>> {
    if r == t_max {
        ThetaVector::new(values)
    } else {
        ThetaVector::tied(values)
    }
}

/// Alternating minimization for the tied model
/// `Θ_r = (θ_1, …, θ_{r−1}, θ_r, θ_r, …)`. `r = 1` is the single-parameter
/// model and `r = t_max` the fully parameterized one.
pub fn fit_tied<F: Real>(
    stats: &SuffStats<F>,
    r: usize,
    init: Option<&ThetaVector<F>>,
    options: &FitOptions<F>,
) -> Result<FitResult<F>> {
    let t_max = stats.t_max();
    if t_max == 0 {
        return Err(Error::EmptyData);
    }
    if r == 0 || r > t_max {
        return Err(Error::InvalidTying { r, t_max });
    }
    let mut theta = match init {
        Some(th) => {
            th.check_covers(t_max)?;
            let v: Vec<F> = (1..=r).map(|j| th.at(j)).collect();
            make_theta(v, r, t_max)?
        }
        None => make_theta(vec![F::one(); r], r, t_max)?,
    };
    let counts = rank_counts(stats);

    let mut sigma: Option<CentralOrdering> = None;
    let mut trace = Vec::new();
    let mut exact = false;
    let mut degenerate = false;
    let mut converged = false;
    let mut iterations = 0;
    let mut last_j = F::infinity();
    while iterations < options.max_iter {
        iterations += 1;
        let found = sigma_step(stats, Some(&theta), sigma.as_ref(), options)?;
        exact = found.optimal;
        let costs = stats.per_rank_costs(&found.sigma)?;
        sigma = Some(found.sigma);
        let (values, d) = theta_step(&costs, &counts, r, options.theta_cap);
        degenerate = d;
        theta = make_theta(values, r, t_max)?;
        let j = objective(&costs, &counts, &theta);
        trace.push(j);
        if (last_j - j).abs() < options.tol * (F::one() + j.abs()) {
            converged = true;
            break;
        }
        last_j = j;
    }
    let neg_log_lik = *trace.last().expect("at least one iteration");
    Ok(FitResult {
        params: IgmParams::new(sigma.expect("at least one iteration"), theta),
        neg_log_lik,
        iterations,
        converged,
        exact_sigma: exact,
        degenerate,
        j_trace: trace,
    })
}

/// Fully parameterized model: one θ_j per observed rank.
pub fn fit_general_theta<F: Real>(
    stats: &SuffStats<F>,
    init: Option<&ThetaVector<F>>,
    options: &FitOptions<F>,
) -> Result<FitResult<F>> {
    if let Some(th) = init {
        for j in 1..=stats.t_max().min(th.values().len()) {
            let v = th.at(j);
            if !(v > F::zero()) {
                return Err(Error::NonPositiveTheta { rank: j, value: v.f64() });
            }
        }
    }
    fit_tied(stats, stats.t_max(), init, options)
}

#[derive(Debug, Clone)]
pub struct BicSelection<F> {
    pub chosen: usize,
    /// `(r, bic, fit)` per candidate, in the order given.
    pub fits: Vec<(usize, F, FitResult<F>)>,
}

impl<F: Real> BicSelection<F> {
    pub fn chosen_fit(&self) -> &FitResult<F> {
        &self
            .fits
            .iter()
            .find(|(r, _, _)| *r == self.chosen)
            .expect("chosen is a candidate")
            .2
    }
}

/// `−2 ln L + k ln N` with `k = r` free dispersion parameters.
pub fn bic<F: Real>(fit: &FitResult<F>, r: usize, n: F) -> F {
    F::of(2.0) * fit.neg_log_lik + F::of_usize(r) * n.ln()
}

/// Fits every tied model in `candidates` and picks the smallest BIC; ties
/// go to the smaller `r`.
pub fn bic_select<F: Real>(
    stats: &SuffStats<F>,
    candidates: &[usize],
    options: &FitOptions<F>,
) -> Result<BicSelection<F>> {
    if candidates.is_empty() {
        return Err(Error::Domain("no candidate models".into()));
    }
    let n = stats.num_orderings();
    let mut fits = Vec::with_capacity(candidates.len());
    for &r in candidates {
        let fit = if r == 1 {
            fit_single_theta(stats, options)?
        } else {
            fit_tied(stats, r, None, options)?
        };
        fits.push((r, bic(&fit, r, n), fit));
    }
    let chosen = fits
        .iter()
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap_or(std::cmp::Ordering::Equal).then(a.0.cmp(&b.0)))
        .map(|f| f.0)
        .expect("non-empty");
    Ok(BicSelection { chosen, fits })
}
