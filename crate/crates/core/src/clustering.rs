//! Clustering of top-t orderings: exponential blurring mean shift, plus
//! K-means and EM mixture baselines and a matching-based error metric.
//!
//! Blurring mean shift moves every ordering to the consensus of its
//! kernel-weighted neighbourhood, truncated back to length `t`, until no
//! ordering moves. Orderings that coincide at the end form a cluster.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use pathfinding::kuhn_munkres::kuhn_munkres;
use pathfinding::matrix::Matrix;
use rand::seq::index::sample;
use rand::Rng as _;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::consensus::{
    bbound_r, order_in_view, search_with_warm_start, BranchBoundOptions, DenseCost, SearchOutcome,
    Searcher, SparseCost,
};
use crate::error::{Error, Result};
use crate::estimation::theta_mle;
use crate::model::{log_prob, IgmParams, ThetaVector};
use crate::rankings::{kendall_topt, CentralOrdering, ItemId, TopTOrdering};
use crate::scalar::Real;

/// Hard clustering of a dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Clustering {
    /// Cluster label of every input point.
    pub assignment: Vec<usize>,
    /// Representative ordering of every label.
    pub representatives: Vec<TopTOrdering>,
}

impl Clustering {
    pub fn num_clusters(&self) -> usize {
        self.representatives.len()
    }

    /// Point counts per label.
    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.representatives.len()];
        for &l in &self.assignment {
            sizes[l] += 1;
        }
        sizes
    }
}

/// `t e^{−θ}/(1 − e^{−θ}) − Σ_{j=1}^{t} j e^{−jθ}/(1 − e^{−jθ})`, the mean
/// Kendall distance to the center of a Mallows model over `t` items.
pub fn scale_rhs<F: Real>(theta: F, t: usize) -> F {
    let mut sum = F::zero();
    for j in 1..=t {
        let jf = F::of_usize(j);
        sum += jf / (jf * theta).exp_m1();
    }
    F::of_usize(t) / theta.exp_m1() - sum
}

/// Kernel scale solving `scale_rhs(θ, t) = avg`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScaleSolution<F> {
    pub theta: F,
    /// `avg` fell outside `(0, t(t−1)/4)` and θ was set to a bound.
    pub clamped: bool,
}

pub const SCALE_BOUNDS: (f64, f64) = (1e-6, 50.0);

pub fn solve_scale<F: Real>(avg: F, t: usize) -> Result<ScaleSolution<F>> {
    solve_scale_within(avg, t, F::of(SCALE_BOUNDS.0), F::of(SCALE_BOUNDS.1))
}

/// Bisection on `[lo, hi]` to `|Δθ| ≤ 10⁻¹⁰`; the right-hand side is
/// strictly decreasing in θ.
pub fn solve_scale_within<F: Real>(avg: F, t: usize, lo: F, hi: F) -> Result<ScaleSolution<F>> {
    if t < 2 {
        return Err(Error::ScaleUndefined(t));
    }
    if !(avg > scale_rhs(hi, t)) {
        return Ok(ScaleSolution { theta: hi, clamped: true });
    }
    if !(avg < scale_rhs(lo, t)) {
        return Ok(ScaleSolution { theta: lo, clamped: true });
    }
    let (mut a, mut b) = (lo, hi);
    let tol = F::of(1e-10).max(F::epsilon() * F::of(4.0));
    while b - a > tol {
        let mid = (a + b) / F::of(2.0);
        if mid <= a || mid >= b {
            break;
        }
        if scale_rhs(mid, t) > avg {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok(ScaleSolution {
        theta: (a + b) / F::of(2.0),
        clamped: false,
    })
}

/// How the blurring step picks its kernel scale each round.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScaleRule {
    /// Solve the scale equation with the mean distance over pairs of
    /// distinct orderings.
    Literal,
    /// Same, with pairs weighted by multiplicities.
    CountWeighted,
    /// Use a fixed θ.
    Fixed(f64),
}

#[derive(Debug, Clone, Copy)]
pub struct EbmsOptions {
    pub scale: ScaleRule,
    pub max_iter: usize,
    /// Neighbourhoods over at most this many items are solved exactly.
    pub exact_max_items: usize,
    /// Searcher for larger neighbourhoods.
    pub searcher: Searcher,
    /// Neighbours whose weight is below this fraction of the largest weight
    /// are left out of the consensus.
    pub weight_floor: f64,
}

impl Default for EbmsOptions {
    fn default() -> Self {
        Self {
            scale: ScaleRule::Literal,
            max_iter: 100,
            exact_max_items: 12,
            searcher: Searcher::SortRows,
            weight_floor: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct EbmsRound {
    pub distinct: usize,
    pub mean_distance: f64,
    pub theta: f64,
    pub clamped: bool,
    pub moved: usize,
}

#[derive(Debug, Clone)]
pub struct EbmsResult {
    pub clustering: Clustering,
    /// Shift rounds run, including the final one in which nothing moved.
    pub iterations: usize,
    pub converged: bool,
    /// Stopped because a configuration repeated.
    pub cycled: bool,
    pub rounds: Vec<EbmsRound>,
}

/// Distinct orderings (sorted), their multiplicities and each point's index.
fn dedupe(points: &[TopTOrdering]) -> (Vec<TopTOrdering>, Vec<usize>, Vec<usize>) {
    let mut index: BTreeMap<&TopTOrdering, usize> = BTreeMap::new();
    for p in points {
        index.insert(p, 0);
    }
    let distinct: Vec<TopTOrdering> = index.keys().map(|&p| p.clone()).collect();
    for (k, v) in index.values_mut().enumerate() {
        *v = k;
    }
    let mut counts = vec![0usize; distinct.len()];
    let of_point: Vec<usize> = points
        .iter()
        .map(|p| {
            let k = index[p];
            counts[k] += 1;
            k
        })
        .collect();
    (distinct, counts, of_point)
}

/// Symmetric matrix of `kendall_topt`, computed row-parallel.
pub fn pairwise_distances(points: &[TopTOrdering]) -> Vec<Vec<u64>> {
    let n = points.len();
    let upper: Vec<Vec<u64>> = (0..n)
        .into_par_iter()
        .map(|i| (i + 1..n).map(|j| kendall_topt(&points[i], &points[j])).collect())
        .collect();
    let mut d = vec![vec![0u64; n]; n];
    for i in 0..n {
        for (off, &v) in upper[i].iter().enumerate() {
            let j = i + 1 + off;
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    d
}

fn check_equal_lengths(data: &[TopTOrdering]) -> Result<usize> {
    let t = data.first().ok_or(Error::EmptyData)?.len();
    if let Some(p) = data.iter().find(|p| p.len() != t) {
        return Err(Error::UnequalLengths { expected: t, found: p.len() });
    }
    Ok(t)
}

/// Consensus of weighted orderings: exact for small item sets, otherwise
/// `searcher` over a sparse view.
fn weighted_consensus(
    data: &[TopTOrdering],
    weights: &[f64],
    exact_max_items: usize,
    searcher: Searcher,
) -> SearchOutcome<f64> {
    let items: Vec<ItemId> = data
        .iter()
        .zip(weights)
        .filter(|(_, &w)| w > 0.0)
        .flat_map(|(p, _)| p.items().iter().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    if items.len() <= exact_max_items {
        let view = DenseCost::from_weighted_orderings(&items, data, weights);
        return bbound_r(&view, BranchBoundOptions::default());
    }
    if items.len() <= DENSE_LIMIT {
        searcher.run(&DenseCost::from_weighted_orderings(&items, data, weights))
    } else {
        searcher.run(&SparseCost::from_weighted_orderings(&items, data, weights))
    }
}

/// Largest item count for which neighbourhood costs are tabulated densely.
const DENSE_LIMIT: usize = 2_000;

fn mean_distance(d: &[Vec<u64>], counts: &[usize], weighted: bool) -> f64 {
    let n = d.len();
    let (mut sum, mut pairs) = (0.0, 0.0);
    for i in 0..n {
        for j in i + 1..n {
            let w = if weighted { (counts[i] * counts[j]) as f64 } else { 1.0 };
            sum += w * d[i][j] as f64;
            pairs += w;
        }
    }
    if weighted {
        // pairs of identical orderings contribute distance zero
        pairs += counts.iter().map(|&c| (c * c.saturating_sub(1) / 2) as f64).sum::<f64>();
    }
    if pairs > 0.0 {
        sum / pairs
    } else {
        0.0
    }
}

/// Row-normalized kernel weights `α_ij ∝ exp(−θ d_ij)`.
pub fn kernel_weights(d: &[Vec<u64>], theta: f64) -> Vec<Vec<f64>> {
    d.par_iter()
        .map(|row| {
            // every row holds a zero on the diagonal, so the max term is 1
            let w: Vec<f64> = row.iter().map(|&x| (-theta * x as f64).exp()).collect();
            let total: f64 = w.iter().sum();
            w.into_iter().map(|x| x / total).collect()
        })
        .collect()
}

/// Exponential blurring mean shift over orderings of a common length `t`.
pub fn ebms(data: &[TopTOrdering], options: &EbmsOptions) -> Result<EbmsResult> {
    let t = check_equal_lengths(data)?;
    if t < 2 && !matches!(options.scale, ScaleRule::Fixed(_)) {
        return Err(Error::ScaleUndefined(t));
    }
    let mut points = data.to_vec();
    let mut seen: HashSet<Vec<TopTOrdering>> = HashSet::new();
    seen.insert(points.clone());
    let mut rounds = Vec::new();
    let mut converged = false;
    let mut cycled = false;

    while rounds.len() < options.max_iter {
        let (distinct, counts, of_point) = dedupe(&points);
        let d = pairwise_distances(&distinct);
        let (mean, solution) = match options.scale {
            ScaleRule::Fixed(theta) => (mean_distance(&d, &counts, false), ScaleSolution { theta, clamped: false }),
            ScaleRule::Literal | ScaleRule::CountWeighted => {
                let mean = mean_distance(&d, &counts, options.scale == ScaleRule::CountWeighted);
                (mean, solve_scale(mean, t)?)
            }
        };
        let alpha = kernel_weights(&d, solution.theta);
        let shifted: Vec<TopTOrdering> = (0..distinct.len())
            .into_par_iter()
            .map(|i| {
                let mut w: Vec<f64> = alpha[i].iter().zip(&counts).map(|(&a, &n)| a * n as f64).collect();
                let cut = w.iter().copied().fold(0.0, f64::max) * options.weight_floor;
                for x in &mut w {
                    if *x < cut {
                        *x = 0.0;
                    }
                }
                weighted_consensus(&distinct, &w, options.exact_max_items, options.searcher)
                    .sigma
                    .top(t)
            })
            .collect();
        let moved = shifted.iter().zip(&distinct).filter(|(a, b)| a != b).count();
        rounds.push(EbmsRound {
            distinct: distinct.len(),
            mean_distance: mean,
            theta: solution.theta,
            clamped: solution.clamped,
            moved,
        });
        if moved == 0 {
            converged = true;
            break;
        }
        points = of_point.iter().map(|&k| shifted[k].clone()).collect();
        if !seen.insert(points.clone()) {
            cycled = true;
            break;
        }
    }

    let (distinct, _, of_point) = dedupe(&points);
    Ok(EbmsResult {
        clustering: Clustering {
            assignment: of_point,
            representatives: distinct,
        },
        iterations: rounds.len(),
        converged,
        cycled,
        rounds,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct KMeansOptions {
    /// Independent initializations; the lowest objective wins.
    pub restarts: usize,
    pub max_iter: usize,
    pub exact_max_items: usize,
    pub searcher: Searcher,
}

impl Default for KMeansOptions {
    fn default() -> Self {
        Self {
            restarts: 10,
            max_iter: 100,
            exact_max_items: 12,
            searcher: Searcher::SortRows,
        }
    }
}

#[derive(Debug, Clone)]
pub struct KMeansResult {
    pub clustering: Clustering,
    /// Sum of distances from points to their centers.
    pub objective: u64,
    pub iterations: usize,
    /// Objective after every assignment step of the winning run.
    pub objective_trace: Vec<u64>,
    /// Empty clusters re-seeded in the winning run.
    pub reseeded: usize,
}

fn max_len(data: &[TopTOrdering]) -> usize {
    data.iter().map(TopTOrdering::len).max().unwrap_or(0)
}

fn assign(data: &[TopTOrdering], centers: &[TopTOrdering]) -> (Vec<usize>, Vec<u64>) {
    data.par_iter()
        .map(|p| {
            let mut best = (u64::MAX, 0);
            for (k, c) in centers.iter().enumerate() {
                let d = kendall_topt(p, c);
                if d < best.0 {
                    best = (d, k);
                }
            }
            (best.1, best.0)
        })
        .unzip()
}

fn kmeans_run(data: &[TopTOrdering], k: usize, rng: &mut ChaCha8Rng, options: &KMeansOptions) -> KMeansResult {
    let t = max_len(data);
    let (distinct, _, _) = dedupe(data);
    let mut centers: Vec<TopTOrdering> = sample(rng, distinct.len(), k)
        .into_iter()
        .map(|i| distinct[i].clone())
        .collect();
    let (mut labels, mut dist) = assign(data, &centers);
    let mut trace = vec![dist.iter().sum::<u64>()];
    let mut reseeded = 0;
    let mut iterations = 0;
    while iterations < options.max_iter {
        iterations += 1;
        // re-seed empty clusters from the farthest points
        let mut sizes = vec![0usize; k];
        for &l in &labels {
            sizes[l] += 1;
        }
        for c in 0..k {
            if sizes[c] == 0 {
                let far = (0..data.len())
                    .filter(|&i| sizes[labels[i]] > 1)
                    .max_by(|&a, &b| dist[a].cmp(&dist[b]).then(b.cmp(&a)));
                if let Some(i) = far {
                    sizes[labels[i]] -= 1;
                    sizes[c] = 1;
                    labels[i] = c;
                    dist[i] = 0;
                    centers[c] = data[i].clone();
                    reseeded += 1;
                }
            }
        }
        // center update, kept only when it does not raise the cluster's cost
        let updates: Vec<Option<TopTOrdering>> = (0..k)
            .into_par_iter()
            .map(|c| {
                let w: Vec<f64> = labels.iter().map(|&l| if l == c { 1.0 } else { 0.0 }).collect();
                if w.iter().all(|&x| x == 0.0) {
                    return None;
                }
                let found = weighted_consensus(data, &w, options.exact_max_items, options.searcher);
                let candidate = found.sigma.top(t);
                let members = || data.iter().zip(&labels).filter(|(_, &l)| l == c).map(|(p, _)| p);
                let new_cost: u64 = members().map(|p| kendall_topt(p, &candidate)).sum();
                let old_cost: u64 = members().map(|p| kendall_topt(p, &centers[c])).sum();
                (new_cost <= old_cost).then_some(candidate)
            })
            .collect();
        for (c, u) in updates.into_iter().enumerate() {
            if let Some(u) = u {
                centers[c] = u;
            }
        }
        let (next, next_dist) = assign(data, &centers);
        trace.push(next_dist.iter().sum());
        let stable = next == labels;
        labels = next;
        dist = next_dist;
        if stable {
            break;
        }
    }
    let objective = dist.iter().sum();
    KMeansResult {
        clustering: Clustering {
            assignment: labels,
            representatives: centers,
        },
        objective,
        iterations,
        objective_trace: trace,
        reseeded,
    }
}

/// K-means under `kendall_topt`, with centers initialized at `k` distinct
/// random data points and updated to the consensus of their members.
pub fn kmeans(data: &[TopTOrdering], k: usize, seed: u64, options: &KMeansOptions) -> Result<KMeansResult> {
    if k == 0 {
        return Err(Error::NoClusters);
    }
    if data.is_empty() {
        return Err(Error::EmptyData);
    }
    let distinct = dedupe(data).0.len();
    if distinct < k {
        return Err(Error::Domain(format!("{k} clusters requested but only {distinct} distinct orderings")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut best: Option<KMeansResult> = None;
    for _ in 0..options.restarts.max(1) {
        let mut run_rng = ChaCha8Rng::seed_from_u64(rng.random());
        let run = kmeans_run(data, k, &mut run_rng, options);
        if best.as_ref().is_none_or(|b| run.objective < b.objective) {
            best = Some(run);
        }
    }
    Ok(best.expect("at least one restart"))
}

#[derive(Debug, Clone, Copy)]
pub struct EmOptions {
    pub max_iter: usize,
    /// Stop when the log-likelihood changes by less than this.
    pub tol: f64,
    /// Components whose weight falls below this are dropped.
    pub min_weight: f64,
    pub theta_cap: f64,
    pub exact_max_items: usize,
    pub searcher: Searcher,
    pub kmeans: KMeansOptions,
}

impl Default for EmOptions {
    fn default() -> Self {
        Self {
            max_iter: 100,
            tol: 1e-6,
            min_weight: 1e-6,
            theta_cap: 50.0,
            exact_max_items: 12,
            searcher: Searcher::SortRows,
            kmeans: KMeansOptions::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct EmResult {
    pub clustering: Clustering,
    pub weights: Vec<f64>,
    pub params: Vec<IgmParams<f64>>,
    /// `responsibilities[i][k]`.
    pub responsibilities: Vec<Vec<f64>>,
    pub log_lik_trace: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    /// Components removed for vanishing weight.
    pub dropped: usize,
}

struct Component {
    weight: f64,
    params: IgmParams<f64>,
}

/// M-step for one component: consensus of the responsibility-weighted data
/// over every observed item, then `θ = ln(1 + T/L)`.
fn fit_component(
    data: &[TopTOrdering],
    items: &[ItemId],
    resp: &[f64],
    warm: Option<&CentralOrdering>,
    options: &EmOptions,
) -> Result<Component> {
    let n = data.len() as f64;
    let mass: f64 = resp.iter().sum();
    let total: f64 = data.iter().zip(resp).map(|(p, &r)| r * p.len() as f64).sum();
    let found = if items.len() <= options.exact_max_items {
        bbound_r(
            &DenseCost::from_weighted_orderings(items, data, resp),
            BranchBoundOptions::default(),
        )
    } else if items.len() <= DENSE_LIMIT {
        let view = DenseCost::from_weighted_orderings(items, data, resp);
        let warm_order = warm.map(|s| order_in_view(&view, s));
        search_with_warm_start(options.searcher, &view, warm_order.as_deref())
    } else {
        let view = SparseCost::from_weighted_orderings(items, data, resp);
        let warm_order = warm.map(|s| order_in_view(&view, s));
        search_with_warm_start(options.searcher, &view, warm_order.as_deref())
    };
    let (theta, _) = theta_mle(total, found.cost, options.theta_cap);
    Ok(Component {
        weight: mass / n,
        params: IgmParams::new(found.sigma, ThetaVector::constant(theta)?),
    })
}

fn log_sum_exp(v: &[f64]) -> f64 {
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

/// Responsibilities and observed-data log-likelihood.
fn e_step(data: &[TopTOrdering], comps: &[Component]) -> Result<(Vec<Vec<f64>>, f64)> {
    let rows: Vec<Result<(Vec<f64>, f64)>> = data
        .par_iter()
        .map(|p| {
            let mut lp = Vec::with_capacity(comps.len());
            for c in comps {
                lp.push(c.weight.ln() + log_prob(p, &c.params)?);
            }
            let z = log_sum_exp(&lp);
            Ok((lp.iter().map(|x| (x - z).exp()).collect(), z))
        })
        .collect();
    let mut resp = Vec::with_capacity(data.len());
    let mut ll = 0.0;
    for r in rows {
        let (row, z) = r?;
        resp.push(row);
        ll += z;
    }
    Ok((resp, ll))
}

/// EM for a K-component mixture of single-θ models, started from the K-means
/// partition.
pub fn em_mixture(data: &[TopTOrdering], k: usize, seed: u64, options: &EmOptions) -> Result<EmResult> {
    let init = kmeans(data, k, seed, &options.kmeans)?;
    let items: Vec<ItemId> = data
        .iter()
        .flat_map(|p| p.items().iter().copied())
        .collect::<BTreeSet<_>>()
        .into_iter()
        .collect();
    let mut resp: Vec<Vec<f64>> = init
        .clustering
        .assignment
        .iter()
        .map(|&l| (0..k).map(|c| if c == l { 1.0 } else { 0.0 }).collect())
        .collect();
    let mut comps: Vec<Component> = Vec::new();
    let mut trace = Vec::new();
    let mut dropped = 0;
    let mut converged = false;
    let mut iterations = 0;
    while iterations < options.max_iter {
        iterations += 1;
        let kk = resp.first().map_or(0, Vec::len);
        let next: Vec<Result<Component>> = (0..kk)
            .into_par_iter()
            .map(|c| {
                let r: Vec<f64> = resp.iter().map(|row| row[c]).collect();
                let warm = comps.get(c).map(|comp| &comp.params.sigma);
                fit_component(data, &items, &r, warm, options)
            })
            .collect();
        let mut fitted = Vec::with_capacity(kk);
        for c in next {
            let c = c?;
            if c.weight < options.min_weight {
                dropped += 1;
            } else {
                fitted.push(c);
            }
        }
        if fitted.is_empty() {
            return Err(Error::Domain("every mixture component collapsed".into()));
        }
        let norm: f64 = fitted.iter().map(|c| c.weight).sum();
        for c in &mut fitted {
            c.weight /= norm;
        }
        comps = fitted;
        let (r, ll) = e_step(data, &comps)?;
        resp = r;
        let done = trace.last().is_some_and(|&prev: &f64| (ll - prev).abs() < options.tol);
        trace.push(ll);
        if done {
            converged = true;
            break;
        }
    }
    let t = max_len(data);
    let assignment = resp
        .iter()
        .map(|row| {
            row.iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (c, &v)| if v > best.1 { (c, v) } else { best })
                .0
        })
        .collect();
    Ok(EmResult {
        clustering: Clustering {
            assignment,
            representatives: comps.iter().map(|c| c.params.sigma.top(t)).collect(),
        },
        weights: comps.iter().map(|c| c.weight).collect(),
        params: comps.into_iter().map(|c| c.params).collect(),
        responsibilities: resp,
        log_lik_trace: trace,
        iterations,
        converged,
        dropped,
    })
}

/// `1 −` the accuracy of the best one-to-one matching between predicted and
/// true labels.
pub fn classification_error(predicted: &[usize], truth: &[usize]) -> Result<f64> {
    if predicted.len() != truth.len() {
        return Err(Error::ClusteringSizeMismatch(predicted.len(), truth.len()));
    }
    if predicted.is_empty() {
        return Ok(0.0);
    }
    let relabel = |labels: &[usize]| {
        let map: BTreeMap<usize, usize> = labels
            .iter()
            .copied()
            .collect::<BTreeSet<_>>()
            .into_iter()
            .enumerate()
            .map(|(k, l)| (l, k))
            .collect();
        let dense: Vec<usize> = labels.iter().map(|l| map[l]).collect();
        (dense, map.len())
    };
    let (p, np) = relabel(predicted);
    let (t, nt) = relabel(truth);
    // kuhn_munkres needs rows <= columns
    let (rows, cols, transpose) = if np <= nt { (np, nt, false) } else { (nt, np, true) };
    let mut m = Matrix::new(rows, cols, 0i64);
    for (&a, &b) in p.iter().zip(&t) {
        let (r, c) = if transpose { (b, a) } else { (a, b) };
        m[(r, c)] += 1;
    }
    let (matched, _) = kuhn_munkres(&m);
    Ok(1.0 - matched as f64 / predicted.len() as f64)
}
