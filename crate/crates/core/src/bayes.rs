//! Conjugate prior for `(σ, θ)`: hyperparameter checks, posterior update,
//! the conditional law of each `θ_j` given σ, and σ scoring with θ
//! integrated out.
//!
//! A prior carries a strength `ν`, a first-rank location `λ_1` and, for each
//! rank `j ≥ 2`, a non-negative precedence matrix `Λ_j` of total mass
//! `j − 1`. They stand for pseudo-counts: `λ_1` plays `q_1 / N` and `Λ_j`
//! plays `Q_j / N`, so that `R_j⁰ = ρ_j 1ᵀ − Λ_j` with `ρ_j = Λ_j 1 / (j − 1)`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::beta::ln_beta;
use thiserror::Error;

use crate::error::{Error, Result};
use crate::model::{ln_psi, ThetaVector};
use crate::rankings::{CentralOrdering, Dictionary, ItemId, TopTOrdering};
use crate::scalar::Real;
use crate::suff_stats::{PrecedenceCounts, SuffStats};

/// Hyperparameters `{ν, λ_1, Λ_2, …, Λ_t}`.
#[derive(Debug, Clone, PartialEq)]
pub struct PriorHyper<F> {
    pub nu: F,
    pub lambda1: BTreeMap<ItemId, F>,
    /// `lambdas[k]` is `Λ_{k+2}`; entry `(i, i')` stands for `i` observed
    /// with `i'` before it.
    pub lambdas: Vec<BTreeMap<(ItemId, ItemId), F>>,
}

/// A violated prior condition.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum PriorViolation {
    #[error("strength nu must be finite and positive, got {0}")]
    Strength(f64),
    #[error("lambda1[{item}] = {value} is negative")]
    NegativeLambda1 { item: ItemId, value: f64 },
    #[error("Lambda_{rank}[{i},{i_prime}] = {value} is negative")]
    NegativeLambda { rank: usize, i: ItemId, i_prime: ItemId, value: f64 },
    #[error("Lambda_{rank} has total mass {mass}, expected {expected}")]
    Mass { rank: usize, mass: f64, expected: f64 },
}

impl<F: Real> PriorHyper<F> {
    /// Rank horizon `t`.
    pub fn t(&self) -> usize {
        self.lambdas.len() + 1
    }

    /// Uniform prior over `support`: `λ_1 = 1/m` and `Λ_j = (j − 1)/m²`
    /// everywhere on the `m × m` support.
    pub fn uniform(nu: F, t: usize, support: &[ItemId]) -> Self {
        let m = F::of_usize(support.len());
        let lambda1 = support.iter().map(|&i| (i, F::one() / m)).collect();
        let lambdas = (2..=t)
            .map(|j| {
                let v = F::of_usize(j - 1) / (m * m);
                support
                    .iter()
                    .flat_map(|&i| support.iter().map(move |&k| ((i, k), v)))
                    .collect()
            })
            .collect();
        Self { nu, lambda1, lambdas }
    }

    /// `R_j⁰` as counts: `q = λ_1` for `j = 1`, otherwise `q = ρ_j`,
    /// `Q = Λ_j`.
    pub fn location(&self, j: usize) -> Result<PrecedenceCounts<F>> {
        if j == 0 || j > self.t() {
            return Err(Error::RankOutOfRange(j));
        }
        let mut counts = PrecedenceCounts::default();
        if j == 1 {
            counts.q = self.lambda1.clone();
            return Ok(counts);
        }
        let scale = F::of_usize(j - 1);
        for (&(i, k), &v) in &self.lambdas[j - 2] {
            *counts.q.entry(i).or_insert_with(F::zero) += v / scale;
            counts.pairs.insert((i, k), v);
        }
        Ok(counts)
    }
}

/// Checks the stated prior conditions; an empty report means valid.
pub fn validate_prior<F: Real>(h: &PriorHyper<F>) -> Vec<PriorViolation> {
    let mut out = Vec::new();
    if !(h.nu.is_finite() && h.nu > F::zero()) {
        out.push(PriorViolation::Strength(h.nu.f64()));
    }
    for (&item, &v) in &h.lambda1 {
        if !(v >= F::zero()) {
            out.push(PriorViolation::NegativeLambda1 { item, value: v.f64() });
        }
    }
    for (k, lambda) in h.lambdas.iter().enumerate() {
        let rank = k + 2;
        let mut mass = 0.0;
        for (&(i, i_prime), &v) in lambda {
            if !(v >= F::zero()) {
                out.push(PriorViolation::NegativeLambda { rank, i, i_prime, value: v.f64() });
            }
            mass += v.f64();
        }
        let expected = (rank - 1) as f64;
        if (mass - expected).abs() > 1e-9 {
            out.push(PriorViolation::Mass { rank, mass, expected });
        }
    }
    out
}

fn ensure_valid<F: Real>(h: &PriorHyper<F>) -> Result<()> {
    match validate_prior(h).first() {
        Some(v) => Err(Error::InvalidPrior(v.to_string())),
        None => Ok(()),
    }
}

/// Posterior hyperparameters:
/// `{ν + N, (νλ_1 + q_1)/(ν + N), (νΛ_j + Q_j)/(ν + N)}`.
///
/// Every ordering must reach rank `t`; ranks beyond `t` are ignored.
pub fn posterior_update<F: Real>(h: &PriorHyper<F>, stats: &SuffStats<F>) -> Result<PriorHyper<F>> {
    ensure_valid(h)?;
    let t = h.t();
    let n = stats.num_orderings();
    for j in 1..=t {
        if stats.n_at(j) != n {
            return Err(Error::InvalidPrior(format!(
                "every ordering must have length at least {t} to update this prior"
            )));
        }
    }
    let nu_post = h.nu + n;
    let blend = |prior: F, data: F| (h.nu * prior + data) / nu_post;

    let first = &stats.rank(1)?.counts;
    let mut lambda1 = BTreeMap::new();
    for &item in h.lambda1.keys().chain(first.q.keys()) {
        let prior = h.lambda1.get(&item).copied().unwrap_or_else(F::zero);
        let data = first.q.get(&item).copied().unwrap_or_else(F::zero);
        lambda1.insert(item, blend(prior, data));
    }
    let mut lambdas = Vec::with_capacity(t - 1);
    for (k, lambda) in h.lambdas.iter().enumerate() {
        let data = &stats.rank(k + 2)?.counts.pairs;
        let mut next = BTreeMap::new();
        for &key in lambda.keys().chain(data.keys()) {
            let prior = lambda.get(&key).copied().unwrap_or_else(F::zero);
            let d = data.get(&key).copied().unwrap_or_else(F::zero);
            next.insert(key, blend(prior, d));
        }
        lambdas.push(next);
    }
    Ok(PriorHyper {
        nu: nu_post,
        lambda1,
        lambdas,
    })
}

/// [`posterior_update`] from raw orderings; no data leaves `h` unchanged.
pub fn posterior_update_data<F: Real>(h: &PriorHyper<F>, data: &[TopTOrdering]) -> Result<PriorHyper<F>> {
    if data.is_empty() {
        ensure_valid(h)?;
        return Ok(h.clone());
    }
    posterior_update(h, &SuffStats::accumulate(data)?)
}

/// `S_j*(σ) = L_σ(νR_j⁰ + R_j)` for `j = 1..t`, and the strength `ν + N`.
#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary<F> {
    pub s_star: Vec<F>,
    pub strength: F,
}

/// Posterior summary given a candidate σ. Prior support outside σ's prefix
/// is ranked by the tail rule; observed items must be in the prefix.
pub fn posterior_summary<F: Real>(
    h: &PriorHyper<F>,
    stats: Option<&SuffStats<F>>,
    sigma: &CentralOrdering,
) -> Result<PosteriorSummary<F>> {
    ensure_valid(h)?;
    let data_costs = match stats {
        Some(s) => s.per_rank_costs(sigma)?,
        None => Vec::new(),
    };
    let mut s_star = Vec::with_capacity(h.t());
    for j in 1..=h.t() {
        let prior = h.location(j)?.lower_triangle_cost_unchecked(sigma);
        let data = data_costs.get(j - 1).copied().unwrap_or_else(F::zero);
        s_star.push(h.nu * prior + data);
    }
    let n = stats.map_or_else(F::zero, |s| s.num_orderings());
    Ok(PosteriorSummary {
        s_star,
        strength: h.nu + n,
    })
}

/// Unnormalized prior log density
/// `−Σ_j [ν θ_j L_σ(R_j⁰) + ν ln ψ(θ_j)]`.
pub fn log_prior_density<F: Real>(h: &PriorHyper<F>, sigma: &CentralOrdering, theta: &ThetaVector<F>) -> Result<F> {
    theta.check_covers(h.t())?;
    let mut total = F::zero();
    for j in 1..=h.t() {
        let th = theta.at(j);
        let l = h.location(j)?.lower_triangle_cost_unchecked(sigma);
        total -= h.nu * (th * l + ln_psi(th));
    }
    Ok(total)
}

/// `−S*·θ + strength·ln(1 − e^{−θ})`.
pub fn theta_conditional_logpdf<F: Real>(theta: F, s_star: F, strength: F) -> Result<F> {
    if !(theta > F::zero()) {
        return Err(Error::NonPositiveTheta { rank: 0, value: theta.f64() });
    }
    Ok(-s_star * theta - strength * ln_psi(theta))
}

/// Normalized form: under `x = e^{−θ}` the density is
/// `x^{S*−1}(1 − x)^{strength} / B(S*, strength + 1)`.
pub fn theta_conditional_logpdf_normalized<F: Real>(theta: F, s_star: F, strength: F) -> Result<F> {
    if !(s_star > F::zero()) {
        return Err(Error::Domain(format!("S* must be positive for a proper density, got {s_star}")));
    }
    let unnorm = theta_conditional_logpdf(theta, s_star, strength)?;
    Ok(unnorm - F::of(ln_beta(s_star.f64(), strength.f64() + 1.0)))
}

/// Mode `ln(1 + strength / S*)`; `None` when `S* = 0` and the density
/// increases without bound.
pub fn theta_mode<F: Real>(s_star: F, strength: F) -> Option<F> {
    (s_star > F::zero()).then(|| (strength / s_star).ln_1p())
}

/// Draws `θ = −ln x` with `x ~ Beta(S*, strength + 1)`, using
/// `θ = ln(1 + G_b / G_a)` for independent gammas to stay accurate when `x`
/// is close to 1.
pub fn sample_theta_with<F: Real, R: Rng + ?Sized>(s_star: F, strength: F, rng: &mut R) -> Result<F> {
    if !(s_star > F::zero()) {
        return Err(Error::Domain(format!("S* must be positive to sample θ, got {s_star}")));
    }
    if !(strength >= F::zero()) {
        return Err(Error::Domain(format!("strength must be non-negative, got {strength}")));
    }
    let ga = Gamma::new(s_star.f64(), 1.0).map_err(|e| Error::Domain(e.to_string()))?;
    let gb = Gamma::new(strength.f64() + 1.0, 1.0).map_err(|e| Error::Domain(e.to_string()))?;
    let a = ga.sample(rng).max(f64::MIN_POSITIVE);
    let b = gb.sample(rng);
    Ok(F::of((b / a).ln_1p()))
}

pub fn sample_theta<F: Real>(s_star: F, strength: F, seed: u64) -> Result<F> {
    sample_theta_with(s_star, strength, &mut ChaCha8Rng::seed_from_u64(seed))
}

/// `Σ_j ln B(S_j*(σ), 1 + ν + N)`, the log marginal of σ with every θ_j
/// integrated out (up to a σ-independent constant).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SigmaScore<F> {
    /// `+∞` when `improper` is set.
    pub score: F,
    /// Some `S_j* ≤ 0`, so the θ integral diverges.
    pub improper: bool,
}

pub fn sigma_log_score<F: Real>(
    sigma: &CentralOrdering,
    h: &PriorHyper<F>,
    stats: Option<&SuffStats<F>>,
) -> Result<SigmaScore<F>> {
    let summary = posterior_summary(h, stats, sigma)?;
    if summary.s_star.iter().any(|&s| !(s > F::zero())) {
        return Ok(SigmaScore {
            score: F::infinity(),
            improper: true,
        });
    }
    let b = summary.strength.f64() + 1.0;
    let score = summary.s_star.iter().map(|&s| ln_beta(s.f64(), b)).sum::<f64>();
    Ok(SigmaScore {
        score: F::of(score),
        improper: false,
    })
}

/// Serialized prior with string item tokens.
///
/// ```json
/// {"nu": 2.0, "lambda1": [["a", 0.5], ["b", 0.5]],
///  "lambda": [{"rank": 2, "entries": [["a", "b", 1.0]]}]}
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorDocument {
    pub nu: f64,
    pub lambda1: Vec<(String, f64)>,
    #[serde(default)]
    pub lambda: Vec<RankEntries>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankEntries {
    pub rank: usize,
    /// `(i, i', value)`: `i` observed with `i'` before it.
    pub entries: Vec<(String, String, f64)>,
}

impl PriorDocument {
    /// Interns tokens into `dict`. Ranks must run `2..=t` without gaps.
    pub fn to_prior<F: Real>(&self, dict: &mut Dictionary) -> Result<PriorHyper<F>> {
        let lambda1 = self
            .lambda1
            .iter()
            .map(|(tok, v)| (dict.intern(tok), F::of(*v)))
            .collect();
        let mut ranks: Vec<&RankEntries> = self.lambda.iter().collect();
        ranks.sort_by_key(|r| r.rank);
        let mut lambdas = Vec::with_capacity(ranks.len());
        for (k, r) in ranks.iter().enumerate() {
            if r.rank != k + 2 {
                return Err(Error::InvalidPrior(format!(
                    "Lambda ranks must be 2, 3, ... without gaps; found rank {}",
                    r.rank
                )));
            }
            let mut m = BTreeMap::new();
            for (a, b, v) in &r.entries {
                *m.entry((dict.intern(a), dict.intern(b))).or_insert_with(F::zero) += F::of(*v);
            }
            lambdas.push(m);
        }
        Ok(PriorHyper {
            nu: F::of(self.nu),
            lambda1,
            lambdas,
        })
    }

    pub fn from_prior<F: Real>(h: &PriorHyper<F>, dict: &Dictionary) -> Result<Self> {
        let tok = |i: ItemId| {
            dict.token(i)
                .map(str::to_owned)
                .ok_or_else(|| Error::InvalidPrior(format!("item {i} has no token")))
        };
        let lambda1 = h
            .lambda1
            .iter()
            .map(|(&i, &v)| Ok((tok(i)?, v.f64())))
            .collect::<Result<_>>()?;
        let lambda = h
            .lambdas
            .iter()
            .enumerate()
            .map(|(k, m)| {
                Ok(RankEntries {
                    rank: k + 2,
                    entries: m
                        .iter()
                        .map(|(&(a, b), &v)| Ok((tok(a)?, tok(b)?, v.f64())))
                        .collect::<Result<_>>()?,
                })
            })
            .collect::<Result<_>>()?;
        Ok(Self {
            nu: h.nu.f64(),
            lambda1,
            lambda,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{log_likelihood, sample_n, IgmParams};

    fn ids(v: &[u32]) -> Vec<ItemId> {
        v.iter().map(|&i| ItemId(i)).collect()
    }

    #[test]
    fn uniform_prior_is_valid() {
        let h = PriorHyper::<f64>::uniform(1.5, 4, &ids(&[1, 2, 3, 4, 5]));
        assert!(validate_prior(&h).is_empty());
    }

    #[test]
    fn violations_are_reported() {
        let mut h = PriorHyper::<f64>::uniform(1.0, 2, &ids(&[1, 2]));
        h.lambdas[0].insert((ItemId(1), ItemId(2)), -0.25);
        let report = validate_prior(&h);
        assert!(report.iter().any(|v| matches!(v, PriorViolation::NegativeLambda { rank: 2, .. })));

        let mut h = PriorHyper::<f64>::uniform(1.0, 2, &ids(&[1, 2]));
        for v in h.lambdas[0].values_mut() {
            *v *= 2.0;
        }
        assert_eq!(
            validate_prior(&h),
            vec![PriorViolation::Mass { rank: 2, mass: 2.0, expected: 1.0 }]
        );
    }

    #[test]
    fn empty_data_leaves_prior_unchanged() {
        let h = PriorHyper::<f64>::uniform(2.0, 3, &ids(&[1, 2, 3]));
        assert_eq!(posterior_update_data(&h, &[]).unwrap(), h);
    }

    #[test]
    fn posterior_summary_matches_updated_location() {
        let h = PriorHyper::<f64>::uniform(2.0, 3, &ids(&[1, 2, 3, 4]));
        let data = vec![
            TopTOrdering::from_ids(&[1, 2, 3]).unwrap(),
            TopTOrdering::from_ids(&[2, 1, 5]).unwrap(),
            TopTOrdering::from_ids(&[1, 3, 2]).unwrap(),
        ];
        let s = SuffStats::accumulate(&data).unwrap();
        let post = posterior_update(&h, &s).unwrap();
        assert!(validate_prior(&post).is_empty());
        let sigma = CentralOrdering::from_ids(&[1, 2, 3, 5, 4]).unwrap();
        let summary = posterior_summary(&h, Some(&s), &sigma).unwrap();
        assert_eq!(summary.strength, 5.0);
        for j in 1..=3 {
            let from_post = post.nu * post.location(j).unwrap().lower_triangle_cost_unchecked(&sigma);
            assert!((summary.s_star[j - 1] - from_post).abs() < 1e-12);
        }
    }

    #[test]
    fn posterior_minus_prior_form_is_constant() {
        let h = PriorHyper::<f64>::uniform(1.0, 2, &ids(&[1, 2, 3]));
        let data = vec![
            TopTOrdering::from_ids(&[1, 2]).unwrap(),
            TopTOrdering::from_ids(&[3, 1]).unwrap(),
        ];
        let s = SuffStats::accumulate(&data).unwrap();
        let post = posterior_update(&h, &s).unwrap();
        let mut diffs = Vec::new();
        for sigma in [[1, 2, 3], [3, 1, 2], [2, 3, 1]] {
            let sigma = CentralOrdering::from_ids(&sigma).unwrap();
            for th in [[0.3, 0.9], [1.2, 0.4], [2.0, 2.0]] {
                let theta = ThetaVector::new(th.to_vec()).unwrap();
                let joint = log_prior_density(&h, &sigma, &theta).unwrap()
                    + log_likelihood(&s, &IgmParams::new(sigma.clone(), theta.clone())).unwrap();
                diffs.push(joint - log_prior_density(&post, &sigma, &theta).unwrap());
            }
        }
        for d in &diffs {
            assert!((d - diffs[0]).abs() < 1e-9, "{diffs:?}");
        }
    }

    #[test]
    fn mode_matches_closed_form() {
        let (s, n) = (3.0, 10.0);
        let mode = theta_mode(s, n).unwrap();
        let at = |x: f64| theta_conditional_logpdf(x, s, n).unwrap();
        assert!(at(mode) > at(mode - 1e-4));
        assert!(at(mode) > at(mode + 1e-4));
        assert!(theta_mode(0.0, n).is_none());
        assert!(at(5.0) < theta_conditional_logpdf(5.0, 0.0, n).unwrap());
        assert!(theta_conditional_logpdf(0.0, s, n).is_err());
    }

    #[test]
    fn sample_theta_concentrates() {
        let (s, n) = (200.0, 2000.0);
        let target = theta_mode(s, n).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let mean: f64 = (0..2000).map(|_| sample_theta_with(s, n, &mut rng).unwrap()).sum::<f64>() / 2000.0;
        assert!((mean - target).abs() < 0.02);
        assert!(sample_theta(0.0, n, 1).is_err());
    }

    #[test]
    fn swap_symmetric_items_score_equally() {
        let h = PriorHyper::<f64>::uniform(1.0, 3, &ids(&[1, 2, 3, 4]));
        let data = vec![
            TopTOrdering::from_ids(&[1, 2, 3]).unwrap(),
            TopTOrdering::from_ids(&[1, 2, 4]).unwrap(),
        ];
        let s = SuffStats::accumulate(&data).unwrap();
        let a = sigma_log_score(&CentralOrdering::from_ids(&[1, 2, 3, 4]).unwrap(), &h, Some(&s)).unwrap();
        let b = sigma_log_score(&CentralOrdering::from_ids(&[1, 2, 4, 3]).unwrap(), &h, Some(&s)).unwrap();
        assert!(!a.improper);
        assert!((a.score - b.score).abs() < 1e-12);
    }

    #[test]
    fn weak_prior_score_follows_profile_likelihood() {
        let params = IgmParams::new(
            CentralOrdering::from_ids(&[1, 2, 3, 4, 5]).unwrap(),
            ThetaVector::constant(1.5).unwrap(),
        );
        let data = sample_n(&params, 3, 200, 8).unwrap();
        let s = SuffStats::<f64>::accumulate(&data).unwrap();
        let mut support: Vec<ItemId> = s.items().iter().copied().collect();
        support.sort();
        let h = PriorHyper::uniform(1e-6, 3, &support);
        let mut candidates = Vec::new();
        let mut prefix: Vec<u32> = support.iter().map(|i| i.0).collect();
        for k in 0..prefix.len() - 1 {
            candidates.push(CentralOrdering::from_ids(&prefix).unwrap());
            prefix.swap(k, k + 1);
        }
        // profile likelihood: θ_j at its MLE for each σ
        let profile = |sigma: &CentralOrdering| -> f64 {
            let costs = s.per_rank_costs(sigma).unwrap();
            costs
                .iter()
                .enumerate()
                .map(|(k, &l)| {
                    let n = s.n_at(k + 1);
                    let th = (n / l).ln_1p();
                    -(th * l + n * ln_psi(th))
                })
                .sum()
        };
        let mut by_score: Vec<usize> = (0..candidates.len()).collect();
        let mut by_lik = by_score.clone();
        let scores: Vec<f64> = candidates
            .iter()
            .map(|c| sigma_log_score(c, &h, Some(&s)).unwrap().score)
            .collect();
        let liks: Vec<f64> = candidates.iter().map(profile).collect();
        by_score.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
        by_lik.sort_by(|&a, &b| liks[b].total_cmp(&liks[a]));
        assert_eq!(by_score, by_lik);
    }

    #[test]
    fn document_round_trip() {
        let mut dict = Dictionary::new();
        let doc: PriorDocument = serde_json::from_str(
            r#"{"nu": 2.0, "lambda1": [["a", 0.5], ["b", 0.5]],
                "lambda": [{"rank": 2, "entries": [["a", "b", 0.75], ["b", "a", 0.25]]}]}"#,
        )
        .unwrap();
        let h: PriorHyper<f64> = doc.to_prior(&mut dict).unwrap();
        assert!(validate_prior(&h).is_empty());
        assert_eq!(h.t(), 2);
        assert_eq!(PriorDocument::from_prior(&h, &dict).unwrap(), doc);
    }
}
