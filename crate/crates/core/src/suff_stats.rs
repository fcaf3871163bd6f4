//! Sparse sufficient statistics of a set of top-t orderings.
//!
//! For each rank `j` we keep `q_j` (how often an item sits at rank `j`),
//! `Q_j` (how often item `i` sits at rank `j` with `i'` before it) and `N_j`
//! (how many orderings reach rank `j`). The precedence matrix
//! `R_j = q_j 1ᵀ − Q_j` is never stored; entries are derived on demand.

use std::collections::{BTreeMap, BTreeSet};

use crate::error::{Error, Result};
use crate::model::ThetaVector;
use crate::rankings::{CentralOrdering, ItemId, TopTOrdering};
use crate::scalar::Real;

/// A row-mass vector `q` and a sparse precedence count matrix `Q`, standing
/// for `R = q 1ᵀ − Q`.
///
/// `pairs[(i, i')]` counts observations of `i` with `i'` placed before it.
#[derive(Debug, Clone, PartialEq)]
pub struct PrecedenceCounts<F> {
    pub q: BTreeMap<ItemId, F>,
    pub pairs: BTreeMap<(ItemId, ItemId), F>,
}

impl<F: Real> Default for PrecedenceCounts<F> {
    fn default() -> Self {
        Self {
            q: BTreeMap::new(),
            pairs: BTreeMap::new(),
        }
    }
}

impl<F: Real> PrecedenceCounts<F> {
    pub fn is_empty(&self) -> bool {
        self.q.is_empty() && self.pairs.is_empty()
    }

    /// `R_{i i'}` for `i != i'`; the diagonal is 0.
    pub fn r(&self, i: ItemId, i_prime: ItemId) -> F {
        if i == i_prime {
            return F::zero();
        }
        let q = self.q.get(&i).copied().unwrap_or_else(F::zero);
        q - self.pairs.get(&(i, i_prime)).copied().unwrap_or_else(F::zero)
    }

    /// `self += weight * other`.
    pub fn add_scaled(&mut self, other: &Self, weight: F) {
        for (&k, &v) in &other.q {
            *self.q.entry(k).or_insert_with(F::zero) += weight * v;
        }
        for (&k, &v) in &other.pairs {
            *self.pairs.entry(k).or_insert_with(F::zero) += weight * v;
        }
    }

    /// Lower-triangle cost `L_σ(R)`: the sum of `R_{l i}` over pairs with `i`
    /// ranked before `l` by `sigma`.
    ///
    /// Every item with mass must be in `sigma`'s explicit prefix.
    pub fn lower_triangle_cost(&self, sigma: &CentralOrdering) -> Result<F> {
        for &item in self.q.keys() {
            if !sigma.contains(item) {
                return Err(Error::SigmaMissingItem { item });
            }
        }
        Ok(self.lower_triangle_cost_unchecked(sigma))
    }

    /// Same as [`Self::lower_triangle_cost`], relying on the tail rule for any
    /// item outside the prefix.
    pub fn lower_triangle_cost_unchecked(&self, sigma: &CentralOrdering) -> F {
        // Σ_l q_l (rank(l) − 1) − Σ_{rank(i) < rank(l)} Q_{l i}
        let mut cost = F::zero();
        for (&l, &q) in &self.q {
            cost += q * F::of_usize(sigma.rank(l) - 1);
        }
        for (&(l, i), &count) in &self.pairs {
            if sigma.rank(i) < sigma.rank(l) {
                cost -= count;
            }
        }
        cost
    }
}

/// Statistics of one rank `j`.
#[derive(Debug, Clone, PartialEq)]
pub struct RankStats<F> {
    /// 1-based rank.
    pub rank: usize,
    pub counts: PrecedenceCounts<F>,
    /// Number of orderings of length at least `rank`.
    pub n: F,
}

/// Which precedence matrix a cost refers to.
#[derive(Debug, Clone, Copy)]
pub enum RankSelector<'a, F> {
    /// `R_j` for a single 1-based rank.
    Rank(usize),
    /// `R = Σ_j R_j`.
    Aggregate,
    /// `R_θ = Σ_j θ_j R_j`.
    Weighted(&'a ThetaVector<F>),
}

/// Sufficient statistics of a dataset, possibly with fractional counts.
#[derive(Debug, Clone, PartialEq)]
pub struct SuffStats<F> {
    per_rank: Vec<RankStats<F>>,
    aggregate: PrecedenceCounts<F>,
    items: BTreeSet<ItemId>,
}

impl<F: Real> SuffStats<F> {
    fn empty() -> Self {
        Self {
            per_rank: Vec::new(),
            aggregate: PrecedenceCounts::default(),
            items: BTreeSet::new(),
        }
    }

    fn ensure_ranks(&mut self, t: usize) {
        while self.per_rank.len() < t {
            let rank = self.per_rank.len() + 1;
            self.per_rank.push(RankStats {
                rank,
                counts: PrecedenceCounts::default(),
                n: F::zero(),
            });
        }
    }

    fn add_ordering(&mut self, pi: &TopTOrdering, weight: F) {
        let items = pi.items();
        self.ensure_ranks(items.len());
        for (j, &item) in items.iter().enumerate() {
            self.items.insert(item);
            let rs = &mut self.per_rank[j];
            rs.n += weight;
            *rs.counts.q.entry(item).or_insert_with(F::zero) += weight;
            *self.aggregate.q.entry(item).or_insert_with(F::zero) += weight;
            for &before in &items[..j] {
                *rs.counts.pairs.entry((item, before)).or_insert_with(F::zero) += weight;
                *self.aggregate.pairs.entry((item, before)).or_insert_with(F::zero) += weight;
            }
        }
    }

    /// Counts of a dataset with unit weight per ordering.
    pub fn accumulate(data: &[TopTOrdering]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyData);
        }
        let mut stats = Self::empty();
        for pi in data {
            stats.add_ordering(pi, F::one());
        }
        Ok(stats)
    }

    /// Counts with a non-negative weight per ordering.
    pub fn accumulate_weighted(data: &[TopTOrdering], weights: &[F]) -> Result<Self> {
        if data.is_empty() {
            return Err(Error::EmptyData);
        }
        check_weights(weights.iter().copied())?;
        if weights.len() != data.len() {
            return Err(Error::InvalidWeights);
        }
        let mut stats = Self::empty();
        for (pi, &w) in data.iter().zip(weights) {
            if w > F::zero() {
                stats.add_ordering(pi, w);
            }
        }
        Ok(stats)
    }

    /// Linear combination `Σ_k w_k S_k` of statistics.
    pub fn weighted_combine(parts: &[(F, &SuffStats<F>)]) -> Result<Self> {
        check_weights(parts.iter().map(|(w, _)| *w))?;
        let mut out = Self::empty();
        for &(w, s) in parts {
            out.merge_scaled(s, w);
        }
        Ok(out)
    }

    /// `self += weight * other`; with unit weight this is the monoid merge of
    /// two datasets.
    pub fn merge_scaled(&mut self, other: &Self, weight: F) {
        self.ensure_ranks(other.per_rank.len());
        for (mine, theirs) in self.per_rank.iter_mut().zip(&other.per_rank) {
            mine.counts.add_scaled(&theirs.counts, weight);
            mine.n += weight * theirs.n;
        }
        self.aggregate.add_scaled(&other.aggregate, weight);
        self.items.extend(other.items.iter().copied());
    }

    pub fn per_rank(&self) -> &[RankStats<F>] {
        &self.per_rank
    }

    /// Statistics of 1-based rank `j`.
    pub fn rank(&self, j: usize) -> Result<&RankStats<F>> {
        j.checked_sub(1)
            .and_then(|k| self.per_rank.get(k))
            .ok_or(Error::RankOutOfRange(j))
    }

    /// Rank-summed counts `q = Σ_j q_j`, `Q = Σ_j Q_j`.
    pub fn aggregate(&self) -> &PrecedenceCounts<F> {
        &self.aggregate
    }

    pub fn t_max(&self) -> usize {
        self.per_rank.len()
    }

    /// `N_j` for 1-based `j`; zero beyond `t_max`.
    pub fn n_at(&self, j: usize) -> F {
        j.checked_sub(1)
            .and_then(|k| self.per_rank.get(k))
            .map_or_else(F::zero, |r| r.n)
    }

    /// Number of orderings, `N = N_1`.
    pub fn num_orderings(&self) -> F {
        self.n_at(1)
    }

    /// `T = Σ_π t_π = Σ_j N_j`.
    pub fn total(&self) -> F {
        self.per_rank.iter().map(|r| r.n).sum()
    }

    /// Distinct observed items, ascending.
    pub fn items(&self) -> &BTreeSet<ItemId> {
        &self.items
    }

    pub fn n_items(&self) -> usize {
        self.items.len()
    }

    /// Stored `Q` keys over all ranks.
    pub fn stored_pairs(&self) -> usize {
        self.per_rank.iter().map(|r| r.counts.pairs.len()).sum()
    }

    /// Combined counts for a selector: `R_j`, `R` or `R_θ`.
    pub fn counts(&self, selector: RankSelector<'_, F>) -> Result<PrecedenceCounts<F>> {
        match selector {
            RankSelector::Rank(j) => Ok(self.rank(j)?.counts.clone()),
            RankSelector::Aggregate => Ok(self.aggregate.clone()),
            RankSelector::Weighted(theta) => {
                theta.check_covers(self.t_max())?;
                let mut out = PrecedenceCounts::default();
                for r in &self.per_rank {
                    out.add_scaled(&r.counts, theta.at(r.rank));
                }
                Ok(out)
            }
        }
    }

    fn check_sigma(&self, sigma: &CentralOrdering) -> Result<()> {
        match self.items.iter().find(|&&i| !sigma.contains(i)) {
            Some(&item) => Err(Error::SigmaMissingItem { item }),
            None => Ok(()),
        }
    }

    /// `L_σ` of the selected precedence matrix.
    pub fn lower_triangle_cost(&self, selector: RankSelector<'_, F>, sigma: &CentralOrdering) -> Result<F> {
        self.check_sigma(sigma)?;
        match selector {
            RankSelector::Rank(j) => Ok(self.rank(j)?.counts.lower_triangle_cost_unchecked(sigma)),
            RankSelector::Aggregate => Ok(self.aggregate.lower_triangle_cost_unchecked(sigma)),
            RankSelector::Weighted(theta) => {
                theta.check_covers(self.t_max())?;
                Ok(self
                    .per_rank
                    .iter()
                    .map(|r| theta.at(r.rank) * r.counts.lower_triangle_cost_unchecked(sigma))
                    .sum())
            }
        }
    }

    /// `L_σ(R_j)` for every rank `j = 1..t_max`.
    pub fn per_rank_costs(&self, sigma: &CentralOrdering) -> Result<Vec<F>> {
        self.check_sigma(sigma)?;
        Ok(self
            .per_rank
            .iter()
            .map(|r| r.counts.lower_triangle_cost_unchecked(sigma))
            .collect())
    }
}

fn check_weights<F: Real>(weights: impl Iterator<Item = F>) -> Result<()> {
    let mut any_positive = false;
    for w in weights {
        if !w.is_finite() || w < F::zero() {
            return Err(Error::InvalidWeights);
        }
        any_positive |= w > F::zero();
    }
    if any_positive {
        Ok(())
    } else {
        Err(Error::InvalidWeights)
    }
}
