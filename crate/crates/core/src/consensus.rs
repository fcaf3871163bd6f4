//! Minimization of the lower-triangle cost `L_σ(R)` over orderings of the
//! observed items.
//!
//! The cost of an ordering decomposes as a sum over ordered pairs: placing
//! `a` before `b` costs `R_{b a}`. Every searcher here works against a
//! [`PrecedenceCost`] view that answers those pair costs on demand, so the
//! same engine serves the aggregate matrix, rank-weighted matrices and the
//! kernel-weighted matrices used by clustering.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap};

use crate::rankings::{CentralOrdering, ItemId, TopTOrdering};
use crate::scalar::{approx_eq, cmp_real, Real};
use crate::suff_stats::PrecedenceCounts;

/// On-demand access to pairwise precedence costs over `len()` items, indexed
/// `0..len()`.
pub trait PrecedenceCost<F: Real> {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    fn item(&self, idx: usize) -> ItemId;

    /// Cost of placing `a` anywhere before `b`, i.e. `R_{b a}`.
    fn before(&self, a: usize, b: usize) -> F;

    /// `r_a = Σ_{b ≠ a} before(a, b)`, the cost of putting `a` first.
    fn lead_costs(&self) -> Vec<F> {
        let n = self.len();
        (0..n)
            .map(|a| (0..n).filter(|&b| b != a).map(|b| self.before(a, b)).sum())
            .collect()
    }

    /// `L_σ` of an ordering given as indices.
    fn ordering_cost(&self, order: &[usize]) -> F {
        let mut cost = F::zero();
        for (x, &a) in order.iter().enumerate() {
            for &b in &order[x + 1..] {
                cost += self.before(a, b);
            }
        }
        cost
    }
}

/// Dense `n × n` table of pair costs.
#[derive(Debug, Clone)]
pub struct DenseCost<F> {
    items: Vec<ItemId>,
    w: Vec<F>,
}

impl<F: Real> DenseCost<F> {
    /// Over `items` (order defines the indices) from counts `(q, Q)`.
    pub fn from_counts(counts: &PrecedenceCounts<F>, items: &[ItemId]) -> Self {
        let n = items.len();
        let index: HashMap<ItemId, usize> = items.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut w = vec![F::zero(); n * n];
        for (&l, &q) in &counts.q {
            if let Some(&b) = index.get(&l) {
                for a in 0..n {
                    if a != b {
                        w[a * n + b] = q;
                    }
                }
            }
        }
        for (&(l, i), &c) in &counts.pairs {
            if let (Some(&b), Some(&a)) = (index.get(&l), index.get(&i)) {
                w[a * n + b] -= c;
            }
        }
        Self { items: items.to_vec(), w }
    }

    /// Aggregate counts of weighted orderings over `items`; other items are
    /// ignored.
    pub fn from_weighted_orderings(items: &[ItemId], data: &[TopTOrdering], weights: &[F]) -> Self {
        let n = items.len();
        let index: HashMap<ItemId, usize> = items.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        let mut q = vec![F::zero(); n];
        let mut w = vec![F::zero(); n * n];
        let mut local = Vec::new();
        for (pi, &wt) in data.iter().zip(weights) {
            if !(wt > F::zero()) {
                continue;
            }
            local.clear();
            local.extend(pi.items().iter().filter_map(|i| index.get(i).copied()));
            for (j, &b) in local.iter().enumerate() {
                q[b] += wt;
                for &a in &local[..j] {
                    w[a * n + b] -= wt;
                }
            }
        }
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    w[a * n + b] += q[b];
                }
            }
        }
        Self { items: items.to_vec(), w }
    }

    /// Materializes any view.
    pub fn from_view<V: PrecedenceCost<F> + ?Sized>(view: &V) -> Self {
        let n = view.len();
        let mut w = vec![F::zero(); n * n];
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    w[a * n + b] = view.before(a, b);
                }
            }
        }
        Self {
            items: (0..n).map(|k| view.item(k)).collect(),
            w,
        }
    }

    /// Directly from a matrix of `before(a, b)` values (diagonal ignored).
    pub fn from_matrix(items: Vec<ItemId>, rows: &[Vec<F>]) -> Self {
        let n = items.len();
        let mut w = vec![F::zero(); n * n];
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    w[a * n + b] = rows[a][b];
                }
            }
        }
        Self { items, w }
    }
}

impl<F: Real> PrecedenceCost<F> for DenseCost<F> {
    fn len(&self) -> usize {
        self.items.len()
    }

    fn item(&self, idx: usize) -> ItemId {
        self.items[idx]
    }

    #[inline]
    fn before(&self, a: usize, b: usize) -> F {
        self.w[a * self.items.len() + b]
    }
}

/// Sparse view: a row-mass vector plus a hash map of precedence counts.
/// Building it is linear in the number of stored counts.
#[derive(Debug, Clone)]
pub struct SparseCost<F> {
    items: Vec<ItemId>,
    q: Vec<F>,
    q_total: F,
    pairs: HashMap<(u32, u32), F>,
    /// `Σ_l Q_{l a}` per column `a`.
    q_col: Vec<F>,
}

impl<F: Real> SparseCost<F> {
    fn with_items(items: &[ItemId]) -> (Self, HashMap<ItemId, usize>) {
        let n = items.len();
        let index = items.iter().enumerate().map(|(k, &i)| (i, k)).collect();
        (
            Self {
                items: items.to_vec(),
                q: vec![F::zero(); n],
                q_total: F::zero(),
                pairs: HashMap::new(),
                q_col: vec![F::zero(); n],
            },
            index,
        )
    }

    pub fn from_counts(counts: &PrecedenceCounts<F>, items: &[ItemId]) -> Self {
        let (mut s, index) = Self::with_items(items);
        for (&l, &q) in &counts.q {
            if let Some(&b) = index.get(&l) {
                s.q[b] += q;
                s.q_total += q;
            }
        }
        for (&(l, i), &c) in &counts.pairs {
            if let (Some(&b), Some(&a)) = (index.get(&l), index.get(&i)) {
                *s.pairs.entry((b as u32, a as u32)).or_insert_with(F::zero) += c;
                s.q_col[a] += c;
            }
        }
        s
    }

    /// Aggregate (rank-summed) counts of weighted orderings, accumulated
    /// straight into the view. Items outside `items` are ignored.
    pub fn from_weighted_orderings(items: &[ItemId], data: &[TopTOrdering], weights: &[F]) -> Self {
        let (mut s, index) = Self::with_items(items);
        let mut local = Vec::new();
        for (pi, &w) in data.iter().zip(weights) {
            if !(w > F::zero()) {
                continue;
            }
            local.clear();
            local.extend(pi.items().iter().filter_map(|i| index.get(i).copied()));
            for (j, &b) in local.iter().enumerate() {
                s.q[b] += w;
                s.q_total += w;
                for &a in &local[..j] {
                    *s.pairs.entry((b as u32, a as u32)).or_insert_with(F::zero) += w;
                    s.q_col[a] += w;
                }
            }
        }
        s
    }

    pub fn to_dense(&self) -> DenseCost<F> {
        DenseCost::from_view(self)
    }
}

impl<F: Real> PrecedenceCost<F> for SparseCost<F> {
    fn len(&self) -> usize {
        self.items.len()
    }

    fn item(&self, idx: usize) -> ItemId {
        self.items[idx]
    }

    #[inline]
    fn before(&self, a: usize, b: usize) -> F {
        self.q[b]
            - self
                .pairs
                .get(&(b as u32, a as u32))
                .copied()
                .unwrap_or_else(F::zero)
    }

    fn lead_costs(&self) -> Vec<F> {
        (0..self.items.len())
            .map(|a| self.q_total - self.q[a] - self.q_col[a])
            .collect()
    }
}

/// Result of a consensus search.
#[derive(Debug, Clone)]
pub struct SearchOutcome<F> {
    /// The ordering of the view's items, with tie groups attached.
    pub sigma: CentralOrdering,
    /// Indices into the view, in order.
    pub order: Vec<usize>,
    pub cost: F,
    /// Certified global optimum.
    pub optimal: bool,
    /// Search-tree nodes expanded (branch and bound only).
    pub expansions: usize,
}

/// Limits for branch and bound.
#[derive(Debug, Clone, Copy)]
pub struct BranchBoundOptions {
    /// Maximum node expansions before giving up on a certificate.
    pub node_budget: usize,
    /// Maximum queued nodes before giving up on a certificate.
    pub max_queue: usize,
}

impl Default for BranchBoundOptions {
    fn default() -> Self {
        Self {
            node_budget: 1_000_000,
            max_queue: 2_000_000,
        }
    }
}

/// Searcher choice for callers that delegate the σ-step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Searcher {
    BranchBound { node_budget: usize },
    Greedy,
    /// Sort by lead cost, then adjacent-swap local search.
    SortRows,
    /// Branch and bound with the node budget shrunk so that expansions
    /// times `n²` stays under `work`; the incumbent is returned (flagged)
    /// when that runs out.
    Auto { work: usize },
}

impl Default for Searcher {
    fn default() -> Self {
        Searcher::Auto { work: 50_000_000 }
    }
}

impl Searcher {
    pub fn run<F: Real, V: PrecedenceCost<F> + ?Sized>(&self, view: &V) -> SearchOutcome<F> {
        match *self {
            Searcher::BranchBound { node_budget } => bbound_r(
                view,
                BranchBoundOptions {
                    node_budget,
                    ..Default::default()
                },
            ),
            Searcher::Greedy => greedy_search(view),
            Searcher::SortRows => {
                let start = sort_rows(view);
                local_search(&start.order, view)
            }
            Searcher::Auto { work } => {
                let n2 = view.len().max(1).pow(2);
                let node_budget = (work / n2).clamp(1_000, BranchBoundOptions::default().node_budget);
                bbound_r(
                    view,
                    BranchBoundOptions {
                        node_budget,
                        max_queue: 2 * node_budget,
                    },
                )
            }
        }
    }
}

fn outcome<F: Real, V: PrecedenceCost<F> + ?Sized>(
    view: &V,
    order: Vec<usize>,
    cost: F,
    optimal: bool,
    expansions: usize,
) -> SearchOutcome<F> {
    let groups = tie_groups(view, &order);
    let prefix = order.iter().map(|&k| view.item(k)).collect();
    let sigma = CentralOrdering::new(prefix)
        .and_then(|s| s.with_tie_groups(groups))
        .expect("view items are distinct");
    SearchOutcome {
        sigma,
        order,
        cost,
        optimal,
        expansions,
    }
}

/// Maximal contiguous runs of `order` whose members are pairwise
/// cost-symmetric (`before(a, b) == before(b, a)`); every internal order of
/// such a run has the same total cost.
pub fn tie_groups<F: Real, V: PrecedenceCost<F> + ?Sized>(view: &V, order: &[usize]) -> Vec<std::ops::Range<usize>> {
    let tol = F::epsilon() * F::of(64.0);
    let mut groups = Vec::new();
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() {
            let b = order[end];
            let symmetric = order[start..end]
                .iter()
                .all(|&a| approx_eq(view.before(a, b), view.before(b, a), tol));
            if !symmetric {
                break;
            }
            end += 1;
        }
        if end - start > 1 {
            groups.push(start..end);
        }
        start = end;
    }
    groups
}

struct Node<F> {
    priority: F,
    cost: F,
    bound: F,
    path: Vec<u32>,
}

impl<F: Real> PartialEq for Node<F> {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl<F: Real> Eq for Node<F> {}

impl<F: Real> PartialOrd for Node<F> {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl<F: Real> Ord for Node<F> {
    /// Max-heap order: lowest priority first, then the longer path, then the
    /// lexicographically smaller path.
    fn cmp(&self, other: &Self) -> Ordering {
        cmp_real(other.priority, self.priority)
            .then_with(|| self.path.len().cmp(&other.path.len()))
            .then_with(|| other.path.cmp(&self.path))
    }
}

/// Best-first branch and bound over ordering prefixes.
///
/// A node's cost `C` is the columnwise partial sum of its prefix (including
/// the pairs it forms with every unplaced item); its bound `A` charges each
/// unplaced pair the cheaper of its two directions. The sort-rows solution
/// seeds the incumbent, and only children whose `C + A` can beat it are
/// queued. An exhausted queue certifies the incumbent; a complete path at
/// the head of the queue is certified directly.
pub fn bbound_r<F: Real, V: PrecedenceCost<F> + ?Sized>(view: &V, options: BranchBoundOptions) -> SearchOutcome<F> {
    let n = view.len();
    if n <= 1 {
        return outcome(view, (0..n).collect(), F::zero(), true, 0);
    }
    let dense;
    let w: &DenseCost<F> = {
        dense = DenseCost::from_view(view);
        &dense
    };
    let pair_min = |a: usize, b: usize| w.before(a, b).min(w.before(b, a));

    let incumbent = {
        let s = sort_rows(w);
        local_search(&s.order, w)
    };
    let upper = incumbent.cost;
    let slack = F::epsilon() * F::of(1024.0) * (F::one() + upper.abs());
    let threshold = upper - slack;

    let mut root_bound = F::zero();
    for a in 0..n {
        for b in a + 1..n {
            root_bound += pair_min(a, b);
        }
    }

    let mut heap = BinaryHeap::new();
    if root_bound < threshold {
        heap.push(Node {
            priority: root_bound,
            cost: F::zero(),
            bound: root_bound,
            path: Vec::new(),
        });
    }

    let mut placed = vec![false; n];
    let mut remaining = Vec::with_capacity(n);
    let mut expansions = 0usize;
    while let Some(node) = heap.pop() {
        if node.path.len() == n {
            let order = node.path.iter().map(|&k| k as usize).collect();
            return outcome(view, order, node.cost, true, expansions);
        }
        if expansions >= options.node_budget || heap.len() >= options.max_queue {
            return outcome(view, incumbent.order, incumbent.cost, false, expansions);
        }
        expansions += 1;

        placed.iter_mut().for_each(|p| *p = false);
        for &k in &node.path {
            placed[k as usize] = true;
        }
        remaining.clear();
        remaining.extend((0..n).filter(|&k| !placed[k]));

        for &k in &remaining {
            let mut add = F::zero();
            let mut drop = F::zero();
            for &l in &remaining {
                if l != k {
                    add += w.before(k, l);
                    drop += pair_min(k, l);
                }
            }
            let cost = node.cost + add;
            let bound = (node.bound - drop).max(F::zero());
            let priority = cost + bound;
            if priority >= threshold {
                continue;
            }
            let mut path = Vec::with_capacity(node.path.len() + 2);
            path.extend_from_slice(&node.path);
            path.push(k as u32);
            if remaining.len() == 2 {
                // the last item adds nothing
                let last = remaining.iter().copied().find(|&l| l != k).unwrap();
                path.push(last as u32);
            }
            heap.push(Node {
                priority,
                cost,
                bound,
                path,
            });
        }
    }
    outcome(view, incumbent.order, incumbent.cost, true, expansions)
}

/// Depth-first descent that always takes the child with the smallest
/// `C + A`, ties to the lowest index.
pub fn greedy_search<F: Real, V: PrecedenceCost<F> + ?Sized>(view: &V) -> SearchOutcome<F> {
    let n = view.len();
    if n <= 1 {
        return outcome(view, (0..n).collect(), F::zero(), false, 0);
    }
    let w = DenseCost::from_view(view);
    let pair_min = |a: usize, b: usize| w.before(a, b).min(w.before(b, a));
    let mut bound = F::zero();
    for a in 0..n {
        for b in a + 1..n {
            bound += pair_min(a, b);
        }
    }
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    let mut cost = F::zero();
    while remaining.len() > 1 {
        let mut best: Option<(F, usize, F, F)> = None;
        for (pos, &k) in remaining.iter().enumerate() {
            let mut add = F::zero();
            let mut drop = F::zero();
            for &l in &remaining {
                if l != k {
                    add += w.before(k, l);
                    drop += pair_min(k, l);
                }
            }
            let c = cost + add;
            let a = (bound - drop).max(F::zero());
            if best.as_ref().is_none_or(|b| c + a < b.0) {
                best = Some((c + a, pos, c, a));
            }
        }
        let (_, pos, c, a) = best.unwrap();
        order.push(remaining.remove(pos));
        cost = c;
        bound = a;
    }
    order.push(remaining[0]);
    let cost = w.ordering_cost(&order);
    outcome(view, order, cost, false, 0)
}

/// Orders items by increasing lead cost `r_l = Σ_{k≠l} R_{k l}`, ties to the
/// lower index.
pub fn sort_rows<F: Real, V: PrecedenceCost<F> + ?Sized>(view: &V) -> SearchOutcome<F> {
    let lead = view.lead_costs();
    let mut order: Vec<usize> = (0..view.len()).collect();
    order.sort_by(|&a, &b| cmp_real(lead[a], lead[b]).then(a.cmp(&b)));
    let cost = view.ordering_cost(&order);
    outcome(view, order, cost, false, 0)
}

/// Repeatedly applies the most improving adjacent transposition until none
/// improves.
pub fn local_search<F: Real, V: PrecedenceCost<F> + ?Sized>(start: &[usize], view: &V) -> SearchOutcome<F> {
    let (order, cost, _) = local_search_trace(start, view);
    outcome(view, order, cost, false, 0)
}

/// [`local_search`] that also returns the cost after every move.
pub fn local_search_trace<F: Real, V: PrecedenceCost<F> + ?Sized>(
    start: &[usize],
    view: &V,
) -> (Vec<usize>, F, Vec<F>) {
    let mut order = start.to_vec();
    let n = order.len();
    let mut cost = view.ordering_cost(&order);
    let mut trace = vec![cost];
    if n < 2 {
        return (order, cost, trace);
    }
    let gain_at = |order: &[usize], p: usize| -> F {
        let (a, b) = (order[p], order[p + 1]);
        view.before(a, b) - view.before(b, a)
    };
    let mut gain: Vec<F> = (0..n - 1).map(|p| gain_at(&order, p)).collect();
    let tol = F::epsilon() * F::of(64.0) * (F::one() + cost.abs());
    loop {
        let mut best = None;
        let mut best_gain = tol;
        for (p, &g) in gain.iter().enumerate() {
            if g > best_gain {
                best_gain = g;
                best = Some(p);
            }
        }
        let Some(p) = best else { break };
        order.swap(p, p + 1);
        cost -= best_gain;
        trace.push(cost);
        #[allow(clippy::needless_range_loop)]
        for q in p.saturating_sub(1)..=(p + 1).min(n - 2) {
            gain[q] = gain_at(&order, q);
        }
    }
    // re-sum to drop accumulated rounding
    let cost = view.ordering_cost(&order);
    (order, cost, trace)
}

/// Runs `searcher`, then keeps whichever of its answer and `warm` (after
/// local search) is cheaper. Used by alternating minimizations that must not
/// increase their objective.
pub fn search_with_warm_start<F: Real, V: PrecedenceCost<F> + ?Sized>(
    searcher: Searcher,
    view: &V,
    warm: Option<&[usize]>,
) -> SearchOutcome<F> {
    let fresh = searcher.run(view);
    let Some(warm) = warm else { return fresh };
    if fresh.optimal {
        return fresh;
    }
    let polished = local_search(warm, view);
    if polished.cost < fresh.cost {
        polished
    } else {
        fresh
    }
}

/// Index order of `sigma`'s prefix within a view; items of the view missing
/// from the prefix follow in view order.
pub fn order_in_view<F: Real, V: PrecedenceCost<F> + ?Sized>(view: &V, sigma: &CentralOrdering) -> Vec<usize> {
    let mut order: Vec<usize> = (0..view.len()).collect();
    order.sort_by_key(|&k| sigma.rank(view.item(k)));
    order
}

/// Builds a view over `items` (ascending ids) from counts. Dense below
/// `dense_limit` items.
pub fn view_from_counts<F: Real>(
    counts: &PrecedenceCounts<F>,
    items: &[ItemId],
    dense_limit: usize,
) -> Box<dyn PrecedenceCost<F> + Send + Sync> {
    if items.len() <= dense_limit {
        Box::new(DenseCost::from_counts(counts, items))
    } else {
        Box::new(SparseCost::from_counts(counts, items))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::suff_stats::SuffStats;

    fn shared_prefix_view() -> DenseCost<f64> {
        let data = vec![
            TopTOrdering::from_ids(&[1, 2, 3]).unwrap(),
            TopTOrdering::from_ids(&[1, 2, 4]).unwrap(),
        ];
        let s = SuffStats::<f64>::accumulate(&data).unwrap();
        let items: Vec<_> = s.items().iter().copied().collect();
        DenseCost::from_counts(s.aggregate(), &items)
    }

    fn brute_force<F: Real>(view: &impl PrecedenceCost<F>) -> F {
        fn rec<F: Real>(view: &impl PrecedenceCost<F>, order: &mut Vec<usize>, used: &mut [bool], best: &mut F) {
            if order.len() == used.len() {
                let c = view.ordering_cost(order);
                if c < *best {
                    *best = c;
                }
                return;
            }
            for k in 0..used.len() {
                if !used[k] {
                    used[k] = true;
                    order.push(k);
                    rec(view, order, used, best);
                    order.pop();
                    used[k] = false;
                }
            }
        }
        let mut best = F::infinity();
        rec(view, &mut Vec::new(), &mut vec![false; view.len()], &mut best);
        best
    }

    #[test]
    fn shared_prefix_bbound_finds_tie_group() {
        let view = shared_prefix_view();
        let out = bbound_r(&view, BranchBoundOptions::default());
        assert_eq!(out.cost, 1.0);
        assert!(out.optimal);
        assert_eq!(&out.sigma.prefix()[..2], &[ItemId(1), ItemId(2)]);
        assert_eq!(out.sigma.tie_groups(), std::slice::from_ref(&(2..4)));
        assert_eq!(brute_force(&view), 1.0);
    }

    #[test]
    fn shared_prefix_lead_costs_and_sort_rows() {
        let view = shared_prefix_view();
        // column sums of R over k != l
        assert_eq!(view.lead_costs(), vec![0.0, 2.0, 5.0, 5.0]);
        let sparse = SparseCost::from_counts(
            &SuffStats::<f64>::accumulate(&[
                TopTOrdering::from_ids(&[1, 2, 3]).unwrap(),
                TopTOrdering::from_ids(&[1, 2, 4]).unwrap(),
            ])
            .unwrap()
            .aggregate()
            .clone(),
            &[ItemId(1), ItemId(2), ItemId(3), ItemId(4)],
        );
        assert_eq!(sparse.lead_costs(), vec![0.0, 2.0, 5.0, 5.0]);
        let out = sort_rows(&view);
        assert_eq!(out.order, vec![0, 1, 2, 3]);
        assert_eq!(out.cost, 1.0);
    }

    #[test]
    fn replicated_single_ordering() {
        let data = vec![TopTOrdering::from_ids(&[4, 2, 9, 6]).unwrap(); 5];
        let s = SuffStats::<f64>::accumulate(&data).unwrap();
        let items: Vec<_> = s.items().iter().copied().collect();
        let view = DenseCost::from_counts(s.aggregate(), &items);
        let out = bbound_r(&view, BranchBoundOptions::default());
        assert_eq!(out.cost, 0.0);
        assert_eq!(out.sigma.prefix(), data[0].items());
    }

    #[test]
    fn single_item() {
        let view = DenseCost::<f64>::from_matrix(vec![ItemId(3)], &[vec![0.0]]);
        for out in [bbound_r(&view, BranchBoundOptions::default()), greedy_search(&view), sort_rows(&view)] {
            assert_eq!(out.sigma.prefix(), &[ItemId(3)]);
            assert_eq!(out.cost, 0.0);
        }
    }

    #[test]
    fn upper_triangular_sorts_to_identity() {
        let n = 5;
        let items: Vec<_> = (1..=n as u32).map(ItemId).collect();
        // R strictly upper triangular: before(a, b) = R_{b a} > 0 only for b < a
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|a| (0..n).map(|b| if b < a { (a + b + 1) as f64 } else { 0.0 }).collect())
            .collect();
        let view = DenseCost::from_matrix(items, &rows);
        assert_eq!(sort_rows(&view).order, (0..n).collect::<Vec<_>>());
    }

    #[test]
    fn local_search_recovers_from_one_swap() {
        let view = shared_prefix_view();
        let out = local_search(&[1, 0, 2, 3], &view);
        assert_eq!(out.order, vec![0, 1, 2, 3]);
        assert_eq!(out.cost, 1.0);
        let unchanged = local_search(&[0, 1, 2, 3], &view);
        assert_eq!(unchanged.order, vec![0, 1, 2, 3]);
    }

    #[test]
    fn budget_exhaustion_is_flagged() {
        // a cyclic tournament keeps the bound loose
        let n = 7;
        let items: Vec<_> = (1..=n as u32).map(ItemId).collect();
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|a| {
                (0..n)
                    .map(|b| if (b + n - a) % n <= n / 2 { 1.0 } else { 3.0 })
                    .collect()
            })
            .collect();
        let view = DenseCost::from_matrix(items, &rows);
        let out = bbound_r(&view, BranchBoundOptions { node_budget: 1, max_queue: 10 });
        assert!(!out.optimal);
        assert!(out.cost >= brute_force(&view));
        let full = bbound_r(&view, BranchBoundOptions::default());
        assert!(full.optimal);
        assert_eq!(full.cost, brute_force(&view));
    }
}
