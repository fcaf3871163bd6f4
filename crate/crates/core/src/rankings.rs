//! Items, top-t orderings, central orderings with a canonical tail, stagewise
//! codes and distances between orderings.
//!
//! Items are positive integers. A [`CentralOrdering`] lists a finite prefix
//! explicitly and places every other item after it in increasing id order,
//! which makes it a total order on all of ℕ* with finite state.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::ThetaVector;
use crate::scalar::Real;

/// Dense item identifier, starting at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ItemId(pub u32);

impl ItemId {
    #[inline]
    pub fn get(self) -> u32 {
        self.0
    }
}

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Maps external string tokens to dense ids `1..=n` in first-appearance order.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct Dictionary {
    tokens: Vec<String>,
    index: HashMap<String, ItemId>,
}

impl Dictionary {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn intern(&mut self, token: &str) -> ItemId {
        if let Some(&id) = self.index.get(token) {
            return id;
        }
        self.tokens.push(token.to_owned());
        let id = ItemId(self.tokens.len() as u32);
        self.index.insert(token.to_owned(), id);
        id
    }

    pub fn lookup(&self, token: &str) -> Option<ItemId> {
        self.index.get(token).copied()
    }

    pub fn token(&self, id: ItemId) -> Option<&str> {
        (id.0 as usize)
            .checked_sub(1)
            .and_then(|i| self.tokens.get(i))
            .map(String::as_str)
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    /// Tokens in id order.
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }
}

fn check_distinct(items: &[ItemId]) -> Result<()> {
    let mut seen = HashSet::with_capacity(items.len());
    for &item in items {
        if item.0 == 0 {
            return Err(Error::ZeroItemId);
        }
        if !seen.insert(item) {
            return Err(Error::DuplicateItem { item });
        }
    }
    Ok(())
}

/// An observed list of `t >= 1` distinct items, best first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<ItemId>", into = "Vec<ItemId>")]
pub struct TopTOrdering(Vec<ItemId>);

impl TopTOrdering {
    pub fn new(items: Vec<ItemId>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::EmptyOrdering);
        }
        check_distinct(&items)?;
        Ok(Self(items))
    }

    pub fn from_ids(ids: &[u32]) -> Result<Self> {
        Self::new(ids.iter().map(|&i| ItemId(i)).collect())
    }

    pub fn items(&self) -> &[ItemId] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// The first `t` items (or all of them when shorter).
    pub fn truncated(&self, t: usize) -> Self {
        Self(self.0[..t.min(self.0.len()).max(1)].to_vec())
    }
}

impl TryFrom<Vec<ItemId>> for TopTOrdering {
    type Error = Error;
    fn try_from(v: Vec<ItemId>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<TopTOrdering> for Vec<ItemId> {
    fn from(o: TopTOrdering) -> Self {
        o.0
    }
}

impl fmt::Display for TopTOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, item) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{item}")?;
        }
        write!(f, ")")
    }
}

/// Infinite ordering: an explicit prefix followed by every unlisted item in
/// increasing id order.
///
/// `tie_groups` marks contiguous prefix ranges whose internal order the data
/// leaves undetermined.
#[derive(Debug, Clone)]
pub struct CentralOrdering {
    prefix: Vec<ItemId>,
    tie_groups: Vec<Range<usize>>,
    sorted_ids: Vec<u32>,
    position: HashMap<ItemId, usize>,
}

impl PartialEq for CentralOrdering {
    fn eq(&self, other: &Self) -> bool {
        self.prefix == other.prefix && self.tie_groups == other.tie_groups
    }
}

impl Eq for CentralOrdering {}

impl CentralOrdering {
    /// The identity ordering `1, 2, 3, ...`.
    pub fn identity() -> Self {
        Self {
            prefix: Vec::new(),
            tie_groups: Vec::new(),
            sorted_ids: Vec::new(),
            position: HashMap::new(),
        }
    }

    pub fn new(prefix: Vec<ItemId>) -> Result<Self> {
        check_distinct(&prefix)?;
        let mut sorted_ids: Vec<u32> = prefix.iter().map(|i| i.0).collect();
        sorted_ids.sort_unstable();
        let position = prefix.iter().enumerate().map(|(p, &i)| (i, p)).collect();
        Ok(Self {
            prefix,
            tie_groups: Vec::new(),
            sorted_ids,
            position,
        })
    }

    pub fn from_ids(ids: &[u32]) -> Result<Self> {
        Self::new(ids.iter().map(|&i| ItemId(i)).collect())
    }

    /// Attach tie groups; each must be a non-empty range inside the prefix and
    /// the ranges must be disjoint. Singleton groups are dropped.
    pub fn with_tie_groups(mut self, mut groups: Vec<Range<usize>>) -> Result<Self> {
        groups.retain(|g| g.len() > 1);
        groups.sort_by_key(|g| g.start);
        let mut end = 0;
        for g in &groups {
            if g.start < end || g.end > self.prefix.len() {
                return Err(Error::Domain(format!(
                    "tie group {g:?} overlaps another group or leaves the prefix"
                )));
            }
            end = g.end;
        }
        self.tie_groups = groups;
        Ok(self)
    }

    pub fn prefix(&self) -> &[ItemId] {
        &self.prefix
    }

    pub fn tie_groups(&self) -> &[Range<usize>] {
        &self.tie_groups
    }

    /// Items of each tie group, in prefix order.
    pub fn tie_group_items(&self) -> Vec<Vec<ItemId>> {
        self.tie_groups
            .iter()
            .map(|g| self.prefix[g.clone()].to_vec())
            .collect()
    }

    pub fn contains(&self, item: ItemId) -> bool {
        self.position.contains_key(&item)
    }

    /// 1-based rank of `item`.
    pub fn rank(&self, item: ItemId) -> usize {
        match self.position.get(&item) {
            Some(&p) => p + 1,
            None => {
                let below = self.sorted_ids.partition_point(|&id| id < item.0);
                self.prefix.len() + item.0 as usize - below
            }
        }
    }

    /// Item holding 1-based rank `rank`.
    pub fn item_at(&self, rank: usize) -> ItemId {
        assert!(rank >= 1, "ranks start at 1");
        if rank <= self.prefix.len() {
            return self.prefix[rank - 1];
        }
        // k-th positive integer missing from the prefix
        let mut id = (rank - self.prefix.len()) as u64;
        for &p in &self.sorted_ids {
            if u64::from(p) <= id {
                id += 1;
            } else {
                break;
            }
        }
        ItemId(u32::try_from(id).expect("item id exceeds u32"))
    }

    /// The top-`t` prefix of the ordering, continuing into the tail if needed.
    pub fn top(&self, t: usize) -> TopTOrdering {
        TopTOrdering((1..=t.max(1)).map(|r| self.item_at(r)).collect())
    }
}

impl fmt::Display for CentralOrdering {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        let mut k = 0;
        let mut first = true;
        let mut groups = self.tie_groups.iter().peekable();
        while k < self.prefix.len() {
            if !first {
                write!(f, ",")?;
            }
            first = false;
            if groups.peek().is_some_and(|g| g.start == k) {
                let g = groups.next().unwrap();
                write!(f, "{{")?;
                for (m, item) in self.prefix[g.clone()].iter().enumerate() {
                    if m > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{item}")?;
                }
                write!(f, "}}")?;
                k = g.end;
            } else {
                write!(f, "{}", self.prefix[k])?;
                k += 1;
            }
        }
        write!(f, ",...)")
    }
}

/// Stagewise codes `s_1..s_t` of a top-t ordering.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CodeVector(pub Vec<usize>);

impl CodeVector {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> usize {
        self.0.iter().sum()
    }
}

/// `s_j` counts the items of `sigma`, not yet used by `pi`, that precede `pi[j]`.
pub fn codes_of(pi: &TopTOrdering, sigma: &CentralOrdering) -> CodeVector {
    let ranks: Vec<usize> = pi.items().iter().map(|&i| sigma.rank(i)).collect();
    let codes = ranks
        .iter()
        .enumerate()
        .map(|(j, &r)| r - 1 - ranks[..j].iter().filter(|&&prev| prev < r).count())
        .collect();
    CodeVector(codes)
}

/// Inverse of [`codes_of`]: the `j`-th item is the `(1 + s_j)`-th item of
/// `sigma` once the earlier picks are removed.
pub fn ordering_from_codes(s: &CodeVector, sigma: &CentralOrdering) -> TopTOrdering {
    let mut used: Vec<usize> = Vec::with_capacity(s.len());
    let mut items = Vec::with_capacity(s.len());
    for &code in &s.0 {
        let mut rank = code + 1;
        for &u in &used {
            if u <= rank {
                rank += 1;
            } else {
                break;
            }
        }
        let pos = used.partition_point(|&u| u < rank);
        used.insert(pos, rank);
        items.push(sigma.item_at(rank));
    }
    TopTOrdering(items)
}

/// Weighted code distance `Σ_j θ_j s_j`.
pub fn d_theta<F: Real>(pi: &TopTOrdering, sigma: &CentralOrdering, theta: &ThetaVector<F>) -> Result<F> {
    theta.check_covers(pi.len())?;
    let codes = codes_of(pi, sigma);
    Ok(codes
        .0
        .iter()
        .enumerate()
        .map(|(j, &s)| theta.at(j + 1) * F::of_usize(s))
        .sum())
}

/// Hausdorff Kendall distance between two top-t lists.
///
/// Each list is read as a partial order on the union of both item sets: its
/// own items in list order, above all remaining union items, which stay
/// mutually unordered. The distance is the Hausdorff distance, under the
/// ordinary Kendall metric, between the two sets of linear extensions.
pub fn kendall_topt(a: &TopTOrdering, b: &TopTOrdering) -> u64 {
    let pos_a: HashMap<ItemId, usize> = a.items().iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let pos_b: HashMap<ItemId, usize> = b.items().iter().enumerate().map(|(p, &i)| (i, p)).collect();
    directed_hausdorff(a.items(), &pos_a, b.items(), &pos_b)
        .max(directed_hausdorff(b.items(), &pos_b, a.items(), &pos_a))
}

/// `max_{x ⊒ a} min_{y ⊒ b} K(x, y)`.
///
/// For a fixed extension `x`, the best `y` copies `x` on the items `b` leaves
/// free. The worst `x` then reverses `b` on the items only `b` lists; every
/// other pair is fixed by the two lists.
fn directed_hausdorff(
    a: &[ItemId],
    pos_a: &HashMap<ItemId, usize>,
    b: &[ItemId],
    pos_b: &HashMap<ItemId, usize>,
) -> u64 {
    let common: Vec<ItemId> = a.iter().copied().filter(|i| pos_b.contains_key(i)).collect();
    let a_only: Vec<ItemId> = a.iter().copied().filter(|i| !pos_b.contains_key(i)).collect();
    let b_only: Vec<ItemId> = b.iter().copied().filter(|i| !pos_a.contains_key(i)).collect();

    let mut d = 0u64;
    for (x, &i) in common.iter().enumerate() {
        for &j in &common[x + 1..] {
            // i precedes j in a; discordant when b reverses them
            if pos_b[&j] < pos_b[&i] {
                d += 1;
            }
        }
        for &j in &b_only {
            if pos_b[&j] < pos_b[&i] {
                d += 1;
            }
        }
        for &k in &a_only {
            if pos_a[&k] < pos_a[&i] {
                d += 1;
            }
        }
    }
    let nb = b_only.len() as u64;
    d + nb * nb.saturating_sub(1) / 2 + a_only.len() as u64 * nb
}

/// Number of discordant pairs between two orderings of the same item set.
pub fn inversions(a: &[ItemId], b: &[ItemId]) -> u64 {
    let pos_b: HashMap<ItemId, usize> = b.iter().enumerate().map(|(p, &i)| (i, p)).collect();
    let ranks: Vec<usize> = a.iter().filter_map(|i| pos_b.get(i).copied()).collect();
    let mut d = 0;
    for x in 0..ranks.len() {
        for y in x + 1..ranks.len() {
            if ranks[y] < ranks[x] {
                d += 1;
            }
        }
    }
    d
}
