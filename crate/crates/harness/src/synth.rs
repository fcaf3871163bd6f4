//! Synthetic data: IGM samples around random centers of a finite item
//! universe, optionally mixed with uniformly random outliers.

use igm_core::model::sample;
use igm_core::{CentralOrdering, IgmParams64, ItemId, ThetaVector64, TopTOrdering};
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dataset::RankingDataset;
use crate::error::{HarnessError, Result};

/// Dispersion of one generating component.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaSpec {
    Constant(f64),
    /// `θ_j = 2^{−(j−1)/2} θ_1`.
    Decay(f64),
    Vector(Vec<f64>),
}

impl ThetaSpec {
    pub fn to_theta(&self, t: usize) -> Result<ThetaVector64> {
        let v = match self {
            ThetaSpec::Constant(th) => return Ok(ThetaVector64::constant(*th)?),
            ThetaSpec::Decay(th1) => (0..t).map(|j| th1 * 2f64.powf(-(j as f64) / 2.0)).collect(),
            ThetaSpec::Vector(v) => v.clone(),
        };
        Ok(ThetaVector64::new(v)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComponentSpec {
    pub theta: ThetaSpec,
    pub n: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratorSpec {
    /// Size `M` of the item universe the centers permute.
    #[serde(default = "default_universe")]
    pub universe: usize,
    pub t: usize,
    pub components: Vec<ComponentSpec>,
    #[serde(default)]
    pub outliers: usize,
    pub seed: u64,
}

pub fn default_universe() -> usize {
    1000
}

impl GeneratorSpec {
    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(HarnessError::Config(m.to_owned()));
        if self.t == 0 {
            return fail("t must be positive");
        }
        if self.components.is_empty() {
            return fail("at least one component is required");
        }
        if self.components.iter().any(|c| c.n == 0) {
            return fail("component sizes must be positive");
        }
        if self.universe < self.t {
            return fail("the universe must hold at least t items");
        }
        if self.universe > u32::MAX as usize {
            return fail("universe too large");
        }
        Ok(())
    }
}

/// Generating parameters and labels. Component `k` has label `k`; outlier
/// `m` has label `components + m`.
#[derive(Debug, Clone)]
pub struct Truth {
    pub params: Vec<IgmParams64>,
    pub labels: Vec<usize>,
}

/// Uniformly random ordering of `1..=universe`.
pub fn random_center<R: Rng + ?Sized>(universe: usize, rng: &mut R) -> CentralOrdering {
    let mut ids: Vec<u32> = (1..=universe as u32).collect();
    ids.shuffle(rng);
    CentralOrdering::new(ids.into_iter().map(ItemId).collect()).expect("distinct ids")
}

/// Uniformly random `t`-subset of the universe in uniformly random order.
pub fn random_outlier<R: Rng + ?Sized>(universe: usize, t: usize, rng: &mut R) -> TopTOrdering {
    let mut ids: Vec<ItemId> = rand::seq::index::sample(rng, universe, t)
        .into_iter()
        .map(|i| ItemId(i as u32 + 1))
        .collect();
    ids.shuffle(rng);
    TopTOrdering::new(ids).expect("distinct ids")
}

pub fn generate_synthetic(spec: &GeneratorSpec) -> Result<(RankingDataset, Truth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut rankings = Vec::new();
    let mut labels = Vec::new();
    let mut params = Vec::new();
    for (k, c) in spec.components.iter().enumerate() {
        let p = IgmParams64::new(random_center(spec.universe, &mut rng), c.theta.to_theta(spec.t)?);
        for _ in 0..c.n {
            rankings.push(sample(&p, spec.t, &mut rng)?);
            labels.push(k);
        }
        params.push(p);
    }
    for m in 0..spec.outliers {
        rankings.push(random_outlier(spec.universe, spec.t, &mut rng));
        labels.push(spec.components.len() + m);
    }
    let mut ds = RankingDataset::from_ids(rankings);
    ds.source = Some(format!("synthetic(seed={})", spec.seed));
    Ok((ds, Truth { params, labels }))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table3(seed: u64) -> GeneratorSpec {
        GeneratorSpec {
            universe: 1000,
            t: 8,
            components: [1.5, 1.0, 0.7]
                .iter()
                .map(|&th| ComponentSpec {
                    theta: ThetaSpec::Constant(th),
                    n: 150,
                })
                .collect(),
            outliers: 50,
            seed,
        }
    }

    #[test]
    fn table3_shape() {
        let (ds, truth) = generate_synthetic(&table3(1)).unwrap();
        assert_eq!(ds.len(), 500);
        let distinct: std::collections::BTreeSet<_> = truth.labels.iter().collect();
        assert_eq!(distinct.len(), 53);
        assert!(ds.rankings.iter().all(|r| r.len() == 8));
    }

    #[test]
    fn deterministic() {
        let (a, _) = generate_synthetic(&table3(5)).unwrap();
        let (b, _) = generate_synthetic(&table3(5)).unwrap();
        assert_eq!(a.rankings, b.rankings);
    }

    #[test]
    fn decay_theta() {
        let th = ThetaSpec::Decay(0.69).to_theta(3).unwrap();
        assert!((th.at(3) - 0.345).abs() < 1e-12);
    }
}
