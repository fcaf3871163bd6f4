//! The infinite generalized Mallows model: each code `s_j` is an independent
//! discrete exponential, `P(s_j = k) = e^{−θ_j k} / ψ(θ_j)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::rankings::{codes_of, ordering_from_codes, CentralOrdering, CodeVector, TopTOrdering};
use crate::scalar::Real;
use crate::suff_stats::SuffStats;

/// Strictly positive dispersion parameters `θ_1, θ_2, ...`.
///
/// With a tied tail, every rank past the last stored value reuses it, which
/// gives both the single-parameter model (one value) and the `Θ_r` family
/// (`r` values).
#[derive(Debug, Clone, PartialEq)]
pub struct ThetaVector<F> {
    values: Vec<F>,
    tied_tail: bool,
}

fn check_positive<F: Real>(values: &[F]) -> Result<()> {
    if values.is_empty() {
        return Err(Error::ThetaTooShort { needed: 1, available: 0 });
    }
    for (k, &v) in values.iter().enumerate() {
        if !(v.is_finite() && v > F::zero()) {
            return Err(Error::NonPositiveTheta { rank: k + 1, value: v.f64() });
        }
    }
    Ok(())
}

impl<F: Real> ThetaVector<F> {
    /// One parameter per rank; ranks past the end are not covered.
    pub fn new(values: Vec<F>) -> Result<Self> {
        check_positive(&values)?;
        Ok(Self { values, tied_tail: false })
    }

    /// A single parameter shared by every rank.
    pub fn constant(theta: F) -> Result<Self> {
        Self::tied(vec![theta])
    }

    /// `Θ_r`: distinct `θ_1..θ_{r−1}`, then `θ_r` for every remaining rank.
    pub fn tied(values: Vec<F>) -> Result<Self> {
        check_positive(&values)?;
        Ok(Self { values, tied_tail: true })
    }

    pub fn values(&self) -> &[F] {
        &self.values
    }

    pub fn has_tied_tail(&self) -> bool {
        self.tied_tail
    }

    /// `θ_j` for 1-based `j`. Panics when `j` is not covered.
    pub fn at(&self, j: usize) -> F {
        assert!(j >= 1, "ranks start at 1");
        if self.tied_tail {
            self.values[(j - 1).min(self.values.len() - 1)]
        } else {
            self.values[j - 1]
        }
    }

    pub fn covers(&self, t: usize) -> bool {
        self.tied_tail || t <= self.values.len()
    }

    pub fn check_covers(&self, t: usize) -> Result<()> {
        if self.covers(t) {
            Ok(())
        } else {
            Err(Error::ThetaTooShort {
                needed: t,
                available: self.values.len(),
            })
        }
    }

    /// Whether `θ_1 = ... = θ_t`.
    pub fn is_uniform_over(&self, t: usize) -> bool {
        let first = self.values[0];
        (1..=t.max(1)).all(|j| !self.covers(j) || self.at(j) == first)
    }

    /// Explicit values for ranks `1..=t`.
    pub fn expand(&self, t: usize) -> Result<Vec<F>> {
        self.check_covers(t)?;
        Ok((1..=t).map(|j| self.at(j)).collect())
    }
}

/// `ψ(θ) = Σ_k e^{−θk} = 1 / (1 − e^{−θ})`.
pub fn psi<F: Real>(theta: F) -> Result<F> {
    if !(theta > F::zero()) {
        return Err(Error::Domain(format!(
            "psi diverges for theta = {theta}; theta must be strictly positive"
        )));
    }
    Ok(-F::one() / (-theta).exp_m1())
}

/// `ln ψ(θ)` for `θ > 0`, accurate at both ends of the range.
pub fn ln_psi<F: Real>(theta: F) -> F {
    if theta < F::LN_2() {
        -(-(-theta).exp_m1()).ln()
    } else {
        -(-(-theta).exp()).ln_1p()
    }
}

/// Central ordering and dispersion parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct IgmParams<F> {
    pub sigma: CentralOrdering,
    pub theta: ThetaVector<F>,
}

impl<F: Real> IgmParams<F> {
    pub fn new(sigma: CentralOrdering, theta: ThetaVector<F>) -> Self {
        Self { sigma, theta }
    }
}

/// `ln P(s) = −Σ_j [θ_j s_j + ln ψ(θ_j)]` for a code vector.
pub fn log_prob_codes<F: Real>(codes: &CodeVector, theta: &ThetaVector<F>) -> Result<F> {
    theta.check_covers(codes.len())?;
    Ok(-codes
        .0
        .iter()
        .enumerate()
        .map(|(j, &s)| {
            let th = theta.at(j + 1);
            th * F::of_usize(s) + ln_psi(th)
        })
        .sum::<F>())
}

/// Log-probability of one top-t ordering.
pub fn log_prob<F: Real>(pi: &TopTOrdering, params: &IgmParams<F>) -> Result<F> {
    log_prob_codes(&codes_of(pi, &params.sigma), &params.theta)
}

/// Dataset log-likelihood from sufficient statistics,
/// `−Σ_j [θ_j L_σ(R_j) + N_j ln ψ(θ_j)]`; with a single shared θ this is
/// `−θ L_σ(R) − T ln ψ(θ)`.
pub fn log_likelihood<F: Real>(stats: &SuffStats<F>, params: &IgmParams<F>) -> Result<F> {
    let t_max = stats.t_max();
    let theta = &params.theta;
    theta.check_covers(t_max)?;
    if theta.is_uniform_over(t_max) {
        let th = theta.at(1);
        let cost = stats.aggregate().lower_triangle_cost(&params.sigma)?;
        return Ok(-(th * cost + stats.total() * ln_psi(th)));
    }
    let costs = stats.per_rank_costs(&params.sigma)?;
    Ok(-costs
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let th = theta.at(k + 1);
            th * l + stats.n_at(k + 1) * ln_psi(th)
        })
        .sum::<F>())
}

/// Inverse-transform draw from `P(s = k) ∝ e^{−θk}`: `s = ⌊E/θ⌋` with
/// `E = −ln U` standard exponential, so `P(s ≥ k) = e^{−θk}` exactly.
pub fn sample_code<F: Real, R: Rng + ?Sized>(theta: F, rng: &mut R) -> usize {
    // U in (0, 1]
    let u = 1.0 - rng.random::<f64>();
    let k = (-u.ln() / theta.f64()).floor();
    // beyond 2^53 the ordering arithmetic is meaningless anyway
    k.min(9.0e15) as usize
}

/// Draws a top-`t` ordering.
pub fn sample<F: Real, R: Rng + ?Sized>(params: &IgmParams<F>, t: usize, rng: &mut R) -> Result<TopTOrdering> {
    if t == 0 {
        return Err(Error::EmptyOrdering);
    }
    params.theta.check_covers(t)?;
    let codes = CodeVector((1..=t).map(|j| sample_code(params.theta.at(j), rng)).collect());
    Ok(ordering_from_codes(&codes, &params.sigma))
}

/// `n` independent draws from a seeded generator; identical seeds give
/// identical output.
pub fn sample_n<F: Real>(params: &IgmParams<F>, t: usize, n: usize, seed: u64) -> Result<Vec<TopTOrdering>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| sample(params, t, &mut rng)).collect()
}
