//! Shows by construction that symmetric nested-threshold scheduling is
//! suboptimal without a sign side channel.
//!
//! With a uniform source the symmetric policy's noisy region is a
//! disconnected pair of bands, so the single codec that serves it sees a
//! large conditional variance.  Rearranging the two halves into one connected
//! interval of equal probability (all other regions' mass unchanged) strictly
//! shrinks that variance, and with it the cost — even though the rearranged
//! policy is no longer symmetric.  The whole effect is quantified by
//!
//! ```text
//! gap = P(noisy') / (gamma + 1) * (Var(X | noisy') - Var(X | noisy*)) < 0
//! ```
//!
//! which this module evaluates three ways: the variance formula, two full
//! cost-functional evaluations, and a paired Monte Carlo replay of both
//! policies through the actual codec.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::codec::ChannelSpec;
use crate::error::{Error, Result};
use crate::sources::{Interval, Region, SourceModel};
use crate::stage::{CostPair, ThresholdPolicy};

/// Optimal symmetric nested thresholds for the no-side-channel single-stage
/// problem, from the pointwise comparison of the three per-sample costs
/// `x^2`, `c1 + x^2/(gamma+1)`, and `c2`.
pub fn symmetric_policy_thresholds(gamma: f64, costs: &CostPair) -> ThresholdPolicy {
    assert!(gamma > 0.0);
    let b01 = ((gamma + 1.0) * costs.c1 / gamma).sqrt();
    let b02 = costs.c2.sqrt();
    let beta1 = b01.min(b02);
    if costs.c1 + beta1 * beta1 / (gamma + 1.0) <= costs.c2 {
        let beta2 = ((costs.c2 - costs.c1) * (gamma + 1.0)).sqrt();
        ThresholdPolicy::new(beta1, beta2).expect("case ordering guarantees beta1 <= beta2")
    } else {
        ThresholdPolicy::new(beta1, beta1).expect("valid")
    }
}

/// Expected single-stage cost of an arbitrary three-region schedule without a
/// side channel: one codec covers the whole (possibly disconnected) noisy
/// region, so a single conditional variance enters.
///
/// `J = Var(X|T0) P(T0) + c1 P(T1) + Var(X|T1) P(T1) / (gamma+1) + c2 P(T2)`
pub fn original_cost(
    model: &SourceModel,
    gamma: f64,
    costs: &CostPair,
    t0: &Region,
    t1: &Region,
    t2: &Region,
) -> Result<f64> {
    let regions = [t0, t1, t2];
    for i in 0..3 {
        for j in i + 1..3 {
            let overlap = model.region_prob(&regions[i].intersect(regions[j]));
            if overlap > 1e-12 {
                return Err(Error::Partition(format!(
                    "regions {i} and {j} overlap with probability {overlap}"
                )));
            }
        }
    }
    let probs: Vec<f64> = regions.iter().map(|r| model.region_prob(r)).collect();
    let total: f64 = probs.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::Partition(format!(
            "regions cover probability {total}, expected 1"
        )));
    }

    let mut j = 0.0;
    if probs[0] > 0.0 {
        j += model.truncated_var(t0)? * probs[0];
    }
    if probs[1] > 0.0 {
        j += costs.c1 * probs[1] + model.truncated_var(t1)? * probs[1] / (gamma + 1.0);
    }
    j += costs.c2 * probs[2];
    Ok(j)
}

/// A fully instantiated counterexample: a uniform source, the symmetric
/// policy's three regions, and the connected rearrangement of its noisy
/// region.
#[derive(Debug, Clone)]
pub struct CounterexampleSetup {
    pub half_width: f64,
    pub gamma: f64,
    pub costs: CostPair,
    pub policy: ThresholdPolicy,
    model: SourceModel,
    star: [Region; 3],
    prime: [Region; 3],
}

impl CounterexampleSetup {
    /// Validates feasibility and builds both region triples.  Requires
    /// `(gamma+1)/gamma * c1 < c2` (so the symmetric policy has a genuine
    /// noisy band), `sqrt((c2-c1)(gamma+1)) < half_width` (the band sits
    /// inside the support), and `2*beta2 - beta1 <= half_width` (the
    /// connected rearrangement also fits).
    pub fn new(half_width: f64, gamma: f64, costs: CostPair) -> Result<Self> {
        if !(half_width > 0.0) || !(gamma > 0.0) || !(costs.c1 > 0.0) || !(costs.c2 > 0.0) {
            return Err(Error::InvalidParameter(
                "half_width, gamma, c1, c2 must all be positive".into(),
            ));
        }
        if (gamma + 1.0) / gamma * costs.c1 >= costs.c2 {
            return Err(Error::InfeasibleCounterexample(format!(
                "need (gamma+1)/gamma * c1 < c2, got {} vs {}",
                (gamma + 1.0) / gamma * costs.c1,
                costs.c2
            )));
        }
        let beta2 = ((costs.c2 - costs.c1) * (gamma + 1.0)).sqrt();
        if beta2 >= half_width {
            return Err(Error::InfeasibleCounterexample(format!(
                "need sqrt((c2-c1)(gamma+1)) < half_width, got {beta2} vs {half_width}"
            )));
        }
        let policy = symmetric_policy_thresholds(gamma, &costs);
        let (b1, b2) = (policy.beta1(), policy.beta2());
        debug_assert!((b2 - beta2).abs() < 1e-12);
        if 2.0 * b2 - b1 > half_width {
            return Err(Error::InfeasibleCounterexample(format!(
                "connected band (beta1, 2*beta2 - beta1] must fit the support: \
                 {} > {half_width}",
                2.0 * b2 - b1
            )));
        }
        let l = half_width;

        let star = [
            Region::center_band(b1),
            Region::symmetric_band(b1, b2),
            Region::new(vec![
                Interval::right_open(-l, -b2),
                Interval::left_open(b2, l),
            ])?,
        ];
        let prime = [
            Region::center_band(b1),
            Region::new(vec![Interval::left_open(b1, 2.0 * b2 - b1)])?,
            Region::new(vec![
                Interval::right_open(-l, -b1),
                Interval::left_open(2.0 * b2 - b1, l),
            ])?,
        ];
        let model = SourceModel::uniform(half_width)?;
        Ok(CounterexampleSetup { half_width, gamma, costs, policy, model, star, prime })
    }

    pub fn model(&self) -> &SourceModel {
        &self.model
    }

    pub fn regions_star(&self) -> (&Region, &Region, &Region) {
        (&self.star[0], &self.star[1], &self.star[2])
    }

    pub fn regions_prime(&self) -> (&Region, &Region, &Region) {
        (&self.prime[0], &self.prime[1], &self.prime[2])
    }

    /// Full cost of the symmetric policy.
    pub fn cost_star(&self) -> f64 {
        original_cost(&self.model, self.gamma, &self.costs, &self.star[0], &self.star[1], &self.star[2])
            .expect("constructor validated the partition")
    }

    /// Full cost of the rearranged policy.
    pub fn cost_prime(&self) -> f64 {
        original_cost(&self.model, self.gamma, &self.costs, &self.prime[0], &self.prime[1], &self.prime[2])
            .expect("constructor validated the partition")
    }

    /// `cost_prime - cost_star`, strictly negative for every feasible setup.
    pub fn cost_gap(&self) -> f64 {
        self.cost_prime() - self.cost_star()
    }

    /// The same gap from the variance identity: the silent and perfect terms
    /// cancel, leaving only the noisy-region variances.
    pub fn gap_from_variances(&self) -> f64 {
        let p1 = self.model.region_prob(&self.prime[1]);
        let v_star = self.model.truncated_var(&self.star[1]).expect("band has mass");
        let v_prime = self.model.truncated_var(&self.prime[1]).expect("band has mass");
        p1 / (self.gamma + 1.0) * (v_prime - v_star)
    }

    /// Paired Monte Carlo replay of both policies through the plain
    /// (sign-blind) codec, sharing source and noise draws.  Returns the
    /// empirical mean of `cost_prime - cost_star` per step and its standard
    /// error.
    pub fn simulate_gap(&self, chan: &ChannelSpec, steps: usize, seed: u64) -> Result<(f64, f64)> {
        assert!(steps >= 2);
        if (chan.gamma() - self.gamma).abs() > 1e-9 * self.gamma.max(1.0) {
            return Err(Error::InvalidParameter(format!(
                "channel SNR {} does not match setup SNR {}",
                chan.gamma(),
                self.gamma
            )));
        }
        let star = PlainCodec::new(&self.model, &self.star[1], chan)?;
        let prime = PlainCodec::new(&self.model, &self.prime[1], chan)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let gamma = chan.gamma();
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for _ in 0..steps {
            let x = self.model.sample(&mut rng);
            let v = chan.sample_noise(&mut rng);
            let a = step_cost(&self.costs, gamma, &self.star, &star, x, v);
            let b = step_cost(&self.costs, gamma, &self.prime, &prime, x, v);
            let d = b - a;
            sum += d;
            sum2 += d * d;
        }
        let n = steps as f64;
        let mean = sum / n;
        let var = (sum2 / n - mean * mean).max(0.0) * n / (n - 1.0);
        Ok((mean, (var / n).sqrt()))
    }
}

/// Sign-blind codec over one (possibly disconnected) noisy region: centered
/// at the region's conditional mean, power-normalized by its variance.
struct PlainCodec {
    mean: f64,
    alpha: f64,
}

impl PlainCodec {
    fn new(model: &SourceModel, region: &Region, chan: &ChannelSpec) -> Result<Self> {
        let m = model.region_moments(region)?;
        if m.var == 0.0 {
            return Err(Error::DegenerateRegion);
        }
        Ok(PlainCodec { mean: m.mean, alpha: (chan.power() / m.var).sqrt() })
    }
}

fn step_cost(
    costs: &CostPair,
    gamma: f64,
    regions: &[Region; 3],
    codec: &PlainCodec,
    x: f64,
    v: f64,
) -> f64 {
    if regions[1].contains(x) {
        let y = codec.alpha * (x - codec.mean);
        let x_hat = (1.0 / codec.alpha) * (gamma / (gamma + 1.0)) * (y + v) + codec.mean;
        (x - x_hat) * (x - x_hat) + costs.c1
    } else if regions[2].contains(x) {
        costs.c2
    } else {
        // Silent region is symmetric in both setups; its conditional mean is 0.
        x * x
    }
}

/// Range of `c2` making the setup feasible for given `half_width`, `gamma`,
/// `c1`, with a 10% margin above the strict lower bound.  `None` when even
/// the bounds cross.
pub fn feasible_c2_range(half_width: f64, gamma: f64, c1: f64) -> Option<(f64, f64)> {
    let beta1 = ((gamma + 1.0) * c1 / gamma).sqrt();
    if beta1 >= half_width {
        return None;
    }
    let lo = (gamma + 1.0) / gamma * c1 * 1.1;
    // The connected band (beta1, 2*beta2 - beta1] fits iff
    // beta2 <= (half_width + beta1) / 2.
    let b2_max = 0.5 * (half_width + beta1);
    let hi = c1 + b2_max * b2_max / (gamma + 1.0);
    if lo >= hi {
        return None;
    }
    Some((lo, hi))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::NoiseKind;
    use crate::sources::moments_by_quadrature;
    use rand::Rng;

    fn costs(c1: f64, c2: f64) -> CostPair {
        CostPair::new(c1, c2).unwrap()
    }

    #[test]
    fn symmetric_thresholds_with_noisy_band() {
        let p = symmetric_policy_thresholds(1.0, &costs(0.01, 0.05));
        assert!((p.beta1() - 0.02f64.sqrt()).abs() < 1e-12);
        assert!((p.beta2() - 0.08f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn symmetric_thresholds_collapse_when_noisy_too_dear() {
        // beta1 = min(sqrt(0.8), sqrt(0.5)) = sqrt(0.5); then
        // c1 + beta1^2/2 = 0.65 > c2, so the band is empty.
        let p = symmetric_policy_thresholds(1.0, &costs(0.4, 0.5));
        assert!((p.beta1() - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(p.beta1(), p.beta2());
    }

    #[test]
    fn symmetric_thresholds_boundary_continuity() {
        // Where b01 = b02 both formulas agree.
        let gamma = 1.0f64;
        let c2 = 0.3f64;
        let c1 = c2 * gamma / (gamma + 1.0);
        let p = symmetric_policy_thresholds(gamma, &costs(c1, c2));
        assert!((p.beta1() - c2.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn headline_gap_value() {
        let s = CounterexampleSetup::new(1.0, 1.0, costs(0.01, 0.05)).unwrap();
        // Conditional variances of the two noisy regions.
        let v_star = s.model().truncated_var(s.regions_star().1).unwrap();
        let v_prime = s.model().truncated_var(s.regions_prime().1).unwrap();
        let b1 = s.policy.beta1();
        assert!((v_star - 7.0 * b1 * b1 / 3.0).abs() < 1e-12, "v_star={v_star}");
        assert!((v_prime - b1 * b1 / 3.0).abs() < 1e-12, "v_prime={v_prime}");
        // Quadrature oracle over the disconnected region.
        let q = moments_by_quadrature(|x| s.model().density(x), s.regions_star().1).unwrap();
        assert!((v_star - q.var).abs() < 1e-10);

        let gap = s.cost_gap();
        let exact = -(0.08f64.sqrt() - 0.02f64.sqrt()) / 2.0 * 0.04;
        assert!((gap - exact).abs() < 1e-12, "gap={gap} exact={exact}");
        assert!((gap - s.gap_from_variances()).abs() < 1e-12);
        assert!(gap < 0.0);
    }

    #[test]
    fn full_cost_single_region_collapse() {
        // Whole support noisy at zero price: J = Var(X)/(gamma+1).
        let m = SourceModel::uniform(1.0).unwrap();
        let j = original_cost(
            &m,
            1.0,
            &costs(0.0, 0.05),
            &Region::empty(),
            &Region::center_band(1.0),
            &Region::empty(),
        )
        .unwrap();
        assert!((j - m.variance() / 2.0).abs() < 1e-12);
    }

    #[test]
    fn partition_violations_are_rejected() {
        let m = SourceModel::uniform(1.0).unwrap();
        let c = costs(0.01, 0.05);
        // Overlap.
        assert!(matches!(
            original_cost(&m, 1.0, &c, &Region::center_band(0.5), &Region::interval(0.2, 0.8), &Region::empty()),
            Err(Error::Partition(_))
        ));
        // Gap of positive measure.
        assert!(matches!(
            original_cost(&m, 1.0, &c, &Region::center_band(0.2), &Region::interval(0.5, 0.9), &Region::empty()),
            Err(Error::Partition(_))
        ));
    }

    #[test]
    fn infeasible_setups_are_rejected() {
        assert!(matches!(
            CounterexampleSetup::new(1.0, 1.0, costs(0.04, 0.05)),
            Err(Error::InfeasibleCounterexample(_))
        ));
        assert!(matches!(
            CounterexampleSetup::new(0.2, 1.0, costs(0.01, 0.05)),
            Err(Error::InfeasibleCounterexample(_))
        ));
    }

    #[test]
    fn monte_carlo_replay_confirms_sign() {
        let s = CounterexampleSetup::new(1.0, 1.0, costs(0.01, 0.05)).unwrap();
        let chan = ChannelSpec::new(1.0, 1.0, NoiseKind::Gaussian).unwrap();
        let (mean, se) = s.simulate_gap(&chan, 1_000_000, 99).unwrap();
        let exact = s.cost_gap();
        assert!((mean - exact).abs() < 4.0 * se, "mean={mean} exact={exact} se={se}");
        assert!(mean + 4.0 * se < 0.0, "gap not negative at 4 SE: {mean} +- {se}");
    }

    #[test]
    fn side_channel_recovers_the_advantage() {
        // With the sign side channel the symmetric policy costs no more than
        // the rearranged sign-blind policy.
        let s = CounterexampleSetup::new(1.0, 1.0, costs(0.01, 0.05)).unwrap();
        let with_side = crate::stage::stage_cost(s.model(), s.gamma, &s.costs, &s.policy);
        assert!(with_side.cost <= s.cost_prime() + 1e-12);
    }

    #[test]
    fn randomized_feasible_sweep_gap_is_negative() {
        let mut rng = ChaCha8Rng::seed_from_u64(2024);
        let mut tested = 0;
        while tested < 60 {
            let gamma = [0.5, 1.0, 4.0][rng.random_range(0..3)];
            let c1 = rng.random_range(0.001..0.1);
            let Some((lo, hi)) = feasible_c2_range(1.0, gamma, c1) else {
                continue;
            };
            let c2 = rng.random_range(lo..hi);
            let s = CounterexampleSetup::new(1.0, gamma, costs(c1, c2)).unwrap();
            let gap = s.cost_gap();
            assert!(gap < 0.0, "gamma={gamma} c1={c1} c2={c2}: gap={gap}");
            assert!((gap - s.gap_from_variances()).abs() < 1e-12);
            tested += 1;
        }
    }
}
