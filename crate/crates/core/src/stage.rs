//! Single-stage scheduling under per-use channel prices: exact stage cost of
//! a nested-threshold policy, its gradient, and the optimal thresholds.
//!
//! A policy `(beta1, beta2)` keeps quiet on `|x| <= beta1`, uses the noisy
//! channel with the sign side channel on `beta1 < |x| <= beta2`, and uses the
//! perfect channel beyond.  The expected stage cost is
//!
//! ```text
//! J = 2 ∫_0^{b1} x^2 p(x) dx  +  2 c1 P1  +  (2/(γ+1)) Var(X | X∈(b1,b2)) P1  +  2 c2 P2
//! ```
//!
//! with one-sided band probabilities `P1 = P(X∈(b1,b2))`, `P2 = P(X>b2)`.
//! For a Laplace source the optimum has a closed characterization: the band
//! width solves a scalar equation in the strictly monotone map
//! [`band_width_map`], after which `beta1` follows in closed form.  For other
//! symmetric unimodal laws [`solve_thresholds_generic`] searches the
//! first-order system numerically and cross-checks against a grid; its result
//! carries `certified = false` because no uniqueness theory backs it.

use crate::error::{Error, Result};
use crate::sources::{Region, SourceModel};

/// Per-use communication prices for the noisy (`c1`) and perfect (`c2`)
/// channels.  `c1 >= c2` is allowed; the solver then collapses the noisy
/// band.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct CostPair {
    pub c1: f64,
    pub c2: f64,
}

impl CostPair {
    pub fn new(c1: f64, c2: f64) -> Result<Self> {
        for (name, c) in [("c1", c1), ("c2", c2)] {
            if !c.is_finite() || c < 0.0 {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be finite and nonnegative, got {c}"
                )));
            }
        }
        Ok(CostPair { c1, c2 })
    }
}

/// Nested absolute-value thresholds `0 <= beta1 <= beta2 <= inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdPolicy {
    beta1: f64,
    beta2: f64,
}

impl ThresholdPolicy {
    pub fn new(beta1: f64, beta2: f64) -> Result<Self> {
        if beta1.is_nan() || beta2.is_nan() || beta1 < 0.0 || beta2 < beta1 {
            return Err(Error::InvalidParameter(format!(
                "thresholds must satisfy 0 <= beta1 <= beta2, got ({beta1}, {beta2})"
            )));
        }
        Ok(ThresholdPolicy { beta1, beta2 })
    }

    /// The all-silent policy.
    pub fn silence() -> Self {
        ThresholdPolicy { beta1: f64::INFINITY, beta2: f64::INFINITY }
    }

    pub fn beta1(&self) -> f64 {
        self.beta1
    }

    pub fn beta2(&self) -> f64 {
        self.beta2
    }

    /// Band width `beta2 - beta1`, taken as zero when the band is empty.
    pub fn width(&self) -> f64 {
        if self.beta1 == self.beta2 {
            0.0
        } else {
            self.beta2 - self.beta1
        }
    }

    /// Scheduling decision for a sample: 0 silent, 1 noisy, 2 perfect.
    /// Boundary ties go to the cheaper action, so the rule is deterministic.
    pub fn decide(&self, x: f64) -> u8 {
        let a = x.abs();
        if a <= self.beta1 {
            0
        } else if a <= self.beta2 {
            1
        } else {
            2
        }
    }
}

/// A solved stage: the policy, its expected cost, and the cost split into
/// estimation distortion and communication spend.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StageSolution {
    pub policy: ThresholdPolicy,
    pub cost: f64,
    pub distortion_part: f64,
    pub comm_part: f64,
}

/// Exact expected stage cost of a policy.  Degenerate regions (empty band,
/// no perfect tail) contribute zero rather than erroring.
pub fn stage_cost(
    model: &SourceModel,
    gamma: f64,
    costs: &CostPair,
    pol: &ThresholdPolicy,
) -> StageSolution {
    debug_assert!(gamma > 0.0);
    let b1 = pol.beta1();
    let b2 = pol.beta2();

    // E[X^2 1{|X| <= b1}]; the conditional mean of the center band is zero.
    let silent_sq = if b1 <= 0.0 {
        0.0
    } else if b1 == f64::INFINITY {
        model.variance()
    } else {
        match model.region_moments(&Region::center_band(b1)) {
            Ok(m) => m.prob * m.var,
            Err(_) => 0.0,
        }
    };

    let (p1, var1) = if b2 > b1 && b1 < f64::INFINITY {
        match model.region_moments(&Region::interval(b1, b2)) {
            Ok(m) => (m.prob, m.var),
            Err(_) => (0.0, 0.0),
        }
    } else {
        (0.0, 0.0)
    };

    let p2 = if b2 == f64::INFINITY {
        0.0
    } else {
        model.region_prob(&Region::interval(b2, f64::INFINITY))
    };

    let noisy_mse = if p1 > 0.0 { 2.0 / (gamma + 1.0) * var1 * p1 } else { 0.0 };
    let distortion_part = silent_sq + noisy_mse;
    let comm_part = 2.0 * (costs.c1 * p1 + costs.c2 * p2);

    StageSolution { policy: *pol, cost: distortion_part + comm_part, distortion_part, comm_part }
}

/// First-order residuals at an interior policy:
/// `r1 = b1^2 - (b1 - m)^2/(γ+1) - c1` and `r2 = (b2 - m)^2/(γ+1) + c1 - c2`
/// with `m = E[X | X in (b1, b2)]`.  Both vanish at the optimum.
pub fn foc_residuals(
    model: &SourceModel,
    gamma: f64,
    costs: &CostPair,
    pol: &ThresholdPolicy,
) -> Result<(f64, f64)> {
    let (b1, b2) = interior(pol)?;
    let m = model.truncated_mean(&Region::interval(b1, b2))?;
    let d1 = b1 - m;
    let d2 = b2 - m;
    Ok((
        b1 * b1 - d1 * d1 / (gamma + 1.0) - costs.c1,
        d2 * d2 / (gamma + 1.0) + costs.c1 - costs.c2,
    ))
}

/// Gradient of the stage cost with respect to the two thresholds:
/// `2 p(b1) r1` and `2 p(b2) r2` in terms of the residuals above.
pub fn stage_cost_grad(
    model: &SourceModel,
    gamma: f64,
    costs: &CostPair,
    pol: &ThresholdPolicy,
) -> Result<(f64, f64)> {
    let (b1, b2) = interior(pol)?;
    let p1 = model.density(b1);
    let p2 = model.density(b2);
    if p1 == 0.0 && p2 == 0.0 {
        // Entire band is outside the support; moving it changes nothing.
        return Ok((0.0, 0.0));
    }
    let m = model.truncated_mean(&Region::interval(b1, b2))?;
    let d1 = b1 - m;
    let d2 = b2 - m;
    Ok((
        2.0 * p1 * (b1 * b1 - d1 * d1 / (gamma + 1.0) - costs.c1),
        2.0 * p2 * (d2 * d2 / (gamma + 1.0) + costs.c1 - costs.c2),
    ))
}

fn interior(pol: &ThresholdPolicy) -> Result<(f64, f64)> {
    let (b1, b2) = (pol.beta1(), pol.beta2());
    if b1 > 0.0 && b2 > b1 && b2 < f64::INFINITY {
        Ok((b1, b2))
    } else {
        Err(Error::UnsupportedBoundary)
    }
}

/// Strictly increasing map `w -> w / (1 - e^{-lambda w})` pinning the width
/// of the noisy band; it climbs from `1/lambda` (at `w -> 0`) to infinity.
/// Its value is `1/lambda` plus the distance from the band's right edge to
/// the band's conditional mean under a Laplace law.
pub fn band_width_map(width: f64, lambda: f64) -> f64 {
    debug_assert!(width > 0.0 && lambda > 0.0);
    let u = lambda * width;
    if u < 1e-4 {
        // 1/(1 - e^{-u}) = 1/u + 1/2 + u/12 + O(u^3)
        1.0 / lambda + width * (0.5 + u / 12.0)
    } else {
        width / (-(-u).exp_m1())
    }
}

fn band_width_deriv(width: f64, lambda: f64) -> f64 {
    let u = lambda * width;
    if u < 1e-4 {
        0.5 + u / 6.0
    } else {
        let d = -(-u).exp_m1();
        (d - u * (-u).exp()) / (d * d)
    }
}

/// Inverts [`band_width_map`]: returns the unique `w > 0` with
/// `band_width_map(w, lambda) = target`, to residual below 1e-12.
pub fn band_width_solve(target: f64, lambda: f64) -> Result<f64> {
    debug_assert!(lambda > 0.0);
    let infimum = 1.0 / lambda;
    if !(target > infimum) {
        return Err(Error::TargetOutOfRange { target, infimum });
    }
    // w <= map(w) <= w + 1/lambda brackets the root in [target - 1/lambda, target].
    let mut lo = (target - infimum).max(f64::MIN_POSITIVE);
    let mut hi = target;
    for _ in 0..80 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if band_width_map(mid, lambda) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mut w = 0.5 * (lo + hi);
    for _ in 0..2 {
        let d = band_width_deriv(w, lambda);
        if !(d > 0.0) {
            break;
        }
        let next = w - (band_width_map(w, lambda) - target) / d;
        if next > 0.0 && next.is_finite() {
            w = next;
        }
    }
    Ok(w)
}

/// Optimal thresholds for a Laplace source with both channels priced.
///
/// With `c1 < c2` the band width solves
/// `band_width_map(w) = 1/lambda + sqrt((c2-c1)(1+gamma))` and
/// `beta1 = sqrt(c1 + (w - sqrt((c2-c1)(1+gamma)))^2 / (gamma+1))`.
/// With `c1 >= c2` the noisy channel is dominated pointwise and the policy
/// collapses to `beta1 = beta2 = sqrt(c2)`.
pub fn solve_thresholds_laplace(lambda: f64, gamma: f64, costs: &CostPair) -> ThresholdPolicy {
    assert!(lambda > 0.0 && gamma > 0.0, "lambda and gamma must be positive");
    if costs.c1 >= costs.c2 {
        let b = costs.c2.sqrt();
        return ThresholdPolicy::new(b, b).expect("sqrt(c2) is a valid threshold");
    }
    let spread = ((costs.c2 - costs.c1) * (1.0 + gamma)).sqrt();
    let width = band_width_solve(1.0 / lambda + spread, lambda)
        .expect("c1 < c2 makes the target exceed 1/lambda");
    let d = width - spread;
    let beta1 = (costs.c1 + d * d / (gamma + 1.0)).sqrt();
    ThresholdPolicy::new(beta1, beta1 + width).expect("solver output is ordered")
}

/// Optimal threshold when only the noisy channel is priced/available:
/// `beta1 = sqrt(c1 + 1/((gamma+1) lambda^2))`, `beta2 = inf`.
pub fn solve_thresholds_noisy_only(lambda: f64, gamma: f64, c1: f64) -> ThresholdPolicy {
    assert!(lambda > 0.0 && gamma > 0.0 && c1 >= 0.0);
    let beta1 = (c1 + 1.0 / ((gamma + 1.0) * lambda * lambda)).sqrt();
    ThresholdPolicy::new(beta1, f64::INFINITY).expect("valid")
}

/// Optimal threshold when only the perfect channel is priced/available:
/// `beta1 = beta2 = sqrt(c2)`.
pub fn solve_thresholds_perfect_only(c2: f64) -> ThresholdPolicy {
    assert!(c2 >= 0.0);
    let b = c2.sqrt();
    ThresholdPolicy::new(b, b).expect("valid")
}

/// Solves the Laplace stage problem and evaluates its cost in one call.
pub fn solve_stage_laplace(lambda: f64, gamma: f64, costs: &CostPair) -> StageSolution {
    let pol = solve_thresholds_laplace(lambda, gamma, costs);
    let model = SourceModel::Laplace { lambda };
    stage_cost(&model, gamma, costs, &pol)
}

/// Output of the density-agnostic solver.  `certified` is true only when the
/// answer follows from a closed-form argument; the numeric search carries no
/// uniqueness guarantee.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenericSolution {
    pub policy: ThresholdPolicy,
    pub cost: f64,
    pub certified: bool,
}

/// Optimal thresholds for any symmetric unimodal source: stationary points of
/// the first-order system from multiple deterministic starts, plus the
/// boundary branches, cross-checked against a coarse cost grid.
pub fn solve_thresholds_generic(
    model: &SourceModel,
    gamma: f64,
    costs: &CostPair,
) -> Result<GenericSolution> {
    assert!(gamma > 0.0);
    if costs.c1 >= costs.c2 {
        // The noisy channel is pointwise dominated for any density, so this
        // branch needs no search.
        let policy = solve_thresholds_perfect_only(costs.c2);
        let cost = stage_cost(model, gamma, costs, &policy).cost;
        return Ok(GenericSolution { policy, cost, certified: true });
    }

    let spread = ((costs.c2 - costs.c1) * (1.0 + gamma)).sqrt();
    let (_, sup_hi) = model.support();
    let reach = if sup_hi.is_finite() {
        sup_hi
    } else {
        (30.0 * model.variance().sqrt()).max(4.0 * (costs.c2.sqrt() + spread))
    };

    let band_mean = |b1: f64, b2: f64| model.truncated_mean(&Region::interval(b1, b2));

    // Inner solve: the unique b2 in (b1, reach] with b2 - mean(b1,b2) = spread.
    // The left side is nondecreasing in b2 for unimodal laws.
    let inner = |b1: f64| -> Option<f64> {
        let edge_gap = |b2: f64| band_mean(b1, b2).ok().map(|m| b2 - m - spread);
        let hi_val = edge_gap(reach)?;
        if hi_val < 0.0 {
            return None;
        }
        let (mut lo, mut hi) = (b1, reach);
        for _ in 0..100 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            match edge_gap(mid) {
                Some(v) if v < 0.0 => lo = mid,
                Some(_) => hi = mid,
                None => lo = mid, // vanishing band: gap still below spread
            }
        }
        Some(0.5 * (lo + hi))
    };

    // Stationarity residual in b1 along the inner-solved manifold.
    let outer = |b1: f64| -> Option<f64> {
        let b2 = inner(b1)?;
        let m = band_mean(b1, b2).ok()?;
        let d = b1 - m;
        Some(b1 * b1 - d * d / (gamma + 1.0) - costs.c1)
    };

    let mut candidates: Vec<ThresholdPolicy> = Vec::new();

    // Largest b1 for which the inner equation still has a solution: the edge
    // gap at b2 = reach shrinks as b1 grows, so bisect on its sign.
    let gap_at_reach = |b1: f64| band_mean(b1, reach).ok().map(|m| reach - m - spread);
    let b1_max = match gap_at_reach(0.0) {
        Some(g0) if g0 >= 0.0 => {
            let (mut lo, mut hi) = (0.0, reach);
            if gap_at_reach(reach * (1.0 - 1e-12)).is_none_or(|g| g < 0.0) {
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    match gap_at_reach(mid) {
                        Some(g) if g >= 0.0 => lo = mid,
                        _ => hi = mid,
                    }
                }
            } else {
                lo = reach;
            }
            lo
        }
        _ => 0.0, // no interior band fits anywhere
    };

    // Eight log-spaced starts over the feasible range bracket sign changes of
    // the outer residual.
    let n_starts = 8;
    let lo0 = (1e-6 * reach).max(1e-12);
    let nodes: Vec<f64> = if b1_max > lo0 {
        (0..n_starts)
            .map(|i| lo0 * (b1_max / lo0).powf(i as f64 / (n_starts - 1) as f64))
            .collect()
    } else {
        Vec::new()
    };
    let vals: Vec<Option<f64>> = nodes.iter().map(|&b| outer(b)).collect();
    for i in 0..n_starts - 1 {
        if let (Some(a), Some(b)) = (vals[i], vals[i + 1]) {
            if a == 0.0 {
                if let Some(b2) = inner(nodes[i]) {
                    candidates.push(ThresholdPolicy::new(nodes[i], b2)?);
                }
            }
            if a * b < 0.0 {
                let (mut lo, mut hi) = (nodes[i], nodes[i + 1]);
                let mut lo_val = a;
                for _ in 0..100 {
                    let mid = 0.5 * (lo + hi);
                    if mid <= lo || mid >= hi {
                        break;
                    }
                    match outer(mid) {
                        Some(v) if v * lo_val > 0.0 => {
                            lo = mid;
                            lo_val = v;
                        }
                        Some(_) => hi = mid,
                        None => break,
                    }
                }
                let b1 = 0.5 * (lo + hi);
                if let Some(b2) = inner(b1) {
                    candidates.push(ThresholdPolicy::new(b1, b2)?);
                }
            }
        }
    }

    // Boundary branches: collapsed band, silent-edge band, noisy-only, and
    // full silence.
    candidates.push(solve_thresholds_perfect_only(costs.c2));
    if let Some(b2) = inner(0.0) {
        candidates.push(ThresholdPolicy::new(0.0, b2)?);
    }
    candidates.push(minimize_noisy_only(model, gamma, costs, reach));
    candidates.push(ThresholdPolicy::silence());

    let eval = |p: &ThresholdPolicy| stage_cost(model, gamma, costs, p).cost;
    let (best_policy, best_cost) = candidates
        .iter()
        .map(|p| (*p, eval(p)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("candidate list is never empty");

    // Coarse grid cross-check.
    let n = 81;
    let mut grid_best = f64::INFINITY;
    let mut grid_arg = (0.0, f64::INFINITY);
    for i in 0..n {
        let b1 = reach * i as f64 / (n - 1) as f64;
        let inf_cost = eval(&ThresholdPolicy::new(b1, f64::INFINITY)?);
        if inf_cost < grid_best {
            grid_best = inf_cost;
            grid_arg = (b1, f64::INFINITY);
        }
        for j in 0..n {
            let b2 = b1 + (reach - b1) * j as f64 / (n - 1) as f64;
            let c = eval(&ThresholdPolicy::new(b1, b2)?);
            if c < grid_best {
                grid_best = c;
                grid_arg = (b1, b2);
            }
        }
    }
    if grid_best < best_cost - 1e-9 * (1.0 + best_cost.abs()) {
        return Err(Error::NonConvergence(format!(
            "grid point ({}, {}) costs {} but the stationary search found {}",
            grid_arg.0, grid_arg.1, grid_best, best_cost
        )));
    }

    Ok(GenericSolution { policy: best_policy, cost: best_cost, certified: false })
}

/// 1-D minimization of the stage cost along the `beta2 = inf` edge: coarse
/// scan then golden-section refinement.
fn minimize_noisy_only(
    model: &SourceModel,
    gamma: f64,
    costs: &CostPair,
    reach: f64,
) -> ThresholdPolicy {
    let eval = |b1: f64| {
        stage_cost(
            model,
            gamma,
            costs,
            &ThresholdPolicy::new(b1, f64::INFINITY).expect("b1 >= 0"),
        )
        .cost
    };
    let n = 65;
    let mut best_i = 0;
    let mut best = f64::INFINITY;
    for i in 0..n {
        let b1 = reach * i as f64 / (n - 1) as f64;
        let c = eval(b1);
        if c < best {
            best = c;
            best_i = i;
        }
    }
    let step = reach / (n - 1) as f64;
    let mut lo = (best_i as f64 * step - step).max(0.0);
    let mut hi = (best_i as f64 * step + step).min(reach);
    let invphi = 0.5 * (5.0f64.sqrt() - 1.0);
    let mut x1 = hi - invphi * (hi - lo);
    let mut x2 = lo + invphi * (hi - lo);
    let (mut f1, mut f2) = (eval(x1), eval(x2));
    for _ in 0..80 {
        if hi - lo < 1e-12 {
            break;
        }
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - invphi * (hi - lo);
            f1 = eval(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + invphi * (hi - lo);
            f2 = eval(x2);
        }
    }
    ThresholdPolicy::new(0.5 * (lo + hi), f64::INFINITY).expect("valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn laplace(lambda: f64) -> SourceModel {
        SourceModel::laplace(lambda).unwrap()
    }

    fn costs(c1: f64, c2: f64) -> CostPair {
        CostPair::new(c1, c2).unwrap()
    }

    #[test]
    fn policy_validation_and_decide() {
        assert!(ThresholdPolicy::new(1.0, 0.5).is_err());
        assert!(ThresholdPolicy::new(-0.1, 0.5).is_err());
        let p = ThresholdPolicy::new(0.5, 2.0).unwrap();
        assert_eq!(p.decide(0.5), 0); // boundary tie goes low
        assert_eq!(p.decide(-1.0), 1);
        assert_eq!(p.decide(2.0), 1);
        assert_eq!(p.decide(2.1), 2);
        let s = ThresholdPolicy::silence();
        assert_eq!(s.decide(1e12), 0);
        assert_eq!(s.width(), 0.0);
    }

    #[test]
    fn stage_cost_pure_strategies() {
        let m = laplace(1.0);
        let c = costs(0.3, 1.5);
        // Never transmitting pays the full source variance.
        let never = stage_cost(&m, 1.0, &c, &ThresholdPolicy::silence());
        assert!((never.cost - 2.0).abs() < 1e-12);
        assert_eq!(never.comm_part, 0.0);
        // Always using the perfect channel pays c2 and nothing else.
        let always = stage_cost(&m, 1.0, &c, &ThresholdPolicy::new(0.0, 0.0).unwrap());
        assert!((always.cost - 1.5).abs() < 1e-12);
        assert_eq!(always.distortion_part, 0.0);
        // Free noisy channel on the whole line: Var(X|X>0) * P(X>0) * 2/(γ+1).
        let noisy = stage_cost(&m, 1.0, &costs(0.0, 9.0), &ThresholdPolicy::new(0.0, f64::INFINITY).unwrap());
        assert!((noisy.cost - 0.5).abs() < 1e-12, "got {}", noisy.cost);
    }

    #[test]
    fn stage_cost_splits_add_up() {
        let m = laplace(0.8);
        let c = costs(0.1, 0.9);
        let s = stage_cost(&m, 2.0, &c, &ThresholdPolicy::new(0.4, 1.7).unwrap());
        assert!((s.cost - (s.distortion_part + s.comm_part)).abs() < 1e-12);
        assert!(s.cost <= m.variance());
    }

    #[test]
    fn band_width_map_limits() {
        // Approaches 1/lambda from above as the width shrinks.
        assert!((band_width_map(1e-9, 1.0) - 1.0).abs() < 1e-9);
        assert!((band_width_map(1e-9, 2.0) - 0.5).abs() < 1e-9);
        // Grows like the width itself for wide bands.
        assert!((band_width_map(50.0, 1.0) - 50.0).abs() < 1e-9);
    }

    #[test]
    fn band_width_solve_matches_bisection_oracle() {
        let target = 2.341641;
        let w = band_width_solve(target, 1.0).unwrap();
        assert!((band_width_map(w, 1.0) - target).abs() < 1e-12);
        // Independent bisection oracle.
        let (mut lo, mut hi) = (1e-12, 100.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if band_width_map(mid, 1.0) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        assert!((w - 0.5 * (lo + hi)).abs() < 1e-9);
        assert!((w - 2.0359).abs() < 1e-4);
    }

    #[test]
    fn band_width_solve_rejects_low_targets() {
        assert!(matches!(
            band_width_solve(0.5, 1.0),
            Err(Error::TargetOutOfRange { .. })
        ));
        assert!(band_width_solve(1.0, 1.0).is_err());
    }

    #[test]
    fn laplace_solver_interior_instance() {
        let pol = solve_thresholds_laplace(1.0, 1.0, &costs(0.1, 1.0));
        assert!((pol.beta1() - 0.5839582593).abs() < 1e-8, "beta1={}", pol.beta1());
        assert!((pol.beta2() - 2.6198716846).abs() < 1e-8, "beta2={}", pol.beta2());
        assert!((pol.width() - 2.0359134253).abs() < 1e-8);
        let (r1, r2) = foc_residuals(&laplace(1.0), 1.0, &costs(0.1, 1.0), &pol).unwrap();
        assert!(r1.abs() < 1e-10 && r2.abs() < 1e-10, "residuals ({r1}, {r2})");
        let (g1, g2) = stage_cost_grad(&laplace(1.0), 1.0, &costs(0.1, 1.0), &pol).unwrap();
        assert!(g1.abs() < 1e-8 && g2.abs() < 1e-8);
    }

    #[test]
    fn laplace_solver_collapses_when_noisy_dominated() {
        let pol = solve_thresholds_laplace(1.0, 1.0, &costs(1.0, 0.5));
        assert!((pol.beta1() - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(pol.beta1(), pol.beta2());
    }

    #[test]
    fn noisy_only_solver() {
        let pol = solve_thresholds_noisy_only(1.0, 1.0, 0.1);
        assert!((pol.beta1() - 0.6f64.sqrt()).abs() < 1e-12);
        assert_eq!(pol.beta2(), f64::INFINITY);
        // 1-D grid oracle on the beta2 = inf edge.
        let m = laplace(1.0);
        let c = costs(0.1, f64::MAX.sqrt()); // perfect tail never used
        let ours = stage_cost(&m, 1.0, &CostPair::new(0.1, 0.0).unwrap(), &pol).cost;
        for i in 0..400 {
            let b1 = 3.0 * i as f64 / 399.0;
            let alt = ThresholdPolicy::new(b1, f64::INFINITY).unwrap();
            let cost = stage_cost(&m, 1.0, &CostPair::new(0.1, 0.0).unwrap(), &alt).cost;
            assert!(ours <= cost + 1e-9, "beta1={b1} beats solver: {cost} < {ours}");
        }
        let _ = c;
    }

    #[test]
    fn perfect_only_solver() {
        let pol = solve_thresholds_perfect_only(2.0);
        assert!((pol.beta1() - 2.0f64.sqrt()).abs() < 1e-15);
        assert_eq!(pol.beta1(), pol.beta2());
    }

    #[test]
    fn gradient_matches_finite_differences() {
        let m = laplace(1.0);
        let c = costs(0.15, 0.8);
        let gamma = 1.4;
        for (b1, b2) in [(0.3, 1.1), (0.8, 2.5), (0.05, 0.4)] {
            let pol = ThresholdPolicy::new(b1, b2).unwrap();
            let (g1, g2) = stage_cost_grad(&m, gamma, &c, &pol).unwrap();
            let h = 1e-6;
            let f = |a: f64, b: f64| stage_cost(&m, gamma, &c, &ThresholdPolicy::new(a, b).unwrap()).cost;
            let fd1 = (f(b1 + h, b2) - f(b1 - h, b2)) / (2.0 * h);
            let fd2 = (f(b1, b2 + h) - f(b1, b2 - h)) / (2.0 * h);
            assert!((g1 - fd1).abs() <= 1e-5 * g1.abs().max(1e-3), "g1={g1} fd={fd1}");
            assert!((g2 - fd2).abs() <= 1e-5 * g2.abs().max(1e-3), "g2={g2} fd={fd2}");
        }
    }

    #[test]
    fn gradient_high_snr_limit() {
        // As gamma grows the band term vanishes and dJ/dbeta1 tends to
        // 2 p(beta1) (beta1^2 - c1).
        let m = laplace(1.0);
        let c = costs(0.25, 0.9);
        let pol = ThresholdPolicy::new(0.7, 1.8).unwrap();
        let (g1, _) = stage_cost_grad(&m, 1e12, &c, &pol).unwrap();
        let limit = 2.0 * m.density(0.7) * (0.7 * 0.7 - c.c1);
        assert!((g1 - limit).abs() < 1e-9, "g1={g1} limit={limit}");
    }

    #[test]
    fn solver_handles_zero_noisy_price() {
        // Zero prices arise as dynamic-programming boundary cases.
        let pol = solve_thresholds_laplace(1.0, 1.0, &costs(0.0, 0.5));
        assert!(pol.beta1() > 0.0 && pol.beta2() < f64::INFINITY);
        let (r1, r2) = foc_residuals(&laplace(1.0), 1.0, &costs(0.0, 0.5), &pol).unwrap();
        assert!(r1.abs() < 1e-10 && r2.abs() < 1e-10);
        let pol = solve_thresholds_laplace(1.0, 1.0, &costs(0.0, 0.0));
        assert_eq!((pol.beta1(), pol.beta2()), (0.0, 0.0));
    }

    #[test]
    fn gradient_rejects_boundary_policies() {
        let m = laplace(1.0);
        let c = costs(0.1, 0.5);
        for pol in [
            ThresholdPolicy::new(0.5, 0.5).unwrap(),
            ThresholdPolicy::new(0.5, f64::INFINITY).unwrap(),
            ThresholdPolicy::new(0.0, 1.0).unwrap(),
        ] {
            assert!(matches!(
                stage_cost_grad(&m, 1.0, &c, &pol),
                Err(Error::UnsupportedBoundary)
            ));
        }
    }

    #[test]
    fn generic_matches_laplace_closed_form() {
        for (lambda, gamma, c1, c2) in [(1.0, 1.0, 0.1, 1.0), (0.7, 2.0, 0.02, 0.4), (2.0, 0.5, 0.3, 1.1)] {
            let m = laplace(lambda);
            let c = costs(c1, c2);
            let closed = solve_thresholds_laplace(lambda, gamma, &c);
            let generic = solve_thresholds_generic(&m, gamma, &c).unwrap();
            assert!(!generic.certified);
            assert!(
                (generic.policy.beta1() - closed.beta1()).abs() < 1e-6
                    && (generic.policy.beta2() - closed.beta2()).abs() < 1e-6,
                "lambda={lambda}: generic ({}, {}) vs closed ({}, {})",
                generic.policy.beta1(),
                generic.policy.beta2(),
                closed.beta1(),
                closed.beta2()
            );
        }
    }

    #[test]
    fn generic_collapsed_branch() {
        let m = SourceModel::uniform(1.0).unwrap();
        let g = solve_thresholds_generic(&m, 1.0, &costs(0.6, 0.5)).unwrap();
        assert!(g.certified);
        assert!((g.policy.beta1() - 0.5f64.sqrt()).abs() < 1e-12);
        assert_eq!(g.policy.beta1(), g.policy.beta2());
    }

    #[test]
    fn generic_uniform_instance_beats_grid() {
        // Uniform source on [-1, 1], gamma = 1, c1 = 0.01, c2 = 0.05.  The
        // stationary point has beta1 = sqrt(c2) and band width
        // 2 sqrt(2 (c2 - c1)); a fine grid search on the stage cost confirms
        // it is the minimum.
        let m = SourceModel::uniform(1.0).unwrap();
        let c = costs(0.01, 0.05);
        let g = solve_thresholds_generic(&m, 1.0, &c).unwrap();
        let b1_expect = 0.05f64.sqrt();
        let b2_expect = b1_expect + 2.0 * (2.0 * 0.04f64).sqrt();
        assert!((g.policy.beta1() - b1_expect).abs() < 1e-7, "beta1={}", g.policy.beta1());
        assert!((g.policy.beta2() - b2_expect).abs() < 1e-7, "beta2={}", g.policy.beta2());

        let mut grid_best = f64::INFINITY;
        let n = 201;
        for i in 0..n {
            let b1 = i as f64 / (n - 1) as f64;
            for j in i..n {
                let b2 = j as f64 / (n - 1) as f64;
                let cost = stage_cost(&m, 1.0, &c, &ThresholdPolicy::new(b1, b2).unwrap()).cost;
                grid_best = grid_best.min(cost);
            }
        }
        assert!(g.cost <= grid_best + 1e-12, "solver {} vs grid {grid_best}", g.cost);
        assert!(grid_best - g.cost < 1e-3);
    }

    #[test]
    fn stage_cost_from_signed_regions_matches_closed_route() {
        // Assemble the cost from explicit signed regions and the generic
        // moment machinery; it must agree with the one-sided closed route.
        let m = laplace(1.3);
        let gamma = 0.9;
        let c = costs(0.12, 0.65);
        let pol = ThresholdPolicy::new(0.35, 1.4).unwrap();
        let (b1, b2) = (pol.beta1(), pol.beta2());

        let t0 = Region::center_band(b1);
        let pos = Region::interval(b1, b2);
        let neg = Region::interval(-b2, -b1);
        let tails = Region::symmetric_tails(b2);

        let m0 = m.region_moments(&t0).unwrap();
        let mp = m.region_moments(&pos).unwrap();
        let mn = m.region_moments(&neg).unwrap();
        let p2 = m.region_prob(&tails);

        let j = m0.var * m0.prob
            + c.c2 * p2
            + (c.c1 + 0.0) * (mp.prob + mn.prob)
            + (mp.var * mp.prob + mn.var * mn.prob) / (gamma + 1.0);
        let s = stage_cost(&m, gamma, &c, &pol);
        assert!((j - s.cost).abs() < 1e-10, "region route {j} vs closed {}", s.cost);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(48))]

        #[test]
        fn prop_band_width_map_is_strictly_increasing(
            lambda in 0.3f64..3.0,
            a in 1e-6f64..5.0,
            d in 1e-6f64..5.0,
        ) {
            prop_assert!(band_width_map(a + d, lambda) > band_width_map(a, lambda));
        }

        #[test]
        fn prop_solver_beats_pure_strategies(
            lambda in 0.4f64..2.5,
            gamma in 0.3f64..4.0,
            c1 in 0.0f64..1.0,
            dc in 0.001f64..1.5,
        ) {
            let c = costs(c1, c1 + dc);
            let m = laplace(lambda);
            let sol = solve_stage_laplace(lambda, gamma, &c);
            let var = m.variance();
            prop_assert!(sol.cost <= var + 1e-10);
            prop_assert!(sol.cost <= c.c2 + 1e-10);
            let noisy_everywhere = stage_cost(&m, gamma, &c, &ThresholdPolicy::new(0.0, f64::INFINITY).unwrap());
            prop_assert!(sol.cost <= noisy_everywhere.cost + 1e-10);
        }

        #[test]
        fn prop_interior_solution_has_zero_residuals(
            lambda in 0.4f64..2.5,
            gamma in 0.3f64..4.0,
            c1 in 0.005f64..1.0,
            dc in 0.01f64..1.5,
        ) {
            let c = costs(c1, c1 + dc);
            let pol = solve_thresholds_laplace(lambda, gamma, &c);
            let (r1, r2) = foc_residuals(&laplace(lambda), gamma, &c, &pol).unwrap();
            prop_assert!(r1.abs() < 1e-10, "r1={r1}");
            prop_assert!(r2.abs() < 1e-10, "r2={r2}");
        }

        #[test]
        fn prop_stage_cost_monotone_in_prices_and_snr(
            lambda in 0.4f64..2.5,
            gamma in 0.3f64..4.0,
            c1 in 0.0f64..1.0,
            c2 in 0.0f64..2.0,
            b1 in 0.0f64..2.0,
            w in 0.01f64..3.0,
            bump in 0.01f64..1.0,
        ) {
            let m = laplace(lambda);
            let pol = ThresholdPolicy::new(b1, b1 + w).unwrap();
            let base = stage_cost(&m, gamma, &costs(c1, c2), &pol).cost;
            let up_c1 = stage_cost(&m, gamma, &costs(c1 + bump, c2), &pol).cost;
            let up_c2 = stage_cost(&m, gamma, &costs(c1, c2 + bump), &pol).cost;
            let up_gamma = stage_cost(&m, gamma + bump, &costs(c1, c2), &pol).cost;
            prop_assert!(up_c1 >= base - 1e-12);
            prop_assert!(up_c2 >= base - 1e-12);
            prop_assert!(up_gamma <= base + 1e-12);
        }
    }
}
