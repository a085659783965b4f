//! Source laws, regions of the real line, truncated moments, and sampling.
//!
//! Every cost formula in the crate reduces to probabilities and conditional
//! first/second moments of the source over unions of intervals.  Two
//! symmetric unimodal families are built in — the Laplace law with inverse
//! scale `lambda` (density `(lambda/2) e^{-lambda |x|}`) and the uniform law
//! on `[-half_width, half_width]` — and both carry closed-form interval
//! moments.  [`moments_by_quadrature`] is the density-agnostic fallback for
//! anything else.
//!
//! Numerical notes: single-interval Laplace moments are computed in
//! coordinates local to the interval so far-tail intervals neither underflow
//! nor cancel, and multi-interval regions are combined with the centered
//! mixture identity `Var = sum w_i (v_i + (m_i - m)^2)` which is stable for
//! widely separated pieces.

use rand::Rng;

use crate::error::{Error, Result};
use crate::quad;

/// A symmetric unimodal source law.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub enum SourceModel {
    /// Double-exponential density `(lambda/2) e^{-lambda |x|}`.
    Laplace { lambda: f64 },
    /// Flat density `1/(2 half_width)` on `[-half_width, half_width]`.
    Uniform { half_width: f64 },
}

/// One interval of the extended real line.  Endpoint openness is tracked for
/// membership tests but carries no measure, so moment computations ignore it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_open: bool,
    pub hi_open: bool,
}

impl Interval {
    pub fn open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_open: true, hi_open: true }
    }

    pub fn closed(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_open: false, hi_open: false }
    }

    /// Half-open `(lo, hi]`, the shape scheduling regions naturally take.
    pub fn left_open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_open: true, hi_open: false }
    }

    /// Half-open `[lo, hi)`.
    pub fn right_open(lo: f64, hi: f64) -> Self {
        Interval { lo, hi, lo_open: false, hi_open: true }
    }

    pub fn contains(&self, x: f64) -> bool {
        let above = if self.lo_open { x > self.lo } else { x >= self.lo };
        let below = if self.hi_open { x < self.hi } else { x <= self.hi };
        above && below
    }
}

/// A finite union of disjoint intervals, sorted by left endpoint.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Region {
    intervals: Vec<Interval>,
}

impl Region {
    /// Builds a region after sorting and validating the intervals.
    pub fn new(mut intervals: Vec<Interval>) -> Result<Self> {
        for iv in &intervals {
            if iv.lo.is_nan() || iv.hi.is_nan() {
                return Err(Error::InvalidParameter("interval endpoint is NaN".into()));
            }
            if iv.lo > iv.hi {
                return Err(Error::InvalidParameter(format!(
                    "interval has lo={} > hi={}",
                    iv.lo, iv.hi
                )));
            }
        }
        intervals.sort_by(|a, b| a.lo.total_cmp(&b.lo));
        for pair in intervals.windows(2) {
            if pair[0].hi > pair[1].lo {
                return Err(Error::InvalidParameter(format!(
                    "intervals overlap: ({}, {}) and ({}, {})",
                    pair[0].lo, pair[0].hi, pair[1].lo, pair[1].hi
                )));
            }
        }
        Ok(Region { intervals })
    }

    /// Single open interval `(lo, hi)`.
    pub fn interval(lo: f64, hi: f64) -> Self {
        Region { intervals: vec![Interval::open(lo, hi)] }
    }

    /// The symmetric center band `[-half_width, half_width]`.
    pub fn center_band(half_width: f64) -> Self {
        Region { intervals: vec![Interval::closed(-half_width, half_width)] }
    }

    /// The symmetric pair `[-outer, -inner) ∪ (inner, outer]`.
    pub fn symmetric_band(inner: f64, outer: f64) -> Self {
        Region {
            intervals: vec![
                Interval::right_open(-outer, -inner),
                Interval::left_open(inner, outer),
            ],
        }
    }

    /// The symmetric tails `(-inf, -inner) ∪ (inner, inf)`.
    pub fn symmetric_tails(inner: f64) -> Self {
        Region {
            intervals: vec![
                Interval::right_open(f64::NEG_INFINITY, -inner),
                Interval::left_open(inner, f64::INFINITY),
            ],
        }
    }

    pub fn real_line() -> Self {
        Region { intervals: vec![Interval::open(f64::NEG_INFINITY, f64::INFINITY)] }
    }

    pub fn empty() -> Self {
        Region { intervals: Vec::new() }
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.intervals
    }

    pub fn is_empty(&self) -> bool {
        self.intervals.iter().all(|iv| iv.lo >= iv.hi)
    }

    pub fn contains(&self, x: f64) -> bool {
        self.intervals.iter().any(|iv| iv.contains(x))
    }

    /// Complement within the real line.  Endpoint flags of the result are
    /// chosen closed; openness carries no measure.
    pub fn complement(&self) -> Region {
        let mut out = Vec::new();
        let mut cursor = f64::NEG_INFINITY;
        for iv in &self.intervals {
            if iv.lo > cursor {
                out.push(Interval::closed(cursor, iv.lo));
            }
            cursor = cursor.max(iv.hi);
        }
        if cursor < f64::INFINITY {
            out.push(Interval::closed(cursor, f64::INFINITY));
        }
        Region { intervals: out }
    }

    /// Pointwise intersection with another region (used for overlap checks).
    pub fn intersect(&self, other: &Region) -> Region {
        let mut out = Vec::new();
        for a in &self.intervals {
            for b in &other.intervals {
                let lo = a.lo.max(b.lo);
                let hi = a.hi.min(b.hi);
                if lo < hi {
                    out.push(Interval::open(lo, hi));
                }
            }
        }
        out.sort_by(|x, y| x.lo.total_cmp(&y.lo));
        Region { intervals: out }
    }
}

/// Probability mass, conditional mean, and conditional variance of the source
/// over a region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegionMoments {
    pub prob: f64,
    pub mean: f64,
    pub var: f64,
}

/// Variance of a unit-rate exponential truncated to `[0, u]`, i.e.
/// `1 - (u/2)^2 / sinh(u/2)^2`.  Series below the switch point avoids the
/// `1 - (1 - u^2/12)` cancellation.
fn truncated_exp_var_unit(u: f64) -> f64 {
    if u == f64::INFINITY {
        return 1.0;
    }
    if u < 0.05 {
        let u2 = u * u;
        return u2 / 12.0 - u2 * u2 / 240.0 + u2 * u2 * u2 / 6048.0;
    }
    let v = 0.5 * u;
    let r = v / v.sinh();
    1.0 - r * r
}

/// Mean offset of a unit-rate exponential truncated to `[0, u]`:
/// `1 - u/(e^u - 1)`.
fn truncated_exp_mean_unit(u: f64) -> f64 {
    if u == f64::INFINITY {
        return 1.0;
    }
    if u < 1e-8 {
        return u * (0.5 - u / 12.0);
    }
    1.0 - u / u.exp_m1()
}

impl SourceModel {
    pub fn laplace(lambda: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "laplace inverse scale must be positive and finite, got {lambda}"
            )));
        }
        Ok(SourceModel::Laplace { lambda })
    }

    pub fn uniform(half_width: f64) -> Result<Self> {
        if !(half_width > 0.0) || !half_width.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "uniform half width must be positive and finite, got {half_width}"
            )));
        }
        Ok(SourceModel::Uniform { half_width })
    }

    pub fn density(&self, x: f64) -> f64 {
        match *self {
            SourceModel::Laplace { lambda } => 0.5 * lambda * (-lambda * x.abs()).exp(),
            SourceModel::Uniform { half_width } => {
                if x.abs() <= half_width {
                    0.5 / half_width
                } else {
                    0.0
                }
            }
        }
    }

    pub fn cdf(&self, x: f64) -> f64 {
        match *self {
            SourceModel::Laplace { lambda } => {
                if x < 0.0 {
                    0.5 * (lambda * x).exp()
                } else {
                    1.0 - 0.5 * (-lambda * x).exp()
                }
            }
            SourceModel::Uniform { half_width } =>

                ((x + half_width) / (2.0 * half_width)).clamp(0.0, 1.0),
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            SourceModel::Laplace { lambda } => 2.0 / (lambda * lambda),
            SourceModel::Uniform { half_width } => half_width * half_width / 3.0,
        }
    }

    /// Endpoints outside of which the density vanishes.
    pub fn support(&self) -> (f64, f64) {
        match *self {
            SourceModel::Laplace { .. } => (f64::NEG_INFINITY, f64::INFINITY),
            SourceModel::Uniform { half_width } => (-half_width, half_width),
        }
    }

    /// Moments of one interval `[a, b] ⊆ [0, inf)` of a Laplace law,
    /// computed in coordinates local to `a`.
    fn laplace_positive_interval(lambda: f64, a: f64, b: f64) -> (f64, f64, f64) {
        debug_assert!(a >= 0.0 && b >= a);
        let head = 0.5 * (-lambda * a).exp();
        if b == f64::INFINITY {
            return (head, a + 1.0 / lambda, 1.0 / (lambda * lambda));
        }
        let width = b - a;
        let u = lambda * width;
        let prob = head * (-(-u).exp_m1());
        let mean = a + truncated_exp_mean_unit(u) / lambda;
        let var = truncated_exp_var_unit(u) / (lambda * lambda);
        (prob, mean, var)
    }

    /// `(prob, mean, var)` of the source conditioned on one interval; a zero
    /// probability yields `(0, 0, 0)`.
    fn interval_moments(&self, lo: f64, hi: f64) -> (f64, f64, f64) {
        if !(hi > lo) {
            return (0.0, 0.0, 0.0);
        }
        match *self {
            SourceModel::Uniform { half_width } => {
                let a = lo.max(-half_width);
                let b = hi.min(half_width);
                if !(b > a) {
                    return (0.0, 0.0, 0.0);
                }
                let len = b - a;
                (len / (2.0 * half_width), 0.5 * (a + b), len * len / 12.0)
            }
            SourceModel::Laplace { lambda } => {
                if lo >= 0.0 {
                    Self::laplace_positive_interval(lambda, lo, hi)
                } else if hi <= 0.0 {
                    let (p, m, v) = Self::laplace_positive_interval(lambda, -hi, -lo);
                    (p, -m, v)
                } else {
                    let neg = Self::laplace_positive_interval(lambda, 0.0, -lo);
                    let pos = Self::laplace_positive_interval(lambda, 0.0, hi);
                    mix(&[(neg.0, -neg.1, neg.2), pos])
                }
            }
        }
    }

    /// Probability that the source lands in the region.
    pub fn region_prob(&self, region: &Region) -> f64 {
        region
            .intervals()
            .iter()
            .map(|iv| self.interval_moments(iv.lo, iv.hi).0)
            .sum()
    }

    /// Probability, conditional mean, and conditional variance over the
    /// region.  Fails if the region carries no mass.
    pub fn region_moments(&self, region: &Region) -> Result<RegionMoments> {
        let pieces: Vec<(f64, f64, f64)> = region
            .intervals()
            .iter()
            .map(|iv| self.interval_moments(iv.lo, iv.hi))
            .filter(|p| p.0 > 0.0)
            .collect();
        if pieces.is_empty() {
            return Err(Error::ZeroProbabilityRegion);
        }
        let (prob, mean, var) = mix(&pieces);
        Ok(RegionMoments { prob, mean, var })
    }

    /// `E[X | X in region]`.
    pub fn truncated_mean(&self, region: &Region) -> Result<f64> {
        Ok(self.region_moments(region)?.mean)
    }

    /// `Var(X | X in region)`.
    pub fn truncated_var(&self, region: &Region) -> Result<f64> {
        Ok(self.region_moments(region)?.var)
    }

    /// One i.i.d. draw via the inverse CDF, so a seeded stream is exactly
    /// reproducible.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let u: f64 = rng.random();
        match *self {
            SourceModel::Uniform { half_width } => (2.0 * u - 1.0) * half_width,
            SourceModel::Laplace { lambda } => {
                if u < 0.5 {
                    (2.0 * u).max(f64::MIN_POSITIVE).ln() / lambda
                } else {
                    -(2.0 * (1.0 - u)).ln() / lambda
                }
            }
        }
    }

    /// Quantile function (inverse CDF).
    pub fn quantile(&self, p: f64) -> f64 {
        debug_assert!((0.0..=1.0).contains(&p));
        match *self {
            SourceModel::Uniform { half_width } => (2.0 * p - 1.0) * half_width,
            SourceModel::Laplace { lambda } => {
                if p < 0.5 {
                    (2.0 * p).max(f64::MIN_POSITIVE).ln() / lambda
                } else {
                    -(2.0 * (1.0 - p)).max(f64::MIN_POSITIVE).ln() / lambda
                }
            }
        }
    }

    /// Finds `beta2'` such that `(beta1', beta2')` carries the same mass as
    /// `(beta1, beta2)`, for `0 <= beta1 <= beta1'`.  Root solve on the CDF,
    /// probability matched to better than 1e-12.
    pub fn shifted_interval(&self, beta1: f64, beta1_new: f64, beta2: f64) -> Result<f64> {
        if !(beta1 >= 0.0) || !(beta1_new >= beta1) || !(beta2 >= beta1) {
            return Err(Error::InvalidParameter(format!(
                "shift requires 0 <= beta1 <= beta1' and beta2 >= beta1; got \
                 beta1={beta1}, beta1'={beta1_new}, beta2={beta2}"
            )));
        }
        let mass = self.cdf(beta2.min(f64::MAX)) - self.cdf(beta1);
        let mass = if beta2 == f64::INFINITY { 1.0 - self.cdf(beta1) } else { mass };
        let tail = 1.0 - self.cdf(beta1_new);
        if mass > tail + 1e-15 {
            return Err(Error::InfeasibleShift { beta1_new });
        }
        let target = self.cdf(beta1_new) + mass;
        if target >= 1.0 {
            // All remaining mass: the matching right endpoint is the upper
            // support edge (finite for uniform, +inf for Laplace).
            return Ok(self.support().1);
        }

        // Bracket [beta1_new, hi] with cdf(hi) >= target, then bisect.
        let mut lo = beta1_new;
        let mut hi = beta1_new.max(1.0);
        let mut step = (beta2 - beta1).max(1.0);
        while self.cdf(hi) < target {
            hi += step;
            step *= 2.0;
            if hi > 1e300 {
                return Err(Error::InfeasibleShift { beta1_new });
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            if self.cdf(mid) < target {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        let mut root = 0.5 * (lo + hi);
        // Newton polish on the CDF.
        for _ in 0..4 {
            let p = self.density(root);
            if p <= 0.0 {
                break;
            }
            root -= (self.cdf(root) - target) / p;
        }
        Ok(root)
    }
}

/// Combines per-interval `(prob, mean, var)` triples into region moments with
/// the centered mixture identity.
fn mix(pieces: &[(f64, f64, f64)]) -> (f64, f64, f64) {
    let prob: f64 = pieces.iter().map(|p| p.0).sum();
    let mean: f64 = pieces.iter().map(|p| p.0 * p.1).sum::<f64>() / prob;
    let var: f64 = pieces
        .iter()
        .map(|p| {
            let d = p.1 - mean;
            p.0 * (p.2 + d * d)
        })
        .sum::<f64>()
        / prob;
    (prob, mean, var)
}

/// Region moments of an arbitrary density by adaptive quadrature — the
/// fallback path for laws without closed forms, and an independent
/// cross-check for the ones with.  Intervals straddling zero are split there
/// because symmetric unimodal densities may kink at the mode.
pub fn moments_by_quadrature<F: Fn(f64) -> f64>(density: F, region: &Region) -> Result<RegionMoments> {
    let mut spans: Vec<(f64, f64)> = Vec::new();
    for iv in region.intervals() {
        if iv.lo < 0.0 && iv.hi > 0.0 {
            spans.push((iv.lo, 0.0));
            spans.push((0.0, iv.hi));
        } else {
            spans.push((iv.lo, iv.hi));
        }
    }
    let sum_over = |f: &dyn Fn(f64) -> f64| -> f64 {
        spans.iter().map(|&(a, b)| quad::integrate(f, a, b)).sum()
    };
    let prob = sum_over(&|x| density(x));
    if prob <= 0.0 {
        return Err(Error::ZeroProbabilityRegion);
    }
    let mean = sum_over(&|x| x * density(x)) / prob;
    let second_centered = sum_over(&|x| (x - mean) * (x - mean) * density(x));
    Ok(RegionMoments { prob, mean, var: second_centered / prob })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn laplace(lambda: f64) -> SourceModel {
        SourceModel::laplace(lambda).unwrap()
    }

    fn uniform(half_width: f64) -> SourceModel {
        SourceModel::uniform(half_width).unwrap()
    }

    #[test]
    fn density_values() {
        let m = laplace(1.0);
        assert_eq!(m.density(0.0), 0.5);
        assert_eq!(m.density(-2.0), m.density(2.0));
        let u = uniform(1.0);
        assert_eq!(u.density(0.3), 0.5);
        assert_eq!(u.density(1.5), 0.0);
    }

    #[test]
    fn density_is_symmetric_and_non_increasing_on_a_grid() {
        for m in [laplace(0.7), laplace(2.0), uniform(1.3)] {
            let mut prev = f64::INFINITY;
            for i in 0..400 {
                let x = 5.0 * i as f64 / 399.0;
                let d = m.density(x);
                assert_eq!(d, m.density(-x), "{m:?} not symmetric at {x}");
                assert!(d <= prev + 1e-15, "{m:?} increases at {x}");
                prev = d;
            }
        }
    }

    #[test]
    fn density_normalizes_by_quadrature() {
        for m in [laplace(0.7), laplace(2.3), uniform(1.4)] {
            let p = quad::integrate(|x| m.density(x), f64::NEG_INFINITY, f64::INFINITY);
            assert!((p - 1.0).abs() < 1e-10, "{m:?}: {p}");
        }
    }

    #[test]
    fn region_probabilities() {
        let u = uniform(1.0);
        assert!((u.region_prob(&Region::interval(0.0, 0.5)) - 0.25).abs() < 1e-15);

        let m = laplace(1.0);
        let tail = m.region_prob(&Region::interval(1.0, f64::INFINITY));
        assert!((tail - 0.5 * (-1.0f64).exp()).abs() < 1e-15);
        let oracle = quad::integrate(|x| m.density(x), 1.0, f64::INFINITY);
        assert!((tail - oracle).abs() < 1e-12);

        for m in [laplace(0.5), uniform(2.0)] {
            assert!((m.region_prob(&Region::real_line()) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn truncated_means() {
        let m = laplace(1.0);
        assert!((m.truncated_mean(&Region::interval(0.0, f64::INFINITY)).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(m.truncated_mean(&Region::center_band(2.0)).unwrap(), 0.0);

        let u = uniform(1.0);
        assert!((u.truncated_mean(&Region::interval(0.2, 0.6)).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn truncated_variances() {
        let m = laplace(1.0);
        // The tail of a Laplace is exponential, so its variance is 1/lambda^2.
        assert!((m.truncated_var(&Region::interval(1.0, f64::INFINITY)).unwrap() - 1.0).abs() < 1e-12);
        assert!((m.truncated_var(&Region::real_line()).unwrap() - 2.0).abs() < 1e-12);

        let u = uniform(1.0);
        let v = u.truncated_var(&Region::interval(-0.5, 0.1)).unwrap();
        assert!((v - 0.6 * 0.6 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn zero_probability_region_errors() {
        let u = uniform(1.0);
        let far = Region::interval(2.0, 3.0);
        assert!(matches!(u.truncated_mean(&far), Err(Error::ZeroProbabilityRegion)));
        assert!(matches!(u.truncated_var(&far), Err(Error::ZeroProbabilityRegion)));
        assert_eq!(u.region_prob(&far), 0.0);
    }

    #[test]
    fn far_tail_interval_is_stable() {
        // Memorylessness: conditional moments of (a, a+w) depend only on w.
        let m = laplace(1.0);
        for a in [0.0, 5.0, 40.0, 400.0] {
            let mom = m.region_moments(&Region::interval(a, a + 0.3)).unwrap();
            let base = m.region_moments(&Region::interval(0.0, 0.3)).unwrap();
            assert!((mom.mean - a - base.mean).abs() < 1e-10 * (1.0 + a), "a={a}");
            assert!((mom.var - base.var).abs() < 1e-13, "a={a} var={}", mom.var);
        }
    }

    #[test]
    fn closed_forms_match_quadrature() {
        let cases = [
            (laplace(1.0), Region::interval(0.3, 2.1)),
            (laplace(0.6), Region::interval(-1.0, 4.0)),
            (laplace(2.0), Region::symmetric_band(0.5, 1.7)),
            (uniform(1.5), Region::interval(-0.2, 0.9)),
            (uniform(1.0), Region::symmetric_band(0.1, 0.8)),
        ];
        for (m, r) in cases {
            let closed = m.region_moments(&r).unwrap();
            let q = moments_by_quadrature(|x| m.density(x), &r).unwrap();
            assert!((closed.prob - q.prob).abs() < 1e-11, "{m:?} prob");
            assert!((closed.mean - q.mean).abs() < 1e-9, "{m:?} mean");
            assert!((closed.var - q.var).abs() < 1e-9, "{m:?} var");
        }
    }

    #[test]
    fn shifted_interval_uniform_preserves_length() {
        let u = uniform(1.0);
        let b2 = u.shifted_interval(0.1, 0.2, 0.3).unwrap();
        assert!((b2 - 0.4).abs() < 1e-12);
    }

    #[test]
    fn shifted_interval_identity() {
        let m = laplace(1.0);
        let b2 = m.shifted_interval(0.0, 0.0, 0.7).unwrap();
        assert!((b2 - 0.7).abs() < 1e-10);
    }

    #[test]
    fn shifted_interval_laplace_case() {
        // Mass match: e^{-1} - e^{-b2'} = e^{-0.5} - e^{-1}.
        let m = laplace(1.0);
        let b2 = m.shifted_interval(0.5, 1.0, 1.0).unwrap();
        let expect = -(2.0 * (-1.0f64).exp() - (-0.5f64).exp()).ln();
        assert!((b2 - expect).abs() < 1e-10, "got {b2}, want {expect}");
        let got = m.cdf(b2) - m.cdf(1.0);
        let want = m.cdf(1.0) - m.cdf(0.5);
        assert!((got - want).abs() < 1e-12);
    }

    #[test]
    fn shifted_interval_infeasible() {
        let u = uniform(1.0);
        // (0, 0.8) carries mass 0.4 but only 0.1 remains right of 0.8.
        assert!(matches!(
            u.shifted_interval(0.0, 0.8, 0.8),
            Err(Error::InfeasibleShift { .. })
        ));
    }

    #[test]
    fn seeded_sampling_is_deterministic() {
        let m = laplace(1.0);
        let mut a = ChaCha8Rng::seed_from_u64(42);
        let mut b = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..100 {
            assert_eq!(m.sample(&mut a), m.sample(&mut b));
        }
    }

    #[test]
    fn sample_moments_match_law() {
        let n = 1_000_000usize;
        for m in [laplace(1.0), uniform(1.0)] {
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            for _ in 0..n {
                let x = m.sample(&mut rng);
                sum += x;
                sum2 += x * x;
                if let SourceModel::Uniform { half_width } = m {
                    assert!(x.abs() <= half_width);
                }
            }
            let mean = sum / n as f64;
            let var = sum2 / n as f64 - mean * mean;
            let true_var = m.variance();
            // 4 standard errors on the mean and on the variance estimate.
            let se_mean = (true_var / n as f64).sqrt();
            assert!(mean.abs() < 4.0 * se_mean, "{m:?}: mean {mean}");
            // SE of the sample variance uses the fourth moment; bound it
            // loosely by 3*var^2 (exact for Gaussian, larger for Laplace).
            let se_var = (6.0 * true_var * true_var / n as f64).sqrt();
            assert!((var - true_var).abs() < 4.0 * se_var, "{m:?}: var {var}");
        }
    }

    #[test]
    fn region_validation() {
        assert!(Region::new(vec![Interval::open(0.0, 1.0), Interval::open(0.5, 2.0)]).is_err());
        assert!(Region::new(vec![Interval::open(1.0, 0.0)]).is_err());
        let r = Region::new(vec![Interval::open(2.0, 3.0), Interval::open(0.0, 1.0)]).unwrap();
        assert!(r.intervals()[0].lo < r.intervals()[1].lo);
    }

    #[test]
    fn complement_partitions_mass() {
        let m = laplace(0.8);
        let r = Region::symmetric_band(0.4, 1.9);
        let total = m.region_prob(&r) + m.region_prob(&r.complement());
        assert!((total - 1.0).abs() < 1e-12);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn prop_complement_sums_to_one(lambda in 0.3f64..3.0, a in -2.0f64..2.0, w in 0.01f64..3.0) {
            let m = laplace(lambda);
            let r = Region::interval(a, a + w);
            let s = m.region_prob(&r) + m.region_prob(&r.complement());
            prop_assert!((s - 1.0).abs() < 1e-10);
        }

        #[test]
        fn prop_symmetric_region_has_zero_mean(lambda in 0.3f64..3.0, inner in 0.0f64..1.5, w in 0.01f64..2.0) {
            let m = laplace(lambda);
            let r = Region::symmetric_band(inner, inner + w);
            prop_assert!(m.truncated_mean(&r).unwrap().abs() < 1e-12);
        }

        #[test]
        fn prop_interval_mean_closed_form(lambda in 0.4f64..2.5, b1 in 0.0f64..2.0, w in 0.02f64..4.0) {
            // Closed form for E[X | X in (b1, b2)] on the positive axis:
            // 1/lambda + b1 + w / (1 - e^{lambda w}).
            let m = laplace(lambda);
            let b2 = b1 + w;
            let mean = m.truncated_mean(&Region::interval(b1, b2)).unwrap();
            let direct = 1.0 / lambda + b1 + w / (1.0 - (lambda * w).exp());
            prop_assert!((mean - direct).abs() < 1e-10, "mean={mean} direct={direct}");
            let q = moments_by_quadrature(|x| m.density(x), &Region::interval(b1, b2)).unwrap();
            prop_assert!((mean - q.mean).abs() < 1e-9);
        }

        #[test]
        fn prop_mass_preserving_right_shift_grows_variance(
            is_laplace in proptest::bool::ANY,
            scale in 0.5f64..2.0,
            b1 in 0.0f64..1.0,
            w in 0.05f64..1.0,
            shift in 0.0f64..1.0,
        ) {
            let m = if is_laplace { laplace(scale) } else { uniform(2.0 * scale) };
            let b1p = b1 + shift;
            let b2 = b1 + w;
            match m.shifted_interval(b1, b1p, b2) {
                Ok(b2p) => {
                    let v0 = m.truncated_var(&Region::interval(b1, b2)).unwrap();
                    let v1 = m.truncated_var(&Region::interval(b1p, b2p)).unwrap();
                    prop_assert!(v1 >= v0 - 1e-10, "v0={v0} v1={v1}");
                }
                Err(Error::InfeasibleShift { .. }) => {} // uniform ran out of room
                Err(e) => return Err(TestCaseError::fail(format!("{e}"))),
            }
        }

        #[test]
        fn prop_variance_product_derivative_identities(
            lambda in 0.5f64..2.0,
            eta1 in 0.05f64..1.5,
            w in 0.1f64..2.0,
        ) {
            // d/d eta1 of Var * Prob is -p(eta1) (eta1 - mean)^2, and the
            // eta2 counterpart is +p(eta2) (eta2 - mean)^2.
            let m = laplace(lambda);
            let eta2 = eta1 + w;
            let vp = |a: f64, b: f64| {
                let mo = m.region_moments(&Region::interval(a, b)).unwrap();
                mo.var * mo.prob
            };
            let mean = m.truncated_mean(&Region::interval(eta1, eta2)).unwrap();
            let h = 1e-5;

            let fd1 = (vp(eta1 + h, eta2) - vp(eta1 - h, eta2)) / (2.0 * h);
            let an1 = -m.density(eta1) * (eta1 - mean) * (eta1 - mean);
            prop_assert!((fd1 - an1).abs() <= 1e-4 * an1.abs().max(1e-8), "fd={fd1} an={an1}");

            let fd2 = (vp(eta1, eta2 + h) - vp(eta1, eta2 - h)) / (2.0 * h);
            let an2 = m.density(eta2) * (eta2 - mean) * (eta2 - mean);
            prop_assert!((fd2 - an2).abs() <= 1e-4 * an2.abs().max(1e-8), "fd={fd2} an={an2}");
        }
    }
}
