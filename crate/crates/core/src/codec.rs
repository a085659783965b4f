//! Power-normalized affine codec with a one-bit sign side channel, and the
//! additive-noise channel it transmits through.
//!
//! A noisy transmission sends `y = s * alpha * (x - s*b)` where `s` is the
//! sign of the sample, `b` the conditional mean of the positive noisy band,
//! and `alpha = sqrt(power / var_plus)` the gain that meets the transmit
//! power budget with equality.  The decoder shrinks by `gamma/(gamma+1)` and
//! re-centers, which is the minimum-MSE affine receiver; its mean squared
//! error is `var_plus / (gamma + 1)` for any zero-mean noise law with the
//! right variance, so three interchangeable noise shapes are provided.

use rand::Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::sources::{Region, SourceModel};

/// Shape of the additive channel noise.  All shapes are zero mean with the
/// variance taken from the channel spec; analytic costs depend on the
/// variance alone.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NoiseKind {
    Gaussian,
    Laplace,
    Uniform,
}

/// Transmit power budget and channel noise law.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct ChannelSpec {
    power: f64,
    noise_var: f64,
    noise_kind: NoiseKind,
}

impl ChannelSpec {
    pub fn new(power: f64, noise_var: f64, noise_kind: NoiseKind) -> Result<Self> {
        if !(power > 0.0) || !power.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "transmit power must be positive and finite, got {power}"
            )));
        }
        if !(noise_var > 0.0) || !noise_var.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "noise variance must be positive and finite, got {noise_var}"
            )));
        }
        Ok(ChannelSpec { power, noise_var, noise_kind })
    }

    /// Channel with a given SNR against unit noise variance.
    pub fn from_gamma(gamma: f64, noise_kind: NoiseKind) -> Result<Self> {
        ChannelSpec::new(gamma, 1.0, noise_kind)
    }

    pub fn power(&self) -> f64 {
        self.power
    }

    pub fn noise_var(&self) -> f64 {
        self.noise_var
    }

    pub fn noise_kind(&self) -> NoiseKind {
        self.noise_kind
    }

    /// Signal-to-noise ratio `power / noise_var`, recomputed on every call so
    /// it can never go stale.
    pub fn gamma(&self) -> f64 {
        self.power / self.noise_var
    }

    /// One zero-mean noise draw with variance `noise_var`.
    pub fn sample_noise<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let sigma = self.noise_var.sqrt();
        match self.noise_kind {
            NoiseKind::Gaussian => Normal::new(0.0, sigma).expect("sigma is finite").sample(rng),
            NoiseKind::Laplace => {
                // Inverse CDF with scale sigma/sqrt(2) so the variance is sigma^2.
                let b = sigma / std::f64::consts::SQRT_2;
                let u: f64 = rng.random();
                if u < 0.5 {
                    b * (2.0 * u).max(f64::MIN_POSITIVE).ln()
                } else {
                    -b * (2.0 * (1.0 - u)).ln()
                }
            }
            NoiseKind::Uniform => {
                let w = sigma * 3.0f64.sqrt();
                let u: f64 = rng.random();
                (2.0 * u - 1.0) * w
            }
        }
    }

    /// Passes an encoded value through the channel: `y + v`.
    pub fn transmit<R: Rng + ?Sized>(&self, y: f64, rng: &mut R) -> f64 {
        y + self.sample_noise(rng)
    }
}

/// Side-channel symbol: the sign of the transmitted sample.  Zero counts as
/// positive so the tie-break is deterministic.  A step with no noisy
/// transmission carries no symbol (`Option::None` at the call sites).
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum Sign {
    Neg,
    Pos,
}

impl Sign {
    pub fn of(x: f64) -> Sign {
        if x < 0.0 {
            Sign::Neg
        } else {
            Sign::Pos
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Sign::Neg => -1.0,
            Sign::Pos => 1.0,
        }
    }
}

/// Frozen per-band codec parameters: the conditional mean `b` and variance of
/// the positive noisy band, and the power-normalizing gain `alpha`.  By
/// symmetry the negative band has mean `-b` and the same variance.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CodecState {
    b: f64,
    var_plus: f64,
    alpha: f64,
}

/// Builds the codec for the noisy band `(beta1, beta2)`.
pub fn make_codec(
    model: &SourceModel,
    beta1: f64,
    beta2: f64,
    chan: &ChannelSpec,
) -> Result<CodecState> {
    if !(beta1 >= 0.0) || !(beta2 > beta1) {
        return Err(Error::InvalidParameter(format!(
            "noisy band requires 0 <= beta1 < beta2, got ({beta1}, {beta2})"
        )));
    }
    let moments = model.region_moments(&Region::interval(beta1, beta2))?;
    if moments.var == 0.0 {
        return Err(Error::DegenerateRegion);
    }
    Ok(CodecState {
        b: moments.mean,
        var_plus: moments.var,
        alpha: (chan.power() / moments.var).sqrt(),
    })
}

impl CodecState {
    /// Conditional mean of the positive noisy band.
    pub fn band_mean(&self) -> f64 {
        self.b
    }

    /// Conditional variance of the positive noisy band.
    pub fn band_var(&self) -> f64 {
        self.var_plus
    }

    /// Power-normalizing gain.
    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    /// Encodes a sample: `y = s * alpha * (x - s*b)`.  The sample's sign must
    /// agree with the side-channel symbol.
    pub fn encode(&self, x: f64, s: Sign) -> Result<f64> {
        if Sign::of(x) != s {
            return Err(Error::SignMismatch);
        }
        Ok(s.value() * self.alpha * (x - s.value() * self.b))
    }

    /// Decodes a received value: `(1/alpha) * gamma/(gamma+1) * s * y~ + s*b`.
    pub fn decode_noisy(&self, y_tilde: f64, s: Sign, chan: &ChannelSpec) -> f64 {
        let gamma = chan.gamma();
        (1.0 / self.alpha) * (gamma / (gamma + 1.0)) * s.value() * y_tilde + s.value() * self.b
    }
}

/// Estimate reported on a silent step: the conditional mean over the center
/// band `[-beta1, beta1]`, which is zero for every symmetric law.
pub fn decode_silent(model: &SourceModel, beta1: f64) -> Result<f64> {
    if !(beta1 >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "center band half-width must be nonnegative, got {beta1}"
        )));
    }
    let band = if beta1 == f64::INFINITY {
        Region::real_line()
    } else {
        Region::center_band(beta1)
    };
    model.truncated_mean(&band)
}
