//! Remote estimation with two channels: a cheap noisy one and a costly
//! perfect one.
//!
//! The crate solves the single-stage scheduling problem under per-use prices
//! ([`stage`]), prices channel uses inside a hard-budget horizon by dynamic
//! programming ([`dp`]), simulates the resulting pipeline end to end
//! ([`sim`]), and carries the uniform-source construction showing why the
//! sign side channel is needed at all ([`counterexample`]).  Probabilistic
//! groundwork (source laws, regions, truncated moments) lives in [`sources`];
//! the affine codec and the additive-noise channel in [`codec`].

// Negated comparisons like `!(x > 0.0)` are deliberate throughout: they treat
// NaN as invalid, which `x <= 0.0` would silently accept.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod codec;
pub mod counterexample;
pub mod dp;
pub mod error;
pub mod fmt;
pub mod quad;
pub mod sim;
pub mod sources;
pub mod stage;

pub use codec::{ChannelSpec, CodecState, NoiseKind, Sign};
pub use dp::{DpConfig, DpTable};
pub use error::{Error, Result};
pub use sim::{McSummary, StepRecord};
pub use sources::{Interval, Region, RegionMoments, SourceModel};
pub use stage::{CostPair, GenericSolution, StageSolution, ThresholdPolicy};
