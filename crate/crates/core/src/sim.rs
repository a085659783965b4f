//! Seeded Monte Carlo simulation of the full pipeline under a solved table:
//! source draw → scheduling decision → (encoder, noisy channel, side channel
//! | perfect channel | silence) → decoder → squared error.
//!
//! Episodes are reproducible: episode `i` of a run seeded with `m` always
//! uses the stream seeded by `episode_seed(m, i)`, so results are identical
//! under any execution order and the aggregation below reduces per-episode
//! totals in index order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use std::io::Write;

use crate::codec::{decode_silent, make_codec, ChannelSpec, Sign};
use crate::dp::{DpConfig, DpTable};
use crate::error::{Error, Result};
use crate::fmt::sig12;
use crate::sources::SourceModel;

/// One simulated stage.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StepRecord {
    pub t: usize,
    pub x: f64,
    /// Decision: 0 silent, 1 noisy, 2 perfect.
    pub u: u8,
    /// Side-channel symbol; present exactly when `u == 1`.
    pub s: Option<Sign>,
    /// Encoded value; present exactly when `u == 1`.
    pub y: Option<f64>,
    /// Received message; absent when `u == 0`, equals `x` when `u == 2`.
    pub y_tilde: Option<f64>,
    pub x_hat: f64,
    pub sq_err: f64,
    pub e_n_after: usize,
    pub e_p_after: usize,
}

/// Aggregate statistics over a batch of episodes.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize)]
pub struct McSummary {
    pub episodes: usize,
    pub mean_total_cost: f64,
    pub std_err: f64,
    pub mean_noisy_uses: f64,
    pub mean_perfect_uses: f64,
    pub frac_noisy_exhausted: f64,
    pub frac_perfect_exhausted: f64,
}

/// Derives the seed for one episode from the master seed: a SplitMix64
/// finalizer over the master seed advanced by the golden-ratio increment per
/// index.  Documented so external tooling can reproduce any single episode.
pub fn episode_seed(master_seed: u64, episode_index: u64) -> u64 {
    let mut z = master_seed.wrapping_add((episode_index.wrapping_add(1)).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn check_channel(config: &DpConfig, chan: &ChannelSpec) -> Result<()> {
    if (chan.gamma() - config.gamma).abs() > 1e-9 * config.gamma.max(1.0) {
        return Err(Error::InvalidParameter(format!(
            "channel SNR {} does not match the solved table's SNR {}",
            chan.gamma(),
            config.gamma
        )));
    }
    Ok(())
}

/// Simulates one episode under the table's per-state thresholds.
pub fn run_episode(table: &DpTable, chan: &ChannelSpec, seed: u64) -> Result<Vec<StepRecord>> {
    let config = *table.config();
    check_channel(&config, chan)?;
    let model = SourceModel::Laplace { lambda: config.lambda };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut e_n = config.noisy_budget;
    let mut e_p = config.perfect_budget;
    let mut trace = Vec::with_capacity(config.horizon);

    for t in 1..=config.horizon {
        let pol = table.policy_at(t, e_n, e_p)?;
        let x = model.sample(&mut rng);
        let u = pol.decide(x);
        let (s, y, y_tilde, x_hat) = match u {
            0 => {
                let x_hat = if pol.beta1() > 0.0 {
                    decode_silent(&model, pol.beta1())?
                } else {
                    0.0
                };
                (None, None, None, x_hat)
            }
            1 => {
                let s = Sign::of(x);
                let codec = make_codec(&model, pol.beta1(), pol.beta2(), chan)?;
                let y = codec.encode(x, s)?;
                let y_tilde = chan.transmit(y, &mut rng);
                let x_hat = codec.decode_noisy(y_tilde, s, chan);
                e_n -= 1;
                (Some(s), Some(y), Some(y_tilde), x_hat)
            }
            _ => {
                e_p -= 1;
                (None, None, Some(x), x)
            }
        };
        let err = x - x_hat;
        trace.push(StepRecord {
            t,
            x,
            u,
            s,
            y,
            y_tilde,
            x_hat,
            sq_err: err * err,
            e_n_after: e_n,
            e_p_after: e_p,
        });
    }
    Ok(trace)
}

/// Runs `episodes` independent episodes (in parallel; the reduction is in
/// episode order, so the result does not depend on scheduling).
pub fn monte_carlo(
    table: &DpTable,
    chan: &ChannelSpec,
    episodes: usize,
    master_seed: u64,
) -> Result<McSummary> {
    if episodes < 1 {
        return Err(Error::InvalidParameter("need at least one episode".into()));
    }
    check_channel(table.config(), chan)?;
    let per: Vec<(f64, usize, usize)> = (0..episodes)
        .into_par_iter()
        .map(|i| {
            let trace = run_episode(table, chan, episode_seed(master_seed, i as u64))?;
            let total: f64 = trace.iter().map(|r| r.sq_err).sum();
            let noisy = trace.iter().filter(|r| r.u == 1).count();
            let perfect = trace.iter().filter(|r| r.u == 2).count();
            Ok((total, noisy, perfect))
        })
        .collect::<Result<Vec<_>>>()?;

    let n = episodes as f64;
    let mean = per.iter().map(|p| p.0).sum::<f64>() / n;
    let ss = per.iter().map(|p| (p.0 - mean) * (p.0 - mean)).sum::<f64>();
    let std_err = if episodes > 1 { (ss / (n - 1.0) / n).sqrt() } else { 0.0 };
    let config = table.config();
    Ok(McSummary {
        episodes,
        mean_total_cost: mean,
        std_err,
        mean_noisy_uses: per.iter().map(|p| p.1 as f64).sum::<f64>() / n,
        mean_perfect_uses: per.iter().map(|p| p.2 as f64).sum::<f64>() / n,
        frac_noisy_exhausted: per.iter().filter(|p| p.1 == config.noisy_budget).count() as f64 / n,
        frac_perfect_exhausted: per.iter().filter(|p| p.2 == config.perfect_budget).count() as f64
            / n,
    })
}

/// Remaining-budget staircase of a trace: `(t, e_n, e_p)` starting from the
/// pre-episode budgets at `t = 0`.
pub fn sample_path(trace: &[StepRecord]) -> Vec<(usize, usize, usize)> {
    let mut out = Vec::with_capacity(trace.len() + 1);
    if let Some(first) = trace.first() {
        let start_n = first.e_n_after + usize::from(first.u == 1);
        let start_p = first.e_p_after + usize::from(first.u == 2);
        out.push((0, start_n, start_p));
    }
    out.extend(trace.iter().map(|r| (r.t, r.e_n_after, r.e_p_after)));
    out
}

/// Writes a trace as CSV with a `#`-prefixed metadata header; absent values
/// are empty fields and the side-channel symbol prints as `+1`/`-1`.
pub fn write_trace_csv<W: Write>(
    mut w: W,
    trace: &[StepRecord],
    config: &DpConfig,
    chan: &ChannelSpec,
    seed: u64,
) -> Result<()> {
    writeln!(w, "# artifact=remest version={}", env!("CARGO_PKG_VERSION"))?;
    writeln!(
        w,
        "# kind=trace horizon={} n1={} n2={} lambda={} gamma={} power={} noise_var={} noise={:?} seed={seed}",
        config.horizon,
        config.noisy_budget,
        config.perfect_budget,
        sig12(config.lambda),
        sig12(config.gamma),
        sig12(chan.power()),
        sig12(chan.noise_var()),
        chan.noise_kind(),
    )?;
    writeln!(w, "t,x,u,s,y,y_tilde,x_hat,sq_err,e_n_after,e_p_after")?;
    let opt = |v: Option<f64>| v.map(sig12).unwrap_or_default();
    for r in trace {
        let s = match r.s {
            Some(Sign::Pos) => "+1",
            Some(Sign::Neg) => "-1",
            None => "",
        };
        writeln!(
            w,
            "{},{},{},{},{},{},{},{},{},{}",
            r.t,
            sig12(r.x),
            r.u,
            s,
            opt(r.y),
            opt(r.y_tilde),
            sig12(r.x_hat),
            sig12(r.sq_err),
            r.e_n_after,
            r.e_p_after
        )?;
    }
    Ok(())
}
