//! Finite-horizon dynamic program under hard channel budgets.
//!
//! State is `(t, e_n, e_p)`: the stage and the remaining noisy/perfect
//! opportunities.  Backward induction prices a channel use at a state by its
//! opportunity cost — the value lost by walking into tomorrow with one fewer
//! opportunity:
//!
//! ```text
//! c1_eff = J(t+1, e_n - 1, e_p) - J(t+1, e_n, e_p)
//! c2_eff = J(t+1, e_n, e_p - 1) - J(t+1, e_n, e_p)
//! ```
//!
//! and then solves the priced single-stage problem at every state.  A channel
//! with no budget left is simply absent from the action set, which forces the
//! one-channel closed forms.  The solved table stores the value and the two
//! thresholds for every state, densely indexed, and can be exported to JSON
//! or CSV slices.

use std::collections::HashMap;
use std::io::Write;

use crate::error::{Error, Result};
use crate::fmt::sig12;
use crate::stage::{
    solve_thresholds_laplace, solve_thresholds_noisy_only, solve_thresholds_perfect_only,
    stage_cost, CostPair, ThresholdPolicy,
};
use crate::sources::SourceModel;

/// Problem description: horizon, budgets, source, and SNR.
#[derive(Debug, Clone, Copy, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct DpConfig {
    pub horizon: usize,
    pub noisy_budget: usize,
    pub perfect_budget: usize,
    pub lambda: f64,
    pub gamma: f64,
}

impl DpConfig {
    pub fn new(
        horizon: usize,
        noisy_budget: usize,
        perfect_budget: usize,
        lambda: f64,
        gamma: f64,
    ) -> Result<Self> {
        if horizon < 1 {
            return Err(Error::InvalidParameter("horizon must be at least 1".into()));
        }
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::InvalidParameter(format!("lambda must be positive, got {lambda}")));
        }
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::InvalidParameter(format!("gamma must be positive, got {gamma}")));
        }
        Ok(DpConfig { horizon, noisy_budget, perfect_budget, lambda, gamma })
    }
}

/// Solved value table plus per-state thresholds.
#[derive(Debug, Clone)]
pub struct DpTable {
    config: DpConfig,
    /// `J(t, e_n, e_p)` for `t` in `1..=horizon+1`, row-major in `(t, e_n, e_p)`.
    values: Vec<f64>,
    /// Thresholds for `t` in `1..=horizon`, same layout.
    beta1: Vec<f64>,
    beta2: Vec<f64>,
}

/// Optimal policy and expected cost of one stage with optional effective
/// prices; `None` means that channel is not in the action set.
pub fn stage_optimize(
    lambda: f64,
    gamma: f64,
    c1: Option<f64>,
    c2: Option<f64>,
) -> (ThresholdPolicy, f64) {
    let model = SourceModel::Laplace { lambda };
    let (policy, costs) = match (c1, c2) {
        (Some(c1), Some(c2)) => {
            let pair = CostPair::new(c1, c2).expect("effective prices are clamped nonnegative");
            (solve_thresholds_laplace(lambda, gamma, &pair), pair)
        }
        (Some(c1), None) => (
            solve_thresholds_noisy_only(lambda, gamma, c1),
            CostPair::new(c1, 0.0).expect("valid"),
        ),
        (None, Some(c2)) => (
            solve_thresholds_perfect_only(c2),
            CostPair::new(0.0, c2).expect("valid"),
        ),
        (None, None) => {
            return (ThresholdPolicy::silence(), model.variance());
        }
    };
    let cost = stage_cost(&model, gamma, &costs, &policy).cost;
    (policy, cost)
}

/// Memoization key: effective prices quantized at 1e-12 so states sharing
/// prices up to rounding reuse one solve, bit-reproducibly.
fn quantize(c: Option<f64>) -> i64 {
    match c {
        None => i64::MIN,
        Some(v) => (v * 1e12).round() as i64,
    }
}

/// Backward induction over the full `(t, e_n, e_p)` lattice.
pub fn solve(config: &DpConfig) -> DpTable {
    let t_rows = config.horizon + 1; // t = 1..=horizon+1
    let n1 = config.noisy_budget + 1;
    let n2 = config.perfect_budget + 1;
    let idx = |t: usize, en: usize, ep: usize| (t - 1) * n1 * n2 + en * n2 + ep;

    let mut values = vec![0.0f64; t_rows * n1 * n2];
    let mut beta1 = vec![f64::INFINITY; config.horizon * n1 * n2];
    let mut beta2 = vec![f64::INFINITY; config.horizon * n1 * n2];

    for t in (1..=config.horizon).rev() {
        let mut memo: HashMap<(i64, i64), (f64, f64, f64)> = HashMap::new();
        for en in 0..n1 {
            for ep in 0..n2 {
                let stay = values[idx(t + 1, en, ep)];
                let c1 = if en > 0 {
                    Some(nonneg_price(values[idx(t + 1, en - 1, ep)] - stay))
                } else {
                    None
                };
                let c2 = if ep > 0 {
                    Some(nonneg_price(values[idx(t + 1, en, ep - 1)] - stay))
                } else {
                    None
                };
                let key = (quantize(c1), quantize(c2));
                let (b1, b2, cost) = *memo.entry(key).or_insert_with(|| {
                    let (pol, cost) = stage_optimize(config.lambda, config.gamma, c1, c2);
                    (pol.beta1(), pol.beta2(), cost)
                });
                values[idx(t, en, ep)] = stay + cost;
                beta1[idx(t, en, ep)] = b1;
                beta2[idx(t, en, ep)] = b2;
            }
        }

        // Stage invariants: value never increases with budget, budgets beyond
        // the remaining stages change nothing, and exhausted-perfect states
        // with full coverage are exactly zero.
        let remaining = config.horizon - t + 1;
        for en in 0..n1 {
            for ep in 0..n2 {
                let v = values[idx(t, en, ep)];
                assert!(v >= 0.0, "negative value at ({t}, {en}, {ep}): {v}");
                if en > 0 {
                    assert!(
                        v <= values[idx(t, en - 1, ep)] + 1e-9,
                        "value increased in e_n at ({t}, {en}, {ep})"
                    );
                }
                if ep > 0 {
                    assert!(
                        v <= values[idx(t, en, ep - 1)] + 1e-9,
                        "value increased in e_p at ({t}, {en}, {ep})"
                    );
                }
                if en > remaining {
                    assert_eq!(
                        v,
                        values[idx(t, remaining, ep)],
                        "surplus noisy budget changed the value at ({t}, {en}, {ep})"
                    );
                }
                if ep > remaining {
                    assert_eq!(
                        v,
                        values[idx(t, en, remaining)],
                        "surplus perfect budget changed the value at ({t}, {en}, {ep})"
                    );
                }
                if ep >= remaining {
                    assert_eq!(v, 0.0, "free perfect coverage must zero the value");
                }
            }
        }
    }

    DpTable { config: *config, values, beta1, beta2 }
}

/// Effective prices are value differences and must be nonnegative up to
/// rounding; tiny negative dust is clamped, anything real is a bug.
fn nonneg_price(c: f64) -> f64 {
    assert!(c > -1e-9, "implied price went negative: {c}");
    c.max(0.0)
}

/// Backward accumulation with exogenous fixed prices substituted for the
/// implied ones: every stage then solves the identical priced problem, so the
/// total is `horizon` times the single-stage optimum.
pub fn solve_with_fixed_costs(
    horizon: usize,
    lambda: f64,
    gamma: f64,
    costs: &CostPair,
) -> (ThresholdPolicy, f64) {
    let policy = solve_thresholds_laplace(lambda, gamma, costs);
    let model = SourceModel::Laplace { lambda };
    let per_stage = stage_cost(&model, gamma, costs, &policy).cost;
    let mut total = 0.0;
    for _ in 0..horizon {
        total += per_stage;
    }
    (policy, total)
}

impl DpTable {
    pub fn config(&self) -> &DpConfig {
        &self.config
    }

    fn dims(&self) -> (usize, usize) {
        (self.config.noisy_budget + 1, self.config.perfect_budget + 1)
    }

    fn check_state(&self, t: usize, en: usize, ep: usize, t_max: usize) -> Result<usize> {
        let (n1, n2) = self.dims();
        if t < 1 || t > t_max || en >= n1 || ep >= n2 {
            return Err(Error::IndexOutOfRange(format!(
                "state (t={t}, e_n={en}, e_p={ep}) outside table with horizon {} and budgets ({}, {})",
                self.config.horizon, self.config.noisy_budget, self.config.perfect_budget
            )));
        }
        Ok((t - 1) * n1 * n2 + en * n2 + ep)
    }

    /// Cost-to-go `J(t, e_n, e_p)`; `t` ranges over `1..=horizon+1`.
    pub fn value(&self, t: usize, en: usize, ep: usize) -> Result<f64> {
        Ok(self.values[self.check_state(t, en, ep, self.config.horizon + 1)?])
    }

    /// Thresholds used at a state; `t` ranges over `1..=horizon`.
    pub fn policy_at(&self, t: usize, en: usize, ep: usize) -> Result<ThresholdPolicy> {
        let i = self.check_state(t, en, ep, self.config.horizon)?;
        ThresholdPolicy::new(self.beta1[i], self.beta2[i])
    }

    /// Effective prices at a state, `None` where the budget is exhausted.
    pub fn implied_costs(&self, t: usize, en: usize, ep: usize) -> Result<(Option<f64>, Option<f64>)> {
        self.check_state(t, en, ep, self.config.horizon)?;
        let stay = self.value(t + 1, en, ep)?;
        let c1 = if en > 0 {
            Some(nonneg_price(self.value(t + 1, en - 1, ep)? - stay))
        } else {
            None
        };
        let c2 = if ep > 0 {
            Some(nonneg_price(self.value(t + 1, en, ep - 1)? - stay))
        } else {
            None
        };
        Ok((c1, c2))
    }

    /// Serializes the table: config, flattened values (index order `t, e_n,
    /// e_p`), and both threshold arrays with `null` standing for infinity.
    pub fn to_json(&self) -> serde_json::Value {
        let wrap = |v: &[f64]| -> Vec<Option<f64>> {
            v.iter().map(|&x| if x.is_finite() { Some(x) } else { None }).collect()
        };
        serde_json::json!({
            "meta": {"artifact": "remest", "version": env!("CARGO_PKG_VERSION")},
            "config": self.config,
            "values": self.values,
            "beta1": wrap(&self.beta1),
            "beta2": wrap(&self.beta2),
        })
    }

    pub fn write_json<W: Write>(&self, mut w: W) -> Result<()> {
        serde_json::to_writer(&mut w, &self.to_json())?;
        w.write_all(b"\n")?;
        Ok(())
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        #[derive(serde::Deserialize)]
        struct File {
            config: DpConfig,
            values: Vec<f64>,
            beta1: Vec<Option<f64>>,
            beta2: Vec<Option<f64>>,
        }
        let file: File = serde_json::from_value(value.clone())?;
        let n_states = (file.config.noisy_budget + 1) * (file.config.perfect_budget + 1);
        if file.values.len() != (file.config.horizon + 1) * n_states
            || file.beta1.len() != file.config.horizon * n_states
            || file.beta2.len() != file.config.horizon * n_states
        {
            return Err(Error::InvalidParameter("table arrays do not match config dims".into()));
        }
        let unwrap = |v: Vec<Option<f64>>| -> Vec<f64> {
            v.into_iter().map(|x| x.unwrap_or(f64::INFINITY)).collect()
        };
        Ok(DpTable {
            config: file.config,
            values: file.values,
            beta1: unwrap(file.beta1),
            beta2: unwrap(file.beta2),
        })
    }

    pub fn read_json<R: std::io::Read>(r: R) -> Result<Self> {
        let value: serde_json::Value = serde_json::from_reader(r)?;
        Self::from_json(&value)
    }

    fn csv_meta(&self, kind: &str) -> String {
        let c = &self.config;
        format!(
            "# artifact=remest version={}\n# kind={kind} horizon={} n1={} n2={} lambda={} gamma={}\n",
            env!("CARGO_PKG_VERSION"),
            c.horizon,
            c.noisy_budget,
            c.perfect_budget,
            sig12(c.lambda),
            sig12(c.gamma),
        )
    }

    /// CSV of the full budget lattice at one stage.
    pub fn write_stage_slice_csv<W: Write>(&self, mut w: W, t: usize) -> Result<()> {
        self.check_state(t, 0, 0, self.config.horizon)?;
        let (n1, n2) = self.dims();
        write!(w, "{}", self.csv_meta(&format!("dp_stage_slice t={t}")))?;
        writeln!(w, "e_n,e_p,value,beta1,beta2")?;
        for en in 0..n1 {
            for ep in 0..n2 {
                let pol = self.policy_at(t, en, ep)?;
                writeln!(
                    w,
                    "{en},{ep},{},{},{}",
                    sig12(self.value(t, en, ep)?),
                    sig12(pol.beta1()),
                    sig12(pol.beta2())
                )?;
            }
        }
        Ok(())
    }

    /// CSV of the time series at fixed budgets.
    pub fn write_budget_slice_csv<W: Write>(&self, mut w: W, en: usize, ep: usize) -> Result<()> {
        self.check_state(1, en, ep, self.config.horizon)?;
        write!(w, "{}", self.csv_meta(&format!("dp_budget_slice e_n={en} e_p={ep}")))?;
        writeln!(w, "t,value,beta1,beta2")?;
        for t in 1..=self.config.horizon {
            let pol = self.policy_at(t, en, ep)?;
            writeln!(
                w,
                "{t},{},{},{}",
                sig12(self.value(t, en, ep)?),
                sig12(pol.beta1()),
                sig12(pol.beta2())
            )?;
        }
        Ok(())
    }
}
