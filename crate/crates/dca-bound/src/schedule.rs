//! Investment schedules, the per-interval GBM factor law and the exact
//! wealth/returns recursion.
//!
//! Conventions used everywhere in this crate:
//!
//! * Steps are 1-indexed. Step `k` evaluates wealth at time `t_k` and only
//!   the amounts `c_0 .. c_{k-1}` invested strictly before `t_k` enter the
//!   wealth `Y_k` and the return `R_k = Y_k / (c_0 + .. + c_{k-1})`.
//! * A schedule holding `n` (time, amount) pairs therefore supports steps
//!   `1 ..= n-1` for every operation that needs the evaluation time `t_k`
//!   (factor laws, bounds, moments, simulation). [`wealth_path`] alone also
//!   accepts a full-length factor path whose final factor runs from the last
//!   scheduled time to an arbitrary later terminal time, because the wealth
//!   arithmetic never consults the clock.
//! * Time is measured in years; schedules store absolute times rather than
//!   deltas, so non-equidistant schedules are first-class.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Drift and volatility of the log price: `log X(t) ~ N(mu t, sigma^2 t)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GbmParams {
    pub mu: f64,
    pub sigma: f64,
}

impl GbmParams {
    pub fn new(mu: f64, sigma: f64) -> Result<Self> {
        if !mu.is_finite() {
            return Err(Error::InvalidConfig(format!("non-finite drift {mu}")));
        }
        if !(sigma.is_finite() && sigma > 0.0) {
            return Err(Error::NonPositiveVolatility(sigma));
        }
        Ok(Self { mu, sigma })
    }

    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma
    }
}

/// Parameters `(m, v)` of a positive random variable with
/// `log W ~ N(m, v)`. `v = 0` (a point mass) is allowed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LogNormalLaw {
    pub log_mean: f64,
    pub log_var: f64,
}

impl LogNormalLaw {
    pub fn new(log_mean: f64, log_var: f64) -> Result<Self> {
        if !(log_var.is_finite() && log_var >= 0.0) {
            return Err(Error::NegativeLogVariance(log_var));
        }
        Ok(Self { log_mean, log_var })
    }
}

/// An ordered list of predetermined investments `c_k` at times `t_k`,
/// with `t_0 = 0`. Cumulative-amount prefix sums are precomputed once.
///
/// Values are immutable after construction; the type is `Send + Sync` and
/// safe to share across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct InvestmentSchedule {
    times: Vec<f64>,
    amounts: Vec<f64>,
    cum: Vec<f64>,
}

impl InvestmentSchedule {
    pub fn new(times: Vec<f64>, amounts: Vec<f64>) -> Result<Self> {
        if times.is_empty() || amounts.is_empty() {
            return Err(Error::EmptySchedule);
        }
        if times.len() != amounts.len() {
            return Err(Error::ScheduleLengthMismatch {
                times: times.len(),
                amounts: amounts.len(),
            });
        }
        if times[0] != 0.0 {
            return Err(Error::FirstTimeNotZero(times[0]));
        }
        for i in 1..times.len() {
            if !(times[i].is_finite() && times[i] > times[i - 1]) {
                return Err(Error::NonMonotoneTimes(i));
            }
        }
        for (i, &c) in amounts.iter().enumerate() {
            if !(c.is_finite() && c > 0.0) {
                return Err(Error::NonPositiveAmount(i));
            }
        }
        let mut cum = Vec::with_capacity(amounts.len());
        let mut acc = 0.0;
        for &c in &amounts {
            acc += c;
            cum.push(acc);
        }
        Ok(Self { times, amounts, cum })
    }

    /// Dollar cost averaging: one unit at each of `t = 0, 1, .., k_max`,
    /// supporting steps `1 ..= k_max`.
    pub fn dca(k_max: usize) -> Self {
        let n = k_max + 1;
        Self::new((0..n).map(|t| t as f64).collect(), vec![1.0; n])
            .expect("DCA schedule is always valid")
    }

    /// Lump sum `c_0` at `t = 0` evaluated at `horizon`: a two-entry
    /// schedule whose trailing amount never enters step-1 quantities.
    pub fn lump_sum(amount: f64, horizon: f64) -> Result<Self> {
        Self::new(vec![0.0, horizon], vec![amount, amount])
    }

    /// Initial amount `c_0`, then `(1 - c_0) / (t_end - 1)` at each of
    /// `t = 1 .. t_end`, so the total invested before `t_end` is 1.
    pub fn hybrid_constant_total(t_end: usize, c0: f64) -> Result<Self> {
        if t_end < 2 {
            return Err(Error::InvalidConfig(format!(
                "constant-total hybrid needs a horizon of at least 2 years, got {t_end}"
            )));
        }
        if !(c0 > 0.0 && c0 < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "initial fraction must lie in (0, 1), got {c0}"
            )));
        }
        let follow = (1.0 - c0) / (t_end as f64 - 1.0);
        let mut amounts = vec![follow; t_end + 1];
        amounts[0] = c0;
        Self::new((0..=t_end).map(|t| t as f64).collect(), amounts)
    }

    /// Lump sum of 1 at `t = 0`, then `dca_amount` at each of `t = 1 .. t_end`.
    pub fn hybrid_constant_ls(t_end: usize, dca_amount: f64) -> Result<Self> {
        if t_end < 2 {
            return Err(Error::InvalidConfig(format!(
                "constant-LS hybrid needs a horizon of at least 2 years, got {t_end}"
            )));
        }
        let mut amounts = vec![dca_amount; t_end + 1];
        amounts[0] = 1.0;
        Self::new((0..=t_end).map(|t| t as f64).collect(), amounts)
    }

    /// Number of (time, amount) entries.
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        false // construction guarantees at least one entry
    }

    /// Largest step `k` whose evaluation time `t_k` is part of the schedule.
    pub fn max_step(&self) -> usize {
        self.times.len() - 1
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn amounts(&self) -> &[f64] {
        &self.amounts
    }

    /// Total invested strictly before step `k`: `c_0 + .. + c_{k-1}`.
    /// Panics if `k` is 0 or exceeds the number of entries.
    pub fn invested_through(&self, k: usize) -> f64 {
        self.cum[k - 1]
    }

    /// The same schedule with every amount multiplied by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Result<Self> {
        Self::new(
            self.times.clone(),
            self.amounts.iter().map(|c| c * lambda).collect(),
        )
    }

    pub(crate) fn ensure_step(&self, k: usize) -> Result<()> {
        if k == 0 || k > self.max_step() {
            return Err(Error::ScheduleTooShort {
                requested: k,
                available: self.max_step(),
            });
        }
        Ok(())
    }
}

/// Law of the growth factor `X_k = X(t_next) / X(t_prev)` under GBM:
/// log-mean `mu (t_next - t_prev)` and log-variance `sigma^2 (t_next - t_prev)`.
pub fn factor_law(params: &GbmParams, t_prev: f64, t_next: f64) -> Result<LogNormalLaw> {
    let dt = t_next - t_prev;
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::NonPositiveInterval { t_prev, t_next });
    }
    Ok(LogNormalLaw {
        log_mean: params.mu * dt,
        log_var: params.variance() * dt,
    })
}

/// `E[W^n] = exp(n m + n^2 v / 2)` for `log W ~ N(m, v)`; `n = 0` gives 1.
pub fn lognormal_raw_moment(law: &LogNormalLaw, n: u32) -> Result<f64> {
    let lm = lognormal_log_raw_moment(law, n);
    if lm >= f64::MAX.ln() {
        return Err(Error::OverflowDetected { log_magnitude: lm });
    }
    Ok(lm.exp())
}

/// `ln E[W^n] = n m + n^2 v / 2`; never overflows.
pub fn lognormal_log_raw_moment(law: &LogNormalLaw, n: u32) -> f64 {
    let nf = n as f64;
    nf * law.log_mean + nf * nf * law.log_var / 2.0
}

/// A sampled trajectory: per-step growth factors `X_k`, wealth `Y_k` and
/// returns `R_k`.
#[derive(Debug, Clone, PartialEq)]
pub struct WealthPath {
    pub factors: Vec<f64>,
    pub wealth: Vec<f64>,
    pub returns: Vec<f64>,
}

/// Runs the exact wealth recursion `Y_1 = c_0 X_1`,
/// `Y_k = X_k (Y_{k-1} + c_{k-1})` over a factor path and divides by the
/// invested prefix sums to obtain returns.
///
/// `factors` may hold up to `schedule.len()` entries: the `k`-th factor spans
/// `t_{k-1} .. t_k`, and a full-length path leaves the final interval's end
/// point to the caller (the arithmetic does not involve times).
pub fn wealth_path(schedule: &InvestmentSchedule, factors: &[f64]) -> Result<WealthPath> {
    if factors.is_empty() || factors.len() > schedule.len() {
        return Err(Error::LengthMismatch {
            factors: factors.len(),
            max: schedule.len(),
        });
    }
    for (i, &x) in factors.iter().enumerate() {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::NonPositiveFactor(i));
        }
    }
    let amounts = schedule.amounts();
    let mut wealth = Vec::with_capacity(factors.len());
    let mut returns = Vec::with_capacity(factors.len());
    let mut prev = 0.0;
    for (i, &x) in factors.iter().enumerate() {
        let y = x * (prev + amounts[i]);
        wealth.push(y);
        returns.push(y / schedule.invested_through(i + 1));
        prev = y;
    }
    Ok(WealthPath {
        factors: factors.to_vec(),
        wealth,
        returns,
    })
}
