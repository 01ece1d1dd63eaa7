//! Exact positive-integer moments of schedule returns.
//!
//! Two independent routes to the same numbers:
//!
//! * [`moments_recursive`] — the production path. Wealth moments satisfy
//!   `E[Y_1^n] = c_0^n E[X_1^n]` and
//!   `E[Y_k^n] = E[X_k^n] sum_j C(n,j) c_{k-1}^{n-j} E[Y_{k-1}^j]`,
//!   and every summand is positive, so the whole table is built in log space
//!   (log-sum-exp) and cannot overflow. `O(k n^2)` per table.
//! * [`moments_closed_form`] — a direct sum over all non-decreasing index
//!   sequences `0 <= j_1 <= .. <= j_k = n`. The number of sequences is
//!   `C(n+k-1, k-1)`, which grows combinatorially, so this route is capped
//!   and used for validation and small instances only.
//!
//! Return moments divide wealth moments by the invested prefix sum:
//! `E[R_k^n] = E[Y_k^n] / (c_0 + .. + c_{k-1})^n`.

use crate::error::{Error, Result};
use crate::numeric::log_sum_exp;
use crate::schedule::{
    factor_law, lognormal_log_raw_moment, GbmParams, InvestmentSchedule,
};

/// Hard cap on the number of enumerated index sequences (10^7).
pub const ENUMERATION_CAP: u128 = 10_000_000;

/// Pascal's triangle rows `0..=n_max` in exact integer arithmetic.
/// Fails only if an entry exceeds `u128` (first possible at `n_max = 128`).
pub(crate) fn binomial_triangle(n_max: usize) -> Result<Vec<Vec<u128>>> {
    let mut rows: Vec<Vec<u128>> = Vec::with_capacity(n_max + 1);
    rows.push(vec![1]);
    for n in 1..=n_max {
        let prev = &rows[n - 1];
        let mut row = vec![1u128; n + 1];
        for j in 1..n {
            row[j] = prev[j - 1].checked_add(prev[j]).ok_or(
                Error::OverflowDetected {
                    log_magnitude: f64::INFINITY,
                },
            )?;
        }
        rows.push(row);
    }
    Ok(rows)
}

/// Number of non-decreasing sequences `0 <= j_1 <= .. <= j_k = n`,
/// i.e. `C(n+k-1, k-1)`, with overflow detection.
pub fn monotone_sequence_count(k: usize, n: usize) -> Result<u128> {
    assert!(k >= 1, "step index must be at least 1");
    let mut acc: u128 = 1;
    // C(n+k-1, k-1) = prod_{i=1..k-1} (n+i)/i, kept exact by dividing as we go
    for i in 1..k {
        acc = acc
            .checked_mul((n + i) as u128)
            .ok_or(Error::OverflowDetected {
                log_magnitude: f64::INFINITY,
            })?;
        acc /= i as u128;
    }
    Ok(acc)
}

/// Iterator over all non-decreasing `(j_1, .., j_k)` with `j_k = n`,
/// in lexicographic order, each exactly once.
pub struct MonotoneSequences {
    buf: Vec<usize>,
    n: usize,
    done: bool,
}

impl MonotoneSequences {
    pub fn new(k: usize, n: usize) -> Result<Self> {
        let count = monotone_sequence_count(k, n)?;
        if count > ENUMERATION_CAP {
            return Err(Error::EnumerationTooLarge {
                count,
                cap: ENUMERATION_CAP,
            });
        }
        let mut buf = vec![0; k];
        buf[k - 1] = n;
        Ok(Self { buf, n, done: false })
    }
}

impl Iterator for MonotoneSequences {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        if self.done {
            return None;
        }
        let item = self.buf.clone();
        // advance the free prefix (j_1 .. j_{k-1}) in lexicographic order:
        // bump the rightmost position below n, then level everything to its
        // right up to the new value so the tuple stays non-decreasing
        let free = self.buf.len() - 1;
        let mut advanced = false;
        for i in (0..free).rev() {
            if self.buf[i] < self.n {
                let v = self.buf[i] + 1;
                for slot in &mut self.buf[i..free] {
                    *slot = v;
                }
                advanced = true;
                break;
            }
        }
        if !advanced {
            self.done = true;
        }
        Some(item)
    }
}

/// Table of `ln E[Y_k^n]` for `k = 1..=k_max`, `n = 0..=n_max`, with the
/// invested prefix sums needed to convert to return moments.
#[derive(Debug, Clone)]
pub struct MomentTable {
    k_max: usize,
    n_max: usize,
    log_y: Vec<Vec<f64>>,
    log_cum: Vec<f64>,
}

impl MomentTable {
    pub fn k_max(&self) -> usize {
        self.k_max
    }

    pub fn n_max(&self) -> usize {
        self.n_max
    }

    /// `ln E[Y_k^n]`. Panics if `(k, n)` lies outside the table.
    pub fn log_wealth_moment(&self, k: usize, n: u32) -> f64 {
        assert!(k >= 1 && k <= self.k_max, "step {k} outside table");
        self.log_y[k - 1][n as usize]
    }

    /// `ln E[R_k^n]`. Panics if `(k, n)` lies outside the table.
    pub fn log_return_moment(&self, k: usize, n: u32) -> f64 {
        self.log_wealth_moment(k, n) - n as f64 * self.log_cum[k - 1]
    }

    /// `E[R_k^n]`, or `OverflowDetected` when it exceeds the f64 range.
    pub fn return_moment(&self, k: usize, n: u32) -> Result<f64> {
        let lm = self.log_return_moment(k, n);
        if lm >= f64::MAX.ln() {
            return Err(Error::OverflowDetected { log_magnitude: lm });
        }
        Ok(lm.exp())
    }
}

/// Builds the moment table by the wealth-moment recursion (log space).
pub fn moments_recursive(
    schedule: &InvestmentSchedule,
    params: &GbmParams,
    k_max: usize,
    n_max: u32,
) -> Result<MomentTable> {
    schedule.ensure_step(k_max)?;
    let n_max = n_max as usize;
    let binom = binomial_triangle(n_max)?;
    let ln_binom: Vec<Vec<f64>> = binom
        .iter()
        .map(|row| row.iter().map(|&b| (b as f64).ln()).collect())
        .collect();
    let times = schedule.times();
    let amounts = schedule.amounts();

    let mut log_y: Vec<Vec<f64>> = Vec::with_capacity(k_max);
    let law1 = factor_law(params, times[0], times[1])?;
    let c0 = amounts[0].ln();
    log_y.push(
        (0..=n_max)
            .map(|n| n as f64 * c0 + lognormal_log_raw_moment(&law1, n as u32))
            .collect(),
    );

    let mut terms = vec![0.0f64; n_max + 1];
    for k in 2..=k_max {
        let law = factor_law(params, times[k - 1], times[k])?;
        let ln_c = amounts[k - 1].ln();
        let prev = &log_y[k - 2];
        let mut row = Vec::with_capacity(n_max + 1);
        for n in 0..=n_max {
            for (j, term) in terms.iter_mut().enumerate().take(n + 1) {
                *term = ln_binom[n][j] + (n - j) as f64 * ln_c + prev[j];
            }
            let lse = log_sum_exp(&terms[..=n]);
            row.push(lognormal_log_raw_moment(&law, n as u32) + lse);
        }
        log_y.push(row);
    }

    Ok(MomentTable {
        k_max,
        n_max,
        log_y,
        log_cum: (1..=k_max)
            .map(|k| schedule.invested_through(k).ln())
            .collect(),
    })
}

/// Direct evaluation of `E[R_k^n]` as the sum over non-decreasing index
/// sequences; exact counterpart of the recursion, capped at
/// [`ENUMERATION_CAP`] sequences.
pub fn moments_closed_form(
    schedule: &InvestmentSchedule,
    params: &GbmParams,
    k: usize,
    n: u32,
) -> Result<f64> {
    schedule.ensure_step(k)?;
    let n = n as usize;
    let times = schedule.times();
    let amounts = schedule.amounts();

    // E[X_l^j] for l = 1..k, j = 0..=n
    let mut ex: Vec<Vec<f64>> = Vec::with_capacity(k);
    for l in 1..=k {
        let law = factor_law(params, times[l - 1], times[l])?;
        ex.push(
            (0..=n)
                .map(|j| lognormal_log_raw_moment(&law, j as u32).exp())
                .collect(),
        );
    }
    let factorial: Vec<f64> = {
        let mut f = vec![1.0f64; n + 1];
        for i in 1..=n {
            f[i] = f[i - 1] * i as f64;
        }
        f
    };

    let mut sum = 0.0f64;
    for seq in MonotoneSequences::new(k, n)? {
        // c_0^{j_1} / j_1! * prod_{l=1..k-1} c_l^{j_{l+1}-j_l} E[X_l^{j_l}] / (j_{l+1}-j_l)!
        let mut term = amounts[0].powi(seq[0] as i32) / factorial[seq[0]];
        for l in 1..k {
            let d = seq[l] - seq[l - 1];
            term *= amounts[l].powi(d as i32) * ex[l - 1][seq[l - 1]] / factorial[d];
        }
        sum += term;
    }

    let value = factorial[n] * ex[k - 1][n] * sum
        / schedule.invested_through(k).powi(n as i32);
    if !value.is_finite() {
        return Err(Error::OverflowDetected {
            log_magnitude: f64::INFINITY,
        });
    }
    Ok(value)
}
