//! Error diagnostics for the lower bound and the lump-sum discount.
//!
//! The expected error at step `k` is `E[R_k] - exp(m_k + v_k/2)`, which is
//! non-negative by construction. The expected log-error (which also bounds
//! the expected relative error) is majorized, for any `y > 0` and odd `J`, by
//!
//! ```text
//! log y + sum_{j=1..J} E[(R_k - y)^j] / ((-1)^{j-1} j y^j) - m_k
//! ```
//!
//! and the reported bound minimizes this over a `(J, y)` grid. The central
//! moments `E[(R_k - y)^j]` are expanded binomially from the raw-moment
//! table with log-magnitude/sign bookkeeping and compensated summation;
//! grid points whose accumulated rounding could move the bound by more than
//! `1e-9` are skipped rather than reported, as are points that overflow.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lower_bound::LowerBoundSequence;
use crate::moments::{binomial_triangle, MomentTable};
use crate::numeric::NeumaierSum;
use crate::schedule::{GbmParams, InvestmentSchedule};

/// Outcome of the log-error grid search at one step.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorReport {
    pub k: usize,
    pub expected_error: f64,
    pub log_error_ub: f64,
    /// Odd Taylor degree attaining the minimum.
    pub j_opt: u32,
    /// Expansion point attaining the minimum.
    pub y_opt: f64,
}

/// The `(J, y)` search grid, expressed relative to `E[R_k]`:
/// candidate `y` values are `y_factor * E[R_k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorGrid {
    pub j_set: Vec<u32>,
    pub y_factors: Vec<f64>,
}

impl Default for ErrorGrid {
    /// Odd degrees 1..=21 and `y/E[R_k] = exp(-4 + 0.01 r)`, `r = 0..=800`.
    fn default() -> Self {
        Self {
            j_set: (0..=10).map(|i| 2 * i + 1).collect(),
            y_factors: (0..=800).map(|r| (-4.0 + 0.01 * r as f64).exp()).collect(),
        }
    }
}

impl ErrorGrid {
    pub fn new(j_set: Vec<u32>, y_factors: Vec<f64>) -> Result<Self> {
        if j_set.is_empty() || y_factors.is_empty() {
            return Err(Error::InvalidConfig("empty (J, y) grid".into()));
        }
        if let Some(&j) = j_set.iter().find(|&&j| j % 2 == 0) {
            return Err(Error::InvalidConfig(format!(
                "Taylor degrees must be odd, got {j}"
            )));
        }
        if let Some(&y) = y_factors.iter().find(|&&y| !(y.is_finite() && y > 0.0)) {
            return Err(Error::InvalidConfig(format!(
                "y factors must be positive, got {y}"
            )));
        }
        Ok(Self { j_set, y_factors })
    }

    pub fn max_degree(&self) -> u32 {
        *self.j_set.iter().max().expect("non-empty by construction")
    }
}

/// `E[R_k] - exp(m_k + v_k/2)`, clamped to 0 inside `[-1e-9, 0)`;
/// values below `-1e-9` indicate an implementation bug and error out.
pub fn expected_error(
    table: &MomentTable,
    lb: &LowerBoundSequence,
    k: usize,
) -> Result<f64> {
    let law = lb.law(k);
    let err = table.return_moment(k, 1)? - (law.log_mean + law.log_var / 2.0).exp();
    if err >= 0.0 {
        Ok(err)
    } else if err >= -1e-9 {
        Ok(0.0)
    } else {
        Err(Error::InternalInconsistency {
            context: "expected_error",
            value: err,
        })
    }
}

/// Minimizes the Taylor majorant of the expected log-error over the grid.
/// Ties break lexicographically on `(value, J, y)` so the result does not
/// depend on evaluation order.
pub fn log_error_upper_bound(
    table: &MomentTable,
    lb: &LowerBoundSequence,
    k: usize,
    grid: &ErrorGrid,
) -> Result<ErrorReport> {
    let j_max = grid.max_degree() as usize;
    assert!(
        table.n_max() >= j_max,
        "moment table covers n <= {}, grid needs {}",
        table.n_max(),
        j_max
    );
    let m_k = lb.law(k).log_mean;
    let log_er: Vec<f64> = (0..=j_max)
        .map(|n| table.log_return_moment(k, n as u32))
        .collect();
    let e_r1 = table.return_moment(k, 1)?;
    let ln_binom: Vec<Vec<f64>> = binomial_triangle(j_max)?
        .iter()
        .map(|row| row.iter().map(|&b| (b as f64).ln()).collect())
        .collect();

    let best = grid
        .y_factors
        .par_iter()
        .map(|&f| evaluate_column(f * e_r1, &grid.j_set, &log_er, &ln_binom, m_k))
        .reduce(
            || None,
            |a, b| match (a, b) {
                (None, x) | (x, None) => x,
                (Some(a), Some(b)) => Some(lexi_min(a, b)),
            },
        );

    match best {
        Some((value, j_opt, y_opt)) => Ok(ErrorReport {
            k,
            expected_error: expected_error(table, lb, k)?,
            log_error_ub: clamp_bound(value)?,
            j_opt,
            y_opt,
        }),
        None => Err(Error::NoFeasibleGridPoint),
    }
}

fn lexi_min(a: (f64, u32, f64), b: (f64, u32, f64)) -> (f64, u32, f64) {
    if (b.0, b.1, b.2) < (a.0, a.1, a.2) {
        b
    } else {
        a
    }
}

fn clamp_bound(value: f64) -> Result<f64> {
    if value >= 0.0 {
        Ok(value)
    } else if value >= -1e-9 {
        Ok(0.0)
    } else {
        Err(Error::InternalInconsistency {
            context: "log_error_upper_bound",
            value,
        })
    }
}

/// Evaluates every requested degree at one expansion point, returning the
/// best `(value, J, y)` or `None` if all degrees were infeasible there.
fn evaluate_column(
    y: f64,
    j_set: &[u32],
    log_er: &[f64],
    ln_binom: &[Vec<f64>],
    m_k: f64,
) -> Option<(f64, u32, f64)> {
    let ln_y = y.ln();
    let mut acc = NeumaierSum::default();
    let mut acc_abs_err = 0.0f64;
    let mut best: Option<(f64, u32, f64)> = None;
    let mut sorted: Vec<u32> = j_set.to_vec();
    sorted.sort_unstable();
    let mut next = sorted.iter().peekable();

    for j in 1..=(*sorted.last().unwrap() as usize) {
        // E[(R-y)^j] = sum_i C(j,i) E[R^i] (-y)^{j-i}, in log magnitude + sign
        let mut mags = Vec::with_capacity(j + 1);
        let mut mx = f64::NEG_INFINITY;
        for (i, lnb) in ln_binom[j].iter().enumerate() {
            let lm = lnb + log_er[i] + (j - i) as f64 * ln_y;
            mx = mx.max(lm);
            mags.push(lm);
        }
        if !mx.is_finite() {
            return best;
        }
        let mut s = NeumaierSum::default();
        let mut abs_sum = 0.0f64;
        for (i, &lm) in mags.iter().enumerate() {
            let t = (lm - mx).exp();
            abs_sum += t;
            s.add(if (j - i) % 2 == 0 { t } else { -t });
        }
        let s = s.total();

        // Contribution of this degree to the bound: central_j / ((-1)^{j-1} j y^j).
        let scale = mx - (j as f64).ln() - j as f64 * ln_y;
        if scale > f64::MAX.ln() {
            return best; // term overflows; higher degrees only get worse
        }
        let term_sign = if j % 2 == 1 { 1.0 } else { -1.0 };
        acc.add(term_sign * s * scale.exp());
        // rounding in the cancellation-prone sum, propagated to bound units
        acc_abs_err += abs_sum * 1e-15 * scale.exp();

        if let Some(&&jn) = next.peek() {
            if jn as usize == j {
                next.next();
                let value = ln_y + acc.total() - m_k;
                if value.is_finite() && acc_abs_err <= 1e-9 {
                    let cand = (value, jn, y);
                    best = Some(match best {
                        None => cand,
                        Some(b) => lexi_min(b, cand),
                    });
                }
            }
        }
    }
    best
}

/// Identity accessor: the same number bounds the expected relative error
/// `E[(R_k - Z_k) / R_k]`.
pub fn relative_error_bound(report: &ErrorReport) -> f64 {
    report.log_error_ub
}

/// The lump-sum investment `(x_k, s_k)` whose terminal wealth distribution
/// equals the wealth lower bound's at step `k`: investing `x_k` for `s_k`
/// years gives a terminal log law `(log x_k + mu s_k, sigma^2 s_k)` equal to
/// `(log(c_0 + .. + c_{k-1}) + m_k, v_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LumpSumDiscount {
    /// Up-front amount.
    pub x: f64,
    /// Holding time in years.
    pub s: f64,
    /// Total the schedule invests through step `k`, for context.
    pub invested: f64,
    /// `x / invested` — the size component as a fraction of the schedule's
    /// total. (Read literally, the defining display divides by the inverse
    /// of the total instead; the raw `x` and `invested` fields let callers
    /// form `x * invested` if they want that convention.)
    pub size_ratio: f64,
    /// `s / t_k` — holding time relative to the schedule's horizon.
    pub time_ratio: f64,
}

/// Computes the lump-sum discount at step `k` from the bound parameters:
/// `s_k = v_k / sigma^2`, `x_k = invested * exp(m_k - mu s_k)`.
pub fn lump_sum_discount(
    schedule: &InvestmentSchedule,
    params: &GbmParams,
    lb: &LowerBoundSequence,
    k: usize,
) -> Result<LumpSumDiscount> {
    schedule.ensure_step(k)?;
    if k > lb.len() {
        return Err(Error::ScheduleTooShort {
            requested: k,
            available: lb.len(),
        });
    }
    let law = lb.law(k);
    let s = law.log_var / params.variance();
    let invested = schedule.invested_through(k);
    let x = invested * (law.log_mean - params.mu * s).exp();
    Ok(LumpSumDiscount {
        x,
        s,
        invested,
        size_ratio: x / invested,
        time_ratio: s / schedule.times()[k],
    })
}

/// Limit of `x_k` as `k -> inf` for the unit DCA schedule with `mu > 0`:
/// `exp(mu (e^{2mu} + 2 e^mu) / (e^{2mu} - 1)) / (e^mu - 1)`.
/// The normalized pair `(x_k / k, s_k / k)` tends to [`LSD_RATIO_LIMIT`].
pub fn lsd_limit(mu: f64) -> Result<f64> {
    if !(mu.is_finite() && mu > 0.0) {
        return Err(Error::NonPositiveDrift(mu));
    }
    // exponent = mu (1 + 2 e^{-mu}) / (1 - e^{-2mu}), stable for all mu > 0
    let exponent = mu * (1.0 + 2.0 * (-mu).exp()) / -(-2.0 * mu).exp_m1();
    let log_x = exponent - crate::numeric::log_abs_expm1(mu);
    if log_x >= f64::MAX.ln() {
        return Err(Error::OverflowDetected { log_magnitude: log_x });
    }
    Ok(log_x.exp())
}

/// `lim_{k->inf} (x_k / k, s_k / k) = (0, 1)` for unit DCA with `mu > 0`.
pub const LSD_RATIO_LIMIT: (f64, f64) = (0.0, 1.0);
