//! The log-normal lower bound on schedule returns.
//!
//! For every step `k` there is a random variable `Z_k <= R_k` with
//! probability one whose log is exactly normal, `log Z_k ~ N(m_k, v_k)`.
//! The parameters follow the recursion
//!
//! ```text
//! m_1 = mu t_1                  v_1 = sigma^2 t_1
//! a_k = exp(m_{k-1}) * (c_0 + .. + c_{k-2})
//! b_k = a_k / (a_k + c_{k-1})
//! m_k = log((a_k + c_{k-1}) / (c_0 + .. + c_{k-1})) + mu (t_k - t_{k-1})
//! v_k = b_k^2 v_{k-1} + sigma^2 (t_k - t_{k-1})
//! ```
//!
//! For unit-amount, unit-interval schedules (DCA) the same parameters have a
//! closed form, implemented here with `expm1`-based ratios so that nothing
//! overflows even when `mu * k` is far beyond `exp` range. The two routes
//! agree to ~1e-14 relative and cross-validate each other in the tests.
//!
//! Also here: the per-path evaluation of the bound (`sample_z`), the
//! continuous-investing limit law with its drift/variance shrink factors
//! `r1`, `r2`, and quantile/Sharpe helpers for log-normal laws.

use crate::error::{Error, Result};
use crate::normal::norm_quantile;
use crate::numeric::{log_abs_expm1, NeumaierSum};
use crate::schedule::{GbmParams, InvestmentSchedule, LogNormalLaw};

/// Per-step bound laws `(m_k, v_k)` for `k = 1..=len`, with the auxiliary
/// `(a_k, b_k)` pairs for `k >= 2` used by the path-wise recursion.
#[derive(Debug, Clone)]
pub struct LowerBoundSequence {
    laws: Vec<LogNormalLaw>,
    aux_a: Vec<f64>,
    aux_b: Vec<f64>,
}

impl LowerBoundSequence {
    /// Number of steps covered.
    pub fn len(&self) -> usize {
        self.laws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.laws.is_empty()
    }

    /// Bound law at step `k` (1-indexed). Panics outside `1..=len`.
    pub fn law(&self, k: usize) -> LogNormalLaw {
        self.laws[k - 1]
    }

    pub fn laws(&self) -> &[LogNormalLaw] {
        &self.laws
    }

    /// Geometric-mean wealth anchor `a_k`, defined for `k >= 2`.
    pub fn a(&self, k: usize) -> f64 {
        self.aux_a[k - 2]
    }

    /// Contraction weight `b_k = a_k / (a_k + c_{k-1})`, in (0, 1), `k >= 2`.
    pub fn b(&self, k: usize) -> f64 {
        self.aux_b[k - 2]
    }
}

/// Builds the bound parameters for steps `1..=k_max` by the recursion above.
/// Works for any drift, including `mu = 0`.
pub fn lower_bound_recursive(
    schedule: &InvestmentSchedule,
    params: &GbmParams,
    k_max: usize,
) -> Result<LowerBoundSequence> {
    schedule.ensure_step(k_max)?;
    let times = schedule.times();
    let amounts = schedule.amounts();
    let sigma2 = params.variance();

    let mut laws = Vec::with_capacity(k_max);
    let mut aux_a = Vec::with_capacity(k_max.saturating_sub(1));
    let mut aux_b = Vec::with_capacity(k_max.saturating_sub(1));

    laws.push(LogNormalLaw {
        log_mean: params.mu * times[1],
        log_var: sigma2 * times[1],
    });

    for k in 2..=k_max {
        let dt = times[k] - times[k - 1];
        let prev = laws[k - 2];
        let a = prev.log_mean.exp() * schedule.invested_through(k - 1);
        let c = amounts[k - 1];
        let b = a / (a + c);
        let m = ((a + c) / schedule.invested_through(k)).ln() + params.mu * dt;
        let v = b * b * prev.log_var + sigma2 * dt;
        laws.push(LogNormalLaw {
            log_mean: m,
            log_var: v,
        });
        aux_a.push(a);
        aux_b.push(b);
    }

    Ok(LowerBoundSequence { laws, aux_a, aux_b })
}

/// Closed-form `(m_k, v_k)` for the unit DCA schedule (`c_k = 1`, `t_k = k`).
/// Requires `mu != 0`; at zero drift the closed form is undefined and the
/// recursion should be used instead.
///
/// `m_k = mu + log[(e^{mu k} - 1) / (k (e^mu - 1))]`, evaluated through
/// `ln|expm1|`; `v_k = sigma^2 (1 + sum_{j=1}^{k-1} rho_j^2)` with
/// `rho_j = (e^{mu k} - e^{mu j}) / (e^{mu k} - 1)` rewritten with negative
/// exponents so that the ratios stay in (0, 1) for arbitrarily large `mu k`.
pub fn lower_bound_dca_closed(params: &GbmParams, k: usize) -> Result<LogNormalLaw> {
    if params.mu == 0.0 {
        return Err(Error::ZeroDrift);
    }
    assert!(k >= 1, "step index must be at least 1");
    let mu = params.mu;
    let kf = k as f64;

    let log_mean = mu + log_abs_expm1(mu * kf) - kf.ln() - log_abs_expm1(mu);

    let mut sum = NeumaierSum::default();
    sum.add(1.0);
    for j in 1..k {
        let jf = j as f64;
        let rho = if mu > 0.0 {
            (-mu * (kf - jf)).exp_m1() / (-mu * kf).exp_m1()
        } else {
            (mu * jf).exp() * (mu * (kf - jf)).exp_m1() / (mu * kf).exp_m1()
        };
        sum.add(rho * rho);
    }
    Ok(LogNormalLaw {
        log_mean,
        log_var: params.variance() * sum.total(),
    })
}

/// Evaluates the bound path-wise over sampled growth factors, returning
/// `Z_1 .. Z_K`:
///
/// `Z_1 = R_1` and
/// `Z_k = X_k / S_{k-1} * (a_k + c_{k-1}) * (Z_{k-1} S_{k-2} / a_k)^{b_k}`
/// with `S_j = c_0 + .. + c_j` and the analytic `a_k`, `b_k` taken from the
/// precomputed sequence. On every path this satisfies `Z_k <= R_k` up to
/// floating-point slack.
pub fn sample_z(
    schedule: &InvestmentSchedule,
    lb: &LowerBoundSequence,
    factors: &[f64],
) -> Result<Vec<f64>> {
    if factors.is_empty() || factors.len() > lb.len() || factors.len() > schedule.max_step() {
        return Err(Error::LengthMismatch {
            factors: factors.len(),
            max: lb.len().min(schedule.max_step()),
        });
    }
    for (i, &x) in factors.iter().enumerate() {
        if !(x.is_finite() && x > 0.0) {
            return Err(Error::NonPositiveFactor(i));
        }
    }
    let log_factors: Vec<f64> = factors.iter().map(|x| x.ln()).collect();
    Ok(sample_log_z(schedule, lb, &log_factors)
        .into_iter()
        .map(f64::exp)
        .collect())
}

/// Log-space version of [`sample_z`] for callers that already hold log
/// factors (the simulator). Length checks are the caller's responsibility.
pub(crate) fn sample_log_z(
    schedule: &InvestmentSchedule,
    lb: &LowerBoundSequence,
    log_factors: &[f64],
) -> Vec<f64> {
    let amounts = schedule.amounts();
    let mut out = Vec::with_capacity(log_factors.len());
    let mut prev = log_factors[0]; // log Z_1 = log X_1
    out.push(prev);
    for (i, &lx) in log_factors.iter().enumerate().skip(1) {
        let k = i + 1;
        let a = lb.a(k);
        let b = lb.b(k);
        let c = amounts[k - 1];
        let lz = lx + ((a + c) / schedule.invested_through(k)).ln()
            + b * (prev + schedule.invested_through(k - 1).ln() - a.ln());
        out.push(lz);
        prev = lz;
    }
    out
}

/// Drift and variance shrink factors of the continuous-investing bound law:
/// `r1 = log((e^mu - 1)/mu) / mu` and
/// `r2 = ((2mu - 3) e^{2mu} + 4 e^mu - 1) / (2mu (e^mu - 1)^2)`.
///
/// Both tend to 1 as `mu -> inf` and to (1/2, 1/3) as `mu -> 0`; the
/// evaluation is arranged so neither limit loses precision and nothing
/// overflows for any non-zero `mu`.
pub fn r1_r2(mu: f64) -> Result<(f64, f64)> {
    if mu == 0.0 {
        return Err(Error::ZeroDrift);
    }
    if !mu.is_finite() {
        return Err(Error::InvalidConfig(format!("non-finite drift {mu}")));
    }

    let r1 = if mu.abs() <= 0.01 {
        // Taylor series; truncation error ~mu^5/181440 <= 6e-16
        0.5 + mu * (1.0 / 24.0 - mu * mu / 2880.0)
    } else if mu.abs() <= 0.5 {
        // (e^mu - 1)/mu = 1 + (expm1(mu) - mu)/mu, accurate near zero
        ((mu.exp_m1() - mu) / mu).ln_1p() / mu
    } else if mu > 0.0 {
        // log((e^mu - 1)/mu) = mu + log(1 - e^{-mu}) - log mu
        1.0 + ((-(-mu).exp()).ln_1p() - mu.ln()) / mu
    } else {
        (log_abs_expm1(mu) - (-mu).ln()) / mu
    };

    let r2 = if mu.abs() <= 0.01 {
        // Taylor series; the closed form cancels to O(mu^3) against O(1)
        // terms and cannot hold absolute accuracy this close to zero.
        // Truncation error here is ~mu^5/30240 <= 4e-15.
        1.0 / 3.0
            + mu * (1.0 / 12.0 + mu * (1.0 / 180.0 + mu * (-1.0 / 720.0 - mu / 5040.0)))
    } else if mu.abs() <= 0.5 {
        // numerator rewritten with u = expm1(mu):
        // (2mu-3)(1+u)^2 + 4(1+u) - 1 = -2(u - mu) + 4 mu u + (2mu - 3) u^2
        let u = mu.exp_m1();
        let num = -2.0 * (u - mu) + 4.0 * mu * u + (2.0 * mu - 3.0) * u * u;
        num / (2.0 * mu * u * u)
    } else if mu > 0.0 {
        // divide numerator and denominator by e^{2mu}
        let em = (-mu).exp();
        let one_minus = -(-mu).exp_m1(); // 1 - e^{-mu}
        ((2.0 * mu - 3.0) + 4.0 * em - em * em) / (2.0 * mu * one_minus * one_minus)
    } else {
        let u = mu.exp_m1();
        ((2.0 * mu - 3.0) * (2.0 * mu).exp() + 4.0 * mu.exp() - 1.0) / (2.0 * mu * u * u)
    };
    Ok((r1, r2))
}

/// Law of the lower bound for continuous investing over one time unit:
/// log-mean `r1(mu) * mu`, log-variance `r2(mu) * sigma^2`.
pub fn continuous_dca_law(params: &GbmParams) -> Result<LogNormalLaw> {
    let (r1, r2) = r1_r2(params.mu)?;
    Ok(LogNormalLaw {
        log_mean: r1 * params.mu,
        log_var: r2 * params.variance(),
    })
}

/// Quantile of a log-normal law: `exp(m + Phi^-1(p) sqrt(v))`.
pub fn lb_quantile(law: &LogNormalLaw, p: f64) -> Result<f64> {
    let z = norm_quantile(p)?;
    Ok((law.log_mean + z * law.log_var.sqrt()).exp())
}

/// Sharpe ratio of the log law, `m / sqrt(v)`. Errors on a point mass.
pub fn lb_sharpe(law: &LogNormalLaw) -> Result<f64> {
    if law.log_var <= 0.0 {
        return Err(Error::DegenerateLaw);
    }
    Ok(law.log_mean / law.log_var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::schedule::wealth_path;

    fn sp_params() -> GbmParams {
        GbmParams::new(0.0658, 0.1690).unwrap()
    }

    #[test]
    fn step_one_is_the_factor_law() {
        let sched = InvestmentSchedule::new(vec![0.0, 2.5], vec![4.0, 1.0]).unwrap();
        let lb = lower_bound_recursive(&sched, &sp_params(), 1).unwrap();
        assert!((lb.law(1).log_mean - 0.0658 * 2.5).abs() < 1e-15);
        assert!((lb.law(1).log_var - 0.028561 * 2.5).abs() < 1e-15);
    }

    #[test]
    fn dca_step_two_reference_values() {
        // mpmath: a2 = e^0.0658, b2 = a2/(a2+1), m2, v2 at 50 digits
        let lb = lower_bound_recursive(&InvestmentSchedule::dca(2), &sp_params(), 2).unwrap();
        assert!((lb.a(2) - 1.0680130931856702).abs() < 1e-14);
        assert!((lb.b(2) - 0.51644406735377567).abs() < 1e-14);
        assert!((lb.law(2).log_mean - 0.099241107393888155).abs() < 1e-14);
        assert!((lb.law(2).log_var - 0.036178632112046968).abs() < 1e-14);
    }

    #[test]
    fn closed_form_matches_recursion_far_out() {
        let sched = InvestmentSchedule::dca(200);
        for &mu in &[-0.0658, 0.0658, 0.2] {
            let p = GbmParams::new(mu, 0.1690).unwrap();
            let lb = lower_bound_recursive(&sched, &p, 200).unwrap();
            for k in 1..=200 {
                let closed = lower_bound_dca_closed(&p, k).unwrap();
                let rec = lb.law(k);
                assert!(
                    (closed.log_mean - rec.log_mean).abs()
                        <= 1e-12 * rec.log_mean.abs().max(1.0),
                    "m mismatch mu={mu} k={k}: {} vs {}",
                    closed.log_mean,
                    rec.log_mean
                );
                assert!(
                    (closed.log_var - rec.log_var).abs() <= 1e-12 * rec.log_var.abs(),
                    "v mismatch mu={mu} k={k}"
                );
            }
        }
    }

    #[test]
    fn closed_form_k1_reduces_to_params() {
        for &mu in &[0.3, -0.04] {
            let p = GbmParams::new(mu, 0.5).unwrap();
            let law = lower_bound_dca_closed(&p, 1).unwrap();
            assert!((law.log_mean - mu).abs() < 1e-15);
            assert!((law.log_var - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn closed_form_requires_nonzero_drift() {
        let p = GbmParams::new(0.0, 0.2).unwrap();
        assert_eq!(lower_bound_dca_closed(&p, 5).unwrap_err(), Error::ZeroDrift);
        // the recursion is fine at zero drift
        let lb = lower_bound_recursive(&InvestmentSchedule::dca(5), &p, 5).unwrap();
        assert!(lb.law(5).log_var > 0.0);
    }

    #[test]
    fn closed_form_survives_extreme_drift_times_horizon() {
        // e^{mu k} would overflow; the ratio forms must not
        let p = GbmParams::new(3.0, 0.2).unwrap();
        let law = lower_bound_dca_closed(&p, 500).unwrap();
        assert!(law.log_mean.is_finite() && law.log_var.is_finite());
        // v_k -> sigma^2 * k asymptotically from below
        assert!(law.log_var < 0.04 * 500.0 && law.log_var > 0.04 * 490.0);
    }

    #[test]
    fn negative_drift_monotonicity() {
        let p = GbmParams::new(-0.05, 0.2).unwrap();
        let m10 = lower_bound_dca_closed(&p, 10).unwrap();
        let m11 = lower_bound_dca_closed(&p, 11).unwrap();
        assert!(m11.log_mean < m10.log_mean);
        assert!(m11.log_var > m10.log_var);
    }

    #[test]
    fn sample_z_base_case_and_fixed_point() {
        let sched = InvestmentSchedule::dca(1);
        let lb = lower_bound_recursive(&sched, &sp_params(), 1).unwrap();
        let z = sample_z(&sched, &lb, &[1.234]).unwrap();
        assert!((z[0] - 1.234).abs() < 1e-15);

        // along the path where R_{k-1} * S_{k-2} = a_k at every step the
        // bound is tight: Z_k = R_k exactly
        let sched = InvestmentSchedule::dca(10);
        let lb = lower_bound_recursive(&sched, &sp_params(), 10).unwrap();
        let mut factors = vec![lb.law(1).log_mean.exp()];
        for k in 2..=10 {
            // choose X_k so that R_k S_{k-1} = a_{k+1}, i.e. R_k = exp(m_k)
            let target = lb.law(k).log_mean.exp() * sched.invested_through(k);
            let prev_wealth = lb.law(k - 1).log_mean.exp() * sched.invested_through(k - 1);
            factors.push(target / (prev_wealth + 1.0));
        }
        let path = wealth_path(&sched, &factors).unwrap();
        let z = sample_z(&sched, &lb, &factors).unwrap();
        for k in 1..=10 {
            let r = path.returns[k - 1];
            assert!(
                (z[k - 1] - r).abs() <= 1e-10 * r,
                "k={k}: z={} r={r}",
                z[k - 1]
            );
        }
    }

    #[test]
    fn sample_z_never_exceeds_return() {
        let sched =
            InvestmentSchedule::new(vec![0.0, 1.0, 1.7, 3.0, 4.2], vec![1.0, 2.0, 0.5, 1.5, 1.0])
                .unwrap();
        let p = GbmParams::new(0.04, 0.22).unwrap();
        let lb = lower_bound_recursive(&sched, &p, 4).unwrap();
        // a couple of adversarial deterministic paths
        for factors in [
            vec![1.3, 0.7, 1.1, 0.9],
            vec![0.5, 0.5, 0.5, 0.5],
            vec![2.0, 2.0, 2.0, 2.0],
            vec![1.0, 1.0, 1.0, 1.0],
        ] {
            let path = wealth_path(&sched, &factors).unwrap();
            let z = sample_z(&sched, &lb, &factors).unwrap();
            for (zk, rk) in z.iter().zip(&path.returns) {
                assert!(zk - rk <= 1e-9, "z={zk} r={rk}");
            }
        }
    }

    #[test]
    fn r1_r2_reference_values() {
        // mpmath, 50 digits
        let (r1, r2) = r1_r2(1.0).unwrap();
        assert!((r1 - 0.54132485461291811).abs() < 1e-13);
        assert!((r2 - 0.42067359420779232).abs() < 1e-13);

        let (r1, r2) = r1_r2(0.0658).unwrap();
        assert!((r1 - 0.50274156775321713).abs() < 1e-13);
        assert!((r2 - 0.33884032086315377).abs() < 1e-13);

        let (r1, r2) = r1_r2(10.0).unwrap();
        assert!((r1 - 0.76973695060455838).abs() < 1e-13);
        assert!((r2 - 0.85008626584425919).abs() < 1e-13);

        let (r1, r2) = r1_r2(50.0).unwrap();
        assert!((r1 - 0.92175953989143708).abs() < 1e-13);
        assert!((r2 - 0.97).abs() < 1e-13);

        let (r1, r2) = r1_r2(-0.1).unwrap();
        assert!((r1 - 0.49583368050045125).abs() < 1e-13);
        assert!((r2 - 0.32505692427918109).abs() < 1e-13);
    }

    #[test]
    fn r1_r2_small_drift_limits() {
        let (r1, r2) = r1_r2(1e-6).unwrap();
        assert!((r1 - 0.5).abs() < 1e-4);
        assert!((r2 - 1.0 / 3.0).abs() < 1e-4);
        // tighter: the exact leading corrections are mu/24 and mu/12
        assert!((r1 - 0.50000004166666667).abs() < 1e-10);
        assert!((r2 - 0.33333341666667222).abs() < 1e-12);
        // branch boundary: series vs exact rearrangement agree (mpmath refs)
        let (r1b, r2b) = r1_r2(0.01).unwrap();
        assert!((r1b - 0.500416666319445).abs() < 1e-12);
        assert!((r2b - 0.33416722083135252).abs() < 1e-12);
        let (_, r2c) = r1_r2(0.011).unwrap();
        assert!((r2c - (1.0 / 3.0 + 0.011 / 12.0 + 0.011f64.powi(2) / 180.0)).abs() < 1e-8);
        let (r1n, r2n) = r1_r2(-0.01).unwrap();
        assert!((r1n - 0.499583333680555).abs() < 1e-12);
        assert!((r2n - 0.33250055694245702).abs() < 1e-12);

        let (r1n, r2n) = r1_r2(-1e-6).unwrap();
        assert!((r1n - 0.5).abs() < 1e-4);
        assert!((r2n - 1.0 / 3.0).abs() < 1e-4);
    }

    #[test]
    fn r1_r2_large_drift_limits() {
        // convergence to 1 is O(log mu / mu) and O(1/mu); test far out where
        // naive exponentials would have overflowed long ago
        let (r1, r2) = r1_r2(1e9).unwrap();
        assert!((r1 - 1.0).abs() < 1e-6, "r1={r1}");
        assert!((r2 - 1.0).abs() < 1e-6, "r2={r2}");
        assert!(r1 < 1.0 && r2 < 1.0);
    }

    #[test]
    fn r1_r2_monotone_on_grid() {
        let mut prev: Option<(f64, f64)> = None;
        for i in 1..=1000 {
            let mu = i as f64 * 0.01;
            let cur = r1_r2(mu).unwrap();
            if let Some(p) = prev {
                assert!(cur.0 > p.0, "r1 not increasing at mu={mu}");
                assert!(cur.1 > p.1, "r2 not increasing at mu={mu}");
            }
            assert!(cur.0 > 0.0 && cur.0 < 1.0);
            assert!(cur.1 > 0.0 && cur.1 < 1.0);
            prev = Some(cur);
        }
    }

    #[test]
    fn continuous_law_matches_refined_discretization() {
        // substituting mu/n, sigma^2/n into the DCA closed form at step n
        // approaches the continuous law as n grows
        let p = sp_params();
        let n = 1_000_000usize;
        let sub = GbmParams::new(p.mu / n as f64, p.sigma / (n as f64).sqrt()).unwrap();
        let discrete = lower_bound_dca_closed(&sub, n).unwrap();
        let cont = continuous_dca_law(&p).unwrap();
        assert!((discrete.log_mean - cont.log_mean).abs() < 1e-5);
        assert!((discrete.log_var - cont.log_var).abs() < 1e-5);
        // mpmath: r1*mu and r2*sigma^2
        assert!((cont.log_mean - 0.033080395158161687).abs() < 1e-13);
        assert!((cont.log_var - 0.0096776184041725349).abs() < 1e-13);
    }

    #[test]
    fn quantile_and_sharpe() {
        let law = LogNormalLaw::new(0.0, 1.0).unwrap();
        assert!((lb_quantile(&law, 0.5).unwrap() - 1.0).abs() < 1e-14);
        // exp(Phi^-1(0.975)); mpmath
        assert!((lb_quantile(&law, 0.975).unwrap() - 7.0990713842313363).abs() < 1e-9);

        let point = LogNormalLaw::new(0.3, 0.0).unwrap();
        assert!((lb_quantile(&point, 0.3).unwrap() - 0.3f64.exp()).abs() < 1e-14);
        assert!(matches!(
            lb_quantile(&law, 1.0),
            Err(Error::InvalidProbability(_))
        ));

        let k1 = LogNormalLaw::new(0.0658, 0.028561).unwrap();
        assert!((lb_sharpe(&k1).unwrap() - 0.3893491124260355).abs() < 1e-13);
        assert_eq!(lb_sharpe(&LogNormalLaw::new(0.0, 1.0).unwrap()).unwrap(), 0.0);
        assert_eq!(lb_sharpe(&point).unwrap_err(), Error::DegenerateLaw);
    }

    #[test]
    fn dca_sharpe_increasing_and_concave() {
        let p = sp_params();
        let lb = lower_bound_recursive(&InvestmentSchedule::dca(50), &p, 50).unwrap();
        let sharpe: Vec<f64> = (1..=50).map(|k| lb_sharpe(&lb.law(k)).unwrap()).collect();
        for i in 1..sharpe.len() {
            assert!(sharpe[i] > sharpe[i - 1], "not increasing at k={}", i + 1);
        }
        for i in 2..sharpe.len() {
            let d1 = sharpe[i - 1] - sharpe[i - 2];
            let d2 = sharpe[i] - sharpe[i - 1];
            assert!(d2 < d1, "first differences not decreasing at k={}", i + 1);
        }
    }
}
