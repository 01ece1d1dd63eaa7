//! Seeded Monte Carlo oracle.
//!
//! Draws are produced by a stateless counter construction: the normal
//! variate for `(seed, path, step)` is obtained by hashing the triple with
//! the splitmix64 finalizer and pushing the resulting uniform through the
//! shared inverse normal CDF. Any single path can be reconstructed in
//! isolation, results do not depend on the number of worker threads, and a
//! `(seed, config)` pair fully determines every byte of the summary.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::lower_bound::{lower_bound_recursive, sample_log_z, LowerBoundSequence};
use crate::normal::{norm_cdf, norm_quantile};
use crate::numeric::NeumaierSum;
use crate::schedule::{wealth_path, GbmParams, InvestmentSchedule};

/// Name and revision of the draw scheme; recorded in serialized summaries so
/// fixtures are tied to the exact generator.
pub const PRNG_VERSION: &str = "splitmix64-counter/v1";

#[inline]
fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
    z ^ (z >> 31)
}

/// Uniform draw in the open interval (0, 1) for a (seed, path, step) triple.
pub fn uniform_draw(seed: u64, path: u64, step: u64) -> f64 {
    let mut z = seed;
    z = mix64(z ^ mix64(path.wrapping_add(0x9e3779b97f4a7c15)));
    z = mix64(z ^ mix64(step.wrapping_add(0xd1b54a32d192ed03)));
    ((z >> 11) as f64 + 0.5) * (1.0 / 9007199254740992.0) // 2^-53
}

/// Standard normal draw via the inverse-CDF transform.
pub fn normal_draw(seed: u64, path: u64, step: u64) -> f64 {
    norm_quantile(uniform_draw(seed, path, step)).expect("uniform draw lies in (0,1)")
}

/// What to simulate: schedule, GBM parameters, path count and seed.
#[derive(Debug, Clone)]
pub struct SimulationConfig {
    pub schedule: InvestmentSchedule,
    pub params: GbmParams,
    pub n_paths: usize,
    pub seed: u64,
}

impl SimulationConfig {
    pub fn new(
        schedule: InvestmentSchedule,
        params: GbmParams,
        n_paths: usize,
        seed: u64,
    ) -> Result<Self> {
        if n_paths == 0 {
            return Err(Error::InvalidConfig("n_paths must be at least 1".into()));
        }
        if schedule.max_step() == 0 {
            return Err(Error::InvalidConfig(
                "schedule needs at least two entries so one interval can be simulated".into(),
            ));
        }
        Ok(Self {
            schedule,
            params,
            n_paths,
            seed,
        })
    }
}

/// Empirical statistics for one step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepSummary {
    pub k: usize,
    pub mean_r: f64,
    pub var_r: f64,
    /// Nearest-rank 0.025 / 0.5 / 0.975 quantiles of `R_k`.
    pub quantiles_r: [f64; 3],
    pub mean_z: f64,
    pub var_z: f64,
    pub quantiles_z: [f64; 3],
    /// Empirical `E[R_k^n]` for `n = 1, 2, 3`.
    pub raw_moments_r: [f64; 3],
    /// Standard errors of the three moment estimates.
    pub raw_moment_se: [f64; 3],
    /// Paths with `Z_k - R_k > 1e-9`.
    pub dominance_violations: u64,
    /// Smallest `R_k - Z_k` over all paths (reported even when 0 violations).
    pub worst_margin: f64,
}

/// Serializable run summary (schema `format_version` 1). Field units:
/// times in years, returns and wealth per unit invested.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimulationSummary {
    pub format_version: u32,
    pub prng: String,
    pub seed: u64,
    pub n_paths: usize,
    pub mu: f64,
    pub sigma: f64,
    pub times: Vec<f64>,
    pub amounts: Vec<f64>,
    pub steps: Vec<StepSummary>,
}

impl SimulationSummary {
    /// Canonical structured-text form (pretty JSON, trailing newline).
    pub fn to_text(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }

    pub fn from_text(text: &str) -> std::result::Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }
}

/// Simulation output: the serializable summary plus per-step sorted sample
/// vectors retained in memory for CDF-level oracle checks.
#[derive(Debug, Clone)]
pub struct Simulation {
    pub summary: SimulationSummary,
    r_sorted: Vec<Vec<f64>>,
    z_sorted: Vec<Vec<f64>>,
}

impl Simulation {
    /// Sorted `R_k` samples for step `k` (1-indexed).
    pub fn returns_sorted(&self, k: usize) -> &[f64] {
        &self.r_sorted[k - 1]
    }

    /// Sorted `Z_k` samples for step `k` (1-indexed).
    pub fn bound_sorted(&self, k: usize) -> &[f64] {
        &self.z_sorted[k - 1]
    }

    /// Empirical CDF of `R_k` at `x`.
    pub fn empirical_cdf(&self, k: usize, x: f64) -> f64 {
        let v = self.returns_sorted(k);
        v.partition_point(|&s| s <= x) as f64 / v.len() as f64
    }
}

fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = (p * n as f64).ceil().max(1.0) as usize;
    sorted[rank.min(n) - 1]
}

/// Runs the simulation: independent per-interval log factors
/// `N(mu dt, sigma^2 dt)`, returns via the wealth recursion and the bound
/// via its path-wise recursion, over `schedule.max_step()` steps.
pub fn simulate(config: &SimulationConfig) -> Result<Simulation> {
    let schedule = &config.schedule;
    let params = &config.params;
    let k_steps = schedule.max_step();
    let n = config.n_paths;
    let lb = lower_bound_recursive(schedule, params, k_steps)?;

    let times = schedule.times();
    let (dm, ds): (Vec<f64>, Vec<f64>) = (1..=k_steps)
        .map(|k| {
            let dt = times[k] - times[k - 1];
            (params.mu * dt, params.sigma * dt.sqrt())
        })
        .unzip();

    // row-major [path][step] matrices filled in parallel; path order is
    // positional, so thread count cannot influence any output byte
    let mut r_flat = vec![0.0f64; n * k_steps];
    let mut z_flat = vec![0.0f64; n * k_steps];
    r_flat
        .par_chunks_mut(k_steps)
        .zip(z_flat.par_chunks_mut(k_steps))
        .enumerate()
        .for_each(|(path, (r_row, z_row))| {
            let mut log_factors = Vec::with_capacity(k_steps);
            let mut factors = Vec::with_capacity(k_steps);
            for step in 1..=k_steps {
                let z = normal_draw(config.seed, path as u64, step as u64);
                let lf = dm[step - 1] + ds[step - 1] * z;
                log_factors.push(lf);
                factors.push(lf.exp());
            }
            let path_result =
                wealth_path(schedule, &factors).expect("generated factors are positive");
            r_row.copy_from_slice(&path_result.returns);
            let log_z = sample_log_z(schedule, &lb, &log_factors);
            for (dst, lz) in z_row.iter_mut().zip(log_z) {
                *dst = lz.exp();
            }
        });

    let mut steps = Vec::with_capacity(k_steps);
    let mut r_sorted_all = Vec::with_capacity(k_steps);
    let mut z_sorted_all = Vec::with_capacity(k_steps);
    let nf = n as f64;
    for k in 1..=k_steps {
        let mut pow_sums = [NeumaierSum::default(); 6];
        let mut sum_z = NeumaierSum::default();
        let mut sum_z2 = NeumaierSum::default();
        let mut violations = 0u64;
        let mut worst = f64::INFINITY;
        let mut r_col = Vec::with_capacity(n);
        let mut z_col = Vec::with_capacity(n);
        for path in 0..n {
            let r = r_flat[path * k_steps + (k - 1)];
            let z = z_flat[path * k_steps + (k - 1)];
            let mut p = 1.0;
            for s in &mut pow_sums {
                p *= r;
                s.add(p);
            }
            sum_z.add(z);
            sum_z2.add(z * z);
            let margin = r - z;
            worst = worst.min(margin);
            if margin < -1e-9 {
                violations += 1;
            }
            r_col.push(r);
            z_col.push(z);
        }
        r_col.sort_unstable_by(f64::total_cmp);
        z_col.sort_unstable_by(f64::total_cmp);

        let moment = |i: usize| pow_sums[i].total() / nf;
        let mean_r = moment(0);
        let mean_z = sum_z.total() / nf;
        let var = |m2: f64, m1: f64| (m2 - m1 * m1) * nf / (nf - 1.0).max(1.0);
        let mut raw = [0.0; 3];
        let mut se = [0.0; 3];
        for i in 0..3 {
            raw[i] = moment(i);
            let v = var(moment(2 * i + 1), moment(i)).max(0.0);
            se[i] = (v / nf).sqrt();
        }
        steps.push(StepSummary {
            k,
            mean_r,
            var_r: var(moment(1), mean_r).max(0.0),
            quantiles_r: [
                nearest_rank(&r_col, 0.025),
                nearest_rank(&r_col, 0.5),
                nearest_rank(&r_col, 0.975),
            ],
            mean_z,
            var_z: var(sum_z2.total() / nf, mean_z).max(0.0),
            quantiles_z: [
                nearest_rank(&z_col, 0.025),
                nearest_rank(&z_col, 0.5),
                nearest_rank(&z_col, 0.975),
            ],
            raw_moments_r: raw,
            raw_moment_se: se,
            dominance_violations: violations,
            worst_margin: worst,
        });
        r_sorted_all.push(r_col);
        z_sorted_all.push(z_col);
    }

    Ok(Simulation {
        summary: SimulationSummary {
            format_version: 1,
            prng: PRNG_VERSION.to_string(),
            seed: config.seed,
            n_paths: n,
            mu: params.mu,
            sigma: params.sigma,
            times: times.to_vec(),
            amounts: schedule.amounts().to_vec(),
            steps,
        },
        r_sorted: r_sorted_all,
        z_sorted: z_sorted_all,
    })
}

/// One evaluation point of the CDF-dominance check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfDominancePoint {
    pub x: f64,
    pub empirical_r: f64,
    pub analytic_z: f64,
}

/// Result of checking `P(Z_k <= x) >= ecdf_R(x) - epsilon` on a grid, with
/// `epsilon` the DKW band at confidence `1 - 1e-3`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CdfDominanceReport {
    pub k: usize,
    pub epsilon: f64,
    pub points: Vec<CdfDominancePoint>,
    pub violations: usize,
    /// Largest `ecdf_R(x) - P(Z_k <= x)` seen (negative when the analytic
    /// CDF dominates everywhere).
    pub worst_gap: f64,
}

/// DKW half-width `sqrt(ln(2/delta) / (2 n))` at `delta = 1e-3`.
pub fn dkw_epsilon(n_paths: usize) -> f64 {
    ((2.0 / 1e-3_f64).ln() / (2.0 * n_paths as f64)).sqrt()
}

/// Checks first-order dominance of the bound's analytic CDF over the
/// empirical returns CDF at every grid point. Report-only: violations are
/// collected, never raised as errors.
pub fn empirical_cdf_dominance(
    sim: &Simulation,
    lb: &LowerBoundSequence,
    k: usize,
    x_grid: &[f64],
) -> CdfDominanceReport {
    let law = lb.law(k);
    let sd = law.log_var.sqrt();
    let epsilon = dkw_epsilon(sim.summary.n_paths);
    let mut points = Vec::with_capacity(x_grid.len());
    let mut violations = 0;
    let mut worst_gap = f64::NEG_INFINITY;
    for &x in x_grid {
        let empirical_r = sim.empirical_cdf(k, x);
        let analytic_z = if sd > 0.0 {
            norm_cdf((x.ln() - law.log_mean) / sd)
        } else if x.ln() >= law.log_mean {
            1.0
        } else {
            0.0
        };
        let gap = empirical_r - analytic_z;
        worst_gap = worst_gap.max(gap);
        if gap > epsilon {
            violations += 1;
        }
        points.push(CdfDominancePoint {
            x,
            empirical_r,
            analytic_z,
        });
    }
    CdfDominanceReport {
        k,
        epsilon,
        points,
        violations,
        worst_gap,
    }
}

/// Default evaluation grid: the 1%..99% analytic quantiles of `Z_k`.
pub fn default_cdf_grid(lb: &LowerBoundSequence, k: usize) -> Vec<f64> {
    let law = lb.law(k);
    (1..=99)
        .map(|i| {
            let p = i as f64 / 100.0;
            (law.log_mean + norm_quantile(p).expect("p in (0,1)") * law.log_var.sqrt()).exp()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp() -> GbmParams {
        GbmParams::new(0.0658, 0.1690).unwrap()
    }

    #[test]
    fn draws_are_deterministic_and_distinct() {
        let a = normal_draw(42, 0, 1);
        let b = normal_draw(42, 0, 1);
        assert_eq!(a.to_bits(), b.to_bits());
        assert_ne!(normal_draw(42, 0, 1), normal_draw(42, 1, 1));
        assert_ne!(normal_draw(42, 0, 1), normal_draw(42, 0, 2));
        assert_ne!(normal_draw(42, 0, 1), normal_draw(43, 0, 1));
    }

    #[test]
    fn draw_moments_look_standard_normal() {
        let n = 200_000;
        let mut sum = 0.0;
        let mut sum2 = 0.0;
        for p in 0..n {
            let z = normal_draw(7, p, 1);
            sum += z;
            sum2 += z * z;
        }
        let mean = sum / n as f64;
        let var = sum2 / n as f64 - mean * mean;
        assert!(mean.abs() < 0.01, "mean {mean}");
        assert!((var - 1.0).abs() < 0.02, "var {var}");
    }

    #[test]
    fn identical_seeds_give_identical_summaries() {
        let cfg = SimulationConfig::new(InvestmentSchedule::dca(5), sp(), 2000, 42).unwrap();
        let a = simulate(&cfg).unwrap().summary.to_text();
        let b = simulate(&cfg).unwrap().summary.to_text();
        assert_eq!(a, b);
        let cfg2 = SimulationConfig::new(InvestmentSchedule::dca(5), sp(), 2000, 43).unwrap();
        assert_ne!(a, simulate(&cfg2).unwrap().summary.to_text());
    }

    #[test]
    fn summary_round_trips_through_text() {
        let cfg = SimulationConfig::new(InvestmentSchedule::dca(3), sp(), 500, 9).unwrap();
        let sim = simulate(&cfg).unwrap();
        let text = sim.summary.to_text();
        let back = SimulationSummary::from_text(&text).unwrap();
        assert_eq!(back, sim.summary);
        assert_eq!(back.prng, PRNG_VERSION);
    }

    #[test]
    fn near_zero_volatility_hits_deterministic_compounding() {
        // sigma -> 0: R_5 = (1/5) sum_j e^{mu (5 - j)}; mpmath reference
        let p = GbmParams::new(0.05, 1e-12).unwrap();
        let cfg = SimulationConfig::new(InvestmentSchedule::dca(5), p, 100, 3).unwrap();
        let sim = simulate(&cfg).unwrap();
        let want = 1.1647408864055732;
        assert!((sim.summary.steps[4].mean_r - want).abs() < 1e-6);
        assert!(sim.summary.steps[4].var_r < 1e-20);
    }

    #[test]
    fn dominance_holds_on_every_path() {
        let cfg = SimulationConfig::new(InvestmentSchedule::dca(10), sp(), 20_000, 42).unwrap();
        let sim = simulate(&cfg).unwrap();
        for s in &sim.summary.steps {
            assert_eq!(s.dominance_violations, 0, "k={}", s.k);
            assert!(s.worst_margin > -1e-9, "k={} margin={}", s.k, s.worst_margin);
        }
        // step 1 margin is identically zero: Z_1 = R_1
        assert!(sim.summary.steps[0].worst_margin.abs() < 1e-12);
    }

    #[test]
    fn config_validation() {
        assert!(matches!(
            SimulationConfig::new(InvestmentSchedule::dca(3), sp(), 0, 1),
            Err(Error::InvalidConfig(_))
        ));
        let single = InvestmentSchedule::new(vec![0.0], vec![1.0]).unwrap();
        assert!(matches!(
            SimulationConfig::new(single, sp(), 10, 1),
            Err(Error::InvalidConfig(_))
        ));
    }

    #[test]
    fn cdf_dominance_step_one_is_equality_within_band() {
        let cfg = SimulationConfig::new(InvestmentSchedule::dca(3), sp(), 50_000, 11).unwrap();
        let sim = simulate(&cfg).unwrap();
        let lb = lower_bound_recursive(&InvestmentSchedule::dca(3), &sp(), 3).unwrap();
        let grid = default_cdf_grid(&lb, 1);
        let rep = empirical_cdf_dominance(&sim, &lb, 1, &grid);
        assert_eq!(rep.violations, 0);
        for pt in &rep.points {
            assert!(
                (pt.empirical_r - pt.analytic_z).abs() <= rep.epsilon,
                "x={}",
                pt.x
            );
        }
    }

    #[test]
    fn cdf_dominance_median_point() {
        let cfg = SimulationConfig::new(InvestmentSchedule::dca(2), sp(), 1000, 5).unwrap();
        let sim = simulate(&cfg).unwrap();
        let lb = lower_bound_recursive(&InvestmentSchedule::dca(2), &sp(), 2).unwrap();
        let median = lb.law(2).log_mean.exp();
        let rep = empirical_cdf_dominance(&sim, &lb, 2, &[median]);
        assert!((rep.points[0].analytic_z - 0.5).abs() < 1e-12);
    }

    #[test]
    fn nearest_rank_convention() {
        let v = [1.0, 2.0, 3.0, 4.0];
        assert_eq!(nearest_rank(&v, 0.5), 2.0);
        assert_eq!(nearest_rank(&v, 0.025), 1.0);
        assert_eq!(nearest_rank(&v, 0.975), 4.0);
        assert_eq!(nearest_rank(&v, 0.75), 3.0);
    }
}
