//! The `verify` subcommand: runs every analytic result against its
//! independent oracle and prints a deterministic pass/fail report.
//!
//! All randomization comes from the counter-based draw scheme keyed by the
//! report seed, so two runs with the same flags produce identical bytes.

use std::fmt::Write as _;

use dca_bound::data::{bundled_annual_records, fit_gbm, inflation_adjusted_returns};
use dca_bound::error_lsd::expected_error;
use dca_bound::lower_bound::{
    lower_bound_dca_closed, lower_bound_recursive, sample_z,
};
use dca_bound::mc::{
    default_cdf_grid, empirical_cdf_dominance, simulate, uniform_draw, SimulationConfig,
    PRNG_VERSION,
};
use dca_bound::moments::{moments_closed_form, moments_recursive};
use dca_bound::{wealth_path, GbmParams, InvestmentSchedule};

use crate::commands::TOOL;
use crate::CliError;

pub struct VerifyOptions {
    pub params: GbmParams,
    pub k: usize,
    pub n_paths: usize,
    pub seed: u64,
}

struct Report {
    text: String,
    passed: usize,
    failed: usize,
}

impl Report {
    fn new(opts: &VerifyOptions) -> Self {
        let mut text = String::new();
        let _ = writeln!(text, "# {TOOL}");
        let _ = writeln!(text, "# command: verify");
        let _ = writeln!(
            text,
            "# params: mu={} sigma={} k={} paths={} seed={}",
            opts.params.mu, opts.params.sigma, opts.k, opts.n_paths, opts.seed
        );
        let _ = writeln!(text, "# prng: {PRNG_VERSION}");
        Report {
            text,
            passed: 0,
            failed: 0,
        }
    }

    fn check(&mut self, name: &str, pass: bool, detail: String) {
        if pass {
            self.passed += 1;
        } else {
            self.failed += 1;
        }
        let _ = writeln!(
            self.text,
            "check {name}: {detail} {}",
            if pass { "PASS" } else { "FAIL" }
        );
    }

    fn finish(mut self) -> (String, bool) {
        let ok = self.failed == 0;
        let _ = writeln!(
            self.text,
            "result: {} ({}/{} checks passed)",
            if ok { "PASS" } else { "FAIL" },
            self.passed,
            self.passed + self.failed
        );
        (self.text, ok)
    }
}

/// Uniform helper on a named verify stream; the seed is offset so these
/// draws never collide with the simulator's path space.
fn unif(seed: u64, stream: u64, counter: u64) -> f64 {
    uniform_draw(seed ^ 0x5ec5_0000, stream, counter)
}

fn random_schedule(seed: u64, stream: u64, base: u64) -> InvestmentSchedule {
    let n = 2 + (unif(seed, stream, base) * 6.0) as usize; // 2..=7 entries
    let mut times = vec![0.0];
    let mut amounts = vec![0.1 + 9.9 * unif(seed, stream, base + 1)];
    for i in 1..n {
        let dt = 0.05 + 1.95 * unif(seed, stream, base + 2 * i as u64);
        times.push(times[i - 1] + dt);
        amounts.push(0.1 + 9.9 * unif(seed, stream, base + 2 * i as u64 + 1));
    }
    InvestmentSchedule::new(times, amounts).expect("generated schedule is valid")
}

pub fn run(opts: &VerifyOptions) -> Result<(String, bool), CliError> {
    let mut report = Report::new(opts);
    let params = opts.params;
    let seed = opts.seed;

    // 1. DCA closed form vs the general recursion
    {
        let mut max_rel = 0.0f64;
        let sched = InvestmentSchedule::dca(200);
        for &mu in &[-0.0658, 0.0658, 0.2] {
            let p = GbmParams::new(mu, 0.1690).map_err(CliError::Lib)?;
            let lb = lower_bound_recursive(&sched, &p, 200).map_err(CliError::Lib)?;
            for k in 1..=200 {
                let closed = lower_bound_dca_closed(&p, k).map_err(CliError::Lib)?;
                let rec = lb.law(k);
                let dm = (closed.log_mean - rec.log_mean).abs()
                    / rec.log_mean.abs().max(1.0);
                let dv = (closed.log_var - rec.log_var).abs() / rec.log_var;
                max_rel = max_rel.max(dm).max(dv);
            }
        }
        report.check(
            "lb_closed_vs_recursive",
            max_rel <= 1e-12,
            format!("max relative deviation {max_rel} (tol 1e-12, k<=200)"),
        );
    }

    // 2. moment recursion vs combinatorial sum on random schedules
    {
        let mut max_rel = 0.0f64;
        for case in 0..50u64 {
            let sched = random_schedule(seed, 1, case * 64);
            let mu = -0.2 + 0.4 * unif(seed, 2, case);
            let sigma = 0.05 + 0.35 * unif(seed, 3, case);
            let p = GbmParams::new(mu, sigma).map_err(CliError::Lib)?;
            let k = sched.max_step().min(6);
            let table = moments_recursive(&sched, &p, k, 5).map_err(CliError::Lib)?;
            for n in 1..=5u32 {
                let rec = table.return_moment(k, n).map_err(CliError::Lib)?;
                let closed =
                    moments_closed_form(&sched, &p, k, n).map_err(CliError::Lib)?;
                max_rel = max_rel.max((rec - closed).abs() / rec.abs());
            }
        }
        report.check(
            "moment_recursion_vs_closed_form",
            max_rel <= 1e-10,
            format!("max relative deviation {max_rel} (tol 1e-10, 50 schedules)"),
        );
    }

    // 3-5. one simulation feeds dominance, moment and CDF checks
    {
        let sched = InvestmentSchedule::dca(opts.k);
        let cfg = SimulationConfig::new(sched.clone(), params, opts.n_paths, seed)
            .map_err(CliError::Lib)?;
        let sim = simulate(&cfg).map_err(CliError::Lib)?;

        let total_violations: u64 = sim
            .summary
            .steps
            .iter()
            .map(|s| s.dominance_violations)
            .sum();
        let worst = sim
            .summary
            .steps
            .iter()
            .map(|s| s.worst_margin)
            .fold(f64::INFINITY, f64::min);
        report.check(
            "pathwise_dominance",
            total_violations == 0,
            format!(
                "{} violations over {} paths x {} steps, worst margin {worst}",
                total_violations, opts.n_paths, opts.k
            ),
        );

        let table =
            moments_recursive(&sched, &params, opts.k, 3).map_err(CliError::Lib)?;
        let mut max_sigma = 0.0f64;
        for k in [5usize, 10, 20] {
            if k > opts.k {
                continue;
            }
            let step = &sim.summary.steps[k - 1];
            for n in 1..=3u32 {
                let analytic = table.return_moment(k, n).map_err(CliError::Lib)?;
                let z = (step.raw_moments_r[(n - 1) as usize] - analytic)
                    / step.raw_moment_se[(n - 1) as usize];
                max_sigma = max_sigma.max(z.abs());
            }
        }
        report.check(
            "mc_moment_consistency",
            max_sigma <= 3.0,
            format!("max |z| {max_sigma} over n<=3, k in {{5,10,20}} (tol 3 se)"),
        );

        let k_cdf = opts.k.min(10);
        let lb =
            lower_bound_recursive(&sched, &params, opts.k).map_err(CliError::Lib)?;
        let grid = default_cdf_grid(&lb, k_cdf);
        let rep = empirical_cdf_dominance(&sim, &lb, k_cdf, &grid);
        report.check(
            "cdf_dominance",
            rep.violations == 0,
            format!(
                "{} violations at k={k_cdf}, worst gap {} (DKW eps {})",
                rep.violations, rep.worst_gap, rep.epsilon
            ),
        );
    }

    // 6. expected error: zero at k=1, non-negative, non-decreasing
    {
        let k_max = 50;
        let sched = InvestmentSchedule::dca(k_max);
        let table = moments_recursive(&sched, &params, k_max, 1).map_err(CliError::Lib)?;
        let lb = lower_bound_recursive(&sched, &params, k_max).map_err(CliError::Lib)?;
        let mut ok = true;
        let mut prev = -1.0f64;
        let mut first = f64::NAN;
        for k in 1..=k_max {
            let e = expected_error(&table, &lb, k).map_err(CliError::Lib)?;
            if k == 1 {
                first = e;
                ok &= e == 0.0;
            }
            ok &= e >= prev - 1e-15;
            prev = e;
        }
        report.check(
            "expected_error_path",
            ok,
            format!("k=1 value {first}, non-decreasing to k={k_max}"),
        );
    }

    // 7. concavity inequality sweep
    {
        let mut failures = 0u32;
        for i in 0..1000u64 {
            let a = 1e-3 * (1e6f64).powf(unif(seed, 4, 3 * i));
            let c = 1e-3 * (1e6f64).powf(unif(seed, 4, 3 * i + 1));
            let x = 1e-3 * (1e6f64).powf(unif(seed, 4, 3 * i + 2));
            let lhs = (a + c) * (x / a).powf(a / (a + c));
            if lhs > (x + c) * (1.0 + 1e-12) {
                failures += 1;
            }
        }
        report.check(
            "concavity_inequality",
            failures == 0,
            format!("{failures} failures in 1000 random (a, c, x) triples"),
        );
    }

    // 8. Taylor majorant sweep
    {
        let mut failures = 0u32;
        for i in 0..1000u64 {
            let y = 1e-2 * (1e4f64).powf(unif(seed, 5, 3 * i));
            let j_max = 2 * ((unif(seed, 5, 3 * i + 1) * 11.0) as u32) + 1;
            let x = y * 1e-3 * (2e4f64).powf(unif(seed, 5, 3 * i + 2));
            let w = (x - y) / y;
            let mut term = 1.0f64;
            let mut sum = 0.0f64;
            for j in 1..=j_max {
                term *= w;
                sum += if j % 2 == 1 { term } else { -term } / j as f64;
            }
            if y.ln() + sum < x.ln() - 1e-12 * x.ln().abs().max(1.0) {
                failures += 1;
            }
        }
        report.check(
            "taylor_majorant",
            failures == 0,
            format!("{failures} failures in 1000 random (y, J, x) triples"),
        );
    }

    // 9. scale invariance of returns and bound paths
    {
        let mut max_rel = 0.0f64;
        for i in 0..1000u64 {
            let sched = random_schedule(seed, 6, i * 64);
            let lambda = 0.01 * (1e4f64).powf(unif(seed, 7, i));
            let k = sched.max_step();
            let factors: Vec<f64> = (0..k)
                .map(|s| 0.2 + 4.8 * unif(seed, 8, i * 32 + s as u64))
                .collect();
            let p = GbmParams::new(0.05, 0.2).map_err(CliError::Lib)?;
            let scaled = sched.scaled(lambda).map_err(CliError::Lib)?;
            let r0 = wealth_path(&sched, &factors).map_err(CliError::Lib)?;
            let r1 = wealth_path(&scaled, &factors).map_err(CliError::Lib)?;
            let lb0 = lower_bound_recursive(&sched, &p, k).map_err(CliError::Lib)?;
            let lb1 = lower_bound_recursive(&scaled, &p, k).map_err(CliError::Lib)?;
            let z0 = sample_z(&sched, &lb0, &factors).map_err(CliError::Lib)?;
            let z1 = sample_z(&scaled, &lb1, &factors).map_err(CliError::Lib)?;
            for j in 0..k {
                max_rel = max_rel
                    .max((r0.returns[j] - r1.returns[j]).abs() / r0.returns[j])
                    .max((z0[j] - z1[j]).abs() / z0[j]);
            }
        }
        report.check(
            "scale_invariance",
            max_rel <= 1e-12,
            format!("max relative deviation {max_rel} over 1000 rescaled schedules"),
        );
    }

    // 10. bound parameter monotonicity per drift sign
    {
        let mut ok = true;
        let sched = InvestmentSchedule::dca(500);
        for i in 0..100u64 {
            let mut mu = -0.4 + 0.8 * unif(seed, 9, i);
            if mu.abs() < 1e-3 {
                mu = 0.05;
            }
            let p = GbmParams::new(mu, 0.2).map_err(CliError::Lib)?;
            let lb = lower_bound_recursive(&sched, &p, 500).map_err(CliError::Lib)?;
            for k in 2..=500 {
                let prev = lb.law(k - 1);
                let cur = lb.law(k);
                ok &= if mu > 0.0 {
                    cur.log_mean > prev.log_mean
                } else {
                    cur.log_mean < prev.log_mean
                };
                let resolvable = (2.0 * mu * k as f64).exp() > 1e-13;
                ok &= if mu > 0.0 || resolvable {
                    cur.log_var > prev.log_var
                } else {
                    cur.log_var >= prev.log_var * (1.0 - 1e-14)
                };
            }
        }
        report.check(
            "bound_parameter_monotonicity",
            ok,
            "m_k tracks sign of mu, v_k grows, 100 drifts x k<=500".to_string(),
        );
    }

    // 11. bundled-fixture fit reproduction
    {
        let records = bundled_annual_records();
        let series = inflation_adjusted_returns(&records).map_err(CliError::Data)?;
        let fit = fit_gbm(&series).map_err(CliError::Data)?;
        let ok = (fit.mu_hat - 0.0658).abs() < 5e-4
            && (fit.sigma_hat - 0.1690).abs() < 5e-4
            && (fit.ks_p_value - 0.59).abs() < 0.10;
        report.check(
            "fixture_fit",
            ok,
            format!(
                "mu_hat {} sigma_hat {} ks_p {}",
                fit.mu_hat, fit.sigma_hat, fit.ks_p_value
            ),
        );
    }

    // 12. determinism spot check
    {
        let cfg = SimulationConfig::new(
            InvestmentSchedule::dca(5),
            params,
            2000,
            seed,
        )
        .map_err(CliError::Lib)?;
        let a = simulate(&cfg).map_err(CliError::Lib)?.summary.to_text();
        let b = simulate(&cfg).map_err(CliError::Lib)?.summary.to_text();
        report.check(
            "determinism",
            a == b,
            format!("repeated summary identical ({} bytes)", a.len()),
        );
    }

    Ok(report.finish())
}
