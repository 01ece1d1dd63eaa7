//! Builders for each subcommand's output tables.

use dca_bound::data::{
    acf_pacf, fit_gbm_with, inflation_adjusted_returns, AnnualRecord, FitResult, KsVariant,
    ReturnSeries,
};
use dca_bound::error_lsd::{
    expected_error, log_error_upper_bound, lsd_limit, lump_sum_discount, ErrorGrid,
};
use dca_bound::lower_bound::{
    continuous_dca_law, lb_quantile, lb_sharpe, lower_bound_recursive, r1_r2,
    LowerBoundSequence,
};
use dca_bound::moments::moments_recursive;
use dca_bound::normal::norm_quantile;
use dca_bound::{GbmParams, InvestmentSchedule, LogNormalLaw};

use crate::table::{Cell, Table};

pub const TOOL: &str = concat!("dca-bound v", env!("CARGO_PKG_VERSION"));

fn provenance(command: &str, params: &str) -> Vec<String> {
    vec![
        TOOL.to_string(),
        format!("command: {command}"),
        format!("params: {params}"),
        "schema: v1".to_string(),
    ]
}

const QUANTILE_PROBS: [f64; 3] = [0.025, 0.5, 0.975];

fn law_quantiles(law: &LogNormalLaw) -> anyhow_free::Result<[f64; 6]> {
    let mut out = [0.0; 6];
    for (i, &p) in QUANTILE_PROBS.iter().enumerate() {
        out[i] = lb_quantile(law, p)?;
        out[i + 3] = law.log_mean + norm_quantile(p)? * law.log_var.sqrt();
    }
    Ok(out)
}

/// Minimal error alias: every table builder surfaces library errors as-is.
pub mod anyhow_free {
    pub type Result<T> = std::result::Result<T, crate::CliError>;
}
use anyhow_free::Result;

/// `quantiles`: bound quantiles of Z_k and log Z_k for the unit DCA
/// schedule, k = 1..=k_max.
pub fn quantiles_table(params: &GbmParams, k_max: usize) -> Result<Vec<(String, Table)>> {
    let lb = lower_bound_recursive(&InvestmentSchedule::dca(k_max), params, k_max)?;
    let mut t = Table::new(
        provenance(
            "quantiles",
            &format!("mu={} sigma={} k={}", params.mu, params.sigma, k_max),
        ),
        &[
            "k", "m", "v", "q025", "q500", "q975", "log_q025", "log_q500", "log_q975",
        ],
    );
    for k in 1..=k_max {
        let law = lb.law(k);
        let q = law_quantiles(&law)?;
        t.push_row(vec![
            k.into(),
            law.log_mean.into(),
            law.log_var.into(),
            q[0].into(),
            q[1].into(),
            q[2].into(),
            q[3].into(),
            q[4].into(),
            q[5].into(),
        ]);
    }
    Ok(vec![("quantiles".into(), t)])
}

/// `sharpe`: m_k / sqrt(v_k) per step.
pub fn sharpe_table(params: &GbmParams, k_max: usize) -> Result<Vec<(String, Table)>> {
    let lb = lower_bound_recursive(&InvestmentSchedule::dca(k_max), params, k_max)?;
    let mut t = Table::new(
        provenance(
            "sharpe",
            &format!("mu={} sigma={} k={}", params.mu, params.sigma, k_max),
        ),
        &["k", "m", "v", "sharpe"],
    );
    for k in 1..=k_max {
        let law = lb.law(k);
        t.push_row(vec![
            k.into(),
            law.log_mean.into(),
            law.log_var.into(),
            lb_sharpe(&law)?.into(),
        ]);
    }
    Ok(vec![("sharpe".into(), t)])
}

/// `error`: expected error and minimized log-error bound per step.
pub fn error_table(
    params: &GbmParams,
    k_max: usize,
    grid: &ErrorGrid,
) -> Result<Vec<(String, Table)>> {
    let sched = InvestmentSchedule::dca(k_max);
    let table = moments_recursive(&sched, params, k_max, grid.max_degree())?;
    let lb = lower_bound_recursive(&sched, params, k_max)?;
    let mut t = Table::new(
        provenance(
            "error",
            &format!(
                "mu={} sigma={} k={} j_max={}",
                params.mu,
                params.sigma,
                k_max,
                grid.max_degree()
            ),
        ),
        &["k", "expected_error", "log_error_ub", "j_opt", "y_opt"],
    );
    for k in 1..=k_max {
        let rep = log_error_upper_bound(&table, &lb, k, grid)?;
        t.push_row(vec![
            k.into(),
            rep.expected_error.into(),
            rep.log_error_ub.into(),
            (rep.j_opt as usize).into(),
            rep.y_opt.into(),
        ]);
    }
    Ok(vec![("error".into(), t)])
}

/// `lsd`: the lump-sum discount path for k = 1..=k_max plus the
/// large-horizon limit curve over a drift grid.
pub fn lsd_tables(
    params: &GbmParams,
    k_max: usize,
    mu_grid: &[f64],
) -> Result<Vec<(String, Table)>> {
    let sched = InvestmentSchedule::dca(k_max);
    let lb = lower_bound_recursive(&sched, params, k_max)?;
    let mut path = Table::new(
        provenance(
            "lsd",
            &format!("mu={} sigma={} k={}", params.mu, params.sigma, k_max),
        ),
        &["k", "x", "s", "size_ratio", "time_ratio"],
    );
    for k in 1..=k_max {
        let d = lump_sum_discount(&sched, params, &lb, k)?;
        path.push_row(vec![
            k.into(),
            d.x.into(),
            d.s.into(),
            d.size_ratio.into(),
            d.time_ratio.into(),
        ]);
    }
    let mut limit = Table::new(
        provenance(
            "lsd (limit curve)",
            &format!(
                "mu_grid=[{}..{}] n={}",
                mu_grid.first().copied().unwrap_or(f64::NAN),
                mu_grid.last().copied().unwrap_or(f64::NAN),
                mu_grid.len()
            ),
        ),
        &["mu", "x_limit"],
    );
    for &mu in mu_grid {
        limit.push_row(vec![mu.into(), lsd_limit(mu)?.into()]);
    }
    Ok(vec![("lsd_path".into(), path), ("lsd_limit".into(), limit)])
}

/// `continuous`: the continuous-investing law and its shrink factors over a
/// drift grid.
pub fn continuous_table(sigma: f64, mu_grid: &[f64]) -> Result<Vec<(String, Table)>> {
    let mut t = Table::new(
        provenance(
            "continuous",
            &format!(
                "sigma={sigma} mu_grid=[{}..{}] n={}",
                mu_grid.first().copied().unwrap_or(f64::NAN),
                mu_grid.last().copied().unwrap_or(f64::NAN),
                mu_grid.len()
            ),
        ),
        &["mu", "r1", "r2", "log_mean", "log_var"],
    );
    for &mu in mu_grid {
        let (r1, r2) = r1_r2(mu)?;
        let law = continuous_dca_law(&GbmParams::new(mu, sigma)?)?;
        t.push_row(vec![
            mu.into(),
            r1.into(),
            r2.into(),
            law.log_mean.into(),
            law.log_var.into(),
        ]);
    }
    Ok(vec![("continuous".into(), t)])
}

/// Which hybrid study to emit.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HybridStudy {
    ConstantTotal,
    ConstantLs,
    Both,
}

fn hybrid_row(
    sched: &InvestmentSchedule,
    params: &GbmParams,
    t_end: usize,
    grid_value: f64,
    grid: &ErrorGrid,
) -> Result<Vec<Cell>> {
    let table = moments_recursive(sched, params, t_end, grid.max_degree())?;
    let lb = lower_bound_recursive(sched, params, t_end)?;
    let law = lb.law(t_end);
    let q = law_quantiles(&law)?;
    let rep = log_error_upper_bound(&table, &lb, t_end, grid)?;
    Ok(vec![
        t_end.into(),
        grid_value.into(),
        law.log_mean.into(),
        law.log_var.into(),
        q[0].into(),
        q[1].into(),
        q[2].into(),
        q[3].into(),
        q[4].into(),
        q[5].into(),
        rep.expected_error.into(),
        rep.log_error_ub.into(),
    ])
}

const HYBRID_COLUMNS: [&str; 12] = [
    "t_end",
    "grid_value",
    "m",
    "v",
    "q025",
    "q500",
    "q975",
    "log_q025",
    "log_q500",
    "log_q975",
    "expected_error",
    "log_error_ub",
];

/// Initial-fraction grid for the constant-total study: `points` interior
/// values plus the exact all-DCA point `1/t_end`.
pub fn constant_total_grid(t_end: usize, points: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (1..=points)
        .map(|i| i as f64 / (points + 1) as f64)
        .collect();
    g.push(1.0 / t_end as f64);
    g.sort_unstable_by(f64::total_cmp);
    g.dedup();
    g
}

/// Follow-on-amount grid for the constant-LS study: `points` values in
/// (0, 1], always containing the all-DCA point 1, then a sparse tail out to
/// 1000 where the quantiles approach the shorter plain-DCA limit.
pub fn constant_ls_grid(points: usize) -> Vec<f64> {
    let mut g: Vec<f64> = (1..=points)
        .map(|i| i as f64 / points as f64)
        .collect();
    for tail in [1.5, 2.0, 3.0, 5.0, 10.0, 30.0, 100.0, 300.0, 1000.0] {
        g.push(tail);
    }
    g.sort_unstable_by(f64::total_cmp);
    g.dedup();
    g
}

/// `hybrid`: lump-sum/DCA mixes, one row per (horizon, grid value).
pub fn hybrid_tables(
    params: &GbmParams,
    horizons: &[usize],
    study: HybridStudy,
    points: usize,
    grid: &ErrorGrid,
) -> Result<Vec<(String, Table)>> {
    let mut out = Vec::new();
    let horizon_str = horizons
        .iter()
        .map(ToString::to_string)
        .collect::<Vec<_>>()
        .join(",");
    if matches!(study, HybridStudy::ConstantTotal | HybridStudy::Both) {
        let mut t = Table::new(
            provenance(
                "hybrid (constant total: c0 on the grid, c_k = (1-c0)/(T-1))",
                &format!(
                    "mu={} sigma={} horizons={horizon_str} points={points}",
                    params.mu, params.sigma
                ),
            ),
            &HYBRID_COLUMNS,
        );
        for &t_end in horizons {
            for c0 in constant_total_grid(t_end, points) {
                let sched = InvestmentSchedule::hybrid_constant_total(t_end, c0)?;
                t.push_row(hybrid_row(&sched, params, t_end, c0, grid)?);
            }
        }
        out.push(("hybrid_constant_total".to_string(), t));
    }
    if matches!(study, HybridStudy::ConstantLs | HybridStudy::Both) {
        let mut t = Table::new(
            provenance(
                "hybrid (constant lump sum: c0 = 1, c_k on the grid)",
                &format!(
                    "mu={} sigma={} horizons={horizon_str} points={points}",
                    params.mu, params.sigma
                ),
            ),
            &HYBRID_COLUMNS,
        );
        for &t_end in horizons {
            for amount in constant_ls_grid(points) {
                let sched = InvestmentSchedule::hybrid_constant_ls(t_end, amount)?;
                t.push_row(hybrid_row(&sched, params, t_end, amount, grid)?);
            }
        }
        out.push(("hybrid_constant_ls".to_string(), t));
    }
    Ok(out)
}

/// `fit`: fit summary, ACF/PACF diagnostics and QQ data for an annual
/// record set.
pub fn fit_tables(
    records: &[AnnualRecord],
    input_label: &str,
    max_lag: usize,
    variant: KsVariant,
) -> std::result::Result<Vec<(String, Table)>, dca_bound::data::DataError> {
    let series = inflation_adjusted_returns(records)?;
    let fit = fit_gbm_with(&series, KsVariant::Asymptotic)?;
    let estimated: Option<FitResult> = match variant {
        KsVariant::Asymptotic => None,
        v @ KsVariant::EstimatedParams { .. } => Some(fit_gbm_with(&series, v)?),
    };

    let mut summary = Table::new(
        provenance("fit", &format!("input={input_label}")),
        &["field", "value"],
    );
    summary.push_row(vec!["n_obs".into(), fit.n_obs.into()]);
    summary.push_row(vec!["mu_hat".into(), fit.mu_hat.into()]);
    summary.push_row(vec!["sigma_hat".into(), fit.sigma_hat.into()]);
    summary.push_row(vec!["ks_statistic".into(), fit.ks_statistic.into()]);
    summary.push_row(vec!["ks_p_value_asymptotic".into(), fit.ks_p_value.into()]);
    if let Some(est) = &estimated {
        summary.push_row(vec![
            "ks_p_value_estimated_params".into(),
            est.ks_p_value.into(),
        ]);
    }

    let diag = acf_pacf(&series.returns, max_lag)?;
    let mut acf_t = Table::new(
        provenance(
            "fit (ACF/PACF of returns)",
            &format!("input={input_label} max_lag={max_lag}"),
        ),
        &["lag", "acf", "pacf", "band"],
    );
    for lag in 0..=max_lag {
        acf_t.push_row(vec![
            lag.into(),
            diag.acf[lag].into(),
            diag.pacf[lag].into(),
            diag.band.into(),
        ]);
    }

    let qq = qq_table(&series, input_label, &fit);
    Ok(vec![
        ("fit".to_string(), summary),
        ("acf_pacf".to_string(), acf_t),
        ("qq".to_string(), qq),
    ])
}

fn qq_table(series: &ReturnSeries, input_label: &str, fit: &FitResult) -> Table {
    let mut standardized: Vec<f64> = series
        .log_returns
        .iter()
        .map(|x| (x - fit.mu_hat) / fit.sigma_hat)
        .collect();
    standardized.sort_unstable_by(f64::total_cmp);
    let n = standardized.len();
    let mut t = Table::new(
        provenance(
            "fit (QQ of standardized log-returns vs standard normal)",
            &format!("input={input_label}"),
        ),
        &["p", "theoretical", "sample"],
    );
    for (i, &s) in standardized.iter().enumerate() {
        let p = (i as f64 + 0.5) / n as f64;
        t.push_row(vec![
            p.into(),
            norm_quantile(p).expect("p in (0,1)").into(),
            s.into(),
        ]);
    }
    t
}

/// Reference lower-bound laws for the plain DCA figures, exposed for tests.
pub fn dca_lower_bound(params: &GbmParams, k_max: usize) -> Result<LowerBoundSequence> {
    Ok(lower_bound_recursive(
        &InvestmentSchedule::dca(k_max),
        params,
        k_max,
    )?)
}

/// Expected-error helper on the plain DCA schedule, exposed for tests.
pub fn dca_expected_error(params: &GbmParams, k: usize) -> Result<f64> {
    let sched = InvestmentSchedule::dca(k);
    let table = moments_recursive(&sched, params, k, 1)?;
    let lb = lower_bound_recursive(&sched, params, k)?;
    Ok(expected_error(&table, &lb, k)?)
}
