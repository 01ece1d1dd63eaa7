//! Analytics for predetermined investing schedules under a geometric
//! Brownian motion price model.
//!
//! Given a schedule of investments `c_k` at times `t_k` and GBM parameters
//! `(mu, sigma)`, this crate computes
//!
//! * exact positive-integer moments of the schedule's returns, by a fast
//!   recursion and by an independent combinatorial sum ([`moments`]);
//! * a log-normal lower bound `Z_k <= R_k` (w.p.1) on the returns, with
//!   recursive parameters for general schedules and closed forms for dollar
//!   cost averaging and its continuous-investing limit ([`lower_bound`]);
//! * the expected error and a Taylor-majorant upper bound on the expected
//!   log-error / relative error of that bound, plus the lump-sum discount:
//!   the single up-front investment whose terminal wealth law matches the
//!   bound's ([`error_lsd`]);
//! * a seeded, counter-based Monte Carlo simulator that serves as the
//!   brute-force oracle for all of the above ([`mc`]);
//! * loading and fitting of annual index/dividend/CPI data: inflation-adjusted
//!   returns, `(mu, sigma)` estimation, KS normality and ACF/PACF
//!   independence diagnostics ([`data`]).
//!
//! All analytic operations are pure functions of immutable inputs and safe
//! to call concurrently.

pub mod data;
pub mod error;
pub mod error_lsd;
pub mod lower_bound;
pub mod mc;
pub mod moments;
pub mod normal;
mod numeric;
pub mod schedule;

pub use error::{Error, Result};
pub use schedule::{
    factor_law, lognormal_log_raw_moment, lognormal_raw_moment, wealth_path, GbmParams,
    InvestmentSchedule, LogNormalLaw, WealthPath,
};
