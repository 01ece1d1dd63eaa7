//! Command-line front end.
//!
//! Exit codes: 0 success, 1 usage/parameter error, 2 data error,
//! 3 verification failure.

mod commands;
mod table;
mod verify;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use dca_bound::data::{load_annual_csv, KsVariant};
use dca_bound::error_lsd::ErrorGrid;
use dca_bound::GbmParams;

use commands::HybridStudy;
use table::Table;

#[derive(Debug)]
pub enum CliError {
    Lib(dca_bound::Error),
    Data(dca_bound::data::DataError),
    Io(std::io::Error),
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Lib(e) => write!(f, "{e}"),
            CliError::Data(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "{e}"),
            CliError::Usage(msg) => write!(f, "{msg}"),
        }
    }
}

impl From<dca_bound::Error> for CliError {
    fn from(e: dca_bound::Error) -> Self {
        CliError::Lib(e)
    }
}

impl From<dca_bound::data::DataError> for CliError {
    fn from(e: dca_bound::data::DataError) -> Self {
        CliError::Data(e)
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Io(e)
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Lib(_) | CliError::Usage(_) => 1,
            CliError::Data(_) | CliError::Io(_) => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// Tab-separated text with a `#` provenance header.
    Table,
    /// Structured JSON records.
    Json,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KsVariantArg {
    /// Plain one-sample KS with the asymptotic Kolmogorov p-value.
    Asymptotic,
    /// Seeded Monte Carlo null that accounts for the estimated parameters.
    Estimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum StudyArg {
    ConstantTotal,
    ConstantLs,
    Both,
}

#[derive(Parser, Debug)]
#[command(
    name = "dca-bound",
    version,
    about = "Schedule-return analytics under geometric Brownian motion: \
             log-normal lower bounds, exact moments, error bounds, lump-sum \
             discounts, annual-data fitting and a Monte Carlo verification suite"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Output format for emitted tables.
    #[arg(long, global = true, value_enum, default_value = "table")]
    format: Format,

    /// Directory to write one file per table into (stdout when omitted).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Fit GBM parameters to an annual CSV and run normality/independence
    /// diagnostics.
    Fit {
        /// CSV with columns year,I,D,C; the bundled 1871-2020 fixture is
        /// used when omitted.
        #[arg(long)]
        input: Option<PathBuf>,
        /// Largest ACF/PACF lag to report.
        #[arg(long, default_value_t = 20)]
        max_lag: usize,
        #[arg(long, value_enum, default_value = "asymptotic")]
        ks_variant: KsVariantArg,
        /// Null-simulation count for the estimated-parameter variant.
        #[arg(long, default_value_t = 10_000)]
        ks_sims: usize,
        /// Seed for the estimated-parameter null simulation.
        #[arg(long, default_value_t = 7)]
        ks_seed: u64,
    },
    /// Per-step 2.5%/50%/97.5% quantiles of the return lower bound.
    Quantiles {
        #[arg(long, default_value_t = 0.0658)]
        mu: f64,
        #[arg(long, default_value_t = 0.1690)]
        sigma: f64,
        /// Number of annual steps.
        #[arg(long, default_value_t = 50)]
        k: usize,
    },
    /// Per-step Sharpe ratio of the bound's log law.
    Sharpe {
        #[arg(long, default_value_t = 0.0658)]
        mu: f64,
        #[arg(long, default_value_t = 0.1690)]
        sigma: f64,
        #[arg(long, default_value_t = 50)]
        k: usize,
    },
    /// Expected error and minimized log-error upper bound per step.
    Error {
        #[arg(long, default_value_t = 0.0658)]
        mu: f64,
        #[arg(long, default_value_t = 0.1690)]
        sigma: f64,
        #[arg(long, default_value_t = 50)]
        k: usize,
        /// Largest (odd) Taylor degree in the search grid.
        #[arg(long, default_value_t = 21)]
        j_max: u32,
        /// y-grid: factors exp(y_min_exp + y_step * r) of E[R_k], r < y_count.
        #[arg(long, default_value_t = -4.0)]
        y_min_exp: f64,
        #[arg(long, default_value_t = 0.01)]
        y_step: f64,
        #[arg(long, default_value_t = 801)]
        y_count: usize,
    },
    /// Lump-sum discount path and its large-horizon limit curve.
    Lsd {
        #[arg(long, default_value_t = 0.0658)]
        mu: f64,
        #[arg(long, default_value_t = 0.1690)]
        sigma: f64,
        #[arg(long, default_value_t = 50)]
        k: usize,
        #[arg(long, default_value_t = 0.01)]
        mu_min: f64,
        #[arg(long, default_value_t = 0.15)]
        mu_max: f64,
        #[arg(long, default_value_t = 0.01)]
        mu_step: f64,
    },
    /// Lump-sum/DCA mixes: quantiles and error across initial-amount grids.
    Hybrid {
        #[arg(long, default_value_t = 0.0658)]
        mu: f64,
        #[arg(long, default_value_t = 0.1690)]
        sigma: f64,
        /// Investment horizons (years) to stop at.
        #[arg(long, value_delimiter = ',', default_values_t = vec![2usize, 6, 12, 20, 30, 42])]
        horizons: Vec<usize>,
        #[arg(long, value_enum, default_value = "both")]
        study: StudyArg,
        /// Interior grid points per horizon.
        #[arg(long, default_value_t = 19)]
        points: usize,
        /// Largest (odd) Taylor degree for the per-point error bound.
        #[arg(long, default_value_t = 21)]
        j_max: u32,
    },
    /// Continuous-investing bound law and its drift/variance shrink factors.
    Continuous {
        #[arg(long, default_value_t = 0.1690)]
        sigma: f64,
        #[arg(long, default_value_t = 0.01)]
        mu_min: f64,
        #[arg(long, default_value_t = 10.0)]
        mu_max: f64,
        #[arg(long, default_value_t = 0.01)]
        mu_step: f64,
    },
    /// Run the full Monte Carlo / cross-form verification suite.
    Verify {
        #[arg(long, default_value_t = 0.0658)]
        mu: f64,
        #[arg(long, default_value_t = 0.1690)]
        sigma: f64,
        /// Steps to simulate.
        #[arg(long, default_value_t = 20)]
        k: usize,
        /// Number of Monte Carlo paths.
        #[arg(long, default_value_t = 100_000)]
        paths: usize,
        #[arg(long, default_value_t = 42)]
        seed: u64,
    },
}

fn mu_grid(min: f64, max: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0 && max >= min) {
        return Err(CliError::Usage(format!(
            "invalid drift grid: min={min} max={max} step={step}"
        )));
    }
    let n = ((max - min) / step).round() as usize + 1;
    Ok((0..n).map(|i| min + i as f64 * step).collect())
}

fn error_grid(j_max: u32, y_min_exp: f64, y_step: f64, y_count: usize) -> Result<ErrorGrid, CliError> {
    if j_max % 2 == 0 || j_max == 0 {
        return Err(CliError::Usage(format!(
            "--j-max must be odd and positive, got {j_max}"
        )));
    }
    let j_set: Vec<u32> = (0..=(j_max - 1) / 2).map(|i| 2 * i + 1).collect();
    let y_factors: Vec<f64> = (0..y_count)
        .map(|r| (y_min_exp + y_step * r as f64).exp())
        .collect();
    Ok(ErrorGrid::new(j_set, y_factors)?)
}

fn emit(tables: Vec<(String, Table)>, format: Format, out: &Option<PathBuf>) -> Result<(), CliError> {
    match out {
        None => {
            let mut first = true;
            for (_, t) in &tables {
                if !first {
                    println!();
                }
                first = false;
                match format {
                    Format::Table => print!("{}", t.to_tsv()),
                    Format::Json => print!("{}", t.to_json()),
                }
            }
        }
        Some(dir) => {
            std::fs::create_dir_all(dir)?;
            for (name, t) in &tables {
                let ext = match format {
                    Format::Table => "tsv",
                    Format::Json => "json",
                };
                let path = dir.join(format!("{name}.{ext}"));
                let body = match format {
                    Format::Table => t.to_tsv(),
                    Format::Json => t.to_json(),
                };
                std::fs::write(&path, body)?;
                eprintln!("wrote {}", path.display());
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<u8, CliError> {
    let format = cli.format;
    let out = cli.out;
    match cli.command {
        Command::Fit {
            input,
            max_lag,
            ks_variant,
            ks_sims,
            ks_seed,
        } => {
            let (records, label) = match &input {
                Some(path) => (
                    load_annual_csv(path)?,
                    path.display().to_string(),
                ),
                None => (
                    dca_bound::data::bundled_annual_records(),
                    "bundled".to_string(),
                ),
            };
            let variant = match ks_variant {
                KsVariantArg::Asymptotic => KsVariant::Asymptotic,
                KsVariantArg::Estimated => KsVariant::EstimatedParams {
                    n_sim: ks_sims,
                    seed: ks_seed,
                },
            };
            let tables = commands::fit_tables(&records, &label, max_lag, variant)?;
            emit(tables, format, &out)?;
            Ok(0)
        }
        Command::Quantiles { mu, sigma, k } => {
            let tables = commands::quantiles_table(&GbmParams::new(mu, sigma)?, k)?;
            emit(tables, format, &out)?;
            Ok(0)
        }
        Command::Sharpe { mu, sigma, k } => {
            let tables = commands::sharpe_table(&GbmParams::new(mu, sigma)?, k)?;
            emit(tables, format, &out)?;
            Ok(0)
        }
        Command::Error {
            mu,
            sigma,
            k,
            j_max,
            y_min_exp,
            y_step,
            y_count,
        } => {
            let grid = error_grid(j_max, y_min_exp, y_step, y_count)?;
            let tables = commands::error_table(&GbmParams::new(mu, sigma)?, k, &grid)?;
            emit(tables, format, &out)?;
            Ok(0)
        }
        Command::Lsd {
            mu,
            sigma,
            k,
            mu_min,
            mu_max,
            mu_step,
        } => {
            let grid = mu_grid(mu_min, mu_max, mu_step)?;
            let tables = commands::lsd_tables(&GbmParams::new(mu, sigma)?, k, &grid)?;
            emit(tables, format, &out)?;
            Ok(0)
        }
        Command::Hybrid {
            mu,
            sigma,
            horizons,
            study,
            points,
            j_max,
        } => {
            if horizons.iter().any(|&t| t < 2) {
                return Err(CliError::Usage(
                    "hybrid horizons must be at least 2 years".into(),
                ));
            }
            if points == 0 {
                return Err(CliError::Usage("--points must be positive".into()));
            }
            let grid = error_grid(j_max, -4.0, 0.01, 801)?;
            let study = match study {
                StudyArg::ConstantTotal => HybridStudy::ConstantTotal,
                StudyArg::ConstantLs => HybridStudy::ConstantLs,
                StudyArg::Both => HybridStudy::Both,
            };
            let tables = commands::hybrid_tables(
                &GbmParams::new(mu, sigma)?,
                &horizons,
                study,
                points,
                &grid,
            )?;
            emit(tables, format, &out)?;
            Ok(0)
        }
        Command::Continuous {
            sigma,
            mu_min,
            mu_max,
            mu_step,
        } => {
            let grid = mu_grid(mu_min, mu_max, mu_step)?;
            let tables = commands::continuous_table(sigma, &grid)?;
            emit(tables, format, &out)?;
            Ok(0)
        }
        Command::Verify {
            mu,
            sigma,
            k,
            paths,
            seed,
        } => {
            let opts = verify::VerifyOptions {
                params: GbmParams::new(mu, sigma)?,
                k,
                n_paths: paths,
                seed,
            };
            let (report, ok) = verify::run(&opts)?;
            print!("{report}");
            Ok(if ok { 0 } else { 3 })
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
