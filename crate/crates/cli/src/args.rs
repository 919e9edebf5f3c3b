use std::path::PathBuf;

use clap::{Parser, Subcommand};

use crate::report::{DEFAULT_PRECISION, MAX_PRECISION};

#[derive(Debug, Parser)]
#[command(
    name = "coint",
    version,
    about = "Cointegration analysis of monthly multivariate series"
)]
pub struct Cli {
    /// Emit the report as JSON instead of text.
    #[arg(long, global = true)]
    pub json: bool,

    /// Decimal places shown for real numbers.
    #[arg(
        long,
        global = true,
        env = "COINT_PRECISION",
        default_value_t = DEFAULT_PRECISION,
        value_parser = parse_precision
    )]
    pub precision: usize,

    /// Omit the version line from text reports.
    #[arg(long, global = true)]
    pub no_banner: bool,

    #[command(subcommand)]
    pub command: Command,
}

fn parse_precision(s: &str) -> Result<usize, String> {
    let p: usize = s.parse().map_err(|_| format!("{s:?} is not a whole number"))?;
    if p > MAX_PRECISION {
        return Err(format!("precision must be at most {MAX_PRECISION}"));
    }
    Ok(p)
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Differencing search and augmented Dickey-Fuller test for each series.
    Explore {
        csv: PathBuf,
        /// Largest difference lag searched.
        #[arg(long, default_value_t = 12)]
        max_s: usize,
        /// Largest number of differences searched.
        #[arg(long, default_value_t = 2)]
        max_d: usize,
        /// Largest number of lagged differences in the ADF regression.
        #[arg(long, default_value_t = coint_core::unitroot::DEFAULT_MAX_LAGS)]
        max_lags: usize,
    },
    /// AIC and SBC of level VARs of order 1 to kmax on a common sample.
    SelectLags {
        csv: PathBuf,
        #[arg(long)]
        kmax: usize,
    },
    /// Johansen trace test and reduced-rank estimates.
    Johansen {
        csv: PathBuf,
        /// VAR order in levels.
        #[arg(long)]
        lags: usize,
        /// Cointegrating rank; chosen by the trace test when omitted.
        #[arg(long)]
        rank: Option<usize>,
    },
    /// Permanent-transitory decomposition at a given rank.
    Decompose {
        csv: PathBuf,
        #[arg(long)]
        lags: usize,
        #[arg(long)]
        rank: usize,
        /// Write period-by-period components and factors as TSV.
        #[arg(long)]
        tsv: Option<PathBuf>,
    },
    /// Test that the common trends do not load on the named series.
    Test {
        csv: PathBuf,
        #[arg(long)]
        lags: usize,
        #[arg(long)]
        rank: usize,
        /// Comma-separated series names to exclude.
        #[arg(long, required = true, value_delimiter = ',')]
        exclude: Vec<String>,
    },
    /// Every exclusion of up to J series, best supported first.
    Scan {
        csv: PathBuf,
        #[arg(long)]
        lags: usize,
        #[arg(long)]
        rank: usize,
        #[arg(long)]
        max_excluded: usize,
        /// Show only the first N rows.
        #[arg(long)]
        top: Option<usize>,
    },
    /// Simulate a system described by a config file and write it as CSV.
    Simulate {
        #[arg(long)]
        spec: PathBuf,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}
