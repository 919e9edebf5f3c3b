//! Chi-square tail probabilities and quantiles.

use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

fn distribution(df: usize) -> Result<ChiSquared> {
    ChiSquared::new(df as f64)
        .map_err(|e| Error::InvalidInput(format!("chi-square with {df} degrees of freedom: {e}")))
}

/// `P(χ²_df > x)`. With `df = 0` only `x = 0` is accepted, giving 1.
pub fn chi_square_sf(x: f64, df: usize) -> Result<f64> {
    if !(x >= 0.0) {
        return Err(Error::InvalidInput(format!(
            "chi-square statistic must be non-negative, got {x}"
        )));
    }
    if df == 0 {
        return if x == 0.0 {
            Ok(1.0)
        } else {
            Err(Error::InvalidInput(
                "zero degrees of freedom only admits a zero statistic".into(),
            ))
        };
    }
    Ok(distribution(df)?.sf(x).clamp(0.0, 1.0))
}

/// `x` with `P(χ²_df ≤ x) = q`.
pub fn chi_square_quantile(q: f64, df: usize) -> Result<f64> {
    if !(q > 0.0 && q < 1.0) {
        return Err(Error::InvalidInput(format!(
            "quantile level must lie in (0, 1), got {q}"
        )));
    }
    if df == 0 {
        return Err(Error::InvalidInput(
            "chi-square quantile needs at least one degree of freedom".into(),
        ));
    }
    Ok(distribution(df)?.inverse_cdf(q))
}
