//! Order-of-integration diagnostics: the standard-deviation differencing
//! search and the augmented Dickey-Fuller test.

use std::fmt;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::regress::ols;
use crate::series::diff_series;

/// Lag bound used when the caller does not pick one; monthly financial series.
pub const DEFAULT_MAX_LAGS: usize = 3;

/// Sample standard deviation with the `n − 1` divisor.
pub fn sample_std(x: &[f64]) -> Result<f64> {
    let n = x.len();
    if n < 2 {
        return Err(Error::SampleSize {
            what: "sample standard deviation".into(),
            needed: 2,
            got: n,
        });
    }
    let mean = x.iter().sum::<f64>() / n as f64;
    let ss = x.iter().map(|v| (v - mean).powi(2)).sum::<f64>();
    Ok((ss / (n - 1) as f64).sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffSearchRow {
    /// Difference lag; `0` marks the untransformed baseline row.
    pub s: usize,
    pub d: usize,
    pub sigma: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiffSearch {
    pub rows: Vec<DiffSearchRow>,
    pub optimum: DiffSearchRow,
}

impl DiffSearch {
    /// Best row among transforms of order at least `min_d`.
    pub fn best_with_min_order(&self, min_d: usize) -> Option<DiffSearchRow> {
        best(self.rows.iter().filter(|r| r.d >= min_d))
    }
}

fn best<'a>(rows: impl Iterator<Item = &'a DiffSearchRow>) -> Option<DiffSearchRow> {
    rows.copied().min_by(|a, b| {
        a.sigma
            .total_cmp(&b.sigma)
            .then(a.d.cmp(&b.d))
            .then(a.s.cmp(&b.s))
    })
}

/// Standard deviation of `∇_s^d x` over `d ∈ 0..=max_d`, `s ∈ 1..=max_s`.
/// The `d = 0` baseline appears once. Ties on sigma go to smaller `d`, then
/// smaller `s`.
pub fn diff_search(x: &[f64], max_s: usize, max_d: usize) -> Result<DiffSearch> {
    if max_s == 0 && max_d > 0 {
        return Err(Error::InvalidInput("max_s must be at least 1".into()));
    }
    let needed = max_s * max_d + 2;
    if x.len() < needed {
        return Err(Error::SampleSize {
            what: format!("differencing search up to s={max_s}, d={max_d}"),
            needed,
            got: x.len(),
        });
    }
    let mut rows = vec![DiffSearchRow {
        s: 0,
        d: 0,
        sigma: sample_std(x)?,
    }];
    for d in 1..=max_d {
        for s in 1..=max_s {
            let sigma = sample_std(&diff_series(x, s, d)?)?;
            rows.push(DiffSearchRow { s, d, sigma });
        }
    }
    let optimum = best(rows.iter()).expect("baseline row present");
    Ok(DiffSearch { rows, optimum })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SignificanceLevel {
    OnePercent,
    FivePercent,
    TenPercent,
}

impl fmt::Display for SignificanceLevel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SignificanceLevel::OnePercent => "1%",
            SignificanceLevel::FivePercent => "5%",
            SignificanceLevel::TenPercent => "10%",
        })
    }
}

/// Dickey-Fuller critical values for the constant-only regression.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CriticalValues {
    pub one: f64,
    pub five: f64,
    pub ten: f64,
}

impl Default for CriticalValues {
    /// Tabulated values for roughly 144 observations.
    fn default() -> Self {
        CriticalValues {
            one: -3.46,
            five: -2.88,
            ten: -2.57,
        }
    }
}

impl CriticalValues {
    /// Most stringent level at which `statistic` rejects a unit root.
    pub fn reject_at(&self, statistic: f64) -> Option<SignificanceLevel> {
        if statistic < self.one {
            Some(SignificanceLevel::OnePercent)
        } else if statistic < self.five {
            Some(SignificanceLevel::FivePercent)
        } else if statistic < self.ten {
            Some(SignificanceLevel::TenPercent)
        } else {
            None
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdfResult {
    pub chosen_lags: usize,
    /// AIC for lag counts `0..=max_lags`, all on the same sample.
    pub aic_by_lag: Vec<f64>,
    /// t-ratio on the lagged level at `chosen_lags`.
    pub statistic: f64,
    pub critical_values: CriticalValues,
    pub reject_at: Option<SignificanceLevel>,
    pub nobs: usize,
}

impl AdfResult {
    pub fn rejects_at(&self, level: SignificanceLevel) -> bool {
        self.reject_at.is_some_and(|l| l <= level)
    }
}

struct AdfFit {
    aic: f64,
    statistic: f64,
}

fn fit_adf(x: &[f64], lags: usize, max_lags: usize) -> Result<AdfFit> {
    // Δx_t for t = max_lags+1 ..= n−1 on [1, x_{t−1}, Δx_{t−1}, …, Δx_{t−lags}]
    let n = x.len();
    let first = max_lags + 1;
    let nobs = n - first;
    let q = 2 + lags;
    let dx = |t: usize| x[t] - x[t - 1];
    let y = DMatrix::from_fn(nobs, 1, |i, _| dx(first + i));
    let reg = DMatrix::from_fn(nobs, q, |i, c| {
        let t = first + i;
        match c {
            0 => 1.0,
            1 => x[t - 1],
            _ => dx(t - (c - 1)),
        }
    });
    let fit = ols(&y, &reg).map_err(|e| match e {
        Error::SingularRegression(m) => {
            Error::SingularRegression(format!("Dickey-Fuller regression with {lags} lags: {m}"))
        }
        other => other,
    })?;
    let rss = fit.rss(0);
    if !(rss > 0.0) {
        return Err(Error::SingularRegression(
            "Dickey-Fuller regression fits exactly; residual variance is zero".into(),
        ));
    }
    let s2 = rss / (nobs - q) as f64;
    let se = (s2 * fit.xtx_inv[(1, 1)]).sqrt();
    Ok(AdfFit {
        aic: nobs as f64 * (rss / nobs as f64).ln() + 2.0 * q as f64,
        statistic: fit.coefficients[(1, 0)] / se,
    })
}

/// Augmented Dickey-Fuller test with a constant and AIC lag choice over
/// `0..=max_lags`. Every candidate uses the sample left after trimming
/// `max_lags + 1` observations so the criteria are comparable.
pub fn adf_test(x: &[f64], max_lags: usize, cv: CriticalValues) -> Result<AdfResult> {
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::InvalidInput("series has non-finite values".into()));
    }
    // residual degrees of freedom must stay positive at the largest lag
    let needed = 2 * max_lags + 4;
    if x.len() < needed {
        return Err(Error::SampleSize {
            what: format!("Dickey-Fuller test with up to {max_lags} lags"),
            needed,
            got: x.len(),
        });
    }
    let fits = (0..=max_lags)
        .map(|l| fit_adf(x, l, max_lags))
        .collect::<Result<Vec<_>>>()?;
    let aic_by_lag: Vec<f64> = fits.iter().map(|f| f.aic).collect();
    let chosen_lags = argmin_first(&aic_by_lag);
    let statistic = fits[chosen_lags].statistic;
    Ok(AdfResult {
        chosen_lags,
        aic_by_lag,
        statistic,
        critical_values: cv,
        reject_at: cv.reject_at(statistic),
        nobs: x.len() - max_lags - 1,
    })
}

/// Index of the smallest value, first on ties.
pub fn argmin_first(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v < values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn walk(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut x = 0.0;
        (0..n)
            .map(|_| {
                x += rng.sample::<f64, _>(StandardNormal);
                x
            })
            .collect()
    }

    #[test]
    fn ramp_is_removed_by_one_difference() {
        let x: Vec<f64> = (0..20).map(|t| t as f64).collect();
        let out = diff_search(&x, 2, 2).unwrap();
        assert_eq!((out.optimum.s, out.optimum.d), (1, 1));
        assert_eq!(out.optimum.sigma, 0.0);
        assert_eq!(out.rows.len(), 1 + 2 * 2);
    }

    #[test]
    fn constant_prefers_baseline() {
        let out = diff_search(&[4.0; 10], 2, 2).unwrap();
        assert_eq!(out.optimum.d, 0);
        assert_eq!(out.optimum.sigma, 0.0);
    }

    #[test]
    fn table_matches_direct_recomputation() {
        let x = walk(20, 42);
        let out = diff_search(&x, 3, 2).unwrap();
        for row in &out.rows {
            let t: Vec<f64> = if row.d == 0 {
                x.clone()
            } else {
                let mut v = x.clone();
                for _ in 0..row.d {
                    v = (row.s..v.len()).map(|i| v[i] - v[i - row.s]).collect();
                }
                v
            };
            let m = t.iter().sum::<f64>() / t.len() as f64;
            let sd = (t.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / (t.len() - 1) as f64)
                .sqrt();
            assert!((sd - row.sigma).abs() < 1e-12, "{row:?}");
        }
        let second = out.best_with_min_order(1).unwrap();
        assert!(second.d >= 1);
    }

    #[test]
    fn search_too_short() {
        assert!(matches!(
            diff_search(&[1.0, 2.0, 3.0], 2, 1),
            Err(Error::SampleSize { .. })
        ));
    }

    #[test]
    fn decision_logic() {
        let cv = CriticalValues::default();
        assert_eq!((cv.one, cv.five, cv.ten), (-3.46, -2.88, -2.57));
        assert_eq!(cv.reject_at(-0.89), None);
        assert_eq!(cv.reject_at(-2.9), Some(SignificanceLevel::FivePercent));
        assert_eq!(cv.reject_at(-4.0), Some(SignificanceLevel::OnePercent));
        assert_eq!(cv.reject_at(-2.6), Some(SignificanceLevel::TenPercent));
    }

    #[test]
    fn constant_series_is_singular() {
        assert!(matches!(
            adf_test(&[1.0; 30], 3, CriticalValues::default()),
            Err(Error::SingularRegression(_))
        ));
    }

    #[test]
    fn stationary_rejects_walk_does_not() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let noise: Vec<f64> = (0..400).map(|_| rng.sample(StandardNormal)).collect();
        let r = adf_test(&noise, 3, CriticalValues::default()).unwrap();
        assert!(r.rejects_at(SignificanceLevel::OnePercent));
        assert_eq!(r.chosen_lags, argmin_first(&r.aic_by_lag));
        assert_eq!(r.aic_by_lag.len(), 4);
    }

    proptest! {
        #[test]
        fn affine_invariance(seed in 0u64..500, a in -50.0f64..50.0, b in 0.1f64..20.0) {
            let x = walk(60, seed);
            let y: Vec<f64> = x.iter().map(|v| a + b * v).collect();
            let rx = adf_test(&x, 3, CriticalValues::default()).unwrap();
            let ry = adf_test(&y, 3, CriticalValues::default()).unwrap();
            prop_assert_eq!(rx.chosen_lags, ry.chosen_lags);
            prop_assert!((rx.statistic - ry.statistic).abs() < 1e-9);
        }
    }
}
