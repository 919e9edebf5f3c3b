//! Monthly multivariate time series and the structural transforms the
//! estimators consume.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// A calendar month.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Period {
    pub year: i32,
    /// 1..=12
    pub month: u8,
}

impl Period {
    pub fn new(year: i32, month: u8) -> Result<Self> {
        if !(1..=12).contains(&month) {
            return Err(Error::InvalidInput(format!("month {month} out of range")));
        }
        Ok(Period { year, month })
    }

    pub fn next(self) -> Self {
        self.offset(1)
    }

    pub fn offset(self, months: i64) -> Self {
        let index = self.index() + months;
        Period {
            year: index.div_euclid(12) as i32,
            month: (index.rem_euclid(12) + 1) as u8,
        }
    }

    fn index(self) -> i64 {
        self.year as i64 * 12 + (self.month as i64 - 1)
    }
}

impl fmt::Display for Period {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:04}-{:02}", self.year, self.month)
    }
}

impl FromStr for Period {
    type Err = Error;

    /// Parses ISO `YYYY-MM`.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::InvalidInput(format!("invalid period {s:?}, expected YYYY-MM"));
        let (y, m) = s.trim().split_once('-').ok_or_else(bad)?;
        if y.len() != 4 || m.len() != 2 || !y.bytes().chain(m.bytes()).all(|b| b.is_ascii_digit())
        {
            return Err(bad());
        }
        let year = y.parse().map_err(|_| bad())?;
        let month = m.parse().map_err(|_| bad())?;
        Period::new(year, month).map_err(|_| bad())
    }
}

/// `T×p` labelled monthly panel, one row per period.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesPanel {
    names: Vec<String>,
    periods: Vec<Period>,
    values: DMatrix<f64>,
}

impl SeriesPanel {
    pub fn new(names: Vec<String>, periods: Vec<Period>, values: DMatrix<f64>) -> Result<Self> {
        if periods.is_empty() {
            return Err(Error::InvalidInput("panel needs at least one period".into()));
        }
        if names.is_empty() {
            return Err(Error::InvalidInput("panel needs at least one series".into()));
        }
        if values.shape() != (periods.len(), names.len()) {
            return Err(Error::InvalidInput(format!(
                "values are {}x{} but panel has {} periods and {} names",
                values.nrows(),
                values.ncols(),
                periods.len(),
                names.len()
            )));
        }
        let mut seen = HashSet::new();
        for name in &names {
            if !seen.insert(name.as_str()) {
                return Err(Error::InvalidInput(format!("duplicate series name {name:?}")));
            }
        }
        for w in periods.windows(2) {
            if w[1] != w[0].next() {
                return Err(Error::InvalidInput(format!(
                    "periods not contiguous: {} followed by {} (expected {})",
                    w[0],
                    w[1],
                    w[0].next()
                )));
            }
        }
        if let Some((i, _)) = values.iter().enumerate().find(|(_, v)| !v.is_finite()) {
            let (row, col) = (i % values.nrows(), i / values.nrows());
            return Err(Error::InvalidInput(format!(
                "missing or non-finite value for {} at {}",
                names[col], periods[row]
            )));
        }
        Ok(SeriesPanel {
            names,
            periods,
            values,
        })
    }

    /// Panel starting at `start` with default names `x1..xp`.
    pub fn from_matrix(start: Period, values: DMatrix<f64>) -> Result<Self> {
        let names = (1..=values.ncols()).map(|i| format!("x{i}")).collect();
        let periods = (0..values.nrows() as i64).map(|i| start.offset(i)).collect();
        SeriesPanel::new(names, periods, values)
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn periods(&self) -> &[Period] {
        &self.periods
    }

    pub fn values(&self) -> &DMatrix<f64> {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.names.len()
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.values.column(j).iter().copied().collect()
    }

    pub fn position(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }

    /// Keep only the named columns, in the given order.
    pub fn select(&self, names: &[&str]) -> Result<SeriesPanel> {
        let idx = names
            .iter()
            .map(|n| {
                self.position(n)
                    .ok_or_else(|| Error::InvalidInput(format!("unknown series {n:?}")))
            })
            .collect::<Result<Vec<_>>>()?;
        let values = self.values.select_columns(&idx);
        SeriesPanel::new(
            names.iter().map(|s| s.to_string()).collect(),
            self.periods.clone(),
            values,
        )
    }

    /// Linear transform of the cross-section: row `t` becomes `X_t·M′`.
    pub fn map_rows(&self, m: &DMatrix<f64>, names: Vec<String>) -> Result<SeriesPanel> {
        SeriesPanel::new(names, self.periods.clone(), &self.values * m.transpose())
    }
}

/// Apply `d` passes of `x_t − x_{t−s}` to a single series.
pub fn diff_series(x: &[f64], s: usize, d: usize) -> Result<Vec<f64>> {
    if s == 0 && d > 0 {
        return Err(Error::InvalidInput("difference lag must be at least 1".into()));
    }
    let needed = s * d + 1;
    if x.len() < needed {
        return Err(Error::SampleSize {
            what: format!("lag-{s} difference of order {d}"),
            needed,
            got: x.len(),
        });
    }
    let mut out = x.to_vec();
    for _ in 0..d {
        out = out.windows(s + 1).map(|w| w[s] - w[0]).collect();
    }
    Ok(out)
}

/// Columnwise `diff_series`; the first `s·d` periods are dropped.
pub fn diff(panel: &SeriesPanel, s: usize, d: usize) -> Result<SeriesPanel> {
    let cols = (0..panel.dim())
        .map(|j| diff_series(&panel.column(j), s, d))
        .collect::<Result<Vec<_>>>()?;
    let t = cols[0].len();
    let values = DMatrix::from_fn(t, panel.dim(), |i, j| cols[j][i]);
    SeriesPanel::new(
        panel.names.clone(),
        panel.periods[s * d..].to_vec(),
        values,
    )
}

/// Subtract column means.
pub fn center(block: &DMatrix<f64>) -> DMatrix<f64> {
    let mut out = block.clone();
    let n = block.nrows();
    if n == 0 {
        return out;
    }
    for mut col in out.column_iter_mut() {
        let mean = col.sum() / n as f64;
        col.add_scalar_mut(-mean);
    }
    out
}

/// Regression blocks of the error-correction form, row-aligned over the
/// effective sample `t = k..T−1` (zero-based).
#[derive(Debug, Clone, PartialEq)]
pub struct VecmBlocks {
    /// `∇X_t`.
    pub y: DMatrix<f64>,
    /// `X_{t−1}`.
    pub lagged_levels: DMatrix<f64>,
    /// `[∇X_{t−1}, …, ∇X_{t−k+1}]`, `p·(k−1)` columns.
    pub lagged_diffs: DMatrix<f64>,
}

impl VecmBlocks {
    pub fn effective_sample(&self) -> usize {
        self.y.nrows()
    }
}

pub fn build_vecm_blocks(panel: &SeriesPanel, k: usize) -> Result<VecmBlocks> {
    if k == 0 {
        return Err(Error::InvalidInput("VAR order must be at least 1".into()));
    }
    let t = panel.len();
    if t < k + 2 {
        return Err(Error::SampleSize {
            what: format!("error-correction blocks for order {k}"),
            needed: k + 2,
            got: t,
        });
    }
    let x = panel.values();
    let p = panel.dim();
    let n = t - k;
    let y = DMatrix::from_fn(n, p, |i, j| x[(i + k, j)] - x[(i + k - 1, j)]);
    let lagged_levels = DMatrix::from_fn(n, p, |i, j| x[(i + k - 1, j)]);
    let lagged_diffs = DMatrix::from_fn(n, p * (k - 1), |i, c| {
        let lag = c / p + 1;
        let j = c % p;
        let row = i + k - lag;
        x[(row, j)] - x[(row - 1, j)]
    });
    Ok(VecmBlocks {
        y,
        lagged_levels,
        lagged_diffs,
    })
}

/// Level-VAR regression block over an effective sample that skips the first
/// `skip ≥ k` periods.
#[derive(Debug, Clone, PartialEq)]
pub struct LagBlock {
    /// `X_t`.
    pub y: DMatrix<f64>,
    /// `[1, X_{t−1}, …, X_{t−k}]`.
    pub regressors: DMatrix<f64>,
}

impl LagBlock {
    pub fn effective_sample(&self) -> usize {
        self.y.nrows()
    }
}

pub fn build_var_block(panel: &SeriesPanel, k: usize, skip: usize) -> Result<LagBlock> {
    if skip < k {
        return Err(Error::InvalidInput(format!(
            "cannot skip {skip} periods with {k} lags"
        )));
    }
    let t = panel.len();
    if t <= skip {
        return Err(Error::SampleSize {
            what: format!("VAR block with {skip} presample periods"),
            needed: skip + 1,
            got: t,
        });
    }
    let x = panel.values();
    let p = panel.dim();
    let n = t - skip;
    let y = DMatrix::from_fn(n, p, |i, j| x[(i + skip, j)]);
    let regressors = DMatrix::from_fn(n, 1 + p * k, |i, c| {
        if c == 0 {
            1.0
        } else {
            let lag = (c - 1) / p + 1;
            x[(i + skip - lag, (c - 1) % p)]
        }
    });
    Ok(LagBlock { y, regressors })
}
