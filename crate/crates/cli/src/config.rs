//! Flat `key = value` description of a system for `simulate`. The format is
//! documented in `docs/simulate-config.md`.

use std::collections::BTreeMap;

use coint_core::var::{var_from_vecm, SimulationSettings};
use coint_core::{DMatrix, DVector, Period, VarModel, VecmModel};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}: {message}")]
pub struct ConfigError {
    pub line: usize,
    pub message: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelForm {
    Vecm,
    Var,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimSpec {
    pub form: ModelForm,
    pub dim: usize,
    /// Cointegrating rank; only for the error-correction form.
    pub rank: Option<usize>,
    pub intercept: DVector<f64>,
    pub alpha: Option<DMatrix<f64>>,
    pub beta: Option<DMatrix<f64>>,
    /// `Γ_i` for the error-correction form, `Π_i` for the level form.
    pub lag_matrices: Vec<DMatrix<f64>>,
    pub noise_scale: f64,
    pub length: usize,
    pub burn_in: usize,
    pub names: Option<Vec<String>>,
    pub start: Period,
}

struct Entry {
    line: usize,
    value: String,
}

pub const MAX_DIM: usize = 100;
/// Upper bound on `length + burn_in`.
pub const MAX_PERIODS: usize = 1_000_000;

const KEYS: &[&str] = &[
    "model",
    "dim",
    "rank",
    "intercept",
    "alpha",
    "beta",
    "noise_scale",
    "length",
    "burn_in",
    "names",
    "start",
];

fn lag_key(key: &str) -> Option<(&'static str, usize)> {
    for prefix in ["gamma", "pi"] {
        if let Some(rest) = key.strip_prefix(prefix) {
            if let Ok(i) = rest.parse::<usize>() {
                if i >= 1 && !rest.starts_with('0') {
                    return Some((prefix, i));
                }
            }
        }
    }
    None
}

fn err(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError {
        line,
        message: message.into(),
    }
}

/// `a, b; c, d` → rows `[a b]`, `[c d]`.
fn parse_matrix(entry: &Entry, key: &str) -> Result<DMatrix<f64>, ConfigError> {
    let rows: Vec<Vec<f64>> = entry
        .value
        .split(';')
        .map(|row| {
            row.split(',')
                .map(|cell| {
                    let cell = cell.trim();
                    cell.parse::<f64>()
                        .ok()
                        .filter(|v| v.is_finite())
                        .ok_or_else(|| err(entry.line, format!("{key}: {cell:?} is not a finite number")))
                })
                .collect()
        })
        .collect::<Result<_, _>>()?;
    let ncols = rows[0].len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(err(entry.line, format!("{key}: rows have different lengths")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Ok(DMatrix::from_row_slice(rows.len(), ncols, &flat))
}

fn expect_shape(
    m: &DMatrix<f64>,
    shape: (usize, usize),
    entry: &Entry,
    key: &str,
) -> Result<(), ConfigError> {
    if m.shape() != shape {
        return Err(err(
            entry.line,
            format!(
                "{key} must be {}x{}, found {}x{}",
                shape.0,
                shape.1,
                m.nrows(),
                m.ncols()
            ),
        ));
    }
    Ok(())
}

fn parse_count(entry: &Entry, key: &str) -> Result<usize, ConfigError> {
    entry
        .value
        .parse()
        .map_err(|_| err(entry.line, format!("{key}: {:?} is not a non-negative integer", entry.value)))
}

impl SimSpec {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut entries: BTreeMap<String, Entry> = BTreeMap::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content
                .split_once('=')
                .ok_or_else(|| err(line, "expected key = value"))?;
            let key = key.trim().to_ascii_lowercase();
            let value = value.trim().to_string();
            if !KEYS.contains(&key.as_str()) && lag_key(&key).is_none() {
                return Err(err(line, format!("unknown key {key:?}")));
            }
            if value.is_empty() {
                return Err(err(line, format!("{key} has no value")));
            }
            if entries.contains_key(&key) {
                return Err(err(line, format!("duplicate key {key:?}")));
            }
            entries.insert(key, Entry { line, value });
        }
        let last_line = text.lines().count().max(1);

        let form = match entries.get("model").map(|e| (e.line, e.value.to_ascii_lowercase())) {
            None => ModelForm::Vecm,
            Some((_, v)) if v == "vecm" => ModelForm::Vecm,
            Some((_, v)) if v == "var" => ModelForm::Var,
            Some((line, v)) => return Err(err(line, format!("model must be vecm or var, got {v:?}"))),
        };
        let dim_entry = entries
            .get("dim")
            .ok_or_else(|| err(last_line, "missing required key dim"))?;
        let dim = parse_count(dim_entry, "dim")?;
        if dim == 0 || dim > MAX_DIM {
            return Err(err(dim_entry.line, format!("dim must be between 1 and {MAX_DIM}")));
        }

        let intercept = match entries.get("intercept") {
            Some(e) => {
                let m = parse_matrix(e, "intercept")?;
                if m.len() != dim {
                    return Err(err(e.line, format!("intercept needs {dim} values, found {}", m.len())));
                }
                DVector::from_iterator(dim, m.iter().copied())
            }
            None => DVector::zeros(dim),
        };

        let (wanted, other) = match form {
            ModelForm::Vecm => ("gamma", "pi"),
            ModelForm::Var => ("pi", "gamma"),
        };
        let mut lags: BTreeMap<usize, DMatrix<f64>> = BTreeMap::new();
        for (key, entry) in &entries {
            if let Some((prefix, i)) = lag_key(key) {
                if prefix == other {
                    return Err(err(
                        entry.line,
                        format!("{key} does not belong to a {wanted}-parameterized model"),
                    ));
                }
                let m = parse_matrix(entry, key)?;
                expect_shape(&m, (dim, dim), entry, key)?;
                lags.insert(i, m);
            }
        }
        if let Some((gap, _)) = lags.keys().enumerate().find(|(pos, i)| **i != pos + 1) {
            return Err(err(
                last_line,
                format!("{wanted}{} is missing; lag matrices must be numbered from 1 without gaps", gap + 1),
            ));
        }
        let lag_matrices: Vec<DMatrix<f64>> = lags.into_values().collect();

        let (rank, alpha, beta) = match form {
            ModelForm::Var => {
                for key in ["rank", "alpha", "beta"] {
                    if let Some(e) = entries.get(key) {
                        return Err(err(e.line, format!("{key} only applies to model = vecm")));
                    }
                }
                if lag_matrices.is_empty() {
                    return Err(err(last_line, "model = var needs at least pi1"));
                }
                (None, None, None)
            }
            ModelForm::Vecm => {
                let rank_entry = entries
                    .get("rank")
                    .ok_or_else(|| err(last_line, "missing required key rank"))?;
                let rank = parse_count(rank_entry, "rank")?;
                if rank >= dim {
                    return Err(err(rank_entry.line, format!("rank must be below dim = {dim}")));
                }
                let factor = |key: &str| -> Result<DMatrix<f64>, ConfigError> {
                    match entries.get(key) {
                        Some(e) if rank > 0 => {
                            let m = parse_matrix(e, key)?;
                            expect_shape(&m, (dim, rank), e, key)?;
                            Ok(m)
                        }
                        Some(e) => Err(err(e.line, format!("{key} given but rank is 0"))),
                        None if rank == 0 => Ok(DMatrix::zeros(dim, 0)),
                        None => Err(err(last_line, format!("missing required key {key}"))),
                    }
                };
                let alpha = factor("alpha")?;
                let beta = factor("beta")?;
                (Some(rank), Some(alpha), Some(beta))
            }
        };

        let noise_scale = match entries.get("noise_scale") {
            Some(e) => e
                .value
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite() && *v >= 0.0)
                .ok_or_else(|| err(e.line, "noise_scale must be a non-negative number"))?,
            None => 1.0,
        };
        let length = match entries.get("length") {
            Some(e) => {
                let n = parse_count(e, "length")?;
                if n == 0 {
                    return Err(err(e.line, "length must be positive"));
                }
                n
            }
            None => return Err(err(last_line, "missing required key length")),
        };
        let burn_in = match entries.get("burn_in") {
            Some(e) => parse_count(e, "burn_in")?,
            None => 100,
        };
        if length.saturating_add(burn_in) > MAX_PERIODS {
            let line = entries.get("burn_in").or(entries.get("length")).map_or(last_line, |e| e.line);
            return Err(err(line, format!("length + burn_in must not exceed {MAX_PERIODS}")));
        }
        let names = match entries.get("names") {
            Some(e) => {
                let names: Vec<String> = e.value.split(',').map(|s| s.trim().to_string()).collect();
                if names.len() != dim || names.iter().any(String::is_empty) {
                    return Err(err(e.line, format!("names needs {dim} non-empty entries")));
                }
                Some(names)
            }
            None => None,
        };
        let start = match entries.get("start") {
            Some(e) => e
                .value
                .parse()
                .map_err(|_| err(e.line, format!("start {:?} is not YYYY-MM", e.value)))?,
            None => Period { year: 2000, month: 1 },
        };

        Ok(SimSpec {
            form,
            dim,
            rank,
            intercept,
            alpha,
            beta,
            lag_matrices,
            noise_scale,
            length,
            burn_in,
            names,
            start,
        })
    }

    pub fn var_model(&self) -> coint_core::Result<VarModel> {
        match self.form {
            ModelForm::Var => VarModel::new(self.intercept.clone(), self.lag_matrices.clone()),
            ModelForm::Vecm => {
                let vecm = VecmModel::from_factors(
                    self.intercept.clone(),
                    self.alpha.as_ref().expect("vecm has alpha"),
                    self.beta.as_ref().expect("vecm has beta"),
                    self.lag_matrices.clone(),
                )?;
                Ok(var_from_vecm(&vecm))
            }
        }
    }

    pub fn settings(&self, seed: u64) -> SimulationSettings {
        let mut s = SimulationSettings::new(
            self.length,
            seed,
            DMatrix::identity(self.dim, self.dim) * self.noise_scale.powi(2),
        );
        s.burn_in = self.burn_in;
        s.start = self.start;
        s.names = self.names.clone();
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const RANK_ONE: &str = "\
# three rates, one relation
dim = 3
rank = 1
alpha = -0.2; 0.1; 0.05
beta = 1; -1; 0.5
intercept = 0.01, 0.02, 0
gamma1 = 0.2, 0, 0; 0, 0.1, 0; 0, 0, 0
noise_scale = 0.5
length = 144
names = a, b, c
start = 2002-01
";

    #[test]
    fn parses_vecm() {
        let s = SimSpec::parse(RANK_ONE).unwrap();
        assert_eq!(s.form, ModelForm::Vecm);
        assert_eq!(s.alpha.as_ref().unwrap().shape(), (3, 1));
        assert_eq!(s.lag_matrices.len(), 1);
        assert_eq!(s.burn_in, 100);
        let var = s.var_model().unwrap();
        assert_eq!(var.order(), 2);
        let settings = s.settings(7);
        assert_eq!(settings.noise_cov[(0, 0)], 0.25);
        assert_eq!(settings.start.to_string(), "2002-01");
    }

    #[test]
    fn parses_var() {
        let s = SimSpec::parse("model = var\ndim = 2\npi1 = 0.5, 0; 0, 0.5\nlength = 10\n").unwrap();
        assert_eq!(s.var_model().unwrap().order(), 1);
    }

    #[test]
    fn rank_zero_needs_no_factors() {
        let s = SimSpec::parse("dim = 2\nrank = 0\nlength = 5\n").unwrap();
        assert_eq!(s.var_model().unwrap().coeffs[0], DMatrix::identity(2, 2));
    }

    #[test]
    fn errors_cite_lines() {
        let e = SimSpec::parse("dim = 2\nrank = 1\nalpha = 1; x\n").unwrap_err();
        assert_eq!(e.line, 3);
        let e = SimSpec::parse("dim = 2\nfoo = 1\n").unwrap_err();
        assert_eq!(e.line, 2);
        let e = SimSpec::parse("dim = 2\ndim = 3\n").unwrap_err();
        assert!(e.message.contains("duplicate"));
        assert!(SimSpec::parse("dim = 2\nrank = 2\nlength = 3\n").is_err());
        assert!(SimSpec::parse("dim = 2\nrank = 0\nlength = 3\ngamma2 = 1,0;0,1\n").is_err());
        assert!(SimSpec::parse("model = var\ndim = 1\npi1 = 1\nrank = 0\nlength = 3\n").is_err());
        assert!(SimSpec::parse("dim = 2\nrank = 1\nalpha = 1, 2\nbeta = 1; 2\nlength = 3\n").is_err());
        assert!(SimSpec::parse("dim = 1\nrank = 0\nlength = 3\ngamma01 = 1\n").is_err());
    }

    #[test]
    fn sizes_are_bounded() {
        let e = SimSpec::parse("dim = 1000000000\nrank = 0\nlength = 3\n").unwrap_err();
        assert_eq!(e.line, 1);
        let e = SimSpec::parse("dim = 1\nrank = 0\nlength = 999999\nburn_in = 2\n").unwrap_err();
        assert_eq!(e.line, 4);
        assert!(SimSpec::parse("dim = 1\nrank = 0\nlength = 999900\n").is_ok());
    }
}
