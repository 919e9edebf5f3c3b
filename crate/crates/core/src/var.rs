//! Level VAR estimation, information criteria, lag selection, the VAR ↔
//! error-correction coefficient maps and a seeded simulator.
//!
//! The error-correction form used throughout is
//!
//! ```text
//! ∇X_t = Γ₀ + Γ·X_{t−1} + Γ₁·∇X_{t−1} + … + Γ_{k−1}·∇X_{t−k+1} + ε_t
//! Γ₀ = Π₀,   Γ = Π₁ + … + Π_k − I,   Γ_i = −(Π_{i+1} + … + Π_k)
//! ```

use nalgebra::{DMatrix, DVector, Schur};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::linalg::{ln_det_spd, sym_eigen};
use crate::regress::ols;
use crate::series::{build_var_block, Period, SeriesPanel};
use crate::unitroot::argmin_first;

/// `X_t = Π₀ + Π₁X_{t−1} + … + Π_kX_{t−k} + ε_t`.
#[derive(Debug, Clone, PartialEq)]
pub struct VarModel {
    pub intercept: DVector<f64>,
    /// `Π₁ … Π_k`.
    pub coeffs: Vec<DMatrix<f64>>,
    /// ML residual covariance (divisor `nobs`).
    pub resid_cov: DMatrix<f64>,
    /// Effective sample of the fit; zero for hand-built models.
    pub nobs: usize,
}

impl VarModel {
    /// Model with identity residual covariance and no sample attached.
    pub fn new(intercept: DVector<f64>, coeffs: Vec<DMatrix<f64>>) -> Result<Self> {
        let p = intercept.len();
        if coeffs.is_empty() {
            return Err(Error::InvalidInput("VAR needs at least one lag matrix".into()));
        }
        if coeffs.iter().any(|c| c.shape() != (p, p)) {
            return Err(Error::InvalidInput(format!("lag matrices must be {p}x{p}")));
        }
        Ok(VarModel {
            intercept,
            coeffs,
            resid_cov: DMatrix::identity(p, p),
            nobs: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.intercept.len()
    }

    pub fn order(&self) -> usize {
        self.coeffs.len()
    }

    /// `kp×kp` companion matrix of the lag polynomial.
    pub fn companion(&self) -> DMatrix<f64> {
        let p = self.dim();
        let k = self.order();
        let mut c = DMatrix::zeros(k * p, k * p);
        for (i, pi) in self.coeffs.iter().enumerate() {
            c.view_mut((0, i * p), (p, p)).copy_from(pi);
        }
        for i in 1..k {
            c.view_mut((i * p, (i - 1) * p), (p, p))
                .copy_from(&DMatrix::identity(p, p));
        }
        c
    }

    /// Largest modulus among the companion eigenvalues.
    pub fn spectral_radius(&self) -> f64 {
        let c = self.companion();
        match Schur::try_new(c.clone(), f64::EPSILON, 100 * c.nrows().max(10)) {
            Some(schur) => schur
                .complex_eigenvalues()
                .iter()
                .map(|z| z.norm())
                .fold(0.0, f64::max),
            None => gelfand_radius(c),
        }
    }
}

/// `lim ‖Cⁿ‖^{1/n}` by repeated squaring, for matrices on which the QR
/// iteration stalls.
fn gelfand_radius(mut m: DMatrix<f64>) -> f64 {
    const STEPS: i32 = 60;
    let mut log_norm = 0.0;
    for _ in 0..STEPS {
        let s = m.norm();
        if s == 0.0 {
            return 0.0;
        }
        m /= s;
        log_norm = 2.0 * (log_norm + s.ln());
        m = &m * &m;
    }
    let s = m.norm();
    if s == 0.0 {
        return 0.0;
    }
    ((log_norm + s.ln()) / 2f64.powi(STEPS)).exp()
}

/// Error-correction form; see the module docs for the sign convention.
#[derive(Debug, Clone, PartialEq)]
pub struct VecmModel {
    pub intercept: DVector<f64>,
    /// `Γ`.
    pub long_run: DMatrix<f64>,
    /// `Γ₁ … Γ_{k−1}`.
    pub short_run: Vec<DMatrix<f64>>,
    pub resid_cov: DMatrix<f64>,
    pub nobs: usize,
}

impl VecmModel {
    /// Build from `Γ = αβ′` with identity residual covariance.
    pub fn from_factors(
        intercept: DVector<f64>,
        alpha: &DMatrix<f64>,
        beta: &DMatrix<f64>,
        short_run: Vec<DMatrix<f64>>,
    ) -> Result<Self> {
        let p = intercept.len();
        if alpha.nrows() != p || beta.nrows() != p || alpha.ncols() != beta.ncols() {
            return Err(Error::InvalidInput(format!(
                "alpha {:?} and beta {:?} must both be {p}xr",
                alpha.shape(),
                beta.shape()
            )));
        }
        if short_run.iter().any(|g| g.shape() != (p, p)) {
            return Err(Error::InvalidInput(format!("short-run matrices must be {p}x{p}")));
        }
        Ok(VecmModel {
            intercept,
            long_run: alpha * beta.transpose(),
            short_run,
            resid_cov: DMatrix::identity(p, p),
            nobs: 0,
        })
    }

    pub fn dim(&self) -> usize {
        self.intercept.len()
    }

    pub fn order(&self) -> usize {
        self.short_run.len() + 1
    }
}

pub fn vecm_from_var(m: &VarModel) -> VecmModel {
    let p = m.dim();
    let k = m.order();
    let total = m
        .coeffs
        .iter()
        .fold(DMatrix::zeros(p, p), |acc, c| acc + c);
    let short_run = (1..k)
        .map(|i| {
            -m.coeffs[i..]
                .iter()
                .fold(DMatrix::zeros(p, p), |acc, c| acc + c)
        })
        .collect();
    VecmModel {
        intercept: m.intercept.clone(),
        long_run: total - DMatrix::identity(p, p),
        short_run,
        resid_cov: m.resid_cov.clone(),
        nobs: m.nobs,
    }
}

pub fn var_from_vecm(m: &VecmModel) -> VarModel {
    let p = m.dim();
    let k = m.order();
    let zero = DMatrix::zeros(p, p);
    let gamma = |i: usize| -> &DMatrix<f64> {
        if i == 0 || i >= k {
            &zero
        } else {
            &m.short_run[i - 1]
        }
    };
    let mut coeffs = Vec::with_capacity(k);
    coeffs.push(&m.long_run + DMatrix::identity(p, p) + gamma(1));
    for j in 2..=k {
        coeffs.push(gamma(j) - gamma(j - 1));
    }
    VarModel {
        intercept: m.intercept.clone(),
        coeffs,
        resid_cov: m.resid_cov.clone(),
        nobs: m.nobs,
    }
}

/// A fitted VAR with the OLS standard errors of each lag matrix.
#[derive(Debug, Clone)]
pub struct VarEstimate {
    pub model: VarModel,
    pub intercept_se: DVector<f64>,
    pub coeff_se: Vec<DMatrix<f64>>,
    /// `nobs×p`.
    pub residuals: DMatrix<f64>,
    /// `nobs×(1+pk)` regressor block `[1, X_{t−1}, …, X_{t−k}]`.
    pub regressors: DMatrix<f64>,
}

/// Equation-by-equation least squares over the sample that drops the first
/// `skip ≥ k` periods.
pub fn estimate_var(panel: &SeriesPanel, k: usize, skip: usize) -> Result<VarEstimate> {
    if k == 0 {
        return Err(Error::InvalidInput("VAR order must be at least 1".into()));
    }
    let p = panel.dim();
    let needed = skip.max(k) + p * k + 2;
    if panel.len() < needed {
        return Err(Error::SampleSize {
            what: format!("VAR({k}) in {p} variables"),
            needed,
            got: panel.len(),
        });
    }
    let block = build_var_block(panel, k, skip)?;
    let fit = ols(&block.y, &block.regressors).map_err(|e| match e {
        Error::SingularRegression(m) => Error::SingularRegression(format!("VAR({k}): {m}")),
        other => other,
    })?;
    let nobs = block.effective_sample();
    let q = block.regressors.ncols();
    let b = &fit.coefficients;
    let intercept = b.row(0).transpose();
    let coeffs = (0..k)
        .map(|lag| DMatrix::from_fn(p, p, |i, j| b[(1 + lag * p + j, i)]))
        .collect();
    let e = &fit.residuals;
    let resid_cov = (e.transpose() * e) / nobs as f64;

    let dof = (nobs - q) as f64;
    let s2: Vec<f64> = (0..p).map(|i| fit.rss(i) / dof).collect();
    let se = |row: usize, eq: usize| (s2[eq] * fit.xtx_inv[(row, row)]).sqrt();
    let intercept_se = DVector::from_fn(p, |i, _| se(0, i));
    let coeff_se = (0..k)
        .map(|lag| DMatrix::from_fn(p, p, |i, j| se(1 + lag * p + j, i)))
        .collect();
    Ok(VarEstimate {
        model: VarModel {
            intercept,
            coeffs,
            resid_cov,
            nobs,
        },
        intercept_se,
        coeff_se,
        residuals: fit.residuals,
        regressors: block.regressors,
    })
}

/// Least-squares VAR(k) on the sample `t = k..T−1`.
pub fn fit_var(panel: &SeriesPanel, k: usize) -> Result<VarModel> {
    Ok(estimate_var(panel, k, k)?.model)
}

fn free_parameters(m: &VarModel) -> f64 {
    let p = m.dim() as f64;
    p * p * m.order() as f64 + p
}

fn ln_det_resid(m: &VarModel) -> Result<f64> {
    ln_det_spd(&m.resid_cov, "residual covariance")
}

/// `nobs·ln|Σ̂| + 2·(p²k + p)`.
pub fn aic(m: &VarModel) -> Result<f64> {
    Ok(m.nobs as f64 * ln_det_resid(m)? + 2.0 * free_parameters(m))
}

/// `nobs·ln|Σ̂| + (p²k + p)·ln(nobs)`.
pub fn sbc(m: &VarModel) -> Result<f64> {
    Ok(m.nobs as f64 * ln_det_resid(m)? + free_parameters(m) * (m.nobs as f64).ln())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LagSelection {
    /// Candidate orders `1..=k_max`.
    pub orders: Vec<usize>,
    pub aic: Vec<f64>,
    pub sbc: Vec<f64>,
    /// Common effective sample, `T − k_max`.
    pub nobs: usize,
    pub chosen_k: usize,
}

/// Fit orders `1..=k_max` on the common sample that drops the first `k_max`
/// periods and pick the AIC minimizer (first on ties).
pub fn select_lag(panel: &SeriesPanel, k_max: usize) -> Result<LagSelection> {
    if k_max == 0 {
        return Err(Error::InvalidInput("k_max must be at least 1".into()));
    }
    let mut aics = Vec::with_capacity(k_max);
    let mut sbcs = Vec::with_capacity(k_max);
    let mut nobs = 0;
    for k in 1..=k_max {
        let model = estimate_var(panel, k, k_max)?.model;
        nobs = model.nobs;
        aics.push(aic(&model)?);
        sbcs.push(sbc(&model)?);
    }
    let chosen_k = argmin_first(&aics) + 1;
    Ok(LagSelection {
        orders: (1..=k_max).collect(),
        aic: aics,
        sbc: sbcs,
        nobs,
        chosen_k,
    })
}

#[derive(Debug, Clone)]
pub struct SimulationSettings {
    pub length: usize,
    pub burn_in: usize,
    pub seed: u64,
    /// Gaussian innovation covariance; positive semi-definite.
    pub noise_cov: DMatrix<f64>,
    pub start: Period,
    pub names: Option<Vec<String>>,
}

impl SimulationSettings {
    pub fn new(length: usize, seed: u64, noise_cov: DMatrix<f64>) -> Self {
        SimulationSettings {
            length,
            burn_in: 100,
            seed,
            noise_cov,
            start: Period { year: 2000, month: 1 },
            names: None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Simulation {
    pub panel: SeriesPanel,
    /// Companion spectral radius exceeds one.
    pub explosive: bool,
    pub spectral_radius: f64,
}

/// Square-root factor `F` with `F·F′ = cov` for a PSD covariance.
fn noise_factor(cov: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sys = sym_eigen(cov)?;
    let top = sys.values.first().copied().unwrap_or(0.0).abs();
    if let Some(&low) = sys.values.last() {
        if low < -1e-12 * top.max(1.0) {
            return Err(Error::InvalidInput(format!(
                "noise covariance is not positive semi-definite (eigenvalue {low:e})"
            )));
        }
    }
    let roots = DVector::from_iterator(sys.len(), sys.values.iter().map(|v| v.max(0.0).sqrt()));
    Ok(&sys.vectors * DMatrix::from_diagonal(&roots))
}

/// Run the VAR recursion from a zero presample, discard `burn_in` periods
/// and return the next `length`.
pub fn simulate_var(model: &VarModel, settings: &SimulationSettings) -> Result<Simulation> {
    let p = model.dim();
    let k = model.order();
    if settings.noise_cov.shape() != (p, p) {
        return Err(Error::InvalidInput(format!("noise covariance must be {p}x{p}")));
    }
    if settings.length == 0 {
        return Err(Error::InvalidInput("simulation length must be positive".into()));
    }
    let factor = noise_factor(&settings.noise_cov)?;
    let mut rng = ChaCha8Rng::seed_from_u64(settings.seed);
    let total = k + settings.burn_in + settings.length;
    let mut x = DMatrix::<f64>::zeros(total, p);
    let mut z = DVector::<f64>::zeros(p);
    for t in k..total {
        for zi in z.iter_mut() {
            *zi = rng.sample(StandardNormal);
        }
        let mut next = &model.intercept + &factor * &z;
        for (lag, pi) in model.coeffs.iter().enumerate() {
            next += pi * x.row(t - lag - 1).transpose();
        }
        x.set_row(t, &next.transpose());
    }
    let values = x.rows(total - settings.length, settings.length).into_owned();
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::NumericalInconsistency(
            "simulated path overflowed; dynamics are explosive".into(),
        ));
    }
    let names = settings
        .names
        .clone()
        .unwrap_or_else(|| (1..=p).map(|i| format!("x{i}")).collect());
    let periods = (0..settings.length as i64)
        .map(|i| settings.start.offset(i))
        .collect();
    let spectral_radius = model.spectral_radius();
    Ok(Simulation {
        panel: SeriesPanel::new(names, periods, values)?,
        explosive: spectral_radius > 1.0 + 1e-8,
        spectral_radius,
    })
}
