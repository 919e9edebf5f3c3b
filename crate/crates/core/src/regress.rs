//! Multivariate least squares shared by the VAR, ADF and concentration steps.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

/// Relative size of an `R` diagonal entry below which a regressor is treated
/// as collinear with the ones before it.
const COLLINEAR_TOL: f64 = 1e-10;

/// Least-squares fit of every column of `y` on the columns of `x`.
#[derive(Debug, Clone)]
pub struct OlsFit {
    /// `q×m`: column `j` holds the coefficients of response `j`.
    pub coefficients: DMatrix<f64>,
    pub residuals: DMatrix<f64>,
    /// `(X′X)⁻¹`.
    pub xtx_inv: DMatrix<f64>,
}

impl OlsFit {
    pub fn nobs(&self) -> usize {
        self.residuals.nrows()
    }

    pub fn rss(&self, column: usize) -> f64 {
        self.residuals.column(column).norm_squared()
    }
}

/// Solve `min ‖Y − X·B‖` with a Householder QR of `X`.
pub fn ols(y: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<OlsFit> {
    let (n, q) = x.shape();
    if y.nrows() != n {
        return Err(Error::InvalidInput(format!(
            "response has {} rows but regressors have {n}",
            y.nrows()
        )));
    }
    if q == 0 {
        return Ok(OlsFit {
            coefficients: DMatrix::zeros(0, y.ncols()),
            residuals: y.clone(),
            xtx_inv: DMatrix::zeros(0, 0),
        });
    }
    if n < q {
        return Err(Error::SingularRegression(format!(
            "{q} regressors but only {n} observations"
        )));
    }
    let qr = x.clone().qr();
    let r = qr.r();
    let scale = (0..q).fold(0.0_f64, |acc, i| acc.max(r[(i, i)].abs()));
    for i in 0..q {
        if !(r[(i, i)].abs() > COLLINEAR_TOL * scale) {
            return Err(Error::SingularRegression(format!(
                "regressor {i} is collinear with earlier regressors"
            )));
        }
    }
    let qty = qr.q().transpose() * y;
    let coefficients = r
        .solve_upper_triangular(&qty)
        .ok_or_else(|| Error::SingularRegression("triangular solve failed".into()))?;
    let r_inv = r
        .solve_upper_triangular(&DMatrix::identity(q, q))
        .ok_or_else(|| Error::SingularRegression("triangular solve failed".into()))?;
    let xtx_inv = &r_inv * r_inv.transpose();
    let residuals = y - x * &coefficients;
    Ok(OlsFit {
        coefficients,
        residuals,
        xtx_inv,
    })
}

/// Prepend a column of ones.
pub fn with_intercept(x: &DMatrix<f64>) -> DMatrix<f64> {
    x.clone().insert_column(0, 1.0)
}
