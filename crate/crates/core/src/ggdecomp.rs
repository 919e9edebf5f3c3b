//! Gonzalo-Granger permanent-transitory decomposition
//! `X_t = A1·f_t + A2·z_t` with `f_t = α⊥′X_t` and `z_t = β′X_t`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::johansen::JohansenFit;
use crate::linalg::condition_number;
use crate::series::SeriesPanel;

/// Condition number above which `β′α` or `α⊥′β⊥` is treated as singular.
pub const MAX_CONDITION: f64 = 1e12;

#[derive(Debug, Clone, PartialEq)]
pub struct PtLoadings {
    /// `β⊥(α⊥′β⊥)⁻¹`, `p×(p−r)`.
    pub a1: DMatrix<f64>,
    /// `α(β′α)⁻¹`, `p×r`.
    pub a2: DMatrix<f64>,
}

fn checked_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let condition = condition_number(m);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::DegenerateGeometry {
            what: what.into(),
            condition,
        });
    }
    m.clone().try_inverse().ok_or(Error::DegenerateGeometry {
        what: what.into(),
        condition,
    })
}

pub fn pt_loadings(
    alpha: &DMatrix<f64>,
    beta: &DMatrix<f64>,
    alpha_perp: &DMatrix<f64>,
    beta_perp: &DMatrix<f64>,
) -> Result<PtLoadings> {
    let p = alpha.nrows();
    let r = alpha.ncols();
    if beta.shape() != (p, r) || alpha_perp.shape() != (p, p - r) || beta_perp.shape() != (p, p - r)
    {
        return Err(Error::InvalidInput(format!(
            "loading shapes disagree: alpha {:?}, beta {:?}, alpha_perp {:?}, beta_perp {:?}",
            alpha.shape(),
            beta.shape(),
            alpha_perp.shape(),
            beta_perp.shape()
        )));
    }
    if r == 0 || r == p {
        return Err(Error::NoDecomposition(format!(
            "rank {r} leaves no split of a {p}-dimensional system"
        )));
    }
    let a1 = beta_perp * checked_inverse(&(alpha_perp.transpose() * beta_perp), "alpha_perp' beta_perp")?;
    let a2 = alpha * checked_inverse(&(beta.transpose() * alpha), "beta' alpha")?;
    Ok(PtLoadings { a1, a2 })
}

impl PtLoadings {
    /// `A1·α⊥′`.
    pub fn permanent_projector(&self, alpha_perp: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a1 * alpha_perp.transpose()
    }

    /// `A2·β′`.
    pub fn transitory_projector(&self, beta: &DMatrix<f64>) -> DMatrix<f64> {
        &self.a2 * beta.transpose()
    }
}

/// Factor and component series; rows are periods.
#[derive(Debug, Clone)]
pub struct PtDecomposition {
    pub loadings: PtLoadings,
    /// `α⊥′` applied to each period, `T×(p−r)`.
    pub permanent_factors: DMatrix<f64>,
    /// `β′` applied to each period, `T×r`.
    pub transitory_factors: DMatrix<f64>,
    /// `A1·f_t`, `T×p`.
    pub permanent: DMatrix<f64>,
    /// `A2·z_t`, `T×p`.
    pub transitory: DMatrix<f64>,
}

impl PtDecomposition {
    /// Largest `|P_t + T_t − X_t|` over the sample.
    pub fn reconstruction_error(&self, panel: &SeriesPanel) -> f64 {
        (&self.permanent + &self.transitory - panel.values()).amax()
    }
}

pub fn decompose(panel: &SeriesPanel, fit: &JohansenFit) -> Result<PtDecomposition> {
    if fit.r == 0 {
        return Err(Error::NoDecomposition(
            "cointegrating rank is zero; the system has no transitory part".into(),
        ));
    }
    if panel.dim() != fit.p {
        return Err(Error::InvalidInput(format!(
            "panel has {} series but the fit has {}",
            panel.dim(),
            fit.p
        )));
    }
    let loadings = pt_loadings(&fit.alpha, &fit.beta, &fit.alpha_perp, &fit.beta_perp)?;
    let x = panel.values();
    let permanent_factors = x * &fit.alpha_perp;
    let transitory_factors = x * &fit.beta;
    let permanent = &permanent_factors * loadings.a1.transpose();
    let transitory = &transitory_factors * loadings.a2.transpose();
    Ok(PtDecomposition {
        loadings,
        permanent_factors,
        transitory_factors,
        permanent,
        transitory,
    })
}
