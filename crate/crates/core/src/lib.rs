//! Cointegration analysis toolkit.
//!
//! The crate covers the full pipeline from order-of-integration checks on
//! individual series to the Johansen reduced-rank estimate of a vector
//! error-correction model, the Gonzalo-Granger permanent-transitory
//! decomposition built on top of it, and likelihood-ratio tests on the
//! common-trends loading matrix.
//!
//! Matrices are [`nalgebra::DMatrix<f64>`]. Time-series blocks are stored with
//! one row per period and one column per variable.

pub mod error;
pub mod ggdecomp;
pub mod johansen;
pub mod linalg;
pub mod regress;
pub mod restrict;
pub mod rrr;
pub mod series;
pub mod unitroot;
pub mod var;

pub use error::{Error, Result};
pub use ggdecomp::{decompose, pt_loadings, PtDecomposition, PtLoadings};
pub use johansen::{fit_johansen, JohansenFit, MomentSet, TraceTable, TraceTest};
pub use restrict::{
    chi_square_quantile, chi_square_sf, exclusion_scan, test_alpha_perp, ExclusionScanRow,
    RestrictionTest,
};
pub use series::{Period, SeriesPanel};
pub use var::{VarModel, VecmModel};

/// Re-exported so downstream crates name the same matrix types.
pub use nalgebra::{DMatrix, DVector};
