//! Dense real-matrix kernels shared by the estimators.
//!
//! Everything here is a pure function of its inputs. Eigenvector columns
//! follow one sign convention throughout the crate: each column is flipped so
//! that its largest-magnitude entry is positive.

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};

use crate::error::{Error, Result};

/// Relative cutoff below which a singular value counts as zero.
pub const RANK_TOL: f64 = 1e-10;

/// Relative asymmetry accepted by [`sym_eigen`] before symmetrizing.
pub const SYMMETRY_TOL: f64 = 1e-8;

/// Relative pivot below which a Cholesky factorization is declared singular.
const PIVOT_TOL: f64 = 1e-14;

/// Eigenvalues sorted non-increasing, with `vectors` column `i` paired to
/// `values[i]`.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenSystem {
    pub values: Vec<f64>,
    pub vectors: DMatrix<f64>,
}

impl EigenSystem {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// First `r` eigenvector columns.
    pub fn leading(&self, r: usize) -> DMatrix<f64> {
        self.vectors.columns(0, r).into_owned()
    }

    /// Last `k` eigenvector columns.
    pub fn trailing(&self, k: usize) -> DMatrix<f64> {
        let n = self.vectors.ncols();
        self.vectors.columns(n - k, k).into_owned()
    }
}

/// Singular value decomposition `S = V·diag(d)·U′` of an `m×n` matrix with
/// `m ≤ n`.
#[derive(Debug, Clone)]
pub struct Svd {
    /// `m×m` orthogonal.
    pub v: DMatrix<f64>,
    /// Singular values, non-negative and non-increasing.
    pub d: DVector<f64>,
    /// `n×m` with orthonormal columns.
    pub u: DMatrix<f64>,
}

impl Svd {
    pub fn reconstruct(&self) -> DMatrix<f64> {
        &self.v * DMatrix::from_diagonal(&self.d) * self.u.transpose()
    }
}

pub fn ensure_finite(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.iter().all(|x| x.is_finite()) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{what} has non-finite entries")))
    }
}

fn ensure_square(m: &DMatrix<f64>, what: &str) -> Result<()> {
    if m.is_square() {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!(
            "{what} must be square, got {}x{}",
            m.nrows(),
            m.ncols()
        )))
    }
}

pub fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

/// Flip each column so its largest-magnitude entry is positive. The first
/// index reaching the maximum (to round-off) decides.
pub fn normalize_signs(m: &mut DMatrix<f64>) {
    for mut col in m.column_iter_mut() {
        let peak = col.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        if peak == 0.0 {
            continue;
        }
        let lead = col
            .iter()
            .copied()
            .find(|x| x.abs() >= peak * (1.0 - 1e-12))
            .unwrap_or(0.0);
        if lead < 0.0 {
            col.neg_mut();
        }
    }
}

/// `(A + A′)/2`.
pub fn symmetrize(a: &DMatrix<f64>) -> DMatrix<f64> {
    (a + a.transpose()) * 0.5
}

/// Lower-triangular Cholesky factor `C` with `M = C·C′`.
pub fn cholesky(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    ensure_square(m, what)?;
    ensure_finite(m, what)?;
    let n = m.nrows();
    let scale = (0..n).fold(0.0_f64, |acc, i| acc.max(m[(i, i)].abs()));
    let mut c = DMatrix::<f64>::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)];
        for k in 0..j {
            d -= c[(j, k)] * c[(j, k)];
        }
        if !(d > PIVOT_TOL * scale) {
            return Err(Error::SingularMoment {
                what: what.to_string(),
                pivot: d,
            });
        }
        let djj = d.sqrt();
        c[(j, j)] = djj;
        for i in (j + 1)..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= c[(i, k)] * c[(j, k)];
            }
            c[(i, j)] = s / djj;
        }
    }
    Ok(c)
}

/// Inverse of a symmetric positive-definite matrix via its Cholesky factor.
pub fn spd_inverse(m: &DMatrix<f64>, what: &str) -> Result<DMatrix<f64>> {
    let c = cholesky(m, what)?;
    let n = m.nrows();
    let c_inv = c
        .solve_lower_triangular(&DMatrix::identity(n, n))
        .ok_or_else(|| Error::SingularMoment {
            what: what.to_string(),
            pivot: 0.0,
        })?;
    Ok(symmetrize(&(c_inv.transpose() * c_inv)))
}

/// `ln|M|` for symmetric positive-definite `M`.
pub fn ln_det_spd(m: &DMatrix<f64>, what: &str) -> Result<f64> {
    let c = cholesky(m, what)?;
    Ok(2.0 * c.diagonal().iter().map(|x| x.ln()).sum::<f64>())
}

/// Ratio of largest to smallest singular value; infinite when singular.
pub fn condition_number(m: &DMatrix<f64>) -> f64 {
    if m.is_empty() {
        return 1.0;
    }
    let sv = m.clone().svd(false, false).singular_values;
    let hi = sv.max();
    let lo = sv.min();
    if lo == 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

pub fn svd(s: &DMatrix<f64>) -> Result<Svd> {
    ensure_finite(s, "svd input")?;
    let (m, n) = s.shape();
    if m > n {
        return Err(Error::InvalidInput(format!(
            "svd expects rows <= cols, got {m}x{n}"
        )));
    }
    if m == 0 {
        return Ok(Svd {
            v: DMatrix::zeros(0, 0),
            d: DVector::zeros(0),
            u: DMatrix::zeros(n, 0),
        });
    }
    let raw = SVD::new(s.clone(), true, true);
    let left = raw.u.expect("requested u");
    let right = raw.v_t.expect("requested v_t").transpose();
    let sv = raw.singular_values;

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| sv[b].total_cmp(&sv[a]));

    let mut v = DMatrix::zeros(m, m);
    let mut u = DMatrix::zeros(n, m);
    let mut d = DVector::zeros(m);
    for (dst, &src) in order.iter().enumerate() {
        d[dst] = sv[src].max(0.0);
        let mut vc = left.column(src).into_owned();
        let mut uc = right.column(src).into_owned();
        let peak = vc.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()));
        let lead = vc
            .iter()
            .copied()
            .find(|x| x.abs() >= peak * (1.0 - 1e-12))
            .unwrap_or(0.0);
        if lead < 0.0 {
            vc.neg_mut();
            uc.neg_mut();
        }
        v.set_column(dst, &vc);
        u.set_column(dst, &uc);
    }
    Ok(Svd { v, d, u })
}

pub fn sym_eigen(a: &DMatrix<f64>) -> Result<EigenSystem> {
    ensure_square(a, "symmetric eigenproblem input")?;
    ensure_finite(a, "symmetric eigenproblem input")?;
    let scale = max_abs(a);
    let asym = max_abs(&(a - a.transpose()));
    if asym > SYMMETRY_TOL * scale {
        return Err(Error::InvalidInput(format!(
            "matrix is not symmetric (max asymmetry {asym:e})"
        )));
    }
    let n = a.nrows();
    if n == 0 {
        return Ok(EigenSystem {
            values: vec![],
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(symmetrize(a));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[j].total_cmp(&eig.eigenvalues[i]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = DMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    normalize_signs(&mut vectors);
    Ok(EigenSystem { values, vectors })
}

/// Solve `L·x = λ·M·x` for symmetric `L` and symmetric positive-definite `M`
/// by whitening with the Cholesky factor of `M`. The returned eigenvectors
/// are `M`-conjugate: `W′·M·W = I`.
pub fn gen_eigen(l: &DMatrix<f64>, m: &DMatrix<f64>) -> Result<EigenSystem> {
    ensure_square(l, "generalized eigenproblem left matrix")?;
    ensure_finite(l, "generalized eigenproblem left matrix")?;
    if l.shape() != m.shape() {
        return Err(Error::InvalidInput(format!(
            "generalized eigenproblem shape mismatch: {:?} vs {:?}",
            l.shape(),
            m.shape()
        )));
    }
    let c = cholesky(m, "generalized eigenproblem metric")?;
    let n = m.nrows();
    let singular = || Error::SingularMoment {
        what: "generalized eigenproblem metric".into(),
        pivot: 0.0,
    };
    let half = c.solve_lower_triangular(l).ok_or_else(singular)?;
    let whitened = c
        .solve_lower_triangular(&half.transpose())
        .ok_or_else(singular)?;
    let sys = sym_eigen(&symmetrize(&whitened))?;
    let mut vectors = c
        .transpose()
        .solve_upper_triangular(&sys.vectors)
        .ok_or_else(singular)?;
    normalize_signs(&mut vectors);

    let top = sys.values.first().copied().unwrap_or(0.0).abs().max(1.0);
    let values = sys
        .values
        .into_iter()
        .map(|v| if v < 0.0 && v > -1e-12 * top { 0.0 } else { v })
        .collect();
    debug_assert_eq!(vectors.ncols(), n);
    Ok(EigenSystem { values, vectors })
}

/// Symmetric `R` with `R·M·R = I`.
pub fn inv_sqrt(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let sys = sym_eigen(m)?;
    let top = sys.values.first().copied().unwrap_or(0.0);
    let low = sys.values.last().copied().unwrap_or(0.0);
    if !(low > PIVOT_TOL * top.abs()) {
        return Err(Error::SingularMoment {
            what: "matrix passed to inverse square root".into(),
            pivot: low,
        });
    }
    let scale = DVector::from_iterator(sys.len(), sys.values.iter().map(|v| 1.0 / v.sqrt()));
    let r = &sys.vectors * DMatrix::from_diagonal(&scale) * sys.vectors.transpose();
    Ok(symmetrize(&r))
}

/// Orthonormal basis `Q` (`p×(p−r)`) of the orthogonal complement of the
/// column space of a full-column-rank `p×r` matrix: `Q′·M = 0`, `Q′Q = I`.
pub fn perp(m: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    ensure_finite(m, "perp input")?;
    let (p, r) = m.shape();
    if r >= p {
        return Err(Error::InvalidInput(format!(
            "orthogonal complement needs fewer columns than rows, got {p}x{r}"
        )));
    }
    if r == 0 {
        return Ok(DMatrix::identity(p, p));
    }
    let thin = SVD::new(m.clone(), true, false);
    let sv = &thin.singular_values;
    let hi = sv.max();
    let lo = sv.min();
    if hi == 0.0 || lo < RANK_TOL * hi {
        return Err(Error::RankDeficient {
            what: "perp input".into(),
            ratio: if hi == 0.0 { 0.0 } else { lo / hi },
        });
    }
    let basis = thin.u.expect("requested u");
    let projector = DMatrix::identity(p, p) - &basis * basis.transpose();
    let sys = sym_eigen(&symmetrize(&projector))?;
    Ok(sys.leading(p - r))
}

/// Orthogonal projector onto the column space of `m`.
pub fn column_projector(m: &DMatrix<f64>) -> DMatrix<f64> {
    let p = m.nrows();
    if m.ncols() == 0 {
        return DMatrix::zeros(p, p);
    }
    let gram = m.transpose() * m;
    let inv = gram
        .clone()
        .pseudo_inverse(1e-12 * max_abs(&gram).max(f64::MIN_POSITIVE))
        .unwrap_or_else(|_| DMatrix::zeros(m.ncols(), m.ncols()));
    m * inv * m.transpose()
}
