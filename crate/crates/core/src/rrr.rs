//! Reduced-rank regression: the best rank-`r` approximation of a matrix and
//! the weighted least-squares / maximum-likelihood rank-`r` coefficient
//! estimators `C = A·B`.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{cholesky, inv_sqrt, spd_inverse, svd, sym_eigen, symmetrize};
use crate::regress::ols;

/// Relative gap below which `λ_r` and `λ_{r+1}` count as tied.
const TIE_TOL: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct LowRankApprox {
    pub approx: DMatrix<f64>,
    /// `‖S − P‖²_F = Σ_{i>r} σ_i²`.
    pub error: f64,
    pub singular_values: Vec<f64>,
}

/// Truncated-SVD reconstruction of `s` at rank `r`.
pub fn low_rank_approx(s: &DMatrix<f64>, r: usize) -> Result<LowRankApprox> {
    let (m, n) = s.shape();
    let limit = m.min(n);
    if r > limit {
        return Err(Error::InvalidRank {
            rank: r,
            dim: limit,
            reason: "rank exceeds the smaller matrix dimension".into(),
        });
    }
    let wide = m <= n;
    let f = if wide { svd(s)? } else { svd(&s.transpose())? };
    let vr = f.v.columns(0, r);
    let ur = f.u.columns(0, r);
    let dr = DMatrix::from_diagonal(&f.d.rows(0, r).into_owned());
    let p = vr * dr * ur.transpose();
    let approx = if wide { p } else { p.transpose() };
    let error = f.d.iter().skip(r).map(|d| d * d).sum();
    Ok(LowRankApprox {
        approx,
        error,
        singular_values: f.d.iter().copied().collect(),
    })
}

#[derive(Debug, Clone)]
pub struct RrrEstimate {
    /// `m×r`.
    pub a: DMatrix<f64>,
    /// `r×n`.
    pub b: DMatrix<f64>,
    pub rank: usize,
    /// `tr(Γ·Σyy) − Σ_{i≤r} λ_i²`, when `Σyy` was supplied.
    pub criterion: Option<f64>,
    /// All `n` eigenvalues `λ_i²` of `Σxx^{−1/2}·Σxy·Γ·Σyx·Σxx^{−1/2}`.
    pub eigenvalues: Vec<f64>,
    /// `λ_r ≈ λ_{r+1}`: the rank-`r` subspace is not unique, so only `A·B`
    /// is meaningful, and even that is solver-dependent.
    pub tied: bool,
}

impl RrrEstimate {
    pub fn product(&self) -> DMatrix<f64> {
        &self.a * &self.b
    }
}

/// Weighted least-squares reduced-rank estimator from population or sample
/// moments: minimizes `tr(Γ^{1/2}·E[(Y − ABX)(Y − ABX)′]·Γ^{1/2})`.
///
/// `A = Σyx·Σxx^{−1/2}·U_(r)` and `B = U′_(r)·Σxx^{−1/2}`, where `U_(r)` holds
/// the leading eigenvectors of `Σxx^{−1/2}·Σxy·Γ·Σyx·Σxx^{−1/2}`.
pub fn rrr_ls(
    syx: &DMatrix<f64>,
    sxx: &DMatrix<f64>,
    gamma: &DMatrix<f64>,
    r: usize,
    syy: Option<&DMatrix<f64>>,
) -> Result<RrrEstimate> {
    let (m, n) = syx.shape();
    if sxx.shape() != (n, n) || gamma.shape() != (m, m) {
        return Err(Error::InvalidInput(format!(
            "moment shapes disagree: Syx {m}x{n}, Sxx {:?}, weight {:?}",
            sxx.shape(),
            gamma.shape()
        )));
    }
    if let Some(syy) = syy {
        if syy.shape() != (m, m) {
            return Err(Error::InvalidInput(format!("Syy must be {m}x{m}")));
        }
    }
    if r > m.min(n) {
        return Err(Error::InvalidRank {
            rank: r,
            dim: m.min(n),
            reason: "rank exceeds min(m, n)".into(),
        });
    }
    cholesky(gamma, "regression weight")?;
    let sxx_is = inv_sqrt(sxx)?;
    let left = syx * &sxx_is;
    let h = symmetrize(&(left.transpose() * gamma * &left));
    let sys = sym_eigen(&h)?;
    let top = sys.values.first().copied().unwrap_or(0.0).abs().max(1.0);
    let eigenvalues: Vec<f64> = sys
        .values
        .iter()
        .map(|&v| if v < 0.0 && v > -1e-12 * top { 0.0 } else { v })
        .collect();
    let ur = sys.leading(r);
    let a = &left * &ur;
    let b = ur.transpose() * &sxx_is;
    let criterion = syy.map(|syy| {
        (gamma * syy).trace() - eigenvalues.iter().take(r).sum::<f64>()
    });
    let tied = r > 0
        && r < n
        && (eigenvalues[r - 1] - eigenvalues[r]).abs() <= TIE_TOL * top;
    Ok(RrrEstimate {
        a,
        b,
        rank: r,
        criterion,
        eigenvalues,
        tied,
    })
}

/// Weight used by the maximum-likelihood estimator. Both give the same `A·B`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MlWeight {
    /// `Σ̃εε⁻¹`, inverse residual covariance of the full-rank fit.
    ResidualCovariance,
    /// `Σ̂yy⁻¹`.
    ResponseCovariance,
}

#[derive(Debug, Clone)]
pub struct SampleMoments {
    pub syy: DMatrix<f64>,
    pub syx: DMatrix<f64>,
    pub sxx: DMatrix<f64>,
    pub nobs: usize,
}

impl SampleMoments {
    /// Uncentered moments of `m×T` responses and `n×T` regressors.
    pub fn from_data(y: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<Self> {
        let t = y.ncols();
        if x.ncols() != t {
            return Err(Error::InvalidInput(format!(
                "Y has {t} observations but X has {}",
                x.ncols()
            )));
        }
        let needed = y.nrows() + x.nrows() + 1;
        if t < needed {
            return Err(Error::SampleSize {
                what: "reduced-rank regression".into(),
                needed,
                got: t,
            });
        }
        let tf = t as f64;
        Ok(SampleMoments {
            syy: symmetrize(&(y * y.transpose() / tf)),
            syx: y * x.transpose() / tf,
            sxx: symmetrize(&(x * x.transpose() / tf)),
            nobs: t,
        })
    }

}

/// `Σ̃εε = Syy − Syx·Sxx⁻¹·Sxy`, formed from the full-rank least-squares
/// residuals rather than the moment difference, which cancels badly when
/// the fit is close to exact.
pub fn residual_cov(y: &DMatrix<f64>, x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let fit = ols(&y.transpose(), &x.transpose()).map_err(|e| match e {
        Error::SingularRegression(what) => Error::SingularMoment {
            what: format!("regressor moment Sxx ({what})"),
            pivot: 0.0,
        },
        other => other,
    })?;
    let e = &fit.residuals;
    Ok(symmetrize(&(e.transpose() * e / y.ncols() as f64)))
}

pub fn rrr_ml_weighted(
    y: &DMatrix<f64>,
    x: &DMatrix<f64>,
    r: usize,
    weight: MlWeight,
) -> Result<RrrEstimate> {
    let mom = SampleMoments::from_data(y, x)?;
    let base = match weight {
        MlWeight::ResidualCovariance => residual_cov(y, x)?,
        MlWeight::ResponseCovariance => mom.syy.clone(),
    };
    let gamma = spd_inverse(&base, "ML weight covariance")?;
    rrr_ls(&mom.syx, &mom.sxx, &gamma, r, Some(&mom.syy))
}

/// Maximum-likelihood rank-`r` fit of `Y = A·B·X + ε` (columns are
/// observations), weighted by the inverse full-rank residual covariance.
pub fn rrr_ml(y: &DMatrix<f64>, x: &DMatrix<f64>, r: usize) -> Result<RrrEstimate> {
    rrr_ml_weighted(y, x, r, MlWeight::ResidualCovariance)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    fn spd(n: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        let a = random(n, n + 2, rng);
        &a * a.transpose() / (n + 2) as f64 + DMatrix::identity(n, n) * 0.2
    }

    fn weighted_criterion(
        syy: &DMatrix<f64>,
        syx: &DMatrix<f64>,
        sxx: &DMatrix<f64>,
        gamma: &DMatrix<f64>,
        c: &DMatrix<f64>,
    ) -> f64 {
        // tr Γ(Syy − C·Sxy − Syx·C′ + C·Sxx·C′)
        let inner = syy - c * syx.transpose() - syx * c.transpose() + c * sxx * c.transpose();
        (gamma * inner).trace()
    }

    #[test]
    fn exact_rank_one() {
        let u = DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5]);
        let v = DMatrix::from_column_slice(4, 1, &[0.3, 1.0, 2.0, -1.0]);
        let s = &u * v.transpose();
        let out = low_rank_approx(&s, 1).unwrap();
        assert!(max_abs(&(&out.approx - &s)) < 1e-12);
        assert!(out.error < 1e-24);
    }

    #[test]
    fn diagonal_truncation() {
        let s = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 1.0]));
        let out = low_rank_approx(&s, 2).unwrap();
        let expect = DMatrix::from_diagonal(&DVector::from_vec(vec![3.0, 2.0, 0.0]));
        assert!(max_abs(&(&out.approx - expect)) < 1e-14);
        assert!((out.error - 1.0).abs() < 1e-14);
        assert!(matches!(
            low_rank_approx(&s, 4),
            Err(Error::InvalidRank { .. })
        ));
    }

    #[test]
    fn tall_matrix_beats_random_candidates() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let s = random(4, 3, &mut rng);
        let out = low_rank_approx(&s, 2).unwrap();
        assert!(((&s - &out.approx).norm_squared() - out.error).abs() < 1e-10);
        for _ in 0..10_000 {
            let cand = random(4, 2, &mut rng) * random(2, 3, &mut rng);
            assert!(out.error <= (&s - cand).norm_squared() + 1e-12);
        }
    }

    #[test]
    fn full_rank_is_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let sxx = spd(4, &mut rng);
        let syx = random(3, 4, &mut rng);
        let gamma = spd(3, &mut rng);
        let est = rrr_ls(&syx, &sxx, &gamma, 3, None).unwrap();
        let ols = &syx * sxx.clone().try_inverse().unwrap();
        // rank 3 of a 3x4 coefficient is unrestricted
        assert!(max_abs(&(est.product() - ols)) < 1e-10);
    }

    #[test]
    fn identity_weights_reduce_to_truncated_svd() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let syx = random(3, 5, &mut rng);
        let est = rrr_ls(&syx, &DMatrix::identity(5, 5), &DMatrix::identity(3, 3), 2, None)
            .unwrap();
        let trunc = low_rank_approx(&syx, 2).unwrap();
        assert!(max_abs(&(est.product() - trunc.approx)) < 1e-10);
    }

    #[test]
    fn rank_one_beats_random_pairs() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let data_x = random(3, 50, &mut rng);
        let data_y = random(2, 3, &mut rng) * &data_x + random(2, 50, &mut rng);
        let mom = SampleMoments::from_data(&data_y, &data_x).unwrap();
        let gamma = spd(2, &mut rng);
        let est = rrr_ls(&mom.syx, &mom.sxx, &gamma, 1, Some(&mom.syy)).unwrap();
        let best = weighted_criterion(&mom.syy, &mom.syx, &mom.sxx, &gamma, &est.product());
        assert!((best - est.criterion.unwrap()).abs() < 1e-10);
        for _ in 0..10_000 {
            let c = random(2, 1, &mut rng) * random(1, 3, &mut rng);
            assert!(best <= weighted_criterion(&mom.syy, &mom.syx, &mom.sxx, &gamma, &c) + 1e-12);
        }
    }

    #[test]
    fn criterion_non_increasing_in_rank() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let x = random(4, 60, &mut rng);
        let y = random(4, 4, &mut rng) * &x + random(4, 60, &mut rng);
        let crit: Vec<f64> = (0..=4)
            .map(|r| rrr_ml(&y, &x, r).unwrap().criterion.unwrap())
            .collect();
        assert!(crit.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    }

    #[test]
    fn noiseless_recovery() {
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let a0 = random(3, 1, &mut rng);
        let b0 = random(1, 4, &mut rng);
        let x = random(4, 80, &mut rng);
        let exact = &a0 * &b0 * &x;
        let est = rrr_ml(&exact, &x, 1).unwrap();
        assert!(max_abs(&(est.product() - &a0 * &b0)) < 1e-8);
        let y = &exact + random(3, 80, &mut rng) * 1e-10;
        let est = rrr_ml(&y, &x, 1).unwrap();
        assert!(max_abs(&(est.product() - &a0 * &b0)) < 1e-8);
        // any SPD weight recovers an exact-rank coefficient from exact data
        let mom = SampleMoments::from_data(&exact, &x).unwrap();
        let est = rrr_ls(&mom.syx, &mom.sxx, &DMatrix::identity(3, 3), 1, None).unwrap();
        assert!(max_abs(&(est.product() - &a0 * &b0)) < 1e-10);
    }

    #[test]
    fn full_rank_ml_is_ols() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x = random(4, 40, &mut rng);
        let y = random(2, 40, &mut rng);
        let est = rrr_ml(&y, &x, 2).unwrap();
        let ols = &y * x.transpose() * (&x * x.transpose()).try_inverse().unwrap();
        assert!(max_abs(&(est.product() - ols)) < 1e-10);
    }

    #[test]
    fn weight_choices_agree_on_product_only() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let x = random(4, 70, &mut rng);
        let y = random(3, 4, &mut rng) * &x + random(3, 70, &mut rng);
        let one = rrr_ml_weighted(&y, &x, 2, MlWeight::ResidualCovariance).unwrap();
        let two = rrr_ml_weighted(&y, &x, 2, MlWeight::ResponseCovariance).unwrap();
        assert!(max_abs(&(one.product() - two.product())) < 1e-9);
        // both weights share eigenvectors; the spectra map by λ ↦ λ/(1+λ)
        for (l1, l2) in one.eigenvalues.iter().zip(&two.eigenvalues) {
            assert!((l1 / (1.0 + l1) - l2).abs() < 1e-10);
        }
    }

    #[test]
    fn tie_flagged() {
        let est = rrr_ls(
            &DMatrix::identity(3, 3),
            &DMatrix::identity(3, 3),
            &DMatrix::identity(3, 3),
            1,
            None,
        )
        .unwrap();
        assert!(est.tied);
    }
}
