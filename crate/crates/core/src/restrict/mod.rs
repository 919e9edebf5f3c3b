//! Likelihood-ratio tests of `H0: α⊥ = G·θ`, where `G` (`p×m`) spans the
//! space the common trends are allowed to load on.

mod chisq;

use nalgebra::DMatrix;

pub use chisq::{chi_square_quantile, chi_square_sf};

use crate::error::{Error, Result};
use crate::johansen::JohansenFit;
use crate::linalg::{gen_eigen, spd_inverse, symmetrize, RANK_TOL};

/// Negative LR values down to this are round-off and are reported as zero.
const LR_ROUNDOFF: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct RestrictionTest {
    pub g: DMatrix<f64>,
    pub m: usize,
    /// `m×(p−r)`.
    pub theta_hat: DMatrix<f64>,
    /// `G·θ̂`.
    pub alpha_perp_restricted: DMatrix<f64>,
    /// `m` values, descending.
    pub restricted_eigenvalues: Vec<f64>,
    pub lr_stat: f64,
    pub df: usize,
    pub p_value: f64,
}

/// Canonical selection matrix keeping the listed coordinates, in order.
pub fn selection_matrix(p: usize, keep: &[usize]) -> Result<DMatrix<f64>> {
    if let Some(&bad) = keep.iter().find(|&&i| i >= p) {
        return Err(Error::InvalidRestriction(format!(
            "coordinate {bad} outside a {p}-dimensional system"
        )));
    }
    let mut g = DMatrix::zeros(p, keep.len());
    for (col, &row) in keep.iter().enumerate() {
        g[(row, col)] = 1.0;
    }
    Ok(g)
}

pub fn test_alpha_perp(fit: &JohansenFit, g: &DMatrix<f64>) -> Result<RestrictionTest> {
    let p = fit.p;
    let r = fit.r;
    let k = p - r;
    let m = g.ncols();
    if g.nrows() != p {
        return Err(Error::InvalidRestriction(format!(
            "G has {} rows but the system has {p} variables",
            g.nrows()
        )));
    }
    if m < k || m >= p {
        return Err(Error::InvalidRestriction(format!(
            "G needs between p - r = {k} and p - 1 = {} columns, got {m}",
            p.saturating_sub(1)
        )));
    }
    let sv = g.clone().svd(false, false).singular_values;
    if !(sv.min() > RANK_TOL * sv.max()) {
        return Err(Error::InvalidRestriction(
            "G does not have full column rank".into(),
        ));
    }
    let mom = &fit.moments;
    let s11_inv = spd_inverse(&mom.s11, "residual moment S11")?;
    let gt = g.transpose();
    let lhs = symmetrize(&(&gt * &mom.s01 * &s11_inv * mom.s10() * g));
    let metric = symmetrize(&(&gt * &mom.s00 * g));
    let sys = gen_eigen(&lhs, &metric)?;
    if let Some(&value) = sys.values.iter().find(|v| !(**v < 1.0)) {
        return Err(Error::InvalidEigenvalue { value });
    }
    let theta_hat = sys.trailing(k);
    let alpha_perp_restricted = g * &theta_hat;

    // i = r+1..=p pairs λ²_i with the restricted λ²_{i+m−p} (one-based)
    let mut lr = 0.0;
    for i in (r + 1)..=p {
        let j = i + m - p;
        debug_assert!(j >= 1 && j <= m);
        let restricted = sys.values[j - 1];
        let unrestricted = fit.eigenvalues[i - 1];
        lr += ((1.0 - restricted) / (1.0 - unrestricted)).ln();
    }
    let mut lr_stat = -(fit.nobs as f64) * lr;
    if lr_stat < 0.0 {
        if lr_stat < -LR_ROUNDOFF {
            return Err(Error::NumericalInconsistency(format!(
                "restricted likelihood exceeds the unrestricted one (LR = {lr_stat:e})"
            )));
        }
        lr_stat = 0.0;
    }
    let df = k * (p - m);
    let p_value = chi_square_sf(lr_stat, df)?;
    Ok(RestrictionTest {
        g: g.clone(),
        m,
        theta_hat,
        alpha_perp_restricted,
        restricted_eigenvalues: sys.values,
        lr_stat,
        df,
        p_value,
    })
}

/// Test that drops the listed variables from the common-trend loadings.
pub fn test_exclusion(fit: &JohansenFit, excluded: &[usize]) -> Result<RestrictionTest> {
    let keep: Vec<usize> = (0..fit.p).filter(|i| !excluded.contains(i)).collect();
    if excluded.is_empty() {
        return Err(Error::InvalidRestriction(
            "at least one variable must be excluded".into(),
        ));
    }
    if let Some(&bad) = excluded.iter().find(|&&i| i >= fit.p) {
        return Err(Error::InvalidRestriction(format!(
            "variable index {bad} outside a {}-dimensional system",
            fit.p
        )));
    }
    test_alpha_perp(fit, &selection_matrix(fit.p, &keep)?)
}

#[derive(Debug, Clone)]
pub struct ExclusionScanRow {
    /// Zero-based indices, ascending.
    pub excluded: Vec<usize>,
    pub labels: Vec<String>,
    pub test: RestrictionTest,
}

fn subsets(p: usize, size: usize, start: usize, current: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if current.len() == size {
        out.push(current.clone());
        return;
    }
    for i in start..p {
        current.push(i);
        subsets(p, size, i + 1, current, out);
        current.pop();
    }
}

/// Every exclusion of 1 to `max_excluded` variables, by descending p-value.
/// Equal p-values keep enumeration order (by size, then lexicographic).
pub fn exclusion_scan(fit: &JohansenFit, max_excluded: usize) -> Result<Vec<ExclusionScanRow>> {
    if max_excluded == 0 || max_excluded > fit.r {
        return Err(Error::InvalidRestriction(format!(
            "can exclude between 1 and r = {} variables, asked for {max_excluded}",
            fit.r
        )));
    }
    let mut sets = Vec::new();
    for size in 1..=max_excluded {
        subsets(fit.p, size, 0, &mut Vec::new(), &mut sets);
    }
    let mut rows = sets
        .into_iter()
        .map(|excluded| {
            let test = test_exclusion(fit, &excluded)?;
            let labels = excluded.iter().map(|&i| fit.names[i].clone()).collect();
            Ok(ExclusionScanRow {
                excluded,
                labels,
                test,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    rows.sort_by(|a, b| b.test.p_value.total_cmp(&a.test.p_value));
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::johansen::{fit_johansen, TraceTable};
    use crate::linalg::max_abs;
    use crate::series::SeriesPanel;
    use crate::var::{simulate_var, var_from_vecm, SimulationSettings, VecmModel};
    use nalgebra::DVector;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn system(p: usize, r: usize, t: usize, seed: u64) -> SeriesPanel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let beta = DMatrix::from_fn(p, r, |_, _| rng.sample::<f64, _>(StandardNormal));
        // α = −c·β keeps β′α negative definite, hence a stable system
        let alpha = -&beta * (0.3 / (beta.norm_squared() / r as f64));
        let vecm = VecmModel::from_factors(DVector::zeros(p), &alpha, &beta, vec![]).unwrap();
        let settings = SimulationSettings::new(t, seed, DMatrix::identity(p, p));
        simulate_var(&var_from_vecm(&vecm), &settings).unwrap().panel
    }

    fn fit(p: usize, r: usize, seed: u64) -> JohansenFit {
        fit_johansen(&system(p, r, 300, seed), 2, Some(r), &TraceTable::default()).unwrap()
    }

    #[test]
    fn degrees_of_freedom() {
        let f3 = fit(3, 1, 1);
        assert_eq!(test_exclusion(&f3, &[0]).unwrap().df, 2);
        let f9 = fit(9, 3, 2);
        assert_eq!(test_exclusion(&f9, &[4]).unwrap().df, 6);
        assert_eq!(test_exclusion(&f9, &[1, 7]).unwrap().df, 12);
    }

    #[test]
    fn bounds_on_m() {
        let f = fit(3, 1, 3);
        assert!(matches!(
            test_alpha_perp(&f, &DMatrix::identity(3, 3)),
            Err(Error::InvalidRestriction(_))
        ));
        assert!(matches!(
            test_alpha_perp(&f, &selection_matrix(3, &[0]).unwrap()),
            Err(Error::InvalidRestriction(_))
        ));
        let collinear = DMatrix::from_column_slice(3, 2, &[1.0, 1.0, 0.0, 2.0, 2.0, 0.0]);
        assert!(matches!(
            test_alpha_perp(&f, &collinear),
            Err(Error::InvalidRestriction(_))
        ));
        assert!(test_exclusion(&f, &[]).is_err());
    }

    #[test]
    fn spanning_alpha_perp_gives_zero_statistic() {
        for seed in 0..5 {
            let f = fit(4, 2, 10 + seed);
            // span(G) = span(α̂⊥) plus one extra direction
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let extra = DMatrix::from_fn(4, 1, |_, _| rng.sample::<f64, _>(StandardNormal));
            let g = f.alpha_perp.clone().insert_columns(2, 1, 0.0);
            let mut g = g;
            g.set_column(2, &extra.column(0));
            let t = test_alpha_perp(&f, &g).unwrap();
            assert!(t.lr_stat <= 1e-6, "{}", t.lr_stat);
            // the restricted estimate spans the same space
            let proj = &t.alpha_perp_restricted
                * (t.alpha_perp_restricted.transpose() * &t.alpha_perp_restricted)
                    .try_inverse()
                    .unwrap()
                * t.alpha_perp_restricted.transpose();
            assert!(max_abs(&(&proj * &f.alpha_perp - &f.alpha_perp)) < 1e-6);
        }
    }

    #[test]
    fn scan_counts_and_order() {
        let f = fit(9, 3, 4);
        let rows = exclusion_scan(&f, 3).unwrap();
        assert_eq!(rows.len(), 9 + 36 + 84);
        assert!(rows.windows(2).all(|w| w[0].test.p_value >= w[1].test.p_value));
        assert!(rows.iter().all(|r| !r.excluded.is_empty()));
        let f3 = fit(3, 1, 5);
        assert_eq!(exclusion_scan(&f3, 1).unwrap().len(), 3);
        assert!(exclusion_scan(&f3, 2).is_err());
    }

    #[test]
    fn restricted_test_matches_direct_evaluation() {
        // Cauchy interlacing and the LR expression evaluated by hand for m = 3, p − r = 1
        let f = fit(4, 3, 6);
        let t = test_exclusion(&f, &[2]).unwrap();
        let expect = -(f.nobs as f64)
            * ((1.0 - t.restricted_eigenvalues[2]) / (1.0 - f.eigenvalues[3])).ln();
        assert!((t.lr_stat - expect.max(0.0)).abs() < 1e-10);
        assert!((t.p_value - chi_square_sf(t.lr_stat, 1).unwrap()).abs() < 1e-15);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(24))]

        #[test]
        fn nesting_and_interlacing(seed in 0u64..1000, drop_a in 0usize..5, drop_b in 0usize..5) {
            prop_assume!(drop_a != drop_b);
            let f = fit(5, 3, seed);
            let narrow = test_exclusion(&f, &[drop_a, drop_b]).unwrap();
            let wide = test_exclusion(&f, &[drop_a]).unwrap();
            prop_assert!(wide.lr_stat <= narrow.lr_stat + 1e-8);
            for (i, v) in narrow.restricted_eigenvalues.iter().enumerate() {
                prop_assert!(*v <= f.eigenvalues[i] + 1e-9);
            }
            prop_assert!((0.0..=1.0).contains(&narrow.p_value));
        }
    }
}
