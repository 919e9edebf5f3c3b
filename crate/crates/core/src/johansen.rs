//! Johansen maximum-likelihood estimation of the error-correction model
//! `∇X_t = Γ0 + αβ′X_{t−1} + Σ Γ_i∇X_{t−i} + ε_t` with an unrestricted
//! constant.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::linalg::{gen_eigen, spd_inverse, symmetrize};
use crate::regress::{ols, with_intercept};
use crate::series::{build_vecm_blocks, SeriesPanel};

/// Residuals of `∇X_t` (`r0`) and `X_{t−1}` (`r1`) after regressing both on
/// a constant and `∇X_{t−1}, …, ∇X_{t−k+1}`.
#[derive(Debug, Clone)]
pub struct Concentrated {
    pub r0: DMatrix<f64>,
    pub r1: DMatrix<f64>,
    pub nobs: usize,
}

pub fn concentrate(panel: &SeriesPanel, k: usize) -> Result<Concentrated> {
    let p = panel.dim();
    // the short-run regressors plus p levels must leave residual freedom
    let needed = (k + p + 2).max(k + p * k + 2);
    if panel.len() < needed {
        return Err(Error::SampleSize {
            what: format!("Johansen concentration with k={k}, p={p}"),
            needed,
            got: panel.len(),
        });
    }
    let blocks = build_vecm_blocks(panel, k)?;
    let z = with_intercept(&blocks.lagged_diffs);
    let r0 = ols(&blocks.y, &z)?.residuals;
    let r1 = ols(&blocks.lagged_levels, &z)?.residuals;
    let nobs = r0.nrows();
    Ok(Concentrated { r0, r1, nobs })
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentSet {
    pub s00: DMatrix<f64>,
    pub s01: DMatrix<f64>,
    pub s11: DMatrix<f64>,
    pub nobs: usize,
}

impl MomentSet {
    pub fn s10(&self) -> DMatrix<f64> {
        self.s01.transpose()
    }

    pub fn dim(&self) -> usize {
        self.s00.nrows()
    }
}

/// `S_ab = Ra′·Rb / nobs`.
pub fn moments(r0: &DMatrix<f64>, r1: &DMatrix<f64>) -> Result<MomentSet> {
    if r0.shape() != r1.shape() {
        return Err(Error::InvalidInput(format!(
            "residual blocks disagree: {:?} vs {:?}",
            r0.shape(),
            r1.shape()
        )));
    }
    let nobs = r0.nrows();
    if nobs == 0 {
        return Err(Error::SampleSize {
            what: "moment matrices".into(),
            needed: 1,
            got: 0,
        });
    }
    let n = nobs as f64;
    Ok(MomentSet {
        s00: symmetrize(&(r0.transpose() * r0 / n)),
        s01: r0.transpose() * r1 / n,
        s11: symmetrize(&(r1.transpose() * r1 / n)),
        nobs,
    })
}

#[derive(Debug, Clone)]
pub struct Eigenproblems {
    /// `λ²`, descending.
    pub eigenvalues: Vec<f64>,
    /// Dual spectrum; equals `eigenvalues` up to round-off.
    pub dual_eigenvalues: Vec<f64>,
    /// Primal eigenvectors, `W′·S11·W = I`.
    pub w: DMatrix<f64>,
    /// Dual eigenvectors, `Z′·S00·Z = I`.
    pub z: DMatrix<f64>,
}

/// Primal `(S10·S00⁻¹·S01)·w = λ²·S11·w` and dual
/// `(S01·S11⁻¹·S10)·z = λ²·S00·z`.
pub fn solve_eigenproblems(m: &MomentSet) -> Result<Eigenproblems> {
    let s10 = m.s10();
    let s00_inv = spd_inverse(&m.s00, "residual moment S00")?;
    let s11_inv = spd_inverse(&m.s11, "residual moment S11")?;
    let primal = gen_eigen(&symmetrize(&(&s10 * &s00_inv * &m.s01)), &m.s11)?;
    let dual = gen_eigen(&symmetrize(&(&m.s01 * &s11_inv * &s10)), &m.s00)?;
    Ok(Eigenproblems {
        eigenvalues: primal.values,
        dual_eigenvalues: dual.values,
        w: primal.vectors,
        z: dual.vectors,
    })
}

/// 95% trace critical values indexed by `p − r`, starting at 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceTable {
    values: Vec<f64>,
}

impl Default for TraceTable {
    /// Unrestricted-constant tabulation for `p − r = 1..9`.
    fn default() -> Self {
        TraceTable {
            values: vec![
                3.84, 15.41, 29.8, 47.71, 69.61, 95.51, 125.42, 159.32, 197.22,
            ],
        }
    }
}

impl TraceTable {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::InvalidInput("trace table is empty".into()));
        }
        if values.iter().any(|v| !v.is_finite() || *v <= 0.0) {
            return Err(Error::InvalidInput(
                "trace critical values must be positive and finite".into(),
            ));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidInput(
                "trace critical values must increase strictly with p - r".into(),
            ));
        }
        Ok(TraceTable { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Largest `p − r` covered.
    pub fn max_dim(&self) -> usize {
        self.values.len()
    }

    pub fn critical_value(&self, p_minus_r: usize) -> Option<f64> {
        p_minus_r
            .checked_sub(1)
            .and_then(|i| self.values.get(i))
            .copied()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TraceTest {
    /// `trace_r` for hypotheses `r = 0..p−1`.
    pub stats: Vec<f64>,
    /// Critical value for `p − r`, when the table covers it.
    pub critical_values: Vec<Option<f64>>,
    /// `None` when the table runs out before a hypothesis is accepted.
    pub selected_rank: Option<usize>,
}

impl TraceTest {
    pub fn rejects(&self, r: usize) -> Option<bool> {
        self.critical_values[r].map(|cv| self.stats[r] >= cv)
    }
}

/// Smallest `r` whose statistic falls below the critical value for `p − r`;
/// `p` when every hypothesis is rejected.
pub fn select_rank(stats: &[f64], table: &TraceTable) -> Option<usize> {
    let p = stats.len();
    for (r, stat) in stats.iter().enumerate() {
        let cv = table.critical_value(p - r)?;
        if *stat < cv {
            return Some(r);
        }
    }
    Some(p)
}

/// `trace_r = −nobs·Σ_{i>r} ln(1 − λ_i²)`.
pub fn trace_test(eigenvalues: &[f64], nobs: usize, table: &TraceTable) -> Result<TraceTest> {
    if let Some(&value) = eigenvalues
        .iter()
        .find(|v| !(**v >= 0.0 && **v < 1.0))
    {
        return Err(Error::InvalidEigenvalue { value });
    }
    let p = eigenvalues.len();
    let n = nobs as f64;
    let mut stats = vec![0.0; p];
    let mut acc = 0.0;
    for r in (0..p).rev() {
        acc += -n * (1.0 - eigenvalues[r]).ln();
        stats[r] = acc;
    }
    let critical_values = (0..p).map(|r| table.critical_value(p - r)).collect();
    let selected_rank = select_rank(&stats, table);
    Ok(TraceTest {
        stats,
        critical_values,
        selected_rank,
    })
}

#[derive(Debug, Clone)]
pub struct JohansenFit {
    pub p: usize,
    pub k: usize,
    pub r: usize,
    pub rank_forced: bool,
    pub names: Vec<String>,
    pub eigenvalues: Vec<f64>,
    pub w: DMatrix<f64>,
    pub z: DMatrix<f64>,
    pub moments: MomentSet,
    pub alpha: DMatrix<f64>,
    pub beta: DMatrix<f64>,
    pub alpha_perp: DMatrix<f64>,
    pub beta_perp: DMatrix<f64>,
    pub trace: TraceTest,
    pub nobs: usize,
}

impl JohansenFit {
    /// `α̂·β̂′`.
    pub fn long_run(&self) -> DMatrix<f64> {
        &self.alpha * self.beta.transpose()
    }

    /// `W` and `Z` divided by `√nobs`, the scale used in printed tables.
    pub fn display_vectors(&self) -> (DMatrix<f64>, DMatrix<f64>) {
        let s = (self.nobs as f64).sqrt();
        (&self.w / s, &self.z / s)
    }
}

/// Run the full procedure. With `rank = None` the trace test picks `r`.
pub fn fit_johansen(
    panel: &SeriesPanel,
    k: usize,
    rank: Option<usize>,
    table: &TraceTable,
) -> Result<JohansenFit> {
    let p = panel.dim();
    let conc = concentrate(panel, k)?;
    let moments = moments(&conc.r0, &conc.r1)?;
    let eig = solve_eigenproblems(&moments)?;
    let trace = trace_test(&eig.eigenvalues, moments.nobs, table)?;
    let r = match rank {
        Some(r) => r,
        None => trace.selected_rank.ok_or_else(|| {
            Error::InvalidInput(format!(
                "trace table covers p - r up to {} but the system has p = {p}; pass a rank",
                table.max_dim()
            ))
        })?,
    };
    if r >= p {
        return Err(Error::InvalidRank {
            rank: r,
            dim: p,
            reason: if rank.is_none() {
                "every reduced-rank hypothesis is rejected; the levels look stationary".into()
            } else {
                "cointegrating rank must be below the system dimension".into()
            },
        });
    }
    let w_r = eig.w.columns(0, r).into_owned();
    let z_k = eig.z.columns(r, p - r).into_owned();
    let alpha = &moments.s01 * &w_r;
    let beta_perp = moments.s10() * &z_k;
    Ok(JohansenFit {
        p,
        k,
        r,
        rank_forced: rank.is_some(),
        names: panel.names().to_vec(),
        eigenvalues: eig.eigenvalues,
        w: eig.w,
        z: eig.z,
        alpha,
        beta: w_r,
        alpha_perp: z_k,
        beta_perp,
        moments,
        trace,
        nobs: conc.nobs,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs;
    use crate::series::Period;
    use crate::var::{simulate_var, var_from_vecm, SimulationSettings, VecmModel};
    use nalgebra::DVector;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::StandardNormal;

    fn random(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> DMatrix<f64> {
        DMatrix::from_fn(rows, cols, |_, _| rng.sample::<f64, _>(StandardNormal))
    }

    fn panel(values: DMatrix<f64>) -> SeriesPanel {
        SeriesPanel::from_matrix(Period::new(2000, 1).unwrap(), values).unwrap()
    }

    /// p = 3 system with one cointegrating relation.
    fn rank_one_panel(t: usize, seed: u64) -> SeriesPanel {
        let alpha = DMatrix::from_column_slice(3, 1, &[-0.2, 0.1, 0.05]);
        let beta = DMatrix::from_column_slice(3, 1, &[1.0, -1.0, 0.5]);
        let gamma1 = DMatrix::from_diagonal(&DVector::from_vec(vec![0.2, -0.1, 0.1]));
        let drift = DVector::from_vec(vec![0.1, 0.05, -0.05]);
        let vecm = VecmModel::from_factors(drift, &alpha, &beta, vec![gamma1]).unwrap();
        let settings = SimulationSettings::new(t, seed, DMatrix::identity(3, 3));
        simulate_var(&var_from_vecm(&vecm), &settings).unwrap().panel
    }

    #[test]
    fn default_table_verbatim() {
        assert_eq!(
            TraceTable::default().values(),
            &[3.84, 15.41, 29.8, 47.71, 69.61, 95.51, 125.42, 159.32, 197.22]
        );
        assert!(TraceTable::new(vec![3.0, 2.0]).is_err());
        assert_eq!(TraceTable::default().critical_value(10), None);
    }

    #[test]
    fn rank_decisions_from_published_tables() {
        let table = TraceTable::default();
        assert_eq!(select_rank(&[34.2, 4.4, 0.6], &table), Some(1));
        assert_eq!(select_rank(&[25.7178, 8.6487, 0.8098], &table), Some(0));
        let t = trace_test(&[0.0, 0.0, 0.0], 100, &table).unwrap();
        assert_eq!(t.stats, vec![0.0; 3]);
        assert_eq!(t.selected_rank, Some(0));
        assert!(matches!(
            trace_test(&[1.0, 0.1], 50, &table),
            Err(Error::InvalidEigenvalue { .. })
        ));
    }

    #[test]
    fn trace_additivity() {
        let eig = [0.4, 0.2, 0.05, 0.01];
        let t = trace_test(&eig, 137, &TraceTable::default()).unwrap();
        for r in 0..3 {
            let step = -137.0 * (1.0 - eig[r]).ln();
            assert!((t.stats[r] - t.stats[r + 1] - step).abs() <= 1e-12 * t.stats[0]);
        }
        assert!(t.stats.windows(2).all(|w| w[0] > w[1]));
    }

    #[test]
    fn first_order_concentration_is_centering() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let x = random(30, 2, &mut rng);
        let c = concentrate(&panel(x.clone()), 1).unwrap();
        let dx = DMatrix::from_fn(29, 2, |i, j| x[(i + 1, j)] - x[(i, j)]);
        let lv = x.rows(0, 29).into_owned();
        let centered = |m: &DMatrix<f64>| {
            let mut out = m.clone();
            for mut col in out.column_iter_mut() {
                let mean = col.mean();
                col.add_scalar_mut(-mean);
            }
            out
        };
        assert!(max_abs(&(&c.r0 - centered(&dx))) < 1e-12);
        assert!(max_abs(&(&c.r1 - centered(&lv))) < 1e-12);
    }

    #[test]
    fn constant_panel_has_zero_r0() {
        let c = concentrate(&panel(DMatrix::from_element(20, 2, 3.5)), 1).unwrap();
        assert_eq!(max_abs(&c.r0), 0.0);
    }

    #[test]
    fn two_stage_oracle_for_second_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let x = random(40, 2, &mut rng);
        let c = concentrate(&panel(x.clone()), 2).unwrap();
        // normal equations on [1, ∇X_{t−1}] built by hand
        let n = 38;
        let reg = DMatrix::from_fn(n, 3, |i, col| {
            let t = i + 2;
            if col == 0 {
                1.0
            } else {
                x[(t - 1, col - 1)] - x[(t - 2, col - 1)]
            }
        });
        let dx = DMatrix::from_fn(n, 2, |i, j| x[(i + 2, j)] - x[(i + 1, j)]);
        let lv = DMatrix::from_fn(n, 2, |i, j| x[(i + 1, j)]);
        let gram_inv = (reg.transpose() * &reg).try_inverse().unwrap();
        let resid = |y: &DMatrix<f64>| y - &reg * (&gram_inv * (reg.transpose() * y));
        assert!(max_abs(&(&c.r0 - resid(&dx))) < 1e-10);
        assert!(max_abs(&(&c.r1 - resid(&lv))) < 1e-10);
        assert!(max_abs(&(reg.transpose() * &c.r0)) < 1e-8);
    }

    #[test]
    fn moment_conventions() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let r = random(25, 3, &mut rng);
        let m = moments(&r, &r).unwrap();
        assert!(max_abs(&(&m.s00 - &m.s01)) < 1e-15 && max_abs(&(&m.s11 - &m.s00)) < 1e-15);
        let r1 = random(25, 3, &mut rng);
        let m = moments(&r, &r1).unwrap();
        assert!(max_abs(&(&m.s01 - r.transpose() * &r1 / 25.0)) < 1e-14);
        let a = DMatrix::from_row_slice(2, 1, &[1.0, 0.0]);
        let b = DMatrix::from_row_slice(2, 1, &[0.0, 1.0]);
        assert_eq!(moments(&a, &b).unwrap().s01[(0, 0)], 0.0);
    }

    #[test]
    fn uncorrelated_moments_give_zero_spectrum() {
        let m = MomentSet {
            s00: DMatrix::identity(2, 2),
            s01: DMatrix::zeros(2, 2),
            s11: DMatrix::from_diagonal(&DVector::from_vec(vec![2.0, 0.5])),
            nobs: 10,
        };
        let e = solve_eigenproblems(&m).unwrap();
        assert!(e.eigenvalues.iter().all(|v| v.abs() < 1e-15));
    }

    #[test]
    fn scalar_case_is_squared_correlation() {
        let m = MomentSet {
            s00: DMatrix::from_element(1, 1, 2.0),
            s01: DMatrix::from_element(1, 1, 0.6),
            s11: DMatrix::from_element(1, 1, 0.5),
            nobs: 10,
        };
        let e = solve_eigenproblems(&m).unwrap();
        assert!((e.eigenvalues[0] - 0.36 / 1.0).abs() < 1e-14);
    }

    #[test]
    fn duality_and_annihilation() {
        for seed in 0..5 {
            let fit = fit_johansen(&rank_one_panel(300, seed), 2, Some(1), &TraceTable::default())
                .unwrap();
            let e = solve_eigenproblems(&fit.moments).unwrap();
            for (a, b) in e.eigenvalues.iter().zip(&e.dual_eigenvalues) {
                assert!((a - b).abs() < 1e-9);
            }
            let m = &fit.moments;
            assert!(max_abs(&(fit.w.transpose() * &m.s11 * &fit.w - DMatrix::identity(3, 3))) < 1e-9);
            assert!(max_abs(&(fit.z.transpose() * &m.s00 * &fit.z - DMatrix::identity(3, 3))) < 1e-9);
            assert!(max_abs(&(fit.alpha_perp.transpose() * &fit.alpha)) < 1e-8);
            assert!(max_abs(&(fit.beta_perp.transpose() * &fit.beta)) < 1e-8);
            assert!(fit.eigenvalues.iter().all(|v| (0.0..1.0).contains(v)));
            // dual vectors are S00⁻¹·S01·W up to column scale
            let s00_inv = m.s00.clone().try_inverse().unwrap();
            let mapped = &s00_inv * &m.s01 * &fit.w;
            for j in 0..3 {
                let zj = fit.z.column(j);
                let mj = mapped.column(j);
                let cos = zj.dot(&mj) / (zj.norm() * mj.norm());
                assert!((cos.abs() - 1.0).abs() < 1e-8, "column {j}");
            }
        }
    }

    #[test]
    fn zero_rank_and_full_rank() {
        let x = rank_one_panel(200, 9);
        let fit = fit_johansen(&x, 2, Some(0), &TraceTable::default()).unwrap();
        assert_eq!(fit.alpha.shape(), (3, 0));
        assert_eq!(fit.alpha_perp, fit.z);
        assert!(matches!(
            fit_johansen(&x, 2, Some(3), &TraceTable::default()),
            Err(Error::InvalidRank { .. })
        ));
    }

    #[test]
    fn scale_invariant_spectrum() {
        let x = rank_one_panel(250, 4);
        let d = DMatrix::from_diagonal(&DVector::from_vec(vec![10.0, 0.01, -3.0]));
        let scaled = panel(x.values() * &d);
        let a = fit_johansen(&x, 2, Some(1), &TraceTable::default()).unwrap();
        let b = fit_johansen(&scaled, 2, Some(1), &TraceTable::default()).unwrap();
        for (u, v) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((u - v).abs() < 1e-9);
        }
    }

    #[test]
    fn ols_refit_reproduces_alpha() {
        let x = rank_one_panel(400, 5);
        let fit = fit_johansen(&x, 2, Some(1), &TraceTable::default()).unwrap();
        let blocks = build_vecm_blocks(&x, 2).unwrap();
        let ec = &blocks.lagged_levels * &fit.beta;
        let reg = with_intercept(&blocks.lagged_diffs);
        let last = reg.ncols();
        let mut reg = reg.insert_column(last, 0.0);
        reg.set_column(last, &ec.column(0));
        let coef = ols(&blocks.y, &reg).unwrap().coefficients;
        let alpha_ols = coef.row(last).transpose();
        assert!((alpha_ols - fit.alpha.column(0)).amax() < 1e-8);
    }

    #[test]
    fn recovers_rank_one() {
        let hits = (0..200)
            .filter(|&seed| {
                fit_johansen(&rank_one_panel(2000, 1000 + seed), 2, None, &TraceTable::default())
                    .map(|f| f.r == 1)
                    .unwrap_or(false)
            })
            .count();
        assert!(hits >= 180, "{hits}/200");
    }

    #[test]
    fn long_run_relation_is_stationary() {
        use crate::unitroot::{adf_test, CriticalValues, SignificanceLevel};
        let x = rank_one_panel(2000, 77);
        let fit = fit_johansen(&x, 2, Some(1), &TraceTable::default()).unwrap();
        let z = x.values() * &fit.beta;
        let r = adf_test(z.as_slice(), 3, CriticalValues::default()).unwrap();
        assert!(r.rejects_at(SignificanceLevel::FivePercent));
    }
}
