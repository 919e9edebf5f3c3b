use coint_core::restrict::exclusion_scan;
use coint_core::unitroot::{adf_test, CriticalValues};
use coint_core::var::{simulate_var, var_from_vecm, SimulationSettings};
use coint_core::{decompose, fit_johansen, DMatrix, DVector, TraceTable, VecmModel};

#[test]
fn simulate_fit_decompose_and_scan() {
    let alpha = DMatrix::from_column_slice(3, 1, &[-0.3, 0.1, 0.0]);
    let beta = DMatrix::from_column_slice(3, 1, &[1.0, -1.0, 0.0]);
    let drift = DVector::from_vec(vec![0.1, 0.05, -0.05]);
    let vecm = VecmModel::from_factors(drift, &alpha, &beta, vec![]).unwrap();
    let settings = SimulationSettings::new(600, 3, DMatrix::identity(3, 3));
    let panel = simulate_var(&var_from_vecm(&vecm), &settings).unwrap().panel;

    let fit = fit_johansen(&panel, 2, None, &TraceTable::default()).unwrap();
    assert_eq!(fit.r, 1);
    // the estimated relation is close to x1 - x2
    let b = fit.beta.column(0) / fit.beta[(0, 0)];
    assert!((b[1] + 1.0).abs() < 0.05 && b[2].abs() < 0.05, "{b}");

    let d = decompose(&panel, &fit).unwrap();
    assert!(d.reconstruction_error(&panel) < 1e-8);
    let z = d.transitory_factors.column(0).iter().copied().collect::<Vec<_>>();
    assert!(adf_test(&z, 3, CriticalValues::default()).unwrap().reject_at.is_some());

    // the third series does not adjust, so excluding it from the common
    // trends is the hypothesis the data reject most strongly
    let rows = exclusion_scan(&fit, 1).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows.last().unwrap().excluded, vec![2]);
    assert!(rows.last().unwrap().test.p_value < 1e-3);
}
