mod common;

use std::sync::Arc;

use berezin::error::Error;
use berezin::functions::TestFunction;
use berezin::geometry::ChartPoint;
use berezin::hilbert::{kernel_l, BasisSpec};
use berezin::operators::*;
use common::*;
use nalgebra::DMatrix;
use num_complex::Complex64;
use proptest::prelude::*;

fn spec(d: usize, m: u32) -> Arc<BasisSpec> {
    Arc::new(BasisSpec::with_default_level(d, m).unwrap())
}

fn matrix(n: usize, values: Vec<Complex64>) -> DMatrix<Complex64> {
    DMatrix::from_vec(n, n, values)
}

fn spec_and_matrices(count: usize) -> impl Strategy<Value = (Arc<BasisSpec>, Vec<DMatrix<Complex64>>, ChartPoint)> {
    prop_oneof![(1u32..=8).prop_map(|m| spec(1, m)), (1u32..=4).prop_map(|m| spec(2, m))].prop_flat_map(
        move |s| {
            let n = s.len();
            let d = s.dim();
            (
                Just(s),
                proptest::collection::vec(cvec(n * n, 1.0).prop_map(move |v| matrix(n, v)), count),
                point(d, 2.0),
            )
        },
    )
}

#[test]
fn identity_and_scalar_symbols() {
    let s = spec(1, 5);
    let nu = ChartPoint::scalar(c(0.4, -1.2)).unwrap();
    let mu = ChartPoint::scalar(c(-0.7, 0.3)).unwrap();
    let one = symbol_eval(&OperatorMatrix::identity(s.clone()), &nu, &mu).unwrap();
    assert!((one - 1.0).norm() < 1e-13);
    let k = c(2.5, -0.5);
    let scaled = symbol_eval(&OperatorMatrix::identity(s).scale(k), &nu, &mu).unwrap();
    assert!((scaled - k).norm() < 1e-13);
}

#[test]
fn rank_one_symbol_matches_direct_formula() {
    let s = spec(2, 3);
    let nu = ChartPoint::new(vec![c(0.3, 0.1), c(-0.5, 0.8)]).unwrap();
    let mu = ChartPoint::new(vec![c(1.1, -0.4), c(0.2, 0.2)]).unwrap();
    let l = kernel_l(&s, &nu, &mu).unwrap();
    let vn = s.basis_values(nu.coords());
    let vm = s.basis_values(mu.coords());
    for i in 0..s.len() {
        let op = OperatorMatrix::rank_one(s.clone(), i, i).unwrap();
        let got = symbol_eval(&op, &nu, &mu).unwrap();
        let expected = vn[i] * vm[i].conj() / l;
        assert!((got - expected).norm() <= 1e-12 * expected.norm().max(1.0), "{i}: {got} vs {expected}");
    }
}

#[test]
fn degenerate_pair_is_reported() {
    let s = spec(1, 4);
    let nu = ChartPoint::scalar(c(0.0, 1.0)).unwrap();
    let mu = ChartPoint::scalar(c(0.0, -1.0)).unwrap();
    let op = OperatorMatrix::identity(s);
    assert!(matches!(symbol_eval(&op, &nu, &mu), Err(Error::DegenerateKernel(_))));
}

#[test]
fn star_product_is_finite_at_huge_points() {
    let s = spec(1, 4);
    let id = OperatorMatrix::identity(s.clone());
    for z in [c(1e200, 0.0), c(-3e160, 2e160)] {
        let mu = ChartPoint::scalar(z).unwrap();
        let star = star_product(&id, &id, &mu).unwrap();
        assert!((star - 1.0).norm() < 1e-6, "{z}: {star}");
    }
}

#[test]
fn recovery_examples() {
    let s = spec(1, 6);
    let id = operator_from_symbol(s.clone(), &ConstantSymbol(c(1.0, 0.0))).unwrap();
    assert!((id.entries() - DMatrix::identity(s.len(), s.len())).camax() < 1e-8);

    let diag = DMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        s.len(),
        (0..s.len()).map(|k| c(0.3 * k as f64 - 0.7, 0.1 * k as f64)),
    ));
    let a = OperatorMatrix::new(s.clone(), diag.clone()).unwrap();
    let back = operator_from_symbol(s.clone(), &CovariantSymbol::new(a)).unwrap();
    assert!((back.entries() - &diag).camax() <= 1e-6 * diag.camax());

    let r = OperatorMatrix::rank_one(s.clone(), 0, 1).unwrap();
    let back = operator_from_symbol(s, &CovariantSymbol::new(r.clone())).unwrap();
    assert!((back.entries() - r.entries()).camax() <= 1e-6);
}

#[test]
fn exact_symbol_builder_reproduces_functions() {
    let mu = ChartPoint::scalar(c(0.3, 0.2)).unwrap();
    for f in TestFunction::ALL {
        let s = spec(1, 6);
        let op = berezin_operator(s, &f.sesqui(1)).unwrap();
        let got = symbol_eval(&op, &mu, &mu).unwrap();
        let expected = berezin::geometry::ScalarField::value(&f, mu.coords());
        assert!((got - expected).norm() < 1e-12, "{f}: {got} vs {expected}");
    }
    let low = spec(1, 1);
    assert!(berezin_operator(low, &TestFunction::ReBump.sesqui(1)).is_err());
}

#[test]
fn normalization_identity() {
    for (d, m) in [(1, 1), (1, 8), (2, 4)] {
        let s = spec(d, m);
        for z in [0.0, 0.7, 1.9] {
            let mu = ChartPoint::new(vec![c(z, -0.3 * z); d]).unwrap();
            assert!((star_normalization(&s, &mu).unwrap() - 1.0).abs() < 1e-8);
        }
    }
}

#[test]
fn sweep_trivial_cases() {
    let mu = ChartPoint::scalar(c(0.3, 0.2)).unwrap();
    let same = |m: u32| berezin_operator(spec(1, m), &TestFunction::ReBump.sesqui(1));
    let table = correspondence_sweep(same, same, &[4, 8], &mu).unwrap();
    assert!(table.rows.iter().all(|r| r.e1 <= 1e-10));
    let constant = |m: u32| Ok(OperatorMatrix::identity(spec(1, m)).scale(c(2.0, 1.0)));
    let table = correspondence_sweep(constant, constant, &[2, 4, 8], &mu).unwrap();
    assert!(table.rows.iter().all(|r| r.e0 <= 1e-10 && r.e1 <= 1e-10));
    let single = correspondence_sweep(same, same, &[4], &mu).unwrap();
    assert_eq!(single.slope_e0, None);
    assert!(correspondence_sweep(same, same, &[], &mu).is_err());
}

#[test]
fn log_log_slope_of_power_law() {
    let ms = [4.0, 8.0, 16.0, 32.0];
    let es: Vec<f64> = ms.iter().map(|m: &f64| 3.0 * m.powf(-1.5)).collect();
    assert!((log_log_slope(&ms, &es).unwrap() + 1.5).abs() < 1e-12);
    assert_eq!(log_log_slope(&ms, &[1.0, 0.0, 1.0, 1.0]), None);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn identity_laws((s, ms, mu) in spec_and_matrices(1)) {
        let a = OperatorMatrix::new(s.clone(), ms[0].clone()).unwrap();
        let id = OperatorMatrix::identity(s);
        let diag = symbol_eval(&a, &mu, &mu).unwrap();
        let left = star_product(&id, &a, &mu).unwrap();
        let right = star_product(&a, &id, &mu).unwrap();
        prop_assert!((left - diag).norm() <= 1e-8 * diag.norm().max(1.0));
        prop_assert!((right - diag).norm() <= 1e-8 * diag.norm().max(1.0));
    }

    #[test]
    fn star_matches_matrix_product((s, ms, mu) in spec_and_matrices(2)) {
        let a1 = OperatorMatrix::new(s.clone(), ms[0].clone()).unwrap();
        let a2 = OperatorMatrix::new(s, ms[1].clone()).unwrap();
        let star = star_product(&a1, &a2, &mu).unwrap();
        let exact = symbol_eval(&a1.compose(&a2).unwrap(), &mu, &mu).unwrap();
        prop_assert!((star - exact).norm() <= 1e-6 * exact.norm(), "{} vs {}", star, exact);
    }

    #[test]
    fn star_is_bilinear((s, ms, mu) in spec_and_matrices(3), a in complex(2.0), b in complex(2.0)) {
        let op = |k: usize| OperatorMatrix::new(s.clone(), ms[k].clone()).unwrap();
        let combined = op(0).combine(a, &op(1), b).unwrap();
        let lhs = star_product(&combined, &op(2), &mu).unwrap();
        let rhs = a * star_product(&op(0), &op(2), &mu).unwrap() + b * star_product(&op(1), &op(2), &mu).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
        let lhs = star_product(&op(2), &combined, &mu).unwrap();
        let rhs = a * star_product(&op(2), &op(0), &mu).unwrap() + b * star_product(&op(2), &op(1), &mu).unwrap();
        prop_assert!((lhs - rhs).norm() <= 1e-10 * (1.0 + rhs.norm()));
    }

    #[test]
    fn adjoint_symbol_is_conjugate((s, ms, mu) in spec_and_matrices(1), nu_seed in complex(2.0)) {
        let nu = ChartPoint::new(vec![nu_seed; s.dim()]).unwrap();
        let a = OperatorMatrix::new(s, ms[0].clone()).unwrap();
        let forward = symbol_eval(&a, &mu, &nu);
        prop_assume!(forward.is_ok());
        let forward = forward.unwrap();
        let back = symbol_eval(&a.adjoint(), &nu, &mu).unwrap();
        prop_assert!((back - forward.conj()).norm() <= 1e-12 * (1.0 + forward.norm()));
    }
}
