mod common;

use berezin::geometry::ChartPoint;
use berezin::hilbert::*;
use common::*;
use num_complex::Complex64;
use proptest::prelude::*;
use std::sync::Arc;

fn binomial(n: u64, k: u64) -> u64 {
    (1..=k).fold(1, |acc, i| acc * (n - k + i) / i)
}

#[test]
fn dimension_is_binomial() {
    for d in 1..=4 {
        for m in 0..=12 {
            assert_eq!(dimension(d, m), binomial(m as u64 + d as u64, d as u64) as usize);
            assert_eq!(enumerate_indices(d, m).len(), dimension(d, m));
        }
    }
    assert_eq!(BasisSpec::with_default_level(2, 16).unwrap().len(), 153);
}

#[test]
fn basis_document_round_trip() {
    let spec = BasisSpec::with_default_level(2, 3).unwrap();
    let doc = spec.document();
    let text = serde_json::to_string(&doc).unwrap();
    let back: BasisDocument = serde_json::from_str(&text).unwrap();
    assert_eq!(doc, back);
    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(value["N"], 10);
}

#[test]
fn coherent_examples() {
    let spec = BasisSpec::with_default_level(1, 2).unwrap();
    let i = ChartPoint::scalar(c(0.0, 1.0)).unwrap();
    assert!((coherent_eval(&spec, &i, &i).unwrap() - c(4.0, 0.0)).norm() < 1e-15);
    let zero = ChartPoint::origin(1);
    let nu = ChartPoint::scalar(c(1.3, -0.2)).unwrap();
    assert_eq!(coherent_eval(&spec, &zero, &nu).unwrap(), c(1.0, 0.0));
    assert_eq!(kernel_l(&spec, &zero, &zero).unwrap(), c(1.0, 0.0));
}

#[test]
fn kernel_log_matches_diastasis() {
    let spec = BasisSpec::with_default_level(2, 6).unwrap();
    let mu = ChartPoint::new(vec![c(0.4, 0.1), c(-0.3, 0.8)]).unwrap();
    let nu = ChartPoint::new(vec![c(1.1, -0.5), c(0.2, 0.2)]).unwrap();
    let l = |a: &ChartPoint, b: &ChartPoint| kernel_l(&spec, a, b).unwrap();
    let ratio = l(&mu, &nu) * l(&nu, &mu) / (l(&mu, &mu) * l(&nu, &nu));
    let expected = (6.0 * berezin::geometry::diastasis(&mu, &nu).unwrap()).exp();
    assert!((ratio - c(expected, 0.0)).norm() < 1e-10);
    let big = ChartPoint::scalar(c(1e200, 0.0)).unwrap();
    let spec1 = BasisSpec::with_default_level(1, 64).unwrap();
    let log = kernel_l_log(&spec1, &big, &big).unwrap();
    assert!(log.re.is_finite() && (log.re - 128.0 * 1e200f64.ln()).abs() < 1e-9 * log.re);
}

#[test]
fn coherent_state_resolution() {
    let spec = BasisSpec::with_default_level(1, 6).unwrap();
    let nu = [c(0.7, -0.4)];
    let psi = HilbertVector::coherent(&spec, &nu);
    let defect = resolution_check(&spec, &psi, &psi).unwrap();
    let scale = (1.0 + nu[0].norm_sqr()).powi(6);
    assert!(defect <= 1e-8 * scale);
    assert!((psi.norm_sqr() - scale).abs() < 1e-10 * scale);
}

#[test]
fn zero_vector_residuals() {
    let spec = BasisSpec::with_default_level(1, 4).unwrap();
    let zero = HilbertVector::zeros(spec.len());
    let mu = ChartPoint::scalar(c(0.2, 0.9)).unwrap();
    assert_eq!(reproducing_residual(&spec, &zero, &mu).unwrap(), 0.0);
}

#[test]
fn numeric_norms_match_closed_form() {
    for (d, m) in [(1, 10), (2, 5)] {
        let spec = BasisSpec::with_default_level(d, m).unwrap();
        for (a, b) in spec.numeric_norms().unwrap().iter().zip(spec.norms()) {
            assert!((a - b).abs() < 1e-10 * b);
        }
    }
}

fn spec_strategy() -> impl Strategy<Value = Arc<BasisSpec>> {
    prop_oneof![
        (1u32..=16).prop_map(|m| Arc::new(BasisSpec::with_default_level(1, m).unwrap())),
        (1u32..=6).prop_map(|m| Arc::new(BasisSpec::with_default_level(2, m).unwrap())),
    ]
}

fn spec_and_vector() -> impl Strategy<Value = (Arc<BasisSpec>, HilbertVector)> {
    spec_strategy().prop_flat_map(|s| {
        let n = s.len();
        (Just(s), cvec(n, 1.0).prop_map(HilbertVector::new))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn parseval((spec, v) in spec_and_vector()) {
        let s = spec.clone();
        let w = v.clone();
        let numeric = inner_product(&spec, |z: &[Complex64]| w.eval(&s, z), |z: &[Complex64]| w.eval(&s, z)).unwrap();
        prop_assert!((numeric.re - v.norm_sqr()).abs() <= 1e-8 * v.norm_sqr().max(1.0));
        prop_assert!(numeric.im.abs() <= 1e-8 * v.norm_sqr().max(1.0));
    }

    #[test]
    fn reproducing_property((spec, v) in spec_and_vector(), mu in complex(2.0), mu2 in complex(2.0)) {
        let z = if spec.dim() == 1 { vec![mu] } else { vec![mu, mu2] };
        let p = ChartPoint::new(z).unwrap();
        let r = reproducing_residual(&spec, &v, &p).unwrap();
        prop_assert!(r <= 1e-8 * (1.0 + v.eval(&spec, p.coords()).norm()));
    }

    #[test]
    fn kernel_positive_and_hermitian(
        m in 1u32..=32,
        (mu, nu) in (1usize..=2).prop_flat_map(|d| (coords(d, 10.0), coords(d, 10.0))),
    ) {
        let d = mu.len();
        let spec = BasisSpec::build(d, m, 1).unwrap();
        let a = ChartPoint::new(mu).unwrap();
        let b = ChartPoint::new(nu).unwrap();
        let diag = kernel_l(&spec, &a, &a).unwrap();
        let expected = (1.0 + a.norm_sqr()).powi(m as i32);
        prop_assert!(diag.re > 0.0 && diag.im == 0.0);
        prop_assert!((diag.re - expected).abs() <= 1e-12 * expected);
        prop_assert_eq!(kernel_l(&spec, &a, &b).unwrap(), kernel_l(&spec, &b, &a).unwrap().conj());
    }

    #[test]
    fn basis_sum_matches_closed_form(
        m in 1u32..=16,
        (mu, nu) in (1usize..=2).prop_flat_map(|d| (coords(d, 2.0), coords(d, 2.0))),
    ) {
        let spec = BasisSpec::build(mu.len(), m, 1).unwrap();
        let a = ChartPoint::new(mu).unwrap();
        let b = ChartPoint::new(nu).unwrap();
        let closed = coherent_eval(&spec, &a, &b).unwrap();
        let sum: Complex64 = spec
            .basis_values(a.coords())
            .iter()
            .zip(spec.basis_values(b.coords()))
            .map(|(x, y)| x.conj() * y)
            .sum();
        let scale = (1.0 + (a.norm_sqr() * b.norm_sqr()).sqrt()).powi(m as i32);
        prop_assert!((sum - closed).norm() <= 1e-8 * closed.norm().max(1e-300) || (sum - closed).norm() <= 1e-14 * scale,
            "sum {} closed {}", sum, closed);
    }
}
