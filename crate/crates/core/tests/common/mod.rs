#![allow(dead_code)]

use berezin::geometry::ChartPoint;
use num_complex::Complex64;
use proptest::prelude::*;

pub fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Complex number with modulus at most `r`.
pub fn complex(r: f64) -> impl Strategy<Value = Complex64> {
    (0.0..=1.0f64, 0.0..std::f64::consts::TAU).prop_map(move |(s, t)| Complex64::from_polar(r * s.sqrt(), t))
}

pub fn coords(d: usize, r: f64) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec(complex(r), d)
}

pub fn point(d: usize, r: f64) -> impl Strategy<Value = ChartPoint> {
    coords(d, r).prop_map(|v| ChartPoint::new(v).unwrap())
}

pub fn cvec(n: usize, r: f64) -> impl Strategy<Value = Vec<Complex64>> {
    proptest::collection::vec((-r..=r, -r..=r).prop_map(|(a, b)| c(a, b)), n)
}
