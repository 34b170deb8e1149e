//! Bounded test functions on the chart.
//!
//! Every member is rational in `(mu, conj(mu))` and extends continuously to
//! projective space, so `sup |f|` is finite. With `s = 1 + |mu|^2`:
//!
//! | id      | f            | limit at infinity |
//! |---------|--------------|-------------------|
//! | `one`   | 1            | 1                 |
//! | `re_z`  | Re mu_1 / s  | 0                 |
//! | `im_z`  | Im mu_1 / s  | 0                 |
//! | `abs2`  | \|mu\|^2 / s | 1                 |
//! | `bump`  | 1 / s        | 0                 |
//! | `re_bump` | Re mu_1 / s^2 | 0                |
//! | `im_bump` | Im mu_1 / s^2 | 0                |
//!
//! Each is also the diagonal of a sesquiholomorphic function
//! `P(mu, conj(nu)) / (1 + mu . conj(nu))^k` with `P` of degree `<= k` in
//! each argument, so it is exactly the covariant symbol of an operator at
//! every level `m >= k` (see [`SesquiPolynomial`]).

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{bracket_from_derivatives, fs_form_inverse, ChartPoint, ScalarField, Wirtinger};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TestFunction {
    One,
    ReZ,
    ImZ,
    Abs2,
    Bump,
    ReBump,
    ImBump,
}

impl TestFunction {
    pub const ALL: [TestFunction; 7] = [
        TestFunction::One,
        TestFunction::ReZ,
        TestFunction::ImZ,
        TestFunction::Abs2,
        TestFunction::Bump,
        TestFunction::ReBump,
        TestFunction::ImBump,
    ];

    pub fn id(self) -> &'static str {
        match self {
            TestFunction::One => "one",
            TestFunction::ReZ => "re_z",
            TestFunction::ImZ => "im_z",
            TestFunction::Abs2 => "abs2",
            TestFunction::Bump => "bump",
            TestFunction::ReBump => "re_bump",
            TestFunction::ImBump => "im_bump",
        }
    }

    /// Integer code used across the C interface.
    pub fn code(self) -> u32 {
        match self {
            TestFunction::One => 0,
            TestFunction::ReZ => 1,
            TestFunction::ImZ => 2,
            TestFunction::Abs2 => 3,
            TestFunction::Bump => 4,
            TestFunction::ReBump => 5,
            TestFunction::ImBump => 6,
        }
    }

    pub fn from_code(code: u32) -> Option<Self> {
        Self::ALL.into_iter().find(|f| f.code() == code)
    }

    pub fn limit_at_infinity(self) -> f64 {
        match self {
            TestFunction::One | TestFunction::Abs2 => 1.0,
            _ => 0.0,
        }
    }

    /// Exact `sup |f|` over projective space.
    pub fn sup_norm(self) -> f64 {
        match self {
            TestFunction::One | TestFunction::Abs2 | TestFunction::Bump => 1.0,
            TestFunction::ReZ | TestFunction::ImZ => 0.5,
            // x / (1 + x^2)^2 peaks at x = 1/sqrt(3)
            TestFunction::ReBump | TestFunction::ImBump => 3.0f64.sqrt() * 3.0 / 16.0,
        }
    }

    /// Numerator and denominator power of the sesquiholomorphic extension in `d` variables.
    pub fn sesqui(self, d: usize) -> SesquiPolynomial {
        let zero = vec![0u32; d];
        let mut e1 = zero.clone();
        e1[0] = 1;
        let half = Complex64::new(0.5, 0.0);
        let half_i = Complex64::new(0.0, 0.5);
        let mu1 = (e1.clone(), zero.clone());
        let nu1 = (zero.clone(), e1.clone());
        let (terms, order) = match self {
            TestFunction::One => (vec![(zero.clone(), zero.clone(), Complex64::new(1.0, 0.0))], 0),
            TestFunction::ReZ => (vec![(mu1.0, mu1.1, half), (nu1.0, nu1.1, half)], 1),
            TestFunction::ImZ => (vec![(mu1.0, mu1.1, -half_i), (nu1.0, nu1.1, half_i)], 1),
            TestFunction::Abs2 => (
                (0..d)
                    .map(|j| {
                        let mut e = zero.clone();
                        e[j] = 1;
                        (e.clone(), e, Complex64::new(1.0, 0.0))
                    })
                    .collect(),
                1,
            ),
            TestFunction::Bump => (vec![(zero.clone(), zero.clone(), Complex64::new(1.0, 0.0))], 1),
            TestFunction::ReBump => (vec![(mu1.0, mu1.1, half), (nu1.0, nu1.1, half)], 2),
            TestFunction::ImBump => (vec![(mu1.0, mu1.1, -half_i), (nu1.0, nu1.1, half_i)], 2),
        };
        SesquiPolynomial { d, terms, order }
    }
}

impl fmt::Display for TestFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.id())
    }
}

impl FromStr for TestFunction {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|f| f.id() == s)
            .ok_or_else(|| {
                let known: Vec<&str> = Self::ALL.iter().map(|f| f.id()).collect();
                Error::InvalidArgument(format!(
                    "unknown function id `{s}` (expected one of {})",
                    known.join(", ")
                ))
            })
    }
}

impl ScalarField for TestFunction {
    fn value(&self, mu: &[Complex64]) -> Complex64 {
        let s = 1.0 + crate::geometry::norm_sqr(mu);
        let z = mu[0];
        let v = match self {
            TestFunction::One => 1.0,
            TestFunction::ReZ => z.re / s,
            TestFunction::ImZ => z.im / s,
            TestFunction::Abs2 => (s - 1.0) / s,
            TestFunction::Bump => 1.0 / s,
            TestFunction::ReBump => z.re / (s * s),
            TestFunction::ImBump => z.im / (s * s),
        };
        Complex64::new(v, 0.0)
    }

    fn wirtinger(&self, mu: &[Complex64]) -> Option<Wirtinger> {
        let d = mu.len();
        let s = 1.0 + crate::geometry::norm_sqr(mu);
        let s2 = s * s;
        let s3 = s2 * s;
        let z = mu[0];
        let i = Complex64::i();
        let delta = |j: usize| if j == 0 { 1.0 } else { 0.0 };
        let (holo, anti): (Vec<Complex64>, Vec<Complex64>) = (0..d)
            .map(|j| {
                let mj = mu[j];
                match self {
                    TestFunction::One => (Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)),
                    TestFunction::ReZ => (
                        Complex64::new(0.5 * delta(j) / s, 0.0) - mj.conj() * (z.re / s2),
                        Complex64::new(0.5 * delta(j) / s, 0.0) - mj * (z.re / s2),
                    ),
                    TestFunction::ImZ => (
                        -i * (0.5 * delta(j) / s) - mj.conj() * (z.im / s2),
                        i * (0.5 * delta(j) / s) - mj * (z.im / s2),
                    ),
                    TestFunction::Abs2 => (mj.conj() / s2, mj / s2),
                    TestFunction::Bump => (-mj.conj() / s2, -mj / s2),
                    TestFunction::ReBump => (
                        Complex64::new(0.5 * delta(j) / s2, 0.0) - mj.conj() * (2.0 * z.re / s3),
                        Complex64::new(0.5 * delta(j) / s2, 0.0) - mj * (2.0 * z.re / s3),
                    ),
                    TestFunction::ImBump => (
                        -i * (0.5 * delta(j) / s2) - mj.conj() * (2.0 * z.im / s3),
                        i * (0.5 * delta(j) / s2) - mj * (2.0 * z.im / s3),
                    ),
                }
            })
            .unzip();
        Some(Wirtinger { holo, anti })
    }
}

/// `P(mu, conj(nu)) / (1 + mu . conj(nu))^order`, with `P` a sum of terms
/// `coeff * mu^a * conj(nu)^b`.
#[derive(Debug, Clone, PartialEq)]
pub struct SesquiPolynomial {
    pub d: usize,
    pub terms: Vec<(Vec<u32>, Vec<u32>, Complex64)>,
    pub order: u32,
}

impl SesquiPolynomial {
    /// Value at `(mu, conj(nu))`.
    pub fn eval(&self, mu: &[Complex64], nu: &[Complex64]) -> Complex64 {
        let nu_bar: Vec<Complex64> = nu.iter().map(|z| z.conj()).collect();
        let mono = |e: &[u32], z: &[Complex64]| {
            e.iter()
                .zip(z)
                .fold(Complex64::new(1.0, 0.0), |acc, (&q, w)| acc * w.powu(q))
        };
        let p: Complex64 = self
            .terms
            .iter()
            .map(|(a, b, c)| c * mono(a, mu) * mono(b, &nu_bar))
            .sum();
        p / crate::geometry::pairing(mu, nu).powu(self.order)
    }

    /// Largest total degree of `P` in either argument.
    pub fn degree(&self) -> u32 {
        self.terms
            .iter()
            .map(|(a, b, _)| a.iter().sum::<u32>().max(b.iter().sum()))
            .max()
            .unwrap_or(0)
    }
}

/// Pointwise Poisson bracket `{f, g}` as a field in its own right.
pub struct Bracket<'a, F: ?Sized, G: ?Sized> {
    pub f: &'a F,
    pub g: &'a G,
}

impl<F, G> ScalarField for Bracket<'_, F, G>
where
    F: ScalarField + ?Sized,
    G: ScalarField + ?Sized,
{
    fn value(&self, mu: &[Complex64]) -> Complex64 {
        let point = match ChartPoint::new(mu.to_vec()) {
            Ok(p) => p,
            Err(_) => return Complex64::new(f64::NAN, f64::NAN),
        };
        let (df, dg) = match (
            crate::geometry::wirtinger(self.f, mu),
            crate::geometry::wirtinger(self.g, mu),
        ) {
            (Ok(a), Ok(b)) => (a, b),
            _ => return Complex64::new(f64::NAN, f64::NAN),
        };
        bracket_from_derivatives(&fs_form_inverse(&point), &df, &dg)
    }
}

/// Grid estimate of `sup |f|` over the chart closure.
///
/// Each coordinate runs over a polar grid whose radius is compactified as
/// `u = r^2 / (1 + r^2)` with `u` uniform in `[0, 1)`; `limit` is the value at
/// chart infinity, when known.
pub fn sup_estimate<F>(f: &F, d: usize, radial: usize, angular: usize, limit: Option<f64>) -> f64
where
    F: ScalarField + ?Sized,
{
    let samples: Vec<Complex64> = (0..radial)
        .flat_map(|a| {
            let u = a as f64 / radial as f64;
            let r = (u / (1.0 - u)).sqrt();
            (0..angular).map(move |b| {
                Complex64::from_polar(r, 2.0 * std::f64::consts::PI * b as f64 / angular as f64)
            })
        })
        .collect();
    let per_axis = samples.len();
    let total = per_axis.pow(d as u32);
    let best = (0..total)
        .into_par_iter()
        .map(|mut k| {
            let mut mu = Vec::with_capacity(d);
            for _ in 0..d {
                mu.push(samples[k % per_axis]);
                k /= per_axis;
            }
            let v = f.value(&mu).norm();
            if v.is_finite() {
                v
            } else {
                0.0
            }
        })
        .reduce(|| 0.0, f64::max);
    best.max(limit.unwrap_or(0.0))
}

/// `sup_estimate` with the resolution used by the sweeps.
pub fn default_sup_estimate(f: TestFunction, d: usize) -> f64 {
    let (radial, angular) = if d == 1 { (2048, 256) } else { (48, 16) };
    sup_estimate(&f, d, radial, angular, Some(f.limit_at_infinity()))
}
