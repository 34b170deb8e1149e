//! Fubini–Study geometry on the affine chart `U_0 = {[1, mu_1, ..., mu_d]}` of CP^d.
//!
//! Conventions used throughout the crate:
//!
//! * the pairing of two chart points is `1 + mu . conj(nu)`;
//! * the Kähler form is `Omega = i * sum g_ij dmu_i ^ dconj(mu_j)` so its
//!   coefficient matrix is `i * g`;
//! * `|dmu ^ dconj(mu)| = 2^d * prod dx_i dy_i`, which makes the total
//!   volume of CP^1 equal to `2 pi` and the upper hemisphere `|mu| < 1`
//!   carry area `pi`.

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Pairs with `|1 + mu . conj(nu)|` below this are treated as lying on the excluded set.
pub const SINGULAR_PAIR_TOL: f64 = 1e-14;

const FD_RELATIVE_STEP: f64 = 1e-5;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartPoint {
    coords: Vec<Complex64>,
}

impl ChartPoint {
    pub fn new(coords: Vec<Complex64>) -> Result<Self> {
        if coords.is_empty() {
            return Err(Error::InvalidArgument(
                "chart point needs at least one coordinate".into(),
            ));
        }
        if coords.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "chart point has non-finite coordinates: {coords:?}"
            )));
        }
        Ok(Self { coords })
    }

    /// One-dimensional point `z`.
    pub fn scalar(z: Complex64) -> Result<Self> {
        Self::new(vec![z])
    }

    pub fn origin(d: usize) -> Self {
        Self {
            coords: vec![Complex64::new(0.0, 0.0); d.max(1)],
        }
    }

    pub fn dim(&self) -> usize {
        self.coords.len()
    }

    pub fn coords(&self) -> &[Complex64] {
        &self.coords
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.coords)
    }

    fn check_same_dim(&self, other: &ChartPoint) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                actual: other.dim(),
            });
        }
        Ok(())
    }
}

/// The pair `(mu, nu)` together with its pairing `1 + mu . conj(nu)`.
#[derive(Debug, Clone)]
pub struct PairValidity<'a> {
    pub left: &'a ChartPoint,
    pub right: &'a ChartPoint,
    pub pairing: Complex64,
}

impl<'a> PairValidity<'a> {
    pub fn new(left: &'a ChartPoint, right: &'a ChartPoint) -> Result<Self> {
        left.check_same_dim(right)?;
        Ok(Self {
            left,
            right,
            pairing: pairing(left.coords(), right.coords()),
        })
    }

    pub fn is_admissible(&self) -> bool {
        self.pairing.norm() >= SINGULAR_PAIR_TOL
    }

    /// The pairing lies on the cut of the principal logarithm, where
    /// `log(conj(w)) != conj(log(w))`.
    pub fn on_branch_cut(&self) -> bool {
        self.pairing.im == 0.0 && self.pairing.re < 0.0
    }

    fn require_admissible(&self) -> Result<()> {
        if self.is_admissible() {
            Ok(())
        } else {
            Err(Error::SingularPair {
                modulus: self.pairing.norm(),
            })
        }
    }
}

pub(crate) fn norm_sqr(z: &[Complex64]) -> f64 {
    z.iter().map(|c| c.norm_sqr()).sum()
}

/// `1 + sum_i mu_i * conj(nu_i)`.
pub(crate) fn pairing(mu: &[Complex64], nu: &[Complex64]) -> Complex64 {
    mu.iter()
        .zip(nu)
        .fold(Complex64::new(1.0, 0.0), |acc, (a, b)| acc + a * b.conj())
}

/// Principal-branch `ln(1 + mu . conj(nu))`.
pub fn fs_potential(mu: &ChartPoint, nu: &ChartPoint) -> Result<Complex64> {
    let pair = PairValidity::new(mu, nu)?;
    pair.require_admissible()?;
    if std::ptr::eq(mu, nu) || mu == nu {
        return Ok(Complex64::new(mu.norm_sqr().ln_1p(), 0.0));
    }
    Ok(pair.pairing.ln())
}

/// `g_ij = [(1+|mu|^2) delta_ij - conj(mu_i) mu_j] / (1+|mu|^2)^2`.
pub fn fs_metric(mu: &ChartPoint) -> DMatrix<Complex64> {
    let z = mu.coords();
    let d = z.len();
    let s = 1.0 + mu.norm_sqr();
    DMatrix::from_fn(d, d, |i, j| {
        let delta = if i == j { s } else { 0.0 };
        (Complex64::new(delta, 0.0) - z[i].conj() * z[j]) / (s * s)
    })
}

/// Coefficient matrix of the Kähler form, `i * g`.
pub fn fs_form(mu: &ChartPoint) -> DMatrix<Complex64> {
    fs_metric(mu) * Complex64::i()
}

/// Inverse of [`fs_form`], in closed form: `-i (1+|mu|^2) (delta_ij + conj(mu_i) mu_j)`.
pub fn fs_form_inverse(mu: &ChartPoint) -> DMatrix<Complex64> {
    let z = mu.coords();
    let d = z.len();
    let s = 1.0 + mu.norm_sqr();
    DMatrix::from_fn(d, d, |i, j| {
        let delta = if i == j { 1.0 } else { 0.0 };
        -Complex64::i() * s * (Complex64::new(delta, 0.0) + z[i].conj() * z[j])
    })
}

/// Fubini–Study volume factor `(1+|mu|^2)^-(d+1)` relative to `|dmu ^ dconj(mu)|`.
pub fn volume_density(mu: &ChartPoint) -> f64 {
    fs_volume_factor(mu.coords())
}

/// Density of `dV` against Lebesgue measure `prod dx_i dy_i`.
pub fn lebesgue_volume_density(mu: &ChartPoint) -> f64 {
    2f64.powi(mu.dim() as i32) * volume_density(mu)
}

pub(crate) fn fs_volume_factor(z: &[Complex64]) -> f64 {
    (1.0 + norm_sqr(z)).powi(-(z.len() as i32 + 1))
}

/// Two-point diastasis `ln(|1 + mu.conj(nu)|^2 / ((1+|mu|^2)(1+|nu|^2)))`.
///
/// Evaluated as `ln(1 - D / ((1+|mu|^2)(1+|nu|^2)))` where
/// `D = |mu - nu|^2 + sum_{i<j} |mu_i nu_j - mu_j nu_i|^2` is the exact
/// numerator deficit (Lagrange identity), so the result is never positive
/// and is exactly zero on the diagonal.
pub fn diastasis(mu: &ChartPoint, nu: &ChartPoint) -> Result<f64> {
    let pair = PairValidity::new(mu, nu)?;
    pair.require_admissible()?;
    Ok(diastasis_raw(mu.coords(), nu.coords()))
}

pub(crate) fn diastasis_raw(mu: &[Complex64], nu: &[Complex64]) -> f64 {
    let mut deficit: f64 = mu.iter().zip(nu).map(|(a, b)| (a - b).norm_sqr()).sum();
    for i in 0..mu.len() {
        for j in (i + 1)..mu.len() {
            deficit += (mu[i] * nu[j] - mu[j] * nu[i]).norm_sqr();
        }
    }
    let scale = (1.0 + norm_sqr(mu)) * (1.0 + norm_sqr(nu));
    (-deficit / scale).ln_1p()
}

/// Holomorphic and antiholomorphic first derivatives of a scalar field.
#[derive(Debug, Clone, PartialEq)]
pub struct Wirtinger {
    /// `df / dmu_k`
    pub holo: Vec<Complex64>,
    /// `df / dconj(mu_k)`
    pub anti: Vec<Complex64>,
}

/// A complex-valued function on the chart.
pub trait ScalarField: Sync {
    fn value(&self, mu: &[Complex64]) -> Complex64;

    /// Analytic Wirtinger derivatives, when known.
    fn wirtinger(&self, _mu: &[Complex64]) -> Option<Wirtinger> {
        None
    }
}

impl<F> ScalarField for F
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
{
    fn value(&self, mu: &[Complex64]) -> Complex64 {
        self(mu)
    }
}

/// Central-difference step used for Wirtinger derivatives at `mu`.
pub fn fd_step(mu: &[Complex64]) -> f64 {
    FD_RELATIVE_STEP * norm_sqr(mu).sqrt().max(1.0)
}

/// Wirtinger derivatives, analytic when the field provides them, otherwise
/// by central differences along each real direction.
pub fn wirtinger<F: ScalarField + ?Sized>(f: &F, mu: &[Complex64]) -> Result<Wirtinger> {
    if let Some(w) = f.wirtinger(mu) {
        return Ok(w);
    }
    let h = fd_step(mu);
    let d = mu.len();
    let mut holo = Vec::with_capacity(d);
    let mut anti = Vec::with_capacity(d);
    let mut probe = mu.to_vec();
    let mut eval = |k: usize, shift: Complex64| -> Result<Complex64> {
        probe[k] = mu[k] + shift;
        let v = f.value(&probe);
        probe[k] = mu[k];
        if v.re.is_finite() && v.im.is_finite() {
            Ok(v)
        } else {
            Err(Error::DerivativeFailure(format!(
                "coordinate {k} shifted by {shift} from {mu:?}"
            )))
        }
    };
    for k in 0..d {
        let dx = (eval(k, Complex64::new(h, 0.0))? - eval(k, Complex64::new(-h, 0.0))?) / (2.0 * h);
        let dy = (eval(k, Complex64::new(0.0, h))? - eval(k, Complex64::new(0.0, -h))?) / (2.0 * h);
        holo.push((dx - Complex64::i() * dy) * 0.5);
        anti.push((dx + Complex64::i() * dy) * 0.5);
    }
    Ok(Wirtinger { holo, anti })
}

/// Poisson bracket `{t, s}(mu) = sum_ij W_ji (dt/dconj(mu_j) ds/dmu_i - ds/dconj(mu_j) dt/dmu_i)`
/// with `W` the inverse form matrix. The transposed index on `W` keeps the
/// bracket antisymmetric for `d > 1`; for `d = 1` the placement is immaterial.
pub fn poisson_bracket<T, S>(t: &T, s: &S, mu: &ChartPoint) -> Result<Complex64>
where
    T: ScalarField + ?Sized,
    S: ScalarField + ?Sized,
{
    let z = mu.coords();
    let dt = wirtinger(t, z)?;
    let ds = wirtinger(s, z)?;
    Ok(bracket_from_derivatives(&fs_form_inverse(mu), &dt, &ds))
}

pub(crate) fn bracket_from_derivatives(
    inverse_form: &DMatrix<Complex64>,
    dt: &Wirtinger,
    ds: &Wirtinger,
) -> Complex64 {
    let d = dt.holo.len();
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..d {
        for j in 0..d {
            acc += inverse_form[(j, i)] * (dt.anti[j] * ds.holo[i] - ds.anti[j] * dt.holo[i]);
        }
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn pt(z: &[Complex64]) -> ChartPoint {
        ChartPoint::new(z.to_vec()).unwrap()
    }

    #[test]
    fn potential_examples() {
        let o = ChartPoint::origin(1);
        assert_eq!(fs_potential(&o, &o).unwrap(), c(0.0, 0.0));
        let one = pt(&[c(1.0, 0.0)]);
        assert!((fs_potential(&one, &one).unwrap() - c(2f64.ln(), 0.0)).norm() < 1e-15);
        let minus = pt(&[c(-1.0, 0.0)]);
        assert!(matches!(
            fs_potential(&one, &minus),
            Err(Error::SingularPair { .. })
        ));
        let two = ChartPoint::origin(2);
        assert!(matches!(
            fs_potential(&one, &two),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn chart_point_rejects_nan() {
        assert!(ChartPoint::new(vec![c(f64::NAN, 0.0)]).is_err());
        assert!(ChartPoint::new(vec![]).is_err());
    }

    #[test]
    fn metric_examples() {
        let g = fs_metric(&ChartPoint::origin(1));
        assert_eq!(g[(0, 0)], c(1.0, 0.0));
        let g = fs_metric(&pt(&[c(1.0, 0.0)]));
        assert!((g[(0, 0)] - c(0.25, 0.0)).norm() < 1e-15);
    }

    /// Second-order central differences of the diagonal potential.
    fn fd_metric(z: &[Complex64]) -> DMatrix<Complex64> {
        let d = z.len();
        let h = 1e-4;
        let phi = |w: &[Complex64]| (1.0 + norm_sqr(w)).ln();
        // d^2/dmu_i dconj(mu_j) = 1/4 (dx_i - i dy_i)(dx_j + i dy_j)
        let shift = |w: &mut Vec<Complex64>, k: usize, dir: Complex64| w[k] += dir;
        let second = |i: usize, a: Complex64, j: usize, b: Complex64| {
            let mut acc = 0.0;
            for (si, sj, sign) in [(1.0, 1.0, 1.0), (1.0, -1.0, -1.0), (-1.0, 1.0, -1.0), (-1.0, -1.0, 1.0)] {
                let mut w = z.to_vec();
                shift(&mut w, i, a * (si * h));
                shift(&mut w, j, b * (sj * h));
                acc += sign * phi(&w);
            }
            acc / (4.0 * h * h)
        };
        let x = c(1.0, 0.0);
        let y = c(0.0, 1.0);
        DMatrix::from_fn(d, d, |i, j| {
            let xx = second(i, x, j, x);
            let yy = second(i, y, j, y);
            let xy = second(i, x, j, y);
            let yx = second(i, y, j, x);
            // (dx_i - i dy_i)(dx_j + i dy_j) = xx + yy + i (xy - yx)
            c(xx + yy, xy - yx) * 0.25
        })
    }

    #[test]
    fn metric_matches_finite_differences() {
        for z in [vec![c(1.0, 0.0), c(0.0, 0.0)], vec![c(0.3, -0.7), c(-1.1, 0.4)]] {
            let g = fs_metric(&pt(&z));
            let fd = fd_metric(&z);
            assert!((g - fd).camax() < 1e-6);
        }
    }

    #[test]
    fn form_inverse_multiplies_back() {
        let o = ChartPoint::origin(1);
        assert!((fs_form_inverse(&o)[(0, 0)] - Complex64::new(1.0, 0.0) / fs_form(&o)[(0, 0)]).norm() < 1e-15);
        let one = pt(&[c(1.0, 0.0)]);
        assert!((fs_form_inverse(&one)[(0, 0)] * fs_form(&one)[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
        let mu = pt(&[c(0.8, -1.3), c(2.1, 0.5)]);
        let prod = fs_form(&mu) * fs_form_inverse(&mu);
        assert!((prod - DMatrix::identity(2, 2)).camax() < 1e-12);
    }

    #[test]
    fn volume_examples() {
        let o = ChartPoint::origin(1);
        assert_eq!(volume_density(&o), 1.0);
        assert_eq!(lebesgue_volume_density(&o), 2.0);
        assert_eq!(volume_density(&pt(&[c(1.0, 0.0)])), 0.25);
    }

    #[test]
    fn diastasis_examples() {
        let mu = pt(&[c(0.4, -2.0)]);
        assert_eq!(diastasis(&mu, &mu).unwrap(), 0.0);
        let d = diastasis(&ChartPoint::origin(1), &pt(&[c(1.0, 0.0)])).unwrap();
        assert!((d - 0.5f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn diastasis_matches_log_form() {
        let mu = pt(&[c(0.4, -1.0), c(0.2, 0.3)]);
        let nu = pt(&[c(-0.5, 0.1), c(1.2, -0.9)]);
        let p = pairing(mu.coords(), nu.coords());
        let direct = p.norm_sqr().ln() - mu.norm_sqr().ln_1p() - nu.norm_sqr().ln_1p();
        assert!((diastasis(&mu, &nu).unwrap() - direct).abs() < 1e-14);
    }

    #[test]
    fn bracket_of_re_im_at_origin() {
        // W = (i g)^-1 = -i at the origin; d Re z = d conj Re z = 1/2, d Im z = -i/2, dbar Im z = i/2.
        // {Re, Im} = -i * (1/2 * (-i/2) - (i/2) * 1/2) = -i * (-i/2) = -1/2
        let re = |z: &[Complex64]| c(z[0].re, 0.0);
        let im = |z: &[Complex64]| c(z[0].im, 0.0);
        let b = poisson_bracket(&re, &im, &ChartPoint::origin(1)).unwrap();
        assert!((b - c(-0.5, 0.0)).norm() < 1e-9, "{b}");
    }

    #[test]
    fn bracket_flags_non_finite_stencil() {
        let bad = |z: &[Complex64]| if z[0].re > 0.0 { c(f64::NAN, 0.0) } else { c(0.0, 0.0) };
        let id = |z: &[Complex64]| z[0];
        let err = poisson_bracket(&bad, &id, &ChartPoint::origin(1));
        assert!(matches!(err, Err(Error::DerivativeFailure(_))));
    }

    #[test]
    fn branch_cut_is_flagged() {
        let mu = pt(&[c(2.0, 0.0)]);
        let nu = pt(&[c(-1.0, 0.0)]);
        let pair = PairValidity::new(&mu, &nu).unwrap();
        assert!(pair.is_admissible());
        assert!(pair.on_branch_cut());
    }
}
