//! Covariant symbols of operators on the level-`m` space, the star product,
//! and the correspondence-principle sweep.
//!
//! Operators are carried as matrices `A_IJ = <Psi_I, A Psi_J>`. With unit
//! coherent vectors `e_mu = psi_mu / |psi_mu|` the symbol is
//!
//! ```text
//! A(nu, conj(mu)) = (e_nu^H A e_mu) / (e_nu^H e_mu)
//! ```
//!
//! which stays finite for large `m` and large radii.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{norm_sqr, poisson_bracket, ChartPoint};
use crate::functions::SesquiPolynomial;
use crate::hilbert::{BasisSpec, HilbertVector, MultiIndex};

/// `|L_m(nu, conj(mu))| / (|psi_nu| |psi_mu|)` below this raises `DegenerateKernel`.
pub const DEGENERATE_KERNEL_TOL: f64 = 1e-14;

/// Integration nodes whose normalized pairing with the base point falls
/// below this are nudged off the degenerate set.
pub const JITTER_TOL: f64 = 1e-12;

const JITTER_SCALE: f64 = 1e-9;
const JITTER_STEPS: u32 = 64;

#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    spec: Arc<BasisSpec>,
    entries: DMatrix<Complex64>,
}

impl OperatorMatrix {
    pub fn new(spec: Arc<BasisSpec>, entries: DMatrix<Complex64>) -> Result<Self> {
        let n = spec.len();
        if entries.nrows() != n || entries.ncols() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: entries.nrows().max(entries.ncols()),
            });
        }
        if entries.iter().any(|z| !(z.re.is_finite() && z.im.is_finite())) {
            return Err(Error::InvalidArgument("operator matrix has non-finite entries".into()));
        }
        Ok(Self { spec, entries })
    }

    pub fn identity(spec: Arc<BasisSpec>) -> Self {
        let n = spec.len();
        Self {
            spec,
            entries: DMatrix::identity(n, n),
        }
    }

    /// `|Psi_i><Psi_j|`
    pub fn rank_one(spec: Arc<BasisSpec>, i: usize, j: usize) -> Result<Self> {
        let n = spec.len();
        if i >= n || j >= n {
            return Err(Error::InvalidArgument(format!(
                "basis positions ({i}, {j}) out of range for N = {n}"
            )));
        }
        let mut entries = DMatrix::zeros(n, n);
        entries[(i, j)] = Complex64::new(1.0, 0.0);
        Ok(Self { spec, entries })
    }

    pub fn spec(&self) -> &Arc<BasisSpec> {
        &self.spec
    }

    pub fn entries(&self) -> &DMatrix<Complex64> {
        &self.entries
    }

    pub fn into_entries(self) -> DMatrix<Complex64> {
        self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn adjoint(&self) -> Self {
        Self {
            spec: self.spec.clone(),
            entries: self.entries.adjoint(),
        }
    }

    pub fn scale(&self, c: Complex64) -> Self {
        Self {
            spec: self.spec.clone(),
            entries: &self.entries * c,
        }
    }

    /// `a * self + b * other`
    pub fn combine(&self, a: Complex64, other: &Self, b: Complex64) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            spec: self.spec.clone(),
            entries: &self.entries * a + &other.entries * b,
        })
    }

    /// Matrix of `self o other`.
    pub fn compose(&self, other: &Self) -> Result<Self> {
        self.check_same(other)?;
        Ok(Self {
            spec: self.spec.clone(),
            entries: &self.entries * &other.entries,
        })
    }

    pub fn commutator(&self, other: &Self) -> Result<Self> {
        let ab = self.compose(other)?;
        let ba = other.compose(self)?;
        ab.combine(Complex64::new(1.0, 0.0), &ba, Complex64::new(-1.0, 0.0))
    }

    pub fn apply(&self, v: &HilbertVector) -> Result<HilbertVector> {
        if v.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: v.len(),
            });
        }
        Ok(HilbertVector {
            coeffs: &self.entries * &v.coeffs,
        })
    }

    fn check_same(&self, other: &Self) -> Result<()> {
        if Arc::ptr_eq(&self.spec, &other.spec)
            || (self.spec.dim() == other.spec.dim() && self.spec.level() == other.spec.level())
        {
            Ok(())
        } else {
            Err(Error::DimensionMismatch {
                expected: self.len(),
                actual: other.len(),
            })
        }
    }
}

/// Normalized kernel `L_m(nu, conj(mu)) / (|psi_nu| |psi_mu|)` in closed form.
fn normalized_kernel(m: u32, nu: &[Complex64], mu: &[Complex64]) -> Complex64 {
    unit_pairing(nu, mu).powu(m)
}

/// `(1 + nu . conj(mu)) / sqrt((1 + |nu|^2)(1 + |mu|^2))`, computed on rescaled
/// coordinates so that it stays finite for arbitrarily large points.
fn unit_pairing(nu: &[Complex64], mu: &[Complex64]) -> Complex64 {
    let scale = |v: &[Complex64]| v.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let (a, b) = (scale(nu), scale(mu));
    let num = Complex64::new(1.0 / (a * b), 0.0)
        + nu.iter().zip(mu).map(|(x, y)| (x / a) * (y / b).conj()).sum::<Complex64>();
    let weight = |v: &[Complex64], s: f64| 1.0 / (s * s) + v.iter().map(|z| (z / s).norm_sqr()).sum::<f64>();
    let den = (weight(nu, a) * weight(mu, b)).sqrt();
    num / den
}

/// Covariant symbol of an operator matrix.
#[derive(Debug, Clone)]
pub struct CovariantSymbol {
    source: OperatorMatrix,
}

impl CovariantSymbol {
    pub fn new(source: OperatorMatrix) -> Self {
        Self { source }
    }

    pub fn source(&self) -> &OperatorMatrix {
        &self.source
    }

    /// `e_nu^H A e_mu` together with the normalized kernel.
    fn parts(&self, nu: &[Complex64], mu: &[Complex64]) -> (Complex64, Complex64) {
        let spec = self.source.spec();
        let right = &self.source.entries * spec.normalized_coherent(mu);
        let left = spec.normalized_basis_values(nu);
        let numerator = left.iter().zip(right.iter()).map(|(a, b)| a * b).sum();
        (numerator, normalized_kernel(spec.level(), nu, mu))
    }

    /// `A(nu, conj(mu))`
    pub fn eval(&self, nu: &ChartPoint, mu: &ChartPoint) -> Result<Complex64> {
        let d = self.source.spec().dim();
        for p in [nu, mu] {
            if p.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    actual: p.dim(),
                });
            }
        }
        let (num, kernel) = self.parts(nu.coords(), mu.coords());
        if kernel.norm() < DEGENERATE_KERNEL_TOL {
            return Err(Error::DegenerateKernel(kernel.norm()));
        }
        Ok(num / kernel)
    }

    /// `A(mu, conj(mu))`
    pub fn diagonal(&self, mu: &[Complex64]) -> Complex64 {
        let spec = self.source.spec();
        let e = spec.normalized_coherent(mu);
        e.dotc(&(&self.source.entries * &e))
    }

}

pub fn symbol_eval(a: &OperatorMatrix, nu: &ChartPoint, mu: &ChartPoint) -> Result<Complex64> {
    CovariantSymbol::new(a.clone()).eval(nu, mu)
}

/// Anything that can be evaluated as a two-point symbol on the chart.
pub trait SymbolField: Sync {
    /// `S(nu, conj(mu))`
    fn eval(&self, nu: &[Complex64], mu: &[Complex64]) -> Result<Complex64>;

    /// `S(nu, conj(mu)) * L_m(nu, conj(mu)) / (|psi_nu| |psi_mu|)`
    fn eval_times_kernel(&self, m: u32, nu: &[Complex64], mu: &[Complex64]) -> Result<Complex64> {
        Ok(self.eval(nu, mu)? * normalized_kernel(m, nu, mu))
    }
}

impl SymbolField for CovariantSymbol {
    fn eval(&self, nu: &[Complex64], mu: &[Complex64]) -> Result<Complex64> {
        let (num, kernel) = self.parts(nu, mu);
        if kernel.norm() < DEGENERATE_KERNEL_TOL {
            return Err(Error::DegenerateKernel(kernel.norm()));
        }
        Ok(num / kernel)
    }

    fn eval_times_kernel(&self, _m: u32, nu: &[Complex64], mu: &[Complex64]) -> Result<Complex64> {
        Ok(self.parts(nu, mu).0)
    }
}

/// Symbol constant in both arguments.
#[derive(Debug, Clone, Copy)]
pub struct ConstantSymbol(pub Complex64);

impl SymbolField for ConstantSymbol {
    fn eval(&self, _nu: &[Complex64], _mu: &[Complex64]) -> Result<Complex64> {
        Ok(self.0)
    }
}

/// Move `nu` off the set where it pairs to zero with `mu`.
fn jitter(nu: &[Complex64], mu: &[Complex64]) -> Vec<Complex64> {
    let scale = 1.0 + norm_sqr(nu).sqrt();
    let mut out = nu.to_vec();
    let mut k = 0;
    while is_near_degenerate(&out, mu) && k < JITTER_STEPS {
        k += 1;
        for (j, z) in out.iter_mut().enumerate() {
            *z = nu[j] + Complex64::new(JITTER_SCALE * scale * k as f64, 0.5 * JITTER_SCALE * scale * k as f64);
        }
    }
    out
}

fn is_near_degenerate(nu: &[Complex64], mu: &[Complex64]) -> bool {
    unit_pairing(nu, mu).norm() < JITTER_TOL
}

/// Recover the operator whose action is
/// `(A f)(mu) = c(m) integral S(mu, conj(nu)) f(nu) L_m(mu, conj(nu)) e^{-m Phi(nu)} dV(nu)`.
///
/// Both the action integral and the projection onto the basis are done by
/// quadrature on the basis' node set, so the cost is quadratic in the node count.
pub fn operator_from_symbol<S>(spec: Arc<BasisSpec>, symbol: &S) -> Result<OperatorMatrix>
where
    S: SymbolField + ?Sized,
{
    use rayon::prelude::*;

    let nodes = spec.rule().nodes();
    let b = spec.sampled_basis();
    let count = nodes.len();
    let m = spec.level();
    let rows: Vec<Vec<Complex64>> = (0..count)
        .into_par_iter()
        .map(|k| {
            let mu = nodes.node(k).point;
            (0..count)
                .map(|l| {
                    let nu = nodes.node(l).point;
                    if is_near_degenerate(mu, nu) {
                        let moved = jitter(nu, mu);
                        symbol.eval_times_kernel(m, mu, &moved)
                    } else {
                        symbol.eval_times_kernel(m, mu, nu)
                    }
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<Vec<_>>>()?;
    let root: Vec<f64> = (0..count)
        .map(|k| (spec.c_m() * nodes.node(k).fs_weight).sqrt())
        .collect();
    let kernel = DMatrix::from_fn(count, count, |k, l| rows[k][l] * (root[k] * root[l]));
    let entries = b.adjoint() * kernel * b.as_ref();
    OperatorMatrix::new(spec, entries)
}

/// The operator whose covariant symbol is exactly `p`, from the coefficients of
/// `P(mu, conj(nu)) (1 + mu . conj(nu))^(m - k)`.
pub fn berezin_operator(spec: Arc<BasisSpec>, p: &SesquiPolynomial) -> Result<OperatorMatrix> {
    let m = spec.level();
    if p.d != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            actual: p.d,
        });
    }
    if p.degree() > p.order || p.order > m {
        return Err(Error::InvalidArgument(format!(
            "symbol of order {} and degree {} is not a covariant symbol at level {m}",
            p.order,
            p.degree()
        )));
    }
    let n = spec.len();
    let mut entries = DMatrix::<Complex64>::zeros(n, n);
    let spread = crate::hilbert::enumerate_indices(spec.dim(), m - p.order);
    for (a, b, c) in &p.terms {
        for q in &spread {
            let w = crate::quadrature::multinomial(m - p.order, q.exponents());
            let shift = |e: &[u32]| {
                MultiIndex::new(e.iter().zip(q.exponents()).map(|(x, y)| x + y).collect())
            };
            let (i, j) = (shift(a), shift(b));
            let (Some(pi), Some(pj)) = (spec.position(&i), spec.position(&j)) else {
                return Err(Error::IndexOutOfRange {
                    degree: i.degree().max(j.degree()),
                    m,
                });
            };
            entries[(pi, pj)] += c * (w * (spec.norms()[pi] * spec.norms()[pj]).sqrt());
        }
    }
    OperatorMatrix::new(spec, entries)
}

impl SymbolField for SesquiPolynomial {
    fn eval(&self, nu: &[Complex64], mu: &[Complex64]) -> Result<Complex64> {
        Ok(SesquiPolynomial::eval(self, nu, mu))
    }
}

/// `(A1 * A2)(mu, conj(mu)) = c(m) integral A1(mu, conj(nu)) A2(nu, conj(mu)) e^{m phi(mu|nu)} dV(nu)`.
pub fn star_product(a1: &OperatorMatrix, a2: &OperatorMatrix, mu: &ChartPoint) -> Result<Complex64> {
    a1.check_same(a2)?;
    let spec = a1.spec().clone();
    if mu.dim() != spec.dim() {
        return Err(Error::DimensionMismatch {
            expected: spec.dim(),
            actual: mu.dim(),
        });
    }
    let z = mu.coords();
    let m = spec.level();
    let c_m = spec.c_m();
    // numerators e_mu^H A1 e_nu and e_nu^H A2 e_mu as dot products against
    // vectors fixed by mu
    let left_mu = DVector::from_vec(spec.normalized_basis_values(z));
    let u = a1.entries().transpose() * left_mu;
    let w = a2.entries() * spec.normalized_coherent(z);
    spec.rule()
        .integrate_nodes(|n| {
            let moved;
            let nu = if is_near_degenerate(n.point, z) {
                moved = jitter(n.point, z);
                &moved[..]
            } else {
                n.point
            };
            let values = spec.normalized_basis_values(nu);
            let num1: Complex64 = u.iter().zip(&values).map(|(a, b)| a * b.conj()).sum();
            let num2: Complex64 = w.iter().zip(&values).map(|(a, b)| a * b).sum();
            let k1 = normalized_kernel(m, z, nu);
            let k2 = normalized_kernel(m, nu, z);
            half_weight(num1, k1) * half_weight(num2, k2) * (c_m * n.fs_weight)
        })
        .map(|r| r.value)
}

/// `(num / k) * |k|`: a symbol value times `e^{m phi / 2}`, finite even where `k` underflows.
fn half_weight(num: Complex64, k: Complex64) -> Complex64 {
    let r = k.norm();
    if r == 0.0 {
        return num;
    }
    num * (k.conj() / r)
}

/// `c(m) integral e^{m phi(mu|nu)} dV(nu)`, which should equal one.
pub fn star_normalization(spec: &BasisSpec, mu: &ChartPoint) -> Result<f64> {
    let m = spec.level() as f64;
    let z = mu.coords();
    let c_m = spec.c_m();
    spec.rule()
        .integrate_nodes(|n| {
            let phi = crate::geometry::diastasis_raw(z, n.point);
            Complex64::new((m * phi).exp() * c_m * n.fs_weight, 0.0)
        })
        .map(|r| r.value.re)
}

/// One row of a correspondence sweep.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub m: u32,
    /// `|(A1 * A2) - A1 A2|` on the diagonal.
    pub e0: f64,
    /// `|m (A1 * A2 - A2 * A1) - i {A1, A2}|` on the diagonal.
    pub e1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub slope_e0: Option<f64>,
    pub slope_e1: Option<f64>,
}

impl SweepTable {
    pub fn strictly_decreasing(&self) -> (bool, bool) {
        let dec = |f: fn(&SweepRow) -> f64| self.rows.windows(2).all(|w| f(&w[1]) < f(&w[0]));
        (dec(|r| r.e0), dec(|r| r.e1))
    }
}

/// Unweighted least-squares slope of `ln e` against `ln m`; `None` with fewer
/// than two points or a non-positive error.
pub fn log_log_slope(ms: &[f64], es: &[f64]) -> Option<f64> {
    if ms.len() != es.len() || ms.len() < 2 || es.iter().chain(ms).any(|&v| !(v > 0.0) || !v.is_finite()) {
        return None;
    }
    let x: Vec<f64> = ms.iter().map(|v| v.ln()).collect();
    let y: Vec<f64> = es.iter().map(|v| v.ln()).collect();
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxx: f64 = x.iter().map(|v| (v - mx).powi(2)).sum();
    if sxx == 0.0 {
        return None;
    }
    let sxy: f64 = x.iter().zip(&y).map(|(a, b)| (a - mx) * (b - my)).sum();
    Some(sxy / sxx)
}

/// Single sweep row for already-built operators at level `m`.
pub fn correspondence_row(a1: &OperatorMatrix, a2: &OperatorMatrix, mu: &ChartPoint) -> Result<SweepRow> {
    let m = a1.spec().level();
    let s1 = CovariantSymbol::new(a1.clone());
    let s2 = CovariantSymbol::new(a2.clone());
    let z = mu.coords();
    let d1 = s1.diagonal(z);
    let d2 = s2.diagonal(z);
    let star12 = star_product(a1, a2, mu)?;
    let star21 = star_product(a2, a1, mu)?;
    let diag1 = |p: &[Complex64]| s1.diagonal(p);
    let diag2 = |p: &[Complex64]| s2.diagonal(p);
    let bracket = poisson_bracket(&diag1, &diag2, mu)?;
    let e0 = (star12 - d1 * d2).norm();
    let e1 = ((star12 - star21) * m as f64 - Complex64::i() * bracket).norm();
    Ok(SweepRow { m, e0, e1 })
}

/// Build operators per level with the given builders and tabulate `e0`, `e1`.
pub fn correspondence_sweep<F, G>(f_builder: F, g_builder: G, m_list: &[u32], mu: &ChartPoint) -> Result<SweepTable>
where
    F: Fn(u32) -> Result<OperatorMatrix> + Sync,
    G: Fn(u32) -> Result<OperatorMatrix> + Sync,
{
    use rayon::prelude::*;

    if m_list.is_empty() {
        return Err(Error::InvalidArgument("empty m-list".into()));
    }
    let rows = m_list
        .par_iter()
        .map(|&m| {
            let a1 = f_builder(m)?;
            let a2 = g_builder(m)?;
            correspondence_row(&a1, &a2, mu)
        })
        .collect::<Result<Vec<_>>>()?;
    let ms: Vec<f64> = rows.iter().map(|r| r.m as f64).collect();
    let e0: Vec<f64> = rows.iter().map(|r| r.e0).collect();
    let e1: Vec<f64> = rows.iter().map(|r| r.e1).collect();
    Ok(SweepTable {
        slope_e0: log_log_slope(&ms, &e0),
        slope_e1: log_log_slope(&ms, &e1),
        rows,
    })
}

/// Vector `A e_mu` for repeated symbol evaluation at a fixed right point.
pub fn apply_to_coherent(a: &OperatorMatrix, mu: &[Complex64]) -> DVector<Complex64> {
    a.entries() * a.spec().normalized_coherent(mu)
}
