//! Quantization of a manifold cell through a diffeomorphism `tau` onto the chart.
//!
//! A cell is described by a parameter domain `P` in `R^{2d}` (an open box or
//! all of `R^{2d}`) and a map `tau: P -> C^d`. Sections, operators, symbols
//! and star products on the cell are the chart objects evaluated at `tau(p)`;
//! integrals on the cell use the measure factor
//!
//! ```text
//! h(p) dS(p) = dV(tau(p)),   h(p) = 2^d (1 + |tau(p)|^2)^-(d+1) |det J(p)| / dS(p)
//! ```
//!
//! Parameters are ordered `(x_1, y_1, ..., x_d, y_d)` with `mu_k = x_k + i y_k`.

use std::fmt;
use std::sync::Arc;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pairing, ChartPoint};
use crate::hilbert::{BasisSpec, HilbertVector};
use crate::operators::{star_product, symbol_eval, OperatorMatrix};
use crate::quadrature::pairwise_sum;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ParameterDomain {
    /// Open box `prod (lo_k, hi_k)`.
    Box { lo: Vec<f64>, hi: Vec<f64> },
    /// All of `R^dim`.
    Euclidean { dim: usize },
}

impl ParameterDomain {
    pub fn dim(&self) -> usize {
        match self {
            ParameterDomain::Box { lo, .. } => lo.len(),
            ParameterDomain::Euclidean { dim } => *dim,
        }
    }

    pub fn contains(&self, p: &[f64]) -> bool {
        if p.len() != self.dim() || p.iter().any(|x| !x.is_finite()) {
            return false;
        }
        match self {
            ParameterDomain::Box { lo, hi } => p
                .iter()
                .zip(lo.iter().zip(hi))
                .all(|(x, (a, b))| *a < *x && *x < *b),
            ParameterDomain::Euclidean { .. } => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChartDescriptor {
    pub name: String,
    pub complex_dim: usize,
    pub domain: ParameterDomain,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub parameters: Vec<f64>,
}

impl fmt::Display for ChartDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.name)
    }
}

/// A diffeomorphism from a parameter domain onto the affine chart.
pub trait DiffeoChart: Send + Sync {
    fn descriptor(&self) -> ChartDescriptor;

    fn forward(&self, p: &[f64]) -> Result<ChartPoint>;

    fn inverse(&self, z: &ChartPoint) -> Result<Vec<f64>>;

    /// `2d x 2d` real Jacobian of `forward`, by central differences unless overridden.
    fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        finite_difference_jacobian(self, p)
    }

    fn complex_dim(&self) -> usize {
        self.descriptor().complex_dim
    }

    fn domain(&self) -> ParameterDomain {
        self.descriptor().domain
    }
}

fn to_real(z: &[Complex64]) -> Vec<f64> {
    z.iter().flat_map(|w| [w.re, w.im]).collect()
}

fn to_complex(p: &[f64]) -> Vec<Complex64> {
    p.chunks(2).map(|c| Complex64::new(c[0], c[1])).collect()
}

pub fn finite_difference_jacobian<C: DiffeoChart + ?Sized>(chart: &C, p: &[f64]) -> Result<DMatrix<f64>> {
    let n = p.len();
    let mut jac = DMatrix::zeros(n, n);
    let domain = chart.domain();
    let mut probe = p.to_vec();
    for k in 0..n {
        let mut h = 1e-6 * p[k].abs().max(1.0);
        if let ParameterDomain::Box { lo, hi } = &domain {
            h = h.min(0.25 * (p[k] - lo[k]).min(hi[k] - p[k]));
        }
        probe[k] = p[k] + h;
        let plus = to_real(chart.forward(&probe)?.coords());
        probe[k] = p[k] - h;
        let minus = to_real(chart.forward(&probe)?.coords());
        probe[k] = p[k];
        for r in 0..n {
            jac[(r, k)] = (plus[r] - minus[r]) / (2.0 * h);
        }
    }
    if jac.iter().any(|v| !v.is_finite()) {
        return Err(Error::DerivativeFailure(format!("jacobian at {p:?}")));
    }
    Ok(jac)
}

fn check_param(domain: &ParameterDomain, p: &[f64]) -> Result<()> {
    if domain.contains(p) {
        Ok(())
    } else {
        Err(Error::OutOfDomain(format!("{p:?}")))
    }
}

/// `tau(x, y) = x + i y` on all of `R^{2d}`.
#[derive(Debug, Clone, Copy)]
pub struct IdentityChart {
    pub d: usize,
}

impl DiffeoChart for IdentityChart {
    fn descriptor(&self) -> ChartDescriptor {
        ChartDescriptor {
            name: "identity".into(),
            complex_dim: self.d,
            domain: ParameterDomain::Euclidean { dim: 2 * self.d },
            parameters: Vec::new(),
        }
    }

    fn forward(&self, p: &[f64]) -> Result<ChartPoint> {
        check_param(&self.domain(), p)?;
        ChartPoint::new(to_complex(p))
    }

    fn inverse(&self, z: &ChartPoint) -> Result<Vec<f64>> {
        if z.dim() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: z.dim(),
            });
        }
        Ok(to_real(z.coords()))
    }

    fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        check_param(&self.domain(), p)?;
        Ok(DMatrix::identity(2 * self.d, 2 * self.d))
    }
}

/// The open unit square `(0,1)^2` onto `C`:
/// `(u, v) -> tan(pi u - pi/2) + i tan(pi v - pi/2)`.
///
/// The square is the torus with the two generating circles removed; its image
/// is identified with the open upper hemisphere through
/// [`crate::torus::hemisphere_point`].
#[derive(Debug, Clone, Copy, Default)]
pub struct TorusChart;

impl DiffeoChart for TorusChart {
    fn descriptor(&self) -> ChartDescriptor {
        ChartDescriptor {
            name: "torus".into(),
            complex_dim: 1,
            domain: ParameterDomain::Box {
                lo: vec![0.0, 0.0],
                hi: vec![1.0, 1.0],
            },
            parameters: Vec::new(),
        }
    }

    fn forward(&self, p: &[f64]) -> Result<ChartPoint> {
        check_param(&self.domain(), p)?;
        let t = |s: f64| (std::f64::consts::PI * (s - 0.5)).tan();
        ChartPoint::scalar(Complex64::new(t(p[0]), t(p[1])))
    }

    fn inverse(&self, z: &ChartPoint) -> Result<Vec<f64>> {
        if z.dim() != 1 {
            return Err(Error::DimensionMismatch {
                expected: 1,
                actual: z.dim(),
            });
        }
        let w = z.coords()[0];
        let a = |x: f64| x.atan() / std::f64::consts::PI + 0.5;
        Ok(vec![a(w.re), a(w.im)])
    }

    fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        check_param(&self.domain(), p)?;
        let sec2 = |s: f64| {
            let c = (std::f64::consts::PI * (s - 0.5)).cos();
            std::f64::consts::PI / (c * c)
        };
        Ok(DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            sec2(p[0]),
            sec2(p[1]),
        ])))
    }
}

/// `a * tau(p)` for a base chart `tau` and a nonzero complex scale `a`.
#[derive(Clone)]
pub struct LinearChart {
    pub base: Arc<dyn DiffeoChart>,
    pub factor: Complex64,
}

impl LinearChart {
    pub fn new(base: Arc<dyn DiffeoChart>, factor: Complex64) -> Result<Self> {
        if factor.norm() == 0.0 || !factor.re.is_finite() || !factor.im.is_finite() {
            return Err(Error::InvalidArgument(format!("scale factor {factor} is not invertible")));
        }
        Ok(Self { base, factor })
    }

    pub fn rotation(base: Arc<dyn DiffeoChart>, angle: f64) -> Self {
        Self {
            base,
            factor: Complex64::from_polar(1.0, angle),
        }
    }
}

impl DiffeoChart for LinearChart {
    fn descriptor(&self) -> ChartDescriptor {
        let inner = self.base.descriptor();
        ChartDescriptor {
            name: format!("({})*{}", self.factor, inner.name),
            complex_dim: inner.complex_dim,
            domain: inner.domain,
            parameters: vec![self.factor.re, self.factor.im],
        }
    }

    fn forward(&self, p: &[f64]) -> Result<ChartPoint> {
        let z = self.base.forward(p)?;
        ChartPoint::new(z.coords().iter().map(|w| w * self.factor).collect())
    }

    fn inverse(&self, z: &ChartPoint) -> Result<Vec<f64>> {
        let back = ChartPoint::new(z.coords().iter().map(|w| w / self.factor).collect())?;
        self.base.inverse(&back)
    }

    fn jacobian(&self, p: &[f64]) -> Result<DMatrix<f64>> {
        let inner = self.base.jacobian(p)?;
        let n = inner.nrows();
        let (a, b) = (self.factor.re, self.factor.im);
        let mut rot = DMatrix::zeros(n, n);
        for k in 0..n / 2 {
            rot[(2 * k, 2 * k)] = a;
            rot[(2 * k, 2 * k + 1)] = -b;
            rot[(2 * k + 1, 2 * k)] = b;
            rot[(2 * k + 1, 2 * k + 1)] = a;
        }
        Ok(rot * inner)
    }
}

/// Reference volume `dS` on the parameter domain.
#[derive(Clone, Default)]
pub enum ReferenceMeasure {
    /// Lebesgue measure on `P`; `h` is then the full Jacobian factor.
    #[default]
    Lebesgue,
    /// A positive density against Lebesgue measure.
    Density(Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>),
}

impl ReferenceMeasure {
    fn density(&self, p: &[f64]) -> f64 {
        match self {
            ReferenceMeasure::Lebesgue => 1.0,
            ReferenceMeasure::Density(f) => f(p),
        }
    }
}

/// `h` with `h dS = dV(tau)`.
#[derive(Clone)]
pub struct MeasureFactor {
    pub chart: Arc<dyn DiffeoChart>,
    pub reference: ReferenceMeasure,
}

impl MeasureFactor {
    pub fn new(chart: Arc<dyn DiffeoChart>) -> Self {
        Self {
            chart,
            reference: ReferenceMeasure::Lebesgue,
        }
    }

    pub fn with_reference(chart: Arc<dyn DiffeoChart>, reference: ReferenceMeasure) -> Self {
        Self { chart, reference }
    }

    pub fn eval(&self, p: &[f64]) -> Result<f64> {
        let z = self.chart.forward(p)?;
        let det = self.chart.jacobian(p)?.determinant().abs();
        let ds = self.reference.density(p);
        if !(ds > 0.0) {
            return Err(Error::InvalidArgument(format!("reference density {ds} at {p:?}")));
        }
        let d = z.dim() as i32;
        let fs = 2f64.powi(d) * (1.0 + z.norm_sqr()).powi(-(d + 1));
        Ok(fs * det / ds)
    }
}

/// `s(tau(p))` for the section with coefficients `v`.
pub fn pull_section(
    chart: &dyn DiffeoChart,
    spec: &BasisSpec,
    v: &HilbertVector,
    p: &[f64],
) -> Result<Complex64> {
    let z = chart.forward(p)?;
    check_vector(spec, v)?;
    Ok(v.eval(spec, z.coords()))
}

fn check_vector(spec: &BasisSpec, v: &HilbertVector) -> Result<()> {
    if v.len() != spec.len() {
        return Err(Error::DimensionMismatch {
            expected: spec.len(),
            actual: v.len(),
        });
    }
    Ok(())
}

/// A chart operator carried to the cell.
#[derive(Clone)]
pub struct PulledOperator {
    pub base: OperatorMatrix,
    pub chart: Arc<dyn DiffeoChart>,
}

impl PulledOperator {
    pub fn new(base: OperatorMatrix, chart: Arc<dyn DiffeoChart>) -> Result<Self> {
        if chart.complex_dim() != base.spec().dim() {
            return Err(Error::DimensionMismatch {
                expected: base.spec().dim(),
                actual: chart.complex_dim(),
            });
        }
        Ok(Self { base, chart })
    }
}

/// `(A s)(tau(p))`
pub fn pulled_apply(op: &PulledOperator, v: &HilbertVector, p: &[f64]) -> Result<Complex64> {
    let z = op.chart.forward(p)?;
    let image = op.base.apply(v)?;
    Ok(image.eval(op.base.spec(), z.coords()))
}

/// `A(tau(p), conj(tau(q)))`
pub fn pulled_symbol(op: &PulledOperator, p: &[f64], q: &[f64]) -> Result<Complex64> {
    let z = op.chart.forward(p)?;
    let w = op.chart.forward(q)?;
    symbol_eval(&op.base, &z, &w)
}

/// `(A1 * A2)(tau(p), conj(tau(p)))`
pub fn pulled_star(op1: &PulledOperator, op2: &PulledOperator, p: &[f64]) -> Result<Complex64> {
    if op1.chart.descriptor() != op2.chart.descriptor() {
        return Err(Error::InvalidArgument(format!(
            "operators live on different charts ({} and {})",
            op1.chart.descriptor(),
            op2.chart.descriptor()
        )));
    }
    let z = op1.chart.forward(p)?;
    star_product(&op1.base, &op2.base, &z)
}

/// Toeplitz matrix of a function on the cell: the chart Toeplitz matrix of `f o tau^-1`.
pub fn pulled_toeplitz<F>(spec: Arc<BasisSpec>, chart: Arc<dyn DiffeoChart>, f: F) -> Result<OperatorMatrix>
where
    F: Fn(&[f64]) -> Complex64 + Sync,
{
    let g = |z: &[Complex64]| match ChartPoint::new(z.to_vec()).and_then(|p| chart.inverse(&p)) {
        Ok(p) => f(&p),
        Err(_) => Complex64::new(f64::NAN, f64::NAN),
    };
    crate::toeplitz::toeplitz_matrix(spec, &g)
}

/// Double-exponential product rule on a parameter domain.
#[derive(Debug, Clone)]
pub struct ManifoldRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

/// Default step of the double-exponential rules.
pub const DE_STEP: f64 = 1.0 / 32.0;

fn tanh_sinh(lo: f64, hi: f64, step: f64) -> (Vec<f64>, Vec<f64>) {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let mut x = Vec::new();
    let mut w = Vec::new();
    let n = (3.0 / step).floor() as i64;
    for k in -n..=n {
        let t = k as f64 * step;
        let s = half_pi * t.sinh();
        // distances to either end, without cancellation
        let left = 1.0 / (1.0 + (2.0 * s).exp());
        let right = 1.0 / (1.0 + (-2.0 * s).exp());
        let weight = step * half_pi * t.cosh() / (s.cosh() * s.cosh()) * 0.5;
        let point = if s < 0.0 { lo + (hi - lo) * right } else { hi - (hi - lo) * left };
        if point <= lo || point >= hi || weight == 0.0 {
            continue;
        }
        x.push(point);
        w.push(weight * (hi - lo));
    }
    (x, w)
}

fn sinh_sinh(step: f64) -> (Vec<f64>, Vec<f64>) {
    let half_pi = std::f64::consts::FRAC_PI_2;
    let n = (4.0 / step).floor() as i64;
    (-n..=n)
        .map(|k| {
            let t = k as f64 * step;
            let s = half_pi * t.sinh();
            (s.sinh(), step * half_pi * t.cosh() * s.cosh())
        })
        .unzip()
}

impl ManifoldRule {
    pub fn build(domain: &ParameterDomain, step: f64) -> Result<Self> {
        if !(step > 0.0 && step <= 1.0) {
            return Err(Error::InvalidArgument(format!("step {step} outside (0, 1]")));
        }
        let axes: Vec<(Vec<f64>, Vec<f64>)> = match domain {
            ParameterDomain::Box { lo, hi } => lo.iter().zip(hi).map(|(a, b)| tanh_sinh(*a, *b, step)).collect(),
            ParameterDomain::Euclidean { dim } => (0..*dim).map(|_| sinh_sinh(step)).collect(),
        };
        let total: usize = axes.iter().map(|a| a.0.len()).product();
        let cap = crate::quadrature::DEFAULT_NODE_CAP;
        if total > cap {
            return Err(Error::ResourceLimit { requested: total, cap });
        }
        let mut points = Vec::with_capacity(total);
        let mut weights = Vec::with_capacity(total);
        for mut k in 0..total {
            let mut p = Vec::with_capacity(axes.len());
            let mut w = 1.0;
            for (x, wx) in &axes {
                p.push(x[k % x.len()]);
                w *= wx[k % x.len()];
                k /= x.len();
            }
            points.push(p);
            weights.push(w);
        }
        Ok(Self { points, weights })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// `c(m) integral_P conj(s1(tau p)) s2(tau p) e^{-m Phi(tau p)} h(p) dS(p)`.
pub fn inner_product_on_manifold(
    spec: &BasisSpec,
    h: &MeasureFactor,
    v1: &HilbertVector,
    v2: &HilbertVector,
    rule: &ManifoldRule,
) -> Result<Complex64> {
    check_vector(spec, v1)?;
    check_vector(spec, v2)?;
    let c_m = spec.c_m();
    let reference = &h.reference;
    let terms = (0..rule.len())
        .into_par_iter()
        .map(|k| {
            let p = &rule.points[k];
            let z = match h.chart.forward(p) {
                Ok(z) => z,
                // nodes that round onto the boundary of the domain carry no mass
                Err(Error::OutOfDomain(_)) => return Ok(Complex64::new(0.0, 0.0)),
                Err(e) => return Err(e),
            };
            let factor = h.eval(p)?;
            let a = v1.eval_normalized(spec, z.coords());
            let b = v2.eval_normalized(spec, z.coords());
            let t = a.conj() * b * (c_m * factor * reference.density(p) * rule.weights[k]);
            if t.re.is_finite() && t.im.is_finite() {
                Ok(t)
            } else {
                Err(Error::NonFiniteIntegrand {
                    node: k,
                    point: format!("{p:?}"),
                })
            }
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum(&terms))
}

/// Outcome of comparing two quantizations of the same cell.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EquivalenceReport {
    pub chart_a: ChartDescriptor,
    pub chart_b: ChartDescriptor,
    /// `max |<U e_I, U e_J>_A - delta_IJ|` over the basis.
    pub inner_product_deviation: f64,
    /// Largest weighted `L^2` distance of `U e_J` from the holomorphic space of `A`.
    pub membership_residual: f64,
    /// `max |K_B(psi p, psi q) - K_A(p, q)| / sqrt(K_A(p,p) K_A(q,q))` over sample pairs.
    pub kernel_deviation: f64,
    pub tolerance: f64,
    pub equivalent: bool,
}

pub const EQUIVALENCE_TOL: f64 = 1e-6;

/// Compare the quantizations induced by `chart_a` and `chart_b` through the cell map `psi`.
///
/// The candidate map sends a section `t` of `B` to `t o psi`, read in the
/// coordinates of `A`: `z -> t(tau_B(psi(tau_A^-1(z))))`.
pub fn equivalence_check(
    spec: Arc<BasisSpec>,
    chart_a: &dyn DiffeoChart,
    chart_b: &dyn DiffeoChart,
    psi: &(dyn Fn(&[f64]) -> Result<Vec<f64>> + Sync),
    samples: &[Vec<f64>],
) -> Result<EquivalenceReport> {
    let d = spec.dim();
    for c in [chart_a, chart_b] {
        if c.complex_dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: c.complex_dim(),
            });
        }
    }
    let nodes = spec.rule().nodes();
    let m = spec.level() as f64;
    let c_m = spec.c_m();
    let n = spec.len();
    // rows: nodes; columns: (U e_J)(z_k) (1+|z_k|^2)^(-m/2) sqrt(c w_k)
    let rows: Vec<Vec<Complex64>> = (0..nodes.len())
        .into_par_iter()
        .map(|k| {
            let node = nodes.node(k);
            let z = ChartPoint::new(node.point.to_vec())?;
            let root = (c_m * node.fs_weight).sqrt() * node.inv_one_plus.powf(0.5 * m);
            let image = match chart_a.inverse(&z).and_then(|p| psi(&p)).and_then(|q| chart_b.forward(&q)) {
                Ok(w) => w,
                Err(Error::OutOfDomain(_)) => return Ok(vec![Complex64::new(0.0, 0.0); n]),
                Err(e) => return Err(e),
            };
            Ok(spec
                .basis_values(image.coords())
                .into_iter()
                .map(|v| v * root)
                .collect())
        })
        .collect::<Result<Vec<_>>>()?;
    let mapped = DMatrix::from_fn(nodes.len(), n, |k, j| rows[k][j]);
    let gram = mapped.adjoint() * &mapped;
    let inner_product_deviation = (gram - DMatrix::<Complex64>::identity(n, n)).camax();

    let b = spec.sampled_basis();
    let coefficients = b.adjoint() * &mapped;
    let residual = &mapped - b.as_ref() * coefficients;
    let membership_residual = (0..n)
        .map(|j| residual.column(j).norm())
        .fold(0.0, f64::max);

    let mut kernel_deviation: f64 = 0.0;
    let level = spec.level();
    for p in samples {
        for q in samples {
            let zp = chart_a.forward(p)?;
            let zq = chart_a.forward(q)?;
            let wp = chart_b.forward(&psi(p)?)?;
            let wq = chart_b.forward(&psi(q)?)?;
            let scale = ((1.0 + zp.norm_sqr()) * (1.0 + zq.norm_sqr())).sqrt();
            let ka = (pairing(zp.coords(), zq.coords()) / scale).powu(level);
            let kb = (pairing(wp.coords(), wq.coords()) / scale).powu(level);
            kernel_deviation = kernel_deviation.max((kb - ka).norm());
        }
    }
    let equivalent = inner_product_deviation <= EQUIVALENCE_TOL && kernel_deviation <= EQUIVALENCE_TOL;
    Ok(EquivalenceReport {
        chart_a: chart_a.descriptor(),
        chart_b: chart_b.descriptor(),
        inner_product_deviation,
        membership_residual,
        kernel_deviation,
        tolerance: EQUIVALENCE_TOL,
        equivalent,
    })
}

/// Squared chart norm `sum |v_I|^2` and the squared manifold norm, for comparison.
pub fn norm_pair(spec: &BasisSpec, h: &MeasureFactor, v: &HilbertVector, rule: &ManifoldRule) -> Result<(f64, f64)> {
    let manifold = inner_product_on_manifold(spec, h, v, v, rule)?.re;
    Ok((v.norm_sqr(), manifold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn grid(n: usize) -> Vec<Vec<f64>> {
        (0..n)
            .flat_map(|a| (0..n).map(move |b| vec![(a as f64 + 0.5) / n as f64, (b as f64 + 0.5) / n as f64]))
            .collect()
    }

    #[test]
    fn torus_chart_center_and_round_trip() {
        let t = TorusChart;
        let z = t.forward(&[0.5, 0.5]).unwrap();
        assert!(z.norm_sqr() < 1e-30);
        for p in grid(10) {
            let back = t.inverse(&t.forward(&p).unwrap()).unwrap();
            assert!((back[0] - p[0]).abs() < 1e-10 && (back[1] - p[1]).abs() < 1e-10);
            assert!(t.jacobian(&p).unwrap().determinant() > 0.0);
        }
        assert!(matches!(t.forward(&[0.0, 0.5]), Err(Error::OutOfDomain(_))));
        assert!(matches!(t.forward(&[0.3, 1.0]), Err(Error::OutOfDomain(_))));
    }

    #[test]
    fn analytic_jacobians_match_differences() {
        let t: Arc<dyn DiffeoChart> = Arc::new(TorusChart);
        let rot = LinearChart::rotation(t.clone(), 0.7);
        for p in [[0.3, 0.6], [0.8, 0.1]] {
            for chart in [t.as_ref(), &rot as &dyn DiffeoChart] {
                let a = chart.jacobian(&p).unwrap();
                let n = finite_difference_jacobian(chart, &p).unwrap();
                assert!((a - &n).amax() < 1e-6 * n.amax().max(1.0));
            }
        }
    }

    #[test]
    fn measure_factor_change_of_variables() {
        // integral of h over the torus square is the volume of CP^1
        let chart: Arc<dyn DiffeoChart> = Arc::new(TorusChart);
        let h = MeasureFactor::new(chart.clone());
        let rule = ManifoldRule::build(&chart.domain(), DE_STEP).unwrap();
        let total: f64 = rule
            .points
            .iter()
            .zip(&rule.weights)
            .map(|(p, w)| h.eval(p).map(|v| v * w).unwrap_or(0.0))
            .sum();
        assert!((total - 2.0 * std::f64::consts::PI).abs() < 1e-9, "{total}");
    }

    #[test]
    fn manifold_norms_match_chart_norms() {
        let spec = BasisSpec::with_default_level(1, 4).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for chart in [Arc::new(TorusChart) as Arc<dyn DiffeoChart>, Arc::new(IdentityChart { d: 1 })] {
            let h = MeasureFactor::new(chart.clone());
            let rule = ManifoldRule::build(&chart.domain(), DE_STEP).unwrap();
            let v = HilbertVector::new((0..spec.len()).map(|_| c(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect());
            let (chart_norm, manifold_norm) = norm_pair(&spec, &h, &v, &rule).unwrap();
            assert!((chart_norm - manifold_norm).abs() < 1e-8, "{} {chart_norm} {manifold_norm}", chart.descriptor());
        }
    }

    #[test]
    fn pulled_section_of_constant() {
        let spec = BasisSpec::with_default_level(1, 3).unwrap();
        let v = HilbertVector::unit(spec.len(), 0);
        for p in grid(4) {
            let val = pull_section(&TorusChart, &spec, &v, &p).unwrap();
            assert!((val - c(1.0 / spec.norms()[0].sqrt(), 0.0)).norm() < 1e-14);
        }
    }

    #[test]
    fn identity_equivalence() {
        let spec = Arc::new(BasisSpec::with_default_level(1, 4).unwrap());
        let chart = TorusChart;
        let id = |p: &[f64]| Ok(p.to_vec());
        let report = equivalence_check(spec, &chart, &chart, &id, &grid(4)).unwrap();
        assert!(report.equivalent);
        assert!(report.inner_product_deviation < 1e-10);
        assert!(report.kernel_deviation < 1e-10);
    }
}
