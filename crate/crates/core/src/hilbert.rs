//! The level-`m` Hilbert space on the chart.
//!
//! Sections are polynomials of degree `<= m` in `mu`, with inner product
//! `<f, g> = c(m) * integral conj(f) g (1+|mu|^2)^-m dV`. The monomials
//! `Psi_I = mu^I / sqrt(D_I)` form an orthonormal basis, and in closed form
//!
//! ```text
//! D_I  = c(m) * moment(I, m) = prod(q_k!) (m - |I|)! / m!
//! c(m) = (m+1)(m+2)...(m+d) / (2 pi)^d
//! ```
//!
//! so that `sum_I |Psi_I(mu)|^2 = (1 + |mu|^2)^m` by the multinomial theorem.

use std::sync::{Arc, OnceLock};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pairing, ChartPoint};
use crate::quadrature::{moment, QuadratureRule};

/// Beyond this radius basis values are evaluated in log-scaled form.
pub const LOG_SCALE_RADIUS: f64 = 1e3;

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct MultiIndex {
    exponents: Vec<u32>,
}

impl MultiIndex {
    pub fn new(exponents: Vec<u32>) -> Self {
        Self { exponents }
    }

    pub fn exponents(&self) -> &[u32] {
        &self.exponents
    }

    pub fn dim(&self) -> usize {
        self.exponents.len()
    }

    pub fn degree(&self) -> u32 {
        self.exponents.iter().sum()
    }

    /// `mu^I`
    pub fn monomial(&self, mu: &[Complex64]) -> Complex64 {
        self.exponents
            .iter()
            .zip(mu)
            .fold(Complex64::new(1.0, 0.0), |acc, (&q, z)| acc * z.powu(q))
    }
}

/// Multi-indices of degree `<= m` in graded lexicographic order: by degree,
/// then lexicographically ascending in the exponent vector.
pub fn enumerate_indices(d: usize, m: u32) -> Vec<MultiIndex> {
    let mut out = Vec::new();
    let mut buf = vec![0u32; d];
    for q in 0..=m {
        compositions(q, 0, &mut buf, &mut out);
    }
    out
}

fn compositions(remaining: u32, pos: usize, buf: &mut Vec<u32>, out: &mut Vec<MultiIndex>) {
    if pos + 1 == buf.len() {
        buf[pos] = remaining;
        out.push(MultiIndex::new(buf.clone()));
        return;
    }
    for first in 0..=remaining {
        buf[pos] = first;
        compositions(remaining - first, pos + 1, buf, out);
    }
}

/// `C(m + d, d)`
pub fn dimension(d: usize, m: u32) -> usize {
    let mut acc: u128 = 1;
    for k in 1..=d as u128 {
        acc = acc * (m as u128 + k) / k;
    }
    acc as usize
}

#[derive(Debug, Clone)]
pub struct BasisSpec {
    d: usize,
    m: u32,
    indices: Vec<MultiIndex>,
    norms: Vec<f64>,
    c_m: f64,
    rule: Arc<QuadratureRule>,
    sampled: OnceLock<Arc<DMatrix<Complex64>>>,
}

/// Serializable summary of a [`BasisSpec`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BasisDocument {
    pub d: usize,
    pub m: u32,
    #[serde(rename = "N")]
    pub n: usize,
    pub hbar: f64,
    pub c_m: f64,
    pub quadrature_level: u32,
    pub indices: Vec<MultiIndex>,
    #[serde(rename = "D")]
    pub norms: Vec<f64>,
}

pub fn build_basis(d: usize, m: u32, level: u32) -> Result<BasisSpec> {
    BasisSpec::build(d, m, level)
}

impl BasisSpec {
    pub fn build(d: usize, m: u32, level: u32) -> Result<Self> {
        if d == 0 || m == 0 {
            return Err(Error::InvalidArgument(format!(
                "basis needs d >= 1 and m >= 1 (got d = {d}, m = {m})"
            )));
        }
        let rule = Arc::new(QuadratureRule::build(d, level)?);
        Self::with_rule(d, m, rule)
    }

    /// Basis at level `m` with the smallest exact quadrature level.
    pub fn with_default_level(d: usize, m: u32) -> Result<Self> {
        Self::build(d, m, QuadratureRule::level_for(m))
    }

    pub fn with_rule(d: usize, m: u32, rule: Arc<QuadratureRule>) -> Result<Self> {
        if rule.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                actual: rule.dim(),
            });
        }
        let indices = enumerate_indices(d, m);
        let c_m = 1.0 / moment(&MultiIndex::new(vec![0; d]), m)?;
        let norms = indices
            .iter()
            .map(|i| moment(i, m).map(|v| c_m * v))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            d,
            m,
            indices,
            norms,
            c_m,
            rule,
            sampled: OnceLock::new(),
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn level(&self) -> u32 {
        self.m
    }

    /// Hilbert-space dimension `N`.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn hbar(&self) -> f64 {
        1.0 / self.m as f64
    }

    pub fn c_m(&self) -> f64 {
        self.c_m
    }

    pub fn indices(&self) -> &[MultiIndex] {
        &self.indices
    }

    pub fn norms(&self) -> &[f64] {
        &self.norms
    }

    pub fn rule(&self) -> &QuadratureRule {
        &self.rule
    }

    pub fn position(&self, index: &MultiIndex) -> Option<usize> {
        if index.dim() != self.d || index.degree() > self.m {
            return None;
        }
        // graded-lex order: degree blocks, then lexicographic
        self.indices.binary_search_by(|probe| {
            probe
                .degree()
                .cmp(&index.degree())
                .then_with(|| probe.cmp(index))
        })
        .ok()
    }

    pub fn document(&self) -> BasisDocument {
        BasisDocument {
            d: self.d,
            m: self.m,
            n: self.len(),
            hbar: self.hbar(),
            c_m: self.c_m,
            quadrature_level: self.rule.level(),
            indices: self.indices.clone(),
            norms: self.norms.clone(),
        }
    }

    fn check_point(&self, mu: &[Complex64]) -> Result<()> {
        if mu.len() != self.d {
            return Err(Error::DimensionMismatch {
                expected: self.d,
                actual: mu.len(),
            });
        }
        Ok(())
    }

    /// All `Psi_I(mu)` in basis order.
    pub fn basis_values(&self, mu: &[Complex64]) -> Vec<Complex64> {
        self.indices
            .iter()
            .zip(&self.norms)
            .map(|(i, d)| i.monomial(mu) / d.sqrt())
            .collect()
    }

    /// All `Psi_I(mu) / (1 + |mu|^2)^(m/2)`; entries have modulus `<= 1`.
    pub fn normalized_basis_values(&self, mu: &[Complex64]) -> Vec<Complex64> {
        let r2: f64 = crate::geometry::norm_sqr(mu);
        if r2.sqrt() < LOG_SCALE_RADIUS {
            let scale = (1.0 + r2).powf(-0.5 * self.m as f64);
            return self
                .indices
                .iter()
                .zip(&self.norms)
                .map(|(i, d)| i.monomial(mu) * (scale / d.sqrt()))
                .collect();
        }
        let log_scale = -0.5 * self.m as f64 * ln_one_plus_norm_sqr(mu);
        self.indices
            .iter()
            .zip(&self.norms)
            .map(|(index, d)| {
                let mut log_mod = log_scale - 0.5 * d.ln();
                let mut phase = 0.0;
                for (&q, z) in index.exponents().iter().zip(mu) {
                    if q == 0 {
                        continue;
                    }
                    if *z == Complex64::new(0.0, 0.0) {
                        return Complex64::new(0.0, 0.0);
                    }
                    log_mod += q as f64 * z.norm().ln();
                    phase += q as f64 * z.arg();
                }
                Complex64::from_polar(log_mod.exp(), phase)
            })
            .collect()
    }

    /// Coherent state `psi_mu` scaled to unit norm: coefficients
    /// `conj(Psi_I(mu)) / (1+|mu|^2)^(m/2)`.
    pub fn normalized_coherent(&self, mu: &[Complex64]) -> DVector<Complex64> {
        DVector::from_iterator(
            self.len(),
            self.normalized_basis_values(mu).into_iter().map(|z| z.conj()),
        )
    }

    /// Rows: quadrature nodes; columns: `Psi_I(nu_k) (1+|nu_k|^2)^(-m/2) sqrt(c(m) w_k)`,
    /// so that `B^H diag(f) B` is the Gram/Toeplitz matrix of `f`.
    pub fn sampled_basis(&self) -> Arc<DMatrix<Complex64>> {
        self.sampled
            .get_or_init(|| {
                let nodes = self.rule.nodes();
                let n = self.len();
                let mut b = DMatrix::<Complex64>::zeros(nodes.len(), n);
                for (k, node) in nodes.iter().enumerate() {
                    let w = (self.c_m * node.fs_weight).sqrt();
                    for (j, v) in self.normalized_basis_values(node.point).into_iter().enumerate() {
                        b[(k, j)] = v * w;
                    }
                }
                Arc::new(b)
            })
            .clone()
    }

    /// `D_I` recomputed by quadrature, as a cross-check of the closed form.
    pub fn numeric_norms(&self) -> Result<Vec<f64>> {
        let m = self.m;
        self.indices
            .iter()
            .map(|i| {
                self.rule
                    .integrate_nodes(|n| {
                        let v: f64 = i
                            .exponents()
                            .iter()
                            .zip(n.point)
                            .map(|(&q, z)| z.norm_sqr().powi(q as i32))
                            .product();
                        Complex64::new(self.c_m * v * n.level_weight(m), 0.0)
                    })
                    .map(|r| r.value.re)
            })
            .collect()
    }
}

pub fn basis_eval(spec: &BasisSpec, index: &MultiIndex, mu: &ChartPoint) -> Result<Complex64> {
    spec.check_point(mu.coords())?;
    let pos = spec.position(index).ok_or(Error::IndexOutOfRange {
        degree: index.degree(),
        m: spec.m,
    })?;
    Ok(index.monomial(mu.coords()) / spec.norms[pos].sqrt())
}

/// A section expressed in the orthonormal basis.
#[derive(Debug, Clone, PartialEq)]
pub struct HilbertVector {
    pub coeffs: DVector<Complex64>,
}

impl HilbertVector {
    pub fn new(coeffs: Vec<Complex64>) -> Self {
        Self {
            coeffs: DVector::from_vec(coeffs),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            coeffs: DVector::zeros(n),
        }
    }

    pub fn unit(n: usize, i: usize) -> Self {
        let mut v = Self::zeros(n);
        v.coeffs[i] = Complex64::new(1.0, 0.0);
        v
    }

    /// Coefficients `conj(Psi_I(mu))` of the coherent state `psi_mu`.
    pub fn coherent(spec: &BasisSpec, mu: &[Complex64]) -> Self {
        Self {
            coeffs: DVector::from_iterator(
                spec.len(),
                spec.basis_values(mu).into_iter().map(|z| z.conj()),
            ),
        }
    }

    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// `sum |coeff|^2`
    pub fn norm_sqr(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    /// Algebraic inner product `sum conj(a_I) b_I`.
    pub fn dot(&self, other: &HilbertVector) -> Complex64 {
        self.coeffs.dotc(&other.coeffs)
    }

    /// Value of the section at `mu`.
    pub fn eval(&self, spec: &BasisSpec, mu: &[Complex64]) -> Complex64 {
        spec.basis_values(mu)
            .iter()
            .zip(self.coeffs.iter())
            .map(|(p, c)| p * c)
            .sum()
    }

    /// `v(mu) / (1+|mu|^2)^(m/2)`
    pub(crate) fn eval_normalized(&self, spec: &BasisSpec, mu: &[Complex64]) -> Complex64 {
        spec.normalized_basis_values(mu)
            .iter()
            .zip(self.coeffs.iter())
            .map(|(p, c)| p * c)
            .sum()
    }
}

/// `c(m) * integral conj(f) g (1+|nu|^2)^-m dV` by quadrature.
pub fn inner_product<F, G>(spec: &BasisSpec, f: F, g: G) -> Result<Complex64>
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
    G: Fn(&[Complex64]) -> Complex64 + Sync,
{
    let m = spec.m;
    let c_m = spec.c_m;
    spec.rule
        .integrate_nodes(|n| f(n.point).conj() * g(n.point) * (c_m * n.level_weight(m)))
        .map(|r| r.value)
}

/// `ln(1 + |mu|^2)` without overflow for huge coordinates.
fn ln_one_plus_norm_sqr(mu: &[Complex64]) -> f64 {
    let s = mu.iter().map(|z| z.norm()).fold(1.0, f64::max);
    let rest = 1.0 / (s * s) + mu.iter().map(|z| (z / s).norm_sqr()).sum::<f64>();
    2.0 * s.ln() + rest.ln()
}

/// Closed form `psi_mu(nu) = (1 + conj(mu) . nu)^m`.
pub fn coherent_eval(spec: &BasisSpec, mu: &ChartPoint, nu: &ChartPoint) -> Result<Complex64> {
    spec.check_point(mu.coords())?;
    spec.check_point(nu.coords())?;
    Ok(pairing(nu.coords(), mu.coords()).powu(spec.m))
}

/// `L_m(mu, conj(nu)) = (1 + mu . conj(nu))^m`, by integer power.
pub fn kernel_l(spec: &BasisSpec, mu: &ChartPoint, nu: &ChartPoint) -> Result<Complex64> {
    spec.check_point(mu.coords())?;
    spec.check_point(nu.coords())?;
    Ok(pairing(mu.coords(), nu.coords()).powu(spec.m))
}

/// `ln L_m(mu, conj(nu))` on the principal branch; finite where `L_m` itself overflows.
pub fn kernel_l_log(spec: &BasisSpec, mu: &ChartPoint, nu: &ChartPoint) -> Result<Complex64> {
    spec.check_point(mu.coords())?;
    spec.check_point(nu.coords())?;
    // 1 + mu.conj(nu) = a b (1/(ab) + (mu/a).conj(nu/b)) keeps huge points finite
    let scale = |z: &[Complex64]| z.iter().map(|w| w.norm()).fold(1.0, f64::max);
    let (a, b) = (scale(mu.coords()), scale(nu.coords()));
    let scaled = mu
        .coords()
        .iter()
        .zip(nu.coords())
        .fold(Complex64::new(1.0 / a / b, 0.0), |acc, (x, y)| acc + (x / a) * (y / b).conj());
    let log_modulus = scaled.norm().ln() + a.ln() + b.ln();
    if log_modulus < crate::geometry::SINGULAR_PAIR_TOL.ln() {
        return Err(Error::SingularPair {
            modulus: log_modulus.exp(),
        });
    }
    Ok(Complex64::new(log_modulus, scaled.arg()) * spec.m as f64)
}

/// `|<psi_mu, v> - v(mu)|` with the inner product evaluated by quadrature.
pub fn reproducing_residual(spec: &BasisSpec, v: &HilbertVector, mu: &ChartPoint) -> Result<f64> {
    spec.check_point(mu.coords())?;
    check_len(spec, v)?;
    let m = spec.m;
    let c_m = spec.c_m;
    let z = mu.coords();
    let numeric = spec
        .rule
        .integrate_nodes(|n| {
            // conj(psi_mu(nu)) (1+|nu|^2)^(-m/2) * v(nu) (1+|nu|^2)^(-m/2)
            let k = (pairing(n.point, z).conj() * n.inv_one_plus.sqrt()).powu(m);
            k * v.eval_normalized(spec, n.point) * (c_m * n.fs_weight)
        })?
        .value;
    Ok((numeric - v.eval(spec, z)).norm())
}

/// `|c(m) integral <v1, psi_mu><psi_mu, v2> e^{-m Phi(mu)} dV(mu) - <v1, v2>|`.
pub fn resolution_check(spec: &BasisSpec, v1: &HilbertVector, v2: &HilbertVector) -> Result<f64> {
    check_len(spec, v1)?;
    check_len(spec, v2)?;
    let c_m = spec.c_m;
    let integral = spec
        .rule
        .integrate_nodes(|n| {
            let psi = spec.normalized_coherent(n.point);
            v1.coeffs.dotc(&psi) * psi.dotc(&v2.coeffs) * (c_m * n.fs_weight)
        })?
        .value;
    Ok((integral - v1.dot(v2)).norm())
}

/// Reproducing residuals of every basis vector at `mu`, each divided by
/// `1 + |Psi_I(mu)|`, in basis order.
pub fn scaled_reproducing_residuals(spec: &BasisSpec, mu: &ChartPoint) -> Result<Vec<f64>> {
    spec.check_point(mu.coords())?;
    let nodes = spec.rule.nodes();
    let z = mu.coords();
    let m = spec.m;
    let kernel = DVector::from_iterator(
        nodes.len(),
        nodes.iter().map(|n| {
            (pairing(n.point, z).conj() * n.inv_one_plus.sqrt()).powu(m) * (spec.c_m * n.fs_weight).sqrt()
        }),
    );
    let numeric = spec.sampled_basis().transpose() * kernel;
    Ok(numeric
        .iter()
        .zip(spec.basis_values(z))
        .map(|(a, b)| (a - b).norm() / (1.0 + b.norm()))
        .collect())
}

/// `c(m) integral <e_I, psi_mu><psi_mu, e_J> e^{-m Phi(mu)} dV(mu)` for all basis pairs.
pub fn resolution_matrix(spec: &BasisSpec) -> DMatrix<Complex64> {
    let b = spec.sampled_basis();
    b.transpose() * b.map(|z| z.conj())
}

/// Gram matrix `<Psi_I, Psi_J>` by quadrature.
pub fn gram_matrix(spec: &BasisSpec) -> DMatrix<Complex64> {
    let b = spec.sampled_basis();
    b.adjoint() * b.as_ref()
}

fn check_len(spec: &BasisSpec, v: &HilbertVector) -> Result<()> {
    if v.len() != spec.len() {
        return Err(Error::DimensionMismatch {
            expected: spec.len(),
            actual: v.len(),
        });
    }
    Ok(())
}
