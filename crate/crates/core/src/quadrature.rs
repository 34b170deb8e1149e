//! Product quadrature over C^d for Fubini–Study weighted integrands.
//!
//! Each coordinate is written in polar form `mu_k = r_k e^{i theta_k}`.
//! Angles use a uniform grid of `K` points (exact for trigonometric
//! polynomials of degree `< K`). The squared radii `s_k = r_k^2` are
//! compactified jointly by `t = s / (1 + sum s)`, which maps the positive
//! orthant onto the unit simplex (for `d = 1` this is `u = r^2/(1+r^2)`).
//! The simplex is collapsed onto the unit cube and sampled with a
//! Gauss–Legendre rule of `n` points per axis. Under this substitution
//!
//! ```text
//! |mu^I|^2 (1+|mu|^2)^-(m+d+1) |dmu ^ dconj(mu)|  =  t^I (1 - sum t)^(m-|I|) dt dtheta
//! ```
//!
//! is a polynomial, so every integrand built from level-`m` sections,
//! coherent states, and the rational test functions is integrated exactly
//! once `n` and `K` are large enough.
//!
//! A rule of level `L` uses `K = 4(L+1)` angles and `n = 8(L+1)` radial
//! points per axis. It is exact for all integrands appearing at quantization
//! level `m <= m_max(L) = 4L + 1` (angular frequencies up to `m + 2`).

use std::f64::consts::PI;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::hilbert::MultiIndex;

/// Default cap on the number of nodes in one rule.
pub const DEFAULT_NODE_CAP: usize = 10_000_000;

const PAIRWISE_BLOCK: usize = 32;

/// Gauss–Legendre nodes and weights on `[0, 1]`.
pub fn gauss_legendre_unit(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..(n + 1) / 2 {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        if d.is_finite() {
            dp = d;
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        // x is the i-th largest root on [-1, 1]
        nodes[n - 1 - i] = 0.5 * (1.0 + x);
        nodes[i] = 0.5 * (1.0 - x);
        weights[n - 1 - i] = 0.5 * w;
        weights[i] = 0.5 * w;
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Sum in a fixed binary-tree order.
pub fn pairwise_sum(values: &[Complex64]) -> Complex64 {
    if values.len() <= PAIRWISE_BLOCK {
        return values.iter().fold(Complex64::new(0.0, 0.0), |a, b| a + b);
    }
    let mid = values.len() / 2;
    pairwise_sum(&values[..mid]) + pairwise_sum(&values[mid..])
}

/// Nodes of one product rule, stored flat.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeSet {
    d: usize,
    points: Vec<Complex64>,
    /// weights for the Fubini–Study volume `dV`
    fs_weights: Vec<f64>,
    /// `1 / (1 + |mu|^2)` at each node, computed without cancellation
    inv_one_plus: Vec<f64>,
}

/// Borrowed view of one node.
#[derive(Debug, Clone, Copy)]
pub struct Node<'a> {
    pub point: &'a [Complex64],
    pub fs_weight: f64,
    pub inv_one_plus: f64,
}

impl<'a> Node<'a> {
    /// Weight against the coordinate measure `|dmu ^ dconj(mu)|`.
    pub fn coordinate_weight(&self) -> f64 {
        self.fs_weight / self.inv_one_plus.powi(self.point.len() as i32 + 1)
    }

    /// Weight for the level-`m` measure `(1+|mu|^2)^-m dV`.
    pub fn level_weight(&self, m: u32) -> f64 {
        self.fs_weight * self.inv_one_plus.powi(m as i32)
    }
}

impl NodeSet {
    fn build(d: usize, angular: usize, radial: usize) -> Self {
        let (gl_x, gl_w) = gauss_legendre_unit(radial);
        let angles: Vec<Complex64> = (0..angular)
            .map(|j| Complex64::from_polar(1.0, 2.0 * PI * j as f64 / angular as f64))
            .collect();
        let angle_weight = (2.0 * PI / angular as f64).powi(d as i32);

        // collapsed simplex: t_k = a_k prod_{l<k} (1 - a_l)
        let mut radial_nodes: Vec<(Vec<f64>, f64, f64)> = Vec::new();
        let mut idx = vec![0usize; d];
        loop {
            let mut rem = 1.0;
            let mut jac = 1.0;
            let mut w = 1.0;
            let mut t = Vec::with_capacity(d);
            for (k, &i) in idx.iter().enumerate() {
                let a = gl_x[i];
                t.push(rem * a);
                jac *= rem;
                w *= gl_w[i];
                rem *= 1.0 - a;
                let _ = k;
            }
            // rem = 1 - sum t = 1 / (1 + |mu|^2)
            let radii: Vec<f64> = t.iter().map(|tk| (tk / rem).sqrt()).collect();
            radial_nodes.push((radii, w * jac * angle_weight, rem));
            if !advance(&mut idx, radial) {
                break;
            }
        }

        let per_radial = angular.pow(d as u32);
        let total = radial_nodes.len() * per_radial;
        let mut points = Vec::with_capacity(total * d);
        let mut fs_weights = Vec::with_capacity(total);
        let mut inv_one_plus = Vec::with_capacity(total);
        let mut aidx = vec![0usize; d];
        for (radii, w, rem) in &radial_nodes {
            aidx.iter_mut().for_each(|a| *a = 0);
            loop {
                for k in 0..d {
                    points.push(angles[aidx[k]] * radii[k]);
                }
                fs_weights.push(*w);
                inv_one_plus.push(*rem);
                if !advance(&mut aidx, angular) {
                    break;
                }
            }
        }
        Self {
            d,
            points,
            fs_weights,
            inv_one_plus,
        }
    }

    pub fn len(&self) -> usize {
        self.fs_weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.fs_weights.is_empty()
    }

    pub fn node(&self, k: usize) -> Node<'_> {
        Node {
            point: &self.points[k * self.d..(k + 1) * self.d],
            fs_weight: self.fs_weights[k],
            inv_one_plus: self.inv_one_plus[k],
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = Node<'_>> + '_ {
        (0..self.len()).map(move |k| self.node(k))
    }

    /// `sum_k f(node_k)` with a deterministic reduction order.
    pub fn sum<F>(&self, f: F) -> Result<Complex64>
    where
        F: Fn(Node<'_>) -> Complex64 + Sync,
    {
        let terms: Vec<Complex64> = (0..self.len())
            .into_par_iter()
            .map(|k| f(self.node(k)))
            .collect();
        if let Some(bad) = terms.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(Error::NonFiniteIntegrand {
                node: bad,
                point: format!("{:?}", self.node(bad).point),
            });
        }
        Ok(pairwise_sum(&terms))
    }
}

fn advance(idx: &mut [usize], base: usize) -> bool {
    for slot in idx.iter_mut().rev() {
        *slot += 1;
        if *slot < base {
            return true;
        }
        *slot = 0;
    }
    false
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    d: usize,
    level: u32,
    fine: NodeSet,
    coarse: NodeSet,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntegrationResult {
    pub value: Complex64,
    /// `|value(level L) - value(level L-1)|`
    pub error_estimate: f64,
}

impl QuadratureRule {
    pub fn angular_count(level: u32) -> usize {
        4 * (level as usize + 1)
    }

    pub fn radial_count(level: u32) -> usize {
        8 * (level as usize + 1)
    }

    /// Largest quantization level integrated exactly at `level`.
    pub fn m_max(level: u32) -> u32 {
        4 * level + 1
    }

    /// Smallest level whose rule is exact for quantization level `m`.
    pub fn level_for(m: u32) -> u32 {
        (m.saturating_sub(1)).div_ceil(4).max(1)
    }

    pub fn node_count(d: usize, level: u32) -> usize {
        (Self::angular_count(level) * Self::radial_count(level))
            .checked_pow(d as u32)
            .unwrap_or(usize::MAX)
    }

    pub fn build(d: usize, level: u32) -> Result<Self> {
        Self::build_with_cap(d, level, DEFAULT_NODE_CAP)
    }

    pub fn build_with_cap(d: usize, level: u32, cap: usize) -> Result<Self> {
        if d == 0 || level == 0 {
            return Err(Error::InvalidArgument(format!(
                "quadrature needs d >= 1 and level >= 1 (got d = {d}, level = {level})"
            )));
        }
        let requested = Self::node_count(d, level);
        if requested > cap {
            return Err(Error::ResourceLimit { requested, cap });
        }
        let fine = NodeSet::build(d, Self::angular_count(level), Self::radial_count(level));
        let coarse = NodeSet::build(
            d,
            Self::angular_count(level - 1),
            Self::radial_count(level - 1),
        );
        Ok(Self {
            d,
            level,
            fine,
            coarse,
        })
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn nodes(&self) -> &NodeSet {
        &self.fine
    }

    pub fn coarse_nodes(&self) -> &NodeSet {
        &self.coarse
    }

    /// `integral f |dmu ^ dconj(mu)|` over C^d.
    pub fn integrate<F>(&self, f: F) -> Result<IntegrationResult>
    where
        F: Fn(&[Complex64]) -> Complex64 + Sync,
    {
        self.integrate_nodes(|n| f(n.point) * n.coordinate_weight())
    }

    /// `integral f dV` over C^d.
    pub fn integrate_fs<F>(&self, f: F) -> Result<IntegrationResult>
    where
        F: Fn(&[Complex64]) -> Complex64 + Sync,
    {
        self.integrate_nodes(|n| f(n.point) * n.fs_weight)
    }

    /// Sum of node contributions on the fine and coarse node sets.
    pub fn integrate_nodes<F>(&self, term: F) -> Result<IntegrationResult>
    where
        F: Fn(Node<'_>) -> Complex64 + Sync,
    {
        let value = self.fine.sum(&term)?;
        let coarse = self.coarse.sum(&term)?;
        Ok(IntegrationResult {
            value,
            error_estimate: (value - coarse).norm(),
        })
    }
}

/// Convenience wrapper mirroring [`QuadratureRule::integrate`].
pub fn integrate<F>(f: F, rule: &QuadratureRule) -> Result<IntegrationResult>
where
    F: Fn(&[Complex64]) -> Complex64 + Sync,
{
    rule.integrate(f)
}

pub fn build_rule(d: usize, level: u32) -> Result<QuadratureRule> {
    QuadratureRule::build(d, level)
}

/// `integral |mu^I|^2 (1+|mu|^2)^-m dV` in closed form:
/// `(2 pi)^d * prod(q_k!) * (m - |I|)! / (m + d)!`.
pub fn moment(index: &MultiIndex, m: u32) -> Result<f64> {
    let degree = index.degree();
    if degree > m {
        return Err(Error::IndexOutOfRange { degree, m });
    }
    let d = index.dim();
    // (m+d)! / ((m-|I|)! prod q_k!) = (m+1)...(m+d) * multinomial(m; m-|I|, q)
    let rising: f64 = (1..=d as u32).map(|k| (m + k) as f64).product();
    Ok((2.0 * PI).powi(d as i32) / (rising * multinomial(m, index.exponents())))
}

/// `m! / ((m - sum q)! prod q_k!)`.
pub(crate) fn multinomial(m: u32, q: &[u32]) -> f64 {
    let mut acc = 1.0;
    let mut n = m;
    for &qk in q {
        acc *= binomial(n, qk);
        n -= qk;
    }
    acc
}

fn binomial(n: u32, k: u32) -> f64 {
    let k = k.min(n - k);
    let mut acc = 1.0;
    for i in 0..k {
        acc = acc * (n - i) as f64 / (i + 1) as f64;
    }
    acc.round()
}
