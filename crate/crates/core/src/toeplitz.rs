//! Toeplitz quantization: `T_f = Pi^m (f .)` restricted to the level-`m` space.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::functions::{default_sup_estimate, Bracket, TestFunction};
use crate::geometry::ScalarField;
use crate::hilbert::{BasisSpec, HilbertVector};
use crate::operators::{log_log_slope, OperatorMatrix};
use crate::quadrature::QuadratureRule;

/// Quadrature level used for Toeplitz matrices at level `m` when none is given.
///
/// The shipped functions carry up to three extra powers of `1/(1+|mu|^2)`
/// (their brackets included), so the rule must be exact a few degrees past `m`.
pub fn default_level(m: u32) -> u32 {
    QuadratureRule::level_for(m + 4)
}

fn sample<F>(spec: &BasisSpec, f: &F) -> Result<Vec<Complex64>>
where
    F: ScalarField + ?Sized,
{
    let nodes = spec.rule().nodes();
    let values: Vec<Complex64> = (0..nodes.len())
        .into_par_iter()
        .map(|k| f.value(nodes.node(k).point))
        .collect();
    if let Some(k) = values.iter().position(|v| !(v.re.is_finite() && v.im.is_finite())) {
        return Err(Error::NonFiniteIntegrand {
            node: k,
            point: format!("{:?}", nodes.node(k).point),
        });
    }
    Ok(values)
}

/// Coefficients `<Psi_I, g>` of the orthogonal projection of `g`.
pub fn project<F>(spec: &BasisSpec, g: &F) -> Result<HilbertVector>
where
    F: ScalarField + ?Sized,
{
    let nodes = spec.rule().nodes();
    let b = spec.sampled_basis();
    let m = spec.level() as f64;
    let c_m = spec.c_m();
    let values = sample(spec, g)?;
    let weighted = DVector::from_iterator(
        values.len(),
        values
            .iter()
            .enumerate()
            .map(|(k, v)| {
                let n = nodes.node(k);
                v * (n.inv_one_plus.powf(0.5 * m) * (c_m * n.fs_weight).sqrt())
            }),
    );
    Ok(HilbertVector {
        coeffs: b.adjoint() * weighted,
    })
}

#[derive(Debug, Clone)]
pub struct ToeplitzMatrix {
    pub operator: OperatorMatrix,
    pub descriptor: String,
}

impl ToeplitzMatrix {
    pub fn entries(&self) -> &DMatrix<Complex64> {
        self.operator.entries()
    }
}

/// `(T_f)_IJ = <Psi_I, f Psi_J>` by quadrature.
pub fn toeplitz_matrix<F>(spec: Arc<BasisSpec>, f: &F) -> Result<OperatorMatrix>
where
    F: ScalarField + ?Sized,
{
    let values = sample(&spec, f)?;
    let b = spec.sampled_basis();
    let mut fb = b.as_ref().clone();
    for j in 0..fb.ncols() {
        for (k, v) in values.iter().enumerate() {
            fb[(k, j)] *= v;
        }
    }
    let entries = b.adjoint() * fb;
    OperatorMatrix::new(spec, entries)
}

/// Toeplitz matrix of a shipped function, with its descriptor.
pub fn toeplitz_of(spec: Arc<BasisSpec>, f: TestFunction) -> Result<ToeplitzMatrix> {
    Ok(ToeplitzMatrix {
        operator: toeplitz_matrix(spec, &f)?,
        descriptor: f.id().to_string(),
    })
}

/// Largest singular value.
pub fn operator_norm(t: &DMatrix<Complex64>) -> f64 {
    if t.is_empty() {
        return 0.0;
    }
    t.singular_values().max()
}

/// `|| m [T_f, T_g] - i T_{f,g} ||` at the level of `spec`.
pub fn commutator_defect<F, G>(spec: Arc<BasisSpec>, f: &F, g: &G) -> Result<f64>
where
    F: ScalarField + ?Sized,
    G: ScalarField + ?Sized,
{
    let m = spec.level() as f64;
    let tf = toeplitz_matrix(spec.clone(), f)?;
    let tg = toeplitz_matrix(spec.clone(), g)?;
    let tb = toeplitz_matrix(spec, &Bracket { f, g })?;
    let comm = tf.commutator(&tg)?;
    let defect = comm.entries() * Complex64::new(m, 0.0) - tb.entries() * Complex64::i();
    Ok(operator_norm(&defect))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormRow {
    pub m: u32,
    pub norm: f64,
    pub sup: f64,
    /// `sup |f| - ||T_f||`
    pub defect: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommutatorRow {
    pub m: u32,
    pub defect: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NormSweep {
    pub rows: Vec<NormRow>,
    pub slope: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommutatorSweep {
    pub rows: Vec<CommutatorRow>,
    pub slope: Option<f64>,
}

fn basis_for(d: usize, m: u32, level: Option<u32>) -> Result<Arc<BasisSpec>> {
    let level = level.unwrap_or_else(|| default_level(m));
    Ok(Arc::new(BasisSpec::build(d, m, level)?))
}

fn check_m_list(m_list: &[u32]) -> Result<()> {
    if m_list.is_empty() {
        return Err(Error::InvalidArgument("empty m-list".into()));
    }
    Ok(())
}

/// `||T_f^m||` against the grid estimate of `sup |f|` for each `m`.
pub fn norm_sweep(f: TestFunction, d: usize, m_list: &[u32], level: Option<u32>) -> Result<NormSweep> {
    check_m_list(m_list)?;
    let sup = default_sup_estimate(f, d);
    let rows = m_list
        .par_iter()
        .map(|&m| {
            let spec = basis_for(d, m, level)?;
            let t = toeplitz_matrix(spec, &f)?;
            let norm = operator_norm(t.entries());
            Ok(NormRow {
                m,
                norm,
                sup,
                defect: sup - norm,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ms: Vec<f64> = rows.iter().map(|r| r.m as f64).collect();
    let ds: Vec<f64> = rows.iter().map(|r| r.defect).collect();
    Ok(NormSweep {
        slope: log_log_slope(&ms, &ds),
        rows,
    })
}

pub fn commutator_sweep(
    f: TestFunction,
    g: TestFunction,
    d: usize,
    m_list: &[u32],
    level: Option<u32>,
) -> Result<CommutatorSweep> {
    check_m_list(m_list)?;
    let rows = m_list
        .par_iter()
        .map(|&m| {
            let spec = basis_for(d, m, level)?;
            Ok(CommutatorRow {
                m,
                defect: commutator_defect(spec, &f, &g)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let ms: Vec<f64> = rows.iter().map(|r| r.m as f64).collect();
    let ds: Vec<f64> = rows.iter().map(|r| r.defect).collect();
    Ok(CommutatorSweep {
        slope: log_log_slope(&ms, &ds),
        rows,
    })
}
