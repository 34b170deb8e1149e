//! Holonomy of the level-`m` connection around loops on the torus.
//!
//! The torus minus the two generating circles `A`, `B` is the open square,
//! which [`crate::pullback::TorusChart`] sends onto `C`; the point `zeta` is
//! placed on the open upper hemisphere `|w| < 1` of the sphere chart by
//! [`hemisphere_point`]. The generators are carried by the quarter arcs of the
//! equator `|w| = 1`:
//!
//! ```text
//! E_1^1: w = e^{i phi}, phi in [0, pi/2]      (class A)
//! E_1^2: w = e^{i phi}, phi in [pi/2, pi]     (class B)
//! ```
//!
//! The connection one-form is `theta_1 = Im(conj(w) dw) / (1 + |w|^2)`, whose
//! curvature `2 dx dy / (1 + |w|^2)^2` integrates to `pi` over the hemisphere.
//! A quarter arc contributes `pi/4`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::io::Write;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature::gauss_legendre_unit;

/// Minimum quadrature nodes per segment.
pub const MIN_SAMPLES: usize = 64;
/// Largest accepted change under doubling of the sampling.
pub const REFINEMENT_TOL: f64 = 1e-6;

/// `zeta -> zeta / sqrt(1 + |zeta|^2)`, from `C` onto the open unit disk.
pub fn hemisphere_point(zeta: Complex64) -> Complex64 {
    zeta / (1.0 + zeta.norm_sqr()).sqrt()
}

/// Inverse of [`hemisphere_point`].
pub fn hemisphere_inverse(w: Complex64) -> Result<Complex64> {
    let r2 = w.norm_sqr();
    if !(r2 < 1.0) {
        return Err(Error::OutOfDomain(format!("{w} is not inside the open hemisphere")));
    }
    Ok(w / (1.0 - r2).sqrt())
}

/// A smooth piece of a path in the sphere chart.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Segment {
    Line { from: Complex64, to: Complex64 },
    Arc { center: Complex64, radius: f64, start: f64, end: f64 },
}

impl Segment {
    pub fn quarter_arc(k: u32) -> Self {
        Segment::Arc {
            center: Complex64::new(0.0, 0.0),
            radius: 1.0,
            start: k as f64 * FRAC_PI_2,
            end: (k + 1) as f64 * FRAC_PI_2,
        }
    }

    /// Point and velocity at `t` in `[0, 1]`.
    pub fn at(&self, t: f64) -> (Complex64, Complex64) {
        match *self {
            Segment::Line { from, to } => (from + (to - from) * t, to - from),
            Segment::Arc {
                center,
                radius,
                start,
                end,
            } => {
                let phi = start + (end - start) * t;
                let e = Complex64::from_polar(radius, phi);
                (center + e, e * Complex64::new(0.0, end - start))
            }
        }
    }

    pub fn reversed(&self) -> Self {
        match *self {
            Segment::Line { from, to } => Segment::Line { from: to, to: from },
            Segment::Arc {
                center,
                radius,
                start,
                end,
            } => Segment::Arc {
                center,
                radius,
                start: end,
                end: start,
            },
        }
    }

    fn theta_integral(&self, samples: usize) -> Result<f64> {
        let (x, w) = gauss_legendre_unit(samples);
        let terms: Vec<f64> = x
            .iter()
            .zip(&w)
            .map(|(t, wt)| {
                let (p, v) = self.at(*t);
                wt * (p.conj() * v).im / (1.0 + p.norm_sqr())
            })
            .collect();
        let total: f64 = terms.iter().sum();
        if !total.is_finite() {
            return Err(Error::NonFiniteIntegrand {
                node: 0,
                point: format!("{self:?}"),
            });
        }
        Ok(total)
    }
}

/// Piecewise smooth path in the sphere chart.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Path {
    pub segments: Vec<Segment>,
}

impl Path {
    pub fn new(segments: Vec<Segment>) -> Self {
        Self { segments }
    }

    /// Closed polygon through `vertices`.
    pub fn polygon(vertices: &[Complex64]) -> Self {
        let n = vertices.len();
        Self::new(
            (0..n)
                .map(|k| Segment::Line {
                    from: vertices[k],
                    to: vertices[(k + 1) % n],
                })
                .collect(),
        )
    }

    /// Counterclockwise circle.
    pub fn circle(center: Complex64, radius: f64) -> Self {
        Self::new(vec![Segment::Arc {
            center,
            radius,
            start: 0.0,
            end: 2.0 * PI,
        }])
    }

    /// The full equator, counterclockwise.
    pub fn equator() -> Self {
        Self::new((0..4).map(Segment::quarter_arc).collect())
    }

    /// Upper half of the equator, `E_1 = E_1^1 + E_1^2`.
    pub fn upper_equator() -> Self {
        Self::new(vec![Segment::quarter_arc(0), Segment::quarter_arc(1)])
    }

    /// Lower half of the equator, `E_2`.
    pub fn lower_equator() -> Self {
        Self::new(vec![Segment::quarter_arc(2), Segment::quarter_arc(3)])
    }

    pub fn reversed(&self) -> Self {
        Self::new(self.segments.iter().rev().map(Segment::reversed).collect())
    }

    /// Largest `|w|` along the path, sampled.
    pub fn max_radius(&self, samples: usize) -> f64 {
        let (x, _) = gauss_legendre_unit(samples);
        self.segments
            .iter()
            .flat_map(|s| {
                x.iter()
                    .chain([0.0, 1.0].iter())
                    .map(move |t| s.at(*t).0.norm())
            })
            .fold(0.0, f64::max)
    }

    fn theta_integral(&self, samples: usize) -> Result<f64> {
        let parts = self
            .segments
            .par_iter()
            .map(|s| s.theta_integral(samples))
            .collect::<Result<Vec<_>>>()?;
        Ok(parts.iter().sum())
    }
}

fn check_even(m: u32) -> Result<()> {
    if m % 2 == 1 {
        return Err(Error::OddLevel(m));
    }
    Ok(())
}

/// `integral theta_1` with `samples` nodes per segment, checked against twice as many.
pub fn theta_integral(path: &Path, samples: usize) -> Result<f64> {
    let samples = samples.max(MIN_SAMPLES);
    let coarse = path.theta_integral(samples)?;
    let fine = path.theta_integral(2 * samples)?;
    let change = (fine - coarse).abs();
    if change > REFINEMENT_TOL {
        return Err(Error::PathTooCoarse(change));
    }
    Ok(fine)
}

/// `integral_path m theta_1` for even `m`.
pub fn connection_integral(path: &Path, m: u32) -> Result<f64> {
    connection_integral_with(path, m, MIN_SAMPLES)
}

pub fn connection_integral_with(path: &Path, m: u32, samples: usize) -> Result<f64> {
    check_even(m)?;
    Ok(m as f64 * theta_integral(path, samples)?)
}

/// `integral 2 dx dy / (1 + |w|^2)^2` over the polygon, positive for counterclockwise vertices.
pub fn curvature_integral_polygon(vertices: &[Complex64], order: usize) -> f64 {
    if vertices.len() < 3 {
        return 0.0;
    }
    let (x, w) = gauss_legendre_unit(order.max(8));
    let apex = vertices[0];
    let mut parts = Vec::new();
    for k in 1..vertices.len() - 1 {
        let (b, c) = (vertices[k], vertices[k + 1]);
        let e1 = b - apex;
        let e2 = c - apex;
        let jac = e1.re * e2.im - e1.im * e2.re;
        // collapsed square onto the triangle
        let mut sum = 0.0;
        for (s, ws) in x.iter().zip(&w) {
            for (t, wt) in x.iter().zip(&w) {
                let p = apex + e1 * (s * (1.0 - t)) + e2 * t;
                let r = 1.0 + p.norm_sqr();
                sum += ws * wt * (1.0 - t) * 2.0 / (r * r);
            }
        }
        parts.push(sum * jac);
    }
    parts.iter().sum()
}

/// `integral 2 dx dy / (1 + |w|^2)^2` over a disk.
pub fn curvature_integral_disk(center: Complex64, radius: f64, order: usize) -> f64 {
    let (x, w) = gauss_legendre_unit(order.max(8));
    let mut sum = 0.0;
    for (s, ws) in x.iter().zip(&w) {
        let r = radius * s;
        for (t, wt) in x.iter().zip(&w) {
            let p = center + Complex64::from_polar(r, 2.0 * PI * t);
            let q = 1.0 + p.norm_sqr();
            sum += ws * wt * 2.0 / (q * q) * r;
        }
    }
    sum * radius * 2.0 * PI
}

/// A loop on the torus: homology class `k1 A + k2 B` and an optional contractible tail.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoopSpec {
    pub k1: i64,
    pub k2: i64,
    /// Closed path inside the open cell, in sphere-chart coordinates.
    pub tail: Option<Path>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HolonomyValue {
    pub k1: i64,
    pub k2: i64,
    pub m: u32,
    pub value: Complex64,
}

impl HolonomyValue {
    pub fn phase(&self) -> f64 {
        self.value.arg()
    }
}

/// `exp(-i m (k1 int_{E_1^1} theta_1 + k2 int_{E_1^2} theta_1 + int_tail theta_1))`.
pub fn torus_holonomy(k1: i64, k2: i64, m: u32, tail: Option<&Path>) -> Result<Complex64> {
    holonomy_with(k1, k2, m, tail, MIN_SAMPLES)
}

pub fn holonomy_with(k1: i64, k2: i64, m: u32, tail: Option<&Path>, samples: usize) -> Result<Complex64> {
    check_even(m)?;
    let a = theta_integral(&Path::new(vec![Segment::quarter_arc(0)]), samples)?;
    let b = theta_integral(&Path::new(vec![Segment::quarter_arc(1)]), samples)?;
    let mut total = k1 as f64 * a + k2 as f64 * b;
    if let Some(tail) = tail {
        let reach = tail.max_radius(samples.max(MIN_SAMPLES));
        if !(reach < 1.0) {
            return Err(Error::OutOfDomain(format!(
                "tail reaches |w| = {reach}, outside the open cell"
            )));
        }
        total += theta_integral(tail, samples)?;
    }
    // reduce before scaling so that large classes keep full phase accuracy
    let phase = (m as f64 * total).rem_euclid(2.0 * PI);
    let value = Complex64::from_polar(1.0, -phase);
    // adding +0.0 clears negative zeros
    Ok(Complex64::new(value.re + 0.0, value.im + 0.0))
}

pub fn loop_holonomy(spec: &LoopSpec, m: u32) -> Result<HolonomyValue> {
    Ok(HolonomyValue {
        k1: spec.k1,
        k2: spec.k2,
        m,
        value: torus_holonomy(spec.k1, spec.k2, m, spec.tail.as_ref())?,
    })
}

/// Holonomies over `-k_max <= k1, k2 <= k_max`, row-major in `k1`.
pub fn holonomy_grid(k_max: i64, m: u32) -> Result<Vec<HolonomyValue>> {
    check_even(m)?;
    let mut rows = Vec::new();
    for k1 in -k_max..=k_max {
        for k2 in -k_max..=k_max {
            rows.push(loop_holonomy(&LoopSpec { k1, k2, tail: None }, m)?);
        }
    }
    Ok(rows)
}

/// Largest `|hol(a + b) - hol(a) hol(b)|` over all pairs in the grid whose sum is in the grid.
pub fn multiplicativity_defect(rows: &[HolonomyValue]) -> f64 {
    let find = |k1: i64, k2: i64| rows.iter().find(|r| r.k1 == k1 && r.k2 == k2);
    let mut worst: f64 = 0.0;
    for a in rows {
        for b in rows {
            if let Some(s) = find(a.k1 + b.k1, a.k2 + b.k2) {
                worst = worst.max((s.value - a.value * b.value).norm());
            }
        }
    }
    worst
}

pub const HOLONOMY_HEADER: &str = "k1,k2,m,re,im,phase";

pub fn write_holonomy_csv<W: Write>(rows: &[HolonomyValue], mut out: W) -> Result<()> {
    writeln!(out, "{HOLONOMY_HEADER}")?;
    for r in rows {
        writeln!(
            out,
            "{},{},{},{:.16e},{:.16e},{:.16e}",
            r.k1,
            r.k2,
            r.m,
            r.value.re,
            r.value.im,
            r.phase()
        )?;
    }
    Ok(())
}
