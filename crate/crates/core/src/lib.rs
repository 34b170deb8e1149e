//! Berezin and Berezin-Toeplitz quantization on the affine chart `U_0 = C^d` of `CP^d`.
//!
//! The level-`m` Hilbert space is spanned by monomials of degree `<= m`,
//! orthonormal against `c(m) e^{-m Phi_FS} dV`. Operators are `N x N` matrices
//! in that basis; their covariant symbols, star products and Toeplitz
//! quantizations are evaluated exactly or by a fixed quadrature rule.
//! [`pullback`] carries everything to a manifold cell through a
//! diffeomorphism, and [`torus`] computes the holonomy example on the torus.
//!
//! ```
//! use berezin::geometry::ChartPoint;
//! use berezin::hilbert::{coherent_eval, BasisSpec};
//! use num_complex::Complex64;
//!
//! let spec = BasisSpec::with_default_level(1, 2).unwrap();
//! let i = ChartPoint::scalar(Complex64::new(0.0, 1.0)).unwrap();
//! assert_eq!(spec.len(), 3);
//! assert!((coherent_eval(&spec, &i, &i).unwrap().re - 4.0).abs() < 1e-14);
//! ```

pub mod cli;
pub mod error;
pub mod functions;
pub mod geometry;
pub mod hilbert;
pub mod operators;
pub mod pullback;
pub mod quadrature;
pub mod toeplitz;
pub mod torus;
