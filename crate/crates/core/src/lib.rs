//! Numerical laboratory for Fourier extension on the paraboloid.
//!
//! The crate implements the constructive objects behind the trilinear and
//! Alpert approaches to the extension conjecture at desk scale: dyadic grids
//! on the base domain, sampled functions, the extension operator with
//! phase-resolved quadrature, Alpert multiwavelets and their mollified
//! versions, line-fiber convolution of pushforward measures, and the
//! weight / case machinery of the Bourgain–Guth argument.
//!
//! Conventions used throughout:
//! * `Φ(x) = (x₁, x₂, x₁² + x₂²)` and `Ef(ξ) = ∫ e^{−iΦ(x)·ξ} f(x) dx`.
//! * Dyadic squares are half-open, `[x₀, x₀+ℓ) × [y₀, y₀+ℓ)`.

pub mod alpert;
pub mod error;
pub mod extension;
pub mod funcrep;
pub mod grid;
pub mod inequality;
pub mod measures;
pub mod quadrature;
pub mod report;

mod par;

pub use error::{Error, Result};
pub use num_complex::Complex64;
