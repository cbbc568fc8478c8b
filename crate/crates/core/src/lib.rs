//! Affine metrics on Lorentzian 4-manifolds and their associated algebroid.
//!
//! An affine metric `(X, Y) = 1 + <X - A, Y - A>` couples a Lorentzian metric
//! `<.,.>` with a vector field `A`. The fiber bundle `T̂M = T̄M ⊕ <ξ>` built from
//! it carries an anchor, a bracket twisted by the antisymmetric part `F` of
//! `∇A`, and a Levi-Civita connection whose curvature packages gravity and
//! electromagnetism into one 5×5 field equation.
//!
//! Module map:
//! - [`affine`]: pointwise affine inner products and the hat space.
//! - [`geometry`]: coordinate tensor calculus (finite differences, Christoffel
//!   symbols, Riemann/Ricci/scalar curvature, orthonormal frames).
//! - [`em`]: the tensor `F`, its covariant derivative, divergence and stress-energy.
//! - [`algebroid`]: bracket, connection, curvature, Ricci and the block field equation.
//! - [`dynamics`]: integration of algebroid geodesics (charged world-lines).
//! - [`families`]: named metric and potential families used by tests and the CLI.
//!
//! Units are geometric throughout: `c = 1`, `G = 1`, `ε₀ = 1/16π`.

pub mod affine;
pub mod algebroid;
pub mod dynamics;
pub mod em;
pub mod error;
pub mod families;
pub mod geometry;
pub mod poly;

pub use error::{Error, Result};
pub use geometry::{Point, ValidityBox};

/// Banner attached to every generated report.
pub const UNIT_BANNER: &str = "units: c = 1, G = 1, eps0 = 1/(16 pi); F is the half-strength tensor, Maxwell tensor = 2F";
