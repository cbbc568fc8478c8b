//! Coordinate-chart tensor calculus on a Lorentzian 4-manifold.
//!
//! Signature is fixed to `(-,+,+,+)`. The Riemann tensor follows
//! `R(X,Y)Z = ∇_X∇_Y Z - ∇_Y∇_X Z - ∇_[X,Y] Z`, stored as `R^l_{kij}` with
//! `R(∂_i,∂_j)∂_k = R^l_{kij} ∂_l`, and `Ric(U,V) = Σ ε_a <R(U,e_a)e_a, V>`.

mod curvature;
mod diff;
mod frame;
mod metric;

pub use curvature::{christoffel, christoffel_analytic, riemann, Christoffel, CurvaturePack, Riemann};
pub use diff::{partial_derivative, FieldValue, FiniteDifference, StencilOrder};
pub use frame::{orthonormal_frame, OrthonormalFrame, FRAME_PIVOT_FLOOR};
pub use metric::{
    eval_metric, inverse_metric_at, metric_at, MetricField, Point, ValidityBox,
};
