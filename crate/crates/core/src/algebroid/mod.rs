//! The algebroid `T̂M = T̄M ⊕ <ξ>` associated with the affine metric
//! `(X, Y) = 1 + <X − A, Y − A>`.
//!
//! Fiber metric `<X̄ + fξ, Ȳ + gξ> = <X, Y> + fg`, anchor `ρ(X̄ + fξ) = X`, and
//! bracket `[X̄, Ȳ] = [X, Y]‾ + 2<F(X), Y>ξ`, `[X̄, ξ] = 0`, extended by Leibniz.
//! The Levi-Civita connection is available twice: from the Koszul formula
//! (brackets and directional derivatives only) and in closed form. The same
//! pairing exists for the curvature.

mod connection;
mod curvature;
mod field;
mod section;

use std::sync::Arc;

use nalgebra::{DMatrix, DVector, Matrix4, Matrix5};

use crate::affine::AffineInnerProduct;
use crate::em::{faraday, PotentialField};
use crate::error::Result;
use crate::geometry::{christoffel, metric_at, FiniteDifference, MetricField, Point};

pub use connection::{connection_from_jet, structure_violation};
pub use curvature::{AlgebroidCurvature, CurvatureHat, RicciHat};
pub use field::{fit_potential_scale, residuals, BlockResidual, EinsteinBlocks, Residuals, SourceBlocks};
pub use section::{anchor, ConstantSection, FiberValue, FnSection, PolynomialSection, SectionField};

/// A Lorentzian metric together with the potential `A` of its affine metric.
#[derive(Clone)]
pub struct AffineSpacetime {
    metric: Arc<dyn MetricField>,
    potential: Arc<dyn PotentialField>,
    fd: FiniteDifference,
}

impl AffineSpacetime {
    pub fn new(metric: Arc<dyn MetricField>, potential: Arc<dyn PotentialField>) -> Self {
        Self {
            metric,
            potential,
            fd: FiniteDifference::default(),
        }
    }

    pub fn with_finite_difference(mut self, fd: FiniteDifference) -> Self {
        self.fd = fd;
        self
    }

    pub fn metric(&self) -> &dyn MetricField {
        self.metric.as_ref()
    }

    pub fn metric_arc(&self) -> Arc<dyn MetricField> {
        self.metric.clone()
    }

    pub fn potential(&self) -> &dyn PotentialField {
        self.potential.as_ref()
    }

    pub fn potential_arc(&self) -> Arc<dyn PotentialField> {
        self.potential.clone()
    }

    pub fn finite_difference(&self) -> &FiniteDifference {
        &self.fd
    }

    pub fn metric_at(&self, p: &Point) -> Result<Matrix4<f64>> {
        metric_at(self.metric(), p)
    }

    pub fn faraday(&self, p: &Point) -> Result<crate::em::Faraday> {
        faraday(self.metric(), self.potential(), p, &self.fd)
    }

    pub fn christoffel(&self, p: &Point) -> Result<crate::geometry::Christoffel> {
        christoffel(self.metric(), p, &self.fd)
    }

    /// Fiber metric `diag(g, 1)` in the basis `(ē_0, …, ē_3, ξ)`.
    pub fn fiber_metric(&self, p: &Point) -> Result<Matrix5<f64>> {
        let g = self.metric_at(p)?;
        let mut m = Matrix5::zeros();
        m.fixed_view_mut::<4, 4>(0, 0).copy_from(&g);
        m[(4, 4)] = 1.0;
        Ok(m)
    }

    /// The pointwise affine inner product `(X, Y) = 1 + <X − A, Y − A>` on `T_pM`.
    pub fn affine_inner_product(&self, p: &Point) -> Result<AffineInnerProduct> {
        let g = self.metric_at(p)?;
        let a = self.potential.components(p)?;
        AffineInnerProduct::new(
            DMatrix::from_fn(4, 4, |i, j| g[(i, j)]),
            DVector::from_iterator(4, a.iter().copied()),
            1.0,
        )
        .map_err(|e| crate::Error::InvalidArgument(e.to_string()))
    }

    /// Curvature data at `p` for the closed-form algebroid quantities.
    pub fn curvature(&self, p: &Point) -> Result<AlgebroidCurvature> {
        AlgebroidCurvature::compute(self, p)
    }
}
