use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Matrix4, Matrix5, Vector4};

use super::AffineSpacetime;
use crate::em::PotentialField;
use crate::error::{Error, Result};
use crate::families::ZeroPotential;
use crate::geometry::{FiniteDifference, MetricField, Point};

/// Blocks of the lowered algebroid Einstein tensor `Ĝ = R̂ic − ½R̂ĝ` under the
/// split `T̂M = T̄M ⊕ <ξ>`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EinsteinBlocks {
    /// Base metric at the point, needed to lower the current.
    pub metric: Matrix4<f64>,
    /// `Ĝ(X̄, Ȳ)`.
    pub barbar: Matrix4<f64>,
    /// `Ĝ(X̄, ξ)`.
    pub mixed: Vector4<f64>,
    /// `Ĝ(ξ, ξ)`.
    pub xixi: f64,
}

impl EinsteinBlocks {
    pub fn from_lowered(g5: &Matrix5<f64>, metric: Matrix4<f64>) -> Self {
        Self {
            metric,
            barbar: g5.fixed_view::<4, 4>(0, 0).into_owned(),
            mixed: g5.fixed_view::<4, 1>(0, 4).into_owned(),
            xixi: g5[(4, 4)],
        }
    }

    pub fn to_lowered(&self) -> Matrix5<f64> {
        let mut m = Matrix5::zeros();
        m.fixed_view_mut::<4, 4>(0, 0).copy_from(&self.barbar);
        for j in 0..4 {
            m[(j, 4)] = self.mixed[j];
            m[(4, j)] = self.mixed[j];
        }
        m[(4, 4)] = self.xixi;
        m
    }
}

/// Right-hand side data `T̂` of the algebroid field equation `Ĝ = 8π T̂`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SourceBlocks {
    /// Mass stress-energy `T^mass_ij`.
    pub t_mass: Matrix4<f64>,
    /// Charge current `J^i` (contravariant).
    pub current: Vector4<f64>,
    /// `T̂(ξ, ξ) = η²/ρ`, charge density squared over mass density.
    pub h: f64,
}

impl SourceBlocks {
    pub fn vacuum() -> Self {
        Self {
            t_mass: Matrix4::zeros(),
            current: Vector4::zeros(),
            h: 0.0,
        }
    }

    /// `H` from charge density `η` and mass density `ρ > 0`.
    pub fn from_densities(t_mass: Matrix4<f64>, current: Vector4<f64>, charge_density: f64, mass_density: f64) -> Result<Self> {
        if !(mass_density > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "mass density must be positive, got {mass_density}"
            )));
        }
        Ok(Self {
            t_mass,
            current,
            h: charge_density * charge_density / mass_density,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BlockResidual {
    pub max_abs: f64,
    pub frobenius: f64,
}

impl BlockResidual {
    fn of<'a>(values: impl IntoIterator<Item = &'a f64>) -> Self {
        let (mut max_abs, mut sq) = (0.0f64, 0.0);
        for v in values {
            max_abs = max_abs.max(v.abs());
            sq += v * v;
        }
        Self {
            max_abs,
            frobenius: sq.sqrt(),
        }
    }
}

/// Residuals of `Ĝ − 8π T̂` split into the Einstein, Maxwell and scalar equations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Residuals {
    /// `barbar − 8π T^mass`.
    pub einstein_tensor: Matrix4<f64>,
    /// `(div F)♭ − 8π J♭`.
    pub maxwell_vector: Vector4<f64>,
    /// `−½(R + 3 tr(F∘F)) − 8π η²/ρ`.
    pub scalar_value: f64,
    pub einstein: BlockResidual,
    pub maxwell: BlockResidual,
    pub scalar: BlockResidual,
    /// Norms over the full symmetric 5×5 residual.
    pub total: BlockResidual,
}

pub fn residuals(blocks: &EinsteinBlocks, src: &SourceBlocks) -> Residuals {
    let k = 8.0 * PI;
    let einstein_tensor = blocks.barbar - src.t_mass * k;
    let maxwell_vector = blocks.mixed - blocks.metric * src.current * k;
    let scalar_value = blocks.xixi - k * src.h;
    let mut full = Matrix5::zeros();
    full.fixed_view_mut::<4, 4>(0, 0).copy_from(&einstein_tensor);
    for j in 0..4 {
        full[(j, 4)] = maxwell_vector[j];
        full[(4, j)] = maxwell_vector[j];
    }
    full[(4, 4)] = scalar_value;
    Residuals {
        einstein: BlockResidual::of(einstein_tensor.iter()),
        maxwell: BlockResidual::of(maxwell_vector.iter()),
        scalar: BlockResidual::of([scalar_value].iter()),
        total: BlockResidual::of(full.iter()),
        einstein_tensor,
        maxwell_vector,
        scalar_value,
    }
}

/// Scale `k` for which `k · unit_potential` best satisfies the source-free
/// Einstein block on `points`.
///
/// The Einstein block is `G_metric + k² E` where `E` is the contribution of the
/// unit potential, so the least-squares optimum over `s = k²` is
/// `s = −Σ<G, E> / Σ<E, E>`. Fails if the optimum is not positive.
pub fn fit_potential_scale(
    metric: Arc<dyn MetricField>,
    unit_potential: Arc<dyn PotentialField>,
    points: &[Point],
    fd: &FiniteDifference,
) -> Result<f64> {
    let bare = AffineSpacetime::new(metric.clone(), Arc::new(ZeroPotential)).with_finite_difference(*fd);
    let charged = AffineSpacetime::new(metric, unit_potential).with_finite_difference(*fd);
    let (mut num, mut den) = (0.0, 0.0);
    for p in points {
        let g0 = bare.curvature(p)?.einstein_blocks().barbar;
        let e = charged.curvature(p)?.einstein_blocks().barbar - g0;
        num -= g0.component_mul(&e).sum();
        den += e.norm_squared();
    }
    if den == 0.0 {
        return Err(Error::InvalidArgument("unit potential carries no field".into()));
    }
    let s = num / den;
    if s <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "least-squares optimum k² = {s} is not positive"
        )));
    }
    Ok(s.sqrt())
}
