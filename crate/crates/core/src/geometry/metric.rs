use nalgebra::{Matrix4, SymmetricEigen, Vector4};
use rand::Rng;

use crate::error::{Error, Result};

/// Chart coordinates `(x⁰, x¹, x², x³)`, with `x⁰` the time-like coordinate.
pub type Point = Vector4<f64>;

/// Axis-aligned coordinate box on which a field may be evaluated.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidityBox {
    pub lo: [f64; 4],
    pub hi: [f64; 4],
}

impl ValidityBox {
    pub fn new(lo: [f64; 4], hi: [f64; 4]) -> Result<Self> {
        if (0..4).any(|k| !(lo[k] < hi[k]) || lo[k].is_nan() || hi[k].is_nan()) {
            return Err(Error::InvalidArgument(format!(
                "empty validity box {lo:?} .. {hi:?}"
            )));
        }
        Ok(Self { lo, hi })
    }

    pub fn unbounded() -> Self {
        Self {
            lo: [f64::NEG_INFINITY; 4],
            hi: [f64::INFINITY; 4],
        }
    }

    pub fn contains(&self, p: &Point) -> bool {
        (0..4).all(|k| p[k].is_finite() && p[k] >= self.lo[k] && p[k] <= self.hi[k])
    }

    pub fn check(&self, p: &Point) -> Result<()> {
        if self.contains(p) {
            Ok(())
        } else {
            Err(Error::OutsideBox { point: (*p).into() })
        }
    }

    pub fn intersect(&self, other: &ValidityBox) -> Result<Self> {
        Self::new(
            std::array::from_fn(|k| self.lo[k].max(other.lo[k])),
            std::array::from_fn(|k| self.hi[k].min(other.hi[k])),
        )
    }

    /// Box pulled in by `margin` on every face.
    pub fn shrink(&self, margin: f64) -> Result<Self> {
        Self::new(
            std::array::from_fn(|k| self.lo[k] + margin),
            std::array::from_fn(|k| self.hi[k] - margin),
        )
    }

    pub fn center(&self) -> Point {
        Point::from_fn(|k, _| 0.5 * (self.lo[k] + self.hi[k]))
    }

    /// Uniform random point; requires finite bounds.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Point {
        Point::from_fn(|k, _| rng.gen_range(self.lo[k]..=self.hi[k]))
    }
}

/// A Lorentzian metric given by its covariant components `g_ij(x)` on a chart.
///
/// Implementations must be re-entrant; evaluation happens from many points and
/// possibly from several threads.
pub trait MetricField: Send + Sync {
    fn components(&self, x: &Point) -> Matrix4<f64>;

    fn validity(&self) -> &ValidityBox;

    /// Analytic `∂_k g_ij`, indexed `[k]`. Only used as a test oracle.
    fn derivatives(&self, _x: &Point) -> Option<[Matrix4<f64>; 4]> {
        None
    }

    fn name(&self) -> String;
}

/// Box-checked evaluation without the signature test; used inside stencils.
pub fn eval_metric(gf: &dyn MetricField, p: &Point) -> Result<Matrix4<f64>> {
    gf.validity().check(p)?;
    let g = gf.components(p);
    if g.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("metric at {:?}", p.as_slice())));
    }
    Ok(g)
}

/// Metric components at `p`, verified symmetric and Lorentzian.
pub fn metric_at(gf: &dyn MetricField, p: &Point) -> Result<Matrix4<f64>> {
    let g = eval_metric(gf, p)?;
    let deviation = (g - g.transpose()).abs().max();
    if deviation > 1e-12 * g.abs().max().max(1.0) {
        return Err(Error::AsymmetricMetric {
            point: (*p).into(),
            deviation,
        });
    }
    let eig = SymmetricEigen::new(g);
    let scale = eig.eigenvalues.abs().max();
    if eig.eigenvalues.iter().any(|&e| e.abs() <= 1e-14 * scale) || scale == 0.0 {
        return Err(Error::SingularMetric { point: (*p).into() });
    }
    let negative = eig.eigenvalues.iter().filter(|&&e| e < 0.0).count();
    if negative != 1 {
        return Err(Error::NonLorentzian {
            point: (*p).into(),
            negative,
        });
    }
    Ok(g)
}

pub fn inverse_metric_at(gf: &dyn MetricField, p: &Point) -> Result<Matrix4<f64>> {
    let g = metric_at(gf, p)?;
    g.try_inverse()
        .ok_or(Error::SingularMetric { point: (*p).into() })
}
