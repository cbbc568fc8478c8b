//! The electromagnetic sector carried by the potential vector field `A`.
//!
//! `F` is the antisymmetric part of `∇A`, `<F(X), Y> = ½(<∇_X A, Y> − <X, ∇_Y A>)`.
//! It is half the Maxwell tensor: `2F = dA♭`. Every public output here is the
//! half-strength `F` unless its name says otherwise.

use std::f64::consts::PI;

use nalgebra::{Matrix4, Vector4};

use crate::error::Result;
use crate::geometry::{
    christoffel, eval_metric, metric_at, FieldValue, FiniteDifference, MetricField, OrthonormalFrame, Point,
};

/// An electromagnetic potential given as contravariant components `A^i(x)`.
pub trait PotentialField: Send + Sync {
    fn components(&self, x: &Point) -> Result<Vector4<f64>>;
    fn name(&self) -> String;
}

/// The tensor `F` at a point in two index placements.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Faraday {
    /// `F_ij = <F(∂_i), ∂_j> = ½(∂_i A♭_j − ∂_j A♭_i)`.
    pub lowered: Matrix4<f64>,
    /// Matrix of the operator `X ↦ F(X)`: `F(X)^i = mixed[(i, j)] X^j`, i.e. `mixed = g⁻¹ lowered^T`.
    pub mixed: Matrix4<f64>,
}

impl Faraday {
    pub fn from_lowered(lowered: Matrix4<f64>, inverse_metric: &Matrix4<f64>) -> Self {
        Self {
            lowered,
            mixed: inverse_metric * lowered.transpose(),
        }
    }

    pub fn zero() -> Self {
        Self {
            lowered: Matrix4::zeros(),
            mixed: Matrix4::zeros(),
        }
    }

    pub fn apply(&self, x: &Vector4<f64>) -> Vector4<f64> {
        self.mixed * x
    }

    /// `<F(X), Y>`.
    pub fn pairing(&self, x: &Vector4<f64>, y: &Vector4<f64>) -> f64 {
        x.dot(&(self.lowered * y))
    }

    /// The physical Maxwell tensor `2F`, lowered.
    pub fn maxwell_lowered(&self) -> Matrix4<f64> {
        self.lowered * 2.0
    }

    /// `F∘F` as a (1,1) operator.
    pub fn squared(&self) -> Matrix4<f64> {
        self.mixed * self.mixed
    }

    /// `(F∘F)♭_ij = <F(F(∂_i)), ∂_j>`.
    pub fn squared_lowered(&self, g: &Matrix4<f64>) -> Matrix4<f64> {
        (g * self.squared()).transpose()
    }
}

impl FieldValue for Faraday {
    fn zeroed(&self) -> Self {
        Faraday::zero()
    }
    fn add_scaled(&mut self, s: f64, other: &Self) {
        self.lowered.add_scaled(s, &other.lowered);
        self.mixed.add_scaled(s, &other.mixed);
    }
}

fn lowered_potential(gf: &dyn MetricField, pf: &dyn PotentialField, x: &Point) -> Result<Vector4<f64>> {
    Ok(eval_metric(gf, x)? * pf.components(x)?)
}

/// `F` from the exterior derivative of the lowered potential `A♭`.
pub fn faraday(gf: &dyn MetricField, pf: &dyn PotentialField, p: &Point, fd: &FiniteDifference) -> Result<Faraday> {
    let g = metric_at(gf, p)?;
    let ginv = g
        .try_inverse()
        .ok_or(crate::Error::SingularMetric { point: (*p).into() })?;
    let da = fd.gradient(|q: &Point| lowered_potential(gf, pf, q), p)?;
    let lowered = Matrix4::from_fn(|i, j| 0.5 * (da[i][j] - da[j][i]));
    Ok(Faraday::from_lowered(lowered, &ginv))
}

/// `F` from the antisymmetrized covariant derivative of the vector field `A`:
/// `∇_a A_b = g_bc (∂_a A^c + Γ^c_{ad} A^d)`, `F_ab = ½(∇_a A_b − ∇_b A_a)`.
pub fn faraday_covariant(
    gf: &dyn MetricField,
    pf: &dyn PotentialField,
    p: &Point,
    fd: &FiniteDifference,
) -> Result<Faraday> {
    let g = metric_at(gf, p)?;
    let ginv = g
        .try_inverse()
        .ok_or(crate::Error::SingularMetric { point: (*p).into() })?;
    let gamma = christoffel(gf, p, fd)?;
    let a = pf.components(p)?;
    let da = fd.gradient(|q: &Point| pf.components(q), p)?;
    // nabla[(a, b)] = ∇_a A_b
    let mut nabla = Matrix4::zeros();
    for k in 0..4 {
        let upper = da[k] + gamma.direction_matrix(k) * a;
        nabla.set_row(k, &(g * upper).transpose());
    }
    let lowered = (nabla - nabla.transpose()) * 0.5;
    Ok(Faraday::from_lowered(lowered, &ginv))
}

/// `(∇_k F)^i_j`, indexed `[k]`: `∂_k F + G_k F − F G_k` with `G_k = (Γ^i_{km})`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NablaFaraday(pub [Matrix4<f64>; 4]);

impl NablaFaraday {
    /// `(∇_X F)` as an operator matrix.
    pub fn along(&self, x: &Vector4<f64>) -> Matrix4<f64> {
        (0..4).fold(Matrix4::zeros(), |acc, k| acc + self.0[k] * x[k])
    }

    /// `div F = g^{kj} (∇_k F)(∂_j)`.
    pub fn divergence(&self, inverse_metric: &Matrix4<f64>) -> Vector4<f64> {
        let mut out = Vector4::zeros();
        for k in 0..4 {
            for j in 0..4 {
                out += self.0[k].column(j) * inverse_metric[(k, j)];
            }
        }
        out
    }

    /// `div F = Σ_a ε_a (∇_{e_a} F)(e_a)`.
    pub fn divergence_frame(&self, frame: &OrthonormalFrame) -> Vector4<f64> {
        frame
            .vectors
            .iter()
            .zip(frame.signs)
            .fold(Vector4::zeros(), |acc, (e, eps)| acc + self.along(e) * e * eps)
    }
}

pub fn nabla_faraday(
    gf: &dyn MetricField,
    pf: &dyn PotentialField,
    p: &Point,
    fd: &FiniteDifference,
) -> Result<NablaFaraday> {
    let f = faraday(gf, pf, p, fd)?;
    let gamma = christoffel(gf, p, fd)?;
    let df = fd.gradient(|q: &Point| Ok(faraday(gf, pf, q, fd)?.mixed), p)?;
    Ok(NablaFaraday(std::array::from_fn(|k| {
        let gk = gamma.direction_matrix(k);
        df[k] + gk * f.mixed - f.mixed * gk
    })))
}

/// `div F` by coordinate contraction.
pub fn div_faraday(
    gf: &dyn MetricField,
    pf: &dyn PotentialField,
    p: &Point,
    fd: &FiniteDifference,
) -> Result<Vector4<f64>> {
    let g = metric_at(gf, p)?;
    let ginv = g
        .try_inverse()
        .ok_or(crate::Error::SingularMetric { point: (*p).into() })?;
    Ok(nabla_faraday(gf, pf, p, fd)?.divergence(&ginv))
}

/// `tr(F∘F) = F^i_m F^m_i`.
pub fn trace_ff(f: &Faraday) -> f64 {
    f.squared().trace()
}

/// `T^elec = −(1/4π)(F∘F − ¼ tr(F∘F) g)`, lowered.
pub fn stress_energy_em(g: &Matrix4<f64>, f: &Faraday) -> Matrix4<f64> {
    (f.squared_lowered(g) - g * (0.25 * trace_ff(f))) * (-1.0 / (4.0 * PI))
}

/// The same tensor in index form, `(1/4π)(F_im F^m_j − ¼ g_ij F_mn F^mn)`,
/// reading `F^m_j` as the component of the operator `F(∂_j)`.
pub fn stress_energy_em_indexed(g: &Matrix4<f64>, f: &Faraday) -> Matrix4<f64> {
    let ginv = g.try_inverse().unwrap_or_else(Matrix4::zeros);
    let upper = ginv * f.lowered * ginv.transpose();
    let contraction: f64 = f.lowered.component_mul(&upper).sum();
    (f.lowered * f.mixed - g * (0.25 * contraction)) * (1.0 / (4.0 * PI))
}

/// Cyclic sum `∂_i F_jk + ∂_j F_ki + ∂_k F_ij`, maximized over index triples.
pub fn closedness_violation(
    gf: &dyn MetricField,
    pf: &dyn PotentialField,
    p: &Point,
    fd: &FiniteDifference,
) -> Result<f64> {
    let df = fd.gradient(|q: &Point| Ok(faraday(gf, pf, q, fd)?.lowered), p)?;
    let mut worst: f64 = 0.0;
    for i in 0..4 {
        for j in 0..4 {
            for k in 0..4 {
                let s = df[i][(j, k)] + df[j][(k, i)] + df[k][(i, j)];
                worst = worst.max(s.abs());
            }
        }
    }
    Ok(worst)
}
