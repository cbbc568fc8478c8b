use nalgebra::{Matrix4, Vector4};

use super::diff::{FieldValue, FiniteDifference};
use super::frame::OrthonormalFrame;
use super::metric::{eval_metric, metric_at, MetricField, Point};
use crate::error::{Error, Result};

/// Christoffel symbols of the Levi-Civita connection; `self.0[k][(i, j)] = Γ^k_{ij}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Christoffel(pub [Matrix4<f64>; 4]);

impl Christoffel {
    pub fn get(&self, k: usize, i: usize, j: usize) -> f64 {
        self.0[k][(i, j)]
    }

    /// `Γ(X, Y)^k = Γ^k_{ij} X^i Y^j`, the non-tensorial part of `∇_X Y`.
    pub fn contract(&self, x: &Vector4<f64>, y: &Vector4<f64>) -> Vector4<f64> {
        Vector4::from_fn(|k, _| x.dot(&(self.0[k] * y)))
    }

    /// Matrix `(Γ^i_{km})_{i,m}` for a fixed derivative direction `k`.
    pub fn direction_matrix(&self, k: usize) -> Matrix4<f64> {
        Matrix4::from_fn(|i, m| self.0[i][(k, m)])
    }

    fn from_metric_derivatives(ginv: &Matrix4<f64>, dg: &[Matrix4<f64>; 4]) -> Self {
        // first-kind symbols Γ_{l,ij} = ½ (∂_i g_lj + ∂_j g_li − ∂_l g_ij)
        let first: [Matrix4<f64>; 4] = std::array::from_fn(|l| {
            Matrix4::from_fn(|i, j| 0.5 * (dg[i][(l, j)] + dg[j][(l, i)] - dg[l][(i, j)]))
        });
        Christoffel(std::array::from_fn(|k| {
            let mut m = Matrix4::zeros();
            for (l, fl) in first.iter().enumerate() {
                m += fl * ginv[(k, l)];
            }
            m
        }))
    }
}

impl FieldValue for Christoffel {
    fn zeroed(&self) -> Self {
        Christoffel([Matrix4::zeros(); 4])
    }
    fn add_scaled(&mut self, s: f64, other: &Self) {
        self.0.add_scaled(s, &other.0);
    }
}

fn invert(g: &Matrix4<f64>, p: &Point) -> Result<Matrix4<f64>> {
    g.try_inverse()
        .ok_or(Error::SingularMetric { point: (*p).into() })
}

/// Christoffel symbols from finite differences of the metric components.
pub fn christoffel(gf: &dyn MetricField, p: &Point, fd: &FiniteDifference) -> Result<Christoffel> {
    let g = metric_at(gf, p)?;
    let ginv = invert(&g, p)?;
    let dg = fd.gradient(|q: &Point| eval_metric(gf, q), p)?;
    Ok(Christoffel::from_metric_derivatives(&ginv, &dg))
}

/// Christoffel symbols from the family's analytic metric derivatives, if it has them.
pub fn christoffel_analytic(gf: &dyn MetricField, p: &Point) -> Option<Result<Christoffel>> {
    let dg = gf.derivatives(p)?;
    Some(metric_at(gf, p).and_then(|g| {
        let ginv = invert(&g, p)?;
        Ok(Christoffel::from_metric_derivatives(&ginv, &dg))
    }))
}

/// Riemann tensor; `self.0[l][k][(i, j)] = R^l_{kij}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Riemann(pub [[Matrix4<f64>; 4]; 4]);

impl Riemann {
    pub fn get(&self, l: usize, k: usize, i: usize, j: usize) -> f64 {
        self.0[l][k][(i, j)]
    }

    /// `R(X, Y)Z` as a contravariant vector.
    pub fn apply(&self, x: &Vector4<f64>, y: &Vector4<f64>, z: &Vector4<f64>) -> Vector4<f64> {
        Vector4::from_fn(|l, _| {
            (0..4)
                .map(|k| z[k] * x.dot(&(self.0[l][k] * y)))
                .sum::<f64>()
        })
    }

    /// Coordinate contraction `Ric_{kj} = R^i_{kij}`.
    pub fn ricci(&self) -> Matrix4<f64> {
        Matrix4::from_fn(|k, j| (0..4).map(|i| self.get(i, k, i, j)).sum())
    }

    /// `Ric(U, V) = Σ_a ε_a <R(U, e_a) e_a, V>` over an orthonormal frame.
    pub fn ricci_frame_trace(&self, g: &Matrix4<f64>, frame: &OrthonormalFrame) -> Matrix4<f64> {
        let mut ric = Matrix4::zeros();
        for i in 0..4 {
            let u = Vector4::ith(i, 1.0);
            let mut r = Vector4::zeros();
            for (e, eps) in frame.vectors.iter().zip(frame.signs) {
                r += self.apply(&u, e, e) * eps;
            }
            let lowered = g * r;
            ric.set_row(i, &lowered.transpose());
        }
        ric
    }
}

/// `R^l_{kij} = ∂_i Γ^l_{jk} − ∂_j Γ^l_{ik} + Γ^l_{im} Γ^m_{jk} − Γ^l_{jm} Γ^m_{ik}`.
pub fn riemann(gf: &dyn MetricField, p: &Point, fd: &FiniteDifference) -> Result<Riemann> {
    let gamma = christoffel(gf, p, fd)?;
    let dgamma = fd.gradient(|q: &Point| christoffel(gf, q, fd), p)?;
    Ok(riemann_from_parts(&gamma, &dgamma))
}

fn riemann_from_parts(gamma: &Christoffel, dgamma: &[Christoffel; 4]) -> Riemann {
    let mut r = [[Matrix4::zeros(); 4]; 4];
    for (l, rl) in r.iter_mut().enumerate() {
        for (k, rlk) in rl.iter_mut().enumerate() {
            *rlk = Matrix4::from_fn(|i, j| {
                let mut v = dgamma[i].get(l, j, k) - dgamma[j].get(l, i, k);
                for m in 0..4 {
                    v += gamma.get(l, i, m) * gamma.get(m, j, k)
                        - gamma.get(l, j, m) * gamma.get(m, i, k);
                }
                v
            });
        }
    }
    Riemann(r)
}

/// Everything curvature-related at one point.
#[derive(Debug, Clone)]
pub struct CurvaturePack {
    pub metric: Matrix4<f64>,
    pub inverse_metric: Matrix4<f64>,
    pub christoffel: Christoffel,
    pub riemann: Riemann,
    /// `Ric_{ij}`.
    pub ricci: Matrix4<f64>,
    /// `Ric^i_j`, the Ricci operator.
    pub ricci_mixed: Matrix4<f64>,
    pub scalar: f64,
}

impl CurvaturePack {
    pub fn compute(gf: &dyn MetricField, p: &Point, fd: &FiniteDifference) -> Result<Self> {
        let metric = metric_at(gf, p)?;
        let inverse_metric = invert(&metric, p)?;
        let christoffel = christoffel(gf, p, fd)?;
        let dgamma = fd.gradient(|q: &Point| self::christoffel(gf, q, fd), p)?;
        let riemann = riemann_from_parts(&christoffel, &dgamma);
        let ricci = riemann.ricci();
        let ricci_mixed = inverse_metric * ricci;
        let scalar = ricci_mixed.trace();
        Ok(Self {
            metric,
            inverse_metric,
            christoffel,
            riemann,
            ricci,
            ricci_mixed,
            scalar,
        })
    }

    /// Covariant Riemann `R_{lkij} = g_{lm} R^m_{kij}`.
    pub fn riemann_lowered(&self, l: usize, k: usize, i: usize, j: usize) -> f64 {
        (0..4)
            .map(|m| self.metric[(l, m)] * self.riemann.get(m, k, i, j))
            .sum()
    }
}
