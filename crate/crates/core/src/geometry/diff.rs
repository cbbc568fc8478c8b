use nalgebra::{SMatrix, Vector4};

use super::Point;
use crate::error::Result;

/// Values that finite-difference stencils can combine linearly.
pub trait FieldValue: Clone {
    fn zeroed(&self) -> Self;
    fn add_scaled(&mut self, s: f64, other: &Self);
}

impl FieldValue for f64 {
    fn zeroed(&self) -> Self {
        0.0
    }
    fn add_scaled(&mut self, s: f64, other: &Self) {
        *self += s * other;
    }
}

impl<const R: usize, const C: usize> FieldValue for SMatrix<f64, R, C> {
    fn zeroed(&self) -> Self {
        Self::zeros()
    }
    fn add_scaled(&mut self, s: f64, other: &Self) {
        *self += other * s;
    }
}

impl<T: FieldValue, const N: usize> FieldValue for [T; N] {
    fn zeroed(&self) -> Self {
        std::array::from_fn(|k| self[k].zeroed())
    }
    fn add_scaled(&mut self, s: f64, other: &Self) {
        for (a, b) in self.iter_mut().zip(other) {
            a.add_scaled(s, b);
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StencilOrder {
    Second,
    Fourth,
}

impl StencilOrder {
    /// `(k, w_k)` for `f'(x) ≈ Σ w_k (f(x + kh) − f(x − kh)) / h`.
    fn weights(self) -> &'static [(f64, f64)] {
        match self {
            StencilOrder::Second => &[(1.0, 0.5)],
            StencilOrder::Fourth => &[(1.0, 2.0 / 3.0), (2.0, -1.0 / 12.0)],
        }
    }

    pub fn accuracy(self) -> i32 {
        match self {
            StencilOrder::Second => 2,
            StencilOrder::Fourth => 4,
        }
    }

    /// Widest offset, in units of the step.
    pub fn reach(self) -> f64 {
        match self {
            StencilOrder::Second => 1.0,
            StencilOrder::Fourth => 2.0,
        }
    }
}

/// Central finite-difference configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FiniteDifference {
    pub step: f64,
    pub order: StencilOrder,
    /// Combine steps `h` and `h/2` to cancel the leading truncation term.
    pub richardson: bool,
}

impl Default for FiniteDifference {
    fn default() -> Self {
        Self {
            step: 1e-3,
            order: StencilOrder::Fourth,
            richardson: false,
        }
    }
}

impl FiniteDifference {
    pub fn with_step(step: f64) -> Self {
        Self {
            step,
            ..Self::default()
        }
    }

    /// Distance from the evaluation point reached by one derivative.
    pub fn reach(&self) -> f64 {
        self.step * self.order.reach()
    }

    fn stencil<T, F>(&self, field: &F, p: &Point, dir: &Vector4<f64>, h: f64) -> Result<T>
    where
        T: FieldValue,
        F: Fn(&Point) -> Result<T>,
    {
        let mut acc: Option<T> = None;
        for &(offset, w) in self.order.weights() {
            // differencing first makes constant fields give an exact zero
            let mut d = field(&(p + dir * (offset * h)))?;
            d.add_scaled(-1.0, &field(&(p - dir * (offset * h)))?);
            match acc.as_mut() {
                None => {
                    let mut z = d.zeroed();
                    z.add_scaled(w / h, &d);
                    acc = Some(z);
                }
                Some(a) => a.add_scaled(w / h, &d),
            }
        }
        Ok(acc.expect("stencils have at least one pair"))
    }

    /// Derivative along a unit-free direction vector `dir` (not normalized).
    fn along<T, F>(&self, field: &F, p: &Point, dir: &Vector4<f64>) -> Result<T>
    where
        T: FieldValue,
        F: Fn(&Point) -> Result<T>,
    {
        let coarse = self.stencil(field, p, dir, self.step)?;
        if !self.richardson {
            return Ok(coarse);
        }
        let fine = self.stencil(field, p, dir, 0.5 * self.step)?;
        let gain = 2f64.powi(self.order.accuracy());
        let mut out = fine.zeroed();
        out.add_scaled(gain / (gain - 1.0), &fine);
        out.add_scaled(-1.0 / (gain - 1.0), &coarse);
        Ok(out)
    }

    /// `∂_dir field` at `p`.
    pub fn partial<T, F>(&self, field: F, p: &Point, dir: usize) -> Result<T>
    where
        T: FieldValue,
        F: Fn(&Point) -> Result<T>,
    {
        let mut e = Vector4::zeros();
        e[dir] = 1.0;
        self.along(&field, p, &e)
    }

    /// All four partials at once.
    pub fn gradient<T, F>(&self, field: F, p: &Point) -> Result<[T; 4]>
    where
        T: FieldValue,
        F: Fn(&Point) -> Result<T>,
    {
        Ok([
            self.partial(&field, p, 0)?,
            self.partial(&field, p, 1)?,
            self.partial(&field, p, 2)?,
            self.partial(&field, p, 3)?,
        ])
    }

    /// Directional derivative `v(field)` at `p`. The stencil walks along the
    /// normalized direction so its physical step stays `h` in coordinate units.
    pub fn directional<T, F>(&self, field: F, p: &Point, v: &Vector4<f64>) -> Result<T>
    where
        T: FieldValue,
        F: Fn(&Point) -> Result<T>,
    {
        let n = v.norm();
        if n == 0.0 {
            let v0 = field(p)?;
            return Ok(v0.zeroed());
        }
        let unit = v / n;
        let d = self.along(&field, p, &unit)?;
        let mut out = d.zeroed();
        out.add_scaled(n, &d);
        Ok(out)
    }

    /// Mixed second partial `∂_i ∂_j field`.
    pub fn second_partial<T, F>(&self, field: F, p: &Point, i: usize, j: usize) -> Result<T>
    where
        T: FieldValue,
        F: Fn(&Point) -> Result<T>,
    {
        self.partial(|q: &Point| self.partial(&field, q, j), p, i)
    }
}

/// `∂^order field / ∂x_dir^order` at `p`, for `order` 1 or 2.
pub fn partial_derivative<T, F>(
    field: F,
    p: &Point,
    dir: usize,
    order: u8,
    fd: &FiniteDifference,
) -> Result<T>
where
    T: FieldValue,
    F: Fn(&Point) -> Result<T>,
{
    match order {
        1 => fd.partial(field, p, dir),
        2 => fd.second_partial(field, p, dir, dir),
        _ => Err(crate::Error::InvalidArgument(format!(
            "derivative order {order} not supported"
        ))),
    }
}
