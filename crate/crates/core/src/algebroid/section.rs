use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix4, Vector4, Vector5};
use rand::Rng;

use crate::error::Result;
use crate::geometry::{FieldValue, Point};
use crate::poly::Polynomial;

/// A fiber element `X̄ + fξ` of `T̂M` at one point.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct FiberValue {
    pub bar: Vector4<f64>,
    pub xi: f64,
}

impl FiberValue {
    pub fn new(bar: Vector4<f64>, xi: f64) -> Self {
        Self { bar, xi }
    }

    pub fn bar(bar: Vector4<f64>) -> Self {
        Self { bar, xi: 0.0 }
    }

    /// The distinguished section `ξ`.
    pub fn xi() -> Self {
        Self {
            bar: Vector4::zeros(),
            xi: 1.0,
        }
    }

    pub fn zero() -> Self {
        Self::default()
    }

    /// Basis element `k` of `(ē_0, …, ē_3, ξ)`.
    pub fn basis(k: usize) -> Self {
        if k < 4 {
            Self::bar(Vector4::ith(k, 1.0))
        } else {
            Self::xi()
        }
    }

    pub fn to_vector5(&self) -> Vector5<f64> {
        Vector5::new(self.bar[0], self.bar[1], self.bar[2], self.bar[3], self.xi)
    }

    pub fn from_vector5(v: &Vector5<f64>) -> Self {
        Self::new(Vector4::new(v[0], v[1], v[2], v[3]), v[4])
    }

    /// `<X̄ + fξ, Ȳ + gξ> = <X, Y> + fg`.
    pub fn inner(&self, other: &FiberValue, g: &Matrix4<f64>) -> f64 {
        self.bar.dot(&(g * other.bar)) + self.xi * other.xi
    }

    pub fn max_abs(&self) -> f64 {
        self.bar.abs().max().max(self.xi.abs())
    }
}

impl Add for FiberValue {
    type Output = FiberValue;
    fn add(self, o: FiberValue) -> FiberValue {
        FiberValue::new(self.bar + o.bar, self.xi + o.xi)
    }
}

impl Sub for FiberValue {
    type Output = FiberValue;
    fn sub(self, o: FiberValue) -> FiberValue {
        FiberValue::new(self.bar - o.bar, self.xi - o.xi)
    }
}

impl Neg for FiberValue {
    type Output = FiberValue;
    fn neg(self) -> FiberValue {
        FiberValue::new(-self.bar, -self.xi)
    }
}

impl Mul<f64> for FiberValue {
    type Output = FiberValue;
    fn mul(self, s: f64) -> FiberValue {
        FiberValue::new(self.bar * s, self.xi * s)
    }
}

impl FieldValue for FiberValue {
    fn zeroed(&self) -> Self {
        FiberValue::zero()
    }
    fn add_scaled(&mut self, s: f64, other: &Self) {
        self.bar += other.bar * s;
        self.xi += other.xi * s;
    }
}

/// The anchor `ρ(X̄ + fξ) = X`.
pub fn anchor(s: &FiberValue) -> Vector4<f64> {
    s.bar
}

/// A smooth section `X̄ + fξ` of `T̂M`.
pub trait SectionField: Send + Sync {
    fn value(&self, x: &Point) -> Result<FiberValue>;
}

/// Section with the same components everywhere (e.g. coordinate lifts `ē_i`, or `ξ`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConstantSection(pub FiberValue);

impl SectionField for ConstantSection {
    fn value(&self, _x: &Point) -> Result<FiberValue> {
        Ok(self.0)
    }
}

/// Section given by a closure.
pub struct FnSection<F>(pub F);

impl<F> SectionField for FnSection<F>
where
    F: Fn(&Point) -> Result<FiberValue> + Send + Sync,
{
    fn value(&self, x: &Point) -> Result<FiberValue> {
        (self.0)(x)
    }
}

/// Section with polynomial components in `x − center`.
#[derive(Debug, Clone)]
pub struct PolynomialSection {
    pub center: Point,
    pub bar: [Polynomial; 4],
    pub xi: Polynomial,
}

impl PolynomialSection {
    /// Random cubic section around `center`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, center: Point, scale: f64) -> Self {
        Self {
            center,
            bar: std::array::from_fn(|_| Polynomial::random(rng, 3, scale)),
            xi: Polynomial::random(rng, 3, scale),
        }
    }
}

impl SectionField for PolynomialSection {
    fn value(&self, x: &Point) -> Result<FiberValue> {
        let y = x - self.center;
        Ok(FiberValue::new(
            Vector4::from_fn(|i, _| self.bar[i].eval(&y)),
            self.xi.eval(&y),
        ))
    }
}

impl<S: SectionField + ?Sized> SectionField for &S {
    fn value(&self, x: &Point) -> Result<FiberValue> {
        (**self).value(x)
    }
}

impl<S: SectionField + ?Sized> SectionField for Box<S> {
    fn value(&self, x: &Point) -> Result<FiberValue> {
        (**self).value(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn anchor_projects_out_xi() {
        let s = FiberValue::new(Vector4::new(1.0, -2.0, 0.5, 3.0), 7.0);
        assert_eq!(anchor(&s), s.bar);
        assert_eq!(anchor(&FiberValue::xi()), Vector4::zeros());
        assert_eq!(anchor(&FiberValue::bar(s.bar)), s.bar);
    }

    #[test]
    fn fiber_metric_adds_xi_product() {
        let g = Matrix4::from_diagonal(&Vector4::new(-1.0, 1.0, 1.0, 1.0));
        let a = FiberValue::new(Vector4::new(1.0, 2.0, 0.0, 0.0), 3.0);
        let b = FiberValue::new(Vector4::new(2.0, 1.0, 0.0, 5.0), -0.5);
        assert_eq!(a.inner(&b, &g), (-2.0 + 2.0) + 3.0 * -0.5);
        assert_eq!(FiberValue::xi().inner(&FiberValue::xi(), &g), 1.0);
    }
}
