use nalgebra::{Matrix4, Vector4};

use super::section::{FiberValue, SectionField};
use super::AffineSpacetime;
use crate::em::Faraday;
use crate::error::Result;
use crate::geometry::{eval_metric, Christoffel, Point};

impl AffineSpacetime {
    /// Directional derivative `ρ(U)(V)` of the components of `V` along the anchor `X = ρ(U(p))`.
    fn derivative_along(&self, v: &dyn SectionField, p: &Point, x: &Vector4<f64>) -> Result<FiberValue> {
        self.fd.directional(|q: &Point| v.value(q), p, x)
    }

    /// `X<A, B>`: derivative of the fiber pairing of two sections along `x`.
    fn pairing_derivative(
        &self,
        a: &dyn SectionField,
        b: &dyn SectionField,
        p: &Point,
        x: &Vector4<f64>,
    ) -> Result<f64> {
        self.fd.directional(
            |q: &Point| {
                let gq = eval_metric(self.metric(), q)?;
                Ok(a.value(q)?.inner(&b.value(q)?, &gq))
            },
            p,
            x,
        )
    }

    /// `[U, V] = ([X, Y])‾ + (2<F(X), Y> + X(g) − Y(f))ξ` for `U = X̄ + fξ`, `V = Ȳ + gξ`.
    pub fn bracket(&self, u: &dyn SectionField, v: &dyn SectionField, p: &Point) -> Result<FiberValue> {
        let (uv, vv) = (u.value(p)?, v.value(p)?);
        let f = self.faraday(p)?;
        let dv = self.derivative_along(v, p, &uv.bar)?;
        let du = self.derivative_along(u, p, &vv.bar)?;
        Ok(FiberValue::new(
            dv.bar - du.bar,
            2.0 * f.pairing(&uv.bar, &vv.bar) + dv.xi - du.xi,
        ))
    }

    /// `<∇̂_U V, W>` from the Koszul formula alone:
    ///
    /// `2<∇̂_U V, W> = ρ(U)<V,W> + ρ(V)<W,U> − ρ(W)<U,V> + <[U,V],W> − <[V,W],U> + <[W,U],V>`.
    ///
    /// No Christoffel symbols are involved, which makes this the reference
    /// for [`AffineSpacetime::connection`].
    pub fn koszul_connection(
        &self,
        u: &dyn SectionField,
        v: &dyn SectionField,
        w: &dyn SectionField,
        p: &Point,
    ) -> Result<f64> {
        let g = self.metric_at(p)?;
        let (uv, vv, wv) = (u.value(p)?, v.value(p)?, w.value(p)?);
        let d_vw = self.pairing_derivative(v, w, p, &uv.bar)?;
        let d_wu = self.pairing_derivative(w, u, p, &vv.bar)?;
        let d_uv = self.pairing_derivative(u, v, p, &wv.bar)?;
        let b_uv = self.bracket(u, v, p)?;
        let b_vw = self.bracket(v, w, p)?;
        let b_wu = self.bracket(w, u, p)?;
        Ok(0.5
            * (d_vw + d_wu - d_uv + b_uv.inner(&wv, &g) - b_vw.inner(&uv, &g)
                + b_wu.inner(&vv, &g)))
    }

    /// Closed-form Levi-Civita connection of `T̂M`:
    /// `∇̂_ξ ξ = 0`, `∇̂_X̄ ξ = ∇̂_ξ X̄ = −F(X)‾`, `∇̂_X̄ Ȳ = (∇_X Y)‾ + <F(X), Y>ξ`,
    /// extended by linearity in `U` and Leibniz in `V`.
    pub fn connection(&self, u: &dyn SectionField, v: &dyn SectionField, p: &Point) -> Result<FiberValue> {
        let (uv, vv) = (u.value(p)?, v.value(p)?);
        let dv = self.derivative_along(v, p, &uv.bar)?;
        let gamma = self.christoffel(p)?;
        let f = self.faraday(p)?;
        Ok(connection_from_jet(&gamma, &f, &uv, &vv, &dv))
    }
}

/// `∇̂_U V` from the values of `U`, `V` at a point and the derivative `dv` of
/// `V`'s components along `ρ(U)`. For `U = X̄ + fξ`, `V = Ȳ + gξ`:
///
/// `∇̂_U V = (X(Y) + Γ(X, Y) − g F(X) − f F(Y))‾ + (<F(X), Y> + X(g))ξ`.
pub fn connection_from_jet(
    gamma: &Christoffel,
    f: &Faraday,
    u: &FiberValue,
    v: &FiberValue,
    dv: &FiberValue,
) -> FiberValue {
    let bar = dv.bar + gamma.contract(&u.bar, &v.bar) - f.apply(&u.bar) * v.xi - f.apply(&v.bar) * u.xi;
    FiberValue::new(bar, f.pairing(&u.bar, &v.bar) + dv.xi)
}

/// Largest violation of metric compatibility `ρ(U)<V,W> = <∇̂_U V, W> + <V, ∇̂_U W>`
/// and torsion-freeness `∇̂_U V − ∇̂_V U = [U, V]` for one triple.
pub fn structure_violation(
    st: &AffineSpacetime,
    u: &dyn SectionField,
    v: &dyn SectionField,
    w: &dyn SectionField,
    p: &Point,
) -> Result<(f64, f64)> {
    let g: Matrix4<f64> = st.metric_at(p)?;
    let (uv, vv, wv) = (u.value(p)?, v.value(p)?, w.value(p)?);
    let d_vw = st.pairing_derivative(v, w, p, &uv.bar)?;
    let nuv = st.connection(u, v, p)?;
    let nuw = st.connection(u, w, p)?;
    let compat = (d_vw - nuv.inner(&wv, &g) - vv.inner(&nuw, &g)).abs();
    let torsion = (nuv - st.connection(v, u, p)? - st.bracket(u, v, p)?).max_abs();
    Ok((compat, torsion))
}
