use nalgebra::{Matrix4, Matrix5, Vector4};

use super::connection::connection_from_jet;
use super::field::EinsteinBlocks;
use super::section::{FiberValue, FnSection, SectionField};
use super::AffineSpacetime;
use crate::em::{trace_ff, Faraday, NablaFaraday};
use crate::error::Result;
use crate::geometry::{CurvaturePack, OrthonormalFrame, Point, Riemann};

/// Closed-form curvature `R̂` of `T̂M` at one point, assembled from the base
/// Riemann tensor, `F` and `∇F`:
///
/// - `R̂(X̄, ξ)ξ = −F(F(X))‾`
/// - `R̂(X̄, ξ)Z̄ = −((∇_X F)Z)‾ − <F(X), F(Z)>ξ`
/// - `R̂(X̄, Ȳ)ξ = −((∇_X F)Y)‾ + ((∇_Y F)X)‾`
/// - `R̂(X̄, Ȳ)Z̄ = (R(X,Y)Z + <Z,F(X)>F(Y) − <Z,F(Y)>F(X) + 2<F(X),Y>F(Z))‾
///   + <Z, (∇_X F)Y − (∇_Y F)X>ξ`
#[derive(Debug, Clone)]
pub struct CurvatureHat {
    metric: Matrix4<f64>,
    riemann: Riemann,
    faraday: Faraday,
    nabla: NablaFaraday,
}

impl CurvatureHat {
    fn bar_bar_bar(&self, x: &Vector4<f64>, y: &Vector4<f64>, z: &Vector4<f64>) -> FiberValue {
        let g = &self.metric;
        let f = &self.faraday;
        let (fx, fy, fz) = (f.apply(x), f.apply(y), f.apply(z));
        let bar = self.riemann.apply(x, y, z) + fy * z.dot(&(g * fx)) - fx * z.dot(&(g * fy))
            + fz * (2.0 * f.pairing(x, y));
        let skew = self.nabla.along(x) * y - self.nabla.along(y) * x;
        FiberValue::new(bar, z.dot(&(g * skew)))
    }

    fn bar_bar_xi(&self, x: &Vector4<f64>, y: &Vector4<f64>) -> FiberValue {
        FiberValue::bar(self.nabla.along(y) * x - self.nabla.along(x) * y)
    }

    fn bar_xi_bar(&self, x: &Vector4<f64>, z: &Vector4<f64>) -> FiberValue {
        let f = &self.faraday;
        FiberValue::new(
            -(self.nabla.along(x) * z),
            -f.apply(x).dot(&(self.metric * f.apply(z))),
        )
    }

    fn bar_xi_xi(&self, x: &Vector4<f64>) -> FiberValue {
        FiberValue::bar(-self.faraday.apply(&self.faraday.apply(x)))
    }

    /// `R̂(u, v)w` for fiber values, by multilinearity and `R̂(ξ, ξ) = 0`.
    pub fn apply(&self, u: &FiberValue, v: &FiberValue, w: &FiberValue) -> FiberValue {
        let (x, f) = (&u.bar, u.xi);
        let (y, g) = (&v.bar, v.xi);
        let (z, h) = (&w.bar, w.xi);
        let mut out = self.bar_bar_bar(x, y, z) + self.bar_bar_xi(x, y) * h;
        if g != 0.0 {
            out = out + (self.bar_xi_bar(x, z) + self.bar_xi_xi(x) * h) * g;
        }
        if f != 0.0 {
            out = out - (self.bar_xi_bar(y, z) + self.bar_xi_xi(y) * h) * f;
        }
        out
    }

    /// `R̂(E_a, E_b)E_c` on the coordinate basis `(ē_0, …, ē_3, ξ)`, indexed `[a][b][c]`.
    pub fn table(&self) -> [[[FiberValue; 5]; 5]; 5] {
        std::array::from_fn(|a| {
            std::array::from_fn(|b| {
                std::array::from_fn(|c| {
                    self.apply(&FiberValue::basis(a), &FiberValue::basis(b), &FiberValue::basis(c))
                })
            })
        })
    }
}

/// Ricci operator of `T̂M` as a 5×5 matrix in the basis `(ē_0, …, ē_3, ξ)`;
/// column `j` holds the components of `R̂ic(E_j)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RicciHat(pub Matrix5<f64>);

impl RicciHat {
    pub fn apply(&self, u: &FiberValue) -> FiberValue {
        FiberValue::from_vector5(&(self.0 * u.to_vector5()))
    }

    /// `R̂ic(E_i, E_j) = <R̂ic(E_i), E_j>`.
    pub fn lowered(&self, fiber_metric: &Matrix5<f64>) -> Matrix5<f64> {
        (fiber_metric * self.0).transpose()
    }

    /// Trace of the operator, the scalar curvature `R̂`.
    pub fn scalar(&self) -> f64 {
        self.0.trace()
    }

    /// Lowered Einstein tensor `Ĝ = R̂ic − ½ R̂ ĝ`.
    pub fn einstein_lowered(&self, fiber_metric: &Matrix5<f64>) -> Matrix5<f64> {
        self.lowered(fiber_metric) - fiber_metric * (0.5 * self.scalar())
    }
}

/// Everything the closed-form algebroid curvature needs at a point.
#[derive(Debug, Clone)]
pub struct AlgebroidCurvature {
    pub base: CurvaturePack,
    pub faraday: Faraday,
    pub nabla_faraday: NablaFaraday,
    /// `div F` (contravariant).
    pub div_faraday: Vector4<f64>,
    /// `tr(F∘F)`.
    pub trace_ff: f64,
    pub frame: OrthonormalFrame,
}

impl AlgebroidCurvature {
    pub fn compute(st: &AffineSpacetime, p: &Point) -> Result<Self> {
        let base = CurvaturePack::compute(st.metric(), p, &st.fd)?;
        let faraday = st.faraday(p)?;
        let nabla_faraday = crate::em::nabla_faraday(st.metric(), st.potential(), p, &st.fd)?;
        let div_faraday = nabla_faraday.divergence(&base.inverse_metric);
        let frame = OrthonormalFrame::from_metric(&base.metric)?;
        Ok(Self {
            trace_ff: trace_ff(&faraday),
            base,
            faraday,
            nabla_faraday,
            div_faraday,
            frame,
        })
    }

    pub fn metric(&self) -> &Matrix4<f64> {
        &self.base.metric
    }

    pub fn fiber_metric(&self) -> Matrix5<f64> {
        let mut m = Matrix5::zeros();
        m.fixed_view_mut::<4, 4>(0, 0).copy_from(&self.base.metric);
        m[(4, 4)] = 1.0;
        m
    }

    pub fn hat(&self) -> CurvatureHat {
        CurvatureHat {
            metric: self.base.metric,
            riemann: self.base.riemann,
            faraday: self.faraday,
            nabla: self.nabla_faraday,
        }
    }

    /// Orthonormal frame of `T̂M`: the bar-lifts of the base frame followed by `ξ` (sign +1).
    pub fn fiber_frame(&self) -> [(FiberValue, f64); 5] {
        std::array::from_fn(|a| {
            if a < 4 {
                (FiberValue::bar(self.frame.vectors[a]), self.frame.signs[a])
            } else {
                (FiberValue::xi(), 1.0)
            }
        })
    }

    /// Closed form: `R̂ic(ξ) = (div F)‾ − tr(F∘F)ξ`,
    /// `R̂ic(X̄) = (Ric(X) + 2F(F(X)))‾ + <div F, X>ξ`.
    pub fn ricci_hat(&self) -> RicciHat {
        let ops = self.base.ricci_mixed + self.faraday.squared() * 2.0;
        let div_lowered = self.base.metric * self.div_faraday;
        let mut m = Matrix5::zeros();
        m.fixed_view_mut::<4, 4>(0, 0).copy_from(&ops);
        for j in 0..4 {
            m[(4, j)] = div_lowered[j];
            m[(j, 4)] = self.div_faraday[j];
        }
        m[(4, 4)] = -self.trace_ff;
        RicciHat(m)
    }

    /// `R̂ic(U) = Σ_a ε_a R̂(U, E_a)E_a` traced from the closed-form curvature.
    pub fn ricci_hat_frame_trace(&self) -> RicciHat {
        let hat = self.hat();
        let frame = self.fiber_frame();
        let mut m = Matrix5::zeros();
        for j in 0..5 {
            let u = FiberValue::basis(j);
            let col = frame
                .iter()
                .fold(FiberValue::zero(), |acc, (e, eps)| acc + hat.apply(&u, e, e) * *eps);
            m.set_column(j, &col.to_vector5());
        }
        RicciHat(m)
    }

    /// `R̂ = R + tr(F∘F)`.
    pub fn scalar_hat(&self) -> f64 {
        self.base.scalar + self.trace_ff
    }

    /// `Σ_a ε_a <R̂ic(E_a), E_a>` over the orthonormal 5-frame.
    pub fn scalar_hat_frame_trace(&self, ricci: &RicciHat) -> f64 {
        let g = self.base.metric;
        self.fiber_frame()
            .iter()
            .map(|(e, eps)| eps * ricci.apply(e).inner(e, &g))
            .sum()
    }

    /// Blocks of `Ĝ` assembled from the closed-form Ricci operator.
    pub fn einstein_blocks(&self) -> EinsteinBlocks {
        EinsteinBlocks::from_lowered(&self.ricci_hat().einstein_lowered(&self.fiber_metric()), self.base.metric)
    }

    /// Blocks written out directly:
    /// `{Ric + 2F∘F − ½(R + tr(F∘F))g, (div F)♭, −½(R + 3 tr(F∘F))}`.
    pub fn einstein_blocks_formula(&self) -> EinsteinBlocks {
        let g = self.base.metric;
        let (r, tff) = (self.base.scalar, self.trace_ff);
        EinsteinBlocks {
            metric: g,
            barbar: self.base.ricci + self.faraday.squared_lowered(&g) * 2.0 - g * (0.5 * (r + tff)),
            mixed: g * self.div_faraday,
            xixi: -0.5 * (r + 3.0 * tff),
        }
    }
}

impl AffineSpacetime {
    /// Brute-force `R̂(U,V)W = ∇̂_U ∇̂_V W − ∇̂_V ∇̂_U W − ∇̂_[U,V] W` with the
    /// closed-form connection applied to numerically differentiated sections.
    pub fn curvature_oracle(
        &self,
        u: &dyn SectionField,
        v: &dyn SectionField,
        w: &dyn SectionField,
        p: &Point,
    ) -> Result<FiberValue> {
        let nv_w = FnSection(|q: &Point| self.connection(v, w, q));
        let nu_w = FnSection(|q: &Point| self.connection(u, w, q));
        let first = self.connection(u, &nv_w, p)?;
        let second = self.connection(v, &nu_w, p)?;
        let bracket = self.bracket(u, v, p)?;
        let dw = self.fd.directional(|q: &Point| w.value(q), p, &bracket.bar)?;
        let third = connection_from_jet(&self.christoffel(p)?, &self.faraday(p)?, &bracket, &w.value(p)?, &dw);
        Ok(first - second - third)
    }
}
