//! Built-in metric and potential families, and the name-keyed registries the
//! CLI builds scenarios from.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::{Matrix4, Vector4};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::em::PotentialField;
use crate::error::{Error, Result};
use crate::geometry::{eval_metric, MetricField, Point, ValidityBox};
use crate::poly::Polynomial;

const FAR: f64 = 1e6;

fn minkowski_matrix() -> Matrix4<f64> {
    Matrix4::from_diagonal(&Vector4::new(-1.0, 1.0, 1.0, 1.0))
}

/// Flat space in Cartesian coordinates `(t, x, y, z)`.
#[derive(Debug, Clone)]
pub struct Minkowski {
    validity: ValidityBox,
}

impl Default for Minkowski {
    fn default() -> Self {
        Self {
            validity: ValidityBox {
                lo: [-FAR; 4],
                hi: [FAR; 4],
            },
        }
    }
}

impl MetricField for Minkowski {
    fn components(&self, _x: &Point) -> Matrix4<f64> {
        minkowski_matrix()
    }
    fn validity(&self) -> &ValidityBox {
        &self.validity
    }
    fn derivatives(&self, _x: &Point) -> Option<[Matrix4<f64>; 4]> {
        Some([Matrix4::zeros(); 4])
    }
    fn name(&self) -> String {
        "minkowski".into()
    }
}

/// Reissner–Nordström in Schwarzschild coordinates `(t, r, θ, φ)`:
/// `f = 1 − 2M/r + Q²/r²`, `ds² = −f dt² + dr²/f + r² dΩ²`.
#[derive(Debug, Clone)]
pub struct ReissnerNordstrom {
    mass: f64,
    charge: f64,
    validity: ValidityBox,
}

impl ReissnerNordstrom {
    pub fn new(mass: f64, charge: f64) -> Result<Self> {
        if !(mass > 0.0) || charge.abs() > mass {
            return Err(Error::InvalidArgument(format!(
                "need M > 0 and |Q| <= M, got M = {mass}, Q = {charge}"
            )));
        }
        let horizon = mass + (mass * mass - charge * charge).sqrt();
        Ok(Self {
            mass,
            charge,
            validity: ValidityBox {
                lo: [-FAR, horizon * (1.0 + 1e-3), 1e-2, -FAR],
                hi: [FAR, FAR, PI - 1e-2, FAR],
            },
        })
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn charge(&self) -> f64 {
        self.charge
    }

    fn lapse(&self, r: f64) -> (f64, f64) {
        let (m, q2) = (self.mass, self.charge * self.charge);
        let f = 1.0 - 2.0 * m / r + q2 / (r * r);
        let df = 2.0 * m / (r * r) - 2.0 * q2 / (r * r * r);
        (f, df)
    }
}

impl MetricField for ReissnerNordstrom {
    fn components(&self, x: &Point) -> Matrix4<f64> {
        let (r, th) = (x[1], x[2]);
        let (f, _) = self.lapse(r);
        let s = th.sin();
        Matrix4::from_diagonal(&Vector4::new(-f, 1.0 / f, r * r, r * r * s * s))
    }

    fn validity(&self) -> &ValidityBox {
        &self.validity
    }

    fn derivatives(&self, x: &Point) -> Option<[Matrix4<f64>; 4]> {
        let (r, th) = (x[1], x[2]);
        let (f, df) = self.lapse(r);
        let (s, c) = th.sin_cos();
        let dr = Matrix4::from_diagonal(&Vector4::new(-df, -df / (f * f), 2.0 * r, 2.0 * r * s * s));
        let dth = Matrix4::from_diagonal(&Vector4::new(0.0, 0.0, 0.0, 2.0 * r * r * s * c));
        Some([Matrix4::zeros(), dr, dth, Matrix4::zeros()])
    }

    fn name(&self) -> String {
        format!("reissner_nordstrom(M={}, Q={})", self.mass, self.charge)
    }
}

/// Schwarzschild in `(t, r, θ, φ)`; the `Q = 0` member of [`ReissnerNordstrom`].
#[derive(Debug, Clone)]
pub struct Schwarzschild(ReissnerNordstrom);

impl Schwarzschild {
    pub fn new(mass: f64) -> Result<Self> {
        ReissnerNordstrom::new(mass, 0.0).map(Self)
    }

    pub fn mass(&self) -> f64 {
        self.0.mass
    }
}

impl MetricField for Schwarzschild {
    fn components(&self, x: &Point) -> Matrix4<f64> {
        self.0.components(x)
    }
    fn validity(&self) -> &ValidityBox {
        self.0.validity()
    }
    fn derivatives(&self, x: &Point) -> Option<[Matrix4<f64>; 4]> {
        self.0.derivatives(x)
    }
    fn name(&self) -> String {
        format!("schwarzschild(M={})", self.0.mass)
    }
}

/// Minkowski plus a symmetric matrix of polynomials, on the box `[-1, 1]⁴`.
#[derive(Debug, Clone)]
pub struct PolynomialMetric {
    perturbation: [[Polynomial; 4]; 4],
    validity: ValidityBox,
}

impl PolynomialMetric {
    /// Upper-triangle entries are supplied; the lower triangle mirrors them.
    pub fn new(perturbation: [[Polynomial; 4]; 4]) -> Self {
        let sym = std::array::from_fn(|i| {
            std::array::from_fn(|j| perturbation[i.min(j)][i.max(j)].clone())
        });
        Self {
            perturbation: sym,
            validity: ValidityBox {
                lo: [-1.0; 4],
                hi: [1.0; 4],
            },
        }
    }

    /// Cubic entries, each with coefficient l1-norm at most `amplitude`, so
    /// the perturbation stays below `amplitude` entrywise on the box.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, amplitude: f64) -> Self {
        let mut entries: [[Polynomial; 4]; 4] = Default::default();
        for i in 0..4 {
            for j in i..4 {
                entries[i][j] = Polynomial::random(rng, 3, amplitude);
            }
        }
        Self::new(entries)
    }
}

impl MetricField for PolynomialMetric {
    fn components(&self, x: &Point) -> Matrix4<f64> {
        minkowski_matrix() + Matrix4::from_fn(|i, j| self.perturbation[i][j].eval(x))
    }
    fn validity(&self) -> &ValidityBox {
        &self.validity
    }
    fn derivatives(&self, x: &Point) -> Option<[Matrix4<f64>; 4]> {
        Some(std::array::from_fn(|k| {
            Matrix4::from_fn(|i, j| self.perturbation[i][j].derivative(k).eval(x))
        }))
    }
    fn name(&self) -> String {
        "polynomial".into()
    }
}

/// Another metric with its validity box narrowed to a region.
pub struct RestrictedMetric {
    inner: Arc<dyn MetricField>,
    validity: ValidityBox,
}

impl RestrictedMetric {
    pub fn new(inner: Arc<dyn MetricField>, region: &ValidityBox) -> Result<Self> {
        let validity = inner.validity().intersect(region)?;
        Ok(Self { inner, validity })
    }
}

impl MetricField for RestrictedMetric {
    fn components(&self, x: &Point) -> Matrix4<f64> {
        self.inner.components(x)
    }
    fn validity(&self) -> &ValidityBox {
        &self.validity
    }
    fn derivatives(&self, x: &Point) -> Option<[Matrix4<f64>; 4]> {
        self.inner.derivatives(x)
    }
    fn name(&self) -> String {
        self.inner.name()
    }
}

/// `A = 0`.
#[derive(Debug, Clone, Copy, Default)]
pub struct ZeroPotential;

impl PotentialField for ZeroPotential {
    fn components(&self, _x: &Point) -> Result<Vector4<f64>> {
        Ok(Vector4::zeros())
    }
    fn name(&self) -> String {
        "zero".into()
    }
}

/// Potential given by contravariant polynomial components `A^i(x)`.
#[derive(Debug, Clone)]
pub struct PolynomialPotential {
    pub components: [Polynomial; 4],
}

impl PolynomialPotential {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> Self {
        Self {
            components: std::array::from_fn(|_| Polynomial::random(rng, 3, scale)),
        }
    }
}

impl PotentialField for PolynomialPotential {
    fn components(&self, x: &Point) -> Result<Vector4<f64>> {
        Ok(Vector4::from_fn(|i, _| self.components[i].eval(x)))
    }
    fn name(&self) -> String {
        "polynomial".into()
    }
}

/// One-form potentials `A♭_i(x)`; converted to `A^i` through the metric.
#[derive(Debug, Clone)]
pub enum CovariantForm {
    /// `A♭ = (0, 0, B x¹, 0)`: uniform field, `F_12 = B/2`, in Cartesian flat space.
    Uniform { b: f64 },
    /// `A♭ = (−q/|x|, 0, 0, 0)` with `|x|` the Cartesian spatial radius.
    Coulomb { q: f64 },
    /// `A♭ = (−q/x¹, 0, 0, 0)` in charts whose `x¹` is an areal radius.
    RadialCoulomb { q: f64 },
    /// `A♭ = (0, a cos(ω (x⁰ − x³)), 0, 0)`: linearly polarized vacuum wave.
    PlaneWave { amplitude: f64, omega: f64 },
    Polynomial([Polynomial; 4]),
}

impl CovariantForm {
    pub fn eval(&self, x: &Point) -> Result<Vector4<f64>> {
        let v = match self {
            CovariantForm::Uniform { b } => Vector4::new(0.0, 0.0, b * x[1], 0.0),
            CovariantForm::Coulomb { q } => {
                let r = (x[1] * x[1] + x[2] * x[2] + x[3] * x[3]).sqrt();
                if r == 0.0 {
                    return Err(Error::NonFinite("Coulomb potential at the origin".into()));
                }
                Vector4::new(-q / r, 0.0, 0.0, 0.0)
            }
            CovariantForm::RadialCoulomb { q } => {
                if x[1] == 0.0 {
                    return Err(Error::NonFinite("radial Coulomb potential at r = 0".into()));
                }
                Vector4::new(-q / x[1], 0.0, 0.0, 0.0)
            }
            CovariantForm::PlaneWave { amplitude, omega } => {
                Vector4::new(0.0, amplitude * (omega * (x[0] - x[3])).cos(), 0.0, 0.0)
            }
            CovariantForm::Polynomial(c) => Vector4::from_fn(|i, _| c[i].eval(x)),
        };
        Ok(v)
    }

    fn label(&self) -> String {
        match self {
            CovariantForm::Uniform { b } => format!("uniform(B={b})"),
            CovariantForm::Coulomb { q } => format!("coulomb(q={q})"),
            CovariantForm::RadialCoulomb { q } => format!("radial_coulomb(q={q})"),
            CovariantForm::PlaneWave { amplitude, omega } => {
                format!("plane_wave(amplitude={amplitude}, omega={omega})")
            }
            CovariantForm::Polynomial(_) => "polynomial_form".into(),
        }
    }
}

/// The vector field `A^i = g^{ij} A♭_j` of a one-form potential.
pub struct CovariantPotential {
    metric: Arc<dyn MetricField>,
    form: CovariantForm,
}

impl CovariantPotential {
    pub fn new(metric: Arc<dyn MetricField>, form: CovariantForm) -> Self {
        Self { metric, form }
    }

    pub fn form(&self) -> &CovariantForm {
        &self.form
    }
}

impl PotentialField for CovariantPotential {
    fn components(&self, x: &Point) -> Result<Vector4<f64>> {
        let g = eval_metric(self.metric.as_ref(), x)?;
        let ginv = g
            .try_inverse()
            .ok_or(Error::SingularMetric { point: (*x).into() })?;
        Ok(ginv * self.form.eval(x)?)
    }
    fn name(&self) -> String {
        self.form.label()
    }
}

/// Family parameters: numeric values plus free text (polynomial expressions).
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Params {
    pub numbers: BTreeMap<String, f64>,
    pub texts: BTreeMap<String, String>,
}

impl Params {
    pub fn with(mut self, key: &str, value: f64) -> Self {
        self.numbers.insert(key.into(), value);
        self
    }

    pub fn number(&self, key: &str) -> Option<f64> {
        self.numbers.get(key).copied()
    }

    fn require(&self, family: &str, key: &str) -> Result<f64> {
        self.number(key).ok_or_else(|| {
            Error::InvalidArgument(format!("family `{family}` needs parameter `{key}`"))
        })
    }

    fn or(&self, key: &str, default: f64) -> f64 {
        self.number(key).unwrap_or(default)
    }

    fn seed(&self) -> u64 {
        self.or("seed", 0.0) as u64
    }
}

pub const METRIC_FAMILIES: &[&str] = &["minkowski", "schwarzschild", "reissner_nordstrom", "polynomial"];
pub const POTENTIAL_FAMILIES: &[&str] = &[
    "zero",
    "uniform",
    "coulomb",
    "radial_coulomb",
    "plane_wave",
    "polynomial",
];

/// Parameter names a metric family understands, or `None` for an unknown family.
pub fn metric_parameters(name: &str) -> Option<&'static [&'static str]> {
    Some(match name {
        "minkowski" => &[],
        "schwarzschild" => &["M"],
        "reissner_nordstrom" => &["M", "Q"],
        "polynomial" => &["seed", "amplitude"],
        _ => return None,
    })
}

/// Parameter names a potential family understands, or `None` for an unknown family.
pub fn potential_parameters(name: &str) -> Option<&'static [&'static str]> {
    Some(match name {
        "zero" => &[],
        "uniform" => &["B"],
        "coulomb" | "radial_coulomb" => &["q"],
        "plane_wave" => &["amplitude", "omega"],
        "polynomial" => &["A0", "A1", "A2", "A3", "covariant", "seed", "scale"],
        _ => return None,
    })
}

/// Builds a metric family by name.
///
/// - `minkowski`
/// - `schwarzschild`: `M`
/// - `reissner_nordstrom`: `M`, `Q`
/// - `polynomial`: `seed` (default 0), `amplitude` (default 0.1)
pub fn build_metric(name: &str, params: &Params) -> Result<Arc<dyn MetricField>> {
    Ok(match name {
        "minkowski" => Arc::new(Minkowski::default()),
        "schwarzschild" => Arc::new(Schwarzschild::new(params.require(name, "M")?)?),
        "reissner_nordstrom" => Arc::new(ReissnerNordstrom::new(
            params.require(name, "M")?,
            params.require(name, "Q")?,
        )?),
        "polynomial" => {
            let mut rng = ChaCha8Rng::seed_from_u64(params.seed());
            Arc::new(PolynomialMetric::random(&mut rng, params.or("amplitude", 0.1)))
        }
        other => return Err(Error::UnknownFamily(other.into())),
    })
}

/// Builds a potential family by name over the given metric.
///
/// - `zero`
/// - `uniform`: `B`
/// - `coulomb`, `radial_coulomb`: `q`
/// - `plane_wave`: `amplitude`, `omega`
/// - `polynomial`: either texts `A0..A3` (contravariant unless `covariant = 1`)
///   or a random field from `seed` and `scale` (default 0.2)
pub fn build_potential(
    name: &str,
    params: &Params,
    metric: Arc<dyn MetricField>,
) -> Result<Arc<dyn PotentialField>> {
    let covariant = |form| -> Arc<dyn PotentialField> { Arc::new(CovariantPotential::new(metric.clone(), form)) };
    Ok(match name {
        "zero" => Arc::new(ZeroPotential),
        "uniform" => covariant(CovariantForm::Uniform {
            b: params.require(name, "B")?,
        }),
        "coulomb" => covariant(CovariantForm::Coulomb {
            q: params.require(name, "q")?,
        }),
        "radial_coulomb" => covariant(CovariantForm::RadialCoulomb {
            q: params.require(name, "q")?,
        }),
        "plane_wave" => covariant(CovariantForm::PlaneWave {
            amplitude: params.require(name, "amplitude")?,
            omega: params.require(name, "omega")?,
        }),
        "polynomial" => {
            let explicit = (0..4).any(|i| params.texts.contains_key(&format!("A{i}")));
            if explicit {
                let mut comps: [Polynomial; 4] = Default::default();
                for (i, c) in comps.iter_mut().enumerate() {
                    if let Some(text) = params.texts.get(&format!("A{i}")) {
                        *c = text.parse()?;
                    }
                }
                if params.or("covariant", 0.0) != 0.0 {
                    covariant(CovariantForm::Polynomial(comps))
                } else {
                    Arc::new(PolynomialPotential { components: comps })
                }
            } else {
                // offset the stream so metric and potential with the same seed differ
                let mut rng = ChaCha8Rng::seed_from_u64(params.seed() ^ 0x9e37_79b9_7f4a_7c15);
                Arc::new(PolynomialPotential::random(&mut rng, params.or("scale", 0.2)))
            }
        }
        other => return Err(Error::UnknownFamily(other.into())),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{inverse_metric_at, metric_at, FiniteDifference};

    #[test]
    fn minkowski_components() {
        let g = metric_at(&Minkowski::default(), &Point::new(3.0, -2.0, 1.0, 0.0)).unwrap();
        assert_eq!(g, minkowski_matrix());
    }

    #[test]
    fn schwarzschild_tt_component_and_inverse() {
        let gf = Schwarzschild::new(1.0).unwrap();
        let p = Point::new(0.0, 4.0, 1.2, 0.3);
        let g = metric_at(&gf, &p).unwrap();
        assert!((g[(0, 0)] + 0.5).abs() < 1e-15);
        let ginv = inverse_metric_at(&gf, &p).unwrap();
        assert!((g * ginv - Matrix4::identity()).abs().max() < 1e-12);
    }

    #[test]
    fn schwarzschild_radial_derivative_matches_analytic() {
        let gf = Schwarzschild::new(1.0).unwrap();
        let p = Point::new(0.0, 4.0, 1.2, 0.3);
        let fd = FiniteDifference::default();
        let d: f64 = fd.partial(|q| Ok(eval_metric(&gf, q)?[(0, 0)]), &p, 1).unwrap();
        // ∂_r g_tt = −2M/r²; the sign of g_tt makes the derivative of −g_tt equal 2M/r² = 0.125
        assert!((-d - 0.125).abs() < 1e-10);
        let analytic = gf.derivatives(&p).unwrap();
        for k in 0..4 {
            let numeric = fd.partial(|q| eval_metric(&gf, q), &p, k).unwrap();
            assert!((numeric - analytic[k]).abs().max() < 1e-9);
        }
    }

    #[test]
    fn outside_box_is_rejected() {
        let gf = Schwarzschild::new(1.0).unwrap();
        assert!(matches!(
            metric_at(&gf, &Point::new(0.0, 1.5, 1.0, 0.0)),
            Err(Error::OutsideBox { .. })
        ));
    }

    #[test]
    fn registry_knows_every_family() {
        for name in METRIC_FAMILIES {
            let params = Params::default().with("M", 1.0).with("Q", 0.5);
            build_metric(name, &params).unwrap();
        }
        let metric: Arc<dyn MetricField> = Arc::new(Minkowski::default());
        for name in POTENTIAL_FAMILIES {
            let params = Params::default()
                .with("B", 1.0)
                .with("q", 1.0)
                .with("amplitude", 0.1)
                .with("omega", 2.0);
            build_potential(name, &params, metric.clone()).unwrap();
        }
        assert!(matches!(
            build_metric("kerr", &Params::default()),
            Err(Error::UnknownFamily(_))
        ));
        assert!(build_metric("schwarzschild", &Params::default()).is_err());
    }

    #[test]
    fn random_polynomial_metric_is_lorentzian_on_its_box() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let gf = PolynomialMetric::random(&mut rng, 0.2);
        for _ in 0..50 {
            let p = gf.validity().sample(&mut rng);
            metric_at(&gf, &p).unwrap();
        }
    }
}
