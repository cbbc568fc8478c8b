//! Algebroid geodesics.
//!
//! A curve `α` in `M` lifts to `α̂ = α'‾ + λξ`. The lift is a geodesic of
//! `T̂M` iff `λ` is constant and `∇_{α'} α' = 2λ F(α')`, which in coordinates is
//!
//! `du^k/dτ = −Γ^k_ij u^i u^j + 2λ F^k_j u^j`.
//!
//! Integration is classic fixed-step RK4 in the affine parameter `τ`; `λ` is
//! carried in the state with zero derivative.

use std::io::{self, Write};

use nalgebra::Vector4;

use crate::algebroid::{connection_from_jet, AffineSpacetime, FiberValue};
use crate::error::{Error, Result};
use crate::geometry::{christoffel, christoffel_analytic, eval_metric, metric_at, Christoffel, MetricField, Point};

/// Accepted deviation of `<u, u>` from `−1` (timelike) or `0` (null) for initial data.
pub const NORMALIZATION_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldlineState {
    pub x: Point,
    pub u: Vector4<f64>,
    /// Charge-to-mass ratio, the `ξ` component of the lifted velocity.
    pub lambda: f64,
    pub tau: f64,
}

impl WorldlineState {
    pub fn new(x: Point, u: Vector4<f64>, lambda: f64) -> Self {
        Self { x, u, lambda, tau: 0.0 }
    }

    /// Checks `<u, u> ∈ {−1, 0}`. With `normalize`, a timelike `u` of any
    /// magnitude is rescaled to `<u, u> = −1` instead of being rejected.
    pub fn prepared(gf: &dyn MetricField, x: Point, u: Vector4<f64>, lambda: f64, normalize: bool) -> Result<Self> {
        let g = metric_at(gf, &x)?;
        let n = u.dot(&(g * u));
        let scale = u.norm_squared().max(1.0);
        if (n + 1.0).abs() < NORMALIZATION_TOLERANCE || n.abs() < NORMALIZATION_TOLERANCE * scale {
            return Ok(Self::new(x, u, lambda));
        }
        if normalize && n < 0.0 {
            return Ok(Self::new(x, u / (-n).sqrt(), lambda));
        }
        Err(Error::InvalidArgument(format!(
            "initial velocity has <u,u> = {n}; expected -1 (timelike) or 0 (null), or pass normalize"
        )))
    }

    /// `<u, u>` at the current point.
    pub fn norm(&self, gf: &dyn MetricField) -> Result<f64> {
        let g = eval_metric(gf, &self.x)?;
        Ok(self.u.dot(&(g * self.u)))
    }

    /// Same world-line run backwards: `u → −u`, `λ → −λ`.
    pub fn reversed(&self) -> Self {
        Self {
            u: -self.u,
            lambda: -self.lambda,
            ..*self
        }
    }

    fn is_finite(&self) -> bool {
        self.x.iter().chain(self.u.iter()).all(|v| v.is_finite())
    }
}

/// Where Christoffel symbols come from during integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChristoffelSource {
    /// Finite differences of the metric components.
    #[default]
    FiniteDifference,
    /// The family's analytic metric derivatives; an error if it has none.
    Analytic,
}

fn christoffel_from(st: &AffineSpacetime, p: &Point, source: ChristoffelSource) -> Result<Christoffel> {
    match source {
        ChristoffelSource::FiniteDifference => st.christoffel(p),
        ChristoffelSource::Analytic => christoffel_analytic(st.metric(), p).unwrap_or_else(|| {
            Err(Error::InvalidArgument(format!(
                "metric `{}` has no analytic derivatives",
                st.metric().name()
            )))
        }),
    }
}

/// `(dx/dτ, du/dτ)` for the charged geodesic equation.
pub fn geodesic_rhs(st: &AffineSpacetime, s: &WorldlineState) -> Result<(Vector4<f64>, Vector4<f64>)> {
    rhs_with(st, s, ChristoffelSource::FiniteDifference)
}

fn rhs_with(
    st: &AffineSpacetime,
    s: &WorldlineState,
    source: ChristoffelSource,
) -> Result<(Vector4<f64>, Vector4<f64>)> {
    st.metric().validity().check(&s.x)?;
    let gamma = christoffel_from(st, &s.x, source)?;
    let mut du = -gamma.contract(&s.u, &s.u);
    if s.lambda != 0.0 {
        du += st.faraday(&s.x)?.apply(&s.u) * (2.0 * s.lambda);
    }
    Ok((s.u, du))
}

/// Why integration stopped before the requested number of steps.
#[derive(Debug, Clone, PartialEq)]
pub struct EarlyExit {
    /// Index of the last completed step.
    pub step: usize,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Trajectory {
    pub samples: Vec<WorldlineState>,
    /// `<u, u>` at each sample.
    pub norms: Vec<f64>,
    /// `−(u_t − λ A♭_t)` at each sample; conserved when nothing depends on `x⁰`.
    pub energies: Vec<f64>,
    pub exit: Option<EarlyExit>,
}

impl Trajectory {
    /// Largest `|<u,u> − <u₀,u₀>|` along the trajectory.
    pub fn max_norm_drift(&self) -> f64 {
        let n0 = self.norms.first().copied().unwrap_or(0.0);
        self.norms.iter().map(|n| (n - n0).abs()).fold(0.0, f64::max)
    }

    pub fn max_energy_drift(&self) -> f64 {
        let e0 = self.energies.first().copied().unwrap_or(0.0);
        self.energies.iter().map(|e| (e - e0).abs()).fold(0.0, f64::max)
    }

    pub fn last(&self) -> &WorldlineState {
        self.samples.last().expect("trajectories hold the initial state")
    }

    /// CSV with header `tau,x0,x1,x2,x3,u0,u1,u2,u3,norm_drift`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "tau,x0,x1,x2,x3,u0,u1,u2,u3,norm_drift")?;
        let n0 = self.norms.first().copied().unwrap_or(0.0);
        for (s, n) in self.samples.iter().zip(&self.norms) {
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                s.tau,
                s.x[0],
                s.x[1],
                s.x[2],
                s.x[3],
                s.u[0],
                s.u[1],
                s.u[2],
                s.u[3],
                n - n0
            )?;
        }
        Ok(())
    }
}

/// Fixed-step RK4 integrator for charged geodesics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Integrator {
    pub step: f64,
    pub christoffel: ChristoffelSource,
}

impl Integrator {
    pub fn new(step: f64) -> Self {
        Self {
            step,
            christoffel: ChristoffelSource::default(),
        }
    }

    pub fn with_christoffel(mut self, source: ChristoffelSource) -> Self {
        self.christoffel = source;
        self
    }

    fn energy(&self, st: &AffineSpacetime, s: &WorldlineState) -> Result<f64> {
        let g = eval_metric(st.metric(), &s.x)?;
        let u_t = (g * s.u)[0];
        let a_t = if s.lambda == 0.0 {
            0.0
        } else {
            (g * st.potential().components(&s.x)?)[0]
        };
        Ok(-(u_t - s.lambda * a_t))
    }

    fn rk4(&self, st: &AffineSpacetime, s: &WorldlineState) -> Result<WorldlineState> {
        let h = self.step;
        let at = |x: Point, u: Vector4<f64>| rhs_with(st, &WorldlineState { x, u, ..*s }, self.christoffel);
        let (k1x, k1u) = at(s.x, s.u)?;
        let (k2x, k2u) = at(s.x + k1x * (h / 2.0), s.u + k1u * (h / 2.0))?;
        let (k3x, k3u) = at(s.x + k2x * (h / 2.0), s.u + k2u * (h / 2.0))?;
        let (k4x, k4u) = at(s.x + k3x * h, s.u + k3u * h)?;
        Ok(WorldlineState {
            x: s.x + (k1x + k2x * 2.0 + k3x * 2.0 + k4x) * (h / 6.0),
            u: s.u + (k1u + k2u * 2.0 + k3u * 2.0 + k4u) * (h / 6.0),
            lambda: s.lambda,
            tau: s.tau + h,
        })
    }

    /// Takes `n_steps` steps from `s0`. Leaving the validity box ends the run
    /// early with the partial trajectory; a non-finite state is an error.
    pub fn integrate(&self, st: &AffineSpacetime, s0: WorldlineState, n_steps: usize) -> Result<Trajectory> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidArgument(format!("step must be positive, got {}", self.step)));
        }
        if !s0.is_finite() {
            return Err(Error::NonFinite("initial state".into()));
        }
        st.metric().validity().check(&s0.x)?;
        let mut traj = Trajectory {
            samples: vec![s0],
            norms: vec![s0.norm(st.metric())?],
            energies: vec![self.energy(st, &s0)?],
            exit: None,
        };
        let mut s = s0;
        for k in 0..n_steps {
            let next = match self.rk4(st, &s) {
                Ok(next) if st.metric().validity().contains(&next.x) => next,
                Ok(next) => {
                    traj.exit = Some(EarlyExit {
                        step: k,
                        reason: format!("left the validity box at {:?}", next.x.as_slice()),
                    });
                    break;
                }
                Err(e @ Error::OutsideBox { .. }) => {
                    traj.exit = Some(EarlyExit {
                        step: k,
                        reason: e.to_string(),
                    });
                    break;
                }
                Err(e) => return Err(e),
            };
            if !next.is_finite() {
                return Err(Error::NonFinite(format!("state after step {}", k + 1)));
            }
            traj.norms.push(next.norm(st.metric())?);
            traj.energies.push(self.energy(st, &next)?);
            traj.samples.push(next);
            s = next;
        }
        Ok(traj)
    }
}

/// Convenience wrapper: RK4 with finite-difference Christoffels.
pub fn integrate(st: &AffineSpacetime, s0: WorldlineState, step: f64, n_steps: usize) -> Result<Trajectory> {
    Integrator::new(step).integrate(st, s0, n_steps)
}

/// Largest `|∇̂_α̂ α̂|` over the samples of `traj`, for `α̂ = u‾ + λξ`.
///
/// `du/dτ` is estimated by a five-point stencil (one-sided near the ends),
/// then fed to the closed-form connection. Shorter runs fall back to the
/// three-point central stencil on interior samples.
pub fn lift_check(traj: &Trajectory, st: &AffineSpacetime) -> Result<f64> {
    const FIVE_POINT: [[f64; 5]; 5] = [
        [-25.0, 48.0, -36.0, 16.0, -3.0],
        [-3.0, -10.0, 18.0, -6.0, 1.0],
        [1.0, -8.0, 0.0, 8.0, -1.0],
        [-1.0, 6.0, -18.0, 10.0, 3.0],
        [3.0, -16.0, 36.0, -48.0, 25.0],
    ];
    let s = &traj.samples;
    let n = s.len();
    if n < 3 {
        return Err(Error::InvalidArgument(format!(
            "lift check needs at least 3 samples, got {n}"
        )));
    }
    let h = s[1].tau - s[0].tau;
    let range = if n >= 5 { 0..n } else { 1..n - 1 };
    let mut worst = 0.0f64;
    for i in range {
        let du = if n >= 5 {
            let start = i.saturating_sub(2).min(n - 5);
            let w = &FIVE_POINT[i - start];
            (0..5).fold(Vector4::zeros(), |acc, k| acc + s[start + k].u * w[k]) / (12.0 * h)
        } else {
            (s[i + 1].u - s[i - 1].u) / (2.0 * h)
        };
        let gamma = st.christoffel(&s[i].x)?;
        let f = st.faraday(&s[i].x)?;
        let lift = FiberValue::new(s[i].u, s[i].lambda);
        let v = connection_from_jet(&gamma, &f, &lift, &lift, &FiberValue::bar(du));
        worst = worst.max(v.max_abs());
    }
    Ok(worst)
}

/// Plain geodesic of the base metric with `λ = 0`, using analytic Christoffel
/// symbols when the family provides them.
pub fn integrate_geodesic(
    gf: std::sync::Arc<dyn MetricField>,
    x0: Point,
    u0: Vector4<f64>,
    step: f64,
    n_steps: usize,
) -> Result<Trajectory> {
    let source = if christoffel_analytic(gf.as_ref(), &x0).is_some() {
        ChristoffelSource::Analytic
    } else {
        ChristoffelSource::FiniteDifference
    };
    let st = AffineSpacetime::new(gf, std::sync::Arc::new(crate::families::ZeroPotential));
    Integrator::new(step)
        .with_christoffel(source)
        .integrate(&st, WorldlineState::new(x0, u0, 0.0), n_steps)
}

/// `du/dτ` at a point from FD Christoffels only, with `λ = 0`. Handy as a
/// cross-check for [`geodesic_rhs`].
pub fn geodesic_acceleration(gf: &dyn MetricField, x: &Point, u: &Vector4<f64>) -> Result<Vector4<f64>> {
    let gamma = christoffel(gf, x, &Default::default())?;
    Ok(-gamma.contract(u, u))
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;
    use std::sync::Arc;

    use super::*;
    use crate::families::{CovariantForm, CovariantPotential, Minkowski, ReissnerNordstrom, Schwarzschild, ZeroPotential};

    fn flat(b: f64) -> AffineSpacetime {
        let gf: Arc<dyn MetricField> = Arc::new(Minkowski::default());
        let pf = Arc::new(CovariantPotential::new(gf.clone(), CovariantForm::Uniform { b }));
        AffineSpacetime::new(gf, pf)
    }

    fn boost(v: f64) -> Vector4<f64> {
        let gamma = 1.0 / (1.0 - v * v).sqrt();
        Vector4::new(gamma, gamma * v, 0.0, 0.0)
    }

    #[test]
    fn flat_vacuum_has_no_acceleration() {
        let st = AffineSpacetime::new(Arc::new(Minkowski::default()), Arc::new(ZeroPotential));
        let s = WorldlineState::new(Point::new(0.0, 1.0, 2.0, 3.0), boost(0.5), 0.7);
        let (dx, du) = geodesic_rhs(&st, &s).unwrap();
        assert_eq!(dx, s.u);
        assert_eq!(du, Vector4::zeros());
    }

    #[test]
    fn uniform_field_rotates_velocity_in_xy_plane() {
        let (b, lambda) = (1.0, 0.8);
        let st = flat(b);
        let u = boost(0.3);
        let (_, du) = geodesic_rhs(&st, &WorldlineState::new(Point::zeros(), u, lambda)).unwrap();
        // only F_12 = B/2 is nonzero, so F(u)^2 = F_12 u^1
        assert!(du[0].abs() < 1e-12 && du[1].abs() < 1e-12 && du[3].abs() < 1e-12);
        assert!((du[2] - 2.0 * lambda * (b / 2.0) * u[1]).abs() < 1e-10);
    }

    #[test]
    fn straight_line_in_flat_space() {
        let st = AffineSpacetime::new(Arc::new(Minkowski::default()), Arc::new(ZeroPotential));
        let gf = Minkowski::default();
        let s0 = WorldlineState::prepared(&gf, Point::zeros(), Vector4::new(1.0, 0.5, 0.0, 0.0), 0.0, true).unwrap();
        let traj = integrate(&st, s0, 0.01, 200).unwrap();
        assert!(traj.exit.is_none());
        for s in &traj.samples {
            assert!((s.x - s0.u * s.tau).abs().max() < 1e-12);
        }
        assert!(traj.max_norm_drift() < 1e-12);
        assert!(lift_check(&traj, &st).unwrap() < 1e-10);
    }

    #[test]
    fn unnormalized_velocity_is_rejected_unless_asked() {
        let gf = Minkowski::default();
        let u = Vector4::new(1.0, 0.5, 0.0, 0.0);
        assert!(WorldlineState::prepared(&gf, Point::zeros(), u, 0.0, false).is_err());
        let s = WorldlineState::prepared(&gf, Point::zeros(), u, 0.0, true).unwrap();
        assert!((s.norm(&gf).unwrap() + 1.0).abs() < 1e-14);
        // null data is accepted as is
        assert!(WorldlineState::prepared(&gf, Point::zeros(), Vector4::new(1.0, 1.0, 0.0, 0.0), 0.0, false).is_ok());
        // spacelike cannot be normalized to -1
        assert!(WorldlineState::prepared(&gf, Point::zeros(), Vector4::new(0.0, 1.0, 0.0, 0.0), 0.0, true).is_err());
    }

    /// `u^1 = γv cos ωτ`, `u^2 = γv sin ωτ` with `ω = λB`, from the hand-solved
    /// system `du^1 = −λB u^2`, `du^2 = λB u^1`.
    fn larmor(v: f64, b: f64, lambda: f64, tau: f64) -> Point {
        let gv = v / (1.0 - v * v).sqrt();
        let w = lambda * b;
        let gamma = 1.0 / (1.0 - v * v).sqrt();
        Point::new(gamma * tau, gv / w * (w * tau).sin(), gv / w * (1.0 - (w * tau).cos()), 0.0)
    }

    #[test]
    fn larmor_orbit_and_lift() {
        let (v, b, lambda) = (0.5, 1.0, 1.0);
        let st = flat(b);
        let period = 2.0 * PI / (lambda * b);
        let h = period / 2000.0;
        let traj = integrate(&st, WorldlineState::new(Point::zeros(), boost(v), lambda), h, 2000).unwrap();
        let err = traj
            .samples
            .iter()
            .map(|s| (s.x - larmor(v, b, lambda, s.tau)).abs().max())
            .fold(0.0, f64::max);
        assert!(err < 1e-8, "{err}");
        assert!(traj.max_norm_drift() < 1e-10);
        assert!(lift_check(&traj, &st).unwrap() < 1e-6);
    }

    #[test]
    fn perturbed_trajectory_fails_lift_check() {
        let st = flat(1.0);
        let mut traj = integrate(&st, WorldlineState::new(Point::zeros(), boost(0.5), 1.0), 1e-3, 400).unwrap();
        let clean = lift_check(&traj, &st).unwrap();
        for s in traj.samples.iter_mut().skip(200) {
            s.u *= 1.01;
        }
        let dirty = lift_check(&traj, &st).unwrap();
        assert!(clean < 1e-6);
        assert!(dirty > 1e3 * clean.max(1e-9), "{clean} {dirty}");
    }

    fn circular_orbit(m: f64, r: f64) -> WorldlineState {
        let d = (1.0 - 3.0 * m / r).sqrt();
        WorldlineState::new(
            Point::new(0.0, r, PI / 2.0, 0.0),
            Vector4::new(1.0 / d, 0.0, 0.0, (m / r.powi(3)).sqrt() / d),
            0.0,
        )
    }

    #[test]
    fn schwarzschild_circular_orbit_keeps_radius() {
        let gf = Arc::new(Schwarzschild::new(1.0).unwrap());
        let st = AffineSpacetime::new(gf.clone(), Arc::new(ZeroPotential));
        let s0 = circular_orbit(1.0, 10.0);
        assert!((s0.norm(gf.as_ref()).unwrap() + 1.0).abs() < 1e-14);
        // proper period of one revolution
        let period = 2.0 * PI / s0.u[3];
        let n = 4000;
        let traj = integrate(&st, s0, period / n as f64, n).unwrap();
        let dr = traj.samples.iter().map(|s| (s.x[1] - 10.0).abs()).fold(0.0, f64::max);
        assert!(dr < 1e-6, "{dr}");
        assert!((traj.last().x[3] - 2.0 * PI).abs() < 1e-6);
        assert!(traj.max_energy_drift() < 1e-9);
    }

    #[test]
    fn forward_then_backward_returns_home() {
        let st = flat(1.0);
        let s0 = WorldlineState::new(Point::new(0.0, 0.1, -0.2, 0.0), boost(0.4), 0.9);
        let integ = Integrator::new(1e-3);
        let fwd = integ.integrate(&st, s0, 1000).unwrap();
        let back = integ.integrate(&st, fwd.last().reversed(), 1000).unwrap();
        let end = back.last();
        assert!((end.x - s0.x).abs().max() < 1e-10);
        assert!((end.u + s0.u).abs().max() < 1e-10);
    }

    #[test]
    fn box_exit_is_reported_not_fatal() {
        let gf = Arc::new(Schwarzschild::new(1.0).unwrap());
        let st = AffineSpacetime::new(gf, Arc::new(ZeroPotential));
        // radial infall from rest at r = 3
        let s0 = WorldlineState::new(Point::new(0.0, 3.0, 1.0, 0.0), Vector4::new(1.0 / (1.0f64 / 3.0).sqrt(), 0.0, 0.0, 0.0), 0.0);
        let traj = integrate(&st, s0, 0.01, 100_000).unwrap();
        let exit = traj.exit.expect("the particle crosses into r < r+");
        assert_eq!(exit.step + 1, traj.samples.len());
        assert!(traj.samples.iter().all(|s| s.x[1] > 2.0));
    }

    #[test]
    fn charged_energy_is_conserved_in_reissner_nordstrom() {
        let gf: Arc<dyn MetricField> = Arc::new(ReissnerNordstrom::new(1.0, 0.5).unwrap());
        let pf = Arc::new(CovariantPotential::new(gf.clone(), CovariantForm::RadialCoulomb { q: 0.5 }));
        let st = AffineSpacetime::new(gf.clone(), pf);
        let s0 = WorldlineState::prepared(
            gf.as_ref(),
            Point::new(0.0, 10.0, PI / 2.0, 0.0),
            Vector4::new(1.0, 0.01, 0.0, 0.038),
            0.3,
            true,
        )
        .unwrap();
        let traj = integrate(&st, s0, 0.05, 2000).unwrap();
        assert!(traj.exit.is_none());
        assert!(traj.max_energy_drift() < 1e-8, "{}", traj.max_energy_drift());
        assert!(traj.max_norm_drift() < 1e-8);
    }

    #[test]
    fn csv_has_expected_columns() {
        let st = flat(1.0);
        let traj = integrate(&st, WorldlineState::new(Point::zeros(), boost(0.5), 1.0), 0.1, 3).unwrap();
        let mut buf = Vec::new();
        traj.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "tau,x0,x1,x2,x3,u0,u1,u2,u3,norm_drift");
        assert_eq!(lines.len(), 5);
        assert!(lines[1..].iter().all(|l| l.split(',').count() == 10));
    }
}
