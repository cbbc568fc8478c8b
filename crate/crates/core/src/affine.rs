//! Affine inner products on `R^n`.
//!
//! A symmetric 2-affine form `S(u, v)` can always be written as
//! `λ + <u − z, v − z>` for a symmetric bilinear `<·,·>` (matrix `B`), a center
//! `z` and a constant `λ`, provided `B` is nondegenerate. When `λ ≠ 0` the hat
//! space `V̂ = V ⊕ R ẑ` carries the inner product `diag(B, λ)` and the map
//! `x ↦ (x − z)‾ + ẑ` turns `S` into that inner product.

use std::fmt;
use std::ops::Add;

use nalgebra::{DMatrix, DVector};

/// Relative floor for `|det B|`: degenerate when `|det B| < DET_FLOOR · (max |B_ij|)^n`.
pub const DET_FLOOR: f64 = 1e-10;

/// Default absolute tolerance for probe-based checks on black-box forms.
pub const PROBE_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AffineError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },
    #[error("bilinear part is not symmetric (max deviation {deviation:e})")]
    Asymmetric { deviation: f64 },
    #[error("bilinear part is degenerate (|det| = {det:e}, floor {floor:e})")]
    Degenerate { det: f64, floor: f64 },
    #[error("no induced inner product on the hat space when lambda = 0")]
    ZeroLambda,
    #[error("form violates the symmetric 2-affine contract: {0}")]
    ContractViolation(String),
    #[error("non-finite entry in {0}")]
    NonFinite(&'static str),
}

/// `(u, v) = λ + <u − z, v − z>_B`.
#[derive(Debug, Clone, PartialEq)]
pub struct AffineInnerProduct {
    bilinear: DMatrix<f64>,
    center: DVector<f64>,
    lambda: f64,
}

/// Largest `|B_ij − B_ji|`.
fn asymmetry(b: &DMatrix<f64>) -> f64 {
    let n = b.nrows();
    let mut dev = 0.0f64;
    for i in 0..n {
        for j in (i + 1)..n {
            dev = dev.max((b[(i, j)] - b[(j, i)]).abs());
        }
    }
    dev
}

/// `(det, floor)` for the scale-aware degeneracy test.
fn degeneracy(b: &DMatrix<f64>) -> (f64, f64) {
    let scale = b.amax();
    let det = b.clone().lu().determinant().abs();
    (det, DET_FLOOR * scale.powi(b.nrows() as i32))
}

fn is_degenerate(b: &DMatrix<f64>) -> bool {
    let (det, floor) = degeneracy(b);
    b.amax() == 0.0 || det < floor
}

impl AffineInnerProduct {
    /// Validates `B` (square, exactly symmetric, nondegenerate) and the shapes.
    pub fn new(bilinear: DMatrix<f64>, center: DVector<f64>, lambda: f64) -> Result<Self, AffineError> {
        let n = bilinear.nrows();
        if bilinear.ncols() != n {
            return Err(AffineError::Dimension {
                expected: n,
                got: bilinear.ncols(),
            });
        }
        if center.len() != n {
            return Err(AffineError::Dimension {
                expected: n,
                got: center.len(),
            });
        }
        if bilinear.iter().any(|v| !v.is_finite()) {
            return Err(AffineError::NonFinite("bilinear part"));
        }
        if center.iter().any(|v| !v.is_finite()) {
            return Err(AffineError::NonFinite("center"));
        }
        if !lambda.is_finite() {
            return Err(AffineError::NonFinite("lambda"));
        }
        let deviation = asymmetry(&bilinear);
        if deviation != 0.0 {
            return Err(AffineError::Asymmetric { deviation });
        }
        if is_degenerate(&bilinear) {
            let (det, floor) = degeneracy(&bilinear);
            return Err(AffineError::Degenerate { det, floor });
        }
        Ok(Self {
            bilinear,
            center,
            lambda,
        })
    }

    pub fn dim(&self) -> usize {
        self.center.len()
    }

    pub fn bilinear(&self) -> &DMatrix<f64> {
        &self.bilinear
    }

    pub fn center(&self) -> &DVector<f64> {
        &self.center
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn eval(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        let (du, dv) = (u - &self.center, v - &self.center);
        self.lambda + du.dot(&(&self.bilinear * dv))
    }

    /// `u ↦ (u, 0)` expanded as `ℓ(u) + c`, returned as `(ℓ, c)`.
    ///
    /// Expanding `λ + <u − z, −z>` gives `ℓ = −B z` and `c = λ + <z, z>`.
    pub fn linear_affine(&self) -> (DVector<f64>, f64) {
        let bz = &self.bilinear * &self.center;
        (-&bz, self.lambda + self.center.dot(&bz))
    }

    /// The same form as a black box.
    pub fn as_sample(&self) -> TwoAffineSample {
        let p = self.clone();
        TwoAffineSample::new(self.dim(), move |u, v| p.eval(u, v))
    }

    /// `diag(B, λ)` in the basis `(ē_1, …, ē_n, ẑ)`.
    pub fn hat_metric(&self) -> Result<DMatrix<f64>, AffineError> {
        if self.lambda == 0.0 {
            return Err(AffineError::ZeroLambda);
        }
        let n = self.dim();
        let mut m = DMatrix::zeros(n + 1, n + 1);
        m.view_mut((0, 0), (n, n)).copy_from(&self.bilinear);
        m[(n, n)] = self.lambda;
        Ok(m)
    }

    /// `x̂ = (x − z)‾ + ẑ`. Defined even when `λ = 0`.
    pub fn hat_embed(&self, x: &DVector<f64>) -> HatVector {
        HatVector {
            bar: x - &self.center,
            mu: 1.0,
        }
    }

    /// `ȳ`, the linear lift with no `ẑ` component.
    pub fn bar_lift(&self, y: &DVector<f64>) -> HatVector {
        HatVector {
            bar: y.clone(),
            mu: 0.0,
        }
    }

    /// `<a, b>` in `V̂`: `<a.bar, b.bar>_B + λ a.mu b.mu`.
    pub fn hat_inner(&self, a: &HatVector, b: &HatVector) -> Result<f64, AffineError> {
        if self.lambda == 0.0 {
            return Err(AffineError::ZeroLambda);
        }
        Ok(a.bar.dot(&(&self.bilinear * &b.bar)) + self.lambda * a.mu * b.mu)
    }
}

impl fmt::Display for AffineInnerProduct {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "lambda = {}", self.lambda)?;
        writeln!(f, "center = {:?}", self.center.as_slice())?;
        write!(f, "bilinear = [")?;
        for i in 0..self.dim() {
            if i > 0 {
                write!(f, "; ")?;
            }
            let row: Vec<String> = (0..self.dim()).map(|j| self.bilinear[(i, j)].to_string()).collect();
            write!(f, "{}", row.join(", "))?;
        }
        write!(f, "]")
    }
}

/// Element `x̄ + μẑ` of the hat space.
#[derive(Debug, Clone, PartialEq)]
pub struct HatVector {
    pub bar: DVector<f64>,
    pub mu: f64,
}

impl HatVector {
    /// `(bar_1, …, bar_n, μ)`.
    pub fn to_vector(&self) -> DVector<f64> {
        let n = self.bar.len();
        DVector::from_fn(n + 1, |i, _| if i < n { self.bar[i] } else { self.mu })
    }
}

impl Add for HatVector {
    type Output = HatVector;
    fn add(self, o: HatVector) -> HatVector {
        HatVector {
            bar: self.bar + o.bar,
            mu: self.mu + o.mu,
        }
    }
}

impl Add<&HatVector> for &HatVector {
    type Output = HatVector;
    fn add(self, o: &HatVector) -> HatVector {
        HatVector {
            bar: &self.bar + &o.bar,
            mu: self.mu + o.mu,
        }
    }
}

type SampleFn = dyn Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync;

/// A symmetric 2-affine form known only through evaluations.
pub struct TwoAffineSample {
    dim: usize,
    eval: Box<SampleFn>,
}

impl fmt::Debug for TwoAffineSample {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TwoAffineSample").field("dim", &self.dim).finish_non_exhaustive()
    }
}

impl TwoAffineSample {
    pub fn new<F>(dim: usize, eval: F) -> Self
    where
        F: Fn(&DVector<f64>, &DVector<f64>) -> f64 + Send + Sync + 'static,
    {
        Self {
            dim,
            eval: Box::new(eval),
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn eval(&self, u: &DVector<f64>, v: &DVector<f64>) -> f64 {
        (self.eval)(u, v)
    }

    fn basis(&self, i: usize) -> DVector<f64> {
        DVector::from_fn(self.dim, |k, _| if k == i { 1.0 } else { 0.0 })
    }

    fn zero(&self) -> DVector<f64> {
        DVector::zeros(self.dim)
    }
}

/// Bilinear part of a sample, with a flag for degeneracy.
#[derive(Debug, Clone, PartialEq)]
pub struct BilinearPart {
    pub matrix: DMatrix<f64>,
    pub degenerate: bool,
}

/// `B_ij = S(a + e_i, a + e_j) − S(a + e_i, a) − S(a, a + e_j) + S(a, a)`.
///
/// For a 2-affine `S` the result does not depend on the base point `a`.
/// The probe matrix is checked for symmetry and then symmetrized.
pub fn extract_bilinear_part_at(
    s: &TwoAffineSample,
    base: &DVector<f64>,
    tol: f64,
) -> Result<BilinearPart, AffineError> {
    let n = s.dim();
    if base.len() != n {
        return Err(AffineError::Dimension {
            expected: n,
            got: base.len(),
        });
    }
    let shifted: Vec<DVector<f64>> = (0..n).map(|i| base + s.basis(i)).collect();
    let s00 = s.eval(base, base);
    let left: Vec<f64> = shifted.iter().map(|e| s.eval(e, base)).collect();
    let right: Vec<f64> = shifted.iter().map(|e| s.eval(base, e)).collect();
    let raw = DMatrix::from_fn(n, n, |i, j| s.eval(&shifted[i], &shifted[j]) - left[i] - right[j] + s00);
    if raw.iter().any(|v| !v.is_finite()) {
        return Err(AffineError::NonFinite("sample"));
    }
    let scale = raw.amax().max(1.0);
    let deviation = asymmetry(&raw).max(
        left.iter()
            .zip(&right)
            .map(|(l, r)| (l - r).abs())
            .fold(0.0, f64::max),
    );
    if deviation > tol * scale {
        return Err(AffineError::Asymmetric { deviation });
    }
    let matrix = (&raw + raw.transpose()) * 0.5;
    let degenerate = is_degenerate(&matrix);
    Ok(BilinearPart { matrix, degenerate })
}

/// [`extract_bilinear_part_at`] probed at the origin.
pub fn extract_bilinear_part(s: &TwoAffineSample, tol: f64) -> Result<BilinearPart, AffineError> {
    extract_bilinear_part_at(s, &s.zero(), tol)
}

/// Canonical `(B, z, λ)` of a black-box form.
///
/// With `ℓ_i = S(0, e_i) − S(0, 0)` the center solves `B z = −ℓ` and
/// `λ = S(0, 0) − <z, z>`. The result is compared against `S` on a fixed set
/// of probe pairs off the basis, which catches forms that are not 2-affine.
pub fn decompose(s: &TwoAffineSample, tol: f64) -> Result<AffineInnerProduct, AffineError> {
    let part = extract_bilinear_part(s, tol)?;
    let b = part.matrix;
    if part.degenerate {
        let (det, floor) = degeneracy(&b);
        return Err(AffineError::Degenerate { det, floor });
    }
    let zero = s.zero();
    let s00 = s.eval(&zero, &zero);
    let ell = DVector::from_fn(s.dim(), |i, _| s.eval(&zero, &s.basis(i)) - s00);
    let z = b
        .clone()
        .lu()
        .solve(&(-&ell))
        .ok_or(AffineError::Degenerate { det: 0.0, floor: 0.0 })?;
    let lambda = s00 - z.dot(&(&b * &z));
    let p = AffineInnerProduct::new(b, z, lambda)?;

    let n = s.dim();
    let probes: Vec<DVector<f64>> = (0..n + 3)
        .map(|k| DVector::from_fn(n, |i, _| ((k + 1) as f64 * 0.618_034 + i as f64 * 0.414_214).fract() * 4.0 - 2.0))
        .collect();
    let mut worst = 0.0f64;
    let mut scale = 1.0f64;
    for u in &probes {
        for v in &probes {
            let expected = s.eval(u, v);
            scale = scale.max(expected.abs());
            worst = worst.max((expected - p.eval(u, v)).abs());
        }
    }
    if worst > tol * scale {
        return Err(AffineError::ContractViolation(format!(
            "reconstruction misses probe values by {worst:e}"
        )));
    }
    Ok(p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DMatrix<f64> {
        loop {
            let a = DMatrix::from_fn(n, n, |_, _| rng.gen_range(-1.0..1.0));
            let mut b = &a + a.transpose();
            // well-conditioned: shift away from zero eigenvalues
            for i in 0..n {
                b[(i, i)] += if i % 2 == 0 { 3.0 } else { -3.0 };
            }
            if !is_degenerate(&b) {
                return b;
            }
        }
    }

    fn random_vector(rng: &mut ChaCha8Rng, n: usize) -> DVector<f64> {
        DVector::from_fn(n, |_, _| rng.gen_range(-2.0..2.0))
    }

    #[test]
    fn dot_product_is_its_own_bilinear_part() {
        let s = TwoAffineSample::new(4, |u, v| u.dot(v));
        let part = extract_bilinear_part(&s, PROBE_TOLERANCE).unwrap();
        assert_eq!(part.matrix, DMatrix::identity(4, 4));
        assert!(!part.degenerate);
        let p = decompose(&s, PROBE_TOLERANCE).unwrap();
        assert_eq!(p.center(), &DVector::zeros(4));
        assert_eq!(p.lambda(), 0.0);
    }

    #[test]
    fn constant_form_is_flagged_degenerate() {
        let s = TwoAffineSample::new(3, |_, _| 4.2);
        let part = extract_bilinear_part(&s, PROBE_TOLERANCE).unwrap();
        assert_eq!(part.matrix, DMatrix::zeros(3, 3));
        assert!(part.degenerate);
        assert!(matches!(decompose(&s, PROBE_TOLERANCE), Err(AffineError::Degenerate { .. })));
    }

    #[test]
    fn recovers_known_triple() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b0 = random_symmetric(&mut rng, 4);
        let z0 = random_vector(&mut rng, 4);
        let (bb, zz) = (b0.clone(), z0.clone());
        let s = TwoAffineSample::new(4, move |u, v| {
            let (du, dv) = (u - &zz, v - &zz);
            2.0 + du.dot(&(&bb * dv))
        });
        let part = extract_bilinear_part(&s, PROBE_TOLERANCE).unwrap();
        assert!((&part.matrix - &b0).amax() < 1e-10);
        let p = decompose(&s, PROBE_TOLERANCE).unwrap();
        assert!((p.center() - &z0).amax() < 1e-10);
        assert!((p.lambda() - 2.0).abs() < 1e-10);
    }

    #[test]
    fn bilinear_part_independent_of_base_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = AffineInnerProduct::new(random_symmetric(&mut rng, 5), random_vector(&mut rng, 5), -0.7).unwrap();
        let s = p.as_sample();
        let at0 = extract_bilinear_part(&s, PROBE_TOLERANCE).unwrap().matrix;
        for _ in 0..5 {
            let a = random_vector(&mut rng, 5);
            let at = extract_bilinear_part_at(&s, &a, PROBE_TOLERANCE).unwrap().matrix;
            assert!((&at - &at0).amax() < 1e-10);
            assert_eq!(at, at.transpose());
        }
    }

    #[test]
    fn asymmetric_sample_is_rejected() {
        let s = TwoAffineSample::new(2, |u, v| u[0] * v[1] + 0.5 * u[0] * v[0] + v[1] * v[1] * 0.0);
        assert!(matches!(extract_bilinear_part(&s, PROBE_TOLERANCE), Err(AffineError::Asymmetric { .. })));
        let s = TwoAffineSample::new(2, |u, v| u.dot(v) + 0.3 * u[0]);
        assert!(matches!(decompose(&s, PROBE_TOLERANCE), Err(AffineError::Asymmetric { .. })));
    }

    #[test]
    fn non_affine_sample_is_a_contract_violation() {
        let s = TwoAffineSample::new(2, |u, v| u.dot(v) + (u[0] * v[0]).powi(2));
        assert!(matches!(decompose(&s, PROBE_TOLERANCE), Err(AffineError::ContractViolation(_))));
    }

    #[test]
    fn constructor_validates() {
        let z = DVector::zeros(2);
        let asym = DMatrix::from_row_slice(2, 2, &[1.0, 0.1, 0.0, 1.0]);
        assert!(matches!(AffineInnerProduct::new(asym, z.clone(), 1.0), Err(AffineError::Asymmetric { .. })));
        let sing = DMatrix::from_row_slice(2, 2, &[1.0, 1.0, 1.0, 1.0]);
        assert!(matches!(AffineInnerProduct::new(sing, z.clone(), 1.0), Err(AffineError::Degenerate { .. })));
        let eye = DMatrix::identity(2, 2);
        assert!(matches!(
            AffineInnerProduct::new(eye.clone(), DVector::zeros(3), 1.0),
            Err(AffineError::Dimension { .. })
        ));
        // scale-aware: a tiny but well-conditioned matrix is fine
        assert!(AffineInnerProduct::new(eye * 1e-6, z, 1.0).is_ok());
    }

    #[test]
    fn hat_metric_blocks() {
        let p = AffineInnerProduct::new(DMatrix::identity(3, 3), DVector::zeros(3), 1.0).unwrap();
        assert_eq!(p.hat_metric().unwrap(), DMatrix::identity(4, 4));
        let eta = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0, 1.0, 1.0]));
        let p = AffineInnerProduct::new(eta, DVector::from_vec(vec![0.3, 0.0, -1.0, 2.0]), 1.0).unwrap();
        let expected = DMatrix::from_diagonal(&DVector::from_vec(vec![-1.0, 1.0, 1.0, 1.0, 1.0]));
        assert_eq!(p.hat_metric().unwrap(), expected);
        let p = AffineInnerProduct::new(DMatrix::identity(3, 3), DVector::zeros(3), 0.0).unwrap();
        assert_eq!(p.hat_metric(), Err(AffineError::ZeroLambda));
        // the embedding still exists without an induced inner product
        let x = DVector::from_vec(vec![1.0, 2.0, 3.0]);
        assert_eq!(p.hat_embed(&x).mu, 1.0);
        assert!(p.hat_inner(&p.hat_embed(&x), &p.hat_embed(&x)).is_err());
    }

    #[test]
    fn embedding_of_center() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let p = AffineInnerProduct::new(random_symmetric(&mut rng, 4), random_vector(&mut rng, 4), 3.5).unwrap();
        let zh = p.hat_embed(p.center());
        assert_eq!(zh.bar, DVector::zeros(4));
        assert_eq!(zh.mu, 1.0);
        assert_eq!(p.hat_inner(&zh, &zh).unwrap(), 3.5);
    }

    #[test]
    fn linear_affine_part_matches_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let p = AffineInnerProduct::new(random_symmetric(&mut rng, 3), random_vector(&mut rng, 3), 0.4).unwrap();
        let (ell, c) = p.linear_affine();
        let u = random_vector(&mut rng, 3);
        let zero = DVector::zeros(3);
        assert!((p.eval(&u, &zero) - (ell.dot(&u) + c)).abs() < 1e-12);
    }

    fn triple(seed: u64, n: usize) -> (DMatrix<f64>, DVector<f64>, f64) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_symmetric(&mut rng, n);
        let z = random_vector(&mut rng, n);
        let lambda = rng.gen_range(0.1..3.0) * if rng.gen_bool(0.5) { 1.0 } else { -1.0 };
        (b, z, lambda)
    }

    fn rel(a: f64, b: f64) -> f64 {
        (a - b).abs() / b.abs().max(1.0)
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(128))]

        #[test]
        fn decompose_round_trip(seed in any::<u64>(), n in 2usize..=6) {
            let (b, z, lambda) = triple(seed, n);
            let p = AffineInnerProduct::new(b.clone(), z.clone(), lambda).unwrap();
            let q = decompose(&p.as_sample(), PROBE_TOLERANCE).unwrap();
            for i in 0..n {
                prop_assert!(rel(q.center()[i], z[i]) < 1e-10);
                for j in 0..n {
                    prop_assert!(rel(q.bilinear()[(i, j)], b[(i, j)]) < 1e-10);
                }
            }
            prop_assert!(rel(q.lambda(), lambda) < 1e-10);
        }

        #[test]
        fn hat_embedding_is_compatible(seed in any::<u64>(), n in 2usize..=6) {
            let (b, z, lambda) = triple(seed, n);
            let p = AffineInnerProduct::new(b, z, lambda).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
            let (x, y) = (random_vector(&mut rng, n), random_vector(&mut rng, n));
            let direct = p.eval(&x, &y);
            let hat = p.hat_inner(&p.hat_embed(&x), &p.hat_embed(&y)).unwrap();
            prop_assert!((direct - hat).abs() < 1e-12 * direct.abs().max(1.0) * 10.0);
            // same through the explicit matrix
            let m = p.hat_metric().unwrap();
            let (xv, yv) = (p.hat_embed(&x).to_vector(), p.hat_embed(&y).to_vector());
            prop_assert!((xv.dot(&(&m * yv)) - direct).abs() < 1e-10 * direct.abs().max(1.0));
        }

        #[test]
        fn embedding_is_affine(seed in any::<u64>(), n in 2usize..=6) {
            let (b, z, lambda) = triple(seed, n);
            let p = AffineInnerProduct::new(b, z, lambda).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 2);
            let (x, y) = (random_vector(&mut rng, n), random_vector(&mut rng, n));
            let lhs = p.hat_embed(&x) + p.bar_lift(&y);
            let rhs = p.hat_embed(&(&x + &y));
            prop_assert!((lhs.bar - rhs.bar).amax() < 1e-12);
            prop_assert_eq!(lhs.mu, rhs.mu);
        }
    }
}
