use nalgebra::{Matrix4, Vector4};

use super::metric::{metric_at, MetricField, Point};
use crate::error::{Error, Result};

/// Smallest `|<v, v>|` accepted while orthonormalizing the coordinate basis.
pub const FRAME_PIVOT_FLOOR: f64 = 1e-10;

/// Orthonormal frame `e_a` with signs `ε_a = <e_a, e_a>`; the timelike vector comes first.
#[derive(Debug, Clone, PartialEq)]
pub struct OrthonormalFrame {
    pub vectors: [Vector4<f64>; 4],
    pub signs: [f64; 4],
}

impl OrthonormalFrame {
    /// Gram–Schmidt on the coordinate basis under the metric `g`.
    pub fn from_metric(g: &Matrix4<f64>) -> Result<Self> {
        let mut vectors: Vec<Vector4<f64>> = Vec::with_capacity(4);
        let mut signs: Vec<f64> = Vec::with_capacity(4);
        for i in 0..4 {
            let b = Vector4::ith(i, 1.0);
            let mut v = b;
            for (e, eps) in vectors.iter().zip(&signs) {
                v -= e * (eps * e.dot(&(g * b)));
            }
            let n = v.dot(&(g * v));
            if n.abs() < FRAME_PIVOT_FLOOR || !n.is_finite() {
                return Err(Error::FrameConstruction { index: i, pivot: n });
            }
            vectors.push(v / n.abs().sqrt());
            signs.push(n.signum());
        }
        let timelike: Vec<usize> = (0..4).filter(|&a| signs[a] < 0.0).collect();
        if timelike.len() != 1 {
            return Err(Error::NonLorentzian {
                point: [f64::NAN; 4],
                negative: timelike.len(),
            });
        }
        vectors.swap(0, timelike[0]);
        signs.swap(0, timelike[0]);
        Ok(Self {
            vectors: [vectors[0], vectors[1], vectors[2], vectors[3]],
            signs: [signs[0], signs[1], signs[2], signs[3]],
        })
    }

    /// New frame `e'_a = Σ_b Λ^b_a e_b`. Orthonormality is preserved iff `Λ` is a Lorentz matrix.
    pub fn transformed(&self, lorentz: &Matrix4<f64>) -> Self {
        let vectors = std::array::from_fn(|a| {
            (0..4).fold(Vector4::zeros(), |acc, b| acc + self.vectors[b] * lorentz[(b, a)])
        });
        Self {
            vectors,
            signs: self.signs,
        }
    }

    /// Largest deviation of `<e_a, e_b>` from `ε_a δ_ab`.
    pub fn orthonormality_error(&self, g: &Matrix4<f64>) -> f64 {
        let mut worst: f64 = 0.0;
        for a in 0..4 {
            for b in 0..4 {
                let target = if a == b { self.signs[a] } else { 0.0 };
                let v = self.vectors[a].dot(&(g * self.vectors[b]));
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }
}

pub fn orthonormal_frame(gf: &dyn MetricField, p: &Point) -> Result<OrthonormalFrame> {
    let g = metric_at(gf, p)?;
    OrthonormalFrame::from_metric(&g).map_err(|e| match e {
        Error::NonLorentzian { negative, .. } => Error::NonLorentzian {
            point: (*p).into(),
            negative,
        },
        other => other,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::families::{Minkowski, Schwarzschild};

    #[test]
    fn minkowski_frame_is_identity() {
        let f = orthonormal_frame(&Minkowski::default(), &Point::zeros()).unwrap();
        assert_eq!(f.signs, [-1.0, 1.0, 1.0, 1.0]);
        for a in 0..4 {
            assert_eq!(f.vectors[a], Vector4::ith(a, 1.0));
        }
    }

    #[test]
    fn schwarzschild_frame_rescales_coordinate_basis() {
        let gf = Schwarzschild::new(1.0).unwrap();
        let p = Point::new(0.0, 4.0, 1.0, 0.0);
        let f = orthonormal_frame(&gf, &p).unwrap();
        assert!((f.vectors[0][0] - 1.0 / 0.5f64.sqrt()).abs() < 1e-12);
        let g = metric_at(&gf, &p).unwrap();
        assert!((f.vectors[0].dot(&(g * f.vectors[0])) + 1.0).abs() < 1e-12);
        assert!(f.orthonormality_error(&g) < 1e-10);
        for a in 0..4 {
            // diagonal metric: each frame vector is a multiple of one coordinate vector
            assert_eq!(f.vectors[a].iter().filter(|v| **v != 0.0).count(), 1);
        }
    }

    #[test]
    fn timelike_vector_is_moved_first() {
        // x¹ is the timelike direction here
        let g = Matrix4::from_diagonal(&Vector4::new(2.0, -3.0, 1.0, 1.0));
        let f = OrthonormalFrame::from_metric(&g).unwrap();
        assert_eq!(f.signs[0], -1.0);
        assert!(f.orthonormality_error(&g) < 1e-12);
    }

    #[test]
    fn null_coordinate_vector_is_rejected() {
        let mut g = Matrix4::identity();
        g[(0, 0)] = 0.0;
        g[(0, 1)] = 1.0;
        g[(1, 0)] = 1.0;
        assert!(matches!(
            OrthonormalFrame::from_metric(&g),
            Err(Error::FrameConstruction { index: 0, .. })
        ));
    }
}
