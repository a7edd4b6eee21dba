use serde::{Deserialize, Serialize};

use crate::geometry::Point;

/// Row-major 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Mat2 { a, b, c, d }
    }

    /// `scale` times the counter-clockwise rotation by `degrees`.
    pub fn scaled_rotation(scale: f64, degrees: f64) -> Self {
        let (s, c) = degrees.to_radians().sin_cos();
        Mat2::new(scale * c, -scale * s, scale * s, scale * c)
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    /// `trace² − 4·det`; negative iff the eigenvalues are a non-real pair.
    pub fn discriminant(&self) -> f64 {
        let t = self.trace();
        t * t - 4.0 * self.det()
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2::new(
            self.a * o.a + self.b * o.c,
            self.a * o.b + self.b * o.d,
            self.c * o.a + self.d * o.c,
            self.c * o.b + self.d * o.d,
        )
    }

    pub fn apply(&self, p: Point) -> Point {
        Point::new(self.a * p.x + self.b * p.y, self.c * p.x + self.d * p.y)
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        Mat2::new(self.a + o.a, self.b + o.b, self.c + o.c, self.d + o.d)
    }

    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Mat2::new(
            self.d / det,
            -self.b / det,
            -self.c / det,
            self.a / det,
        ))
    }

    /// Spectral norm (largest singular value).
    pub fn operator_norm(&self) -> f64 {
        // singular values of a 2x2 matrix from its Frobenius norm and determinant
        let f = self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d;
        let det = self.det();
        let disc = (f * f - 4.0 * det * det).max(0.0);
        ((f + disc.sqrt()) / 2.0).sqrt()
    }
}

/// Derivative of a planar map (matrix) or a circle map (scalar).
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Jacobian {
    Planar(Mat2),
    Scalar(f64),
}

impl Jacobian {
    pub fn det(&self) -> f64 {
        match self {
            Jacobian::Planar(m) => m.det(),
            Jacobian::Scalar(s) => *s,
        }
    }

    pub fn operator_norm(&self) -> f64 {
        match self {
            Jacobian::Planar(m) => m.operator_norm(),
            Jacobian::Scalar(s) => s.abs(),
        }
    }

    pub fn inverse(&self) -> Option<Jacobian> {
        match self {
            Jacobian::Planar(m) => m.inverse().map(Jacobian::Planar),
            Jacobian::Scalar(s) if *s != 0.0 => Some(Jacobian::Scalar(1.0 / s)),
            Jacobian::Scalar(_) => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn similarity_norm_and_det() {
        let m = Mat2::scaled_rotation(0.76, 179.0);
        assert!((m.operator_norm() - 0.76).abs() < 1e-15);
        assert!((m.det() - 0.76 * 0.76).abs() < 1e-15);
        assert!(m.discriminant() < 0.0);
    }

    #[test]
    fn operator_norm_of_diagonal_and_shear() {
        assert!((Mat2::new(3.0, 0.0, 0.0, -5.0).operator_norm() - 5.0).abs() < 1e-14);
        // [[1,1],[0,1]] has largest singular value golden ratio
        let phi = (1.0 + 5f64.sqrt()) / 2.0;
        assert!((Mat2::new(1.0, 1.0, 0.0, 1.0).operator_norm() - phi).abs() < 1e-14);
    }

    #[test]
    fn inverse_round_trip() {
        let m = Mat2::new(2.0, 1.0, -0.5, 3.0);
        let id = m.mul(&m.inverse().unwrap());
        assert!((id.a - 1.0).abs() < 1e-15 && id.b.abs() < 1e-15);
        assert!(Mat2::new(1.0, 2.0, 2.0, 4.0).inverse().is_none());
    }
}
