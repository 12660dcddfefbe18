//! Geometry of the upper half-plane.
//!
//! Points are `x + iy` with `y > 0`; isometries are real 2×2 matrices of
//! positive determinant acting by Möbius maps. The point-pair invariant is
//! evaluated as `|z − w|² / (4 Im z Im w)`, never through the distance.

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Error)]
pub enum GeometryError {
    #[error("point is not in the upper half-plane (x = {x}, y = {y})")]
    NotInUpperHalfPlane { x: f64, y: f64 },
    #[error("matrix determinant {0} is not positive")]
    NonPositiveDeterminant(f64),
    #[error("Möbius denominator vanished")]
    Degenerate,
}

/// A point `x + iy` of the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PlanePoint {
    x: f64,
    y: f64,
}

impl PlanePoint {
    pub fn new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if !(x.is_finite() && y.is_finite() && y > 0.0) {
            return Err(GeometryError::NotInUpperHalfPlane { x, y });
        }
        Ok(Self { x, y })
    }

    /// The base point `i`.
    pub const fn i() -> Self {
        Self { x: 0.0, y: 1.0 }
    }

    pub fn x(&self) -> f64 {
        self.x
    }

    pub fn y(&self) -> f64 {
        self.y
    }
}

/// A real 2×2 matrix `[[a, b], [c, d]]`.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize)]
pub struct Mat2 {
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

impl Mat2 {
    pub const IDENTITY: Mat2 = Mat2 { a: 1.0, b: 0.0, c: 0.0, d: 1.0 };
    pub const ZERO: Mat2 = Mat2 { a: 0.0, b: 0.0, c: 0.0, d: 0.0 };

    pub const fn new(a: f64, b: f64, c: f64, d: f64) -> Self {
        Self { a, b, c, d }
    }

    pub fn det(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    pub fn trace(&self) -> f64 {
        self.a + self.d
    }

    pub fn mul(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a * o.a + self.b * o.c,
            b: self.a * o.b + self.b * o.d,
            c: self.c * o.a + self.d * o.c,
            d: self.c * o.b + self.d * o.d,
        }
    }

    pub fn add(&self, o: &Mat2) -> Mat2 {
        Mat2 {
            a: self.a + o.a,
            b: self.b + o.b,
            c: self.c + o.c,
            d: self.d + o.d,
        }
    }

    pub fn scale(&self, s: f64) -> Mat2 {
        Mat2 {
            a: s * self.a,
            b: s * self.b,
            c: s * self.c,
            d: s * self.d,
        }
    }

    /// Squared Frobenius norm `a² + b² + c² + d²`.
    pub fn frobenius_sq(&self) -> f64 {
        self.a * self.a + self.b * self.b + self.c * self.c + self.d * self.d
    }

    /// Frobenius inner product.
    pub fn dot(&self, o: &Mat2) -> f64 {
        self.a * o.a + self.b * o.b + self.c * o.c + self.d * o.d
    }

    /// Inverse, or `None` when the determinant vanishes.
    pub fn inverse(&self) -> Option<Mat2> {
        let det = self.det();
        if det == 0.0 || !det.is_finite() {
            return None;
        }
        Some(Mat2 {
            a: self.d / det,
            b: -self.b / det,
            c: -self.c / det,
            d: self.a / det,
        })
    }

    pub fn max_abs_diff(&self, o: &Mat2) -> f64 {
        (self.a - o.a)
            .abs()
            .max((self.b - o.b).abs())
            .max((self.c - o.c).abs())
            .max((self.d - o.d).abs())
    }
}

/// A matrix of positive determinant, acting on the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Isometry(Mat2);

impl Isometry {
    pub fn new(m: Mat2) -> Result<Self, GeometryError> {
        let det = m.det();
        if !(det > 0.0 && det.is_finite()) {
            return Err(GeometryError::NonPositiveDeterminant(det));
        }
        Ok(Self(m))
    }

    pub fn identity() -> Self {
        Self(Mat2::IDENTITY)
    }

    pub fn matrix(&self) -> &Mat2 {
        &self.0
    }

    pub fn compose(&self, other: &Isometry) -> Isometry {
        // det(gh) = det(g)det(h) > 0
        Isometry(self.0.mul(&other.0))
    }

    pub fn inverse(&self) -> Isometry {
        let det = self.0.det();
        Isometry(Mat2::new(self.0.d / det, -self.0.b / det, -self.0.c / det, self.0.a / det))
    }
}

/// Möbius action `(az + b) / (cz + d)`.
pub fn act(g: &Isometry, z: &PlanePoint) -> Result<PlanePoint, GeometryError> {
    let m = g.matrix();
    // (az+b)/(cz+d) = ((az+b)(c z̄+d)) / |cz+d|²
    let den_re = m.c * z.x + m.d;
    let den_im = m.c * z.y;
    let den = den_re * den_re + den_im * den_im;
    if den == 0.0 || !den.is_finite() {
        return Err(GeometryError::Degenerate);
    }
    let num_re = m.a * z.x + m.b;
    let num_im = m.a * z.y;
    let x = (num_re * den_re + num_im * den_im) / den;
    // Im = det · y / |cz+d|², positive by construction.
    let y = m.det() * z.y / den;
    PlanePoint::new(x, y)
}

/// Point-pair invariant `u(z, w) = |z − w|² / (4 Im z Im w)`.
pub fn point_pair_u(z: &PlanePoint, w: &PlanePoint) -> f64 {
    let dx = z.x - w.x;
    let dy = z.y - w.y;
    (dx * dx + dy * dy) / (4.0 * z.y * w.y)
}

/// Hyperbolic distance, `2 arcsinh √u`.
pub fn distance(z: &PlanePoint, w: &PlanePoint) -> f64 {
    2.0 * point_pair_u(z, w).sqrt().asinh()
}

/// Inverse of `d ↦ sinh²(d/2)`.
pub fn u_from_distance(d: f64) -> f64 {
    let s = (0.5 * d).sinh();
    s * s
}

/// The unimodular upper-triangular matrix `σ_z` with `σ_z · i = z`.
pub fn transporter(z: &PlanePoint) -> Isometry {
    let sy = z.y.sqrt();
    Isometry(Mat2::new(sy, z.x / sy, 0.0, 1.0 / sy))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn point() -> impl Strategy<Value = PlanePoint> {
        (-5.0f64..5.0, 0.05f64..5.0).prop_map(|(x, y)| PlanePoint::new(x, y).unwrap())
    }

    /// Unit-determinant matrix built as a product of elementary factors.
    fn unimodular() -> impl Strategy<Value = Isometry> {
        (-2.0f64..2.0, 0.3f64..3.0, -2.0f64..2.0).prop_map(|(s, a, t)| {
            let n = Mat2::new(1.0, s, 0.0, 1.0);
            let diag = Mat2::new(a, 0.0, 0.0, 1.0 / a);
            let lower = Mat2::new(1.0, 0.0, t, 1.0);
            Isometry::new(n.mul(&diag).mul(&lower)).unwrap()
        })
    }

    fn close(z: &PlanePoint, w: &PlanePoint, tol: f64) -> bool {
        (z.x - w.x).abs() <= tol * (1.0 + z.x.abs()) && (z.y - w.y).abs() <= tol * (1.0 + z.y.abs())
    }

    #[test]
    fn identity_and_scaling() {
        let z = PlanePoint::new(0.3, 1.7).unwrap();
        assert_eq!(act(&Isometry::identity(), &z).unwrap(), z);
        let g = Isometry::new(Mat2::new(2.0, 0.0, 0.0, 1.0)).unwrap();
        assert_eq!(act(&g, &PlanePoint::i()).unwrap(), PlanePoint::new(0.0, 2.0).unwrap());
    }

    #[test]
    fn u_values() {
        let i = PlanePoint::i();
        assert_eq!(point_pair_u(&i, &i), 0.0);
        let two_i = PlanePoint::new(0.0, 2.0).unwrap();
        assert_eq!(point_pair_u(&two_i, &i), 0.125);
    }

    #[test]
    fn distance_along_imaginary_axis() {
        let i = PlanePoint::i();
        let ei = PlanePoint::new(0.0, std::f64::consts::E).unwrap();
        assert!((distance(&i, &ei) - 1.0).abs() < 1e-14);
        assert_eq!(distance(&ei, &ei), 0.0);
        assert!((u_from_distance(1.0) - point_pair_u(&ei, &i)).abs() < 1e-15);
    }

    #[test]
    fn transporter_moves_i() {
        let i = PlanePoint::i();
        assert_eq!(transporter(&i).matrix(), &Mat2::IDENTITY);
        let z = PlanePoint::new(3.0, 4.0).unwrap();
        let w = act(&transporter(&z), &i).unwrap();
        assert!(close(&w, &z, 1e-12));
    }

    #[test]
    fn rejects_bad_input() {
        assert!(PlanePoint::new(0.0, 0.0).is_err());
        assert!(PlanePoint::new(f64::NAN, 1.0).is_err());
        assert!(Isometry::new(Mat2::new(0.0, 1.0, 1.0, 0.0)).is_err());
    }

    /// For any m with det m = N > 0: ‖m‖²_F = 2N(1 + 2u(m·i, i)).
    #[test]
    fn frobenius_identity_sweep() {
        let mut worst = 0.0f64;
        let steps = [-3.0, -1.7, -0.4, 0.0, 0.9, 2.2, 3.1];
        for &a in &steps {
            for &b in &steps {
                for &c in &steps {
                    for &d in &steps {
                        let m = Mat2::new(a, b, c, d);
                        let det = m.det();
                        if det < 1e-3 {
                            continue;
                        }
                        let w = act(&Isometry::new(m).unwrap(), &PlanePoint::i()).unwrap();
                        let rhs = 2.0 * det * (1.0 + 2.0 * point_pair_u(&w, &PlanePoint::i()));
                        worst = worst.max((m.frobenius_sq() - rhs).abs() / m.frobenius_sq());
                    }
                }
            }
        }
        assert!(worst < 1e-9, "worst relative error {worst}");
    }

    proptest! {
        #[test]
        fn action_is_a_group_action(g in unimodular(), h in unimodular(), z in point()) {
            let lhs = act(&g.compose(&h), &z).unwrap();
            let rhs = act(&g, &act(&h, &z).unwrap()).unwrap();
            prop_assert!(close(&lhs, &rhs, 1e-10), "{lhs:?} vs {rhs:?}");
        }

        #[test]
        fn u_is_symmetric_and_invariant(g in unimodular(), z in point(), w in point()) {
            let u = point_pair_u(&z, &w);
            prop_assert!(u >= 0.0);
            prop_assert_eq!(u, point_pair_u(&w, &z));
            let gu = point_pair_u(&act(&g, &z).unwrap(), &act(&g, &w).unwrap());
            prop_assert!((gu - u).abs() <= 1e-10 * (1.0 + u));
        }

        #[test]
        fn triangle_inequality(a in point(), b in point(), c in point()) {
            let ab = distance(&a, &b);
            let bc = distance(&b, &c);
            let ac = distance(&a, &c);
            prop_assert!(ac <= ab + bc + 1e-9);
        }

        #[test]
        fn distance_orders_like_u(z in point(), w1 in point(), w2 in point()) {
            let (u1, u2) = (point_pair_u(&z, &w1), point_pair_u(&z, &w2));
            let (d1, d2) = (distance(&z, &w1), distance(&z, &w2));
            if u1 < u2 { prop_assert!(d1 <= d2); }
            if u2 < u1 { prop_assert!(d2 <= d1); }
        }

        #[test]
        fn transporter_is_unimodular(z in point()) {
            let s = transporter(&z);
            prop_assert!((s.matrix().det() - 1.0).abs() < 1e-12);
            prop_assert!(close(&act(&s, &PlanePoint::i()).unwrap(), &z, 1e-12));
        }
    }
}
