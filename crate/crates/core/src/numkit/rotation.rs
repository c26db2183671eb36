//! Quaternions, rotation matrices, and the SO(3) exponential map.

use super::matrix::Matrix;
use super::vec3::Vec3;
use crate::error::{CoreError, Result};

/// Unit quaternion (w, x, y, z).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quaternion {
    pub w: f64,
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Quaternion {
    pub const IDENTITY: Quaternion = Quaternion { w: 1.0, x: 0.0, y: 0.0, z: 0.0 };

    pub fn new(w: f64, x: f64, y: f64, z: f64) -> Self {
        Quaternion { w, x, y, z }
    }

    pub fn norm(&self) -> f64 {
        (self.w * self.w + self.x * self.x + self.y * self.y + self.z * self.z).sqrt()
    }

    pub fn normalized(&self) -> Quaternion {
        let n = self.norm();
        Quaternion { w: self.w / n, x: self.x / n, y: self.y / n, z: self.z / n }
    }

    pub fn conjugate(&self) -> Quaternion {
        Quaternion { w: self.w, x: -self.x, y: -self.y, z: -self.z }
    }

    /// True when within `tol` of the identity rotation (either sign).
    pub fn is_near_identity(&self, tol: f64) -> bool {
        (self.w.abs() - 1.0).abs() < tol
            && self.x.abs() < tol
            && self.y.abs() < tol
            && self.z.abs() < tol
    }

    pub fn dot(&self, other: &Quaternion) -> f64 {
        self.w * other.w + self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn mul(&self, o: &Quaternion) -> Quaternion {
        Quaternion {
            w: self.w * o.w - self.x * o.x - self.y * o.y - self.z * o.z,
            x: self.w * o.x + self.x * o.w + self.y * o.z - self.z * o.y,
            y: self.w * o.y - self.x * o.z + self.y * o.w + self.z * o.x,
            z: self.w * o.z + self.x * o.y - self.y * o.x + self.z * o.w,
        }
    }

    /// Rotate a vector by this quaternion.
    pub fn rotate(&self, v: Vec3) -> Vec3 {
        let r = quat_to_rot_unchecked(self);
        [
            r.get(0, 0) * v[0] + r.get(0, 1) * v[1] + r.get(0, 2) * v[2],
            r.get(1, 0) * v[0] + r.get(1, 1) * v[1] + r.get(1, 2) * v[2],
            r.get(2, 0) * v[0] + r.get(2, 1) * v[1] + r.get(2, 2) * v[2],
        ]
    }
}

fn quat_to_rot_unchecked(q: &Quaternion) -> Matrix {
    let (w, x, y, z) = (q.w, q.x, q.y, q.z);
    Matrix::from_rows(&[
        vec![1.0 - 2.0 * (y * y + z * z), 2.0 * (x * y - w * z), 2.0 * (x * z + w * y)],
        vec![2.0 * (x * y + w * z), 1.0 - 2.0 * (x * x + z * z), 2.0 * (y * z - w * x)],
        vec![2.0 * (x * z - w * y), 2.0 * (y * z + w * x), 1.0 - 2.0 * (x * x + y * y)],
    ])
    .expect("fixed 3x3 shape")
}

/// Rotation matrix of a unit quaternion.
pub fn quat_to_rot(q: &Quaternion) -> Matrix {
    quat_to_rot_unchecked(&q.normalized())
}

fn det3(m: &Matrix) -> f64 {
    m.get(0, 0) * (m.get(1, 1) * m.get(2, 2) - m.get(1, 2) * m.get(2, 1))
        - m.get(0, 1) * (m.get(1, 0) * m.get(2, 2) - m.get(1, 2) * m.get(2, 0))
        + m.get(0, 2) * (m.get(1, 0) * m.get(2, 1) - m.get(1, 1) * m.get(2, 0))
}

/// Validate a rotation matrix: orthonormal within `tol`, determinant +1.
pub fn check_rotation(r: &Matrix, tol: f64) -> Result<()> {
    if r.rows() != 3 || r.cols() != 3 {
        return Err(CoreError::shape(format!("rotation must be 3x3, got {}x{}", r.rows(), r.cols())));
    }
    let gram_err = r.transpose().matmul(r)?.sub(&Matrix::identity(3))?.max_abs();
    if gram_err > tol {
        return Err(CoreError::geometry(format!("matrix not orthonormal (error {gram_err:.3e})")));
    }
    let d = det3(r);
    if d < 0.0 {
        return Err(CoreError::geometry(format!("reflection (det {d:.3})")));
    }
    Ok(())
}

/// Quaternion of a rotation matrix (Shepperd's method).
pub fn rot_to_quat(r: &Matrix) -> Result<Quaternion> {
    check_rotation(r, 1e-6)?;
    let trace = r.get(0, 0) + r.get(1, 1) + r.get(2, 2);
    let q = if trace > 0.0 {
        let s = (trace + 1.0).sqrt() * 2.0;
        Quaternion {
            w: 0.25 * s,
            x: (r.get(2, 1) - r.get(1, 2)) / s,
            y: (r.get(0, 2) - r.get(2, 0)) / s,
            z: (r.get(1, 0) - r.get(0, 1)) / s,
        }
    } else if r.get(0, 0) > r.get(1, 1) && r.get(0, 0) > r.get(2, 2) {
        let s = (1.0 + r.get(0, 0) - r.get(1, 1) - r.get(2, 2)).sqrt() * 2.0;
        Quaternion {
            w: (r.get(2, 1) - r.get(1, 2)) / s,
            x: 0.25 * s,
            y: (r.get(0, 1) + r.get(1, 0)) / s,
            z: (r.get(0, 2) + r.get(2, 0)) / s,
        }
    } else if r.get(1, 1) > r.get(2, 2) {
        let s = (1.0 + r.get(1, 1) - r.get(0, 0) - r.get(2, 2)).sqrt() * 2.0;
        Quaternion {
            w: (r.get(0, 2) - r.get(2, 0)) / s,
            x: (r.get(0, 1) + r.get(1, 0)) / s,
            y: 0.25 * s,
            z: (r.get(1, 2) + r.get(2, 1)) / s,
        }
    } else {
        let s = (1.0 + r.get(2, 2) - r.get(0, 0) - r.get(1, 1)).sqrt() * 2.0;
        Quaternion {
            w: (r.get(1, 0) - r.get(0, 1)) / s,
            x: (r.get(0, 2) + r.get(2, 0)) / s,
            y: (r.get(1, 2) + r.get(2, 1)) / s,
            z: 0.25 * s,
        }
    };
    Ok(q.normalized())
}

/// Rodrigues formula: rotation matrix of an axis-angle vector.
pub fn so3_exp(w: Vec3) -> Matrix {
    let theta2 = w[0] * w[0] + w[1] * w[1] + w[2] * w[2];
    let theta = theta2.sqrt();
    // sin(t)/t and (1-cos(t))/t^2 with series fallbacks near zero.
    let (a, b) = if theta < 1e-5 {
        (1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0, 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0)
    } else {
        (theta.sin() / theta, (1.0 - theta.cos()) / theta2)
    };
    let hat = Matrix::from_rows(&[
        vec![0.0, -w[2], w[1]],
        vec![w[2], 0.0, -w[0]],
        vec![-w[1], w[0], 0.0],
    ])
    .expect("fixed shape");
    let hat2 = hat.matmul(&hat).expect("3x3");
    Matrix::identity(3)
        .add(&hat.scale(a))
        .and_then(|m| m.add(&hat2.scale(b)))
        .expect("3x3")
}

/// Rotation angle in radians of a rotation matrix, in [0, pi].
///
/// atan2 of the skew-part norm against the trace; unlike plain acos this
/// keeps full precision near the identity.
pub fn rotation_angle(r: &Matrix) -> f64 {
    let vee = [
        r.get(2, 1) - r.get(1, 2),
        r.get(0, 2) - r.get(2, 0),
        r.get(1, 0) - r.get(0, 1),
    ];
    let sin = 0.5 * (vee[0] * vee[0] + vee[1] * vee[1] + vee[2] * vee[2]).sqrt();
    let cos = (r.get(0, 0) + r.get(1, 1) + r.get(2, 2) - 1.0) / 2.0;
    sin.atan2(cos)
}

/// Axis-angle vector of a rotation matrix. Errors when the angle reaches pi,
/// where the logarithm is not unique.
pub fn so3_log(r: &Matrix) -> Result<Vec3> {
    check_rotation(r, 1e-6)?;
    let theta = rotation_angle(r);
    if theta >= std::f64::consts::PI - 1e-9 {
        return Err(CoreError::geometry("rotation angle at or beyond pi".to_string()));
    }
    let vee = [
        r.get(2, 1) - r.get(1, 2),
        r.get(0, 2) - r.get(2, 0),
        r.get(1, 0) - r.get(0, 1),
    ];
    if theta < 1e-5 {
        // theta/(2 sin theta) ~ 1/2 * (1 + theta^2/6)
        let f = 0.5 * (1.0 + theta * theta / 6.0);
        return Ok([vee[0] * f, vee[1] * f, vee[2] * f]);
    }
    if theta > 3.0 {
        // Near pi the vee form loses precision; recover the axis from the
        // diagonal of R = cos t I + (1 - cos t) nn^T + sin t [n]x.
        let c = theta.cos();
        let mut n = [
            ((r.get(0, 0) - c) / (1.0 - c)).max(0.0).sqrt(),
            ((r.get(1, 1) - c) / (1.0 - c)).max(0.0).sqrt(),
            ((r.get(2, 2) - c) / (1.0 - c)).max(0.0).sqrt(),
        ];
        // Signs from the skew part.
        if vee[0] < 0.0 {
            n[0] = -n[0];
        }
        if vee[1] < 0.0 {
            n[1] = -n[1];
        }
        if vee[2] < 0.0 {
            n[2] = -n[2];
        }
        return Ok([n[0] * theta, n[1] * theta, n[2] * theta]);
    }
    let f = theta / (2.0 * theta.sin());
    Ok([vee[0] * f, vee[1] * f, vee[2] * f])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::vec3;
    use crate::rng;
    use rand::Rng;

    fn random_unit_quat(seed: u64) -> Quaternion {
        let mut r = rng::stream(seed, "quat.random");
        Quaternion::new(
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
            r.random_range(-1.0..1.0),
        )
        .normalized()
    }

    #[test]
    fn identity_quaternion_maps_to_identity() {
        let r = quat_to_rot(&Quaternion::IDENTITY);
        assert!(r.sub(&Matrix::identity(3)).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn ninety_degrees_about_z() {
        let half = std::f64::consts::FRAC_PI_4;
        let q = Quaternion::new(half.cos(), 0.0, 0.0, half.sin());
        let r = quat_to_rot(&q);
        let expected = Matrix::from_rows(&[
            vec![0.0, -1.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert!(r.sub(&expected).unwrap().max_abs() < 1e-15);
    }

    #[test]
    fn round_trip_up_to_sign() {
        for seed in 0..200u64 {
            let q = random_unit_quat(seed);
            let r = quat_to_rot(&q);
            let q2 = rot_to_quat(&r).unwrap();
            assert!(q.dot(&q2).abs() > 1.0 - 1e-12, "seed {seed}");
        }
    }

    #[test]
    fn round_trip_preserves_rotation_action() {
        for seed in 0..1000u64 {
            let q = random_unit_quat(seed);
            let r = quat_to_rot(&q);
            let q2 = rot_to_quat(&r).unwrap();
            let mut rr = rng::stream(seed, "quat.vec");
            let v = [
                rr.random_range(-1.0..1.0),
                rr.random_range(-1.0..1.0),
                rr.random_range(-1.0..1.0),
            ];
            let a = q.rotate(v);
            let b = q2.rotate(v);
            assert!(vec3::dist(a, b) < 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn rejects_reflection() {
        let m = Matrix::from_rows(&[
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, -1.0],
        ])
        .unwrap();
        assert!(matches!(rot_to_quat(&m), Err(CoreError::Geometry(_))));
    }

    #[test]
    fn rejects_non_orthonormal() {
        let m = Matrix::from_rows(&[
            vec![1.0, 0.1, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, 0.0, 1.0],
        ])
        .unwrap();
        assert!(matches!(rot_to_quat(&m), Err(CoreError::Geometry(_))));
    }

    #[test]
    fn so3_exp_log_round_trip() {
        for seed in 0..500u64 {
            let mut r = rng::stream(seed, "so3.roundtrip");
            let w = [
                r.random_range(-1.0..1.0),
                r.random_range(-1.0..1.0),
                r.random_range(-1.0..1.0),
            ];
            let m = so3_exp(w);
            let w2 = so3_log(&m).unwrap();
            assert!(vec3::dist(w, w2) < 1e-10, "seed {seed}: {w:?} vs {w2:?}");
        }
    }

    #[test]
    fn so3_log_rejects_pi() {
        let m = so3_exp([std::f64::consts::PI, 0.0, 0.0]);
        assert!(so3_log(&m).is_err());
    }
}
