//! The similarity group Sim(3) and its exponential map.

use crate::error::{CoreError, Result};
use crate::numkit::vec3::{self, Vec3};
use crate::numkit::{rotation_angle, so3_exp, so3_log, solve_dense, Matrix};

/// Similarity transform p -> s * R * p + t.
#[derive(Debug, Clone, PartialEq)]
pub struct Sim3 {
    scale: f64,
    rot: Matrix,
    trans: Vec3,
}

impl Sim3 {
    pub fn new(scale: f64, rot: Matrix, trans: Vec3) -> Result<Self> {
        if !(scale > 0.0) || !scale.is_finite() {
            return Err(CoreError::geometry(format!("scale must be positive, got {scale}")));
        }
        crate::numkit::rot_to_quat(&rot).map_err(|_| {
            CoreError::geometry("rotation block is not a valid rotation".to_string())
        })?;
        Ok(Sim3 { scale, rot, trans })
    }

    pub fn identity() -> Self {
        Sim3 { scale: 1.0, rot: Matrix::identity(3), trans: [0.0; 3] }
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn rot(&self) -> &Matrix {
        &self.rot
    }

    pub fn trans(&self) -> Vec3 {
        self.trans
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        let r = &self.rot;
        [
            self.scale * (r.get(0, 0) * p[0] + r.get(0, 1) * p[1] + r.get(0, 2) * p[2]) + self.trans[0],
            self.scale * (r.get(1, 0) * p[0] + r.get(1, 1) * p[1] + r.get(1, 2) * p[2]) + self.trans[1],
            self.scale * (r.get(2, 0) * p[0] + r.get(2, 1) * p[1] + r.get(2, 2) * p[2]) + self.trans[2],
        ]
    }

    /// Composition: (self * other)(p) = self(other(p)).
    pub fn compose(&self, other: &Sim3) -> Sim3 {
        let rot = self.rot.matmul(&other.rot).expect("3x3");
        let t_rot = [
            self.rot.get(0, 0) * other.trans[0] + self.rot.get(0, 1) * other.trans[1] + self.rot.get(0, 2) * other.trans[2],
            self.rot.get(1, 0) * other.trans[0] + self.rot.get(1, 1) * other.trans[1] + self.rot.get(1, 2) * other.trans[2],
            self.rot.get(2, 0) * other.trans[0] + self.rot.get(2, 1) * other.trans[1] + self.rot.get(2, 2) * other.trans[2],
        ];
        Sim3 {
            scale: self.scale * other.scale,
            rot,
            trans: vec3::add(vec3::scale(t_rot, self.scale), self.trans),
        }
    }

    pub fn inverse(&self) -> Sim3 {
        let rt = self.rot.transpose();
        let s_inv = 1.0 / self.scale;
        let t = [
            -(rt.get(0, 0) * self.trans[0] + rt.get(0, 1) * self.trans[1] + rt.get(0, 2) * self.trans[2]) * s_inv,
            -(rt.get(1, 0) * self.trans[0] + rt.get(1, 1) * self.trans[1] + rt.get(1, 2) * self.trans[2]) * s_inv,
            -(rt.get(2, 0) * self.trans[0] + rt.get(2, 1) * self.trans[1] + rt.get(2, 2) * self.trans[2]) * s_inv,
        ];
        Sim3 { scale: s_inv, rot: rt, trans: t }
    }

    /// Rotation angle in radians, for diagnostics and robust weighting.
    pub fn rotation_angle(&self) -> f64 {
        rotation_angle(&self.rot)
    }
}

/// Coefficients of W = C I + A [w]x + B [w]x^2 where
/// W = integral_0^1 exp(sigma u) exp(u [w]x) du and theta = |w|.
///
/// C = (e^sigma - 1)/sigma is theta-free. A and B come from the closed
/// forms of the integral (real/imaginary parts of (e^z - 1)/z with
/// z = sigma + i theta); series expansions take over near the removable
/// singularities.
fn w_coefficients(theta: f64, sigma: f64) -> (f64, f64, f64) {
    const EPS_T: f64 = 1e-4;
    const EPS_S: f64 = 1e-3;
    let theta2 = theta * theta;
    let sigma2 = sigma * sigma;
    let c = if sigma.abs() < 1e-300 { 1.0 } else { sigma.exp_m1() / sigma };

    if theta < EPS_T {
        let (a, b) = if sigma.abs() < EPS_S {
            (
                0.5 + sigma / 3.0 + sigma2 / 8.0 + sigma2 * sigma / 30.0 - theta2 / 24.0,
                1.0 / 6.0 + sigma / 8.0 + sigma2 / 20.0 + sigma2 * sigma / 72.0 - theta2 / 120.0,
            )
        } else {
            let scale = sigma.exp();
            (
                (scale * (sigma - 1.0) + 1.0) / sigma2,
                (scale * (sigma2 - 2.0 * sigma + 2.0) - 2.0) / (2.0 * sigma2 * sigma),
            )
        };
        return (a, b, c);
    }

    let scale = sigma.exp();
    let sin = theta.sin();
    let cos = theta.cos();
    let denom = theta2 + sigma2;
    // 1 - e^sigma cos(theta), written to avoid cancellation for small args.
    let half = theta / 2.0;
    let one_minus_scale_cos = 2.0 * half.sin() * half.sin() - sigma.exp_m1() * cos;
    let a = (scale * sin * sigma + one_minus_scale_cos * theta) / (theta * denom);
    let b = (c - (-one_minus_scale_cos * sigma + scale * sin * theta) / denom) / theta2;
    (a, b, c)
}

fn w_matrix(w: Vec3, sigma: f64) -> Matrix {
    let theta = vec3::norm(w);
    let (a, b, c) = w_coefficients(theta, sigma);
    let hat = Matrix::from_rows(&[
        vec![0.0, -w[2], w[1]],
        vec![w[2], 0.0, -w[0]],
        vec![-w[1], w[0], 0.0],
    ])
    .expect("fixed shape");
    let hat2 = hat.matmul(&hat).expect("3x3");
    Matrix::identity(3)
        .scale(c)
        .add(&hat.scale(a))
        .and_then(|m| m.add(&hat2.scale(b)))
        .expect("3x3")
}

/// Sim(3) exponential of v = [upsilon (3), omega (3), sigma (1)].
pub fn sim3_exp(v: &[f64; 7]) -> Sim3 {
    let upsilon = [v[0], v[1], v[2]];
    let omega = [v[3], v[4], v[5]];
    let sigma = v[6];
    let rot = so3_exp(omega);
    let w = w_matrix(omega, sigma);
    let trans = w.matvec(&upsilon).expect("3-vector");
    Sim3 { scale: sigma.exp(), rot, trans: [trans[0], trans[1], trans[2]] }
}

/// Sim(3) logarithm; inverse of `sim3_exp` for rotation angles below pi.
pub fn sim3_log(s: &Sim3) -> Result<[f64; 7]> {
    let omega = so3_log(&s.rot)?;
    let sigma = s.scale.ln();
    let w = w_matrix(omega, sigma);
    let upsilon = solve_dense(&w, &s.trans)
        .map_err(|_| CoreError::geometry("singular translation factor in sim3 log".to_string()))?;
    Ok([upsilon[0], upsilon[1], upsilon[2], omega[0], omega[1], omega[2], sigma])
}
