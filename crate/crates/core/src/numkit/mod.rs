//! Minimal dense linear algebra and rotation utilities.
//!
//! Everything here is fixed-order f64 arithmetic: accumulations run in a
//! deterministic order (row-major, ascending inner index), which the
//! synchronization-equivalence tests depend on.

mod matrix;
mod rotation;
mod solve;
mod svd3;
pub mod vec3;

pub use matrix::{silu, silu_prime, sigmoid, softplus, Matrix};
pub use rotation::{
    quat_to_rot, rot_to_quat, rotation_angle, so3_exp, so3_log, Quaternion,
};
pub use solve::solve_dense;
pub use svd3::svd3;
