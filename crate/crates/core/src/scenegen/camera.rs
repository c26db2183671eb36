//! Pinhole intrinsics.

use std::collections::BTreeMap;

use crate::error::{CoreError, Result};
use crate::numkit::vec3::Vec3;

#[derive(Debug, Clone, PartialEq)]
pub struct PinholeCamera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: usize,
    pub height: usize,
}

impl PinholeCamera {
    /// Moderate field of view with the principal point at the image center.
    pub fn default_for(width: usize, height: usize) -> Self {
        let f = 0.9 * width.max(height) as f64;
        PinholeCamera {
            fx: f,
            fy: f,
            cx: width as f64 / 2.0,
            cy: height as f64 / 2.0,
            width,
            height,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) {
            return Err(CoreError::config("focal lengths must be positive".to_string()));
        }
        if self.cx < 0.0
            || self.cy < 0.0
            || self.cx >= self.width as f64
            || self.cy >= self.height as f64
        {
            return Err(CoreError::config("principal point outside image".to_string()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(CoreError::config("image dimensions must be positive".to_string()));
        }
        Ok(())
    }

    /// (fov_x, fov_y) in radians.
    pub fn fov(&self) -> (f64, f64) {
        (
            2.0 * (self.width as f64 / (2.0 * self.fx)).atan(),
            2.0 * (self.height as f64 / (2.0 * self.fy)).atan(),
        )
    }

    /// Continuous pixel coordinates of a camera-frame point in front of
    /// the camera.
    pub fn project(&self, p: Vec3) -> Option<(f64, f64)> {
        if p[2] <= 1e-9 {
            return None;
        }
        Some((self.fx * p[0] / p[2] + self.cx, self.fy * p[1] / p[2] + self.cy))
    }

    pub fn to_pairs(&self) -> Vec<(String, String)> {
        vec![
            ("fx".to_string(), format!("{}", self.fx)),
            ("fy".to_string(), format!("{}", self.fy)),
            ("cx".to_string(), format!("{}", self.cx)),
            ("cy".to_string(), format!("{}", self.cy)),
            ("width".to_string(), self.width.to_string()),
            ("height".to_string(), self.height.to_string()),
        ]
    }

    pub fn from_pairs(cfg: &BTreeMap<String, String>) -> Result<Self> {
        let get = |key: &str| -> Result<f64> {
            cfg.get(key)
                .ok_or_else(|| CoreError::config(format!("camera config missing '{key}'")))?
                .parse()
                .map_err(|_| CoreError::config(format!("bad camera value for '{key}'")))
        };
        let cam = PinholeCamera {
            fx: get("fx")?,
            fy: get("fy")?,
            cx: get("cx")?,
            cy: get("cy")?,
            width: get("width")? as usize,
            height: get("height")? as usize,
        };
        cam.validate()?;
        Ok(cam)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn optical_axis_projects_to_principal_point() {
        let cam = PinholeCamera::default_for(64, 48);
        let (u, v) = cam.project([0.0, 0.0, 5.0]).unwrap();
        assert_eq!((u, v), (32.0, 24.0));
    }

    #[test]
    fn behind_camera_is_rejected() {
        let cam = PinholeCamera::default_for(64, 48);
        assert!(cam.project([0.0, 0.0, -1.0]).is_none());
    }

    #[test]
    fn validation() {
        let mut cam = PinholeCamera::default_for(64, 48);
        cam.cx = 100.0;
        assert!(cam.validate().is_err());
    }
}
