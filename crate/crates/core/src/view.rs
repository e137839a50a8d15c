//! Camera matrices, projections, colouring and sprite shading.
//!
//! Matrices follow the column-vector convention: a point `p` is transformed
//! as `M * p`. Clip space is OpenGL-style, with depth in `[-1, 1]`.

use nalgebra::{Matrix4, Point3, UnitQuaternion, Vector2, Vector3, Vector4};
use thiserror::Error;

use crate::model::{ColorMode, Interval};

pub type Mat4 = Matrix4<f64>;

pub const DEFAULT_FOV_Y: f64 = std::f64::consts::FRAC_PI_3;
pub const DEFAULT_SPRITE_RADIUS_PX: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ViewError {
    #[error("zoom must be positive, got {0}")]
    Zoom(f64),
    #[error("clip planes must satisfy 0 < near < far, got near={near}, far={far}")]
    ClipPlanes { near: f64, far: f64 },
    #[error("field of view must lie in (0, pi), got {0}")]
    FieldOfView(f64),
    #[error("orientation is not a unit quaternion (norm {0})")]
    Orientation(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub enum Camera {
    Planar2D {
        center: Vector2<f64>,
        zoom: f64,
    },
    /// Looks down its local -z axis with +y up.
    Perspective3D {
        position: Vector3<f64>,
        orientation: UnitQuaternion<f64>,
        fov_y: f64,
        near: f64,
        far: f64,
    },
}

impl Camera {
    pub fn planar(center: [f64; 2], zoom: f64) -> Camera {
        Camera::Planar2D {
            center: Vector2::from(center),
            zoom,
        }
    }

    /// Perspective camera at `position` looking at `target`, clip planes
    /// scaled to the distance between them.
    pub fn looking_at(position: [f64; 3], target: [f64; 3]) -> Camera {
        let eye = Point3::from(position);
        let at = Point3::from(target);
        let dir = at - eye;
        let up = if dir.cross(&Vector3::y()).norm() < 1e-9 * dir.norm() {
            Vector3::z()
        } else {
            Vector3::y()
        };
        // face_towards maps local +z to `dir`; the camera looks down -z
        let orientation = UnitQuaternion::face_towards(&-dir, &up);
        let scale = dir.norm().max(1e-6);
        Camera::Perspective3D {
            position: eye.coords,
            orientation,
            fov_y: DEFAULT_FOV_Y,
            near: 0.01 * scale,
            far: 100.0 * scale,
        }
    }

    pub fn validate(&self) -> Result<(), ViewError> {
        match self {
            Camera::Planar2D { zoom, .. } => {
                if !(*zoom > 0.0) {
                    return Err(ViewError::Zoom(*zoom));
                }
            }
            Camera::Perspective3D {
                orientation,
                fov_y,
                near,
                far,
                ..
            } => {
                if !(0.0 < *near && near < far) {
                    return Err(ViewError::ClipPlanes {
                        near: *near,
                        far: *far,
                    });
                }
                if !(*fov_y > 0.0 && *fov_y < std::f64::consts::PI) {
                    return Err(ViewError::FieldOfView(*fov_y));
                }
                let norm = orientation.quaternion().norm();
                if (norm - 1.0).abs() > 1e-6 {
                    return Err(ViewError::Orientation(norm));
                }
            }
        }
        Ok(())
    }

    /// Move along the camera's own axes (3D) or pan in world units (2D,
    /// z ignored).
    pub fn translate_local(&mut self, delta: Vector3<f64>) {
        match self {
            Camera::Planar2D { center, .. } => *center += delta.xy(),
            Camera::Perspective3D {
                position,
                orientation,
                ..
            } => *position += orientation.transform_vector(&delta),
        }
    }

    /// First-person look: yaw about world +y, pitch about the camera's x.
    /// No effect in 2D.
    pub fn look(&mut self, yaw: f64, pitch: f64) {
        if let Camera::Perspective3D { orientation, .. } = self {
            let yaw = UnitQuaternion::from_axis_angle(&Vector3::y_axis(), yaw);
            let pitch = UnitQuaternion::from_axis_angle(&Vector3::x_axis(), pitch);
            *orientation = yaw * *orientation * pitch;
            orientation.renormalize();
        }
    }

    /// 2D zoom by `factor` keeping world point `anchor` fixed on screen.
    pub fn zoom_about(&mut self, anchor: [f64; 2], factor: f64) {
        if let Camera::Planar2D { center, zoom } = self {
            let a = Vector2::from(anchor);
            *center = a + (*center - a) / factor;
            *zoom *= factor;
        }
    }

    /// World to clip transform for a viewport of the given aspect ratio.
    pub fn view_projection(&self, aspect: f64) -> Mat4 {
        match self {
            Camera::Planar2D { .. } => ortho_2d(self, aspect),
            Camera::Perspective3D {
                fov_y, near, far, ..
            } => perspective(*fov_y, aspect, *near, *far) * model_view(self),
        }
    }
}

impl Default for Camera {
    fn default() -> Self {
        Camera::Perspective3D {
            position: Vector3::zeros(),
            orientation: UnitQuaternion::identity(),
            fov_y: DEFAULT_FOV_Y,
            near: 0.01,
            far: 100.0,
        }
    }
}

/// World to camera transform: the inverse of the camera's placement in 3D,
/// scale-about-center in 2D.
pub fn model_view(camera: &Camera) -> Mat4 {
    match camera {
        Camera::Planar2D { center, zoom } => {
            Matrix4::new_nonuniform_scaling(&Vector3::new(*zoom, *zoom, 1.0))
                * Matrix4::new_translation(&Vector3::new(-center.x, -center.y, 0.0))
        }
        Camera::Perspective3D {
            position,
            orientation,
            ..
        } => {
            orientation.inverse().to_homogeneous() * Matrix4::new_translation(&-position)
        }
    }
}

/// Standard OpenGL frustum.
pub fn perspective(fov_y: f64, aspect: f64, near: f64, far: f64) -> Mat4 {
    let f = 1.0 / (fov_y / 2.0).tan();
    let mut m = Mat4::zeros();
    m[(0, 0)] = f / aspect;
    m[(1, 1)] = f;
    m[(2, 2)] = (far + near) / (near - far);
    m[(2, 3)] = 2.0 * far * near / (near - far);
    m[(3, 2)] = -1.0;
    m
}

/// World to clip for a planar camera: the visible rectangle is
/// `center ± (aspect, 1) / zoom`. Not meaningful for perspective cameras,
/// which get the identity.
pub fn ortho_2d(camera: &Camera, aspect: f64) -> Mat4 {
    match camera {
        Camera::Planar2D { .. } => {
            Matrix4::new_nonuniform_scaling(&Vector3::new(1.0 / aspect, 1.0, 1.0))
                * model_view(camera)
        }
        Camera::Perspective3D { .. } => Mat4::identity(),
    }
}

/// Colour of a particle from its rendered coordinates. Position mode maps
/// each axis's bounds onto `[0, 1]` in R, G, B order; a 2D technique gets
/// blue 0.5.
pub fn color_for_position(pos: &[f64], bounds: &[Interval], mode: &ColorMode) -> [f64; 3] {
    match mode {
        ColorMode::Fixed { rgb } => *rgb,
        ColorMode::Position => {
            let mut c = [0.5; 3];
            for (k, (x, b)) in pos.iter().zip(bounds).take(3).enumerate() {
                c[k] = ((x - b.lo) / (b.hi - b.lo)).clamp(0.0, 1.0);
            }
            c
        }
    }
}

/// Alpha of a sprite at distance `d` from its centre, in sprite radii.
pub fn sprite_intensity(d: f64) -> f64 {
    let t = 1.0 - d.clamp(0.0, 1.0);
    t * t
}

/// Corners of the screen-aligned square for a projected point, in
/// normalized device coordinates. The square has the same pixel radius at
/// every depth. Returns `None` for points behind the camera.
pub fn sprite_quad(clip: Vector4<f64>, radius_px: f64, viewport: [u32; 2]) -> Option<[[f64; 2]; 4]> {
    if clip.w <= 0.0 {
        return None;
    }
    let c = clip.xy() / clip.w;
    let rx = 2.0 * radius_px / viewport[0] as f64;
    let ry = 2.0 * radius_px / viewport[1] as f64;
    Some([
        [c.x - rx, c.y - ry],
        [c.x + rx, c.y - ry],
        [c.x + rx, c.y + ry],
        [c.x - rx, c.y + ry],
    ])
}

/// Additive blend with per-channel saturation at 1.
pub fn blend_additive(dst: [f32; 3], color: [f64; 3], alpha: f64) -> [f32; 3] {
    let mut out = dst;
    for k in 0..3 {
        out[k] = (dst[k] as f64 + alpha * color[k]).min(1.0) as f32;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn apply(m: &Mat4, p: [f64; 3]) -> Vector4<f64> {
        m * Vector4::new(p[0], p[1], p[2], 1.0)
    }

    #[test]
    fn identity_camera() {
        assert_eq!(model_view(&Camera::default()), Mat4::identity());
    }

    #[test]
    fn planar_centering() {
        let m = model_view(&Camera::planar([2.0, 0.0], 1.0));
        assert_eq!(apply(&m, [2.0, 0.0, 0.0]), Vector4::new(0.0, 0.0, 0.0, 1.0));
        assert_eq!(m[(0, 3)], -2.0);
    }

    #[test]
    fn camera_moved_back_sees_origin_ahead() {
        let mut cam = Camera::default();
        cam.translate_local(Vector3::new(0.0, 0.0, 5.0));
        let p = apply(&model_view(&cam), [0.0, 0.0, 0.0]);
        assert_relative_eq!(p, Vector4::new(0.0, 0.0, -5.0, 1.0), epsilon = 1e-12);
    }

    #[test]
    fn frustum_entries() {
        let m = perspective(std::f64::consts::FRAC_PI_2, 1.0, 1.0, 101.0);
        assert_relative_eq!(m[(0, 0)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(m[(1, 1)], 1.0, epsilon = 1e-12);
        assert_relative_eq!(m[(2, 2)], -1.02, epsilon = 1e-12);
        assert_relative_eq!(m[(2, 3)], -2.02, epsilon = 1e-12);
        assert_eq!(m[(3, 2)], -1.0);
        let wide = perspective(std::f64::consts::FRAC_PI_2, 2.0, 1.0, 101.0);
        assert_relative_eq!(wide[(0, 0)], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn ortho_examples() {
        let clip = |c: [f64; 2], z: f64, p: [f64; 2]| {
            let v = apply(&ortho_2d(&Camera::planar(c, z), 1.0), [p[0], p[1], 0.0]);
            [v.x, v.y]
        };
        assert_eq!(clip([0.0, 0.0], 1.0, [1.0, 1.0]), [1.0, 1.0]);
        assert_eq!(clip([0.0, 0.0], 2.0, [0.5, 0.5]), [1.0, 1.0]);
        assert_eq!(clip([1.0, 0.0], 1.0, [1.0, 0.0]), [0.0, 0.0]);
    }

    #[test]
    fn looking_at_puts_target_on_axis() {
        let cam = Camera::looking_at([10.0, 4.0, -3.0], [1.0, 2.0, 3.0]);
        cam.validate().unwrap();
        let v = apply(&cam.view_projection(1.5), [1.0, 2.0, 3.0]);
        assert_relative_eq!(v.x / v.w, 0.0, epsilon = 1e-9);
        assert_relative_eq!(v.y / v.w, 0.0, epsilon = 1e-9);
        assert!(v.w > 0.0);
    }

    #[test]
    fn zoom_keeps_anchor_fixed() {
        let mut cam = Camera::planar([0.3, -1.0], 1.5);
        let before = apply(&ortho_2d(&cam, 1.0), [2.0, 1.0, 0.0]);
        cam.zoom_about([2.0, 1.0], 3.0);
        let after = apply(&ortho_2d(&cam, 1.0), [2.0, 1.0, 0.0]);
        assert_relative_eq!(before, after, epsilon = 1e-12);
    }

    #[test]
    fn colours() {
        let unit = [Interval::new(0.0, 1.0); 3];
        assert_eq!(
            color_for_position(&[0.25, 0.5, 1.0], &unit, &ColorMode::Position),
            [0.25, 0.5, 1.0]
        );
        assert_eq!(color_for_position(&[0.0; 3], &unit, &ColorMode::Position), [0.0; 3]);
        assert_eq!(
            color_for_position(&[0.2, 0.7], &unit[..2], &ColorMode::Position),
            [0.2, 0.7, 0.5]
        );
        let fixed = ColorMode::Fixed { rgb: [0.1, 0.9, 0.3] };
        assert_eq!(color_for_position(&[5.0, -3.0, 0.0], &unit, &fixed), [0.1, 0.9, 0.3]);
    }

    #[test]
    fn falloff_examples() {
        assert_eq!(sprite_intensity(0.0), 1.0);
        assert_eq!(sprite_intensity(1.0), 0.0);
        assert_eq!(sprite_intensity(3.0), 0.0);
        assert_eq!(sprite_intensity(0.5), 0.25);
    }

    #[test]
    fn blending_saturates() {
        assert_eq!(blend_additive([0.9, 0.0, 0.5], [1.0, 0.5, 0.2], 0.5), [1.0, 0.25, 0.6]);
    }

    #[test]
    fn quad_has_constant_pixel_size() {
        let near = sprite_quad(Vector4::new(0.0, 0.0, 0.0, 1.0), 2.0, [100, 50]).unwrap();
        let far = sprite_quad(Vector4::new(0.0, 0.0, 0.0, 10.0), 2.0, [100, 50]).unwrap();
        assert_eq!(near, far);
        assert_relative_eq!(near[2][0] - near[0][0], 0.08);
        assert_relative_eq!(near[2][1] - near[0][1], 0.16);
        assert!(sprite_quad(Vector4::new(0.0, 0.0, 0.0, -1.0), 2.0, [10, 10]).is_none());
    }
}
