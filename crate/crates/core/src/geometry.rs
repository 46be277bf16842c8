//! Pinhole cameras and rigid poses.
//!
//! Convention: right-handed frames, the camera looks down its local +z axis,
//! image x grows to the right and image y grows downwards. Poses are stored
//! world-to-camera, so camera-space z is the depth of a point. Pixel centers
//! sit at integer coordinates.

use nalgebra::{Matrix3, Matrix4, Quaternion, UnitQuaternion, Vector2, Vector3};

use crate::error::{Error, Result};

/// Points closer than this (camera-space z, meters) are treated as behind the camera.
pub const Z_NEAR: f64 = 0.01;

const ORTHONORMAL_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RigidTransform {
    rotation: UnitQuaternion<f64>,
    translation: Vector3<f64>,
}

impl Default for RigidTransform {
    fn default() -> Self {
        Self::identity()
    }
}

impl RigidTransform {
    pub fn identity() -> Self {
        Self {
            rotation: UnitQuaternion::identity(),
            translation: Vector3::zeros(),
        }
    }

    /// Builds a transform from a (not necessarily normalized) quaternion.
    /// Quaternions already unit to within a few ulps are kept bit-exact, so
    /// poses survive a text round trip unchanged.
    pub fn new(rotation: Quaternion<f64>, translation: Vector3<f64>) -> Self {
        let unit = if (rotation.norm() - 1.0).abs() <= 4.0 * f64::EPSILON {
            UnitQuaternion::new_unchecked(rotation)
        } else {
            UnitQuaternion::from_quaternion(rotation)
        };
        Self {
            rotation: unit,
            translation,
        }
    }

    pub fn from_unit(rotation: UnitQuaternion<f64>, translation: Vector3<f64>) -> Self {
        Self::new(rotation.into_inner(), translation)
    }

    /// Builds a transform from a rotation matrix, rejecting matrices that are
    /// not proper rotations.
    pub fn from_matrix(rotation: &Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let should_be_identity = rotation.transpose() * rotation;
        let ortho_err = (should_be_identity - Matrix3::identity()).abs().max();
        let det = rotation.determinant();
        if ortho_err > ORTHONORMAL_TOL || (det - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::InvalidCamera(format!(
                "rotation is not orthonormal with det +1 (orthogonality error {ortho_err:e}, det {det})"
            )));
        }
        let rot = nalgebra::Rotation3::from_matrix_unchecked(*rotation);
        Ok(Self::from_unit(UnitQuaternion::from_rotation_matrix(&rot), translation))
    }

    pub fn rotation(&self) -> &UnitQuaternion<f64> {
        &self.rotation
    }

    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        self.rotation.to_rotation_matrix().into_inner()
    }

    pub fn to_homogeneous(&self) -> Matrix4<f64> {
        let mut m = Matrix4::identity();
        m.fixed_view_mut::<3, 3>(0, 0).copy_from(&self.rotation_matrix());
        m.fixed_view_mut::<3, 1>(0, 3).copy_from(&self.translation);
        m
    }

    #[inline]
    pub fn apply(&self, p: &Vector3<f64>) -> Vector3<f64> {
        let r = self.rotation_matrix();
        let t = &self.translation;
        Vector3::from_fn(|i, _| r[(i, 0)] * p.x + r[(i, 1)] * p.y + r[(i, 2)] * p.z + t[i])
    }

    /// `self ∘ other`: applies `other` first.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform::new(
            (self.rotation * other.rotation).into_inner(),
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> RigidTransform {
        let inv = self.rotation.inverse();
        RigidTransform::new(inv.into_inner(), -(inv * self.translation))
    }
}

/// Result of projecting a world point into a camera.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub pixel: Vector2<f64>,
    pub depth: f64,
    /// `true` when the point lies at or behind the near plane; `pixel` is
    /// meaningless in that case.
    pub behind: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
    /// World-to-camera transform.
    pub pose: RigidTransform,
}

impl Camera {
    pub fn new(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        pose: RigidTransform,
    ) -> Result<Self> {
        let cam = Self {
            fx,
            fy,
            cx,
            cy,
            width,
            height,
            pose,
        };
        cam.validate()?;
        Ok(cam)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.fx > 0.0 && self.fy > 0.0) || !self.fx.is_finite() || !self.fy.is_finite() {
            return Err(Error::InvalidCamera(format!(
                "focal lengths must be positive, got ({}, {})",
                self.fx, self.fy
            )));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::InvalidCamera("image size must be at least 1x1".into()));
        }
        let qn = self.pose.rotation.as_ref().norm();
        if (qn - 1.0).abs() > ORTHONORMAL_TOL {
            return Err(Error::InvalidCamera(format!("pose quaternion norm {qn}")));
        }
        Ok(())
    }

    /// Camera whose optical axis points along `forward` from `center`, with
    /// image-up aligned as closely as possible to `world_up`.
    pub fn looking(
        fx: f64,
        fy: f64,
        cx: f64,
        cy: f64,
        width: u32,
        height: u32,
        center: Vector3<f64>,
        forward: Vector3<f64>,
        world_up: Vector3<f64>,
    ) -> Result<Self> {
        let z = forward.normalize();
        let x = z.cross(&world_up);
        if x.norm() < 1e-12 {
            return Err(Error::InvalidCamera("forward is parallel to up".into()));
        }
        let x = x.normalize();
        let y = z.cross(&x);
        // columns are the camera axes in world coordinates (camera-to-world)
        let cam_to_world = Matrix3::from_columns(&[x, y, z]);
        let world_to_cam = cam_to_world.transpose();
        let pose = RigidTransform::from_matrix(&world_to_cam, -(world_to_cam * center))?;
        Self::new(fx, fy, cx, cy, width, height, pose)
    }

    pub fn center(&self) -> Vector3<f64> {
        self.pose.inverse().translation
    }

    pub fn pixel_count(&self) -> usize {
        self.width as usize * self.height as usize
    }

    #[inline]
    pub fn to_camera(&self, p_world: &Vector3<f64>) -> Vector3<f64> {
        self.pose.apply(p_world)
    }

    #[inline]
    pub fn project_camera_point(&self, p_cam: &Vector3<f64>) -> Projection {
        let z = p_cam.z;
        if !(z > Z_NEAR) {
            return Projection {
                pixel: Vector2::new(f64::NAN, f64::NAN),
                depth: z,
                behind: true,
            };
        }
        Projection {
            pixel: Vector2::new(
                self.fx * p_cam.x / z + self.cx,
                self.fy * p_cam.y / z + self.cy,
            ),
            depth: z,
            behind: false,
        }
    }

    pub fn project_point(&self, p_world: &Vector3<f64>) -> Projection {
        self.project_camera_point(&self.to_camera(p_world))
    }

    /// Inverse of [`Camera::project_point`] for a known camera-space depth.
    pub fn unproject_pixel(&self, pixel: &Vector2<f64>, depth: f64) -> Result<Vector3<f64>> {
        if !(depth > 0.0) {
            return Err(Error::NonPositiveDepth(depth));
        }
        let p_cam = Vector3::new(
            (pixel.x - self.cx) / self.fx * depth,
            (pixel.y - self.cy) / self.fy * depth,
            depth,
        );
        Ok(self.pose.inverse().apply(&p_cam))
    }

    /// Whether a projected pixel (continuous coordinates) rounds into the image.
    pub fn contains(&self, pixel: &Vector2<f64>) -> bool {
        pixel.x > -0.5
            && pixel.y > -0.5
            && pixel.x < self.width as f64 - 0.5
            && pixel.y < self.height as f64 - 0.5
    }

    pub fn same_intrinsics(&self, other: &Camera) -> bool {
        self.fx == other.fx
            && self.fy == other.fy
            && self.cx == other.cx
            && self.cy == other.cy
            && self.width == other.width
            && self.height == other.height
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cam(pose: RigidTransform) -> Camera {
        Camera::new(100.0, 100.0, 50.0, 50.0, 100, 100, pose).unwrap()
    }

    fn random_pose(rng: &mut ChaCha8Rng) -> RigidTransform {
        let q = Quaternion::new(
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
            rng.random_range(-1.0..1.0),
        );
        let t = Vector3::new(
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
            rng.random_range(-2.0..2.0),
        );
        RigidTransform::new(q, t)
    }

    #[test]
    fn optical_axis_projects_to_principal_point() {
        let c = cam(RigidTransform::identity());
        let p = c.project_point(&Vector3::new(0.0, 0.0, 1.0));
        assert!(!p.behind);
        assert_eq!(p.pixel, Vector2::new(50.0, 50.0));
        assert_eq!(p.depth, 1.0);
        let p = c.project_point(&Vector3::new(0.5, 0.0, 1.0));
        assert_eq!(p.pixel, Vector2::new(100.0, 50.0));
    }

    #[test]
    fn behind_camera_is_flagged() {
        let c = cam(RigidTransform::identity());
        assert!(c.project_point(&Vector3::new(0.0, 0.0, -1.0)).behind);
        assert!(c.project_point(&Vector3::new(0.0, 0.0, Z_NEAR)).behind);
        assert!(!c.project_point(&Vector3::new(0.0, 0.0, 2.0 * Z_NEAR)).behind);
    }

    #[test]
    fn projection_matches_homogeneous_matrix_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..200 {
            let pose = random_pose(&mut rng);
            let c = cam(pose);
            let pw = Vector3::new(
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
                rng.random_range(-3.0..3.0),
            );
            let k = Matrix4::new(
                100.0, 0.0, 50.0, 0.0, //
                0.0, 100.0, 50.0, 0.0, //
                0.0, 0.0, 1.0, 0.0, //
                0.0, 0.0, 0.0, 1.0,
            );
            let h = k * pose.to_homogeneous() * pw.push(1.0);
            let proj = c.project_point(&pw);
            if h.z <= Z_NEAR {
                assert!(proj.behind);
                continue;
            }
            assert_abs_diff_eq!(proj.pixel.x, h.x / h.z, epsilon = 1e-9);
            assert_abs_diff_eq!(proj.pixel.y, h.y / h.z, epsilon = 1e-9);
            assert_abs_diff_eq!(proj.depth, h.z, epsilon = 1e-9);
        }
    }

    #[test]
    fn unproject_on_axis() {
        let c = cam(RigidTransform::identity());
        let w = c.unproject_pixel(&Vector2::new(50.0, 50.0), 2.0).unwrap();
        assert_abs_diff_eq!(w, Vector3::new(0.0, 0.0, 2.0), epsilon = 1e-12);
        assert!(c.unproject_pixel(&Vector2::new(1.0, 1.0), 0.0).is_err());
        assert!(c.unproject_pixel(&Vector2::new(1.0, 1.0), -1.0).is_err());
    }

    #[test]
    fn unproject_with_yaw() {
        // 90 degrees about the camera y axis: world +x maps to camera -z... built by hand
        let r = Matrix3::new(0.0, 0.0, -1.0, 0.0, 1.0, 0.0, 1.0, 0.0, 0.0);
        let pose = RigidTransform::from_matrix(&r, Vector3::new(0.0, 0.0, 0.0)).unwrap();
        let c = cam(pose);
        let w = c.unproject_pixel(&Vector2::new(60.0, 50.0), 2.0).unwrap();
        // camera point (0.2, 0, 2); world = R^T * p_cam
        let expected = r.transpose() * Vector3::new(0.2, 0.0, 2.0);
        assert_abs_diff_eq!(w, expected, epsilon = 1e-12);
        assert_abs_diff_eq!(w, Vector3::new(2.0, 0.0, -0.2), epsilon = 1e-12);
    }

    #[test]
    fn round_trip_random_pixels() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let c = cam(random_pose(&mut rng));
        let mut worst: f64 = 0.0;
        for _ in 0..1000 {
            let px = Vector2::new(rng.random_range(0.0..100.0), rng.random_range(0.0..100.0));
            let d = rng.random_range(0.02..50.0);
            let w = c.unproject_pixel(&px, d).unwrap();
            let p = c.project_point(&w);
            assert!(!p.behind);
            worst = worst.max((p.pixel - px).norm());
            assert_abs_diff_eq!(p.depth, d, epsilon = 1e-9);
        }
        assert!(worst < 1e-6, "worst reprojection error {worst}");
    }

    #[test]
    fn composition_and_inverse() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        for _ in 0..100 {
            let (a, b, c) = (
                random_pose(&mut rng),
                random_pose(&mut rng),
                random_pose(&mut rng),
            );
            let left = a.compose(&b).compose(&c);
            let right = a.compose(&b.compose(&c));
            assert_abs_diff_eq!(left.to_homogeneous(), right.to_homogeneous(), epsilon = 1e-9);
            let id = a.inverse().compose(&a);
            assert_abs_diff_eq!(id.to_homogeneous(), Matrix4::identity(), epsilon = 1e-9);
            assert!((left.rotation().as_ref().norm() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn rejects_bad_cameras() {
        assert!(Camera::new(0.0, 1.0, 0.0, 0.0, 1, 1, RigidTransform::identity()).is_err());
        assert!(Camera::new(1.0, 1.0, 0.0, 0.0, 0, 1, RigidTransform::identity()).is_err());
        let shear = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(RigidTransform::from_matrix(&shear, Vector3::zeros()).is_err());
        let reflect = Matrix3::new(-1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(RigidTransform::from_matrix(&reflect, Vector3::zeros()).is_err());
    }

    #[test]
    fn looking_camera_axes() {
        let c = Camera::looking(
            10.0,
            10.0,
            5.0,
            5.0,
            10,
            10,
            Vector3::new(1.0, 1.5, 0.0),
            Vector3::new(0.0, 0.0, 1.0),
            Vector3::new(0.0, 1.0, 0.0),
        )
        .unwrap();
        assert_abs_diff_eq!(c.center(), Vector3::new(1.0, 1.5, 0.0), epsilon = 1e-12);
        // a point above the camera lands in the upper half of the image
        let p = c.project_point(&Vector3::new(1.0, 2.5, 5.0));
        assert!(p.pixel.y < 5.0);
        assert_abs_diff_eq!(p.depth, 5.0, epsilon = 1e-12);
    }
}
