//! Learnable 3D Gaussians, their covariance factorization and the EWA
//! projection to screen-space splats.

use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::geometry::{Camera, Z_NEAR};
use crate::real::Real;

pub const MIN_SCALE: f64 = 1e-6;
pub const MAX_SCALE: f64 = 1e3;
/// Screen-space low-pass filter added to the projected covariance diagonal (px²).
pub const LOW_PASS: f64 = 0.3;
/// Mahalanobis radius containing 99% of a 2D Gaussian's mass.
pub const MASS_99_RADIUS: f64 = 3.034_854_258_770_293;

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"GSUC0001";

pub type Mat3<T> = [[T; 3]; 3];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Gaussian3D<T = f32> {
    pub mu: [T; 3],
    /// Quaternion `(w, x, y, z)`; normalized before use.
    pub rot: [T; 4],
    pub log_scale: [T; 3],
    pub opacity_logit: T,
    /// Raw color parameter; clamped to `[0, 1]` when rendered.
    pub color: [T; 3],
}

impl<T: Real> Gaussian3D<T> {
    pub fn isotropic(mu: [T; 3], scale: T, opacity: T, color: [T; 3]) -> Self {
        let ls = scale.ln();
        Self {
            mu,
            rot: [T::one(), T::zero(), T::zero(), T::zero()],
            log_scale: [ls; 3],
            opacity_logit: logit(opacity),
            color,
        }
    }

    pub fn opacity(&self) -> T {
        sigmoid(self.opacity_logit)
    }

    pub fn scales(&self) -> [T; 3] {
        self.log_scale.map(clamped_scale)
    }

    pub fn rotation_matrix(&self) -> Mat3<T> {
        quat_to_matrix(normalize_quat(self.rot))
    }

    pub fn covariance(&self) -> Mat3<T> {
        build_covariance(self.rot, self.log_scale)
    }

    pub fn renormalize(&mut self) {
        self.rot = normalize_quat(self.rot);
    }

    pub fn cast<U: Real>(&self) -> Gaussian3D<U> {
        let c = |x: T| U::lit(x.to_f64());
        Gaussian3D {
            mu: self.mu.map(c),
            rot: self.rot.map(c),
            log_scale: self.log_scale.map(c),
            opacity_logit: c(self.opacity_logit),
            color: self.color.map(c),
        }
    }

    /// Parameters flattened in checkpoint order.
    pub fn to_array(&self) -> [T; 14] {
        let mut out = [T::zero(); 14];
        out[0..3].copy_from_slice(&self.mu);
        out[3..7].copy_from_slice(&self.rot);
        out[7..10].copy_from_slice(&self.log_scale);
        out[10] = self.opacity_logit;
        out[11..14].copy_from_slice(&self.color);
        out
    }

    pub fn from_array(a: &[T; 14]) -> Self {
        Self {
            mu: [a[0], a[1], a[2]],
            rot: [a[3], a[4], a[5], a[6]],
            log_scale: [a[7], a[8], a[9]],
            opacity_logit: a[10],
            color: [a[11], a[12], a[13]],
        }
    }
}

#[inline]
pub fn sigmoid<T: Real>(x: T) -> T {
    T::one() / (T::one() + (-x).exp())
}

#[inline]
pub fn logit<T: Real>(p: T) -> T {
    (p / (T::one() - p)).ln()
}

#[inline]
pub fn clamped_scale<T: Real>(log_scale: T) -> T {
    log_scale
        .exp()
        .max(T::lit(MIN_SCALE))
        .min(T::lit(MAX_SCALE))
}

/// Whether the scale clamp is inactive, i.e. `d scale / d log_scale = scale`.
#[inline]
pub fn scale_unclamped<T: Real>(log_scale: T) -> bool {
    let s = log_scale.exp();
    s > T::lit(MIN_SCALE) && s < T::lit(MAX_SCALE)
}

pub fn normalize_quat<T: Real>(q: [T; 4]) -> [T; 4] {
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    if n == T::zero() {
        return [T::one(), T::zero(), T::zero(), T::zero()];
    }
    q.map(|v| v / n)
}

/// Rotation matrix of a unit quaternion `(w, x, y, z)`.
pub fn quat_to_matrix<T: Real>(q: [T; 4]) -> Mat3<T> {
    let [w, x, y, z] = q;
    let one = T::one();
    let two = T::lit(2.0);
    [
        [
            one - two * (y * y + z * z),
            two * (x * y - w * z),
            two * (x * z + w * y),
        ],
        [
            two * (x * y + w * z),
            one - two * (x * x + z * z),
            two * (y * z - w * x),
        ],
        [
            two * (x * z - w * y),
            two * (y * z + w * x),
            one - two * (x * x + y * y),
        ],
    ]
}

/// `Σ = R S Sᵀ Rᵀ` with `S = diag(exp(log_scale))`.
pub fn build_covariance<T: Real>(rot: [T; 4], log_scale: [T; 3]) -> Mat3<T> {
    let r = quat_to_matrix(normalize_quat(rot));
    let s = log_scale.map(clamped_scale);
    let mut m = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            m[i][k] = r[i][k] * s[k];
        }
    }
    let mut cov = [[T::zero(); 3]; 3];
    for i in 0..3 {
        for j in i..3 {
            let v = m[i][0] * m[j][0] + m[i][1] * m[j][1] + m[i][2] * m[j][2];
            cov[i][j] = v;
            cov[j][i] = v;
        }
    }
    cov
}

pub(crate) fn invert3<T: Real>(m: &Mat3<T>) -> Option<Mat3<T>> {
    let c00 = m[1][1] * m[2][2] - m[1][2] * m[2][1];
    let c01 = m[1][2] * m[2][0] - m[1][0] * m[2][2];
    let c02 = m[1][0] * m[2][1] - m[1][1] * m[2][0];
    let det = m[0][0] * c00 + m[0][1] * c01 + m[0][2] * c02;
    if det == T::zero() || !det.is_finite() {
        return None;
    }
    let inv_det = T::one() / det;
    Some([
        [
            c00 * inv_det,
            (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv_det,
            (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv_det,
        ],
        [
            c01 * inv_det,
            (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv_det,
            (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv_det,
        ],
        [
            c02 * inv_det,
            (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv_det,
            (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv_det,
        ],
    ])
}

/// Unnormalized Gaussian density `exp(-½ (x-μ)ᵀ Σ⁻¹ (x-μ))`.
pub fn evaluate_gaussian<T: Real>(g: &Gaussian3D<T>, x: [T; 3]) -> T {
    let cov = g.covariance();
    let inv = invert3(&cov).expect("scale floor keeps the covariance invertible");
    let d = [x[0] - g.mu[0], x[1] - g.mu[1], x[2] - g.mu[2]];
    let mut q = T::zero();
    for i in 0..3 {
        for j in 0..3 {
            q = q + d[i] * inv[i][j] * d[j];
        }
    }
    (T::lit(-0.5) * q).exp()
}

/// Screen-space Gaussian produced by EWA projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Splat2D<T = f32> {
    pub mean2d: [T; 2],
    /// Symmetric covariance `(xx, xy, yy)` in px², low-pass included.
    pub cov2d: [T; 3],
    /// Inverse of `cov2d`, same layout.
    pub conic: [T; 3],
    pub depth: T,
    pub opacity: T,
    pub color: [T; 3],
}

impl<T: Real> Splat2D<T> {
    pub fn max_eigenvalue(&self) -> T {
        let [a, b, c] = self.cov2d;
        let mid = T::lit(0.5) * (a + c);
        let det = a * c - b * b;
        mid + (mid * mid - det).max(T::zero()).sqrt()
    }

    pub fn min_eigenvalue(&self) -> T {
        let [a, b, c] = self.cov2d;
        let mid = T::lit(0.5) * (a + c);
        let det = a * c - b * b;
        mid - (mid * mid - det).max(T::zero()).sqrt()
    }
}

/// Intermediate quantities of the projection, kept for the backward pass.
#[derive(Debug, Clone, Copy)]
pub struct ProjectedGaussian<T> {
    pub splat: Splat2D<T>,
    pub t_cam: [T; 3],
    pub jac: [[T; 3]; 2],
    /// `(x/z, y/z)` as used in the Jacobian, after frustum clamping.
    pub uv: [T; 2],
    pub uv_clamped: [bool; 2],
    pub cov3: Mat3<T>,
}

/// The Jacobian is evaluated with `x/z`, `y/z` clamped to this multiple of
/// the image half-extent, which keeps near-plane splats far off screen from
/// blowing up into screen-filling ellipses.
pub const FRUSTUM_CLAMP: f64 = 1.3;

/// Camera pose and intrinsics converted to the working precision.
#[derive(Debug, Clone, Copy)]
pub struct CameraParams<T> {
    pub w: Mat3<T>,
    pub t: [T; 3],
    pub fx: T,
    pub fy: T,
    pub cx: T,
    pub cy: T,
    pub width: u32,
    pub height: u32,
}

impl<T: Real> CameraParams<T> {
    pub fn new(cam: &Camera) -> Self {
        let r = cam.pose.rotation_matrix();
        let tr = cam.pose.translation();
        let mut w = [[T::zero(); 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                w[i][j] = T::lit(r[(i, j)]);
            }
        }
        Self {
            w,
            t: [T::lit(tr.x), T::lit(tr.y), T::lit(tr.z)],
            fx: T::lit(cam.fx),
            fy: T::lit(cam.fy),
            cx: T::lit(cam.cx),
            cy: T::lit(cam.cy),
            width: cam.width,
            height: cam.height,
        }
    }
}

/// EWA projection with full intermediates; `None` when culled.
pub fn project_gaussian<T: Real>(
    cam: &CameraParams<T>,
    g: &Gaussian3D<T>,
) -> Option<ProjectedGaussian<T>> {
    let w = &cam.w;
    let mut t = [T::zero(); 3];
    for i in 0..3 {
        t[i] = w[i][0] * g.mu[0] + w[i][1] * g.mu[1] + w[i][2] * g.mu[2] + cam.t[i];
    }
    let z = t[2];
    if !(z > T::lit(Z_NEAR)) {
        return None;
    }
    let inv_z = T::one() / z;
    let mean2d = [cam.fx * t[0] / z + cam.cx, cam.fy * t[1] / z + cam.cy];
    let k = T::lit(FRUSTUM_CLAMP);
    let half = T::lit(0.5);
    let clamp = |v: T, lo: T, hi: T| -> (T, bool) {
        if v < lo {
            (lo, true)
        } else if v > hi {
            (hi, true)
        } else {
            (v, false)
        }
    };
    let (u, cu) = clamp(
        t[0] * inv_z,
        -k * (cam.cx + half) / cam.fx,
        k * (T::lit(cam.width as f64) - half - cam.cx) / cam.fx,
    );
    let (v, cv) = clamp(
        t[1] * inv_z,
        -k * (cam.cy + half) / cam.fy,
        k * (T::lit(cam.height as f64) - half - cam.cy) / cam.fy,
    );
    let jac = [
        [cam.fx * inv_z, T::zero(), -cam.fx * u * inv_z],
        [T::zero(), cam.fy * inv_z, -cam.fy * v * inv_z],
    ];
    let cov3 = g.covariance();
    // T = J W (2x3)
    let mut jw = [[T::zero(); 3]; 2];
    for r in 0..2 {
        for c in 0..3 {
            jw[r][c] = jac[r][0] * w[0][c] + jac[r][1] * w[1][c] + jac[r][2] * w[2][c];
        }
    }
    // cov2 = T Σ Tᵀ
    let mut ts = [[T::zero(); 3]; 2];
    for r in 0..2 {
        for c in 0..3 {
            ts[r][c] = jw[r][0] * cov3[0][c] + jw[r][1] * cov3[1][c] + jw[r][2] * cov3[2][c];
        }
    }
    let dot = |a: &[T; 3], b: &[T; 3]| a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
    let lp = T::lit(LOW_PASS);
    let cov2d = [
        dot(&ts[0], &jw[0]) + lp,
        dot(&ts[0], &jw[1]),
        dot(&ts[1], &jw[1]) + lp,
    ];
    let det = cov2d[0] * cov2d[2] - cov2d[1] * cov2d[1];
    if !(det > T::zero()) || !det.is_finite() {
        return None;
    }
    let conic = [cov2d[2] / det, -cov2d[1] / det, cov2d[0] / det];
    let color = g.color.map(|c| c.max(T::zero()).min(T::one()));
    let splat = Splat2D {
        mean2d,
        cov2d,
        conic,
        depth: z,
        opacity: g.opacity(),
        color,
    };
    let radius = T::lit(MASS_99_RADIUS) * splat.max_eigenvalue().sqrt();
    let lo = T::lit(-0.5);
    let (wf, hf) = (
        T::lit(cam.width as f64 - 0.5),
        T::lit(cam.height as f64 - 0.5),
    );
    if mean2d[0] + radius < lo
        || mean2d[1] + radius < lo
        || mean2d[0] - radius > wf
        || mean2d[1] - radius > hf
    {
        return None;
    }
    Some(ProjectedGaussian {
        splat,
        t_cam: t,
        jac,
        uv: [u, v],
        uv_clamped: [cu, cv],
        cov3,
    })
}

/// Projects a Gaussian to a screen-space splat; `None` means culled.
pub fn project_to_2d<T: Real>(camera: &Camera, g: &Gaussian3D<T>) -> Option<Splat2D<T>> {
    project_gaussian(&CameraParams::new(camera), g).map(|p| p.splat)
}

/// The learnable scene: Gaussians plus densification statistics.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct GaussianField {
    pub gaussians: Vec<Gaussian3D<f32>>,
    pub iteration: u64,
    /// Accumulated screen-space positional gradient norms per Gaussian.
    pub grad_accum: Vec<f32>,
    /// Number of views in which each Gaussian received a gradient.
    pub grad_count: Vec<u32>,
}

impl GaussianField {
    pub fn new(gaussians: Vec<Gaussian3D<f32>>) -> Self {
        let n = gaussians.len();
        Self {
            gaussians,
            iteration: 0,
            grad_accum: vec![0.0; n],
            grad_count: vec![0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn reset_stats(&mut self) {
        self.grad_accum = vec![0.0; self.len()];
        self.grad_count = vec![0; self.len()];
    }

    pub fn write_checkpoint<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        out.write_all(CHECKPOINT_MAGIC)?;
        out.write_all(&(self.len() as u64).to_le_bytes())?;
        let mut buf = Vec::with_capacity(self.len() * 14 * 4);
        for g in &self.gaussians {
            for v in g.to_array() {
                buf.extend_from_slice(&v.to_le_bytes());
            }
        }
        out.write_all(&buf)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
        let mut w = std::io::BufWriter::new(file);
        self.write_checkpoint(&mut w)
            .and_then(|_| w.flush())
            .map_err(|e| Error::io(path, e))
    }

    pub fn read_checkpoint<R: Read>(mut input: R, path: &Path) -> Result<Self> {
        let mut magic = [0u8; 8];
        input
            .read_exact(&mut magic)
            .map_err(|e| Error::io(path, e))?;
        if &magic != CHECKPOINT_MAGIC {
            return Err(Error::format(path, "bad checkpoint magic"));
        }
        let mut count = [0u8; 8];
        input
            .read_exact(&mut count)
            .map_err(|e| Error::io(path, e))?;
        let count = u64::from_le_bytes(count) as usize;
        let mut bytes = Vec::new();
        input
            .read_to_end(&mut bytes)
            .map_err(|e| Error::io(path, e))?;
        if bytes.len() != count * 14 * 4 {
            return Err(Error::format(
                path,
                format!("expected {} gaussians, payload is {} bytes", count, bytes.len()),
            ));
        }
        let gaussians = bytes
            .chunks_exact(14 * 4)
            .map(|chunk| {
                let mut a = [0f32; 14];
                for (v, b) in a.iter_mut().zip(chunk.chunks_exact(4)) {
                    *v = f32::from_le_bytes([b[0], b[1], b[2], b[3]]);
                }
                Gaussian3D::from_array(&a)
            })
            .collect();
        Ok(Self::new(gaussians))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
        Self::read_checkpoint(std::io::BufReader::new(file), path)
    }
}
