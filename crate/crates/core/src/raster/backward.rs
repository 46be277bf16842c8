use rayon::prelude::*;

use super::forward::{composite_pixel, gather_tile, Consts, Contribution, RenderOutput};
use crate::error::{Error, Result};
use crate::gaussian::{
    clamped_scale, normalize_quat, quat_to_matrix, scale_unclamped, sigmoid, CameraParams,
    Gaussian3D, ProjectedGaussian,
};
use crate::geometry::Camera;
use crate::real::Real;

/// Parameter-shaped gradients, one entry per Gaussian.
#[derive(Debug, Clone)]
pub struct Gradients<T> {
    /// `∂L/∂θ` laid out like the parameters themselves.
    pub params: Vec<Gaussian3D<T>>,
    /// `∂L/∂mean2d` per Gaussian (px⁻¹), the densification signal; zero when culled.
    pub mean2d: Vec<[T; 2]>,
}

impl<T: Real> Gradients<T> {
    pub fn zeros(n: usize) -> Self {
        let z = Gaussian3D::from_array(&[T::zero(); 14]);
        Self {
            params: vec![z; n],
            mean2d: vec![[T::zero(); 2]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    pub fn all_finite(&self) -> bool {
        self.params
            .iter()
            .all(|g| g.to_array().iter().all(|v| v.is_finite()))
    }
}

/// Screen-space gradient of one splat.
#[derive(Clone, Copy, Default, Debug)]
struct SplatGrad<T> {
    mean: [T; 2],
    /// `(∂/∂A, ∂/∂B, ∂/∂C)` for conic `[[A, B], [B, C]]`.
    conic: [T; 3],
    opacity: T,
    color: [T; 3],
}

impl<T: Real> SplatGrad<T> {
    fn add(&mut self, o: &SplatGrad<T>) {
        for i in 0..2 {
            self.mean[i] = self.mean[i] + o.mean[i];
        }
        for i in 0..3 {
            self.conic[i] = self.conic[i] + o.conic[i];
            self.color[i] = self.color[i] + o.color[i];
        }
        self.opacity = self.opacity + o.opacity;
    }
}

/// Backward pass through [`super::rasterize`]. Accumulation order is fixed
/// (tile-major, then front to back) so the result is independent of the
/// number of worker threads.
pub fn rasterize_backward<T: Real>(
    gaussians: &[Gaussian3D<T>],
    camera: &Camera,
    output: &RenderOutput<T>,
    d_color: &[T],
    d_alpha: &[T],
) -> Result<Gradients<T>> {
    if output.projected.len() != gaussians.len() {
        return Err(Error::MismatchedRender(format!(
            "render has {} gaussians, field has {}",
            output.projected.len(),
            gaussians.len()
        )));
    }
    if output.camera != *camera {
        return Err(Error::MismatchedRender("camera differs from the rendered one".into()));
    }
    let (width, height) = (output.width, output.height);
    if d_color.len() != width * height * 3 || d_alpha.len() != width * height {
        return Err(Error::MismatchedRender(format!(
            "gradient buffers sized {}/{} for a {}x{} image",
            d_color.len(),
            d_alpha.len(),
            width,
            height
        )));
    }
    let k = Consts::<T>::new(&output.settings);
    let bins = &output.bins;
    let projected = &output.projected;
    let bg = output.background;

    let tile_grads: Vec<Vec<SplatGrad<T>>> = (0..bins.lists.len())
        .into_par_iter()
        .map(|tile| {
            let list = &bins.lists[tile];
            let mut acc = vec![SplatGrad::<T>::default(); list.len()];
            if list.is_empty() {
                return acc;
            }
            let (x0, y0, x1, y1) = bins.tile_bounds(tile, width, height);
            let splats = gather_tile(list, projected, &k);
            let mut contribs: Vec<Contribution<T>> = Vec::with_capacity(list.len());
            for y in y0..y1 {
                for x in x0..x1 {
                    let pix = y * width + x;
                    let gc = [d_color[pix * 3], d_color[pix * 3 + 1], d_color[pix * 3 + 2]];
                    let ga = d_alpha[pix];
                    if gc.iter().all(|v| *v == T::zero()) && ga == T::zero() {
                        continue;
                    }
                    contribs.clear();
                    let res = composite_pixel(T::lit(x as f64), T::lit(y as f64), &splats, &k, |c| {
                        contribs.push(c)
                    });
                    let t_final = res.transmittance;
                    let mut behind = bg;
                    for c in contribs.iter().rev() {
                        let s = &splats[c.slot];
                        let g = &mut acc[c.slot];
                        let w = c.alpha * c.transmittance;
                        let mut d_alpha_i = T::zero();
                        for ch in 0..3 {
                            g.color[ch] = g.color[ch] + gc[ch] * w;
                            d_alpha_i = d_alpha_i + gc[ch] * (s.color[ch] - behind[ch]);
                        }
                        d_alpha_i = d_alpha_i * c.transmittance
                            + ga * t_final / (T::one() - c.alpha);
                        for ch in 0..3 {
                            behind[ch] = c.alpha * s.color[ch] + (T::one() - c.alpha) * behind[ch];
                        }
                        if c.clamped {
                            continue;
                        }
                        g.opacity = g.opacity + d_alpha_i * c.falloff;
                        let d_power = d_alpha_i * c.alpha;
                        let [ca, cb, cc] = s.conic;
                        // power = -½(A dx² + 2B dx dy + C dy²), dx = px - mean.x
                        g.mean[0] = g.mean[0] + d_power * (ca * c.dx + cb * c.dy);
                        g.mean[1] = g.mean[1] + d_power * (cb * c.dx + cc * c.dy);
                        let half = T::lit(0.5);
                        g.conic[0] = g.conic[0] - half * c.dx * c.dx * d_power;
                        g.conic[1] = g.conic[1] - c.dx * c.dy * d_power;
                        g.conic[2] = g.conic[2] - half * c.dy * c.dy * d_power;
                    }
                }
            }
            acc
        })
        .collect();

    let mut splat_grads = vec![SplatGrad::<T>::default(); gaussians.len()];
    for (tile, grads) in tile_grads.iter().enumerate() {
        for (slot, g) in grads.iter().enumerate() {
            splat_grads[bins.lists[tile][slot] as usize].add(g);
        }
    }

    let cam = CameraParams::<T>::new(camera);
    let (params, mean2d): (Vec<_>, Vec<_>) = gaussians
        .par_iter()
        .zip(projected.par_iter())
        .zip(splat_grads.par_iter())
        .map(|((g, p), sg)| match p {
            Some(p) => (
                backprop_gaussian(g, p, &cam, sg),
                sg.mean,
            ),
            None => (Gaussian3D::from_array(&[T::zero(); 14]), [T::zero(); 2]),
        })
        .unzip();
    Ok(Gradients {
        params,
        mean2d,
    })
}

type M3<T> = [[T; 3]; 3];

/// Chains screen-space gradients back through the EWA projection and the
/// covariance factorization.
fn backprop_gaussian<T: Real>(
    g: &Gaussian3D<T>,
    p: &ProjectedGaussian<T>,
    cam: &CameraParams<T>,
    sg: &SplatGrad<T>,
) -> Gaussian3D<T> {
    let zero = T::zero();
    let one = T::one();
    let two = T::lit(2.0);
    let half = T::lit(0.5);

    // conic -> cov2d: G_Σ = -Q G_Q Q with G_Q the symmetric matrix gradient
    let [qa, qb, qc] = p.splat.conic;
    let gq = [[sg.conic[0], half * sg.conic[1]], [half * sg.conic[1], sg.conic[2]]];
    let q = [[qa, qb], [qb, qc]];
    let mut qg = [[zero; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            qg[i][j] = q[i][0] * gq[0][j] + q[i][1] * gq[1][j];
        }
    }
    let mut g2 = [[zero; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            g2[i][j] = -(qg[i][0] * q[0][j] + qg[i][1] * q[1][j]);
        }
    }

    // cov2d = M Σ3 Mᵀ with M = J W
    let w = &cam.w;
    let jac = &p.jac;
    let mut m = [[zero; 3]; 2];
    for r in 0..2 {
        for c in 0..3 {
            m[r][c] = jac[r][0] * w[0][c] + jac[r][1] * w[1][c] + jac[r][2] * w[2][c];
        }
    }
    // G3 = Mᵀ G2 M
    let mut g2m = [[zero; 3]; 2];
    for r in 0..2 {
        for c in 0..3 {
            g2m[r][c] = g2[r][0] * m[0][c] + g2[r][1] * m[1][c];
        }
    }
    let mut g3: M3<T> = [[zero; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            g3[i][j] = m[0][i] * g2m[0][j] + m[1][i] * g2m[1][j];
        }
    }
    // dL/dM = 2 G2 M Σ3
    let cov3 = &p.cov3;
    let mut d_m = [[zero; 3]; 2];
    for r in 0..2 {
        for c in 0..3 {
            d_m[r][c] = two
                * (g2m[r][0] * cov3[0][c] + g2m[r][1] * cov3[1][c] + g2m[r][2] * cov3[2][c]);
        }
    }
    // dL/dJ = dL/dM Wᵀ
    let mut d_j = [[zero; 3]; 2];
    for r in 0..2 {
        for c in 0..3 {
            d_j[r][c] = d_m[r][0] * w[c][0] + d_m[r][1] * w[c][1] + d_m[r][2] * w[c][2];
        }
    }

    // camera-space mean
    let [tx, ty, tz] = p.t_cam;
    let iz = one / tz;
    let iz2 = iz * iz;
    let iz3 = iz2 * iz;
    let (fx, fy) = (cam.fx, cam.fy);
    let [gmx, gmy] = sg.mean;
    // J[0][2] = -fx·u/z with u = tx/z unless clamped (then u is constant)
    let [u, v] = p.uv;
    let mut d_tx = gmx * fx * iz;
    let mut d_ty = gmy * fy * iz;
    let mut d_tz = gmx * (-fx * tx * iz2)
        + gmy * (-fy * ty * iz2)
        + d_j[0][0] * (-fx * iz2)
        + d_j[1][1] * (-fy * iz2);
    if p.uv_clamped[0] {
        d_tz = d_tz + d_j[0][2] * (fx * u * iz2);
    } else {
        d_tx = d_tx + d_j[0][2] * (-fx * iz2);
        d_tz = d_tz + d_j[0][2] * (two * fx * tx * iz3);
    }
    if p.uv_clamped[1] {
        d_tz = d_tz + d_j[1][2] * (fy * v * iz2);
    } else {
        d_ty = d_ty + d_j[1][2] * (-fy * iz2);
        d_tz = d_tz + d_j[1][2] * (two * fy * ty * iz3);
    }
    let d_t = [d_tx, d_ty, d_tz];
    let mut d_mu = [zero; 3];
    for i in 0..3 {
        d_mu[i] = w[0][i] * d_t[0] + w[1][i] * d_t[1] + w[2][i] * d_t[2];
    }

    // Σ3 = Mr Mrᵀ, Mr = R S
    let qn = normalize_quat(g.rot);
    let r = quat_to_matrix(qn);
    let s = g.log_scale.map(clamped_scale);
    let mut d_mr: M3<T> = [[zero; 3]; 3];
    for i in 0..3 {
        for k in 0..3 {
            let mut acc = zero;
            for j in 0..3 {
                acc = acc + g3[i][j] * r[j][k] * s[k];
            }
            d_mr[i][k] = two * acc;
        }
    }
    let mut d_log_scale = [zero; 3];
    let mut d_r: M3<T> = [[zero; 3]; 3];
    for k in 0..3 {
        let mut ds = zero;
        for i in 0..3 {
            ds = ds + d_mr[i][k] * r[i][k];
            d_r[i][k] = d_mr[i][k] * s[k];
        }
        if scale_unclamped(g.log_scale[k]) {
            d_log_scale[k] = ds * s[k];
        }
    }
    let d_qn = rotation_matrix_vjp(qn, &d_r);
    let qnorm = (g.rot[0] * g.rot[0] + g.rot[1] * g.rot[1] + g.rot[2] * g.rot[2] + g.rot[3] * g.rot[3]).sqrt();
    let dot = qn[0] * d_qn[0] + qn[1] * d_qn[1] + qn[2] * d_qn[2] + qn[3] * d_qn[3];
    let d_rot = if qnorm > zero {
        [0, 1, 2, 3].map(|i| (d_qn[i] - qn[i] * dot) / qnorm)
    } else {
        [zero; 4]
    };

    let o = sigmoid(g.opacity_logit);
    let d_logit = sg.opacity * o * (one - o);
    let d_color = [0, 1, 2].map(|c| {
        if g.color[c] >= zero && g.color[c] <= one {
            sg.color[c]
        } else {
            zero
        }
    });
    Gaussian3D {
        mu: d_mu,
        rot: d_rot,
        log_scale: d_log_scale,
        opacity_logit: d_logit,
        color: d_color,
    }
}

/// Vector-Jacobian product of the unit-quaternion → rotation-matrix map.
fn rotation_matrix_vjp<T: Real>(q: [T; 4], d_r: &M3<T>) -> [T; 4] {
    let [w, x, y, z] = q;
    let two = T::lit(2.0);
    let four = T::lit(4.0);
    let g = d_r;
    let dw = two
        * (-z * g[0][1] + y * g[0][2] + z * g[1][0] - x * g[1][2] - y * g[2][0] + x * g[2][1]);
    let dx = two * (y * g[0][1] + z * g[0][2] + y * g[1][0] - w * g[1][2] + z * g[2][0] + w * g[2][1])
        - four * x * (g[1][1] + g[2][2]);
    let dy = two * (x * g[0][1] + w * g[0][2] + x * g[1][0] + z * g[1][2] - w * g[2][0] + z * g[2][1])
        - four * y * (g[0][0] + g[2][2]);
    let dz = two * (-w * g[0][1] + x * g[0][2] + w * g[1][0] + y * g[1][2] + x * g[2][0] + y * g[2][1])
        - four * z * (g[0][0] + g[1][1]);
    [dw, dx, dy, dz]
}
