//! Photometric losses (plain and per-pixel weighted), the volume regularizer
//! and the PSNR/SSIM evaluation metrics.
//!
//! Loss functions are generic over [`Real`] and operate on row-major RGB
//! buffers so that the same code serves `f32` training and the `f64`
//! gradient-check path.

use crate::error::{Error, Result};
use crate::gaussian::{clamped_scale, scale_unclamped, Gaussian3D};
use crate::image::Image;
use crate::real::Real;

pub const LAMBDA_SSIM: f64 = 0.2;
pub const LAMBDA_VOL: f64 = 0.001;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

/// Per-pixel loss weights in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f32>,
}

impl WeightMap {
    pub fn new(width: usize, height: usize, data: Vec<f32>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidArgument(format!(
                "weight map of {}x{} needs {} values, got {}",
                width,
                height,
                width * height,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::InvalidArgument(format!("weight {v} outside [0, 1]")));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn ones(width: usize, height: usize) -> Self {
        Self {
            width,
            height,
            data: vec![1.0; width * height],
        }
    }

    pub fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

/// Borrowed RGB buffer with dimensions.
#[derive(Debug, Clone, Copy)]
pub struct Rgb<'a, T> {
    pub width: usize,
    pub height: usize,
    pub data: &'a [T],
}

impl<'a> From<&'a Image> for Rgb<'a, f32> {
    fn from(img: &'a Image) -> Self {
        Rgb {
            width: img.width,
            height: img.height,
            data: &img.data,
        }
    }
}

impl<'a, T> Rgb<'a, T> {
    pub fn new(width: usize, height: usize, data: &'a [T]) -> Self {
        debug_assert_eq!(data.len(), width * height * 3);
        Self {
            width,
            height,
            data,
        }
    }

    fn dims(&self) -> (usize, usize) {
        (self.width, self.height)
    }
}

fn check_dims(expected: (usize, usize), got: (usize, usize)) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}

fn weight_at<T: Real>(weights: Option<&WeightMap>, i: usize) -> T {
    match weights {
        Some(w) => T::lit(w.data[i] as f64),
        None => T::one(),
    }
}

/// Scalar loss together with its gradient w.r.t. the rendered image.
#[derive(Debug, Clone)]
pub struct LossGrad<T> {
    pub value: T,
    pub grad: Vec<T>,
}

/// `(1/HW) Σ_x U′(x) · mean_c |Ĉ(x) − C(x)|`.
pub fn weighted_l1<T: Real>(
    weights: Option<&WeightMap>,
    rendered: Rgb<'_, T>,
    target: Rgb<'_, T>,
) -> Result<LossGrad<T>> {
    check_dims(rendered.dims(), target.dims())?;
    if let Some(w) = weights {
        check_dims(rendered.dims(), w.dims())?;
    }
    let n = rendered.width * rendered.height;
    let inv_n = T::one() / T::lit(n as f64);
    let third = T::one() / T::lit(3.0);
    let mut grad = vec![T::zero(); n * 3];
    let mut total = T::zero();
    for i in 0..n {
        let w: T = weight_at(weights, i);
        let mut px = T::zero();
        for c in 0..3 {
            let d = rendered.data[i * 3 + c] - target.data[i * 3 + c];
            px = px + d.abs();
            let sign = if d > T::zero() {
                T::one()
            } else if d < T::zero() {
                -T::one()
            } else {
                T::zero()
            };
            grad[i * 3 + c] = w * sign * third * inv_n;
        }
        total = total + w * (px * third);
    }
    Ok(LossGrad {
        value: total * inv_n,
        grad,
    })
}

fn gaussian_window<T: Real>() -> Vec<T> {
    let r = (SSIM_WINDOW / 2) as i64;
    let raw: Vec<f64> = (-r..=r)
        .map(|k| (-(k * k) as f64 / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let sum: f64 = raw.iter().sum();
    raw.into_iter().map(|v| T::lit(v / sum)).collect()
}

/// Mirror index into `[0, n)` without repeating the edge sample.
#[inline]
fn reflect(i: i64, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as i64 - 1);
    let m = i.rem_euclid(period);
    (if m < n as i64 { m } else { period - m }) as usize
}

fn reflect_table(n: usize, r: usize) -> Vec<usize> {
    (0..n + 2 * r).map(|i| reflect(i as i64 - r as i64, n)).collect()
}

/// Separable Gaussian blur of a single-channel plane with reflect padding.
fn blur<T: Real>(src: &[T], w: usize, h: usize, win: &[T]) -> Vec<T> {
    let r = win.len() / 2;
    let xs = reflect_table(w, r);
    let ys = reflect_table(h, r);
    let mut tmp = vec![T::zero(); w * h];
    let mut padded = vec![T::zero(); w + 2 * r];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for (p, &sx) in padded.iter_mut().zip(&xs) {
            *p = row[sx];
        }
        let out = &mut tmp[y * w..(y + 1) * w];
        for (x, o) in out.iter_mut().enumerate() {
            let mut acc = T::zero();
            for (&wk, &v) in win.iter().zip(&padded[x..x + win.len()]) {
                acc = acc + wk * v;
            }
            *o = acc;
        }
    }
    let mut out = vec![T::zero(); w * h];
    for y in 0..h {
        for (k, &wk) in win.iter().enumerate() {
            let sy = ys[y + k];
            let src_row = &tmp[sy * w..(sy + 1) * w];
            let dst_row = &mut out[y * w..(y + 1) * w];
            for (d, &v) in dst_row.iter_mut().zip(src_row) {
                *d = *d + wk * v;
            }
        }
    }
    out
}

/// Adjoint of [`blur`].
fn blur_adjoint<T: Real>(g: &[T], w: usize, h: usize, win: &[T]) -> Vec<T> {
    let r = win.len() / 2;
    let xs = reflect_table(w, r);
    let ys = reflect_table(h, r);
    let mut tmp = vec![T::zero(); w * h];
    for y in 0..h {
        let g_row = &g[y * w..(y + 1) * w];
        for (k, &wk) in win.iter().enumerate() {
            let sy = ys[y + k];
            let dst = &mut tmp[sy * w..(sy + 1) * w];
            for (d, &v) in dst.iter_mut().zip(g_row) {
                *d = *d + wk * v;
            }
        }
    }
    let mut out = vec![T::zero(); w * h];
    let mut padded = vec![T::zero(); w + 2 * r];
    for y in 0..h {
        padded.iter_mut().for_each(|p| *p = T::zero());
        for x in 0..w {
            let gv = tmp[y * w + x];
            for (p, &wk) in padded[x..x + win.len()].iter_mut().zip(win) {
                *p = *p + wk * gv;
            }
        }
        let row = &mut out[y * w..(y + 1) * w];
        for (&p, &sx) in padded.iter().zip(&xs) {
            row[sx] = row[sx] + p;
        }
    }
    out
}

struct SsimChannel<T> {
    x: Vec<T>,
    y: Vec<T>,
    mu_x: Vec<T>,
    mu_y: Vec<T>,
    a1: Vec<T>,
    a2: Vec<T>,
    b1: Vec<T>,
    b2: Vec<T>,
}

fn ssim_channel<T: Real>(a: Rgb<'_, T>, b: Rgb<'_, T>, c: usize, win: &[T]) -> SsimChannel<T> {
    let (w, h) = a.dims();
    let n = w * h;
    let x: Vec<T> = (0..n).map(|i| a.data[i * 3 + c]).collect();
    let y: Vec<T> = (0..n).map(|i| b.data[i * 3 + c]).collect();
    let xx: Vec<T> = x.iter().map(|&v| v * v).collect();
    let yy: Vec<T> = y.iter().map(|&v| v * v).collect();
    let xy: Vec<T> = x.iter().zip(&y).map(|(&u, &v)| u * v).collect();
    let mu_x = blur(&x, w, h, win);
    let mu_y = blur(&y, w, h, win);
    let e_xx = blur(&xx, w, h, win);
    let e_yy = blur(&yy, w, h, win);
    let e_xy = blur(&xy, w, h, win);
    let c1 = T::lit((SSIM_K1 * 1.0) * (SSIM_K1 * 1.0));
    let c2 = T::lit((SSIM_K2 * 1.0) * (SSIM_K2 * 1.0));
    let two = T::lit(2.0);
    let mut a1 = vec![T::zero(); n];
    let mut a2 = vec![T::zero(); n];
    let mut b1 = vec![T::zero(); n];
    let mut b2 = vec![T::zero(); n];
    for i in 0..n {
        let (mx, my) = (mu_x[i], mu_y[i]);
        let sxx = e_xx[i] - mx * mx;
        let syy = e_yy[i] - my * my;
        let sxy = e_xy[i] - mx * my;
        a1[i] = two * mx * my + c1;
        a2[i] = two * sxy + c2;
        b1[i] = mx * mx + my * my + c1;
        b2[i] = sxx + syy + c2;
    }
    SsimChannel {
        x,
        y,
        mu_x,
        mu_y,
        a1,
        a2,
        b1,
        b2,
    }
}

/// Per-pixel SSIM (11×11 Gaussian window, σ = 1.5, K1 = 0.01, K2 = 0.03,
/// dynamic range 1) averaged over the three channels.
pub fn ssim_map<T: Real>(a: Rgb<'_, T>, b: Rgb<'_, T>) -> Result<Vec<T>> {
    check_dims(a.dims(), b.dims())?;
    let win = gaussian_window::<T>();
    let n = a.width * a.height;
    let third = T::one() / T::lit(3.0);
    let mut map = vec![T::zero(); n];
    for c in 0..3 {
        let ch = ssim_channel(a, b, c, &win);
        for i in 0..n {
            map[i] = map[i] + ch.a1[i] * ch.a2[i] / (ch.b1[i] * ch.b2[i]) * third;
        }
    }
    Ok(map)
}

/// `mean_x U′(x) · (1 − SSIM(x))` with its gradient w.r.t. `rendered`.
pub fn weighted_ssim_loss<T: Real>(
    weights: Option<&WeightMap>,
    rendered: Rgb<'_, T>,
    target: Rgb<'_, T>,
) -> Result<LossGrad<T>> {
    check_dims(rendered.dims(), target.dims())?;
    if let Some(w) = weights {
        check_dims(rendered.dims(), w.dims())?;
    }
    let (w, h) = rendered.dims();
    let n = w * h;
    let win = gaussian_window::<T>();
    let inv_n = T::one() / T::lit(n as f64);
    let third = T::one() / T::lit(3.0);
    let two = T::lit(2.0);
    let mut ssim = vec![T::zero(); n];
    let mut grad = vec![T::zero(); n * 3];
    for c in 0..3 {
        let ch = ssim_channel(rendered, target, c, &win);
        let mut g_mu = vec![T::zero(); n];
        let mut g_xx = vec![T::zero(); n];
        let mut g_xy = vec![T::zero(); n];
        for i in 0..n {
            let (a1, a2, b1, b2) = (ch.a1[i], ch.a2[i], ch.b1[i], ch.b2[i]);
            let den = b1 * b2;
            let s = a1 * a2 / den;
            ssim[i] = ssim[i] + s * third;
            let upstream = -weight_at::<T>(weights, i) * third * inv_n;
            let (mx, my) = (ch.mu_x[i], ch.mu_y[i]);
            let d_mu = (two * my * a2 - two * my * a1) / den - s * (two * mx / b1 - two * mx / b2);
            g_mu[i] = upstream * d_mu;
            g_xx[i] = upstream * (-s / b2);
            g_xy[i] = upstream * (two * a1 / den);
        }
        let a_mu = blur_adjoint(&g_mu, w, h, &win);
        let a_xx = blur_adjoint(&g_xx, w, h, &win);
        let a_xy = blur_adjoint(&g_xy, w, h, &win);
        for i in 0..n {
            grad[i * 3 + c] = a_mu[i] + two * ch.x[i] * a_xx[i] + ch.y[i] * a_xy[i];
        }
    }
    let mut total = T::zero();
    for i in 0..n {
        total = total + weight_at::<T>(weights, i) * (T::one() - ssim[i]);
    }
    Ok(LossGrad {
        value: total * inv_n,
        grad,
    })
}

/// Mean over Gaussians of the product of the three scales, with its gradient
/// w.r.t. each log-scale.
pub fn volume_reg<T: Real>(gaussians: &[Gaussian3D<T>]) -> (T, Vec<[T; 3]>) {
    if gaussians.is_empty() {
        return (T::zero(), Vec::new());
    }
    let inv_k = T::one() / T::lit(gaussians.len() as f64);
    let mut total = T::zero();
    let grads = gaussians
        .iter()
        .map(|g| {
            let s = g.log_scale.map(clamped_scale);
            let prod = s[0] * s[1] * s[2];
            total = total + prod;
            [0, 1, 2].map(|d| {
                if scale_unclamped(g.log_scale[d]) {
                    prod * inv_k
                } else {
                    T::zero()
                }
            })
        })
        .collect();
    (total * inv_k, grads)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LossWeights {
    pub lambda_ssim: f64,
    pub lambda_vol: f64,
}

impl Default for LossWeights {
    fn default() -> Self {
        Self {
            lambda_ssim: LAMBDA_SSIM,
            lambda_vol: LAMBDA_VOL,
        }
    }
}

impl LossWeights {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.lambda_ssim) || !(self.lambda_vol >= 0.0) {
            return Err(Error::InvalidArgument(format!(
                "need lambda_ssim in [0, 1) and lambda_vol >= 0, got {} / {}",
                self.lambda_ssim, self.lambda_vol
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub struct LossBreakdown<T = f32> {
    pub l_color: T,
    pub l_ssim: T,
    pub l_vol: T,
    pub total: T,
    /// `∂total/∂rendered`, row-major RGB.
    pub d_color: Vec<T>,
    /// `∂total/∂alpha`; the photometric losses do not depend on alpha.
    pub d_alpha: Vec<T>,
    /// `∂total/∂log_scale` from the volume term.
    pub d_log_scale: Vec<[T; 3]>,
}

/// `(1 − λ_SSIM)·L_color + λ_SSIM·L_SSIM + λ_vol·L_vol`.
pub fn total_loss<T: Real>(
    weights: Option<&WeightMap>,
    rendered: Rgb<'_, T>,
    target: Rgb<'_, T>,
    gaussians: &[Gaussian3D<T>],
    lambdas: LossWeights,
) -> Result<LossBreakdown<T>> {
    lambdas.validate()?;
    let l1 = weighted_l1(weights, rendered, target)?;
    let ssim = weighted_ssim_loss(weights, rendered, target)?;
    let (vol, vol_grad) = volume_reg(gaussians);
    let ls = T::lit(lambdas.lambda_ssim);
    let lc = T::one() - ls;
    let lv = T::lit(lambdas.lambda_vol);
    let d_color = l1
        .grad
        .iter()
        .zip(&ssim.grad)
        .map(|(&a, &b)| lc * a + ls * b)
        .collect();
    Ok(LossBreakdown {
        l_color: l1.value,
        l_ssim: ssim.value,
        l_vol: vol,
        total: lc * l1.value + ls * ssim.value + lv * vol,
        d_color,
        d_alpha: vec![T::zero(); rendered.width * rendered.height],
        d_log_scale: vol_grad.into_iter().map(|g| g.map(|v| lv * v)).collect(),
    })
}

/// `10·log10(1/MSE)` over all pixels and channels; `+∞` when identical.
pub fn psnr(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let mse = a
        .data
        .iter()
        .zip(&b.data)
        .map(|(&x, &y)| {
            let d = x as f64 - y as f64;
            d * d
        })
        .sum::<f64>()
        / a.data.len() as f64;
    if mse == 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok(10.0 * (1.0 / mse).log10())
}

/// Mean SSIM over all pixels.
pub fn ssim(a: &Image, b: &Image) -> Result<f64> {
    a.ensure_same_dims(b)?;
    let a64: Vec<f64> = a.data.iter().map(|&v| v as f64).collect();
    let b64: Vec<f64> = b.data.iter().map(|&v| v as f64).collect();
    let map = ssim_map(
        Rgb::new(a.width, a.height, &a64),
        Rgb::new(b.width, b.height, &b64),
    )?;
    Ok(map.iter().sum::<f64>() / map.len() as f64)
}
