//! Tile-based alpha-compositing rasterizer for 3D Gaussians with an analytic
//! backward pass.
//!
//! Each pixel composites the splats overlapping it front to back:
//! `c(p) = Σ c_i α_i Π_{j<i} (1 - α_j)`, with the remaining transmittance
//! multiplied into the background. The same weights composite depth.

mod backward;
mod forward;
pub mod reference;

pub use backward::{rasterize_backward, Gradients};
pub use forward::{rasterize, RenderOutput};

use crate::error::Result;
use crate::gaussian::GaussianField;
use crate::geometry::Camera;
use crate::image::ScalarMap;

/// Pixels with accumulated alpha at or below this carry no depth.
pub const DEPTH_ALPHA_MIN: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterSettings {
    pub tile_size: usize,
    /// Upper bound on a single splat's alpha.
    pub alpha_clamp: f64,
    /// Compositing stops once transmittance falls below this.
    pub transmittance_cutoff: f64,
    /// Contributions with alpha below this are skipped; tile binning uses the
    /// matching ellipse so tiling never changes the image.
    pub alpha_min: f64,
}

impl Default for RasterSettings {
    fn default() -> Self {
        Self {
            tile_size: 16,
            alpha_clamp: 0.99,
            transmittance_cutoff: 1e-4,
            alpha_min: 1e-5,
        }
    }
}

impl RasterSettings {
    /// No alpha skip threshold: every splat touches every pixel, which makes the
    /// rendered image a smooth function of the parameters (up to sort-order
    /// changes and the transmittance cutoff). Used for gradient checks.
    pub fn exhaustive() -> Self {
        Self {
            alpha_min: 0.0,
            ..Self::default()
        }
    }
}

/// Per-Gaussian gradients for an `f32` field.
pub type FieldGradients = Gradients<f32>;

pub fn render(field: &GaussianField, camera: &Camera, background: [f32; 3]) -> RenderOutput<f32> {
    rasterize(&field.gaussians, camera, background, &RasterSettings::default())
}

pub fn render_with(
    field: &GaussianField,
    camera: &Camera,
    background: [f32; 3],
    settings: &RasterSettings,
) -> RenderOutput<f32> {
    rasterize(&field.gaussians, camera, background, settings)
}

/// Gradients of `Σ ⟨d_color, c(p)⟩ + ⟨d_alpha, α(p)⟩` for every Gaussian parameter.
pub fn render_backward(
    field: &GaussianField,
    camera: &Camera,
    output: &RenderOutput<f32>,
    d_color: &[f32],
    d_alpha: &[f32],
) -> Result<FieldGradients> {
    rasterize_backward(&field.gaussians, camera, output, d_color, d_alpha)
}

/// Expected depth per pixel; NaN where accumulated alpha is at most [`DEPTH_ALPHA_MIN`].
pub fn render_depth(field: &GaussianField, camera: &Camera) -> ScalarMap {
    render(field, camera, [0.0; 3]).depth_map()
}

/// Tile grid with per-tile splat lists sorted front to back.
#[derive(Debug, Clone)]
pub(crate) struct TileBins {
    pub tile_size: usize,
    pub tiles_x: usize,
    pub lists: Vec<Vec<u32>>,
}

impl TileBins {
    pub fn tile_bounds(&self, tile: usize, width: usize, height: usize) -> (usize, usize, usize, usize) {
        let tx = tile % self.tiles_x;
        let ty = tile / self.tiles_x;
        let x0 = tx * self.tile_size;
        let y0 = ty * self.tile_size;
        (
            x0,
            y0,
            (x0 + self.tile_size).min(width),
            (y0 + self.tile_size).min(height),
        )
    }
}
