//! Gaussian splatting for road scenes trained jointly on ground and aerial
//! views, with aerial pixels weighted by ground-view ensemble uncertainty
//! projected across views.

pub mod error;
pub mod evaluation;
pub mod gaussian;
pub mod geometry;
pub mod image;
pub mod losses;
pub mod raster;
pub mod real;
pub mod scenegen;
pub mod train;
pub mod uncertainty;

pub use error::{Error, Result};
pub use gaussian::{Gaussian3D, GaussianField, Splat2D};
pub use geometry::{Camera, RigidTransform};
pub use image::{Image, ScalarMap};
pub use raster::{render, render_backward, render_depth, RasterSettings, RenderOutput};
pub use real::Real;
