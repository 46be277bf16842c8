//! Procedural road scenes with analytic ground truth, standing in for a
//! simulator-captured dataset.

mod manifest;
mod mesh;
mod raster;
mod spec;

use nalgebra::{Matrix3, Vector3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

pub use manifest::{ManifestCamera, SceneManifest, MANIFEST_HEADER};
pub use mesh::{build_mesh, ray_cast, ray_triangle, value_noise, Building, Material, Mesh, Triangle};
pub use raster::{render_mesh, GroundTruth, MESH_NEAR};
pub use spec::SceneSpec;

use crate::error::{Error, Result};
use crate::geometry::{Camera, RigidTransform};
use crate::image::{Image, ScalarMap};
use crate::train::ColoredPoint;

/// Required fraction of road surface seen by both ground and aerial cameras.
pub const MIN_COVISIBILITY: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Split {
    GroundTrain,
    AerialTrain,
    HeldOut,
    Shifted,
    ShiftedRotated,
}

impl Split {
    pub const ALL: [Split; 5] = [
        Split::GroundTrain,
        Split::AerialTrain,
        Split::HeldOut,
        Split::Shifted,
        Split::ShiftedRotated,
    ];
    /// Evaluation splits.
    pub const TEST: [Split; 3] = [Split::HeldOut, Split::Shifted, Split::ShiftedRotated];

    pub fn tag(self) -> &'static str {
        match self {
            Split::GroundTrain => "ground_train",
            Split::AerialTrain => "aerial_train",
            Split::HeldOut => "held_out",
            Split::Shifted => "shifted",
            Split::ShiftedRotated => "shifted_rotated",
        }
    }

    fn prefix(self) -> char {
        match self {
            Split::GroundTrain => 'g',
            Split::AerialTrain => 'a',
            Split::HeldOut => 'h',
            Split::Shifted => 's',
            Split::ShiftedRotated => 'r',
        }
    }
}

impl std::str::FromStr for Split {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Split::ALL
            .into_iter()
            .find(|sp| sp.tag() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown split `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneView {
    pub id: String,
    pub split: Split,
    pub camera: Camera,
    pub image: Image,
    pub depth: ScalarMap,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SceneBundle {
    pub spec: SceneSpec,
    pub mesh: Mesh,
    pub views: Vec<SceneView>,
    pub points: Vec<ColoredPoint>,
}

impl SceneBundle {
    pub fn split(&self, split: Split) -> Vec<&SceneView> {
        self.views.iter().filter(|v| v.split == split).collect()
    }

    pub fn cameras(&self, split: Split) -> Vec<Camera> {
        self.split(split).into_iter().map(|v| v.camera).collect()
    }

    pub fn view(&self, id: &str) -> Option<&SceneView> {
        self.views.iter().find(|v| v.id == id)
    }
}

fn view_id(split: Split, k: usize) -> String {
    format!("{}{k:03}", split.prefix())
}

fn camera_at(spec: &SceneSpec, center: Vector3<f64>, pitch_down_deg: f64) -> Result<Camera> {
    let f = spec.focal();
    let p = pitch_down_deg.to_radians();
    Camera::looking(
        f,
        f,
        (spec.width as f64 - 1.0) / 2.0,
        (spec.height as f64 - 1.0) / 2.0,
        spec.width,
        spec.height,
        center,
        Vector3::new(0.0, -p.sin(), p.cos()),
        Vector3::new(0.0, 1.0, 0.0),
    )
}

/// Rotation about the x axis by `angle` (right-handed).
pub fn rot_x(angle: f64) -> Matrix3<f64> {
    let (s, c) = angle.sin_cos();
    Matrix3::new(1.0, 0.0, 0.0, 0.0, c, -s, 0.0, s, c)
}

/// Same camera moved by `delta` in world coordinates.
pub fn shift_camera(cam: &Camera, delta: Vector3<f64>) -> Camera {
    let r = cam.pose.rotation_matrix();
    let t = cam.pose.translation() - r * delta;
    Camera {
        pose: RigidTransform::from_unit(*cam.pose.rotation(), t),
        ..*cam
    }
}

/// Same camera center, optical axis tilted toward image-down by `deg`.
pub fn pitch_camera_down(cam: &Camera, deg: f64) -> Result<Camera> {
    let center = cam.center();
    let c2w = cam.pose.rotation_matrix().transpose() * rot_x(-deg.to_radians());
    let w2c = c2w.transpose();
    let pose = RigidTransform::from_matrix(&w2c, -(w2c * center))?;
    Camera::new(cam.fx, cam.fy, cam.cx, cam.cy, cam.width, cam.height, pose)
}

fn ground_cameras(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Result<(Vec<Camera>, Vec<Camera>)> {
    let l = spec.road_length;
    let lane = spec.road_width / 4.0;
    let mut train = Vec::with_capacity(spec.ground_train);
    for k in 0..spec.ground_train {
        let z = l * k as f64 / spec.ground_train as f64;
        let x = if k % 2 == 0 { -lane } else { lane } + rng.random_range(-0.3..0.3);
        let y = spec.ground_heights[(k / 2) % 2];
        train.push(camera_at(spec, Vector3::new(x, y, z), 0.0)?);
    }
    let mut held = Vec::with_capacity(spec.held_out);
    for k in 0..spec.held_out {
        // between training positions, spread over the road
        let slot = (k as f64 + 0.5) / spec.held_out as f64;
        let step = l / spec.ground_train as f64;
        let z = (slot * l / step).floor() * step + 0.5 * step;
        let x = if k % 2 == 0 { lane } else { -lane } + rng.random_range(-0.3..0.3);
        let y = spec.ground_heights[k % 2];
        held.push(camera_at(spec, Vector3::new(x, y, z), 0.0)?);
    }
    Ok((train, held))
}

fn aerial_cameras(spec: &SceneSpec, rng: &mut ChaCha8Rng) -> Result<Vec<Camera>> {
    let ahead = spec.aerial_height / spec.aerial_pitch_deg.to_radians().tan();
    let lane = spec.road_width / 2.0;
    (0..spec.aerial_train)
        .map(|k| {
            let z = spec.road_length * k as f64 / spec.aerial_train as f64 - ahead;
            let x = [-lane, 0.0, lane][k % 3] + rng.random_range(-0.5..0.5);
            camera_at(spec, Vector3::new(x, spec.aerial_height, z), spec.aerial_pitch_deg)
        })
        .collect()
}

fn render_views(mesh: &Mesh, spec: &SceneSpec, cams: &[(String, Split, Camera)]) -> Result<Vec<SceneView>> {
    cams.par_iter()
        .map(|(id, split, cam)| {
            let gt = render_mesh(mesh, cam, spec.sky, spec.supersample);
            if !gt.depth.data.iter().any(|d| d.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "scene spec leaves camera {id} with no visible geometry"
                )));
            }
            Ok(SceneView {
                id: id.clone(),
                split: *split,
                camera: *cam,
                image: gt.image.quantized(),
                depth: gt.depth,
            })
        })
        .collect()
}

/// Whether world point `p` is unoccluded in a view with depth map `depth`.
///
/// The point must project inside the image and lie no farther than the
/// largest depth in the 3×3 pixel neighborhood, up to 1% + 5 cm.
pub fn visible_in(cam: &Camera, depth: &ScalarMap, p: &Vector3<f64>) -> bool {
    let proj = cam.project_point(p);
    if proj.behind || !cam.contains(&proj.pixel) {
        return false;
    }
    let (w, h) = (depth.width as i64, depth.height as i64);
    let (px, py) = (proj.pixel.x.round() as i64, proj.pixel.y.round() as i64);
    let mut far = f64::NEG_INFINITY;
    for dy in -1..=1 {
        for dx in -1..=1 {
            let (x, y) = (px + dx, py + dy);
            if x >= 0 && y >= 0 && x < w && y < h {
                let d = depth.get(x as usize, y as usize);
                if d.is_finite() {
                    far = far.max(d as f64);
                }
            }
        }
    }
    far.is_finite() && proj.depth <= far * 1.01 + 0.05
}

/// Whether the segment from the camera center to surface point `p` is free
/// of other geometry (1 mm slack) and `p` projects into the image.
pub fn ray_visible(mesh: &Mesh, cam: &Camera, p: &Vector3<f64>) -> bool {
    let proj = cam.project_point(p);
    if proj.behind || !cam.contains(&proj.pixel) {
        return false;
    }
    let o = cam.center();
    let d = p - o;
    let len = d.norm();
    match ray_cast(mesh, &o, &d) {
        Some((t, _)) => t * len >= len - 1e-3,
        None => true,
    }
}

/// Fraction of road surface (sampled every 0.5 m over the driven segment)
/// visible from at least one view of each set.
pub fn road_covisibility(mesh: &Mesh, a: &[&SceneView], b: &[&SceneView], road_length: f64) -> f64 {
    let hw = mesh.road_half_width;
    let (mut total, mut both) = (0usize, 0usize);
    let nx = (2.0 * hw / 0.5).floor() as usize;
    let nz = (road_length / 0.5).floor() as usize;
    for i in 0..=nx {
        for j in 0..=nz {
            let p = Vector3::new(-hw + 0.5 * i as f64, 0.0, 0.5 * j as f64);
            total += 1;
            let seen = |set: &[&SceneView]| set.iter().any(|v| visible_in(&v.camera, &v.depth, &p));
            if seen(a) && seen(b) {
                both += 1;
            }
        }
    }
    both as f64 / total.max(1) as f64
}

/// `+shift` elevated and elevated-plus-pitched copies of each held-out view.
pub fn make_test_variants(mesh: &Mesh, spec: &SceneSpec, held_out: &[&SceneView]) -> Result<Vec<SceneView>> {
    let mut cams = Vec::with_capacity(2 * held_out.len());
    let delta = Vector3::new(0.0, spec.view_shift, 0.0);
    for (k, v) in held_out.iter().enumerate() {
        let shifted = shift_camera(&v.camera, delta);
        cams.push((view_id(Split::Shifted, k), Split::Shifted, shifted));
    }
    for (k, v) in held_out.iter().enumerate() {
        let shifted = shift_camera(&v.camera, delta);
        let rotated = pitch_camera_down(&shifted, spec.test_pitch_deg)?;
        cams.push((view_id(Split::ShiftedRotated, k), Split::ShiftedRotated, rotated));
    }
    render_views(mesh, spec, &cams)
}

/// Area-uniform surface samples seen by at least `min_views` of `views`,
/// visibility confirmed by ray casting against `mesh`.
pub fn sample_init_points(
    mesh: &Mesh,
    views: &[&SceneView],
    count: usize,
    min_views: usize,
    seed: u64,
) -> Result<Vec<ColoredPoint>> {
    if count == 0 {
        return Err(Error::InvalidArgument("init point count must be positive".into()));
    }
    let mut cumulative = Vec::with_capacity(mesh.triangles.len());
    let mut acc = 0.0;
    for t in &mesh.triangles {
        acc += t.area();
        cumulative.push(acc);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(3);
    let mut out = Vec::with_capacity(count);
    let max_draws = count * 60;
    for _ in 0..max_draws {
        if out.len() == count {
            break;
        }
        let r = rng.random_range(0.0..acc);
        let ti = cumulative.partition_point(|&c| c <= r).min(mesh.triangles.len() - 1);
        let tri = &mesh.triangles[ti];
        let (u, v): (f64, f64) = (rng.random(), rng.random());
        let su = u.sqrt();
        let p = tri.v[0] * (1.0 - su) + tri.v[1] * (su * (1.0 - v)) + tri.v[2] * (su * v);
        // store what the f32 point cloud file can hold
        let p = p.map(|c| c as f32 as f64);
        // depth-map test first, exact ray cast to confirm
        let seen = views
            .iter()
            .filter(|view| visible_in(&view.camera, &view.depth, &p) && ray_visible(mesh, &view.camera, &p))
            .take(min_views)
            .count();
        if seen >= min_views {
            out.push(ColoredPoint {
                position: [p.x, p.y, p.z],
                color: mesh.shaded_color(tri, &p),
            });
        }
    }
    if out.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "no surface point is visible from {min_views} of the given cameras"
        )));
    }
    if out.len() < count {
        log::warn!("sampled {} of {count} requested init points", out.len());
    }
    Ok(out)
}

/// Builds the full bundle: geometry, all camera splits with ground truth, and
/// the initialization point cloud.
pub fn generate(spec: &SceneSpec) -> Result<SceneBundle> {
    spec.validate()?;
    let mesh = build_mesh(spec);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(4);
    let (ground, held) = ground_cameras(spec, &mut rng)?;
    let aerial = aerial_cameras(spec, &mut rng)?;
    let mut cams = Vec::new();
    for (split, list) in [(Split::GroundTrain, &ground), (Split::AerialTrain, &aerial), (Split::HeldOut, &held)] {
        for (k, c) in list.iter().enumerate() {
            cams.push((view_id(split, k), split, *c));
        }
    }
    let mut views = render_views(&mesh, spec, &cams)?;
    let by = |s: Split| views.iter().filter(|v| v.split == s).collect::<Vec<_>>();
    let covis = road_covisibility(&mesh, &by(Split::GroundTrain), &by(Split::AerialTrain), spec.road_length);
    if covis < MIN_COVISIBILITY {
        return Err(Error::InvalidArgument(format!(
            "only {:.1}% of the road is co-visible from ground and aerial cameras (need {:.0}%)",
            100.0 * covis,
            100.0 * MIN_COVISIBILITY
        )));
    }
    log::info!("road co-visibility {:.1}%", 100.0 * covis);
    let variants = make_test_variants(&mesh, spec, &by(Split::HeldOut))?;
    let points = sample_init_points(&mesh, &by(Split::GroundTrain), spec.init_points, 2, spec.seed)?;
    views.extend(variants);
    Ok(SceneBundle {
        spec: spec.clone(),
        mesh,
        views,
        points,
    })
}
