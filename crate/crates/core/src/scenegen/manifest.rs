use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use nalgebra::{Quaternion, Vector3};

use super::{build_mesh, SceneBundle, SceneSpec, SceneView, Split};
use crate::error::{Error, Result};
use crate::geometry::{Camera, RigidTransform};
use crate::image::{Image, ScalarMap};
use crate::train::ColoredPoint;

pub const MANIFEST_HEADER: &str = "SCENE-UC/1";
pub const MANIFEST_NAME: &str = "manifest.txt";
pub const POINTS_NAME: &str = "points.bin";

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestCamera {
    pub id: String,
    pub split: Split,
    pub camera: Camera,
    /// Paths relative to the manifest directory.
    pub image: PathBuf,
    pub depth: PathBuf,
}

/// Text description of a generated scene.
///
/// ```text
/// SCENE-UC/1
/// spec <key> = <value>
/// points <path>
/// camera <id> <split> fx fy cx cy w h qw qx qy qz tx ty tz <image> <depth>
/// ```
#[derive(Debug, Clone, PartialEq)]
pub struct SceneManifest {
    pub spec: SceneSpec,
    pub points: PathBuf,
    pub cameras: Vec<ManifestCamera>,
}

impl SceneManifest {
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{MANIFEST_HEADER}");
        for (k, v) in self.spec.entries() {
            let _ = writeln!(s, "spec {k} = {v}");
        }
        let _ = writeln!(s, "points {}", self.points.display());
        for c in &self.cameras {
            let cam = &c.camera;
            let q = cam.pose.rotation().quaternion();
            let t = cam.pose.translation();
            let _ = writeln!(
                s,
                "camera {} {} {} {} {} {} {} {} {} {} {} {} {} {} {} {} {}",
                c.id,
                c.split.tag(),
                cam.fx,
                cam.fy,
                cam.cx,
                cam.cy,
                cam.width,
                cam.height,
                q.w,
                q.i,
                q.j,
                q.k,
                t.x,
                t.y,
                t.z,
                c.image.display(),
                c.depth.display()
            );
        }
        s
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let bad = |line: usize, why: &str| Error::format(path, format!("line {line}: {why}"));
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h.trim() == MANIFEST_HEADER => {}
            _ => return Err(Error::format(path, format!("missing `{MANIFEST_HEADER}` header"))),
        }
        let mut spec = SceneSpec::default();
        let mut points = None;
        let mut cameras = Vec::new();
        for (i, raw) in lines {
            let n = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (kind, rest) = line.split_once(' ').ok_or_else(|| bad(n, "expected a keyword and fields"))?;
            match kind {
                "spec" => {
                    let (k, v) = rest.split_once('=').ok_or_else(|| bad(n, "expected spec key = value"))?;
                    spec.set(k, v).map_err(|e| bad(n, &e.to_string()))?;
                }
                "points" => points = Some(PathBuf::from(rest.trim())),
                "camera" => {
                    let f: Vec<&str> = rest.split_whitespace().collect();
                    if f.len() != 17 {
                        return Err(bad(n, &format!("camera needs 17 fields, got {}", f.len())));
                    }
                    let num = |k: usize| -> Result<f64> {
                        f[k].parse().map_err(|_| bad(n, &format!("bad number `{}`", f[k])))
                    };
                    let int = |k: usize| -> Result<u32> {
                        f[k].parse().map_err(|_| bad(n, &format!("bad integer `{}`", f[k])))
                    };
                    let split: Split = f[1].parse().map_err(|e: Error| bad(n, &e.to_string()))?;
                    let pose = RigidTransform::new(
                        Quaternion::new(num(8)?, num(9)?, num(10)?, num(11)?),
                        Vector3::new(num(12)?, num(13)?, num(14)?),
                    );
                    let camera = Camera::new(num(2)?, num(3)?, num(4)?, num(5)?, int(6)?, int(7)?, pose)
                        .map_err(|e| bad(n, &e.to_string()))?;
                    cameras.push(ManifestCamera {
                        id: f[0].to_string(),
                        split,
                        camera,
                        image: PathBuf::from(f[15]),
                        depth: PathBuf::from(f[16]),
                    });
                }
                other => return Err(bad(n, &format!("unknown keyword `{other}`"))),
            }
        }
        spec.validate().map_err(|e| Error::format(path, e.to_string()))?;
        let points = points.ok_or_else(|| Error::format(path, "no points entry"))?;
        Ok(Self { spec, points, cameras })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    pub fn cameras_in(&self, split: Split) -> Vec<&ManifestCamera> {
        self.cameras.iter().filter(|c| c.split == split).collect()
    }
}

pub fn write_points(points: &[ColoredPoint], path: &Path) -> Result<()> {
    let mut buf = Vec::with_capacity(points.len() * 24);
    for p in points {
        for v in p.position.iter().map(|&v| v as f32).chain(p.color) {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

pub fn read_points(path: &Path) -> Result<Vec<ColoredPoint>> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 24 != 0 {
        return Err(Error::format(path, "point cloud size is not a multiple of 24 bytes"));
    }
    Ok(bytes
        .chunks_exact(24)
        .map(|c| {
            let f = |k: usize| f32::from_le_bytes(c[4 * k..4 * k + 4].try_into().unwrap());
            ColoredPoint {
                position: [f(0) as f64, f(1) as f64, f(2) as f64],
                color: [f(3), f(4), f(5)],
            }
        })
        .collect())
}

impl SceneBundle {
    pub fn manifest(&self) -> SceneManifest {
        SceneManifest {
            spec: self.spec.clone(),
            points: PathBuf::from(POINTS_NAME),
            cameras: self
                .views
                .iter()
                .map(|v| ManifestCamera {
                    id: v.id.clone(),
                    split: v.split,
                    camera: v.camera,
                    image: PathBuf::from(format!("images/{}.png", v.id)),
                    depth: PathBuf::from(format!("depth/{}.ucmap", v.id)),
                })
                .collect(),
        }
    }

    /// Writes `manifest.txt`, images, depth maps and the point cloud into
    /// `dir`; returns the manifest path.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        for sub in ["images", "depth"] {
            let d = dir.join(sub);
            std::fs::create_dir_all(&d).map_err(|e| Error::io(&d, e))?;
        }
        let manifest = self.manifest();
        for (v, c) in self.views.iter().zip(&manifest.cameras) {
            v.image.save_png(dir.join(&c.image))?;
            v.depth.save(dir.join(&c.depth))?;
        }
        write_points(&self.points, &dir.join(&manifest.points))?;
        let path = dir.join(MANIFEST_NAME);
        std::fs::write(&path, manifest.to_text()).map_err(|e| Error::io(&path, e))?;
        Ok(path)
    }

    /// Reads a saved bundle; geometry is regenerated from the spec echo.
    pub fn load(manifest_path: impl AsRef<Path>) -> Result<Self> {
        let path = manifest_path.as_ref();
        let manifest = SceneManifest::load(path)?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let views = manifest
            .cameras
            .iter()
            .map(|c| {
                Ok(SceneView {
                    id: c.id.clone(),
                    split: c.split,
                    camera: c.camera,
                    image: Image::load_png(dir.join(&c.image))?,
                    depth: ScalarMap::load(dir.join(&c.depth))?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SceneBundle {
            mesh: build_mesh(&manifest.spec),
            points: read_points(&dir.join(&manifest.points))?,
            spec: manifest.spec,
            views,
        })
    }
}
