//! Python bindings: scenes, fields, rendering, training and the uncertainty chain.

use std::path::PathBuf;

use nalgebra::Vector3;
use pyo3::exceptions::{PyIndexError, PyKeyError, PyRuntimeError, PyValueError};
use pyo3::prelude::*;

use cvgs::evaluation::{evaluate_split, training_set};
use cvgs::scenegen::{generate, SceneBundle, SceneSpec, Split};
use cvgs::train::{train_from_points, Regime, TrainConfig as CoreConfig};
use cvgs::uncertainty::{ensemble_stats, fuse_channels, normalize_maps, CrossViewWeights, UncertaintyMap};

fn err(e: cvgs::Error) -> PyErr {
    match e {
        cvgs::Error::InvalidArgument(_) | cvgs::Error::DimensionMismatch { .. } | cvgs::Error::Empty(_) => {
            PyValueError::new_err(e.to_string())
        }
        _ => PyRuntimeError::new_err(e.to_string()),
    }
}

fn image_from(width: usize, height: usize, data: Vec<f32>) -> PyResult<cvgs::Image> {
    if data.len() != width * height * 3 {
        return Err(PyValueError::new_err(format!(
            "expected {} values for a {width}x{height} RGB image, got {}",
            width * height * 3,
            data.len()
        )));
    }
    Ok(cvgs::Image { width, height, data })
}

/// Pinhole camera with a world-to-camera pose.
#[pyclass(name = "Camera", frozen, skip_from_py_object)]
#[derive(Clone)]
struct PyCamera(cvgs::Camera);

#[pymethods]
impl PyCamera {
    #[getter]
    fn width(&self) -> u32 {
        self.0.width
    }
    #[getter]
    fn height(&self) -> u32 {
        self.0.height
    }
    #[getter]
    fn intrinsics(&self) -> (f64, f64, f64, f64) {
        (self.0.fx, self.0.fy, self.0.cx, self.0.cy)
    }
    #[getter]
    fn center(&self) -> (f64, f64, f64) {
        let c = self.0.center();
        (c.x, c.y, c.z)
    }

    /// `(x, y, depth)` of a world point, or None when it is behind the camera.
    fn project(&self, point: (f64, f64, f64)) -> Option<(f64, f64, f64)> {
        let p = self.0.project_point(&nalgebra_point(point));
        (!p.behind).then_some((p.pixel.x, p.pixel.y, p.depth))
    }

    fn __repr__(&self) -> String {
        let c = self.0.center();
        format!(
            "Camera({}x{}, f=({:.3}, {:.3}), center=({:.3}, {:.3}, {:.3}))",
            self.0.width, self.0.height, self.0.fx, self.0.fy, c.x, c.y, c.z
        )
    }
}

fn nalgebra_point(p: (f64, f64, f64)) -> Vector3<f64> {
    Vector3::new(p.0, p.1, p.2)
}

/// Flat `key = value` training configuration.
#[pyclass(name = "TrainConfig", skip_from_py_object)]
#[derive(Clone)]
struct PyTrainConfig(CoreConfig);

#[pymethods]
impl PyTrainConfig {
    /// Defaults, with `overrides` applied as `key -> value` strings or numbers.
    #[new]
    #[pyo3(signature = (**overrides))]
    fn new(overrides: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<Self> {
        let mut cfg = CoreConfig::default();
        if let Some(d) = overrides {
            for (k, v) in d.iter() {
                let key: String = k.extract()?;
                let value = v.str()?.to_string();
                cfg.set(&key, &value).map_err(err)?;
            }
        }
        cfg.validate().map_err(err)?;
        Ok(Self(cfg))
    }

    #[staticmethod]
    fn parse(text: &str) -> PyResult<Self> {
        CoreConfig::parse(text).map(Self).map_err(err)
    }

    fn set(&mut self, key: &str, value: &Bound<'_, PyAny>) -> PyResult<()> {
        self.0.set(key, &value.str()?.to_string()).map_err(err)
    }

    fn to_text(&self) -> String {
        self.0.to_text()
    }

    #[getter]
    fn iterations(&self) -> u64 {
        self.0.iterations
    }
    #[getter]
    fn seed(&self) -> u64 {
        self.0.seed
    }
    #[getter]
    fn root_n(&self) -> f64 {
        self.0.root_n
    }
    #[getter]
    fn members(&self) -> usize {
        self.0.members
    }
}

/// A set of 3D Gaussians.
#[pyclass(name = "GaussianField", skip_from_py_object)]
#[derive(Clone)]
struct PyField(cvgs::GaussianField);

#[pymethods]
impl PyField {
    #[staticmethod]
    fn load(path: PathBuf) -> PyResult<Self> {
        cvgs::GaussianField::load(path).map(Self).map_err(err)
    }

    fn save(&self, path: PathBuf) -> PyResult<()> {
        self.0.save(path).map_err(err)
    }

    fn __len__(&self) -> usize {
        self.0.len()
    }

    /// Parameters of Gaussian `i` as 14 floats: mu, quaternion (w, x, y, z),
    /// log-scale, opacity logit, color.
    fn params(&self, i: usize) -> PyResult<Vec<f32>> {
        self.0
            .gaussians
            .get(i)
            .map(|g| g.to_array().to_vec())
            .ok_or_else(|| PyIndexError::new_err(format!("gaussian {i} out of range")))
    }

    /// Renders at `camera`: `(color, alpha, depth)` as flat row-major lists
    /// (color interleaved RGB; depth NaN where nothing was hit).
    #[pyo3(signature = (camera, background = (0.0, 0.0, 0.0)))]
    fn render(&self, camera: &PyCamera, background: (f32, f32, f32)) -> (Vec<f32>, Vec<f32>, Vec<f32>) {
        let out = cvgs::render(&self.0, &camera.0, [background.0, background.1, background.2]);
        let depth = out.depth_map().data;
        (out.color, out.alpha, depth)
    }
}

/// A generated scene loaded from its manifest.
#[pyclass(name = "Scene")]
struct PyScene(SceneBundle);

fn parse_split(split: &str) -> PyResult<Split> {
    split.parse().map_err(err)
}

#[pymethods]
impl PyScene {
    #[staticmethod]
    fn load(manifest: PathBuf) -> PyResult<Self> {
        SceneBundle::load(manifest).map(Self).map_err(err)
    }

    /// View ids of one split (`ground_train`, `aerial_train`, `held_out`,
    /// `shifted`, `shifted_rotated`).
    fn view_ids(&self, split: &str) -> PyResult<Vec<String>> {
        Ok(self.0.split(parse_split(split)?).iter().map(|v| v.id.clone()).collect())
    }

    fn camera(&self, id: &str) -> PyResult<PyCamera> {
        self.0
            .view(id)
            .map(|v| PyCamera(v.camera))
            .ok_or_else(|| PyKeyError::new_err(id.to_string()))
    }

    /// Ground-truth image of a view as a flat RGB list.
    fn image(&self, id: &str) -> PyResult<Vec<f32>> {
        self.0
            .view(id)
            .map(|v| v.image.data.clone())
            .ok_or_else(|| PyKeyError::new_err(id.to_string()))
    }

    #[getter]
    fn sky(&self) -> (f32, f32, f32) {
        let s = self.0.spec.sky;
        (s[0], s[1], s[2])
    }

    #[getter]
    fn point_count(&self) -> usize {
        self.0.points.len()
    }

    /// Trains one regime (`ground`, `joint` or `uc`) with the sky as background.
    /// Returns the field and the per-iteration total loss.
    #[pyo3(signature = (regime, config, weights_dir = None))]
    fn train(
        &self,
        py: Python<'_>,
        regime: &str,
        config: &PyTrainConfig,
        weights_dir: Option<PathBuf>,
    ) -> PyResult<(PyField, Vec<f32>)> {
        let regime: Regime = regime.parse().map_err(err)?;
        let cfg = CoreConfig {
            background: self.0.spec.sky,
            ..config.0.clone()
        };
        let maps = match (regime, weights_dir) {
            (Regime::Uncertainty, Some(dir)) => Some(
                CrossViewWeights::load_weights(dir, self.0.split(Split::AerialTrain).len()).map_err(err)?,
            ),
            (Regime::Uncertainty, None) => {
                return Err(PyValueError::new_err("the uc regime needs weights_dir"));
            }
            _ => None,
        };
        let bundle = &self.0;
        let outcome = py
            .detach(|| {
                let set = training_set(bundle, regime, maps.as_deref())?;
                train_from_points(&bundle.points, &set, &cfg)
            })
            .map_err(err)?;
        Ok((PyField(outcome.field), outcome.trace.iter().map(|r| r.total).collect()))
    }

    /// Mean `(psnr, ssim)` of a field on a split.
    fn evaluate(&self, field: &PyField, split: &str) -> PyResult<(f64, f64)> {
        let m = evaluate_split(&field.0, &self.0, parse_split(split)?, &CoreConfig::default().raster()).map_err(err)?;
        Ok((m.psnr, m.ssim))
    }
}

/// Generates a scene into `out_dir` and returns the manifest path. Keyword
/// arguments override scene-spec keys.
#[pyfunction]
#[pyo3(signature = (out_dir, **spec))]
fn generate_scene(py: Python<'_>, out_dir: PathBuf, spec: Option<&Bound<'_, pyo3::types::PyDict>>) -> PyResult<PathBuf> {
    let mut s = SceneSpec::default();
    if let Some(d) = spec {
        for (k, v) in d.iter() {
            let key: String = k.extract()?;
            s.set(&key, &v.str()?.to_string()).map_err(err)?;
        }
    }
    py.detach(|| generate(&s).and_then(|b| b.save(&out_dir))).map_err(err)
}

/// Per-pixel population mean and variance of M equally sized RGB images.
#[pyfunction]
fn ensemble_mean_var(width: usize, height: usize, renders: Vec<Vec<f32>>) -> PyResult<(Vec<f32>, Vec<f32>)> {
    let images = renders
        .into_iter()
        .map(|d| image_from(width, height, d))
        .collect::<PyResult<Vec<_>>>()?;
    let (mean, var) = ensemble_stats(&images).map_err(err)?;
    Ok((mean.data, var.data))
}

/// Channel-fused uncertainty `mean_c ln(var_c + 1)` of an RGB variance image.
#[pyfunction]
fn fuse_variance(width: usize, height: usize, variance: Vec<f32>) -> PyResult<Vec<f32>> {
    Ok(fuse_channels(&image_from(width, height, variance)?).map_err(err)?.values)
}

/// Joint normalization of raw maps with root exponent `n`; every pixel is valid.
#[pyfunction]
fn normalize(raw: Vec<Vec<f32>>, n: f64) -> PyResult<Vec<Vec<f32>>> {
    let maps: Vec<UncertaintyMap> = raw
        .into_iter()
        .map(|values| UncertaintyMap {
            width: values.len(),
            height: 1,
            valid: vec![true; values.len()],
            values,
        })
        .collect();
    Ok(normalize_maps(&maps, n).map_err(err)?.into_iter().map(|w| w.data).collect())
}

/// PSNR between two RGB images given as flat lists in [0, 1].
#[pyfunction]
fn psnr(width: usize, height: usize, a: Vec<f32>, b: Vec<f32>) -> PyResult<f64> {
    cvgs::losses::psnr(&image_from(width, height, a)?, &image_from(width, height, b)?).map_err(err)
}

/// Mean SSIM (11-tap Gaussian window) between two RGB images.
#[pyfunction]
fn ssim(width: usize, height: usize, a: Vec<f32>, b: Vec<f32>) -> PyResult<f64> {
    cvgs::losses::ssim(&image_from(width, height, a)?, &image_from(width, height, b)?).map_err(err)
}

#[pymodule]
#[pyo3(name = "cvgs")]
fn cvgs_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<PyCamera>()?;
    m.add_class::<PyTrainConfig>()?;
    m.add_class::<PyField>()?;
    m.add_class::<PyScene>()?;
    m.add_function(wrap_pyfunction!(generate_scene, m)?)?;
    m.add_function(wrap_pyfunction!(ensemble_mean_var, m)?)?;
    m.add_function(wrap_pyfunction!(fuse_variance, m)?)?;
    m.add_function(wrap_pyfunction!(normalize, m)?)?;
    m.add_function(wrap_pyfunction!(psnr, m)?)?;
    m.add_function(wrap_pyfunction!(ssim, m)?)?;
    Ok(())
}
