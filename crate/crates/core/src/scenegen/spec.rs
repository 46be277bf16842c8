use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// Parameters of a procedural road scene. The road runs along +z on the
/// ground plane `y = 0`; `+y` is up.
#[derive(Debug, Clone, PartialEq)]
pub struct SceneSpec {
    pub seed: u64,
    pub road_length: f64,
    pub road_width: f64,
    pub building_count: usize,
    pub building_height_min: f64,
    pub building_height_max: f64,
    /// Cell size of the asphalt value noise (m).
    pub texture_cell: f64,
    /// Dash period of lane markings (m).
    pub dash_period: f64,
    pub ground_train: usize,
    pub aerial_train: usize,
    pub held_out: usize,
    pub ground_heights: [f64; 2],
    pub test_heights: [f64; 2],
    pub test_pitch_deg: f64,
    pub aerial_height: f64,
    pub aerial_pitch_deg: f64,
    pub view_shift: f64,
    pub width: u32,
    pub height: u32,
    pub hfov_deg: f64,
    pub supersample: usize,
    pub init_points: usize,
    pub sky: [f32; 3],
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            seed: 0,
            road_length: 40.0,
            road_width: 8.0,
            building_count: 10,
            building_height_min: 4.0,
            building_height_max: 12.0,
            texture_cell: 0.25,
            dash_period: 3.0,
            ground_train: 60,
            aerial_train: 40,
            held_out: 12,
            ground_heights: [1.5, 1.8],
            test_heights: [1.6, 1.9],
            test_pitch_deg: 5.0,
            aerial_height: 10.0,
            aerial_pitch_deg: 60.0,
            view_shift: 0.1,
            width: 240,
            height: 120,
            hfov_deg: 90.0,
            supersample: 3,
            init_points: 3000,
            sky: [0.55, 0.7, 0.9],
        }
    }
}

fn parse_pair(value: &str) -> Option<[f64; 2]> {
    let v: Vec<f64> = value.split(',').map(|s| s.trim().parse().ok()).collect::<Option<_>>()?;
    (v.len() == 2).then(|| [v[0], v[1]])
}

impl SceneSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidArgument(format!("scene spec: {what}")));
        let lengths = [
            self.road_length,
            self.road_width,
            self.texture_cell,
            self.dash_period,
            self.aerial_height,
            self.hfov_deg,
            self.ground_heights[0],
            self.ground_heights[1],
            self.test_heights[0],
            self.test_heights[1],
        ];
        if lengths.iter().any(|v| !(*v > 0.0) || !v.is_finite()) {
            return bad("lengths must be positive");
        }
        if !(self.building_height_min > 0.0 && self.building_height_max >= self.building_height_min) {
            return bad("building heights must satisfy 0 < min <= max");
        }
        if !(self.aerial_pitch_deg > 0.0 && self.aerial_pitch_deg < 90.0) {
            return bad("aerial pitch must lie in (0, 90) degrees");
        }
        if !(self.test_pitch_deg >= 0.0 && self.test_pitch_deg < 90.0) {
            return bad("test pitch must lie in [0, 90) degrees");
        }
        if self.hfov_deg >= 180.0 {
            return bad("horizontal field of view must be below 180 degrees");
        }
        if self.ground_train == 0 || self.aerial_train == 0 || self.held_out == 0 {
            return bad("every split needs at least one camera");
        }
        if self.width == 0 || self.height == 0 || self.supersample == 0 {
            return bad("image size and supersampling must be positive");
        }
        if self.sky.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return bad("sky color must lie in [0, 1]");
        }
        Ok(())
    }

    pub fn focal(&self) -> f64 {
        self.width as f64 / 2.0 / (self.hfov_deg.to_radians() / 2.0).tan()
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let value = value.trim();
        let err = || Error::InvalidArgument(format!("scene spec key `{key}`: cannot parse `{value}`"));
        macro_rules! parse {
            () => {
                value.parse().map_err(|_| err())?
            };
        }
        match key.trim() {
            "seed" => self.seed = parse!(),
            "road_length" => self.road_length = parse!(),
            "road_width" => self.road_width = parse!(),
            "building_count" => self.building_count = parse!(),
            "building_height_min" => self.building_height_min = parse!(),
            "building_height_max" => self.building_height_max = parse!(),
            "texture_cell" => self.texture_cell = parse!(),
            "dash_period" => self.dash_period = parse!(),
            "ground_train" => self.ground_train = parse!(),
            "aerial_train" => self.aerial_train = parse!(),
            "held_out" => self.held_out = parse!(),
            "ground_heights" => self.ground_heights = parse_pair(value).ok_or_else(err)?,
            "test_heights" => self.test_heights = parse_pair(value).ok_or_else(err)?,
            "test_pitch_deg" => self.test_pitch_deg = parse!(),
            "aerial_height" => self.aerial_height = parse!(),
            "aerial_pitch_deg" => self.aerial_pitch_deg = parse!(),
            "view_shift" => self.view_shift = parse!(),
            "width" => self.width = parse!(),
            "height" => self.height = parse!(),
            "hfov_deg" => self.hfov_deg = parse!(),
            "supersample" => self.supersample = parse!(),
            "init_points" => self.init_points = parse!(),
            "sky" => {
                let v: Vec<f32> = value
                    .split(',')
                    .map(|s| s.trim().parse().ok())
                    .collect::<Option<_>>()
                    .ok_or_else(err)?;
                if v.len() != 3 {
                    return Err(err());
                }
                self.sky = [v[0], v[1], v[2]];
            }
            other => {
                return Err(Error::InvalidArgument(format!("unknown scene spec key `{other}`")));
            }
        }
        Ok(())
    }

    pub fn entries(&self) -> Vec<(&'static str, String)> {
        let pair = |p: [f64; 2]| format!("{},{}", p[0], p[1]);
        vec![
            ("seed", self.seed.to_string()),
            ("road_length", self.road_length.to_string()),
            ("road_width", self.road_width.to_string()),
            ("building_count", self.building_count.to_string()),
            ("building_height_min", self.building_height_min.to_string()),
            ("building_height_max", self.building_height_max.to_string()),
            ("texture_cell", self.texture_cell.to_string()),
            ("dash_period", self.dash_period.to_string()),
            ("ground_train", self.ground_train.to_string()),
            ("aerial_train", self.aerial_train.to_string()),
            ("held_out", self.held_out.to_string()),
            ("ground_heights", pair(self.ground_heights)),
            ("test_heights", pair(self.test_heights)),
            ("test_pitch_deg", self.test_pitch_deg.to_string()),
            ("aerial_height", self.aerial_height.to_string()),
            ("aerial_pitch_deg", self.aerial_pitch_deg.to_string()),
            ("view_shift", self.view_shift.to_string()),
            ("width", self.width.to_string()),
            ("height", self.height.to_string()),
            ("hfov_deg", self.hfov_deg.to_string()),
            ("supersample", self.supersample.to_string()),
            ("init_points", self.init_points.to_string()),
            (
                "sky",
                format!("{},{},{}", self.sky[0], self.sky[1], self.sky[2]),
            ),
        ]
    }

    pub fn to_text(&self) -> String {
        let mut s = String::new();
        for (k, v) in self.entries() {
            let _ = writeln!(s, "{k} = {v}");
        }
        s
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut spec = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                Error::InvalidArgument(format!("scene spec line {}: expected key = value", i + 1))
            })?;
            spec.set(k, v)?;
        }
        spec.validate()?;
        Ok(spec)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text)
    }
}
