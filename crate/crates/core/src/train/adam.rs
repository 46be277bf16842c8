use crate::gaussian::Gaussian3D;

pub const BETA1: f64 = 0.9;
pub const BETA2: f64 = 0.999;
pub const EPS: f64 = 1e-15;

/// Learning rate for each of the 14 packed parameters.
pub fn lr_layout(mu: f64, rot: f64, log_scale: f64, opacity: f64, color: f64) -> [f32; 14] {
    let mut lr = [0.0f32; 14];
    for (i, v) in lr.iter_mut().enumerate() {
        *v = match i {
            0..=2 => mu,
            3..=6 => rot,
            7..=9 => log_scale,
            10 => opacity,
            _ => color,
        } as f32;
    }
    lr
}

/// Adam moments per Gaussian, aligned with the field's Gaussian order.
#[derive(Debug, Clone, Default)]
pub struct Adam {
    pub m: Vec<[f32; 14]>,
    pub v: Vec<[f32; 14]>,
    pub step: u64,
}

impl Adam {
    pub fn new(n: usize) -> Self {
        Self {
            m: vec![[0.0; 14]; n],
            v: vec![[0.0; 14]; n],
            step: 0,
        }
    }

    pub fn step(&mut self, params: &mut [Gaussian3D<f32>], grads: &[Gaussian3D<f32>], lr: &[f32; 14]) {
        debug_assert_eq!(params.len(), self.m.len());
        self.step += 1;
        let t = self.step as i32;
        let (b1, b2) = (BETA1 as f32, BETA2 as f32);
        let (c1, c2) = ((1.0 - BETA1) as f32, (1.0 - BETA2) as f32);
        let bc1 = 1.0 - BETA1.powi(t);
        let bc2 = 1.0 - BETA2.powi(t);
        // step = lr * m̂ / (sqrt(v̂) + eps) with the bias corrections folded in
        let scale = (bc2.sqrt() / bc1) as f32;
        let eps = (EPS * bc2.sqrt()) as f32;
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let mut a = p.to_array();
            let ga = g.to_array();
            for k in 0..14 {
                m[k] = b1 * m[k] + c1 * ga[k];
                v[k] = b2 * v[k] + c2 * ga[k] * ga[k];
                a[k] -= lr[k] * scale * m[k] / (v[k].sqrt() + eps);
            }
            *p = Gaussian3D::from_array(&a);
        }
    }

    /// Rebuilds state after densification; `None` origins start from zero.
    pub fn remap(&mut self, origins: &[Option<usize>]) {
        let pick = |src: &Vec<[f32; 14]>| -> Vec<[f32; 14]> {
            origins.iter().map(|o| o.map_or([0.0; 14], |i| src[i])).collect()
        };
        self.m = pick(&self.m);
        self.v = pick(&self.v);
    }
}
