use super::RenderError;
use glam::DVec3;

/// Single white point light.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Light {
    pub position: DVec3,
    pub color: DVec3,
}

impl Light {
    pub fn at(position: DVec3) -> Self {
        Light {
            position,
            color: DVec3::ONE,
        }
    }
}

/// Lambert term `dot(normalize(light − pos), norm)` times the light colour.
/// Negative terms clamp to black; channels clamp to `[0, 1]`.
#[inline]
pub fn shade(pos: DVec3, norm: DVec3, light: &Light) -> DVec3 {
    let to_light = (light.position - pos).normalize_or_zero();
    let illum = to_light.dot(norm).max(0.0);
    (light.color * illum).clamp(DVec3::ZERO, DVec3::ONE)
}

/// CT number of an attenuation coefficient relative to water.
pub fn hounsfield(mu_tissue: f64, mu_water: f64) -> Result<f64, RenderError> {
    if !(mu_water.is_finite() && mu_water > 0.0) {
        return Err(RenderError::MuWater(mu_water));
    }
    Ok((mu_tissue - mu_water) / mu_water * 1000.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Breakpoint {
    pub hu: f64,
    pub rgba: [f64; 4],
}

impl Breakpoint {
    pub const fn new(hu: f64, rgba: [f64; 4]) -> Self {
        Breakpoint { hu, rgba }
    }
}

/// Piecewise-linear HU → RGBA lookup table. Stored voxel values are read as
/// attenuation coefficients and converted with [`hounsfield`] against
/// `mu_water`.
#[derive(Debug, Clone, PartialEq)]
pub struct TransferFunction {
    breakpoints: Vec<Breakpoint>,
    mu_water: f64,
}

impl Default for TransferFunction {
    /// Air transparent black, soft tissue translucent red, bone opaque white.
    fn default() -> Self {
        TransferFunction {
            breakpoints: vec![
                Breakpoint::new(-1000.0, [0.0, 0.0, 0.0, 0.0]),
                Breakpoint::new(-100.0, [0.85, 0.35, 0.3, 0.35]),
                Breakpoint::new(500.0, [0.95, 0.92, 0.85, 1.0]),
                Breakpoint::new(1500.0, [1.0, 1.0, 1.0, 1.0]),
            ],
            mu_water: 1000.0,
        }
    }
}

impl TransferFunction {
    pub fn new(breakpoints: Vec<Breakpoint>, mu_water: f64) -> Result<Self, RenderError> {
        if breakpoints.is_empty() {
            return Err(RenderError::Lut("lookup table is empty".into()));
        }
        if !(mu_water.is_finite() && mu_water > 0.0) {
            return Err(RenderError::MuWater(mu_water));
        }
        for b in &breakpoints {
            if !b.hu.is_finite() || b.rgba.iter().any(|c| !(0.0..=1.0).contains(c)) {
                return Err(RenderError::Lut(format!(
                    "breakpoint at {} HU has channels outside [0, 1]",
                    b.hu
                )));
            }
        }
        if breakpoints.windows(2).any(|w| w[0].hu >= w[1].hu) {
            return Err(RenderError::Lut("breakpoints must be strictly increasing".into()));
        }
        Ok(TransferFunction {
            breakpoints,
            mu_water,
        })
    }

    /// Same table with every alpha forced to `1`.
    pub fn opaque(&self) -> Self {
        let mut tf = self.clone();
        for b in &mut tf.breakpoints {
            b.rgba[3] = 1.0;
        }
        tf
    }

    pub fn breakpoints(&self) -> &[Breakpoint] {
        &self.breakpoints
    }

    pub fn mu_water(&self) -> f64 {
        self.mu_water
    }

    /// Colour for a raw voxel value.
    #[inline]
    pub fn classify(&self, value: f64) -> [f64; 4] {
        self.lookup((value - self.mu_water) / self.mu_water * 1000.0)
    }

    pub fn lookup(&self, hu: f64) -> [f64; 4] {
        let bp = &self.breakpoints;
        let first = bp[0];
        let last = bp[bp.len() - 1];
        if !(hu > first.hu) {
            return first.rgba;
        }
        if hu >= last.hu {
            return last.rgba;
        }
        // First breakpoint strictly above hu; hu lies in [bp[i-1], bp[i]).
        let i = bp.partition_point(|b| b.hu <= hu);
        let (a, b) = (bp[i - 1], bp[i]);
        let t = (hu - a.hu) / (b.hu - a.hu);
        std::array::from_fn(|c| a.rgba[c] + (b.rgba[c] - a.rgba[c]) * t)
    }
}

pub fn transfer(hu: f64, tf: &TransferFunction) -> [f64; 4] {
    tf.lookup(hu)
}

/// One step of the emission–absorption recursion:
/// `C_out = C_in·(1 − α) + C·α`.
pub fn composite_step(c_in: DVec3, c_sample: DVec3, alpha: f64) -> Result<DVec3, RenderError> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(RenderError::Alpha(alpha));
    }
    Ok(c_in * (1.0 - alpha) + c_sample * alpha)
}

/// Front-to-back accumulator. Equivalent to folding [`composite_step`]
/// from the back of the ray towards the eye, but able to stop early.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompositeState {
    pub color: DVec3,
    /// Product of `(1 − α)` over everything absorbed so far.
    pub remaining: f64,
}

impl Default for CompositeState {
    fn default() -> Self {
        CompositeState {
            color: DVec3::ZERO,
            remaining: 1.0,
        }
    }
}

impl CompositeState {
    /// Rays stop once less than this much light can still get through.
    pub const TERMINATION: f64 = 0.01;
    /// Samples at least this opaque end the ray.
    pub const OPAQUE: f64 = 1.0 - 1e-6;

    #[inline]
    pub fn absorb(&mut self, c_sample: DVec3, alpha: f64) {
        let alpha = alpha.clamp(0.0, 1.0);
        self.color += c_sample * (self.remaining * alpha);
        self.remaining *= 1.0 - alpha;
        if alpha >= Self::OPAQUE {
            self.remaining = 0.0;
        }
    }

    pub fn is_saturated(&self) -> bool {
        self.remaining < Self::TERMINATION
    }

    /// Final colour with `background` showing through what is left.
    pub fn over(&self, background: DVec3) -> DVec3 {
        self.color + background * self.remaining
    }
}
