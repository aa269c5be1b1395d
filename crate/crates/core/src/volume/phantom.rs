//! Analytic test volumes standing in for CT scans.

use super::{Volume, VolumeError, MAX_12BIT};

/// Synthetic dataset description. Spheres are centred on the grid centre
/// `((n-1)/2, …)` in voxel coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Phantom {
    SolidSphere { radius: f64, value: f64 },
    SphericalShell { inner: f64, outer: f64, value: f64 },
    /// `data = floor(scale · x)`
    AxisRamp { scale: f64 },
    Empty,
}

impl Phantom {
    /// Stored value of the default sphere: +1000 HU against the default
    /// water reference, so it classifies as bone.
    pub const DEFAULT_VALUE: f64 = 2000.0;

    /// The stock demo dataset for a `size`³ grid: a solid sphere whose
    /// radius is 3/8 of the edge length.
    pub fn default_sphere(size: usize) -> Phantom {
        Phantom::SolidSphere {
            radius: 0.375 * size as f64,
            value: Self::DEFAULT_VALUE,
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Phantom::SolidSphere { .. } => "sphere",
            Phantom::SphericalShell { .. } => "shell",
            Phantom::AxisRamp { .. } => "ramp",
            Phantom::Empty => "empty",
        }
    }
}

fn quantize(v: f64) -> u16 {
    v.round().clamp(0.0, MAX_12BIT as f64) as u16
}

pub fn make_phantom(kind: Phantom, dims: [usize; 3]) -> Result<Volume, VolumeError> {
    if dims.iter().any(|&d| d == 0) {
        return Err(VolumeError::EmptyDims(dims));
    }
    let center = dims.map(|d| (d as f64 - 1.0) / 2.0);
    let max_radius = center.iter().cloned().fold(f64::INFINITY, f64::min);
    let bad = |msg: String| Err(VolumeError::Phantom(msg));
    match kind {
        Phantom::SolidSphere { radius, value } => {
            if !(radius.is_finite() && radius >= 0.0) || !value.is_finite() {
                return bad(format!("sphere radius {radius} / value {value}"));
            }
            if radius > max_radius {
                return bad(format!("radius {radius} exceeds the grid half-extent {max_radius}"));
            }
        }
        Phantom::SphericalShell {
            inner,
            outer,
            value,
        } => {
            if !(inner.is_finite() && inner >= 0.0 && outer >= inner) || !value.is_finite() {
                return bad(format!("shell radii {inner}..{outer} / value {value}"));
            }
            if outer > max_radius {
                return bad(format!("radius {outer} exceeds the grid half-extent {max_radius}"));
            }
        }
        Phantom::AxisRamp { scale } => {
            if !(scale.is_finite() && scale >= 0.0) {
                return bad(format!("ramp scale {scale}"));
            }
        }
        Phantom::Empty => {}
    }

    let [nx, ny, nz] = dims;
    let mut data = Vec::with_capacity(nx * ny * nz);
    for z in 0..nz {
        for y in 0..ny {
            for x in 0..nx {
                let dx = x as f64 - center[0];
                let dy = y as f64 - center[1];
                let dz = z as f64 - center[2];
                let d2 = dx * dx + dy * dy + dz * dz;
                let v = match kind {
                    Phantom::SolidSphere { radius, value } => {
                        if d2 <= radius * radius {
                            quantize(value)
                        } else {
                            0
                        }
                    }
                    Phantom::SphericalShell {
                        inner,
                        outer,
                        value,
                    } => {
                        if d2 >= inner * inner && d2 <= outer * outer {
                            quantize(value)
                        } else {
                            0
                        }
                    }
                    Phantom::AxisRamp { scale } => quantize((scale * x as f64).floor()),
                    Phantom::Empty => 0,
                };
                data.push(v);
            }
        }
    }
    Volume::new(dims, data)
}
