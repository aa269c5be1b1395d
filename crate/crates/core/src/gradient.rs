//! Gradient operators used as surface normals for shading.
//!
//! All operators take trilinear samples at integer offsets from a continuous
//! position, so they work the same on and off the lattice.

use crate::volume::{InterpolationMode, Volume};
use glam::DVec3;
use std::f64::consts::FRAC_1_SQRT_2;

/// Magnitudes at or below this are treated as "no gradient".
pub const GRADIENT_EPSILON: f64 = 1e-8;

/// Unit-length direction, or exactly zero.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Gradient(pub DVec3);

impl Gradient {
    pub const ZERO: Gradient = Gradient(DVec3::ZERO);

    pub fn vector(self) -> DVec3 {
        self.0
    }

    pub fn is_zero(self) -> bool {
        self.0 == DVec3::ZERO
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum OperatorKind {
    #[default]
    CentralDifference,
    Sobel3D,
    ZuckerHummel,
}

impl OperatorKind {
    pub const ALL: [OperatorKind; 3] = [
        OperatorKind::CentralDifference,
        OperatorKind::Sobel3D,
        OperatorKind::ZuckerHummel,
    ];

    pub fn name(self) -> &'static str {
        match self {
            OperatorKind::CentralDifference => "central",
            OperatorKind::Sobel3D => "sobel3d",
            OperatorKind::ZuckerHummel => "zucker-hummel",
        }
    }

    /// Volume samples taken per evaluation.
    pub fn sample_count(self) -> u64 {
        match self {
            OperatorKind::CentralDifference => 6,
            OperatorKind::Sobel3D | OperatorKind::ZuckerHummel => 26,
        }
    }

    pub fn evaluate(self, volume: &Volume, p: DVec3) -> Gradient {
        match self {
            OperatorKind::CentralDifference => central_difference(volume, p),
            OperatorKind::Sobel3D => sobel3d(volume, p),
            OperatorKind::ZuckerHummel => zucker_hummel(volume, p),
        }
    }
}

impl std::fmt::Display for OperatorKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for OperatorKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "central" => Ok(OperatorKind::CentralDifference),
            "sobel3d" => Ok(OperatorKind::Sobel3D),
            "zucker-hummel" => Ok(OperatorKind::ZuckerHummel),
            other => Err(format!(
                "unknown operator {other:?} (expected central, sobel3d or zucker-hummel)"
            )),
        }
    }
}

pub fn normalize_gradient(d: DVec3) -> Gradient {
    let len = d.length();
    if len > GRADIENT_EPSILON {
        Gradient(d / len)
    } else {
        Gradient::ZERO
    }
}

#[inline]
fn at(volume: &Volume, p: DVec3, i: i32, j: i32, k: i32) -> f64 {
    volume.sample(
        p + DVec3::new(i as f64, j as f64, k as f64),
        InterpolationMode::Trilinear,
    )
}

/// Raw (unnormalized) central differences.
pub fn central_difference_raw(volume: &Volume, p: DVec3) -> DVec3 {
    DVec3::new(
        at(volume, p, 1, 0, 0) - at(volume, p, -1, 0, 0),
        at(volume, p, 0, 1, 0) - at(volume, p, 0, -1, 0),
        at(volume, p, 0, 0, 1) - at(volume, p, 0, 0, -1),
    )
}

pub fn central_difference(volume: &Volume, p: DVec3) -> Gradient {
    normalize_gradient(central_difference_raw(volume, p))
}

/// Smoothing weights applied across the two axes orthogonal to the
/// derivative axis of the 3D Sobel operator.
///
/// The published x masks are
///
/// ```text
///   x-1: -1 -3 -1   x: 0 0 0   x+1: 1 3 1
///        -3 -6 -3      0 0 0        3 6 3
///        -1 -3 -1      0 0 0        1 3 1
/// ```
///
/// The printed y and z tables do not differentiate along their own axes
/// (the z set repeats an in-plane x derivative), so both are rebuilt from the
/// x masks by permuting axes: `w_axis(o) = o[axis] · SOBEL_SMOOTH[o[u]][o[v]]`
/// where `u`, `v` are the other two axes.
const SOBEL_SMOOTH: [[f64; 3]; 3] = [[1.0, 3.0, 1.0], [3.0, 6.0, 3.0], [1.0, 3.0, 1.0]];

/// Sum of `w_axis(offset) · sample(p + offset)` over the 26 non-centre
/// neighbours, for all three axes at once.
#[inline]
fn convolve26(volume: &Volume, p: DVec3, weight: impl Fn([i32; 3], usize) -> f64) -> DVec3 {
    let mut d = [0.0f64; 3];
    for k in -1..=1 {
        for j in -1..=1 {
            for i in -1..=1 {
                if i == 0 && j == 0 && k == 0 {
                    continue;
                }
                let s = at(volume, p, i, j, k);
                let o = [i, j, k];
                for (axis, acc) in d.iter_mut().enumerate() {
                    *acc += weight(o, axis) * s;
                }
            }
        }
    }
    DVec3::from_array(d)
}

#[inline]
fn sobel_weight(o: [i32; 3], axis: usize) -> f64 {
    let (u, v) = match axis {
        0 => (1, 2),
        1 => (0, 2),
        _ => (0, 1),
    };
    o[axis] as f64 * SOBEL_SMOOTH[(o[u] + 1) as usize][(o[v] + 1) as usize]
}

pub fn sobel3d_raw(volume: &Volume, p: DVec3) -> DVec3 {
    convolve26(volume, p, sobel_weight)
}

pub fn sobel3d(volume: &Volume, p: DVec3) -> Gradient {
    normalize_gradient(sobel3d_raw(volume, p))
}

/// Distance-normalized weights `o[axis] / |o|`: ±1 on faces, ±1/√2 on
/// edges, ±1/√3 on corners.
#[inline]
fn zucker_hummel_weight(o: [i32; 3], axis: usize) -> f64 {
    let nonzero = o.iter().filter(|&&c| c != 0).count();
    let inv_len = match nonzero {
        1 => 1.0,
        2 => FRAC_1_SQRT_2,
        _ => 1.0 / 3f64.sqrt(),
    };
    o[axis] as f64 * inv_len
}

pub fn zucker_hummel_raw(volume: &Volume, p: DVec3) -> DVec3 {
    convolve26(volume, p, zucker_hummel_weight)
}

pub fn zucker_hummel(volume: &Volume, p: DVec3) -> Gradient {
    normalize_gradient(zucker_hummel_raw(volume, p))
}
