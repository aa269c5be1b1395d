//! Voxel datasets and scalar-field sampling.
//!
//! A [`Volume`] is a dense `nx × ny × nz` grid of 16-bit samples laid out
//! x-fastest. Continuous positions are given in *voxel coordinates*: the
//! lattice point `(i, j, k)` sits at exactly `(i, j, k)` and valid samples
//! live in `[0, n - 1]` along each axis. Anything outside is empty space and
//! samples as `0`.

mod phantom;
mod raw;

pub use phantom::{make_phantom, Phantom};
pub use raw::{expand_pattern, load_raw_slices, write_raw_slices, Endianness, SliceFormat};

use glam::DVec3;
use std::path::PathBuf;

/// Largest supported extent along one axis.
pub const MAX_DIM: usize = 1 << 20;

/// Largest value a 12-bit CT sample can take.
pub const MAX_12BIT: u16 = 4095;

#[derive(Debug, thiserror::Error)]
pub enum VolumeError {
    #[error("volume dimensions must be positive, got {0:?}")]
    EmptyDims([usize; 3]),
    #[error("volume dimensions {0:?} exceed the supported maximum of {MAX_DIM} per axis")]
    TooLarge([usize; 3]),
    #[error("voxel data has {actual} samples but dims {dims:?} need {expected}")]
    DataLength {
        dims: [usize; 3],
        expected: usize,
        actual: usize,
    },
    #[error("voxel spacing must be finite and positive, got {0:?}")]
    Spacing([f64; 3]),
    #[error("slice file {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("slice file {path} has {actual} bytes, expected {expected}")]
    SliceSize {
        path: PathBuf,
        expected: u64,
        actual: u64,
    },
    #[error("slice file {path} holds value {value} above the 12-bit limit")]
    Not12Bit { path: PathBuf, value: u16 },
    #[error("invalid slice path pattern {0:?}: expected a run of '#' for the slice index")]
    Pattern(String),
    #[error("invalid phantom: {0}")]
    Phantom(String),
}

/// How [`Volume::sample`] reconstructs values between lattice points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum InterpolationMode {
    /// Round every coordinate to the closest lattice point.
    Nearest,
    /// Interpolate along the axis furthest from a lattice plane; round the others.
    Linear,
    /// Full 8-corner interpolation.
    #[default]
    Trilinear,
}

impl InterpolationMode {
    pub fn name(self) -> &'static str {
        match self {
            InterpolationMode::Nearest => "nearest",
            InterpolationMode::Linear => "linear",
            InterpolationMode::Trilinear => "trilinear",
        }
    }
}

impl std::fmt::Display for InterpolationMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for InterpolationMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nearest" => Ok(InterpolationMode::Nearest),
            "linear" => Ok(InterpolationMode::Linear),
            "trilinear" => Ok(InterpolationMode::Trilinear),
            other => Err(format!(
                "unknown interpolation {other:?} (expected nearest, linear or trilinear)"
            )),
        }
    }
}

/// Immutable scalar grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume {
    dims: [usize; 3],
    data: Vec<u16>,
    value_min: u16,
    value_max: u16,
    spacing: [f64; 3],
}

impl Volume {
    pub fn new(dims: [usize; 3], data: Vec<u16>) -> Result<Self, VolumeError> {
        Self::with_spacing(dims, data, [1.0; 3])
    }

    pub fn with_spacing(
        dims: [usize; 3],
        data: Vec<u16>,
        spacing: [f64; 3],
    ) -> Result<Self, VolumeError> {
        if dims.iter().any(|&d| d == 0) {
            return Err(VolumeError::EmptyDims(dims));
        }
        if dims.iter().any(|&d| d > MAX_DIM) {
            return Err(VolumeError::TooLarge(dims));
        }
        let expected = dims[0]
            .checked_mul(dims[1])
            .and_then(|v| v.checked_mul(dims[2]))
            .ok_or(VolumeError::EmptyDims(dims))?;
        if data.len() != expected {
            return Err(VolumeError::DataLength {
                dims,
                expected,
                actual: data.len(),
            });
        }
        if spacing.iter().any(|s| !s.is_finite() || *s <= 0.0) {
            return Err(VolumeError::Spacing(spacing));
        }
        let (value_min, value_max) = data
            .iter()
            .fold((u16::MAX, u16::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)));
        Ok(Volume {
            dims,
            data,
            value_min,
            value_max,
            spacing,
        })
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn data(&self) -> &[u16] {
        &self.data
    }

    pub fn value_min(&self) -> u16 {
        self.value_min
    }

    pub fn value_max(&self) -> u16 {
        self.value_max
    }

    pub fn spacing(&self) -> [f64; 3] {
        self.spacing
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn index(&self, x: usize, y: usize, z: usize) -> usize {
        x + self.dims[0] * (y + self.dims[1] * z)
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, z: usize) -> u16 {
        self.data[self.index(x, y, z)]
    }

    /// World-space extent: the grid occupies `[0, n·spacing]` on each axis,
    /// with voxel `i` centred at `(i + 0.5)·spacing`.
    pub fn world_extent(&self) -> DVec3 {
        DVec3::new(
            self.dims[0] as f64 * self.spacing[0],
            self.dims[1] as f64 * self.spacing[1],
            self.dims[2] as f64 * self.spacing[2],
        )
    }

    pub fn world_center(&self) -> DVec3 {
        self.world_extent() * 0.5
    }

    #[inline]
    pub fn world_to_voxel(&self, p: DVec3) -> DVec3 {
        DVec3::new(
            p.x / self.spacing[0] - 0.5,
            p.y / self.spacing[1] - 0.5,
            p.z / self.spacing[2] - 0.5,
        )
    }

    #[inline]
    pub fn voxel_to_world(&self, p: DVec3) -> DVec3 {
        DVec3::new(
            (p.x + 0.5) * self.spacing[0],
            (p.y + 0.5) * self.spacing[1],
            (p.z + 0.5) * self.spacing[2],
        )
    }

    #[inline]
    fn in_range(&self, p: DVec3) -> bool {
        // Negated comparisons so NaN lands outside.
        !(!(p.x >= 0.0 && p.y >= 0.0 && p.z >= 0.0)
            || p.x > (self.dims[0] - 1) as f64
            || p.y > (self.dims[1] - 1) as f64
            || p.z > (self.dims[2] - 1) as f64)
    }

    /// Samples the field at a continuous voxel-space position.
    ///
    /// Positions outside `[0, n-1]³` are empty space and return `0`.
    #[inline]
    pub fn sample(&self, p: DVec3, mode: InterpolationMode) -> f64 {
        if !self.in_range(p) {
            return 0.0;
        }
        match mode {
            InterpolationMode::Nearest => self.sample_nearest(p),
            InterpolationMode::Linear => self.sample_linear(p),
            InterpolationMode::Trilinear => self.sample_trilinear(p),
        }
    }

    fn sample_nearest(&self, p: DVec3) -> f64 {
        // f64::round rounds half away from zero.
        let x = p.x.round() as usize;
        let y = p.y.round() as usize;
        let z = p.z.round() as usize;
        self.get(x, y, z) as f64
    }

    fn sample_linear(&self, p: DVec3) -> f64 {
        let c = p.to_array();
        let mut axis = 0;
        let mut best = -1.0;
        for (a, v) in c.iter().enumerate() {
            let d = (v - v.round()).abs();
            if d > best {
                best = d;
                axis = a;
            }
        }
        let mut lattice = [c[0].round() as usize, c[1].round() as usize, c[2].round() as usize];
        let (lo, t) = cell(c[axis], self.dims[axis]);
        lattice[axis] = lo;
        let f0 = self.get(lattice[0], lattice[1], lattice[2]) as f64;
        if self.dims[axis] == 1 {
            return f0;
        }
        lattice[axis] = lo + 1;
        let f1 = self.get(lattice[0], lattice[1], lattice[2]) as f64;
        lerp(f0, f1, t)
    }

    fn sample_trilinear(&self, p: DVec3) -> f64 {
        let [nx, ny, nz] = self.dims;
        let (x0, tx) = cell(p.x, nx);
        let (y0, ty) = cell(p.y, ny);
        let (z0, tz) = cell(p.z, nz);
        // Index strides to the upper corner; degenerate axes collapse onto
        // their single plane.
        let dx = usize::from(nx > 1);
        let dy = if ny > 1 { nx } else { 0 };
        let dz = if nz > 1 { nx * ny } else { 0 };
        let base = self.index(x0, y0, z0);
        let d = &self.data[base..=base + dx + dy + dz];
        let v = |o: usize| d[o] as f64;

        // Pairs along x, then y, then z.
        let i1 = lerp(v(0), v(dx), tx);
        let i2 = lerp(v(dz), v(dx + dz), tx);
        let i3 = lerp(v(dy), v(dx + dy), tx);
        let i4 = lerp(v(dy + dz), v(dx + dy + dz), tx);
        let i5 = lerp(i1, i3, ty);
        let i6 = lerp(i2, i4, ty);
        lerp(i5, i6, tz)
    }
}

/// Lower lattice index and fractional offset of `c` within its cell. The
/// upper face `c = n - 1` maps to the last cell with `t = 1`.
#[inline]
fn cell(c: f64, n: usize) -> (usize, f64) {
    if n == 1 {
        return (0, 0.0);
    }
    // Callers pass c >= 0, where truncation is floor. The signed cast is
    // cheaper than the saturating unsigned one; `MAX_DIM` fits in i32.
    let lo = (c as i32 as usize).min(n - 2);
    (lo, c - lo as f64)
}

/// Linear interpolation between `f0` (at `t = 0`) and `f1` (at `t = 1`).
#[inline]
pub fn lerp(f0: f64, f1: f64, t: f64) -> f64 {
    f0 + (f1 - f0) * t
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(dims: [usize; 3]) -> Volume {
        let n = dims[0] * dims[1] * dims[2];
        Volume::new(dims, (0..n).map(|i| (i % 4096) as u16).collect()).unwrap()
    }

    #[test]
    fn lerp_examples() {
        assert_eq!(lerp(10.0, 20.0, 0.0), 10.0);
        assert_eq!(lerp(10.0, 20.0, 0.5), 15.0);
        assert_eq!(lerp(0.0, 1.0, 0.25), 0.25);
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(
            Volume::new([0, 2, 2], vec![]),
            Err(VolumeError::EmptyDims(_))
        ));
        assert!(matches!(
            Volume::new([2, 2, 2], vec![0; 7]),
            Err(VolumeError::DataLength { expected: 8, .. })
        ));
        assert!(matches!(
            Volume::with_spacing([1, 1, 1], vec![0], [1.0, 0.0, 1.0]),
            Err(VolumeError::Spacing(_))
        ));
    }

    #[test]
    fn extrema_are_tracked() {
        let v = Volume::new([2, 1, 1], vec![7, 3]).unwrap();
        assert_eq!((v.value_min(), v.value_max()), (3, 7));
    }

    #[test]
    fn lattice_points_return_stored_value_in_every_mode() {
        let v = ramp([6, 7, 8]);
        let idx = v.index(3, 4, 5);
        assert_eq!(idx, 3 + 4 * 6 + 5 * 6 * 7);
        for mode in [
            InterpolationMode::Nearest,
            InterpolationMode::Linear,
            InterpolationMode::Trilinear,
        ] {
            assert_eq!(v.sample(DVec3::new(3.0, 4.0, 5.0), mode), v.data()[idx] as f64);
            // Upper faces are in range and exact too.
            assert_eq!(
                v.sample(DVec3::new(5.0, 6.0, 7.0), mode),
                v.get(5, 6, 7) as f64
            );
        }
    }

    #[test]
    fn cell_center_of_two_layer_cube_is_mean() {
        let mut data = vec![0u16; 8];
        data[4..].fill(8);
        let v = Volume::new([2, 2, 2], data).unwrap();
        let s = v.sample(DVec3::splat(0.5), InterpolationMode::Trilinear);
        assert_eq!(s, 4.0);
    }

    #[test]
    fn out_of_range_is_empty() {
        let v = Volume::new([2, 2, 2], vec![9; 8]).unwrap();
        for p in [
            DVec3::new(-0.01, 0.5, 0.5),
            DVec3::new(0.5, 1.01, 0.5),
            DVec3::new(f64::NAN, 0.5, 0.5),
            DVec3::new(0.5, 0.5, f64::INFINITY),
        ] {
            assert_eq!(v.sample(p, InterpolationMode::Trilinear), 0.0);
            assert_eq!(v.sample(p, InterpolationMode::Nearest), 0.0);
        }
    }

    #[test]
    fn nearest_rounds_half_away_from_zero() {
        let v = Volume::new([3, 1, 1], vec![10, 20, 30]).unwrap();
        assert_eq!(v.sample(DVec3::new(0.5, 0.0, 0.0), InterpolationMode::Nearest), 20.0);
        assert_eq!(v.sample(DVec3::new(1.5, 0.0, 0.0), InterpolationMode::Nearest), 30.0);
        assert_eq!(v.sample(DVec3::new(1.49, 0.0, 0.0), InterpolationMode::Nearest), 20.0);
    }

    #[test]
    fn linear_interpolates_along_the_off_lattice_axis() {
        // value = 10·x + 100·y
        let mut data = vec![];
        for y in 0..3u16 {
            for x in 0..3u16 {
                data.push(10 * x + 100 * y);
            }
        }
        let v = Volume::new([3, 3, 1], data).unwrap();
        // x is 0.4 off-lattice, y only 0.1: interpolate along x, round y to 1.
        let s = v.sample(DVec3::new(1.4, 0.9, 0.0), InterpolationMode::Linear);
        assert!((s - 114.0).abs() < 1e-12);
        let s = v.sample(DVec3::new(2.0, 0.25, 0.0), InterpolationMode::Linear);
        assert!((s - 45.0).abs() < 1e-12);
    }

    #[test]
    fn degenerate_axes_sample_their_single_plane() {
        let v = Volume::new([2, 1, 1], vec![0, 100]).unwrap();
        assert_eq!(v.sample(DVec3::new(0.25, 0.0, 0.0), InterpolationMode::Trilinear), 25.0);
        assert_eq!(v.sample(DVec3::new(0.25, 0.0, 0.0), InterpolationMode::Linear), 25.0);
        assert_eq!(v.sample(DVec3::new(0.25, 0.1, 0.0), InterpolationMode::Trilinear), 0.0);
    }

    #[test]
    fn world_voxel_mapping_centers_voxels() {
        let v = Volume::with_spacing([4, 4, 4], vec![0; 64], [2.0, 1.0, 0.5]).unwrap();
        let w = v.voxel_to_world(DVec3::ZERO);
        assert_eq!(w, DVec3::new(1.0, 0.5, 0.25));
        assert_eq!(v.world_to_voxel(w), DVec3::ZERO);
        assert_eq!(v.world_extent(), DVec3::new(8.0, 4.0, 2.0));
    }
}
