use super::{Ray, RenderError};
use crate::volume::Volume;
use glam::DVec3;

/// World-space axis-aligned box the marcher is confined to. Shrinking it
/// below the volume extent cuts the dataset open.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClipBox {
    pub lo: DVec3,
    pub hi: DVec3,
}

impl ClipBox {
    pub fn new(lo: DVec3, hi: DVec3) -> Result<Self, RenderError> {
        let b = ClipBox { lo, hi };
        b.validate()?;
        Ok(b)
    }

    pub fn full(volume: &Volume) -> Self {
        ClipBox {
            lo: DVec3::ZERO,
            hi: volume.world_extent(),
        }
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if !(self.lo.is_finite() && self.hi.is_finite()) {
            return Err(RenderError::ClipBox("corners must be finite".into()));
        }
        if self.lo.cmpgt(self.hi).any() {
            return Err(RenderError::ClipBox("lo must not exceed hi".into()));
        }
        Ok(())
    }

    /// Intersection with the volume's world extent.
    pub fn clamped_to(&self, volume: &Volume) -> Result<Self, RenderError> {
        let full = ClipBox::full(volume);
        ClipBox::new(self.lo.max(full.lo), self.hi.min(full.hi))
    }

    pub fn is_within(&self, volume: &Volume) -> bool {
        let full = ClipBox::full(volume);
        self.lo.cmpge(full.lo).all() && self.hi.cmple(full.hi).all()
    }

    pub fn contains(&self, p: DVec3) -> bool {
        p.cmpge(self.lo).all() && p.cmple(self.hi).all()
    }
}

/// Raw slab test: the parameter interval (possibly negative) over which
/// `origin + t·dir` lies inside `[lo, hi]`, or `None` if the line misses.
#[inline]
pub fn slab_interval(origin: DVec3, dir: DVec3, lo: DVec3, hi: DVec3) -> Option<(f64, f64)> {
    let mut t0 = f64::NEG_INFINITY;
    let mut t1 = f64::INFINITY;
    for a in 0..3 {
        let (o, d) = (origin[a], dir[a]);
        if d == 0.0 {
            if o < lo[a] || o > hi[a] {
                return None;
            }
            continue;
        }
        let inv = 1.0 / d;
        let (mut near, mut far) = ((lo[a] - o) * inv, (hi[a] - o) * inv);
        if near > far {
            std::mem::swap(&mut near, &mut far);
        }
        t0 = t0.max(near);
        t1 = t1.min(far);
    }
    (t0 <= t1).then_some((t0, t1))
}

/// Entry and exit distance of `ray` through `clip`, with the entry clamped
/// to `0` when the origin is inside. `None` when the ray misses or the box
/// lies behind the origin.
pub fn intersect_clipbox(ray: &Ray, clip: &ClipBox) -> Option<(f64, f64)> {
    let (t0, t1) = slab_interval(ray.origin, ray.dir, clip.lo, clip.hi)?;
    if t1 < 0.0 {
        return None;
    }
    Some((t0.max(0.0), t1))
}
