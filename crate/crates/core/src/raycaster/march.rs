//! Forward marching, backward fine search and bisection refinement.
//!
//! Coarse sample `k` always sits at `t_enter + k·coarse_step`. Skipping and
//! adaptive strategies only choose *which* of those positions get sampled,
//! so every strategy that samples a given position sees the same value.

use super::{slab_interval, Ray, RenderError, RenderSettings};
use crate::accel::{adaptive_step, Octree};
use crate::volume::{InterpolationMode, Volume};
use glam::DVec3;

/// Closed interval of volume values that count as material.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdWindow {
    pub low: f64,
    pub high: f64,
}

impl ThresholdWindow {
    pub fn new(low: f64, high: f64) -> Result<Self, RenderError> {
        if !(low.is_finite() && high.is_finite()) || low > high {
            return Err(RenderError::Window { low, high });
        }
        Ok(ThresholdWindow { low, high })
    }

    #[inline]
    pub fn contains(&self, v: f64) -> bool {
        self.low <= v && v <= self.high
    }

    /// Whether any value in `[min, max]` lies in the window.
    #[inline]
    pub fn overlaps(&self, min: f64, max: f64) -> bool {
        min <= self.high && max >= self.low
    }
}

/// Volume reader that counts how many samples it takes.
#[derive(Debug)]
pub struct Sampler<'a> {
    volume: &'a Volume,
    mode: InterpolationMode,
    count: u64,
}

impl<'a> Sampler<'a> {
    pub fn new(volume: &'a Volume, mode: InterpolationMode) -> Self {
        Sampler {
            volume,
            mode,
            count: 0,
        }
    }

    pub fn volume(&self) -> &'a Volume {
        self.volume
    }

    /// Samples at a world-space position.
    #[inline]
    pub fn at(&mut self, world: DVec3) -> f64 {
        self.count += 1;
        self.volume
            .sample(self.volume.world_to_voxel(world), self.mode)
    }

    pub fn add(&mut self, n: u64) {
        self.count += n;
    }

    pub fn count(&self) -> u64 {
        self.count
    }
}

/// Bisection interval: `outside` is out of the window, `outside + width`
/// is in it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub outside: f64,
    pub width: f64,
}

impl Bracket {
    pub fn inside(&self) -> f64 {
        self.outside + self.width
    }
}

/// Halves `[outside, outside + width]` `iters` times, keeping the window
/// crossing inside. Returns the final bracket and the value sampled at its
/// inside end, if it moved.
fn bisect(
    outside: f64,
    inside: f64,
    iters: u32,
    mut probe: impl FnMut(f64) -> (bool, f64),
) -> (Bracket, Option<f64>) {
    let mut b = Bracket {
        outside,
        width: inside - outside,
    };
    let mut value = None;
    for _ in 0..iters {
        b.width *= 0.5;
        let mid = b.outside + b.width;
        let (hit, v) = probe(mid);
        if hit {
            value = Some(v);
        } else {
            b.outside = mid;
        }
    }
    (b, value)
}

/// Hitpoint refinement by bisection. `inside(t)` reports whether the
/// sample at `t` is in the threshold window; `t_before` must be outside and
/// `t_after` inside. After `iters` halvings the bracket is
/// `(t_after − t_before) / 2^iters` wide and its inside end is returned.
pub fn refine_hitpoint(
    t_before: f64,
    t_after: f64,
    iters: u32,
    mut inside: impl FnMut(f64) -> bool,
) -> Result<Bracket, RenderError> {
    if !(t_before < t_after) || inside(t_before) || !inside(t_after) {
        return Err(RenderError::Bracket);
    }
    Ok(bisect(t_before, t_after, iters, |t| (inside(t), 0.0)).0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub t: f64,
    pub pos: DVec3,
    pub value: f64,
}

/// Which coarse positions a ray visits.
pub(crate) enum Stepping<'a> {
    Uniform,
    /// Only positions within (or one step around) these intervals, whose
    /// starts must be non-decreasing.
    Segments(&'a mut dyn Iterator<Item = (f64, f64)>),
    Adaptive { tree: &'a Octree, factor: f64 },
}

/// Iterator over coarse positions, yielding `(t_prev, t)` where `t_prev`
/// is the nearest earlier position known to be outside the window (equal
/// to `t` for the very first position).
pub(crate) struct Walker<'a> {
    t_enter: f64,
    t_exit: f64,
    step: f64,
    stepping: Stepping<'a>,
    next: usize,
    segment: Option<(f64, f64)>,
    last: Option<f64>,
    voxel_origin: DVec3,
    voxel_dir: DVec3,
}

impl<'a> Walker<'a> {
    pub(crate) fn new(
        ray: &Ray,
        volume: &Volume,
        interval: (f64, f64),
        step: f64,
        stepping: Stepping<'a>,
    ) -> Self {
        let s = DVec3::from_array(volume.spacing());
        Walker {
            t_enter: interval.0,
            t_exit: interval.1,
            step,
            stepping,
            next: 0,
            segment: None,
            last: None,
            voxel_origin: volume.world_to_voxel(ray.origin),
            voxel_dir: ray.dir / s,
        }
    }

    #[inline]
    fn t_at(&self, k: usize) -> f64 {
        self.t_enter + k as f64 * self.step
    }

    pub(crate) fn next_position(&mut self) -> Option<(f64, f64)> {
        let (t_enter, step) = (self.t_enter, self.step);
        let index_floor = |t: f64| ((t - t_enter) / step).floor() as isize;
        let k = match &mut self.stepping {
            Stepping::Uniform | Stepping::Adaptive { .. } => self.next,
            Stepping::Segments(segments) => loop {
                let (s0, s1) = match self.segment {
                    Some(seg) => seg,
                    None => *self.segment.insert(segments.next()?),
                };
                let lo = (index_floor(s0).max(1) - 1) as usize;
                let lo = lo.max(self.next);
                let hi = (index_floor(s1) + 1).max(0) as usize;
                if lo > hi {
                    self.segment = None;
                    continue;
                }
                break lo;
            },
        };
        let t = self.t_at(k);
        if t > self.t_exit {
            return None;
        }
        let prev = match &self.stepping {
            Stepping::Adaptive { .. } => self.last.unwrap_or(t),
            _ if k == 0 => t,
            _ => self.t_at(k - 1),
        };
        self.next = k + 1;
        if let Stepping::Adaptive { tree, factor } = self.stepping {
            self.next = k + self.adaptive_jump(tree, factor, t, k);
        }
        self.last = Some(t);
        Some((prev, t))
    }

    /// Number of grid positions to advance from `k`. Long jumps never pass
    /// the first grid position at or beyond the current leaf's exit.
    fn adaptive_jump(&self, tree: &Octree, factor: f64, t: f64, k: usize) -> usize {
        let p = self.voxel_origin + self.voxel_dir * t;
        let step = adaptive_step(tree, p, self.step, factor);
        let jump = (step / self.step).round().max(1.0) as usize;
        if jump == 1 {
            return 1;
        }
        let Some(leaf) = tree.leaf_at(p) else {
            return 1;
        };
        let (lo, hi) = leaf.bounds.as_f64();
        let Some((_, leaf_exit)) = slab_interval(self.voxel_origin, self.voxel_dir, lo, hi) else {
            return 1;
        };
        let k_exit = ((leaf_exit - self.t_enter) / self.step).ceil().max(0.0) as usize;
        jump.min(k_exit.saturating_sub(k).max(1))
    }
}

/// Finds the first surface crossing along the walker's positions.
pub(crate) fn find_surface(
    ray: &Ray,
    sampler: &mut Sampler<'_>,
    walker: &mut Walker<'_>,
    window: &ThresholdWindow,
    fine_step: f64,
    refine_iters: u32,
) -> Option<Hit> {
    loop {
        let (t_prev, t) = walker.next_position()?;
        let v = sampler.at(ray.at(t));
        if !window.contains(v) {
            continue;
        }
        let (mut t_in, mut v_in) = (t, v);
        let mut t_out = None;
        if t_prev < t {
            let mut j = 1usize;
            loop {
                let tb = t - j as f64 * fine_step;
                if tb <= t_prev {
                    t_out = Some(t_prev);
                    break;
                }
                let vb = sampler.at(ray.at(tb));
                if window.contains(vb) {
                    (t_in, v_in) = (tb, vb);
                    j += 1;
                } else {
                    t_out = Some(tb);
                    break;
                }
            }
        }
        let (t_hit, value) = match t_out {
            Some(t_out) if refine_iters > 0 => {
                let (bracket, refined) = bisect(t_out, t_in, refine_iters, |tm| {
                    let vm = sampler.at(ray.at(tm));
                    (window.contains(vm), vm)
                });
                (bracket.inside(), refined.unwrap_or(v_in))
            }
            _ => (t_in, v_in),
        };
        return Some(Hit {
            t: t_hit,
            pos: ray.at(t_hit),
            value,
        });
    }
}

/// Brute-force surface search over `interval` (from the clip box): march
/// forward by `coarse_step`, search back by `fine_step` from the first
/// in-window sample, then bisect `refine_iters` times.
pub fn march_surface(
    ray: &Ray,
    volume: &Volume,
    interval: (f64, f64),
    window: &ThresholdWindow,
    settings: &RenderSettings,
) -> Option<Hit> {
    let mut sampler = Sampler::new(volume, settings.interpolation);
    let mut walker = Walker::new(ray, volume, interval, settings.coarse_step, Stepping::Uniform);
    find_surface(
        ray,
        &mut sampler,
        &mut walker,
        window,
        settings.fine_step,
        settings.refine_iters,
    )
}
