use super::{Octree, OctreeNode};
use crate::raycaster::{Ray, ThresholdWindow};
use crate::volume::Volume;
use glam::DVec3;

/// Slack added around each interval so float rounding between voxel-space
/// and world-space positions never drops a boundary sample.
const PAD: f64 = 1e-6;

/// Sorted, disjoint ray parameter intervals that may contain in-window
/// samples.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RaySegmentList(Vec<(f64, f64)>);

impl RaySegmentList {
    pub fn as_slice(&self) -> &[(f64, f64)] {
        &self.0
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn covers(&self, t: f64) -> bool {
        self.0.iter().any(|&(a, b)| a <= t && t <= b)
    }

    pub fn total_length(&self) -> f64 {
        self.0.iter().map(|(a, b)| b - a).sum()
    }

    #[cfg(test)]
    fn from_unsorted(mut v: Vec<(f64, f64)>) -> Self {
        merge_in_place(&mut v);
        RaySegmentList(v)
    }
}

/// The ray in voxel coordinates, with its reciprocal direction.
struct VoxelRay {
    origin: DVec3,
    dir: DVec3,
    inv: DVec3,
}

impl VoxelRay {
    fn new(origin: DVec3, dir: DVec3) -> Self {
        VoxelRay {
            origin,
            dir,
            inv: dir.recip(),
        }
    }

    /// Slab test clamped to `t ≥ 0`.
    fn span(&self, (lo, hi): (DVec3, DVec3)) -> Option<(f64, f64)> {
        let mut t0 = 0.0f64;
        let mut t1 = f64::INFINITY;
        for k in 0..3 {
            let (o, inv) = (self.origin[k], self.inv[k]);
            if inv.is_infinite() {
                if o < lo[k] || o > hi[k] {
                    return None;
                }
                continue;
            }
            let (n, f) = ((lo[k] - o) * inv, (hi[k] - o) * inv);
            t0 = t0.max(n.min(f));
            t1 = t1.min(n.max(f));
        }
        (t0 <= t1).then_some((t0, t1))
    }
}

/// Reusable buffers for [`skip_empty_into`]; one per worker avoids
/// allocating on every ray.
#[derive(Debug, Default)]
pub struct SkipScratch {
    stack: Vec<(usize, (f64, f64))>,
    out: Vec<(f64, f64)>,
}

/// Front-to-back traversal of the octree emitting the parameter intervals
/// (`t ≥ 0`, world units along `ray`) of leaves whose value range meets
/// `window`. Subtrees whose range misses the window are pruned whole.
///
/// Only the grid region `[0, n−1]³` is described; samples outside it read
/// as `0`, so callers must not skip when `window` contains `0`.
pub fn skip_empty(
    ray: &Ray,
    tree: &Octree,
    volume: &Volume,
    window: &ThresholdWindow,
) -> RaySegmentList {
    let mut scratch = SkipScratch::default();
    RaySegmentList(skip_empty_into(ray, tree, volume, window, &mut scratch).to_vec())
}

/// As [`skip_empty`], writing into caller-owned buffers. The returned slice
/// is sorted and disjoint.
pub fn skip_empty_into<'s>(
    ray: &Ray,
    tree: &Octree,
    volume: &Volume,
    window: &ThresholdWindow,
    scratch: &'s mut SkipScratch,
) -> &'s [(f64, f64)] {
    let mut out = std::mem::take(&mut scratch.out);
    out.clear();
    out.extend(SkipCursor::new(ray, tree, volume, window, scratch));
    merge_in_place(&mut out);
    scratch.out = out;
    &scratch.out
}

/// Lazy form of [`skip_empty`]: yields padded leaf intervals front to back,
/// unmerged, so a caller that stops at the first surface never visits the
/// nodes behind it. Consecutive items may touch or overlap slightly but
/// their starts never decrease.
pub struct SkipCursor<'s> {
    tree: &'s Octree,
    window: ThresholdWindow,
    ray: VoxelRay,
    root_span: (f64, f64),
    /// Per axis, whether the upper child half is reached first.
    descending: [bool; 3],
    stack: &'s mut Vec<(usize, (f64, f64))>,
}

impl<'s> SkipCursor<'s> {
    pub fn new(
        ray: &Ray,
        tree: &'s Octree,
        volume: &Volume,
        window: &ThresholdWindow,
        scratch: &'s mut SkipScratch,
    ) -> Self {
        let SkipScratch { stack, .. } = scratch;
        stack.clear();
        stack.reserve(8 * tree.max_depth().max(1));
        let s = DVec3::from_array(volume.spacing());
        let vray = VoxelRay::new(volume.world_to_voxel(ray.origin), ray.dir / s);
        let root = tree.root();
        let mut root_span = (0.0, 0.0);
        if window.overlaps(root.vmin as f64, root.vmax as f64) {
            if let Some(span) = vray.span(tree.bounds_f64(0)) {
                root_span = span;
                stack.push((0, span));
            }
        }
        SkipCursor {
            tree,
            window: *window,
            ray: vray,
            root_span,
            descending: (ray.dir / s).to_array().map(|d| d < 0.0),
            stack,
        }
    }
}

impl SkipCursor<'_> {
    /// Pushes the children the ray crosses, farthest first, each with its
    /// exact sub-span of `(t0, t1)`. Crossing parameters of the split planes
    /// order the children; a ray lying in a split plane is assigned to one
    /// side, which is sound because both closed boxes contain that plane.
    fn push_children(&mut self, node: &OctreeNode, (t0, t1): (f64, f64)) {
        let counts = node.split_counts();
        let base = node.first_child_index();
        // The first child is the lower half on every split axis.
        let mid = self.tree.bounds_f64(base).1;
        let centre = self.ray.origin + self.ray.dir * (0.5 * (t0 + t1));
        let mut side = [0usize; 3];
        let mut crossings = [(0.0f64, 0usize); 3];
        let mut n = 0;
        for a in 0..3 {
            if counts[a] == 1 {
                continue;
            }
            let tm = (mid[a] - self.ray.origin[a]) * self.ray.inv[a];
            if tm > t0 && tm < t1 {
                side[a] = usize::from(self.descending[a]);
                crossings[n] = (tm, a);
                n += 1;
            } else {
                side[a] = usize::from(centre[a] >= mid[a]);
            }
        }
        let crossings = &mut crossings[..n];
        // At most three entries.
        for i in 1..n {
            let mut k = i;
            while k > 0 && crossings[k].0 < crossings[k - 1].0 {
                crossings.swap(k, k - 1);
                k -= 1;
            }
        }

        let child = |side: &[usize; 3]| base + side[0] + counts[0] * (side[1] + counts[1] * side[2]);
        let mut visits = [(0usize, (0.0f64, 0.0f64)); 4];
        let mut start = t0;
        for (k, &(tm, a)) in crossings.iter().enumerate() {
            visits[k] = (child(&side), (start, tm));
            side[a] ^= 1;
            start = tm;
        }
        visits[n] = (child(&side), (start, t1));

        let nodes = self.tree.nodes();
        for &(j, span) in visits[..=n].iter().rev() {
            let c = &nodes[j];
            if self.window.overlaps(c.vmin as f64, c.vmax as f64) {
                self.stack.push((j, span));
            }
        }
    }
}

impl Iterator for SkipCursor<'_> {
    type Item = (f64, f64);

    fn next(&mut self) -> Option<(f64, f64)> {
        let nodes = self.tree.nodes();
        while let Some((i, span)) = self.stack.pop() {
            let node = &nodes[i];
            if node.is_leaf() {
                return Some((
                    (span.0 - PAD).max(self.root_span.0),
                    (span.1 + PAD).min(self.root_span.1),
                ));
            }
            self.push_children(node, span);
        }
        None
    }
}

fn merge_in_place(v: &mut Vec<(f64, f64)>) {
    v.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
    let mut w = 0;
    for r in 0..v.len() {
        let (a, b) = v[r];
        if w > 0 && a <= v[w - 1].1 {
            v[w - 1].1 = v[w - 1].1.max(b);
        } else {
            v[w] = (a, b);
            w += 1;
        }
    }
    v.truncate(w);
}
