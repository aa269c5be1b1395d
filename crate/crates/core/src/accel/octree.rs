use super::AccelError;
use crate::raycaster::ThresholdWindow;
use crate::volume::Volume;
use glam::DVec3;

/// Closed box of lattice points `lo..=hi` per axis. As a continuous region
/// it is `[lo, hi]` in voxel coordinates; every interpolated sample inside
/// that region depends only on lattice points of the box.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct VoxelBox {
    pub lo: [usize; 3],
    pub hi: [usize; 3],
}

impl VoxelBox {
    pub fn extent(&self, axis: usize) -> usize {
        self.hi[axis] - self.lo[axis]
    }

    pub fn as_f64(&self) -> (DVec3, DVec3) {
        (
            DVec3::new(self.lo[0] as f64, self.lo[1] as f64, self.lo[2] as f64),
            DVec3::new(self.hi[0] as f64, self.hi[1] as f64, self.hi[2] as f64),
        )
    }

    pub fn contains(&self, p: DVec3) -> bool {
        let (lo, hi) = self.as_f64();
        p.cmpge(lo).all() && p.cmple(hi).all()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OctreeNode {
    pub bounds: VoxelBox,
    pub vmin: u16,
    pub vmax: u16,
    pub depth: u32,
    first_child: u32,
    child_count: u8,
    /// Bit `a` set when axis `a` was halved to form the children.
    split: u8,
}

impl OctreeNode {
    pub fn is_leaf(&self) -> bool {
        self.child_count == 0
    }

    pub(crate) fn first_child_index(&self) -> usize {
        self.first_child as usize
    }

    /// Children per axis (1 or 2). Child `(bx, by, bz)` sits at offset
    /// `bx + nx·(by + ny·bz)` from the first child.
    pub(crate) fn split_counts(&self) -> [usize; 3] {
        std::array::from_fn(|a| 1 + ((self.split >> a) & 1) as usize)
    }
}

/// Flat min/max octree. Node 0 is the root.
#[derive(Debug, Clone)]
pub struct Octree {
    nodes: Vec<OctreeNode>,
    /// `nodes[i].bounds` as floats, kept alongside for the traversal.
    bounds_f64: Vec<(DVec3, DVec3)>,
    max_depth: usize,
    min_block: usize,
    detail_epsilon: f64,
}

fn extrema(volume: &Volume, b: &VoxelBox) -> (u16, u16) {
    let data = volume.data();
    let mut lo = u16::MAX;
    let mut hi = u16::MIN;
    for z in b.lo[2]..=b.hi[2] {
        for y in b.lo[1]..=b.hi[1] {
            let start = volume.index(b.lo[0], y, z);
            let row = &data[start..=start + b.extent(0)];
            for &v in row {
                lo = lo.min(v);
                hi = hi.max(v);
            }
        }
    }
    (lo, hi)
}

/// Builds the tree top-down with an explicit work stack.
///
/// A node becomes a leaf at `max_depth`, when every axis spans at most
/// `min_block` cells, or when all its voxels share one value. Otherwise each
/// axis spanning at least two cells is halved (floor/ceil for odd spans);
/// children share their boundary lattice plane. Axes spanning a single cell
/// are not split, so thin boxes get 2 or 4 children instead of 8.
pub fn build_octree(volume: &Volume, min_block: usize, max_depth: usize) -> Result<Octree, AccelError> {
    if min_block == 0 {
        return Err(AccelError::MinBlock);
    }
    let dims = volume.dims();
    let root_box = VoxelBox {
        lo: [0; 3],
        hi: dims.map(|d| d - 1),
    };
    let (vmin, vmax) = extrema(volume, &root_box);
    let mut nodes = vec![OctreeNode {
        bounds: root_box,
        vmin,
        vmax,
        depth: 0,
        first_child: 0,
        child_count: 0,
        split: 0,
    }];
    let mut stack = vec![0usize];
    while let Some(i) = stack.pop() {
        let node = nodes[i];
        let b = node.bounds;
        let small = (0..3).all(|a| b.extent(a) <= min_block);
        let splittable: Vec<usize> = (0..3).filter(|&a| b.extent(a) >= 2).collect();
        if node.depth as usize >= max_depth || small || node.vmin == node.vmax || splittable.is_empty()
        {
            continue;
        }
        // Per-axis halves; unsplit axes keep the full range.
        let halves: [Vec<(usize, usize)>; 3] = std::array::from_fn(|a| {
            if splittable.contains(&a) {
                let mid = b.lo[a] + b.extent(a) / 2;
                vec![(b.lo[a], mid), (mid, b.hi[a])]
            } else {
                vec![(b.lo[a], b.hi[a])]
            }
        });
        let first = nodes.len();
        for &(z0, z1) in &halves[2] {
            for &(y0, y1) in &halves[1] {
                for &(x0, x1) in &halves[0] {
                    let bounds = VoxelBox {
                        lo: [x0, y0, z0],
                        hi: [x1, y1, z1],
                    };
                    let (vmin, vmax) = extrema(volume, &bounds);
                    nodes.push(OctreeNode {
                        bounds,
                        vmin,
                        vmax,
                        depth: node.depth + 1,
                        first_child: 0,
                        child_count: 0,
                        split: 0,
                    });
                }
            }
        }
        let count = nodes.len() - first;
        nodes[i].first_child = first as u32;
        nodes[i].child_count = count as u8;
        nodes[i].split = splittable.iter().map(|&a| 1u8 << a).sum();
        stack.extend(first..nodes.len());
    }
    let range = (volume.value_max() - volume.value_min()) as f64;
    Ok(Octree {
        bounds_f64: nodes.iter().map(|n| n.bounds.as_f64()).collect(),
        nodes,
        max_depth,
        min_block,
        detail_epsilon: (0.01 * range).max(1.0),
    })
}

impl Octree {
    pub fn root(&self) -> &OctreeNode {
        &self.nodes[0]
    }

    pub fn nodes(&self) -> &[OctreeNode] {
        &self.nodes
    }

    #[inline]
    pub(crate) fn bounds_f64(&self, i: usize) -> (DVec3, DVec3) {
        self.bounds_f64[i]
    }

    pub fn children(&self, node: &OctreeNode) -> &[OctreeNode] {
        let start = node.first_child as usize;
        &self.nodes[start..start + node.child_count as usize]
    }

    pub fn leaves(&self) -> impl Iterator<Item = &OctreeNode> {
        self.nodes.iter().filter(|n| n.is_leaf())
    }

    pub fn max_depth(&self) -> usize {
        self.max_depth
    }

    pub fn min_block(&self) -> usize {
        self.min_block
    }

    /// Value range below which a leaf counts as low-detail: 1% of the
    /// volume's range, but never less than one quantization step.
    pub fn detail_epsilon(&self) -> f64 {
        self.detail_epsilon
    }

    pub fn with_detail_epsilon(mut self, epsilon: f64) -> Self {
        self.detail_epsilon = epsilon;
        self
    }

    /// Smallest box containing every leaf whose value range meets `window`,
    /// or `None` when no leaf does.
    pub fn occupied_bounds(&self, window: &ThresholdWindow) -> Option<VoxelBox> {
        let mut acc: Option<VoxelBox> = None;
        let mut stack = vec![0usize];
        while let Some(i) = stack.pop() {
            let node = &self.nodes[i];
            if !window.overlaps(node.vmin as f64, node.vmax as f64) {
                continue;
            }
            if !node.is_leaf() {
                let first = node.first_child as usize;
                stack.extend(first..first + node.child_count as usize);
                continue;
            }
            let b = node.bounds;
            acc = Some(match acc {
                None => b,
                Some(a) => VoxelBox {
                    lo: std::array::from_fn(|k| a.lo[k].min(b.lo[k])),
                    hi: std::array::from_fn(|k| a.hi[k].max(b.hi[k])),
                },
            });
        }
        acc
    }

    /// Leaf whose closed box holds the voxel-space point `p` (the first
    /// match on shared faces), or `None` outside the grid.
    pub fn leaf_at(&self, p: DVec3) -> Option<&OctreeNode> {
        let mut node = self.root();
        if !node.bounds.contains(p) {
            return None;
        }
        while !node.is_leaf() {
            node = self
                .children(node)
                .iter()
                .find(|c| c.bounds.contains(p))
                .expect("children cover their parent");
        }
        Some(node)
    }
}
