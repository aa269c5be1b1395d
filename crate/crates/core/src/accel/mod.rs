//! Octree acceleration: value-range hierarchy over the voxel grid, used to
//! skip ray intervals that cannot reach the threshold window and to take
//! longer steps through low-detail regions.

mod octree;
mod skip;

pub use octree::{build_octree, Octree, OctreeNode, VoxelBox};
pub use skip::{skip_empty, skip_empty_into, RaySegmentList, SkipCursor, SkipScratch};

use glam::DVec3;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AccelError {
    #[error("min_block must be at least 1")]
    MinBlock,
}

/// Step length at voxel-space position `pos`: `base_step · coarse_factor`
/// inside low-detail leaves (value range below the tree's detail epsilon)
/// and outside the grid, `base_step` elsewhere.
pub fn adaptive_step(tree: &Octree, pos: DVec3, base_step: f64, coarse_factor: f64) -> f64 {
    let factor = coarse_factor.max(1.0);
    match tree.leaf_at(pos) {
        Some(leaf) if (leaf.vmax - leaf.vmin) as f64 >= tree.detail_epsilon() => base_step,
        _ => base_step * factor,
    }
}
