//! CPU volume raycaster for 12-bit CT-style voxel grids.
//!
//! The pipeline per pixel: generate a primary ray, clip it against a box,
//! march coarsely forward and finely backward to bracket the threshold
//! surface, bisect the bracket, then estimate a gradient for Lambert shading
//! and classify the sample through a Hounsfield lookup table. Optionally the
//! march continues past the surface and composites translucent samples.
//!
//! Frames are parallel over rows with rayon when the default `parallel`
//! feature is enabled; without it every entry point runs on the caller's
//! thread. Either way the pixels are identical.

pub mod accel;
pub mod bench;
pub mod gradient;
pub mod raycaster;
pub mod volume;

pub use gradient::{Gradient, OperatorKind};
pub use raycaster::{
    render_frame, render_frame_sequential, Camera, ClipBox, FrameBuffer, Light, RenderError,
    RenderMode, RenderSettings, Renderer, Scene, ThresholdWindow, TransferFunction,
};
pub use volume::{make_phantom, InterpolationMode, Phantom, Volume, VolumeError};

/// Whether this build renders frames on a rayon pool.
pub const PARALLEL: bool = cfg!(feature = "parallel");

/// Workers a frame is spread over on the calling thread's pool.
pub fn worker_threads() -> usize {
    #[cfg(feature = "parallel")]
    {
        rayon::current_num_threads()
    }
    #[cfg(not(feature = "parallel"))]
    {
        1
    }
}
