//! The per-pixel pipeline: ray generation, clip-box entry/exit, surface
//! marching with hit refinement, gradient shading, Hounsfield transfer and
//! optional front-to-back compositing.

mod camera;
mod clip;
mod framebuffer;
mod march;
mod render;
mod shading;

pub use camera::{generate_ray, Camera, Ray, ViewFrame};
pub use clip::{intersect_clipbox, slab_interval, ClipBox};
pub use framebuffer::{FrameBuffer, RenderStats};
pub use march::{march_surface, refine_hitpoint, Bracket, Hit, Sampler, ThresholdWindow};
pub use render::{render_frame, render_frame_sequential, Renderer};
pub use shading::{
    composite_step, hounsfield, shade, transfer, Breakpoint, CompositeState, Light,
    TransferFunction,
};

use crate::gradient::OperatorKind;
use crate::volume::{InterpolationMode, Volume};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RenderError {
    #[error("invalid camera: {0}")]
    Camera(String),
    #[error("invalid render settings: {0}")]
    Settings(String),
    #[error("pixel ({px}, {py}) outside {width}x{height}")]
    PixelOutOfRange {
        px: usize,
        py: usize,
        width: usize,
        height: usize,
    },
    #[error("invalid clip box: {0}")]
    ClipBox(String),
    #[error("threshold window low {low} exceeds high {high}")]
    Window { low: f64, high: f64 },
    #[error("refinement bracket is invalid: start must be outside the window and end inside")]
    Bracket,
    #[error("water attenuation must be positive, got {0}")]
    MuWater(f64),
    #[error("invalid transfer function: {0}")]
    Lut(String),
    #[error("opacity {0} outside [0, 1]")]
    Alpha(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub enum RenderMode {
    /// Shade the first surface crossing only.
    #[default]
    SurfaceOnly,
    /// Accumulate every in-window sample front to back.
    Composited,
}

impl RenderMode {
    pub fn name(self) -> &'static str {
        match self {
            RenderMode::SurfaceOnly => "surface",
            RenderMode::Composited => "composited",
        }
    }
}

impl std::fmt::Display for RenderMode {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

impl std::str::FromStr for RenderMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "surface" => Ok(RenderMode::SurfaceOnly),
            "composited" => Ok(RenderMode::Composited),
            other => Err(format!("unknown mode {other:?} (expected surface or composited)")),
        }
    }
}

/// Octree acceleration switches.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccelSettings {
    /// Skip ray intervals whose octree leaves cannot reach the threshold window.
    pub use_octree: bool,
    /// Take longer steps through low-detail leaves.
    pub use_adaptive: bool,
    pub min_block: usize,
    pub max_depth: usize,
    pub coarse_factor: f64,
}

impl Default for AccelSettings {
    fn default() -> Self {
        AccelSettings {
            use_octree: true,
            use_adaptive: false,
            min_block: 4,
            max_depth: 8,
            coarse_factor: 4.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RenderSettings {
    pub width: usize,
    pub height: usize,
    pub operator: OperatorKind,
    pub interpolation: InterpolationMode,
    pub mode: RenderMode,
    /// Forward marching step, world units.
    pub coarse_step: f64,
    /// Backward search step after the first in-window sample, world units.
    pub fine_step: f64,
    pub refine_iters: u32,
    /// Straight RGBA, channels in `[0, 1]`.
    pub background: [f64; 4],
    pub accel: AccelSettings,
}

impl Default for RenderSettings {
    fn default() -> Self {
        RenderSettings {
            width: 640,
            height: 480,
            operator: OperatorKind::CentralDifference,
            interpolation: InterpolationMode::Trilinear,
            mode: RenderMode::SurfaceOnly,
            coarse_step: 1.0,
            fine_step: 0.125,
            refine_iters: 6,
            background: [0.0, 0.0, 0.0, 1.0],
            accel: AccelSettings::default(),
        }
    }
}

impl RenderSettings {
    /// Default steps scaled to the smallest voxel edge of `volume`.
    pub fn for_volume(volume: &Volume) -> Self {
        let edge = volume.spacing().iter().cloned().fold(f64::INFINITY, f64::min);
        RenderSettings {
            coarse_step: edge,
            fine_step: edge / 8.0,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        let bad = |m: &str| Err(RenderError::Settings(m.to_owned()));
        if self.width == 0 || self.height == 0 {
            return bad("width and height must be positive");
        }
        if !(self.coarse_step.is_finite() && self.fine_step.is_finite()) {
            return bad("steps must be finite");
        }
        if !(self.fine_step > 0.0 && self.fine_step <= self.coarse_step) {
            return bad("need 0 < fine_step <= coarse_step");
        }
        if self.refine_iters > 64 {
            return bad("refine_iters above 64 is below f64 resolution");
        }
        if self.background.iter().any(|c| !(0.0..=1.0).contains(c)) {
            return bad("background channels must lie in [0, 1]");
        }
        if self.accel.min_block == 0 {
            return bad("min_block must be at least 1");
        }
        if !(self.accel.coarse_factor.is_finite() && self.accel.coarse_factor >= 1.0) {
            return bad("coarse_factor must be >= 1");
        }
        Ok(())
    }
}

/// Everything about a frame that is not a render-quality knob.
#[derive(Debug, Clone, PartialEq)]
pub struct Scene {
    pub camera: Camera,
    pub light: Light,
    pub clip: ClipBox,
    pub window: ThresholdWindow,
    pub transfer: TransferFunction,
}

impl Scene {
    /// Camera on the −z side of the volume centre, light at the eye, full
    /// clip box, window `[1000, 4095]`, default CT colour table.
    pub fn for_volume(volume: &Volume) -> Self {
        let camera = Camera::orbiting(volume);
        Scene {
            light: Light::at(camera.eye()),
            camera,
            clip: ClipBox::full(volume),
            window: ThresholdWindow::new(1000.0, 4095.0).expect("static window"),
            transfer: TransferFunction::default(),
        }
    }

    pub fn validate(&self, volume: &Volume) -> Result<(), RenderError> {
        self.camera.validate()?;
        self.clip.validate()?;
        if !self.clip.is_within(volume) {
            return Err(RenderError::ClipBox("clip box exceeds the volume extent".into()));
        }
        if !(self.light.position.is_finite() && self.light.color.is_finite()) {
            return Err(RenderError::Settings("light must be finite".into()));
        }
        Ok(())
    }
}

/// The four resolutions offered by the interactive viewer and benchmarked.
pub const STANDARD_RESOLUTIONS: [(usize, usize); 4] =
    [(512, 384), (640, 480), (800, 600), (1024, 768)];
