use super::march::{find_surface, Stepping, Walker};
use super::{
    intersect_clipbox, shade, slab_interval, CompositeState, FrameBuffer, RenderError, RenderMode,
    RenderSettings, RenderStats, Sampler, Scene, ViewFrame,
};
use crate::accel::{build_octree, Octree, SkipCursor, SkipScratch};
use crate::volume::Volume;
use glam::DVec3;
use std::sync::{Arc, Mutex};
use std::time::Instant;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Immutable per-frame inputs shared by every pixel.
struct FrameContext<'a> {
    volume: &'a Volume,
    octree: Option<&'a Octree>,
    scene: &'a Scene,
    settings: &'a RenderSettings,
    view: ViewFrame,
    skip: Skip,
    background: DVec3,
    background_pixel: [u8; 4],
}

/// Empty-space skipping state for one frame.
#[derive(Clone, Copy)]
enum Skip {
    /// Disabled, or unsound because the window contains empty space (0).
    Off,
    /// No octree leaf can produce an in-window sample.
    Nothing,
    /// World-space box around every leaf that can. A ray missing it has
    /// no in-window sample, not even at the marcher's slack positions,
    /// since those lie in leaves whose range misses the window.
    Within(DVec3, DVec3),
}

impl Skip {
    fn for_frame(volume: &Volume, octree: Option<&Octree>, scene: &Scene, settings: &RenderSettings) -> Skip {
        let Some(tree) = octree else {
            return Skip::Off;
        };
        if !settings.accel.use_octree || scene.window.contains(0.0) {
            return Skip::Off;
        }
        match tree.occupied_bounds(&scene.window) {
            None => Skip::Nothing,
            Some(b) => {
                let (lo, hi) = b.as_f64();
                let pad = DVec3::from_array(volume.spacing()) * 1e-6;
                Skip::Within(
                    volume.voxel_to_world(lo) - pad,
                    volume.voxel_to_world(hi) + pad,
                )
            }
        }
    }
}

#[inline]
fn to_u8(c: f64) -> u8 {
    (c.clamp(0.0, 1.0) * 255.0).round() as u8
}

impl FrameContext<'_> {
    /// Shaded colour and opacity of a material sample.
    #[inline]
    fn classify(&self, sampler: &mut Sampler<'_>, pos: DVec3, value: f64) -> (DVec3, f64) {
        let op = self.settings.operator;
        let gradient = op.evaluate(self.volume, self.volume.world_to_voxel(pos));
        sampler.add(op.sample_count());
        // Gradients point towards denser material; the lit side faces away.
        let lit = shade(pos, -gradient.vector(), &self.scene.light);
        let rgba = self.scene.transfer.classify(value);
        (lit * DVec3::new(rgba[0], rgba[1], rgba[2]), rgba[3])
    }

    #[inline]
    fn background_pixel(&self) -> [u8; 4] {
        self.background_pixel
    }

    fn trace(
        &self,
        px: usize,
        py: usize,
        sampler: &mut Sampler<'_>,
        scratch: &mut SkipScratch,
        hits: &mut u64,
    ) -> [u8; 4] {
        let ray = self.view.ray(px, py);
        let Some(interval) = intersect_clipbox(&ray, &self.scene.clip) else {
            return self.background_pixel();
        };
        let mut cursor;
        let stepping = match self.octree {
            Some(tree) if self.settings.accel.use_adaptive => Stepping::Adaptive {
                tree,
                factor: self.settings.accel.coarse_factor,
            },
            Some(tree) if !matches!(self.skip, Skip::Off) => {
                let reaches = match self.skip {
                    Skip::Within(lo, hi) => {
                        slab_interval(ray.origin, ray.dir, lo, hi).is_some_and(|(_, t1)| t1 >= 0.0)
                    }
                    _ => false,
                };
                if !reaches {
                    return self.background_pixel();
                }
                cursor = SkipCursor::new(&ray, tree, self.volume, &self.scene.window, scratch);
                Stepping::Segments(&mut cursor)
            }
            _ => Stepping::Uniform,
        };
        let s = self.settings;
        let window = &self.scene.window;
        let mut walker = Walker::new(&ray, self.volume, interval, s.coarse_step, stepping);
        let Some(hit) = find_surface(&ray, sampler, &mut walker, window, s.fine_step, s.refine_iters)
        else {
            return self.background_pixel();
        };
        *hits += 1;

        let (color, alpha) = self.classify(sampler, hit.pos, hit.value);
        match s.mode {
            RenderMode::SurfaceOnly => [to_u8(color.x), to_u8(color.y), to_u8(color.z), 255],
            RenderMode::Composited => {
                let mut state = CompositeState::default();
                state.absorb(color, alpha);
                while !state.is_saturated() {
                    let Some((_, t)) = walker.next_position() else {
                        break;
                    };
                    let pos = ray.at(t);
                    let v = sampler.at(pos);
                    if window.contains(v) {
                        let (c, a) = self.classify(sampler, pos, v);
                        state.absorb(c, a);
                    }
                }
                let rgb = state.over(self.background);
                let a = (1.0 - state.remaining) + state.remaining * s.background[3];
                [to_u8(rgb.x), to_u8(rgb.y), to_u8(rgb.z), to_u8(a)]
            }
        }
    }

    fn row(&self, y: usize, out: &mut [[u8; 4]]) -> RenderStats {
        let mut sampler = Sampler::new(self.volume, self.settings.interpolation);
        let mut scratch = SkipScratch::default();
        let mut hits = 0;
        for (x, px) in out.iter_mut().enumerate() {
            *px = self.trace(x, y, &mut sampler, &mut scratch, &mut hits);
        }
        RenderStats {
            samples: sampler.count(),
            hits,
        }
    }
}

fn render_with(
    volume: &Volume,
    octree: Option<&Octree>,
    scene: &Scene,
    settings: &RenderSettings,
    parallel: bool,
) -> Result<FrameBuffer, RenderError> {
    settings.validate()?;
    scene.validate(volume)?;
    let start = Instant::now();
    let ctx = FrameContext {
        volume,
        octree,
        scene,
        settings,
        view: ViewFrame::new(&scene.camera, settings.width, settings.height)?,
        skip: Skip::for_frame(volume, octree, scene, settings),
        background: DVec3::new(
            settings.background[0],
            settings.background[1],
            settings.background[2],
        ),
        background_pixel: settings.background.map(to_u8),
    };
    let mut fb = FrameBuffer::new(settings.width, settings.height);
    let width = settings.width;
    let stats: RenderStats = if parallel {
        #[cfg(feature = "parallel")]
        {
            fb.pixels
                .par_chunks_mut(width)
                .enumerate()
                .map(|(y, row)| ctx.row(y, row))
                .sum()
        }
        #[cfg(not(feature = "parallel"))]
        unreachable!("parallel rendering requires the `parallel` feature")
    } else {
        fb.pixels
            .chunks_mut(width)
            .enumerate()
            .map(|(y, row)| ctx.row(y, row))
            .sum()
    };
    fb.stats = stats;
    fb.elapsed = start.elapsed();
    Ok(fb)
}

fn needs_octree(settings: &RenderSettings) -> bool {
    settings.accel.use_octree || settings.accel.use_adaptive
}

fn one_shot(
    volume: &Volume,
    scene: &Scene,
    settings: &RenderSettings,
    parallel: bool,
) -> Result<FrameBuffer, RenderError> {
    let octree = if needs_octree(settings) {
        let a = settings.accel;
        Some(build_octree(volume, a.min_block, a.max_depth).map_err(|e| RenderError::Settings(e.to_string()))?)
    } else {
        None
    };
    render_with(volume, octree.as_ref(), scene, settings, parallel)
}

/// Renders one frame, data-parallel over rows when the `parallel` feature
/// is enabled. The octree, if requested, is built for this call only; use
/// [`Renderer`] to reuse it across frames.
///
/// Output pixels do not depend on the number of worker threads.
pub fn render_frame(
    volume: &Volume,
    scene: &Scene,
    settings: &RenderSettings,
) -> Result<FrameBuffer, RenderError> {
    one_shot(volume, scene, settings, cfg!(feature = "parallel"))
}

/// Single-threaded reference path; pixel-identical to [`render_frame`].
pub fn render_frame_sequential(
    volume: &Volume,
    scene: &Scene,
    settings: &RenderSettings,
) -> Result<FrameBuffer, RenderError> {
    one_shot(volume, scene, settings, false)
}

/// A volume plus its lazily built acceleration structure.
#[derive(Debug)]
pub struct Renderer {
    volume: Arc<Volume>,
    octree: Mutex<Option<((usize, usize), Arc<Octree>)>>,
}

impl Renderer {
    pub fn new(volume: Arc<Volume>) -> Self {
        Renderer {
            volume,
            octree: Mutex::new(None),
        }
    }

    pub fn volume(&self) -> &Arc<Volume> {
        &self.volume
    }

    /// Octree for the given build parameters, built on first use.
    pub fn octree(&self, min_block: usize, max_depth: usize) -> Result<Arc<Octree>, RenderError> {
        let mut slot = self.octree.lock().unwrap_or_else(|e| e.into_inner());
        if let Some((key, tree)) = slot.as_ref() {
            if *key == (min_block, max_depth) {
                return Ok(tree.clone());
            }
        }
        let tree = Arc::new(
            build_octree(&self.volume, min_block, max_depth)
                .map_err(|e| RenderError::Settings(e.to_string()))?,
        );
        *slot = Some(((min_block, max_depth), tree.clone()));
        Ok(tree)
    }

    pub fn render(&self, scene: &Scene, settings: &RenderSettings) -> Result<FrameBuffer, RenderError> {
        self.render_impl(scene, settings, cfg!(feature = "parallel"))
    }

    pub fn render_sequential(
        &self,
        scene: &Scene,
        settings: &RenderSettings,
    ) -> Result<FrameBuffer, RenderError> {
        self.render_impl(scene, settings, false)
    }

    fn render_impl(
        &self,
        scene: &Scene,
        settings: &RenderSettings,
        parallel: bool,
    ) -> Result<FrameBuffer, RenderError> {
        let tree = if needs_octree(settings) {
            settings.validate()?;
            Some(self.octree(settings.accel.min_block, settings.accel.max_depth)?)
        } else {
            None
        };
        render_with(&self.volume, tree.as_deref(), scene, settings, parallel)
    }
}
