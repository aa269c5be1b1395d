use crate::protocol::ControlMessage;
use std::collections::BTreeMap;
use std::sync::Arc;
use volcast_core::raycaster::STANDARD_RESOLUTIONS;
use volcast_core::{
    ClipBox, FrameBuffer, Light, OperatorKind, RenderError, RenderMode, RenderSettings, Renderer,
    Scene, ThresholdWindow, Volume,
};

/// Frames larger than this per side are refused.
pub const MAX_FRAME_SIDE: usize = 4096;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ControlError {
    #[error("unknown dataset {0:?}")]
    UnknownDataset(String),
    #[error("{0}")]
    Invalid(String),
    #[error(transparent)]
    Render(#[from] RenderError),
}

/// Named datasets the viewer may switch between. Each keeps its own
/// renderer so octrees are built once per dataset.
#[derive(Clone, Default)]
pub struct DatasetCatalog {
    entries: BTreeMap<String, Arc<Renderer>>,
}

impl DatasetCatalog {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn insert(&mut self, id: impl Into<String>, volume: Volume) {
        self.entries
            .insert(id.into(), Arc::new(Renderer::new(Arc::new(volume))));
    }

    pub fn get(&self, id: &str) -> Option<&Arc<Renderer>> {
        self.entries.get(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.entries.keys().map(String::as_str)
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }
}

impl std::fmt::Debug for DatasetCatalog {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_list().entries(self.ids()).finish()
    }
}

/// Everything needed to render the next frame. Only [`apply_control`]
/// changes it, and only to states that validate.
#[derive(Debug, Clone, PartialEq)]
pub struct SessionState {
    pub dataset: String,
    pub scene: Scene,
    pub settings: RenderSettings,
    /// Id of the last delivered frame; 0 before the first.
    pub frame_counter: u64,
    pub last_render_ms: Option<f64>,
}

impl SessionState {
    /// Default view of `dataset` at the smallest standard resolution.
    pub fn initial(catalog: &DatasetCatalog, dataset: &str) -> Result<Self, ControlError> {
        let renderer = catalog
            .get(dataset)
            .ok_or_else(|| ControlError::UnknownDataset(dataset.to_owned()))?;
        let volume = renderer.volume();
        let (width, height) = STANDARD_RESOLUTIONS[0];
        Ok(SessionState {
            dataset: dataset.to_owned(),
            scene: Scene::for_volume(volume),
            settings: RenderSettings {
                width,
                height,
                ..RenderSettings::for_volume(volume)
            },
            frame_counter: 0,
            last_render_ms: None,
        })
    }

    pub fn validate(&self, catalog: &DatasetCatalog) -> Result<(), ControlError> {
        let renderer = catalog
            .get(&self.dataset)
            .ok_or_else(|| ControlError::UnknownDataset(self.dataset.clone()))?;
        self.settings.validate()?;
        self.scene.validate(renderer.volume())?;
        Ok(())
    }

    /// Renders the state and advances the frame counter.
    pub fn render(&mut self, catalog: &DatasetCatalog) -> Result<(u64, FrameBuffer), ControlError> {
        let renderer = catalog
            .get(&self.dataset)
            .ok_or_else(|| ControlError::UnknownDataset(self.dataset.clone()))?;
        let frame = renderer.render(&self.scene, &self.settings)?;
        self.frame_counter += 1;
        self.last_render_ms = Some(frame.elapsed.as_secs_f64() * 1e3);
        Ok((self.frame_counter, frame))
    }
}

fn finite(values: &[f64], what: &str) -> Result<(), ControlError> {
    if values.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(ControlError::Invalid(format!("{what} must be finite")))
    }
}

/// Applies one control to a copy of `state`. The result is validated as a
/// whole, so an error always leaves the caller's state untouched.
pub fn apply_control(
    state: &SessionState,
    msg: &ControlMessage,
    catalog: &DatasetCatalog,
) -> Result<SessionState, ControlError> {
    let mut next = state.clone();
    match msg {
        ControlMessage::SetOrbit { azimuth, elevation } => {
            finite(&[*azimuth, *elevation], "orbit angles")?;
            if elevation.abs() >= 90.0 {
                return Err(ControlError::Invalid("elevation must lie in (-90, 90)".into()));
            }
            next.scene.camera.azimuth = *azimuth;
            next.scene.camera.elevation = *elevation;
        }
        ControlMessage::SetZoom { zoom } => {
            next.scene.camera.zoom = *zoom;
        }
        ControlMessage::SetLight { x, y, z } => {
            finite(&[*x, *y, *z], "light position")?;
            next.scene.light.position = glam::DVec3::new(*x, *y, *z);
        }
        ControlMessage::SetClipBox { lo, hi } => {
            next.scene.clip = ClipBox::new(glam::DVec3::from_array(*lo), glam::DVec3::from_array(*hi))?;
        }
        ControlMessage::SetThresholds { t_low, t_high } => {
            next.scene.window = ThresholdWindow::new(*t_low, *t_high)?;
        }
        ControlMessage::SetOperator { name } => {
            next.settings.operator = name.parse::<OperatorKind>().map_err(ControlError::Invalid)?;
        }
        ControlMessage::SetResolution { width, height } => {
            if *width > MAX_FRAME_SIDE || *height > MAX_FRAME_SIDE {
                return Err(ControlError::Invalid(format!(
                    "resolution {width}x{height} exceeds {MAX_FRAME_SIDE} per side"
                )));
            }
            next.settings.width = *width;
            next.settings.height = *height;
        }
        ControlMessage::SetDataset { id } => {
            let renderer = catalog
                .get(id)
                .ok_or_else(|| ControlError::UnknownDataset(id.clone()))?;
            // Geometry follows the new dataset; viewing choices carry over.
            let volume = renderer.volume();
            let old = &state.scene;
            let mut scene = Scene::for_volume(volume);
            scene.camera.azimuth = old.camera.azimuth;
            scene.camera.elevation = old.camera.elevation;
            scene.camera.zoom = old.camera.zoom;
            scene.light = Light::at(scene.camera.eye());
            scene.window = old.window;
            scene.transfer = old.transfer.clone();
            next.scene = scene;
            next.settings = RenderSettings {
                width: state.settings.width,
                height: state.settings.height,
                operator: state.settings.operator,
                mode: state.settings.mode,
                ..RenderSettings::for_volume(volume)
            };
            next.dataset = id.clone();
        }
        ControlMessage::SetMode { mode } => {
            next.settings.mode = mode.parse::<RenderMode>().map_err(ControlError::Invalid)?;
        }
        ControlMessage::RequestFrame => {}
    }
    next.validate(catalog)?;
    Ok(next)
}

#[cfg(test)]
mod tests {
    use super::*;
    use volcast_core::{make_phantom, Phantom};

    fn catalog() -> DatasetCatalog {
        let mut c = DatasetCatalog::new();
        c.insert("sphere", make_phantom(Phantom::default_sphere(32), [32; 3]).unwrap());
        c.insert(
            "shell",
            make_phantom(
                Phantom::SphericalShell {
                    inner: 8.0,
                    outer: 12.0,
                    value: 2000.0,
                },
                [40, 40, 40],
            )
            .unwrap(),
        );
        c
    }

    #[test]
    fn inverted_thresholds_leave_state_unchanged() {
        let c = catalog();
        let s = SessionState::initial(&c, "sphere").unwrap();
        let msg = ControlMessage::SetThresholds {
            t_low: 500.0,
            t_high: 100.0,
        };
        assert!(matches!(
            apply_control(&s, &msg, &c),
            Err(ControlError::Render(RenderError::Window { .. }))
        ));
    }

    #[test]
    fn absolute_controls_are_idempotent() {
        let c = catalog();
        let s = SessionState::initial(&c, "sphere").unwrap();
        let zoom = ControlMessage::SetZoom { zoom: 2.0 };
        let once = apply_control(&s, &zoom, &c).unwrap();
        let twice = apply_control(&once, &zoom, &c).unwrap();
        assert_eq!(once, twice);
        assert_eq!(once.scene.camera.zoom, 2.0);
    }

    #[test]
    fn invalid_payloads_are_refused() {
        let c = catalog();
        let s = SessionState::initial(&c, "sphere").unwrap();
        let bad = [
            ControlMessage::SetZoom { zoom: 0.0 },
            ControlMessage::SetZoom { zoom: f64::NAN },
            ControlMessage::SetOrbit {
                azimuth: 0.0,
                elevation: 90.0,
            },
            ControlMessage::SetLight {
                x: f64::INFINITY,
                y: 0.0,
                z: 0.0,
            },
            ControlMessage::SetClipBox {
                lo: [5.0; 3],
                hi: [1.0; 3],
            },
            ControlMessage::SetClipBox {
                lo: [0.0; 3],
                hi: [100.0; 3],
            },
            ControlMessage::SetOperator {
                name: "laplace".into(),
            },
            ControlMessage::SetResolution {
                width: 0,
                height: 10,
            },
            ControlMessage::SetResolution {
                width: 100_000,
                height: 10,
            },
            ControlMessage::SetDataset { id: "bunny".into() },
            ControlMessage::SetMode { mode: "xray".into() },
        ];
        for msg in &bad {
            assert!(apply_control(&s, msg, &c).is_err(), "{msg:?}");
        }
    }

    #[test]
    fn switching_dataset_keeps_view_choices() {
        let c = catalog();
        let mut s = SessionState::initial(&c, "sphere").unwrap();
        for msg in [
            ControlMessage::SetOperator {
                name: "zucker-hummel".into(),
            },
            ControlMessage::SetOrbit {
                azimuth: 40.0,
                elevation: 10.0,
            },
            ControlMessage::SetResolution {
                width: 64,
                height: 48,
            },
        ] {
            s = apply_control(&s, &msg, &c).unwrap();
        }
        let t = apply_control(&s, &ControlMessage::SetDataset { id: "shell".into() }, &c).unwrap();
        assert_eq!(t.dataset, "shell");
        assert_eq!(t.settings.operator, OperatorKind::ZuckerHummel);
        assert_eq!((t.settings.width, t.settings.height), (64, 48));
        assert_eq!(t.scene.camera.azimuth, 40.0);
        assert_eq!(t.scene.clip, ClipBox::full(c.get("shell").unwrap().volume()));
    }

    #[test]
    fn frame_ids_increase() {
        let c = catalog();
        let mut s = SessionState::initial(&c, "sphere").unwrap();
        s.settings.width = 16;
        s.settings.height = 12;
        let (a, _) = s.render(&c).unwrap();
        let (b, fb) = s.render(&c).unwrap();
        assert!(b > a);
        assert_eq!((fb.width, fb.height), (16, 12));
        assert!(s.last_render_ms.is_some());
    }
}
