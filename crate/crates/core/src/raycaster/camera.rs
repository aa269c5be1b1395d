use super::RenderError;
use crate::volume::Volume;
use glam::DVec3;

/// Pinhole camera orbiting `target`.
///
/// The eye sits at `target + offset(azimuth, elevation) · distance / zoom`
/// where `offset(0, 0) = −z`; positive azimuth swings towards +x and positive
/// elevation towards +y.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Camera {
    pub target: DVec3,
    pub up: DVec3,
    /// Vertical field of view in degrees.
    pub fov_y: f64,
    pub distance: f64,
    pub azimuth: f64,
    pub elevation: f64,
    pub zoom: f64,
}

impl Camera {
    /// Looks at the volume centre from twice its largest extent.
    pub fn orbiting(volume: &Volume) -> Self {
        let extent = volume.world_extent();
        Camera {
            target: volume.world_center(),
            up: DVec3::Y,
            fov_y: 45.0,
            distance: 2.0 * extent.max_element(),
            azimuth: 0.0,
            elevation: 0.0,
            zoom: 1.0,
        }
    }

    pub fn eye(&self) -> DVec3 {
        let (az, el) = (self.azimuth.to_radians(), self.elevation.to_radians());
        let offset = DVec3::new(az.sin() * el.cos(), el.sin(), -az.cos() * el.cos());
        self.target + offset * (self.distance / self.zoom)
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        let bad = |m: &str| Err(RenderError::Camera(m.to_owned()));
        if !(self.target.is_finite() && self.up.is_finite()) {
            return bad("target and up must be finite");
        }
        if !(self.fov_y > 0.0 && self.fov_y < 180.0) {
            return bad("fov_y must lie in (0, 180)");
        }
        if !(self.zoom.is_finite() && self.zoom > 0.0) {
            return bad("zoom must be positive");
        }
        if !(self.distance.is_finite() && self.distance > 0.0) {
            return bad("distance must be positive");
        }
        if !(self.azimuth.is_finite() && self.elevation.is_finite()) {
            return bad("orbit angles must be finite");
        }
        let forward = (self.target - self.eye()).normalize_or_zero();
        if forward == DVec3::ZERO || forward.cross(self.up).length() < 1e-9 {
            return bad("view direction is parallel to up");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: DVec3,
    /// Unit length.
    pub dir: DVec3,
}

impl Ray {
    pub fn new(origin: DVec3, dir: DVec3) -> Self {
        Ray {
            origin,
            dir: dir.normalize(),
        }
    }

    #[inline]
    pub fn at(&self, t: f64) -> DVec3 {
        self.origin + self.dir * t
    }
}

/// Camera basis resolved once per frame.
#[derive(Debug, Clone, Copy)]
pub struct ViewFrame {
    eye: DVec3,
    forward: DVec3,
    right: DVec3,
    up: DVec3,
    tan_half: f64,
    width: usize,
    height: usize,
}

impl ViewFrame {
    pub fn new(camera: &Camera, width: usize, height: usize) -> Result<Self, RenderError> {
        camera.validate()?;
        if width == 0 || height == 0 {
            return Err(RenderError::Settings("width and height must be positive".into()));
        }
        let eye = camera.eye();
        let forward = (camera.target - eye).normalize();
        let right = forward.cross(camera.up).normalize();
        let up = right.cross(forward);
        Ok(ViewFrame {
            eye,
            forward,
            right,
            up,
            tan_half: (camera.fov_y.to_radians() * 0.5).tan(),
            width,
            height,
        })
    }

    pub fn eye(&self) -> DVec3 {
        self.eye
    }

    pub fn forward(&self) -> DVec3 {
        self.forward
    }

    /// Ray through the centre of pixel `(px, py)`; `py = 0` is the top row.
    #[inline]
    pub fn ray(&self, px: usize, py: usize) -> Ray {
        let aspect = self.width as f64 / self.height as f64;
        let sx = (2.0 * (px as f64 + 0.5) / self.width as f64 - 1.0) * self.tan_half * aspect;
        let sy = (1.0 - 2.0 * (py as f64 + 0.5) / self.height as f64) * self.tan_half;
        Ray::new(self.eye, self.forward + self.right * sx + self.up * sy)
    }
}

pub fn generate_ray(
    camera: &Camera,
    px: usize,
    py: usize,
    width: usize,
    height: usize,
) -> Result<Ray, RenderError> {
    if px >= width || py >= height {
        return Err(RenderError::PixelOutOfRange {
            px,
            py,
            width,
            height,
        });
    }
    Ok(ViewFrame::new(camera, width, height)?.ray(px, py))
}
