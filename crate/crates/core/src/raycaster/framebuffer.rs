use std::io::{self, Write};
use std::path::Path;
use std::time::Duration;

/// Work counters gathered while rendering a frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RenderStats {
    /// Volume samples taken, including gradient and refinement samples.
    pub samples: u64,
    /// Pixels whose ray found material.
    pub hits: u64,
}

impl std::ops::Add for RenderStats {
    type Output = RenderStats;

    fn add(self, o: RenderStats) -> RenderStats {
        RenderStats {
            samples: self.samples + o.samples,
            hits: self.hits + o.hits,
        }
    }
}

impl std::iter::Sum for RenderStats {
    fn sum<I: Iterator<Item = RenderStats>>(iter: I) -> Self {
        iter.fold(RenderStats::default(), |a, b| a + b)
    }
}

/// RGBA8 image, row-major from the top-left corner.
#[derive(Debug, Clone)]
pub struct FrameBuffer {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<[u8; 4]>,
    pub elapsed: Duration,
    pub stats: RenderStats,
}

impl FrameBuffer {
    pub fn new(width: usize, height: usize) -> Self {
        FrameBuffer {
            width,
            height,
            pixels: vec![[0; 4]; width * height],
            elapsed: Duration::ZERO,
            stats: RenderStats::default(),
        }
    }

    #[inline]
    pub fn pixel(&self, x: usize, y: usize) -> [u8; 4] {
        self.pixels[y * self.width + x]
    }

    /// Pixel-content equality, ignoring timing and counters.
    pub fn same_image(&self, other: &FrameBuffer) -> bool {
        self.width == other.width && self.height == other.height && self.pixels == other.pixels
    }

    pub fn rgba_bytes(&self) -> Vec<u8> {
        self.pixels.iter().flatten().copied().collect()
    }

    /// Binary PPM (P6); alpha is dropped.
    pub fn write_ppm<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "P6\n{} {}\n255\n", self.width, self.height)?;
        let rgb: Vec<u8> = self.pixels.iter().flat_map(|p| [p[0], p[1], p[2]]).collect();
        out.write_all(&rgb)
    }

    pub fn write_png<W: Write>(&self, out: W) -> io::Result<()> {
        let mut enc = png::Encoder::new(out, self.width as u32, self.height as u32);
        enc.set_color(png::ColorType::Rgba);
        enc.set_depth(png::BitDepth::Eight);
        let mut w = enc.write_header().map_err(io::Error::other)?;
        w.write_image_data(&self.rgba_bytes()).map_err(io::Error::other)?;
        w.finish().map_err(io::Error::other)
    }

    pub fn encode_png(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        self.write_png(&mut buf).expect("in-memory PNG encoding");
        buf
    }

    /// Writes PNG for a `.png` extension, PPM otherwise.
    pub fn save(&self, path: &Path) -> io::Result<()> {
        let file = io::BufWriter::new(std::fs::File::create(path)?);
        let is_png = path
            .extension()
            .is_some_and(|e| e.eq_ignore_ascii_case("png"));
        if is_png {
            self.write_png(file)
        } else {
            self.write_ppm(file)
        }
    }
}
