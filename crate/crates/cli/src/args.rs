//! Command-line surface. Every value flag takes an explicit argument so a
//! parsed configuration can be written back out as flags (or as a flat
//! JSON config file) and parsed again to the same value.

use clap::{ArgAction, Args, Parser, Subcommand, ValueEnum};
use serde::{Serialize, Serializer};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use volcast_core::raycaster::STANDARD_RESOLUTIONS;
use volcast_core::volume::Endianness;
use volcast_core::{InterpolationMode, OperatorKind, RenderMode};

fn display<T: fmt::Display, S: Serializer>(v: &T, s: S) -> Result<S::Ok, S::Error> {
    s.collect_str(v)
}

fn display_opt<T: fmt::Display, S: Serializer>(v: &Option<T>, s: S) -> Result<S::Ok, S::Error> {
    match v {
        Some(v) => s.collect_str(v),
        None => s.serialize_none(),
    }
}

#[derive(Parser, Debug, Clone, PartialEq)]
#[command(name = "volcast", version, about = "CPU volume raycaster", args_override_self = true)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug, Clone, PartialEq)]
pub enum Command {
    /// Render one image to a PNG or PPM file.
    #[command(allow_negative_numbers = true)]
    Render(RenderArgs),
    /// Time a dataset × operator × resolution matrix and write CSV.
    #[command(allow_negative_numbers = true)]
    Bench(BenchArgs),
    /// Serve frames to the browser viewer over a websocket.
    #[command(allow_negative_numbers = true)]
    Serve(ServeArgs),
    /// Write a synthetic dataset as raw 16-bit slices.
    #[command(allow_negative_numbers = true)]
    Phantom(PhantomArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Render(_) => "render",
            Command::Bench(_) => "bench",
            Command::Serve(_) => "serve",
            Command::Phantom(_) => "phantom",
        }
    }

    pub fn config_file(&self) -> Option<&PathBuf> {
        match self {
            Command::Render(a) => a.config.as_ref(),
            Command::Bench(a) => a.config.as_ref(),
            Command::Serve(a) => a.config.as_ref(),
            Command::Phantom(a) => a.config.as_ref(),
        }
    }

    /// Flags that reproduce this command, config file excluded.
    pub fn to_args(&self) -> Vec<String> {
        let value = match self {
            Command::Render(a) => serde_json::to_value(a),
            Command::Bench(a) => serde_json::to_value(a),
            Command::Serve(a) => serde_json::to_value(a),
            Command::Phantom(a) => serde_json::to_value(a),
        }
        .expect("arguments serialize");
        let mut out = vec![self.name().to_owned()];
        if let serde_json::Value::Object(map) = value {
            for (key, v) in map {
                if let Some(text) = crate::config::flag_value(&v) {
                    out.push(format!("--{key}"));
                    out.push(text);
                }
            }
        }
        out
    }
}

#[derive(ValueEnum, Serialize, Debug, Clone, Copy, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
pub enum PhantomKind {
    Sphere,
    Shell,
    Ramp,
    Empty,
}

/// Three comma-separated numbers, `x,y,z`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triple(pub [f64; 3]);

impl FromStr for Triple {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected x,y,z but got {s:?}"));
        }
        let mut v = [0.0; 3];
        for (slot, p) in v.iter_mut().zip(parts) {
            let x: f64 = p.parse().map_err(|_| format!("{p:?} is not a number"))?;
            if !x.is_finite() {
                return Err(format!("{p:?} is not finite"));
            }
            *slot = x;
        }
        Ok(Triple(v))
    }
}

impl fmt::Display for Triple {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.0[0], self.0[1], self.0[2])
    }
}

/// Grid size `WxHxD`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Dims(pub [usize; 3]);

impl FromStr for Dims {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split('x').collect();
        if parts.len() != 3 {
            return Err(format!("expected WxHxD but got {s:?}"));
        }
        let mut d = [0; 3];
        for (slot, p) in d.iter_mut().zip(parts) {
            *slot = p.parse().map_err(|_| format!("{p:?} is not a positive integer"))?;
            if *slot == 0 {
                return Err("dimensions must be positive".into());
            }
        }
        Ok(Dims(d))
    }
}

impl fmt::Display for Dims {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}x{}x{}", self.0[0], self.0[1], self.0[2])
    }
}

/// Comma-separated `WxH` list.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Resolutions(pub Vec<(usize, usize)>);

impl Default for Resolutions {
    fn default() -> Self {
        Resolutions(STANDARD_RESOLUTIONS.to_vec())
    }
}

impl FromStr for Resolutions {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let list = s
            .split(',')
            .map(|item| {
                let (w, h) = item
                    .trim()
                    .split_once('x')
                    .ok_or_else(|| format!("expected WxH but got {item:?}"))?;
                let w: usize = w.parse().map_err(|_| format!("bad width in {item:?}"))?;
                let h: usize = h.parse().map_err(|_| format!("bad height in {item:?}"))?;
                if w == 0 || h == 0 {
                    return Err(format!("empty resolution {item:?}"));
                }
                Ok((w, h))
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(Resolutions(list))
    }
}

impl fmt::Display for Resolutions {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let items: Vec<String> = self.0.iter().map(|(w, h)| format!("{w}x{h}")).collect();
        f.write_str(&items.join(","))
    }
}

/// Comma-separated gradient operator names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Operators(pub Vec<OperatorKind>);

impl FromStr for Operators {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.split(',')
            .map(|name| name.trim().parse())
            .collect::<Result<Vec<_>, _>>()
            .map(Operators)
    }
}

impl fmt::Display for Operators {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let names: Vec<&str> = self.0.iter().map(|o| o.name()).collect();
        f.write_str(&names.join(","))
    }
}

/// Synthetic dataset parameters.
#[derive(Args, Serialize, Debug, Clone, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub struct PhantomSpec {
    /// Synthetic dataset kind.
    #[arg(long, value_enum, default_value_t = PhantomKind::Sphere)]
    pub phantom: PhantomKind,
    /// Edge length of the cubic phantom grid in voxels.
    #[arg(long, default_value_t = 128)]
    pub size: usize,
    /// Sphere radius, or outer shell radius, in voxels [default: 0.375 × size]
    #[arg(long)]
    pub radius: Option<f64>,
    /// Shell wall thickness in voxels.
    #[arg(long, default_value_t = 4.0)]
    pub thickness: f64,
    /// Stored value inside the sphere or shell.
    #[arg(long, default_value_t = 2000.0)]
    pub value: f64,
    /// Value gained per voxel along x for the ramp phantom.
    #[arg(long, default_value_t = 16.0)]
    pub ramp_scale: f64,
}

/// Raw slice stack on disk. Without `--slices` the phantom is used.
#[derive(Args, Serialize, Debug, Clone, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub struct SliceArgs {
    /// Slice file pattern; the first run of '#' becomes the zero-padded
    /// slice index, e.g. data/ct_###.raw [default: none, use the phantom]
    #[arg(long, requires = "dims")]
    pub slices: Option<String>,
    /// Slice width, height and count as WxHxD [default: none]
    #[arg(long, requires = "slices")]
    #[serde(serialize_with = "display_opt")]
    pub dims: Option<Dims>,
    /// Byte order of the 16-bit samples.
    #[arg(long, default_value_t = Endianness::Little)]
    #[serde(serialize_with = "display")]
    pub endianness: Endianness,
    /// Index of the first slice file.
    #[arg(long, default_value_t = 0)]
    pub first_index: usize,
    /// Bytes skipped at the start of every slice file.
    #[arg(long, default_value_t = 0)]
    pub header_bytes: u64,
    /// Voxel spacing in world units as x,y,z.
    #[arg(long, default_value_t = Triple([1.0; 3]), allow_hyphen_values = true)]
    #[serde(serialize_with = "display")]
    pub spacing: Triple,
}

#[derive(Args, Serialize, Debug, Clone, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub struct DatasetArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub phantom: PhantomSpec,
    #[command(flatten)]
    #[serde(flatten)]
    pub slices: SliceArgs,
}

/// Sampling, shading and acceleration knobs.
#[derive(Args, Serialize, Debug, Clone, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub struct QualityArgs {
    /// surface (first hit only) or composited.
    #[arg(long, default_value_t = RenderMode::SurfaceOnly)]
    #[serde(serialize_with = "display")]
    pub mode: RenderMode,
    /// nearest, linear or trilinear.
    #[arg(long, default_value_t = InterpolationMode::Trilinear)]
    #[serde(serialize_with = "display")]
    pub interpolation: InterpolationMode,
    /// Forward marching step in world units [default: smallest voxel edge]
    #[arg(long)]
    pub coarse_step: Option<f64>,
    /// Backward search step in world units [default: coarse step / 8]
    #[arg(long)]
    pub fine_step: Option<f64>,
    /// Bisection steps after the fine search.
    #[arg(long, default_value_t = 6)]
    pub refine_iters: u32,
    /// Skip empty space with the min/max octree.
    #[arg(long, default_value_t = true, action = ArgAction::Set)]
    pub octree: bool,
    /// Lengthen steps through low-detail octree leaves.
    #[arg(long, default_value_t = false, action = ArgAction::Set)]
    pub adaptive: bool,
    /// Step multiplier used by adaptive sampling.
    #[arg(long, default_value_t = 4.0)]
    pub coarse_factor: f64,
    /// Octree leaves stop splitting at this edge length in voxels.
    #[arg(long, default_value_t = 4)]
    pub min_block: usize,
    /// Maximum octree depth.
    #[arg(long, default_value_t = 8)]
    pub max_depth: usize,
}

/// Camera, light, clip box and threshold window.
#[derive(Args, Serialize, Debug, Clone, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub struct SceneArgs {
    /// Lower edge of the threshold window (stored value).
    #[arg(long, default_value_t = 1000.0)]
    pub t_low: f64,
    /// Upper edge of the threshold window (stored value).
    #[arg(long, default_value_t = 4095.0)]
    pub t_high: f64,
    /// Orbit angle around the vertical axis in degrees.
    #[arg(long, default_value_t = 0.0)]
    pub azimuth: f64,
    /// Orbit angle above the horizontal plane in degrees.
    #[arg(long, default_value_t = 0.0)]
    pub elevation: f64,
    #[arg(long, default_value_t = 1.0)]
    pub zoom: f64,
    /// Point light position x,y,z in world units [default: at the eye]
    #[arg(long, allow_hyphen_values = true)]
    #[serde(serialize_with = "display_opt")]
    pub light: Option<Triple>,
    /// Lower clip-box corner x,y,z in world units [default: volume origin]
    #[arg(long, allow_hyphen_values = true)]
    #[serde(serialize_with = "display_opt")]
    pub clip_lo: Option<Triple>,
    /// Upper clip-box corner x,y,z in world units [default: volume extent]
    #[arg(long, allow_hyphen_values = true)]
    #[serde(serialize_with = "display_opt")]
    pub clip_hi: Option<Triple>,
}

/// Image size and gradient operator of a single view.
#[derive(Args, Serialize, Debug, Clone, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub struct ViewArgs {
    #[arg(long, default_value_t = 640)]
    pub width: usize,
    #[arg(long, default_value_t = 480)]
    pub height: usize,
    /// central, sobel3d or zucker-hummel.
    #[arg(long, default_value_t = OperatorKind::CentralDifference)]
    #[serde(serialize_with = "display")]
    pub operator: OperatorKind,
}

#[derive(Args, Serialize, Debug, Clone, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub struct RenderArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dataset: DatasetArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub view: ViewArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub scene: SceneArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub quality: QualityArgs,
    /// Output image; .png writes PNG, anything else binary PPM.
    #[arg(long, default_value = "volcast.png")]
    pub out: PathBuf,
    /// Flat JSON object whose keys are flag names; flags given on the
    /// command line take precedence [default: none]
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug, Clone, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub struct BenchArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dataset: DatasetArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub quality: QualityArgs,
    /// Gradient operators to time, comma-separated.
    #[arg(long, default_value = "central,zucker-hummel")]
    #[serde(serialize_with = "display")]
    pub operators: Operators,
    /// Resolutions to time as WxH, comma-separated.
    #[arg(long, default_value_t = Resolutions::default())]
    #[serde(serialize_with = "display")]
    pub resolutions: Resolutions,
    /// Untimed frames per cell.
    #[arg(long, default_value_t = 3)]
    pub warmup: usize,
    /// Timed frames per cell.
    #[arg(long, default_value_t = 20)]
    pub frames: usize,
    /// CSV report path.
    #[arg(long, default_value = "bench.csv")]
    pub out: PathBuf,
    /// Flat JSON object whose keys are flag names [default: none]
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug, Clone, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub struct ServeArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub dataset: DatasetArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub view: ViewArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub scene: SceneArgs,
    #[command(flatten)]
    #[serde(flatten)]
    pub quality: QualityArgs,
    /// Address and port to listen on.
    #[arg(long, default_value = "127.0.0.1:8080")]
    pub bind: String,
    /// Directory with the viewer's static files [default: none]
    #[arg(long)]
    pub static_dir: Option<PathBuf>,
    /// Image encoding inside frame messages: png or rgba.
    #[arg(long, default_value = "png")]
    pub encoding: String,
    /// Flat JSON object whose keys are flag names [default: none]
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}

#[derive(Args, Serialize, Debug, Clone, PartialEq)]
#[serde(rename_all = "kebab-case")]
pub struct PhantomArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub phantom: PhantomSpec,
    /// Output slice pattern; the first run of '#' becomes the slice index.
    #[arg(long, default_value = "phantom/slice_###.raw")]
    pub out: String,
    /// Byte order of the written samples.
    #[arg(long, default_value_t = Endianness::Little)]
    #[serde(serialize_with = "display")]
    pub endianness: Endianness,
    /// Index given to the first slice file.
    #[arg(long, default_value_t = 0)]
    pub first_index: usize,
    /// Flat JSON object whose keys are flag names [default: none]
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
}
