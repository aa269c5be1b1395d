//! The `volcast` command line: argument model, config-file expansion and
//! the four subcommands.
//!
//! Exit codes: 0 success, 1 usage or invalid configuration, 2 I/O failure
//! (the message names the path), 3 internal error.

pub mod args;
pub mod config;

use args::{BenchArgs, Cli, Command, DatasetArgs, PhantomArgs, PhantomKind, PhantomSpec, QualityArgs, RenderArgs, SceneArgs, ServeArgs, ViewArgs};
use clap::Parser;
use glam::DVec3;
use std::ffi::OsString;
use std::io::Write;
use std::path::PathBuf;
use std::sync::Arc;
use volcast_core::bench::{fit_time_vs_pixels, run_benchmark, BenchDataset, BenchError, BenchMatrix};
use volcast_core::raycaster::AccelSettings;
use volcast_core::volume::{load_raw_slices, write_raw_slices, SliceFormat};
use volcast_core::{
    make_phantom, render_frame, ClipBox, Light, Phantom, RenderError, RenderSettings, Scene,
    ThresholdWindow, Volume, VolumeError,
};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// Help, version, or a malformed command line as reported by clap.
    #[error("{0}")]
    Clap(#[from] clap::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {message}")]
    Io { path: PathBuf, message: String },
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Clap(e) if !e.use_stderr() => 0,
            CliError::Clap(_) | CliError::Usage(_) => 1,
            CliError::Io { .. } => 2,
            CliError::Internal(_) => 3,
        }
    }

    fn io(path: impl Into<PathBuf>, err: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.into(),
            message: err.to_string(),
        }
    }
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

impl From<VolumeError> for CliError {
    fn from(e: VolumeError) -> Self {
        match e {
            VolumeError::Io { path, source } => CliError::io(path, source),
            VolumeError::SliceSize {
                path,
                expected,
                actual,
            } => CliError::io(path, format!("{actual} bytes, expected {expected}")),
            VolumeError::Not12Bit { path, value } => {
                CliError::io(path, format!("value {value} above the 12-bit limit"))
            }
            other => usage(other),
        }
    }
}

/// Parses `argv` (program name first), expanding a `--config` file if one
/// is named.
pub fn parse_args<I, T>(argv: I) -> Result<Cli, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = Cli::try_parse_from(&argv)?;
    let Some(path) = cli.command.config_file().cloned() else {
        return Ok(cli);
    };
    let sub = cli.command.name();
    let text = std::fs::read_to_string(&path).map_err(|e| CliError::io(&path, e))?;
    let from_file = config::expand(&text, sub, &path)?;
    let at = argv
        .iter()
        .position(|a| a == sub)
        .expect("a parsed subcommand appears in argv");
    let mut merged: Vec<OsString> = argv[..=at].to_vec();
    merged.extend(from_file.into_iter().map(OsString::from));
    merged.extend(argv[at + 1..].iter().cloned());
    Ok(Cli::try_parse_from(merged)?)
}

/// Parses and runs; returns the process exit code.
pub fn main_with<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(argv).and_then(|cli| run(&cli)) {
        Ok(()) => 0,
        Err(CliError::Clap(e)) => {
            let _ = e.print();
            CliError::Clap(e).exit_code()
        }
        Err(e) => {
            eprintln!("volcast: {e}");
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Render(a) => render(a),
        Command::Bench(a) => bench(a),
        Command::Serve(a) => serve(a),
        Command::Phantom(a) => phantom(a),
    }
}

pub fn phantom_from_spec(spec: &PhantomSpec) -> Phantom {
    let radius = spec.radius.unwrap_or(0.375 * spec.size as f64);
    match spec.phantom {
        PhantomKind::Sphere => Phantom::SolidSphere {
            radius,
            value: spec.value,
        },
        PhantomKind::Shell => Phantom::SphericalShell {
            inner: (radius - spec.thickness).max(0.0),
            outer: radius,
            value: spec.value,
        },
        PhantomKind::Ramp => Phantom::AxisRamp {
            scale: spec.ramp_scale,
        },
        PhantomKind::Empty => Phantom::Empty,
    }
}

fn build_phantom(spec: &PhantomSpec) -> Result<Volume, CliError> {
    if spec.size == 0 {
        return Err(usage("--size must be positive"));
    }
    Ok(make_phantom(phantom_from_spec(spec), [spec.size; 3])?)
}

/// Loads the slice stack if one is given, otherwise builds the phantom.
/// Returns a short dataset name alongside the volume.
pub fn load_dataset(d: &DatasetArgs) -> Result<(String, Volume), CliError> {
    let s = &d.slices;
    let (name, volume) = match (&s.slices, s.dims) {
        (Some(pattern), Some(dims)) => {
            let format = SliceFormat {
                endianness: s.endianness,
                first_index: s.first_index,
                header_bytes: s.header_bytes,
                ..SliceFormat::new(dims.0[0], dims.0[1], dims.0[2])
            };
            ("slices".to_owned(), load_raw_slices(pattern, &format)?)
        }
        (Some(_), None) => return Err(usage("--slices needs --dims")),
        _ => (
            phantom_from_spec(&d.phantom).kind_name().to_owned(),
            build_phantom(&d.phantom)?,
        ),
    };
    if s.spacing.0 == [1.0; 3] {
        return Ok((name, volume));
    }
    let dims = volume.dims();
    let spaced = Volume::with_spacing(dims, volume.data().to_vec(), s.spacing.0)?;
    Ok((name, spaced))
}

fn vec3(t: args::Triple) -> DVec3 {
    DVec3::from_array(t.0)
}

pub fn build_scene(volume: &Volume, a: &SceneArgs) -> Result<Scene, CliError> {
    let mut scene = Scene::for_volume(volume);
    scene.camera.azimuth = a.azimuth;
    scene.camera.elevation = a.elevation;
    scene.camera.zoom = a.zoom;
    scene.light = Light::at(a.light.map_or_else(|| scene.camera.eye(), vec3));
    scene.window = ThresholdWindow::new(a.t_low, a.t_high).map_err(usage)?;
    let full = ClipBox::full(volume);
    scene.clip = ClipBox::new(
        a.clip_lo.map_or(full.lo, vec3),
        a.clip_hi.map_or(full.hi, vec3),
    )
    .map_err(usage)?;
    scene.validate(volume).map_err(usage)?;
    Ok(scene)
}

pub fn build_settings(
    volume: &Volume,
    view: Option<&ViewArgs>,
    q: &QualityArgs,
) -> Result<RenderSettings, CliError> {
    let base = RenderSettings::for_volume(volume);
    let coarse_step = q.coarse_step.unwrap_or(base.coarse_step);
    let mut s = RenderSettings {
        mode: q.mode,
        interpolation: q.interpolation,
        coarse_step,
        fine_step: q.fine_step.unwrap_or(coarse_step / 8.0),
        refine_iters: q.refine_iters,
        accel: AccelSettings {
            use_octree: q.octree,
            use_adaptive: q.adaptive,
            min_block: q.min_block,
            max_depth: q.max_depth,
            coarse_factor: q.coarse_factor,
        },
        ..base
    };
    if let Some(v) = view {
        s.width = v.width;
        s.height = v.height;
        s.operator = v.operator;
    }
    s.validate().map_err(usage)?;
    Ok(s)
}

fn internal(e: RenderError) -> CliError {
    CliError::Internal(e.to_string())
}

fn render(a: &RenderArgs) -> Result<(), CliError> {
    let (_, volume) = load_dataset(&a.dataset)?;
    let scene = build_scene(&volume, &a.scene)?;
    let settings = build_settings(&volume, Some(&a.view), &a.quality)?;
    let frame = render_frame(&volume, &scene, &settings).map_err(internal)?;
    frame.save(&a.out).map_err(|e| CliError::io(&a.out, e))?;
    println!(
        "rendered {}x{} with {} in {:.3} ms -> {}",
        frame.width,
        frame.height,
        settings.operator,
        frame.elapsed.as_secs_f64() * 1e3,
        a.out.display()
    );
    Ok(())
}

fn bench(a: &BenchArgs) -> Result<(), CliError> {
    let (name, volume) = load_dataset(&a.dataset)?;
    let settings = build_settings(&volume, None, &a.quality)?;
    let mut matrix = BenchMatrix::new(vec![BenchDataset {
        name: name.clone(),
        volume: Arc::new(volume),
    }]);
    matrix.operators = a.operators.0.clone();
    matrix.resolutions = a.resolutions.0.clone();
    matrix.warmup = a.warmup;
    matrix.frames = a.frames;
    matrix.settings = settings;
    let report = run_benchmark(&matrix).map_err(|e| match e {
        BenchError::Render(e) => internal(e),
        other => usage(other),
    })?;
    report.save_csv(&a.out).map_err(|e| CliError::io(&a.out, e))?;

    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{:<14} {:>11} {:>9} {:>10}", "operator", "resolution", "fps", "ms/frame");
    for r in &report.rows {
        let _ = writeln!(
            out,
            "{:<14} {:>11} {:>9.2} {:>10.3}",
            r.operator,
            format!("{}x{}", r.width, r.height),
            r.fps,
            r.mean_frame_seconds() * 1e3
        );
    }
    for op in &matrix.operators {
        if let Ok(fit) = fit_time_vs_pixels(&report.select(&name, op.name())) {
            let _ = writeln!(
                out,
                "{op}: {:.3} ns/pixel + {:.3} ms, r² = {:.4}",
                fit.slope * 1e9,
                fit.intercept * 1e3,
                fit.r2
            );
        }
    }
    let _ = writeln!(out, "wrote {} rows to {}", report.rows.len(), a.out.display());
    Ok(())
}

fn serve(a: &ServeArgs) -> Result<(), CliError> {
    use volcast_service::{DatasetCatalog, Service, ServiceConfig, SessionState};

    let encoding = a.encoding.parse().map_err(usage)?;
    let (_, volume) = load_dataset(&a.dataset)?;
    let scene = build_scene(&volume, &a.scene)?;
    let settings = build_settings(&volume, Some(&a.view), &a.quality)?;

    // The configured dataset plus stock phantoms of the same grid size for
    // the viewer's dataset selector.
    let mut catalog = DatasetCatalog::new();
    catalog.insert("default", volume);
    let stock = PhantomSpec {
        radius: None,
        ..a.dataset.phantom.clone()
    };
    for kind in [PhantomKind::Sphere, PhantomKind::Shell, PhantomKind::Empty] {
        let spec = PhantomSpec {
            phantom: kind,
            ..stock.clone()
        };
        catalog.insert(phantom_from_spec(&spec).kind_name(), build_phantom(&spec)?);
    }
    let initial = SessionState {
        dataset: "default".into(),
        scene,
        settings,
        frame_counter: 0,
        last_render_ms: None,
    };
    if let Some(dir) = &a.static_dir {
        if !dir.is_dir() {
            return Err(CliError::io(dir, "not a directory"));
        }
    }
    let config = ServiceConfig {
        static_dir: a.static_dir.clone(),
        encoding,
    };

    let _ = tracing_subscriber::fmt().with_writer(std::io::stderr).try_init();
    let runtime = tokio::runtime::Runtime::new().map_err(|e| CliError::Internal(e.to_string()))?;
    runtime.block_on(async {
        let listener = tokio::net::TcpListener::bind(&a.bind)
            .await
            .map_err(|e| CliError::io(&a.bind, e))?;
        let addr = listener.local_addr().map_err(|e| CliError::io(&a.bind, e))?;
        let service = Service::start(catalog, initial, config).map_err(usage)?;
        println!("serving on http://{addr} (websocket at /ws)");
        let shutdown = async {
            let _ = tokio::signal::ctrl_c().await;
        };
        volcast_service::serve(listener, service, shutdown)
            .await
            .map_err(|e| CliError::Internal(e.to_string()))
    })
}

fn phantom(a: &PhantomArgs) -> Result<(), CliError> {
    let volume = build_phantom(&a.phantom)?;
    let paths = write_raw_slices(&volume, &a.out, a.endianness, a.first_index)?;
    let [nx, ny, _] = volume.dims();
    println!(
        "wrote {} slices of {nx}x{ny} ({}-endian) matching {}",
        paths.len(),
        a.endianness,
        a.out
    );
    Ok(())
}
