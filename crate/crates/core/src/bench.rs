//! Frame-rate measurement over a dataset × operator × resolution matrix.

use crate::gradient::OperatorKind;
use crate::raycaster::{RenderError, RenderSettings, Renderer, Scene};
use crate::volume::Volume;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::io;
use std::path::Path;
use std::sync::Arc;
use std::time::Instant;

#[derive(Debug, thiserror::Error)]
pub enum BenchError {
    #[error("measured frame count must be at least 1")]
    NoFrames,
    #[error("benchmark matrix has an empty {0} list")]
    EmptyMatrix(&'static str),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error("fit needs at least 3 rows with distinct pixel counts, got {0}")]
    InsufficientRows(usize),
}

#[derive(Debug, Clone)]
pub struct BenchDataset {
    pub name: String,
    pub volume: Arc<Volume>,
}

#[derive(Debug, Clone)]
pub struct BenchMatrix {
    pub datasets: Vec<BenchDataset>,
    pub operators: Vec<OperatorKind>,
    pub resolutions: Vec<(usize, usize)>,
    /// Frames rendered and discarded before timing starts.
    pub warmup: usize,
    pub frames: usize,
    /// Template for every cell; width, height and operator are overridden.
    pub settings: RenderSettings,
}

impl BenchMatrix {
    pub fn new(datasets: Vec<BenchDataset>) -> Self {
        BenchMatrix {
            datasets,
            operators: vec![OperatorKind::CentralDifference],
            resolutions: vec![(640, 480)],
            warmup: 3,
            frames: 20,
            settings: RenderSettings::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub dataset: String,
    pub operator: String,
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub total_seconds: f64,
    pub fps: f64,
}

impl BenchRow {
    pub fn pixels(&self) -> usize {
        self.width * self.height
    }

    pub fn mean_frame_seconds(&self) -> f64 {
        self.total_seconds / self.frames as f64
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct BenchReport {
    pub rows: Vec<BenchRow>,
    pub metadata: BTreeMap<String, String>,
}

fn environment_metadata() -> BTreeMap<String, String> {
    let mut m = BTreeMap::new();
    m.insert("arch".into(), std::env::consts::ARCH.into());
    m.insert("os".into(), std::env::consts::OS.into());
    m.insert("threads".into(), crate::worker_threads().to_string());
    m.insert("parallel".into(), crate::PARALLEL.to_string());
    m.insert("version".into(), env!("CARGO_PKG_VERSION").into());
    m.insert(
        "timing".into(),
        "pure render time per frame; excludes image encoding and display".into(),
    );
    m
}

/// Renders every matrix cell: `warmup` untimed frames, then `frames` timed
/// frames with the camera advancing 1° of azimuth per frame.
pub fn run_benchmark(matrix: &BenchMatrix) -> Result<BenchReport, BenchError> {
    if matrix.frames == 0 {
        return Err(BenchError::NoFrames);
    }
    for (list, empty) in [
        ("dataset", matrix.datasets.is_empty()),
        ("operator", matrix.operators.is_empty()),
        ("resolution", matrix.resolutions.is_empty()),
    ] {
        if empty {
            return Err(BenchError::EmptyMatrix(list));
        }
    }
    let mut rows = Vec::new();
    for ds in &matrix.datasets {
        let renderer = Renderer::new(ds.volume.clone());
        let base_scene = Scene::for_volume(&ds.volume);
        for &op in &matrix.operators {
            for &(width, height) in &matrix.resolutions {
                let settings = RenderSettings {
                    width,
                    height,
                    operator: op,
                    ..matrix.settings.clone()
                };
                let mut scene = base_scene.clone();
                let start_azimuth = scene.camera.azimuth;
                let frame = |i: usize, scene: &mut Scene| {
                    scene.camera.azimuth = start_azimuth + i as f64;
                    renderer.render(scene, &settings).map(|_| ())
                };
                for i in 0..matrix.warmup {
                    frame(i, &mut scene)?;
                }
                let t0 = Instant::now();
                for i in 0..matrix.frames {
                    frame(matrix.warmup + i, &mut scene)?;
                }
                let total_seconds = t0.elapsed().as_secs_f64();
                rows.push(BenchRow {
                    dataset: ds.name.clone(),
                    operator: op.name().to_string(),
                    width,
                    height,
                    frames: matrix.frames,
                    total_seconds,
                    fps: matrix.frames as f64 / total_seconds,
                });
            }
        }
    }
    Ok(BenchReport {
        rows,
        metadata: environment_metadata(),
    })
}

impl BenchReport {
    pub fn write_csv<W: io::Write>(&self, out: W) -> Result<(), BenchError> {
        let mut w = csv::Writer::from_writer(out);
        for row in &self.rows {
            w.serialize(row)?;
        }
        if self.rows.is_empty() {
            w.write_record(["dataset", "operator", "width", "height", "frames", "total_seconds", "fps"])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: io::Read>(input: R) -> Result<Self, BenchError> {
        let rows = csv::Reader::from_reader(input)
            .deserialize()
            .collect::<Result<Vec<BenchRow>, _>>()?;
        Ok(BenchReport {
            rows,
            metadata: BTreeMap::new(),
        })
    }

    pub fn save_csv(&self, path: &Path) -> Result<(), BenchError> {
        self.write_csv(io::BufWriter::new(std::fs::File::create(path)?))
    }

    /// Rows for one dataset and operator, in matrix order.
    pub fn select(&self, dataset: &str, operator: &str) -> Vec<BenchRow> {
        self.rows
            .iter()
            .filter(|r| r.dataset == dataset && r.operator == operator)
            .cloned()
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinearFit {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
}

/// Least-squares fit of mean frame time (seconds) against pixel count.
/// A fit with zero variance in frame time is exact, so `r2` is 1.
pub fn fit_time_vs_pixels(rows: &[BenchRow]) -> Result<LinearFit, BenchError> {
    let mut distinct: Vec<usize> = rows.iter().map(BenchRow::pixels).collect();
    distinct.sort_unstable();
    distinct.dedup();
    if distinct.len() < 3 {
        return Err(BenchError::InsufficientRows(distinct.len()));
    }
    let n = rows.len() as f64;
    let xs: Vec<f64> = rows.iter().map(|r| r.pixels() as f64).collect();
    let ys: Vec<f64> = rows.iter().map(BenchRow::mean_frame_seconds).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let ss_res: f64 = xs
        .iter()
        .zip(&ys)
        .map(|(x, y)| (y - (slope * x + intercept)).powi(2))
        .sum();
    let ss_tot: f64 = ys.iter().map(|y| (y - my).powi(2)).sum();
    let r2 = if ss_tot == 0.0 { 1.0 } else { 1.0 - ss_res / ss_tot };
    Ok(LinearFit {
        slope,
        intercept,
        r2,
    })
}
